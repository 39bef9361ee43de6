//! End-to-end construction: simulated scans → TSDF → ESDF → skeleton
//! diagram → sparse graph, with per-stage timing.

use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{self, GraphConfig, GraphError, SparseGraph};
use crate::layers::{EsdfLayer, SkeletonLayer};
use crate::medial::{classify_edges, extract_gvd, MedialAxisConfig, MedialError};
use crate::thinning::{thin, ThinningConfig};
use crate::world::camera::DepthImage;
use crate::world::scenes::{fuse_scans, render_scans, sample_free_poses};
use crate::world::{build_esdf, build_esdf_from_world, DepthCamera, EsdfConfig, Pose, PrimitiveWorld, TsdfConfig, WorldError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("stage {stage}: {source}")]
    World { stage: &'static str, source: WorldError },
    #[error("stage {stage}: {source}")]
    Medial { stage: &'static str, source: MedialError },
    #[error("stage {stage}: {source}")]
    Graph { stage: &'static str, source: GraphError },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MapConfig {
    pub voxel_size: f64,
    pub noise_sigma: f64,
    /// Use the analytic distance field instead of simulated scans.
    pub ground_truth: bool,
    pub pose_count: usize,
    pub pose_clearance: f64,
    pub pose_seed: u64,
    pub noise_seed: u64,
    pub camera: DepthCamera,
    pub tsdf: TsdfConfig,
    pub esdf: EsdfConfig,
}

impl Default for MapConfig {
    fn default() -> Self {
        Self {
            voxel_size: 0.1,
            noise_sigma: 0.0,
            ground_truth: false,
            pose_count: 200,
            pose_clearance: 0.5,
            pose_seed: 1,
            noise_seed: 2,
            camera: DepthCamera::default(),
            tsdf: TsdfConfig::default(),
            esdf: EsdfConfig::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SkeletonConfig {
    pub medial: MedialAxisConfig,
    pub thinning: ThinningConfig,
    pub graph: GraphConfig,
}

/// Wall-clock seconds per named stage, in execution order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StageTimings {
    pub stages: Vec<(String, f64)>,
}

impl StageTimings {
    pub fn time<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.stages.push((name.to_string(), t.elapsed().as_secs_f64()));
        out
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.stages.iter().find(|(n, _)| n == name).map(|(_, t)| *t)
    }

    pub fn total(&self) -> f64 {
        self.stages.iter().map(|(_, t)| t).sum()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["stage", "seconds"])?;
        for (name, t) in &self.stages {
            w.write_record([name.as_str(), &format!("{t:.6}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Clean renders of a fixed pose set; noise is applied at fusion time.
pub struct ScanSet {
    pub poses: Vec<Pose>,
    pub images: Vec<DepthImage>,
    pub camera: DepthCamera,
}

impl ScanSet {
    pub fn random(world: &PrimitiveWorld, config: &MapConfig) -> Result<Self, WorldError> {
        config.camera.validate()?;
        let poses = sample_free_poses(world, config.pose_count, config.pose_clearance, config.pose_seed)?;
        Ok(Self::from_poses(world, poses, config.camera))
    }

    pub fn from_poses(world: &PrimitiveWorld, poses: Vec<Pose>, camera: DepthCamera) -> Self {
        let images = render_scans(world, &poses, &camera);
        Self { poses, images, camera }
    }
}

/// ESDF of `world` from the given scans (or the analytic field when
/// `config.ground_truth` is set).
pub fn build_map(world: &PrimitiveWorld, scans: Option<&ScanSet>, config: &MapConfig, timings: &mut StageTimings) -> Result<EsdfLayer, PipelineError> {
    let err = |stage| move |source| PipelineError::World { stage, source };
    if config.ground_truth {
        return timings.time("esdf", || build_esdf_from_world(world, config.voxel_size, &config.esdf)).map_err(err("esdf"));
    }
    let owned;
    let scans = match scans {
        Some(s) => s,
        None => {
            owned = timings.time("render", || ScanSet::random(world, config)).map_err(err("render"))?;
            &owned
        }
    };
    let tsdf = timings
        .time("tsdf", || {
            fuse_scans(
                &world.bounds,
                &scans.poses,
                &scans.images,
                &scans.camera,
                config.voxel_size,
                config.noise_sigma,
                config.noise_seed,
                &config.tsdf,
            )
        })
        .map_err(err("tsdf"))?;
    timings.time("esdf", || build_esdf(&tsdf, &config.esdf)).map_err(err("esdf"))
}

/// Skeleton diagram and sparse graph from an ESDF.
pub fn build_skeleton(esdf: &EsdfLayer, config: &SkeletonConfig, timings: &mut StageTimings) -> Result<(SkeletonLayer, SparseGraph), PipelineError> {
    config.graph.validate().map_err(|source| PipelineError::Graph { stage: "vertices", source })?;
    let mut skeleton = timings
        .time("gvd", || extract_gvd(esdf, &config.medial))
        .map_err(|source| PipelineError::Medial { stage: "gvd", source })?;
    timings.time("edges_classify", || classify_edges(&mut skeleton, config.medial.min_edge_neighbors));
    timings.time("thinning", || thin(&mut skeleton, &config.thinning));
    let g = &config.graph;
    let mut sparse = timings.time("vertices", || {
        let candidates = graph::extract_vertices(&mut skeleton, g);
        let kept = graph::prune_vertices(&candidates, g.r_prune, skeleton.voxel_size());
        graph::init_graph(&mut skeleton, &kept)
    });
    timings.time("edges", || graph::follow_edges(&skeleton, &mut sparse));
    timings.time("splitting", || graph::split_edges(&mut sparse, &mut skeleton, g));
    timings.time("repair", || {
        graph::repair_subgraphs(&mut sparse, &mut skeleton, g);
        graph::annotate_clearance(&mut sparse, esdf, g);
    });
    Ok((skeleton, sparse))
}
