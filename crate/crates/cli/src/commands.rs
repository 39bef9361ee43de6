//! Subcommand bodies, separated from argument parsing so tests can call them.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};
use voxskel::graph::SparseGraph;
use voxskel::io::{load_layer, save_layer, write_skeleton_ply};
use voxskel::layers::{EsdfLayer, SkeletonLayer};
use voxskel::pipeline::{build_map, build_skeleton, ScanSet, StageTimings};
use voxskel::planners::{plan, PlanRequest, PlanResult, Planner, SparseGraphPlanner};
use voxskel::world::maze::MazeLayout;
use voxskel::world::PrimitiveWorld;

use crate::config::{PipelineConfig, WorldSource};

pub const ESDF_FILE: &str = "esdf.skpl";
pub const SKELETON_FILE: &str = "skeleton.skpl";
pub const GRAPH_FILE: &str = "graph.json";
pub const TIMINGS_FILE: &str = "timings.csv";
pub const CONFIG_FILE: &str = "config.json";

/// Writes the world as JSON. Mazes are checked for full cell connectivity.
pub fn cmd_world(source: &WorldSource, out: &Path) -> Result<PrimitiveWorld> {
    if let WorldSource::Maze { spec } = source {
        spec.validate()?;
        let n = spec.cells_per_side();
        let reachable = MazeLayout::carve(n, spec.seed).reachable_cells();
        ensure!(reachable == n * n, "maze has {reachable} of {} cells reachable", n * n);
    }
    let world = source.load()?;
    for p in &world.primitives {
        if let Some(b) = p.aabb() {
            ensure!(world.bounds.contains_box(&b), "primitive {p:?} leaves the world bounds");
        }
    }
    world.save(out)?;
    Ok(world)
}

pub struct BuildOutput {
    pub esdf: EsdfLayer,
    pub skeleton: SkeletonLayer,
    pub graph: SparseGraph,
    pub timings: StageTimings,
}

/// Map (or a loaded ESDF dump) → skeleton → graph, writing every artifact
/// and a per-stage timing CSV into `config.output_dir`.
pub fn cmd_build(config: &PipelineConfig, esdf_dump: Option<&Path>) -> Result<BuildOutput> {
    config.validate()?;
    let mut timings = StageTimings::default();
    let esdf = match esdf_dump {
        Some(path) => timings
            .time("load", || load_layer(path))
            .with_context(|| format!("stage load: {}", path.display()))?,
        None => {
            let world = config.world.load()?;
            let scans = match config.world.coverage_poses() {
                Some(poses) if !config.map.ground_truth => {
                    Some(timings.time("render", || ScanSet::from_poses(&world, poses, config.map.camera)))
                }
                _ => None,
            };
            build_map(&world, scans.as_ref(), &config.map, &mut timings)?
        }
    };
    let (skeleton, graph) = build_skeleton(&esdf, &config.skeleton, &mut timings)?;

    let dir = &config.output_dir;
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    save_layer(&esdf, &dir.join(ESDF_FILE))?;
    save_layer(&skeleton, &dir.join(SKELETON_FILE))?;
    graph.save(&dir.join(GRAPH_FILE))?;
    std::fs::write(dir.join(CONFIG_FILE), config.to_json())?;
    timings.write_csv(File::create(dir.join(TIMINGS_FILE))?)?;
    Ok(BuildOutput { esdf, skeleton, graph, timings })
}

pub struct Artifacts {
    pub config: PipelineConfig,
    pub esdf: EsdfLayer,
    pub skeleton: SkeletonLayer,
    pub graph: SparseGraph,
}

/// Loads a build directory. Vertex ids, which the skeleton dump does not
/// store, are restored from the graph on voxels flagged as vertices.
pub fn load_artifacts(dir: &Path) -> Result<Artifacts> {
    let ctx = |f: &str| format!("loading {}", dir.join(f).display());
    let graph = SparseGraph::load(&dir.join(GRAPH_FILE)).with_context(|| ctx(GRAPH_FILE))?;
    let mut skeleton: SkeletonLayer = load_layer(&dir.join(SKELETON_FILE)).with_context(|| ctx(SKELETON_FILE))?;
    for v in &graph.vertices {
        if let Some(sv) = skeleton.get_mut(v.voxel).filter(|sv| sv.is_vertex) {
            sv.vertex_id = Some(v.id);
        }
    }
    Ok(Artifacts {
        config: PipelineConfig::load(&dir.join(CONFIG_FILE))?,
        esdf: load_layer(&dir.join(ESDF_FILE)).with_context(|| ctx(ESDF_FILE))?,
        skeleton,
        graph,
    })
}

/// Structural checks on loaded artifacts.
pub fn audit_artifacts(a: &Artifacts) -> Result<()> {
    let s = a.esdf.voxel_size();
    ensure!(a.skeleton.voxel_size() == s && a.graph.voxel_size == s, "voxel sizes disagree");
    let min_gvd = a.config.skeleton.medial.min_gvd_distance as f32;
    for (i, v) in a.skeleton.iter_unordered() {
        if v.on_diagram() {
            ensure!(v.on_medial_axis, "diagram voxel {i:?} is not medial");
            ensure!(v.distance >= min_gvd, "diagram voxel {i:?} has clearance {} < {min_gvd}", v.distance);
            let e = a.esdf.get(i).copied().unwrap_or_default();
            ensure!(e.observed && e.distance == v.distance, "diagram voxel {i:?} disagrees with the ESDF");
        }
    }
    let flagged = a.skeleton.iter_unordered().filter(|(_, v)| v.is_vertex).count();
    ensure!(flagged == a.graph.vertices.len(), "{flagged} vertex voxels for {} vertices", a.graph.vertices.len());
    let mut g = a.graph.clone();
    let labelled = g.subgraph_count();
    ensure!(g.label_subgraphs() == labelled, "stored subgraph labels are stale");
    for v in &g.vertices {
        ensure!(v.distance >= 0.0 && v.position.iter().all(|c| c.is_finite()), "vertex {} is malformed", v.id);
        let sv = a.skeleton.get(v.voxel).copied().unwrap_or_default();
        ensure!(sv.on_diagram() && sv.vertex_id == Some(v.id), "vertex {} is not marked in the skeleton", v.id);
    }
    for e in &g.edges {
        ensure!(
            g.vertices[e.start as usize].subgraph == g.vertices[e.end as usize].subgraph,
            "edge {} joins different subgraphs",
            e.id
        );
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct PlanArgs {
    pub dir: PathBuf,
    pub planner: String,
    pub start: [f64; 3],
    pub goal: [f64; 3],
    pub seed: u64,
    pub robot_radius: Option<f64>,
    pub time_limit: Option<f64>,
    pub out: Option<PathBuf>,
    pub ply: Option<PathBuf>,
}

pub fn cmd_plan(args: &PlanArgs) -> Result<PlanResult> {
    let planner: Planner = args.planner.parse()?;
    let a = load_artifacts(&args.dir)?;
    let req = PlanRequest {
        start: args.start,
        goal: args.goal,
        robot_radius: args.robot_radius.unwrap_or(a.config.robot_radius),
        time_limit: args.time_limit.unwrap_or(a.config.time_limit),
        rng_seed: args.seed,
    };
    let sparse = SparseGraphPlanner::new(&a.graph);
    let res = plan(planner, &a.esdf, Some(&a.skeleton), Some(&sparse), &req, &a.config.rrt)?;
    if let Some(out) = &args.out {
        std::fs::write(out, serde_json::to_string_pretty(&res)?)?;
    }
    if let Some(ply) = &args.ply {
        write_path_ply(&res.waypoints, BufWriter::new(File::create(ply)?))?;
    }
    Ok(res)
}

/// ASCII PLY polyline.
pub fn write_path_ply<W: Write>(waypoints: &[[f64; 3]], mut out: W) -> std::io::Result<()> {
    writeln!(out, "ply\nformat ascii 1.0")?;
    writeln!(out, "element vertex {}", waypoints.len())?;
    writeln!(out, "property float x\nproperty float y\nproperty float z")?;
    writeln!(out, "element edge {}", waypoints.len().saturating_sub(1))?;
    writeln!(out, "property int vertex1\nproperty int vertex2\nend_header")?;
    for p in waypoints {
        writeln!(out, "{} {} {}", p[0], p[1], p[2])?;
    }
    for i in 1..waypoints.len() {
        writeln!(out, "{} {}", i - 1, i)?;
    }
    out.flush()
}

/// Observed ESDF voxels with their distance.
pub fn write_esdf_ply<W: Write>(esdf: &EsdfLayer, mut out: W) -> std::io::Result<()> {
    let s = esdf.voxel_size();
    let pts: Vec<_> = esdf.iter().filter(|(_, v)| v.observed).map(|(i, v)| (i.center(s), v.distance)).collect();
    writeln!(out, "ply\nformat ascii 1.0")?;
    writeln!(out, "element vertex {}", pts.len())?;
    writeln!(out, "property float x\nproperty float y\nproperty float z\nproperty float distance\nend_header")?;
    for (p, d) in pts {
        writeln!(out, "{} {} {} {}", p.x, p.y, p.z, d)?;
    }
    out.flush()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExportKind {
    Esdf,
    Medial,
    Diagram,
    Graph,
}

impl std::str::FromStr for ExportKind {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "esdf" => ExportKind::Esdf,
            "medial" => ExportKind::Medial,
            "diagram" => ExportKind::Diagram,
            "graph" => ExportKind::Graph,
            _ => bail!("unknown export '{s}' (esdf, medial, diagram, graph)"),
        })
    }
}

pub fn cmd_export(dir: &Path, kind: ExportKind, out: &Path) -> Result<()> {
    let w = BufWriter::new(File::create(out).with_context(|| format!("creating {}", out.display()))?);
    match kind {
        ExportKind::Esdf => write_esdf_ply(&load_layer(&dir.join(ESDF_FILE))?, w)?,
        ExportKind::Medial | ExportKind::Diagram => {
            let sk: SkeletonLayer = load_layer(&dir.join(SKELETON_FILE))?;
            write_skeleton_ply(&sk, kind == ExportKind::Medial, w)?
        }
        ExportKind::Graph => SparseGraph::load(&dir.join(GRAPH_FILE))?.write_ply(w)?,
    }
    Ok(())
}
