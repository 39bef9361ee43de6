//! Generalized Voronoi diagram extraction from the ESDF parent field and
//! classification of the thick edge set.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::layers::{EsdfLayer, SkeletonLayer, SkeletonVoxel};
use crate::voxel::{GridIndex, OFFSETS_26, OFFSETS_6};

#[derive(Debug, Error, PartialEq)]
pub enum MedialError {
    #[error("unparented voxel: parent offset is zero")]
    UnparentedVoxel,
    #[error("invalid medial axis configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MedialAxisConfig {
    /// Minimum separation angle between basis points, radians.
    pub theta: f64,
    /// Voxels closer than this to an obstacle are never medial, meters.
    pub min_gvd_distance: f64,
    /// Medial voxels with at least this many medial 26-neighbors are edges.
    pub min_edge_neighbors: u32,
}

impl Default for MedialAxisConfig {
    fn default() -> Self {
        Self {
            theta: 0.6f64.acos(),
            min_gvd_distance: 0.4,
            min_edge_neighbors: 18,
        }
    }
}

impl MedialAxisConfig {
    pub fn validate(&self) -> Result<(), MedialError> {
        if !(self.theta > 0.0 && self.theta < std::f64::consts::PI) {
            return Err(MedialError::InvalidConfig(format!("theta {} outside (0, pi)", self.theta)));
        }
        if !(self.min_gvd_distance >= 0.0) {
            return Err(MedialError::InvalidConfig("min_gvd_distance must be >= 0".into()));
        }
        if self.min_edge_neighbors > 26 {
            return Err(MedialError::InvalidConfig("min_edge_neighbors must be <= 26".into()));
        }
        Ok(())
    }
}

/// Separation test between a voxel and one neighbor.
///
/// `neighbor_offset` is the grid offset from the voxel to the neighbor, so
/// `neighbor_parent + neighbor_offset` is the neighbor's basis point seen
/// from the voxel. The voxel is medial when that direction and the voxel's
/// own parent direction differ by more than `theta`. Exactly opposing
/// directions cancel to zero and count as medial.
pub fn is_medial(
    voxel_parent: GridIndex,
    neighbor_parent: GridIndex,
    neighbor_offset: GridIndex,
    theta: f64,
) -> Result<bool, MedialError> {
    if voxel_parent.is_zero() {
        return Err(MedialError::UnparentedVoxel);
    }
    let bisector = (neighbor_parent + neighbor_offset).to_vector();
    let n = bisector.norm();
    if n == 0.0 {
        return Ok(true);
    }
    let vp = voxel_parent.to_vector();
    Ok(bisector.dot(&vp) / (n * vp.norm()) < theta.cos())
}

/// Marks every free voxel at distance ≥ `min_gvd_distance` that passes
/// [`is_medial`] against at least one observed 6-neighbor.
pub fn extract_gvd(esdf: &EsdfLayer, config: &MedialAxisConfig) -> Result<SkeletonLayer, MedialError> {
    config.validate()?;
    let min_d = config.min_gvd_distance as f32;
    let mut out = esdf.map(|_, v| SkeletonVoxel { distance: v.distance, ..SkeletonVoxel::default() });
    let mut marked = Vec::new();
    for (idx, v) in esdf.iter_unordered() {
        if !v.is_free() || v.distance < min_d || v.parent == [0; 3] {
            continue;
        }
        let vp = v.parent_offset();
        for o in OFFSETS_6 {
            let Some(n) = esdf.get(idx + o) else { continue };
            if !n.observed {
                continue;
            }
            if is_medial(vp, n.parent_offset(), o, config.theta)? {
                marked.push(idx);
                break;
            }
        }
    }
    for idx in marked {
        out.get_mut(idx).expect("same block layout").on_medial_axis = true;
    }
    Ok(out)
}

/// Sets `is_edge` on medial voxels with at least `min_edge_neighbors` medial
/// 26-neighbors. Existing vertex flags are cleared.
pub fn classify_edges(skeleton: &mut SkeletonLayer, min_edge_neighbors: u32) {
    let mut edges = Vec::new();
    for (idx, v) in skeleton.iter_unordered() {
        if !v.on_medial_axis {
            continue;
        }
        let count = OFFSETS_26
            .iter()
            .filter(|o| skeleton.get(idx + **o).is_some_and(|n| n.on_medial_axis))
            .count() as u32;
        if count >= min_edge_neighbors {
            edges.push(idx);
        }
    }
    skeleton.for_each_mut(|_, v| {
        v.is_edge = false;
        v.is_vertex = false;
        v.vertex_id = None;
    });
    for idx in edges {
        skeleton.get_mut(idx).expect("listed voxel").is_edge = true;
    }
}

/// Diagnostic: number of distinct basis points among a voxel and its
/// 6-neighbors, where two basis directions closer than `theta` count once.
pub fn basis_point_count(esdf: &EsdfLayer, index: GridIndex, theta: f64) -> usize {
    let Some(v) = esdf.get(index) else { return 0 };
    let mut dirs = vec![v.parent_offset().to_vector()];
    for o in OFFSETS_6 {
        if let Some(n) = esdf.get(index + o).filter(|n| n.observed) {
            dirs.push((n.parent_offset() + o).to_vector());
        }
    }
    let cos = theta.cos();
    let mut reps: Vec<nalgebra::Vector3<f64>> = Vec::new();
    for d in dirs {
        let n = d.norm();
        if n == 0.0 {
            continue;
        }
        let u = d / n;
        if reps.iter().all(|r| r.dot(&u) < cos) {
            reps.push(u);
        }
    }
    reps.len()
}
