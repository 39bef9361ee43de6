//! Voxel payloads for the distance, skeleton and TSDF layers.

use nalgebra::Point3;

use crate::voxel::{GridIndex, Layer};

/// One voxel of the Euclidean signed distance field.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EsdfVoxel {
    /// Signed distance in meters, negative inside obstacles.
    pub distance: f32,
    /// Grid offset from this voxel to its closest surface voxel.
    pub parent: [i8; 3],
    pub observed: bool,
    /// Seeded directly from the surface band.
    pub fixed: bool,
}

impl EsdfVoxel {
    pub fn parent_offset(&self) -> GridIndex {
        GridIndex::new(
            self.parent[0] as i64,
            self.parent[1] as i64,
            self.parent[2] as i64,
        )
    }

    pub fn is_free(&self) -> bool {
        self.observed && self.distance > 0.0
    }
}

/// Medial-axis and diagram state of one voxel.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SkeletonVoxel {
    pub on_medial_axis: bool,
    pub is_edge: bool,
    pub is_vertex: bool,
    pub vertex_id: Option<u32>,
    /// ESDF distance copied from the source field.
    pub distance: f32,
}

impl SkeletonVoxel {
    /// Part of the skeleton diagram (edges include vertices).
    pub fn on_diagram(&self) -> bool {
        self.is_edge
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TsdfVoxel {
    pub distance: f32,
    pub weight: f32,
}

pub type EsdfLayer = Layer<EsdfVoxel>;
pub type SkeletonLayer = Layer<SkeletonVoxel>;
pub type TsdfLayer = Layer<TsdfVoxel>;

/// Number of voxels currently flagged as skeleton diagram.
pub fn diagram_voxel_count(skeleton: &SkeletonLayer) -> usize {
    skeleton.iter_unordered().filter(|(_, v)| v.is_edge).count()
}

/// Sorted indices of diagram voxels.
pub fn diagram_indices(skeleton: &SkeletonLayer) -> Vec<GridIndex> {
    skeleton
        .iter()
        .filter(|(_, v)| v.is_edge)
        .map(|(i, _)| i)
        .collect()
}

/// Minimum ESDF distance along a straight segment sampled at half-voxel
/// spacing; unobserved or unallocated voxels count as `-inf`.
pub fn segment_clearance(esdf: &EsdfLayer, a: &Point3<f64>, b: &Point3<f64>) -> f64 {
    let s = esdf.voxel_size();
    let len = (b - a).norm();
    let n = (len / (0.5 * s)).ceil().max(1.0) as usize;
    let mut min = f64::INFINITY;
    for k in 0..=n {
        let p = a + (b - a) * (k as f64 / n as f64);
        let d = match esdf.get_at(&p) {
            Some(v) if v.observed => v.distance as f64,
            _ => f64::NEG_INFINITY,
        };
        min = min.min(d);
    }
    min
}
