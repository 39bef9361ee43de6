//! ESDF construction: brushfire wavefront from a TSDF surface band, or direct
//! evaluation of a primitive world.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use nalgebra::Point3;
use serde::{Deserialize, Serialize};

use super::{PrimitiveWorld, WorldError};
use crate::layers::{EsdfLayer, EsdfVoxel, TsdfLayer, TsdfVoxel};
use crate::voxel::{GridIndex, Layer, OFFSETS_26, OFFSETS_6};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EsdfConfig {
    /// Distances are propagated up to this many meters.
    pub max_distance: f64,
    /// Minimum TSDF weight for a voxel to count as observed.
    pub min_weight: f32,
    /// Minimum TSDF weight for a voxel to seed the wavefront.
    pub min_surface_weight: f32,
}

impl Default for EsdfConfig {
    fn default() -> Self {
        Self {
            max_distance: 5.0,
            min_weight: 1e-3,
            min_surface_weight: 1.0,
        }
    }
}

impl EsdfConfig {
    fn validate(&self, voxel_size: f64) -> Result<(), WorldError> {
        if !(self.max_distance > 0.0) {
            return Err(WorldError::InvalidConfig("max_distance must be positive".into()));
        }
        // Parents are stored as i8 offsets.
        if self.max_distance / voxel_size > 120.0 {
            return Err(WorldError::InvalidConfig(format!(
                "max_distance {} spans more than 120 voxels of size {}",
                self.max_distance, voxel_size
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Key(f32);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

fn to_parent(o: GridIndex) -> Option<[i8; 3]> {
    Some([
        i8::try_from(o.x).ok()?,
        i8::try_from(o.y).ok()?,
        i8::try_from(o.z).ok()?,
    ])
}

/// Builds the ESDF from an integrated TSDF.
///
/// Well-observed voxels next to a sign change of the TSDF seed the wavefront
/// and are marked `fixed`. Their distance is the linearly interpolated
/// distance to the closest zero crossing along the grid axes, which does not
/// depend on the projective scaling of the TSDF values. Every other observed
/// voxel receives `d_seed ± |offset|·s` where `offset` points to the closest
/// seed found by a Dijkstra-ordered wavefront over 26-neighbors; positive on
/// the free side of the TSDF and negative inside.
pub fn build_esdf(tsdf: &TsdfLayer, config: &EsdfConfig) -> Result<EsdfLayer, WorldError> {
    let s = tsdf.voxel_size();
    config.validate(s)?;
    let max_d = config.max_distance as f32;

    let observed = |i: GridIndex| tsdf.get(i).filter(|t| t.weight >= config.min_weight);
    let seed_distance = |idx: GridIndex, t: &TsdfVoxel| -> Option<f32> {
        if t.weight < config.min_surface_weight {
            return None;
        }
        if t.distance == 0.0 {
            return Some(0.0);
        }
        OFFSETS_6
            .iter()
            .filter_map(|o| observed(idx + *o))
            .filter(|n| n.distance * t.distance < 0.0)
            .map(|n| t.distance.abs() / (t.distance.abs() + n.distance.abs()))
            .min_by(f32::total_cmp)
            .map(|frac| (frac * s as f32).copysign(t.distance))
    };
    let mut esdf: EsdfLayer = tsdf.map(|idx, t| {
        if t.weight < config.min_weight {
            return EsdfVoxel::default();
        }
        let seed = seed_distance(idx, t);
        EsdfVoxel {
            distance: seed.unwrap_or(max_d.copysign(t.distance)),
            parent: [0; 3],
            observed: true,
            fixed: seed.is_some(),
        }
    });

    let mut heap = BinaryHeap::new();
    for (idx, v) in esdf.iter() {
        if v.fixed {
            heap.push(Reverse((Key(v.distance.abs()), idx)));
        }
    }
    if heap.is_empty() {
        return Err(WorldError::NoSurface);
    }

    while let Some(Reverse((Key(key), idx))) = heap.pop() {
        let cur = *esdf.get(idx).expect("queued voxel exists");
        if cur.distance.abs() < key {
            continue;
        }
        let seed = idx + cur.parent_offset();
        let seed_d = esdf.get(seed).expect("seed exists").distance;
        for o in OFFSETS_26 {
            let n = idx + o;
            let Some(nv) = esdf.get(n) else { continue };
            if !nv.observed || nv.fixed {
                continue;
            }
            let offset = seed - n;
            let Some(parent) = to_parent(offset) else { continue };
            let step = (offset.norm() * s) as f32;
            let outside = nv.distance > 0.0;
            let cand = if outside { seed_d + step } else { seed_d - step };
            if cand.abs() > max_d || (outside && cand <= 0.0) || (!outside && cand >= 0.0) {
                continue;
            }
            if cand.abs() < nv.distance.abs() || (nv.parent == [0; 3] && cand.abs() <= nv.distance.abs()) {
                let nv = esdf.get_mut(n).expect("checked above");
                nv.distance = cand;
                nv.parent = parent;
                heap.push(Reverse((Key(cand.abs()), n)));
            }
        }
    }
    Ok(esdf)
}

/// Ground-truth ESDF sampled from the analytic world at every voxel center
/// inside the world bounds. Voxels of allocated blocks outside the bounds
/// stay unobserved.
pub fn build_esdf_from_world(
    world: &PrimitiveWorld,
    voxel_size: f64,
    config: &EsdfConfig,
) -> Result<EsdfLayer, WorldError> {
    config.validate(voxel_size)?;
    let mut layer: EsdfLayer = Layer::new(voxel_size)?;
    let min = GridIndex::from_position(&Point3::from(world.bounds.min), voxel_size);
    let max = GridIndex::from_position(&Point3::from(world.bounds.max), voxel_size);
    layer.allocate_range(min, max);
    let max_d = config.max_distance;
    layer.for_each_mut(|idx, v| {
        let c = idx.center(voxel_size);
        if !world.bounds.contains(&c) {
            return;
        }
        let (d, closest) = world.distance_and_closest(&c);
        let rel = (closest - c) / voxel_size;
        let offset = GridIndex::new(
            rel.x.round() as i64,
            rel.y.round() as i64,
            rel.z.round() as i64,
        );
        let parent = if d.abs() <= max_d { to_parent(offset) } else { None };
        *v = EsdfVoxel {
            distance: d.clamp(-max_d, max_d) as f32,
            parent: parent.unwrap_or([0; 3]),
            observed: true,
            fixed: offset.is_zero(),
        };
    });
    Ok(layer)
}
