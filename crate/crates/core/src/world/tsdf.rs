//! Projective TSDF integration of depth images.

use nalgebra::Point3;
use serde::{Deserialize, Serialize};

use super::camera::{DepthCamera, DepthImage, Pose};
use super::{Aabb, WorldError};
use crate::layers::TsdfLayer;
use crate::voxel::{GridIndex, Layer, BLOCK_SIDE};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TsdfConfig {
    /// Truncation distance in voxels.
    pub truncation_voxels: f64,
}

impl Default for TsdfConfig {
    fn default() -> Self {
        Self { truncation_voxels: 2.0 }
    }
}

/// Empty TSDF with every block overlapping `bounds` allocated.
pub fn allocate_tsdf(bounds: &Aabb, voxel_size: f64) -> Result<TsdfLayer, WorldError> {
    let mut layer = Layer::new(voxel_size)?;
    let min = GridIndex::from_position(&Point3::from(bounds.min), voxel_size);
    let max = GridIndex::from_position(&Point3::from(bounds.max), voxel_size);
    layer.allocate_range(min, max);
    Ok(layer)
}

/// Merges one depth image into the layer.
///
/// Every allocated voxel that projects onto a valid pixel and lies no more
/// than one truncation distance behind the measured surface receives the
/// clamped projective distance `depth - z` with weight 1. Voxels in front of
/// the band are carved as free space at `+truncation`.
pub fn integrate_tsdf(
    layer: &mut TsdfLayer,
    image: &DepthImage,
    pose: &Pose,
    cam: &DepthCamera,
    config: &TsdfConfig,
) {
    let s = layer.voxel_size();
    let trunc = (config.truncation_voxels * s) as f32;
    let cam_from_world = pose.world_from_camera().inverse();
    let reach = cam.max_range + config.truncation_voxels * s + s;
    let lo: [f64; 3] = std::array::from_fn(|i| pose.position[i] - reach);
    let hi: [f64; 3] = std::array::from_fn(|i| pose.position[i] + reach);
    let block_len = BLOCK_SIDE as f64 * s;

    let blocks: Vec<GridIndex> = layer.sorted_blocks();
    for b in blocks {
        let bmin = [b.x as f64 * block_len, b.y as f64 * block_len, b.z as f64 * block_len];
        if (0..3).any(|i| bmin[i] > hi[i] || bmin[i] + block_len < lo[i]) {
            continue;
        }
        let voxels = layer.block_voxels_mut(b).expect("listed block");
        let base = GridIndex::new(b.x * BLOCK_SIDE, b.y * BLOCK_SIDE, b.z * BLOCK_SIDE);
        let mut i = 0;
        for z in 0..BLOCK_SIDE {
            for y in 0..BLOCK_SIDE {
                for x in 0..BLOCK_SIDE {
                    let idx = base + GridIndex::new(x, y, z);
                    let pc = cam_from_world * idx.center(s);
                    let slot = i;
                    i += 1;
                    let Some((u, v)) = cam.project(&pc) else { continue };
                    let Some(depth) = image.depth(u, v) else { continue };
                    if depth <= 0.0 {
                        continue;
                    }
                    let sdf = depth - pc.z as f32;
                    if sdf < -trunc {
                        continue;
                    }
                    let d = sdf.min(trunc);
                    let vox = &mut voxels[slot];
                    vox.distance = (vox.distance * vox.weight + d) / (vox.weight + 1.0);
                    vox.weight += 1.0;
                }
            }
        }
    }
}
