//! Fixture scenes, scan pose generation and multi-scan fusion.

use std::f64::consts::TAU;

use nalgebra::Point3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::camera::{add_noise, render_clean, DepthCamera, DepthImage, Pose};
use super::maze::MazeSpec;
use super::tsdf::{allocate_tsdf, integrate_tsdf, TsdfConfig};
use super::{Aabb, Primitive, PrimitiveWorld, WorldError};
use crate::layers::TsdfLayer;

/// Closed 10 m × 8 m × 3 m room with a handful of obstacles.
pub fn fixture_room() -> PrimitiveWorld {
    let (lx, ly, h, t) = (10.0, 8.0, 3.0, 0.2);
    let mut prims = vec![
        Primitive::Ground { height: 0.0 },
        Primitive::Ceiling { height: h },
        Primitive::Box { center: [-0.5 * t, 0.5 * ly, 0.5 * h], half_extents: [0.5 * t, 0.5 * ly + t, 0.5 * h] },
        Primitive::Box { center: [lx + 0.5 * t, 0.5 * ly, 0.5 * h], half_extents: [0.5 * t, 0.5 * ly + t, 0.5 * h] },
        Primitive::Box { center: [0.5 * lx, -0.5 * t, 0.5 * h], half_extents: [0.5 * lx + t, 0.5 * t, 0.5 * h] },
        Primitive::Box { center: [0.5 * lx, ly + 0.5 * t, 0.5 * h], half_extents: [0.5 * lx + t, 0.5 * t, 0.5 * h] },
    ];
    prims.extend([
        // Partition wall with a doorway-sized gap at its end.
        Primitive::Box { center: [4.0, 2.75, 1.5], half_extents: [0.1, 2.75, 1.5] },
        Primitive::Box { center: [7.0, 5.5, 0.6], half_extents: [1.0, 0.6, 0.6] },
        Primitive::Box { center: [2.0, 6.0, 1.0], half_extents: [0.5, 0.5, 1.0] },
        Primitive::Cylinder { center: [7.5, 2.0, 1.5], radius: 0.4, height: 3.0 },
        Primitive::Sphere { center: [2.0, 2.5, 1.2], radius: 0.6 },
    ]);
    PrimitiveWorld::new(prims, Aabb::new([-t, -t, -0.3], [lx + t, ly + t, h + 0.3]))
}

/// Uniform positions inside the world bounds with at least `min_clearance`
/// to every surface, uniform yaw, zero pitch and roll.
pub fn sample_free_poses(world: &PrimitiveWorld, count: usize, min_clearance: f64, seed: u64) -> Result<Vec<Pose>, WorldError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = world.bounds;
    let mut poses = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while poses.len() < count {
        attempts += 1;
        if attempts > 1000 * count.max(1) {
            return Err(WorldError::InvalidConfig(format!(
                "could not place {count} poses with clearance {min_clearance}"
            )));
        }
        let p: [f64; 3] = std::array::from_fn(|i| rng.random_range(b.min[i]..b.max[i]));
        if world.exact_distance(&Point3::from(p)) < min_clearance {
            continue;
        }
        poses.push(Pose::new(p, rng.random_range(0.0..TAU)));
    }
    Ok(poses)
}

/// Scripted coverage of a maze. Per cell and heading: a level view from
/// behind the center, and a downward view from the center for the floor.
pub fn maze_coverage_poses(spec: &MazeSpec) -> Vec<Pose> {
    const SETBACK: f64 = 0.4;
    const DOWN_PITCH: f64 = 0.5;
    let n = spec.cells_per_side();
    let mut poses = Vec::with_capacity(8 * n * n);
    for j in 0..n {
        for i in 0..n {
            let c = spec.cell_center(i, j);
            for k in 0..4 {
                let yaw = k as f64 * TAU / 4.0;
                let back = [c[0] - SETBACK * yaw.cos(), c[1] - SETBACK * yaw.sin(), c[2]];
                poses.push(Pose::new(back, yaw));
                poses.push(Pose { pitch: DOWN_PITCH, ..Pose::new(c, yaw) });
            }
        }
    }
    poses
}

/// Noise-free renders for a pose list; noise is added per fusion so one set
/// of renders serves every noise level.
pub fn render_scans(world: &PrimitiveWorld, poses: &[Pose], cam: &DepthCamera) -> Vec<DepthImage> {
    poses.iter().map(|p| render_clean(world, p, cam)).collect()
}

/// Integrates clean renders into a fresh TSDF over `bounds`, perturbing scan
/// `i` with noise seeded by `seed + i`.
pub fn fuse_scans(
    bounds: &Aabb,
    poses: &[Pose],
    clean: &[DepthImage],
    cam: &DepthCamera,
    voxel_size: f64,
    noise_sigma: f64,
    seed: u64,
    config: &TsdfConfig,
) -> Result<TsdfLayer, WorldError> {
    cam.validate()?;
    if !(noise_sigma >= 0.0) {
        return Err(WorldError::InvalidConfig("noise sigma must be >= 0".into()));
    }
    let mut layer = allocate_tsdf(bounds, voxel_size)?;
    for (i, (pose, img)) in poses.iter().zip(clean).enumerate() {
        if noise_sigma > 0.0 {
            let mut noisy = img.clone();
            add_noise(&mut noisy, noise_sigma, seed.wrapping_add(i as u64));
            integrate_tsdf(&mut layer, &noisy, pose, cam, config);
        } else {
            integrate_tsdf(&mut layer, img, pose, cam, config);
        }
    }
    Ok(layer)
}
