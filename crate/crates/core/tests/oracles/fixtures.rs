//! Small seeded worlds shared by the integration tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use voxskel::layers::EsdfLayer;
use voxskel::world::esdf::{build_esdf_from_world, EsdfConfig};
use voxskel::world::{Aabb, Primitive, PrimitiveWorld};

use super::{clearance, Cell};

/// Random axis-aligned boxes inside a cube of `side` meters.
pub fn random_box_world(seed: u64, side: f64, boxes: usize) -> PrimitiveWorld {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let prims = (0..boxes)
        .map(|_| {
            let half: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.05..0.2 * side));
            let center: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.0..side));
            Primitive::Box { center, half_extents: half }
        })
        .collect();
    PrimitiveWorld::new(prims, Aabb::new([0.0; 3], [side; 3]))
}

pub fn ground_truth_esdf(world: &PrimitiveWorld, voxel_size: f64) -> EsdfLayer {
    build_esdf_from_world(world, voxel_size, &EsdfConfig::default()).unwrap()
}

/// Observed voxels with at least `radius` clearance, in scan order.
pub fn free_cells(esdf: &EsdfLayer, radius: f64) -> Vec<Cell> {
    esdf.iter()
        .map(|(i, _)| [i.x, i.y, i.z])
        .filter(|c| clearance(esdf, *c) >= radius)
        .collect()
}
