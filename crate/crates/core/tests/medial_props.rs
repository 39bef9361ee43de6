mod oracles;

use std::collections::HashSet;

use nalgebra::Point3;
use oracles::fixtures::{ground_truth_esdf, random_box_world};
use oracles::{to_cell, Cell};
use voxskel::layers::{EsdfLayer, SkeletonLayer};
use voxskel::medial::{classify_edges, extract_gvd, MedialAxisConfig};
use voxskel::world::{Aabb, Primitive, PrimitiveWorld};

fn medial_set(s: &SkeletonLayer) -> HashSet<Cell> {
    s.iter().filter(|(_, v)| v.on_medial_axis).map(|(i, _)| to_cell(i)).collect()
}

fn edge_set(s: &SkeletonLayer) -> HashSet<Cell> {
    s.iter().filter(|(_, v)| v.is_edge).map(|(i, _)| to_cell(i)).collect()
}

#[test]
fn corridor_axis_is_the_mid_plane() {
    // Walls fill x < 0.5 and x > 2.5.
    let world = PrimitiveWorld::new(
        vec![
            Primitive::Box { center: [0.0, 1.5, 1.5], half_extents: [0.5, 3.0, 3.0] },
            Primitive::Box { center: [3.0, 1.5, 1.5], half_extents: [0.5, 3.0, 3.0] },
        ],
        Aabb::new([0.0; 3], [3.0; 3]),
    );
    let s = 0.1;
    let esdf = ground_truth_esdf(&world, s);
    let sk = extract_gvd(&esdf, &MedialAxisConfig::default()).unwrap();
    let medial = medial_set(&sk);
    assert!(medial.len() >= 30 * 30, "only {} medial voxels", medial.len());
    for c in &medial {
        let x = (c[0] as f64 + 0.5) * s;
        assert!((x - 1.5).abs() <= s, "medial voxel off the mid plane: {c:?}");
    }
}

#[test]
fn two_spheres_axis_is_their_bisector() {
    let (a, b) = (Point3::new(1.0, 1.5, 1.5), Point3::new(2.6, 1.7, 1.4));
    let world = PrimitiveWorld::new(
        vec![
            Primitive::Sphere { center: a.into(), radius: 0.3 },
            Primitive::Sphere { center: b.into(), radius: 0.3 },
        ],
        Aabb::new([0.0; 3], [3.6, 3.2, 3.0]),
    );
    let s = 0.1;
    let esdf = ground_truth_esdf(&world, s);
    let sk = extract_gvd(&esdf, &MedialAxisConfig::default()).unwrap();
    let medial = medial_set(&sk);
    assert!(!medial.is_empty());
    let mut worst: f64 = 0.0;
    for c in &medial {
        let p = Point3::new((c[0] as f64 + 0.5) * s, (c[1] as f64 + 0.5) * s, (c[2] as f64 + 0.5) * s);
        worst = worst.max(((p - a).norm() - (p - b).norm()).abs());
    }
    assert!(worst <= 2.0 * s, "medial voxel {worst} m off the bisector");
}

#[test]
fn medial_voxels_respect_the_clearance_floor() {
    let esdf = ground_truth_esdf(&random_box_world(4, 3.0, 8), 0.1);
    for min_gvd in [0.0, 0.2, 0.4] {
        let cfg = MedialAxisConfig { min_gvd_distance: min_gvd, ..MedialAxisConfig::default() };
        let sk = extract_gvd(&esdf, &cfg).unwrap();
        for (i, v) in sk.iter().filter(|(_, v)| v.on_medial_axis) {
            let e = esdf.get(i).unwrap();
            assert!(e.observed && e.distance > 0.0 && e.distance as f64 >= min_gvd);
            assert_eq!(v.distance, e.distance);
        }
    }
}

#[test]
fn wider_angle_gives_a_subset() {
    let esdf = ground_truth_esdf(&random_box_world(9, 3.0, 8), 0.1);
    let mut prev: Option<HashSet<Cell>> = None;
    for deg in [20.0f64, 40.0, 53.13, 70.0, 90.0, 120.0] {
        let cfg = MedialAxisConfig { theta: deg.to_radians(), ..MedialAxisConfig::default() };
        let cur = medial_set(&extract_gvd(&esdf, &cfg).unwrap());
        if let Some(p) = &prev {
            assert!(cur.is_subset(p), "theta {deg}");
        }
        prev = Some(cur);
    }
}

#[test]
fn edge_classification_is_monotone_in_the_neighbor_threshold() {
    let esdf = ground_truth_esdf(&random_box_world(2, 3.0, 8), 0.1);
    let mut sk = extract_gvd(&esdf, &MedialAxisConfig::default()).unwrap();
    let medial = medial_set(&sk);
    let mut prev = medial.clone();
    for k in 0..=26 {
        classify_edges(&mut sk, k);
        let cur = edge_set(&sk);
        assert!(cur.is_subset(&prev), "threshold {k}");
        if k == 0 {
            assert_eq!(cur, medial);
        }
        prev = cur;
    }
    assert!(prev.is_empty() || prev.len() < medial.len());
}

/// Copy of `esdf` built by allocating blocks in reverse order.
fn reallocated(esdf: &EsdfLayer) -> EsdfLayer {
    let mut out = EsdfLayer::new(esdf.voxel_size()).unwrap();
    for b in esdf.sorted_blocks().into_iter().rev() {
        out.allocate_block(b);
    }
    for (i, v) in esdf.iter() {
        *out.get_or_allocate_mut(i) = *v;
    }
    out
}

#[test]
fn extraction_ignores_block_order() {
    let esdf = ground_truth_esdf(&random_box_world(5, 3.0, 8), 0.1);
    let cfg = MedialAxisConfig::default();
    let mut a = extract_gvd(&esdf, &cfg).unwrap();
    let mut b = extract_gvd(&reallocated(&esdf), &cfg).unwrap();
    assert_eq!(medial_set(&a), medial_set(&b));
    classify_edges(&mut a, cfg.min_edge_neighbors);
    classify_edges(&mut b, cfg.min_edge_neighbors);
    assert_eq!(edge_set(&a), edge_set(&b));
}

fn scaled(world: &PrimitiveWorld, k: f64) -> PrimitiveWorld {
    let m = |p: [f64; 3]| p.map(|c| c * k);
    let prims = world
        .primitives
        .iter()
        .map(|p| match *p {
            Primitive::Box { center, half_extents } => Primitive::Box { center: m(center), half_extents: m(half_extents) },
            Primitive::Sphere { center, radius } => Primitive::Sphere { center: m(center), radius: radius * k },
            other => panic!("unexpected primitive {other:?}"),
        })
        .collect();
    PrimitiveWorld::new(prims, Aabb::new(m(world.bounds.min), m(world.bounds.max)))
}

#[test]
fn doubling_world_and_voxels_keeps_the_axis() {
    // Power-of-two scaling is exact in floating point.
    let world = random_box_world(7, 3.0, 8);
    let cfg = MedialAxisConfig::default();
    let a = medial_set(&extract_gvd(&ground_truth_esdf(&world, 0.1), &cfg).unwrap());
    let big_cfg = MedialAxisConfig { min_gvd_distance: 2.0 * cfg.min_gvd_distance, ..cfg };
    let b = medial_set(&extract_gvd(&ground_truth_esdf(&scaled(&world, 2.0), 0.2), &big_cfg).unwrap());
    assert!(!a.is_empty());
    assert_eq!(a, b);
}
