use std::sync::OnceLock;

use voxskel::layers::{EsdfLayer, TsdfLayer};
use voxskel::pipeline::{build_map, MapConfig, ScanSet, StageTimings};
use voxskel::voxel::{GridIndex, OFFSETS_6};
use voxskel::world::build_esdf;
use voxskel::world::scenes::{fixture_room, fuse_scans};

const S: f64 = 0.1;

fn scans() -> &'static ScanSet {
    static SCANS: OnceLock<ScanSet> = OnceLock::new();
    SCANS.get_or_init(|| ScanSet::random(&fixture_room(), &MapConfig::default()).unwrap())
}

fn tsdf() -> &'static TsdfLayer {
    static TSDF: OnceLock<TsdfLayer> = OnceLock::new();
    TSDF.get_or_init(|| {
        let c = MapConfig::default();
        let s = scans();
        fuse_scans(&fixture_room().bounds, &s.poses, &s.images, &s.camera, S, 0.0, 0, &c.tsdf).unwrap()
    })
}

fn esdf() -> &'static EsdfLayer {
    static ESDF: OnceLock<EsdfLayer> = OnceLock::new();
    ESDF.get_or_init(|| build_esdf(tsdf(), &MapConfig::default().esdf).unwrap())
}

#[test]
fn fused_surface_lies_within_one_voxel_of_the_world() {
    let world = fixture_room();
    let t = tsdf();
    let mut crossings = 0;
    let mut worst: f64 = 0.0;
    for (idx, v) in t.iter() {
        if v.weight < 1.0 || v.distance <= 0.0 {
            continue;
        }
        for o in OFFSETS_6 {
            if !t.get(idx + o).is_some_and(|n| n.weight >= 1.0 && n.distance < 0.0) {
                continue;
            }
            // The surface passes between the two centers, one voxel apart.
            crossings += 1;
            let d = world.exact_distance(&idx.center(S)).abs().min(world.exact_distance(&(idx + o).center(S)).abs());
            worst = worst.max(d);
        }
    }
    assert!(crossings > 10_000, "only {crossings} zero crossings");
    assert!(worst <= S, "worst zero crossing is {worst} m from the surface");
}

#[test]
fn esdf_parents_point_at_seeds_with_consistent_distances() {
    let e = esdf();
    let s = e.voxel_size() as f32;
    let mut propagated = 0;
    for (idx, v) in e.iter() {
        if !v.observed || v.fixed || v.parent == [0; 3] {
            continue;
        }
        propagated += 1;
        let seed = e.get(idx + v.parent_offset()).unwrap();
        assert!(seed.fixed, "{idx:?} parent is not a seed");
        // Outside the distance grows away from the seed, inside it shrinks.
        let step = v.parent_offset().norm() as f32 * s;
        let expected = if v.distance > 0.0 { seed.distance + step } else { seed.distance - step };
        assert!((v.distance - expected).abs() < 1e-4, "{idx:?}: {} vs {expected}", v.distance);
    }
    assert!(propagated > 100_000);
}

#[test]
fn scanned_esdf_tracks_the_exact_distance() {
    let world = fixture_room();
    let e = esdf();
    let mut errors: Vec<f64> = e
        .iter()
        .filter(|(_, v)| v.observed && v.distance > 0.0 && (v.fixed || v.parent != [0; 3]))
        .map(|(i, v)| (v.distance as f64 - world.exact_distance(&i.center(S))).abs())
        .collect();
    errors.sort_by(f64::total_cmp);
    let median = errors[errors.len() / 2];
    let p99 = errors[errors.len() * 99 / 100];
    assert!(median <= 0.5 * S, "median error {median}");
    assert!(p99 <= 2.0 * S, "99th percentile error {p99}");
}

#[test]
fn seeds_sit_next_to_a_sign_change() {
    let e = esdf();
    let t = tsdf();
    for (idx, v) in e.iter().filter(|(_, v)| v.fixed) {
        assert!(v.distance.abs() <= S as f32 + 1e-6);
        let tv = t.get(idx).unwrap();
        let flips = OFFSETS_6.iter().any(|o| t.get(idx + *o).is_some_and(|n| n.weight > 0.0 && n.distance * tv.distance <= 0.0));
        assert!(flips, "seed {idx:?} has no sign change");
    }
}

#[test]
fn map_building_is_deterministic() {
    let world = fixture_room();
    let cfg = MapConfig { voxel_size: 0.25, pose_count: 20, noise_sigma: 0.1, ..MapConfig::default() };
    let a = build_map(&world, None, &cfg, &mut StageTimings::default()).unwrap();
    let b = build_map(&world, None, &cfg, &mut StageTimings::default()).unwrap();
    assert!(a == b);
    let other = MapConfig { noise_seed: 99, ..cfg };
    let c = build_map(&world, None, &other, &mut StageTimings::default()).unwrap();
    assert!(a != c);
    assert!(a.get(GridIndex::new(20, 16, 6)).is_some());
}
