//! Graph-size stability sweep over voxel size and depth noise, and the maze
//! planner comparison.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use anyhow::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use voxskel::graph::SparseGraph;
use voxskel::layers::{diagram_voxel_count, EsdfLayer, SkeletonLayer};
use voxskel::pipeline::{build_map, build_skeleton, MapConfig, ScanSet, SkeletonConfig, StageTimings};
use voxskel::planners::{audit_path, observed_bounds, plan, PlanRequest, PlanResult, Planner, RrtConfig, SparseGraphPlanner};
use voxskel::world::scenes::{fixture_room, maze_coverage_poses};
use voxskel::world::{generate_maze, MazeSpec, PrimitiveWorld};

pub const STABILITY_VOXEL_SIZES: [f64; 3] = [0.10, 0.15, 0.25];
pub const STABILITY_SIGMAS: [f64; 3] = [0.0, 0.1, 0.2];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityRow {
    pub config: String,
    pub voxel_size: f64,
    pub noise_sigma: f64,
    pub ground_truth: bool,
    pub diagram_voxels: usize,
    pub vertices: usize,
    pub edges: usize,
    pub subgraphs: usize,
    pub build_s: f64,
}

impl StabilityRow {
    pub fn graph_size(&self) -> usize {
        self.vertices + self.edges
    }
}

/// Full pipeline on the fixture room for every (voxel size, σ) pair, plus a
/// ground-truth row at the finest voxel size. Scans are rendered once and
/// re-fused per configuration.
pub fn bench_stability(
    world: &PrimitiveWorld,
    base: &MapConfig,
    skeleton: &SkeletonConfig,
    voxel_sizes: &[f64],
    sigmas: &[f64],
) -> Result<Vec<StabilityRow>> {
    let scans = ScanSet::random(world, base)?;
    let mut rows = Vec::new();
    let mut run = |config: String, map: MapConfig| -> Result<()> {
        let t0 = Instant::now();
        let mut timings = StageTimings::default();
        let esdf = build_map(world, Some(&scans), &map, &mut timings)?;
        let (sk, g) = build_skeleton(&esdf, skeleton, &mut timings)?;
        rows.push(StabilityRow {
            config,
            voxel_size: map.voxel_size,
            noise_sigma: map.noise_sigma,
            ground_truth: map.ground_truth,
            diagram_voxels: diagram_voxel_count(&sk),
            vertices: g.vertices.len(),
            edges: g.edges.len(),
            subgraphs: g.subgraph_count(),
            build_s: t0.elapsed().as_secs_f64(),
        });
        Ok(())
    };
    if let Some(&finest) = voxel_sizes.iter().min_by(|a, b| a.total_cmp(b)) {
        run("ground_truth".into(), MapConfig { voxel_size: finest, noise_sigma: 0.0, ground_truth: true, ..*base })?;
    }
    for &s in voxel_sizes {
        for &sigma in sigmas {
            run(format!("v{s:.2}_n{sigma:.1}"), MapConfig { voxel_size: s, noise_sigma: sigma, ground_truth: false, ..*base })?;
        }
    }
    Ok(rows)
}

pub fn bench_stability_fixture(base: &MapConfig, skeleton: &SkeletonConfig) -> Result<Vec<StabilityRow>> {
    bench_stability(&fixture_room(), base, skeleton, &STABILITY_VOXEL_SIZES, &STABILITY_SIGMAS)
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilitySummary {
    /// Per σ: diagram count at the finest over the coarsest voxel size.
    pub diagram_ratios: Vec<(f64, f64)>,
    /// Per σ: diagram count strictly decreases with voxel size.
    pub diagram_monotone: bool,
    /// max/min of vertices + edges over the scanned grid.
    pub graph_ratio: f64,
    /// Same, including the ground-truth row.
    pub graph_ratio_with_truth: f64,
}

pub fn summarize_stability(rows: &[StabilityRow]) -> StabilitySummary {
    let scanned: Vec<&StabilityRow> = rows.iter().filter(|r| !r.ground_truth).collect();
    let mut by_sigma: BTreeMap<u64, Vec<&StabilityRow>> = BTreeMap::new();
    for r in &scanned {
        by_sigma.entry(r.noise_sigma.to_bits()).or_default().push(r);
    }
    let mut diagram_ratios = Vec::new();
    let mut diagram_monotone = true;
    for group in by_sigma.values_mut() {
        group.sort_by(|a, b| a.voxel_size.total_cmp(&b.voxel_size));
        diagram_monotone &= group.windows(2).all(|w| w[1].diagram_voxels < w[0].diagram_voxels);
        let (fine, coarse) = (group[0], group[group.len() - 1]);
        diagram_ratios.push((fine.noise_sigma, fine.diagram_voxels as f64 / coarse.diagram_voxels.max(1) as f64));
    }
    let ratio = |it: &mut dyn Iterator<Item = usize>| {
        let (lo, hi) = it.fold((usize::MAX, 0), |(lo, hi), x| (lo.min(x), hi.max(x)));
        hi as f64 / lo.max(1) as f64
    };
    StabilitySummary {
        diagram_ratios,
        diagram_monotone,
        graph_ratio: ratio(&mut scanned.iter().map(|r| r.graph_size())),
        graph_ratio_with_truth: ratio(&mut rows.iter().map(|r| r.graph_size())),
    }
}

/// One planner run. `query` identifies the start/goal pair within the map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub planner: String,
    pub time_s: f64,
    pub path_length_m: f64,
    pub solution_vertices: usize,
    pub success: bool,
    pub seed: u64,
    pub map_id: String,
    pub query: usize,
}

/// Planner name used for the first-solution rows of RRT*.
pub const RRT_STAR_FIRST: &str = "rrt_star_first";

impl BenchRecord {
    pub fn from_result(res: &PlanResult, seed: u64, map_id: &str, query: usize) -> Self {
        Self {
            planner: res.planner.clone(),
            time_s: res.solve_time,
            path_length_m: res.path_length,
            solution_vertices: res.solution_vertices,
            success: res.success,
            seed,
            map_id: map_id.to_string(),
            query,
        }
    }

    /// The first solution of an RRT* run as its own row.
    pub fn first_solution(res: &PlanResult, seed: u64, map_id: &str, query: usize) -> Self {
        Self {
            planner: RRT_STAR_FIRST.to_string(),
            time_s: res.first_solution_time.unwrap_or(res.solve_time),
            path_length_m: res.first_solution_length.unwrap_or(0.0),
            solution_vertices: res.first_solution_vertices.unwrap_or(0),
            success: res.first_solution_time.is_some(),
            seed,
            map_id: map_id.to_string(),
            query,
        }
    }
}

pub fn write_records<W: Write, T: Serialize>(rows: &[T], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records<R: std::io::Read>(input: R) -> Result<Vec<BenchRecord>> {
    let mut r = csv::Reader::from_reader(input);
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MazeBenchConfig {
    pub spec: MazeSpec,
    pub map: MapConfig,
    pub skeleton: SkeletonConfig,
    pub rrt: RrtConfig,
    pub robot_radius: f64,
    pub queries: usize,
    pub query_seed: u64,
    pub seeds: Vec<u64>,
    /// Budget of RRT Connect, seconds.
    pub time_limit: f64,
    /// Budget of RRT*, which always runs until it is spent.
    pub rrt_star_time_limit: f64,
}

impl Default for MazeBenchConfig {
    fn default() -> Self {
        Self {
            spec: MazeSpec::desk(),
            map: MapConfig::default(),
            skeleton: SkeletonConfig::default(),
            rrt: RrtConfig::default(),
            robot_radius: 0.3,
            queries: 10,
            query_seed: 0,
            seeds: (0..10).collect(),
            time_limit: 10.0,
            rrt_star_time_limit: 1.0,
        }
    }
}

/// `count` distinct cell pairs at least half the maze width apart in
/// Manhattan distance, drawn from `seed`.
pub fn maze_queries(spec: &MazeSpec, count: usize, seed: u64) -> Vec<([usize; 2], [usize; 2])> {
    let n = spec.cells_per_side();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<([usize; 2], [usize; 2])> = Vec::with_capacity(count);
    let min_sep = n.max(2) / 2;
    let mut attempts = 0;
    while out.len() < count && attempts < 100_000 {
        attempts += 1;
        let a = [rng.random_range(0..n), rng.random_range(0..n)];
        let b = [rng.random_range(0..n), rng.random_range(0..n)];
        if a[0].abs_diff(b[0]) + a[1].abs_diff(b[1]) < min_sep || out.contains(&(a, b)) {
            continue;
        }
        out.push((a, b));
    }
    out
}

pub struct MazeMap {
    pub map_id: String,
    pub world: PrimitiveWorld,
    pub esdf: EsdfLayer,
    pub skeleton: SkeletonLayer,
    pub graph: SparseGraph,
    pub timings: StageTimings,
}

pub fn build_maze_map(cfg: &MazeBenchConfig) -> Result<MazeMap> {
    let world = generate_maze(&cfg.spec)?;
    let mut timings = StageTimings::default();
    let scans = timings.time("render", || ScanSet::from_poses(&world, maze_coverage_poses(&cfg.spec), cfg.map.camera));
    let esdf = build_map(&world, Some(&scans), &cfg.map, &mut timings)?;
    let (skeleton, graph) = build_skeleton(&esdf, &cfg.skeleton, &mut timings)?;
    let map_id = format!("maze{:.0}m_seed{}_v{:.2}", cfg.spec.side, cfg.spec.seed, cfg.map.voxel_size);
    Ok(MazeMap { map_id, world, esdf, skeleton, graph, timings })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MazeBench {
    pub records: Vec<BenchRecord>,
    /// Successful paths that fail the collision audit.
    pub audit_failures: usize,
    pub audited: usize,
}

/// Every planner on every query for every seed. RRT* contributes a final
/// row and a first-solution row per run.
pub fn run_maze_bench(map: &MazeMap, cfg: &MazeBenchConfig) -> Result<MazeBench> {
    let rrt = RrtConfig { bounds: cfg.rrt.bounds.or_else(|| observed_bounds(&map.esdf)), ..cfg.rrt };
    let sparse = SparseGraphPlanner::new(&map.graph);
    let mut out = MazeBench { records: Vec::new(), audit_failures: 0, audited: 0 };
    for (q, (a, b)) in maze_queries(&cfg.spec, cfg.queries, cfg.query_seed).into_iter().enumerate() {
        let base = PlanRequest::new(cfg.spec.cell_center(a[0], a[1]), cfg.spec.cell_center(b[0], b[1]), cfg.robot_radius);
        for &seed in &cfg.seeds {
            for planner in Planner::ALL {
                let time_limit = if planner == Planner::RrtStar { cfg.rrt_star_time_limit } else { cfg.time_limit };
                let req = PlanRequest { time_limit, rng_seed: seed, ..base };
                let res = plan(planner, &map.esdf, Some(&map.skeleton), Some(&sparse), &req, &rrt)?;
                if res.success {
                    out.audited += 1;
                    if !audit_path(&map.esdf, &res.waypoints, cfg.robot_radius) {
                        out.audit_failures += 1;
                    }
                }
                out.records.push(BenchRecord::from_result(&res, seed, &map.map_id, q));
                if planner == Planner::RrtStar {
                    out.records.push(BenchRecord::first_solution(&res, seed, &map.map_id, q));
                }
            }
        }
    }
    Ok(out)
}

/// Table-style aggregate of one planner over all runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlannerSummary {
    pub planner: String,
    pub runs: usize,
    pub success_rate: f64,
    pub median_time_s: f64,
    pub median_path_length_m: f64,
    pub median_solution_vertices: f64,
}

pub fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Medians of successful runs per planner, ordered by median time.
pub fn summarize_maze(records: &[BenchRecord]) -> Vec<PlannerSummary> {
    let mut groups: BTreeMap<&str, Vec<&BenchRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(r.planner.as_str()).or_default().push(r);
    }
    let mut out: Vec<PlannerSummary> = groups
        .into_iter()
        .map(|(name, rs)| {
            let ok: Vec<&&BenchRecord> = rs.iter().filter(|r| r.success).collect();
            let col = |f: fn(&BenchRecord) -> f64| median(&mut ok.iter().map(|r| f(r)).collect::<Vec<_>>());
            PlannerSummary {
                planner: name.to_string(),
                runs: rs.len(),
                success_rate: ok.len() as f64 / rs.len() as f64,
                median_time_s: col(|r| r.time_s),
                median_path_length_m: col(|r| r.path_length_m),
                median_solution_vertices: col(|r| r.solution_vertices as f64),
            }
        })
        .collect();
    out.sort_by(|a, b| a.median_time_s.total_cmp(&b.median_time_s));
    out
}

/// Per query: sparse-graph path length over the median final RRT* length.
pub fn path_length_ratios(records: &[BenchRecord]) -> Vec<(usize, f64)> {
    let mut sparse: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    let mut star: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.success) {
        if r.planner == Planner::SparseGraph.name() {
            sparse.entry(r.query).or_default().push(r.path_length_m);
        } else if r.planner == Planner::RrtStar.name() {
            star.entry(r.query).or_default().push(r.path_length_m);
        }
    }
    let mut queries: Vec<usize> = records.iter().map(|r| r.query).collect();
    queries.sort_unstable();
    queries.dedup();
    queries
        .into_iter()
        .map(|q| {
            let s = sparse.get_mut(&q).map_or(f64::NAN, |v| median(v));
            let r = star.get_mut(&q).map_or(f64::NAN, |v| median(v));
            (q, s / r)
        })
        .collect()
}
