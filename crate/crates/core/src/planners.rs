//! Global planners for a spherical robot: A* through the ESDF, through the
//! skeleton diagram and over the sparse graph, plus RRT Connect and RRT*
//! baselines that collision-check directly in the ESDF.
//!
//! Every planner validates a straight step with [`segment_clearance`], so a
//! returned path always passes [`audit_path`] for the same radius.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::Point3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::SparseGraph;
use crate::layers::{segment_clearance, EsdfLayer, SkeletonLayer};
use crate::search::grid_astar;
use crate::spatial::KdTree;
use crate::voxel::GridIndex;
use crate::world::Aabb;

#[derive(Debug, Error, PartialEq)]
pub enum PlanError {
    #[error("invalid endpoint: {which} {reason}")]
    InvalidEndpoint { which: &'static str, reason: String },
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("unknown planner '{0}'")]
    UnknownPlanner(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanRequest {
    pub start: [f64; 3],
    pub goal: [f64; 3],
    pub robot_radius: f64,
    /// Wall-clock budget of the sampling planners, seconds.
    pub time_limit: f64,
    pub rng_seed: u64,
}

impl PlanRequest {
    pub fn new(start: [f64; 3], goal: [f64; 3], robot_radius: f64) -> Self {
        Self { start, goal, robot_radius, time_limit: 10.0, rng_seed: 0 }
    }

    pub fn validate(&self) -> Result<(), PlanError> {
        if !(self.robot_radius > 0.0) {
            return Err(PlanError::InvalidRequest("robot_radius must be positive".into()));
        }
        if !(self.time_limit >= 0.0) {
            return Err(PlanError::InvalidRequest("time_limit must be >= 0".into()));
        }
        if self.start.iter().chain(&self.goal).any(|c| !c.is_finite()) {
            return Err(PlanError::InvalidRequest("endpoints must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    pub planner: String,
    pub success: bool,
    pub waypoints: Vec<[f64; 3]>,
    pub path_length: f64,
    pub solve_time: f64,
    pub solution_vertices: usize,
    /// Search expansions for the A* planners, samples for the RRTs.
    pub expansions: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_solution_time: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_solution_length: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_solution_vertices: Option<usize>,
}

impl PlanResult {
    fn failure(planner: Planner, expansions: usize) -> Self {
        Self { planner: planner.to_string(), expansions, ..Self::default() }
    }

    fn from_points(planner: Planner, points: impl IntoIterator<Item = Point3<f64>>, expansions: usize) -> Self {
        let mut waypoints: Vec<[f64; 3]> = Vec::new();
        for p in points {
            let p = [p.x, p.y, p.z];
            if waypoints.last() != Some(&p) {
                waypoints.push(p);
            }
        }
        let path_length = path_length(&waypoints);
        Self {
            planner: planner.to_string(),
            success: true,
            solution_vertices: waypoints.len(),
            waypoints,
            path_length,
            expansions,
            ..Self::default()
        }
    }

    fn timed(mut self, t0: Instant) -> Self {
        self.solve_time = t0.elapsed().as_secs_f64();
        self
    }
}

pub fn path_length(waypoints: &[[f64; 3]]) -> f64 {
    waypoints.windows(2).map(|w| (Point3::from(w[1]) - Point3::from(w[0])).norm()).sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Planner {
    SparseGraph,
    AstarDiagram,
    RrtConnect,
    RrtStar,
    AstarEsdf,
}

impl Planner {
    pub const ALL: [Planner; 5] =
        [Planner::SparseGraph, Planner::AstarDiagram, Planner::RrtConnect, Planner::RrtStar, Planner::AstarEsdf];

    pub fn name(self) -> &'static str {
        match self {
            Planner::SparseGraph => "sparse_graph",
            Planner::AstarDiagram => "astar_diagram",
            Planner::RrtConnect => "rrt_connect",
            Planner::RrtStar => "rrt_star",
            Planner::AstarEsdf => "astar_esdf",
        }
    }

    pub fn is_sampling(self) -> bool {
        matches!(self, Planner::RrtConnect | Planner::RrtStar)
    }
}

impl fmt::Display for Planner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Planner {
    type Err = PlanError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Planner::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| PlanError::UnknownPlanner(s.to_string()))
    }
}

/// ESDF distance at `p`; unobserved or unallocated space is `-inf`.
pub fn point_clearance(esdf: &EsdfLayer, p: &Point3<f64>) -> f64 {
    match esdf.get_at(p) {
        Some(v) if v.observed => v.distance as f64,
        _ => f64::NEG_INFINITY,
    }
}

/// True when every waypoint and every half-voxel sample along every segment
/// has clearance of at least `radius`.
pub fn audit_path(esdf: &EsdfLayer, waypoints: &[[f64; 3]], radius: f64) -> bool {
    waypoints.iter().all(|w| point_clearance(esdf, &Point3::from(*w)) >= radius)
        && waypoints.windows(2).all(|w| segment_clearance(esdf, &Point3::from(w[0]), &Point3::from(w[1])) >= radius)
}

fn check_endpoints(esdf: &EsdfLayer, req: &PlanRequest) -> Result<(), PlanError> {
    req.validate()?;
    for (which, p) in [("start", req.start), ("goal", req.goal)] {
        let c = point_clearance(esdf, &Point3::from(p));
        if c < req.robot_radius {
            let reason = if c == f64::NEG_INFINITY {
                "is in unknown space".to_string()
            } else {
                format!("has clearance {c:.3} below robot radius {}", req.robot_radius)
            };
            return Err(PlanError::InvalidEndpoint { which, reason });
        }
    }
    Ok(())
}

/// A 26-connected step is valid when the straight segment between the two
/// voxel centers keeps `radius` clearance.
fn step_free(esdf: &EsdfLayer, from: GridIndex, to: GridIndex, radius: f64) -> bool {
    let s = esdf.voxel_size();
    esdf.get(to).is_some_and(|v| v.observed && v.distance as f64 >= radius)
        && segment_clearance(esdf, &from.center(s), &to.center(s)) >= radius
}

fn voxel_route(start: [f64; 3], voxels: &[GridIndex], goal: [f64; 3], s: f64) -> Vec<Point3<f64>> {
    std::iter::once(Point3::from(start))
        .chain(voxels.iter().map(|v| v.center(s)))
        .chain(std::iter::once(Point3::from(goal)))
        .collect()
}

/// A* over free ESDF voxels with Euclidean step costs.
pub fn astar_esdf(esdf: &EsdfLayer, req: &PlanRequest) -> Result<PlanResult, PlanError> {
    check_endpoints(esdf, req)?;
    let t0 = Instant::now();
    if req.start == req.goal {
        return Ok(PlanResult::from_points(Planner::AstarEsdf, [Point3::from(req.start)], 0).timed(t0));
    }
    let s = esdf.voxel_size();
    let r = req.robot_radius;
    let sv = GridIndex::from_position(&Point3::from(req.start), s);
    let gv = GridIndex::from_position(&Point3::from(req.goal), s);
    let out = grid_astar(sv, Some(gv), |i| i == gv, |a, b| step_free(esdf, a, b, r));
    let res = match out.path {
        Some(p) => PlanResult::from_points(Planner::AstarEsdf, voxel_route(req.start, &p.voxels, req.goal, s), out.expansions),
        None => PlanResult::failure(Planner::AstarEsdf, out.expansions),
    };
    Ok(res.timed(t0))
}

fn on_diagram(skeleton: &SkeletonLayer, i: GridIndex) -> bool {
    skeleton.get(i).is_some_and(|v| v.on_diagram())
}

/// A* restricted to the skeleton diagram, entered and left through ESDF
/// connector searches that stop at the first expanded diagram voxel.
pub fn astar_diagram(esdf: &EsdfLayer, skeleton: &SkeletonLayer, req: &PlanRequest) -> Result<PlanResult, PlanError> {
    check_endpoints(esdf, req)?;
    let t0 = Instant::now();
    if req.start == req.goal {
        return Ok(PlanResult::from_points(Planner::AstarDiagram, [Point3::from(req.start)], 0).timed(t0));
    }
    let s = esdf.voxel_size();
    let r = req.robot_radius;
    let sv = GridIndex::from_position(&Point3::from(req.start), s);
    let gv = GridIndex::from_position(&Point3::from(req.goal), s);
    let free = |a: GridIndex, b: GridIndex| step_free(esdf, a, b, r);

    let fwd = grid_astar(sv, Some(gv), |i| on_diagram(skeleton, i), free);
    let mut expansions = fwd.expansions;
    let Some(fwd) = fwd.path else {
        return Ok(PlanResult::failure(Planner::AstarDiagram, expansions).timed(t0));
    };
    let bwd = grid_astar(gv, Some(sv), |i| on_diagram(skeleton, i), free);
    expansions += bwd.expansions;
    let Some(bwd) = bwd.path else {
        return Ok(PlanResult::failure(Planner::AstarDiagram, expansions).timed(t0));
    };
    let (a, b) = (*fwd.voxels.last().unwrap(), *bwd.voxels.last().unwrap());
    let mid = grid_astar(a, Some(b), |i| i == b, |x, y| on_diagram(skeleton, y) && free(x, y));
    expansions += mid.expansions;
    let Some(mid) = mid.path else {
        return Ok(PlanResult::failure(Planner::AstarDiagram, expansions).timed(t0));
    };
    let mut voxels = fwd.voxels;
    voxels.extend_from_slice(&mid.voxels[1..]);
    voxels.extend(bwd.voxels.iter().rev().skip(1));
    let res = PlanResult::from_points(Planner::AstarDiagram, voxel_route(req.start, &voxels, req.goal, s), expansions);
    Ok(res.timed(t0))
}

#[derive(Clone, Copy, PartialEq)]
struct Key(f64);

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

/// Sparse-graph planner with its vertex index built once up front.
pub struct SparseGraphPlanner<'g> {
    graph: &'g SparseGraph,
    tree: KdTree,
    /// Per vertex: (neighbor, edge length, edge clearance).
    adjacency: Vec<Vec<(u32, f64, f64)>>,
}

/// Endpoint attachment considers this many nearest vertices.
pub const ATTACH_CANDIDATES: usize = 5;

impl<'g> SparseGraphPlanner<'g> {
    pub fn new(graph: &'g SparseGraph) -> Self {
        let items: Vec<(Point3<f64>, usize)> = (0..graph.vertices.len()).map(|i| (graph.position(i as u32), i)).collect();
        let mut adjacency = vec![Vec::new(); graph.vertices.len()];
        for e in &graph.edges {
            let len = (graph.position(e.end) - graph.position(e.start)).norm();
            adjacency[e.start as usize].push((e.end, len, e.clearance));
            adjacency[e.end as usize].push((e.start, len, e.clearance));
        }
        for a in &mut adjacency {
            a.sort_by_key(|x| x.0);
        }
        Self { graph, tree: KdTree::build(&items), adjacency }
    }

    fn attach(&self, esdf: &EsdfLayer, p: &Point3<f64>, radius: f64) -> Option<u32> {
        self.tree
            .k_nearest(p, ATTACH_CANDIDATES)
            .into_iter()
            .map(|(id, _)| id as u32)
            .find(|&v| segment_clearance(esdf, p, &self.graph.position(v)) >= radius)
    }

    /// Shortest vertex sequence between two vertices over edges whose
    /// clearance is at least `radius`, with the number of expansions.
    pub fn vertex_path(&self, from: u32, to: u32, radius: f64) -> (Option<Vec<u32>>, usize) {
        let n = self.graph.vertices.len();
        let goal = self.graph.position(to);
        let h = |v: u32| (self.graph.position(v) - goal).norm();
        let mut g = vec![f64::INFINITY; n];
        let mut parent = vec![u32::MAX; n];
        let mut closed = vec![false; n];
        let mut heap = BinaryHeap::new();
        g[from as usize] = 0.0;
        heap.push(Reverse((Key(h(from)), Key(h(from)), from)));
        let mut expansions = 0;
        while let Some(Reverse((_, _, v))) = heap.pop() {
            if closed[v as usize] {
                continue;
            }
            closed[v as usize] = true;
            expansions += 1;
            if v == to {
                let mut path = vec![v];
                let mut cur = v;
                while cur != from {
                    cur = parent[cur as usize];
                    path.push(cur);
                }
                path.reverse();
                return (Some(path), expansions);
            }
            for &(w, len, clearance) in &self.adjacency[v as usize] {
                if clearance < radius || closed[w as usize] {
                    continue;
                }
                let ng = g[v as usize] + len;
                if ng < g[w as usize] {
                    g[w as usize] = ng;
                    parent[w as usize] = v;
                    let hw = h(w);
                    heap.push(Reverse((Key(ng + hw), Key(hw), w)));
                }
            }
        }
        (None, expansions)
    }

    pub fn plan(&self, esdf: &EsdfLayer, req: &PlanRequest) -> Result<PlanResult, PlanError> {
        check_endpoints(esdf, req)?;
        let t0 = Instant::now();
        let (start, goal) = (Point3::from(req.start), Point3::from(req.goal));
        if start == goal {
            return Ok(PlanResult::from_points(Planner::SparseGraph, [start], 0).timed(t0));
        }
        let r = req.robot_radius;
        let (Some(a), Some(b)) = (self.attach(esdf, &start, r), self.attach(esdf, &goal, r)) else {
            return Ok(PlanResult::failure(Planner::SparseGraph, 0).timed(t0));
        };
        let (path, expansions) = self.vertex_path(a, b, r);
        let res = match path {
            Some(vs) => {
                let pts = std::iter::once(start).chain(vs.iter().map(|v| self.graph.position(*v))).chain(std::iter::once(goal));
                PlanResult::from_points(Planner::SparseGraph, pts, expansions)
            }
            None => PlanResult::failure(Planner::SparseGraph, expansions),
        };
        Ok(res.timed(t0))
    }
}

/// One-shot sparse-graph query; builds the vertex index first.
pub fn astar_sparse(graph: &SparseGraph, esdf: &EsdfLayer, req: &PlanRequest) -> Result<PlanResult, PlanError> {
    SparseGraphPlanner::new(graph).plan(esdf, req)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RrtConfig {
    /// Maximum extension per step, in voxels.
    pub step_voxels: f64,
    /// Probability of sampling the goal (RRT*).
    pub goal_bias: f64,
    /// Stop after this many samples even if time remains.
    pub max_samples: Option<usize>,
    /// Sampling region; defaults to the extent of observed voxels.
    pub bounds: Option<Aabb>,
}

impl Default for RrtConfig {
    fn default() -> Self {
        Self { step_voxels: 5.0, goal_bias: 0.05, max_samples: None, bounds: None }
    }
}

impl RrtConfig {
    pub fn validate(&self) -> Result<(), PlanError> {
        if !(self.step_voxels > 0.0) {
            return Err(PlanError::InvalidRequest("step_voxels must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.goal_bias) {
            return Err(PlanError::InvalidRequest("goal_bias must be in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Axis-aligned extent of the observed voxels.
pub fn observed_bounds(esdf: &EsdfLayer) -> Option<Aabb> {
    let s = esdf.voxel_size();
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for (idx, v) in esdf.iter_unordered() {
        if !v.observed {
            continue;
        }
        let c = idx.center(s);
        for k in 0..3 {
            lo[k] = lo[k].min(c[k] - 0.5 * s);
            hi[k] = hi[k].max(c[k] + 0.5 * s);
        }
    }
    (lo[0] <= hi[0]).then(|| Aabb::new(lo, hi))
}

struct Sampler {
    rng: ChaCha8Rng,
    bounds: Aabb,
}

impl Sampler {
    fn sample(&mut self) -> Point3<f64> {
        let b = self.bounds;
        Point3::from(std::array::from_fn(|k| if b.max[k] > b.min[k] { self.rng.random_range(b.min[k]..b.max[k]) } else { b.min[k] }))
    }
}

struct Budget {
    t0: Instant,
    time_limit: f64,
    max_samples: usize,
}

impl Budget {
    fn exhausted(&self, samples: usize) -> bool {
        samples >= self.max_samples || self.t0.elapsed().as_secs_f64() >= self.time_limit
    }
}

fn setup(esdf: &EsdfLayer, req: &PlanRequest, cfg: &RrtConfig) -> Result<(Sampler, f64), PlanError> {
    check_endpoints(esdf, req)?;
    cfg.validate()?;
    let bounds = match cfg.bounds {
        Some(b) => b,
        None => observed_bounds(esdf).ok_or_else(|| PlanError::InvalidRequest("map has no observed voxels".into()))?,
    };
    let sampler = Sampler { rng: ChaCha8Rng::seed_from_u64(req.rng_seed), bounds };
    Ok((sampler, cfg.step_voxels * esdf.voxel_size()))
}

fn steer(from: &Point3<f64>, to: &Point3<f64>, step: f64) -> Point3<f64> {
    let d = to - from;
    let n = d.norm();
    if n <= step {
        *to
    } else {
        from + d * (step / n)
    }
}

struct Tree {
    points: Vec<Point3<f64>>,
    parents: Vec<usize>,
    index: KdTree,
}

impl Tree {
    fn new(root: Point3<f64>) -> Self {
        let mut index = KdTree::new();
        index.insert(root, 0);
        Self { points: vec![root], parents: vec![0], index }
    }

    fn add(&mut self, p: Point3<f64>, parent: usize) -> usize {
        let id = self.points.len();
        self.points.push(p);
        self.parents.push(parent);
        self.index.insert(p, id);
        id
    }

    fn nearest(&self, p: &Point3<f64>) -> usize {
        self.index.nearest(p).expect("tree has a root").0
    }

    /// Points from `node` back to the root.
    fn branch(&self, mut node: usize) -> Vec<Point3<f64>> {
        let mut out = vec![self.points[node]];
        while node != 0 {
            node = self.parents[node];
            out.push(self.points[node]);
        }
        out
    }
}

enum Extend {
    Trapped,
    Advanced(usize),
    Reached(usize),
}

fn extend(tree: &mut Tree, esdf: &EsdfLayer, target: &Point3<f64>, step: f64, radius: f64) -> Extend {
    let near = tree.nearest(target);
    let from = tree.points[near];
    let new = steer(&from, target, step);
    if new == from || segment_clearance(esdf, &from, &new) < radius {
        return Extend::Trapped;
    }
    let id = tree.add(new, near);
    if new == *target {
        Extend::Reached(id)
    } else {
        Extend::Advanced(id)
    }
}

/// Bidirectional RRT with greedy connection.
pub fn rrt_connect(esdf: &EsdfLayer, req: &PlanRequest, cfg: &RrtConfig) -> Result<PlanResult, PlanError> {
    let (mut sampler, step) = setup(esdf, req, cfg)?;
    let t0 = Instant::now();
    let r = req.robot_radius;
    let (start, goal) = (Point3::from(req.start), Point3::from(req.goal));
    if segment_clearance(esdf, &start, &goal) >= r {
        return Ok(PlanResult::from_points(Planner::RrtConnect, [start, goal], 0).timed(t0));
    }
    let budget = Budget { t0, time_limit: req.time_limit, max_samples: cfg.max_samples.unwrap_or(usize::MAX) };
    let mut trees = [Tree::new(start), Tree::new(goal)];
    let mut samples = 0;
    while !budget.exhausted(samples) {
        samples += 1;
        let q = sampler.sample();
        let a = (samples + 1) % 2;
        let (ta, tb) = {
            let [t0, t1] = &mut trees;
            if a == 0 { (t0, t1) } else { (t1, t0) }
        };
        let new = match extend(ta, esdf, &q, step, r) {
            Extend::Trapped => continue,
            Extend::Advanced(id) | Extend::Reached(id) => id,
        };
        let target = ta.points[new];
        loop {
            match extend(tb, esdf, &target, step, r) {
                Extend::Trapped => break,
                Extend::Advanced(_) => continue,
                Extend::Reached(id) => {
                    let mut from_a = ta.branch(new);
                    let from_b = tb.branch(id);
                    // Drop the duplicated meeting point.
                    from_a.reverse();
                    from_a.pop();
                    let mut pts = from_a;
                    pts.extend(from_b);
                    if a == 1 {
                        pts.reverse();
                    }
                    return Ok(PlanResult::from_points(Planner::RrtConnect, pts, samples).timed(t0));
                }
            }
        }
    }
    Ok(PlanResult::failure(Planner::RrtConnect, samples).timed(t0))
}

/// Rewiring radius `min(γ·(ln n / n)^(1/3), step)` with the standard
/// lower bound on γ for the sampled volume.
fn rewire_radius(n: usize, volume: f64, step: f64) -> f64 {
    let unit_ball = 4.0 / 3.0 * std::f64::consts::PI;
    let gamma = 2.0 * (1.0 + 1.0 / 3.0f64).cbrt() * (volume / unit_ball).cbrt();
    let n = n.max(2) as f64;
    (gamma * (n.ln() / n).cbrt()).min(step)
}

/// RRT* that keeps refining the goal branch until the budget runs out.
pub fn rrt_star(esdf: &EsdfLayer, req: &PlanRequest, cfg: &RrtConfig) -> Result<PlanResult, PlanError> {
    let (mut sampler, step) = setup(esdf, req, cfg)?;
    let t0 = Instant::now();
    let r = req.robot_radius;
    let (start, goal) = (Point3::from(req.start), Point3::from(req.goal));
    let b = sampler.bounds;
    let volume = (0..3).map(|k| (b.max[k] - b.min[k]).max(esdf.voxel_size())).product::<f64>();
    let budget = Budget { t0, time_limit: req.time_limit, max_samples: cfg.max_samples.unwrap_or(usize::MAX) };

    let mut tree = Tree::new(start);
    let mut cost = vec![0.0f64];
    let mut children: Vec<Vec<usize>> = vec![Vec::new()];
    let mut goal_node: Option<usize> = None;
    let mut first: Option<(f64, f64, usize)> = None;
    let mut samples = 0;

    if start == goal {
        return Ok(PlanResult::from_points(Planner::RrtStar, [start], 0).timed(t0));
    }

    while !budget.exhausted(samples) {
        samples += 1;
        let q = if goal_node.is_none() && sampler.rng.random_bool(cfg.goal_bias) { goal } else { sampler.sample() };
        let nearest = tree.nearest(&q);
        let new = steer(&tree.points[nearest], &q, step);
        if new == tree.points[nearest] || segment_clearance(esdf, &tree.points[nearest], &new) < r {
            continue;
        }
        let radius = rewire_radius(tree.points.len() + 1, volume, step);
        let near: Vec<usize> = tree.index.within_radius(&new, radius).into_iter().map(|(id, _)| id).collect();

        let mut parent = nearest;
        let mut best = cost[nearest] + (new - tree.points[nearest]).norm();
        for &m in &near {
            let c = cost[m] + (new - tree.points[m]).norm();
            if c < best && segment_clearance(esdf, &tree.points[m], &new) >= r {
                parent = m;
                best = c;
            }
        }
        let id = tree.add(new, parent);
        cost.push(best);
        children.push(Vec::new());
        children[parent].push(id);

        for &m in &near {
            if m == parent {
                continue;
            }
            let c = best + (tree.points[m] - new).norm();
            if c < cost[m] && segment_clearance(esdf, &new, &tree.points[m]) >= r {
                reparent(&mut tree, &mut cost, &mut children, m, id, c);
            }
        }

        if new == goal && goal_node.is_none() {
            goal_node = Some(id);
        } else if (goal - new).norm() <= step && segment_clearance(esdf, &new, &goal) >= r {
            let c = best + (goal - new).norm();
            match goal_node {
                None => {
                    let g = tree.add(goal, id);
                    cost.push(c);
                    children.push(Vec::new());
                    children[id].push(g);
                    goal_node = Some(g);
                }
                Some(g) if c < cost[g] => reparent(&mut tree, &mut cost, &mut children, g, id, c),
                Some(_) => {}
            }
        }
        if first.is_none() {
            if let Some(g) = goal_node {
                first = Some((t0.elapsed().as_secs_f64(), cost[g], tree.branch(g).len()));
            }
        }
    }

    let mut res = match goal_node {
        Some(g) => {
            let mut pts = tree.branch(g);
            pts.reverse();
            PlanResult::from_points(Planner::RrtStar, pts, samples)
        }
        None => PlanResult::failure(Planner::RrtStar, samples),
    };
    res.first_solution_time = first.map(|f| f.0);
    res.first_solution_length = first.map(|f| f.1);
    res.first_solution_vertices = first.map(|f| f.2);
    Ok(res.timed(t0))
}

fn reparent(tree: &mut Tree, cost: &mut [f64], children: &mut [Vec<usize>], node: usize, parent: usize, c: f64) {
    let old = tree.parents[node];
    children[old].retain(|&x| x != node);
    children[parent].push(node);
    tree.parents[node] = parent;
    let delta = c - cost[node];
    let mut stack = vec![node];
    while let Some(n) = stack.pop() {
        cost[n] += delta;
        stack.extend_from_slice(&children[n]);
    }
}

/// Runs one planner by name. Sampling planners use `rrt`; the graph and
/// diagram planners need their structures.
pub fn plan(
    planner: Planner,
    esdf: &EsdfLayer,
    skeleton: Option<&SkeletonLayer>,
    graph: Option<&SparseGraphPlanner<'_>>,
    req: &PlanRequest,
    rrt: &RrtConfig,
) -> Result<PlanResult, PlanError> {
    match planner {
        Planner::AstarEsdf => astar_esdf(esdf, req),
        Planner::AstarDiagram => {
            let sk = skeleton.ok_or_else(|| PlanError::InvalidRequest("astar_diagram needs a skeleton".into()))?;
            astar_diagram(esdf, sk, req)
        }
        Planner::SparseGraph => {
            let g = graph.ok_or_else(|| PlanError::InvalidRequest("sparse_graph needs a graph".into()))?;
            g.plan(esdf, req)
        }
        Planner::RrtConnect => rrt_connect(esdf, req, rrt),
        Planner::RrtStar => rrt_star(esdf, req, rrt),
    }
}
