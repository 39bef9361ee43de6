//! Sparse graph extraction from a thinned skeleton diagram: vertex
//! extraction and pruning, edge following, edge splitting and repair of
//! disconnected subgraphs.

use std::collections::BTreeMap;
use std::io::Write;

use nalgebra::{Point3, Vector3};
use rustc_hash::{FxHashMap, FxHashSet};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::layers::{segment_clearance, EsdfLayer, SkeletonLayer};
use crate::search::{grid_astar, StepCounts};
use crate::spatial::KdTree;
use crate::voxel::{GridIndex, OFFSETS_26};

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("invalid graph configuration: {0}")]
    InvalidConfig(String),
    #[error("graph file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("inconsistent graph: {0}")]
    Inconsistent(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphConfig {
    /// Vertices closer than this to a higher-clearance vertex are pruned, meters.
    pub r_prune: f64,
    /// Maximum distance of an edge's diagram route from its straight line,
    /// meters; `None` means twice the voxel size.
    pub max_edge_deviation: Option<f64>,
    /// Diagram voxels with this many or more diagram neighbors are junctions.
    pub min_junction_neighbors: u32,
    /// Edges whose straight line comes closer than this to obstacles are flagged.
    pub edge_clearance: f64,
    pub max_split_passes: usize,
}

impl Default for GraphConfig {
    fn default() -> Self {
        Self {
            r_prune: 0.4,
            max_edge_deviation: None,
            min_junction_neighbors: 3,
            edge_clearance: 0.2,
            max_split_passes: 10,
        }
    }
}

impl GraphConfig {
    pub fn validate(&self) -> Result<(), GraphError> {
        if !(self.r_prune > 0.0) {
            return Err(GraphError::InvalidConfig("r_prune must be positive".into()));
        }
        if let Some(d) = self.max_edge_deviation {
            if !(d > 0.0) {
                return Err(GraphError::InvalidConfig("max_edge_deviation must be positive".into()));
            }
        }
        if self.min_junction_neighbors < 2 {
            return Err(GraphError::InvalidConfig("min_junction_neighbors must be >= 2".into()));
        }
        Ok(())
    }

    pub fn deviation_limit(&self, voxel_size: f64) -> f64 {
        self.max_edge_deviation.unwrap_or(2.0 * voxel_size)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseVertex {
    pub id: u32,
    pub voxel: GridIndex,
    pub position: [f64; 3],
    /// ESDF clearance at the vertex voxel, meters.
    pub distance: f64,
    pub subgraph: u32,
    #[serde(skip)]
    pub edges: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseEdge {
    pub id: u32,
    pub start: u32,
    pub end: u32,
    /// Minimum ESDF distance along the straight segment, meters.
    pub clearance: f64,
    /// Set when `clearance` is below the configured edge clearance.
    pub flagged: bool,
    /// Underlying diagram route from the start vertex voxel to the end one.
    pub path: Vec<GridIndex>,
}

impl SparseEdge {
    pub fn other(&self, v: u32) -> u32 {
        if self.start == v {
            self.end
        } else {
            self.start
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseGraph {
    pub voxel_size: f64,
    pub vertices: Vec<SparseVertex>,
    pub edges: Vec<SparseEdge>,
}

impl SparseGraph {
    pub fn new(voxel_size: f64) -> Self {
        Self { voxel_size, vertices: Vec::new(), edges: Vec::new() }
    }

    pub fn size(&self) -> usize {
        self.vertices.len() + self.edges.len()
    }

    pub fn position(&self, v: u32) -> Point3<f64> {
        Point3::from(self.vertices[v as usize].position)
    }

    fn add_vertex(&mut self, voxel: GridIndex, distance: f64) -> u32 {
        let id = self.vertices.len() as u32;
        let c = voxel.center(self.voxel_size);
        self.vertices.push(SparseVertex {
            id,
            voxel,
            position: [c.x, c.y, c.z],
            distance,
            subgraph: 0,
            edges: Vec::new(),
        });
        id
    }

    fn add_edge(&mut self, start: u32, end: u32, path: Vec<GridIndex>) -> u32 {
        let id = self.edges.len() as u32;
        self.edges.push(SparseEdge { id, start, end, clearance: f64::INFINITY, flagged: false, path });
        self.vertices[start as usize].edges.push(id);
        self.vertices[end as usize].edges.push(id);
        id
    }

    fn has_edge_between(&self, a: u32, b: u32) -> bool {
        self.vertices[a as usize].edges.iter().any(|&e| self.edges[e as usize].other(a) == b)
    }

    /// Rebuilds per-vertex edge lists from the edge array.
    pub fn rebuild_adjacency(&mut self) {
        for v in &mut self.vertices {
            v.edges.clear();
        }
        for e in &self.edges {
            self.vertices[e.start as usize].edges.push(e.id);
            self.vertices[e.end as usize].edges.push(e.id);
        }
    }

    /// Keeps the listed vertices and edges, renumbering both contiguously.
    fn retain(&mut self, keep_vertex: impl Fn(&SparseVertex) -> bool, keep_edge: impl Fn(&SparseEdge) -> bool) {
        let mut remap = vec![u32::MAX; self.vertices.len()];
        let mut vertices = Vec::new();
        for v in self.vertices.drain(..) {
            if keep_vertex(&v) {
                remap[v.id as usize] = vertices.len() as u32;
                vertices.push(SparseVertex { id: vertices.len() as u32, ..v });
            }
        }
        let mut edges = Vec::new();
        for e in self.edges.drain(..) {
            let (s, t) = (remap[e.start as usize], remap[e.end as usize]);
            if s != u32::MAX && t != u32::MAX && keep_edge(&e) {
                edges.push(SparseEdge { id: edges.len() as u32, start: s, end: t, ..e });
            }
        }
        self.vertices = vertices;
        self.edges = edges;
        self.rebuild_adjacency();
    }

    /// Labels connected components; returns the component count.
    pub fn label_subgraphs(&mut self) -> usize {
        let n = self.vertices.len();
        let mut label = vec![u32::MAX; n];
        let mut next = 0;
        for s in 0..n {
            if label[s] != u32::MAX {
                continue;
            }
            label[s] = next;
            let mut stack = vec![s as u32];
            while let Some(v) = stack.pop() {
                for &e in &self.vertices[v as usize].edges {
                    let w = self.edges[e as usize].other(v);
                    if label[w as usize] == u32::MAX {
                        label[w as usize] = next;
                        stack.push(w);
                    }
                }
            }
            next += 1;
        }
        for (v, l) in self.vertices.iter_mut().zip(label) {
            v.subgraph = l;
        }
        next as usize
    }

    pub fn subgraph_count(&self) -> usize {
        self.vertices.iter().map(|v| v.subgraph).collect::<FxHashSet<_>>().len()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, GraphError> {
        let mut g: SparseGraph = serde_json::from_str(s)?;
        for (i, v) in g.vertices.iter().enumerate() {
            if v.id as usize != i {
                return Err(GraphError::Inconsistent(format!("vertex {i} has id {}", v.id)));
            }
        }
        for (i, e) in g.edges.iter().enumerate() {
            let n = g.vertices.len() as u32;
            if e.id as usize != i || e.start >= n || e.end >= n || e.start == e.end {
                return Err(GraphError::Inconsistent(format!("bad edge {i}")));
            }
        }
        g.rebuild_adjacency();
        Ok(g)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<(), GraphError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self, GraphError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// ASCII PLY with vertex positions and edge segments.
    pub fn write_ply<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "ply\nformat ascii 1.0")?;
        writeln!(out, "element vertex {}", self.vertices.len())?;
        writeln!(out, "property float x\nproperty float y\nproperty float z\nproperty float distance")?;
        writeln!(out, "element edge {}", self.edges.len())?;
        writeln!(out, "property int vertex1\nproperty int vertex2\nend_header")?;
        for v in &self.vertices {
            writeln!(out, "{} {} {} {}", v.position[0], v.position[1], v.position[2], v.distance)?;
        }
        for e in &self.edges {
            writeln!(out, "{} {}", e.start, e.end)?;
        }
        Ok(())
    }
}

fn on_diagram(skeleton: &SkeletonLayer, i: GridIndex) -> bool {
    skeleton.get(i).is_some_and(|v| v.is_edge)
}

fn diagram_neighbor_count(skeleton: &SkeletonLayer, i: GridIndex) -> u32 {
    OFFSETS_26.iter().filter(|o| on_diagram(skeleton, i + **o)).count() as u32
}

/// Candidate vertex found on the diagram.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VertexCandidate {
    pub voxel: GridIndex,
    pub distance: f64,
}

/// Flags diagram voxels with exactly one diagram neighbor (tips) or at least
/// `min_junction_neighbors` (junctions) as vertices, in scan order.
pub fn extract_vertices(skeleton: &mut SkeletonLayer, config: &GraphConfig) -> Vec<VertexCandidate> {
    let mut found = Vec::new();
    for (idx, v) in skeleton.iter() {
        if !v.is_edge {
            continue;
        }
        let n = diagram_neighbor_count(skeleton, idx);
        if n == 1 || n >= config.min_junction_neighbors {
            found.push(VertexCandidate { voxel: idx, distance: v.distance as f64 });
        }
    }
    skeleton.for_each_mut(|_, v| {
        v.is_vertex = false;
        v.vertex_id = None;
    });
    for c in &found {
        skeleton.get_mut(c.voxel).expect("listed voxel").is_vertex = true;
    }
    found
}

/// Greedy pruning in descending clearance (ties by scan order): each
/// surviving vertex removes every not-yet-processed vertex within `r_prune`.
pub fn prune_vertices(candidates: &[VertexCandidate], r_prune: f64, voxel_size: f64) -> Vec<VertexCandidate> {
    let items: Vec<(Point3<f64>, usize)> =
        candidates.iter().enumerate().map(|(i, c)| (c.voxel.center(voxel_size), i)).collect();
    let tree = KdTree::build(&items);
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| {
        candidates[b]
            .distance
            .total_cmp(&candidates[a].distance)
            .then(candidates[a].voxel.cmp(&candidates[b].voxel))
    });
    let mut removed = vec![false; candidates.len()];
    let mut kept = Vec::new();
    for i in order {
        if removed[i] {
            continue;
        }
        kept.push(i);
        for (j, _) in tree.within_radius(&items[i].0, r_prune) {
            if j != i {
                removed[j] = true;
            }
        }
    }
    kept.sort_by(|&a, &b| candidates[a].voxel.cmp(&candidates[b].voxel));
    kept.into_iter().map(|i| candidates[i]).collect()
}

/// Writes the pruned vertex set into the skeleton and starts a graph from it.
pub fn init_graph(skeleton: &mut SkeletonLayer, vertices: &[VertexCandidate]) -> SparseGraph {
    let mut g = SparseGraph::new(skeleton.voxel_size());
    skeleton.for_each_mut(|_, v| {
        v.is_vertex = false;
        v.vertex_id = None;
    });
    for c in vertices {
        let id = g.add_vertex(c.voxel, c.distance);
        let v = skeleton.get_mut(c.voxel).expect("vertex voxel exists");
        v.is_vertex = true;
        v.vertex_id = Some(id);
    }
    g
}

fn unit(v: Vector3<f64>) -> Vector3<f64> {
    let n = v.norm();
    if n > 0.0 {
        v / n
    } else {
        v
    }
}

/// Step preference: `(v̂_d − r̂_d)·(−n̂_d)`, lower is better. `v_d` is the last
/// step, `r_d` points from the current voxel back to the origin vertex and
/// `n_d` is the candidate step, all normalized.
pub fn step_cost(v_d: GridIndex, r_d: GridIndex, n_d: GridIndex) -> f64 {
    (unit(v_d.to_vector()) - unit(r_d.to_vector())).dot(&-unit(n_d.to_vector()))
}

fn vertex_at(skeleton: &SkeletonLayer, i: GridIndex) -> Option<u32> {
    skeleton.get(i).and_then(|v| if v.is_edge { v.vertex_id } else { None })
}

/// Walks the diagram from `origin` through `first` until another vertex
/// voxel is reached; returns that vertex and the route.
fn follow_from(skeleton: &SkeletonLayer, origin: GridIndex, first: GridIndex) -> Option<(u32, Vec<GridIndex>)> {
    let origin_id = vertex_at(skeleton, origin);
    if let Some(id) = vertex_at(skeleton, first) {
        return (Some(id) != origin_id).then(|| (id, vec![origin, first]));
    }
    let mut parent: FxHashMap<GridIndex, GridIndex> = FxHashMap::default();
    let mut visited: FxHashSet<GridIndex> = FxHashSet::default();
    let mut pending: Vec<GridIndex> = Vec::new();
    visited.insert(origin);
    visited.insert(first);
    parent.insert(first, origin);
    let mut current = Some(first);
    let rebuild = |end: GridIndex, parent: &FxHashMap<GridIndex, GridIndex>| {
        let mut path = vec![end];
        let mut c = end;
        while c != origin {
            c = parent[&c];
            path.push(c);
        }
        path.reverse();
        path
    };
    while let Some(cur) = current {
        let mut cands: Vec<GridIndex> = Vec::new();
        for o in OFFSETS_26 {
            let n = cur + o;
            if visited.contains(&n) || !on_diagram(skeleton, n) {
                continue;
            }
            if let Some(id) = vertex_at(skeleton, n) {
                if Some(id) != origin_id {
                    parent.insert(n, cur);
                    return Some((id, rebuild(n, &parent)));
                }
                continue;
            }
            cands.push(n);
        }
        if cands.is_empty() {
            current = None;
            while let Some(p) = pending.pop() {
                if !visited.contains(&p) {
                    visited.insert(p);
                    current = Some(p);
                    break;
                }
            }
            continue;
        }
        let v_d = cur - parent[&cur];
        let r_d = origin - cur;
        cands.sort_by(|a, b| {
            step_cost(v_d, r_d, *a - cur)
                .total_cmp(&step_cost(v_d, r_d, *b - cur))
                .then(a.cmp(b))
        });
        // Worst first onto the stack so the runner-up is tried next.
        for &c in cands[1..].iter().rev() {
            parent.entry(c).or_insert(cur);
            pending.push(c);
        }
        let next = cands[0];
        parent.insert(next, cur);
        visited.insert(next);
        current = Some(next);
    }
    None
}

fn shared_fraction(a: &[GridIndex], b: &[GridIndex]) -> f64 {
    let set: FxHashSet<&GridIndex> = a.iter().collect();
    let shared = b.iter().filter(|i| set.contains(i)).count();
    shared as f64 / a.len().min(b.len()).max(1) as f64
}

/// Follows the diagram out of every vertex along each adjacent diagram voxel
/// and adds one edge per distinct route. A route between an already joined
/// pair is kept only if it shares less than half of its voxels with every
/// existing route between them.
pub fn follow_edges(skeleton: &SkeletonLayer, graph: &mut SparseGraph) {
    for vid in 0..graph.vertices.len() as u32 {
        let origin = graph.vertices[vid as usize].voxel;
        for o in OFFSETS_26 {
            let first = origin + o;
            if !on_diagram(skeleton, first) {
                continue;
            }
            let Some((end, path)) = follow_from(skeleton, origin, first) else { continue };
            let duplicate = graph.vertices[vid as usize].edges.iter().any(|&e| {
                let e = &graph.edges[e as usize];
                e.other(vid) == end && shared_fraction(&e.path, &path) >= 0.5
            });
            if !duplicate {
                graph.add_edge(vid, end, path);
            }
        }
    }
}

/// Shortest 26-connected route through diagram voxels, costed in meters.
pub fn diagram_astar(skeleton: &SkeletonLayer, start: GridIndex, goal: GridIndex) -> Option<(Vec<GridIndex>, f64)> {
    diagram_astar_counts(skeleton, start, goal).map(|(p, c)| (p, c.value() * skeleton.voxel_size()))
}

pub(crate) fn diagram_astar_counts(skeleton: &SkeletonLayer, start: GridIndex, goal: GridIndex) -> Option<(Vec<GridIndex>, StepCounts)> {
    if !on_diagram(skeleton, start) || !on_diagram(skeleton, goal) {
        return None;
    }
    let out = grid_astar(start, Some(goal), |i| i == goal, |_, i| on_diagram(skeleton, i));
    out.path.map(|p| (p.voxels, p.steps))
}

fn segment_distance(p: &Point3<f64>, a: &Point3<f64>, b: &Point3<f64>) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let t = if len2 > 0.0 { ((p - a).dot(&ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (p - (a + ab * t)).norm()
}

/// Largest distance of a route's voxel centers from the straight segment
/// between its first and last voxel, with the position where it occurs.
pub fn max_deviation(path: &[GridIndex], voxel_size: f64) -> (f64, usize) {
    let a = path[0].center(voxel_size);
    let b = path[path.len() - 1].center(voxel_size);
    let mut best = (0.0, 0);
    for (k, i) in path.iter().enumerate() {
        let d = segment_distance(&i.center(voxel_size), &a, &b);
        if d > best.0 {
            best = (d, k);
        }
    }
    best
}

fn register_vertex(graph: &mut SparseGraph, skeleton: &mut SkeletonLayer, voxel: GridIndex) -> u32 {
    let v = skeleton.get(voxel).copied().unwrap_or_default();
    let id = graph.add_vertex(voxel, v.distance as f64);
    let s = skeleton.get_mut(voxel).expect("diagram voxel exists");
    s.is_vertex = true;
    s.vertex_id = Some(id);
    id
}

/// Splits edges whose route strays more than the deviation limit from the
/// straight line, until every edge complies or the pass cap is hit. Returns
/// the number of passes that changed the graph.
pub fn split_edges(graph: &mut SparseGraph, skeleton: &mut SkeletonLayer, config: &GraphConfig) -> usize {
    let s = graph.voxel_size;
    let limit = config.deviation_limit(s);
    let mut changed_passes = 0;
    for _ in 0..config.max_split_passes {
        let mut changed = false;
        let mut removed: FxHashSet<u32> = FxHashSet::default();
        let count = graph.edges.len();
        for eid in 0..count as u32 {
            let e = graph.edges[eid as usize].clone();
            let (dev, k) = max_deviation(&e.path, s);
            if dev <= limit {
                continue;
            }
            let corner = e.path[k];
            let corner_pos = corner.center(s);
            // Prefer rerouting through an existing nearby vertex.
            let mut nearby: Vec<(f64, u32)> = graph
                .vertices
                .iter()
                .filter(|v| v.id != e.start && v.id != e.end)
                .map(|v| ((Point3::from(v.position) - corner_pos).norm(), v.id))
                .filter(|(d, _)| *d <= config.r_prune)
                .collect();
            nearby.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let a = graph.vertices[e.start as usize].voxel;
            let b = graph.vertices[e.end as usize].voxel;
            let mut rerouted = false;
            for (_, w) in nearby {
                let wv = graph.vertices[w as usize].voxel;
                let (Some((pa, _)), Some((pb, _))) =
                    (diagram_astar_counts(skeleton, a, wv), diagram_astar_counts(skeleton, wv, b))
                else {
                    continue;
                };
                let new_dev = max_deviation(&pa, s).0.max(max_deviation(&pb, s).0);
                if new_dev < dev {
                    if !graph.has_edge_between(e.start, w) {
                        graph.add_edge(e.start, w, pa);
                    }
                    if !graph.has_edge_between(w, e.end) {
                        graph.add_edge(w, e.end, pb);
                    }
                    rerouted = true;
                    break;
                }
            }
            if !rerouted {
                let m = match vertex_at(skeleton, corner) {
                    Some(id) => id,
                    None => register_vertex(graph, skeleton, corner),
                };
                graph.add_edge(e.start, m, e.path[..=k].to_vec());
                graph.add_edge(m, e.end, e.path[k..].to_vec());
            }
            removed.insert(eid);
            changed = true;
        }
        if !removed.is_empty() {
            graph.retain(|_| true, |e| !removed.contains(&e.id));
        }
        if !changed {
            break;
        }
        changed_passes += 1;
    }
    changed_passes
}

fn diagram_component_labels(skeleton: &SkeletonLayer) -> FxHashMap<GridIndex, u32> {
    let mut label: FxHashMap<GridIndex, u32> = FxHashMap::default();
    let mut next = 0;
    for (idx, v) in skeleton.iter() {
        if !v.is_edge || label.contains_key(&idx) {
            continue;
        }
        label.insert(idx, next);
        let mut stack = vec![idx];
        while let Some(c) = stack.pop() {
            for o in OFFSETS_26 {
                let n = c + o;
                if on_diagram(skeleton, n) && !label.contains_key(&n) {
                    label.insert(n, next);
                    stack.push(n);
                }
            }
        }
        next += 1;
    }
    label
}

/// Removes isolated vertices, then joins subgraphs that share a diagram
/// component: a diagram A* route between representatives of two subgraphs
/// is walked and an edge is added wherever consecutive vertex voxels on it
/// belong to different subgraphs. New edges are split afterwards. Returns
/// the number of edges added.
pub fn repair_subgraphs(graph: &mut SparseGraph, skeleton: &mut SkeletonLayer, config: &GraphConfig) -> usize {
    if graph.vertices.iter().any(|v| v.edges.is_empty()) {
        graph.retain(|v| !v.edges.is_empty(), |_| true);
        sync_skeleton(graph, skeleton);
    }
    graph.label_subgraphs();
    let diagram_label = diagram_component_labels(skeleton);
    let mut added = 0;
    loop {
        // Representatives: lowest vertex id of each subgraph, grouped by
        // diagram component.
        let mut reps: BTreeMap<u32, u32> = BTreeMap::new();
        for v in &graph.vertices {
            reps.entry(v.subgraph).or_insert(v.id);
        }
        let mut by_component: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
        for &v in reps.values() {
            let c = diagram_label[&graph.vertices[v as usize].voxel];
            by_component.entry(c).or_default().push(v);
        }
        let Some(pair) = by_component.values().find(|r| r.len() >= 2).map(|r| (r[0], r[1])) else {
            break;
        };
        let (a, b) = (graph.vertices[pair.0 as usize].voxel, graph.vertices[pair.1 as usize].voxel);
        let (path, _) = diagram_astar_counts(skeleton, a, b).expect("same diagram component");
        let mut last: Option<(u32, usize)> = None;
        for (k, voxel) in path.iter().enumerate() {
            let Some(id) = vertex_at(skeleton, *voxel) else { continue };
            if let Some((prev, pk)) = last {
                if graph.vertices[prev as usize].subgraph != graph.vertices[id as usize].subgraph
                    && !graph.has_edge_between(prev, id)
                {
                    graph.add_edge(prev, id, path[pk..=k].to_vec());
                    added += 1;
                    graph.label_subgraphs();
                }
            }
            last = Some((id, k));
        }
        graph.label_subgraphs();
    }
    if added > 0 {
        split_edges(graph, skeleton, config);
        graph.label_subgraphs();
    }
    added
}

/// Rewrites vertex flags and ids in the skeleton from the graph.
pub fn sync_skeleton(graph: &SparseGraph, skeleton: &mut SkeletonLayer) {
    skeleton.for_each_mut(|_, v| {
        v.is_vertex = false;
        v.vertex_id = None;
    });
    for v in &graph.vertices {
        if let Some(s) = skeleton.get_mut(v.voxel) {
            s.is_vertex = true;
            s.vertex_id = Some(v.id);
        }
    }
}

/// Computes every edge's straight-line clearance and flag.
pub fn annotate_clearance(graph: &mut SparseGraph, esdf: &EsdfLayer, config: &GraphConfig) {
    for i in 0..graph.edges.len() {
        let (a, b) = (graph.edges[i].start, graph.edges[i].end);
        let c = segment_clearance(esdf, &graph.position(a), &graph.position(b));
        graph.edges[i].clearance = c;
        graph.edges[i].flagged = c < config.edge_clearance;
    }
}

/// Full sparse-graph construction from a thinned skeleton.
pub fn build_graph(skeleton: &mut SkeletonLayer, esdf: &EsdfLayer, config: &GraphConfig) -> Result<SparseGraph, GraphError> {
    config.validate()?;
    let candidates = extract_vertices(skeleton, config);
    let kept = prune_vertices(&candidates, config.r_prune, skeleton.voxel_size());
    let mut graph = init_graph(skeleton, &kept);
    follow_edges(skeleton, &mut graph);
    split_edges(&mut graph, skeleton, config);
    repair_subgraphs(&mut graph, skeleton, config);
    annotate_clearance(&mut graph, esdf, config);
    Ok(graph)
}
