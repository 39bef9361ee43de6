//! Brute-force reference implementations for the integration tests. They
//! deliberately share no logic with the library beyond storage access.
#![allow(dead_code)]

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet, VecDeque};

use voxskel::layers::EsdfLayer;
use voxskel::voxel::{GridIndex, Neighborhood};

pub mod fixtures;

pub type Cell = [i64; 3];

fn add(a: Cell, b: Cell) -> Cell {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

/// Non-zero offsets in {-1, 0, 1}³ with at most `max_l1` non-zero components
/// (1: faces, 2: faces and edges, 3: all 26).
pub fn unit_offsets(max_l1: i64) -> Vec<Cell> {
    let mut out = Vec::new();
    for z in -1..=1i64 {
        for y in -1..=1i64 {
            for x in -1..=1i64 {
                let l1 = x.abs() + y.abs() + z.abs();
                if l1 > 0 && l1 <= max_l1 {
                    out.push([x, y, z]);
                }
            }
        }
    }
    out
}

/// Connected components of `cells` under the given adjacency, each as a set.
pub fn components(cells: &HashSet<Cell>, max_l1: i64) -> Vec<HashSet<Cell>> {
    let offsets = unit_offsets(max_l1);
    let mut seen: HashSet<Cell> = HashSet::new();
    let mut out = Vec::new();
    let mut sorted: Vec<Cell> = cells.iter().copied().collect();
    sorted.sort_unstable();
    for c in sorted {
        if !seen.insert(c) {
            continue;
        }
        let mut comp = HashSet::from([c]);
        let mut queue = VecDeque::from([c]);
        while let Some(p) = queue.pop_front() {
            for o in &offsets {
                let q = add(p, *o);
                if cells.contains(&q) && seen.insert(q) {
                    comp.insert(q);
                    queue.push_back(q);
                }
            }
        }
        out.push(comp);
    }
    out
}

pub fn count_components(cells: &HashSet<Cell>, max_l1: i64) -> usize {
    components(cells, max_l1).len()
}

/// Inclusive bounding box of `cells` grown by `pad`.
pub fn bounding_box(cells: &HashSet<Cell>, pad: i64) -> (Cell, Cell) {
    let mut lo = [i64::MAX; 3];
    let mut hi = [i64::MIN; 3];
    for c in cells {
        for k in 0..3 {
            lo[k] = lo[k].min(c[k] - pad);
            hi[k] = hi[k].max(c[k] + pad);
        }
    }
    (lo, hi)
}

/// 6-connected components of the complement of `cells` inside `(lo, hi)`.
pub fn background_components_in(cells: &HashSet<Cell>, lo: Cell, hi: Cell) -> usize {
    let mut bg = HashSet::new();
    for z in lo[2]..=hi[2] {
        for y in lo[1]..=hi[1] {
            for x in lo[0]..=hi[0] {
                if !cells.contains(&[x, y, z]) {
                    bg.insert([x, y, z]);
                }
            }
        }
    }
    count_components(&bg, 1)
}

/// Background 6-components inside the bounding box grown by one voxel, so the
/// outside counts as a single component.
pub fn background_components(cells: &HashSet<Cell>) -> usize {
    if cells.is_empty() {
        return 1;
    }
    let (lo, hi) = bounding_box(cells, 1);
    background_components_in(cells, lo, hi)
}

/// Euler characteristic of the union of closed unit cubes, by counting the
/// distinct vertices, edges, faces and cubes of the cubical complex.
pub fn euler_characteristic(cells: &HashSet<Cell>) -> i64 {
    // In doubled coordinates the cube at c spans 2c..=2c+2; a sub-cell's
    // dimension is the number of odd coordinates.
    let mut faces: HashSet<Cell> = HashSet::new();
    for c in cells {
        for dz in 0..3 {
            for dy in 0..3 {
                for dx in 0..3 {
                    faces.insert([2 * c[0] + dx, 2 * c[1] + dy, 2 * c[2] + dz]);
                }
            }
        }
    }
    faces
        .iter()
        .map(|f| {
            let dim = f.iter().filter(|v| v.rem_euclid(2) == 1).count();
            if dim % 2 == 0 {
                1
            } else {
                -1
            }
        })
        .sum()
}

/// Cells set in a 3×3×3 neighborhood, excluding the center, as offsets.
pub fn neighborhood_cells(n: Neighborhood) -> HashSet<Cell> {
    let mut out = HashSet::new();
    for z in -1..=1 {
        for y in -1..=1 {
            for x in -1..=1 {
                if (x, y, z) != (0, 0, 0) && n.get(GridIndex::new(x, y, z)) {
                    out.insert([x, y, z]);
                }
            }
        }
    }
    out
}

/// Simple-point test by global census: place the neighborhood in an empty
/// 5³ grid and compare 26-connected foreground components, 6-connected
/// background components and the Euler characteristic with and without
/// the center.
pub fn simple_by_census(n: Neighborhood) -> bool {
    let mut grid = [false; 125];
    for z in -1..=1 {
        for y in -1..=1 {
            for x in -1..=1 {
                if (x, y, z) != (0, 0, 0) && n.get(GridIndex::new(x, y, z)) {
                    grid[grid_slot([x, y, z])] = true;
                }
            }
        }
    }
    let without = census(&grid);
    grid[grid_slot([0, 0, 0])] = true;
    census(&grid) == without
}

fn grid_slot(c: Cell) -> usize {
    ((c[0] + 2) + 5 * (c[1] + 2) + 25 * (c[2] + 2)) as usize
}

/// Flood-fill component count over the cells of a 5³ grid equal to `value`.
fn grid_components(grid: &[bool; 125], value: bool, offsets: &[Cell]) -> usize {
    let mut seen = [false; 125];
    let mut count = 0;
    let mut stack = Vec::new();
    for start in 0..125usize {
        if grid[start] != value || seen[start] {
            continue;
        }
        count += 1;
        seen[start] = true;
        stack.push(start);
        while let Some(i) = stack.pop() {
            let c = [i as i64 % 5 - 2, (i as i64 / 5) % 5 - 2, i as i64 / 25 - 2];
            for o in offsets {
                let q = add(c, *o);
                if q.iter().all(|v| (-2..=2).contains(v)) {
                    let j = grid_slot(q);
                    if grid[j] == value && !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
    }
    count
}

/// (26-foreground components, 6-background components, Euler characteristic).
fn census(grid: &[bool; 125]) -> (usize, usize, i64) {
    thread_local! {
        static OFFSETS: (Vec<Cell>, Vec<Cell>) = (unit_offsets(3), unit_offsets(1));
    }
    let cells: HashSet<Cell> = (0..125usize)
        .filter(|&i| grid[i])
        .map(|i| [i as i64 % 5 - 2, (i as i64 / 5) % 5 - 2, i as i64 / 25 - 2])
        .collect();
    OFFSETS.with(|(o26, o6)| (grid_components(grid, true, o26), grid_components(grid, false, o6), euler_characteristic(&cells)))
}

/// Step counts (face, edge, corner) of a shortest 26-connected path found by
/// plain Dijkstra. Optimal costs have unique step counts since 1, √2 and √3
/// are linearly independent over the rationals.
pub fn dijkstra_steps(start: Cell, goal: Cell, mut passable: impl FnMut(Cell, Cell) -> bool) -> Option<[u32; 3]> {
    let offsets = unit_offsets(3);
    let cost_of = |o: &Cell| ((o[0] * o[0] + o[1] * o[1] + o[2] * o[2]) as f64).sqrt();
    let mut dist: HashMap<Cell, (f64, [u32; 3])> = HashMap::from([(start, (0.0, [0; 3]))]);
    let mut done: HashSet<Cell> = HashSet::new();
    let mut heap = BinaryHeap::from([Reverse((0u64, start))]);
    while let Some(Reverse((bits, c))) = heap.pop() {
        if !done.insert(c) {
            continue;
        }
        let (d, steps) = dist[&c];
        debug_assert_eq!(d.to_bits(), bits);
        if c == goal {
            return Some(steps);
        }
        for o in &offsets {
            let q = add(c, *o);
            if done.contains(&q) || !passable(c, q) {
                continue;
            }
            let nd = d + cost_of(o);
            if dist.get(&q).is_none_or(|(old, _)| nd < *old) {
                let mut ns = steps;
                ns[(o[0].abs() + o[1].abs() + o[2].abs() - 1) as usize] += 1;
                dist.insert(q, (nd, ns));
                // Non-negative f64 order equals the order of their bit patterns.
                heap.push(Reverse((nd.to_bits(), q)));
            }
        }
    }
    None
}

pub fn steps_value(steps: [u32; 3]) -> f64 {
    steps[0] as f64 + steps[1] as f64 * 2f64.sqrt() + steps[2] as f64 * 3f64.sqrt()
}

/// Step counts of a voxel path.
pub fn path_steps(path: &[Cell]) -> [u32; 3] {
    let mut out = [0u32; 3];
    for w in path.windows(2) {
        let l1: i64 = (0..3).map(|k| (w[1][k] - w[0][k]).abs()).sum();
        let linf = (0..3).map(|k| (w[1][k] - w[0][k]).abs()).max().unwrap();
        assert_eq!(linf, 1, "not a unit step: {:?} -> {:?}", w[0], w[1]);
        out[(l1 - 1) as usize] += 1;
    }
    out
}

/// ESDF distance at a voxel; unknown is `-inf`.
pub fn clearance(esdf: &EsdfLayer, c: Cell) -> f64 {
    match esdf.get(GridIndex::new(c[0], c[1], c[2])) {
        Some(v) if v.observed => v.distance as f64,
        _ => f64::NEG_INFINITY,
    }
}

/// Minimum clearance over evenly spaced samples at most half a voxel apart
/// on the segment between two points, endpoints included.
pub fn sampled_clearance(esdf: &EsdfLayer, a: [f64; 3], b: [f64; 3]) -> f64 {
    let s = esdf.voxel_size();
    let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2) + (b[2] - a[2]).powi(2)).sqrt();
    let n = ((len / (0.5 * s)).ceil() as usize).max(1);
    (0..=n)
        .map(|k| {
            let t = k as f64 / n as f64;
            let p: Cell = std::array::from_fn(|i| ((a[i] + (b[i] - a[i]) * t) / s).floor() as i64);
            clearance(esdf, p)
        })
        .fold(f64::INFINITY, f64::min)
}

pub fn center(c: Cell, s: f64) -> [f64; 3] {
    std::array::from_fn(|k| (c[k] as f64 + 0.5) * s)
}

/// Grid step rule for a spherical robot: the target voxel is known with
/// clearance ≥ `radius` and so is the straight segment between the centers.
pub fn step_free(esdf: &EsdfLayer, from: Cell, to: Cell, radius: f64) -> bool {
    let s = esdf.voxel_size();
    clearance(esdf, to) >= radius && sampled_clearance(esdf, center(from, s), center(to, s)) >= radius
}

pub fn to_cell(i: GridIndex) -> Cell {
    [i.x, i.y, i.z]
}

/// Shortest path cost over an undirected weighted edge list by Dijkstra with
/// a linear-scan minimum.
pub fn graph_shortest(n: usize, edges: &[(usize, usize, f64)], from: usize, to: usize) -> Option<f64> {
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    dist[from] = 0.0;
    loop {
        let u = (0..n).filter(|&i| !done[i] && dist[i].is_finite()).min_by(|&a, &b| dist[a].total_cmp(&dist[b]))?;
        if u == to {
            return Some(dist[u]);
        }
        done[u] = true;
        for &(a, b, w) in edges {
            let v = if a == u { b } else if b == u { a } else { continue };
            dist[v] = dist[v].min(dist[u] + w);
        }
    }
}
