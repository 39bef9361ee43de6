//! Best-first search over the 26-connected voxel grid.
//!
//! Path costs are kept as counts of face, edge and corner steps so that equal
//! routes produce bit-identical costs regardless of expansion order.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use rustc_hash::FxHashMap;

use crate::voxel::{GridIndex, OFFSETS_26};

const SQRT2: f64 = std::f64::consts::SQRT_2;
const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Path cost in voxel units as step counts by kind.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct StepCounts {
    pub face: u32,
    pub edge: u32,
    pub corner: u32,
}

impl StepCounts {
    pub fn value(&self) -> f64 {
        self.face as f64 + self.edge as f64 * SQRT2 + self.corner as f64 * SQRT3
    }

    pub fn step(mut self, offset: GridIndex) -> Self {
        match offset.norm_squared() {
            1 => self.face += 1,
            2 => self.edge += 1,
            3 => self.corner += 1,
            _ => panic!("not a unit grid step: {offset:?}"),
        }
        self
    }

    /// Cost of a 26-connected voxel path.
    pub fn of_path(path: &[GridIndex]) -> Self {
        path.windows(2).fold(Self::default(), |acc, w| acc.step(w[1] - w[0]))
    }
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

#[derive(Clone, Debug, PartialEq)]
pub struct GridPath {
    pub voxels: Vec<GridIndex>,
    pub steps: StepCounts,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchOutcome {
    pub path: Option<GridPath>,
    pub expansions: usize,
}

/// A* from `start` until a voxel satisfying `is_goal` is expanded.
///
/// `target` drives the straight-line heuristic (none gives Dijkstra). Only
/// steps accepted by `passable(from, to)` are taken; the start is always
/// accepted.
/// Ties on f prefer lower h, then the lower voxel in scan order.
pub fn grid_astar(
    start: GridIndex,
    target: Option<GridIndex>,
    mut is_goal: impl FnMut(GridIndex) -> bool,
    mut passable: impl FnMut(GridIndex, GridIndex) -> bool,
) -> SearchOutcome {
    let h = |i: GridIndex| target.map_or(0.0, |t| (t - i).norm());
    let mut best: FxHashMap<GridIndex, (StepCounts, GridIndex)> = FxHashMap::default();
    let mut closed: FxHashMap<GridIndex, StepCounts> = FxHashMap::default();
    let mut heap = BinaryHeap::new();
    best.insert(start, (StepCounts::default(), start));
    let h0 = h(start);
    heap.push(Reverse((Key(h0), Key(h0), start)));
    let mut expansions = 0;
    while let Some(Reverse((_, _, idx))) = heap.pop() {
        let g = best[&idx].0;
        if closed.get(&idx) == Some(&g) {
            continue;
        }
        closed.insert(idx, g);
        expansions += 1;
        if is_goal(idx) {
            let mut voxels = vec![idx];
            let mut cur = idx;
            while cur != start {
                cur = best[&cur].1;
                voxels.push(cur);
            }
            voxels.reverse();
            return SearchOutcome { path: Some(GridPath { voxels, steps: g }), expansions };
        }
        for o in OFFSETS_26 {
            let n = idx + o;
            let ng = g.step(o);
            let better = match best.get(&n) {
                Some((old, _)) => ng.value() < old.value(),
                None => true,
            };
            if !better || !passable(idx, n) {
                continue;
            }
            best.insert(n, (ng, idx));
            let hn = h(n);
            heap.push(Reverse((Key(ng.value() + hn), Key(hn), n)));
        }
    }
    SearchOutcome { path: None, expansions }
}
