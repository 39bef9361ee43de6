//! Recursive-backtracker mazes built from wall boxes.

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Aabb, Primitive, PrimitiveWorld, WorldError};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MazeSpec {
    /// Side length of the square maze in meters.
    pub side: f64,
    pub wall_height: f64,
    /// Corridor cell pitch in meters (wall center to wall center).
    pub cell: f64,
    pub wall_thickness: f64,
    pub seed: u64,
}

impl Default for MazeSpec {
    fn default() -> Self {
        Self {
            side: 30.0,
            wall_height: 2.0,
            cell: 1.5,
            wall_thickness: 0.2,
            seed: 0,
        }
    }
}

impl MazeSpec {
    /// Half-scale maze used by the benchmarks.
    pub fn desk() -> Self {
        Self { side: 15.0, ..Self::default() }
    }

    pub fn cells_per_side(&self) -> usize {
        (self.side / self.cell).floor() as usize
    }

    pub fn validate(&self) -> Result<(), WorldError> {
        let ok = self.side > 0.0
            && self.wall_height > 0.0
            && self.wall_thickness > 0.0
            && self.cell > self.wall_thickness
            && self.cells_per_side() >= 1;
        if ok {
            Ok(())
        } else {
            Err(WorldError::InvalidConfig(format!("bad maze spec {self:?}")))
        }
    }

    /// Center of cell (i, j) at half wall height.
    pub fn cell_center(&self, i: usize, j: usize) -> [f64; 3] {
        [
            (i as f64 + 0.5) * self.cell,
            (j as f64 + 0.5) * self.cell,
            0.5 * self.wall_height,
        ]
    }
}

/// Open passages of an n×n maze. `east[j][i]` joins (i, j) and (i + 1, j);
/// `north[j][i]` joins (i, j) and (i, j + 1).
#[derive(Clone, Debug, PartialEq)]
pub struct MazeLayout {
    pub n: usize,
    pub east: Vec<Vec<bool>>,
    pub north: Vec<Vec<bool>>,
}

impl MazeLayout {
    pub fn carve(n: usize, seed: u64) -> Self {
        let mut east = vec![vec![false; n]; n];
        let mut north = vec![vec![false; n]; n];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut visited = vec![vec![false; n]; n];
        let mut stack = vec![(0usize, 0usize)];
        visited[0][0] = true;
        while let Some(&(i, j)) = stack.last() {
            let mut options: Vec<(usize, usize)> = Vec::with_capacity(4);
            if i > 0 && !visited[j][i - 1] {
                options.push((i - 1, j));
            }
            if i + 1 < n && !visited[j][i + 1] {
                options.push((i + 1, j));
            }
            if j > 0 && !visited[j - 1][i] {
                options.push((i, j - 1));
            }
            if j + 1 < n && !visited[j + 1][i] {
                options.push((i, j + 1));
            }
            let Some(&(ni, nj)) = options.choose(&mut rng) else {
                stack.pop();
                continue;
            };
            if ni != i {
                east[j][i.min(ni)] = true;
            } else {
                north[j.min(nj)][i] = true;
            }
            visited[nj][ni] = true;
            stack.push((ni, nj));
        }
        Self { n, east, north }
    }

    /// Number of cells reachable from (0, 0) through open passages.
    pub fn reachable_cells(&self) -> usize {
        let n = self.n;
        let mut seen = vec![vec![false; n]; n];
        let mut stack = vec![(0usize, 0usize)];
        seen[0][0] = true;
        let mut count = 0;
        while let Some((i, j)) = stack.pop() {
            count += 1;
            let mut push = |a: usize, b: usize, open: bool| {
                if open && !seen[b][a] {
                    seen[b][a] = true;
                    stack.push((a, b));
                }
            };
            if i + 1 < n {
                push(i + 1, j, self.east[j][i]);
            }
            if i > 0 {
                push(i - 1, j, self.east[j][i - 1]);
            }
            if j + 1 < n {
                push(i, j + 1, self.north[j][i]);
            }
            if j > 0 {
                push(i, j - 1, self.north[j - 1][i]);
            }
        }
        count
    }
}

/// Builds the maze world: ground, ceiling, boundary walls and the interior
/// walls left standing by the carve. Collinear wall segments are merged and
/// every wall is extended by half its thickness at both ends so corners close.
pub fn generate_maze(spec: &MazeSpec) -> Result<PrimitiveWorld, WorldError> {
    spec.validate()?;
    let n = spec.cells_per_side();
    let layout = MazeLayout::carve(n, spec.seed);
    let c = spec.cell;
    let t = spec.wall_thickness;
    let h = spec.wall_height;
    let len = n as f64 * c;

    let mut prims = vec![Primitive::Ground { height: 0.0 }, Primitive::Ceiling { height: h }];
    // Walls perpendicular to x sit on the lines x = k·c; a wall segment on
    // line k spanning cell row j is present unless the passage is open.
    let mut push_runs = |present: &dyn Fn(usize, usize) -> bool, along_y: bool| {
        for k in 0..=n {
            let mut j = 0;
            while j < n {
                if !present(k, j) {
                    j += 1;
                    continue;
                }
                let start = j;
                while j < n && present(k, j) {
                    j += 1;
                }
                let a = start as f64 * c - 0.5 * t;
                let b = j as f64 * c + 0.5 * t;
                let line = k as f64 * c;
                let (center, half_extents) = if along_y {
                    ([line, 0.5 * (a + b), 0.5 * h], [0.5 * t, 0.5 * (b - a), 0.5 * h])
                } else {
                    ([0.5 * (a + b), line, 0.5 * h], [0.5 * (b - a), 0.5 * t, 0.5 * h])
                };
                prims.push(Primitive::Box { center, half_extents });
            }
        }
    };
    push_runs(&|k, j| k == 0 || k == n || !layout.east[j][k - 1], true);
    push_runs(&|k, i| k == 0 || k == n || !layout.north[k - 1][i], false);

    let bounds = Aabb::new([-0.5 * t, -0.5 * t, -0.3], [len + 0.5 * t, len + 0.5 * t, h + 0.3]);
    Ok(PrimitiveWorld::new(prims, bounds))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Point3;

    #[test]
    fn carve_is_a_spanning_tree() {
        for seed in 0..5 {
            let l = MazeLayout::carve(8, seed);
            assert_eq!(l.reachable_cells(), 64);
            let open: usize = l.east.iter().chain(&l.north).flatten().filter(|o| **o).count();
            assert_eq!(open, 63);
        }
    }

    #[test]
    fn same_seed_same_world() {
        let spec = MazeSpec { side: 6.0, seed: 7, ..MazeSpec::default() };
        assert_eq!(generate_maze(&spec).unwrap().to_json(), generate_maze(&spec).unwrap().to_json());
        let other = MazeSpec { seed: 8, ..spec };
        assert_ne!(generate_maze(&spec).unwrap(), generate_maze(&other).unwrap());
    }

    #[test]
    fn walls_are_solid_and_bounded() {
        let spec = MazeSpec { side: 9.0, ..MazeSpec::default() };
        let w = generate_maze(&spec).unwrap();
        w.validate().unwrap();
        for p in &w.primitives {
            if let Some(b) = p.aabb() {
                assert!(w.bounds.contains_box(&b));
                let e = b.extent();
                assert!(e.min() >= spec.wall_thickness - 1e-12);
            }
        }
    }

    /// Geometric flood fill: two neighboring cells are joined iff the straight
    /// segment between their centers stays clear of the walls.
    #[test]
    fn corridor_cells_connected_geometrically() {
        let spec = MazeSpec { side: 12.0, seed: 3, ..MazeSpec::default() };
        let w = generate_maze(&spec).unwrap();
        let n = spec.cells_per_side();
        let clear = |a: [f64; 3], b: [f64; 3]| {
            (0..=50).all(|k| {
                let f = k as f64 / 50.0;
                let p = Point3::new(a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1]), a[2]);
                w.exact_distance(&p) > 0.0
            })
        };
        let mut seen = vec![false; n * n];
        let mut stack = vec![(0, 0)];
        seen[0] = true;
        while let Some((i, j)) = stack.pop() {
            let dirs: [(i64, i64); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
            for (di, dj) in dirs {
                let (ni, nj) = (i as i64 + di, j as i64 + dj);
                if ni < 0 || nj < 0 || ni >= n as i64 || nj >= n as i64 {
                    continue;
                }
                let (ni, nj) = (ni as usize, nj as usize);
                if !seen[nj * n + ni] && clear(spec.cell_center(i, j), spec.cell_center(ni, nj)) {
                    seen[nj * n + ni] = true;
                    stack.push((ni, nj));
                }
            }
        }
        assert!(seen.iter().all(|s| *s));
        // The outer boundary is closed.
        let outside = Point3::new(-0.05, 0.5 * spec.cell, 1.0);
        assert!(w.exact_distance(&outside) < 0.0);
    }
}
