//! 3-D k-d tree with balanced bulk construction and incremental insertion.

use nalgebra::Point3;

#[derive(Clone, Debug)]
struct Node {
    point: Point3<f64>,
    id: usize,
    axis: usize,
    left: Option<usize>,
    right: Option<usize>,
}

#[derive(Clone, Debug, Default)]
pub struct KdTree {
    nodes: Vec<Node>,
    root: Option<usize>,
}

impl KdTree {
    pub fn new() -> Self {
        Self::default()
    }

    /// Balanced tree over `(point, id)` pairs.
    pub fn build(items: &[(Point3<f64>, usize)]) -> Self {
        let mut tree = KdTree { nodes: Vec::with_capacity(items.len()), root: None };
        let mut items = items.to_vec();
        tree.root = tree.build_rec(&mut items, 0);
        tree
    }

    fn build_rec(&mut self, items: &mut [(Point3<f64>, usize)], depth: usize) -> Option<usize> {
        if items.is_empty() {
            return None;
        }
        let axis = depth % 3;
        items.sort_by(|a, b| a.0[axis].total_cmp(&b.0[axis]).then(a.1.cmp(&b.1)));
        let mid = items.len() / 2;
        let (point, id) = items[mid];
        let slot = self.nodes.len();
        self.nodes.push(Node { point, id, axis, left: None, right: None });
        let (lo, rest) = items.split_at_mut(mid);
        let left = self.build_rec(lo, depth + 1);
        let right = self.build_rec(&mut rest[1..], depth + 1);
        self.nodes[slot].left = left;
        self.nodes[slot].right = right;
        Some(slot)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn insert(&mut self, point: Point3<f64>, id: usize) {
        let slot = self.nodes.len();
        let Some(mut cur) = self.root else {
            self.nodes.push(Node { point, id, axis: 0, left: None, right: None });
            self.root = Some(slot);
            return;
        };
        loop {
            let n = &self.nodes[cur];
            let go_left = point[n.axis] < n.point[n.axis];
            let next = if go_left { n.left } else { n.right };
            match next {
                Some(c) => cur = c,
                None => {
                    let axis = (n.axis + 1) % 3;
                    self.nodes.push(Node { point, id, axis, left: None, right: None });
                    if go_left {
                        self.nodes[cur].left = Some(slot);
                    } else {
                        self.nodes[cur].right = Some(slot);
                    }
                    return;
                }
            }
        }
    }

    /// Closest item as `(id, distance)`; ties go to the lower id.
    pub fn nearest(&self, q: &Point3<f64>) -> Option<(usize, f64)> {
        self.k_nearest(q, 1).into_iter().next()
    }

    /// Up to `k` closest items sorted by distance, then id.
    pub fn k_nearest(&self, q: &Point3<f64>, k: usize) -> Vec<(usize, f64)> {
        let mut best: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
        if k == 0 {
            return Vec::new();
        }
        let mut stack: Vec<(usize, f64)> = self.root.map(|r| (r, 0.0)).into_iter().collect();
        while let Some((ni, bound)) = stack.pop() {
            if best.len() == k && bound > best[k - 1].0 {
                continue;
            }
            let n = &self.nodes[ni];
            let d2 = (n.point - q).norm_squared();
            let entry = (d2, n.id);
            if best.len() < k || entry < best[k - 1] {
                let pos = best.partition_point(|e| *e < entry);
                best.insert(pos, entry);
                best.truncate(k);
            }
            let diff = q[n.axis] - n.point[n.axis];
            let (near, far) = if diff < 0.0 { (n.left, n.right) } else { (n.right, n.left) };
            if let Some(f) = far {
                stack.push((f, diff * diff));
            }
            if let Some(c) = near {
                stack.push((c, bound));
            }
        }
        best.into_iter().map(|(d2, id)| (id, d2.sqrt())).collect()
    }

    /// All items within `radius` (inclusive), sorted by distance, then id.
    pub fn within_radius(&self, q: &Point3<f64>, radius: f64) -> Vec<(usize, f64)> {
        let r2 = radius * radius;
        let mut out = Vec::new();
        let mut stack: Vec<usize> = self.root.into_iter().collect();
        while let Some(ni) = stack.pop() {
            let n = &self.nodes[ni];
            let d2 = (n.point - q).norm_squared();
            if d2 <= r2 {
                out.push((d2, n.id));
            }
            let diff = q[n.axis] - n.point[n.axis];
            let (near, far) = if diff < 0.0 { (n.left, n.right) } else { (n.right, n.left) };
            if let Some(c) = near {
                stack.push(c);
            }
            if diff * diff <= r2 {
                if let Some(f) = far {
                    stack.push(f);
                }
            }
        }
        out.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        out.into_iter().map(|(d2, id)| (id, d2.sqrt())).collect()
    }
}
