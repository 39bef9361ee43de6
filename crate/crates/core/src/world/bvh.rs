//! Bounding volume hierarchy over the bounded primitives of a world.

use nalgebra::{Point3, Vector3};

use super::{Aabb, Primitive};

const LEAF_SIZE: usize = 4;

#[derive(Clone, Debug)]
enum Node {
    Leaf { aabb: Aabb, items: Vec<usize> },
    Inner { aabb: Aabb, left: usize, right: usize },
}

impl Node {
    fn aabb(&self) -> &Aabb {
        match self {
            Node::Leaf { aabb, .. } | Node::Inner { aabb, .. } => aabb,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub(crate) struct Bvh {
    nodes: Vec<Node>,
    root: Option<usize>,
    unbounded: Vec<usize>,
}

impl Bvh {
    pub fn build(prims: &[Primitive]) -> Self {
        let mut bvh = Bvh::default();
        let mut bounded = Vec::new();
        for (i, p) in prims.iter().enumerate() {
            match p.aabb() {
                Some(b) => bounded.push((i, b)),
                None => bvh.unbounded.push(i),
            }
        }
        if !bounded.is_empty() {
            bvh.root = Some(bvh.build_node(&mut bounded));
        }
        bvh
    }

    fn build_node(&mut self, items: &mut [(usize, Aabb)]) -> usize {
        let aabb = items[1..].iter().fold(items[0].1, |acc, (_, b)| acc.union(b));
        if items.len() <= LEAF_SIZE {
            self.nodes.push(Node::Leaf {
                aabb,
                items: items.iter().map(|(i, _)| *i).collect(),
            });
            return self.nodes.len() - 1;
        }
        let axis = aabb.extent().imax();
        items.sort_by(|a, b| {
            let ca = a.1.min[axis] + a.1.max[axis];
            let cb = b.1.min[axis] + b.1.max[axis];
            ca.total_cmp(&cb).then(a.0.cmp(&b.0))
        });
        let mid = items.len() / 2;
        let (l, r) = items.split_at_mut(mid);
        let left = self.build_node(l);
        let right = self.build_node(r);
        self.nodes.push(Node::Inner { aabb, left, right });
        self.nodes.len() - 1
    }

    pub fn unbounded(&self) -> &[usize] {
        &self.unbounded
    }

    /// Lowers `best` to the minimum signed distance among bounded primitives.
    pub fn nearest(&self, p: &Point3<f64>, prims: &[Primitive], best: &mut (f64, Point3<f64>)) {
        let Some(root) = self.root else { return };
        let mut stack = vec![root];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            let lb = node.aabb().distance(p);
            if lb > 0.0 && lb >= best.0 {
                continue;
            }
            match node {
                Node::Leaf { items, .. } => {
                    for &i in items {
                        let r = prims[i].distance_and_closest(p);
                        if r.0 < best.0 {
                            *best = r;
                        }
                    }
                }
                Node::Inner { left, right, .. } => {
                    // Visit the closer child first.
                    let dl = self.nodes[*left].aabb().distance(p);
                    let dr = self.nodes[*right].aabb().distance(p);
                    if dl <= dr {
                        stack.push(*right);
                        stack.push(*left);
                    } else {
                        stack.push(*left);
                        stack.push(*right);
                    }
                }
            }
        }
    }

    /// Lowers `best` to the first ray hit among bounded primitives.
    pub fn ray_cast(&self, origin: &Point3<f64>, dir: &Vector3<f64>, prims: &[Primitive], best: &mut f64) {
        let Some(root) = self.root else { return };
        let inv = dir.map(|d| 1.0 / d);
        let mut stack = vec![root];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            match node.aabb().ray_interval(origin, &inv) {
                Some((t0, _)) if t0 < *best => {}
                _ => continue,
            }
            match node {
                Node::Leaf { items, .. } => {
                    for &i in items {
                        if let Some(t) = prims[i].ray_hit(origin, dir) {
                            if t < *best {
                                *best = t;
                            }
                        }
                    }
                }
                Node::Inner { left, right, .. } => {
                    let tl = self.nodes[*left].aabb().ray_interval(origin, &inv).map(|t| t.0);
                    let tr = self.nodes[*right].aabb().ray_interval(origin, &inv).map(|t| t.0);
                    let near_left = match (tl, tr) {
                        (Some(a), Some(b)) => a <= b,
                        (Some(_), None) => true,
                        _ => false,
                    };
                    if near_left {
                        stack.push(*right);
                        stack.push(*left);
                    } else {
                        stack.push(*left);
                        stack.push(*right);
                    }
                }
            }
        }
    }
}
