//! Analytic worlds with exact distance queries, simulated depth sensing,
//! TSDF integration and ESDF construction.

mod bvh;
pub mod camera;
pub mod esdf;
pub mod maze;
pub mod scenes;
pub mod tsdf;

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use self::bvh::Bvh;

pub use camera::{render_depth, DepthCamera, DepthImage, Pose};
pub use esdf::{build_esdf, build_esdf_from_world, EsdfConfig};
pub use maze::{generate_maze, MazeSpec};
pub use tsdf::{integrate_tsdf, TsdfConfig};

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("no surface: the TSDF has no observed surface band")]
    NoSurface,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("world file error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Voxel(#[from] crate::voxel::VoxelError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Aabb {
    pub fn new(min: [f64; 3], max: [f64; 3]) -> Self {
        Self { min, max }
    }

    pub fn contains(&self, p: &Point3<f64>) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    pub fn contains_box(&self, other: &Aabb) -> bool {
        (0..3).all(|i| other.min[i] >= self.min[i] - 1e-9 && other.max[i] <= self.max[i] + 1e-9)
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        Aabb {
            min: std::array::from_fn(|i| self.min[i].min(other.min[i])),
            max: std::array::from_fn(|i| self.max[i].max(other.max[i])),
        }
    }

    pub fn extent(&self) -> Vector3<f64> {
        Vector3::new(
            self.max[0] - self.min[0],
            self.max[1] - self.min[1],
            self.max[2] - self.min[2],
        )
    }

    /// Distance from `p` to the box (0 inside).
    pub fn distance(&self, p: &Point3<f64>) -> f64 {
        let mut s = 0.0;
        for i in 0..3 {
            let d = (self.min[i] - p[i]).max(p[i] - self.max[i]).max(0.0);
            s += d * d;
        }
        s.sqrt()
    }

    /// Parametric entry/exit of a ray, if it hits.
    pub fn ray_interval(&self, origin: &Point3<f64>, inv_dir: &Vector3<f64>) -> Option<(f64, f64)> {
        let mut t0 = f64::NEG_INFINITY;
        let mut t1 = f64::INFINITY;
        for i in 0..3 {
            let a = (self.min[i] - origin[i]) * inv_dir[i];
            let b = (self.max[i] - origin[i]) * inv_dir[i];
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            // NaN arises for axis-parallel rays starting on a slab plane.
            if !lo.is_nan() {
                t0 = t0.max(lo);
            }
            if !hi.is_nan() {
                t1 = t1.min(hi);
            }
        }
        (t0 <= t1 && t1 >= 0.0).then_some((t0, t1))
    }
}

/// Analytic solid. Cylinders are upright (axis along z).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Primitive {
    Box { center: [f64; 3], half_extents: [f64; 3] },
    Cylinder { center: [f64; 3], radius: f64, height: f64 },
    Sphere { center: [f64; 3], radius: f64 },
    /// Solid half-space below `height`.
    Ground { height: f64 },
    /// Solid half-space above `height`.
    Ceiling { height: f64 },
}

impl Primitive {
    /// Signed distance and closest surface point.
    pub fn distance_and_closest(&self, p: &Point3<f64>) -> (f64, Point3<f64>) {
        match *self {
            Primitive::Sphere { center, radius } => {
                let c = Point3::from(center);
                let v = p - c;
                let n = v.norm();
                let dir = if n > 0.0 { v / n } else { Vector3::x() };
                (n - radius, c + dir * radius)
            }
            Primitive::Box { center, half_extents } => {
                let c = Point3::from(center);
                let h = Vector3::from(half_extents);
                let rel = p - c;
                let q = rel.abs() - h;
                let outside = q.map(|v| v.max(0.0));
                let inside = q.max().min(0.0);
                let d = outside.norm() + inside;
                let closest = if q.max() > 0.0 {
                    Point3::from(rel.zip_map(&h, |r, h| r.clamp(-h, h))) + c.coords
                } else {
                    let axis = q.imax();
                    let mut cp = rel;
                    cp[axis] = if rel[axis] >= 0.0 { h[axis] } else { -h[axis] };
                    c + cp
                };
                (d, closest)
            }
            Primitive::Cylinder { center, radius, height } => {
                let c = Point3::from(center);
                let hh = 0.5 * height;
                let rel = p - c;
                let rho = (rel.x * rel.x + rel.y * rel.y).sqrt();
                let dr = rho - radius;
                let dz = rel.z.abs() - hh;
                let d = dr.max(dz).min(0.0) + (dr.max(0.0).powi(2) + dz.max(0.0).powi(2)).sqrt();
                let (ux, uy) = if rho > 0.0 { (rel.x / rho, rel.y / rho) } else { (1.0, 0.0) };
                let closest = if dr > 0.0 || dz > 0.0 {
                    let r = rho.min(radius);
                    Point3::new(c.x + ux * r, c.y + uy * r, c.z + rel.z.clamp(-hh, hh))
                } else if dr > dz {
                    Point3::new(c.x + ux * radius, c.y + uy * radius, p.z)
                } else {
                    Point3::new(p.x, p.y, c.z + hh.copysign(rel.z))
                };
                (d, closest)
            }
            Primitive::Ground { height } => (p.z - height, Point3::new(p.x, p.y, height)),
            Primitive::Ceiling { height } => (height - p.z, Point3::new(p.x, p.y, height)),
        }
    }

    pub fn distance(&self, p: &Point3<f64>) -> f64 {
        self.distance_and_closest(p).0
    }

    /// Bounding box; `None` for unbounded half-spaces.
    pub fn aabb(&self) -> Option<Aabb> {
        match *self {
            Primitive::Sphere { center, radius } => Some(Aabb::new(
                center.map(|c| c - radius),
                center.map(|c| c + radius),
            )),
            Primitive::Box { center, half_extents } => Some(Aabb::new(
                std::array::from_fn(|i| center[i] - half_extents[i]),
                std::array::from_fn(|i| center[i] + half_extents[i]),
            )),
            Primitive::Cylinder { center, radius, height } => Some(Aabb::new(
                [center[0] - radius, center[1] - radius, center[2] - 0.5 * height],
                [center[0] + radius, center[1] + radius, center[2] + 0.5 * height],
            )),
            Primitive::Ground { .. } | Primitive::Ceiling { .. } => None,
        }
    }

    /// First entry of a ray (unit `dir`) into the solid at t > 0.
    pub fn ray_hit(&self, origin: &Point3<f64>, dir: &Vector3<f64>) -> Option<f64> {
        match *self {
            Primitive::Sphere { center, radius } => {
                let oc = origin - Point3::from(center);
                let b = oc.dot(dir);
                let c = oc.norm_squared() - radius * radius;
                let disc = b * b - c;
                if disc < 0.0 {
                    return None;
                }
                let t = -b - disc.sqrt();
                (t > 0.0).then_some(t)
            }
            Primitive::Box { .. } => {
                let inv = dir.map(|d| 1.0 / d);
                let (t0, _) = self.aabb().unwrap().ray_interval(origin, &inv)?;
                (t0 > 0.0).then_some(t0)
            }
            Primitive::Cylinder { center, radius, height } => {
                let hh = 0.5 * height;
                let ox = origin.x - center[0];
                let oy = origin.y - center[1];
                let a = dir.x * dir.x + dir.y * dir.y;
                let (mut t0, mut t1);
                if a < 1e-15 {
                    if ox * ox + oy * oy > radius * radius {
                        return None;
                    }
                    t0 = f64::NEG_INFINITY;
                    t1 = f64::INFINITY;
                } else {
                    let b = ox * dir.x + oy * dir.y;
                    let c = ox * ox + oy * oy - radius * radius;
                    let disc = b * b - a * c;
                    if disc < 0.0 {
                        return None;
                    }
                    let s = disc.sqrt();
                    t0 = (-b - s) / a;
                    t1 = (-b + s) / a;
                }
                let zlo = center[2] - hh;
                let zhi = center[2] + hh;
                if dir.z.abs() < 1e-15 {
                    if origin.z < zlo || origin.z > zhi {
                        return None;
                    }
                } else {
                    let a = (zlo - origin.z) / dir.z;
                    let b = (zhi - origin.z) / dir.z;
                    t0 = t0.max(a.min(b));
                    t1 = t1.min(a.max(b));
                }
                (t0 <= t1 && t0 > 0.0).then_some(t0)
            }
            Primitive::Ground { height } => {
                (dir.z < 0.0 && origin.z > height).then(|| (height - origin.z) / dir.z)
            }
            Primitive::Ceiling { height } => {
                (dir.z > 0.0 && origin.z < height).then(|| (height - origin.z) / dir.z)
            }
        }
    }

    /// Rejects degenerate primitives (zero or negative sizes, non-finite values).
    pub fn validate(&self) -> Result<(), WorldError> {
        let ok = match *self {
            Primitive::Sphere { center, radius } => {
                radius > 0.0 && center.iter().all(|c| c.is_finite())
            }
            Primitive::Box { center, half_extents } => {
                half_extents.iter().all(|h| *h > 0.0 && h.is_finite())
                    && center.iter().all(|c| c.is_finite())
            }
            Primitive::Cylinder { center, radius, height } => {
                radius > 0.0 && height > 0.0 && center.iter().all(|c| c.is_finite())
            }
            Primitive::Ground { height } | Primitive::Ceiling { height } => height.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(WorldError::InvalidConfig(format!("degenerate primitive {self:?}")))
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PrimitiveWorld {
    pub primitives: Vec<Primitive>,
    pub bounds: Aabb,
    #[serde(skip)]
    index: Option<Bvh>,
}

impl PartialEq for PrimitiveWorld {
    fn eq(&self, other: &Self) -> bool {
        self.primitives == other.primitives && self.bounds == other.bounds
    }
}

impl PrimitiveWorld {
    pub fn new(primitives: Vec<Primitive>, bounds: Aabb) -> Self {
        let mut w = Self {
            primitives,
            bounds,
            index: None,
        };
        w.rebuild_index();
        w
    }

    fn rebuild_index(&mut self) {
        self.index = Some(Bvh::build(&self.primitives));
    }

    fn bvh(&self) -> &Bvh {
        self.index.as_ref().expect("world index built on construction")
    }

    pub fn validate(&self) -> Result<(), WorldError> {
        for p in &self.primitives {
            p.validate()?;
        }
        if !(0..3).all(|i| self.bounds.max[i] > self.bounds.min[i]) {
            return Err(WorldError::InvalidConfig("empty bounds".into()));
        }
        Ok(())
    }

    /// Exact signed distance: minimum over the primitive distances.
    pub fn exact_distance(&self, p: &Point3<f64>) -> f64 {
        self.distance_and_closest(p).0
    }

    /// Signed distance and the closest surface point of the nearest primitive.
    pub fn distance_and_closest(&self, p: &Point3<f64>) -> (f64, Point3<f64>) {
        let bvh = self.bvh();
        let mut best = (f64::INFINITY, *p);
        for &i in bvh.unbounded() {
            let r = self.primitives[i].distance_and_closest(p);
            if r.0 < best.0 {
                best = r;
            }
        }
        bvh.nearest(p, &self.primitives, &mut best);
        best
    }

    /// Distance along a unit ray to the first surface, if any within `max_t`.
    pub fn ray_cast(&self, origin: &Point3<f64>, dir: &Vector3<f64>, max_t: f64) -> Option<f64> {
        let bvh = self.bvh();
        let mut best = max_t;
        for &i in bvh.unbounded() {
            if let Some(t) = self.primitives[i].ray_hit(origin, dir) {
                best = best.min(t);
            }
        }
        bvh.ray_cast(origin, dir, &self.primitives, &mut best);
        (best < max_t).then_some(best)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("world serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, WorldError> {
        let mut w: PrimitiveWorld = serde_json::from_str(s)?;
        w.validate()?;
        w.rebuild_index();
        Ok(w)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, WorldError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<(), WorldError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }
}
