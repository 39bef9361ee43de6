//! Pinhole depth camera with per-pixel Gaussian range noise.

use nalgebra::{Isometry3, Matrix3, Point3, Rotation3, Translation3, UnitQuaternion, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{PrimitiveWorld, WorldError};

/// Robot pose; the camera looks along the body x axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub position: [f64; 3],
    pub yaw: f64,
    #[serde(default)]
    pub pitch: f64,
    #[serde(default)]
    pub roll: f64,
}

impl Pose {
    pub fn new(position: [f64; 3], yaw: f64) -> Self {
        Self {
            position,
            yaw,
            pitch: 0.0,
            roll: 0.0,
        }
    }

    /// Transform taking camera-frame points (x right, y down, z forward)
    /// into the world frame.
    pub fn world_from_camera(&self) -> Isometry3<f64> {
        let body = UnitQuaternion::from_euler_angles(self.roll, self.pitch, self.yaw);
        #[rustfmt::skip]
        let body_from_cam = Rotation3::from_matrix_unchecked(Matrix3::new(
            0.0, 0.0, 1.0,
            -1.0, 0.0, 0.0,
            0.0, -1.0, 0.0,
        ));
        let rot = body * UnitQuaternion::from_rotation_matrix(&body_from_cam);
        Isometry3::from_parts(Translation3::from(Vector3::from(self.position)), rot)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepthCamera {
    pub width: u32,
    pub height: u32,
    /// Horizontal field of view in radians.
    pub horizontal_fov: f64,
    /// Depths beyond this are reported invalid.
    pub max_range: f64,
    pub noise_sigma: f64,
}

impl Default for DepthCamera {
    fn default() -> Self {
        Self {
            width: 320,
            height: 240,
            horizontal_fov: std::f64::consts::FRAC_PI_2,
            max_range: 5.0,
            noise_sigma: 0.0,
        }
    }
}

impl DepthCamera {
    pub fn validate(&self) -> Result<(), WorldError> {
        if !(self.noise_sigma >= 0.0) {
            return Err(WorldError::InvalidConfig("noise sigma must be >= 0".into()));
        }
        if !(self.horizontal_fov > 0.0 && self.horizontal_fov < std::f64::consts::PI) {
            return Err(WorldError::InvalidConfig("fov must lie in (0, pi)".into()));
        }
        if self.width == 0 || self.height == 0 || !(self.max_range > 0.0) {
            return Err(WorldError::InvalidConfig("empty image or range".into()));
        }
        Ok(())
    }

    pub fn focal(&self) -> f64 {
        0.5 * self.width as f64 / (0.5 * self.horizontal_fov).tan()
    }

    pub fn principal_point(&self) -> (f64, f64) {
        (0.5 * self.width as f64, 0.5 * self.height as f64)
    }

    /// Camera-frame ray through the pixel center, with unit z.
    pub fn pixel_ray(&self, u: u32, v: u32) -> Vector3<f64> {
        let f = self.focal();
        let (cx, cy) = self.principal_point();
        Vector3::new((u as f64 + 0.5 - cx) / f, (v as f64 + 0.5 - cy) / f, 1.0)
    }

    /// Pixel containing a camera-frame point, if it is in front and in view.
    pub fn project(&self, p: &Point3<f64>) -> Option<(u32, u32)> {
        if p.z <= 1e-6 {
            return None;
        }
        let f = self.focal();
        let (cx, cy) = self.principal_point();
        let u = (f * p.x / p.z + cx).floor();
        let v = (f * p.y / p.z + cy).floor();
        if u < 0.0 || v < 0.0 || u >= self.width as f64 || v >= self.height as f64 {
            return None;
        }
        Some((u as u32, v as u32))
    }
}

/// Z-depth image; NaN marks pixels without a return.
#[derive(Clone, Debug, PartialEq)]
pub struct DepthImage {
    pub width: u32,
    pub height: u32,
    pub data: Vec<f32>,
}

impl DepthImage {
    pub fn depth(&self, u: u32, v: u32) -> Option<f32> {
        let d = self.data[(v * self.width + u) as usize];
        (!d.is_nan()).then_some(d)
    }

    pub fn valid_count(&self) -> usize {
        self.data.iter().filter(|d| !d.is_nan()).count()
    }
}

/// Noise-free depth image by exact ray casting.
pub fn render_clean(world: &PrimitiveWorld, pose: &Pose, cam: &DepthCamera) -> DepthImage {
    let tf = pose.world_from_camera();
    let origin = Point3::from(Vector3::from(pose.position));
    let mut data = Vec::with_capacity((cam.width * cam.height) as usize);
    for v in 0..cam.height {
        for u in 0..cam.width {
            let ray = cam.pixel_ray(u, v);
            let n = ray.norm();
            let dir = tf.rotation * (ray / n);
            let d = world
                .ray_cast(&origin, &dir, cam.max_range * n)
                .map(|t| (t / n) as f32)
                .unwrap_or(f32::NAN);
            data.push(d);
        }
    }
    DepthImage {
        width: cam.width,
        height: cam.height,
        data,
    }
}

/// Adds independent zero-mean Gaussian noise to every valid pixel.
pub fn add_noise(image: &mut DepthImage, sigma: f64, seed: u64) {
    if sigma <= 0.0 {
        return;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).expect("sigma is finite and positive");
    for d in image.data.iter_mut().filter(|d| !d.is_nan()) {
        *d += normal.sample(&mut rng) as f32;
    }
}

/// Simulated scan: exact ray cast plus noise of `cam.noise_sigma`.
pub fn render_depth(world: &PrimitiveWorld, pose: &Pose, cam: &DepthCamera, rng_seed: u64) -> DepthImage {
    let mut img = render_clean(world, pose, cam);
    add_noise(&mut img, cam.noise_sigma, rng_seed);
    img
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{Aabb, Primitive};

    fn wall_world() -> PrimitiveWorld {
        PrimitiveWorld::new(
            vec![Primitive::Box { center: [1.5, 0.0, 0.0], half_extents: [0.5, 20.0, 20.0] }],
            Aabb::new([-5.0; 3], [5.0; 3]),
        )
    }

    #[test]
    fn camera_looks_along_body_x() {
        let tf = Pose::new([0.0; 3], 0.0).world_from_camera();
        let fwd = tf.rotation * Vector3::z();
        let right = tf.rotation * Vector3::x();
        let down = tf.rotation * Vector3::y();
        assert!((fwd - Vector3::x()).norm() < 1e-12);
        assert!((right + Vector3::y()).norm() < 1e-12);
        assert!((down + Vector3::z()).norm() < 1e-12);
        let tf = Pose::new([0.0; 3], std::f64::consts::FRAC_PI_2).world_from_camera();
        assert!((tf.rotation * Vector3::z() - Vector3::y()).norm() < 1e-12);
    }

    #[test]
    fn flat_wall_center_depth() {
        let cam = DepthCamera::default();
        let img = render_depth(&wall_world(), &Pose::new([0.0; 3], 0.0), &cam, 1);
        let d = img.depth(160, 120).unwrap();
        assert!((d - 1.0).abs() < 1e-3);
        // A flat wall facing the camera has the same z-depth everywhere.
        assert!(img.data.iter().all(|d| (d - 1.0).abs() < 1e-5));
    }

    #[test]
    fn nothing_in_range_is_invalid() {
        let cam = DepthCamera::default();
        let img = render_depth(&wall_world(), &Pose::new([0.0; 3], std::f64::consts::PI), &cam, 1);
        assert_eq!(img.valid_count(), 0);
        assert!(img.depth(160, 120).is_none());
    }

    #[test]
    fn noise_statistics() {
        let world = PrimitiveWorld::new(
            vec![Primitive::Box { center: [2.5, 0.0, 0.0], half_extents: [0.5, 20.0, 20.0] }],
            Aabb::new([-5.0; 3], [5.0; 3]),
        );
        let cam = DepthCamera {
            width: 100,
            height: 100,
            noise_sigma: 0.1,
            ..DepthCamera::default()
        };
        let img = render_depth(&world, &Pose::new([0.0; 3], 0.0), &cam, 42);
        let n = img.data.len() as f64;
        assert_eq!(n, 1e4);
        let mean = img.data.iter().map(|d| *d as f64).sum::<f64>() / n;
        let var = img.data.iter().map(|d| (*d as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((mean - 2.0).abs() < 0.01, "mean {mean}");
        assert!((var.sqrt() - 0.1).abs() < 0.01, "std {}", var.sqrt());
    }

    #[test]
    fn rendering_is_deterministic() {
        let cam = DepthCamera { noise_sigma: 0.2, ..DepthCamera::default() };
        let pose = Pose::new([0.0, 0.2, 0.1], 0.3);
        let a = render_depth(&wall_world(), &pose, &cam, 9);
        let b = render_depth(&wall_world(), &pose, &cam, 9);
        assert_eq!(a.data.iter().map(|d| d.to_bits()).collect::<Vec<_>>(),
                   b.data.iter().map(|d| d.to_bits()).collect::<Vec<_>>());
        let c = render_depth(&wall_world(), &pose, &cam, 10);
        assert_ne!(a, c);
    }

    #[test]
    fn projection_inverts_pixel_ray() {
        let cam = DepthCamera::default();
        for (u, v) in [(0, 0), (160, 120), (319, 239), (17, 200)] {
            let p = Point3::from(cam.pixel_ray(u, v) * 2.5);
            assert_eq!(cam.project(&p), Some((u, v)));
        }
        assert!(cam.validate().is_ok());
        assert!(DepthCamera { horizontal_fov: 3.2, ..cam }.validate().is_err());
        assert!(DepthCamera { noise_sigma: -1.0, ..cam }.validate().is_err());
    }
}
