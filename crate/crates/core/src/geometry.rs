//! Rigid-body poses and the pan-tilt pinhole camera used by the whole pipeline.
//!
//! Conventions, fixed once and checked by the round-trip tests below:
//! - right-handed world frame with z up;
//! - the camera looks along +z of its own frame, x maps to columns (right),
//!   y maps to rows (down);
//! - pan rotates about the mount frame z axis, tilt about the panned x axis;
//! - depth values are integer millimeters, all geometry is f64 meters.

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

const ROTATION_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("rotation matrix is not orthonormal within {ROTATION_TOL}")]
    NotOrthonormal,
    #[error("rotation matrix determinant {0} is not +1")]
    ImproperRotation(f64),
    #[error("camera intrinsics out of range (need fx,fy > 0 and principal point inside the image)")]
    BadIntrinsics,
    #[error("point is behind the camera")]
    BehindCamera,
    #[error("depth 0 mm marks a sensor no-return and cannot be back-projected")]
    InvalidDepth,
}

/// A 3-D point or vector in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Vec3) -> Vec3 {
        Vec3::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn distance(self, other: Vec3) -> f64 {
        (self - other).norm()
    }

    /// Unit vector in the same direction, or `None` for a (near-)zero vector.
    pub fn normalized(self) -> Option<Vec3> {
        let n = self.norm();
        if n < 1e-12 {
            None
        } else {
            Some(self * (1.0 / n))
        }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub(crate) fn to_na(self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub(crate) fn from_na(v: Vector3<f64>) -> Self {
        Vec3::new(v.x, v.y, v.z)
    }
}

impl std::ops::Add for Vec3 {
    type Output = Vec3;
    fn add(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl std::ops::Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl std::ops::Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl std::ops::Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Integer pixel location, row-major. May lie outside an image; containment
/// is checked where it matters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PixelCoord {
    pub row: i32,
    pub col: i32,
}

impl PixelCoord {
    pub fn new(row: i32, col: i32) -> Self {
        PixelCoord { row, col }
    }

    pub fn inside(self, width: usize, height: usize) -> bool {
        self.row >= 0 && self.col >= 0 && (self.row as usize) < height && (self.col as usize) < width
    }
}

/// Proper rigid-body transform: `p_out = rotation * p_in + translation`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    rotation: Matrix3<f64>,
    translation: Vec3,
}

impl RigidTransform {
    /// Builds a transform, rejecting rotations that are not orthonormal
    /// (within 1e-9) or have determinant other than +1.
    pub fn new(rotation: Matrix3<f64>, translation: Vec3) -> Result<Self, GeometryError> {
        let gram = rotation.transpose() * rotation;
        let err = (gram - Matrix3::identity()).abs().max();
        if err > ROTATION_TOL {
            return Err(GeometryError::NotOrthonormal);
        }
        let det = rotation.determinant();
        if (det - 1.0).abs() > ROTATION_TOL {
            return Err(GeometryError::ImproperRotation(det));
        }
        Ok(RigidTransform { rotation, translation })
    }

    pub fn identity() -> Self {
        RigidTransform {
            rotation: Matrix3::identity(),
            translation: Vec3::ZERO,
        }
    }

    pub fn from_translation(t: Vec3) -> Self {
        RigidTransform {
            rotation: Matrix3::identity(),
            translation: t,
        }
    }

    pub fn from_rotation_x(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        RigidTransform {
            rotation: Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c),
            translation: Vec3::ZERO,
        }
    }

    pub fn from_rotation_y(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        RigidTransform {
            rotation: Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c),
            translation: Vec3::ZERO,
        }
    }

    pub fn from_rotation_z(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        RigidTransform {
            rotation: Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0),
            translation: Vec3::ZERO,
        }
    }

    /// Rotation whose columns are the given (orthonormal) basis vectors.
    pub fn from_basis(x: Vec3, y: Vec3, z: Vec3, translation: Vec3) -> Result<Self, GeometryError> {
        let rotation = Matrix3::from_columns(&[x.to_na(), y.to_na(), z.to_na()]);
        RigidTransform::new(rotation, translation)
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> Vec3 {
        self.translation
    }

    /// Applies the full transform to a point.
    pub fn apply(&self, p: Vec3) -> Vec3 {
        Vec3::from_na(self.rotation * p.to_na()) + self.translation
    }

    /// Applies only the rotation, for direction vectors.
    pub fn rotate(&self, v: Vec3) -> Vec3 {
        Vec3::from_na(self.rotation * v.to_na())
    }

    /// `compose(a, b)` maps points as `a` applied after `b`.
    pub fn compose(&self, inner: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation * inner.rotation,
            translation: Vec3::from_na(self.rotation * inner.translation.to_na()) + self.translation,
        }
    }

    pub fn inverse(&self) -> RigidTransform {
        let rot_t = self.rotation.transpose();
        RigidTransform {
            rotation: rot_t,
            translation: Vec3::from_na(-(rot_t * self.translation.to_na())),
        }
    }

    /// Translates the transform by a world-frame offset, keeping the rotation.
    pub fn translated(&self, offset: Vec3) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation,
            translation: self.translation + offset,
        }
    }
}

/// Pinhole camera on a pan-tilt mount.
///
/// `mount` is the camera-in-world pose at pan = tilt = 0. The effective pose
/// is `mount ∘ Rz(pan) ∘ Rx(tilt)` (pan about the mount z axis, then tilt
/// about the panned x axis); both rotations act about the mount origin.
#[derive(Debug, Clone)]
pub struct CameraModel {
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
    width: usize,
    height: usize,
    mount: RigidTransform,
    pan: f64,
    tilt: f64,
    world_from_cam: RigidTransform,
    cam_from_world: RigidTransform,
}

impl CameraModel {
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        width: usize,
        height: usize,
        mount: RigidTransform,
    ) -> Result<Self, GeometryError> {
        if !(fx > 0.0 && fy > 0.0) || !(0.0 <= cx && cx < width as f64) || !(0.0 <= cy && cy < height as f64) {
            return Err(GeometryError::BadIntrinsics);
        }
        let mut cam = CameraModel {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
            mount,
            pan: 0.0,
            tilt: 0.0,
            world_from_cam: mount,
            cam_from_world: mount.inverse(),
        };
        cam.refresh_pose();
        Ok(cam)
    }

    fn refresh_pose(&mut self) {
        let spin = RigidTransform::from_rotation_z(self.pan)
            .compose(&RigidTransform::from_rotation_x(self.tilt));
        self.world_from_cam = self.mount.compose(&spin);
        self.cam_from_world = self.world_from_cam.inverse();
    }

    /// Same camera with new pan/tilt angles.
    pub fn with_pan_tilt(&self, pan: f64, tilt: f64) -> CameraModel {
        let mut cam = self.clone();
        cam.pan = pan;
        cam.tilt = tilt;
        cam.refresh_pose();
        cam
    }

    /// Same camera with the mount shifted by a world-frame offset. Used to
    /// inject a model error between the believed and the true camera pose.
    pub fn with_mount_offset(&self, offset: Vec3) -> CameraModel {
        let mut cam = self.clone();
        cam.mount = cam.mount.translated(offset);
        cam.refresh_pose();
        cam
    }

    /// Pan/tilt angles that point the optical axis at `target`.
    ///
    /// With the effective pose `mount ∘ Rz(pan) ∘ Rx(tilt)` the optical axis
    /// in the mount frame is `(sin t sin p, -sin t cos p, cos t)`. Of the two
    /// solution branches the one with tilt in [-pi, 0] is returned: it keeps
    /// the image y axis pointing toward world-down for a z-up mount, so
    /// rendered images are upright.
    pub fn aim_angles(&self, target: Vec3) -> (f64, f64) {
        let dir_world = target - self.mount.translation();
        let d = self.mount.inverse().rotate(dir_world);
        match d.normalized() {
            None => (self.pan, self.tilt),
            Some(d) => {
                let tilt = -d.z.clamp(-1.0, 1.0).acos();
                let pan = if d.x.abs() < 1e-12 && d.y.abs() < 1e-12 {
                    0.0
                } else {
                    (-d.x).atan2(d.y)
                };
                (pan, tilt)
            }
        }
    }

    /// Same camera re-aimed so the optical axis passes through `target`.
    pub fn aimed_at(&self, target: Vec3) -> CameraModel {
        let (pan, tilt) = self.aim_angles(target);
        self.with_pan_tilt(pan, tilt)
    }

    pub fn fx(&self) -> f64 {
        self.fx
    }
    pub fn fy(&self) -> f64 {
        self.fy
    }
    pub fn cx(&self) -> f64 {
        self.cx
    }
    pub fn cy(&self) -> f64 {
        self.cy
    }
    pub fn width(&self) -> usize {
        self.width
    }
    pub fn height(&self) -> usize {
        self.height
    }
    pub fn pan(&self) -> f64 {
        self.pan
    }
    pub fn tilt(&self) -> f64 {
        self.tilt
    }
    pub fn mount(&self) -> &RigidTransform {
        &self.mount
    }

    /// Effective camera-in-world pose with pan/tilt applied.
    pub fn world_from_camera(&self) -> &RigidTransform {
        &self.world_from_cam
    }

    pub fn camera_from_world(&self) -> &RigidTransform {
        &self.cam_from_world
    }

    /// Sub-pixel projection; `(row, col)` in pixel units.
    pub fn project_precise(&self, p_world: Vec3) -> Result<(f64, f64), GeometryError> {
        let p = self.cam_from_world.apply(p_world);
        if p.z <= 0.0 {
            return Err(GeometryError::BehindCamera);
        }
        let col = self.cx + self.fx * p.x / p.z;
        let row = self.cy + self.fy * p.y / p.z;
        Ok((row, col))
    }

    /// Projection rounded to the nearest pixel. The result may lie outside
    /// the image; fails only for points at or behind the camera plane.
    pub fn project(&self, p_world: Vec3) -> Result<PixelCoord, GeometryError> {
        let (row, col) = self.project_precise(p_world)?;
        Ok(PixelCoord::new(row.round() as i32, col.round() as i32))
    }

    /// World point whose projection is `px` and whose camera-frame depth is
    /// `depth_mm` millimeters. Rejects the sensor no-return value 0.
    pub fn back_project(&self, px: PixelCoord, depth_mm: u16) -> Result<Vec3, GeometryError> {
        if depth_mm == 0 {
            return Err(GeometryError::InvalidDepth);
        }
        Ok(self.back_project_precise(px.row as f64, px.col as f64, depth_mm as f64 / 1000.0))
    }

    /// Sub-pixel back-projection at a metric depth; `depth_m` must be > 0.
    pub fn back_project_precise(&self, row: f64, col: f64, depth_m: f64) -> Vec3 {
        let x = (col - self.cx) * depth_m / self.fx;
        let y = (row - self.cy) * depth_m / self.fy;
        self.world_from_cam.apply(Vec3::new(x, y, depth_m))
    }

    /// Camera-frame depth of a world point along the optical axis (meters).
    pub fn depth_of(&self, p_world: Vec3) -> f64 {
        self.cam_from_world.apply(p_world).z
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_rotation(rng: &mut ChaCha8Rng) -> Matrix3<f64> {
        // Uniform-ish rotation from a normalized random quaternion.
        let q: [f64; 4] = std::array::from_fn(|_| rng.random::<f64>() * 2.0 - 1.0);
        let quat = nalgebra::Quaternion::new(q[0], q[1], q[2], q[3]);
        nalgebra::UnitQuaternion::from_quaternion(quat)
            .to_rotation_matrix()
            .into_inner()
    }

    fn random_transform(rng: &mut ChaCha8Rng) -> RigidTransform {
        let t = Vec3::new(
            rng.random::<f64>() * 2.0 - 1.0,
            rng.random::<f64>() * 2.0 - 1.0,
            rng.random::<f64>() * 2.0 - 1.0,
        );
        RigidTransform::new(random_rotation(rng), t).unwrap()
    }

    fn test_camera() -> CameraModel {
        CameraModel::new(500.0, 500.0, 320.0, 240.0, 640, 480, RigidTransform::identity()).unwrap()
    }

    #[test]
    fn compose_identity_is_neutral() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = random_transform(&mut rng);
        let id = RigidTransform::identity();
        let p = Vec3::new(0.3, -0.2, 0.9);
        assert!(t.compose(&id).apply(p).distance(t.apply(p)) < 1e-12);
        assert!(id.compose(&t).apply(p).distance(t.apply(p)) < 1e-12);
    }

    #[test]
    fn compose_with_inverse_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let t = random_transform(&mut rng);
            let round = t.compose(&t.inverse());
            let p = Vec3::new(0.1, 0.2, 0.3);
            assert!(round.apply(p).distance(p) < 1e-9);
        }
    }

    #[test]
    fn compose_matches_hand_matrix_product() {
        // T = Rz(90deg) followed by translation (1,0,0): p -> Rz p + t.
        let t = RigidTransform::new(
            Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0),
            Vec3::new(1.0, 0.0, 0.0),
        )
        .unwrap();
        let composed = t.compose(&RigidTransform::identity());
        assert!(composed.apply(Vec3::ZERO).distance(Vec3::new(1.0, 0.0, 0.0)) < 1e-12);
        // Hand 4x4 product: [Rz | t] * (1,0,0,1) = (0,1,0) + (1,0,0) = (1,1,0).
        assert!(composed.apply(Vec3::new(1.0, 0.0, 0.0)).distance(Vec3::new(1.0, 1.0, 0.0)) < 1e-12);
    }

    #[test]
    fn compose_is_associative() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let (a, b, c) = (
                random_transform(&mut rng),
                random_transform(&mut rng),
                random_transform(&mut rng),
            );
            let left = a.compose(&b).compose(&c);
            let right = a.compose(&b.compose(&c));
            let p = Vec3::new(0.5, -0.7, 0.2);
            assert!(left.apply(p).distance(right.apply(p)) < 1e-9);
        }
    }

    #[test]
    fn rotations_stay_orthonormal_over_many_compositions() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let step = random_transform(&mut rng);
        let mut acc = RigidTransform::identity();
        for _ in 0..10_000 {
            acc = acc.compose(&step);
        }
        let gram = acc.rotation().transpose() * acc.rotation();
        assert!((gram - Matrix3::identity()).abs().max() < 1e-9);
    }

    #[test]
    fn rejects_non_orthonormal_rotation() {
        let bad = Matrix3::new(1.0, 0.1, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
        assert_eq!(
            RigidTransform::new(bad, Vec3::ZERO).unwrap_err(),
            GeometryError::NotOrthonormal
        );
    }

    #[test]
    fn rejects_reflection() {
        let mirror = Matrix3::new(-1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
        assert!(matches!(
            RigidTransform::new(mirror, Vec3::ZERO).unwrap_err(),
            GeometryError::ImproperRotation(_)
        ));
    }

    #[test]
    fn projects_optical_axis_to_principal_point() {
        let cam = CameraModel::new(500.0, 500.0, 320.0, 240.0, 640, 480, RigidTransform::identity()).unwrap();
        let px = cam.project(Vec3::new(0.0, 0.0, 1.0)).unwrap();
        assert_eq!(px, PixelCoord::new(240, 320));
    }

    #[test]
    fn projection_matches_hand_pinhole_formula() {
        let cam = test_camera();
        // col = 320 + 500 * 0.1 / 1 = 370.
        let px = cam.project(Vec3::new(0.1, 0.0, 1.0)).unwrap();
        assert_eq!(px, PixelCoord::new(240, 370));
    }

    #[test]
    fn point_behind_camera_is_rejected() {
        let cam = test_camera();
        assert_eq!(
            cam.project(Vec3::new(0.0, 0.0, -0.5)).unwrap_err(),
            GeometryError::BehindCamera
        );
    }

    #[test]
    fn back_projects_principal_point_to_optical_axis() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mount = random_transform(&mut rng);
        let cam = CameraModel::new(500.0, 500.0, 320.0, 240.0, 640, 480, mount).unwrap();
        let p = cam.back_project(PixelCoord::new(240, 320), 1000).unwrap();
        let expected = mount.apply(Vec3::new(0.0, 0.0, 1.0));
        assert!(p.distance(expected) < 1e-9);
    }

    #[test]
    fn back_project_rejects_zero_depth() {
        let cam = test_camera();
        assert_eq!(
            cam.back_project(PixelCoord::new(10, 10), 0).unwrap_err(),
            GeometryError::InvalidDepth
        );
    }

    #[test]
    fn project_back_project_round_trip_within_half_pixel() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mount = random_transform(&mut rng);
        let cam = CameraModel::new(450.0, 470.0, 317.0, 243.0, 640, 480, mount)
            .unwrap()
            .with_pan_tilt(0.3, -0.4);
        for _ in 0..100 {
            let px = PixelCoord::new(
                rng.random_range(0..480),
                rng.random_range(0..640),
            );
            let depth_mm = rng.random_range(300..5000u16);
            let p = cam.back_project(px, depth_mm).unwrap();
            let round = cam.project(p).unwrap();
            assert!((round.row - px.row).abs() <= 1 && (round.col - px.col).abs() <= 1);
            let (row, col) = cam.project_precise(p).unwrap();
            assert!((row - px.row as f64).abs() < 0.5 && (col - px.col as f64).abs() < 0.5);
        }
    }

    #[test]
    fn aimed_camera_centers_the_target() {
        let mount = RigidTransform::from_translation(Vec3::new(0.0, -0.55, 1.17));
        let cam = CameraModel::new(285.0, 285.0, 160.0, 120.0, 320, 240, mount).unwrap();
        let target = Vec3::new(0.12, 0.05, 0.75);
        let aimed = cam.aimed_at(target);
        let (row, col) = aimed.project_precise(target).unwrap();
        assert!((row - 120.0).abs() < 1e-6, "row {row}");
        assert!((col - 160.0).abs() < 1e-6, "col {col}");
    }

    #[test]
    fn pan_tilt_rotates_about_mount_origin() {
        let mount = RigidTransform::from_translation(Vec3::new(1.0, 2.0, 3.0));
        let cam = CameraModel::new(285.0, 285.0, 160.0, 120.0, 320, 240, mount)
            .unwrap()
            .with_pan_tilt(0.7, 1.1);
        assert!(cam
            .world_from_camera()
            .translation()
            .distance(Vec3::new(1.0, 2.0, 3.0))
            < 1e-12);
    }
}
