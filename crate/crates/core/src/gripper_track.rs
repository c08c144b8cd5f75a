//! Visual tracking of the two-finger gripper.
//!
//! The arm controller's pose prediction defines, for each finger, a 3-D box
//! in the gripper frame inflated by the arm's maximal error. Candidate
//! pixels inside the projected box are filtered in order of increasing cost:
//! first the image-plane polygon, then the color test (the gripper is
//! black), and only then the per-pixel back-projection into the 3-D box.
//! The largest surviving superpixel gives the finger position; finger
//! observations combine into a gripper-center measurement for a
//! constant-velocity Kalman filter whose covariance inflates on detection
//! failures. A proportional term derived from the filter corrects the
//! commanded arm position.

use nalgebra::{Matrix3, Matrix6, Vector3, Vector6};
use thiserror::Error;

use crate::geometry::{CameraModel, GeometryError, RigidTransform, Vec3};
use crate::raster::{flood_regions, ColorImage, DepthImage, Mask};

#[derive(Debug, Error, PartialEq)]
pub enum TrackError {
    #[error("no box corner is visible from the camera")]
    NoVisibleRegion,
    #[error("gripper geometry out of range")]
    BadGeometry,
}

/// Physical gripper dimensions plus the accepted arm error margin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GripperGeometry {
    /// Center-to-center distance between the two fingers (meters).
    pub gripper_width: f64,
    /// Finger extent along the width axis (meters).
    pub finger_width: f64,
    /// Finger extent along the thickness axis (meters).
    pub finger_thickness: f64,
    /// Finger extent along the approach axis (meters).
    pub finger_length: f64,
    /// Maximal accepted arm error inflating the search boxes (meters).
    /// Must cover the expected positioning error of the arm (0.03 m here).
    pub max_arm_error: f64,
}

impl GripperGeometry {
    pub fn validate(&self) -> Result<(), TrackError> {
        let ok = self.gripper_width > 0.0
            && self.finger_width > 0.0
            && self.finger_thickness > 0.0
            && self.finger_length > 0.0
            && self.max_arm_error >= 0.03;
        if ok {
            Ok(())
        } else {
            Err(TrackError::BadGeometry)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FingerSide {
    Left,
    Right,
}

impl FingerSide {
    /// The side sign: -1 for the left finger, +1 for the right.
    pub fn sign(self) -> f64 {
        match self {
            FingerSide::Left => -1.0,
            FingerSide::Right => 1.0,
        }
    }

    pub const BOTH: [FingerSide; 2] = [FingerSide::Left, FingerSide::Right];
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisRange {
    pub min: f64,
    pub max: f64,
}

impl AxisRange {
    #[inline]
    pub fn contains(&self, v: f64) -> bool {
        self.min <= v && v <= self.max
    }

    pub fn length(&self) -> f64 {
        self.max - self.min
    }
}

/// Error-inflated search box for one finger, in the gripper frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FingerSpace {
    pub side: FingerSide,
    pub x: AxisRange,
    pub y: AxisRange,
    pub z: AxisRange,
}

impl FingerSpace {
    #[inline]
    pub fn contains(&self, p: Vec3) -> bool {
        self.x.contains(p.x) && self.y.contains(p.y) && self.z.contains(p.z)
    }

    /// The 8 corners of the box.
    pub fn corners(&self) -> [Vec3; 8] {
        let mut out = [Vec3::ZERO; 8];
        let mut i = 0;
        for &x in &[self.x.min, self.x.max] {
            for &y in &[self.y.min, self.y.max] {
                for &z in &[self.z.min, self.z.max] {
                    out[i] = Vec3::new(x, y, z);
                    i += 1;
                }
            }
        }
        out
    }
}

/// Search box for one finger: the nominal finger volume grown by the
/// maximal arm error on every face.
///
/// In the gripper frame: x spans the two fingers (finger centers at
/// +-width/2), y is the finger thickness, z is the approach axis with the
/// fingertips at z = 0 and the fingers extending back to z = -length.
pub fn finger_space(geom: &GripperGeometry, side: FingerSide) -> FingerSpace {
    let s = side.sign();
    let e = geom.max_arm_error;
    FingerSpace {
        side,
        x: AxisRange {
            min: (s * geom.gripper_width - geom.finger_width) / 2.0 - e,
            max: (s * geom.gripper_width + geom.finger_width) / 2.0 + e,
        },
        y: AxisRange {
            min: -geom.finger_thickness / 2.0 - e,
            max: geom.finger_thickness / 2.0 + e,
        },
        z: AxisRange {
            min: -geom.finger_length - e,
            max: e,
        },
    }
}

/// Image rectangle (clipped) plus the projected box outline.
#[derive(Debug, Clone)]
pub struct ProjectedRegion {
    pub row_min: usize,
    pub row_max: usize,
    pub col_min: usize,
    pub col_max: usize,
    /// Convex hull of the projected box corners, (col, row) in sub-pixels.
    pub polygon: Vec<(f64, f64)>,
}

impl ProjectedRegion {
    pub fn contains_pixel(&self, row: f64, col: f64) -> bool {
        point_in_convex_polygon(&self.polygon, (col, row))
    }
}

/// Projects a finger space into the image: the polygon is the convex hull
/// of the visible box corners, the rectangle its bounding box clipped to
/// the image. Fails when no corner is in front of the camera or the
/// projection misses the image entirely.
pub fn roi_from_space(
    space: &FingerSpace,
    gripper_pose: &RigidTransform,
    cam: &CameraModel,
) -> Result<ProjectedRegion, TrackError> {
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(8);
    for corner in space.corners() {
        let world = gripper_pose.apply(corner);
        match cam.project_precise(world) {
            Ok((row, col)) => pts.push((col, row)),
            Err(GeometryError::BehindCamera) => {}
            Err(_) => unreachable!("project_precise only fails with BehindCamera"),
        }
    }
    if pts.is_empty() {
        return Err(TrackError::NoVisibleRegion);
    }
    let polygon = convex_hull(&pts);
    let (mut col_min, mut col_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut row_min, mut row_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(c, r) in &polygon {
        col_min = col_min.min(c);
        col_max = col_max.max(c);
        row_min = row_min.min(r);
        row_max = row_max.max(r);
    }
    let col_lo = col_min.floor().max(0.0) as usize;
    let row_lo = row_min.floor().max(0.0) as usize;
    if col_max < 0.0 || row_max < 0.0 || col_lo >= cam.width() || row_lo >= cam.height() {
        return Err(TrackError::NoVisibleRegion);
    }
    let col_hi = (col_max.ceil() as usize).min(cam.width() - 1);
    let row_hi = (row_max.ceil() as usize).min(cam.height() - 1);
    Ok(ProjectedRegion {
        row_min: row_lo,
        row_max: row_hi,
        col_min: col_lo,
        col_max: col_hi,
        polygon,
    })
}

/// Andrew monotone chain; returns the hull in counter-clockwise order.
fn convex_hull(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(pts.len() * 2);
    for &p in pts.iter().chain(pts.iter().rev().skip(1)) {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

fn point_in_convex_polygon(polygon: &[(f64, f64)], p: (f64, f64)) -> bool {
    if polygon.len() < 3 {
        return false;
    }
    let n = polygon.len();
    for i in 0..n {
        let a = polygon[i];
        let b = polygon[(i + 1) % n];
        let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
        if cross < -1e-9 {
            return false;
        }
    }
    true
}

/// Tracker configuration; every value frozen here, nothing hidden.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackerParams {
    /// White-noise acceleration density of the motion model (m²/s³).
    pub process_noise: f64,
    /// Measurement noise sigma per axis (meters).
    pub measurement_sigma: f64,
    /// Covariance multiplier applied on a detection failure (> 1).
    pub failure_inflation: f64,
    /// Covariance trace above which the servo holds instead of moving (m²).
    pub trace_limit: f64,
    /// All RGB channels must be below this for a gripper pixel.
    pub black_threshold: u8,
    /// Minimum pixels in the retained superpixel.
    pub min_superpixel_pixels: usize,
    /// Accepted deviation between measured and nominal finger distance (m).
    pub finger_distance_tolerance: f64,
    /// Proportional correction gain.
    pub proportional_gain: f64,
}

impl Default for TrackerParams {
    fn default() -> Self {
        TrackerParams {
            process_noise: 0.01,
            measurement_sigma: 0.005,
            failure_inflation: 2.0,
            trace_limit: 0.01,
            black_threshold: 50,
            min_superpixel_pixels: 30,
            finger_distance_tolerance: 0.02,
            proportional_gain: 1.0,
        }
    }
}

/// Pixel counts entering each filtering stage; the 3-D box check must
/// always see the fewest pixels.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DetectStats {
    pub polygon_checked: usize,
    pub color_checked: usize,
    pub box_checked: usize,
}

/// Finds one finger inside its search box. `Ok(None)` means the finger is
/// undetected (nothing black inside the box survives, or the surviving
/// superpixel is too small).
pub fn detect_finger(
    color: &ColorImage,
    depth: &DepthImage,
    space: &FingerSpace,
    gripper_pose: &RigidTransform,
    cam: &CameraModel,
    params: &TrackerParams,
) -> Result<Option<Vec3>, TrackError> {
    detect_finger_with_stats(color, depth, space, gripper_pose, cam, params).map(|(p, _)| p)
}

/// [`detect_finger`] plus the per-stage pixel counters.
pub fn detect_finger_with_stats(
    color: &ColorImage,
    depth: &DepthImage,
    space: &FingerSpace,
    gripper_pose: &RigidTransform,
    cam: &CameraModel,
    params: &TrackerParams,
) -> Result<(Option<Vec3>, DetectStats), TrackError> {
    assert_eq!(
        (color.width(), color.height(), depth.width(), depth.height()),
        (cam.width(), cam.height(), cam.width(), cam.height()),
        "images must match the camera dimensions"
    );
    let region = roi_from_space(space, gripper_pose, cam)?;
    let gripper_from_world = gripper_pose.inverse();
    let rect_w = region.col_max - region.col_min + 1;
    let rect_h = region.row_max - region.row_min + 1;
    let mut stats = DetectStats::default();
    let mut passing = Mask::new(rect_w, rect_h);
    let mut points = vec![Vec3::ZERO; rect_w * rect_h];
    for row in region.row_min..=region.row_max {
        for col in region.col_min..=region.col_max {
            // Cheap checks first: image polygon, then color, then the
            // back-projected 3-D box membership.
            stats.polygon_checked += 1;
            if !region.contains_pixel(row as f64, col as f64) {
                continue;
            }
            stats.color_checked += 1;
            if !color.is_dark(row, col, params.black_threshold) {
                continue;
            }
            let mm = depth.get(row, col);
            if mm == 0 {
                continue;
            }
            stats.box_checked += 1;
            let world = cam.back_project_precise(row as f64, col as f64, mm as f64 / 1000.0);
            if space.contains(gripper_from_world.apply(world)) {
                let idx = (row - region.row_min) * rect_w + (col - region.col_min);
                passing.set(row - region.row_min, col - region.col_min, true);
                points[idx] = world;
            }
        }
    }
    let regions = flood_regions(&passing);
    let Some(largest) = regions.iter().max_by_key(|r| r.len()) else {
        return Ok((None, stats));
    };
    if largest.len() < params.min_superpixel_pixels {
        return Ok((None, stats));
    }
    let mut mean = Vec3::ZERO;
    for &(r, c) in largest {
        mean = mean + points[r * rect_w + c];
    }
    Ok((Some(mean * (1.0 / largest.len() as f64)), stats))
}

/// Diagnostic rendering of the box membership test: for every pixel in the
/// projected rectangle with valid depth, the blue/green/red channels are
/// set to maximum when the gripper-frame point satisfies the x/y/z range
/// respectively (white = inside the box, purple = x and z but not y).
pub fn debug_space_image(
    depth: &DepthImage,
    space: &FingerSpace,
    gripper_pose: &RigidTransform,
    cam: &CameraModel,
) -> Result<ColorImage, TrackError> {
    let region = roi_from_space(space, gripper_pose, cam)?;
    let gripper_from_world = gripper_pose.inverse();
    let mut img = ColorImage::new(cam.width(), cam.height(), [0, 0, 0]);
    for row in region.row_min..=region.row_max {
        for col in region.col_min..=region.col_max {
            let mm = depth.get(row, col);
            if mm == 0 {
                continue;
            }
            let world = cam.back_project_precise(row as f64, col as f64, mm as f64 / 1000.0);
            let g = gripper_from_world.apply(world);
            let mut rgb = [0u8; 3];
            if space.x.contains(g.x) {
                rgb[2] = 255; // blue
            }
            if space.y.contains(g.y) {
                rgb[1] = 255; // green
            }
            if space.z.contains(g.z) {
                rgb[0] = 255; // red
            }
            img.set(row, col, rgb);
        }
    }
    Ok(img)
}

/// Fuses the two finger observations into one gripper-center measurement.
///
/// The tracked point is the mid-finger center. With one finger visible the
/// center is predicted from the commanded orientation; with both visible
/// their separation must match the gripper width within the tolerance or
/// the frame counts as a detection failure (`None`).
pub fn combine_fingers(
    left: Option<Vec3>,
    right: Option<Vec3>,
    geom: &GripperGeometry,
    commanded_orientation: &RigidTransform,
    distance_tolerance: f64,
) -> Option<Vec3> {
    match (left, right) {
        (None, None) => None,
        (Some(l), Some(r)) => {
            let separation = l.distance(r);
            if (separation - geom.gripper_width).abs() <= distance_tolerance {
                Some((l + r) * 0.5)
            } else {
                None
            }
        }
        (Some(f), None) => Some(f + finger_to_center(geom, FingerSide::Left, commanded_orientation)),
        (None, Some(f)) => Some(f + finger_to_center(geom, FingerSide::Right, commanded_orientation)),
    }
}

/// Offset from a finger center to the gripper center, rotated into the
/// world by the commanded orientation.
fn finger_to_center(geom: &GripperGeometry, side: FingerSide, orientation: &RigidTransform) -> Vec3 {
    orientation.rotate(Vec3::new(-side.sign() * geom.gripper_width / 2.0, 0.0, 0.0))
}

/// Position/velocity Kalman state over the gripper center.
#[derive(Debug, Clone)]
pub struct TrackerState {
    mean: Vector6<f64>,
    covariance: Matrix6<f64>,
    params: TrackerParams,
}

impl TrackerState {
    /// Starts the tracker at a known position with the given standard
    /// deviations on position and velocity.
    pub fn new(position: Vec3, pos_sigma: f64, vel_sigma: f64, params: TrackerParams) -> Self {
        let mean = Vector6::new(position.x, position.y, position.z, 0.0, 0.0, 0.0);
        let mut covariance = Matrix6::zeros();
        for i in 0..3 {
            covariance[(i, i)] = pos_sigma * pos_sigma;
            covariance[(i + 3, i + 3)] = vel_sigma * vel_sigma;
        }
        TrackerState { mean, covariance, params }
    }

    pub fn position(&self) -> Vec3 {
        Vec3::new(self.mean[0], self.mean[1], self.mean[2])
    }

    pub fn velocity(&self) -> Vec3 {
        Vec3::new(self.mean[3], self.mean[4], self.mean[5])
    }

    pub fn covariance(&self) -> &Matrix6<f64> {
        &self.covariance
    }

    pub fn covariance_trace(&self) -> f64 {
        self.covariance.trace()
    }

    pub fn params(&self) -> TrackerParams {
        self.params
    }
}

/// One tracker step: constant-velocity prediction over `dt`, then either a
/// position update from the measurement or, on a detection failure,
/// covariance inflation (position *and* velocity uncertainty grow).
pub fn kalman_step(state: &TrackerState, dt: f64, measurement: Option<Vec3>) -> TrackerState {
    assert!(dt > 0.0, "kalman_step requires dt > 0");
    let params = state.params;
    // Predict.
    let mut f = Matrix6::identity();
    for i in 0..3 {
        f[(i, i + 3)] = dt;
    }
    let q = process_noise(params.process_noise, dt);
    let mean = f * state.mean;
    let cov = f * state.covariance * f.transpose() + q;
    let (mean, cov) = match measurement {
        None => (mean, cov * params.failure_inflation),
        Some(z) => {
            // Position-only update, Joseph form to keep the covariance
            // positive-definite over long runs.
            let r = Matrix3::identity() * params.measurement_sigma * params.measurement_sigma;
            let h = {
                let mut h = nalgebra::SMatrix::<f64, 3, 6>::zeros();
                for i in 0..3 {
                    h[(i, i)] = 1.0;
                }
                h
            };
            let innovation = Vector3::new(z.x, z.y, z.z) - h * mean;
            let s = h * cov * h.transpose() + r;
            let s_inv = s.try_inverse().expect("innovation covariance is invertible");
            let k = cov * h.transpose() * s_inv;
            let mean = mean + k * innovation;
            let i_kh = Matrix6::identity() - k * h;
            let cov = i_kh * cov * i_kh.transpose() + k * r * k.transpose();
            (mean, cov)
        }
    };
    let cov = (cov + cov.transpose()) * 0.5;
    TrackerState { mean, covariance: cov, params }
}

/// White-noise-acceleration process covariance for one step.
fn process_noise(density: f64, dt: f64) -> Matrix6<f64> {
    let mut q = Matrix6::zeros();
    let dt2 = dt * dt;
    let dt3 = dt2 * dt;
    for i in 0..3 {
        q[(i, i)] = density * dt3 / 3.0;
        q[(i, i + 3)] = density * dt2 / 2.0;
        q[(i + 3, i)] = density * dt2 / 2.0;
        q[(i + 3, i + 3)] = density * dt;
    }
    q
}

/// Servo decision for one control cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ServoCommand {
    /// Corrected position to request from the arm.
    Move(Vec3),
    /// Uncertainty too high: stop and wait for the filter to stabilize.
    Hold,
}

/// Proportional correction of the requested position.
///
/// While the covariance trace is under the limit, the command is biased
/// opposite the observed arm error: the difference between where the model
/// says the gripper is and where the tracker sees it.
pub fn servo_correction(
    state: &TrackerState,
    commanded_target: Vec3,
    model_position: Vec3,
    gain: f64,
) -> ServoCommand {
    if state.covariance_trace() > state.params.trace_limit {
        return ServoCommand::Hold;
    }
    let bias = model_position - state.position();
    ServoCommand::Move(commanded_target + bias * gain)
}
