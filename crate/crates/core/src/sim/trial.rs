//! Grasping trial protocol and reference-database construction.
//!
//! One trial: reset the reference weights, detect the object at 10 Hz until
//! the position filter converges (30 s budget), plan a grasp perpendicular
//! to the filtered axis, approach under the selected mode, close the
//! gripper to slightly under the object diameter, lift. Every trial ends in
//! exactly one of six outcomes: four failures (not detected, gripper lost,
//! grasping failed, lifting failed) and two successes (object touched /
//! not touched before closing).
//!
//! The two modes share everything except the approach: NVGG trusts the arm
//! controller blindly, VGG closes the loop through the gripper tracker and
//! the proportional correction.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::depth_seg::{extract_rois, SegParams};
use crate::geometry::{RigidTransform, Vec3};
use crate::gripper_track::{
    combine_fingers, detect_finger, finger_space, kalman_step, servo_correction, FingerSide,
    GripperGeometry, ServoCommand, TrackerParams, TrackerState,
};
use crate::matching::{match_reference_to_roi, DescriptorSource, MatchParams};
use crate::posfilter::{FilterEntry, FilterParams, PositionFilter};
use crate::refdb::{DbError, ReferenceDatabase, ReferenceId, UpdateGains, WeightBounds};

use super::arm::{random_error_vector, ArmModel};
use super::mix_seed;
use super::render::render;
use super::scene::{GripperInstance, PlacedObject, SceneConfig, WorldState};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraspMode {
    /// Non-visually-guided: open-loop commands trusting the arm model.
    Nvgg,
    /// Visually-guided: gripper tracking plus proportional correction.
    Vgg,
}

impl std::fmt::Display for GraspMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GraspMode::Nvgg => write!(f, "nvgg"),
            GraspMode::Vgg => write!(f, "vgg"),
        }
    }
}

impl std::str::FromStr for GraspMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "nvgg" => Ok(GraspMode::Nvgg),
            "vgg" => Ok(GraspMode::Vgg),
            other => Err(format!("unknown mode {other:?} (expected vgg or nvgg)")),
        }
    }
}

/// The six possible results of a grasping task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TrialOutcome {
    ObjectNotDetected,
    GripperLost,
    GraspingFailed,
    LiftingFailed,
    ObjectTouched,
    ObjectNotTouched,
}

impl TrialOutcome {
    pub const ALL: [TrialOutcome; 6] = [
        TrialOutcome::ObjectNotDetected,
        TrialOutcome::GripperLost,
        TrialOutcome::GraspingFailed,
        TrialOutcome::LiftingFailed,
        TrialOutcome::ObjectTouched,
        TrialOutcome::ObjectNotTouched,
    ];

    /// Both successes lift the object; they differ in pre-close contact.
    pub fn is_success(self) -> bool {
        matches!(self, TrialOutcome::ObjectTouched | TrialOutcome::ObjectNotTouched)
    }
}

impl std::fmt::Display for TrialOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            TrialOutcome::ObjectNotDetected => "object_not_detected",
            TrialOutcome::GripperLost => "gripper_lost",
            TrialOutcome::GraspingFailed => "grasping_failed",
            TrialOutcome::LiftingFailed => "lifting_failed",
            TrialOutcome::ObjectTouched => "object_touched",
            TrialOutcome::ObjectNotTouched => "object_not_touched",
        };
        write!(f, "{s}")
    }
}

impl std::str::FromStr for TrialOutcome {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "object_not_detected" => Ok(TrialOutcome::ObjectNotDetected),
            "gripper_lost" => Ok(TrialOutcome::GripperLost),
            "grasping_failed" => Ok(TrialOutcome::GraspingFailed),
            "lifting_failed" => Ok(TrialOutcome::LiftingFailed),
            "object_touched" => Ok(TrialOutcome::ObjectTouched),
            "object_not_touched" => Ok(TrialOutcome::ObjectNotTouched),
            other => Err(format!("unknown outcome {other:?}")),
        }
    }
}

/// Everything recorded about one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub seed: u64,
    pub mode: GraspMode,
    pub model_error_mm: u32,
    pub outcome: TrialOutcome,
    /// Present iff the detection phase succeeded.
    pub convergence_time_s: Option<f64>,
    /// Reference-to-ROI matcher calls during detection.
    pub matcher_invocations: u64,
    /// Gripper-tracker frames processed (always 0 in NVGG mode).
    pub tracker_invocations: u64,
}

/// Frozen trial configuration; [`TrialParams::for_scene`] wires the
/// segmentation expectations to the scene's target object.
#[derive(Debug, Clone)]
pub struct TrialParams {
    pub frame_rate: f64,
    pub detect_timeout_s: f64,
    pub approach_timeout_s: f64,
    /// Commanded travel per frame (meters): 0.15 m/s at 10 Hz.
    pub step_m: f64,
    pub pre_grasp_standoff_m: f64,
    /// Advance tolerance for the intermediate waypoint, and the tighter one
    /// for the final grasp pose.
    pub waypoint_tolerance_m: f64,
    pub final_tolerance_m: f64,
    /// The requested closing gap is the object diameter minus this margin.
    pub close_margin_m: f64,
    /// Tolerated shortfall between grip chord and diameter before the
    /// object slips during the lift.
    pub friction_margin_m: f64,
    pub lift_height_m: f64,
    /// Inner gap between the open fingers.
    pub open_gap_m: f64,
    pub finger_width_m: f64,
    pub finger_thickness_m: f64,
    pub finger_length_m: f64,
    /// Maximal accepted arm error inflating the finger search boxes.
    pub max_arm_error_m: f64,
    pub arm_offset_radius_m: f64,
    pub arm_jitter_sigma_m: f64,
    /// Fraction of the object radius correcting the visible-surface bias of
    /// the ROI centroid back to the cylinder axis.
    pub surface_to_axis_factor: f64,
    pub seg: SegParams,
    pub matching: MatchParams,
    pub filter: FilterParams,
    pub tracker: TrackerParams,
}

impl TrialParams {
    pub fn for_scene(scene: &SceneConfig) -> Self {
        let target = scene.target_object();
        TrialParams {
            frame_rate: 10.0,
            detect_timeout_s: 30.0,
            approach_timeout_s: 30.0,
            step_m: 0.015,
            pre_grasp_standoff_m: 0.12,
            waypoint_tolerance_m: 0.025,
            final_tolerance_m: 0.012,
            close_margin_m: 0.005,
            friction_margin_m: 0.005,
            lift_height_m: 0.15,
            open_gap_m: 0.11,
            finger_width_m: 0.02,
            finger_thickness_m: 0.016,
            finger_length_m: 0.10,
            max_arm_error_m: 0.065,
            arm_offset_radius_m: 0.03,
            arm_jitter_sigma_m: 0.003,
            surface_to_axis_factor: 0.8,
            seg: SegParams {
                expected_width_m: 2.0 * target.radius,
                expected_height_m: target.height,
                ..SegParams::default()
            },
            matching: MatchParams::default(),
            filter: FilterParams::default(),
            tracker: TrackerParams::default(),
        }
    }

    fn gripper_geometry(&self) -> GripperGeometry {
        GripperGeometry {
            gripper_width: self.open_gap_m + self.finger_width_m,
            finger_width: self.finger_width_m,
            finger_thickness: self.finger_thickness_m,
            finger_length: self.finger_length_m,
            max_arm_error: self.max_arm_error_m,
        }
    }

    fn gripper_instance(&self, pose: RigidTransform) -> GripperInstance {
        GripperInstance {
            pose,
            gap: self.open_gap_m,
            finger_width: self.finger_width_m,
            finger_thickness: self.finger_thickness_m,
            finger_length: self.finger_length_m,
        }
    }

    /// Home pose of the gripper origin, off to the arm side above the table.
    fn home_origin(&self, scene: &SceneConfig) -> Vec3 {
        scene.arm_base + Vec3::new(-0.06, 0.06, 0.22)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildReport {
    pub references: usize,
    pub skipped_views: usize,
}

/// Builds the reference database: `n_views` random placements of each of
/// the five objects, segmented and described exactly like live frames.
/// Views producing no usable ROI are skipped and counted.
pub fn build_reference_db(
    scene: &SceneConfig,
    n_views: usize,
    seed: u64,
) -> Result<(ReferenceDatabase, BuildReport), DbError> {
    if n_views == 0 {
        return Err(DbError::BadWeights("n_views must be at least 1".into()));
    }
    let cam = scene
        .camera()
        .aimed_at(scene.workspace_center() + Vec3::new(0.0, 0.0, 0.10));
    let mut db = ReferenceDatabase::new(
        WeightBounds::loose(),
        UpdateGains::default(),
        crate::refdb::DEFAULT_SUBSET_SIZE,
    );
    let mut skipped = 0usize;
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0xD8));
    for spec in scene.object_specs() {
        let seg = SegParams {
            expected_width_m: 2.0 * spec.radius,
            expected_height_m: spec.height,
            ..SegParams::default()
        };
        for view in 0..n_views {
            let placed = PlacedObject::sample(spec.clone(), scene, &mut rng);
            let world = WorldState { object: Some(placed), gripper: None };
            let frame = render(
                &scene.clone(),
                &world,
                &cam,
                mix_seed(seed, (spec.texture_seed << 16) | view as u64),
            );
            let rois = extract_rois(&frame.depth, &cam, &seg);
            // Largest qualifying region is the object view.
            let Some(roi) = rois.iter().max_by_key(|r| r.len()) else {
                skipped += 1;
                continue;
            };
            let keypoints = frame.keypoints_in_roi(roi);
            if keypoints.is_empty() {
                skipped += 1;
                continue;
            }
            db.insert(spec.name.clone(), keypoints)?;
        }
    }
    db.set_bounds(WeightBounds::defaults_for(db.len()))?;
    let report = BuildReport { references: db.len(), skipped_views: skipped };
    Ok((db, report))
}

/// Runs one seeded trial with the default random object placement.
pub fn run_trial(
    scene: &SceneConfig,
    db: &ReferenceDatabase,
    params: &TrialParams,
    mode: GraspMode,
    model_error_mm: u32,
    seed: u64,
) -> TrialRecord {
    run_trial_with_placement(scene, db, params, mode, model_error_mm, seed, None)
}

/// [`run_trial`] with an explicit object placement (tests use this to put
/// the object outside the camera frustum, for instance).
pub fn run_trial_with_placement(
    scene: &SceneConfig,
    db: &ReferenceDatabase,
    params: &TrialParams,
    mode: GraspMode,
    model_error_mm: u32,
    seed: u64,
    placement: Option<PlacedObject>,
) -> TrialRecord {
    // Fresh weights every trial: no influence from previous detections.
    let mut db = db.clone();
    db.reset_uniform();
    let target = scene.target_object();
    let dt = 1.0 / params.frame_rate;

    let mut arm_rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 1));
    let arm = ArmModel::sample(params.arm_offset_radius_m, params.arm_jitter_sigma_m, &mut arm_rng);
    let mut error_rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 2));
    let model_error = random_error_vector(model_error_mm as f64 / 1000.0, &mut error_rng);
    let mut placement_rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 3));
    let mut object = placement
        .unwrap_or_else(|| PlacedObject::sample(target.clone(), scene, &mut placement_rng));
    let mut sample_rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 4));

    // The pipeline believes the camera mount sits at true + model_error.
    let true_cam = scene.camera();
    let believed_cam = true_cam.with_mount_offset(model_error);

    // Arm at home; orientation faces the workspace center.
    let home_origin = params.home_origin(scene);
    let home_rot = grasp_orientation_perpendicular(
        horizontal(scene.workspace_center() - home_origin),
        Vec3::new(0.0, 0.0, 1.0),
    );
    let home_actual = arm.execute(home_origin, &mut arm_rng);
    let home_pose_actual = compose_pose(home_rot, home_actual);

    let mut record = TrialRecord {
        seed,
        mode,
        model_error_mm,
        outcome: TrialOutcome::ObjectNotDetected,
        convergence_time_s: None,
        matcher_invocations: 0,
        tracker_invocations: 0,
    };

    // ---- Detection phase -------------------------------------------------
    let aim = scene.workspace_center() + Vec3::new(0.0, 0.0, 0.10);
    let (pan, tilt) = believed_cam.aim_angles(aim);
    let det_cam_true = true_cam.with_pan_tilt(pan, tilt);
    let det_cam_belief = believed_cam.with_pan_tilt(pan, tilt);
    let detection_world = WorldState {
        object: Some(object.clone()),
        gripper: Some(params.gripper_instance(home_pose_actual)),
    };
    let mut filter = PositionFilter::new(params.filter).expect("valid filter params");
    let total_frames = (params.detect_timeout_s * params.frame_rate).round() as usize;
    let mut convergence = None;
    for frame in 0..total_frames {
        let now = frame as f64 * dt;
        if filter.converged(now) {
            convergence = Some(now);
            break;
        }
        let rendered = render(scene, &detection_world, &det_cam_true, mix_seed(seed, 1_000 + frame as u64));
        let rois = extract_rois(&rendered.depth, &det_cam_belief, &params.seg);
        let subset = db.sample_subset_for_object(&target.name, db.subset_size(), &mut sample_rng);
        let mut matched: Vec<ReferenceId> = Vec::new();
        let mut unmatched: Vec<ReferenceId> = Vec::new();
        for id in subset {
            let mut hit = false;
            for roi in &rois {
                let kps = rendered.keypoints_in_roi(roi);
                let match_params = MatchParams {
                    rng_seed: mix_seed(seed, ((frame as u64) << 20) | id.0 as u64),
                    ..params.matching
                };
                record.matcher_invocations += 1;
                let result = match_reference_to_roi(db.get(id).expect("sampled id exists"), &kps, &match_params);
                if result.succeeded(match_params.match_min) {
                    hit = true;
                    let entry = FilterEntry::new(
                        roi.centroid_3d,
                        result.inlier_count as f64,
                        now,
                        roi.principal_axis,
                    )
                    .expect("detection entry is valid");
                    filter.push(entry).expect("frame clock is monotone");
                }
            }
            if hit {
                matched.push(id);
            } else {
                unmatched.push(id);
            }
        }
        db.update(&matched, &unmatched).expect("subset ids are valid");
    }
    let Some(t_conv) = convergence else {
        return record; // ObjectNotDetected
    };
    record.convergence_time_s = Some(t_conv);

    // ---- Grasp planning ---------------------------------------------------
    let estimate = filter.estimate(t_conv).expect("converged filter has an estimate");
    let mut axis = estimate.axis;
    if axis.z < 0.0 {
        axis = -axis;
    }
    // The ROI centroid averages visible *surface* points; shift it onto the
    // axis using the known radius.
    let cam_pos = det_cam_belief.world_from_camera().translation();
    let to_cam = horizontal(cam_pos - estimate.position)
        .normalized()
        .unwrap_or(Vec3::new(0.0, -1.0, 0.0));
    let object_est = estimate.position - to_cam * (params.surface_to_axis_factor * target.radius);

    let approach = horizontal(object_est - scene.arm_base)
        .normalized()
        .unwrap_or(Vec3::new(-1.0, 1.0, 0.0).normalized().unwrap());
    let rot = grasp_orientation_perpendicular(approach, axis);
    let z_g = rotate_col(&rot, 2);
    let grasp_origin = object_est + z_g * (params.finger_length_m / 2.0);
    let pre_grasp = grasp_origin - z_g * params.pre_grasp_standoff_m;
    let waypoints = [pre_grasp, grasp_origin];
    let tolerances = [params.waypoint_tolerance_m, params.final_tolerance_m];
    let gc_offset = Vec3::new(0.0, 0.0, -params.finger_length_m / 2.0);

    // ---- Approach phase ---------------------------------------------------
    let mut touched = false;
    let mut nominal = home_origin;
    let mut actual_origin = home_actual;
    let mut now = t_conv;
    match mode {
        GraspMode::Nvgg => {
            for wp in waypoints {
                loop {
                    now += dt;
                    let arrived = nominal.distance(wp) < 1e-9;
                    nominal = step_toward(nominal, wp, params.step_m);
                    actual_origin = arm.execute(nominal, &mut arm_rng);
                    let pose = compose_pose(rot, actual_origin);
                    touched |= contact_and_push(&mut object, &params.gripper_instance(pose), scene);
                    if arrived {
                        break;
                    }
                }
            }
        }
        GraspMode::Vgg => {
            let geom = params.gripper_geometry();
            // Orientation snaps to the grasp orientation at approach start;
            // the arm realizes orientation exactly in this model.
            let gc = rotate(&rot, gc_offset);
            let mut state = TrackerState::new(home_origin + gc, 0.03, 0.01, params.tracker);
            let mut command = home_origin;
            let mut wp_idx = 0usize;
            let max_frames = (params.approach_timeout_s * params.frame_rate).round() as usize;
            let mut frame = 0usize;
            while wp_idx < waypoints.len() {
                if frame >= max_frames {
                    record.outcome = TrialOutcome::GripperLost;
                    return record;
                }
                frame += 1;
                now += dt;
                record.tracker_invocations += 1;

                // Camera follows the estimated gripper position.
                let (pan, tilt) = believed_cam.aim_angles(state.position());
                let cam_true = true_cam.with_pan_tilt(pan, tilt);
                let cam_belief = believed_cam.with_pan_tilt(pan, tilt);

                let actual_pose = compose_pose(rot, actual_origin);
                let world = WorldState {
                    object: Some(object.clone()),
                    gripper: Some(params.gripper_instance(actual_pose)),
                };
                let rendered = render(scene, &world, &cam_true, mix_seed(seed, 5_000 + frame as u64));

                // Detect both fingers inside their model-predicted boxes.
                let model_pose = compose_pose(rot, command);
                let mut finger_obs = [None, None];
                for (i, side) in FingerSide::BOTH.iter().enumerate() {
                    let space = finger_space(&geom, *side);
                    finger_obs[i] = detect_finger(
                        &rendered.color,
                        &rendered.depth,
                        &space,
                        &model_pose,
                        &cam_belief,
                        &params.tracker,
                    )
                    .unwrap_or(None);
                }
                let measurement = combine_fingers(
                    finger_obs[0],
                    finger_obs[1],
                    &geom,
                    &compose_pose(rot, Vec3::ZERO),
                    params.tracker.finger_distance_tolerance,
                );
                state = kalman_step(&state, dt, measurement);

                // Advance the nominal path and correct the command. Targets
                // and the model prediction both refer to the gripper center
                // so the proportional term compares like with like.
                let wp = waypoints[wp_idx];
                let next_nominal = step_toward(nominal, wp, params.step_m);
                let model_gc = model_pose.apply(gc_offset);
                match servo_correction(&state, next_nominal + gc, model_gc, params.tracker.proportional_gain) {
                    ServoCommand::Hold => {
                        // Stop and wait for the filter to stabilize.
                    }
                    ServoCommand::Move(corrected_gc) => {
                        nominal = next_nominal;
                        command = corrected_gc - gc;
                        actual_origin = arm.execute(command, &mut arm_rng);
                    }
                }
                let pose = compose_pose(rot, actual_origin);
                touched |= contact_and_push(&mut object, &params.gripper_instance(pose), scene);

                // Waypoint reached when the *vision* estimate agrees.
                if state.position().distance(wp + gc) < tolerances[wp_idx] {
                    wp_idx += 1;
                }
            }
        }
    }
    let _ = now;

    // ---- Close, classify, lift ---------------------------------------------
    let final_pose = compose_pose(rot, actual_origin);
    record.outcome = classify_grasp(scene, params, &object, &final_pose, touched);
    record
}

/// Quasi-static grasp classification at the moment the fingers close.
fn classify_grasp(
    scene: &SceneConfig,
    params: &TrialParams,
    object: &PlacedObject,
    gripper_pose: &RigidTransform,
    touched: bool,
) -> TrialOutcome {
    let r = object.spec.radius;
    let axis_mid = Vec3::new(
        object.x,
        object.y,
        scene.table_height + object.spec.height / 2.0,
    );
    let rel = gripper_pose.inverse().apply(axis_mid);
    // Vertical miss: fingers entirely above or below the object.
    if rel.y.abs() > object.spec.height / 2.0 + params.finger_thickness_m / 2.0 {
        return TrialOutcome::GraspingFailed;
    }
    // Lateral: the axis must lie between the open finger faces to be caught.
    if rel.x.abs() > params.open_gap_m / 2.0 {
        return TrialOutcome::GraspingFailed;
    }
    // Along the approach: the grip chord is the diameter while the axis is
    // within the finger extent, shrinking to a circular chord just outside.
    let gap_to_strip = if rel.z > 0.0 {
        rel.z
    } else if rel.z < -params.finger_length_m {
        -params.finger_length_m - rel.z
    } else {
        0.0
    };
    let chord = if gap_to_strip <= 0.0 {
        2.0 * r
    } else if gap_to_strip < r {
        2.0 * (r * r - gap_to_strip * gap_to_strip).sqrt()
    } else {
        0.0
    };
    if chord <= 0.0 {
        return TrialOutcome::GraspingFailed; // closing on air
    }
    if 2.0 * r - chord > params.friction_margin_m {
        return TrialOutcome::LiftingFailed; // slips during the 0.15 m lift
    }
    if touched {
        TrialOutcome::ObjectTouched
    } else {
        TrialOutcome::ObjectNotTouched
    }
}

/// Checks finger-object contact at one pose; on contact the object is
/// pushed out of the penetration (quasi-static sliding on the table).
/// Returns whether any contact happened.
fn contact_and_push(object: &mut PlacedObject, gripper: &GripperInstance, scene: &SceneConfig) -> bool {
    let origin_z = gripper.pose.translation().z;
    let obj_lo = scene.table_height;
    let obj_hi = scene.table_height + object.spec.height;
    // Fingers are thin vertically; y of the gripper frame is near world z.
    if origin_z + gripper.finger_thickness / 2.0 < obj_lo || origin_z - gripper.finger_thickness / 2.0 > obj_hi {
        return false;
    }
    let mut touched = false;
    let r = object.spec.radius;
    for _pass in 0..2 {
        let world_from_gripper = gripper.pose;
        let gripper_from_world = world_from_gripper.inverse();
        let axis_at_gripper_height = Vec3::new(object.x, object.y, origin_z);
        let rel = gripper_from_world.apply(axis_at_gripper_height);
        for (lo, hi) in gripper.finger_boxes() {
            // 2-D overlap in the gripper x-z plane.
            let cx = rel.x.clamp(lo.x, hi.x);
            let cz = rel.z.clamp(lo.z, hi.z);
            let (dx, dz) = (rel.x - cx, rel.z - cz);
            let dist_sq = dx * dx + dz * dz;
            if dist_sq >= r * r {
                continue;
            }
            touched = true;
            let push_local = if dist_sq > 1e-12 {
                let dist = dist_sq.sqrt();
                let pen = r - dist + 1e-3;
                Vec3::new(dx / dist * pen, 0.0, dz / dist * pen)
            } else {
                // Center inside the footprint: exit through the nearest face.
                let exits = [
                    (rel.x - lo.x + r, Vec3::new(-1.0, 0.0, 0.0)),
                    (hi.x - rel.x + r, Vec3::new(1.0, 0.0, 0.0)),
                    (rel.z - lo.z + r, Vec3::new(0.0, 0.0, -1.0)),
                    (hi.z - rel.z + r, Vec3::new(0.0, 0.0, 1.0)),
                ];
                let (pen, dir) = exits
                    .iter()
                    .min_by(|a, b| a.0.total_cmp(&b.0))
                    .map(|(p, d)| (*p, *d))
                    .unwrap();
                dir * (pen + 1e-3)
            };
            let push_world = world_from_gripper.rotate(push_local);
            object.x += push_world.x;
            object.y += push_world.y;
        }
    }
    touched
}

/// Orientation whose z column is the approach direction projected
/// perpendicular to the (near-vertical) object axis, with y along the axis.
fn grasp_orientation_perpendicular(approach_horizontal: Vec3, axis: Vec3) -> nalgebra::Matrix3<f64> {
    let z = (approach_horizontal - axis * approach_horizontal.dot(axis))
        .normalized()
        .unwrap_or(Vec3::new(1.0, 0.0, 0.0));
    let x = axis.cross(z).normalized().unwrap_or(Vec3::new(0.0, 1.0, 0.0));
    let y = z.cross(x);
    nalgebra::Matrix3::from_columns(&[x.to_na(), y.to_na(), z.to_na()])
}

fn horizontal(v: Vec3) -> Vec3 {
    Vec3::new(v.x, v.y, 0.0)
}

fn compose_pose(rot: nalgebra::Matrix3<f64>, translation: Vec3) -> RigidTransform {
    RigidTransform::new(rot, translation).expect("grasp orientation is orthonormal")
}

fn rotate(rot: &nalgebra::Matrix3<f64>, v: Vec3) -> Vec3 {
    Vec3::from_na(rot * v.to_na())
}

fn rotate_col(rot: &nalgebra::Matrix3<f64>, col: usize) -> Vec3 {
    let c = rot.column(col);
    Vec3::new(c[0], c[1], c[2])
}

/// Moves `from` toward `to` by at most `step`.
fn step_toward(from: Vec3, to: Vec3, step: f64) -> Vec3 {
    let delta = to - from;
    let dist = delta.norm();
    if dist <= step {
        to
    } else {
        from + delta * (step / dist)
    }
}
