//! Scene description: table, objects, camera and the procedural texture.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::geometry::{CameraModel, RigidTransform, Vec3};

use super::mix_seed;

/// Static world description with every default frozen.
#[derive(Debug, Clone)]
pub struct SceneConfig {
    /// Tabletop height above the world origin (meters).
    pub table_height: f64,
    /// Table half extents around the workspace center.
    pub table_half_x: f64,
    pub table_half_y: f64,
    /// Target cylinder dimensions (meters).
    pub cylinder_radius: f64,
    pub cylinder_height: f64,
    /// Objects are placed inside a circle of this radius around the
    /// workspace center (20 cm diameter by default).
    pub placement_radius: f64,
    /// Surface anchor density for the procedural texture (count per m²).
    pub keypoint_density: f64,
    /// Per-observation Gaussian noise added to each descriptor component.
    pub descriptor_noise_sigma: f32,
    pub descriptor_len: usize,
    /// Gaussian depth noise of the sensor (millimeters).
    pub depth_noise_sigma_mm: f64,
    pub image_width: usize,
    pub image_height: usize,
    /// Focal length in pixels (fx = fy).
    pub focal_px: f64,
    /// Pan-tilt mount position in the world; mount rotation is identity
    /// (z up), aiming is done through the pan/tilt angles.
    pub camera_mount: Vec3,
    /// Arm base position on the table edge.
    pub arm_base: Vec3,
    pub background_color: [u8; 3],
    pub table_color: [u8; 3],
    pub object_color: [u8; 3],
    pub finger_color: [u8; 3],
}

impl Default for SceneConfig {
    fn default() -> Self {
        let table_height = 0.72;
        SceneConfig {
            table_height,
            table_half_x: 1.20,
            table_half_y: 1.00,
            cylinder_radius: 0.03,
            cylinder_height: 0.20,
            placement_radius: 0.10,
            keypoint_density: 4500.0,
            descriptor_noise_sigma: 0.05,
            descriptor_len: crate::matching::DESCRIPTOR_LEN,
            depth_noise_sigma_mm: 2.5,
            image_width: 320,
            image_height: 240,
            focal_px: 350.0,
            camera_mount: Vec3::new(0.0, -0.55, table_height + 0.15),
            arm_base: Vec3::new(0.32, -0.32, table_height),
            background_color: [205, 200, 195],
            table_color: [168, 166, 160],
            object_color: [120, 118, 116],
            finger_color: [22, 22, 24],
        }
    }
}

impl SceneConfig {
    /// The pan-tilt camera at rest (before aiming).
    pub fn camera(&self) -> CameraModel {
        CameraModel::new(
            self.focal_px,
            self.focal_px,
            self.image_width as f64 / 2.0,
            self.image_height as f64 / 2.0,
            self.image_width,
            self.image_height,
            RigidTransform::from_translation(self.camera_mount),
        )
        .expect("scene camera intrinsics are valid")
    }

    /// Center of the object placement area, on the tabletop.
    pub fn workspace_center(&self) -> Vec3 {
        Vec3::new(0.0, 0.0, self.table_height)
    }

    /// The five database objects: same shape family, diameters spread
    /// ±20% around the target, distinct texture seeds. Index 2 is the
    /// grasp target.
    pub fn object_specs(&self) -> Vec<ObjectSpec> {
        [0.8, 0.9, 1.0, 1.1, 1.2]
            .iter()
            .enumerate()
            .map(|(i, &factor)| ObjectSpec {
                name: format!("object-{}", i + 1),
                radius: self.cylinder_radius * factor,
                height: self.cylinder_height,
                texture_seed: 101 + i as u64,
            })
            .collect()
    }

    pub fn target_object(&self) -> ObjectSpec {
        self.object_specs().swap_remove(2)
    }

    /// Deterministic surface anchors of an object's procedural texture.
    pub fn surface_anchors(&self, spec: &ObjectSpec) -> Vec<Anchor> {
        let lateral_area = 2.0 * std::f64::consts::PI * spec.radius * spec.height;
        let count = (self.keypoint_density * lateral_area).ceil() as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(spec.texture_seed, 0xA11C));
        (0..count)
            .map(|_| {
                let theta = rng.random::<f64>() * std::f64::consts::TAU;
                // Keep anchors off the rims.
                let height = spec.height * (0.05 + 0.90 * rng.random::<f64>());
                let descriptor_base: Vec<f32> = (0..self.descriptor_len)
                    .map(|_| StandardNormal.sample(&mut rng))
                    .collect();
                Anchor { theta, height, descriptor_base }
            })
            .collect()
    }
}

/// One of the database objects.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectSpec {
    pub name: String,
    pub radius: f64,
    pub height: f64,
    pub texture_seed: u64,
}

/// Fixed texture anchor on the lateral surface: cylindrical coordinates plus
/// the noise-free descriptor pattern.
#[derive(Debug, Clone)]
pub struct Anchor {
    /// Angle around the axis in the object's own frame (radians).
    pub theta: f64,
    /// Height above the object base (meters).
    pub height: f64,
    pub descriptor_base: Vec<f32>,
}

/// An object standing on the table.
#[derive(Debug, Clone)]
pub struct PlacedObject {
    pub spec: ObjectSpec,
    /// Axis position on the tabletop.
    pub x: f64,
    pub y: f64,
    /// Rotation about the vertical axis (radians).
    pub rotation: f64,
}

impl PlacedObject {
    /// Uniform placement inside the allowed circle with uniform rotation.
    pub fn sample(spec: ObjectSpec, scene: &SceneConfig, rng: &mut ChaCha8Rng) -> Self {
        // Uniform over the disk via sqrt radius.
        let r = scene.placement_radius * rng.random::<f64>().sqrt();
        let phi = rng.random::<f64>() * std::f64::consts::TAU;
        PlacedObject {
            spec,
            x: r * phi.cos(),
            y: r * phi.sin(),
            rotation: rng.random::<f64>() * std::f64::consts::TAU,
        }
    }

    pub fn axis_base(&self, scene: &SceneConfig) -> Vec3 {
        Vec3::new(self.x, self.y, scene.table_height)
    }

    /// World position of a surface anchor.
    pub fn anchor_world(&self, anchor: &Anchor, scene: &SceneConfig) -> Vec3 {
        let theta = anchor.theta + self.rotation;
        Vec3::new(
            self.x + self.spec.radius * theta.cos(),
            self.y + self.spec.radius * theta.sin(),
            scene.table_height + anchor.height,
        )
    }

    /// Outward surface normal at an anchor.
    pub fn anchor_normal(&self, anchor: &Anchor) -> Vec3 {
        let theta = anchor.theta + self.rotation;
        Vec3::new(theta.cos(), theta.sin(), 0.0)
    }
}

/// Gripper state for rendering and contact checks.
#[derive(Debug, Clone)]
pub struct GripperInstance {
    /// Pose of the gripper frame (origin at the fingertip plane center).
    pub pose: RigidTransform,
    /// Inner gap between the finger faces (meters).
    pub gap: f64,
    pub finger_width: f64,
    pub finger_thickness: f64,
    pub finger_length: f64,
}

impl GripperInstance {
    /// Center-to-center finger distance.
    pub fn center_width(&self) -> f64 {
        self.gap + self.finger_width
    }

    /// The two finger boxes in the gripper frame as (min, max) corners.
    pub fn finger_boxes(&self) -> [(Vec3, Vec3); 2] {
        let half = self.center_width() / 2.0;
        let make = |s: f64| {
            (
                Vec3::new(
                    s * half - self.finger_width / 2.0,
                    -self.finger_thickness / 2.0,
                    -self.finger_length,
                ),
                Vec3::new(s * half + self.finger_width / 2.0, self.finger_thickness / 2.0, 0.0),
            )
        };
        [make(-1.0), make(1.0)]
    }
}

/// Everything the renderer needs for one frame.
#[derive(Debug, Clone, Default)]
pub struct WorldState {
    pub object: Option<PlacedObject>,
    pub gripper: Option<GripperInstance>,
}
