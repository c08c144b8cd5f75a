//! Ray-cast rendering of the synthetic scene.
//!
//! Depth is the camera-frame z of the first hit, quantized to millimeters
//! with Gaussian sensor noise; rays that hit nothing return 0. Color is
//! flat per surface (non-dark background and table, mid-gray object, black
//! fingers). The frame also carries the ground-truth object mask and the
//! procedural keypoints visible in it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::depth_seg::Superpixel;
use crate::geometry::{CameraModel, Vec3};
use crate::matching::{DescriptorSource, Keypoint};
use crate::par;
use crate::raster::{ColorImage, DepthImage, Mask, MAX_DEPTH_MM};

use super::mix_seed;
use super::scene::{SceneConfig, WorldState};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Surface {
    None,
    Table,
    Object,
    Finger,
}

/// One rendered sensor frame plus ground truth.
#[derive(Debug, Clone)]
pub struct RenderedFrame {
    pub depth: DepthImage,
    pub color: ColorImage,
    /// Pixels whose first hit is the object (occlusions excluded).
    pub object_mask: Mask,
    /// Procedural keypoints visible this frame, with observation noise.
    pub keypoints: Vec<Keypoint>,
}

impl DescriptorSource for RenderedFrame {
    fn keypoints_in_roi(&self, roi: &Superpixel) -> Vec<Keypoint> {
        self.keypoints
            .iter()
            .filter(|kp| roi.contains(kp.px))
            .cloned()
            .collect()
    }
}

/// Renders the world from the (true) camera. `frame_seed` drives the depth
/// and descriptor observation noise; rendering is deterministic in it.
pub fn render(scene: &SceneConfig, world: &WorldState, cam: &CameraModel, frame_seed: u64) -> RenderedFrame {
    let (w, h) = (cam.width(), cam.height());
    let cam_pose = cam.world_from_camera();
    let origin = cam_pose.translation();
    // Finger boxes transformed once.
    let gripper = world.gripper.as_ref().map(|g| (g.pose.inverse(), g.finger_boxes()));

    let rows = par::map_indexed(h, |row| {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(frame_seed, 0xB0B0 + row as u64));
        let noise = Normal::new(0.0, scene.depth_noise_sigma_mm).unwrap();
        let mut depth_row = vec![0u16; w];
        let mut color_row = vec![scene.background_color; w];
        let mut mask_row = vec![false; w];
        for col in 0..w {
            let dir_cam = Vec3::new(
                (col as f64 - cam.cx()) / cam.fx(),
                (row as f64 - cam.cy()) / cam.fy(),
                1.0,
            );
            let dir = cam_pose.rotate(dir_cam);
            let mut best = f64::INFINITY;
            let mut surface = Surface::None;

            if let Some(t) = hit_table(scene, origin, dir) {
                if t < best {
                    best = t;
                    surface = Surface::Table;
                }
            }
            if let Some(obj) = &world.object {
                if let Some(t) = hit_cylinder(
                    origin,
                    dir,
                    obj.x,
                    obj.y,
                    scene.table_height,
                    scene.table_height + obj.spec.height,
                    obj.spec.radius,
                ) {
                    if t < best {
                        best = t;
                        surface = Surface::Object;
                    }
                }
            }
            if let Some((world_to_gripper, boxes)) = &gripper {
                let o_local = world_to_gripper.apply(origin);
                let d_local = world_to_gripper.rotate(dir);
                for (lo, hi) in boxes {
                    if let Some(t) = hit_aabb(o_local, d_local, *lo, *hi) {
                        if t < best {
                            best = t;
                            surface = Surface::Finger;
                        }
                    }
                }
            }

            if surface != Surface::None {
                let mm = best * 1000.0 + noise.sample(&mut rng);
                depth_row[col] = (mm.round() as i64).clamp(1, MAX_DEPTH_MM as i64 - 1) as u16;
                color_row[col] = match surface {
                    Surface::Table => scene.table_color,
                    Surface::Object => scene.object_color,
                    Surface::Finger => scene.finger_color,
                    Surface::None => unreachable!(),
                };
                mask_row[col] = surface == Surface::Object;
            }
        }
        (depth_row, color_row, mask_row)
    });

    let mut depth = DepthImage::new(w, h);
    let mut color = ColorImage::new(w, h, scene.background_color);
    let mut object_mask = Mask::new(w, h);
    for (row, (depth_row, color_row, mask_row)) in rows.into_iter().enumerate() {
        for col in 0..w {
            depth.set(row, col, depth_row[col]);
            color.set(row, col, color_row[col]);
            object_mask.set(row, col, mask_row[col]);
        }
    }

    let keypoints = visible_keypoints(scene, world, cam, &depth, frame_seed);
    RenderedFrame { depth, color, object_mask, keypoints }
}

/// Projects the placed object's anchors, keeping the front-facing ones that
/// agree with the rendered depth (occlusion test) and lie inside the image.
fn visible_keypoints(
    scene: &SceneConfig,
    world: &WorldState,
    cam: &CameraModel,
    depth: &DepthImage,
    frame_seed: u64,
) -> Vec<Keypoint> {
    let Some(obj) = &world.object else {
        return Vec::new();
    };
    let cam_pos = cam.world_from_camera().translation();
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(frame_seed, 0xFEA7));
    let noise = Normal::new(0.0, scene.descriptor_noise_sigma as f64).unwrap();
    let mut out = Vec::new();
    for anchor in scene.surface_anchors(&obj.spec) {
        let p = obj.anchor_world(&anchor, scene);
        let normal = obj.anchor_normal(&anchor);
        let to_cam = match (cam_pos - p).normalized() {
            Some(v) => v,
            None => continue,
        };
        // Grazing anchors are not reliably extractable.
        if normal.dot(to_cam) < 0.25 {
            continue;
        }
        let Ok(px) = cam.project(p) else { continue };
        if !px.inside(cam.width(), cam.height()) {
            continue;
        }
        let z = cam.depth_of(p);
        let rendered = depth.get(px.row as usize, px.col as usize);
        if rendered == 0 {
            continue;
        }
        // Occlusion: the depth buffer must see (approximately) this point.
        if (rendered as f64 / 1000.0 - z).abs() > 0.02 {
            continue;
        }
        let descriptor: Vec<f32> = anchor
            .descriptor_base
            .iter()
            .map(|&b| b + noise.sample(&mut rng) as f32)
            .collect();
        out.push(Keypoint {
            px,
            descriptor,
            scale: (cam.fx() * 0.01 / z) as f32,
        });
    }
    out
}

fn hit_table(scene: &SceneConfig, origin: Vec3, dir: Vec3) -> Option<f64> {
    if dir.z.abs() < 1e-12 {
        return None;
    }
    let t = (scene.table_height - origin.z) / dir.z;
    if t <= 1e-6 {
        return None;
    }
    let x = origin.x + t * dir.x;
    let y = origin.y + t * dir.y;
    (x.abs() <= scene.table_half_x && y.abs() <= scene.table_half_y).then_some(t)
}

/// First intersection with a vertical finite cylinder (side or top cap).
fn hit_cylinder(origin: Vec3, dir: Vec3, cx: f64, cy: f64, z0: f64, z1: f64, r: f64) -> Option<f64> {
    let mut best: Option<f64> = None;
    let ox = origin.x - cx;
    let oy = origin.y - cy;
    let a = dir.x * dir.x + dir.y * dir.y;
    if a > 1e-12 {
        let b = 2.0 * (ox * dir.x + oy * dir.y);
        let c = ox * ox + oy * oy - r * r;
        let disc = b * b - 4.0 * a * c;
        if disc >= 0.0 {
            let sq = disc.sqrt();
            for t in [(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)] {
                if t > 1e-6 {
                    let z = origin.z + t * dir.z;
                    if z0 <= z && z <= z1 && best.is_none_or(|bst| t < bst) {
                        best = Some(t);
                    }
                }
            }
        }
    }
    // Top cap.
    if dir.z.abs() > 1e-12 {
        let t = (z1 - origin.z) / dir.z;
        if t > 1e-6 {
            let x = origin.x + t * dir.x - cx;
            let y = origin.y + t * dir.y - cy;
            if x * x + y * y <= r * r && best.is_none_or(|bst| t < bst) {
                best = Some(t);
            }
        }
    }
    best
}

/// Slab test against an axis-aligned box in the local frame.
fn hit_aabb(origin: Vec3, dir: Vec3, lo: Vec3, hi: Vec3) -> Option<f64> {
    let mut t_enter = f64::NEG_INFINITY;
    let mut t_exit = f64::INFINITY;
    for (o, d, l, h) in [
        (origin.x, dir.x, lo.x, hi.x),
        (origin.y, dir.y, lo.y, hi.y),
        (origin.z, dir.z, lo.z, hi.z),
    ] {
        if d.abs() < 1e-12 {
            if o < l || o > h {
                return None;
            }
        } else {
            let (t0, t1) = ((l - o) / d, (h - o) / d);
            let (t0, t1) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
            t_enter = t_enter.max(t0);
            t_exit = t_exit.min(t1);
            if t_enter > t_exit {
                return None;
            }
        }
    }
    (t_exit > 1e-6).then(|| t_enter.max(1e-6))
}
