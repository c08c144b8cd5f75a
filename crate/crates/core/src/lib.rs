//! Visual-servoing grasping pipeline built on RGB-D depth segmentation.
//!
//! The library covers the full loop needed to grasp an upright cylindrical
//! object with a low-accuracy arm:
//!
//! 1. [`depth_seg`] — region-of-interest detection on depth images via
//!    first/second derivative edge detection, morphology and floodfill.
//! 2. [`matching`] — descriptor matching plus RANSAC homography between a
//!    stored reference and a detected region.
//! 3. [`refdb`] — a probabilistic database of references with bounded,
//!    normalized sampling weights and success/failure learning updates.
//! 4. [`posfilter`] — recency/quality-weighted aggregation of detections
//!    with leave-one-out outlier removal.
//! 5. [`gripper_track`] — finger detection inside error-inflated 3-D boxes,
//!    a constant-velocity Kalman tracker and proportional servo correction.
//! 6. [`sim`] — a deterministic synthetic scene (table, textured cylinder,
//!    two-finger gripper, pan-tilt camera, low-accuracy arm) plus the trial
//!    and benchmark harnesses used to validate everything above.
//!
//! Data-parallel inner loops (trials, benchmark videos, rendering) run on
//! rayon when the default `parallel` feature is enabled and fall back to
//! plain sequential iteration otherwise; results are identical either way.

pub mod config;
pub mod depth_seg;
pub mod geometry;
pub mod gripper_track;
pub mod matching;
pub(crate) mod par;
pub mod posfilter;
pub mod raster;
pub mod refdb;
pub mod sim;

pub use geometry::{CameraModel, GeometryError, PixelCoord, RigidTransform, Vec3};
pub use raster::{ColorImage, DepthImage, Mask};
