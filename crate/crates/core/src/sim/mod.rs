//! Deterministic synthetic world and experiment harness.
//!
//! The scene is a table carrying one upright textured cylinder, a floating
//! two-finger gripper driven by a low-accuracy arm model, and a pan-tilt
//! depth camera. Rendering is plain ray casting with quantized millimeter
//! depth and Gaussian depth noise; object texture is a fixed set of surface
//! anchor points whose descriptors are deterministic functions of the
//! object seed plus per-observation noise, so matching can genuinely fail
//! under occlusion and viewpoint change.
//!
//! On top of the world sit the trial runner (the full detect → approach →
//! grasp → lift protocol with its six outcomes), the experiment runner with
//! CSV emission, and the matching-cost benchmark comparing the
//! probabilistic-subset strategy against matching every reference.

mod arm;
mod bench;
mod experiment;
mod render;
mod scene;
mod trial;

pub use arm::ArmModel;
pub use bench::{run_matching_bench, BenchFrameSample, BenchReport, BenchRow, Strategy};
pub use experiment::{
    histogram, read_results_csv, run_experiment, write_histogram_csv, write_results_csv,
    ExperimentStats, HistogramBin,
};
pub use render::{render, RenderedFrame};
pub use scene::{ObjectSpec, PlacedObject, SceneConfig, WorldState};
pub use trial::{
    build_reference_db, run_trial, BuildReport, GraspMode, TrialOutcome, TrialParams, TrialRecord,
};

/// Splitmix64-style mixing for deriving independent named RNG streams from
/// one trial seed. Every random decision in a trial hangs off such a stream,
/// which keeps results bit-identical between parallel and sequential runs.
pub fn mix_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}
