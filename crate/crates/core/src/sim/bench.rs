//! Matching-cost benchmark: probabilistic subset vs. matching every
//! reference, over pre-rendered videos and a range of database sizes.
//!
//! The point under test is the cost bound: with the probabilistic database
//! the matcher runs at most `subset_size * |ROIs|` times per frame no
//! matter how many references exist, while the all-references strategy
//! performs exactly `n * |ROIs|` invocations.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::depth_seg::{extract_rois, SegParams, Superpixel};
use crate::matching::{match_reference_to_roi, DescriptorSource, Keypoint, MatchParams};
use crate::par;
use crate::refdb::{ReferenceDatabase, ReferenceId, UpdateGains, WeightBounds, DEFAULT_SUBSET_SIZE};

use super::mix_seed;
use super::render::render;
use super::scene::{PlacedObject, SceneConfig, WorldState};
use super::trial::TrialParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Weighted random subset with collapse on duplicates.
    Probabilistic,
    /// Every reference against every ROI.
    AllReferences,
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Strategy::Probabilistic => write!(f, "prob"),
            Strategy::AllReferences => write!(f, "all"),
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "prob" | "probabilistic" => Ok(Strategy::Probabilistic),
            "all" | "all-references" => Ok(Strategy::AllReferences),
            other => Err(format!("unknown strategy {other:?} (expected prob or all)")),
        }
    }
}

/// Per-frame measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchFrameSample {
    pub db_size: usize,
    pub video: usize,
    pub frame: usize,
    pub rois: usize,
    pub invocations: usize,
    pub matching_ms: f64,
}

/// Per-database-size aggregate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchRow {
    pub db_size: usize,
    pub frames: usize,
    pub mean_rois: f64,
    pub mean_invocations: f64,
    pub max_invocations: usize,
    pub mean_matching_ms: f64,
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub strategy: Strategy,
    pub subset_size: usize,
    pub rows: Vec<BenchRow>,
    pub samples: Vec<BenchFrameSample>,
}

impl BenchReport {
    pub fn write_csv<P: AsRef<Path>>(&self, path: P) -> std::io::Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(
            out,
            "db_size,strategy,frames,mean_rois,mean_invocations,max_invocations,mean_matching_ms"
        )?;
        for row in &self.rows {
            writeln!(
                out,
                "{},{},{},{:.4},{:.4},{},{:.4}",
                row.db_size,
                self.strategy,
                row.frames,
                row.mean_rois,
                row.mean_invocations,
                row.max_invocations,
                row.mean_matching_ms
            )?;
        }
        Ok(())
    }
}

struct CachedFrame {
    rois: Vec<Superpixel>,
    roi_keypoints: Vec<Vec<Keypoint>>,
}

/// Runs the benchmark: `videos` seeded static-object videos of
/// `frames_per_video` frames are rendered and segmented once, then matched
/// under the given strategy for every database size.
pub fn run_matching_bench(
    scene: &SceneConfig,
    db_sizes: &[usize],
    strategy: Strategy,
    videos: usize,
    frames_per_video: usize,
    seed: u64,
) -> BenchReport {
    assert!(!db_sizes.is_empty() && videos >= 1 && frames_per_video >= 1);
    let max_size = *db_sizes.iter().max().unwrap();
    let master = build_master_references(scene, max_size, seed);
    let params = TrialParams::for_scene(scene);
    let cam = scene
        .camera()
        .aimed_at(scene.workspace_center() + crate::geometry::Vec3::new(0.0, 0.0, 0.10));

    // Pre-render all videos once; matching cost is what varies with n.
    let specs = scene.object_specs();
    let frames: Vec<Vec<CachedFrame>> = par::map_indexed(videos, |v| {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0xBEC0 + v as u64));
        let spec = specs[v % specs.len()].clone();
        let seg = SegParams {
            expected_width_m: 2.0 * spec.radius,
            expected_height_m: spec.height,
            ..params.seg.clone()
        };
        let placed = PlacedObject::sample(spec, scene, &mut rng);
        let world = WorldState { object: Some(placed), gripper: None };
        (0..frames_per_video)
            .map(|f| {
                let rendered = render(
                    scene,
                    &world,
                    &cam,
                    mix_seed(seed, ((v as u64) << 32) | f as u64),
                );
                let rois = extract_rois(&rendered.depth, &cam, &seg);
                let roi_keypoints = rois.iter().map(|r| rendered.keypoints_in_roi(r)).collect();
                CachedFrame { rois, roi_keypoints }
            })
            .collect()
    });

    let mut rows = Vec::new();
    let mut samples = Vec::new();
    for &n in db_sizes {
        assert!(n <= master.len(), "database size {n} exceeds available references");
        let refs: Vec<(String, Vec<Keypoint>, f64)> = master[..n]
            .iter()
            .map(|(obj, kps)| (obj.clone(), kps.clone(), 1.0 / n as f64))
            .collect();
        let mut db = ReferenceDatabase::from_parts(
            refs,
            WeightBounds::defaults_for(n),
            UpdateGains::default(),
            DEFAULT_SUBSET_SIZE,
        )
        .expect("bench database is feasible");
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0x5A17 + n as u64));
        let mut size_samples = Vec::new();
        for (v, video) in frames.iter().enumerate() {
            db.reset_uniform();
            for (f, frame) in video.iter().enumerate() {
                let start = Instant::now();
                let mut invocations = 0usize;
                let ids: Vec<ReferenceId> = match strategy {
                    Strategy::Probabilistic => db.sample_subset(db.subset_size(), &mut rng),
                    Strategy::AllReferences => db.iter().map(|r| r.id).collect(),
                };
                let mut matched = Vec::new();
                let mut unmatched = Vec::new();
                for id in ids {
                    let mut hit = false;
                    for kps in &frame.roi_keypoints {
                        let mp = MatchParams {
                            rng_seed: mix_seed(seed, ((f as u64) << 20) | id.0 as u64),
                            ..params.matching
                        };
                        invocations += 1;
                        let result =
                            match_reference_to_roi(db.get(id).expect("bench id"), kps, &mp);
                        if result.succeeded(mp.match_min) {
                            hit = true;
                        }
                    }
                    if hit {
                        matched.push(id);
                    } else {
                        unmatched.push(id);
                    }
                }
                if strategy == Strategy::Probabilistic {
                    db.update(&matched, &unmatched).expect("bench update");
                }
                size_samples.push(BenchFrameSample {
                    db_size: n,
                    video: v,
                    frame: f,
                    rois: frame.rois.len(),
                    invocations,
                    matching_ms: start.elapsed().as_secs_f64() * 1000.0,
                });
            }
        }
        let frames_n = size_samples.len();
        rows.push(BenchRow {
            db_size: n,
            frames: frames_n,
            mean_rois: size_samples.iter().map(|s| s.rois as f64).sum::<f64>() / frames_n as f64,
            mean_invocations: size_samples.iter().map(|s| s.invocations as f64).sum::<f64>()
                / frames_n as f64,
            max_invocations: size_samples.iter().map(|s| s.invocations).max().unwrap_or(0),
            mean_matching_ms: size_samples.iter().map(|s| s.matching_ms).sum::<f64>() / frames_n as f64,
        });
        samples.extend(size_samples);
    }
    BenchReport {
        strategy,
        subset_size: DEFAULT_SUBSET_SIZE,
        rows,
        samples,
    }
}

/// Renders object views round-robin until `count` references exist.
fn build_master_references(scene: &SceneConfig, count: usize, seed: u64) -> Vec<(String, Vec<Keypoint>)> {
    let cam = scene
        .camera()
        .aimed_at(scene.workspace_center() + crate::geometry::Vec3::new(0.0, 0.0, 0.10));
    let specs = scene.object_specs();
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0x3EF5));
    let mut out = Vec::with_capacity(count);
    let mut view = 0u64;
    while out.len() < count {
        let spec = specs[view as usize % specs.len()].clone();
        let seg = SegParams {
            expected_width_m: 2.0 * spec.radius,
            expected_height_m: spec.height,
            ..SegParams::default()
        };
        let placed = PlacedObject::sample(spec.clone(), scene, &mut rng);
        let world = WorldState { object: Some(placed), gripper: None };
        let frame = render(scene, &world, &cam, mix_seed(seed, 0x77DD ^ view));
        view += 1;
        let rois = extract_rois(&frame.depth, &cam, &seg);
        let Some(roi) = rois.iter().max_by_key(|r| r.len()) else {
            continue;
        };
        let kps = frame.keypoints_in_roi(roi);
        if kps.is_empty() {
            continue;
        }
        out.push((spec.name, kps));
    }
    out
}
