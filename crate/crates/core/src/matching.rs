//! Descriptor matching between a stored reference and a detected region.
//!
//! The feature *extractor* is deliberately an interface: the pipeline treats
//! descriptors as opaque fixed-length vectors, so any source (a real detector
//! or the simulator's procedural keypoints) plugs in behind
//! [`DescriptorSource`]. Matching is ratio-test nearest neighbor followed by
//! a 4-point RANSAC homography; the RANSAC inlier count is the quality index
//! `q` consumed by the position filter.

use nalgebra::{DMatrix, Matrix3, Vector3};
use rand::seq::index::sample as sample_indices;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::depth_seg::Superpixel;
use crate::geometry::PixelCoord;
use crate::refdb::Reference;

/// Descriptor length used throughout the shipped pipeline.
pub const DESCRIPTOR_LEN: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct Keypoint {
    pub px: PixelCoord,
    /// Fixed-length descriptor; all keypoints in one database share a length.
    pub descriptor: Vec<f32>,
    /// Characteristic scale in pixels.
    pub scale: f32,
}

/// Anything that can produce keypoints restricted to a detected region.
pub trait DescriptorSource {
    fn keypoints_in_roi(&self, roi: &Superpixel) -> Vec<Keypoint>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchParams {
    /// Lowe ratio: nearest/second-nearest distance must fall below this.
    pub ratio: f32,
    /// RANSAC iterations.
    pub ransac_iters: usize,
    /// Reprojection error below which a pair counts as an inlier (pixels).
    pub inlier_px: f64,
    /// Minimum inlier count for a successful reference-to-ROI match.
    pub match_min: usize,
    pub rng_seed: u64,
}

impl Default for MatchParams {
    fn default() -> Self {
        MatchParams {
            ratio: 0.8,
            ransac_iters: 200,
            inlier_px: 3.0,
            match_min: 8,
            rng_seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MatchResult {
    /// (reference keypoint index, roi keypoint index) candidate pairs.
    pub pairs: Vec<(usize, usize)>,
    /// Geometrically consistent pair count; the quality index `q`.
    pub inlier_count: usize,
    /// Best-fit homography, present iff `inlier_count >= 4`.
    pub homography: Option<Matrix3<f64>>,
}

impl MatchResult {
    pub fn succeeded(&self, match_min: usize) -> bool {
        self.inlier_count >= match_min
    }
}

/// Ratio-test nearest-neighbor matching by Euclidean descriptor distance.
///
/// Each reference keypoint pairs with its nearest ROI keypoint iff the
/// nearest/second-nearest ratio is below `ratio`; pairs are unique in the
/// ROI index, best distance winning conflicts.
pub fn match_descriptors(ref_kps: &[Keypoint], roi_kps: &[Keypoint], ratio: f32) -> Vec<(usize, usize)> {
    if ref_kps.is_empty() || roi_kps.is_empty() {
        return Vec::new();
    }
    debug_assert!(ref_kps
        .iter()
        .chain(roi_kps)
        .all(|k| k.descriptor.len() == ref_kps[0].descriptor.len()));
    // (distance, ref index, roi index) for every accepted candidate.
    let mut candidates: Vec<(f32, usize, usize)> = Vec::new();
    for (ri, rk) in ref_kps.iter().enumerate() {
        let mut best = f32::INFINITY;
        let mut second = f32::INFINITY;
        let mut best_idx = usize::MAX;
        for (qi, qk) in roi_kps.iter().enumerate() {
            let d = distance_sq(&rk.descriptor, &qk.descriptor);
            if d < best {
                second = best;
                best = d;
                best_idx = qi;
            } else if d < second {
                second = d;
            }
        }
        // Compare squared distances against the squared ratio.
        if best < second * ratio * ratio {
            candidates.push((best, ri, best_idx));
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut taken = vec![false; roi_kps.len()];
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for (_, ri, qi) in candidates {
        if !taken[qi] {
            taken[qi] = true;
            pairs.push((ri, qi));
        }
    }
    pairs.sort_unstable();
    pairs
}

#[inline]
fn distance_sq(a: &[f32], b: &[f32]) -> f32 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// 4-point RANSAC homography over pixel correspondence pairs.
///
/// With fewer than 4 pairs (or only degenerate samples) the estimate falls
/// back to the best pure translation; a homography is reported iff at least
/// 4 pairs are consistent with it. Deterministic for a fixed seed.
pub fn ransac_homography(
    pairs_px: &[(PixelCoord, PixelCoord)],
    iters: usize,
    inlier_px: f64,
    rng_seed: u64,
) -> MatchResult {
    let src: Vec<(f64, f64)> = pairs_px
        .iter()
        .map(|(a, _)| (a.col as f64, a.row as f64))
        .collect();
    let dst: Vec<(f64, f64)> = pairs_px
        .iter()
        .map(|(_, b)| (b.col as f64, b.row as f64))
        .collect();
    let n = pairs_px.len();

    let mut best_h: Option<Matrix3<f64>> = None;
    let mut best_inliers = 0usize;
    if n >= 4 {
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        for _ in 0..iters {
            let pick = sample_indices(&mut rng, n, 4);
            let idx: Vec<usize> = pick.into_iter().collect();
            if sample_is_degenerate(&src, &idx) || sample_is_degenerate(&dst, &idx) {
                continue;
            }
            let s: Vec<(f64, f64)> = idx.iter().map(|&i| src[i]).collect();
            let d: Vec<(f64, f64)> = idx.iter().map(|&i| dst[i]).collect();
            let Some(h) = fit_homography_dlt(&s, &d) else {
                continue;
            };
            let inliers = count_inliers(&h, &src, &dst, inlier_px);
            if inliers > best_inliers {
                best_inliers = inliers;
                best_h = Some(h);
                if inliers == n {
                    break;
                }
            }
        }
    }
    if best_h.is_none() {
        // Translation fallback: under-determined input or all samples
        // degenerate. A translation is itself a homography, so the iff
        // between `homography` and `inlier_count >= 4` still holds.
        let (t, inliers) = best_translation(&src, &dst, inlier_px);
        best_inliers = inliers;
        if inliers >= 4 {
            best_h = Some(Matrix3::new(1.0, 0.0, t.0, 0.0, 1.0, t.1, 0.0, 0.0, 1.0));
        }
    }
    MatchResult {
        pairs: Vec::new(),
        inlier_count: best_inliers,
        homography: best_h,
    }
}

fn sample_is_degenerate(pts: &[(f64, f64)], idx: &[usize]) -> bool {
    // Any collinear triple among the 4 sampled points degenerates the DLT.
    for a in 0..idx.len() {
        for b in a + 1..idx.len() {
            for c in b + 1..idx.len() {
                let (x0, y0) = pts[idx[a]];
                let (x1, y1) = pts[idx[b]];
                let (x2, y2) = pts[idx[c]];
                let area2 = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0);
                if area2.abs() < 1e-6 {
                    return true;
                }
            }
        }
    }
    false
}

fn count_inliers(h: &Matrix3<f64>, src: &[(f64, f64)], dst: &[(f64, f64)], inlier_px: f64) -> usize {
    src.iter()
        .zip(dst)
        .filter(|(&s, &d)| reprojection_error(h, s, d).is_some_and(|e| e < inlier_px))
        .count()
}

fn reprojection_error(h: &Matrix3<f64>, s: (f64, f64), d: (f64, f64)) -> Option<f64> {
    let p = h * Vector3::new(s.0, s.1, 1.0);
    if p.z.abs() < 1e-12 {
        return None;
    }
    let (x, y) = (p.x / p.z, p.y / p.z);
    Some(((x - d.0).powi(2) + (y - d.1).powi(2)).sqrt())
}

fn best_translation(src: &[(f64, f64)], dst: &[(f64, f64)], inlier_px: f64) -> ((f64, f64), usize) {
    let mut best = ((0.0, 0.0), 0);
    for (s, d) in src.iter().zip(dst) {
        let t = (d.0 - s.0, d.1 - s.1);
        let count = src
            .iter()
            .zip(dst)
            .filter(|(&s2, &d2)| {
                let ex = s2.0 + t.0 - d2.0;
                let ey = s2.1 + t.1 - d2.1;
                (ex * ex + ey * ey).sqrt() < inlier_px
            })
            .count();
        if count > best.1 {
            best = (t, count);
        }
    }
    best
}

/// Direct linear transform with Hartley normalization. `None` when the
/// system is numerically rank-deficient.
fn fit_homography_dlt(src: &[(f64, f64)], dst: &[(f64, f64)]) -> Option<Matrix3<f64>> {
    debug_assert!(src.len() >= 4 && src.len() == dst.len());
    let (ts, src_n) = hartley_normalize(src);
    let (td, dst_n) = hartley_normalize(dst);
    let n = src_n.len();
    // At least 9 rows (zero-padded): the thin SVD of a 2n x 9 system with
    // 2n < 9 would not expose the null-space vector in v_t.
    let mut a = DMatrix::<f64>::zeros((2 * n).max(9), 9);
    for (i, (&(x, y), &(u, v))) in src_n.iter().zip(&dst_n).enumerate() {
        let r = 2 * i;
        a[(r, 0)] = -x;
        a[(r, 1)] = -y;
        a[(r, 2)] = -1.0;
        a[(r, 6)] = u * x;
        a[(r, 7)] = u * y;
        a[(r, 8)] = u;
        a[(r + 1, 3)] = -x;
        a[(r + 1, 4)] = -y;
        a[(r + 1, 5)] = -1.0;
        a[(r + 1, 6)] = v * x;
        a[(r + 1, 7)] = v * y;
        a[(r + 1, 8)] = v;
    }
    let svd = a.svd(false, true);
    let v_t = svd.v_t?;
    let h_vec = v_t.row(v_t.nrows() - 1);
    let h_n = Matrix3::new(
        h_vec[0], h_vec[1], h_vec[2], h_vec[3], h_vec[4], h_vec[5], h_vec[6], h_vec[7], h_vec[8],
    );
    let h = td.try_inverse()? * h_n * ts;
    let scale = h[(2, 2)];
    if scale.abs() < 1e-12 {
        return None;
    }
    Some(h / scale)
}

/// Similarity that moves the centroid to the origin and the mean distance
/// to sqrt(2), returned with the transformed points.
fn hartley_normalize(pts: &[(f64, f64)]) -> (Matrix3<f64>, Vec<(f64, f64)>) {
    let n = pts.len() as f64;
    let (mx, my) = pts
        .iter()
        .fold((0.0, 0.0), |(ax, ay), &(x, y)| (ax + x / n, ay + y / n));
    let mean_dist = pts
        .iter()
        .map(|&(x, y)| ((x - mx).powi(2) + (y - my).powi(2)).sqrt())
        .sum::<f64>()
        / n;
    let s = if mean_dist < 1e-12 {
        1.0
    } else {
        std::f64::consts::SQRT_2 / mean_dist
    };
    let t = Matrix3::new(s, 0.0, -s * mx, 0.0, s, -s * my, 0.0, 0.0, 1.0);
    let mapped = pts.iter().map(|&(x, y)| (s * (x - mx), s * (y - my))).collect();
    (t, mapped)
}

/// Matches one stored reference against the keypoints found in a ROI.
///
/// The match succeeds when `inlier_count >= params.match_min`; check with
/// [`MatchResult::succeeded`].
pub fn match_reference_to_roi(
    reference: &Reference,
    roi_kps: &[Keypoint],
    params: &MatchParams,
) -> MatchResult {
    let pairs = match_descriptors(&reference.keypoints, roi_kps, params.ratio);
    let pairs_px: Vec<(PixelCoord, PixelCoord)> = pairs
        .iter()
        .map(|&(ri, qi)| (reference.keypoints[ri].px, roi_kps[qi].px))
        .collect();
    let mut result = ransac_homography(&pairs_px, params.ransac_iters, params.inlier_px, params.rng_seed);
    result.pairs = pairs;
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn kp(row: i32, col: i32, descriptor: Vec<f32>) -> Keypoint {
        Keypoint {
            px: PixelCoord::new(row, col),
            descriptor,
            scale: 1.0,
        }
    }

    fn random_descriptor(rng: &mut ChaCha8Rng) -> Vec<f32> {
        (0..DESCRIPTOR_LEN).map(|_| rng.random::<f32>() * 2.0 - 1.0).collect()
    }

    #[test]
    fn identical_sets_pair_one_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let kps: Vec<Keypoint> = (0..10)
            .map(|i| kp(i, 2 * i, random_descriptor(&mut rng)))
            .collect();
        let pairs = match_descriptors(&kps, &kps, 0.8);
        assert_eq!(pairs.len(), 10);
        for (ri, qi) in pairs {
            assert_eq!(ri, qi);
        }
    }

    #[test]
    fn ratio_test_accepts_clearly_nearest_descriptor() {
        let base = vec![0.5f32; DESCRIPTOR_LEN];
        let mut near = base.clone();
        near[0] += 0.01;
        let mut far = base.clone();
        far[0] += 0.10;
        let pairs = match_descriptors(&[kp(0, 0, base)], &[kp(1, 1, near), kp(2, 2, far)], 0.8);
        // ratio 0.01/0.10 = 0.1 < 0.8: the near twin is paired.
        assert_eq!(pairs, vec![(0, 0)]);
    }

    #[test]
    fn ambiguous_nearest_neighbors_are_dropped() {
        let base = vec![0.5f32; DESCRIPTOR_LEN];
        let mut a = base.clone();
        a[0] += 0.05;
        let mut b = base.clone();
        b[1] += 0.05;
        // Two equidistant candidates: ratio 1.0 fails the test.
        assert!(match_descriptors(&[kp(0, 0, base)], &[kp(1, 1, a), kp(2, 2, b)], 0.8).is_empty());
    }

    #[test]
    fn empty_roi_yields_no_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let refs = vec![kp(0, 0, random_descriptor(&mut rng))];
        assert!(match_descriptors(&refs, &[], 0.8).is_empty());
        assert!(match_descriptors(&[], &refs, 0.8).is_empty());
    }

    #[test]
    fn conflicting_pairs_resolve_to_best_distance() {
        let target = vec![0.0f32; DESCRIPTOR_LEN];
        let mut close = target.clone();
        close[0] = 0.01;
        let mut far = target.clone();
        far[0] = 0.04;
        let other = vec![5.0f32; DESCRIPTOR_LEN];
        // Both references prefer roi kp 0; the closer one keeps it.
        let refs = vec![kp(0, 0, close), kp(1, 1, far)];
        let rois = vec![kp(2, 2, target), kp(3, 3, other)];
        let pairs = match_descriptors(&refs, &rois, 0.8);
        assert_eq!(pairs, vec![(0, 0)]);
    }

    fn translated_pairs(n: usize, t: (i32, i32), rng: &mut ChaCha8Rng) -> Vec<(PixelCoord, PixelCoord)> {
        (0..n)
            .map(|_| {
                let p = PixelCoord::new(rng.random_range(0..400), rng.random_range(0..600));
                (p, PixelCoord::new(p.row + t.1, p.col + t.0))
            })
            .collect()
    }

    #[test]
    fn ransac_recovers_pure_translation() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let pairs = translated_pairs(20, (10, 5), &mut rng);
        let result = ransac_homography(&pairs, 200, 3.0, 7);
        assert_eq!(result.inlier_count, 20);
        let h = result.homography.expect("homography");
        // Translation components of the homography, within 0.1 px.
        assert!((h[(0, 2)] - 10.0).abs() < 0.1, "tx {}", h[(0, 2)]);
        assert!((h[(1, 2)] - 5.0).abs() < 0.1, "ty {}", h[(1, 2)]);
        assert!((h[(0, 0)] - 1.0).abs() < 1e-3 && (h[(1, 1)] - 1.0).abs() < 1e-3);
    }

    #[test]
    fn ransac_survives_outliers() {
        // 20 consistent pairs + 10 uniform outliers, over 100 seeds: the
        // translation must be found in at least 99% of runs.
        let mut ok = 0;
        for seed in 0..100u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
            let mut pairs = translated_pairs(20, (10, 5), &mut rng);
            for _ in 0..10 {
                pairs.push((
                    PixelCoord::new(rng.random_range(0..400), rng.random_range(0..600)),
                    PixelCoord::new(rng.random_range(0..400), rng.random_range(0..600)),
                ));
            }
            let result = ransac_homography(&pairs, 200, 3.0, seed);
            if result.inlier_count >= 20 {
                ok += 1;
            }
        }
        assert!(ok >= 99, "only {ok}/100 seeds recovered the inlier set");
    }

    #[test]
    fn fewer_than_four_pairs_has_no_homography() {
        let pairs = vec![
            (PixelCoord::new(0, 0), PixelCoord::new(1, 1)),
            (PixelCoord::new(10, 0), PixelCoord::new(11, 1)),
            (PixelCoord::new(0, 10), PixelCoord::new(1, 11)),
        ];
        let result = ransac_homography(&pairs, 200, 3.0, 0);
        assert!(result.homography.is_none());
        assert_eq!(result.inlier_count, 3); // all consistent with t=(1,1)
    }

    #[test]
    fn empty_pairs_yield_zero_inliers() {
        let result = ransac_homography(&[], 200, 3.0, 0);
        assert_eq!(result.inlier_count, 0);
        assert!(result.homography.is_none());
    }

    #[test]
    fn collinear_pairs_fall_back_to_translation() {
        // All points on one line: every 4-sample is degenerate.
        let pairs: Vec<_> = (0..8)
            .map(|i| (PixelCoord::new(i, 2 * i), PixelCoord::new(i + 3, 2 * i + 4)))
            .collect();
        let result = ransac_homography(&pairs, 50, 3.0, 1);
        assert_eq!(result.inlier_count, 8);
        let h = result.homography.expect("translation homography");
        assert!((h[(0, 2)] - 4.0).abs() < 1e-9 && (h[(1, 2)] - 3.0).abs() < 1e-9);
    }

    #[test]
    fn true_homography_is_recovered_on_noise_free_pairs() {
        let h_true = Matrix3::new(1.05, 0.02, 8.0, -0.03, 0.98, -5.0, 1e-5, -2e-5, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let pairs: Vec<(PixelCoord, PixelCoord)> = (0..30)
            .map(|_| {
                let s = (rng.random_range(0.0..600.0f64), rng.random_range(0.0..400.0f64));
                let p = h_true * Vector3::new(s.0, s.1, 1.0);
                (
                    PixelCoord::new(s.1.round() as i32, s.0.round() as i32),
                    PixelCoord::new((p.y / p.z).round() as i32, (p.x / p.z).round() as i32),
                )
            })
            .collect();
        let result = ransac_homography(&pairs, 300, 3.0, 3);
        // Rounding to integer pixels costs sub-pixel error; all pairs must
        // still be inliers at the 3 px gate and reproject within it.
        assert_eq!(result.inlier_count, 30);
        let h = result.homography.unwrap();
        for &(s, d) in &pairs {
            let e = reprojection_error(&h, (s.col as f64, s.row as f64), (d.col as f64, d.row as f64))
                .unwrap();
            assert!(e < 3.0, "reprojection error {e}");
        }
    }

    #[test]
    fn ransac_is_deterministic_for_fixed_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let mut pairs = translated_pairs(15, (4, -2), &mut rng);
        for _ in 0..8 {
            pairs.push((
                PixelCoord::new(rng.random_range(0..400), rng.random_range(0..600)),
                PixelCoord::new(rng.random_range(0..400), rng.random_range(0..600)),
            ));
        }
        let a = ransac_homography(&pairs, 100, 3.0, 42);
        let b = ransac_homography(&pairs, 100, 3.0, 42);
        assert_eq!(a.inlier_count, b.inlier_count);
        assert_eq!(
            a.homography.map(|h| h.as_slice().to_vec()),
            b.homography.map(|h| h.as_slice().to_vec())
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn matching_is_a_partial_injection(seed in 0u64..500, n_ref in 0usize..25, n_roi in 0usize..25) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let refs: Vec<Keypoint> = (0..n_ref).map(|i| kp(i as i32, 0, random_descriptor(&mut rng))).collect();
            let rois: Vec<Keypoint> = (0..n_roi).map(|i| kp(i as i32, 1, random_descriptor(&mut rng))).collect();
            let pairs = match_descriptors(&refs, &rois, 0.8);
            let mut roi_seen = std::collections::HashSet::new();
            let mut ref_seen = std::collections::HashSet::new();
            for (ri, qi) in pairs {
                prop_assert!(ref_seen.insert(ri), "reference index {ri} appears twice");
                prop_assert!(roi_seen.insert(qi), "roi index {qi} appears twice");
            }
        }

        #[test]
        fn inlier_count_never_exceeds_pair_count(seed in 0u64..200, n in 0usize..30) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pairs: Vec<(PixelCoord, PixelCoord)> = (0..n).map(|_| (
                PixelCoord::new(rng.random_range(0..200), rng.random_range(0..200)),
                PixelCoord::new(rng.random_range(0..200), rng.random_range(0..200)),
            )).collect();
            let result = ransac_homography(&pairs, 50, 3.0, seed);
            prop_assert!(result.inlier_count <= n);
            prop_assert_eq!(result.homography.is_some(), result.inlier_count >= 4);
        }
    }
}
