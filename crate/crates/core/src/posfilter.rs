//! Object-position filtering over successive detections.
//!
//! The filter remembers the last `capacity` successful detections as
//! (position, quality, timestamp, axis) entries. Each entry is weighted by
//! `b_i = q_i / (now - t_i)`: proportional to its match quality, inversely
//! proportional to its age. The estimate is the weight-normalized mean
//! position; the quality value is the weighted mean distance to the estimate
//! (a dispersion) times the recency mass `sum(1/(now - t_i)) / gain`.
//!
//! False positives are handled by leave-one-out removal: each entry is
//! ranked by the quality of the filter without it, and the `outlier_count`
//! entries whose removal leaves the lowest value are dropped before the
//! final estimate.

use std::collections::VecDeque;

use thiserror::Error;

use crate::geometry::Vec3;

#[derive(Debug, Error, PartialEq)]
pub enum FilterError {
    #[error("entry timestamp {new} is older than the newest stored entry {newest}")]
    NonMonotonicTimestamp { new: f64, newest: f64 },
    #[error("entry quality must be positive, got {0}")]
    BadQuality(f64),
    #[error("entry axis must be unit length within 1e-9")]
    BadAxis,
    #[error("filter parameters out of range")]
    BadParams,
}

/// One successful detection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterEntry {
    pub position: Vec3,
    pub quality: f64,
    pub timestamp: f64,
    pub axis: Vec3,
}

impl FilterEntry {
    pub fn new(position: Vec3, quality: f64, timestamp: f64, axis: Vec3) -> Result<Self, FilterError> {
        if !(quality > 0.0) || !quality.is_finite() {
            return Err(FilterError::BadQuality(quality));
        }
        if (axis.norm() - 1.0).abs() > 1e-9 {
            return Err(FilterError::BadAxis);
        }
        Ok(FilterEntry { position, quality, timestamp, axis })
    }
}

/// How the leave-one-out removal picks its victims.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RemovalMode {
    /// Rank once, drop the `outlier_count` lowest in one pass.
    #[default]
    Batch,
    /// Drop the lowest, re-rank, repeat.
    Greedy,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterParams {
    /// Number of entries remembered (`l`).
    pub capacity: usize,
    /// Entries removed by the leave-one-out ranking (`j`), < capacity.
    pub outlier_count: usize,
    /// Gain dividing the recency mass in the quality value (`alpha`).
    pub recency_gain: f64,
    /// Convergence bound on the dispersion factor (meters).
    pub max_dispersion_m: f64,
    pub removal: RemovalMode,
}

impl Default for FilterParams {
    fn default() -> Self {
        FilterParams {
            capacity: 10,
            outlier_count: 2,
            recency_gain: 10.0,
            max_dispersion_m: 0.02,
            removal: RemovalMode::Batch,
        }
    }
}

impl FilterParams {
    fn validate(&self) -> Result<(), FilterError> {
        if self.capacity == 0
            || self.outlier_count >= self.capacity
            || !(self.recency_gain > 0.0)
            || !(self.max_dispersion_m > 0.0)
        {
            return Err(FilterError::BadParams);
        }
        Ok(())
    }
}

/// Estimate derived from the filter state after outlier removal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub position: Vec3,
    /// The quality value: dispersion times recency mass over the gain.
    pub quality: f64,
    /// Weighted mean distance of the kept entries to `position` (meters).
    pub dispersion_m: f64,
    /// `sum(1 / (now - t_i))` over the kept entries.
    pub recency_mass: f64,
    /// Weight-averaged, sign-aligned unit object axis.
    pub axis: Vec3,
}

#[derive(Debug, Clone)]
pub struct PositionFilter {
    entries: VecDeque<FilterEntry>,
    params: FilterParams,
}

impl PositionFilter {
    pub fn new(params: FilterParams) -> Result<Self, FilterError> {
        params.validate()?;
        Ok(PositionFilter { entries: VecDeque::with_capacity(params.capacity), params })
    }

    pub fn params(&self) -> FilterParams {
        self.params
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }

    /// Appends a detection; the oldest entry is evicted beyond capacity.
    /// Timestamps must be non-decreasing.
    pub fn push(&mut self, entry: FilterEntry) -> Result<(), FilterError> {
        if let Some(newest) = self.entries.back() {
            if entry.timestamp < newest.timestamp {
                return Err(FilterError::NonMonotonicTimestamp {
                    new: entry.timestamp,
                    newest: newest.timestamp,
                });
            }
        }
        if self.entries.len() == self.params.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back(entry);
        Ok(())
    }

    /// Entry weights `b_i = q_i / (now - t_i)`, in storage order.
    /// `now` must be strictly newer than every stored timestamp.
    pub fn weights(&self, now: f64) -> Vec<f64> {
        self.entries
            .iter()
            .map(|e| {
                debug_assert!(now > e.timestamp, "weights() requires now > all timestamps");
                e.quality / (now - e.timestamp)
            })
            .collect()
    }

    /// Position/quality/axis estimate after leave-one-out removal, or `None`
    /// while the filter is empty.
    pub fn estimate(&self, now: f64) -> Option<Estimate> {
        if self.entries.is_empty() {
            return None;
        }
        let entries: Vec<FilterEntry> = self.entries.iter().copied().collect();
        let kept = self.kept_indices(&entries, now);
        Some(evaluate(&entries, &kept, now, self.params.recency_gain))
    }

    /// Indices surviving outlier removal. With `len <= outlier_count` all
    /// entries are used.
    fn kept_indices(&self, entries: &[FilterEntry], now: f64) -> Vec<usize> {
        let n = entries.len();
        let j = self.params.outlier_count;
        let mut kept: Vec<usize> = (0..n).collect();
        if n <= j || j == 0 {
            return kept;
        }
        match self.params.removal {
            RemovalMode::Batch => {
                // Rank by the filter quality without each entry; ties resolve
                // to the lower index.
                let mut ranked: Vec<(f64, usize)> = kept
                    .iter()
                    .map(|&i| (loo_quality(entries, &kept, i, now, self.params.recency_gain), i))
                    .collect();
                ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                let drop: Vec<usize> = ranked.iter().take(j).map(|&(_, i)| i).collect();
                kept.retain(|i| !drop.contains(i));
            }
            RemovalMode::Greedy => {
                for _ in 0..j {
                    let (_, victim) = kept
                        .iter()
                        .map(|&i| (loo_quality(entries, &kept, i, now, self.params.recency_gain), i))
                        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
                        .expect("kept is non-empty");
                    kept.retain(|&i| i != victim);
                }
            }
        }
        kept
    }

    /// Convergence predicate: an estimate exists, strictly more entries than
    /// the removal count, fresh enough (recency mass at least the gain) and
    /// consistent enough (dispersion within the bound).
    pub fn converged(&self, now: f64) -> bool {
        if self.entries.len() <= self.params.outlier_count {
            return false;
        }
        match self.estimate(now) {
            None => false,
            Some(est) => {
                est.recency_mass >= self.params.recency_gain
                    && est.dispersion_m <= self.params.max_dispersion_m
            }
        }
    }
}

/// Quality of `entries[kept]` with index `skip` additionally removed.
fn loo_quality(entries: &[FilterEntry], kept: &[usize], skip: usize, now: f64, gain: f64) -> f64 {
    let subset: Vec<usize> = kept.iter().copied().filter(|&i| i != skip).collect();
    evaluate(entries, &subset, now, gain).quality
}

/// Direct evaluation of the estimate equations over an index subset.
fn evaluate(entries: &[FilterEntry], idx: &[usize], now: f64, recency_gain: f64) -> Estimate {
    debug_assert!(!idx.is_empty());
    let mut weight_sum = 0.0;
    let mut pos_acc = Vec3::ZERO;
    let mut recency = 0.0;
    for &i in idx {
        let e = &entries[i];
        debug_assert!(now > e.timestamp, "estimate requires now > all timestamps");
        let age = now - e.timestamp;
        let b = e.quality / age;
        weight_sum += b;
        pos_acc = pos_acc + e.position * b;
        recency += 1.0 / age;
    }
    let position = pos_acc * (1.0 / weight_sum);
    let dispersion = idx
        .iter()
        .map(|&i| {
            let e = &entries[i];
            let b = e.quality / (now - e.timestamp);
            position.distance(e.position) * b
        })
        .sum::<f64>()
        / weight_sum;
    let quality = dispersion * recency / recency_gain;
    // Axes are direction-less: flip each into the running mean's hemisphere
    // before averaging.
    let mut axis_acc = Vec3::ZERO;
    for &i in idx {
        let e = &entries[i];
        let b = e.quality / (now - e.timestamp);
        let a = if e.axis.dot(axis_acc) < 0.0 { -e.axis } else { e.axis };
        axis_acc = axis_acc + a * b;
    }
    let axis = axis_acc.normalized().unwrap_or(Vec3::new(0.0, 0.0, 1.0));
    Estimate {
        position,
        quality,
        dispersion_m: dispersion,
        recency_mass: recency,
        axis,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const UP: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 1.0 };

    fn entry(position: Vec3, quality: f64, timestamp: f64) -> FilterEntry {
        FilterEntry::new(position, quality, timestamp, UP).unwrap()
    }

    fn filter_with(params: FilterParams, entries: &[FilterEntry]) -> PositionFilter {
        let mut f = PositionFilter::new(params).unwrap();
        for &e in entries {
            f.push(e).unwrap();
        }
        f
    }

    fn no_removal() -> FilterParams {
        FilterParams { outlier_count: 0, ..FilterParams::default() }
    }

    #[test]
    fn push_grows_until_capacity_then_evicts_oldest() {
        let mut f = PositionFilter::new(FilterParams { capacity: 5, ..no_removal() }).unwrap();
        f.push(entry(Vec3::ZERO, 1.0, 0.0)).unwrap();
        assert_eq!(f.len(), 1);
        for i in 1..7 {
            f.push(entry(Vec3::new(i as f64, 0.0, 0.0), 1.0, i as f64)).unwrap();
        }
        assert_eq!(f.len(), 5);
        // The two oldest entries are gone: the first weight is the t=2 entry.
        let w = f.weights(7.0);
        assert_eq!(w.len(), 5);
        assert!((w[0] - 1.0 / 5.0).abs() < 1e-12);
    }

    #[test]
    fn push_rejects_older_timestamp() {
        let mut f = PositionFilter::new(FilterParams::default()).unwrap();
        f.push(entry(Vec3::ZERO, 1.0, 5.0)).unwrap();
        let err = f.push(entry(Vec3::ZERO, 1.0, 4.0)).unwrap_err();
        assert!(matches!(err, FilterError::NonMonotonicTimestamp { .. }));
        // Equal timestamps are fine (monotone, not strictly increasing).
        f.push(entry(Vec3::ZERO, 1.0, 5.0)).unwrap();
    }

    #[test]
    fn weights_match_hand_values() {
        let f = filter_with(
            no_removal(),
            &[entry(Vec3::ZERO, 1.0, 8.0), entry(Vec3::ZERO, 2.0, 9.0)],
        );
        let w = f.weights(10.0);
        assert!((w[0] - 0.5).abs() < 1e-12); // q=1 at age 2
        assert!((w[1] - 2.0).abs() < 1e-12); // q=2 at age 1
    }

    #[test]
    fn equal_quality_and_age_give_equal_weights() {
        let f = filter_with(
            no_removal(),
            &[entry(Vec3::ZERO, 3.0, 4.0), entry(Vec3::new(1.0, 0.0, 0.0), 3.0, 4.0)],
        );
        let w = f.weights(6.0);
        assert_eq!(w[0], w[1]);
    }

    #[test]
    fn estimate_matches_hand_computed_mean() {
        // b = (0.5, 2): E = (0.5*(1,0,0) + 2*(0,0,0)) / 2.5 = (0.2, 0, 0).
        let f = filter_with(
            no_removal(),
            &[
                entry(Vec3::new(1.0, 0.0, 0.0), 1.0, -2.0),
                entry(Vec3::ZERO, 2.0, -1.0),
            ],
        );
        let est = f.estimate(0.0).unwrap();
        assert!(est.position.distance(Vec3::new(0.2, 0.0, 0.0)) < 1e-12);
    }

    #[test]
    fn single_entry_has_zero_quality() {
        let f = filter_with(no_removal(), &[entry(Vec3::new(0.3, 0.4, 0.5), 2.0, 0.0)]);
        let est = f.estimate(1.0).unwrap();
        assert_eq!(est.position, Vec3::new(0.3, 0.4, 0.5));
        assert_eq!(est.dispersion_m, 0.0);
        assert_eq!(est.quality, 0.0);
    }

    #[test]
    fn empty_filter_has_no_estimate() {
        let f = PositionFilter::new(FilterParams::default()).unwrap();
        assert!(f.estimate(1.0).is_none());
        assert!(!f.converged(1.0));
    }

    #[test]
    fn gross_outlier_is_removed_by_leave_one_out() {
        let params = FilterParams { outlier_count: 1, ..FilterParams::default() };
        let mut entries: Vec<FilterEntry> = (0..9).map(|_| entry(Vec3::ZERO, 1.0, 0.0)).collect();
        entries.push(entry(Vec3::new(5.0, 0.0, 0.0), 1.0, 0.0));
        let f = filter_with(params, &entries);
        let est = f.estimate(1.0).unwrap();
        assert!(est.position.distance(Vec3::ZERO) < 1e-12);
        assert_eq!(est.dispersion_m, 0.0);
    }

    #[test]
    fn estimate_is_invariant_under_quality_scaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let entries: Vec<FilterEntry> = (0..8)
            .map(|i| {
                entry(
                    Vec3::new(rng.random(), rng.random(), rng.random()),
                    rng.random::<f64>() + 0.1,
                    i as f64 * 0.1,
                )
            })
            .collect();
        let scaled: Vec<FilterEntry> = entries
            .iter()
            .map(|e| FilterEntry { quality: e.quality * 37.5, ..*e })
            .collect();
        let f1 = filter_with(no_removal(), &entries);
        let f2 = filter_with(no_removal(), &scaled);
        let (e1, e2) = (f1.estimate(2.0).unwrap(), f2.estimate(2.0).unwrap());
        assert!(e1.position.distance(e2.position) < 1e-12);
    }

    fn coord(v: Vec3, i: usize) -> f64 {
        match i {
            0 => v.x,
            1 => v.y,
            _ => v.z,
        }
    }

    #[test]
    fn estimate_stays_in_the_convex_hull() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for _ in 0..50 {
            let entries: Vec<FilterEntry> = (0..6)
                .map(|i| {
                    entry(
                        Vec3::new(rng.random(), rng.random(), rng.random()),
                        rng.random::<f64>() + 0.05,
                        i as f64 * 0.25,
                    )
                })
                .collect();
            let f = filter_with(no_removal(), &entries);
            let est = f.estimate(3.0).unwrap();
            // A positive affine combination stays inside the componentwise
            // bounding box, which contains the convex hull boundary checks
            // we need here.
            for pick in [0, 1, 2] {
                let lo = entries.iter().map(|e| coord(e.position, pick)).fold(f64::INFINITY, f64::min);
                let hi = entries
                    .iter()
                    .map(|e| coord(e.position, pick))
                    .fold(f64::NEG_INFINITY, f64::max);
                let v = coord(est.position, pick);
                assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
            }
        }
    }

    /// Independent brute-force oracle: direct formula evaluation plus
    /// exhaustive leave-one-out enumeration with the same tie rule.
    fn oracle_estimate(entries: &[FilterEntry], j: usize, now: f64, gain: f64) -> (Vec3, f64) {
        fn direct(entries: &[FilterEntry], idx: &[usize], now: f64, gain: f64) -> (Vec3, f64) {
            let b: Vec<f64> = idx
                .iter()
                .map(|&i| entries[i].quality / (now - entries[i].timestamp))
                .collect();
            let bsum: f64 = b.iter().sum();
            let mut pos = Vec3::ZERO;
            for (k, &i) in idx.iter().enumerate() {
                pos = pos + entries[i].position * b[k];
            }
            pos = pos * (1.0 / bsum);
            let disp: f64 = idx
                .iter()
                .enumerate()
                .map(|(k, &i)| pos.distance(entries[i].position) * b[k])
                .sum::<f64>()
                / bsum;
            let rec: f64 = idx.iter().map(|&i| 1.0 / (now - entries[i].timestamp)).sum();
            (pos, disp * rec / gain)
        }
        let n = entries.len();
        if n <= j {
            return direct(entries, &(0..n).collect::<Vec<_>>(), now, gain);
        }
        let all: Vec<usize> = (0..n).collect();
        let mut ranked: Vec<(f64, usize)> = all
            .iter()
            .map(|&skip| {
                let subset: Vec<usize> = all.iter().copied().filter(|&i| i != skip).collect();
                (direct(entries, &subset, now, gain).1, skip)
            })
            .collect();
        ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let drop: Vec<usize> = ranked.iter().take(j).map(|&(_, i)| i).collect();
        let kept: Vec<usize> = all.into_iter().filter(|i| !drop.contains(i)).collect();
        direct(entries, &kept, now, gain)
    }

    #[test]
    fn batch_removal_matches_exhaustive_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for case in 0..200 {
            let n = rng.random_range(1..=10usize);
            let j = rng.random_range(0..3usize);
            let entries: Vec<FilterEntry> = (0..n)
                .map(|i| {
                    entry(
                        Vec3::new(
                            rng.random::<f64>() * 2.0 - 1.0,
                            rng.random::<f64>() * 2.0 - 1.0,
                            rng.random::<f64>() * 2.0 - 1.0,
                        ),
                        rng.random::<f64>() + 0.01,
                        i as f64 * 0.1,
                    )
                })
                .collect();
            let params = FilterParams {
                capacity: 16,
                outlier_count: j,
                ..FilterParams::default()
            };
            let f = filter_with(params, &entries);
            let now = n as f64 * 0.1 + 0.5;
            let est = f.estimate(now).unwrap();
            let (opos, oq) = oracle_estimate(&entries, j, now, params.recency_gain);
            assert!(est.position.distance(opos) < 1e-12, "case {case}");
            assert!((est.quality - oq).abs() < 1e-12, "case {case}");
        }
    }

    #[test]
    fn zero_removal_equals_direct_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        let entries: Vec<FilterEntry> = (0..7)
            .map(|i| {
                entry(
                    Vec3::new(rng.random(), rng.random(), rng.random()),
                    rng.random::<f64>() + 0.01,
                    i as f64,
                )
            })
            .collect();
        let f = filter_with(no_removal(), &entries);
        let est = f.estimate(10.0).unwrap();
        let (opos, oq) = oracle_estimate(&entries, 0, 10.0, f.params().recency_gain);
        assert!(est.position.distance(opos) < 1e-12);
        assert!((est.quality - oq).abs() < 1e-12);
    }

    #[test]
    fn outlier_removal_beats_no_removal_on_corrupted_filters() {
        // 8 consistent entries + 2 gross outliers: the cleaned estimate must
        // beat the raw estimate in at least 95% of randomized trials.
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        let truth = Vec3::new(0.3, -0.2, 0.7);
        let mut improved = 0;
        let trials = 1000;
        for _ in 0..trials {
            let mut entries: Vec<FilterEntry> = Vec::new();
            for i in 0..10 {
                let noise = Vec3::new(
                    (rng.random::<f64>() - 0.5) * 0.02,
                    (rng.random::<f64>() - 0.5) * 0.02,
                    (rng.random::<f64>() - 0.5) * 0.02,
                );
                entries.push(entry(truth + noise, rng.random::<f64>() + 0.5, i as f64 * 0.1));
            }
            for _ in 0..2 {
                let slot = rng.random_range(0..entries.len());
                let dir = Vec3::new(
                    rng.random::<f64>() - 0.5,
                    rng.random::<f64>() - 0.5,
                    rng.random::<f64>() - 0.5,
                )
                .normalized()
                .unwrap();
                let magnitude = 0.5 + rng.random::<f64>();
                entries[slot] = FilterEntry {
                    position: truth + dir * magnitude,
                    ..entries[slot]
                };
            }
            let now = 1.5;
            let with = filter_with(FilterParams::default(), &entries);
            let without = filter_with(no_removal(), &entries);
            let e_with = with.estimate(now).unwrap().position.distance(truth);
            let e_without = without.estimate(now).unwrap().position.distance(truth);
            if e_with < e_without {
                improved += 1;
            }
        }
        assert!(improved >= 950, "removal improved only {improved}/{trials}");
    }

    #[test]
    fn greedy_mode_also_removes_gross_outliers() {
        let params = FilterParams {
            outlier_count: 2,
            removal: RemovalMode::Greedy,
            ..FilterParams::default()
        };
        let mut entries: Vec<FilterEntry> = (0..8).map(|_| entry(Vec3::ZERO, 1.0, 0.0)).collect();
        entries.push(entry(Vec3::new(3.0, 0.0, 0.0), 1.0, 0.0));
        entries.push(entry(Vec3::new(0.0, 4.0, 0.0), 1.0, 0.0));
        let f = filter_with(params, &entries);
        let est = f.estimate(1.0).unwrap();
        assert!(est.position.distance(Vec3::ZERO) < 1e-12);
    }

    #[test]
    fn converged_requires_fresh_consistent_entries() {
        let params = FilterParams::default();
        let mut consistent = Vec::new();
        for i in 0..10 {
            consistent.push(entry(Vec3::new(0.5, 0.5, 0.5), 10.0, i as f64 * 0.1));
        }
        let f = filter_with(params, &consistent);
        // Fresh: evaluated one frame after the last entry.
        assert!(f.converged(1.0));
        // Stale: the same entries half a minute later.
        assert!(!f.converged(31.0));
    }

    #[test]
    fn converged_needs_more_entries_than_the_removal_count() {
        let params = FilterParams::default(); // removal count 2
        let entries: Vec<FilterEntry> =
            (0..2).map(|i| entry(Vec3::ZERO, 10.0, i as f64 * 0.1)).collect();
        let f = filter_with(params, &entries);
        assert!(!f.converged(0.3));
    }

    #[test]
    fn scattered_detections_do_not_converge() {
        let params = FilterParams::default();
        let mut entries = Vec::new();
        for i in 0..10 {
            let spread = if i % 2 == 0 { 0.2 } else { -0.2 };
            entries.push(entry(Vec3::new(spread, 0.0, 0.0), 10.0, i as f64 * 0.1));
        }
        let f = filter_with(params, &entries);
        assert!(!f.converged(1.0));
    }

    #[test]
    fn axis_aggregation_aligns_signs() {
        // Opposite-sign axes describe the same direction; the aggregate must
        // not cancel out.
        let e1 = FilterEntry::new(Vec3::ZERO, 1.0, 0.0, Vec3::new(0.0, 0.0, 1.0)).unwrap();
        let e2 = FilterEntry::new(Vec3::ZERO, 1.0, 0.1, Vec3::new(0.0, 0.0, -1.0)).unwrap();
        let f = filter_with(no_removal(), &[e1, e2]);
        let est = f.estimate(1.0).unwrap();
        assert!((est.axis.norm() - 1.0).abs() < 1e-9);
        assert!(est.axis.z.abs() > 0.999);
    }

    #[test]
    fn rejects_bad_entries_and_params() {
        assert!(matches!(
            FilterEntry::new(Vec3::ZERO, 0.0, 0.0, UP),
            Err(FilterError::BadQuality(_))
        ));
        assert!(matches!(
            FilterEntry::new(Vec3::ZERO, 1.0, 0.0, Vec3::new(0.0, 0.0, 0.5)),
            Err(FilterError::BadAxis)
        ));
        assert!(PositionFilter::new(FilterParams {
            capacity: 4,
            outlier_count: 4,
            ..FilterParams::default()
        })
        .is_err());
    }
}
