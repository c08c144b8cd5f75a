//! Probabilistic database of references.
//!
//! Each reference is one stored observation of an object (keypoints from one
//! ROI) carrying a sampling weight. Three invariants hold after every
//! operation: weights sum to 1, every weight stays inside the user bounds
//! `[min, max]`, and bounds are feasible (`n*min <= 1 <= n*max`).
//!
//! Per frame the pipeline draws a bounded random subset (duplicates in the
//! draw collapse, so a hot reference shrinks the subset), matches it, and
//! reinforces: matched references move toward the maximum weight with the
//! success gain, unmatched ones decay toward the minimum with the failure
//! gain, and a saturation-aware normalization pass redistributes the sum
//! error proportionally to the remaining headroom.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::Rng;
use thiserror::Error;

use crate::matching::Keypoint;

const SUM_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum DbError {
    #[error("bounds [{min}, {max}] are infeasible for {n} references")]
    InfeasibleBounds { min: f64, max: f64, n: usize },
    #[error("invalid weight bounds [{min}, {max}]")]
    BadBounds { min: f64, max: f64 },
    #[error("gains must lie strictly inside (0, 1)")]
    BadGains,
    #[error("matched and unmatched sets must be disjoint")]
    OverlappingUpdate,
    #[error("unknown reference id {0}")]
    UnknownReference(u32),
    #[error("weights do not satisfy the database invariants: {0}")]
    BadWeights(String),
    #[error("malformed database file: {0}")]
    BadFormat(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// 1-based reference identifier, dense over a freshly built database.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ReferenceId(pub u32);

impl fmt::Display for ReferenceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone)]
pub struct Reference {
    pub id: ReferenceId,
    pub object_id: String,
    pub keypoints: Vec<Keypoint>,
    weight: f64,
}

impl Reference {
    pub fn weight(&self) -> f64 {
        self.weight
    }
}

/// Inclusive weight bounds `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightBounds {
    min: f64,
    max: f64,
}

impl WeightBounds {
    pub fn new(min: f64, max: f64) -> Result<Self, DbError> {
        if !(min.is_finite() && max.is_finite()) || min < 0.0 || max > 1.0 || min >= max {
            return Err(DbError::BadBounds { min, max });
        }
        Ok(WeightBounds { min, max })
    }

    /// Defaults for a database of `n` references: min 0.25/n, max 0.25
    /// (raised to 1/n when feasibility demands it). A hot reference can then
    /// dominate within roughly ten successful frames at the default gain.
    pub fn defaults_for(n: usize) -> Self {
        let n = n.max(1) as f64;
        let max = (0.25f64).max(1.0 / n);
        WeightBounds { min: 0.25 / n, max }
    }

    /// Permissive bounds for bulk construction; tighten afterwards with
    /// [`ReferenceDatabase::set_bounds`].
    pub fn loose() -> Self {
        WeightBounds { min: 1e-9, max: 1.0 }
    }

    pub fn min(&self) -> f64 {
        self.min
    }
    pub fn max(&self) -> f64 {
        self.max
    }

    fn feasible_for(&self, n: usize) -> bool {
        n == 0 || (n as f64 * self.min <= 1.0 + SUM_TOL && 1.0 <= n as f64 * self.max + SUM_TOL)
    }
}

/// Learning gains, strictly inside (0, 1). Typical values: success 0.3,
/// failure 0.04.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateGains {
    pub success: f64,
    pub failure: f64,
}

impl UpdateGains {
    pub fn new(success: f64, failure: f64) -> Result<Self, DbError> {
        if !(0.0 < success && success < 1.0 && 0.0 < failure && failure < 1.0) {
            return Err(DbError::BadGains);
        }
        Ok(UpdateGains { success, failure })
    }
}

impl Default for UpdateGains {
    fn default() -> Self {
        UpdateGains { success: 0.3, failure: 0.04 }
    }
}

pub const DEFAULT_SUBSET_SIZE: usize = 5;

#[derive(Debug, Clone)]
pub struct ReferenceDatabase {
    refs: Vec<Reference>,
    bounds: WeightBounds,
    gains: UpdateGains,
    subset_size: usize,
    next_id: u32,
}

impl ReferenceDatabase {
    pub fn new(bounds: WeightBounds, gains: UpdateGains, subset_size: usize) -> Self {
        ReferenceDatabase {
            refs: Vec::new(),
            bounds,
            gains,
            subset_size: subset_size.max(1),
            next_id: 1,
        }
    }

    /// Builds a database from explicit weights, validating every invariant.
    pub fn from_parts(
        refs: Vec<(String, Vec<Keypoint>, f64)>,
        bounds: WeightBounds,
        gains: UpdateGains,
        subset_size: usize,
    ) -> Result<Self, DbError> {
        let n = refs.len();
        if !bounds.feasible_for(n) {
            return Err(DbError::InfeasibleBounds { min: bounds.min, max: bounds.max, n });
        }
        let sum: f64 = refs.iter().map(|(_, _, w)| *w).sum();
        if n > 0 && (sum - 1.0).abs() > SUM_TOL {
            return Err(DbError::BadWeights(format!("sum {sum} != 1")));
        }
        if let Some((_, _, w)) = refs
            .iter()
            .find(|(_, _, w)| *w < bounds.min - SUM_TOL || *w > bounds.max + SUM_TOL)
        {
            return Err(DbError::BadWeights(format!("weight {w} outside bounds")));
        }
        let refs = refs
            .into_iter()
            .enumerate()
            .map(|(i, (object_id, keypoints, weight))| Reference {
                id: ReferenceId(i as u32 + 1),
                object_id,
                keypoints,
                weight,
            })
            .collect::<Vec<_>>();
        let next_id = refs.len() as u32 + 1;
        Ok(ReferenceDatabase { refs, bounds, gains, subset_size: subset_size.max(1), next_id })
    }

    pub fn len(&self) -> usize {
        self.refs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.refs.is_empty()
    }

    pub fn bounds(&self) -> WeightBounds {
        self.bounds
    }

    pub fn gains(&self) -> UpdateGains {
        self.gains
    }

    pub fn subset_size(&self) -> usize {
        self.subset_size
    }

    pub fn iter(&self) -> impl Iterator<Item = &Reference> {
        self.refs.iter()
    }

    pub fn get(&self, id: ReferenceId) -> Option<&Reference> {
        let idx = id.0.checked_sub(1)? as usize;
        self.refs.get(idx).filter(|r| r.id == id)
    }

    pub fn weights(&self) -> Vec<f64> {
        self.refs.iter().map(|r| r.weight).collect()
    }

    /// Inserts a new reference with weight 1/(n+1), rescaling the existing
    /// weights by n/(n+1) and re-normalizing. Fails when the bounds cannot
    /// accommodate n+1 references.
    pub fn insert(&mut self, object_id: impl Into<String>, keypoints: Vec<Keypoint>) -> Result<ReferenceId, DbError> {
        let n = self.refs.len();
        if !self.bounds.feasible_for(n + 1) {
            return Err(DbError::InfeasibleBounds {
                min: self.bounds.min,
                max: self.bounds.max,
                n: n + 1,
            });
        }
        let scale = n as f64 / (n + 1) as f64;
        for r in &mut self.refs {
            r.weight *= scale;
        }
        let id = ReferenceId(self.next_id);
        self.next_id += 1;
        self.refs.push(Reference {
            id,
            object_id: object_id.into(),
            keypoints,
            weight: 1.0 / (n + 1) as f64,
        });
        self.normalize();
        Ok(id)
    }

    /// Sets every weight to 1/n.
    pub fn reset_uniform(&mut self) {
        let n = self.refs.len();
        if n == 0 {
            return;
        }
        let w = 1.0 / n as f64;
        for r in &mut self.refs {
            r.weight = w;
        }
    }

    /// Replaces the bounds, re-clamping and re-normalizing the weights.
    pub fn set_bounds(&mut self, bounds: WeightBounds) -> Result<(), DbError> {
        if !bounds.feasible_for(self.refs.len()) {
            return Err(DbError::InfeasibleBounds {
                min: bounds.min,
                max: bounds.max,
                n: self.refs.len(),
            });
        }
        self.bounds = bounds;
        self.normalize();
        Ok(())
    }

    /// Draws `count` references: `count` independent uniforms in [0,1) are
    /// mapped through the cumulative weight intervals and duplicates
    /// collapse, so the result may be smaller than `count`.
    pub fn sample_subset<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<ReferenceId> {
        assert!(count >= 1, "subset size must be at least 1");
        let uniforms: Vec<f64> = (0..count).map(|_| rng.random::<f64>()).collect();
        self.sample_subset_with_uniforms(&uniforms)
    }

    /// Deterministic core of [`Self::sample_subset`]: maps the given
    /// uniforms through the cumulative intervals `[0,w1), [w1,w1+w2), ...`.
    /// Returns sorted, deduplicated ids.
    pub fn sample_subset_with_uniforms(&self, uniforms: &[f64]) -> Vec<ReferenceId> {
        let cumulative = cumulative_boundaries(self.refs.iter().map(|r| r.weight));
        let mut ids: Vec<ReferenceId> = uniforms
            .iter()
            .filter_map(|&u| pick_interval(&cumulative, u).map(|i| self.refs[i].id))
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Like [`Self::sample_subset`] but restricted to one object's
    /// references, drawing from their conditional weight distribution.
    pub fn sample_subset_for_object<R: Rng + ?Sized>(
        &self,
        object_id: &str,
        count: usize,
        rng: &mut R,
    ) -> Vec<ReferenceId> {
        assert!(count >= 1, "subset size must be at least 1");
        let member: Vec<usize> = self
            .refs
            .iter()
            .enumerate()
            .filter(|(_, r)| r.object_id == object_id)
            .map(|(i, _)| i)
            .collect();
        if member.is_empty() {
            return Vec::new();
        }
        let total: f64 = member.iter().map(|&i| self.refs[i].weight).sum();
        let cumulative = cumulative_boundaries(member.iter().map(|&i| self.refs[i].weight / total));
        let mut ids: Vec<ReferenceId> = (0..count)
            .filter_map(|_| {
                let u = rng.random::<f64>();
                pick_interval(&cumulative, u).map(|k| self.refs[member[k]].id)
            })
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Applies the success/failure weight corrections and re-normalizes.
    ///
    /// Matched references move toward the maximum (`z = w + Gs (max - w)`),
    /// unmatched ones decay toward the minimum (`z = w - Gf (w - min)`),
    /// everything else keeps its weight. The sum error is then redistributed
    /// proportionally to the per-reference headroom, which cannot overshoot
    /// the bounds in a single pass.
    pub fn update(&mut self, matched: &[ReferenceId], unmatched: &[ReferenceId]) -> Result<(), DbError> {
        for id in matched {
            if unmatched.contains(id) {
                return Err(DbError::OverlappingUpdate);
            }
        }
        for &id in matched.iter().chain(unmatched) {
            if self.get(id).is_none() {
                return Err(DbError::UnknownReference(id.0));
            }
        }
        let (min, max) = (self.bounds.min, self.bounds.max);
        let (gs, gf) = (self.gains.success, self.gains.failure);
        for r in &mut self.refs {
            if matched.contains(&r.id) {
                r.weight += gs * (max - r.weight);
            } else if unmatched.contains(&r.id) {
                r.weight -= gf * (r.weight - min);
            }
        }
        self.normalize();
        Ok(())
    }

    /// Clamps weights into the bounds and redistributes `delta = 1 - sum(z)`
    /// proportionally to the headroom terms `max - z` (when delta > 0) or
    /// `z - min` (when delta < 0). The degenerate all-saturated case falls
    /// back to a uniform share; with feasible bounds it carries delta = 0.
    fn normalize(&mut self) {
        let n = self.refs.len();
        if n == 0 {
            return;
        }
        let (min, max) = (self.bounds.min, self.bounds.max);
        for r in &mut self.refs {
            r.weight = r.weight.clamp(min, max);
        }
        let sum: f64 = self.refs.iter().map(|r| r.weight).sum();
        let delta = 1.0 - sum;
        if delta == 0.0 {
            return;
        }
        if delta > 0.0 {
            let headroom: f64 = self.refs.iter().map(|r| max - r.weight).sum();
            if headroom <= 0.0 {
                let share = delta / n as f64;
                for r in &mut self.refs {
                    r.weight += share;
                }
            } else {
                for r in &mut self.refs {
                    r.weight += (max - r.weight) / headroom * delta;
                }
            }
        } else {
            let slack: f64 = self.refs.iter().map(|r| r.weight - min).sum();
            if slack <= 0.0 {
                let share = delta / n as f64;
                for r in &mut self.refs {
                    r.weight += share;
                }
            } else {
                for r in &mut self.refs {
                    r.weight += (r.weight - min) / slack * delta;
                }
            }
        }
    }

    /// Checks the database invariants, for tests and after loading.
    pub fn check_invariants(&self) -> Result<(), DbError> {
        if self.refs.is_empty() {
            return Ok(());
        }
        let sum: f64 = self.refs.iter().map(|r| r.weight).sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(DbError::BadWeights(format!("sum {sum}")));
        }
        for r in &self.refs {
            if r.weight < self.bounds.min - SUM_TOL || r.weight > self.bounds.max + SUM_TOL {
                return Err(DbError::BadWeights(format!("weight {} of {}", r.weight, r.id)));
            }
        }
        if !self.bounds.feasible_for(self.refs.len()) {
            return Err(DbError::InfeasibleBounds {
                min: self.bounds.min,
                max: self.bounds.max,
                n: self.refs.len(),
            });
        }
        Ok(())
    }

    /// Persists the database as a directory: `index.txt` with one
    /// `id,object_id,weight` line per reference plus one little-endian
    /// binary keypoint file per reference (`<id>.kps`: u32 count, then per
    /// keypoint row, col, scale and the descriptor floats, all f32).
    pub fn save_dir<P: AsRef<Path>>(&self, dir: P) -> Result<(), DbError> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let mut index = BufWriter::new(std::fs::File::create(dir.join("index.txt"))?);
        for r in &self.refs {
            writeln!(index, "{},{},{}", r.id.0, r.object_id, r.weight)?;
            let mut kps = BufWriter::new(std::fs::File::create(dir.join(format!("{}.kps", r.id.0)))?);
            kps.write_all(&(r.keypoints.len() as u32).to_le_bytes())?;
            for kp in &r.keypoints {
                kps.write_all(&(kp.px.row as f32).to_le_bytes())?;
                kps.write_all(&(kp.px.col as f32).to_le_bytes())?;
                kps.write_all(&kp.scale.to_le_bytes())?;
                for &d in &kp.descriptor {
                    kps.write_all(&d.to_le_bytes())?;
                }
            }
        }
        Ok(())
    }

    /// Loads a persisted database. Bounds default to
    /// [`WeightBounds::defaults_for`] the loaded size when not given; the
    /// stored weights are re-clamped and re-normalized under them.
    pub fn load_dir<P: AsRef<Path>>(
        dir: P,
        bounds: Option<WeightBounds>,
        gains: UpdateGains,
        subset_size: usize,
    ) -> Result<Self, DbError> {
        let dir = dir.as_ref();
        let index = BufReader::new(std::fs::File::open(dir.join("index.txt"))?);
        let mut rows: Vec<(u32, String, f64)> = Vec::new();
        for (lineno, line) in index.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.splitn(3, ',');
            let parse = || DbError::BadFormat(format!("index.txt line {}", lineno + 1));
            let id: u32 = parts.next().ok_or_else(parse)?.trim().parse().map_err(|_| parse())?;
            let object_id = parts.next().ok_or_else(parse)?.trim().to_string();
            let weight: f64 = parts.next().ok_or_else(parse)?.trim().parse().map_err(|_| parse())?;
            rows.push((id, object_id, weight));
        }
        rows.sort_by_key(|(id, _, _)| *id);
        let bounds = bounds.unwrap_or_else(|| WeightBounds::defaults_for(rows.len()));
        let mut refs = Vec::with_capacity(rows.len());
        for (id, object_id, weight) in rows {
            let keypoints = read_keypoint_file(&dir.join(format!("{id}.kps")))?;
            refs.push(Reference { id: ReferenceId(id), object_id, keypoints, weight });
        }
        let next_id = refs.iter().map(|r| r.id.0).max().unwrap_or(0) + 1;
        let mut db = ReferenceDatabase {
            refs,
            bounds,
            gains,
            subset_size: subset_size.max(1),
            next_id,
        };
        if !db.bounds.feasible_for(db.refs.len()) {
            return Err(DbError::InfeasibleBounds {
                min: db.bounds.min,
                max: db.bounds.max,
                n: db.refs.len(),
            });
        }
        db.normalize();
        Ok(db)
    }
}

fn read_keypoint_file(path: &Path) -> Result<Vec<Keypoint>, DbError> {
    use crate::geometry::PixelCoord;
    let mut file = BufReader::new(std::fs::File::open(path)?);
    let mut buf4 = [0u8; 4];
    file.read_exact(&mut buf4)?;
    let count = u32::from_le_bytes(buf4) as usize;
    let mut rest = Vec::new();
    file.read_to_end(&mut rest)?;
    if count == 0 {
        return Ok(Vec::new());
    }
    if rest.len() % 4 != 0 || rest.len() / 4 % count != 0 {
        return Err(DbError::BadFormat(format!("{}: keypoint payload not divisible", path.display())));
    }
    let floats_per_kp = rest.len() / 4 / count;
    if floats_per_kp < 3 {
        return Err(DbError::BadFormat(format!("{}: keypoint rows too short", path.display())));
    }
    let descriptor_len = floats_per_kp - 3;
    let mut floats = rest
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]));
    let mut kps = Vec::with_capacity(count);
    for _ in 0..count {
        let row = floats.next().unwrap();
        let col = floats.next().unwrap();
        let scale = floats.next().unwrap();
        let descriptor: Vec<f32> = (0..descriptor_len).map(|_| floats.next().unwrap()).collect();
        kps.push(Keypoint {
            px: PixelCoord::new(row.round() as i32, col.round() as i32),
            descriptor,
            scale,
        });
    }
    Ok(kps)
}

/// Cumulative interval boundaries (c_1..c_n) for weights summing to ~1.
fn cumulative_boundaries(weights: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    let mut bounds: Vec<f64> = weights
        .map(|w| {
            acc += w;
            acc
        })
        .collect();
    if let Some(last) = bounds.last_mut() {
        *last = last.max(1.0); // absorb float rounding at the top interval
    }
    bounds
}

/// Index of the half-open interval containing `u`.
fn pick_interval(cumulative: &[f64], u: f64) -> Option<usize> {
    if cumulative.is_empty() {
        return None;
    }
    let idx = cumulative.partition_point(|&c| c <= u);
    (idx < cumulative.len()).then_some(idx)
}

/// Per-object summary used when inspecting a database.
pub fn object_summary(db: &ReferenceDatabase) -> BTreeMap<String, usize> {
    let mut map = BTreeMap::new();
    for r in db.iter() {
        *map.entry(r.object_id.clone()).or_insert(0) += 1;
    }
    map
}
