//! Experiment runner: seeded trial batches, outcome statistics, CSV files
//! and the convergence-time histogram.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::par;
use crate::refdb::ReferenceDatabase;

use super::scene::SceneConfig;
use super::trial::{run_trial, GraspMode, TrialOutcome, TrialParams, TrialRecord};

/// Aggregated results of one (mode, model error) condition.
#[derive(Debug, Clone)]
pub struct ExperimentStats {
    pub mode: GraspMode,
    pub model_error_mm: u32,
    pub records: Vec<TrialRecord>,
}

impl ExperimentStats {
    pub fn trials(&self) -> usize {
        self.records.len()
    }

    pub fn count(&self, outcome: TrialOutcome) -> usize {
        self.records.iter().filter(|r| r.outcome == outcome).count()
    }

    pub fn frequency(&self, outcome: TrialOutcome) -> f64 {
        self.count(outcome) as f64 / self.trials().max(1) as f64
    }

    pub fn success_count(&self) -> usize {
        self.records.iter().filter(|r| r.outcome.is_success()).count()
    }

    pub fn success_frequency(&self) -> f64 {
        self.success_count() as f64 / self.trials().max(1) as f64
    }

    /// Convergence times of the trials whose detection succeeded.
    pub fn convergence_times(&self) -> Vec<f64> {
        self.records.iter().filter_map(|r| r.convergence_time_s).collect()
    }

    /// Plain-text table in the result/count/frequency layout.
    pub fn table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "mode {} / model error {} mm / {} trials\n",
            self.mode,
            self.model_error_mm,
            self.trials()
        ));
        out.push_str(&format!(
            "  success            {:>4}  {:>5.1}%\n",
            self.success_count(),
            100.0 * self.success_frequency()
        ));
        for outcome in [TrialOutcome::ObjectNotTouched, TrialOutcome::ObjectTouched] {
            out.push_str(&format!(
                "    {:<16} {:>4}  {:>5.1}%\n",
                outcome.to_string(),
                self.count(outcome),
                100.0 * self.frequency(outcome)
            ));
        }
        let failures = self.trials() - self.success_count();
        out.push_str(&format!(
            "  failure            {:>4}  {:>5.1}%\n",
            failures,
            100.0 * failures as f64 / self.trials().max(1) as f64
        ));
        for outcome in [
            TrialOutcome::ObjectNotDetected,
            TrialOutcome::GripperLost,
            TrialOutcome::GraspingFailed,
            TrialOutcome::LiftingFailed,
        ] {
            out.push_str(&format!(
                "    {:<16} {:>4}  {:>5.1}%\n",
                outcome.to_string(),
                self.count(outcome),
                100.0 * self.frequency(outcome)
            ));
        }
        out
    }
}

/// Runs `trials` independent seeded trials (seeds `base_seed..base_seed+n`),
/// in parallel when the feature is enabled. Identical seeds give identical
/// records regardless of thread count.
pub fn run_experiment(
    scene: &SceneConfig,
    db: &ReferenceDatabase,
    params: &TrialParams,
    mode: GraspMode,
    model_error_mm: u32,
    trials: usize,
    base_seed: u64,
) -> ExperimentStats {
    assert!(trials >= 1, "at least one trial");
    let records = par::map_indexed(trials, |i| {
        run_trial(scene, db, params, mode, model_error_mm, base_seed + i as u64)
    });
    ExperimentStats { mode, model_error_mm, records }
}

/// Writes trial records as CSV with the canonical column set.
pub fn write_results_csv<P: AsRef<Path>>(records: &[TrialRecord], path: P) -> std::io::Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(
        out,
        "seed,mode,model_error_mm,outcome,convergence_time_s,matcher_invocations"
    )?;
    for r in records {
        let conv = r
            .convergence_time_s
            .map(|t| format!("{t:.3}"))
            .unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.seed, r.mode, r.model_error_mm, r.outcome, conv, r.matcher_invocations
        )?;
    }
    Ok(())
}

/// Reads a results CSV back (tracker invocations are not persisted and
/// load as 0).
pub fn read_results_csv<P: AsRef<Path>>(path: P) -> std::io::Result<Vec<TrialRecord>> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if idx == 0 || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let bad = |what: &str| {
            std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                format!("line {}: bad {what}: {line:?}", idx + 1),
            )
        };
        if fields.len() != 6 {
            return Err(bad("column count"));
        }
        records.push(TrialRecord {
            seed: fields[0].parse().map_err(|_| bad("seed"))?,
            mode: fields[1].parse().map_err(|_| bad("mode"))?,
            model_error_mm: fields[2].parse().map_err(|_| bad("model_error_mm"))?,
            outcome: fields[3].parse().map_err(|_| bad("outcome"))?,
            convergence_time_s: if fields[4].is_empty() {
                None
            } else {
                Some(fields[4].parse().map_err(|_| bad("convergence_time_s"))?)
            },
            matcher_invocations: fields[5].parse().map_err(|_| bad("matcher_invocations"))?,
            tracker_invocations: 0,
        });
    }
    Ok(records)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramBin {
    pub start_s: f64,
    pub end_s: f64,
    pub count: usize,
}

/// Histogram of convergence times over the successful detections.
pub fn histogram(records: &[TrialRecord], bin_width_s: f64) -> Vec<HistogramBin> {
    assert!(bin_width_s > 0.0);
    let times: Vec<f64> = records.iter().filter_map(|r| r.convergence_time_s).collect();
    let mut bins: BTreeMap<usize, usize> = BTreeMap::new();
    for &t in &times {
        *bins.entry((t / bin_width_s).floor() as usize).or_insert(0) += 1;
    }
    let max_bin = bins.keys().next_back().copied().unwrap_or(0);
    (0..=max_bin)
        .map(|i| HistogramBin {
            start_s: i as f64 * bin_width_s,
            end_s: (i + 1) as f64 * bin_width_s,
            count: bins.get(&i).copied().unwrap_or(0),
        })
        .collect()
}

pub fn write_histogram_csv<P: AsRef<Path>>(bins: &[HistogramBin], path: P) -> std::io::Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "bin_start_s,bin_end_s,count")?;
    for b in bins {
        writeln!(out, "{:.3},{:.3},{}", b.start_s, b.end_s, b.count)?;
    }
    Ok(())
}
