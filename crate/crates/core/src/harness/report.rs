use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::calibrate::HybridTable;
use super::config::{ExperimentConfig, HistogramSettings};
use super::experiment::{ExperimentRun, PowerLawPlan, TrialFailure, TrialResult};
use super::HarnessError;
use crate::estimators::Algorithm;

/// How oracle calls are charged, as recorded in the manifest.
pub const ORACLE_CALL_CONVENTION: &str = "cumulative: each estimate is charged (2d+1) calls for every shot it \
consumed at every depth d, so an MLE row at depth D includes all shots at depths 0..=D";

/// One line of `trials.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub algorithm: Algorithm,
    pub depth: usize,
    pub oracle_calls: u64,
    pub trial_id: usize,
    pub theta_true: f64,
    pub p_true: f64,
    pub theta_hat: f64,
    pub p_hat: f64,
    pub abs_err_p: f64,
    pub abs_err_theta: f64,
    /// Hybrid branch, power-law target, or empty.
    pub branch_tag: String,
}

/// One line of `aggregate.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub algorithm: Algorithm,
    pub depth: usize,
    pub schedule: String,
    pub n_trials: usize,
    pub total_oracle_calls: u64,
    pub mean_oracle_calls: f64,
    pub mean_abs_err_p: f64,
    /// Sample standard deviation of `abs_err_p` across trials.
    pub std_err_p: f64,
    pub mean_abs_err_theta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramRow {
    pub depth: usize,
    pub bin_lower: f64,
    pub bin_upper: f64,
    pub count: usize,
}

/// Run summary written as `manifest.json`.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub oracle_call_convention: &'static str,
    pub n_trials: usize,
    pub calibration: Option<&'a HybridTable>,
    pub gamma_fit: Option<&'a [f64]>,
    pub gamma_fit_error: Option<&'a str>,
    pub powerlaw_plan: &'a [PowerLawPlan],
    pub failures: Vec<&'a TrialFailure>,
}

/// Paths written by [`emit`].
#[derive(Debug, Clone, PartialEq)]
pub struct OutputFiles {
    pub trials: PathBuf,
    pub aggregate: PathBuf,
    pub crt_histogram: PathBuf,
    pub counts: PathBuf,
    pub manifest: PathBuf,
}

pub fn trial_rows(trials: &[TrialResult]) -> Vec<TrialRow> {
    let mut rows = Vec::new();
    for t in trials {
        for r in &t.estimates {
            let e = &r.estimate;
            let branch_tag = match (e.branch(), e.algorithm()) {
                (Some(b), _) => b.as_str().to_string(),
                (None, Algorithm::PowerLaw) => r.schedule.clone(),
                _ => String::new(),
            };
            rows.push(TrialRow {
                algorithm: e.algorithm(),
                depth: r.depth,
                oracle_calls: e.oracle_calls(),
                trial_id: t.trial_id,
                theta_true: t.theta_true,
                p_true: t.p_true,
                theta_hat: e.theta_hat(),
                p_hat: e.p_hat(),
                abs_err_p: (e.p_hat() - t.p_true).abs(),
                abs_err_theta: (e.theta_hat() - t.theta_true).abs(),
                branch_tag,
            });
        }
    }
    rows
}

/// Groups estimates by algorithm, schedule and depth.
pub fn aggregate(trials: &[TrialResult]) -> Vec<AggregateRow> {
    let mut groups: BTreeMap<(Algorithm, String, usize), Vec<TrialRow>> = BTreeMap::new();
    for t in trials {
        for (r, row) in t.estimates.iter().zip(trial_rows(std::slice::from_ref(t))) {
            groups.entry((row.algorithm, r.schedule.clone(), r.depth)).or_default().push(row);
        }
    }
    groups
        .into_iter()
        .map(|((algorithm, schedule, depth), rows)| {
            let n = rows.len();
            let nf = n as f64;
            let total_oracle_calls = rows.iter().map(|r| r.oracle_calls).sum();
            let mean_abs_err_p = rows.iter().map(|r| r.abs_err_p).sum::<f64>() / nf;
            let std_err_p = if n > 1 {
                let ss: f64 = rows.iter().map(|r| (r.abs_err_p - mean_abs_err_p).powi(2)).sum();
                (ss / (nf - 1.0)).sqrt()
            } else {
                0.0
            };
            AggregateRow {
                algorithm,
                depth,
                schedule,
                n_trials: n,
                total_oracle_calls,
                mean_oracle_calls: total_oracle_calls as f64 / nf,
                mean_abs_err_p,
                std_err_p,
                mean_abs_err_theta: rows.iter().map(|r| r.abs_err_theta).sum::<f64>() / nf,
            }
        })
        .collect()
}

/// Bin counts of CRT `|p̂ − p|` per depth over `[0, max_error]`; larger
/// errors land in the last bin.
pub fn crt_histogram(trials: &[TrialResult], settings: &HistogramSettings) -> Vec<HistogramRow> {
    let width = settings.max_error / settings.bins as f64;
    let mut by_depth: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for row in trial_rows(trials).iter().filter(|r| r.algorithm == Algorithm::Crt) {
        let bins = by_depth.entry(row.depth).or_insert_with(|| vec![0; settings.bins]);
        let i = ((row.abs_err_p / width) as usize).min(settings.bins - 1);
        bins[i] += 1;
    }
    by_depth
        .into_iter()
        .flat_map(|(depth, bins)| {
            bins.into_iter().enumerate().map(move |(i, count)| HistogramRow {
                depth,
                bin_lower: i as f64 * width,
                bin_upper: (i + 1) as f64 * width,
                count,
            })
        })
        .collect()
}

#[derive(Serialize)]
struct CountsRow {
    trial_id: usize,
    depth: usize,
    theta_true: f64,
    good: u64,
    bad: u64,
    discarded: u64,
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T], header: &[&str]) -> Result<(), HarnessError> {
    let file = std::fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    let mut w = csv::WriterBuilder::new().has_headers(true).from_writer(file);
    if rows.is_empty() {
        w.write_record(header)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

impl ExperimentRun {
    pub fn manifest(&self) -> Manifest<'_> {
        let cfg = self.config();
        Manifest {
            tool: "qae",
            version: env!("CARGO_PKG_VERSION"),
            seed: cfg.seed,
            config: cfg.resolved(),
            oracle_call_convention: ORACLE_CALL_CONVENTION,
            n_trials: self.trials.len(),
            calibration: self.plan.hybrid.as_ref(),
            gamma_fit: self.gamma_fit.as_deref(),
            gamma_fit_error: self.gamma_fit_error.as_deref(),
            powerlaw_plan: &self.plan.powerlaw,
            failures: self.failures().collect(),
        }
    }
}

/// Writes `trials.csv`, `aggregate.csv`, `crt_histogram.csv`,
/// `counts.csv` and `manifest.json` into `dir`, creating it if needed.
pub fn emit(run: &ExperimentRun, dir: &Path) -> Result<OutputFiles, HarnessError> {
    if run.trials.is_empty() {
        return Err(HarnessError::Config("no trials to emit".into()));
    }
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let files = OutputFiles {
        trials: dir.join("trials.csv"),
        aggregate: dir.join("aggregate.csv"),
        crt_histogram: dir.join("crt_histogram.csv"),
        counts: dir.join("counts.csv"),
        manifest: dir.join("manifest.json"),
    };
    write_csv(
        &files.trials,
        &trial_rows(&run.trials),
        &[
            "algorithm",
            "depth",
            "oracle_calls",
            "trial_id",
            "theta_true",
            "p_true",
            "theta_hat",
            "p_hat",
            "abs_err_p",
            "abs_err_theta",
            "branch_tag",
        ],
    )?;
    write_csv(
        &files.aggregate,
        &aggregate(&run.trials),
        &[
            "algorithm",
            "depth",
            "schedule",
            "n_trials",
            "total_oracle_calls",
            "mean_oracle_calls",
            "mean_abs_err_p",
            "std_err_p",
            "mean_abs_err_theta",
        ],
    )?;
    write_csv(
        &files.crt_histogram,
        &crt_histogram(&run.trials, &run.config().histogram),
        &["depth", "bin_lower", "bin_upper", "count"],
    )?;
    let counts: Vec<CountsRow> = run
        .trials
        .iter()
        .flat_map(|t| {
            t.pool.iter().map(|c| CountsRow {
                trial_id: t.trial_id,
                depth: c.depth,
                theta_true: t.theta_true,
                good: c.good,
                bad: c.bad,
                discarded: c.discarded,
            })
        })
        .collect();
    write_csv(&files.counts, &counts, &["trial_id", "depth", "theta_true", "good", "bad", "discarded"])?;
    let mut json = serde_json::to_string_pretty(&run.manifest())?;
    json.push('\n');
    std::fs::write(&files.manifest, json).map_err(|e| HarnessError::io(&files.manifest, e))?;
    Ok(files)
}
