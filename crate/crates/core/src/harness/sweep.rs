use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use super::config::ExperimentConfig;
use super::experiment::run_experiment;
use super::report::aggregate;
use super::HarnessError;
use crate::estimators::Algorithm;

/// Config knob varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    MaxDepth,
    Epsilon,
    Shots,
}

impl SweepParam {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepParam::MaxDepth => "max-depth",
            SweepParam::Epsilon => "epsilon",
            SweepParam::Shots => "shots",
        }
    }

    fn apply(&self, cfg: &mut ExperimentConfig, value: f64) -> Result<(), HarnessError> {
        let whole = || {
            if value >= 0.0 && value.fract() == 0.0 {
                Ok(value)
            } else {
                Err(HarnessError::Config(format!("{} needs a whole number, got {value}", self.as_str())))
            }
        };
        match self {
            SweepParam::MaxDepth => cfg.max_depth = whole()? as usize,
            SweepParam::Epsilon => cfg.epsilon = value,
            SweepParam::Shots => cfg.n_shots = whole()? as u64,
        }
        cfg.validate()
    }
}

impl FromStr for SweepParam {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "max-depth" | "max_depth" => Ok(SweepParam::MaxDepth),
            "epsilon" => Ok(SweepParam::Epsilon),
            "shots" | "n_shots" => Ok(SweepParam::Shots),
            other => Err(HarnessError::Config(format!("unknown sweep parameter {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub param: &'static str,
    pub value: f64,
    pub algorithm: Algorithm,
    pub depth: usize,
    pub schedule: String,
    pub n_trials: usize,
    pub total_oracle_calls: u64,
    pub mean_abs_err_p: f64,
    pub std_err_p: f64,
    pub mean_abs_err_theta: f64,
}

/// Runs the full experiment once per value, keeping the seed fixed.
pub fn run_sweep(base: &ExperimentConfig, param: SweepParam, values: &[f64]) -> Result<Vec<SweepRow>, HarnessError> {
    let mut out = Vec::new();
    for &value in values {
        let mut cfg = base.clone();
        param.apply(&mut cfg, value)?;
        let run = run_experiment(&cfg)?;
        out.extend(aggregate(&run.trials).into_iter().map(|r| SweepRow {
            param: param.as_str(),
            value,
            algorithm: r.algorithm,
            depth: r.depth,
            schedule: r.schedule,
            n_trials: r.n_trials,
            total_oracle_calls: r.total_oracle_calls,
            mean_abs_err_p: r.mean_abs_err_p,
            std_err_p: r.std_err_p,
            mean_abs_err_theta: r.mean_abs_err_theta,
        }));
    }
    Ok(out)
}

pub fn write_sweep(rows: &[SweepRow], path: &Path) -> Result<(), HarnessError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| HarnessError::io(parent, e))?;
    }
    let file = std::fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_names() {
        assert_eq!("max-depth".parse::<SweepParam>().unwrap(), SweepParam::MaxDepth);
        assert!("depth".parse::<SweepParam>().is_err());
    }

    #[test]
    fn small_depth_sweep() {
        let cfg = ExperimentConfig { n_trials: 3, algorithms: vec![Algorithm::Mle], ..Default::default() };
        let rows = run_sweep(&cfg, SweepParam::MaxDepth, &[1.0, 2.0]).unwrap();
        assert_eq!(rows.len(), 2 + 3);
        assert!(run_sweep(&cfg, SweepParam::Shots, &[1.5]).is_err());
    }
}
