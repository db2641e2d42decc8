//! `qae`: run amplitude-estimation experiments on the simulated oracle.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qae_core::harness::{
    self, calibrate_hybrid, emit, fit_depolarizing, resource_table, run_experiment, run_sweep, sample_vector_pair,
    stream_rng, training_samples, write_sweep, ExperimentConfig, HarnessError, SweepParam, CALIBRATION_STREAM,
};
use qae_core::Algorithm;

#[derive(Debug, Parser)]
#[command(name = "qae", version, about = "Low-depth amplitude estimation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print gate counts and depths of the amplified circuit per depth.
    Stats {
        #[arg(long, default_value_t = 7)]
        max_depth: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run an experiment and write trial, aggregate, histogram and manifest files.
    Run(Common),
    /// Compute hybrid thresholds and write them to calibration.json.
    Calibrate(Common),
    /// Fit per-depth damping rates to simulated counts, write gamma_fit.json.
    FitNoise(Common),
    /// Repeat the experiment over values of one parameter, write sweep.csv.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// max-depth, epsilon or shots.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// TOML experiment config; defaults apply to missing keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, overriding the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated subset of direct,mle,crt,hybrid,powerlaw.
    #[arg(long, value_delimiter = ',')]
    algorithms: Option<Vec<Algorithm>>,
    /// Number of trials, overriding the config.
    #[arg(long)]
    trials: Option<usize>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig, HarnessError> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.output.dir = out.clone();
        }
        if let Some(algs) = &self.algorithms {
            cfg.algorithms = algs.clone();
        }
        if let Some(n) = self.trials {
            cfg.n_trials = n;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn write_json(dir: &Path, name: &str, value: &serde_json::Value) -> Result<PathBuf, HarnessError> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| HarnessError::io(&path, e))?;
    Ok(path)
}

fn execute(command: Command) -> Result<(), HarnessError> {
    match command {
        Command::Stats { max_depth, seed } => {
            let pair = sample_vector_pair(&mut stream_rng(seed, 0), harness::VectorMode::Haar);
            println!("depth,rbs_count,rbs_depth,cz_count,cz_depth,oracle_calls_per_shot");
            for r in resource_table(max_depth, &pair)? {
                println!(
                    "{},{},{},{},{},{}",
                    r.depth, r.rbs_count, r.rbs_depth, r.cz_count, r.cz_depth, r.oracle_calls_per_shot
                );
            }
        }
        Command::Run(common) => {
            let cfg = common.load()?;
            let run = run_experiment(&cfg)?;
            let files = emit(&run, &cfg.output.dir)?;
            let failures = run.failures().count();
            eprintln!(
                "wrote {} ({} trials, {failures} estimator failures)",
                cfg.output.dir.display(),
                run.trials.len()
            );
            println!("{}", files.manifest.display());
        }
        Command::Calibrate(common) => {
            let cfg = common.load()?;
            let mut rng = stream_rng(cfg.seed, CALIBRATION_STREAM);
            let table = calibrate_hybrid(&cfg, cfg.hybrid.calibration_trials, &mut rng)?;
            println!("{}", write_json(&cfg.output.dir, "calibration.json", &serde_json::to_value(&table)?)?.display());
        }
        Command::FitNoise(common) => {
            let cfg = common.load()?;
            let gammas = fit_depolarizing(&training_samples(&cfg)?)?;
            let record = serde_json::json!({
                "seed": cfg.seed,
                "n_trials": cfg.n_trials,
                "n_shots": cfg.n_shots,
                "gamma_by_depth": gammas,
            });
            println!("{}", write_json(&cfg.output.dir, "gamma_fit.json", &record)?.display());
        }
        Command::Sweep { common, param, values } => {
            let cfg = common.load()?;
            let param: SweepParam = param.parse()?;
            let rows = run_sweep(&cfg, param, &values)?;
            let path = cfg.output.dir.join("sweep.csv");
            write_sweep(&rows, &path)?;
            println!("{}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let record = serde_json::json!({ "error": "usage", "message": e.to_string().trim_end() });
            eprintln!("{record}");
            return ExitCode::from(2);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", serde_json::to_string(&e.record()).expect("plain record"));
            ExitCode::FAILURE
        }
    }
}
