//! Experiment orchestration: configuration, per-drop fan-out, and output files.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{sample_channels, NetworkConfig, TrainingConfig};
use crate::csifb::FeedbackConfig;
use crate::error::{config_err, Result};
use crate::powerctl::PowerControlConfig;
use crate::rng::derive_seed;
use crate::sim::{
    compute_metrics, simulate_scheme, ConvergenceTrace, FeedbackPath, McsTable, Metrics, Scheme,
    SchemeKnobs, SchemeResult,
};

/// Environment variable overriding the worker count (0 = one per core).
pub const THREADS_ENV: &str = "IA_LAB_THREADS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub network: NetworkConfig,
    pub training: TrainingConfig,
    pub power_control: PowerControlConfig,
    #[serde(default)]
    pub feedback: FeedbackConfig,
    pub schemes: Vec<Scheme>,
    pub drops: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
    #[serde(default = "default_feedback_path")]
    pub feedback_path: FeedbackPath,
    /// Estimate channels from pilots before feeding them back.
    #[serde(default)]
    pub estimate_channels: bool,
    /// Run `ia_feedback` once per listed granularity instead of `feedback.n_g`.
    #[serde(default)]
    pub granularity_sweep: Vec<usize>,
    #[serde(default = "default_alignment_iters")]
    pub alignment_iters: usize,
    #[serde(default = "default_alignment_tol")]
    pub alignment_tol: f64,
}

fn default_feedback_path() -> FeedbackPath {
    FeedbackPath::Quantized
}
fn default_alignment_iters() -> usize {
    200
}
fn default_alignment_tol() -> f64 {
    1e-6
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.network.validate("network.")?;
        self.training.validate("training.", self.network.k_users)?;
        self.power_control.validate("power_control.", self.network.k_users)?;
        self.feedback.validate("feedback.")?;
        if self.drops < 1 {
            return Err(config_err("drops", "must be at least 1"));
        }
        if self.schemes.is_empty() {
            return Err(config_err("schemes", "must list at least one scheme"));
        }
        if self.schemes.contains(&Scheme::Pc) && self.network.streams != 1 {
            return Err(config_err("network.streams", "the pc scheme needs a single stream per user"));
        }
        for (i, &n_g) in self.granularity_sweep.iter().enumerate() {
            FeedbackConfig { n_g, ..self.feedback.clone() }
                .validate("")
                .map_err(|_| config_err(&format!("granularity_sweep[{i}]"), format!("unsupported granularity {n_g}")))?;
        }
        if self.alignment_iters < 1 {
            return Err(config_err("alignment_iters", "must be at least 1"));
        }
        if !(self.alignment_tol > 0.0) {
            return Err(config_err("alignment_tol", "must be positive"));
        }
        Ok(())
    }

    fn knobs(&self) -> SchemeKnobs {
        SchemeKnobs {
            power_control: self.power_control.clone(),
            feedback: self.feedback.clone(),
            feedback_path: self.feedback_path,
            training: self.estimate_channels.then(|| self.training.clone()),
            alignment_iters: self.alignment_iters,
            alignment_tol: self.alignment_tol,
            mcs: McsTable::default(),
        }
    }

    fn granularities(&self) -> Vec<usize> {
        if self.granularity_sweep.is_empty() {
            vec![self.feedback.n_g]
        } else {
            self.granularity_sweep.clone()
        }
    }
}

/// Worker count from [`THREADS_ENV`]; unset or 0 means automatic.
pub fn threads_from_env() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| config_err(THREADS_ENV, format!("expected a nonnegative integer, got {v:?}"))),
        Err(_) => Ok(0),
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentRun {
    /// Ordered by drop, then by scheme as listed in the configuration.
    pub results: Vec<SchemeResult>,
    pub metrics: Metrics,
}

fn run_drop(cfg: &ExperimentConfig, knobs: &SchemeKnobs, drop: usize) -> Result<Vec<SchemeResult>> {
    let seed = derive_seed(cfg.seed, drop as u64);
    let channels = sample_channels(&cfg.network, seed);
    let mut out = Vec::new();
    for &scheme in &cfg.schemes {
        if scheme == Scheme::IaFeedback {
            for n_g in cfg.granularities() {
                let mut k = knobs.clone();
                k.feedback.n_g = n_g;
                out.push(simulate_scheme(scheme, &channels, &cfg.network, &k, drop, seed)?);
            }
        } else {
            out.push(simulate_scheme(scheme, &channels, &cfg.network, knobs, drop, seed)?);
        }
    }
    Ok(out)
}

/// Simulate every drop on `threads` workers (0 = automatic). Output does
/// not depend on the worker count.
pub fn run_experiment(cfg: &ExperimentConfig, threads: usize) -> Result<ExperimentRun> {
    cfg.validate()?;
    let knobs = cfg.knobs();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| config_err(THREADS_ENV, e.to_string()))?;
    let per_drop: Vec<Vec<SchemeResult>> = pool.install(|| {
        (0..cfg.drops)
            .into_par_iter()
            .map(|d| run_drop(cfg, &knobs, d))
            .collect::<Result<_>>()
    })?;
    let results: Vec<SchemeResult> = per_drop.into_iter().flatten().collect();
    let metrics = compute_metrics(&results)?;
    Ok(ExperimentRun { results, metrics })
}

/// One line of `results.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub drop: usize,
    pub scheme: String,
    pub user: usize,
    pub sinr_db: f64,
    pub rate: f64,
    pub ber: f64,
    pub power_dbm: f64,
}

pub const CSV_COLUMNS: [&str; 7] = ["drop", "scheme", "user", "sinr_db", "rate", "ber", "power_dbm"];

/// Label used in outputs; granularity sweeps get one label per `n_g`.
pub fn scheme_label(r: &SchemeResult, sweep: bool) -> String {
    match (r.scheme, r.n_g, sweep) {
        (Scheme::IaFeedback, Some(n_g), true) => format!("ia_feedback_ng{n_g}"),
        (s, _, _) => s.name().to_string(),
    }
}

#[derive(Serialize)]
struct Summary<'a> {
    seed: u64,
    drops: usize,
    schemes: Vec<String>,
    metrics: &'a Metrics,
}

#[derive(Serialize)]
struct TraceEntry<'a> {
    drop: usize,
    scheme: String,
    trace: &'a ConvergenceTrace,
}

pub const RESULTS_FILE: &str = "results.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const TRACES_FILE: &str = "convergence_traces.json";

/// Write `results.csv`, `summary.json` and `convergence_traces.json` into `dir`.
pub fn write_outputs(run: &ExperimentRun, cfg: &ExperimentConfig, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let sweep = !cfg.granularity_sweep.is_empty();
    let mut w = csv::Writer::from_path(dir.join(RESULTS_FILE))?;
    for r in &run.results {
        for u in &r.users {
            w.serialize(CsvRow {
                drop: r.drop,
                scheme: scheme_label(r, sweep),
                user: u.user,
                sinr_db: u.sinr_db,
                rate: u.rate,
                ber: u.ber,
                power_dbm: 10.0 * u.power.log10(),
            })?;
        }
    }
    w.flush()?;

    let summary = Summary {
        seed: cfg.seed,
        drops: cfg.drops,
        schemes: cfg.schemes.iter().map(|s| s.name().to_string()).collect(),
        metrics: &run.metrics,
    };
    fs::write(dir.join(SUMMARY_FILE), serde_json::to_string_pretty(&summary)? + "\n")?;

    let traces: Vec<TraceEntry> = run
        .results
        .iter()
        .filter_map(|r| {
            r.convergence.as_ref().map(|trace| TraceEntry {
                drop: r.drop,
                scheme: scheme_label(r, sweep),
                trace,
            })
        })
        .collect();
    fs::write(dir.join(TRACES_FILE), serde_json::to_string(&traces)? + "\n")?;
    Ok(())
}
