//! Monte Carlo experiments: grids of `(n, T, prover)` cells, exact counts per
//! cell, Wilson intervals, and bound checks.

use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{gen_instance, Generator, InstanceError};
use crate::protocol::{run_protocol, ProtocolError, ProverSpec, RunReport};
use crate::prover::ProverError;
use crate::rng::derive_seed;
use crate::verifier::{Verdict, VerifierConfig, VerifierError};

/// Two-sided 95% normal quantile.
pub const WILSON_Z: f64 = 1.959_963_984_540_054;

/// Cells with fewer trials are reported but never flagged.
pub const MIN_TRIALS_FOR_CLAIMS: u64 = 100;

pub const COMPLETENESS_ABORT_BOUND: f64 = 0.2;
pub const SOUNDNESS_ABORT_BOUND: f64 = 0.75;
pub const WRONG_VERDICT_BOUND: f64 = 0.25;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("experiment spec: {0}")]
    Spec(String),
    #[error(transparent)]
    Toml(#[from] toml::de::Error),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Prover(#[from] ProverError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Verifier(#[from] VerifierError),
    #[error("verification used {used} random bits, budget {budget} (n = {n}, T = {steps})")]
    BudgetExceeded { n: usize, steps: usize, used: u64, budget: u64 },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

fn default_noise_scale() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub generator: String,
    pub n: Vec<usize>,
    #[serde(alias = "T")]
    pub steps: Vec<usize>,
    pub provers: Vec<String>,
    pub trials: u64,
    pub master_seed: u64,
    #[serde(default)]
    pub format: OutputFormat,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Honest per-coordinate error in units of `δ/n`.
    #[serde(default = "default_noise_scale")]
    pub noise_scale: f64,
    #[serde(default)]
    pub failure_prob: f64,
}

impl ExperimentSpec {
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let spec: Self = toml::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    fn validate(&self) -> Result<(), HarnessError> {
        if self.n.is_empty() || self.steps.is_empty() || self.provers.is_empty() {
            return Err(HarnessError::Spec("n, steps and provers must be non-empty".into()));
        }
        if self.trials == 0 {
            return Err(HarnessError::Spec("trials must be positive".into()));
        }
        if self.n.contains(&0) {
            return Err(HarnessError::Spec("dimension 0".into()));
        }
        self.generator()?;
        self.prover_specs()?;
        Ok(())
    }

    pub fn generator(&self) -> Result<Generator, HarnessError> {
        Ok(self.generator.parse()?)
    }

    pub fn prover_specs(&self) -> Result<Vec<ProverSpec>, HarnessError> {
        self.provers
            .iter()
            .map(|name| {
                let spec: ProverSpec = name.parse()?;
                Ok(match spec {
                    ProverSpec::Honest { .. } => ProverSpec::Honest {
                        noise_scale: self.noise_scale,
                        failure_prob: self.failure_prob,
                    },
                    other => other,
                })
            })
            .collect()
    }
}

/// Exact outcome counts for one `(n, T, prover)` cell.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellCounts {
    pub n: usize,
    #[serde(rename = "T")]
    pub steps: usize,
    pub prover: String,
    pub trials: u64,
    pub one: u64,
    pub zero: u64,
    pub abort: u64,
    /// Non-abort verdicts contradicting a YES/NO label.
    pub wrong: u64,
    #[serde(skip)]
    pub role: CellRole,
}

/// Which bound a cell is held to.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CellRole {
    /// Honest, `δ`-good streams: abort rate at most 1/5.
    Completeness,
    /// Final vector at distance at least 1/5: abort rate at least 3/4.
    Soundness,
    #[default]
    Other,
}

impl CellCounts {
    fn new(n: usize, steps: usize, prover: &ProverSpec) -> Self {
        let role = match prover {
            ProverSpec::Honest { noise_scale, failure_prob } => {
                if *noise_scale <= 1.0 && *failure_prob == 0.0 {
                    CellRole::Completeness
                } else {
                    CellRole::Other
                }
            }
            ProverSpec::Adversary(s) if s.guarantees_far_final(steps) => CellRole::Soundness,
            ProverSpec::Adversary(_) => CellRole::Other,
        };
        Self {
            n,
            steps,
            prover: prover.name().to_string(),
            trials: 0,
            one: 0,
            zero: 0,
            abort: 0,
            wrong: 0,
            role,
        }
    }

    fn record(&mut self, report: &RunReport) {
        self.trials += 1;
        match report.outcome.verdict {
            Verdict::One => self.one += 1,
            Verdict::Zero => self.zero += 1,
            Verdict::Abort => self.abort += 1,
        }
        if report.is_wrong() {
            self.wrong += 1;
        }
    }
}

/// Seed for one trial, from the master seed and the cell coordinates.
pub fn trial_seed(master: u64, n: usize, steps: usize, prover_index: usize, trial: u64) -> u64 {
    derive_seed(master, &[n as u64, steps as u64, prover_index as u64, trial])
}

/// One trial: a fresh instance from the generator, then a protocol run.
/// Fails if the verifier overspent its randomness budget.
pub fn run_trial(
    generator: Generator,
    n: usize,
    steps: usize,
    prover: &ProverSpec,
    seed: u64,
) -> Result<RunReport, HarnessError> {
    let inst = gen_instance(generator, n, steps, derive_seed(seed, &[0]))?;
    let cfg = VerifierConfig::for_steps(inst.steps())?;
    let report = run_protocol(&inst, prover, &cfg, seed)?;
    let budget = cfg.randomness_budget(inst.n(), inst.steps());
    if report.outcome.random_bits > budget {
        return Err(HarnessError::BudgetExceeded {
            n: inst.n(),
            steps: inst.steps(),
            used: report.outcome.random_bits,
            budget,
        });
    }
    Ok(report)
}

/// Runs every cell. Trials run in parallel and are tallied in trial order,
/// so the result depends only on the spec.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<CellCounts>, HarnessError> {
    spec.validate()?;
    let generator = spec.generator()?;
    let provers = spec.prover_specs()?;
    let mut cells = Vec::new();
    for &n in &spec.n {
        for &steps in &spec.steps {
            for (index, prover) in provers.iter().enumerate() {
                let reports = (0..spec.trials)
                    .into_par_iter()
                    .map(|trial| {
                        let seed = trial_seed(spec.master_seed, n, steps, index, trial);
                        run_trial(generator, n, steps, prover, seed)
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let mut cell = CellCounts::new(n, steps, prover);
                for report in &reports {
                    cell.record(report);
                }
                cells.push(cell);
            }
        }
    }
    Ok(cells)
}

pub fn write_csv<W: Write>(cells: &[CellCounts], out: W) -> Result<(), HarnessError> {
    let mut writer = csv::Writer::from_writer(out);
    for cell in cells {
        writer.serialize(cell)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_json<W: Write>(cells: &[CellCounts], mut out: W) -> Result<(), HarnessError> {
    serde_json::to_writer_pretty(&mut out, cells)?;
    writeln!(out)?;
    Ok(())
}

pub fn write_results<W: Write>(
    cells: &[CellCounts],
    format: OutputFormat,
    out: W,
) -> Result<(), HarnessError> {
    match format {
        OutputFormat::Csv => write_csv(cells, out),
        OutputFormat::Json => write_json(cells, out),
    }
}

/// Wilson score interval for `successes / trials` at [`WILSON_Z`].
pub fn wilson(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = WILSON_Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let low = if successes == 0 { 0.0 } else { (centre - half).max(0.0) };
    let high = if successes == trials { 1.0 } else { (centre + half).min(1.0) };
    (low, high)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellSummary {
    pub n: usize,
    #[serde(rename = "T")]
    pub steps: usize,
    pub prover: String,
    pub trials: u64,
    pub abort_rate: f64,
    pub abort_low: f64,
    pub abort_high: f64,
    pub wrong_rate: f64,
    pub wrong_low: f64,
    pub wrong_high: f64,
    pub violations: Vec<String>,
}

/// Rates and intervals per cell. A cell is flagged only when its whole
/// interval lies on the wrong side of a bound.
pub fn summarize(cells: &[CellCounts]) -> Vec<CellSummary> {
    cells
        .iter()
        .map(|c| {
            let rate = |k: u64| if c.trials == 0 { 0.0 } else { k as f64 / c.trials as f64 };
            let (abort_low, abort_high) = wilson(c.abort, c.trials);
            let (wrong_low, wrong_high) = wilson(c.wrong, c.trials);
            let mut violations = Vec::new();
            if c.trials >= MIN_TRIALS_FOR_CLAIMS {
                if c.role == CellRole::Completeness && abort_low > COMPLETENESS_ABORT_BOUND {
                    violations.push(format!("abort rate above {COMPLETENESS_ABORT_BOUND}"));
                }
                if c.role == CellRole::Soundness && abort_high < SOUNDNESS_ABORT_BOUND {
                    violations.push(format!("abort rate below {SOUNDNESS_ABORT_BOUND}"));
                }
                if wrong_low > WRONG_VERDICT_BOUND {
                    violations.push(format!("wrong-verdict rate above {WRONG_VERDICT_BOUND}"));
                }
            }
            CellSummary {
                n: c.n,
                steps: c.steps,
                prover: c.prover.clone(),
                trials: c.trials,
                abort_rate: rate(c.abort),
                abort_low,
                abort_high,
                wrong_rate: rate(c.wrong),
                wrong_low,
                wrong_high,
                violations,
            }
        })
        .collect()
}
