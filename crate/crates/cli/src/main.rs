use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{error::ErrorKind, Parser, Subcommand};

use streamproof::harness::{run_experiment, summarize, write_results, ExperimentSpec, HarnessError};
use streamproof::instance::{label_instance, InstanceError, PoweringInstance};
use streamproof::kwise::RngBits;
use streamproof::protocol::{run_protocol, write_stream, ProtocolError, ProverSpec};
use streamproof::prover::ProverError;
use streamproof::reduction::{circuit_to_instance, Circuit, ReductionError};
use streamproof::rng::{derive_seed, rng_from_seed};
use streamproof::verifier::{verify_wire, VerifierConfig, VerifierError};

const EXIT_USAGE: u8 = 64;
const EXIT_DATA: u8 = 65;
const EXIT_NO_INPUT: u8 = 66;
const EXIT_SOFTWARE: u8 = 70;

/// Streaming proofs for unitary matrix powering.
#[derive(Debug, Parser)]
#[command(name = "streamproof", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a proof stream (.spql) for an instance.
    Prove {
        #[arg(long)]
        instance: PathBuf,
        /// Accuracy parameter; defaults to min(1/(10^4 T^2), 1/10).
        #[arg(long)]
        delta: Option<f64>,
        /// Honest per-coordinate error in units of delta/n.
        #[arg(long, default_value_t = 1.0)]
        noise: f64,
        /// Probability that the honest prover emits garbage (at most 0.25).
        #[arg(long, default_value_t = 0.0)]
        failure_prob: f64,
        /// `honest` or an adversary name.
        #[arg(long, default_value = "honest")]
        prover: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Verify a proof file. Exit status 0, 1, 2 for ONE, ZERO, ABORT.
    Verify {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        proof: PathBuf,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Prove and verify in one process. Exit status as for `verify`.
    Run {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value = "honest")]
        prover: String,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        noise: f64,
        #[arg(long, default_value_t = 0.0)]
        failure_prob: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Reduce a circuit file to an instance file.
    Reduce {
        #[arg(long)]
        circuit: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the promise label and the exact projection mass.
    Label {
        #[arg(long)]
        instance: PathBuf,
    },
    /// Run a Monte Carlo experiment from a TOML spec.
    Experiment {
        #[arg(long)]
        spec: PathBuf,
        /// Overrides the spec's output path; stdout if neither is set.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

fn file_failure(path: &Path, err: &io::Error) -> Failure {
    Failure::new(EXIT_NO_INPUT, format!("{}: {err}", path.display()))
}

fn instance_failure(path: &Path, err: InstanceError) -> Failure {
    match err {
        InstanceError::Io(e) => file_failure(path, &e),
        other => Failure::new(EXIT_DATA, format!("{}: {other}", path.display())),
    }
}

fn prover_failure(err: ProverError) -> Failure {
    match err {
        ProverError::UnknownStrategy(_) | ProverError::BadNoise(_) | ProverError::BadFailureProb(_) => {
            Failure::new(EXIT_USAGE, err.to_string())
        }
        ProverError::Linalg(_) => Failure::new(EXIT_USAGE, format!("delta unusable: {err}")),
        ProverError::BadParameter(_) => Failure::new(EXIT_DATA, err.to_string()),
    }
}

fn verifier_failure(err: VerifierError) -> Failure {
    match err {
        VerifierError::Linalg(_) | VerifierError::Config(_) | VerifierError::Instance(_) => {
            Failure::new(EXIT_USAGE, format!("verifier configuration: {err}"))
        }
        VerifierError::Capacity { .. } => Failure::new(EXIT_DATA, err.to_string()),
        VerifierError::Kwise(_) => Failure::new(EXIT_SOFTWARE, err.to_string()),
    }
}

fn load_instance(path: &Path) -> Result<PoweringInstance, Failure> {
    PoweringInstance::read_file(path).map_err(|e| instance_failure(path, e))
}

fn config(inst: &PoweringInstance, delta: Option<f64>) -> Result<VerifierConfig, Failure> {
    match delta {
        Some(d) if d.is_finite() && d > 0.0 => Ok(VerifierConfig::with_delta(d)),
        Some(d) => Err(Failure::new(EXIT_USAGE, format!("--delta must be positive, got {d}"))),
        None => VerifierConfig::for_steps(inst.steps()).map_err(verifier_failure),
    }
}

fn prover_spec(name: &str, noise: f64, failure_prob: f64) -> Result<ProverSpec, Failure> {
    let spec: ProverSpec = name.parse().map_err(prover_failure)?;
    Ok(match spec {
        ProverSpec::Honest { .. } => ProverSpec::Honest { noise_scale: noise, failure_prob },
        other => other,
    })
}

fn rounded(mass: f64) -> f64 {
    (mass * 1e12).round() / 1e12
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Prove { instance, delta, noise, failure_prob, prover, seed, out } => {
            let inst = load_instance(&instance)?;
            let cfg = config(&inst, delta)?;
            let spec = prover_spec(&prover, noise, failure_prob)?;
            let stream = spec.prove(&inst, cfg.delta, derive_seed(seed, &[1])).map_err(prover_failure)?;
            let file = File::create(&out).map_err(|e| file_failure(&out, &e))?;
            write_stream(&stream, BufWriter::new(file)).map_err(|e| file_failure(&out, &e))?;
            eprintln!(
                "wrote {} vectors (n={}, T={}, p={}) to {}",
                stream.vectors().len(),
                stream.n(),
                stream.steps(),
                stream.frac_bits(),
                out.display()
            );
            Ok(0)
        }
        Command::Verify { instance, proof, delta, seed } => {
            let inst = load_instance(&instance)?;
            let cfg = config(&inst, delta)?;
            let file = File::open(&proof).map_err(|e| file_failure(&proof, &e))?;
            let mut bits = RngBits::new(rng_from_seed(derive_seed(seed, &[2])));
            let outcome =
                verify_wire(&inst, &cfg, BufReader::new(file), &mut bits).map_err(verifier_failure)?;
            println!("{}", outcome.verdict);
            if let Some(reason) = &outcome.reason {
                eprintln!("reason: {reason}");
            }
            if let Some(mass) = outcome.projection_mass {
                eprintln!("projection mass: {mass}");
            }
            eprintln!("random bits: {}", outcome.random_bits);
            Ok(outcome.verdict.exit_code() as u8)
        }
        Command::Run { instance, prover, delta, noise, failure_prob, seed } => {
            let inst = load_instance(&instance)?;
            let cfg = config(&inst, delta)?;
            let spec = prover_spec(&prover, noise, failure_prob)?;
            let report = run_protocol(&inst, &spec, &cfg, seed).map_err(|e| match e {
                ProtocolError::Prover(e) => prover_failure(e),
                ProtocolError::Verifier(e) => verifier_failure(e),
                ProtocolError::Tape(e) => Failure::new(EXIT_SOFTWARE, e.to_string()),
            })?;
            println!("{}", report.outcome.verdict);
            eprintln!("prover: {}", report.prover);
            eprintln!("ground truth: {} (mass {})", report.ground_truth.class, report.ground_truth.mass);
            if let Some(reason) = &report.outcome.reason {
                eprintln!("reason: {reason}");
            }
            eprintln!("random bits: {}", report.outcome.random_bits);
            Ok(report.outcome.verdict.exit_code() as u8)
        }
        Command::Reduce { circuit, out } => {
            let parsed = Circuit::read_file(&circuit).map_err(|e| match e {
                ReductionError::Io(io) => file_failure(&circuit, &io),
                other => Failure::new(EXIT_DATA, format!("{}: {other}", circuit.display())),
            })?;
            let inst = circuit_to_instance(&parsed)
                .map_err(|e| Failure::new(EXIT_DATA, format!("{}: {e}", circuit.display())))?;
            inst.write_file(&out).map_err(|e| instance_failure(&out, e))?;
            eprintln!("wrote n={}, T={} instance to {}", inst.n(), inst.steps(), out.display());
            Ok(0)
        }
        Command::Label { instance } => {
            let inst = load_instance(&instance)?;
            let label = label_instance(&inst);
            println!("{} {}", label.class, rounded(label.mass));
            Ok(0)
        }
        Command::Experiment { spec, out } => {
            let parsed = ExperimentSpec::read_file(&spec).map_err(|e| match e {
                HarnessError::Io(io) => file_failure(&spec, &io),
                other => Failure::new(EXIT_DATA, format!("{}: {other}", spec.display())),
            })?;
            let cells = run_experiment(&parsed).map_err(|e| Failure::new(EXIT_SOFTWARE, e.to_string()))?;
            let target = out.or(parsed.output.clone());
            let written = match &target {
                Some(path) => {
                    let file = File::create(path).map_err(|e| file_failure(path, &e))?;
                    write_results(&cells, parsed.format, BufWriter::new(file))
                }
                None => write_results(&cells, parsed.format, io::stdout().lock()),
            };
            written.map_err(|e| match e {
                HarnessError::Io(io) => Failure::new(EXIT_NO_INPUT, io.to_string()),
                other => Failure::new(EXIT_SOFTWARE, other.to_string()),
            })?;
            let mut flagged = 0;
            for s in summarize(&cells) {
                flagged += !s.violations.is_empty() as usize;
                eprintln!(
                    "n={:<3} T={:<3} {:<19} abort {:.4} [{:.4}, {:.4}]  wrong {:.4}{}",
                    s.n,
                    s.steps,
                    s.prover,
                    s.abort_rate,
                    s.abort_low,
                    s.abort_high,
                    s.wrong_rate,
                    if s.violations.is_empty() { String::new() } else { format!("  VIOLATION: {}", s.violations.join(", ")) }
                );
            }
            let _ = io::stderr().flush();
            if flagged > 0 {
                eprintln!("{flagged} cell(s) violate a bound");
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
