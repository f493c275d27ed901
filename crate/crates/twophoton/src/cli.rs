//! Configuration ingestion, command dispatch, and report/trajectory output.
//!
//! Exit-code contract: 0 all checks pass, 1 verification failure, 2
//! configuration or expression error, 3 trajectory blow-up or singularity.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::algebra::SubalgebraName;
use crate::dynamics::{self, Termination};
use crate::families::{self, HamiltonianSpec};
use crate::poisson::Observable;
use crate::realization::{PhaseState, RealizationParams};
use crate::verify::{self, SuiteConfig, VerificationReport};
use crate::{Error, Result};

/// Realization block: dimension, labels, and the optional E-subalgebra
/// parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RealizationConfig {
    pub n: usize,
    pub lambda: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
}

fn default_samples() -> usize {
    100
}
fn default_tol() -> f64 {
    1e-9
}
fn default_fd_tol() -> f64 {
    1e-5
}
fn default_seed() -> u64 {
    42
}

/// Verification settings with the documented defaults.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySettings {
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_fd_tol")]
    pub fd_tol: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl Default for VerifySettings {
    fn default() -> Self {
        VerifySettings {
            samples: default_samples(),
            tol: default_tol(),
            fd_tol: default_fd_tol(),
            seed: default_seed(),
        }
    }
}

/// Simulation settings: initial state, step, horizon, observables to record.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSettings {
    pub q0: Vec<f64>,
    pub p0: Vec<f64>,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observables: Option<Vec<String>>,
}

/// Top-level configuration file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub realization: RealizationConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hamiltonian: Option<HamiltonianSpec>,
    #[serde(default)]
    pub verify: VerifySettings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateSettings>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.realization.n == 0 {
            return Err(Error::Config(
                "realization.n must be at least 1".to_string(),
            ));
        }
        if self.realization.lambda.len() != self.realization.n {
            return Err(Error::Config(format!(
                "realization.lambda has {} entries, expected n = {}",
                self.realization.lambda.len(),
                self.realization.n
            )));
        }
        RealizationParams::new(self.realization.lambda.clone())?;
        if let Some(sim) = &self.simulate {
            if sim.q0.len() != self.realization.n || sim.p0.len() != self.realization.n {
                return Err(Error::Config(format!(
                    "simulate.q0/p0 must each have n = {} entries",
                    self.realization.n
                )));
            }
            if !(sim.dt > 0.0 && sim.dt.is_finite()) {
                return Err(Error::Config("simulate.dt must be positive".to_string()));
            }
            if !(sim.t_end > 0.0 && sim.t_end.is_finite()) {
                return Err(Error::Config("simulate.t_end must be positive".to_string()));
            }
        }
        Ok(())
    }

    pub fn mu_nu(&self) -> Option<(f64, f64)> {
        match (self.realization.mu, self.realization.nu) {
            (Some(mu), Some(nu)) => Some((mu, nu)),
            _ => None,
        }
    }

    pub fn lambda(&self) -> Result<RealizationParams> {
        RealizationParams::new(self.realization.lambda.clone())
    }

    pub fn suite_config(&self) -> SuiteConfig {
        SuiteConfig {
            n: self.realization.n,
            lambda: self.realization.lambda.clone(),
            mu_nu: self.mu_nu(),
            hamiltonian: self.hamiltonian.clone(),
            reference_state: self
                .simulate
                .as_ref()
                .map(|sim| (sim.q0.clone(), sim.p0.clone())),
            samples: self.verify.samples,
            tol: self.verify.tol,
            fd_tol: self.verify.fd_tol,
            seed: self.verify.seed,
        }
    }
}

/// Read and validate a configuration file.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    let config: RunConfig = serde_json::from_str(&text)?;
    config.validate()?;
    Ok(config)
}

/// Resolve an observable name from the simulate block.
///
/// Recognized names: `H`, `I`, `C_left[m]`, `C_right[m]`, `M[m]`,
/// `C_sub[name]`, `J[i,j]`, `q[i]`, `p[i]`.
pub fn resolve_observable(
    name: &str,
    system: &families::BuiltSystem,
    lambda: &RealizationParams,
    mu_nu: Option<(f64, f64)>,
) -> Result<Observable> {
    let bad = |msg: &str| Error::Config(format!("observable `{name}`: {msg}"));
    if name == "H" {
        return Ok(system.hamiltonian.clone());
    }
    if name == "I" {
        return system
            .extra_integral
            .clone()
            .ok_or_else(|| bad("this family provides no extra integral"));
    }
    let (head, rest) = match name.find('[') {
        Some(i) if name.ends_with(']') => (&name[..i], &name[i + 1..name.len() - 1]),
        _ => return Err(bad("unrecognized observable name")),
    };
    let index = |text: &str| -> Result<usize> {
        text.trim()
            .parse::<usize>()
            .map_err(|_| bad("expected an integer index"))
    };
    match head {
        "C_left" => Ok(Observable::LeftIntegral {
            m: index(rest)?,
            lambda: lambda.clone(),
        }),
        "C_right" => Ok(Observable::RightIntegral {
            m: index(rest)?,
            lambda: lambda.clone(),
        }),
        "M" => Ok(Observable::TrivialIntegral {
            m: index(rest)?,
            lambda: lambda.clone(),
        }),
        "C_sub" => {
            let sub = SubalgebraName::from_str(rest.trim())?;
            let params = (sub == SubalgebraName::E).then_some(mu_nu).flatten();
            Ok(Observable::SubalgebraCasimir {
                name: sub,
                lambda: lambda.clone(),
                params,
            })
        }
        "J" => {
            let mut parts = rest.split(',');
            let i = index(parts.next().unwrap_or(""))?;
            let j = index(parts.next().unwrap_or(""))?;
            Ok(Observable::AngularMomentum { i, j })
        }
        "q" => Ok(Observable::Coordinate { i: index(rest)? }),
        "p" => Ok(Observable::Momentum { i: index(rest)? }),
        _ => Err(bad("unrecognized observable name")),
    }
}

/// Default recorded observables: H, the extra integral when present, and
/// every universal integral.
pub fn default_observables(n: usize, has_extra: bool) -> Vec<String> {
    let mut names = vec!["H".to_string()];
    if has_extra {
        names.push("I".to_string());
    }
    for m in 3..=n {
        names.push(format!("C_left[{m}]"));
    }
    for m in (3..n).rev() {
        names.push(format!("C_right[{m}]"));
    }
    names
}

/// Drift summary written alongside the trajectory CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DriftSummary {
    pub termination: String,
    pub dt: f64,
    pub steps: usize,
    pub drift: Vec<DriftEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DriftEntry {
    pub name: String,
    pub max_relative_drift: f64,
}

/// Run the verification suite for a config, writing the JSON report.
pub fn cmd_verify(
    config_path: &Path,
    report_path: &Path,
    samples: Option<usize>,
    tol: Option<f64>,
    seed: Option<u64>,
) -> Result<VerificationReport> {
    let mut config = load_config(config_path)?;
    if let Some(samples) = samples {
        config.verify.samples = samples;
    }
    if let Some(tol) = tol {
        config.verify.tol = tol;
    }
    if let Some(seed) = seed {
        config.verify.seed = seed;
    }
    let report =
        verify::run_suite_with_embed(&config.suite_config(), serde_json::to_value(&config)?)?;
    std::fs::write(report_path, render_report(&report))?;
    Ok(report)
}

/// Deterministic pretty rendering of a report.
pub fn render_report(report: &VerificationReport) -> String {
    let mut text = serde_json::to_string_pretty(report).expect("report serializes");
    text.push('\n');
    text
}

/// Outcome of a simulate command.
pub struct SimulateOutcome {
    pub termination: Termination,
    pub summary: DriftSummary,
}

/// Integrate the configured system, writing the CSV and drift summary.
pub fn cmd_simulate(config_path: &Path, out_path: &Path) -> Result<SimulateOutcome> {
    let config = load_config(config_path)?;
    let sim = config
        .simulate
        .clone()
        .ok_or_else(|| Error::Config("config has no simulate block".to_string()))?;
    let spec = config
        .hamiltonian
        .as_ref()
        .ok_or_else(|| Error::Config("config has no hamiltonian block".to_string()))?;
    let lambda = config.lambda()?;
    let system = families::build(spec, &lambda, config.mu_nu())?;
    let s0 = PhaseState::new(sim.q0.clone(), sim.p0.clone())?;
    let names = sim.observables.clone().unwrap_or_else(|| {
        default_observables(config.realization.n, system.extra_integral.is_some())
    });
    let observables: Vec<(String, Observable)> = names
        .iter()
        .map(|name| {
            Ok((
                name.clone(),
                resolve_observable(name, &system, &lambda, config.mu_nu())?,
            ))
        })
        .collect::<Result<_>>()?;
    let steps = (sim.t_end / sim.dt).round() as usize;
    let traj = dynamics::integrate(
        &system.hamiltonian,
        &s0,
        sim.dt,
        steps,
        &observables,
        (system.guard_bp, system.guard_bm),
    )?;
    let mut csv = Vec::new();
    dynamics::write_csv(&traj, &mut csv)?;
    std::fs::write(out_path, csv)?;
    let summary = DriftSummary {
        termination: traj.termination.diagnostic(),
        dt: sim.dt,
        steps,
        drift: dynamics::drift_report(&traj)
            .into_iter()
            .map(|(name, max_relative_drift)| DriftEntry {
                name,
                max_relative_drift,
            })
            .collect(),
    };
    let summary_path = out_path.with_extension("drift.json");
    std::fs::write(
        &summary_path,
        format!("{}\n", serde_json::to_string_pretty(&summary)?),
    )?;
    Ok(SimulateOutcome {
        termination: traj.termination,
        summary,
    })
}

/// Axiom checks without any Hamiltonian; the report goes to stdout.
pub fn cmd_check_axioms(
    n: usize,
    samples: usize,
    tol: f64,
    seed: u64,
) -> Result<VerificationReport> {
    verify::axioms_suite(n, samples, tol, seed)
}

#[cfg(feature = "cli")]
#[derive(clap::Parser)]
#[command(
    name = "twophoton",
    version,
    about = "N-dimensional Hamiltonians with two-photon (h6) coalgebra symmetry: build, verify, integrate"
)]
struct Cli {
    /// Worker threads for sampling (default: available parallelism or
    /// TWOPHOTON_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[cfg(feature = "cli")]
#[derive(clap::Subcommand)]
enum Command {
    /// Run the verification suite for a config and write a JSON report.
    Verify {
        #[arg(long)]
        config: std::path::PathBuf,
        #[arg(long)]
        report: std::path::PathBuf,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Integrate the configured system and write trajectory CSV plus drift
    /// summary JSON.
    Simulate {
        #[arg(long)]
        config: std::path::PathBuf,
        #[arg(long)]
        out: std::path::PathBuf,
    },
    /// Check the algebraic axioms (bracket table, Jacobi, Casimirs) without
    /// any Hamiltonian.
    CheckAxioms {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

#[cfg(feature = "cli")]
fn init_threads(requested: Option<usize>) {
    #[cfg(feature = "parallel")]
    {
        let count = requested
            .or_else(|| {
                std::env::var("TWOPHOTON_THREADS")
                    .ok()
                    .and_then(|v| v.parse().ok())
            })
            .unwrap_or_else(|| {
                std::thread::available_parallelism()
                    .map(|n| n.get())
                    .unwrap_or(1)
            });
        // a pool may already exist when called from tests; that is fine
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(count)
            .build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = requested;
}

#[cfg(feature = "cli")]
fn error_exit_code(e: &Error) -> i32 {
    match e {
        Error::Domain { .. } | Error::Singularity { .. } => 3,
        _ => 2,
    }
}

/// Parse arguments, dispatch, and return the process exit code.
#[cfg(feature = "cli")]
pub fn run() -> i32 {
    use clap::Parser;
    let cli = Cli::parse();
    init_threads(cli.threads);
    match cli.command {
        Command::Verify {
            config,
            report,
            samples,
            tol,
            seed,
        } => match cmd_verify(&config, &report, samples, tol, seed) {
            Ok(rep) => {
                for check in &rep.checks {
                    eprintln!(
                        "{}: {}",
                        check.name,
                        if check.pass { "pass" } else { "FAIL" }
                    );
                }
                for rank in &rep.ranks {
                    eprintln!(
                        "rank[{}]: {} (expected {}) {}",
                        rank.functions.join(","),
                        rank.rank,
                        rank.expected,
                        if rank.pass { "pass" } else { "FAIL" }
                    );
                }
                if rep.pass {
                    0
                } else {
                    1
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                error_exit_code(&e)
            }
        },
        Command::Simulate { config, out } => match cmd_simulate(&config, &out) {
            Ok(outcome) => {
                eprintln!("termination: {}", outcome.summary.termination);
                if outcome.termination.is_completed() {
                    0
                } else {
                    3
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                error_exit_code(&e)
            }
        },
        Command::CheckAxioms {
            n,
            samples,
            tol,
            seed,
        } => match cmd_check_axioms(n, samples, tol, seed) {
            Ok(rep) => {
                print!("{}", render_report(&rep));
                if rep.pass {
                    0
                } else {
                    1
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                error_exit_code(&e)
            }
        },
    }
}
