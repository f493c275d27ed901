//! Property suites: bracket-table conformance, involution, universality,
//! Casimir identities, functional-independence ranks, and oracle agreement.
//!
//! Every check is deterministic under (seed, config): states are sampled
//! up front with a seeded generator and residuals reduce through max/AND,
//! so results do not depend on evaluation order or thread scheduling.

// check bodies run inside immediately-invoked closures so every `?` lands
// in one CheckRecord constructor
#![allow(clippy::redundant_closure_call)]

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::algebra::{
    self, abstract_bracket, generator_context, lie_poisson_bracket, GeneratorId, H6Point,
    SubalgebraName,
};
use crate::expr::Expr;
use crate::families::{self, BuiltSystem, Family, HamiltonianSpec};
use crate::integrals;
use crate::poisson::{bracket_of_gradients, fd_bracket, Gradient, Observable};
use crate::realization::{realize_with_gradients, PhaseState, RealizationParams};
use crate::sample;
use crate::{Error, Result};

/// Relative singular-value cutoff for numeric rank.
pub const RANK_THRESHOLD: f64 = 1e-8;

/// Outcome of one residual check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    /// Largest normalized residual seen; `None` when evaluation failed.
    pub max_residual: Option<f64>,
    pub tol: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl CheckRecord {
    fn from_result(
        name: &str,
        n: usize,
        samples: usize,
        seed: u64,
        tol: f64,
        outcome: Result<f64>,
    ) -> CheckRecord {
        match outcome {
            Ok(residual) => CheckRecord {
                name: name.to_string(),
                n,
                samples,
                seed,
                max_residual: Some(residual),
                tol,
                pass: residual <= tol,
                message: None,
            },
            Err(e) => CheckRecord {
                name: name.to_string(),
                n,
                samples,
                seed,
                max_residual: None,
                tol,
                pass: false,
                message: Some(e.to_string()),
            },
        }
    }
}

/// Outcome of one functional-independence rank check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankRecord {
    pub functions: Vec<String>,
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    pub rank: usize,
    pub expected: usize,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// A named integral value at the report's reference state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NamedValue {
    pub name: String,
    pub value: f64,
}

/// Aggregated result of a suite run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerificationReport {
    pub version: String,
    pub seed: u64,
    pub config_hash: String,
    pub config: serde_json::Value,
    pub checks: Vec<CheckRecord>,
    pub ranks: Vec<RankRecord>,
    /// Universal and subalgebra integrals evaluated at the reference state
    /// (the configured initial state when one is given, a seeded sample
    /// otherwise), keyed `C_left[m]` / `C_right[m]` / `C_sub[name]` / `M[m]`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub integrals: Vec<NamedValue>,
    pub pass: bool,
}

impl VerificationReport {
    fn new(seed: u64, config: serde_json::Value) -> VerificationReport {
        let canonical = serde_json::to_string(&config).unwrap_or_default();
        let mut hasher = Sha256::new();
        hasher.update(canonical.as_bytes());
        let digest = hasher.finalize();
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        let config_hash = format!("sha256:{hex}");
        VerificationReport {
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config_hash,
            config,
            checks: Vec::new(),
            ranks: Vec::new(),
            integrals: Vec::new(),
            pass: true,
        }
    }

    fn push_check(&mut self, record: CheckRecord) {
        self.pass &= record.pass;
        self.checks.push(record);
    }

    fn push_rank(&mut self, record: RankRecord) {
        self.pass &= record.pass;
        self.ranks.push(record);
    }
}

fn max_over<S: Sync, F>(items: &[S], f: F) -> Result<f64>
where
    F: Fn(&S) -> Result<f64> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items
            .par_iter()
            .map(f)
            .try_reduce(|| 0.0f64, |a, b| Ok(a.max(b)))
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().try_fold(0.0f64, |acc, s| Ok(acc.max(f(s)?)))
    }
}

fn grad_norm(g: &Gradient) -> f64 {
    g.dq.iter().chain(&g.dp).map(|v| v * v).sum::<f64>().sqrt()
}

/// |{f, g}| normalized by 1 + |f g| + |grad f||grad g|; the second term is
/// the natural magnitude of a canonical bracket, so the ratio measures
/// cancellation quality rather than operand size.
fn normalized_bracket_residual(f: &Observable, g: &Observable, s: &PhaseState) -> Result<f64> {
    let gf = f.gradient(s)?;
    let gg = g.gradient(s)?;
    let b = bracket_of_gradients(&gf, &gg);
    let scale = 1.0 + (gf.value * gg.value).abs() + grad_norm(&gf) * grad_norm(&gg);
    Ok(b.abs() / scale)
}

/// Bracket-table conformance: the canonical brackets of realized generators
/// reproduce the structure table. Labels are sampled per state unless fixed.
pub fn check_bracket_table(
    n: usize,
    lambda: Option<&RealizationParams>,
    samples: usize,
    tol: f64,
    seed: u64,
) -> CheckRecord {
    let outcome = (|| {
        let mut rng = sample::rng_from_seed(seed);
        let cases: Vec<(PhaseState, RealizationParams)> = (0..samples)
            .map(|_| {
                let s = sample::random_state(&mut rng, n);
                let l = lambda
                    .cloned()
                    .unwrap_or_else(|| sample::random_lambda(&mut rng, n));
                (s, l)
            })
            .collect();
        let ctx = generator_context();
        max_over(&cases, |(s, l)| {
            let frame = realize_with_gradients(s, l)?;
            let vals = frame.values.as_array();
            let mut worst = 0.0f64;
            for x in 0..6 {
                for y in (x + 1)..6 {
                    let mut canonical = 0.0;
                    for i in 0..s.n() {
                        canonical +=
                            frame.dq[x][i] * frame.dp[y][i] - frame.dq[y][i] * frame.dp[x][i];
                    }
                    let table = abstract_bracket(GeneratorId::ALL[x], GeneratorId::ALL[y])
                        .eval(ctx, &vals)?;
                    let scale = 1.0 + vals[x].abs() * vals[y].abs();
                    worst = worst.max((canonical - table).abs() / scale);
                }
            }
            Ok(worst)
        })
    })();
    CheckRecord::from_result("bracket_table", n, samples, seed, tol, outcome)
}

/// Jacobi identity for all generator triples at random points of the
/// Lie-Poisson manifold.
pub fn check_jacobi(samples: usize, tol: f64, seed: u64) -> CheckRecord {
    let outcome = (|| {
        let mut rng = sample::rng_from_seed(seed);
        let points: Vec<H6Point> = (0..samples)
            .map(|_| {
                let s = sample::random_state(&mut rng, 3);
                H6Point::from_array([s.q()[0], s.q()[1], s.q()[2], s.p()[0], s.p()[1], s.p()[2]])
            })
            .collect();
        let ctx = generator_context();
        let symbols: Vec<Expr> = ctx
            .names()
            .iter()
            .map(|n| Expr::symbol(ctx, n).unwrap())
            .collect();
        max_over(&points, |g| {
            let mut worst = 0.0f64;
            for x in 0..6 {
                for y in (x + 1)..6 {
                    for z in (y + 1)..6 {
                        let (gx, gy, gz) = (
                            GeneratorId::ALL[x],
                            GeneratorId::ALL[y],
                            GeneratorId::ALL[z],
                        );
                        let t1 = lie_poisson_bracket(&symbols[x], abstract_bracket(gy, gz), g)?;
                        let t2 = lie_poisson_bracket(&symbols[y], abstract_bracket(gz, gx), g)?;
                        let t3 = lie_poisson_bracket(&symbols[z], abstract_bracket(gx, gy), g)?;
                        worst = worst.max((t1 + t2 + t3).abs());
                    }
                }
            }
            Ok(worst)
        })
    })();
    CheckRecord::from_result("jacobi_identity", 0, samples, seed, tol, outcome)
}

/// The quartic Casimir factors as M times the cubic one, and both commute
/// with every generator under the Lie-Poisson bracket.
pub fn check_casimir_structure(samples: usize, tol: f64, seed: u64) -> CheckRecord {
    let outcome = (|| {
        let mut rng = sample::rng_from_seed(seed);
        let points: Vec<H6Point> = (0..samples)
            .map(|_| {
                let s = sample::random_state(&mut rng, 3);
                let mut m: f64 = s.p()[0];
                if m.abs() < 0.1 {
                    m = 0.1 + m.abs();
                }
                H6Point::from_array([s.q()[0], s.q()[1], s.q()[2], s.p()[1], s.p()[2], m])
            })
            .collect();
        let ctx = generator_context();
        max_over(&points, |g| {
            let vals = g.as_array();
            let c = algebra::casimir_quartic().eval(ctx, &vals)?;
            let ch6 = algebra::casimir_h6().eval(ctx, &vals)?;
            let mut worst = (c - g.m * ch6).abs() / (1.0 + c.abs());
            for name in ctx.names() {
                let x = Expr::symbol(ctx, name)?;
                let b = lie_poisson_bracket(algebra::casimir_h6(), &x, g)?;
                let scale =
                    1.0 + ch6.abs() + vals.iter().fold(0.0f64, |a, v| a.max(v.abs())).powi(3);
                worst = worst.max(b.abs() / scale);
            }
            Ok(worst)
        })
    })();
    CheckRecord::from_result("casimir_structure", 0, samples, seed, tol, outcome)
}

/// Each subalgebra Casimir commutes with all of that subalgebra's
/// generators under the Lie-Poisson bracket.
pub fn check_subalgebra_casimirs(samples: usize, tol: f64, seed: u64) -> CheckRecord {
    let outcome = (|| {
        let mut rng = sample::rng_from_seed(seed);
        let points: Vec<H6Point> = (0..samples)
            .map(|_| loop {
                let s = sample::random_state(&mut rng, 3);
                let g = H6Point::from_array([
                    s.q()[0],
                    s.q()[1],
                    s.q()[2],
                    s.p()[0],
                    s.p()[1],
                    s.p()[2],
                ]);
                if g.bp.abs() >= 0.1 && g.bm.abs() >= 0.1 {
                    return g;
                }
            })
            .collect();
        let ctx = generator_context();
        let defs: Vec<algebra::SubalgebraDef> = SubalgebraName::ALL
            .iter()
            .map(|&name| {
                let params = (name == SubalgebraName::E).then_some((1.1, -0.9));
                algebra::subalgebra(name, params)
            })
            .collect::<Result<_>>()?;
        max_over(&points, |g| {
            let mut worst = 0.0f64;
            for def in &defs {
                let c_val = def.casimir.eval(ctx, &g.as_array())?;
                for gen in &def.generators {
                    let b = lie_poisson_bracket(&def.casimir, gen, g)?;
                    worst = worst.max(b.abs() / (1.0 + c_val.abs()));
                }
            }
            Ok(worst)
        })
    })();
    CheckRecord::from_result("subalgebra_casimirs", 0, samples, seed, tol, outcome)
}

/// The two-site coproduct of the Casimir vanishes identically.
pub fn check_c2_vanishes(
    n_range: (usize, usize),
    samples: usize,
    tol: f64,
    seed: u64,
) -> CheckRecord {
    let (n_lo, n_hi) = n_range;
    let outcome = (|| {
        let mut rng = sample::rng_from_seed(seed);
        let cases: Vec<(PhaseState, RealizationParams)> = (0..samples)
            .map(|_| {
                let n = rng.random_range(n_lo..=n_hi);
                (
                    sample::random_state(&mut rng, n),
                    sample::random_lambda(&mut rng, n),
                )
            })
            .collect();
        max_over(&cases, |(s, l)| {
            Ok(integrals::coproduct_casimir(2, s, l)?.abs())
        })
    })();
    CheckRecord::from_result("casimir_c2_vanishes", n_hi, samples, seed, tol, outcome)
}

/// Direct triple-sum integrals agree with the coproduct route (relative).
pub fn check_coproduct_consistency(n: usize, samples: usize, tol: f64, seed: u64) -> CheckRecord {
    let outcome = (|| {
        let mut rng = sample::rng_from_seed(seed);
        let cases: Vec<(PhaseState, RealizationParams)> = (0..samples)
            .map(|_| {
                (
                    sample::random_state(&mut rng, n),
                    sample::random_lambda(&mut rng, n),
                )
            })
            .collect();
        max_over(&cases, |(s, l)| {
            let mut worst = 0.0f64;
            for m in 3..=n {
                let direct = integrals::left_integral(m, s, l)?;
                let cop = integrals::coproduct_casimir(m, s, l)?;
                worst = worst.max((direct - cop).abs() / (1.0 + direct.abs()));
            }
            Ok(worst)
        })
    })();
    CheckRecord::from_result("coproduct_consistency", n, samples, seed, tol, outcome)
}

/// All pairwise brackets of the given observables vanish (absolute).
pub fn check_involution(
    name: &str,
    fs: &[(String, Observable)],
    n: usize,
    samples: usize,
    tol: f64,
    seed: u64,
) -> CheckRecord {
    let outcome = (|| {
        let mut rng = sample::rng_from_seed(seed);
        let states: Vec<PhaseState> = (0..samples)
            .map(|_| sample::random_state(&mut rng, n))
            .collect();
        max_over(&states, |s| {
            let grads: Vec<Gradient> = fs
                .iter()
                .map(|(_, f)| f.gradient(s))
                .collect::<Result<_>>()?;
            let mut worst = 0.0f64;
            for i in 0..grads.len() {
                for j in (i + 1)..grads.len() {
                    worst = worst.max(bracket_of_gradients(&grads[i], &grads[j]).abs());
                }
            }
            Ok(worst)
        })
    })();
    CheckRecord::from_result(name, n, samples, seed, tol, outcome)
}

/// Universality of the coproduct integrals: randomly generated
/// generator-space Hamiltonians commute with every left and right integral.
pub fn check_universality(
    n: usize,
    n_exprs: usize,
    depth: u32,
    samples: usize,
    tol: f64,
    seed: u64,
) -> CheckRecord {
    let outcome = (|| {
        let mut rng = sample::rng_from_seed(seed);
        let lambda = sample::random_lambda(&mut rng, n);
        let exprs: Vec<Expr> = (0..n_exprs)
            .map(|_| sample::random_generator_expr(&mut rng, depth))
            .collect();
        let states: Vec<PhaseState> = (0..samples)
            .map(|_| sample::random_state(&mut rng, n))
            .collect();
        let mut integral_set = Vec::new();
        for m in 3..=n {
            integral_set.push(Observable::LeftIntegral {
                m,
                lambda: lambda.clone(),
            });
            integral_set.push(Observable::RightIntegral {
                m,
                lambda: lambda.clone(),
            });
        }
        let hs: Vec<Observable> = exprs
            .into_iter()
            .map(|expr| Observable::GeneratorExpr {
                expr,
                lambda: lambda.clone(),
            })
            .collect();
        max_over(&states, |s| {
            let mut worst = 0.0f64;
            for h in &hs {
                for c in &integral_set {
                    worst = worst.max(normalized_bracket_residual(h, c, s)?);
                }
            }
            Ok(worst)
        })
    })();
    CheckRecord::from_result("universality", n, samples, seed, tol, outcome)
}

/// The cubic Casimir factors through the four subalgebra Casimirs:
/// M C_h6 = C_G+ C_G- - C_h4^2 on realized states.
pub fn check_casimir_identity(
    n_list: &[usize],
    samples: usize,
    tol: f64,
    seed: u64,
) -> CheckRecord {
    let max_n = n_list.iter().copied().max().unwrap_or(0);
    let outcome = (|| {
        let mut rng = sample::rng_from_seed(seed);
        let mut cases = Vec::new();
        for &n in n_list {
            for _ in 0..samples {
                cases.push((
                    sample::random_state(&mut rng, n),
                    sample::random_lambda(&mut rng, n),
                ));
            }
        }
        max_over(&cases, |(s, l)| {
            let r = integrals::casimir_identity_residual(s, l)?;
            let cgp = integrals::subalgebra_integral(SubalgebraName::Gp, s, l, None)?;
            let cgm = integrals::subalgebra_integral(SubalgebraName::Gm, s, l, None)?;
            let ch4 = integrals::subalgebra_integral(SubalgebraName::H4, s, l, None)?;
            let scale = 1.0 + (cgp * cgm).abs() + ch4 * ch4;
            Ok(r / scale)
        })
    })();
    CheckRecord::from_result("casimir_identity", max_n, samples, seed, tol, outcome)
}

/// A built Hamiltonian commutes with every universal integral.
pub fn check_hamiltonian_universal_integrals(
    system: &BuiltSystem,
    n: usize,
    samples: usize,
    tol: f64,
    seed: u64,
) -> CheckRecord {
    let outcome = (|| {
        let lambda = observable_lambda(&system.hamiltonian)
            .ok_or_else(|| Error::Config("hamiltonian carries no realization".to_string()))?;
        let mut rng = sample::rng_from_seed(seed);
        let states: Vec<PhaseState> = (0..samples)
            .map(|_| sample::random_state_guarded(&mut rng, n, system.guard_bp, system.guard_bm))
            .collect();
        let mut integral_set = Vec::new();
        for m in 3..=n {
            integral_set.push(Observable::LeftIntegral {
                m,
                lambda: lambda.clone(),
            });
            integral_set.push(Observable::RightIntegral {
                m,
                lambda: lambda.clone(),
            });
        }
        max_over(&states, |s| {
            let mut worst = 0.0f64;
            for c in &integral_set {
                worst = worst.max(normalized_bracket_residual(&system.hamiltonian, c, s)?);
            }
            Ok(worst)
        })
    })();
    CheckRecord::from_result(
        "hamiltonian_universal_integrals",
        n,
        samples,
        seed,
        tol,
        outcome,
    )
}

/// {H, I} = 0 for the system's extra integral.
pub fn check_extra_integral(
    system: &BuiltSystem,
    n: usize,
    samples: usize,
    tol: f64,
    seed: u64,
) -> CheckRecord {
    let outcome = (|| {
        let extra = system
            .extra_integral
            .as_ref()
            .ok_or_else(|| Error::Config("system has no extra integral".to_string()))?;
        let mut rng = sample::rng_from_seed(seed);
        let states: Vec<PhaseState> = (0..samples)
            .map(|_| sample::random_state_guarded(&mut rng, n, system.guard_bp, system.guard_bm))
            .collect();
        max_over(&states, |s| {
            normalized_bracket_residual(&system.hamiltonian, extra, s)
        })
    })();
    CheckRecord::from_result("extra_integral_commutes", n, samples, seed, tol, outcome)
}

/// The 3D electromagnetic potentials reproduce the em-family Hamiltonian.
pub fn check_em_reconstruction(
    f_text: &str,
    g_text: &str,
    r_text: &str,
    charge: f64,
    samples: usize,
    tol: f64,
    seed: u64,
) -> CheckRecord {
    let outcome = (|| {
        let mut rng = sample::rng_from_seed(seed);
        let lambda = sample::random_lambda(&mut rng, 3);
        let system = families::build_em(f_text, g_text, r_text, &lambda)?;
        let states: Vec<PhaseState> = (0..samples)
            .map(|_| sample::random_state(&mut rng, 3))
            .collect();
        max_over(&states, |s| {
            let pot = families::em_potentials(f_text, g_text, r_text, s, &lambda, charge)?;
            let reco: f64 = s
                .p()
                .iter()
                .zip(&pot.a)
                .map(|(p, a)| (p - charge * a) * (p - charge * a) / 2.0)
                .sum::<f64>()
                + charge * pot.psi;
            let h = system.hamiltonian.value(s)?;
            Ok((reco - h).abs() / (1.0 + h.abs()))
        })
    })();
    CheckRecord::from_result("em_reconstruction", 3, samples, seed, tol, outcome)
}

/// Exact-gradient brackets against the central-difference oracle on random
/// observable pairs (relative agreement).
pub fn check_fd_oracle(n: usize, samples: usize, h: f64, tol: f64, seed: u64) -> CheckRecord {
    let outcome = (|| {
        let mut rng = sample::rng_from_seed(seed);
        let lambda = sample::random_lambda(&mut rng, n);
        let mut observables: Vec<Observable> = vec![
            Observable::LeftIntegral {
                m: 3,
                lambda: lambda.clone(),
            },
            Observable::RightIntegral {
                m: 3,
                lambda: lambda.clone(),
            },
            Observable::SubalgebraCasimir {
                name: SubalgebraName::Gl2,
                lambda: lambda.clone(),
                params: None,
            },
            Observable::SubalgebraCasimir {
                name: SubalgebraName::H4,
                lambda: lambda.clone(),
                params: None,
            },
            Observable::AngularMomentum { i: 1, j: 2 },
        ];
        for _ in 0..7 {
            observables.push(Observable::GeneratorExpr {
                expr: sample::random_generator_expr(&mut rng, 3),
                lambda: lambda.clone(),
            });
        }
        let mut cases = Vec::new();
        for _ in 0..samples {
            let s = sample::random_state(&mut rng, n);
            let i = rng.random_range(0..observables.len());
            let j = rng.random_range(0..observables.len());
            cases.push((s, i, j));
        }
        max_over(&cases, |(s, i, j)| {
            let gf = observables[*i].gradient(s)?;
            let gg = observables[*j].gradient(s)?;
            let exact = bracket_of_gradients(&gf, &gg);
            let fd = fd_bracket(&observables[*i], &observables[*j], s, h)?;
            // finite-difference noise scales with the operand magnitudes,
            // so agreement is measured against the bracket's natural scale
            let scale = 1.0 + exact.abs().max(fd.abs()) + grad_norm(&gf) * grad_norm(&gg);
            Ok((exact - fd).abs() / scale)
        })
    })();
    CheckRecord::from_result("fd_oracle", n, samples, seed, tol, outcome)
}

/// Numeric rank of the Jacobian of the given observables, maximized over
/// sampled states (generic rank; isolated degeneracies do not count).
pub fn independence_rank(
    fs: &[(String, Observable)],
    n: usize,
    samples: usize,
    seed: u64,
    guards: (bool, bool),
) -> Result<usize> {
    let mut rng = sample::rng_from_seed(seed);
    let states: Vec<PhaseState> = (0..samples)
        .map(|_| sample::random_state_guarded(&mut rng, n, guards.0, guards.1))
        .collect();
    let mut best = 0usize;
    for s in &states {
        let rows: Vec<Gradient> = fs
            .iter()
            .map(|(_, f)| f.gradient(s))
            .collect::<Result<_>>()?;
        let jac = DMatrix::from_fn(rows.len(), 2 * n, |r, c| {
            if c < n {
                rows[r].dq[c]
            } else {
                rows[r].dp[c - n]
            }
        });
        let sv = jac.singular_values();
        let sigma_max = sv.iter().fold(0.0f64, |a, v| a.max(*v));
        let rank = sv
            .iter()
            .filter(|v| **v > RANK_THRESHOLD * sigma_max)
            .count();
        best = best.max(rank);
    }
    Ok(best)
}

/// The universal set of integral observables: left C^(3..N) then right
/// C_(N-1..3), named for reports.
pub fn universal_integrals(n: usize, lambda: &RealizationParams) -> Vec<(String, Observable)> {
    let mut fs = Vec::new();
    for m in 3..=n {
        fs.push((
            format!("C_left[{m}]"),
            Observable::LeftIntegral {
                m,
                lambda: lambda.clone(),
            },
        ));
    }
    for m in (3..n).rev() {
        fs.push((
            format!("C_right[{m}]"),
            Observable::RightIntegral {
                m,
                lambda: lambda.clone(),
            },
        ));
    }
    fs
}

fn observable_lambda(obs: &Observable) -> Option<RealizationParams> {
    match obs {
        Observable::GeneratorExpr { lambda, .. }
        | Observable::LeftIntegral { lambda, .. }
        | Observable::RightIntegral { lambda, .. }
        | Observable::TrivialIntegral { lambda, .. }
        | Observable::SubalgebraCasimir { lambda, .. } => Some(lambda.clone()),
        _ => None,
    }
}

/// Suite-level configuration, resolved from the CLI config.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub n: usize,
    pub lambda: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_nu: Option<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hamiltonian: Option<HamiltonianSpec>,
    /// (q0, p0) at which the report's integral values are evaluated.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_state: Option<(Vec<f64>, Vec<f64>)>,
    pub samples: usize,
    pub tol: f64,
    pub fd_tol: f64,
    pub seed: u64,
}

/// Every universal and subalgebra integral at one state, with the report's
/// key conventions. Entries whose denominators are singular at the state
/// are omitted.
pub fn integral_values(
    s: &PhaseState,
    lambda: &RealizationParams,
    mu_nu: Option<(f64, f64)>,
) -> Result<Vec<NamedValue>> {
    let n = s.n();
    let mut out = Vec::new();
    for m in 3..=n {
        out.push(NamedValue {
            name: format!("C_left[{m}]"),
            value: integrals::left_integral(m, s, lambda)?,
        });
    }
    for m in (3..=n).rev() {
        out.push(NamedValue {
            name: format!("C_right[{m}]"),
            value: integrals::right_integral(m, s, lambda)?,
        });
    }
    for m in 1..=n {
        out.push(NamedValue {
            name: format!("M[{m}]"),
            value: integrals::trivial_integral(m, lambda)?,
        });
    }
    for name in SubalgebraName::ALL {
        let params = match name {
            SubalgebraName::E => match mu_nu {
                Some(p) => Some(p),
                None => continue,
            },
            _ => None,
        };
        match integrals::subalgebra_integral(name, s, lambda, params) {
            Ok(value) => out.push(NamedValue {
                name: format!("C_sub[{name}]"),
                value,
            }),
            Err(Error::Singularity { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Run every applicable check for the configuration and aggregate a report.
pub fn run_suite(cfg: &SuiteConfig) -> Result<VerificationReport> {
    run_suite_with_embed(cfg, serde_json::to_value(cfg)?)
}

/// As `run_suite`, embedding the caller's resolved configuration in the
/// report so a run can be reproduced from the report alone.
pub fn run_suite_with_embed(
    cfg: &SuiteConfig,
    embed: serde_json::Value,
) -> Result<VerificationReport> {
    let lambda = RealizationParams::new(cfg.lambda.clone())?;
    if lambda.n() != cfg.n {
        return Err(Error::DimensionMismatch {
            q: cfg.n,
            p: cfg.n,
            lambda: lambda.n(),
        });
    }
    let mut report = VerificationReport::new(cfg.seed, embed);
    let (n, samples, tol, seed) = (cfg.n, cfg.samples, cfg.tol, cfg.seed);

    let reference = match &cfg.reference_state {
        Some((q, p)) => PhaseState::new(q.clone(), p.clone())?,
        None => sample::random_state(&mut sample::rng_from_seed(seed), n),
    };
    report.integrals = integral_values(&reference, &lambda, cfg.mu_nu)?;

    report.push_check(check_bracket_table(n, Some(&lambda), samples, tol, seed));
    report.push_check(check_jacobi(samples, tol, seed));
    report.push_check(check_casimir_structure(samples, tol, seed));
    if n >= 2 {
        report.push_check(check_c2_vanishes((2, n), samples.max(100), 1e-12, seed));
    }
    if n >= 3 {
        report.push_check(check_coproduct_consistency(n, samples, 1e-10, seed));
        report.push_check(check_universality(n, 20, 4, samples, tol, seed));
        report.push_check(check_casimir_identity(&[n], samples, 1e-10, seed));
    }
    if n >= 4 {
        let left: Vec<(String, Observable)> = (3..=n)
            .map(|m| {
                (
                    format!("C_left[{m}]"),
                    Observable::LeftIntegral {
                        m,
                        lambda: lambda.clone(),
                    },
                )
            })
            .collect();
        let right: Vec<(String, Observable)> = (3..=n)
            .map(|m| {
                (
                    format!("C_right[{m}]"),
                    Observable::RightIntegral {
                        m,
                        lambda: lambda.clone(),
                    },
                )
            })
            .collect();
        report.push_check(check_involution(
            "involution_left",
            &left,
            n,
            samples,
            tol,
            seed,
        ));
        report.push_check(check_involution(
            "involution_right",
            &right,
            n,
            samples,
            tol,
            seed,
        ));
    }
    report.push_check(check_fd_oracle(n.max(2), samples, 1e-6, cfg.fd_tol, seed));

    if let Some(spec) = &cfg.hamiltonian {
        let system = families::build(spec, &lambda, cfg.mu_nu)?;
        if n >= 3 {
            report.push_check(check_hamiltonian_universal_integrals(
                &system, n, samples, tol, seed,
            ));
        }
        if system.extra_integral.is_some() {
            report.push_check(check_extra_integral(&system, n, samples, tol, seed));
        }
        if spec.family == Some(Family::Em) && n == 3 {
            report.push_check(check_em_reconstruction(
                spec.f.as_deref().unwrap_or("0"),
                spec.g.as_deref().unwrap_or("0"),
                spec.r.as_deref().unwrap_or("0"),
                spec.charge.unwrap_or(1.0),
                samples,
                1e-10,
                seed,
            ));
        }
        if n >= 4 {
            report.push_rank(universal_independence_census(
                &system,
                n,
                &lambda,
                samples.min(25),
                seed,
            )?);
            if system.extra_integral.is_some() {
                report.push_rank(superintegrability_census(
                    &system,
                    n,
                    &lambda,
                    samples.min(25),
                    seed,
                )?);
            }
        }
    }
    Ok(report)
}

/// Rank of {C^(3..N), C_(N-1..3), H}: the universal integrals together with
/// H are functionally independent (full rank 2N-4) for generic H.
pub fn universal_independence_census(
    system: &BuiltSystem,
    n: usize,
    lambda: &RealizationParams,
    samples: usize,
    seed: u64,
) -> Result<RankRecord> {
    let mut fs = universal_integrals(n, lambda);
    fs.push(("H".to_string(), system.hamiltonian.clone()));
    let expected = 2 * n - 4;
    let guards = (system.guard_bp, system.guard_bm);
    let rank = independence_rank(&fs, n, samples, seed, guards)?;
    let (pass, note) = classify_census(&fs, rank, expected, n, samples, seed, guards)?;
    Ok(RankRecord {
        functions: fs.into_iter().map(|(name, _)| name).collect(),
        n,
        samples,
        seed,
        rank,
        expected,
        pass,
        note,
    })
}

/// Rank of {C^(3..N), C_(N-1..3), I, H}: superintegrability census,
/// expected 2N-3 when H is independent of its own integrals.
pub fn superintegrability_census(
    system: &BuiltSystem,
    n: usize,
    lambda: &RealizationParams,
    samples: usize,
    seed: u64,
) -> Result<RankRecord> {
    let extra = system
        .extra_integral
        .as_ref()
        .ok_or_else(|| Error::Config("system has no extra integral".to_string()))?;
    let mut fs = universal_integrals(n, lambda);
    fs.push(("I".to_string(), extra.clone()));
    fs.push(("H".to_string(), system.hamiltonian.clone()));
    let expected = 2 * n - 3;
    let guards = (system.guard_bp, system.guard_bm);
    let rank = independence_rank(&fs, n, samples, seed, guards)?;
    let (pass, note) = classify_census(&fs, rank, expected, n, samples, seed, guards)?;
    Ok(RankRecord {
        functions: fs.into_iter().map(|(name, _)| name).collect(),
        n,
        samples,
        seed,
        rank,
        expected,
        pass,
        note,
    })
}

/// A deficient census is still a pass when H itself is the dependent row
/// (e.g. H chosen equal to a Casimir); the independence claims are generic.
fn classify_census(
    fs: &[(String, Observable)],
    rank: usize,
    expected: usize,
    n: usize,
    samples: usize,
    seed: u64,
    guards: (bool, bool),
) -> Result<(bool, Option<String>)> {
    if rank == expected {
        return Ok((true, None));
    }
    let without_h: Vec<(String, Observable)> = fs[..fs.len() - 1].to_vec();
    let rank_without_h = independence_rank(&without_h, n, samples, seed, guards)?;
    if rank_without_h == rank {
        Ok((
            true,
            Some("dependent: H is a function of the listed integrals".to_string()),
        ))
    } else {
        Ok((false, None))
    }
}

/// Axiom-level suite (no Hamiltonian): bracket table, Jacobi, Casimir
/// structure, subalgebra Casimirs, coproduct consistency, and the
/// factorization identity.
pub fn axioms_suite(n: usize, samples: usize, tol: f64, seed: u64) -> Result<VerificationReport> {
    if n < 1 {
        return Err(Error::Config("check-axioms requires n >= 1".to_string()));
    }
    let config_json = serde_json::json!({
        "n": n,
        "samples": samples,
        "tol": tol,
        "seed": seed,
    });
    let mut report = VerificationReport::new(seed, config_json);
    report.push_check(check_bracket_table(n, None, samples, tol, seed));
    report.push_check(check_jacobi(samples, tol, seed));
    report.push_check(check_casimir_structure(samples, tol, seed));
    report.push_check(check_subalgebra_casimirs(samples, tol, seed));
    if n >= 2 {
        report.push_check(check_c2_vanishes((2, n), samples, 1e-12, seed));
    }
    if n >= 3 {
        report.push_check(check_coproduct_consistency(n, samples, 1e-10, seed));
        report.push_check(check_casimir_identity(&[n], samples, 1e-10, seed));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bracket_table_passes_for_all_small_n() {
        for n in 1..=6 {
            let rec = check_bracket_table(n, None, 50, 1e-9, 42);
            assert!(rec.pass, "n = {n}: {rec:?}");
        }
    }

    #[test]
    fn corrupted_realization_fails_the_table() {
        // drop the -lambda^2/2 shift from K and the {B-, B+} row breaks
        let mut rng = sample::rng_from_seed(9);
        let n = 3;
        let s = sample::random_state(&mut rng, n);
        let l = sample::random_lambda(&mut rng, n);
        let frame = realize_with_gradients(&s, &l).unwrap();
        let mut vals = frame.values.as_array();
        vals[0] += l.total_m() / 2.0; // corrupt K
        let ctx = generator_context();
        let mut canonical = 0.0;
        for i in 0..n {
            canonical += frame.dq[4][i] * frame.dp[3][i] - frame.dq[3][i] * frame.dp[4][i];
        }
        let table = abstract_bracket(GeneratorId::Bm, GeneratorId::Bp)
            .eval(ctx, &vals)
            .unwrap();
        assert!(
            (canonical - table).abs() > 1e-3,
            "corruption must be detected"
        );
    }

    #[test]
    fn involution_holds_for_left_and_right_sets() {
        let mut rng = sample::rng_from_seed(5);
        let lambda = sample::random_lambda(&mut rng, 5);
        let left: Vec<(String, Observable)> = (3..=5)
            .map(|m| {
                (
                    format!("C_left[{m}]"),
                    Observable::LeftIntegral {
                        m,
                        lambda: lambda.clone(),
                    },
                )
            })
            .collect();
        let rec = check_involution("involution_left", &left, 5, 50, 1e-9, 42);
        assert!(rec.pass, "{rec:?}");
        let right: Vec<(String, Observable)> = (3..=4)
            .map(|m| {
                (
                    format!("C_right[{m}]"),
                    Observable::RightIntegral {
                        m,
                        lambda: lambda.clone(),
                    },
                )
            })
            .collect();
        let rec = check_involution("involution_right", &right, 5, 50, 1e-9, 42);
        assert!(rec.pass, "{rec:?}");
    }

    #[test]
    fn angular_momentum_is_a_negative_control() {
        // {C^(3), J_12} does not vanish in general
        let mut rng = sample::rng_from_seed(7);
        let lambda = sample::random_lambda(&mut rng, 3);
        let fs = vec![
            (
                "C_left[3]".to_string(),
                Observable::LeftIntegral { m: 3, lambda },
            ),
            (
                "J[1,2]".to_string(),
                Observable::AngularMomentum { i: 1, j: 2 },
            ),
        ];
        let rec = check_involution("negative_control", &fs, 3, 50, 1e-9, 42);
        assert!(!rec.pass, "{rec:?}");
    }

    #[test]
    fn mutation_in_the_integral_formula_is_caught() {
        // a sign flip inside the triple sum breaks involution with the
        // coproduct route
        let mut rng = sample::rng_from_seed(11);
        let n = 4;
        let lambda = sample::random_lambda(&mut rng, n);
        let s = sample::random_state(&mut rng, n);
        let mutated = |s: &PhaseState| {
            let (q, p, l) = (s.q(), s.p(), lambda.lambda());
            let mut total = 0.0;
            for i in 0..3 {
                for j in (i + 1)..3 {
                    for k in (j + 1)..3 {
                        // sign of the second term flipped
                        let w = l[i] * (p[j] * q[k] - p[k] * q[j])
                            - l[j] * (p[k] * q[i] - p[i] * q[k])
                            + l[k] * (p[i] * q[j] - p[j] * q[i]);
                        total += w * w;
                    }
                }
            }
            total
        };
        let direct = mutated(&s);
        let cop = integrals::coproduct_casimir(3, &s, &lambda).unwrap();
        assert!(
            (direct - cop).abs() > 1e-6,
            "mutated formula must disagree with the coproduct route"
        );
    }

    #[test]
    fn universality_passes_for_random_hamiltonians() {
        let rec = check_universality(4, 10, 4, 50, 1e-9, 42);
        assert!(rec.pass, "{rec:?}");
    }

    #[test]
    fn rank_census_ignores_duplicated_functions() {
        let mut rng = sample::rng_from_seed(13);
        let lambda = sample::random_lambda(&mut rng, 4);
        let mut fs = universal_integrals(4, &lambda);
        let rank_base = independence_rank(&fs, 4, 10, 42, (false, false)).unwrap();
        fs.push(fs[0].clone());
        let rank_dup = independence_rank(&fs, 4, 10, 42, (false, false)).unwrap();
        assert_eq!(rank_base, rank_dup);
    }

    #[test]
    fn universal_census_has_full_rank_for_generic_h() {
        let lambda = RealizationParams::new(vec![1.0, 0.8, 1.3, 0.6, 1.1]).unwrap();
        let system = families::build_generic("K + Bp*Bm - Ap", &lambda).unwrap();
        let rec = universal_independence_census(&system, 5, &lambda, 10, 42).unwrap();
        assert!(rec.pass, "{rec:?}");
        assert_eq!(rec.rank, 6); // 2N-4 at N=5
        assert!(rec.note.is_none());
    }

    #[test]
    fn hamiltonian_equal_to_the_casimir_is_dependent_on_the_top_integral() {
        // H built from the printed Casimir is exactly C^(N) realized, so the
        // universal census flags dependence instead of failing
        let ctx = generator_context();
        let lambda = RealizationParams::new(vec![1.0, 0.8, 1.2, 0.9]).unwrap();
        let text = algebra::casimir_h6().print(ctx);
        let system = families::build_generic(&text, &lambda).unwrap();
        let rec_universal = check_hamiltonian_universal_integrals(&system, 4, 50, 1e-9, 42);
        assert!(rec_universal.pass, "{rec_universal:?}");
        let census = universal_independence_census(&system, 4, &lambda, 10, 42).unwrap();
        assert!(census.pass, "{census:?}");
        assert_eq!(census.rank, census.expected - 1);
        assert!(census.note.is_some());
    }

    #[test]
    fn dependent_hamiltonian_is_flagged_not_failed() {
        // H equal to its own Casimir: the census rank drops by one and the
        // record carries the dependence note
        let lambda = RealizationParams::new(vec![1.0, 0.9, 1.2, 0.7]).unwrap();
        let system =
            families::build_subalgebra(SubalgebraName::Dm, "Am^2/Bm", &lambda, None).unwrap();
        let rec = superintegrability_census(&system, 4, &lambda, 10, 42).unwrap();
        assert!(rec.pass, "{rec:?}");
        assert_eq!(rec.rank, rec.expected - 1);
        assert!(rec.note.is_some());
    }

    #[test]
    fn force_example_census_reaches_expected_rank() {
        let lambda = RealizationParams::new(vec![1.0, 0.8, 1.3, 0.6]).unwrap();
        let system = families::build_force_example([1.0, 1.0, 1.0], &lambda).unwrap();
        let rec = superintegrability_census(&system, 4, &lambda, 10, 42).unwrap();
        assert!(rec.pass, "{rec:?}");
        assert_eq!(rec.rank, 5);
        assert!(rec.note.is_none());
    }

    #[test]
    fn suite_reports_are_deterministic() {
        let cfg = SuiteConfig {
            n: 4,
            lambda: vec![1.0, 0.8, 1.2, 0.9],
            mu_nu: None,
            hamiltonian: Some(HamiltonianSpec {
                family: Some(Family::Natural),
                f: Some("Bm".to_string()),
                ..HamiltonianSpec::default()
            }),
            reference_state: Some((vec![0.5, -0.2, 0.8, 0.1], vec![0.3, 0.6, -0.4, 0.2])),
            samples: 25,
            tol: 1e-9,
            fd_tol: 1e-5,
            seed: 42,
        };
        let a = run_suite(&cfg).unwrap();
        let b = run_suite(&cfg).unwrap();
        assert!(a.pass, "{a:#?}");
        let ja = serde_json::to_string(&a).unwrap();
        let jb = serde_json::to_string(&b).unwrap();
        assert_eq!(ja, jb);
        // the report exports the integral values with their report keys
        let names: Vec<&str> = a.integrals.iter().map(|nv| nv.name.as_str()).collect();
        for key in [
            "C_left[3]",
            "C_left[4]",
            "C_right[3]",
            "M[4]",
            "C_sub[gl2]",
            "C_sub[Gm]",
        ] {
            assert!(names.contains(&key), "missing {key} in {names:?}");
        }
    }

    #[test]
    fn axioms_suite_passes_and_rejects_bad_n() {
        let report = axioms_suite(4, 50, 1e-9, 42).unwrap();
        assert!(report.pass, "{report:#?}");
        assert!(axioms_suite(0, 10, 1e-9, 42).is_err());
    }

    #[test]
    fn em_reconstruction_check_passes() {
        let rec = check_em_reconstruction("Am", "Bm", "Am*Bm", 1.3, 50, 1e-10, 42);
        assert!(rec.pass, "{rec:?}");
    }

    #[test]
    fn fd_oracle_check_passes() {
        let rec = check_fd_oracle(4, 50, 1e-6, 1e-5, 42);
        assert!(rec.pass, "{rec:?}");
    }

    #[test]
    fn failed_evaluation_marks_the_check() {
        // a Hamiltonian with a genuine domain error during sampling
        let lambda = RealizationParams::new(vec![1.0, 1.0, 1.0]).unwrap();
        let system = families::build_generic("log(K)", &lambda).unwrap();
        let rec = check_hamiltonian_universal_integrals(&system, 3, 50, 1e-9, 42);
        assert!(!rec.pass);
        assert!(rec.message.is_some());
    }
}
