//! Canonical Poisson bracket of phase-space observables.
//!
//! Observables are either generator-space expressions composed with the
//! realization (gradients via the chain rule through the generator frame) or
//! built-in phase-space functions with hand-derived gradients. Exact
//! gradients are the primary route; the central-difference bracket exists as
//! an independent oracle.

use crate::algebra::{generator_context, SubalgebraName};
use crate::expr::Expr;
use crate::integrals;
use crate::realization::{realize_with_gradients, PhaseState, RealizationParams};
use crate::{Error, Result};

/// A phase-space observable with exact value and gradient.
#[derive(Debug, Clone)]
pub enum Observable {
    /// Generator-space expression composed with the N-site realization.
    GeneratorExpr {
        expr: Expr,
        lambda: RealizationParams,
    },
    /// Left integral C^(m) on sites 1..m.
    LeftIntegral { m: usize, lambda: RealizationParams },
    /// Right integral C_(m) on sites N-m+1..N.
    RightIntegral { m: usize, lambda: RealizationParams },
    /// Trivial integral M^(m); constant on phase space.
    TrivialIntegral { m: usize, lambda: RealizationParams },
    /// Realized subalgebra Casimir from the closed pair-sum forms.
    SubalgebraCasimir {
        name: SubalgebraName,
        lambda: RealizationParams,
        params: Option<(f64, f64)>,
    },
    /// Angular momentum J_ij (1-based, i < j).
    AngularMomentum { i: usize, j: usize },
    /// Coordinate q_i (1-based).
    Coordinate { i: usize },
    /// Momentum p_i (1-based).
    Momentum { i: usize },
}

/// Value and phase-space gradient of an observable at a state.
#[derive(Debug, Clone)]
pub struct Gradient {
    pub value: f64,
    pub dq: Vec<f64>,
    pub dp: Vec<f64>,
}

impl Observable {
    pub fn value(&self, s: &PhaseState) -> Result<f64> {
        match self {
            Observable::GeneratorExpr { expr, lambda } => {
                let g = crate::realization::realize(s, lambda)?;
                expr.eval(generator_context(), &g.as_array())
            }
            Observable::LeftIntegral { m, lambda } => integrals::left_integral(*m, s, lambda),
            Observable::RightIntegral { m, lambda } => integrals::right_integral(*m, s, lambda),
            Observable::TrivialIntegral { m, lambda } => integrals::trivial_integral(*m, lambda),
            Observable::SubalgebraCasimir {
                name,
                lambda,
                params,
            } => integrals::subalgebra_integral(*name, s, lambda, *params),
            Observable::AngularMomentum { i, j } => integrals::angular_momentum(s, *i, *j),
            Observable::Coordinate { i } => coordinate(s, *i, s.q()),
            Observable::Momentum { i } => coordinate(s, *i, s.p()),
        }
    }

    pub fn gradient(&self, s: &PhaseState) -> Result<Gradient> {
        let n = s.n();
        match self {
            Observable::GeneratorExpr { expr, lambda } => {
                let frame = realize_with_gradients(s, lambda)?;
                let (value, gen_grad) =
                    expr.eval_with_gradient(generator_context(), &frame.values.as_array())?;
                let mut dq = vec![0.0; n];
                let mut dp = vec![0.0; n];
                for (g, &w) in gen_grad.iter().enumerate() {
                    if w == 0.0 {
                        continue;
                    }
                    for i in 0..n {
                        dq[i] += w * frame.dq[g][i];
                        dp[i] += w * frame.dp[g][i];
                    }
                }
                Ok(Gradient { value, dq, dp })
            }
            Observable::LeftIntegral { m, lambda } => {
                let (value, dq, dp) = integrals::left_integral_gradient(*m, s, lambda)?;
                Ok(Gradient { value, dq, dp })
            }
            Observable::RightIntegral { m, lambda } => {
                let (value, dq, dp) = integrals::right_integral_gradient(*m, s, lambda)?;
                Ok(Gradient { value, dq, dp })
            }
            Observable::TrivialIntegral { m, lambda } => Ok(Gradient {
                value: integrals::trivial_integral(*m, lambda)?,
                dq: vec![0.0; n],
                dp: vec![0.0; n],
            }),
            Observable::SubalgebraCasimir {
                name,
                lambda,
                params,
            } => {
                let (value, dq, dp) =
                    integrals::subalgebra_integral_gradient(*name, s, lambda, *params, true)?;
                Ok(Gradient { value, dq, dp })
            }
            Observable::AngularMomentum { i, j } => {
                let (value, dq, dp) = integrals::angular_momentum_gradient(s, *i, *j)?;
                Ok(Gradient { value, dq, dp })
            }
            Observable::Coordinate { i } => {
                let value = coordinate(s, *i, s.q())?;
                let mut dq = vec![0.0; n];
                dq[i - 1] = 1.0;
                Ok(Gradient {
                    value,
                    dq,
                    dp: vec![0.0; n],
                })
            }
            Observable::Momentum { i } => {
                let value = coordinate(s, *i, s.p())?;
                let mut dp = vec![0.0; n];
                dp[i - 1] = 1.0;
                Ok(Gradient {
                    value,
                    dq: vec![0.0; n],
                    dp,
                })
            }
        }
    }
}

fn coordinate(s: &PhaseState, i: usize, v: &[f64]) -> Result<f64> {
    if i < 1 || i > s.n() {
        return Err(Error::BadSiteRange {
            a: i,
            b: i,
            n: s.n(),
        });
    }
    Ok(v[i - 1])
}

/// Canonical Poisson bracket {f, g} at a state, from exact gradients.
pub fn bracket(f: &Observable, g: &Observable, s: &PhaseState) -> Result<f64> {
    let gf = f.gradient(s)?;
    let gg = g.gradient(s)?;
    Ok(bracket_of_gradients(&gf, &gg))
}

pub(crate) fn bracket_of_gradients(gf: &Gradient, gg: &Gradient) -> f64 {
    gf.dq
        .iter()
        .zip(&gf.dp)
        .zip(gg.dq.iter().zip(&gg.dp))
        .map(|((fq, fp), (gq, gp))| fq * gp - gq * fp)
        .sum()
}

/// Central-difference approximation of the canonical bracket; the
/// independent oracle for `bracket`.
pub fn fd_bracket(f: &Observable, g: &Observable, s: &PhaseState, h: f64) -> Result<f64> {
    if h <= 0.0 {
        return Err(Error::InvalidParameter(
            "fd step must be positive".to_string(),
        ));
    }
    let n = s.n();
    let mut acc = 0.0;
    for i in 0..n {
        let df_dq = fd_partial(f, s, i, true, h)?;
        let dg_dp = fd_partial(g, s, i, false, h)?;
        let dg_dq = fd_partial(g, s, i, true, h)?;
        let df_dp = fd_partial(f, s, i, false, h)?;
        acc += df_dq * dg_dp - dg_dq * df_dp;
    }
    Ok(acc)
}

fn fd_partial(f: &Observable, s: &PhaseState, i: usize, wrt_q: bool, h: f64) -> Result<f64> {
    let shift = |delta: f64| -> Result<f64> {
        let mut q = s.q().to_vec();
        let mut p = s.p().to_vec();
        if wrt_q {
            q[i] += delta;
        } else {
            p[i] += delta;
        }
        f.value(&PhaseState::new(q, p)?)
    };
    Ok((shift(h)? - shift(-h)?) / (2.0 * h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::generator_context;
    use crate::expr::parse;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_state(rng: &mut impl Rng, n: usize) -> (PhaseState, RealizationParams) {
        let q = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let p = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let l = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
        (
            PhaseState::new(q, p).unwrap(),
            RealizationParams::new(l).unwrap(),
        )
    }

    fn gen_obs(text: &str, lambda: &RealizationParams) -> Observable {
        Observable::GeneratorExpr {
            expr: parse(text, generator_context()).unwrap(),
            lambda: lambda.clone(),
        }
    }

    #[test]
    fn canonical_pair_brackets_to_one() {
        let s = PhaseState::new(vec![0.3, -0.7], vec![1.1, 0.2]).unwrap();
        let q1 = Observable::Coordinate { i: 1 };
        let p1 = Observable::Momentum { i: 1 };
        let p2 = Observable::Momentum { i: 2 };
        assert_eq!(bracket(&q1, &p1, &s).unwrap(), 1.0);
        assert_eq!(bracket(&q1, &p2, &s).unwrap(), 0.0);
        assert_eq!(bracket(&p1, &q1, &s).unwrap(), -1.0);
    }

    #[test]
    fn realized_am_ap_bracket_is_m() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let (s, l) = random_state(&mut rng, 4);
            let am = gen_obs("Am", &l);
            let ap = gen_obs("Ap", &l);
            let b = bracket(&am, &ap, &s).unwrap();
            assert!((b - l.total_m()).abs() < 1e-12);
        }
    }

    #[test]
    fn realized_bm_bp_bracket_at_the_fixture() {
        let s = PhaseState::new(vec![1.0, 0.0], vec![0.0, 1.0]).unwrap();
        let l = RealizationParams::new(vec![1.0, 1.0]).unwrap();
        let bm = gen_obs("Bm", &l);
        let bp = gen_obs("Bp", &l);
        // {B-, B+} = 4K + 2M = 4(-1) + 2(2) = 0 at this point
        assert!(bracket(&bm, &bp, &s).unwrap().abs() < 1e-12);
    }

    #[test]
    fn m_commutes_with_everything() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (s, l) = random_state(&mut rng, 3);
        let m = gen_obs("M", &l);
        let other = gen_obs("K*Bp + sin(Am)*Bm - Ap^2", &l);
        assert_eq!(bracket(&m, &other, &s).unwrap(), 0.0);
        assert!(fd_bracket(&m, &other, &s, 1e-6).unwrap().abs() < 1e-6);
    }

    #[test]
    fn fd_oracle_agrees_with_exact_brackets() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let observables = |l: &RealizationParams| -> Vec<Observable> {
            vec![
                gen_obs("0.5*Bp + Bm^2", l),
                gen_obs("K*Am - Ap*Bm", l),
                Observable::LeftIntegral {
                    m: 3,
                    lambda: l.clone(),
                },
                Observable::RightIntegral {
                    m: 3,
                    lambda: l.clone(),
                },
                Observable::SubalgebraCasimir {
                    name: SubalgebraName::Gl2,
                    lambda: l.clone(),
                    params: None,
                },
                Observable::AngularMomentum { i: 1, j: 3 },
            ]
        };
        for _ in 0..25 {
            let (s, l) = random_state(&mut rng, 4);
            let obs = observables(&l);
            for f in &obs {
                for g in &obs {
                    let exact = bracket(f, g, &s).unwrap();
                    let fd = fd_bracket(f, g, &s, 1e-6).unwrap();
                    assert!(
                        (exact - fd).abs() <= 1e-5 * (1.0 + exact.abs().max(fd.abs())),
                        "exact {exact} vs fd {fd}"
                    );
                }
            }
        }
    }

    #[test]
    fn antisymmetry_and_bilinearity_spot_checks() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..20 {
            let (s, l) = random_state(&mut rng, 3);
            let f = gen_obs("K^2 - Bm*Ap", &l);
            let g = gen_obs("cos(Am) + Bp", &l);
            let fg = bracket(&f, &g, &s).unwrap();
            let gf = bracket(&g, &f, &s).unwrap();
            assert!((fg + gf).abs() < 1e-12);
            assert!(bracket(&f, &f, &s).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn leibniz_rule_holds() {
        // {f, gh} = {f, g} h + g {f, h}, exercised through expression algebra
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let ctx = generator_context();
        for _ in 0..20 {
            let (s, l) = random_state(&mut rng, 3);
            let f = gen_obs("K + Bm^2", &l);
            let g = gen_obs("Ap*Am", &l);
            let h = gen_obs("Bp - K", &l);
            let gh = Observable::GeneratorExpr {
                expr: crate::expr::Expr::mul(
                    parse("Ap*Am", ctx).unwrap(),
                    parse("Bp - K", ctx).unwrap(),
                ),
                lambda: l.clone(),
            };
            let lhs = bracket(&f, &gh, &s).unwrap();
            let rhs = bracket(&f, &g, &s).unwrap() * h.value(&s).unwrap()
                + g.value(&s).unwrap() * bracket(&f, &h, &s).unwrap();
            assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
        }
    }

    #[test]
    fn composition_matches_the_lie_poisson_bracket() {
        // bracket of composed observables = Lie-Poisson bracket of their
        // generator expressions at the realized point (the homomorphism
        // property of the realization)
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let ctx = generator_context();
        let e1 = parse("K*Bm + Ap^2", ctx).unwrap();
        let e2 = parse("Bp*Am - 2*K", ctx).unwrap();
        for n in 1..=5 {
            for _ in 0..20 {
                let (s, l) = random_state(&mut rng, n);
                let o1 = Observable::GeneratorExpr {
                    expr: e1.clone(),
                    lambda: l.clone(),
                };
                let o2 = Observable::GeneratorExpr {
                    expr: e2.clone(),
                    lambda: l.clone(),
                };
                let canonical = bracket(&o1, &o2, &s).unwrap();
                let g = crate::realization::realize(&s, &l).unwrap();
                let algebraic = crate::algebra::lie_poisson_bracket(&e1, &e2, &g).unwrap();
                assert!(
                    (canonical - algebraic).abs() <= 1e-9 * (1.0 + algebraic.abs()),
                    "canonical {canonical} vs lie-poisson {algebraic}"
                );
            }
        }
    }

    #[test]
    fn fd_step_must_be_positive() {
        let s = PhaseState::new(vec![0.0], vec![0.0]).unwrap();
        let q = Observable::Coordinate { i: 1 };
        assert!(fd_bracket(&q, &q, &s, 0.0).is_err());
    }
}
