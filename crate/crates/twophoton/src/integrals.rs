//! Universal integrals of motion and realized subalgebra Casimirs.
//!
//! The left integrals C^(m) live on sites 1..m, the right ones C_(m) on
//! sites N-m+1..N; both are m-site realizations of the cubic Casimir and are
//! computed here by the direct triple sum over angular-momentum combinations.
//! `coproduct_casimir` evaluates the Casimir expression on the restricted
//! realization instead, which keeps an independent code path for the same
//! quantity.

use crate::algebra::{self, SubalgebraName};
use crate::realization::{realize, realize_sites, PhaseState, RealizationParams};
use crate::{Error, Result};

/// Threshold below which rational Casimir denominators count as singular.
pub const SINGULAR_DENOMINATOR: f64 = 1e-8;

/// Which coproduct family an integral set belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegralKind {
    Left,
    Right,
}

/// One universal integral value with its defining site window (1-based,
/// inclusive).
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct IntegralValue {
    pub m: usize,
    pub window: (usize, usize),
    pub value: f64,
}

/// A full family of universal integrals at a state: left sets live on sites
/// [1, m], right sets on [N-m+1, N], for m = 3..N. The top orders coincide,
/// C_(N) = C^(N).
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct IntegralSet {
    pub kind: IntegralKind,
    pub values: Vec<IntegralValue>,
}

/// Evaluate every integral of one family at a state.
pub fn integral_set(
    kind: IntegralKind,
    s: &PhaseState,
    lambda: &RealizationParams,
) -> Result<IntegralSet> {
    let n = s.n();
    if n < 3 {
        return Ok(IntegralSet {
            kind,
            values: Vec::new(),
        });
    }
    let values = (3..=n)
        .map(|m| {
            let (window, value) = match kind {
                IntegralKind::Left => ((1, m), left_integral(m, s, lambda)?),
                IntegralKind::Right => ((n - m + 1, n), right_integral(m, s, lambda)?),
            };
            Ok(IntegralValue { m, window, value })
        })
        .collect::<Result<_>>()?;
    Ok(IntegralSet { kind, values })
}

/// Euclidean angular momentum J_ij = q_i p_j - q_j p_i (1-based, i < j).
pub fn angular_momentum(s: &PhaseState, i: usize, j: usize) -> Result<f64> {
    if i < 1 || j <= i || j > s.n() {
        return Err(Error::BadSiteRange {
            a: i,
            b: j,
            n: s.n(),
        });
    }
    let (q, p) = (s.q(), s.p());
    Ok(q[i - 1] * p[j - 1] - q[j - 1] * p[i - 1])
}

pub(crate) fn angular_momentum_gradient(
    s: &PhaseState,
    i: usize,
    j: usize,
) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let v = angular_momentum(s, i, j)?;
    let (q, p) = (s.q(), s.p());
    let n = s.n();
    let (mut dq, mut dp) = (vec![0.0; n], vec![0.0; n]);
    let (i, j) = (i - 1, j - 1);
    dq[i] = p[j];
    dq[j] = -p[i];
    dp[j] = q[i];
    dp[i] = -q[j];
    Ok((v, dq, dp))
}

fn check_order(m: usize, n: usize) -> Result<()> {
    if !(2..=n).contains(&m) {
        return Err(Error::BadIntegralOrder { m, n });
    }
    Ok(())
}

/// Triple sum of squared lambda-weighted angular momenta over a 0-based
/// contiguous site window, optionally accumulating the phase-space gradient.
fn window_integral(
    s: &PhaseState,
    lambda: &RealizationParams,
    window: std::ops::Range<usize>,
    mut grad: Option<(&mut [f64], &mut [f64])>,
) -> f64 {
    let (q, p, l) = (s.q(), s.p(), lambda.lambda());
    let idx: Vec<usize> = window.collect();
    let mut total = 0.0;
    for a in 0..idx.len() {
        for b in (a + 1)..idx.len() {
            for c in (b + 1)..idx.len() {
                let (i, j, k) = (idx[a], idx[b], idx[c]);
                let w = l[i] * (p[j] * q[k] - p[k] * q[j])
                    + l[j] * (p[k] * q[i] - p[i] * q[k])
                    + l[k] * (p[i] * q[j] - p[j] * q[i]);
                total += w * w;
                if let Some((dq, dp)) = grad.as_mut() {
                    let two_w = 2.0 * w;
                    dp[i] += two_w * (l[k] * q[j] - l[j] * q[k]);
                    dp[j] += two_w * (l[i] * q[k] - l[k] * q[i]);
                    dp[k] += two_w * (l[j] * q[i] - l[i] * q[j]);
                    dq[i] += two_w * (l[j] * p[k] - l[k] * p[j]);
                    dq[j] += two_w * (l[k] * p[i] - l[i] * p[k]);
                    dq[k] += two_w * (l[i] * p[j] - l[j] * p[i]);
                }
            }
        }
    }
    total
}

/// Left integral C^(m) on sites 1..m. `m = 2` is admitted and returns 0.
pub fn left_integral(m: usize, s: &PhaseState, lambda: &RealizationParams) -> Result<f64> {
    check_order(m, s.n())?;
    Ok(window_integral(s, lambda, 0..m, None))
}

/// Right integral C_(m) on sites N-m+1..N.
pub fn right_integral(m: usize, s: &PhaseState, lambda: &RealizationParams) -> Result<f64> {
    let n = s.n();
    check_order(m, n)?;
    Ok(window_integral(s, lambda, (n - m)..n, None))
}

pub(crate) fn left_integral_gradient(
    m: usize,
    s: &PhaseState,
    lambda: &RealizationParams,
) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    check_order(m, s.n())?;
    let n = s.n();
    let (mut dq, mut dp) = (vec![0.0; n], vec![0.0; n]);
    let v = window_integral(s, lambda, 0..m, Some((&mut dq, &mut dp)));
    Ok((v, dq, dp))
}

pub(crate) fn right_integral_gradient(
    m: usize,
    s: &PhaseState,
    lambda: &RealizationParams,
) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let n = s.n();
    check_order(m, n)?;
    let (mut dq, mut dp) = (vec![0.0; n], vec![0.0; n]);
    let v = window_integral(s, lambda, (n - m)..n, Some((&mut dq, &mut dp)));
    Ok((v, dq, dp))
}

/// m-site coproduct of the cubic Casimir: the Casimir expression evaluated on
/// the realization restricted to sites 1..m. Equal to `left_integral(m)`.
pub fn coproduct_casimir(m: usize, s: &PhaseState, lambda: &RealizationParams) -> Result<f64> {
    check_order(m, s.n())?;
    let g = realize_sites(s, lambda, 1, m)?;
    algebra::casimir_h6().eval(algebra::generator_context(), &g.as_array())
}

/// Trivial integral M^(m) = sum of the first m squared labels.
pub fn trivial_integral(m: usize, lambda: &RealizationParams) -> Result<f64> {
    if !(1..=lambda.n()).contains(&m) {
        return Err(Error::BadIntegralOrder { m, n: lambda.n() });
    }
    Ok(lambda.lambda()[..m].iter().map(|l| l * l).sum())
}

/// Realized subalgebra Casimir (the N-th coproduct of the Table 1 Casimir),
/// computed from the closed pair-sum forms.
pub fn subalgebra_integral(
    name: SubalgebraName,
    s: &PhaseState,
    lambda: &RealizationParams,
    params: Option<(f64, f64)>,
) -> Result<f64> {
    Ok(subalgebra_integral_gradient(name, s, lambda, params, false)?.0)
}

/// Value and optionally the exact gradient of a realized subalgebra Casimir.
pub(crate) fn subalgebra_integral_gradient(
    name: SubalgebraName,
    s: &PhaseState,
    lambda: &RealizationParams,
    params: Option<(f64, f64)>,
    want_grad: bool,
) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    if s.n() != lambda.n() {
        return Err(Error::DimensionMismatch {
            q: s.n(),
            p: s.n(),
            lambda: lambda.n(),
        });
    }
    let n = s.n();
    let (q, p, l) = (s.q(), s.p(), lambda.lambda());
    let (mut dq, mut dp) = (vec![0.0; n], vec![0.0; n]);
    let value = match name {
        SubalgebraName::Dp => {
            let ap: f64 = (0..n).map(|i| l[i] * p[i]).sum();
            let bp: f64 = (0..n).map(|i| p[i] * p[i]).sum();
            if bp.abs() < SINGULAR_DENOMINATOR {
                return Err(Error::Singularity {
                    what: "C_Dp".to_string(),
                    denominator: "B+".to_string(),
                    value: bp.abs(),
                });
            }
            if want_grad {
                for i in 0..n {
                    dp[i] = (2.0 * ap * l[i] * bp - ap * ap * 2.0 * p[i]) / (bp * bp);
                }
            }
            ap * ap / bp
        }
        SubalgebraName::Dm => {
            let am: f64 = (0..n).map(|i| l[i] * q[i]).sum();
            let bm: f64 = (0..n).map(|i| q[i] * q[i]).sum();
            if bm.abs() < SINGULAR_DENOMINATOR {
                return Err(Error::Singularity {
                    what: "C_Dm".to_string(),
                    denominator: "B-".to_string(),
                    value: bm.abs(),
                });
            }
            if want_grad {
                for i in 0..n {
                    dq[i] = (2.0 * am * l[i] * bm - am * am * 2.0 * q[i]) / (bm * bm);
                }
            }
            am * am / bm
        }
        SubalgebraName::H4 => {
            let mut v = 0.0;
            for i in 0..n {
                for j in (i + 1)..n {
                    let dpij = l[j] * p[i] - l[i] * p[j];
                    let dqij = l[j] * q[i] - l[i] * q[j];
                    v += dpij * dqij;
                    if want_grad {
                        dp[i] += l[j] * dqij;
                        dp[j] -= l[i] * dqij;
                        dq[i] += l[j] * dpij;
                        dq[j] -= l[i] * dpij;
                    }
                }
            }
            v
        }
        SubalgebraName::Gp => pair_square_sum(p, l, want_grad.then_some(&mut dp)),
        SubalgebraName::Gm => pair_square_sum(q, l, want_grad.then_some(&mut dq)),
        SubalgebraName::E => {
            let (mu, nu) = match params {
                Some((mu, nu)) if mu != 0.0 && nu != 0.0 => (mu, nu),
                _ => return Err(Error::InvalidEParameters),
            };
            let vp = pair_square_sum(p, l, want_grad.then_some(&mut dp));
            let vq = pair_square_sum(q, l, want_grad.then_some(&mut dq));
            if want_grad {
                dp.iter_mut().for_each(|d| *d *= mu);
                dq.iter_mut().for_each(|d| *d *= nu);
            }
            mu * vp + nu * vq
        }
        SubalgebraName::Gl2 => {
            let mut v = 0.0;
            for i in 0..n {
                for j in (i + 1)..n {
                    let jij = q[i] * p[j] - q[j] * p[i];
                    v += jij * jij;
                    if want_grad {
                        let two_j = 2.0 * jij;
                        dq[i] += two_j * p[j];
                        dq[j] -= two_j * p[i];
                        dp[j] += two_j * q[i];
                        dp[i] -= two_j * q[j];
                    }
                }
            }
            v
        }
    };
    Ok((value, dq, dp))
}

/// sum over pairs of (l_j x_i - l_i x_j)^2, with optional gradient in x.
fn pair_square_sum(x: &[f64], l: &[f64], grad: Option<&mut Vec<f64>>) -> f64 {
    let n = x.len();
    let mut v = 0.0;
    if let Some(dx) = grad {
        for i in 0..n {
            for j in (i + 1)..n {
                let d = l[j] * x[i] - l[i] * x[j];
                v += d * d;
                dx[i] += 2.0 * d * l[j];
                dx[j] -= 2.0 * d * l[i];
            }
        }
    } else {
        for i in 0..n {
            for j in (i + 1)..n {
                let d = l[j] * x[i] - l[i] * x[j];
                v += d * d;
            }
        }
    }
    v
}

/// Residual of the Casimir factorization through the four subalgebra
/// Casimirs (with the Heisenberg Casimir taken to be M):
/// |M C_h6 - (C_G+ C_G- - C_h4^2)|.
pub fn casimir_identity_residual(s: &PhaseState, lambda: &RealizationParams) -> Result<f64> {
    let g = realize(s, lambda)?;
    let ch6 = algebra::casimir_h6().eval(algebra::generator_context(), &g.as_array())?;
    let cgp = subalgebra_integral(SubalgebraName::Gp, s, lambda, None)?;
    let cgm = subalgebra_integral(SubalgebraName::Gm, s, lambda, None)?;
    let ch4 = subalgebra_integral(SubalgebraName::H4, s, lambda, None)?;
    Ok((g.m * ch6 - (cgp * cgm - ch4 * ch4)).abs())
}

#[cfg(test)]
#[allow(clippy::type_complexity)] // tuple-table test cases
mod tests {
    use super::*;
    use crate::algebra::{casimir_h6, generator_context};
    use crate::realization::realize_sites;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fixture3() -> (PhaseState, RealizationParams) {
        (
            PhaseState::new(vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]).unwrap(),
            RealizationParams::new(vec![1.0, 1.0, 1.0]).unwrap(),
        )
    }

    fn random_state(rng: &mut impl Rng, n: usize) -> (PhaseState, RealizationParams) {
        let q = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let p = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let l = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
        (
            PhaseState::new(q, p).unwrap(),
            RealizationParams::new(l).unwrap(),
        )
    }

    #[test]
    fn angular_momentum_fixture() {
        let s = PhaseState::new(vec![1.0, 0.0], vec![0.0, 1.0]).unwrap();
        assert_eq!(angular_momentum(&s, 1, 2).unwrap(), 1.0);
    }

    #[test]
    fn angular_momentum_of_parallel_vectors_vanishes() {
        let s = PhaseState::new(vec![0.7, -1.1, 0.4], vec![0.7, -1.1, 0.4]).unwrap();
        for i in 1..3 {
            for j in (i + 1)..4 {
                assert_eq!(angular_momentum(&s, i, j).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn angular_momentum_bad_indices() {
        let s = PhaseState::new(vec![0.0, 0.0], vec![0.0, 0.0]).unwrap();
        assert!(angular_momentum(&s, 0, 1).is_err());
        assert!(angular_momentum(&s, 1, 1).is_err());
        assert!(angular_momentum(&s, 1, 3).is_err());
    }

    #[test]
    fn left_integral_fixtures() {
        let (s, l) = fixture3();
        assert_eq!(left_integral(3, &s, &l).unwrap(), 1.0);
        let l2 = RealizationParams::new(vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(left_integral(3, &s, &l2).unwrap(), 9.0);
    }

    #[test]
    fn order_two_integral_vanishes() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let (s, l) = random_state(&mut rng, 4);
            assert_eq!(left_integral(2, &s, &l).unwrap(), 0.0);
            assert_eq!(right_integral(2, &s, &l).unwrap(), 0.0);
            assert!(coproduct_casimir(2, &s, &l).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn out_of_range_orders_are_rejected() {
        let (s, l) = fixture3();
        assert!(matches!(
            left_integral(1, &s, &l),
            Err(Error::BadIntegralOrder { .. })
        ));
        assert!(matches!(
            left_integral(4, &s, &l),
            Err(Error::BadIntegralOrder { .. })
        ));
        assert!(right_integral(4, &s, &l).is_err());
    }

    #[test]
    fn coproduct_casimir_equals_left_integral() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..50 {
            let (s, l) = random_state(&mut rng, 6);
            for m in 3..=6 {
                let direct = left_integral(m, &s, &l).unwrap();
                let cop = coproduct_casimir(m, &s, &l).unwrap();
                assert!(
                    (direct - cop).abs() <= 1e-10 * (1.0 + direct.abs()),
                    "m = {m}: {direct} vs {cop}"
                );
            }
        }
    }

    #[test]
    fn right_integral_is_the_right_window_coproduct() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let ctx = generator_context();
        for _ in 0..50 {
            let (s, l) = random_state(&mut rng, 5);
            for m in 3..=5 {
                let direct = right_integral(m, &s, &l).unwrap();
                let g = realize_sites(&s, &l, 5 - m + 1, 5).unwrap();
                let cop = casimir_h6().eval(ctx, &g.as_array()).unwrap();
                assert!((direct - cop).abs() <= 1e-10 * (1.0 + direct.abs()));
            }
        }
    }

    #[test]
    fn integral_sets_carry_their_windows() {
        let mut rng = ChaCha8Rng::seed_from_u64(67);
        let (s, l) = random_state(&mut rng, 5);
        let left = integral_set(IntegralKind::Left, &s, &l).unwrap();
        let right = integral_set(IntegralKind::Right, &s, &l).unwrap();
        assert_eq!(
            left.values.iter().map(|v| v.window).collect::<Vec<_>>(),
            vec![(1, 3), (1, 4), (1, 5)]
        );
        assert_eq!(
            right.values.iter().map(|v| v.window).collect::<Vec<_>>(),
            vec![(3, 5), (2, 5), (1, 5)]
        );
        // the shared top order is the same value on the same window
        assert_eq!(left.values.last(), right.values.last());
        // two-body states carry no integrals
        let (s2, l2) = random_state(&mut rng, 2);
        assert!(integral_set(IntegralKind::Left, &s2, &l2)
            .unwrap()
            .values
            .is_empty());
    }

    #[test]
    fn shared_top_order_integral() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        for _ in 0..20 {
            let (s, l) = random_state(&mut rng, 5);
            // C_(N) = C^(N) exactly: both sum over the full site range
            assert_eq!(
                left_integral(5, &s, &l).unwrap(),
                right_integral(5, &s, &l).unwrap()
            );
        }
    }

    #[test]
    fn three_site_coproduct_fixture() {
        let (s, l) = fixture3();
        let g = realize_sites(&s, &l, 1, 3).unwrap();
        assert_eq!(g.as_array(), [-1.5, 1.0, 1.0, 1.0, 1.0, 3.0]);
        assert_eq!(coproduct_casimir(3, &s, &l).unwrap(), 1.0);
    }

    #[test]
    fn trivial_integrals() {
        let l = RealizationParams::new(vec![1.0, 1.0, 1.0]).unwrap();
        assert_eq!(trivial_integral(2, &l).unwrap(), 2.0);
        assert_eq!(trivial_integral(3, &l).unwrap(), l.total_m());
        assert!(trivial_integral(0, &l).is_err());
        assert!(trivial_integral(4, &l).is_err());
    }

    #[test]
    fn table_two_fixtures() {
        let (s, l) = fixture3();
        assert_eq!(
            subalgebra_integral(SubalgebraName::Gl2, &s, &l, None).unwrap(),
            1.0
        );
        assert_eq!(
            subalgebra_integral(SubalgebraName::Gm, &s, &l, None).unwrap(),
            2.0
        );
        // one-particle D+ Casimir collapses to lambda^2
        let s1 = PhaseState::new(vec![0.3], vec![1.7]).unwrap();
        let l1 = RealizationParams::new(vec![2.5]).unwrap();
        let c = subalgebra_integral(SubalgebraName::Dp, &s1, &l1, None).unwrap();
        assert!((c - 6.25).abs() < 1e-12);
    }

    #[test]
    fn table_two_matches_realized_table_one_casimirs() {
        // independent route: Casimir expression evaluated at the realized point
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let ctx = generator_context();
        for _ in 0..30 {
            let (s, l) = random_state(&mut rng, 4);
            let g = realize(&s, &l).unwrap().as_array();
            for name in SubalgebraName::ALL {
                let params = (name == SubalgebraName::E).then_some((1.2, -0.6));
                let direct = subalgebra_integral(name, &s, &l, params).unwrap();
                let expr = crate::algebra::subalgebra_casimir_expr(name, params).unwrap();
                let composed = expr.eval(ctx, &g).unwrap();
                assert!(
                    (direct - composed).abs() <= 1e-9 * (1.0 + composed.abs()),
                    "{name}: {direct} vs {composed}"
                );
            }
        }
    }

    #[test]
    fn near_singular_denominators_error() {
        let s = PhaseState::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let l = RealizationParams::new(vec![1.0, 1.0]).unwrap();
        assert!(matches!(
            subalgebra_integral(SubalgebraName::Dm, &s, &l, None),
            Err(Error::Singularity { .. })
        ));
        let s = PhaseState::new(vec![1.0, 1.0], vec![0.0, 0.0]).unwrap();
        assert!(matches!(
            subalgebra_integral(SubalgebraName::Dp, &s, &l, None),
            Err(Error::Singularity { .. })
        ));
    }

    #[test]
    fn casimir_identity_fixtures() {
        // two-particle point: both sides vanish
        let s = PhaseState::new(vec![1.0, 0.0], vec![0.0, 1.0]).unwrap();
        let l = RealizationParams::new(vec![1.0, 1.0]).unwrap();
        assert!(casimir_identity_residual(&s, &l).unwrap() < 1e-12);
        // three-particle fixture: both sides equal 3
        let (s, l) = fixture3();
        let g = realize(&s, &l).unwrap();
        let lhs = g.m * coproduct_casimir(3, &s, &l).unwrap();
        assert_eq!(lhs, 3.0);
        assert!(casimir_identity_residual(&s, &l).unwrap() < 1e-12);
        // one-particle states: empty pair sums on both sides
        let s1 = PhaseState::new(vec![0.9], vec![-0.4]).unwrap();
        let l1 = RealizationParams::new(vec![1.1]).unwrap();
        assert!(casimir_identity_residual(&s1, &l1).unwrap() < 1e-12);
    }

    #[test]
    fn casimir_identity_at_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(59);
        for n in 3..=5 {
            for _ in 0..50 {
                let (s, l) = random_state(&mut rng, n);
                let r = casimir_identity_residual(&s, &l).unwrap();
                let scale = subalgebra_integral(SubalgebraName::Gp, &s, &l, None).unwrap()
                    * subalgebra_integral(SubalgebraName::Gm, &s, &l, None).unwrap();
                assert!(r <= 1e-10 * (1.0 + scale.abs()), "residual {r}");
            }
        }
    }

    #[test]
    fn integral_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let (s, l) = random_state(&mut rng, 5);
        let h = 1e-6;
        let cases: Vec<(String, Box<dyn Fn(&PhaseState) -> f64>, Vec<f64>, Vec<f64>)> = {
            let mut v: Vec<(String, Box<dyn Fn(&PhaseState) -> f64>, Vec<f64>, Vec<f64>)> =
                Vec::new();
            for m in [3usize, 4, 5] {
                let lm = l.clone();
                let (_, dq, dp) = left_integral_gradient(m, &s, &l).unwrap();
                v.push((
                    format!("C_left[{m}]"),
                    Box::new(move |st| left_integral(m, st, &lm).unwrap()),
                    dq,
                    dp,
                ));
            }
            for name in SubalgebraName::ALL {
                let params = (name == SubalgebraName::E).then_some((0.9, 1.4));
                let lm = l.clone();
                let (_, dq, dp) = subalgebra_integral_gradient(name, &s, &l, params, true).unwrap();
                v.push((
                    format!("C_sub[{name}]"),
                    Box::new(move |st| subalgebra_integral(name, st, &lm, params).unwrap()),
                    dq,
                    dp,
                ));
            }
            v
        };
        for (label, f, dq, dp) in cases {
            for i in 0..5 {
                let mut qp = s.q().to_vec();
                let mut qm = s.q().to_vec();
                qp[i] += h;
                qm[i] -= h;
                let fd = (f(&PhaseState::new(qp, s.p().to_vec()).unwrap())
                    - f(&PhaseState::new(qm, s.p().to_vec()).unwrap()))
                    / (2.0 * h);
                assert!(
                    (dq[i] - fd).abs() <= 1e-5 * (1.0 + fd.abs()),
                    "{label} dq[{i}]: exact {} vs fd {fd}",
                    dq[i]
                );
                let mut pp = s.p().to_vec();
                let mut pm = s.p().to_vec();
                pp[i] += h;
                pm[i] -= h;
                let fd = (f(&PhaseState::new(s.q().to_vec(), pp).unwrap())
                    - f(&PhaseState::new(s.q().to_vec(), pm).unwrap()))
                    / (2.0 * h);
                assert!(
                    (dp[i] - fd).abs() <= 1e-5 * (1.0 + fd.abs()),
                    "{label} dp[{i}]: exact {} vs fd {fd}",
                    dp[i]
                );
            }
        }
    }
}
