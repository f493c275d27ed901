//! N-particle symplectic realization of the generators on canonical pairs
//! (q_i, p_i), with closed-form gradients and site-window restrictions.

use serde::{Deserialize, Serialize};

use crate::algebra::H6Point;
use crate::{Error, Result};

/// Canonical coordinates of an N-degree-of-freedom system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    q: Vec<f64>,
    p: Vec<f64>,
}

impl PhaseState {
    pub fn new(q: Vec<f64>, p: Vec<f64>) -> Result<PhaseState> {
        if q.len() != p.len() || q.is_empty() {
            return Err(Error::DimensionMismatch {
                q: q.len(),
                p: p.len(),
                lambda: 0,
            });
        }
        if q.iter().chain(p.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "phase-space coordinates must be finite".to_string(),
            ));
        }
        Ok(PhaseState { q, p })
    }

    pub fn n(&self) -> usize {
        self.q.len()
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    /// Interior mutation for the integrator; callers keep entries finite.
    pub(crate) fn coords_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (&mut self.q, &mut self.p)
    }
}

/// The N realization labels lambda_i. At least one must be nonzero so that
/// M = sum(lambda_i^2) > 0 and C/M stays finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizationParams {
    lambda: Vec<f64>,
}

impl RealizationParams {
    pub fn new(lambda: Vec<f64>) -> Result<RealizationParams> {
        if lambda.is_empty() || lambda.iter().all(|l| *l == 0.0) {
            return Err(Error::DegenerateRealization);
        }
        if lambda.iter().any(|l| !l.is_finite()) {
            return Err(Error::InvalidParameter(
                "realization parameters must be finite".to_string(),
            ));
        }
        Ok(RealizationParams { lambda })
    }

    pub fn n(&self) -> usize {
        self.lambda.len()
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    /// M = sum of squared labels.
    pub fn total_m(&self) -> f64 {
        self.lambda.iter().map(|l| l * l).sum()
    }
}

/// Generator values together with their phase-space Jacobian. Rows follow
/// `GeneratorId` order; `dq[g][i]` is the derivative of generator g with
/// respect to q_i.
#[derive(Debug, Clone)]
pub struct GeneratorFrame {
    pub values: H6Point,
    pub dq: [Vec<f64>; 6],
    pub dp: [Vec<f64>; 6],
}

fn check_lengths(s: &PhaseState, lambda: &RealizationParams) -> Result<()> {
    if s.n() != lambda.n() {
        return Err(Error::DimensionMismatch {
            q: s.n(),
            p: s.n(),
            lambda: lambda.n(),
        });
    }
    Ok(())
}

fn site_window(s: &PhaseState, a: usize, b: usize) -> Result<std::ops::Range<usize>> {
    if a < 1 || b < a || b > s.n() {
        return Err(Error::BadSiteRange { a, b, n: s.n() });
    }
    Ok((a - 1)..b)
}

fn realize_range(
    s: &PhaseState,
    lambda: &RealizationParams,
    range: std::ops::Range<usize>,
) -> H6Point {
    let (q, p, l) = (s.q(), s.p(), lambda.lambda());
    let mut point = H6Point {
        k: 0.0,
        ap: 0.0,
        am: 0.0,
        bp: 0.0,
        bm: 0.0,
        m: 0.0,
    };
    for i in range {
        point.ap += l[i] * p[i];
        point.am += l[i] * q[i];
        point.k += q[i] * p[i] - l[i] * l[i] / 2.0;
        point.bp += p[i] * p[i];
        point.bm += q[i] * q[i];
        point.m += l[i] * l[i];
    }
    point
}

/// Full N-site realization of the six generators.
pub fn realize(s: &PhaseState, lambda: &RealizationParams) -> Result<H6Point> {
    check_lengths(s, lambda)?;
    Ok(realize_range(s, lambda, 0..s.n()))
}

/// Realization restricted to sites a..=b (1-based); the coproduct on a
/// contiguous site window.
pub fn realize_sites(
    s: &PhaseState,
    lambda: &RealizationParams,
    a: usize,
    b: usize,
) -> Result<H6Point> {
    check_lengths(s, lambda)?;
    let range = site_window(s, a, b)?;
    Ok(realize_range(s, lambda, range))
}

/// Realization plus the exact Jacobian of every generator.
pub fn realize_with_gradients(
    s: &PhaseState,
    lambda: &RealizationParams,
) -> Result<GeneratorFrame> {
    check_lengths(s, lambda)?;
    let n = s.n();
    let (q, p, l) = (s.q(), s.p(), lambda.lambda());
    let values = realize_range(s, lambda, 0..n);
    let zero = || vec![0.0; n];
    let mut dq: [Vec<f64>; 6] = [zero(), zero(), zero(), zero(), zero(), zero()];
    let mut dp: [Vec<f64>; 6] = [zero(), zero(), zero(), zero(), zero(), zero()];
    for i in 0..n {
        dq[0][i] = p[i]; // K
        dp[0][i] = q[i];
        dp[1][i] = l[i]; // A+
        dq[2][i] = l[i]; // A-
        dp[3][i] = 2.0 * p[i]; // B+
        dq[4][i] = 2.0 * q[i]; // B-
                               // M carries no phase-space dependence
    }
    Ok(GeneratorFrame { values, dq, dp })
}
