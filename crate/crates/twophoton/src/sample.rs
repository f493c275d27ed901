//! Deterministic random sampling of phase-space states, realization labels,
//! and generator-space expressions for the property suites.
//!
//! The sampling domain is q_i, p_i uniform in [-2, 2] and lambda_i uniform
//! in [0.5, 2]; states are rejected near the B+/B- singular sets only when a
//! downstream expression divides by them.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::algebra::generator_context;
use crate::expr::{Expr, Func};
use crate::realization::{PhaseState, RealizationParams};

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_state(rng: &mut impl Rng, n: usize) -> PhaseState {
    let q = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
    let p = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
    PhaseState::new(q, p).expect("sampled state is valid")
}

pub fn random_lambda(rng: &mut impl Rng, n: usize) -> RealizationParams {
    let l = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
    RealizationParams::new(l).expect("sampled labels are valid")
}

/// Sample a state, rejecting those with B+ or B- below the guard threshold
/// when the corresponding flag is set.
pub fn random_state_guarded(
    rng: &mut impl Rng,
    n: usize,
    guard_bp: bool,
    guard_bm: bool,
) -> PhaseState {
    loop {
        let s = random_state(rng, n);
        let bp: f64 = s.p().iter().map(|p| p * p).sum();
        let bm: f64 = s.q().iter().map(|q| q * q).sum();
        if (!guard_bp || bp >= 1e-3) && (!guard_bm || bm >= 1e-3) {
            return s;
        }
    }
}

/// Random generator-space expression of bounded depth, drawn from a grammar
/// of total functions so evaluation never leaves the domain: sums, products,
/// small integer powers, sin/cos, and damped exponentials.
pub fn random_generator_expr(rng: &mut impl Rng, depth: u32) -> Expr {
    let ctx = generator_context();
    if depth == 0 {
        return if rng.random_bool(0.6) {
            Expr::Symbol(rng.random_range(0..ctx.len()))
        } else {
            Expr::Const(rng.random_range(-2.0..2.0))
        };
    }
    match rng.random_range(0..8) {
        0 => Expr::add(
            random_generator_expr(rng, depth - 1),
            random_generator_expr(rng, depth - 1),
        ),
        1 => Expr::sub(
            random_generator_expr(rng, depth - 1),
            random_generator_expr(rng, depth - 1),
        ),
        2 => Expr::mul(
            random_generator_expr(rng, depth - 1),
            random_generator_expr(rng, depth - 1),
        ),
        3 => Expr::neg(random_generator_expr(rng, depth - 1)),
        4 => Expr::pow(
            random_generator_expr(rng, depth - 1),
            Expr::Const(rng.random_range(2..4) as f64),
        ),
        5 => Expr::call(Func::Sin, random_generator_expr(rng, depth - 1)),
        6 => Expr::call(Func::Cos, random_generator_expr(rng, depth - 1)),
        // exp through a bounded argument so deep power chains cannot overflow
        _ => Expr::call(
            Func::Exp,
            Expr::mul(
                Expr::Const(rng.random_range(-1.5..1.5)),
                Expr::call(Func::Cos, random_generator_expr(rng, depth - 1)),
            ),
        ),
    }
}
