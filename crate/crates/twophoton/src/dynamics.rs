//! Hamilton's equations, fixed-step RK4 integration, and conservation drift.
//!
//! A symplectic scheme is not an option here: the generic Hamiltonians are
//! not separable. Fixed-step RK4 with exact-gradient vector fields keeps the
//! measured drift at desk tolerances, and drift is the quantity under test.

use std::io::Write;

use crate::poisson::Observable;
use crate::realization::PhaseState;
use crate::Result;

/// Why an integration stopped.
#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    Completed,
    /// A state entry stopped being finite at this step.
    NonFinite {
        step: usize,
    },
    /// The flow approached the singular set of a rational Casimir in H.
    SingularityApproach {
        step: usize,
    },
    /// The Hamiltonian could not be evaluated (domain error) at this step.
    EvalError {
        step: usize,
        message: String,
    },
}

impl Termination {
    pub fn is_completed(&self) -> bool {
        *self == Termination::Completed
    }

    pub fn diagnostic(&self) -> String {
        match self {
            Termination::Completed => "completed".to_string(),
            Termination::NonFinite { step } => format!("non-finite state at step {step}"),
            Termination::SingularityApproach { step } => {
                format!("singularity approach at step {step}")
            }
            Termination::EvalError { step, message } => {
                format!("evaluation error at step {step}: {message}")
            }
        }
    }
}

/// Integrated trajectory with observable recordings per retained step.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub states: Vec<PhaseState>,
    /// One series per requested observable, aligned with `t`.
    pub observables: Vec<(String, Vec<f64>)>,
    pub termination: Termination,
}

/// Hamiltonian vector field: dq_i/dt = dH/dp_i, dp_i/dt = -dH/dq_i.
pub fn vector_field(h: &Observable, s: &PhaseState) -> Result<(Vec<f64>, Vec<f64>)> {
    let g = h.gradient(s)?;
    let dq = g.dp;
    let dp = g.dq.iter().map(|v| -v).collect();
    Ok((dq, dp))
}

/// Threshold for the singularity guard on |B+| and |B-|.
const GUARD_THRESHOLD: f64 = 1e-3;

/// Integrate with classical fixed-step RK4, recording the observables at
/// every retained state. `guards = (guard_bp, guard_bm)` aborts the
/// trajectory before it enters the corresponding singular set.
pub fn integrate(
    h: &Observable,
    s0: &PhaseState,
    dt: f64,
    steps: usize,
    observables: &[(String, Observable)],
    guards: (bool, bool),
) -> Result<Trajectory> {
    if dt <= 0.0 || !dt.is_finite() {
        return Err(crate::Error::InvalidParameter(
            "time step must be positive and finite".to_string(),
        ));
    }
    // an undefined initial state is the caller's error, not a diagnostic
    h.gradient(s0)?;

    let mut traj = Trajectory {
        t: Vec::with_capacity(steps + 1),
        states: Vec::with_capacity(steps + 1),
        observables: observables
            .iter()
            .map(|(name, _)| (name.clone(), Vec::with_capacity(steps + 1)))
            .collect(),
        termination: Termination::Completed,
    };

    let mut state = s0.clone();
    let record = |traj: &mut Trajectory, t: f64, s: &PhaseState| -> Result<()> {
        traj.t.push(t);
        traj.states.push(s.clone());
        for ((_, series), (_, obs)) in traj.observables.iter_mut().zip(observables) {
            series.push(obs.value(s)?);
        }
        Ok(())
    };
    record(&mut traj, 0.0, &state)?;

    for step in 1..=steps {
        match rk4_step(h, &state, dt) {
            Ok(next) => state = next,
            // overflow inside a stage evaluation is the state blowing up
            Err(e) if is_overflow(&e) => {
                traj.termination = Termination::NonFinite { step };
                break;
            }
            Err(e) => {
                traj.termination = Termination::EvalError {
                    step,
                    message: e.to_string(),
                };
                break;
            }
        }
        if state.q().iter().chain(state.p()).any(|v| !v.is_finite()) {
            traj.termination = Termination::NonFinite { step };
            break;
        }
        if guards.0 || guards.1 {
            let bp: f64 = state.p().iter().map(|p| p * p).sum();
            let bm: f64 = state.q().iter().map(|q| q * q).sum();
            if (guards.0 && bp < GUARD_THRESHOLD) || (guards.1 && bm < GUARD_THRESHOLD) {
                traj.termination = Termination::SingularityApproach { step };
                break;
            }
        }
        match record(&mut traj, step as f64 * dt, &state) {
            Ok(()) => {}
            Err(e) => {
                traj.termination = Termination::EvalError {
                    step,
                    message: e.to_string(),
                };
                break;
            }
        }
    }
    Ok(traj)
}

fn rk4_step(h: &Observable, s: &PhaseState, dt: f64) -> Result<PhaseState> {
    let n = s.n();
    let (k1q, k1p) = vector_field(h, s)?;
    let mid1 = shifted(s, &k1q, &k1p, dt / 2.0)?;
    let (k2q, k2p) = vector_field(h, &mid1)?;
    let mid2 = shifted(s, &k2q, &k2p, dt / 2.0)?;
    let (k3q, k3p) = vector_field(h, &mid2)?;
    let end = shifted(s, &k3q, &k3p, dt)?;
    let (k4q, k4p) = vector_field(h, &end)?;
    let mut next = s.clone();
    {
        let (q, p) = next.coords_mut();
        for i in 0..n {
            q[i] += dt / 6.0 * (k1q[i] + 2.0 * k2q[i] + 2.0 * k3q[i] + k4q[i]);
            p[i] += dt / 6.0 * (k1p[i] + 2.0 * k2p[i] + 2.0 * k3p[i] + k4p[i]);
        }
    }
    Ok(next)
}

fn shifted(s: &PhaseState, dq: &[f64], dp: &[f64], h: f64) -> Result<PhaseState> {
    let q = s.q().iter().zip(dq).map(|(v, d)| v + h * d).collect();
    let p = s.p().iter().zip(dp).map(|(v, d)| v + h * d).collect();
    PhaseState::new(q, p)
}

fn is_overflow(e: &crate::Error) -> bool {
    match e {
        crate::Error::Domain { message, .. } => message.contains("non-finite"),
        crate::Error::InvalidParameter(message) => message.contains("finite"),
        _ => false,
    }
}

/// Maximum relative drift of every recorded observable:
/// max_k |F(s_k) - F(s_0)| / max(1, |F(s_0)|).
pub fn drift_report(traj: &Trajectory) -> Vec<(String, f64)> {
    traj.observables
        .iter()
        .map(|(name, series)| {
            let f0 = series.first().copied().unwrap_or(0.0);
            let denom = f0.abs().max(1.0);
            let drift = series
                .iter()
                .map(|f| (f - f0).abs() / denom)
                .fold(0.0f64, f64::max);
            (name.clone(), drift)
        })
        .collect()
}

/// Write the trajectory as CSV: `t,q1..qN,p1..pN,<observables>` with
/// round-trip decimal formatting.
pub fn write_csv<W: Write>(traj: &Trajectory, mut w: W) -> std::io::Result<()> {
    let n = traj.states.first().map_or(0, |s| s.n());
    let mut header = String::from("t");
    for i in 1..=n {
        header.push_str(&format!(",q{i}"));
    }
    for i in 1..=n {
        header.push_str(&format!(",p{i}"));
    }
    for (name, _) in &traj.observables {
        header.push(',');
        header.push_str(name);
    }
    writeln!(w, "{header}")?;
    for (k, (t, s)) in traj.t.iter().zip(&traj.states).enumerate() {
        let mut line = format!("{t}");
        for v in s.q().iter().chain(s.p()) {
            line.push_str(&format!(",{v}"));
        }
        for (_, series) in &traj.observables {
            line.push_str(&format!(",{}", series[k]));
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}
