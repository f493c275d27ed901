//! Browser bindings for the twophoton crate.
//!
//! Three operations are exposed to JavaScript, all JSON-in/JSON-out so the
//! page needs no framework: integrate a configured system (trajectory
//! projection plus drift series), run the verification suite, and run the
//! axiom checks. The compute functions are plain Rust and are exercised by
//! host-side tests; the `wasm_bindgen` exports are thin envelopes.

use serde::Serialize;
use twophoton::cli::{default_observables, resolve_observable, RunConfig};
use twophoton::dynamics;
use twophoton::families;
use twophoton::realization::PhaseState;
use twophoton::verify;
use wasm_bindgen::prelude::wasm_bindgen;

/// Cap on points returned to the page; longer trajectories are strided.
const MAX_POINTS: usize = 2000;

#[derive(Serialize)]
struct SimulationView {
    termination: String,
    n: usize,
    /// Axis labels for the orbit plot.
    x_label: String,
    y_label: String,
    t: Vec<f64>,
    x: Vec<f64>,
    y: Vec<f64>,
    drift: Vec<DriftSeries>,
}

#[derive(Serialize)]
struct DriftSeries {
    name: String,
    max_relative_drift: f64,
    /// |F(t) - F(0)| / max(1, |F(0)|) on the strided grid.
    series: Vec<f64>,
}

fn err_str<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// Integrate the configured system and return plot-ready JSON.
pub fn simulate_json(config_text: &str) -> Result<String, String> {
    let config: RunConfig = serde_json::from_str(config_text).map_err(err_str)?;
    config.validate().map_err(err_str)?;
    let sim = config
        .simulate
        .clone()
        .ok_or_else(|| "config has no simulate block".to_string())?;
    let spec = config
        .hamiltonian
        .as_ref()
        .ok_or_else(|| "config has no hamiltonian block".to_string())?;
    let lambda = config.lambda().map_err(err_str)?;
    let system = families::build(spec, &lambda, config.mu_nu()).map_err(err_str)?;
    let s0 = PhaseState::new(sim.q0.clone(), sim.p0.clone()).map_err(err_str)?;
    let names = sim.observables.clone().unwrap_or_else(|| {
        default_observables(config.realization.n, system.extra_integral.is_some())
    });
    let observables: Vec<(String, twophoton::Observable)> = names
        .iter()
        .map(|name| {
            resolve_observable(name, &system, &lambda, config.mu_nu())
                .map(|obs| (name.clone(), obs))
        })
        .collect::<Result<_, _>>()
        .map_err(err_str)?;
    let steps = (sim.t_end / sim.dt).round() as usize;
    let traj = dynamics::integrate(
        &system.hamiltonian,
        &s0,
        sim.dt,
        steps,
        &observables,
        (system.guard_bp, system.guard_bm),
    )
    .map_err(err_str)?;

    let n = config.realization.n;
    let len = traj.t.len();
    let stride = len.div_ceil(MAX_POINTS).max(1);
    let picks: Vec<usize> = (0..len).step_by(stride).collect();
    let (x_label, y_label, x, y) = if n >= 2 {
        (
            "q1".to_string(),
            "q2".to_string(),
            picks.iter().map(|&k| traj.states[k].q()[0]).collect(),
            picks.iter().map(|&k| traj.states[k].q()[1]).collect(),
        )
    } else {
        (
            "q1".to_string(),
            "p1".to_string(),
            picks.iter().map(|&k| traj.states[k].q()[0]).collect(),
            picks.iter().map(|&k| traj.states[k].p()[0]).collect(),
        )
    };
    let drift = traj
        .observables
        .iter()
        .map(|(name, series)| {
            let f0 = series.first().copied().unwrap_or(0.0);
            let denom = f0.abs().max(1.0);
            let rel: Vec<f64> = picks
                .iter()
                .map(|&k| (series[k] - f0).abs() / denom)
                .collect();
            DriftSeries {
                name: name.clone(),
                max_relative_drift: series
                    .iter()
                    .map(|f| (f - f0).abs() / denom)
                    .fold(0.0f64, f64::max),
                series: rel,
            }
        })
        .collect();
    let view = SimulationView {
        termination: traj.termination.diagnostic(),
        n,
        x_label,
        y_label,
        t: picks.iter().map(|&k| traj.t[k]).collect(),
        x,
        y,
        drift,
    };
    serde_json::to_string(&view).map_err(err_str)
}

/// Run the verification suite for a config and return the report JSON.
pub fn verify_json(config_text: &str) -> Result<String, String> {
    let config: RunConfig = serde_json::from_str(config_text).map_err(err_str)?;
    config.validate().map_err(err_str)?;
    let embed = serde_json::to_value(&config).map_err(err_str)?;
    let report = verify::run_suite_with_embed(&config.suite_config(), embed).map_err(err_str)?;
    serde_json::to_string(&report).map_err(err_str)
}

/// Run the axiom checks (no Hamiltonian) and return the report JSON.
pub fn axioms_json(n: usize, samples: usize, seed: u64) -> Result<String, String> {
    let report = verify::axioms_suite(n, samples, 1e-9, seed).map_err(err_str)?;
    serde_json::to_string(&report).map_err(err_str)
}

fn envelope(result: Result<String, String>) -> String {
    match result {
        Ok(data) => format!("{{\"ok\":true,\"data\":{data}}}"),
        Err(e) => serde_json::json!({"ok": false, "error": e}).to_string(),
    }
}

#[wasm_bindgen]
pub fn demo_simulate(config: &str) -> String {
    envelope(simulate_json(config))
}

#[wasm_bindgen]
pub fn demo_verify(config: &str) -> String {
    envelope(verify_json(config))
}

#[wasm_bindgen]
pub fn demo_axioms(n: usize, samples: usize, seed: u64) -> String {
    envelope(axioms_json(n, samples, seed))
}
