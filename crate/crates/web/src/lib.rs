//! Browser bindings for the railway demo in `www/index.html`.
//!
//! Each exported function takes and returns JSON strings. The `*_json` functions
//! hold the logic so they can be tested natively.

use std::collections::BTreeMap;

use serde::Serialize;
use wasm_bindgen::prelude::*;

use mmps::format::model_to_json;
use mmps::growth::solve_all;
use mmps::linearization::linearize_normalized;
use mmps::model::{Kind, MmpsSystem};
use mmps::normalization::normalize;
use mmps::railway::{build_model, default_params, RailwayParams};
use mmps::report::{analyze, Tolerances};
use mmps::simulator::simulate;
use mmps::tropical::hilbert_norm;

fn params_from(json: &str) -> Result<RailwayParams, String> {
    let mut params = default_params();
    if json.trim().is_empty() {
        return Ok(params);
    }
    let overrides: BTreeMap<String, f64> =
        serde_json::from_str(json).map_err(|e| format!("parameters: {e}"))?;
    for (key, value) in overrides {
        params.set(&key, value).map_err(|e| e.to_string())?;
    }
    Ok(params)
}

fn model(json: &str) -> Result<MmpsSystem, String> {
    build_model(&params_from(json)?).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct RateSummary {
    lambda: f64,
    verdict: String,
    unit_eigen_count: usize,
    spectral_radius: f64,
    eigenvalues: Vec<[f64; 2]>,
    fixed_point: Vec<f64>,
    fixed_point_dimension: usize,
    footprints: usize,
}

#[derive(Serialize)]
struct AnalysisSummary {
    state_names: Vec<String>,
    total_lpps: u128,
    feasible: u128,
    infeasible: u128,
    unbounded: u128,
    rates: Vec<RateSummary>,
}

pub fn analyze_json(params: &str) -> Result<String, String> {
    let system = model(params)?;
    let report = analyze(&system, false, &Tolerances::default()).map_err(|e| e.to_string())?;
    let counts = report.growth.as_ref().map(|g| g.counts);
    let rates = report
        .rates
        .iter()
        .map(|r| {
            let st = &r.stability.report;
            RateSummary {
                lambda: r.lambda,
                verdict: format!("{:?}", st.verdict),
                unit_eigen_count: st.unit_eigen_count,
                spectral_radius: st.spectral_radius,
                eigenvalues: st.spectrum.eigenvalues.iter().map(|z| [z.re, z.im]).collect(),
                fixed_point: r.normalization.x_e.clone(),
                fixed_point_dimension: r.fixed_points.dimension,
                footprints: r.footprints.len(),
            }
        })
        .collect();
    let summary = AnalysisSummary {
        state_names: system.names(),
        total_lpps: counts.map_or(0, |c| c.total_lpps),
        feasible: counts.map_or(0, |c| c.feasible),
        infeasible: counts.map_or(0, |c| c.infeasible),
        unbounded: counts.map_or(0, |c| c.unbounded),
        rates,
    };
    serde_json::to_string(&summary).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct TrajectorySummary {
    state_names: Vec<String>,
    lambda: f64,
    /// `x(k) − kλ·s − x_e` per cycle
    deviations: Vec<Vec<f64>>,
    /// Hilbert norm of the temporal states per cycle
    hilbert: Vec<f64>,
    /// whether the deviation lies in the linearization region
    in_region: Vec<bool>,
}

/// Trajectory from the slowest rate's fixed point with `perturbation` (state name
/// to offset) added to the initial state.
pub fn trajectory_json(params: &str, perturbation: &str, cycles: usize) -> Result<String, String> {
    let system = model(params)?;
    let offsets: BTreeMap<String, f64> = if perturbation.trim().is_empty() {
        BTreeMap::new()
    } else {
        serde_json::from_str(perturbation).map_err(|e| format!("perturbation: {e}"))?
    };
    let names = system.names();
    let report = solve_all(&system, false).map_err(|e| e.to_string())?;
    let sol = report
        .rates
        .first()
        .map(|g| g.solutions[0].clone())
        .ok_or("the model has no growth rate")?;
    let mut x0 = sol.x_e.clone();
    for (name, delta) in &offsets {
        let i = names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| format!("unknown state {name:?}"))?;
        x0[i] += delta;
    }
    let cert = mmps::solvability::analyze(&system);
    let cert = cert.certificate().ok_or("the model is not solvable")?;
    let traj = simulate(&system, cert, &x0, cycles).map_err(|e| e.to_string())?;
    let ns = normalize(&system, &sol).map_err(|e| e.to_string())?;
    let ls = linearize_normalized(&ns).map_err(|e| e.to_string())?;
    let temporal: Vec<usize> = (0..system.n()).filter(|&i| system.kind_x[i] == Kind::Temporal).collect();

    let mut deviations = Vec::with_capacity(traj.states.len());
    let mut hilbert = Vec::with_capacity(traj.states.len());
    let mut in_region = Vec::with_capacity(traj.states.len());
    for (k, x) in traj.states.iter().enumerate() {
        let dev = ns.normalize_state(x, k as i64).map_err(|e| e.to_string())?;
        let xt: Vec<f64> = temporal.iter().map(|&i| x[i]).collect();
        hilbert.push(hilbert_norm(&xt).map_err(|e| e.to_string())?);
        in_region.push(ls.region.contains(&dev, 1e-9));
        deviations.push(dev);
    }
    serde_json::to_string(&TrajectorySummary {
        state_names: names,
        lambda: sol.lambda,
        deviations,
        hilbert,
        in_region,
    })
    .map_err(|e| e.to_string())
}

/// The model file for the given parameters.
pub fn model_file_json(params: &str) -> Result<String, String> {
    Ok(model_to_json(&model(params)?))
}

#[wasm_bindgen]
pub fn railway_analyze(params: &str) -> Result<String, JsError> {
    analyze_json(params).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn railway_trajectory(params: &str, perturbation: &str, cycles: usize) -> Result<String, JsError> {
    trajectory_json(params, perturbation, cycles).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn railway_model_file(params: &str) -> Result<String, JsError> {
    model_file_json(params).map_err(|e| JsError::new(&e))
}
