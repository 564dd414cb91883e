//! Browser bindings for the simulator demo page in `www/`.
//!
//! Three operations are exported: a side-by-side run of all protocols, a
//! path-loss curve and a Poisson pmf. Each has a plain Rust counterpart so
//! the logic is testable without a JavaScript host.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use amhrp_sim::channel::{path_loss, ChannelParams, LinkClass};
use amhrp_sim::engine::{run_simulation, RunSummary};
use amhrp_sim::events::poisson_pmf;
use amhrp_sim::output::series_points;
use amhrp_sim::{ProtocolId, SimConfig};

#[derive(Debug, Serialize)]
pub struct DemoRun {
    pub protocol: ProtocolId,
    pub summary: RunSummary,
    pub alive: Vec<f64>,
    pub received: Vec<f64>,
    pub residual: Vec<f64>,
}

/// Runs every protocol on one seed and returns their series.
pub fn compare_protocols(seed: u64, rounds: u64, tx_range: f64) -> Result<Vec<DemoRun>, String> {
    ProtocolId::ALL
        .into_iter()
        .map(|protocol| {
            let config = SimConfig {
                protocol,
                seed,
                rounds,
                tx_range,
                ..SimConfig::default()
            };
            let run = run_simulation(&config).map_err(|e| e.to_string())?;
            let points = series_points(&run.metrics);
            Ok(DemoRun {
                protocol,
                summary: run.summary,
                alive: points.iter().map(|p| p.alive).collect(),
                received: points.iter().map(|p| p.cumulative_received).collect(),
                residual: points.iter().map(|p| p.total_residual).collect(),
            })
        })
        .collect()
}

/// Path loss in dB at `points` distances evenly spaced over `[d0, max_distance]`.
pub fn path_loss_series(exponent: f64, max_distance: f64, points: usize) -> Result<Vec<f64>, String> {
    let params = ChannelParams {
        exponent_los: exponent,
        ..ChannelParams::default()
    };
    if !(max_distance > params.d0) || points < 2 {
        return Err(format!("need max_distance > {} and at least 2 points", params.d0));
    }
    let step = (max_distance - params.d0) / (points - 1) as f64;
    (0..points)
        .map(|i| path_loss(&params, params.d0 + step * i as f64, LinkClass::Los, 0.0).map_err(|e| e.to_string()))
        .collect()
}

/// `P(k)` for `k = 0..=k_max`.
pub fn poisson_series(lambda: f64, k_max: u32) -> Result<Vec<f64>, String> {
    (0..=u64::from(k_max))
        .map(|k| poisson_pmf(lambda, k).map_err(|e| e.to_string()))
        .collect()
}

/// JSON array of `{protocol, summary, alive, received, residual}`.
#[wasm_bindgen(js_name = compareProtocols)]
pub fn compare_protocols_js(seed: u32, rounds: u32, tx_range: f64) -> Result<String, JsError> {
    let runs = compare_protocols(u64::from(seed), u64::from(rounds), tx_range).map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&runs).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = pathLossCurve)]
pub fn path_loss_curve_js(exponent: f64, max_distance: f64, points: u32) -> Result<Vec<f64>, JsError> {
    path_loss_series(exponent, max_distance, points as usize).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = poissonPmf)]
pub fn poisson_pmf_js(lambda: f64, k_max: u32) -> Result<Vec<f64>, JsError> {
    poisson_series(lambda, k_max).map_err(|e| JsError::new(&e))
}
