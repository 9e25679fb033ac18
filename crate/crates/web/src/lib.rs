//! Browser bindings for the demo page in `www/`.
//!
//! Every export takes plain strings and numbers and returns JSON (or TOML for
//! configs). The `*_json` functions hold the logic so they can be tested
//! natively; the `#[wasm_bindgen]` wrappers only turn errors into JS strings.

use mamdi::config::{emit_config, parse_config};
use mamdi::loading::{expected_abs_diff, loading_distribution, p_equal};
use mamdi::presets::{preset, PresetName};
use mamdi::rates::Protocol;
use mamdi::sweep::{storage_time_curve, sweep, Grid};
use serde::Serialize;
use wasm_bindgen::prelude::*;

const PRESETS: [PresetName; 5] = [
    PresetName::Fig3,
    PresetName::Fig4,
    PresetName::Fig5,
    PresetName::Fig6a,
    PresetName::Fig6b,
];

/// Largest grid the page will evaluate in one call.
const MAX_POINTS: usize = 5001;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn json(v: &impl Serialize) -> Result<String, String> {
    serde_json::to_string(v).map_err(err)
}

fn grid_points(grid: &str) -> Result<Vec<f64>, String> {
    let grid = grid.parse::<Grid>().map_err(err)?;
    if grid.len() > MAX_POINTS {
        return Err(format!("grid has {} points, at most {MAX_POINTS} allowed", grid.len()));
    }
    Ok(grid.points())
}

#[derive(Serialize)]
struct CurveInfo {
    index: usize,
    label: String,
    protocols: Vec<Protocol>,
}

#[derive(Serialize)]
struct PresetInfo {
    name: &'static str,
    curves: Vec<CurveInfo>,
    grid: String,
}

/// Names, curve labels and default grids of the built-in presets.
pub fn presets_json() -> Result<String, String> {
    let list: Vec<PresetInfo> = PRESETS
        .iter()
        .map(|&n| {
            let p = preset(n);
            let step = if p.grid.len() > 1 { p.grid[1] - p.grid[0] } else { 1.0 };
            PresetInfo {
                name: n.as_str(),
                curves: p
                    .curves
                    .into_iter()
                    .enumerate()
                    .map(|(index, c)| CurveInfo {
                        index,
                        label: c.label,
                        protocols: c.protocols,
                    })
                    .collect(),
                grid: format!("{}:{}:{}", p.grid[0], p.grid[p.grid.len() - 1], step),
            }
        })
        .collect();
    json(&list)
}

/// TOML of curve `curve` of preset `name`.
pub fn preset_config_toml(name: &str, curve: usize) -> Result<String, String> {
    let p = preset(name.parse::<PresetName>().map_err(err)?);
    let n = p.curves.len();
    let c = p
        .curves
        .get(curve)
        .ok_or_else(|| format!("preset {name} has {n} curves, no curve {curve}"))?;
    Ok(emit_config(&c.config))
}

#[derive(Serialize)]
struct Series {
    protocol: Protocol,
    /// Secret-key rate in bits per second, negative values clamped to zero.
    rate_per_second: Vec<f64>,
    e11x: Vec<f64>,
    e11z: Vec<f64>,
}

#[derive(Serialize)]
struct RateCurve {
    distance_km: Vec<f64>,
    series: Vec<Series>,
}

/// Key rate against total distance for a comma-separated protocol list.
pub fn rate_curve_json(config_toml: &str, protocols: &str, grid: &str) -> Result<String, String> {
    let config = parse_config(config_toml).map_err(err)?;
    let protocols = protocols
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<Protocol>().map_err(err))
        .collect::<Result<Vec<_>, _>>()?;
    if protocols.is_empty() {
        return Err("no protocol selected".into());
    }
    let distances = grid_points(grid)?;
    let result = sweep(&config, &protocols, &distances).map_err(err)?;
    let series = protocols
        .iter()
        .enumerate()
        .map(|(i, &protocol)| Series {
            protocol,
            rate_per_second: result.rows.iter().map(|r| r.results[i].clamped_rate_per_second()).collect(),
            e11x: result.rows.iter().map(|r| r.results[i].e11x).collect(),
            e11z: result.rows.iter().map(|r| r.results[i].e11z).collect(),
        })
        .collect();
    json(&RateCurve {
        distance_km: distances,
        series,
    })
}

#[derive(Serialize)]
struct StorageSeries {
    distance_km: Vec<f64>,
    storage_time: Vec<f64>,
    light_time: Vec<f64>,
}

/// Mean storage time of the early memory and the light time `L/c`.
pub fn storage_time_json(config_toml: &str, grid: &str) -> Result<String, String> {
    let config = parse_config(config_toml).map_err(err)?;
    let points = storage_time_curve(&config, &grid_points(grid)?).map_err(err)?;
    json(&StorageSeries {
        distance_km: points.iter().map(|p| p.distance_km).collect(),
        storage_time: points.iter().map(|p| p.storage_time).collect(),
        light_time: points.iter().map(|p| p.light_time).collect(),
    })
}

#[derive(Serialize)]
struct LoadingHistogram {
    k: Vec<u64>,
    probability: Vec<f64>,
    p_equal: f64,
    expected_abs_diff: f64,
    /// Mass beyond `k_max`.
    tail: f64,
}

/// `Pr{|N_A − N_B| = k}` for `k = 0..=k_max`.
pub fn loading_distribution_json(eta_a: f64, eta_b: f64, k_max: u32) -> Result<String, String> {
    if k_max as usize >= MAX_POINTS {
        return Err(format!("k_max must be below {MAX_POINTS}"));
    }
    let k: Vec<u64> = (0..=k_max as u64).collect();
    let probability = k
        .iter()
        .map(|&k| loading_distribution(eta_a, eta_b, k))
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
    let tail = (1.0 - probability.iter().sum::<f64>()).max(0.0);
    json(&LoadingHistogram {
        k,
        probability,
        p_equal: p_equal(eta_a, eta_b).map_err(err)?,
        expected_abs_diff: expected_abs_diff(eta_a, eta_b).map_err(err)?,
        tail,
    })
}

fn js(r: Result<String, String>) -> Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn presets() -> Result<String, JsValue> {
    js(presets_json())
}

#[wasm_bindgen]
pub fn preset_config(name: &str, curve: usize) -> Result<String, JsValue> {
    js(preset_config_toml(name, curve))
}

#[wasm_bindgen]
pub fn rate_curve(config_toml: &str, protocols: &str, grid: &str) -> Result<String, JsValue> {
    js(rate_curve_json(config_toml, protocols, grid))
}

#[wasm_bindgen]
pub fn storage_time(config_toml: &str, grid: &str) -> Result<String, JsValue> {
    js(storage_time_json(config_toml, grid))
}

#[wasm_bindgen]
pub fn loading(eta_a: f64, eta_b: f64, k_max: u32) -> Result<String, JsValue> {
    js(loading_distribution_json(eta_a, eta_b, k_max))
}
