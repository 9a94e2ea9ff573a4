//! Browser bindings. Every entry point returns a JSON document.

use serde_json::json;
use wasm_bindgen::prelude::*;

use suq2_cli::parse_phi;
use suq2_walk::central::{green_central, martin_central};
use suq2_walk::martin::boundary_deviation;
use suq2_walk::{DeformationParams, IrrepLabel};

fn params(q: f64) -> Result<DeformationParams, String> {
    DeformationParams::new(q).map_err(|e| e.to_string())
}

fn label(twice_spin: u32) -> IrrepLabel {
    IrrepLabel::from_twice_spin(twice_spin)
}

/// Central Green function g(s, target) for s <= s_max.
pub fn green_json(q: f64, phi: &str, target: u32, s_max: u32) -> Result<String, String> {
    let phi = parse_phi(phi)?;
    let table = green_central(&phi, label(target), label(s_max), &params(q)?).map_err(|e| e.to_string())?;
    let rows: Vec<_> = table
        .rows
        .iter()
        .map(|r| json!({ "s2": r.label.twice_spin(), "value": r.value, "tail_bound": r.tail_bound }))
        .collect();
    Ok(json!({ "q": q, "command": "green", "steps": table.steps, "rows": rows }).to_string())
}

/// Central Martin kernel K(I_target)(s) with its enclosure width.
pub fn martin_central_json(q: f64, phi: &str, target: u32, s_max: u32) -> Result<String, String> {
    let phi = parse_phi(phi)?;
    let k = martin_central(&phi, label(target), label(s_max), &params(q)?).map_err(|e| e.to_string())?;
    let rows: Vec<_> = k
        .element
        .iter()
        .map(|(s, v)| json!({ "s2": s.twice_spin(), "value": v, "tail_bound": k.uncertainty(s) }))
        .collect();
    Ok(json!({ "q": q, "command": "martin-central", "rows": rows }).to_string())
}

/// Distance of the block Martin kernel of (α*)^n from the boundary polynomial, per block.
pub fn boundary_json(q: f64, phi: &str, n: usize, r_max: u32) -> Result<String, String> {
    let phi = parse_phi(phi)?;
    let report = boundary_deviation(&phi, n, label(0), label(r_max), &params(q)?).map_err(|e| e.to_string())?;
    let rows: Vec<_> = report
        .rows
        .iter()
        .map(|r| json!({ "s2": r.label.twice_spin(), "value": r.deviation, "tail_bound": r.uncertainty }))
        .collect();
    Ok(json!({ "q": q, "command": "martin-block", "c": report.c, "rows": rows }).to_string())
}

#[wasm_bindgen]
pub fn green(q: f64, phi: &str, target: u32, s_max: u32) -> Result<String, JsError> {
    green_json(q, phi, target, s_max).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = martinCentral)]
pub fn martin_central_js(q: f64, phi: &str, target: u32, s_max: u32) -> Result<String, JsError> {
    martin_central_json(q, phi, target, s_max).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn boundary(q: f64, phi: &str, n: usize, r_max: u32) -> Result<String, JsError> {
    boundary_json(q, phi, n, r_max).map_err(|e| JsError::new(&e))
}
