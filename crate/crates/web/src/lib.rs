//! Browser bindings: Tsirelson bounds, single negativity points and SDPA
//! export for the built-in inequalities.

use bellsdp::algebra::{generate_basis, LevelSpec};
use bellsdp::moment::{apply_symmetry, build_template, MomentTemplate, SymmetrySpec};
use bellsdp::programs::{negativity, solve_program, tsirelson, ProgramResult, SdpProblem};
use bellsdp::scenario::{builtin, builtin_names, BellFunctional};
use bellsdp::solver::{export_sdpa, SolverConfig};
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Largest level accepted from the page; higher levels take minutes.
pub const MAX_LEVEL: usize = 3;

fn setup(name: &str, level: usize) -> Result<(MomentTemplate, BellFunctional), String> {
    if level == 0 || level > MAX_LEVEL {
        return Err(format!("level must be between 1 and {MAX_LEVEL}"));
    }
    let f = builtin(name).map_err(|e| e.to_string())?.functional;
    let basis = generate_basis(&f.scenario, &LevelSpec::full(level)).map_err(|e| e.to_string())?;
    let t = build_template(&f.scenario, &basis).map_err(|e| e.to_string())?;
    let t = apply_symmetry(&t, &SymmetrySpec::real(), Some(&f)).map_err(|e| e.to_string())?;
    Ok((t, f))
}

fn report(t: &MomentTemplate, p: &SdpProblem, r: &ProgramResult) -> String {
    json!({
        "value": r.value,
        "status": r.status.as_str(),
        "gap": r.gap,
        "dual_bound": r.dual_bound,
        "iterations": r.iterations,
        "side": t.side(),
        "variables": p.num_variables(),
        "notes": p.notes,
    })
    .to_string()
}

pub fn names() -> String {
    json!(builtin_names()).to_string()
}

pub fn tsirelson_json(name: &str, level: usize) -> Result<String, String> {
    let (t, f) = setup(name, level)?;
    let p = tsirelson(&t, &f).map_err(|e| e.to_string())?;
    let r = solve_program(&p, &SolverConfig::default()).map_err(|e| e.to_string())?;
    Ok(report(&t, &p, &r))
}

pub fn negativity_json(name: &str, level: usize, v: f64) -> Result<String, String> {
    let (t, f) = setup(name, level)?;
    let p = negativity(&t, &f, v).map_err(|e| e.to_string())?;
    let r = solve_program(&p, &SolverConfig::default()).map_err(|e| e.to_string())?;
    Ok(report(&t, &p, &r))
}

pub fn sdpa_text(name: &str, level: usize, v: Option<f64>) -> Result<String, String> {
    let (t, f) = setup(name, level)?;
    let p = match v {
        Some(v) => negativity(&t, &f, v),
        None => tsirelson(&t, &f),
    }
    .map_err(|e| e.to_string())?;
    Ok(export_sdpa(&p))
}

#[wasm_bindgen(js_name = builtinNames)]
pub fn builtin_names_js() -> String {
    names()
}

#[wasm_bindgen(js_name = tsirelsonBound)]
pub fn tsirelson_js(name: &str, level: usize) -> Result<String, JsError> {
    tsirelson_json(name, level).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = negativityBound)]
pub fn negativity_js(name: &str, level: usize, v: f64) -> Result<String, JsError> {
    negativity_json(name, level, v).map_err(|e| JsError::new(&e))
}

/// SDPA text of the Tsirelson program, or of the negativity program when `v` is finite.
#[wasm_bindgen(js_name = exportSdpa)]
pub fn sdpa_js(name: &str, level: usize, v: f64) -> Result<String, JsError> {
    sdpa_text(name, level, v.is_finite().then_some(v)).map_err(|e| JsError::new(&e))
}
