//! Browser bindings. Each exported function runs one computation on the
//! built-in interferometer arrangements and returns a JSON document; the
//! static page in `static/` renders them. The JSON-building functions are
//! plain Rust so the same code is testable natively.

use ablsim::hilbert::OutcomeProb;
use ablsim::montecarlo::{estimate, EstimateReport};
use ablsim::presets::{build_scenario, mixture_demo, D1Variant, MarginalSource};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Enough for tight confidence bands while keeping a browser tab responsive.
const MAX_SHOTS: u32 = 10_000_000;

#[derive(Serialize)]
struct ScenarioDoc {
    scenario: String,
    d3_present: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    intermediate: Option<String>,
    forward: Vec<OutcomeProb>,
    #[serde(skip_serializing_if = "Option::is_none")]
    conditionals: Option<Vec<OutcomeProb>>,
}

fn variant_from(name: &str) -> Result<D1Variant, String> {
    match name {
        "original" => Ok(D1Variant::Subspace),
        "plusminus" => Ok(D1Variant::PlusMinus),
        other => Err(format!("unknown variant {other:?}; use original or plusminus")),
    }
}

fn scenario_json(variant: &str, d3_present: bool) -> Result<String, String> {
    let scenario =
        build_scenario(d3_present, variant_from(variant)?).map_err(|e| e.to_string())?;
    let forward = OutcomeProb::rows(&scenario.forward_probabilities().map_err(|e| e.to_string())?);
    let (intermediate, conditionals) = if scenario.d3_present() {
        let rows = OutcomeProb::rows(&scenario.abl_conditionals().map_err(|e| e.to_string())?);
        (Some(scenario.intermediate_name().to_string()), Some(rows))
    } else {
        (None, None)
    };
    let doc = ScenarioDoc {
        scenario: scenario.name().to_string(),
        d3_present: scenario.d3_present(),
        intermediate,
        forward,
        conditionals,
    };
    serde_json::to_string(&doc).map_err(|e| e.to_string())
}

fn mixture_json(
    variant: &str,
    matched_marginals: bool,
    published_conditional: bool,
) -> Result<String, String> {
    let source = if matched_marginals {
        MarginalSource::Present
    } else {
        MarginalSource::Absent
    };
    let demo = mixture_demo(variant_from(variant)?, source, published_conditional)
        .map_err(|e| e.to_string())?;
    serde_json::to_string(&demo).map_err(|e| e.to_string())
}

fn sampling_json(variant: &str, shots: u32, seed: u32) -> Result<String, String> {
    if shots == 0 {
        return Err("shots must be positive".into());
    }
    if shots > MAX_SHOTS {
        return Err(format!("at most {MAX_SHOTS} shots in the browser"));
    }
    let scenario = build_scenario(true, variant_from(variant)?).map_err(|e| e.to_string())?;
    // single worker: no threads on this target, and the report is
    // worker-count-invariant anyway
    let report: EstimateReport =
        estimate(&scenario, shots as u64, seed as u64, 1).map_err(|e| e.to_string())?;
    serde_json::to_string(&report).map_err(|e| e.to_string())
}

/// Forward probabilities and, with the coupler present, two-time click
/// conditionals for one arrangement.
#[wasm_bindgen]
pub fn scenario_report(variant: &str, d3_present: bool) -> Result<String, JsValue> {
    scenario_json(variant, d3_present).map_err(|e| JsValue::from_str(&e))
}

/// Total-probability reconstruction of the click marginal; mismatched
/// marginals (or the published 1/4 claim) demonstrate the fallacy.
#[wasm_bindgen]
pub fn mixture_report(
    variant: &str,
    matched_marginals: bool,
    published_conditional: bool,
) -> Result<String, JsValue> {
    mixture_json(variant, matched_marginals, published_conditional)
        .map_err(|e| JsValue::from_str(&e))
}

/// Seeded trajectory sampling of the coupled arrangement, with z-scores
/// against the closed forms.
#[wasm_bindgen]
pub fn sampling_report(variant: &str, shots: u32, seed: u32) -> Result<String, JsValue> {
    sampling_json(variant, shots, seed).map_err(|e| JsValue::from_str(&e))
}
