//! WebAssembly bindings for the browser demo in `www/`. Each export wraps a
//! plain Rust function so the logic can be tested natively.

use serde::Serialize;
use srm_core::driver::{performance_score, va_of, Emotion};
use srm_core::risk::{bin_level, infer_risk, FuzzyInput};
use srm_core::tci::{ConflictFlags, TciValues, Thresholds};
use wasm_bindgen::prelude::*;

/// Indicator values; `None` where the indicator is unbounded (no closing).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndicatorReport {
    pub ttc: Option<f64>,
    pub mttc: Option<f64>,
    pub drac: Option<f64>,
    pub conflict: ConflictFlags,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

pub fn indicators(gap: f64, v_follower: f64, v_leader: f64, a_follower: f64, a_leader: f64) -> Result<IndicatorReport, String> {
    let values = TciValues::compute(gap, v_follower, v_leader, a_follower, a_leader).map_err(|e| e.to_string())?;
    Ok(IndicatorReport {
        ttc: finite(values.ttc),
        mttc: finite(values.mttc),
        drac: finite(values.drac),
        conflict: values.flags(&Thresholds::default()),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskReport {
    pub score: f64,
    pub level: &'static str,
    pub color: &'static str,
}

pub fn segment_score(crashes_per_year: f64, flags: ConflictFlags) -> Result<RiskReport, String> {
    let r = infer_risk(&FuzzyInput { crashes_per_year, flags }).map_err(|e| e.to_string())?;
    Ok(RiskReport {
        score: r.score,
        level: r.level.name(),
        color: r.level.hex(),
    })
}

/// Risk score for every crash count in `0..=max_crashes` (in `steps`
/// samples) and every number of conflicting indicators 0..=3. Row-major:
/// conflict count outer, crash count inner.
pub fn surface(max_crashes: f64, steps: usize) -> Result<Vec<f64>, String> {
    if !(max_crashes > 0.0) || steps < 2 {
        return Err("need a positive crash range and at least two steps".into());
    }
    let mut out = Vec::with_capacity(4 * steps);
    for conflicts in 0..=3 {
        let flags = ConflictFlags::new(conflicts >= 1, conflicts >= 2, conflicts >= 3);
        for k in 0..steps {
            let crashes = max_crashes * k as f64 / (steps - 1) as f64;
            out.push(segment_score(crashes, flags)?.score);
        }
    }
    Ok(out)
}

/// Driving performance over the valence-arousal square [-1, 1]², `n` by `n`,
/// arousal descending by row so the grid draws top-down.
pub fn performance_grid(n: usize) -> Vec<f64> {
    let n = n.max(2);
    let step = 2.0 / (n - 1) as f64;
    let mut out = Vec::with_capacity(n * n);
    for row in 0..n {
        let arousal = 1.0 - row as f64 * step;
        for col in 0..n {
            out.push(performance_score([-1.0 + col as f64 * step, arousal]));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmotionPoint {
    pub name: &'static str,
    pub valence: f64,
    pub arousal: f64,
    pub performance: f64,
}

pub fn emotions() -> Vec<EmotionPoint> {
    Emotion::ALL
        .into_iter()
        .map(|e| {
            let [valence, arousal] = va_of(e);
            EmotionPoint {
                name: e.name(),
                valence,
                arousal,
                performance: performance_score([valence, arousal]),
            }
        })
        .collect()
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("plain data serializes")
}

#[wasm_bindgen(js_name = indicators)]
pub fn indicators_js(gap: f64, v_follower: f64, v_leader: f64, a_follower: f64, a_leader: f64) -> Result<String, JsError> {
    indicators(gap, v_follower, v_leader, a_follower, a_leader)
        .map(|r| to_json(&r))
        .map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = segmentScore)]
pub fn segment_score_js(crashes_per_year: f64, ttc: bool, mttc: bool, drac: bool) -> Result<String, JsError> {
    segment_score(crashes_per_year, ConflictFlags::new(ttc, mttc, drac))
        .map(|r| to_json(&r))
        .map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = riskSurface)]
pub fn surface_js(max_crashes: f64, steps: usize) -> Result<Vec<f64>, JsError> {
    surface(max_crashes, steps).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = performanceGrid)]
pub fn performance_grid_js(n: usize) -> Vec<f64> {
    performance_grid(n)
}

#[wasm_bindgen(js_name = performanceAt)]
pub fn performance_at(valence: f64, arousal: f64) -> f64 {
    performance_score([valence, arousal])
}

#[wasm_bindgen(js_name = emotions)]
pub fn emotions_js() -> String {
    to_json(&emotions())
}

/// Fill color of the risk level a score falls in.
#[wasm_bindgen(js_name = levelColor)]
pub fn level_color(score: f64) -> String {
    bin_level(score.clamp(0.0, 100.0)).map(|l| l.hex()).unwrap_or("#000000").to_string()
}
