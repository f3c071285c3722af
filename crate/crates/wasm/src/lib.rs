//! Browser bindings: each export takes plain values and returns a JSON string.

use formflow_core::characteristics::SOLUTION;
use formflow_core::dsl::{parse_single, Item};
use formflow_core::forms::{is_closed, Connection};
use formflow_core::grid::{Axis, GridSpec};
use formflow_core::pipeline::run_characteristics;
use formflow_core::relations::{analyze_relation, FunctionalRelation, SYMBOLIC_TOL};
use formflow_core::report::to_canonical_json;
use formflow_core::scenarios::em::{em_points, run_em, EmPoint, EmScenario, Waveform};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Longer trajectories are thinned to about this many points per path.
const MAX_PATH_POINTS: usize = 400;

fn located(text: &str, e: formflow_core::dsl::DslError) -> String {
    let (line, col) = e.location(text);
    format!("{line}:{col}: {e}")
}

fn json<T: Serialize>(v: &T) -> Result<String, String> {
    to_canonical_json(v).map_err(|e| e.to_string())
}

/// Identity test for a `relation` block or closure test for a `form` block.
pub fn analyze_source(text: &str) -> Result<String, String> {
    let item = parse_single(text).map_err(|e| located(text, e))?;
    let cube = |coords: &[String]| GridSpec { axes: coords.iter().map(|c| Axis::new(c.clone(), -1.0, 1.0, 11)).collect() };
    match item {
        Item::Relation(spec) => {
            let grid = spec.grid.clone().unwrap_or_else(|| cube(&spec.coords));
            let mut rel = FunctionalRelation::new(spec.label, spec.omega)
                .with_connection(spec.connection)
                .map_err(|e| e.to_string())?;
            if let Some(psi) = spec.psi {
                rel = rel.with_psi(psi);
            }
            let report = analyze_relation(&rel, &grid.points(), spec.tol.unwrap_or(SYMBOLIC_TOL)).map_err(|e| e.to_string())?;
            json(&report)
        }
        Item::Form(form) => {
            let grid = cube(form.coords());
            let report = is_closed(&form, &Connection::flat(form.dim()), &grid.points(), SYMBOLIC_TOL).map_err(|e| e.to_string())?;
            json(&report)
        }
        Item::Characteristics(_) => Err("use the characteristics panel for pde and hj blocks".into()),
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct Path {
    member: f64,
    x: Vec<f64>,
    y: Vec<f64>,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct CharacteristicsView<'a> {
    run: &'a formflow_core::pipeline::CharacteristicsRun,
    x_label: String,
    y_label: String,
    paths: Vec<Path>,
}

/// Integrates a `pde` or `hj` block and returns the run plus plottable paths
/// of the first spatial coordinate against time.
pub fn characteristics_source(text: &str) -> Result<String, String> {
    let Item::Characteristics(spec) = parse_single(text).map_err(|e| located(text, e))? else {
        return Err("expected a pde or hj block".into());
    };
    let run = run_characteristics(&spec).map_err(|e| e.to_string())?;
    let x_label = if run.state.iter().any(|s| s == "t") { "t".to_string() } else { run.parameter.clone() };
    let momenta = spec.momenta();
    let y_label = run
        .state
        .iter()
        .find(|c| *c != "t" && *c != SOLUTION && !momenta.contains(c))
        .cloned()
        .unwrap_or_else(|| SOLUTION.to_string());
    let paths = run
        .members
        .iter()
        .zip(&run.trajectories)
        .map(|(&member, t)| {
            let xs = if x_label == run.parameter { t.samples.iter().map(|s| s.parameter).collect() } else { t.column(&x_label).unwrap_or_default() };
            let ys = t.column(&y_label).unwrap_or_default();
            let stride = xs.len().div_ceil(MAX_PATH_POINTS).max(1);
            Path {
                member,
                x: xs.into_iter().step_by(stride).collect(),
                y: ys.into_iter().step_by(stride).collect(),
            }
        })
        .collect();
    json(&CharacteristicsView { run: &run, x_label, y_label, paths })
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct EmView {
    report: formflow_core::scenarios::em::EmReport,
    /// (x, t, direction) at every point where a direction was derived.
    directions: Vec<[f64; 3]>,
}

/// Integrating direction of a plane wave `A·profile(x ∓ c t)`.
pub fn em_direction_json(waveform: &str, amplitude: f64, reversed: bool) -> Result<String, String> {
    let waveform = match waveform {
        "cos" => Waveform::Cos,
        "gaussian-cos" => Waveform::GaussianCos,
        other => return Err(format!("unknown waveform `{other}`")),
    };
    if !amplitude.is_finite() || amplitude == 0.0 {
        return Err("amplitude must be finite and nonzero".into());
    }
    let sc = EmScenario::plane_wave(waveform, amplitude, reversed);
    let tol = 1e-9;
    let report = run_em(&sc, tol).map_err(|e| e.to_string())?;
    let (points, rows) = em_points(&sc, tol).map_err(|e| e.to_string())?;
    let directions = points
        .iter()
        .zip(&rows)
        .filter_map(|(p, r)| match r {
            EmPoint::Direction { direction, .. } => Some([p.get("x")?, p.get("t")?, *direction]),
            _ => None,
        })
        .collect();
    json(&EmView { report, directions })
}

#[wasm_bindgen]
pub fn analyze(text: &str) -> Result<String, JsError> {
    analyze_source(text).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn characteristics(text: &str) -> Result<String, JsError> {
    characteristics_source(text).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = emDirection)]
pub fn em_direction(waveform: &str, amplitude: f64, reversed: bool) -> Result<String, JsError> {
    em_direction_json(waveform, amplitude, reversed).map_err(|e| JsError::new(&e))
}
