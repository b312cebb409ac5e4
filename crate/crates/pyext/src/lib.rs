//! Python bindings: the main types travel as JSON strings, keeping the
//! binding layer thin and the exact rational coefficients lossless.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use qdual_core::checker::{self, CheckSpec, Selection};
use qdual_core::fixpoints::{self, Family, Ranks, StepId};
use qdual_core::ifun::{family_model, restricted_series, Prune};
use qdual_core::quiver::{MapRule, Quiver};
use qdual_core::rat::{rat_from_string, rat_to_string};
use qdual_core::series::DegreeBox;

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn ranks_from(family: Family, ranks: Vec<u32>) -> PyResult<Ranks> {
    match family {
        Family::GrBlock | Family::GrBlockDual => {
            if ranks.len() != 3 {
                return Err(err("building block ranks are [r, n, m]"));
            }
            Ok(Ranks::Gr { r: ranks[0], n: ranks[1], m: ranks[2] })
        }
        Family::Star | Family::StarDual => Ok(Ranks::Star {
            n: ranks.try_into().map_err(|_| err("star ranks are nine integers"))?,
        }),
        _ => Ok(Ranks::D3 {
            n: ranks.try_into().map_err(|_| err("D3 ranks are four integers"))?,
        }),
    }
}

fn family_from(name: &str) -> PyResult<Family> {
    Family::parse(name).ok_or_else(|| err(format!("unknown family '{}'", name)))
}

fn spec_from(box_radius: i64, trials: u32, seed: u64) -> CheckSpec {
    CheckSpec {
        box_radius,
        trials,
        seed,
        selection: Selection::All,
        audit: true,
        force_trivial_prefactor: false,
    }
}

/// Shifted factorial ratio `prod_{l<=a}(x+l) / prod_{l<=0}(x+l)` at a
/// rational `x` given as "p/q".
#[pyfunction]
fn sfr(x: &str, a: i64) -> PyResult<String> {
    let x = rat_from_string(x).ok_or_else(|| err("x must be an integer or p/q"))?;
    Ok(rat_to_string(&qdual_core::series::sfr(&x, a).map_err(err)?))
}

/// Canonical JSON of a catalogued quiver.
#[pyfunction]
fn family_quiver(family: &str, ranks: Vec<u32>) -> PyResult<String> {
    let fam = family_from(family)?;
    let ranks = ranks_from(fam, ranks)?;
    Ok(fixpoints::family_quiver(fam, &ranks).map_err(err)?.to_json_string())
}

/// Mutate a quiver (JSON) at a gauge node; returns the mutated quiver, the
/// annihilation counts, and the attached variable maps as one JSON object.
#[pyfunction]
fn mutate(quiver_json: &str, node: u32) -> PyResult<String> {
    let q = Quiver::from_json_str(quiver_json).map_err(err)?;
    let res = q.mutate(node).map_err(err)?;
    let conjecture = Quiver::kahler_map_for(&res, MapRule::ConjectureGeneral)
        .map(|m| m.to_json())
        .unwrap_or(serde_json::Value::Null);
    let proved = Quiver::kahler_map_for(&res, MapRule::PaperProvedCase)
        .map(|m| m.to_json())
        .unwrap_or(serde_json::Value::Null);
    let body = serde_json::json!({
        "quiver": res.quiver.to_json(),
        "case": format!("{:?}", res.kahler_case),
        "annihilated": res
            .annihilated
            .iter()
            .map(|((a, b), c)| serde_json::json!([a, b, c]))
            .collect::<Vec<_>>(),
        "conjecture_map": conjecture,
        "proved_map": proved,
    });
    Ok(serde_json::to_string_pretty(&body).unwrap())
}

/// Torus-fixed points of a family as a JSON array of label lists.
#[pyfunction]
fn fixed_points(family: &str, ranks: Vec<u32>) -> PyResult<String> {
    let fam = family_from(family)?;
    let ranks = ranks_from(fam, ranks)?;
    let fps = fixpoints::enumerate(fam, &ranks).map_err(err)?;
    let labels: Vec<_> = fps.iter().map(|p| p.labels.clone()).collect();
    Ok(serde_json::to_string(&labels).unwrap())
}

/// Enumerated fixed-point count, asserted equal to the closed form.
#[pyfunction]
fn fixed_point_count(family: &str, ranks: Vec<u32>) -> PyResult<u64> {
    let fam = family_from(family)?;
    let ranks = ranks_from(fam, ranks)?;
    fixpoints::cardinality_check(fam, &ranks).map_err(err)
}

/// Restricted I-function series at one fixed point, as JSON with the
/// parameter values used.
#[pyfunction]
#[pyo3(signature = (family, ranks, point_index=0, box_radius=2, seed=1))]
fn ifun(family: &str, ranks: Vec<u32>, point_index: usize, box_radius: i64, seed: u64) -> PyResult<String> {
    let fam = family_from(family)?;
    let ranks = ranks_from(fam, ranks)?;
    let fps = fixpoints::enumerate(fam, &ranks).map_err(err)?;
    let fp = fps.get(point_index).ok_or_else(|| err("point index out of range"))?;
    let model = family_model(fam, &ranks).map_err(err)?;
    let point = fixpoints::generic_point(ranks.param_names(), seed, box_radius);
    let totals = DegreeBox::radius(model.vars.len(), box_radius);
    let series = restricted_series(&model, fp, &point, &totals, Prune::Matched).map_err(err)?;
    let body = serde_json::json!({
        "fixed_point": fp.labels,
        "parameters": point.to_json(),
        "series": series.to_json(),
    });
    Ok(serde_json::to_string_pretty(&body).unwrap())
}

/// Verify the building-block identity; returns the check report as JSON.
#[pyfunction]
#[pyo3(signature = (r, n, m, box_radius=3, trials=2, seed=1))]
fn check_building_block(r: u32, n: u32, m: u32, box_radius: i64, trials: u32, seed: u64) -> PyResult<String> {
    let report = checker::check_building_block(r, n, m, &spec_from(box_radius, trials, seed)).map_err(err)?;
    Ok(report.to_json_string())
}

/// Verify one D3 chain step (e.g. "x0-z1") at the given ranks.
#[pyfunction]
#[pyo3(signature = (step, ranks, box_radius=2, trials=2, seed=1))]
fn check_d3_step(step: &str, ranks: Vec<u32>, box_radius: i64, trials: u32, seed: u64) -> PyResult<String> {
    let step = StepId::parse(step).ok_or_else(|| err("unknown step"))?;
    let ranks = ranks_from(Family::X0, ranks)?;
    let report = checker::check_d3_step(step, &ranks, &spec_from(box_radius, trials, seed)).map_err(err)?;
    Ok(report.to_json_string())
}

/// Verify the full D3 cycle (table rows, composed identity, step checks).
#[pyfunction]
#[pyo3(signature = (ranks, box_radius=2, trials=1, seed=1))]
fn check_d3_cycle(ranks: Vec<u32>, box_radius: i64, trials: u32, seed: u64) -> PyResult<String> {
    let ranks = ranks_from(Family::X0, ranks)?;
    let report = checker::check_cycle(&ranks, &spec_from(box_radius, trials, seed)).map_err(err)?;
    Ok(report.to_json_string())
}

/// Verify the star-quiver center-mutation identity at the distinguished
/// fixed point plus `sample` further sampled pairs.
#[pyfunction]
#[pyo3(signature = (ranks, box_radius=2, trials=1, seed=1, sample=2))]
fn check_star(ranks: Vec<u32>, box_radius: i64, trials: u32, seed: u64, sample: usize) -> PyResult<String> {
    let ranks = ranks_from(Family::Star, ranks)?;
    let mut spec = spec_from(box_radius, trials, seed);
    spec.selection = Selection::DistinguishedPlusSample(sample);
    let report = checker::check_star(&ranks, &spec).map_err(err)?;
    Ok(report.to_json_string())
}

#[pymodule]
fn qdual_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(sfr, m)?)?;
    m.add_function(wrap_pyfunction!(family_quiver, m)?)?;
    m.add_function(wrap_pyfunction!(mutate, m)?)?;
    m.add_function(wrap_pyfunction!(fixed_points, m)?)?;
    m.add_function(wrap_pyfunction!(fixed_point_count, m)?)?;
    m.add_function(wrap_pyfunction!(ifun, m)?)?;
    m.add_function(wrap_pyfunction!(check_building_block, m)?)?;
    m.add_function(wrap_pyfunction!(check_d3_step, m)?)?;
    m.add_function(wrap_pyfunction!(check_d3_cycle, m)?)?;
    m.add_function(wrap_pyfunction!(check_star, m)?)?;
    Ok(())
}
