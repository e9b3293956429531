//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Each exported function returns JSON (or a plain array) that the page
//! plots on a canvas. The `*_json` functions carry the logic and are what the
//! native tests exercise.

use mklsgd::datagen::{gen_regression, RegressionSpec};
use mklsgd::surrogate::{find_stationary_point, scan_line};
use mklsgd::theory::w_tilde;
use mklsgd::{
    rank_probabilities, run, Dataset, LossComponent, OptimizerConfig, ParameterVector, Replacement,
    SelectionScheme,
};
use serde::Serialize;
use wasm_bindgen::prelude::*;

fn scheme(k: usize, with_replacement: bool) -> SelectionScheme {
    let r = if with_replacement {
        Replacement::With
    } else {
        Replacement::Without
    };
    SelectionScheme::min_k(k).with_replacement(r)
}

pub fn probabilities(n: usize, k: usize, with_replacement: bool) -> Result<Vec<f64>, String> {
    Ok(rank_probabilities(n, &scheme(k, with_replacement))
        .map_err(|e| e.to_string())?
        .probs()
        .to_vec())
}

#[derive(Serialize)]
struct Scan {
    w: Vec<f64>,
    value: Vec<f64>,
    slope: Vec<f64>,
    crossing: f64,
    stationary: Vec<f64>,
}

/// Scalar family with `n_clean` quadratics `l_clean w^2` and `n_out`
/// quadratics `l_out (w - w_b)^2`, scanned on `[lo, hi]`.
#[allow(clippy::too_many_arguments)]
pub fn landscape_json(
    n_clean: usize,
    n_out: usize,
    l_clean: f64,
    l_out: f64,
    w_b: f64,
    k: usize,
    lo: f64,
    hi: f64,
) -> Result<String, String> {
    let err = |e: mklsgd::Error| e.to_string();
    let mut comps = Vec::new();
    for _ in 0..n_clean {
        comps.push(LossComponent::scalar_quadratic(l_clean, 0.0, false).map_err(err)?);
    }
    for _ in 0..n_out {
        comps.push(LossComponent::scalar_quadratic(l_out, w_b, true).map_err(err)?);
    }
    let ds = Dataset::new(comps, ParameterVector::scalar(0.0)).map_err(err)?;
    let s = scheme(k, true);
    let rows = scan_line(
        &ds,
        &ParameterVector::scalar(lo),
        &ParameterVector::scalar(hi),
        401,
        &s,
    )
    .map_err(err)?;
    let crossing = w_tilde(
        l_clean,
        l_out,
        &ParameterVector::scalar(0.0),
        &ParameterVector::scalar(w_b),
    )
    .map_err(err)?[0];
    let mut stationary = Vec::new();
    for start in [0.0, w_b] {
        let r = find_stationary_point(&ds, &ParameterVector::scalar(start), &s, 1e-10, 100_000)
            .map_err(err)?;
        if r.converged
            && !stationary
                .iter()
                .any(|x: &f64| (x - r.point[0]).abs() < 1e-6)
        {
            stationary.push(r.point[0]);
        }
    }
    let scan = Scan {
        w: rows.iter().map(|r| lo + r.t * (hi - lo)).collect(),
        value: rows.iter().map(|r| r.value).collect(),
        slope: rows
            .iter()
            .map(|r| r.directional_derivative * (hi - lo).signum())
            .collect(),
        crossing,
        stationary,
    };
    serde_json::to_string(&scan).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Race {
    steps: Vec<usize>,
    sgd: Vec<f64>,
    mkl: Vec<f64>,
}

/// Distance to the clean optimum along SGD and min-k runs on one corrupted
/// regression problem.
pub fn race_json(
    d: usize,
    n: usize,
    epsilon: f64,
    k: usize,
    steps: usize,
    seed: u64,
) -> Result<String, String> {
    let err = |e: mklsgd::Error| e.to_string();
    let ds = gen_regression(&RegressionSpec::new(d, n, 1.0, epsilon, seed)).map_err(err)?;
    let w0 = ParameterVector::zeros(d);
    let every = (steps / 200).max(1);
    let trace = |s: SelectionScheme| -> Result<(Vec<usize>, Vec<f64>), String> {
        let mut cfg = OptimizerConfig::new(s, steps, seed);
        cfg.record_every = every;
        let tr = run(&ds, &cfg, &w0).map_err(err)?;
        Ok((tr.records.iter().map(|r| r.step).collect(), tr.distances))
    };
    let (at, sgd) = trace(SelectionScheme::sgd())?;
    let (_, mkl) = trace(SelectionScheme::min_k(k))?;
    serde_json::to_string(&Race {
        steps: at,
        sgd,
        mkl,
    })
    .map_err(|e| e.to_string())
}

#[wasm_bindgen(js_name = rankProbabilities)]
pub fn rank_probabilities_js(
    n: usize,
    k: usize,
    with_replacement: bool,
) -> Result<Vec<f64>, JsError> {
    probabilities(n, k, with_replacement).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = scalarLandscape)]
#[allow(clippy::too_many_arguments)]
pub fn scalar_landscape_js(
    n_clean: usize,
    n_out: usize,
    l_clean: f64,
    l_out: f64,
    w_b: f64,
    k: usize,
    lo: f64,
    hi: f64,
) -> Result<String, JsError> {
    landscape_json(n_clean, n_out, l_clean, l_out, w_b, k, lo, hi).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = raceRegression)]
pub fn race_regression_js(
    d: usize,
    n: usize,
    epsilon: f64,
    k: usize,
    steps: usize,
    seed: u64,
) -> Result<String, JsError> {
    race_json(d, n, epsilon, k, steps, seed).map_err(|e| JsError::new(&e))
}
