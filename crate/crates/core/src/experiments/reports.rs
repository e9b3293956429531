use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{LandscapeConfig, TheoryConfig};
use crate::error::{Error, Result};
use crate::losses::{dataset_constants, Dataset, ProblemConstants};
use crate::optimizer::{run, OptimizerConfig, StepSize};
use crate::sampling::SelectionScheme;
use crate::surrogate::{find_stationary_point, scan_line, ScanRow, StationaryReport};
use crate::theory::{
    check_bounds, condition1, condition1_threshold, exact_expected_step_with, naive_lambda,
    p_hat_max, BoundReport, StepBoundReport,
};
use crate::vector::ParameterVector;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LandscapeSummary {
    pub kappa: f64,
    pub gamma: Option<f64>,
    pub p_hat_max: f64,
    pub condition1_threshold: f64,
    pub condition1: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LandscapeReport {
    pub a: ParameterVector,
    pub b: ParameterVector,
    pub scheme: SelectionScheme,
    pub summary: LandscapeSummary,
    pub stationary: Vec<StationaryReport>,
    #[serde(skip)]
    pub rows: Vec<ScanRow>,
}

fn summary(
    dataset: &Dataset,
    constants: &ProblemConstants,
    scheme: &SelectionScheme,
) -> Result<LandscapeSummary> {
    let p_hat = p_hat_max(dataset.n(), dataset.n_outliers(), scheme)?;
    Ok(LandscapeSummary {
        kappa: constants.kappa,
        gamma: dataset.gamma,
        p_hat_max: p_hat,
        condition1_threshold: condition1_threshold(constants.kappa),
        condition1: condition1(constants.kappa, p_hat),
    })
}

fn vector_or(
    v: &Option<Vec<f64>>,
    default: ParameterVector,
    dim: usize,
) -> Result<ParameterVector> {
    match v {
        Some(coords) => {
            let p = ParameterVector::new(coords.clone())?;
            p.check_dim(dim)?;
            Ok(p)
        }
        None => Ok(default),
    }
}

/// Line scan of the surrogate plus stationary-point searches.
pub fn landscape(config: &LandscapeConfig, base: Option<&Path>) -> Result<LandscapeReport> {
    let dataset = config.problem.build(base)?;
    let s = &config.scan;
    let scheme = SelectionScheme::min_k(s.k).with_replacement(s.replacement);
    let dim = dataset.dim();
    let target = dataset.target().clone();
    let default_b = match dataset
        .outliers()
        .first()
        .and_then(|&i| dataset.components()[i].center())
    {
        Some(c) => ParameterVector::new(c)?,
        None => {
            let mut v = target.clone().into_inner();
            v[0] += 1.0;
            ParameterVector::new(v)?
        }
    };
    let a = vector_or(&s.a, target, dim)?;
    let b = vector_or(&s.b, default_b, dim)?;
    let rows = scan_line(&dataset, &a, &b, s.grid_points, &scheme)?;

    let starts = match &s.starts {
        Some(list) => list
            .iter()
            .map(|c| vector_or(&Some(c.clone()), a.clone(), dim))
            .collect::<Result<Vec<_>>>()?,
        None => vec![a.clone(), b.clone()],
    };
    let stationary = starts
        .iter()
        .map(|w0| find_stationary_point(&dataset, w0, &scheme, s.tol, s.max_iters))
        .collect::<Result<Vec<_>>>()?;
    let constants = dataset_constants(&dataset);
    Ok(LandscapeReport {
        summary: summary(&dataset, &constants, &scheme)?,
        a,
        b,
        scheme,
        stationary,
        rows,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoryReport {
    pub constants: ProblemConstants,
    pub scheme: SelectionScheme,
    pub eta: f64,
    pub landscape: LandscapeSummary,
    pub sgd_point: StationaryReport,
    pub mkl_point: StationaryReport,
    pub bounds: BoundReport,
    pub steps: Vec<StepBoundReport>,
    /// Every applicable one-step bound held.
    pub all_steps_hold: bool,
}

/// Stationary points of SGD and min-k, their bound checks, and the
/// one-step bound along a recorded min-k trajectory.
pub fn theory_check(config: &TheoryConfig, base: Option<&Path>) -> Result<TheoryReport> {
    let dataset = config.problem.build(base)?;
    let c = &config.check;
    let scheme = SelectionScheme::min_k(c.k).with_replacement(c.replacement);
    let constants = dataset_constants(&dataset);
    let dim = dataset.dim();
    let w0 = vector_or(&c.w0, ParameterVector::zeros(dim), dim)?;
    let eta = c.eta.unwrap_or(0.5 / constants.lipschitz);
    if !(eta > 0.0) {
        return Err(Error::Config(format!(
            "check.eta must be positive, got {eta}"
        )));
    }

    let sgd_point =
        find_stationary_point(&dataset, &w0, &SelectionScheme::sgd(), c.tol, c.max_iters)?;
    let mkl_point = find_stationary_point(&dataset, &w0, &scheme, c.tol, c.max_iters)?;
    let lambda_est = match c.lambda_est {
        Some(l) => l,
        None => naive_lambda(&dataset, &scheme)?,
    };
    let bounds = check_bounds(
        &sgd_point.point,
        &mkl_point.point,
        &dataset,
        &scheme,
        lambda_est,
    )?;

    let mut cfg = OptimizerConfig::new(scheme, c.steps, c.seed);
    cfg.step_size = StepSize::Constant { eta };
    let trajectory = run(&dataset, &cfg, &w0)?;
    let steps = trajectory
        .records
        .iter()
        .take(c.steps)
        .map(|r| exact_expected_step_with(&dataset, &constants, &r.w, eta, &scheme))
        .collect::<Result<Vec<_>>>()?;
    let all_steps_hold = steps.iter().all(|s| !s.applicable || s.holds);

    Ok(TheoryReport {
        landscape: summary(&dataset, &constants, &scheme)?,
        constants,
        scheme,
        eta,
        sgd_point,
        mkl_point,
        bounds,
        steps,
        all_steps_hold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::config::parse_config;

    const TWO_POINT: &str = r#"
[problem]
kind = "explicit"
curvatures = [1.0, 1.0]
centers = [[0.0], [2.0]]
outliers = [1]
target = [0.0]

[check]
w0 = [0.5]
steps = 20
"#;

    #[test]
    fn two_point_theory_check() {
        let cfg: TheoryConfig = parse_config(TWO_POINT).unwrap();
        let r = theory_check(&cfg, None).unwrap();
        assert!((r.sgd_point.point[0] - 1.0).abs() < 1e-10);
        assert_eq!(r.mkl_point.point[0], 0.5);
        assert!(r.bounds.sgd_lower_bound.slack.abs() < 1e-9);
        assert_eq!(r.steps.len(), 20);
        assert!(r.all_steps_hold);
    }

    #[test]
    fn landscape_defaults_to_target_and_outlier() {
        let cfg: LandscapeConfig = parse_config(&TWO_POINT.replace(
            "[check]\nw0 = [0.5]\nsteps = 20\n",
            "[scan]\ngrid_points = 5\n",
        ))
        .unwrap();
        let r = landscape(&cfg, None).unwrap();
        assert_eq!(r.a.as_slice(), &[0.0]);
        assert_eq!(r.b.as_slice(), &[2.0]);
        assert_eq!(r.rows.len(), 5);
        assert_eq!(r.stationary.len(), 2);
        assert!(r.stationary.iter().all(|s| s.converged));
    }
}
