//! Landscape conditions and distance bounds, evaluated on concrete instances.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::{dataset_constants, Dataset, ProblemConstants};
use crate::sampling::{rank_probabilities, SelectionScheme};
use crate::surrogate::{ordering, OrderedLossProfile};
use crate::vector::{distance, distance_sq, dot, ParameterVector};

/// Absolute tolerance for every inequality check in this module.
pub const BOUND_TOLERANCE: f64 = 1e-9;

/// Largest probability mass the outliers can hold: the sum of the first
/// `n_outliers` rank probabilities.
pub fn p_hat_max(n: usize, n_outliers: usize, scheme: &SelectionScheme) -> Result<f64> {
    if n_outliers > n {
        return Err(Error::invalid(format!(
            "{n_outliers} outliers among {n} components"
        )));
    }
    Ok(rank_probabilities(n, scheme)?.top_mass(n_outliers))
}

/// `p_hat < 1 / (1 + kappa^(3/2))`.
pub fn condition1(kappa: f64, p_hat: f64) -> bool {
    p_hat < condition1_threshold(kappa)
}

pub fn condition1_threshold(kappa: f64) -> f64 {
    1.0 / (1.0 + kappa * kappa.sqrt())
}

/// Point on the segment from `w_star` to `w_b` where
/// `l_m ||w - w_star||^2 = l_M ||w - w_b||^2`.
pub fn w_tilde(
    l_m: f64,
    l_big: f64,
    w_star: &ParameterVector,
    w_b: &ParameterVector,
) -> Result<ParameterVector> {
    if !(l_m > 0.0 && l_big > 0.0 && l_m.is_finite() && l_big.is_finite()) {
        return Err(Error::invalid(format!(
            "curvatures must be positive, got {l_m} and {l_big}"
        )));
    }
    w_b.check_dim(w_star.dim())?;
    let (a, b) = (l_m.sqrt(), l_big.sqrt());
    let coords = w_star
        .as_slice()
        .iter()
        .zip(w_b.as_slice())
        .map(|(s, o)| (a * s + b * o) / (a + b))
        .collect();
    Ok(ParameterVector::from_raw(coords))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LandscapeCondition {
    pub kappa: f64,
    pub gamma: f64,
    pub cos_theta_max: f64,
    pub p_hat_max: f64,
    pub q: f64,
    /// `1 / (1 + kappa q)`.
    pub bound: f64,
    pub holds: bool,
}

/// The vector-case landscape condition: `q > 0` and `p_hat <= 1 / (1 + kappa q)`.
pub fn vector_condition(
    kappa: f64,
    gamma: f64,
    cos_theta_max: f64,
    p_hat: f64,
) -> Result<LandscapeCondition> {
    if !(kappa >= 1.0) {
        return Err(Error::invalid(format!("kappa must be >= 1, got {kappa}")));
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::invalid(format!(
            "gamma must lie in (0, 1], got {gamma}"
        )));
    }
    if !(-1.0..=1.0).contains(&cos_theta_max) {
        return Err(Error::invalid(format!(
            "cosine {cos_theta_max} outside [-1, 1]"
        )));
    }
    let q = cos_theta_max / gamma - 1.0 + kappa.sqrt() * cos_theta_max / gamma;
    let bound = 1.0 / (1.0 + kappa * q);
    Ok(LandscapeCondition {
        kappa,
        gamma,
        cos_theta_max,
        p_hat_max: p_hat,
        q,
        bound,
        holds: q > 0.0 && p_hat <= bound,
    })
}

/// `(1 - epsilon) L epsilon^(k-1) / lambda`.
pub fn relative_alpha(epsilon: f64, lipschitz: f64, k: usize, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::Degenerate(format!(
            "strong convexity estimate must be positive, got {lambda}"
        )));
    }
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::invalid(format!("epsilon {epsilon} outside [0, 1)")));
    }
    if k == 0 {
        return Err(Error::invalid("k must be >= 1"));
    }
    Ok((1.0 - epsilon) * lipschitz * epsilon.powi(k as i32 - 1) / lambda)
}

/// `min_r p_r * n * lambda_F`, a lower bound on the restricted secant
/// constant of the surrogate.
pub fn naive_lambda(dataset: &Dataset, scheme: &SelectionScheme) -> Result<f64> {
    let dist = rank_probabilities(dataset.n(), scheme)?;
    let p_min = dist.probs().iter().copied().fold(f64::INFINITY, f64::min);
    Ok(p_min * dataset.n() as f64 * dataset_constants(dataset).lambda_full)
}

/// One inequality `lhs <= rhs` (or `<` where stated). `holds` is `None`
/// when its hypotheses are not met.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`.
    pub slack: f64,
    pub holds: Option<bool>,
}

impl InequalityCheck {
    fn le(lhs: f64, rhs: f64, applicable: bool) -> Self {
        Self {
            lhs,
            rhs,
            slack: rhs - lhs,
            holds: applicable.then_some(lhs <= rhs + BOUND_TOLERANCE),
        }
    }

    fn lt(lhs: f64, rhs: f64, applicable: bool) -> Self {
        Self {
            lhs,
            rhs,
            slack: rhs - lhs,
            holds: applicable.then_some(lhs < rhs + BOUND_TOLERANCE),
        }
    }

    /// True unless the check was applicable and failed.
    pub fn ok(&self) -> bool {
        self.holds != Some(false)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub epsilon: f64,
    pub k: usize,
    pub lipschitz: f64,
    pub lambda_est: f64,
    /// `None` when `lambda_est` is not positive.
    pub alpha: Option<f64>,
    pub sgd_distance: f64,
    pub mkl_distance: f64,
    /// Largest outlier gradient norm at the target, SGD point and MKL point.
    pub g_at_target: f64,
    pub g_at_sgd: f64,
    pub g_at_mkl: f64,
    /// Rank probability mass held by outliers at the MKL point.
    pub outlier_mass_at_mkl: f64,
    /// Clean losses are all strictly below outlier losses at the MKL point.
    pub mkl_in_ball: bool,
    /// `eps G(w_sgd) <= (1 - eps) L ||w_sgd - w*||`.
    pub sgd_lower_bound: InequalityCheck,
    /// `||w_mkl - w*|| <= m_O G(w*) / lambda_est`.
    pub mkl_upper_bound: InequalityCheck,
    /// `||sum_{clean} p_i grad f_i(w_mkl)|| <= (1 - m_O) L ||w_mkl - w*||`.
    pub clean_pull_distance: InequalityCheck,
    /// `||sum_{clean} p_i grad f_i(w_mkl)|| <= m_O G(w_mkl)`.
    pub clean_pull_gradient: InequalityCheck,
    /// `||w_mkl - w*|| < alpha ||w_sgd - w*||`.
    pub relative_bound: InequalityCheck,
}

impl BoundReport {
    pub fn sgd_lower_bound_ok(&self) -> bool {
        self.sgd_lower_bound.ok()
    }

    pub fn mkl_upper_bound_ok(&self) -> bool {
        self.mkl_upper_bound.ok()
    }

    pub fn clean_pull_ok(&self) -> bool {
        self.clean_pull_distance.ok() && self.clean_pull_gradient.ok()
    }

    pub fn relative_bound_ok(&self) -> bool {
        self.relative_bound.ok()
    }

    /// Whether the relative bound was actually tested.
    pub fn relative_bound_applicable(&self) -> bool {
        self.relative_bound.holds.is_some()
    }
}

/// Evaluates the SGD lower bound, the MKL upper bound, the clean-gradient
/// bound and the relative bound at the given stationary points.
///
/// `w_sgd` and `w_mkl` must be stationary points of plain SGD and of the
/// min-k surrogate under `scheme`.
pub fn check_bounds(
    w_sgd: &ParameterVector,
    w_mkl: &ParameterVector,
    dataset: &Dataset,
    scheme: &SelectionScheme,
    lambda_est: f64,
) -> Result<BoundReport> {
    let d = dataset.dim();
    w_sgd.check_dim(d)?;
    w_mkl.check_dim(d)?;
    let constants = dataset_constants(dataset);
    let eps = constants.epsilon;
    let lip = constants.lipschitz;
    let target = dataset.target().as_slice();

    let sgd_distance = distance(w_sgd.as_slice(), target);
    let mkl_distance = distance(w_mkl.as_slice(), target);
    let g_at_target = constants.outlier_gradient;
    let g_at_sgd = dataset.outlier_gradient_bound(w_sgd.as_slice());
    let g_at_mkl = dataset.outlier_gradient_bound(w_mkl.as_slice());

    let probs = rank_probabilities(dataset.n(), scheme)?;
    let profile = ordering(dataset, w_mkl)?;
    let mkl_in_ball = profile.clean_first(dataset);
    let ranks = profile.ranks();
    let outlier_mass_at_mkl: f64 = dataset
        .outliers()
        .iter()
        .map(|&i| probs.probs()[ranks[i]])
        .sum();

    let mut clean_sum = vec![0.0; d];
    for i in dataset.clean_indices() {
        let g = dataset.components()[i].gradient_at(w_mkl.as_slice());
        let p = probs.probs()[ranks[i]];
        for (s, gi) in clean_sum.iter_mut().zip(&g) {
            *s += p * gi;
        }
    }
    let clean_norm = dot(&clean_sum, &clean_sum).sqrt();

    let alpha = if lambda_est > 0.0 {
        Some(relative_alpha(eps, lip, scheme.k, lambda_est)?)
    } else {
        None
    };
    let mkl_rhs = if lambda_est > 0.0 {
        outlier_mass_at_mkl * g_at_target / lambda_est
    } else {
        f64::INFINITY
    };
    let relative_bound_applicable = mkl_in_ball && alpha.is_some_and(|a| a < 1.0);

    Ok(BoundReport {
        epsilon: eps,
        k: scheme.k,
        lipschitz: lip,
        lambda_est,
        alpha,
        sgd_distance,
        mkl_distance,
        g_at_target,
        g_at_sgd,
        g_at_mkl,
        outlier_mass_at_mkl,
        mkl_in_ball,
        sgd_lower_bound: InequalityCheck::le(
            eps * g_at_sgd,
            (1.0 - eps) * lip * sgd_distance,
            true,
        ),
        mkl_upper_bound: InequalityCheck::le(
            mkl_distance,
            mkl_rhs,
            mkl_in_ball && lambda_est > 0.0,
        ),
        clean_pull_distance: InequalityCheck::le(
            clean_norm,
            (1.0 - outlier_mass_at_mkl) * lip * mkl_distance,
            mkl_in_ball,
        ),
        clean_pull_gradient: InequalityCheck::le(
            clean_norm,
            outlier_mass_at_mkl * g_at_mkl,
            mkl_in_ball,
        ),
        relative_bound: InequalityCheck::lt(
            mkl_distance,
            alpha.unwrap_or(f64::INFINITY) * sgd_distance,
            relative_bound_applicable,
        ),
    })
}

/// The four residual terms of the one-step distance bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualTerms {
    /// `-2 sum_{clean} p_i <w - w*, grad f_i(w*)>`.
    pub clean_alignment: f64,
    /// `2 eta sum_{O} p_i ||grad f_i(w*)||^2`.
    pub outlier_target_gradient: f64,
    /// `eta sum_{O} p_i ||grad f_i(w)||^2`.
    pub outlier_current_gradient: f64,
    /// `2 sum_{O} p_i (f_i(w*) - f_i(w))`.
    pub outlier_value_gap: f64,
    /// `2 eta sum_{clean} p_i ||grad f_i(w*)||^2`, absent from the four-term form.
    pub clean_target_gradient: f64,
}

impl ResidualTerms {
    /// `R_t` in its four-term form.
    pub fn total(&self) -> f64 {
        self.clean_alignment
            + self.outlier_target_gradient
            + self.outlier_current_gradient
            + self.outlier_value_gap
    }

    /// `R_t` with the clean noise term carried over from the derivation,
    /// so that `eta * R` is the residual of the full inequality.
    pub fn total_with_clean_noise(&self) -> f64 {
        self.clean_alignment
            + self.clean_target_gradient
            + self.outlier_current_gradient
            + self.outlier_value_gap
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepBoundReport {
    pub eta: f64,
    /// `eta <= 1 / sup_i L_i` and `lambda_good > 0`.
    pub applicable: bool,
    pub psi: f64,
    /// Four-term `R_t`.
    pub r_t: f64,
    pub terms: ResidualTerms,
    pub distance_sq: f64,
    /// `sum_r p_r ||w - eta grad f_{m_r}(w) - w*||^2`.
    pub exact_expected_next_sq: f64,
    /// `(1 - psi) ||w - w*||^2 + eta R_t`.
    pub bound_value: f64,
    pub holds: bool,
    /// Same bound with the clean noise term, valid when clean gradients
    /// do not vanish at the target.
    pub bound_value_with_clean_noise: f64,
    pub holds_with_clean_noise: bool,
}

/// Exact conditional expectation of `||w_{t+1} - w*||^2` after one min-k
/// step from `w`, against the one-step distance bound.
pub fn exact_expected_step(
    dataset: &Dataset,
    w: &ParameterVector,
    eta: f64,
    scheme: &SelectionScheme,
) -> Result<StepBoundReport> {
    let constants = dataset_constants(dataset);
    exact_expected_step_with(dataset, &constants, w, eta, scheme)
}

/// As [`exact_expected_step`] with precomputed constants.
pub fn exact_expected_step_with(
    dataset: &Dataset,
    constants: &ProblemConstants,
    w: &ParameterVector,
    eta: f64,
    scheme: &SelectionScheme,
) -> Result<StepBoundReport> {
    w.check_dim(dataset.dim())?;
    if !(eta > 0.0) {
        return Err(Error::invalid(format!(
            "step size must be positive, got {eta}"
        )));
    }
    let probs = rank_probabilities(dataset.n(), scheme)?;
    let profile = ordering(dataset, w)?;
    step_report(
        dataset,
        constants,
        w.as_slice(),
        eta,
        probs.probs(),
        &profile,
    )
}

fn step_report(
    dataset: &Dataset,
    constants: &ProblemConstants,
    w: &[f64],
    eta: f64,
    probs: &[f64],
    profile: &OrderedLossProfile,
) -> Result<StepBoundReport> {
    let target = dataset.target().as_slice();
    let comps = dataset.components();
    let ranks = profile.ranks();
    let delta: Vec<f64> = w.iter().zip(target).map(|(a, b)| a - b).collect();
    let dist_sq = dot(&delta, &delta);

    let mut expected = 0.0;
    let mut next = vec![0.0; w.len()];
    let mut terms = ResidualTerms {
        clean_alignment: 0.0,
        outlier_target_gradient: 0.0,
        outlier_current_gradient: 0.0,
        outlier_value_gap: 0.0,
        clean_target_gradient: 0.0,
    };
    let mut min_clean_p = f64::INFINITY;
    for (i, c) in comps.iter().enumerate() {
        let p = probs[ranks[i]];
        let g = c.gradient_at(w);
        for ((x, wi), gi) in next.iter_mut().zip(w).zip(&g) {
            *x = wi - eta * gi;
        }
        expected += p * distance_sq(&next, target);

        let g_star = c.gradient_at(target);
        let g_star_sq = dot(&g_star, &g_star);
        if c.outlier {
            terms.outlier_target_gradient += 2.0 * eta * p * g_star_sq;
            terms.outlier_current_gradient += eta * p * dot(&g, &g);
            terms.outlier_value_gap += 2.0 * p * (c.value_at(target) - c.value_at(w));
        } else {
            min_clean_p = min_clean_p.min(p);
            terms.clean_alignment -= 2.0 * p * dot(&delta, &g_star);
            terms.clean_target_gradient += 2.0 * eta * p * g_star_sq;
        }
    }

    let lip = constants.lipschitz;
    let psi = 2.0 * eta * constants.lambda_good * (1.0 - eta * lip) * min_clean_p;
    let r_t = terms.total();
    let bound_value = (1.0 - psi) * dist_sq + eta * r_t;
    let bound_value_with_clean_noise = (1.0 - psi) * dist_sq + eta * terms.total_with_clean_noise();
    let applicable = eta <= 1.0 / lip && !constants.degenerate;
    Ok(StepBoundReport {
        eta,
        applicable,
        psi,
        r_t,
        terms,
        distance_sq: dist_sq,
        exact_expected_next_sq: expected,
        bound_value,
        holds: expected <= bound_value + BOUND_TOLERANCE,
        bound_value_with_clean_noise,
        holds_with_clean_noise: expected <= bound_value_with_clean_noise + BOUND_TOLERANCE,
    })
}

/// `R_t` when clean components vanish at the target: only outlier terms remain.
pub fn outlier_residual(
    dataset: &Dataset,
    w: &ParameterVector,
    eta: f64,
    scheme: &SelectionScheme,
) -> Result<f64> {
    w.check_dim(dataset.dim())?;
    let probs = rank_probabilities(dataset.n(), scheme)?;
    let ranks = ordering(dataset, w)?.ranks();
    let target = dataset.target().as_slice();
    let w = w.as_slice();
    Ok(dataset
        .outliers()
        .iter()
        .map(|&i| {
            let c = &dataset.components()[i];
            let gs = c.gradient_at(target);
            let gw = c.gradient_at(w);
            probs.probs()[ranks[i]]
                * (2.0 * eta * dot(&gs, &gs)
                    + eta * dot(&gw, &gw)
                    + 2.0 * (c.value_at(target) - c.value_at(w)))
        })
        .sum())
}

/// Bounds on clean-gradient noise at the target under which min-k beats
/// plain SGD, scaled by `||w_t - w*||`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseThresholds {
    /// Bound on each `||grad f_i(w*)||`, `i` clean.
    pub per_sample: f64,
    /// Bound on `sum_{clean} ||grad f_i(w*)||^2`.
    pub aggregate: f64,
    /// `eta <= 1 / sup L_i` and `n_good <= n / 2`.
    pub applicable: bool,
}

pub fn clean_noise_thresholds(
    constants: &ProblemConstants,
    eta: f64,
    n: usize,
    n_good: usize,
    delta_norm: f64,
) -> NoiseThresholds {
    let lam = constants.lambda_good;
    let c = 1.0 - eta * constants.lipschitz;
    let nf = n as f64;
    let g = n_good as f64;
    let per = (lam * c / nf) / (1.0 + (1.0 + eta * c * lam / nf).sqrt());
    let agg = (lam * c * g / nf) / (nf.sqrt() + (nf.sqrt() + eta * c * lam * g / nf).sqrt());
    NoiseThresholds {
        per_sample: per * delta_norm,
        aggregate: agg * agg * delta_norm * delta_norm,
        applicable: c >= 0.0 && 2 * n_good <= n,
    }
}

/// The stationary point of a quadratic ensemble whose ordering is fixed at
/// `profile`: `sum_r p_r l_r c_r / sum_r p_r l_r`.
pub fn quadratic_fixed_point(
    dataset: &Dataset,
    profile: &OrderedLossProfile,
    scheme: &SelectionScheme,
) -> Result<ParameterVector> {
    if profile.permutation.len() != dataset.n() {
        return Err(Error::DimensionMismatch {
            expected: dataset.n(),
            got: profile.permutation.len(),
        });
    }
    let probs = rank_probabilities(dataset.n(), scheme)?;
    let mut num = vec![0.0; dataset.dim()];
    let mut den = 0.0;
    for (&i, &p) in profile.permutation.iter().zip(probs.probs()) {
        let c = &dataset.components()[i];
        let (l, center) = match (c.curvature(), c.center()) {
            (Some(l), Some(center)) => (l, center),
            _ => {
                return Err(Error::invalid(
                    "closed-form fixed point needs quadratic components",
                ))
            }
        };
        for (x, ci) in num.iter_mut().zip(&center) {
            *x += p * l * ci;
        }
        den += p * l;
    }
    Ok(ParameterVector::from_raw(
        num.into_iter().map(|x| x / den).collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::LossComponent;

    fn pv(v: &[f64]) -> ParameterVector {
        ParameterVector::new(v.to_vec()).unwrap()
    }

    fn two_point() -> Dataset {
        let c = vec![
            LossComponent::scalar_quadratic(1.0, 0.0, false).unwrap(),
            LossComponent::scalar_quadratic(1.0, 2.0, true).unwrap(),
        ];
        Dataset::new(c, ParameterVector::scalar(0.0)).unwrap()
    }

    #[test]
    fn p_hat_examples() {
        let s = SelectionScheme::min_k(2);
        assert!((p_hat_max(3, 1, &s).unwrap() - 5.0 / 9.0).abs() < 1e-15);
        assert_eq!(p_hat_max(3, 0, &s).unwrap(), 0.0);
        assert!((p_hat_max(3, 3, &s).unwrap() - 1.0).abs() < 1e-15);
        assert!(p_hat_max(3, 4, &s).is_err());
    }

    #[test]
    fn condition1_examples() {
        assert!(condition1(1.0, 0.4));
        assert!(!condition1(1.0, 0.5));
        assert!(!condition1(4.0, 0.2));
        assert!((condition1_threshold(4.0) - 1.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn w_tilde_examples() {
        assert_eq!(w_tilde(2.0, 2.0, &pv(&[0.0]), &pv(&[2.0])).unwrap()[0], 1.0);
        assert_eq!(w_tilde(1.0, 4.0, &pv(&[0.0]), &pv(&[3.0])).unwrap()[0], 2.0);
        assert!(w_tilde(0.0, 4.0, &pv(&[0.0]), &pv(&[3.0])).is_err());
    }

    #[test]
    fn vector_condition_examples() {
        let c = vector_condition(1.0, 1.0, 1.0, 0.3).unwrap();
        assert_eq!((c.q, c.bound, c.holds), (1.0, 0.5, true));
        let c = vector_condition(3.0, 0.7, 0.0, 0.0).unwrap();
        assert_eq!(c.q, -1.0);
        assert!(!c.holds);
        let c = vector_condition(4.0, 0.5, 1.0, 0.01).unwrap();
        assert_eq!(c.q, 5.0);
        assert!((c.bound - 1.0 / 21.0).abs() < 1e-15);
        assert!(vector_condition(0.5, 1.0, 1.0, 0.1).is_err());
        assert!(vector_condition(1.0, 0.0, 1.0, 0.1).is_err());
    }

    #[test]
    fn alpha_examples() {
        assert_eq!(relative_alpha(0.0, 2.0, 3, 1.0).unwrap(), 0.0);
        assert_eq!(relative_alpha(0.2, 2.0, 1, 1.0).unwrap(), 0.8 * 2.0);
        assert!((relative_alpha(0.1, 1.0, 3, 0.5).unwrap() - 0.018).abs() < 1e-15);
        assert!(matches!(
            relative_alpha(0.1, 1.0, 3, 0.0),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn sgd_lower_bound_is_tight_on_two_point() {
        let ds = two_point();
        let w_sgd = ParameterVector::scalar(1.0);
        let w_mkl = ParameterVector::scalar(0.5);
        let s = SelectionScheme::min_k(2);
        let lam = naive_lambda(&ds, &s).unwrap();
        let r = check_bounds(&w_sgd, &w_mkl, &ds, &s, lam).unwrap();
        assert_eq!(r.sgd_lower_bound.lhs, 1.0);
        assert_eq!(r.sgd_lower_bound.rhs, 1.0);
        assert_eq!(r.sgd_lower_bound.slack, 0.0);
        assert_eq!(r.sgd_lower_bound.holds, Some(true));
        assert!(r.mkl_in_ball);
        assert!(r.clean_pull_ok());
    }

    #[test]
    fn clean_dataset_forces_zero_mkl_bound() {
        let c = vec![
            LossComponent::scalar_quadratic(1.0, 0.0, false).unwrap(),
            LossComponent::scalar_quadratic(3.0, 0.0, false).unwrap(),
        ];
        let ds = Dataset::new(c, ParameterVector::scalar(0.0)).unwrap();
        let s = SelectionScheme::min_k(2);
        let lam = naive_lambda(&ds, &s).unwrap();
        let w = ParameterVector::scalar(0.0);
        let r = check_bounds(&w, &w, &ds, &s, lam).unwrap();
        assert_eq!(r.mkl_upper_bound.rhs, 0.0);
        assert_eq!(r.mkl_upper_bound.holds, Some(true));
        assert_eq!(r.alpha, Some(0.0));
        assert_eq!(r.relative_bound.holds, Some(true));
    }

    #[test]
    fn single_sample_step() {
        let c = vec![LossComponent::scalar_quadratic(1.0, 1.0, false).unwrap()];
        let ds = Dataset::new(c, ParameterVector::scalar(1.0)).unwrap();
        let r = exact_expected_step(
            &ds,
            &ParameterVector::scalar(2.0),
            0.25,
            &SelectionScheme::min_k(2),
        )
        .unwrap();
        assert_eq!(r.exact_expected_next_sq, 0.25);
        assert_eq!(r.psi, 0.5);
        assert_eq!(r.r_t, 0.0);
        assert_eq!(r.bound_value, 0.5);
        assert!(r.holds && r.applicable);
    }

    #[test]
    fn oversized_step_is_not_applicable() {
        let c = vec![LossComponent::scalar_quadratic(1.0, 1.0, false).unwrap()];
        let ds = Dataset::new(c, ParameterVector::scalar(1.0)).unwrap();
        let r = exact_expected_step(
            &ds,
            &ParameterVector::scalar(2.0),
            0.75,
            &SelectionScheme::sgd(),
        )
        .unwrap();
        assert!(!r.applicable);
    }

    #[test]
    fn noise_threshold_examples() {
        let k = ProblemConstants {
            lipschitz: 2.0,
            lambda_good: 1.0,
            lambda_full: 1.0,
            outlier_gradient: 0.0,
            kappa: 1.0,
            epsilon: 0.5,
            degenerate: false,
        };
        let t = clean_noise_thresholds(&k, 0.25, 4, 2, 1.0);
        // Second coding: c = 1/2, lambda c / n = 1/8.
        let per = 0.125 / (1.0 + (1.0_f64 + 0.25 * 0.125).sqrt());
        let agg = (0.125 * 2.0) / (2.0 + (2.0_f64 + 0.25 * 0.25).sqrt());
        assert!((t.per_sample - per).abs() < 1e-12);
        assert!((t.aggregate - agg * agg).abs() < 1e-12);
        assert!(t.applicable);
        let zero = clean_noise_thresholds(
            &ProblemConstants {
                lambda_good: 0.0,
                ..k.clone()
            },
            0.25,
            4,
            2,
            1.0,
        );
        assert_eq!((zero.per_sample, zero.aggregate), (0.0, 0.0));
        let z = clean_noise_thresholds(&k, 0.25, 4, 2, 0.0);
        assert_eq!((z.per_sample, z.aggregate), (0.0, 0.0));
    }

    #[test]
    fn fixed_point_of_two_point() {
        let ds = two_point();
        let s = SelectionScheme::min_k(2);
        let prof = ordering(&ds, &ParameterVector::scalar(0.5)).unwrap();
        // (3/4 * 0 + 1/4 * 2) / 1 = 0.5.
        assert_eq!(quadratic_fixed_point(&ds, &prof, &s).unwrap()[0], 0.5);
    }
}
