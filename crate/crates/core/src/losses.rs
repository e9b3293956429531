//! Convex loss components and the problem constants derived from them.
//!
//! Quadratics use the convention `f(w) = l * ||w - c||^2` with no one-half
//! factor, so their Hessian is `2 l I` and their gradient Lipschitz constant is
//! `2 l`. Regression components are `(x . w - y)^2` with `L_i = 2 ||x||^2`.
//! Multiclass logistic components use a class-major weight layout
//! (`w[c * dx + j]`) and the bound `L_i = ||x||^2 / 2`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vector::{distance_sq, dot, norm, ParameterVector};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LossKind {
    /// `l (w - c)^2` on a one-dimensional parameter.
    ScalarQuadratic { curvature: f64, center: f64 },
    /// `l ||w - c||^2`.
    VectorQuadratic { curvature: f64, center: Vec<f64> },
    /// `(x . w - y)^2`.
    LinearRegression { features: Vec<f64>, response: f64 },
    /// Softmax cross-entropy with `classes` linear scores.
    MulticlassLogistic {
        features: Vec<f64>,
        label: usize,
        classes: usize,
    },
}

/// One summand `f_i` of the objective.
///
/// The outlier flag is ground truth for evaluation; none of the optimizers
/// read it except the oracle baseline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossComponent {
    #[serde(flatten)]
    pub kind: LossKind,
    pub outlier: bool,
}

impl LossComponent {
    pub fn scalar_quadratic(curvature: f64, center: f64, outlier: bool) -> Result<Self> {
        check_curvature(curvature)?;
        if !center.is_finite() {
            return Err(Error::invalid("quadratic center must be finite"));
        }
        Ok(Self {
            kind: LossKind::ScalarQuadratic { curvature, center },
            outlier,
        })
    }

    pub fn vector_quadratic(curvature: f64, center: Vec<f64>, outlier: bool) -> Result<Self> {
        check_curvature(curvature)?;
        check_finite_nonempty(&center, "quadratic center")?;
        Ok(Self {
            kind: LossKind::VectorQuadratic { curvature, center },
            outlier,
        })
    }

    pub fn linear_regression(features: Vec<f64>, response: f64, outlier: bool) -> Result<Self> {
        check_finite_nonempty(&features, "regression features")?;
        if !response.is_finite() {
            return Err(Error::invalid("regression response must be finite"));
        }
        Ok(Self {
            kind: LossKind::LinearRegression { features, response },
            outlier,
        })
    }

    pub fn multiclass_logistic(
        features: Vec<f64>,
        label: usize,
        classes: usize,
        outlier: bool,
    ) -> Result<Self> {
        check_finite_nonempty(&features, "logistic features")?;
        if classes < 2 {
            return Err(Error::invalid(
                "multiclass logistic needs at least two classes",
            ));
        }
        if label >= classes {
            return Err(Error::invalid(format!(
                "label {label} out of range for {classes} classes"
            )));
        }
        Ok(Self {
            kind: LossKind::MulticlassLogistic {
                features,
                label,
                classes,
            },
            outlier,
        })
    }

    /// Dimension of the parameter vector this component acts on.
    pub fn dim(&self) -> usize {
        match &self.kind {
            LossKind::ScalarQuadratic { .. } => 1,
            LossKind::VectorQuadratic { center, .. } => center.len(),
            LossKind::LinearRegression { features, .. } => features.len(),
            LossKind::MulticlassLogistic {
                features, classes, ..
            } => features.len() * classes,
        }
    }

    pub fn is_quadratic(&self) -> bool {
        matches!(
            self.kind,
            LossKind::ScalarQuadratic { .. } | LossKind::VectorQuadratic { .. }
        )
    }

    /// Curvature `l_i` of a quadratic component.
    pub fn curvature(&self) -> Option<f64> {
        match &self.kind {
            LossKind::ScalarQuadratic { curvature, .. }
            | LossKind::VectorQuadratic { curvature, .. } => Some(*curvature),
            _ => None,
        }
    }

    /// Minimizer of a quadratic component.
    pub fn center(&self) -> Option<Vec<f64>> {
        match &self.kind {
            LossKind::ScalarQuadratic { center, .. } => Some(vec![*center]),
            LossKind::VectorQuadratic { center, .. } => Some(center.clone()),
            _ => None,
        }
    }

    /// Gradient Lipschitz constant `L_i`.
    pub fn lipschitz(&self) -> f64 {
        match &self.kind {
            LossKind::ScalarQuadratic { curvature, .. }
            | LossKind::VectorQuadratic { curvature, .. } => 2.0 * curvature,
            LossKind::LinearRegression { features, .. } => 2.0 * dot(features, features),
            // ||diag(p) - p p^T|| <= 1/2
            LossKind::MulticlassLogistic { features, .. } => 0.5 * dot(features, features),
        }
    }

    /// Loss at `w`; `w` must have length [`Self::dim`].
    pub(crate) fn value_at(&self, w: &[f64]) -> f64 {
        match &self.kind {
            LossKind::ScalarQuadratic { curvature, center } => {
                let r = w[0] - center;
                curvature * r * r
            }
            LossKind::VectorQuadratic { curvature, center } => curvature * distance_sq(w, center),
            LossKind::LinearRegression { features, response } => {
                let r = dot(features, w) - response;
                r * r
            }
            LossKind::MulticlassLogistic {
                features,
                label,
                classes,
            } => {
                let scores = logits(features, *classes, w);
                log_sum_exp(&scores) - scores[*label]
            }
        }
    }

    /// Writes the gradient at `w` into `out` (both of length [`Self::dim`]).
    pub(crate) fn gradient_into(&self, w: &[f64], out: &mut [f64]) {
        match &self.kind {
            LossKind::ScalarQuadratic { curvature, center } => {
                out[0] = 2.0 * curvature * (w[0] - center);
            }
            LossKind::VectorQuadratic { curvature, center } => {
                for ((o, wi), ci) in out.iter_mut().zip(w).zip(center) {
                    *o = 2.0 * curvature * (wi - ci);
                }
            }
            LossKind::LinearRegression { features, response } => {
                let r = 2.0 * (dot(features, w) - response);
                for (o, x) in out.iter_mut().zip(features) {
                    *o = r * x;
                }
            }
            LossKind::MulticlassLogistic {
                features,
                label,
                classes,
            } => {
                let probs = softmax(&logits(features, *classes, w));
                let dx = features.len();
                for (c, p) in probs.iter().enumerate() {
                    let coef = p - if c == *label { 1.0 } else { 0.0 };
                    for (o, x) in out[c * dx..(c + 1) * dx].iter_mut().zip(features) {
                        *o = coef * x;
                    }
                }
            }
        }
    }

    pub(crate) fn gradient_at(&self, w: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; w.len()];
        self.gradient_into(w, &mut g);
        g
    }

    /// Hessian at `w`.
    pub fn hessian(&self, w: &[f64]) -> DMatrix<f64> {
        let d = self.dim();
        match &self.kind {
            LossKind::ScalarQuadratic { curvature, .. }
            | LossKind::VectorQuadratic { curvature, .. } => {
                DMatrix::identity(d, d) * (2.0 * curvature)
            }
            LossKind::LinearRegression { features, .. } => {
                let x = nalgebra::DVector::from_column_slice(features);
                &x * x.transpose() * 2.0
            }
            LossKind::MulticlassLogistic {
                features, classes, ..
            } => {
                let probs = softmax(&logits(features, *classes, w));
                let dx = features.len();
                let mut h = DMatrix::zeros(d, d);
                for a in 0..*classes {
                    for b in 0..*classes {
                        let s = if a == b { probs[a] } else { 0.0 } - probs[a] * probs[b];
                        if s == 0.0 {
                            continue;
                        }
                        for i in 0..dx {
                            for j in 0..dx {
                                h[(a * dx + i, b * dx + j)] = s * features[i] * features[j];
                            }
                        }
                    }
                }
                h
            }
        }
    }
}

fn check_curvature(l: f64) -> Result<()> {
    if !(l.is_finite() && l > 0.0) {
        return Err(Error::invalid(format!(
            "quadratic curvature must be positive and finite, got {l}"
        )));
    }
    Ok(())
}

fn check_finite_nonempty(v: &[f64], what: &str) -> Result<()> {
    if v.is_empty() {
        return Err(Error::invalid(format!("{what} must be non-empty")));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid(format!("{what} must be finite")));
    }
    Ok(())
}

pub(crate) fn logits(features: &[f64], classes: usize, w: &[f64]) -> Vec<f64> {
    let dx = features.len();
    (0..classes)
        .map(|c| dot(&w[c * dx..(c + 1) * dx], features))
        .collect()
}

fn log_sum_exp(z: &[f64]) -> f64 {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

pub(crate) fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// `f_i(w)`.
pub fn loss_value(component: &LossComponent, w: &ParameterVector) -> Result<f64> {
    w.check_dim(component.dim())?;
    Ok(component.value_at(w.as_slice()))
}

/// `grad f_i(w)`.
pub fn loss_gradient(component: &LossComponent, w: &ParameterVector) -> Result<ParameterVector> {
    w.check_dim(component.dim())?;
    Ok(ParameterVector::from_raw(
        component.gradient_at(w.as_slice()),
    ))
}

/// A finite sum of loss components with its ground truth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    components: Vec<LossComponent>,
    target: ParameterVector,
    outliers: Vec<usize>,
    /// Nearest-to-farthest outlier distance ratio, for quadratic ensembles.
    pub gamma: Option<f64>,
    /// Set when `target` came out of a numerical solve rather than construction.
    pub target_is_numerical: bool,
}

impl Dataset {
    /// `target` is the clean optimum `w*`. The outlier set is read off the
    /// component flags.
    pub fn new(components: Vec<LossComponent>, target: ParameterVector) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::invalid("dataset needs at least one component"));
        }
        let d = target.dim();
        for (i, c) in components.iter().enumerate() {
            if c.dim() != d {
                return Err(Error::invalid(format!(
                    "component {i} acts on dimension {}, target has dimension {d}",
                    c.dim()
                )));
            }
        }
        let outliers: Vec<usize> = components
            .iter()
            .enumerate()
            .filter(|(_, c)| c.outlier)
            .map(|(i, _)| i)
            .collect();
        if outliers.len() == components.len() {
            return Err(Error::invalid("outlier fraction must be < 1"));
        }
        Ok(Self {
            components,
            target,
            outliers,
            gamma: None,
            target_is_numerical: false,
        })
    }

    pub fn n(&self) -> usize {
        self.components.len()
    }

    pub fn dim(&self) -> usize {
        self.target.dim()
    }

    pub fn components(&self) -> &[LossComponent] {
        &self.components
    }

    pub fn target(&self) -> &ParameterVector {
        &self.target
    }

    pub fn outliers(&self) -> &[usize] {
        &self.outliers
    }

    pub fn is_outlier(&self, i: usize) -> bool {
        self.components[i].outlier
    }

    pub fn n_outliers(&self) -> usize {
        self.outliers.len()
    }

    pub fn n_clean(&self) -> usize {
        self.n() - self.n_outliers()
    }

    /// `|O| / n`.
    pub fn epsilon(&self) -> f64 {
        self.n_outliers() as f64 / self.n() as f64
    }

    pub fn clean_indices(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| !self.is_outlier(i)).collect()
    }

    /// The clean components, in their original order, with the same target.
    pub fn clean_subset(&self) -> Dataset {
        let components = self
            .components
            .iter()
            .filter(|c| !c.outlier)
            .cloned()
            .collect();
        Dataset {
            components,
            target: self.target.clone(),
            outliers: Vec::new(),
            gamma: None,
            target_is_numerical: self.target_is_numerical,
        }
    }

    /// Per-component losses at `w`.
    pub fn losses(&self, w: &ParameterVector) -> Result<Vec<f64>> {
        w.check_dim(self.dim())?;
        Ok(self.losses_at(w.as_slice()))
    }

    pub(crate) fn losses_at(&self, w: &[f64]) -> Vec<f64> {
        self.components.iter().map(|c| c.value_at(w)).collect()
    }

    /// Mean loss over all components.
    pub fn average_loss(&self, w: &ParameterVector) -> Result<f64> {
        Ok(self.losses(w)?.iter().sum::<f64>() / self.n() as f64)
    }

    /// `sup_i L_i`.
    pub fn max_lipschitz(&self) -> f64 {
        self.components
            .iter()
            .map(LossComponent::lipschitz)
            .fold(0.0, f64::max)
    }

    /// Norm of the clean-average gradient at the target; zero when the
    /// target is the exact clean optimum.
    pub fn clean_optimality_residual(&self) -> f64 {
        let d = self.dim();
        let mut sum = vec![0.0; d];
        let mut g = vec![0.0; d];
        for c in self.components.iter().filter(|c| !c.outlier) {
            c.gradient_into(self.target.as_slice(), &mut g);
            for (s, gi) in sum.iter_mut().zip(&g) {
                *s += gi;
            }
        }
        norm(&sum) / self.n_clean() as f64
    }

    /// `max_{i in O} ||grad f_i(w)||`, zero without outliers.
    pub fn outlier_gradient_bound(&self, w: &[f64]) -> f64 {
        self.outliers
            .iter()
            .map(|&i| norm(&self.components[i].gradient_at(w)))
            .fold(0.0, f64::max)
    }
}

/// Constants of a problem instance that feed the bound checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemConstants {
    /// `max_i L_i`.
    #[serde(rename = "L")]
    pub lipschitz: f64,
    /// Strong convexity of the clean average, at the target.
    pub lambda_good: f64,
    /// Strong convexity of the full average, at the target.
    #[serde(rename = "lambda_F")]
    pub lambda_full: f64,
    /// `max_{i in O} ||grad f_i(w*)||`.
    #[serde(rename = "G")]
    pub outlier_gradient: f64,
    /// `l_max / l_min` for quadratics, `L_max / L_min` otherwise.
    pub kappa: f64,
    pub epsilon: f64,
    /// The clean Hessian is (numerically) singular; `lambda_good` is reported as 0.
    pub degenerate: bool,
}

/// Computes `L`, `lambda_good`, `lambda_F`, `G`, `kappa` and `epsilon`.
///
/// Strong convexity parameters are the smallest eigenvalues of the averaged
/// Hessians at the target, which is exact for quadratic and regression losses.
pub fn dataset_constants(dataset: &Dataset) -> ProblemConstants {
    let lipschitz = dataset.max_lipschitz();
    let target = dataset.target.as_slice();

    let all_quadratic = dataset.components.iter().all(LossComponent::is_quadratic);
    let (lo, hi) = dataset
        .components
        .iter()
        .map(|c| {
            if all_quadratic {
                c.curvature().unwrap_or(1.0)
            } else {
                c.lipschitz()
            }
        })
        .fold((f64::INFINITY, 0.0_f64), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
    let kappa = if lo > 0.0 { hi / lo } else { f64::INFINITY };

    let (lambda_good, lambda_full) = if all_quadratic {
        // 2 l I per component: the averaged Hessian is a multiple of I.
        let mean = |it: &mut dyn Iterator<Item = f64>| {
            let (s, n) = it.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
            s / n as f64
        };
        let good = mean(
            &mut dataset
                .components
                .iter()
                .filter(|c| !c.outlier)
                .map(|c| 2.0 * c.curvature().unwrap()),
        );
        let full = mean(
            &mut dataset
                .components
                .iter()
                .map(|c| 2.0 * c.curvature().unwrap()),
        );
        (good, full)
    } else {
        let d = dataset.dim();
        let mut h_good = DMatrix::zeros(d, d);
        let mut h_full = DMatrix::zeros(d, d);
        for c in &dataset.components {
            let h = c.hessian(target);
            if !c.outlier {
                h_good += &h;
            }
            h_full += h;
        }
        h_good /= dataset.n_clean() as f64;
        h_full /= dataset.n() as f64;
        (min_eigenvalue(h_good), min_eigenvalue(h_full))
    };

    let threshold = 1e-10 * lipschitz.max(f64::MIN_POSITIVE);
    let degenerate = lambda_good <= threshold;
    ProblemConstants {
        lipschitz,
        lambda_good: if degenerate { 0.0 } else { lambda_good },
        lambda_full: if lambda_full <= threshold {
            0.0
        } else {
            lambda_full
        },
        outlier_gradient: dataset.outlier_gradient_bound(target),
        kappa,
        epsilon: dataset.epsilon(),
        degenerate,
    }
}

fn min_eigenvalue(m: DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}
