//! Synthetic problem generators with ground-truth metadata.

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::{Dataset, LossComponent};
use crate::sampling::{seeded_rng, SeededRng};
use crate::vector::{distance, dot, norm, ParameterVector};

const REGRESSION_STREAM: u64 = 11;
const QUADRATIC_STREAM: u64 = 12;
const CLASSIFICATION_STREAM: u64 = 13;

fn gaussian_vec(rng: &mut SeededRng, d: usize) -> Vec<f64> {
    (0..d).map(|_| StandardNormal.sample(rng)).collect()
}

fn unit_vec(rng: &mut SeededRng, d: usize) -> Vec<f64> {
    loop {
        let v = gaussian_vec(rng, d);
        let n = norm(&v);
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// `floor(epsilon n)` distinct positions, drawn uniformly.
fn outlier_positions(rng: &mut SeededRng, n: usize, epsilon: f64) -> Vec<bool> {
    let m = (epsilon * n as f64 + 1e-9).floor() as usize;
    let mut flags = vec![false; n];
    for i in sample(rng, n, m.min(n)) {
        flags[i] = true;
    }
    flags
}

fn check_fraction(epsilon: f64) -> Result<()> {
    if (0.0..1.0).contains(&epsilon) {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "outlier fraction {epsilon} outside [0, 1)"
        )))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutlierRule {
    /// Responses from a shifted parameter `w_B = w* + shift u`.
    #[default]
    Shifted,
    /// Responses drawn from `N(0, 1)`.
    GaussianResponse,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionSpec {
    pub d: usize,
    pub n: usize,
    /// Variance of the first feature; the others have unit variance.
    pub kappa: f64,
    pub epsilon: f64,
    pub noise_sigma: f64,
    pub outlier_shift: f64,
    pub outlier_rule: OutlierRule,
    pub seed: u64,
}

impl RegressionSpec {
    pub fn new(d: usize, n: usize, kappa: f64, epsilon: f64, seed: u64) -> Self {
        Self {
            d,
            n,
            kappa,
            epsilon,
            noise_sigma: 0.0,
            outlier_shift: 5.0,
            outlier_rule: OutlierRule::Shifted,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.d == 0 || self.n == 0 {
            return Err(Error::invalid("regression needs d >= 1 and n >= 1"));
        }
        if !(self.kappa >= 1.0 && self.kappa.is_finite()) {
            return Err(Error::invalid(format!(
                "kappa must be >= 1, got {}",
                self.kappa
            )));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite())
            || !self.outlier_shift.is_finite()
        {
            return Err(Error::invalid(
                "noise level and outlier shift must be finite, noise >= 0",
            ));
        }
        check_fraction(self.epsilon)
    }
}

/// Squared-loss regression with features `x ~ N(0, diag(kappa, 1, ..., 1))`.
pub fn gen_regression(spec: &RegressionSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = seeded_rng(spec.seed, REGRESSION_STREAM);
    let d = spec.d;
    let w_star = gaussian_vec(&mut rng, d);
    let u = unit_vec(&mut rng, d);
    let w_b: Vec<f64> = w_star
        .iter()
        .zip(&u)
        .map(|(w, u)| w + spec.outlier_shift * u)
        .collect();
    let flags = outlier_positions(&mut rng, spec.n, spec.epsilon);
    let scale = spec.kappa.sqrt();

    let mut comps = Vec::with_capacity(spec.n);
    for &outlier in &flags {
        let mut x = gaussian_vec(&mut rng, d);
        x[0] *= scale;
        let noise: f64 = StandardNormal.sample(&mut rng);
        let y = match (outlier, spec.outlier_rule) {
            (false, _) => dot(&x, &w_star) + spec.noise_sigma * noise,
            (true, OutlierRule::Shifted) => dot(&x, &w_b) + spec.noise_sigma * noise,
            (true, OutlierRule::GaussianResponse) => noise,
        };
        comps.push(LossComponent::linear_regression(x, y, outlier)?);
    }
    Dataset::new(comps, ParameterVector::new(w_star)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum OutlierCenters {
    /// One center per outlier, cycled if fewer are given.
    Explicit { centers: Vec<Vec<f64>> },
    /// Random directions at distances uniform in `[radius_min, radius_max]`.
    Random { radius_min: f64, radius_max: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadraticEnsembleSpec {
    pub d: usize,
    pub n: usize,
    pub epsilon: f64,
    /// Curvatures are uniform in `[l_min, l_max]`.
    pub l_range: (f64, f64),
    pub outlier_centers: OutlierCenters,
    /// Clean centers are uniform in a ball of this radius around the
    /// generating center; 0 gives the noiseless setting.
    pub delta: f64,
    /// Generating center; a standard Gaussian draw when absent.
    pub center: Option<Vec<f64>>,
    pub seed: u64,
}

impl QuadraticEnsembleSpec {
    pub fn new(d: usize, n: usize, epsilon: f64, seed: u64) -> Self {
        Self {
            d,
            n,
            epsilon,
            l_range: (1.0, 1.0),
            outlier_centers: OutlierCenters::Random {
                radius_min: 5.0,
                radius_max: 10.0,
            },
            delta: 0.0,
            center: None,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.d == 0 || self.n == 0 {
            return Err(Error::invalid("quadratic ensemble needs d >= 1 and n >= 1"));
        }
        let (lo, hi) = self.l_range;
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return Err(Error::invalid(format!(
                "curvature range ({lo}, {hi}) must satisfy 0 < l_min <= l_max"
            )));
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(Error::invalid("delta must be finite and >= 0"));
        }
        match &self.outlier_centers {
            OutlierCenters::Random {
                radius_min,
                radius_max,
            } => {
                if !(*radius_min > 0.0 && radius_max >= radius_min && radius_max.is_finite()) {
                    return Err(Error::invalid("outlier radii must satisfy 0 < min <= max"));
                }
            }
            OutlierCenters::Explicit { centers } => {
                if centers.is_empty() || centers.iter().any(|c| c.len() != self.d) {
                    return Err(Error::invalid(format!(
                        "explicit outlier centers must be nonempty with dimension {}",
                        self.d
                    )));
                }
            }
        }
        if let Some(c) = &self.center {
            if c.len() != self.d {
                return Err(Error::DimensionMismatch {
                    expected: self.d,
                    got: c.len(),
                });
            }
        }
        check_fraction(self.epsilon)
    }
}

/// Quadratics `l_i ||w - c_i||^2`; the target is the exact clean optimum
/// and `gamma` is the nearest-to-farthest outlier distance ratio.
pub fn gen_quadratic_ensemble(spec: &QuadraticEnsembleSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = seeded_rng(spec.seed, QUADRATIC_STREAM);
    let d = spec.d;
    let center = match &spec.center {
        Some(c) => c.clone(),
        None => gaussian_vec(&mut rng, d),
    };
    let flags = outlier_positions(&mut rng, spec.n, spec.epsilon);
    let (lo, hi) = spec.l_range;

    let mut comps = Vec::with_capacity(spec.n);
    let mut outlier_count = 0;
    let mut outlier_dists = Vec::new();
    for &outlier in &flags {
        let l = if hi > lo {
            rng.random_range(lo..=hi)
        } else {
            lo
        };
        let c = if outlier {
            let c = match &spec.outlier_centers {
                OutlierCenters::Explicit { centers } => {
                    centers[outlier_count % centers.len()].clone()
                }
                OutlierCenters::Random {
                    radius_min,
                    radius_max,
                } => {
                    let r = if radius_max > radius_min {
                        rng.random_range(*radius_min..=*radius_max)
                    } else {
                        *radius_min
                    };
                    let u = unit_vec(&mut rng, d);
                    center.iter().zip(&u).map(|(c, u)| c + r * u).collect()
                }
            };
            outlier_count += 1;
            let dist = distance(&c, &center);
            if dist <= 2.0 * spec.delta || dist == 0.0 {
                return Err(Error::invalid(format!(
                    "outlier center at distance {dist} from the target violates the 2 delta = {} separation",
                    2.0 * spec.delta
                )));
            }
            outlier_dists.push(dist);
            c
        } else if spec.delta > 0.0 {
            // Uniform in the ball: radius delta * U^(1/d).
            let u = unit_vec(&mut rng, d);
            let r = spec.delta * rng.random::<f64>().powf(1.0 / d as f64);
            center.iter().zip(&u).map(|(c, u)| c + r * u).collect()
        } else {
            center.clone()
        };
        comps.push(if d == 1 {
            LossComponent::scalar_quadratic(l, c[0], outlier)?
        } else {
            LossComponent::vector_quadratic(l, c, outlier)?
        });
    }

    let target = if spec.delta > 0.0 {
        let mut num = vec![0.0; d];
        let mut den = 0.0;
        for c in comps.iter().filter(|c| !c.outlier) {
            let l = c.curvature().unwrap_or(0.0);
            for (x, ci) in num.iter_mut().zip(c.center().unwrap_or_default()) {
                *x += l * ci;
            }
            den += l;
        }
        num.into_iter().map(|x| x / den).collect()
    } else {
        center
    };
    let mut ds = Dataset::new(comps, ParameterVector::new(target)?)?;
    if !outlier_dists.is_empty() {
        let (near, far) = outlier_dists
            .iter()
            .fold((f64::INFINITY, 0.0_f64), |(a, b), &x| (a.min(x), b.max(x)));
        ds.gamma = Some(near / far);
    }
    Ok(ds)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseModel {
    /// Every corrupted label of class `a` becomes `a + 1 mod C`.
    #[default]
    Directed,
    /// Corrupted labels are uniform over the wrong classes.
    Random,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationSpec {
    pub d: usize,
    pub n: usize,
    pub classes: usize,
    /// Distance of each class mean from the origin.
    pub separation: f64,
    pub epsilon: f64,
    pub noise_model: NoiseModel,
    pub seed: u64,
}

impl ClassificationSpec {
    fn validate(&self) -> Result<()> {
        if self.d == 0 || self.n == 0 {
            return Err(Error::invalid("classification needs d >= 1 and n >= 1"));
        }
        if self.classes < 2 {
            return Err(Error::invalid("classification needs at least 2 classes"));
        }
        if !(self.separation >= 0.0 && self.separation.is_finite()) {
            return Err(Error::invalid("separation must be finite and >= 0"));
        }
        check_fraction(self.epsilon)
    }
}

/// A clean held-out split: features (with the trailing bias entry) and labels.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledSet {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

/// Training set with corrupted labels plus a clean test split of `n_test`
/// points from the same blobs.
pub fn gen_classification_split(
    spec: &ClassificationSpec,
    n_test: usize,
) -> Result<(Dataset, LabeledSet)> {
    spec.validate()?;
    let mut rng = seeded_rng(spec.seed, CLASSIFICATION_STREAM);
    let means: Vec<Vec<f64>> = (0..spec.classes)
        .map(|_| {
            unit_vec(&mut rng, spec.d)
                .into_iter()
                .map(|x| x * spec.separation)
                .collect()
        })
        .collect();
    let draw = |rng: &mut SeededRng, label: usize| {
        let mut x: Vec<f64> = gaussian_vec(rng, spec.d)
            .iter()
            .zip(&means[label])
            .map(|(z, m)| z + m)
            .collect();
        x.push(1.0);
        x
    };

    let labels: Vec<usize> = (0..spec.n)
        .map(|_| rng.random_range(0..spec.classes))
        .collect();
    let features: Vec<Vec<f64>> = labels.iter().map(|&y| draw(&mut rng, y)).collect();
    let flags = outlier_positions(&mut rng, spec.n, spec.epsilon);
    let mut comps = Vec::with_capacity(spec.n);
    for ((x, &y), &outlier) in features.into_iter().zip(&labels).zip(&flags) {
        let label = if !outlier {
            y
        } else {
            match spec.noise_model {
                NoiseModel::Directed => (y + 1) % spec.classes,
                NoiseModel::Random => (y + rng.random_range(1..spec.classes)) % spec.classes,
            }
        };
        comps.push(LossComponent::multiclass_logistic(
            x,
            label,
            spec.classes,
            outlier,
        )?);
    }

    let test_labels: Vec<usize> = (0..n_test)
        .map(|_| rng.random_range(0..spec.classes))
        .collect();
    let test_features = test_labels.iter().map(|&y| draw(&mut rng, y)).collect();

    let dim = (spec.d + 1) * spec.classes;
    let provisional = Dataset::new(comps, ParameterVector::zeros(dim))?;
    let w_star = clean_logistic_optimum(&provisional, 1e-7, 100)?;
    let mut ds = Dataset::new(provisional.components().to_vec(), w_star)?;
    ds.target_is_numerical = true;
    Ok((
        ds,
        LabeledSet {
            features: test_features,
            labels: test_labels,
        },
    ))
}

/// Training set only; see [`gen_classification_split`].
pub fn gen_classification(spec: &ClassificationSpec) -> Result<Dataset> {
    Ok(gen_classification_split(spec, 0)?.0)
}

/// Minimizer of the clean average by damped Newton steps with backtracking.
///
/// The softmax parameterization leaves one direction per feature flat; the
/// gradient has no component there, so a tiny ridge keeps the solve
/// well-posed without moving the optimum.
fn clean_logistic_optimum(
    dataset: &Dataset,
    tol: f64,
    max_iters: usize,
) -> Result<ParameterVector> {
    let clean: Vec<&LossComponent> = dataset.components().iter().filter(|c| !c.outlier).collect();
    let m = clean.len() as f64;
    let dim = dataset.dim();
    let objective = |w: &[f64]| clean.iter().map(|c| c.value_at(w)).sum::<f64>() / m;
    let gradient = |w: &[f64]| {
        let mut g = vec![0.0; dim];
        let mut gi = vec![0.0; dim];
        for c in &clean {
            c.gradient_into(w, &mut gi);
            for (a, b) in g.iter_mut().zip(&gi) {
                *a += b / m;
            }
        }
        g
    };

    let mut w = vec![0.0; dim];
    let mut f = objective(&w);
    for _ in 0..max_iters {
        let g = gradient(&w);
        if norm(&g) <= tol {
            return ParameterVector::new(w);
        }
        let mut h = DMatrix::<f64>::zeros(dim, dim);
        for c in &clean {
            h += c.hessian(&w);
        }
        h /= m;
        let ridge = 1e-10 * h.diagonal().max().max(1e-12);
        for i in 0..dim {
            h[(i, i)] += ridge;
        }
        let gv = DVector::from_column_slice(&g);
        let step = match h.cholesky() {
            Some(ch) => ch.solve(&gv),
            None => gv.clone(),
        };
        let decrease = step.dot(&gv);
        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-12 {
            let trial: Vec<f64> = w
                .iter()
                .zip(step.iter())
                .map(|(wi, si)| wi - t * si)
                .collect();
            let ft = objective(&trial);
            if ft <= f - 1e-4 * t * decrease {
                w = trial;
                f = ft;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let g = gradient(&w);
    if norm(&g) <= tol {
        ParameterVector::new(w)
    } else {
        Err(Error::Degenerate(format!(
            "clean logistic optimum not reached: gradient norm {:.3e} (classes may be separable)",
            norm(&g)
        )))
    }
}
