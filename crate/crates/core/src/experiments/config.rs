//! TOML configuration for sweeps, landscape scans, bound checks and the
//! classification benchmark. Unknown keys are rejected everywhere.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::datagen::{
    gen_quadratic_ensemble, gen_regression, NoiseModel, OutlierCenters, OutlierRule,
    QuadraticEnsembleSpec, RegressionSpec,
};
use crate::error::{Error, Result};
use crate::losses::{Dataset, LossComponent};
use crate::optimizer::{PlateauRule, StepSize};
use crate::sampling::{Replacement, SelectionScheme};
use crate::vector::ParameterVector;

/// A single value or a list of grid values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> Grid<T> {
    pub fn values(&self) -> Vec<T> {
        match self {
            Grid::One(v) => vec![v.clone()],
            Grid::Many(v) => v.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    Regression,
    Quadratic,
}

/// Grid over generated problems. For quadratic ensembles `kappa` is the
/// curvature spread `l_max / l_min` (with `l_min = 1`), `noise_sigma` the
/// clean-center radius and outliers sit at distances in
/// `[outlier_shift, 2 outlier_shift]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemGrid {
    pub kind: ProblemKind,
    pub d: Grid<usize>,
    pub n: Grid<usize>,
    #[serde(default = "default_kappa")]
    pub kappa: Grid<f64>,
    pub epsilon: Grid<f64>,
    #[serde(default = "default_sigma")]
    pub noise_sigma: Grid<f64>,
    #[serde(default = "default_shift")]
    pub outlier_shift: f64,
    #[serde(default)]
    pub outlier_rule: OutlierRule,
}

fn default_kappa() -> Grid<f64> {
    Grid::One(1.0)
}

fn default_sigma() -> Grid<f64> {
    Grid::One(0.0)
}

fn default_shift() -> f64 {
    5.0
}

/// One point of a [`ProblemGrid`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemPoint {
    pub kind: ProblemKind,
    pub d: usize,
    pub n: usize,
    pub kappa: f64,
    pub epsilon: f64,
    pub noise_sigma: f64,
    pub outlier_shift: f64,
    pub outlier_rule: OutlierRule,
}

impl ProblemGrid {
    pub fn points(&self) -> Vec<ProblemPoint> {
        let mut out = Vec::new();
        for d in self.d.values() {
            for n in self.n.values() {
                for kappa in self.kappa.values() {
                    for noise_sigma in self.noise_sigma.values() {
                        for epsilon in self.epsilon.values() {
                            out.push(ProblemPoint {
                                kind: self.kind,
                                d,
                                n,
                                kappa,
                                epsilon,
                                noise_sigma,
                                outlier_shift: self.outlier_shift,
                                outlier_rule: self.outlier_rule,
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

impl ProblemPoint {
    pub fn generate(&self, seed: u64) -> Result<Dataset> {
        match self.kind {
            ProblemKind::Regression => gen_regression(&RegressionSpec {
                d: self.d,
                n: self.n,
                kappa: self.kappa,
                epsilon: self.epsilon,
                noise_sigma: self.noise_sigma,
                outlier_shift: self.outlier_shift,
                outlier_rule: self.outlier_rule,
                seed,
            }),
            ProblemKind::Quadratic => gen_quadratic_ensemble(&QuadraticEnsembleSpec {
                d: self.d,
                n: self.n,
                epsilon: self.epsilon,
                l_range: (1.0, self.kappa),
                outlier_centers: OutlierCenters::Random {
                    radius_min: self.outlier_shift,
                    radius_max: 2.0 * self.outlier_shift,
                },
                delta: self.noise_sigma,
                center: None,
                seed,
            }),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Plain SGD, one uniform sample per step.
    Sgd,
    /// Min-k loss SGD.
    Mkl,
    /// Order statistic `ceil(k/2)` of the `k` drawn losses.
    MedianLoss,
    /// Mean gradient of the `ceil(alpha k)` smallest of `k` drawn losses.
    Batched,
    /// Mean gradient of all `k` drawn samples.
    Minibatch,
    /// Plain SGD restricted to clean samples.
    Oracle,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Sgd => "sgd",
            Variant::Mkl => "mkl",
            Variant::MedianLoss => "median-loss",
            Variant::Batched => "batched",
            Variant::Minibatch => "minibatch",
            Variant::Oracle => "oracle",
        }
    }

    pub fn uses_k(self) -> bool {
        !matches!(self, Variant::Sgd | Variant::Oracle)
    }

    pub fn scheme(
        self,
        k: usize,
        batch_fraction: f64,
        replacement: Replacement,
    ) -> SelectionScheme {
        match self {
            Variant::Sgd | Variant::Oracle => SelectionScheme::sgd(),
            Variant::Mkl => SelectionScheme::min_k(k).with_replacement(replacement),
            Variant::MedianLoss => SelectionScheme::median_loss(k).with_replacement(replacement),
            Variant::Batched => SelectionScheme::batched(k, batch_fraction),
            Variant::Minibatch => SelectionScheme::minibatch(k),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerGrid {
    pub variants: Vec<Variant>,
    #[serde(default = "default_k")]
    pub k: Grid<usize>,
    #[serde(default = "default_fraction")]
    pub batch_fraction: f64,
    #[serde(default)]
    pub replacement: Replacement,
    /// Defaults to `1 / (2 sup_i L_i)`.
    #[serde(default)]
    pub step_size: Option<StepSize>,
    pub max_steps: usize,
    #[serde(default = "default_decay")]
    pub ema_decay: f64,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    /// 0 disables the plateau stop.
    #[serde(default = "default_window")]
    pub plateau_window: usize,
    #[serde(default = "default_plateau_tol")]
    pub plateau_tolerance: f64,
}

fn default_k() -> Grid<usize> {
    Grid::One(2)
}

fn default_fraction() -> f64 {
    0.5
}

fn default_decay() -> f64 {
    0.99
}

fn default_record_every() -> usize {
    10
}

fn default_window() -> usize {
    500
}

fn default_plateau_tol() -> f64 {
    1e-9
}

/// One optimizer of an [`OptimizerGrid`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariantPoint {
    pub variant: Variant,
    pub k: usize,
    pub scheme: SelectionScheme,
}

impl OptimizerGrid {
    pub fn points(&self) -> Vec<VariantPoint> {
        let mut out = Vec::new();
        for &variant in &self.variants {
            let ks = if variant.uses_k() {
                self.k.values()
            } else {
                vec![1]
            };
            for k in ks {
                out.push(VariantPoint {
                    variant,
                    k,
                    scheme: variant.scheme(k, self.batch_fraction, self.replacement),
                });
            }
        }
        out
    }

    pub fn plateau(&self) -> Option<PlateauRule> {
        (self.plateau_window > 0).then_some(PlateauRule {
            window: self.plateau_window,
            min_improvement: self.plateau_tolerance,
        })
    }

    fn validate(&self) -> Result<()> {
        if self.variants.is_empty() {
            return Err(Error::Config("optimizer.variants must not be empty".into()));
        }
        let mut seen = HashSet::new();
        if !self.variants.iter().all(|v| seen.insert(*v)) {
            return Err(Error::Config(
                "optimizer.variants contains duplicates".into(),
            ));
        }
        if self.k.values().is_empty() {
            return Err(Error::Config("optimizer.k must not be empty".into()));
        }
        if self.max_steps == 0 {
            return Err(Error::Config("optimizer.max_steps must be >= 1".into()));
        }
        for p in self.points() {
            p.scheme
                .validate()
                .map_err(|e| Error::Config(format!("optimizer: {e}")))?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSettings {
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Worker threads; 0 uses every available core.
    #[serde(default)]
    pub threads: usize,
    /// Record wall-clock time per run. Timings differ between reruns.
    #[serde(default = "default_true")]
    pub timing: bool,
}

fn default_seeds() -> Vec<u64> {
    (0..21).collect()
}

fn default_true() -> bool {
    true
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            seeds: default_seeds(),
            out: None,
            threads: 0,
            timing: true,
        }
    }
}

impl RunSettings {
    fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("run.seeds must not be empty".into()));
        }
        let mut seen = HashSet::new();
        if !self.seeds.iter().all(|s| seen.insert(*s)) {
            return Err(Error::Config("run.seeds must be distinct".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub problem: ProblemGrid,
    pub optimizer: OptimizerGrid,
    #[serde(default)]
    pub run: RunSettings,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        let points = self.problem.points();
        if points.is_empty() {
            return Err(Error::Config("problem grid is empty".into()));
        }
        for p in &points {
            if !(0.0..1.0).contains(&p.epsilon) {
                return Err(Error::Config(format!(
                    "problem.epsilon {} outside [0, 1)",
                    p.epsilon
                )));
            }
            if p.d == 0 || p.n == 0 {
                return Err(Error::Config("problem.d and problem.n must be >= 1".into()));
            }
        }
        self.optimizer.validate()?;
        self.run.validate()
    }
}

/// A single problem instance for landscape scans and bound checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InstanceConfig {
    /// Generated quadratic ensemble.
    Quadratic {
        d: usize,
        n: usize,
        epsilon: f64,
        #[serde(default = "one")]
        l_min: f64,
        #[serde(default = "one")]
        l_max: f64,
        /// Explicit outlier centers; random directions when absent.
        #[serde(default)]
        outlier_centers: Option<Vec<Vec<f64>>>,
        #[serde(default = "default_radius_min")]
        radius_min: f64,
        #[serde(default = "default_radius_max")]
        radius_max: f64,
        #[serde(default)]
        delta: f64,
        #[serde(default)]
        center: Option<Vec<f64>>,
        #[serde(default)]
        seed: u64,
    },
    /// Listed quadratic components `l_i ||w - c_i||^2`.
    Explicit {
        curvatures: Vec<f64>,
        centers: Vec<Vec<f64>>,
        #[serde(default)]
        outliers: Vec<usize>,
        target: Vec<f64>,
    },
    /// Generated linear regression.
    Regression {
        d: usize,
        n: usize,
        #[serde(default = "one")]
        kappa: f64,
        epsilon: f64,
        #[serde(default)]
        noise_sigma: f64,
        #[serde(default = "default_shift")]
        outlier_shift: f64,
        #[serde(default)]
        seed: u64,
    },
    /// A dataset file written by [`crate::experiments::write_dataset`].
    File { path: PathBuf },
}

fn one() -> f64 {
    1.0
}

fn default_radius_min() -> f64 {
    5.0
}

fn default_radius_max() -> f64 {
    10.0
}

impl InstanceConfig {
    /// Replaces the generator seed; explicit and file instances have none.
    pub fn set_seed(&mut self, value: u64) {
        match self {
            InstanceConfig::Quadratic { seed, .. } | InstanceConfig::Regression { seed, .. } => {
                *seed = value
            }
            InstanceConfig::Explicit { .. } | InstanceConfig::File { .. } => {}
        }
    }

    /// Builds the dataset; relative file paths resolve against `base`.
    pub fn build(&self, base: Option<&Path>) -> Result<Dataset> {
        match self {
            InstanceConfig::Quadratic {
                d,
                n,
                epsilon,
                l_min,
                l_max,
                outlier_centers,
                radius_min,
                radius_max,
                delta,
                center,
                seed,
            } => gen_quadratic_ensemble(&QuadraticEnsembleSpec {
                d: *d,
                n: *n,
                epsilon: *epsilon,
                l_range: (*l_min, *l_max),
                outlier_centers: match outlier_centers {
                    Some(centers) => OutlierCenters::Explicit {
                        centers: centers.clone(),
                    },
                    None => OutlierCenters::Random {
                        radius_min: *radius_min,
                        radius_max: *radius_max,
                    },
                },
                delta: *delta,
                center: center.clone(),
                seed: *seed,
            }),
            InstanceConfig::Explicit {
                curvatures,
                centers,
                outliers,
                target,
            } => {
                if curvatures.len() != centers.len() {
                    return Err(Error::Config(format!(
                        "{} curvatures but {} centers",
                        curvatures.len(),
                        centers.len()
                    )));
                }
                if let Some(&bad) = outliers.iter().find(|&&i| i >= curvatures.len()) {
                    return Err(Error::Config(format!("outlier index {bad} out of range")));
                }
                let comps = curvatures
                    .iter()
                    .zip(centers)
                    .enumerate()
                    .map(|(i, (&l, c))| {
                        let outlier = outliers.contains(&i);
                        if c.len() == 1 {
                            LossComponent::scalar_quadratic(l, c[0], outlier)
                        } else {
                            LossComponent::vector_quadratic(l, c.clone(), outlier)
                        }
                    })
                    .collect::<Result<Vec<_>>>()?;
                Dataset::new(comps, ParameterVector::new(target.clone())?)
            }
            InstanceConfig::Regression {
                d,
                n,
                kappa,
                epsilon,
                noise_sigma,
                outlier_shift,
                seed,
            } => gen_regression(&RegressionSpec {
                d: *d,
                n: *n,
                kappa: *kappa,
                epsilon: *epsilon,
                noise_sigma: *noise_sigma,
                outlier_shift: *outlier_shift,
                outlier_rule: OutlierRule::Shifted,
                seed: *seed,
            }),
            InstanceConfig::File { path } => {
                let resolved = match base {
                    Some(b) if path.is_relative() => b.join(path),
                    _ => path.clone(),
                };
                super::io::read_dataset(&resolved)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSettings {
    #[serde(default = "default_k_single")]
    pub k: usize,
    #[serde(default)]
    pub replacement: Replacement,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    /// Segment start; the target when absent.
    #[serde(default)]
    pub a: Option<Vec<f64>>,
    /// Segment end; the first outlier center (or target + e_1) when absent.
    #[serde(default)]
    pub b: Option<Vec<f64>>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    /// Starting points for the stationary-point search; the segment
    /// endpoints when absent.
    #[serde(default)]
    pub starts: Option<Vec<Vec<f64>>>,
}

fn default_k_single() -> usize {
    2
}

fn default_grid_points() -> usize {
    201
}

fn default_tol() -> f64 {
    1e-10
}

fn default_max_iters() -> usize {
    100_000
}

impl Default for ScanSettings {
    fn default() -> Self {
        Self {
            k: 2,
            replacement: Replacement::With,
            grid_points: default_grid_points(),
            a: None,
            b: None,
            tol: default_tol(),
            max_iters: default_max_iters(),
            starts: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LandscapeConfig {
    pub problem: InstanceConfig,
    #[serde(default)]
    pub scan: ScanSettings,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSettings {
    #[serde(default = "default_k_single")]
    pub k: usize,
    #[serde(default)]
    pub replacement: Replacement,
    /// Length of the recorded trajectory for the one-step bound.
    #[serde(default = "default_check_steps")]
    pub steps: usize,
    #[serde(default)]
    pub seed: u64,
    /// Defaults to `1 / (2 sup_i L_i)`.
    #[serde(default)]
    pub eta: Option<f64>,
    /// Defaults to `min_r p_r n lambda_F`.
    #[serde(default)]
    pub lambda_est: Option<f64>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    /// Start of the trajectory and the stationary-point searches; zeros when absent.
    #[serde(default)]
    pub w0: Option<Vec<f64>>,
}

fn default_check_steps() -> usize {
    100
}

impl Default for CheckSettings {
    fn default() -> Self {
        Self {
            k: 2,
            replacement: Replacement::With,
            steps: default_check_steps(),
            seed: 0,
            eta: None,
            lambda_est: None,
            tol: default_tol(),
            max_iters: default_max_iters(),
            w0: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheoryConfig {
    pub problem: InstanceConfig,
    #[serde(default)]
    pub check: CheckSettings,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassificationProblem {
    pub d: usize,
    pub n: usize,
    #[serde(default = "default_n_test")]
    pub n_test: usize,
    #[serde(default = "default_classes")]
    pub classes: usize,
    pub separation: f64,
    pub epsilon: Grid<f64>,
    #[serde(default)]
    pub noise_model: NoiseModel,
}

fn default_n_test() -> usize {
    2000
}

fn default_classes() -> usize {
    4
}

/// Training settings for the classification benchmark. Plain SGD and the
/// oracle average `ceil(batch_fraction k)` uniform samples per step, the
/// same number of gradients the batched min-k variant keeps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassificationTraining {
    #[serde(default = "default_classify_variants")]
    pub variants: Vec<Variant>,
    #[serde(default = "default_classify_k")]
    pub k: usize,
    #[serde(default = "default_fraction")]
    pub batch_fraction: f64,
    #[serde(default)]
    pub step_size: Option<StepSize>,
    pub max_steps: usize,
    #[serde(default = "default_decay")]
    pub ema_decay: f64,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
}

fn default_classify_variants() -> Vec<Variant> {
    vec![Variant::Sgd, Variant::Batched, Variant::Oracle]
}

fn default_classify_k() -> usize {
    10
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassificationConfig {
    pub problem: ClassificationProblem,
    pub training: ClassificationTraining,
    #[serde(default)]
    pub run: RunSettings,
}

impl ClassificationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.training.variants.is_empty() {
            return Err(Error::Config("training.variants must not be empty".into()));
        }
        if self.training.max_steps == 0 {
            return Err(Error::Config("training.max_steps must be >= 1".into()));
        }
        if self.problem.epsilon.values().is_empty() {
            return Err(Error::Config("problem.epsilon must not be empty".into()));
        }
        if self.problem.n_test == 0 {
            return Err(Error::Config("problem.n_test must be >= 1".into()));
        }
        self.run.validate()
    }
}

/// Parses TOML into `T`; errors carry line and column.
pub fn parse_config<T: DeserializeOwned>(text: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))
}

/// Reads and parses a config file, prefixing errors with its path.
pub fn load_config<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}
