use serde::{Deserialize, Serialize};

use super::config::{ClassificationConfig, Variant};
use super::sweep::Stats;
use crate::datagen::{gen_classification_split, ClassificationSpec, LabeledSet};
use crate::error::{Error, Result};
use crate::losses::{logits, Dataset, LossComponent};
use crate::optimizer::{run, OptimizerConfig, StepSize};
use crate::sampling::SelectionScheme;
use crate::vector::ParameterVector;

/// One training run of the classification benchmark.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationRecord {
    pub epsilon: f64,
    pub variant: Variant,
    pub seed: u64,
    /// Clean test accuracy in percent; empty when training diverged.
    pub test_accuracy: Option<f64>,
    /// Mean loss over the corrupted training set.
    pub train_loss: Option<f64>,
    /// Mean loss over the clean test set.
    pub test_loss: Option<f64>,
    pub steps: usize,
}

/// Mean and spread over seeds for one (epsilon, variant) cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccuracySummary {
    pub epsilon: f64,
    pub variant: Variant,
    pub runs: usize,
    pub diverged: usize,
    pub accuracy_mean: Option<f64>,
    pub accuracy_std: Option<f64>,
    pub train_loss_mean: Option<f64>,
    pub test_loss_mean: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationTable {
    pub records: Vec<ClassificationRecord>,
    pub summary: Vec<AccuracySummary>,
}

impl ClassificationTable {
    pub fn cell(&self, epsilon: f64, variant: Variant) -> Option<&AccuracySummary> {
        self.summary
            .iter()
            .find(|s| s.epsilon == epsilon && s.variant == variant)
    }
}

/// Index of the largest logit.
fn predict(features: &[f64], classes: usize, w: &[f64]) -> usize {
    let z = logits(features, classes, w);
    (0..classes).fold(0, |best, c| if z[c] > z[best] { c } else { best })
}

/// Accuracy in percent and mean cross-entropy of `w` on a labeled set.
pub fn evaluate(test: &LabeledSet, classes: usize, w: &ParameterVector) -> Result<(f64, f64)> {
    if test.features.is_empty() {
        return Err(Error::invalid("empty evaluation set"));
    }
    let mut correct = 0usize;
    let mut loss = 0.0;
    for (x, &y) in test.features.iter().zip(&test.labels) {
        if x.len() * classes != w.dim() {
            return Err(Error::DimensionMismatch {
                expected: w.dim(),
                got: x.len() * classes,
            });
        }
        if predict(x, classes, w.as_slice()) == y {
            correct += 1;
        }
        loss += LossComponent::multiclass_logistic(x.clone(), y, classes, false)?
            .value_at(w.as_slice());
    }
    let m = test.features.len() as f64;
    Ok((100.0 * correct as f64 / m, loss / m))
}

fn scheme_for(variant: Variant, k: usize, batch_fraction: f64) -> Result<SelectionScheme> {
    let batch = SelectionScheme::batched(k, batch_fraction).kept();
    match variant {
        Variant::Sgd | Variant::Oracle | Variant::Minibatch => {
            Ok(SelectionScheme::minibatch(batch))
        }
        Variant::Batched => Ok(SelectionScheme::batched(k, batch_fraction)),
        Variant::Mkl => Ok(SelectionScheme::min_k(k)),
        Variant::MedianLoss => Ok(SelectionScheme::median_loss(k)),
    }
}

/// Trains every variant on corrupted data for every epsilon and seed and
/// scores it on a clean held-out split.
pub fn classification_benchmark(config: &ClassificationConfig) -> Result<ClassificationTable> {
    config.validate()?;
    let p = &config.problem;
    let t = &config.training;
    let tasks: Vec<(f64, u64)> = p
        .epsilon
        .values()
        .into_iter()
        .flat_map(|e| config.run.seeds.iter().map(move |&s| (e, s)))
        .collect();

    let work = |&(epsilon, seed): &(f64, u64)| -> Result<Vec<ClassificationRecord>> {
        let spec = ClassificationSpec {
            d: p.d,
            n: p.n,
            classes: p.classes,
            separation: p.separation,
            epsilon,
            noise_model: p.noise_model,
            seed,
        };
        let (train, test) = gen_classification_split(&spec, p.n_test)?;
        let mut out = Vec::new();
        for (j, &variant) in t.variants.iter().enumerate() {
            let cfg = OptimizerConfig {
                scheme: scheme_for(variant, t.k, t.batch_fraction)?,
                step_size: t.step_size.unwrap_or(StepSize::HalfInverseLipschitz),
                max_steps: t.max_steps,
                seed,
                stream: j as u64,
                ema_decay: t.ema_decay,
                record_every: t.record_every,
                oracle_mode: variant == Variant::Oracle,
                plateau: None,
            };
            out.push(train_and_score(
                &train, &test, p.classes, &cfg, epsilon, variant, seed,
            )?);
        }
        Ok(out)
    };

    #[cfg(feature = "parallel")]
    let chunks: Vec<Result<Vec<ClassificationRecord>>> = {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.run.threads)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        pool.install(|| tasks.par_iter().map(work).collect())
    };
    #[cfg(not(feature = "parallel"))]
    let chunks: Vec<Result<Vec<ClassificationRecord>>> = tasks.iter().map(work).collect();

    let mut records = Vec::new();
    for c in chunks {
        records.extend(c?);
    }
    let summary = summarize_accuracy(&records);
    Ok(ClassificationTable { records, summary })
}

fn train_and_score(
    train: &Dataset,
    test: &LabeledSet,
    classes: usize,
    cfg: &OptimizerConfig,
    epsilon: f64,
    variant: Variant,
    seed: u64,
) -> Result<ClassificationRecord> {
    let w0 = ParameterVector::zeros(train.dim());
    match run(train, cfg, &w0) {
        Ok(tr) => {
            let (acc, test_loss) = evaluate(test, classes, &tr.ema_w)?;
            Ok(ClassificationRecord {
                epsilon,
                variant,
                seed,
                test_accuracy: Some(acc),
                train_loss: Some(train.average_loss(&tr.ema_w)?),
                test_loss: Some(test_loss),
                steps: tr.steps,
            })
        }
        Err(e) if e.is_numerical() => Ok(ClassificationRecord {
            epsilon,
            variant,
            seed,
            test_accuracy: None,
            train_loss: None,
            test_loss: None,
            steps: cfg.max_steps,
        }),
        Err(e) => Err(e),
    }
}

fn summarize_accuracy(records: &[ClassificationRecord]) -> Vec<AccuracySummary> {
    let mut keys: Vec<(f64, Variant)> = Vec::new();
    for r in records {
        if !keys.contains(&(r.epsilon, r.variant)) {
            keys.push((r.epsilon, r.variant));
        }
    }
    keys.into_iter()
        .map(|(epsilon, variant)| {
            let cell: Vec<&ClassificationRecord> = records
                .iter()
                .filter(|r| r.epsilon == epsilon && r.variant == variant)
                .collect();
            let ok: Vec<&&ClassificationRecord> =
                cell.iter().filter(|r| r.test_accuracy.is_some()).collect();
            let acc: Vec<f64> = ok.iter().filter_map(|r| r.test_accuracy).collect();
            let train: Vec<f64> = ok.iter().filter_map(|r| r.train_loss).collect();
            let test: Vec<f64> = ok.iter().filter_map(|r| r.test_loss).collect();
            let acc_stats = Stats::of(&acc);
            AccuracySummary {
                epsilon,
                variant,
                runs: cell.len(),
                diverged: cell.len() - ok.len(),
                accuracy_mean: acc_stats.map(|s| s.mean),
                accuracy_std: acc_stats.map(|s| s.std),
                train_loss_mean: Stats::of(&train).map(|s| s.mean),
                test_loss_mean: Stats::of(&test).map(|s| s.mean),
            }
        })
        .collect()
}
