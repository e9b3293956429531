//! Training loops: min-k-loss SGD and its baselines.
//!
//! One engine covers all variants through [`SelectionScheme`]: `k = 1` is
//! vanilla SGD, `order_index = ceil(k/2)` is median-loss SGD, a batch
//! fraction gives the batched variant, and `oracle_mode` restricts sampling
//! to clean components.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::Dataset;
use crate::sampling::{draw_candidates, rank_candidates, seeded_rng, SelectionScheme};
use crate::vector::{distance, norm, ParameterVector};

/// Iterates whose norm exceeds this abort the run.
pub const DIVERGENCE_THRESHOLD: f64 = 1e8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum StepSize {
    /// `1 / (2 sup_i L_i)`, resolved against the dataset at run time.
    HalfInverseLipschitz,
    Constant {
        eta: f64,
    },
    /// `initial / factor^(floor(step / period))`.
    Piecewise {
        initial: f64,
        factor: f64,
        period: usize,
    },
}

impl StepSize {
    pub(crate) fn validate(&self) -> Result<()> {
        match *self {
            StepSize::HalfInverseLipschitz => Ok(()),
            StepSize::Constant { eta } if eta > 0.0 && eta.is_finite() => Ok(()),
            StepSize::Piecewise {
                initial,
                factor,
                period,
            } if initial > 0.0 && initial.is_finite() && factor >= 1.0 && period > 0 => Ok(()),
            other => Err(Error::invalid(format!("invalid step size {other:?}"))),
        }
    }

    /// Step size at `step` (0-based) for a problem with `sup_i L_i = lipschitz`.
    pub fn at(&self, step: usize, lipschitz: f64) -> f64 {
        match *self {
            StepSize::HalfInverseLipschitz => 0.5 / lipschitz,
            StepSize::Constant { eta } => eta,
            StepSize::Piecewise {
                initial,
                factor,
                period,
            } => initial / factor.powi((step / period) as i32),
        }
    }
}

/// Stop once the EMA distance to the target improves by less than
/// `min_improvement` over `window` steps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlateauRule {
    pub window: usize,
    pub min_improvement: f64,
}

impl Default for PlateauRule {
    fn default() -> Self {
        Self {
            window: 500,
            min_improvement: 1e-9,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub scheme: SelectionScheme,
    pub step_size: StepSize,
    pub max_steps: usize,
    pub seed: u64,
    /// RNG stream, for splitting runs that share a seed.
    pub stream: u64,
    /// EMA decay over recorded iterates, in [0, 1).
    pub ema_decay: f64,
    pub record_every: usize,
    /// Sample only components outside the outlier set.
    pub oracle_mode: bool,
    pub plateau: Option<PlateauRule>,
}

impl OptimizerConfig {
    pub fn new(scheme: SelectionScheme, max_steps: usize, seed: u64) -> Self {
        Self {
            scheme,
            step_size: StepSize::HalfInverseLipschitz,
            max_steps,
            seed,
            stream: 0,
            ema_decay: 0.99,
            record_every: 1,
            oracle_mode: false,
            plateau: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.scheme.validate()?;
        self.step_size.validate()?;
        if !(0.0..1.0).contains(&self.ema_decay) {
            return Err(Error::invalid(format!(
                "EMA decay {} outside [0, 1)",
                self.ema_decay
            )));
        }
        if self.record_every == 0 {
            return Err(Error::invalid("record_every must be >= 1"));
        }
        if let Some(p) = &self.plateau {
            if p.window == 0 || !(p.min_improvement >= 0.0) {
                return Err(Error::invalid(
                    "plateau window must be >= 1 and tolerance >= 0",
                ));
            }
        }
        Ok(())
    }
}

/// One recorded iterate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    /// Number of updates applied so far.
    pub step: usize,
    pub w: ParameterVector,
    /// Components used by the update that produced `w` (empty for `w0`).
    pub chosen: Vec<usize>,
    /// Their mean loss at the previous iterate.
    pub loss: Option<f64>,
    pub eta: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub records: Vec<Record>,
    pub final_w: ParameterVector,
    /// Normalized EMA of the recorded iterates.
    pub ema_w: ParameterVector,
    /// `||w_t - w*||` per record.
    pub distances: Vec<f64>,
    /// Updates applied.
    pub steps: usize,
    /// `k` per update.
    pub loss_evaluations: u64,
    /// Step at which the plateau rule stopped the run.
    pub plateau_step: Option<usize>,
}

impl Trajectory {
    /// Distance of the EMA readout from the dataset target.
    pub fn ema_distance(&self, target: &ParameterVector) -> f64 {
        distance(self.ema_w.as_slice(), target.as_slice())
    }
}

/// Running normalized EMA: `sum beta^(T-t) w_t / sum beta^(T-t)`.
struct Ema {
    decay: f64,
    weighted: Vec<f64>,
    weight: f64,
}

impl Ema {
    fn new(decay: f64, dim: usize) -> Self {
        Self {
            decay,
            weighted: vec![0.0; dim],
            weight: 0.0,
        }
    }

    fn push(&mut self, w: &[f64]) {
        for (a, x) in self.weighted.iter_mut().zip(w) {
            *a = self.decay * *a + x;
        }
        self.weight = self.decay * self.weight + 1.0;
    }

    fn value(&self) -> Vec<f64> {
        self.weighted.iter().map(|a| a / self.weight).collect()
    }
}

/// Runs `config.max_steps` updates from `w0` (fewer if the plateau rule fires).
///
/// Deterministic given the seed and stream. Fails with
/// [`Error::Diverged`] once `||w_t||` exceeds [`DIVERGENCE_THRESHOLD`].
pub fn run(
    dataset: &Dataset,
    config: &OptimizerConfig,
    w0: &ParameterVector,
) -> Result<Trajectory> {
    config.validate()?;
    w0.check_dim(dataset.dim())?;
    let components = dataset.components();
    let pool: Vec<usize> = if config.oracle_mode {
        dataset.clean_indices()
    } else {
        (0..dataset.n()).collect()
    };
    let scheme = &config.scheme;
    if scheme.replacement == crate::sampling::Replacement::Without && scheme.k > pool.len() {
        return Err(Error::invalid(format!(
            "cannot draw k = {} of {} without replacement",
            scheme.k,
            pool.len()
        )));
    }

    let target = dataset.target().as_slice();
    let lipschitz = dataset.max_lipschitz();
    let mut rng = seeded_rng(config.seed, config.stream);
    let d = dataset.dim();

    let mut w = w0.as_slice().to_vec();
    let mut grad = vec![0.0; d];
    let mut acc = vec![0.0; d];
    let mut drawn = Vec::with_capacity(scheme.k);
    let mut ranked: Vec<(f64, usize)> = Vec::with_capacity(scheme.k);
    let kept = scheme.kept();

    let mut ema = Ema::new(config.ema_decay, d);
    ema.push(&w);
    let mut records = vec![Record {
        step: 0,
        w: w0.clone(),
        chosen: Vec::new(),
        loss: None,
        eta: None,
    }];
    let mut distances = vec![distance(&w, target)];
    let mut plateau_ref = (0usize, distance(&w, target));
    let mut plateau_step = None;
    let mut steps = 0;

    for t in 0..config.max_steps {
        let eta = config.step_size.at(t, lipschitz);
        draw_candidates(pool.len(), scheme, &mut rng, &mut drawn);

        let chosen: &[(f64, usize)] = if scheme.k == 1 {
            ranked.clear();
            ranked.push((f64::NAN, pool[drawn[0]]));
            &ranked
        } else {
            ranked.clear();
            ranked.extend(drawn.iter().map(|&p| {
                let i = pool[p];
                (components[i].value_at(&w), i)
            }));
            rank_candidates(&mut ranked);
            if scheme.is_batched() {
                &ranked[..kept]
            } else {
                let j = scheme.order_index - 1;
                &ranked[j..j + 1]
            }
        };

        let record_now = (t + 1) % config.record_every == 0;
        let record_info = record_now.then(|| {
            let idx: Vec<usize> = chosen.iter().map(|c| c.1).collect();
            let loss =
                idx.iter().map(|&i| components[i].value_at(&w)).sum::<f64>() / idx.len() as f64;
            (idx, loss)
        });

        if chosen.len() == 1 {
            components[chosen[0].1].gradient_into(&w, &mut grad);
            for (wi, gi) in w.iter_mut().zip(&grad) {
                *wi -= eta * gi;
            }
        } else {
            acc.iter_mut().for_each(|a| *a = 0.0);
            for &(_, i) in chosen {
                components[i].gradient_into(&w, &mut grad);
                for (a, g) in acc.iter_mut().zip(&grad) {
                    *a += g;
                }
            }
            let scale = eta / chosen.len() as f64;
            for (wi, a) in w.iter_mut().zip(&acc) {
                *wi -= scale * a;
            }
        }
        steps = t + 1;

        let wn = norm(&w);
        if !(wn <= DIVERGENCE_THRESHOLD) {
            return Err(Error::Diverged {
                step: steps,
                norm: wn,
            });
        }

        if let Some((chosen, loss)) = record_info {
            ema.push(&w);
            records.push(Record {
                step: steps,
                w: ParameterVector::from_raw(w.clone()),
                chosen,
                loss: Some(loss),
                eta: Some(eta),
            });
            distances.push(distance(&w, target));

            if let Some(rule) = &config.plateau {
                if steps - plateau_ref.0 >= rule.window {
                    let current = distance(&ema.value(), target);
                    if plateau_ref.1 - current < rule.min_improvement {
                        plateau_step = Some(steps);
                        break;
                    }
                    plateau_ref = (steps, current);
                }
            }
        }
    }

    Ok(Trajectory {
        final_w: ParameterVector::from_raw(w),
        ema_w: ParameterVector::from_raw(ema.value()),
        records,
        distances,
        steps,
        loss_evaluations: (steps * scheme.k) as u64,
        plateau_step,
    })
}

/// Normalized EMA of the recorded iterates; `decay = 0` returns the last one.
pub fn ema_readout(trajectory: &Trajectory, decay: f64) -> Result<ParameterVector> {
    let first = trajectory
        .records
        .first()
        .ok_or_else(|| Error::invalid("empty trajectory"))?;
    if !(0.0..1.0).contains(&decay) {
        return Err(Error::invalid(format!("EMA decay {decay} outside [0, 1)")));
    }
    let mut ema = Ema::new(decay, first.w.dim());
    for r in &trajectory.records {
        ema.push(r.w.as_slice());
    }
    Ok(ParameterVector::from_raw(ema.value()))
}

/// `||w - target||`.
pub fn error_to_target(w: &ParameterVector, target: &ParameterVector) -> Result<f64> {
    w.check_dim(target.dim())?;
    Ok(distance(w.as_slice(), target.as_slice()))
}
