//! Rank-selection probabilities and the stochastic selection rules.
//!
//! Ranks are 1-based in the documentation (rank 1 = smallest loss) and
//! 0-based in the returned vectors. Equal losses are ordered by original
//! index, smallest first.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Seeded, stream-splittable generator used by every stochastic operation.
pub type SeededRng = ChaCha8Rng;

/// Generator for `(seed, stream)`. Distinct streams are independent, so
/// parallel runs split by run index.
pub fn seeded_rng(seed: u64, stream: u64) -> SeededRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Replacement {
    #[default]
    With,
    Without,
}

/// Which of the `k` drawn samples update the parameter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionScheme {
    pub k: usize,
    pub replacement: Replacement,
    /// 1-based rank inside the drawn set; 1 picks the minimum loss.
    pub order_index: usize,
    /// `None`: a single pick (the `order_index`-th smallest). `Some(alpha)`
    /// with alpha in (0, 1]: average the gradients of the `ceil(alpha k)`
    /// smallest losses; `Some(1.0)` is plain minibatch SGD.
    #[serde(default)]
    pub batch_fraction: Option<f64>,
}

impl SelectionScheme {
    /// Uniform single-sample SGD.
    pub fn sgd() -> Self {
        Self::min_k(1)
    }

    /// Min-k-loss pick, drawing with replacement.
    pub fn min_k(k: usize) -> Self {
        Self {
            k,
            replacement: Replacement::With,
            order_index: 1,
            batch_fraction: None,
        }
    }

    /// Pick the `ceil(k/2)`-th smallest loss of the drawn set.
    pub fn median_loss(k: usize) -> Self {
        Self {
            order_index: k.div_ceil(2).max(1),
            ..Self::min_k(k)
        }
    }

    /// Draw `k` without replacement and average the gradients of the
    /// `ceil(alpha k)` smallest losses.
    pub fn batched(k: usize, alpha: f64) -> Self {
        Self {
            k,
            replacement: Replacement::Without,
            order_index: 1,
            batch_fraction: Some(alpha),
        }
    }

    /// Plain minibatch SGD over `k` draws without replacement.
    pub fn minibatch(k: usize) -> Self {
        Self::batched(k, 1.0)
    }

    pub fn with_replacement(self, replacement: Replacement) -> Self {
        Self {
            replacement,
            ..self
        }
    }

    /// True when the update averages several samples.
    pub fn is_batched(&self) -> bool {
        self.batch_fraction.is_some()
    }

    /// Number of samples whose gradients enter one update.
    pub fn kept(&self) -> usize {
        match self.batch_fraction {
            // guard against 0.3 * 10 = 3.0000000000000004
            Some(alpha) => ((alpha * self.k as f64) - 1e-9).ceil().max(1.0) as usize,
            None => 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::invalid("k must be >= 1"));
        }
        if self.order_index == 0 || self.order_index > self.k {
            return Err(Error::invalid(format!(
                "order index {} outside [1, {}]",
                self.order_index, self.k
            )));
        }
        if let Some(alpha) = self.batch_fraction {
            if !(alpha > 0.0 && alpha <= 1.0) {
                return Err(Error::invalid(format!(
                    "batch fraction {alpha} outside (0, 1]"
                )));
            }
            if alpha * self.k as f64 + 1e-9 < 1.0 {
                return Err(Error::invalid(format!(
                    "batch fraction {alpha} keeps no sample out of k = {}",
                    self.k
                )));
            }
        }
        Ok(())
    }

    fn validate_for(&self, n: usize) -> Result<()> {
        self.validate()?;
        if n == 0 {
            return Err(Error::invalid("need at least one sample"));
        }
        if self.replacement == Replacement::Without && self.k > n {
            return Err(Error::invalid(format!(
                "cannot draw k = {} of n = {n} without replacement",
                self.k
            )));
        }
        Ok(())
    }
}

impl Default for SelectionScheme {
    fn default() -> Self {
        Self::min_k(2)
    }
}

/// Probability that the sample of each loss rank is the one picked.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankDistribution {
    probs: Vec<f64>,
}

impl RankDistribution {
    /// Entry `r` is the probability of rank `r + 1`.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Mass on the `m` smallest-loss ranks.
    pub fn top_mass(&self, m: usize) -> f64 {
        self.probs[..m.min(self.len())].iter().sum()
    }

    /// Mass on the `m` largest-loss ranks.
    pub fn bottom_mass(&self, m: usize) -> f64 {
        self.probs[self.len() - m.min(self.len())..].iter().sum()
    }
}

/// Closed-form pick probability per loss rank for the min-loss rule.
///
/// With replacement `p_i = ((n-i+1)^k - (n-i)^k) / n^k`; without replacement
/// `p_i = C(n-i, k-1) / C(n, k)`.
pub fn rank_probabilities(n: usize, scheme: &SelectionScheme) -> Result<RankDistribution> {
    scheme.validate_for(n)?;
    if scheme.order_index != 1 || scheme.is_batched() {
        return Err(Error::UnsupportedClosedForm {
            order_index: scheme.order_index,
            batch_fraction: scheme.batch_fraction.unwrap_or(1.0),
        });
    }
    let k = scheme.k as i32;
    let nf = n as f64;
    let probs = match scheme.replacement {
        Replacement::With => (1..=n)
            .map(|i| {
                let above = (n - i + 1) as f64 / nf;
                let below = (n - i) as f64 / nf;
                above.powi(k) - below.powi(k)
            })
            .collect(),
        Replacement::Without => (1..=n)
            .map(|i| {
                // C(n-i, k-1) / C(n, k) = (k/n) prod_{j<k-1} (n-i-j)/(n-1-j)
                let mut p = scheme.k as f64 / nf;
                for j in 0..scheme.k - 1 {
                    let num = n as i64 - i as i64 - j as i64;
                    if num <= 0 {
                        return 0.0;
                    }
                    p *= num as f64 / (n - 1 - j) as f64;
                }
                p
            })
            .collect(),
    };
    Ok(RankDistribution { probs })
}

/// Draws the candidate set for one step into `out` (cleared first).
///
/// `k = 1` always uses a single `random_range`, so a min-1 run consumes the
/// generator exactly like textbook SGD.
pub(crate) fn draw_candidates<R: Rng + ?Sized>(
    n: usize,
    scheme: &SelectionScheme,
    rng: &mut R,
    out: &mut Vec<usize>,
) {
    out.clear();
    if scheme.k == 1 {
        out.push(rng.random_range(0..n));
        return;
    }
    match scheme.replacement {
        Replacement::With => out.extend((0..scheme.k).map(|_| rng.random_range(0..n))),
        Replacement::Without => out.extend(index::sample(rng, n, scheme.k)),
    }
}

/// Orders candidates by `(loss, index)`.
pub(crate) fn rank_candidates(candidates: &mut [(f64, usize)]) {
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
}

/// Candidates ranked by loss; returns `(loss, index)` pairs.
pub(crate) fn ranked<R: Rng + ?Sized>(
    n: usize,
    scheme: &SelectionScheme,
    rng: &mut R,
    scratch: &mut Vec<usize>,
    mut loss: impl FnMut(usize) -> f64,
) -> Vec<(f64, usize)> {
    draw_candidates(n, scheme, rng, scratch);
    let mut pairs: Vec<(f64, usize)> = scratch.iter().map(|&i| (loss(i), i)).collect();
    rank_candidates(&mut pairs);
    pairs
}

fn check_losses(losses: &[f64]) -> Result<()> {
    if losses.is_empty() {
        return Err(Error::invalid("empty loss vector"));
    }
    if losses.iter().any(|l| !l.is_finite()) {
        return Err(Error::invalid("losses must be finite"));
    }
    Ok(())
}

/// Draws `k` indices and returns the one holding the `order_index`-th
/// smallest loss among them.
pub fn select_index<R: Rng + ?Sized>(
    losses: &[f64],
    scheme: &SelectionScheme,
    rng: &mut R,
) -> Result<usize> {
    check_losses(losses)?;
    scheme.validate_for(losses.len())?;
    let mut scratch = Vec::with_capacity(scheme.k);
    let pairs = ranked(losses.len(), scheme, rng, &mut scratch, |i| losses[i]);
    Ok(pairs[scheme.order_index - 1].1)
}

/// Draws `k` indices and returns the `ceil(alpha k)` with the smallest losses,
/// in rank order. A single-pick scheme behaves as `alpha = 1`.
pub fn select_batch<R: Rng + ?Sized>(
    losses: &[f64],
    scheme: &SelectionScheme,
    rng: &mut R,
) -> Result<Vec<usize>> {
    check_losses(losses)?;
    scheme.validate_for(losses.len())?;
    let kept = if scheme.is_batched() {
        scheme.kept()
    } else {
        scheme.k
    };
    let mut scratch = Vec::with_capacity(scheme.k);
    let pairs = ranked(losses.len(), scheme, rng, &mut scratch, |i| losses[i]);
    Ok(pairs.into_iter().take(kept).map(|(_, i)| i).collect())
}
