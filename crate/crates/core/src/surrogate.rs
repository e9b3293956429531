//! The expected min-k update: rank-weighted gradients, the matching
//! surrogate value, deterministic stationary points and line scans.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::Dataset;
use crate::sampling::{rank_probabilities, SelectionScheme};
use crate::vector::{dot, lerp, norm, ParameterVector};

/// Component losses at a point, sorted ascending (ties by index).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderedLossProfile {
    /// `permutation[r]` is the component holding rank `r + 1`.
    pub permutation: Vec<usize>,
    pub sorted_losses: Vec<f64>,
}

impl OrderedLossProfile {
    fn at(dataset: &Dataset, w: &[f64]) -> Self {
        let losses = dataset.losses_at(w);
        let mut permutation: Vec<usize> = (0..losses.len()).collect();
        permutation.sort_by(|&a, &b| losses[a].total_cmp(&losses[b]).then(a.cmp(&b)));
        let sorted_losses = permutation.iter().map(|&i| losses[i]).collect();
        Self {
            permutation,
            sorted_losses,
        }
    }

    /// Rank (0-based) of every component.
    pub fn ranks(&self) -> Vec<usize> {
        let mut ranks = vec![0; self.permutation.len()];
        for (r, &i) in self.permutation.iter().enumerate() {
            ranks[i] = r;
        }
        ranks
    }

    /// Every clean loss is strictly below every outlier loss.
    pub fn clean_first(&self, dataset: &Dataset) -> bool {
        let n_clean = dataset.n_clean();
        if dataset.n_outliers() == 0 {
            return true;
        }
        let all_clean = self.permutation[..n_clean]
            .iter()
            .all(|&i| !dataset.is_outlier(i));
        all_clean && self.sorted_losses[n_clean - 1] < self.sorted_losses[n_clean]
    }

    /// FNV-1a hash of the clean/outlier label sequence by rank.
    pub fn signature(&self, dataset: &Dataset) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for &i in &self.permutation {
            h ^= u64::from(dataset.is_outlier(i)) + 1;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        h
    }
}

/// Sorts the component losses at `w`.
pub fn ordering(dataset: &Dataset, w: &ParameterVector) -> Result<OrderedLossProfile> {
    w.check_dim(dataset.dim())?;
    Ok(OrderedLossProfile::at(dataset, w.as_slice()))
}

fn closed_form_probs(dataset: &Dataset, scheme: &SelectionScheme) -> Result<Vec<f64>> {
    Ok(rank_probabilities(dataset.n(), scheme)?.probs().to_vec())
}

/// `sum_r p_r grad f_{m_r}(w)` into `out`; returns the ordering used.
pub(crate) fn weighted_gradient(
    dataset: &Dataset,
    w: &[f64],
    probs: &[f64],
    out: &mut [f64],
) -> OrderedLossProfile {
    let profile = OrderedLossProfile::at(dataset, w);
    out.iter_mut().for_each(|o| *o = 0.0);
    let mut g = vec![0.0; w.len()];
    for (&i, &p) in profile.permutation.iter().zip(probs) {
        if p == 0.0 {
            continue;
        }
        dataset.components()[i].gradient_into(w, &mut g);
        for (o, gi) in out.iter_mut().zip(&g) {
            *o += p * gi;
        }
    }
    profile
}

fn weighted_value(profile: &OrderedLossProfile, probs: &[f64]) -> f64 {
    profile
        .sorted_losses
        .iter()
        .zip(probs)
        .map(|(f, p)| p * f)
        .sum()
}

/// The expected min-k step direction at `w`.
pub fn surrogate_gradient(
    dataset: &Dataset,
    w: &ParameterVector,
    scheme: &SelectionScheme,
) -> Result<ParameterVector> {
    w.check_dim(dataset.dim())?;
    let probs = closed_form_probs(dataset, scheme)?;
    let mut out = vec![0.0; dataset.dim()];
    weighted_gradient(dataset, w.as_slice(), &probs, &mut out);
    Ok(ParameterVector::from_raw(out))
}

/// The expected selected loss `sum_r p_r f_{m_r}(w)`.
pub fn surrogate_value(
    dataset: &Dataset,
    w: &ParameterVector,
    scheme: &SelectionScheme,
) -> Result<f64> {
    w.check_dim(dataset.dim())?;
    let probs = closed_form_probs(dataset, scheme)?;
    Ok(weighted_value(
        &OrderedLossProfile::at(dataset, w.as_slice()),
        &probs,
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationaryReport {
    pub point: ParameterVector,
    pub surrogate_gradient_norm: f64,
    pub converged: bool,
    pub iterations: usize,
    pub ordering_at_point: OrderedLossProfile,
    /// The `n - |O|` smallest losses at the point all belong to clean components.
    pub top_ranks_clean: bool,
}

/// Gradient descent on the expected update with `eta = 1 / (2 sup_i L_i)`,
/// until `||grad F~|| <= tol` or `max_iters` steps.
pub fn find_stationary_point(
    dataset: &Dataset,
    w0: &ParameterVector,
    scheme: &SelectionScheme,
    tol: f64,
    max_iters: usize,
) -> Result<StationaryReport> {
    w0.check_dim(dataset.dim())?;
    if !(tol > 0.0) {
        return Err(Error::invalid(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let probs = closed_form_probs(dataset, scheme)?;
    let eta = 0.5 / dataset.max_lipschitz();
    let mut w = w0.as_slice().to_vec();
    let mut g = vec![0.0; w.len()];
    let mut iterations = 0;
    let mut profile = weighted_gradient(dataset, &w, &probs, &mut g);
    let mut gnorm = norm(&g);
    while gnorm > tol && iterations < max_iters {
        for (wi, gi) in w.iter_mut().zip(&g) {
            *wi -= eta * gi;
        }
        iterations += 1;
        profile = weighted_gradient(dataset, &w, &probs, &mut g);
        gnorm = norm(&g);
        if !gnorm.is_finite() {
            break;
        }
    }
    let top_ranks_clean = profile.clean_first(dataset);
    Ok(StationaryReport {
        point: ParameterVector::from_raw(w),
        surrogate_gradient_norm: gnorm,
        converged: gnorm <= tol,
        iterations,
        ordering_at_point: profile,
        top_ranks_clean,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub t: f64,
    pub value: f64,
    /// `grad F~ . (b - a) / ||b - a||`.
    pub directional_derivative: f64,
    /// Hex form of [`OrderedLossProfile::signature`].
    pub signature: String,
    pub clean_first: bool,
}

/// Samples the surrogate on `(1 - t) a + t b` for `grid_points` evenly
/// spaced `t` in `[0, 1]`.
pub fn scan_line(
    dataset: &Dataset,
    a: &ParameterVector,
    b: &ParameterVector,
    grid_points: usize,
    scheme: &SelectionScheme,
) -> Result<Vec<ScanRow>> {
    a.check_dim(dataset.dim())?;
    b.check_dim(dataset.dim())?;
    if grid_points < 2 {
        return Err(Error::invalid("a line scan needs at least 2 grid points"));
    }
    let dir: Vec<f64> = b
        .as_slice()
        .iter()
        .zip(a.as_slice())
        .map(|(x, y)| x - y)
        .collect();
    let len = norm(&dir);
    if len == 0.0 {
        return Err(Error::invalid("scan endpoints coincide"));
    }
    let unit: Vec<f64> = dir.iter().map(|x| x / len).collect();
    let probs = closed_form_probs(dataset, scheme)?;

    let row = |j: usize| {
        let t = j as f64 / (grid_points - 1) as f64;
        let w = lerp(a.as_slice(), b.as_slice(), t);
        let mut g = vec![0.0; w.len()];
        let profile = weighted_gradient(dataset, &w, &probs, &mut g);
        ScanRow {
            t,
            value: weighted_value(&profile, &probs),
            directional_derivative: dot(&g, &unit),
            signature: format!("{:016x}", profile.signature(dataset)),
            clean_first: profile.clean_first(dataset),
        }
    };

    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        Ok((0..grid_points).into_par_iter().map(row).collect())
    }
    #[cfg(not(feature = "parallel"))]
    {
        Ok((0..grid_points).map(row).collect())
    }
}
