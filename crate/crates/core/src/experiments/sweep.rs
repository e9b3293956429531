use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{ProblemKind, ProblemPoint, SweepConfig, Variant, VariantPoint};
use crate::error::Result;
use crate::optimizer::{run, OptimizerConfig, StepSize};
use crate::vector::ParameterVector;

/// One optimizer run of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub problem: ProblemKind,
    pub d: usize,
    pub n: usize,
    pub kappa: f64,
    pub epsilon: f64,
    pub noise_sigma: f64,
    pub variant: Variant,
    pub k: usize,
    pub order_index: usize,
    pub seed: u64,
    /// EMA distance to the target; empty when the run diverged.
    pub distance: Option<f64>,
    /// The run finished without diverging.
    pub converged: bool,
    /// Updates applied (the plateau step when the stop rule fired).
    pub steps: usize,
    pub wall_ms: f64,
    pub loss_evals: u64,
}

/// Runs every problem point x seed x optimizer of the grid.
///
/// Each (problem point, seed) pair generates one dataset shared by all
/// optimizers; optimizer `j` uses RNG stream `j`, except that optimizers
/// with identical selection rules share the stream of the first one, so
/// e.g. median-loss with `k = 2` reproduces min-2 exactly. Diverged runs are
/// kept with `converged = false`. Records come back in grid order.
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<RunRecord>> {
    config.validate()?;
    let problems = config.problem.points();
    let variants = config.optimizer.points();
    let tasks: Vec<(usize, u64)> = (0..problems.len())
        .flat_map(|p| config.run.seeds.iter().map(move |&s| (p, s)))
        .collect();

    let work = |&(p, seed): &(usize, u64)| run_task(config, &problems[p], &variants, seed);

    #[cfg(feature = "parallel")]
    let chunks: Vec<Result<Vec<RunRecord>>> = {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.run.threads)
            .build()
            .map_err(|e| crate::Error::Config(format!("thread pool: {e}")))?;
        pool.install(|| tasks.par_iter().map(work).collect())
    };
    #[cfg(not(feature = "parallel"))]
    let chunks: Vec<Result<Vec<RunRecord>>> = tasks.iter().map(work).collect();

    let mut out = Vec::with_capacity(tasks.len() * variants.len());
    for c in chunks {
        out.extend(c?);
    }
    Ok(out)
}

fn run_task(
    config: &SweepConfig,
    problem: &ProblemPoint,
    variants: &[VariantPoint],
    seed: u64,
) -> Result<Vec<RunRecord>> {
    let dataset = problem.generate(seed)?;
    let w0 = ParameterVector::zeros(dataset.dim());
    let opt = &config.optimizer;
    let mut out = Vec::with_capacity(variants.len());
    for v in variants {
        let oracle = v.variant == Variant::Oracle;
        let j = variants
            .iter()
            .position(|u| u.scheme == v.scheme && (u.variant == Variant::Oracle) == oracle)
            .unwrap_or(0);
        let cfg = OptimizerConfig {
            scheme: v.scheme,
            step_size: opt.step_size.unwrap_or(StepSize::HalfInverseLipschitz),
            max_steps: opt.max_steps,
            seed,
            stream: j as u64,
            ema_decay: opt.ema_decay,
            record_every: opt.record_every,
            oracle_mode: oracle,
            plateau: opt.plateau(),
        };
        let start = config.run.timing.then(Instant::now);
        let result = run(&dataset, &cfg, &w0);
        let wall_ms = start.map_or(0.0, |s| s.elapsed().as_secs_f64() * 1e3);
        let (distance, converged, steps) = match result {
            Ok(tr) => {
                let dist = tr.ema_distance(dataset.target());
                (dist.is_finite().then_some(dist), dist.is_finite(), tr.steps)
            }
            Err(e) if e.is_numerical() => (None, false, cfg.max_steps),
            Err(e) => return Err(e),
        };
        out.push(RunRecord {
            problem: problem.kind,
            d: problem.d,
            n: problem.n,
            kappa: problem.kappa,
            epsilon: problem.epsilon,
            noise_sigma: problem.noise_sigma,
            variant: v.variant,
            k: v.k,
            order_index: v.scheme.order_index,
            seed,
            distance,
            converged,
            steps,
            wall_ms,
            loss_evals: (steps * v.scheme.k) as u64,
        });
    }
    Ok(out)
}

/// Aggregate of the runs sharing all grid coordinates but the seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub problem: ProblemKind,
    pub d: usize,
    pub n: usize,
    pub kappa: f64,
    pub epsilon: f64,
    pub noise_sigma: f64,
    pub variant: Variant,
    pub k: usize,
    pub order_index: usize,
    pub runs: usize,
    pub diverged: usize,
    pub median: Option<f64>,
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub q1: Option<f64>,
    pub q3: Option<f64>,
    pub median_steps: Option<f64>,
}

impl CellSummary {
    fn same_cell(&self, r: &RunRecord) -> bool {
        self.problem == r.problem
            && self.d == r.d
            && self.n == r.n
            && self.kappa == r.kappa
            && self.epsilon == r.epsilon
            && self.noise_sigma == r.noise_sigma
            && self.variant == r.variant
            && self.k == r.k
            && self.order_index == r.order_index
    }
}

/// Per-cell statistics, in order of first appearance. Diverged runs are
/// counted but excluded from the distance statistics.
pub fn summarize(records: &[RunRecord]) -> Vec<CellSummary> {
    let mut cells: Vec<(CellSummary, Vec<f64>, Vec<f64>)> = Vec::new();
    for r in records {
        let idx = match cells.iter().position(|(c, _, _)| c.same_cell(r)) {
            Some(i) => i,
            None => {
                cells.push((
                    CellSummary {
                        problem: r.problem,
                        d: r.d,
                        n: r.n,
                        kappa: r.kappa,
                        epsilon: r.epsilon,
                        noise_sigma: r.noise_sigma,
                        variant: r.variant,
                        k: r.k,
                        order_index: r.order_index,
                        runs: 0,
                        diverged: 0,
                        median: None,
                        mean: None,
                        std: None,
                        q1: None,
                        q3: None,
                        median_steps: None,
                    },
                    Vec::new(),
                    Vec::new(),
                ));
                cells.len() - 1
            }
        };
        let (cell, dists, steps) = &mut cells[idx];
        cell.runs += 1;
        match r.distance {
            Some(d) if r.converged => {
                dists.push(d);
                steps.push(r.steps as f64);
            }
            _ => cell.diverged += 1,
        }
    }
    cells
        .into_iter()
        .map(|(mut c, d, s)| {
            if let Some(stats) = Stats::of(&d) {
                c.median = Some(stats.median);
                c.mean = Some(stats.mean);
                c.std = Some(stats.std);
                c.q1 = Some(stats.q1);
                c.q3 = Some(stats.q3);
            }
            c.median_steps = Stats::of(&s).map(|st| st.median);
            c
        })
        .collect()
}

/// Location and spread of a sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub mean: f64,
    /// Sample standard deviation (`n - 1` denominator; 0 for one value).
    pub std: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

impl Stats {
    /// `None` for an empty sample. Quantiles interpolate linearly between
    /// order statistics.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let q = |p: f64| {
            let h = p * (sorted.len() - 1) as f64;
            let lo = h.floor() as usize;
            let hi = (lo + 1).min(sorted.len() - 1);
            sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
        };
        Some(Self {
            mean,
            std: var.sqrt(),
            median: q(0.5),
            q1: q(0.25),
            q3: q(0.75),
        })
    }
}
