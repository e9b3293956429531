use mklsgd::surrogate::{
    find_stationary_point, ordering, scan_line, surrogate_gradient, surrogate_value,
};
use mklsgd::theory::{condition1_threshold, vector_condition, w_tilde};
use mklsgd::*;
use proptest::prelude::*;
use rand::Rng;

fn pv(v: Vec<f64>) -> ParameterVector {
    ParameterVector::new(v).unwrap()
}

fn coords(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0..3.0f64, d)
}

/// Any component kind over a parameter of dimension 6 (3 features x 2 classes
/// for the logistic case).
fn component() -> impl Strategy<Value = LossComponent> {
    prop_oneof![
        (0.1..5.0f64, coords(6))
            .prop_map(|(l, c)| LossComponent::vector_quadratic(l, c, false).unwrap()),
        (coords(6), -3.0..3.0f64)
            .prop_map(|(x, y)| LossComponent::linear_regression(x, y, false).unwrap()),
        (coords(3), 0..2usize)
            .prop_map(|(x, y)| LossComponent::multiclass_logistic(x, y, 2, false).unwrap()),
    ]
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn components_are_convex(c in component(), a in coords(6), b in coords(6), t in 0.01..0.99f64) {
        let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| t * x + (1.0 - t) * y).collect();
        let f = |w: &[f64]| loss_value(&c, &pv(w.to_vec())).unwrap();
        prop_assert!(f(&mid) <= t * f(&a) + (1.0 - t) * f(&b) + 1e-12 * (1.0 + f(&a).abs() + f(&b).abs()));
    }

    #[test]
    fn gradient_matches_finite_differences(c in component(), w in coords(6)) {
        let g = loss_gradient(&c, &pv(w.clone())).unwrap();
        let h = 1e-6;
        for j in 0..6 {
            let mut up = w.clone();
            let mut dn = w.clone();
            up[j] += h;
            dn[j] -= h;
            let fd = (loss_value(&c, &pv(up)).unwrap() - loss_value(&c, &pv(dn)).unwrap()) / (2.0 * h);
            prop_assert!((fd - g[j]).abs() <= 1e-5 * (1.0 + g[j].abs()), "coord {j}: fd {fd} vs {}", g[j]);
        }
    }

    #[test]
    fn gradients_are_lipschitz(c in component(), a in coords(6), b in coords(6)) {
        let ga = loss_gradient(&c, &pv(a.clone())).unwrap();
        let gb = loss_gradient(&c, &pv(b.clone())).unwrap();
        prop_assert!(dist(ga.as_slice(), gb.as_slice()) <= c.lipschitz() * dist(&a, &b) * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn rank_probabilities_normalize(n in 1usize..2000, k in 1usize..=10, with in any::<bool>()) {
        let repl = if with { Replacement::With } else { Replacement::Without };
        prop_assume!(with || k <= n);
        let p = rank_probabilities(n, &SelectionScheme::min_k(k).with_replacement(repl)).unwrap();
        let sum: f64 = p.probs().iter().sum();
        prop_assert!((sum - 1.0).abs() <= 1e-12, "sum {sum}");
        prop_assert!(p.probs().iter().all(|&x| x >= 0.0));
        prop_assert!(p.probs().windows(2).all(|w| w[0] >= w[1] - 1e-15));
    }

    #[test]
    fn top_rank_mass_grows_with_k(n in 2usize..200, k in 1usize..9, m in 1usize..200) {
        let m = m.min(n - 1);
        let a = rank_probabilities(n, &SelectionScheme::min_k(k)).unwrap().top_mass(m);
        let b = rank_probabilities(n, &SelectionScheme::min_k(k + 1)).unwrap().top_mass(m);
        prop_assert!(b >= a - 1e-12);
    }

    #[test]
    fn reduction_to_condition1(kappa in 1.0..100.0f64) {
        let c = vector_condition(kappa, 1.0, 1.0, 0.0).unwrap();
        prop_assert!((c.bound - condition1_threshold(kappa)).abs() <= 1e-12);
        prop_assert!((c.bound - 1.0 / (1.0 + kappa * kappa.sqrt())).abs() <= 1e-12);
    }

    #[test]
    fn w_tilde_balances_losses(lm in 0.01..50.0f64, lb in 0.01..50.0f64, a in coords(4), b in coords(4)) {
        let w = w_tilde(lm, lb, &pv(a.clone()), &pv(b.clone())).unwrap();
        let lhs = lm * dist(w.as_slice(), &a).powi(2);
        let rhs = lb * dist(w.as_slice(), &b).powi(2);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()), "{lhs} vs {rhs}");
    }

    #[test]
    fn ordering_is_a_stable_sort(losses in prop::collection::vec(0.0..4.0f64, 1..12)) {
        // Quadratics with unit curvature centered at sqrt(loss) give those losses at 0.
        let comps = losses.iter().map(|l| LossComponent::scalar_quadratic(1.0, l.sqrt(), false).unwrap()).collect();
        let ds = Dataset::new(comps, ParameterVector::scalar(0.0)).unwrap();
        let prof = ordering(&ds, &ParameterVector::scalar(0.0)).unwrap();
        let mut expected: Vec<usize> = (0..losses.len()).collect();
        expected.sort_by(|&a, &b| ds.losses(&ParameterVector::scalar(0.0)).unwrap()[a]
            .total_cmp(&ds.losses(&ParameterVector::scalar(0.0)).unwrap()[b]).then(a.cmp(&b)));
        prop_assert_eq!(&prof.permutation, &expected);
        prop_assert!(prof.sorted_losses.windows(2).all(|w| w[0] <= w[1]));
    }
}

fn random_ensemble(seed: u64, outliers: bool) -> Dataset {
    let mut rng = seeded_rng(seed, 99);
    let d = rng.random_range(1..=4);
    let n = rng.random_range(3..=8);
    let mut spec =
        datagen::QuadraticEnsembleSpec::new(d, n, if outliers { 0.25 } else { 0.0 }, seed);
    spec.l_range = (0.5, 3.0);
    spec.delta = if outliers { 0.3 } else { 0.0 };
    datagen::gen_quadratic_ensemble(&spec).unwrap()
}

#[test]
fn k1_run_matches_plain_sgd() {
    let ds = datagen::gen_regression(&datagen::RegressionSpec::new(3, 40, 2.0, 0.1, 5)).unwrap();
    let mut cfg = OptimizerConfig::new(SelectionScheme::sgd(), 300, 17);
    cfg.stream = 4;
    let tr = run(&ds, &cfg, &ParameterVector::zeros(3)).unwrap();

    let eta = 0.5 / ds.max_lipschitz();
    let mut rng = seeded_rng(17, 4);
    let mut w = vec![0.0; 3];
    for rec in tr.records.iter().skip(1) {
        let i = rng.random_range(0..ds.n());
        let g = loss_gradient(&ds.components()[i], &pv(w.clone())).unwrap();
        for (wj, gj) in w.iter_mut().zip(g.as_slice()) {
            *wj -= eta * gj;
        }
        assert_eq!(rec.chosen, vec![i]);
        assert_eq!(rec.w.as_slice(), &w[..]);
    }
    assert_eq!(tr.final_w.as_slice(), &w[..]);
}

#[test]
fn runs_are_bit_identical() {
    let ds = random_ensemble(3, true);
    let mut cfg = OptimizerConfig::new(SelectionScheme::min_k(3), 500, 8);
    cfg.plateau = Some(optimizer::PlateauRule::default());
    let w0 = ParameterVector::zeros(ds.dim());
    assert_eq!(run(&ds, &cfg, &w0).unwrap(), run(&ds, &cfg, &w0).unwrap());
}

#[test]
fn converged_stationary_points_re_evaluate_below_tolerance() {
    for seed in 0..30 {
        let ds = random_ensemble(seed, seed % 2 == 0);
        let scheme = SelectionScheme::min_k(2 + (seed as usize % 3));
        let w0 = ParameterVector::zeros(ds.dim());
        let r = find_stationary_point(&ds, &w0, &scheme, 1e-10, 100_000).unwrap();
        if r.converged {
            let g = surrogate_gradient(&ds, &r.point, &scheme).unwrap();
            assert!(g.norm() <= 1e-10, "seed {seed}: {}", g.norm());
        }
    }
}

#[test]
fn scan_derivative_matches_value_differences_within_fixed_ordering() {
    for seed in 0..10 {
        let ds = random_ensemble(seed, true);
        let scheme = SelectionScheme::min_k(2);
        let a = ds.target().clone();
        let b = pv(ds.components()[ds.outliers()[0]].center().unwrap());
        let m = 401;
        let rows = scan_line(&ds, &a, &b, m, &scheme).unwrap();
        let len = dist(a.as_slice(), b.as_slice());
        for w in rows.windows(3) {
            if w[0].signature != w[2].signature || ordering_changes(&ds, &a, &b, w[0].t, w[2].t) {
                continue;
            }
            let fd = (w[2].value - w[0].value) / ((w[2].t - w[0].t) * len);
            let an = w[1].directional_derivative;
            assert!(
                (fd - an).abs() <= 1e-5 * (1.0 + an.abs()),
                "seed {seed} t {}: {fd} vs {an}",
                w[1].t
            );
        }
    }
}

/// The full permutation, not just the clean/outlier pattern, must be constant
/// for the surrogate to be smooth.
fn ordering_changes(
    ds: &Dataset,
    a: &ParameterVector,
    b: &ParameterVector,
    t0: f64,
    t1: f64,
) -> bool {
    let at = |t: f64| {
        let w: Vec<f64> = a
            .as_slice()
            .iter()
            .zip(b.as_slice())
            .map(|(x, y)| (1.0 - t) * x + t * y)
            .collect();
        ordering(ds, &pv(w)).unwrap().permutation
    };
    at(t0) != at(t1)
}

#[test]
fn surrogate_value_matches_its_gradient_on_random_points() {
    for seed in 0..10 {
        let ds = random_ensemble(seed, true);
        let scheme = SelectionScheme::min_k(3);
        let mut rng = seeded_rng(seed, 7);
        let w: Vec<f64> = (0..ds.dim()).map(|_| rng.random_range(-2.0..2.0)).collect();
        let g = surrogate_gradient(&ds, &pv(w.clone()), &scheme).unwrap();
        let h = 1e-6;
        for j in 0..ds.dim() {
            let mut up = w.clone();
            let mut dn = w.clone();
            up[j] += h;
            dn[j] -= h;
            if ordering(&ds, &pv(up.clone())).unwrap().permutation
                != ordering(&ds, &pv(dn.clone())).unwrap().permutation
            {
                continue;
            }
            let fd = (surrogate_value(&ds, &pv(up), &scheme).unwrap()
                - surrogate_value(&ds, &pv(dn), &scheme).unwrap())
                / (2.0 * h);
            assert!((fd - g[j]).abs() <= 1e-5 * (1.0 + g[j].abs()));
        }
    }
}
