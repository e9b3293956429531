use mklsgd::datagen::{gen_classification, ClassificationSpec, NoiseModel};
use mklsgd::experiments::*;
use mklsgd::theory::exact_expected_step;
use mklsgd::*;

#[test]
fn generated_datasets_survive_csv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ds.csv");
    let ds = datagen::gen_regression(&datagen::RegressionSpec::new(4, 50, 3.0, 0.2, 9)).unwrap();
    write_dataset(&path, &ds).unwrap();
    let back = read_dataset(&path).unwrap();
    assert_eq!(back, ds);
    assert_eq!(dataset_constants(&back), dataset_constants(&ds));
}

#[test]
fn directed_noise_uses_cyclic_map() {
    let spec = ClassificationSpec {
        d: 5,
        n: 400,
        classes: 4,
        separation: 3.0,
        epsilon: 0.25,
        noise_model: NoiseModel::Directed,
        seed: 2,
    };
    let noisy = gen_classification(&spec).unwrap();
    let clean = gen_classification(&ClassificationSpec {
        epsilon: 0.0,
        ..spec.clone()
    })
    .unwrap();
    let label = |c: &LossComponent| match &c.kind {
        LossKind::MulticlassLogistic { label, .. } => *label,
        _ => unreachable!(),
    };
    let mut changed = 0;
    for (a, b) in noisy.components().iter().zip(clean.components()) {
        if label(a) != label(b) {
            changed += 1;
            assert_eq!(label(a), (label(b) + 1) % 4);
            assert!(a.outlier);
        }
    }
    assert_eq!(changed, 100);
}

#[test]
fn oracle_dominates_in_a_small_sweep() {
    let cfg: SweepConfig = parse_config(
        r#"
[problem]
kind = "regression"
d = 5
n = 200
epsilon = 0.2

[optimizer]
variants = ["sgd", "mkl", "oracle"]
max_steps = 4000

[run]
seeds = [0, 1, 2, 3, 4]
timing = false
"#,
    )
    .unwrap();
    let records = run_sweep(&cfg).unwrap();
    let cells = summarize(&records);
    let median = |v: Variant| {
        cells
            .iter()
            .find(|c| c.variant == v)
            .unwrap()
            .median
            .unwrap()
    };
    assert!(median(Variant::Oracle) <= median(Variant::Mkl));
    assert!(median(Variant::Oracle) <= median(Variant::Sgd));
    assert!(median(Variant::Mkl) < median(Variant::Sgd));
}

#[test]
fn summary_mean_matches_independent_sum() {
    let values = [0.3, 1.7, 2.2, 0.9, 5.5];
    let s = Stats::of(&values).unwrap();
    let mut acc = 0.0;
    for v in values.iter().rev() {
        acc += v;
    }
    assert!((s.mean - acc / 5.0).abs() <= 1e-12);
}

#[test]
fn noiseless_ensemble_has_zero_residual_along_trajectory() {
    let mut spec = datagen::QuadraticEnsembleSpec::new(3, 12, 0.0, 4);
    spec.l_range = (1.0, 3.0);
    let ds = datagen::gen_quadratic_ensemble(&spec).unwrap();
    let scheme = SelectionScheme::min_k(3);
    let tr = run(
        &ds,
        &OptimizerConfig::new(scheme, 100, 1),
        &ParameterVector::zeros(3),
    )
    .unwrap();
    let eta = 0.5 / ds.max_lipschitz();
    for r in &tr.records {
        let s = exact_expected_step(&ds, &r.w, eta, &scheme).unwrap();
        assert_eq!(s.r_t, 0.0);
        assert!(s.holds);
    }
}

#[test]
fn run_csv_header_is_pinned() {
    let bytes = runs_to_csv(&[], None).unwrap();
    let text = String::from_utf8(bytes).unwrap();
    assert_eq!(
        text,
        "# mklsgd runs schema=1\n\
         problem,d,n,kappa,epsilon,noise_sigma,variant,k,order_index,seed,distance,converged,steps,wall_ms,loss_evals\n"
    );
}
