use oodkit_core::questiongen::YesNo;
use oodkit_core::scoring::Parsed;
use oodkit_core::shifttests::{
    bootstrap_equivalence, degradation_perm_test, homogeneous_tau, joint_kernel, mmd2, mmd_permutation_uci,
    tost_distribution, EtaMode, Estimator, JointSample, Metric, ModelOutcomes, Outcome, ShiftError, TauSplit,
};
use oodkit_core::stats::order_statistic_rank;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn sample(points: &[(&[f64], usize)]) -> JointSample {
    JointSample::new(points.iter().map(|(v, c)| (v.to_vec(), *c)).collect()).unwrap()
}

fn gaussian_sample(rng: &mut StdRng, n: usize, shift: f64) -> JointSample {
    JointSample::new(
        (0..n)
            .map(|_| {
                let v = (0..3).map(|_| rng.random_range(-1.0..1.0) + shift).collect();
                (v, rng.random_range(0..2))
            })
            .collect(),
    )
    .unwrap()
}

#[test]
fn kernel_examples() {
    let v = [0.3, -1.0];
    assert_eq!(joint_kernel((&v, 2), (&v, 2), 0.7).unwrap(), 1.0);
    assert_eq!(joint_kernel((&v, 1), (&v, 2), 0.7).unwrap(), 0.0);
    let h = 1.3;
    let w = [0.3 + h * 2f64.sqrt(), -1.0];
    assert!((joint_kernel((&v, 0), (&w, 0), h).unwrap() - (-1f64).exp()).abs() < 1e-12);
    assert!(joint_kernel((&v, 0), (&w, 0), 0.0).is_err());
}

#[test]
fn mmd_singletons() {
    let x = sample(&[(&[1.0, 2.0], 0)]);
    let y = sample(&[(&[1.0, 2.0], 1)]);
    assert!((mmd2(&x, &y, Some(1.0), Estimator::Biased).unwrap().mmd2 - 2.0).abs() < 1e-12);
    let z = sample(&[(&[1.0, 2.0], 0)]);
    assert!(mmd2(&x, &z, Some(1.0), Estimator::Biased).unwrap().mmd2.abs() < 1e-12);
    assert!(matches!(
        mmd2(&x, &z, Some(1.0), Estimator::Unbiased),
        Err(ShiftError::TooFewPoints { .. })
    ));
}

#[test]
fn mmd_rejects_mixed_dimensions() {
    assert!(JointSample::new(vec![(vec![1.0], 0), (vec![1.0, 2.0], 0)]).is_err());
    let x = sample(&[(&[1.0], 0), (&[2.0], 0)]);
    let y = sample(&[(&[1.0, 0.0], 0), (&[2.0, 0.0], 0)]);
    assert!(mmd2(&x, &y, Some(1.0), Estimator::Biased).is_err());
}

#[test]
fn tau_is_seed_deterministic_and_a_replicate_quantile() {
    let mut rng = StdRng::seed_from_u64(3);
    let d = gaussian_sample(&mut rng, 40, 0.0);
    let a = homogeneous_tau(&d, 50, 0.95, 1.0, TauSplit::Halves, 8).unwrap();
    let b = homogeneous_tau(&d, 50, 0.95, 1.0, TauSplit::Halves, 8).unwrap();
    assert_eq!(a, b);
    let max = a.replicates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(homogeneous_tau(&d, 50, 1.0, 1.0, TauSplit::Halves, 8).unwrap().tau, max);
    let mut sorted = a.replicates.clone();
    sorted.sort_by(f64::total_cmp);
    assert_eq!(a.tau, sorted[order_statistic_rank(0.95, 50) - 1]);
    assert!(homogeneous_tau(&d, 10, 0.95, 1.0, TauSplit::Fixed(30), 8).is_err());
    assert!(homogeneous_tau(&sample(&[(&[0.0][..], 0); 3]), 10, 0.95, 1.0, TauSplit::Halves, 8).is_err());
}

#[test]
fn tau_of_a_constant_sample_is_that_constant() {
    let d = sample(&[(&[0.5, 0.5][..], 1); 12]);
    let t = homogeneous_tau(&d, 20, 0.95, 1.0, TauSplit::Halves, 1).unwrap();
    assert!(t.replicates.iter().all(|&r| (r - t.replicates[0]).abs() < 1e-12));
    assert!((t.tau - t.replicates[0]).abs() < 1e-12);
}

#[test]
fn permutation_uci_single_replicate_and_determinism() {
    let mut rng = StdRng::seed_from_u64(4);
    let x = gaussian_sample(&mut rng, 15, 0.0);
    let y = gaussian_sample(&mut rng, 15, 0.0);
    let one = mmd_permutation_uci(&x, &y, 1, 0.95, 1.0, 5).unwrap();
    assert_eq!(one.null.len(), 1);
    assert_eq!(one.uci, one.null[0]);
    let a = mmd_permutation_uci(&x, &y, 200, 0.95, 1.0, 5).unwrap();
    assert_eq!(a, mmd_permutation_uci(&x, &y, 200, 0.95, 1.0, 5).unwrap());
    let mut sorted = a.null.clone();
    sorted.sort_by(f64::total_cmp);
    assert_eq!(a.uci, sorted[189]);
}

#[test]
fn permutation_uci_covers_the_null_at_roughly_its_level() {
    let mut below = 0;
    let runs = 60;
    for seed in 0..runs {
        let mut rng = StdRng::seed_from_u64(100 + seed);
        let x = gaussian_sample(&mut rng, 12, 0.0);
        let y = gaussian_sample(&mut rng, 12, 0.0);
        let r = mmd_permutation_uci(&x, &y, 100, 0.95, 1.0, seed).unwrap();
        if r.observed < r.uci {
            below += 1;
        }
    }
    assert!(below >= 48, "observed below UCI in {below}/{runs} null runs");
}

#[test]
fn tost_distribution_examples() {
    assert!(tost_distribution(3.9e-4, 4.47e-4).unwrap().equivalent);
    assert!(!tost_distribution(4.47e-4, 4.47e-4).unwrap().equivalent);
    assert!(tost_distribution(1e9, f64::INFINITY).unwrap().equivalent);
    assert!(tost_distribution(0.1, 0.0).is_err());
}

fn outcomes(rng: &mut StdRng, n: usize, acc: f64) -> Vec<Outcome> {
    (0..n)
        .map(|_| {
            let gold = YesNo::from_bool(rng.random_bool(0.5));
            let right = rng.random_bool(acc);
            let p = if (gold == YesNo::Yes) == right { Parsed::Yes } else { Parsed::No };
            (p, gold)
        })
        .collect()
}

#[test]
fn degradation_floor_and_ceiling() {
    let mut rng = StdRng::seed_from_u64(1);
    let id = outcomes(&mut rng, 80, 1.0);
    let ood = outcomes(&mut rng, 80, 0.0);
    let t = degradation_perm_test(&id, &ood, Metric::Accuracy, 2000, 3).unwrap();
    assert_eq!(t.exceedances, 0);
    assert_eq!(t.p_value, 1.0 / 2001.0);
    let t = degradation_perm_test(&ood, &id, Metric::Accuracy, 300, 3).unwrap();
    assert_eq!(t.p_value, 1.0);
    assert!(degradation_perm_test(&[], &ood, Metric::Accuracy, 10, 3).is_err());
}

#[test]
fn degradation_identical_scores_give_large_p() {
    let mut rng = StdRng::seed_from_u64(2);
    let id = outcomes(&mut rng, 60, 0.7);
    let t = degradation_perm_test(&id, &id, Metric::F1, 500, 9).unwrap();
    assert_eq!(t.delta_obs, 0.0);
    assert!(t.p_value >= 0.3, "p = {}", t.p_value);
}

#[test]
fn degradation_p_values_are_super_uniform_under_the_null() {
    let runs = 200;
    let mut rejections = 0;
    for seed in 0..runs {
        let mut rng = StdRng::seed_from_u64(1000 + seed);
        let pooled = outcomes(&mut rng, 60, 0.7);
        let (id, ood) = pooled.split_at(30);
        let t = degradation_perm_test(id, ood, Metric::Accuracy, 199, seed).unwrap();
        if t.p_value <= 0.1 {
            rejections += 1;
        }
    }
    // binomial(200, 0.1) slack: mean 20, sd ~4.2
    assert!(rejections <= 33, "{rejections}/{runs} null runs rejected at 0.1");
}

fn model(id: &str, rng: &mut StdRng, acc_id: f64, acc_ood: f64) -> ModelOutcomes {
    ModelOutcomes {
        model_id: id.into(),
        id: outcomes(rng, 150, acc_id),
        ood: outcomes(rng, 150, acc_ood),
    }
}

fn align(mut m: ModelOutcomes, golds: &ModelOutcomes) -> ModelOutcomes {
    for (o, g) in m.id.iter_mut().zip(&golds.id) {
        o.1 = g.1;
    }
    for (o, g) in m.ood.iter_mut().zip(&golds.ood) {
        o.1 = g.1;
    }
    m
}

#[test]
fn bootstrap_equivalence_with_matching_degradation() {
    let mut rng = StdRng::seed_from_u64(6);
    let closed = model("closed", &mut rng, 0.9, 0.7);
    let open: Vec<ModelOutcomes> = (0..3)
        .map(|i| align(model(&format!("open-{i}"), &mut rng, 0.9, 0.7), &closed))
        .collect();
    let t = bootstrap_equivalence(&closed, &open, Metric::Accuracy, 400, EtaMode::SigmaOpen, 2).unwrap();
    assert_eq!(t, bootstrap_equivalence(&closed, &open, Metric::Accuracy, 400, EtaMode::SigmaOpen, 2).unwrap());
    assert!(t.eta > 0.0);
    assert!(t.ci90.0 <= t.ci90.1);
    assert_eq!(t.open_cis.len(), 3);

    let explicit = bootstrap_equivalence(&closed, &open, Metric::Accuracy, 400, EtaMode::Explicit(1e-6), 2).unwrap();
    assert_eq!(explicit.eta, 1e-6);
    assert!(!explicit.equivalent);
    assert!(bootstrap_equivalence(&closed, &open, Metric::Accuracy, 99, EtaMode::SigmaOpen, 2).is_err());
    assert!(matches!(
        bootstrap_equivalence(&closed, &[], Metric::Accuracy, 200, EtaMode::SigmaOpen, 2),
        Err(ShiftError::NoOpenModels)
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn biased_mmd_is_non_negative(seed in any::<u64>(), n in 1usize..12, m in 1usize..12, h in 0.2f64..4.0) {
        let mut rng = StdRng::seed_from_u64(seed);
        let x = gaussian_sample(&mut rng, n, 0.0);
        let y = gaussian_sample(&mut rng, m, 0.5);
        prop_assert!(mmd2(&x, &y, Some(h), Estimator::Biased).unwrap().mmd2 >= -1e-12);
    }

    #[test]
    fn mmd_is_symmetric(seed in any::<u64>(), n in 2usize..10, m in 2usize..10) {
        let mut rng = StdRng::seed_from_u64(seed);
        let x = gaussian_sample(&mut rng, n, 0.0);
        let y = gaussian_sample(&mut rng, m, 0.3);
        for est in [Estimator::Biased, Estimator::Unbiased] {
            let a = mmd2(&x, &y, Some(1.0), est).unwrap().mmd2;
            let b = mmd2(&y, &x, Some(1.0), est).unwrap().mmd2;
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn unbiased_mmd_centres_on_zero_under_identical_sampling() {
    let runs = 200;
    let mean: f64 = (0..runs)
        .map(|seed| {
            let mut rng = StdRng::seed_from_u64(seed);
            let x = gaussian_sample(&mut rng, 20, 0.0);
            let y = gaussian_sample(&mut rng, 20, 0.0);
            mmd2(&x, &y, Some(1.0), Estimator::Unbiased).unwrap().mmd2
        })
        .sum::<f64>()
        / runs as f64;
    assert!(mean.abs() < 5e-3, "mean unbiased MMD² {mean}");
}
