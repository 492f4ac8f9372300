use std::collections::{BTreeMap, BTreeSet};

use oodkit_core::corpus::PairLogits;
use oodkit_core::division::{
    by_detector, detect_failure, divide, downsample_category, judge_all, pairing_universe, purify_probs,
    sample_id_pairs, DetectorVerdict, DivisionConfig, DivisionError, PairKey, Trigger,
};
use proptest::prelude::*;

fn rec(image: &str, gt: &[usize], logits: &[f64]) -> PairLogits {
    PairLogits {
        detector_id: "d".into(),
        image_id: image.into(),
        gt_labels: gt.iter().copied().collect(),
        logits: logits.to_vec(),
    }
}

fn keys(items: &[(&str, usize)]) -> BTreeSet<PairKey> {
    items.iter().map(|(i, l)| PairKey::new(*i, *l)).collect()
}

fn verdicts(det: &str, universe: &BTreeSet<PairKey>, ood: &BTreeSet<PairKey>) -> Vec<DetectorVerdict> {
    universe
        .iter()
        .map(|k| DetectorVerdict {
            detector_id: det.into(),
            image_id: k.image_id.clone(),
            label: k.label,
            is_ood: ood.contains(k),
            match_prob: 0.5,
            trigger: if ood.contains(k) { Trigger::Case2Threshold } else { Trigger::None },
        })
        .collect()
}

fn config() -> DivisionConfig {
    DivisionConfig {
        threshold: 0.05,
        detector_ids: vec!["d1".into(), "d2".into()],
        seed: 0,
    }
}

#[test]
fn purify_masks_other_ground_truth_labels() {
    let p = purify_probs(&rec("i", &[0, 1], &[2.0, 2.0, 0.0]), 0).unwrap();
    assert!((p[0] - 0.8808).abs() < 1e-4);
    assert_eq!(p[1], 0.0);
    assert!((p[2] - 0.1192).abs() < 1e-4);

    let p = purify_probs(&rec("i", &[0], &[5.0, 0.0, 0.0]), 0).unwrap();
    let z = 5f64.exp() + 2.0;
    assert!((p[0] - 5f64.exp() / z).abs() < 1e-12);
    assert!((p[1] - 1.0 / z).abs() < 1e-12);

    assert!(matches!(
        purify_probs(&rec("i", &[0, 1], &[2.0, 2.0, 0.0]), 2),
        Err(DivisionError::SelectedNotGroundTruth { .. })
    ));
}

#[test]
fn failure_cases() {
    let v = detect_failure(&rec("i", &[0], &[0.0, 3.0, 0.0]), 0, 0.05).unwrap();
    assert!(v.is_ood);
    assert_eq!(v.trigger, Trigger::Both);
    assert!((v.match_prob - 0.0452).abs() < 1e-4);

    let v = detect_failure(&rec("i", &[0, 1], &[2.0, 2.0, 0.0]), 0, 0.05).unwrap();
    assert!(!v.is_ood);
    assert_eq!(v.trigger, Trigger::None);

    let v = detect_failure(&rec("i", &[0], &[1.0, 0.5, 0.2]), 0, 1e-300).unwrap();
    assert!(!v.is_ood);
    assert!(detect_failure(&rec("i", &[0], &[1.0, 0.5]), 0, 0.0).is_err());
    assert!(detect_failure(&rec("i", &[0], &[1.0, 0.5]), 0, 1.0).is_err());
}

#[test]
fn divide_set_algebra_examples() {
    let universe = keys(&[("a", 0), ("b", 0), ("c", 0), ("d", 0)]);
    let (p1, p2, p3) = (("a", 0), ("b", 0), ("c", 0));
    let run = |a: &[(&str, usize)], b: &[(&str, usize)]| {
        let mut v = BTreeMap::new();
        v.insert("d1".to_string(), verdicts("d1", &universe, &keys(a)));
        v.insert("d2".to_string(), verdicts("d2", &universe, &keys(b)));
        divide(&v, config()).unwrap()
    };
    let r = run(&[p1, p2], &[p2, p3]);
    assert_eq!(r.ood_hard, keys(&[p2]));
    assert_eq!(r.ood_simple, keys(&[p1, p3]));
    assert!(r.id_pairs.is_empty());
    assert_eq!(r.judged, universe);
    assert!(run(&[p1, p2], &[p1, p2]).ood_simple.is_empty());
    assert!(run(&[p1], &[p3]).ood_hard.is_empty());
    r.check_invariants().unwrap();
}

#[test]
fn divide_requires_full_coverage_and_two_detectors() {
    let universe = keys(&[("a", 0), ("b", 1)]);
    let mut v = BTreeMap::new();
    v.insert("d1".to_string(), verdicts("d1", &universe, &BTreeSet::new()));
    assert!(matches!(divide(&v, config()), Err(DivisionError::UnknownDetector(_))));
    let single = DivisionConfig {
        detector_ids: vec!["d1".into()],
        ..config()
    };
    assert!(matches!(divide(&v, single), Err(DivisionError::TooFewDetectors(1))));
    v.insert("d2".to_string(), verdicts("d2", &keys(&[("a", 0)]), &BTreeSet::new()));
    assert!(matches!(divide(&v, config()), Err(DivisionError::CoverageMismatch { .. })));
}

#[test]
fn id_sampling_examples() {
    let universe = pairing_universe(["a", "b", "c"], 4);
    assert_eq!(universe.len(), 12);
    let ood = keys(&[("a", 0), ("b", 3)]);
    let full = sample_id_pairs(&universe, &ood, 10, 1).unwrap();
    assert_eq!(full, universe.difference(&ood).cloned().collect());
    assert_eq!(sample_id_pairs(&universe, &ood, 5, 9).unwrap(), sample_id_pairs(&universe, &ood, 5, 9).unwrap());
    assert!(sample_id_pairs(&universe, &ood, 5, 9).unwrap().is_disjoint(&ood));
    assert!(matches!(
        sample_id_pairs(&universe, &ood, 11, 1),
        Err(DivisionError::InsufficientPool { requested: 11, available: 10 })
    ));
}

#[test]
fn downsampling_to_the_category_cap() {
    let big: BTreeSet<PairKey> = (0..26_000).map(|i| PairKey::new(format!("img-{i:05}"), i % 7)).collect();
    let small: BTreeSet<PairKey> = big.iter().take(5_000).cloned().collect();
    assert_eq!(downsample_category(&small, 6_000, 3).unwrap(), small);
    let cut = downsample_category(&big, 6_000, 3).unwrap();
    assert_eq!(cut.len(), 6_000);
    assert!(cut.is_subset(&big));
    assert_eq!(cut, downsample_category(&big, 6_000, 3).unwrap());
    assert_ne!(cut, downsample_category(&big, 6_000, 4).unwrap());
    assert!(matches!(downsample_category(&big, 0, 3), Err(DivisionError::ZeroCap)));
}

fn arb_record() -> impl Strategy<Value = PairLogits> {
    (2usize..8)
        .prop_flat_map(|n| (prop::collection::vec(-8.0f64..8.0, n), prop::collection::btree_set(0..n, 1..=n.min(3))))
        .prop_map(|(logits, gt)| PairLogits {
            detector_id: "d".into(),
            image_id: "img".into(),
            gt_labels: gt,
            logits,
        })
}

proptest! {
    #[test]
    fn purified_probabilities_sum_to_one(r in arb_record()) {
        for &sel in &r.gt_labels {
            let p = purify_probs(&r, sel).unwrap();
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for &g in &r.gt_labels {
                if g != sel {
                    prop_assert_eq!(p[g], 0.0);
                }
            }
        }
    }

    #[test]
    fn purify_preserves_the_logit_argmax(r in arb_record()) {
        for &sel in &r.gt_labels {
            let p = purify_probs(&r, sel).unwrap();
            let kept: Vec<usize> = (0..r.logits.len()).filter(|i| *i == sel || !r.gt_labels.contains(i)).collect();
            let by_logit = kept.iter().copied().max_by(|&a, &b| r.logits[a].total_cmp(&r.logits[b])).unwrap();
            let by_prob = kept.iter().copied().max_by(|&a, &b| p[a].total_cmp(&p[b])).unwrap();
            prop_assert_eq!(r.logits[by_logit], r.logits[by_prob]);
        }
    }

    #[test]
    fn ood_set_grows_with_the_threshold(records in prop::collection::vec(arb_record(), 1..20), t1 in 0.001f64..0.5, dt in 0.0f64..0.49) {
        let records: Vec<PairLogits> = records
            .into_iter()
            .enumerate()
            .map(|(i, mut r)| { r.image_id = format!("img-{i}"); r })
            .collect();
        let ood_at = |t: f64| -> BTreeSet<PairKey> {
            judge_all(&records, t).unwrap().iter().filter(|v| v.is_ood).map(DetectorVerdict::key).collect()
        };
        prop_assert!(ood_at(t1).is_subset(&ood_at(t1 + dt)));
    }

    #[test]
    fn division_partitions_the_ood_union(
        a in prop::collection::btree_set(0usize..30, 0..30),
        b in prop::collection::btree_set(0usize..30, 0..30),
        seed in any::<u64>(),
    ) {
        let universe: BTreeSet<PairKey> = (0..30).map(|i| PairKey::new(format!("i{}", i / 2), i % 2)).collect();
        let to_keys = |s: &BTreeSet<usize>| -> BTreeSet<PairKey> {
            s.iter().map(|&i| PairKey::new(format!("i{}", i / 2), i % 2)).collect()
        };
        let (ka, kb) = (to_keys(&a), to_keys(&b));
        let all: Vec<DetectorVerdict> = verdicts("d1", &universe, &ka).into_iter().chain(verdicts("d2", &universe, &kb)).collect();
        let r = divide(&by_detector(all), DivisionConfig { seed, ..config() }).unwrap();
        r.check_invariants().unwrap();
        prop_assert_eq!(&r.ood_hard, &ka.intersection(&kb).cloned().collect());
        prop_assert_eq!(r.ood_union(), ka.union(&kb).cloned().collect());
        prop_assert!(r.id_pairs.is_disjoint(&r.ood_union()));
    }
}
