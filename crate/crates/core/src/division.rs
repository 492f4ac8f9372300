//! Detector-driven division of image–category pairs into ID, OOD-Simple and
//! OOD-Hard.
//!
//! For every image and every one of its ground-truth labels (the *selected*
//! label), the other ground-truth labels are masked out before the softmax
//! ("purify"), so co-occurring objects do not dilute the selected label's
//! match probability. A detector then fails on the pair when
//!
//! 1. some label absent from the image gets a strictly higher purified
//!    probability than the selected label, or
//! 2. the selected label's purified probability is below the threshold `T`.
//!
//! Pairs failed by every detector form OOD-Hard; pairs failed by some but not
//! all detectors form OOD-Simple.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{LabelSpace, PairLogits, Unresolved};
use crate::rng::keyed_rng;

pub const DEFAULT_THRESHOLD: f64 = 0.05;
pub const DEFAULT_CATEGORY_CAP: usize = 6000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DivisionError {
    #[error("label {label} is not a ground-truth label of image `{image_id}`")]
    SelectedNotGroundTruth { image_id: String, label: usize },
    #[error("threshold must lie strictly between 0 and 1, got {0}")]
    InvalidThreshold(f64),
    #[error("division needs at least two detectors, got {0}")]
    TooFewDetectors(usize),
    #[error("no verdicts for detector `{0}`")]
    UnknownDetector(String),
    #[error("pair ({image_id}, {label}) is judged by `{present_in}` but not by `{missing_in}`")]
    CoverageMismatch {
        image_id: String,
        label: usize,
        present_in: String,
        missing_in: String,
    },
    #[error("detector `{detector_id}` judged pair ({image_id}, {label}) more than once")]
    DuplicateVerdict {
        detector_id: String,
        image_id: String,
        label: usize,
    },
    #[error("requested {requested} pairs but only {available} are available")]
    InsufficientPool { requested: usize, available: usize },
    #[error("category cap must be positive")]
    ZeroCap,
}

/// An (image, label index) unit of the benchmark.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PairKey {
    pub image_id: String,
    pub label: usize,
}

impl PairKey {
    pub fn new(image_id: impl Into<String>, label: usize) -> Self {
        Self {
            image_id: image_id.into(),
            label,
        }
    }

    pub fn named(&self, space: &LabelSpace) -> NamedPair {
        NamedPair {
            image_id: self.image_id.clone(),
            label: space.name(self.label).to_string(),
        }
    }
}

/// A [`PairKey`] as it appears in files.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NamedPair {
    pub image_id: String,
    pub label: String,
}

impl NamedPair {
    pub fn resolve(&self, space: &LabelSpace) -> Result<PairKey, Unresolved> {
        Ok(PairKey::new(self.image_id.clone(), space.resolve(&self.label)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trigger {
    None,
    Case1Rival,
    Case2Threshold,
    Both,
}

impl Trigger {
    fn from_cases(rival: bool, below: bool) -> Self {
        match (rival, below) {
            (false, false) => Trigger::None,
            (true, false) => Trigger::Case1Rival,
            (false, true) => Trigger::Case2Threshold,
            (true, true) => Trigger::Both,
        }
    }
}

/// One detector's judgement of one (image, selected label) unit.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorVerdict {
    pub detector_id: String,
    pub image_id: String,
    pub label: usize,
    pub is_ood: bool,
    pub match_prob: f64,
    pub trigger: Trigger,
}

impl DetectorVerdict {
    pub fn key(&self) -> PairKey {
        PairKey::new(self.image_id.clone(), self.label)
    }

    pub fn to_record(&self, space: &LabelSpace) -> VerdictRecord {
        VerdictRecord {
            detector_id: self.detector_id.clone(),
            image_id: self.image_id.clone(),
            label: space.name(self.label).to_string(),
            is_ood: self.is_ood,
            match_prob: self.match_prob,
            trigger: self.trigger,
        }
    }
}

/// Line of `verdicts.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictRecord {
    pub detector_id: String,
    pub image_id: String,
    pub label: String,
    pub is_ood: bool,
    pub match_prob: f64,
    pub trigger: Trigger,
}

impl VerdictRecord {
    pub fn into_verdict(self, space: &LabelSpace) -> Result<DetectorVerdict, Unresolved> {
        Ok(DetectorVerdict {
            label: space.resolve(&self.label)?,
            detector_id: self.detector_id,
            image_id: self.image_id,
            is_ood: self.is_ood,
            match_prob: self.match_prob,
            trigger: self.trigger,
        })
    }
}

/// Softmax over the logits with every ground-truth label other than
/// `selected` masked out. Masked entries are exactly zero.
pub fn purify_probs(rec: &PairLogits, selected: usize) -> Result<Vec<f64>, DivisionError> {
    if !rec.gt_labels.contains(&selected) {
        return Err(DivisionError::SelectedNotGroundTruth {
            image_id: rec.image_id.clone(),
            label: selected,
        });
    }
    let masked = |i: usize| i != selected && rec.gt_labels.contains(&i);
    let max = rec
        .logits
        .iter()
        .enumerate()
        .filter(|(i, _)| !masked(*i))
        .map(|(_, &l)| l)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut probs: Vec<f64> = rec
        .logits
        .iter()
        .enumerate()
        .map(|(i, &l)| if masked(i) { 0.0 } else { (l - max).exp() })
        .collect();
    let total: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= total;
    }
    Ok(probs)
}

pub fn check_threshold(threshold: f64) -> Result<(), DivisionError> {
    if threshold > 0.0 && threshold < 1.0 {
        Ok(())
    } else {
        Err(DivisionError::InvalidThreshold(threshold))
    }
}

/// Judge the unit `(rec.image_id, selected)`.
pub fn detect_failure(rec: &PairLogits, selected: usize, threshold: f64) -> Result<DetectorVerdict, DivisionError> {
    check_threshold(threshold)?;
    let probs = purify_probs(rec, selected)?;
    let match_prob = probs[selected];
    let rival = probs
        .iter()
        .enumerate()
        .any(|(i, &p)| !rec.gt_labels.contains(&i) && p > match_prob);
    let below = match_prob < threshold;
    let trigger = Trigger::from_cases(rival, below);
    Ok(DetectorVerdict {
        detector_id: rec.detector_id.clone(),
        image_id: rec.image_id.clone(),
        label: selected,
        is_ood: trigger != Trigger::None,
        match_prob,
        trigger,
    })
}

/// Verdicts for every ground-truth label of every record, sorted by
/// `(detector, image, label)`.
pub fn judge_all(records: &[PairLogits], threshold: f64) -> Result<Vec<DetectorVerdict>, DivisionError> {
    check_threshold(threshold)?;
    let mut out: Vec<DetectorVerdict> = records
        .par_iter()
        .flat_map_iter(|rec| {
            rec.gt_labels
                .iter()
                .map(move |&label| detect_failure(rec, label, threshold))
        })
        .collect::<Result<_, _>>()?;
    out.sort_by(|a, b| {
        (&a.detector_id, &a.image_id, a.label).cmp(&(&b.detector_id, &b.image_id, b.label))
    });
    Ok(out)
}

/// Group verdicts by detector id.
pub fn by_detector(verdicts: Vec<DetectorVerdict>) -> BTreeMap<String, Vec<DetectorVerdict>> {
    let mut out: BTreeMap<String, Vec<DetectorVerdict>> = BTreeMap::new();
    for v in verdicts {
        out.entry(v.detector_id.clone()).or_default().push(v);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivisionConfig {
    pub threshold: f64,
    pub detector_ids: Vec<String>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DivisionResult {
    pub ood_hard: BTreeSet<PairKey>,
    pub ood_simple: BTreeSet<PairKey>,
    pub id_pairs: BTreeSet<PairKey>,
    pub per_detector: BTreeMap<String, BTreeSet<PairKey>>,
    /// Every unit judged by the detectors.
    pub judged: BTreeSet<PairKey>,
    pub config: DivisionConfig,
}

impl DivisionResult {
    pub fn ood_union(&self) -> BTreeSet<PairKey> {
        self.ood_hard.union(&self.ood_simple).cloned().collect()
    }

    /// Check the set algebra tying the three splits to the detector sets.
    pub fn check_invariants(&self) -> Result<(), String> {
        if !self.ood_hard.is_disjoint(&self.ood_simple) {
            return Err("hard and simple overlap".into());
        }
        let union: BTreeSet<PairKey> = self.per_detector.values().flatten().cloned().collect();
        if union != self.ood_union() {
            return Err("hard + simple differs from the union of detector OOD sets".into());
        }
        let mut sets = self.per_detector.values();
        let intersection = match sets.next() {
            Some(first) => sets.fold(first.clone(), |acc, s| acc.intersection(s).cloned().collect()),
            None => BTreeSet::new(),
        };
        if intersection != self.ood_hard {
            return Err("hard differs from the intersection of detector OOD sets".into());
        }
        if !self.id_pairs.is_disjoint(&self.ood_hard) || !self.id_pairs.is_disjoint(&self.ood_simple) {
            return Err("ID pairs overlap an OOD split".into());
        }
        Ok(())
    }
}

/// Combine per-detector verdicts. `config.detector_ids` picks which
/// detectors take part, in order; hard is the intersection of their OOD sets
/// and simple the rest of the union. `id_pairs` is left empty (see
/// [`sample_id_pairs`]).
pub fn divide(
    verdicts: &BTreeMap<String, Vec<DetectorVerdict>>,
    config: DivisionConfig,
) -> Result<DivisionResult, DivisionError> {
    if config.detector_ids.len() < 2 {
        return Err(DivisionError::TooFewDetectors(config.detector_ids.len()));
    }
    let mut judged_sets = Vec::with_capacity(config.detector_ids.len());
    let mut per_detector = BTreeMap::new();
    for det in &config.detector_ids {
        let list = verdicts
            .get(det)
            .ok_or_else(|| DivisionError::UnknownDetector(det.clone()))?;
        let mut judged = BTreeSet::new();
        let mut ood = BTreeSet::new();
        for v in list {
            let key = v.key();
            if v.is_ood {
                ood.insert(key.clone());
            }
            if !judged.insert(key) {
                return Err(DivisionError::DuplicateVerdict {
                    detector_id: det.clone(),
                    image_id: v.image_id.clone(),
                    label: v.label,
                });
            }
        }
        judged_sets.push(judged);
        per_detector.insert(det.clone(), ood);
    }

    let reference = &judged_sets[0];
    for (det, judged) in config.detector_ids.iter().zip(&judged_sets).skip(1) {
        if let Some(p) = judged.difference(reference).next() {
            return Err(DivisionError::CoverageMismatch {
                image_id: p.image_id.clone(),
                label: p.label,
                present_in: det.clone(),
                missing_in: config.detector_ids[0].clone(),
            });
        }
        if let Some(p) = reference.difference(judged).next() {
            return Err(DivisionError::CoverageMismatch {
                image_id: p.image_id.clone(),
                label: p.label,
                present_in: config.detector_ids[0].clone(),
                missing_in: det.clone(),
            });
        }
    }

    let mut sets = config.detector_ids.iter().map(|d| &per_detector[d]);
    let first = sets.next().expect("at least two detectors").clone();
    let (hard, union) = sets.fold((first.clone(), first), |(hard, union), s| {
        (
            hard.intersection(s).cloned().collect::<BTreeSet<_>>(),
            union.union(s).cloned().collect::<BTreeSet<_>>(),
        )
    });
    let simple = union.difference(&hard).cloned().collect();

    Ok(DivisionResult {
        ood_hard: hard,
        ood_simple: simple,
        id_pairs: BTreeSet::new(),
        per_detector,
        judged: judged_sets.swap_remove(0),
        config,
    })
}

/// All (image, label) combinations over the given images and `n_labels`
/// labels: the random-pairing universe for ID sampling.
pub fn pairing_universe<'a>(image_ids: impl IntoIterator<Item = &'a str>, n_labels: usize) -> BTreeSet<PairKey> {
    image_ids
        .into_iter()
        .flat_map(|img| (0..n_labels).map(move |l| PairKey::new(img, l)))
        .collect()
}

fn sample_subset(pool: Vec<&PairKey>, count: usize, seed: u64, purpose: &str) -> BTreeSet<PairKey> {
    let mut rng = keyed_rng(seed, purpose);
    index::sample(&mut rng, pool.len(), count)
        .into_iter()
        .map(|i| pool[i].clone())
        .collect()
}

/// Uniform sample without replacement of `count` pairs from `universe \ ood`.
pub fn sample_id_pairs(
    universe: &BTreeSet<PairKey>,
    ood: &BTreeSet<PairKey>,
    count: usize,
    seed: u64,
) -> Result<BTreeSet<PairKey>, DivisionError> {
    let pool: Vec<&PairKey> = universe.difference(ood).collect();
    if count > pool.len() {
        return Err(DivisionError::InsufficientPool {
            requested: count,
            available: pool.len(),
        });
    }
    Ok(sample_subset(pool, count, seed, "id-pairs"))
}

/// Cap a split at `cap` pairs by uniform subsampling; smaller splits pass
/// through unchanged.
pub fn downsample_category(pairs: &BTreeSet<PairKey>, cap: usize, seed: u64) -> Result<BTreeSet<PairKey>, DivisionError> {
    if cap == 0 {
        return Err(DivisionError::ZeroCap);
    }
    if pairs.len() <= cap {
        return Ok(pairs.clone());
    }
    Ok(sample_subset(pairs.iter().collect(), cap, seed, "downsample"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rec(gt: &[usize], logits: &[f64]) -> PairLogits {
        PairLogits {
            detector_id: "d".into(),
            image_id: "img".into(),
            gt_labels: gt.iter().copied().collect(),
            logits: logits.to_vec(),
        }
    }

    // Softmax of a vector where masked entries are literal -inf; computed
    // without max-subtraction to stay independent of the implementation.
    fn naive_softmax(logits: &[Option<f64>]) -> Vec<f64> {
        let exps: Vec<f64> = logits.iter().map(|l| l.map_or(0.0, f64::exp)).collect();
        let total: f64 = exps.iter().sum();
        exps.iter().map(|e| e / total).collect()
    }

    #[test]
    fn purify_masks_other_ground_truth() {
        let probs = purify_probs(&rec(&[0, 1], &[2.0, 2.0, 0.0]), 0).unwrap();
        let oracle = naive_softmax(&[Some(2.0), None, Some(0.0)]);
        assert_eq!(probs[1], 0.0);
        assert!((probs[0] - 0.8808).abs() < 1e-4);
        assert!((probs[2] - 0.1192).abs() < 1e-4);
        for (p, o) in probs.iter().zip(&oracle) {
            assert!((p - o).abs() < 1e-15);
        }
    }

    #[test]
    fn purify_single_label_is_plain_softmax() {
        let probs = purify_probs(&rec(&[0], &[5.0, 0.0, 0.0]), 0).unwrap();
        let oracle = naive_softmax(&[Some(5.0), Some(0.0), Some(0.0)]);
        for (p, o) in probs.iter().zip(&oracle) {
            assert!((p - o).abs() < 1e-15);
        }
    }

    #[test]
    fn purify_rejects_non_ground_truth_selection() {
        assert_eq!(
            purify_probs(&rec(&[0, 1], &[2.0, 2.0, 0.0]), 2),
            Err(DivisionError::SelectedNotGroundTruth {
                image_id: "img".into(),
                label: 2
            })
        );
    }

    #[test]
    fn rival_and_threshold_both_fire() {
        let v = detect_failure(&rec(&[0], &[0.0, 3.0, 0.0]), 0, 0.05).unwrap();
        assert!(v.is_ood);
        assert_eq!(v.trigger, Trigger::Both);
        assert!((v.match_prob - 0.0452).abs() < 1e-4);
    }

    #[test]
    fn rival_only() {
        let v = detect_failure(&rec(&[0], &[0.0, 0.5, -5.0]), 0, 0.05).unwrap();
        assert_eq!(v.trigger, Trigger::Case1Rival);
    }

    #[test]
    fn co_occurring_label_is_not_a_rival() {
        let v = detect_failure(&rec(&[0, 1], &[2.0, 2.0, 0.0]), 0, 0.05).unwrap();
        assert!(!v.is_ood);
        assert_eq!(v.trigger, Trigger::None);
        // without purify the second gt label would pull P(A) to ~0.47
        assert!((v.match_prob - 0.8808).abs() < 1e-4);
    }

    #[test]
    fn ties_are_not_failures() {
        let v = detect_failure(&rec(&[0], &[1.0, 1.0]), 0, 0.05).unwrap();
        assert_eq!(v.trigger, Trigger::None);
    }

    #[test]
    fn tiny_threshold_with_maximal_selection() {
        let v = detect_failure(&rec(&[2], &[-1.0, 0.0, 4.0]), 2, 1e-12).unwrap();
        assert!(!v.is_ood);
    }

    #[test]
    fn threshold_bounds() {
        let r = rec(&[0], &[0.0, 0.0]);
        for t in [0.0, 1.0, -0.1, f64::NAN] {
            assert!(detect_failure(&r, 0, t).is_err());
        }
    }

    fn verdict(det: &str, img: &str, label: usize, ood: bool) -> DetectorVerdict {
        DetectorVerdict {
            detector_id: det.into(),
            image_id: img.into(),
            label,
            is_ood: ood,
            match_prob: 0.5,
            trigger: if ood { Trigger::Case2Threshold } else { Trigger::None },
        }
    }

    fn config(dets: &[&str]) -> DivisionConfig {
        DivisionConfig {
            threshold: 0.05,
            detector_ids: dets.iter().map(|s| s.to_string()).collect(),
            seed: 0,
        }
    }

    fn two_detectors(d1: [bool; 4], d2: [bool; 4]) -> BTreeMap<String, Vec<DetectorVerdict>> {
        let mut m = BTreeMap::new();
        m.insert("d1".to_string(), (0..4).map(|i| verdict("d1", &format!("p{i}"), 0, d1[i])).collect());
        m.insert("d2".to_string(), (0..4).map(|i| verdict("d2", &format!("p{i}"), 0, d2[i])).collect());
        m
    }

    fn keys(ids: &[usize]) -> BTreeSet<PairKey> {
        ids.iter().map(|i| PairKey::new(format!("p{i}"), 0)).collect()
    }

    #[test]
    fn hard_is_intersection_simple_is_symmetric_difference() {
        let v = two_detectors([false, true, true, false], [false, false, true, true]);
        let r = divide(&v, config(&["d1", "d2"])).unwrap();
        assert_eq!(r.ood_hard, keys(&[2]));
        assert_eq!(r.ood_simple, keys(&[1, 3]));
        r.check_invariants().unwrap();
    }

    #[test]
    fn identical_and_disjoint_sets() {
        let same = divide(&two_detectors([true, true, false, false], [true, true, false, false]), config(&["d1", "d2"])).unwrap();
        assert!(same.ood_simple.is_empty());
        let apart = divide(&two_detectors([true, true, false, false], [false, false, true, true]), config(&["d1", "d2"])).unwrap();
        assert!(apart.ood_hard.is_empty());
        assert_eq!(apart.ood_simple.len(), 4);
    }

    #[test]
    fn coverage_mismatch_detected() {
        let mut v = two_detectors([false; 4], [false; 4]);
        v.get_mut("d2").unwrap().pop();
        assert!(matches!(
            divide(&v, config(&["d1", "d2"])),
            Err(DivisionError::CoverageMismatch { .. })
        ));
    }

    #[test]
    fn needs_two_known_detectors() {
        let v = two_detectors([false; 4], [false; 4]);
        assert_eq!(divide(&v, config(&["d1"])), Err(DivisionError::TooFewDetectors(1)));
        assert_eq!(
            divide(&v, config(&["d1", "d9"])),
            Err(DivisionError::UnknownDetector("d9".into()))
        );
    }

    #[test]
    fn three_detectors_generalise() {
        let mut v = two_detectors([true, true, false, true], [true, false, false, true]);
        v.insert("d3".into(), (0..4).map(|i| verdict("d3", &format!("p{i}"), 0, i == 0)).collect());
        let r = divide(&v, config(&["d1", "d2", "d3"])).unwrap();
        assert_eq!(r.ood_hard, keys(&[0]));
        assert_eq!(r.ood_simple, keys(&[1, 3]));
        r.check_invariants().unwrap();
    }

    #[test]
    fn id_sampling() {
        let universe = pairing_universe(["a", "b", "c"], 2);
        let ood = BTreeSet::from([PairKey::new("a", 0)]);
        let all = sample_id_pairs(&universe, &ood, 5, 1).unwrap();
        assert_eq!(all, universe.difference(&ood).cloned().collect());
        let s1 = sample_id_pairs(&universe, &ood, 3, 42).unwrap();
        let s2 = sample_id_pairs(&universe, &ood, 3, 42).unwrap();
        assert_eq!(s1, s2);
        assert!(s1.is_disjoint(&ood));
        assert_eq!(
            sample_id_pairs(&universe, &ood, 6, 1),
            Err(DivisionError::InsufficientPool { requested: 6, available: 5 })
        );
    }

    #[test]
    fn downsampling_caps() {
        let small: BTreeSet<PairKey> = (0..5000).map(|i| PairKey::new(format!("i{i}"), 0)).collect();
        assert_eq!(downsample_category(&small, DEFAULT_CATEGORY_CAP, 3).unwrap(), small);
        let big: BTreeSet<PairKey> = (0..26_000).map(|i| PairKey::new(format!("i{i}"), i % 3)).collect();
        let a = downsample_category(&big, DEFAULT_CATEGORY_CAP, 3).unwrap();
        assert_eq!(a.len(), 6000);
        assert!(a.is_subset(&big));
        assert_eq!(a, downsample_category(&big, DEFAULT_CATEGORY_CAP, 3).unwrap());
        assert_ne!(a, downsample_category(&big, DEFAULT_CATEGORY_CAP, 4).unwrap());
        assert_eq!(downsample_category(&big, 0, 3), Err(DivisionError::ZeroCap));
    }

    fn arb_record() -> impl Strategy<Value = (PairLogits, usize)> {
        (2usize..=8)
            .prop_flat_map(|n| {
                (
                    prop::collection::vec(-20.0f64..20.0, n),
                    prop::collection::btree_set(0..n, 1..=n.min(3)),
                )
            })
            .prop_flat_map(|(logits, gt)| {
                let gt_vec: Vec<usize> = gt.iter().copied().collect();
                (Just(logits), Just(gt), prop::sample::select(gt_vec))
            })
            .prop_map(|(logits, gt, sel)| {
                (
                    PairLogits {
                        detector_id: "d".into(),
                        image_id: "x".into(),
                        gt_labels: gt,
                        logits,
                    },
                    sel,
                )
            })
    }

    proptest! {
        #[test]
        fn purified_probabilities_normalise((r, sel) in arb_record()) {
            let probs = purify_probs(&r, sel).unwrap();
            let total: f64 = probs.iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            for &g in &r.gt_labels {
                if g != sel {
                    prop_assert_eq!(probs[g], 0.0);
                }
            }
        }

        #[test]
        fn purify_preserves_argmax((r, sel) in arb_record()) {
            let probs = purify_probs(&r, sel).unwrap();
            let unmasked: Vec<usize> = (0..r.logits.len())
                .filter(|i| *i == sel || !r.gt_labels.contains(i))
                .collect();
            let by_logit = unmasked.iter().copied().max_by(|&a, &b| r.logits[a].total_cmp(&r.logits[b])).unwrap();
            let by_prob = unmasked.iter().copied().max_by(|&a, &b| probs[a].total_cmp(&probs[b])).unwrap();
            prop_assert_eq!(probs[by_logit], probs[by_prob]);
        }

        #[test]
        fn ood_set_grows_with_threshold((r, sel) in arb_record(), t1 in 0.001f64..0.5, dt in 0.0f64..0.49) {
            let lo = detect_failure(&r, sel, t1).unwrap();
            let hi = detect_failure(&r, sel, t1 + dt).unwrap();
            prop_assert!(!lo.is_ood || hi.is_ood);
        }
    }
}
