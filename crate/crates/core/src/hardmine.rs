//! Hard-sample mining by focal-loss scoring, plus the helpers used to show
//! that mined hard samples behave differently from OOD samples.
//!
//! A proposal's hardness is `(1 − p̂)^γ · (−ln p̂)` where `p̂` is the
//! probability of its predicted class. Mining keeps the `k` hardest
//! proposals per (image, predicted class), then the hardest `q`% of the
//! survivors of each class.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{LabelSpace, PairLogits};
use crate::rng::replicate_rng;
use crate::shifttests::{correlations, ShiftError};
use crate::special::DomainError;
use crate::stats::sample_variance;

pub const DEFAULT_GAMMA: f64 = 2.0;
pub const DEFAULT_BASELINE_REPLICATES: usize = 1000;
pub const DEFAULT_SUBSET_SIZE: usize = 500;
const PROB_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HardMineError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("k must be at least 1")]
    ZeroK,
    #[error("q must lie in (0, 100], got {0}")]
    Percent(f64),
    #[error("probabilities of image `{image_id}` sum to {sum}")]
    NotNormalised { image_id: String, sum: f64 },
    #[error("empty probability vector for image `{0}`")]
    EmptyProbs(String),
    #[error("subset of {requested} items requested from a pool of {available}")]
    InsufficientPool { requested: usize, available: usize },
    #[error("{0} models in the pool but {1} reference drops")]
    ReferenceLength(usize, usize),
    #[error("model `{0}` has a different number of pool items")]
    RaggedPool(String),
    #[error(transparent)]
    Shift(#[from] ShiftError),
}

/// `(1 − p)^γ · (−ln p)` for `p ∈ (0, 1]`.
pub fn hardness(p_hat: f64, gamma: f64) -> Result<f64, DomainError> {
    if !(p_hat > 0.0 && p_hat <= 1.0) {
        return Err(DomainError::OutOfDomain {
            name: "p_hat",
            value: p_hat,
            expected: "0 < p <= 1",
        });
    }
    Ok((1.0 - p_hat).powf(gamma) * -p_hat.ln())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    pub image_id: String,
    pub class_probs: Vec<f64>,
    pub predicted: usize,
    pub hardness: f64,
}

fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in xs.iter().enumerate() {
        if *x > xs[best] {
            best = i;
        }
    }
    best
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

impl Proposal {
    /// Score a probability vector; the predicted class is its argmax, lowest
    /// index first on ties.
    pub fn new(image_id: impl Into<String>, class_probs: Vec<f64>, gamma: f64) -> Result<Self, HardMineError> {
        let image_id = image_id.into();
        if class_probs.is_empty() {
            return Err(HardMineError::EmptyProbs(image_id));
        }
        let sum: f64 = class_probs.iter().sum();
        if (sum - 1.0).abs() > PROB_SUM_TOLERANCE || class_probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(HardMineError::NotNormalised { image_id, sum });
        }
        let predicted = argmax(&class_probs);
        let hardness = hardness(class_probs[predicted], gamma)?;
        Ok(Self {
            image_id,
            class_probs,
            predicted,
            hardness,
        })
    }

    /// Build from a `pairs.jsonl` record whose `logits` field holds either
    /// probabilities or, with `apply_softmax`, raw logits.
    pub fn from_pair(rec: &PairLogits, apply_softmax: bool, gamma: f64) -> Result<Self, HardMineError> {
        let probs = if apply_softmax {
            softmax(&rec.logits)
        } else {
            rec.logits.clone()
        };
        Self::new(rec.image_id.clone(), probs, gamma)
    }

    pub fn to_record(&self, space: &LabelSpace) -> ProposalRecord {
        ProposalRecord {
            image_id: self.image_id.clone(),
            predicted: space.name(self.predicted).to_string(),
            hardness: self.hardness,
            class_probs: self.class_probs.clone(),
        }
    }
}

/// Line of `hardset.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProposalRecord {
    pub image_id: String,
    pub predicted: String,
    pub hardness: f64,
    pub class_probs: Vec<f64>,
}

/// Hardest first; ties by image id, class, then probabilities.
fn hardest_first(a: &Proposal, b: &Proposal) -> Ordering {
    b.hardness
        .total_cmp(&a.hardness)
        .then_with(|| a.image_id.cmp(&b.image_id))
        .then_with(|| a.predicted.cmp(&b.predicted))
        .then_with(|| {
            a.class_probs
                .iter()
                .zip(&b.class_probs)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or_else(|| a.class_probs.len().cmp(&b.class_probs.len()))
        })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MineParams {
    pub gamma: f64,
    pub k: usize,
    pub q_percent: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HardSet {
    /// Grouped by class (ascending), hardest first within a class.
    pub selected: Vec<Proposal>,
    pub params: MineParams,
    /// Per-class survivor counts after the per-image top-k stage.
    pub survivors: BTreeMap<usize, usize>,
}

/// `⌊q / 100 · n⌋`.
pub fn retained_count(q_percent: f64, n: usize) -> usize {
    ((q_percent / 100.0 * n as f64 + 1e-9).floor() as usize).min(n)
}

pub fn mine(proposals: Vec<Proposal>, params: MineParams) -> Result<HardSet, HardMineError> {
    if params.k == 0 {
        return Err(HardMineError::ZeroK);
    }
    if !(params.q_percent > 0.0 && params.q_percent <= 100.0) {
        return Err(HardMineError::Percent(params.q_percent));
    }
    let mut groups: BTreeMap<(String, usize), Vec<Proposal>> = BTreeMap::new();
    for p in proposals {
        groups.entry((p.image_id.clone(), p.predicted)).or_default().push(p);
    }
    let groups: Vec<Vec<Proposal>> = groups.into_values().collect();
    let kept: Vec<Proposal> = groups
        .into_par_iter()
        .flat_map_iter(|mut g| {
            g.sort_by(hardest_first);
            g.truncate(params.k);
            g
        })
        .collect();

    let mut by_class: BTreeMap<usize, Vec<Proposal>> = BTreeMap::new();
    for p in kept {
        by_class.entry(p.predicted).or_default().push(p);
    }
    let mut survivors = BTreeMap::new();
    let mut selected = Vec::new();
    for (class, mut ps) in by_class {
        survivors.insert(class, ps.len());
        ps.sort_by(hardest_first);
        ps.truncate(retained_count(params.q_percent, survivors[&class]));
        selected.extend(ps);
    }
    Ok(HardSet {
        selected,
        params,
        survivors,
    })
}

// ---------------------------------------------------------------------------
// evidence helpers

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineStatistic {
    /// `Var(subset drops) / Var(reference drops)`.
    Variance,
    Pearson,
    Spearman,
}

/// Per-model correctness on a pool of hard items plus each model's ID
/// accuracy (percent).
#[derive(Debug, Clone, PartialEq)]
pub struct BaselinePool {
    pub model_ids: Vec<String>,
    pub id_accuracy: Vec<f64>,
    pub correct: Vec<Vec<bool>>,
}

impl BaselinePool {
    fn validate(&self) -> Result<usize, HardMineError> {
        let n = self.correct.first().map_or(0, Vec::len);
        for (id, row) in self.model_ids.iter().zip(&self.correct) {
            if row.len() != n {
                return Err(HardMineError::RaggedPool(id.clone()));
            }
        }
        if self.id_accuracy.len() != self.model_ids.len() || self.correct.len() != self.model_ids.len() {
            return Err(HardMineError::ReferenceLength(self.model_ids.len(), self.id_accuracy.len()));
        }
        Ok(n)
    }

    /// ID accuracy minus accuracy on the given items, per model.
    pub fn drops(&self, items: &[usize]) -> Vec<f64> {
        self.correct
            .iter()
            .zip(&self.id_accuracy)
            .map(|(row, id_acc)| {
                let hits = items.iter().filter(|&&i| row[i]).count();
                id_acc - 100.0 * hits as f64 / items.len() as f64
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineResult {
    pub statistic: BaselineStatistic,
    pub b: usize,
    pub subset_size: usize,
    pub candidate: f64,
    pub replicate_min: f64,
    pub replicate_max: f64,
    pub at_or_below: usize,
    pub p_emp: f64,
    pub p_display: String,
    pub replicates: Vec<f64>,
}

fn statistic_value(stat: BaselineStatistic, drops: &[f64], reference: &[f64]) -> Result<f64, HardMineError> {
    Ok(match stat {
        BaselineStatistic::Variance => {
            let den = sample_variance(reference);
            if den == 0.0 || den.is_nan() {
                return Err(ShiftError::ZeroVariance("reference drops").into());
            }
            sample_variance(drops) / den
        }
        BaselineStatistic::Pearson => correlations(drops, reference)?.pearson,
        BaselineStatistic::Spearman => correlations(drops, reference)?.spearman,
    })
}

/// Left-tail Monte-Carlo p-value `(1 + #{S_b ≤ c}) / (B + 1)`.
pub fn left_tail_p(replicates: &[f64], candidate: f64) -> (usize, f64) {
    let hits = replicates.iter().filter(|&&s| s <= candidate).count();
    (hits, (1 + hits) as f64 / (replicates.len() + 1) as f64)
}

/// Text for a Monte-Carlo p-value: when no replicate reached the candidate
/// the value is only known to be below the next power of ten above the
/// `1 / (B + 1)` floor.
pub fn p_display(hits: usize, p: f64) -> String {
    if hits > 0 {
        return format!("{p:.4}");
    }
    let mut bound = 10f64.powf(p.log10().ceil());
    if bound <= p {
        bound *= 10.0;
    }
    format!("< {}", trim_float(bound))
}

fn trim_float(x: f64) -> String {
    let s = format!("{x:.12}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// Null distribution of a drop statistic over random hard subsets. Each
/// replicate draws `subset_size` pool items without replacement, recomputes
/// every model's drop and compares it to `reference` with `statistic`.
pub fn empirical_baseline(
    pool: &BaselinePool,
    b: usize,
    subset_size: usize,
    statistic: BaselineStatistic,
    reference: &[f64],
    candidate: f64,
    seed: u64,
) -> Result<BaselineResult, HardMineError> {
    let n = pool.validate()?;
    if reference.len() != pool.model_ids.len() {
        return Err(HardMineError::ReferenceLength(pool.model_ids.len(), reference.len()));
    }
    if subset_size == 0 || subset_size > n {
        return Err(HardMineError::InsufficientPool {
            requested: subset_size,
            available: n,
        });
    }
    let replicates: Vec<f64> = (0..b)
        .into_par_iter()
        .map(|r| {
            let mut rng = replicate_rng(seed, r as u64);
            let items = index::sample(&mut rng, n, subset_size).into_vec();
            statistic_value(statistic, &pool.drops(&items), reference)
        })
        .collect::<Result<_, _>>()?;
    let (hits, p) = left_tail_p(&replicates, candidate);
    let fold = |f: fn(f64, f64) -> f64, init: f64| replicates.iter().copied().fold(init, f);
    Ok(BaselineResult {
        statistic,
        b,
        subset_size,
        candidate,
        replicate_min: fold(f64::min, f64::INFINITY),
        replicate_max: fold(f64::max, f64::NEG_INFINITY),
        at_or_below: hits,
        p_emp: p,
        p_display: p_display(hits, p),
        replicates,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapRate {
    pub count: usize,
    pub size_a: usize,
    pub size_b: usize,
    pub frac_of_a: Option<f64>,
    pub frac_of_b: Option<f64>,
    pub percent_of_a: Option<f64>,
    pub percent_of_b: Option<f64>,
}

pub fn overlap_rate<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> OverlapRate {
    let count = a.intersection(b).count();
    let frac = |n: usize| (n > 0).then(|| count as f64 / n as f64);
    OverlapRate {
        count,
        size_a: a.len(),
        size_b: b.len(),
        frac_of_a: frac(a.len()),
        frac_of_b: frac(b.len()),
        percent_of_a: frac(a.len()).map(|f| 100.0 * f),
        percent_of_b: frac(b.len()).map(|f| 100.0 * f),
    }
}
