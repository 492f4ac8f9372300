//! Distribution-shift statistics.
//!
//! Shift between two labelled embedding samples is measured with the MMD of
//! a joint kernel that multiplies an RBF kernel on the vectors by the
//! indicator that the class labels agree, so only same-class points are
//! compared. Around it sit the resampling procedures used to argue that a
//! split is (or is not) a genuine shift: a homogeneous baseline τ, a
//! permutation upper bound on MMD², a degradation permutation test and a
//! paired bootstrap equivalence test between a closed model and a reference
//! group of open models.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Embedding;
use crate::questiongen::YesNo;
use crate::rng::replicate_rng;
use crate::scoring::{Confusion, MetricsReport, Parsed, ScoringError};
use crate::special::{f_sf, t_two_sided, DomainError};
use crate::stats::{order_quantile, pearson, sample_std, sample_variance, spearman};

pub const DEFAULT_PERMUTATIONS: usize = 500;
pub const DEFAULT_DEGRADATION_PERMUTATIONS: usize = 2000;
pub const DEFAULT_BOOTSTRAP: usize = 1000;
pub const MIN_BOOTSTRAP: usize = 100;

/// Blocks are cached while the total number of stored kernel values stays
/// below this.
const GRAM_CACHE_ENTRIES: usize = 1 << 24;
const MEDIAN_MAX_PAIRS: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ShiftError {
    #[error("empty sample")]
    Empty,
    #[error("vector has dimension {found}, expected {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("need at least {needed} points, got {found}")]
    TooFewPoints { needed: usize, found: usize },
    #[error("bandwidth must be positive and finite, got {0}")]
    Bandwidth(f64),
    #[error("need at least {min} replicates, got {found}")]
    Replicates { min: usize, found: usize },
    #[error("level must lie in (0, 1], got {0}")]
    Level(f64),
    #[error("tau must be positive, got {0}")]
    Tau(f64),
    #[error("inputs have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("zero variance in {0}")]
    ZeroVariance(&'static str),
    #[error("model `{0}` was not evaluated on the same items as the others")]
    MisalignedModels(String),
    #[error("at least one open reference model is required")]
    NoOpenModels,
    #[error("eta must be positive, got {0}")]
    Eta(f64),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

// ---------------------------------------------------------------------------
// joint samples and the kernel

/// Labelled vectors `(v, c)` of a common dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSample {
    dim: usize,
    data: Vec<f64>,
    classes: Vec<usize>,
}

impl JointSample {
    pub fn new(items: Vec<(Vec<f64>, usize)>) -> Result<Self, ShiftError> {
        let dim = items.first().ok_or(ShiftError::Empty)?.0.len();
        let mut data = Vec::with_capacity(dim * items.len());
        let mut classes = Vec::with_capacity(items.len());
        for (v, c) in items {
            if v.len() != dim {
                return Err(ShiftError::Dimension { expected: dim, found: v.len() });
            }
            data.extend(v);
            classes.push(c);
        }
        Ok(Self { dim, data, classes })
    }

    pub fn from_embeddings(embeddings: &[Embedding]) -> Result<Self, ShiftError> {
        Self::new(embeddings.iter().map(|e| (e.vector.clone(), e.label)).collect())
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn class(&self, i: usize) -> usize {
        self.classes[i]
    }

    pub fn concat(&self, other: &JointSample) -> Result<JointSample, ShiftError> {
        if other.dim != self.dim {
            return Err(ShiftError::Dimension { expected: self.dim, found: other.dim });
        }
        let mut out = self.clone();
        out.data.extend_from_slice(&other.data);
        out.classes.extend_from_slice(&other.classes);
        Ok(out)
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn rbf(sq: f64, bandwidth: f64) -> f64 {
    (-sq / (2.0 * bandwidth * bandwidth)).exp()
}

fn check_bandwidth(h: f64) -> Result<(), ShiftError> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(ShiftError::Bandwidth(h))
    }
}

/// `exp(−‖v − w‖² / 2h²) · 1[c = c']`.
pub fn joint_kernel(a: (&[f64], usize), b: (&[f64], usize), bandwidth: f64) -> Result<f64, ShiftError> {
    check_bandwidth(bandwidth)?;
    if a.0.len() != b.0.len() {
        return Err(ShiftError::Dimension { expected: a.0.len(), found: b.0.len() });
    }
    if a.1 != b.1 {
        return Ok(0.0);
    }
    Ok(rbf(sq_dist(a.0, b.0), bandwidth))
}

fn class_blocks(sample: &JointSample) -> Vec<Vec<usize>> {
    let mut by_class: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for (i, &c) in sample.classes.iter().enumerate() {
        by_class.entry(c).or_default().push(i);
    }
    by_class.into_values().collect()
}

/// Median of the within-class pairwise distances, the default RBF bandwidth.
/// Falls back to 1 when there are no within-class pairs or the median is 0.
pub fn median_bandwidth(sample: &JointSample) -> f64 {
    let blocks = class_blocks(sample);
    let total: usize = blocks.iter().map(|b| b.len() * b.len().saturating_sub(1) / 2).sum();
    let stride = total.div_ceil(MEDIAN_MAX_PAIRS).max(1);
    let mut dists = Vec::with_capacity(total.min(MEDIAN_MAX_PAIRS) + 1);
    let mut counter = 0usize;
    for block in &blocks {
        for (a, &i) in block.iter().enumerate() {
            for &j in &block[a + 1..] {
                if counter.is_multiple_of(stride) {
                    dists.push(sq_dist(sample.point(i), sample.point(j)).sqrt());
                }
                counter += 1;
            }
        }
    }
    if dists.is_empty() {
        return 1.0;
    }
    let m = order_quantile(&dists, 0.5);
    if m > 0.0 {
        m
    } else {
        1.0
    }
}

struct Block {
    members: Vec<usize>,
    /// Strict upper triangle, row-major.
    packed: Option<Vec<f64>>,
}

/// Within-class kernel values of a pooled sample, cached per class when
/// small enough.
struct PooledKernel<'a> {
    sample: &'a JointSample,
    bandwidth: f64,
    blocks: Vec<Block>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Side {
    Out,
    X,
    Y,
}

#[derive(Default, Clone, Copy)]
struct PairSums {
    xx: f64,
    yy: f64,
    xy: f64,
}

impl PairSums {
    fn add(self, o: PairSums) -> PairSums {
        PairSums {
            xx: self.xx + o.xx,
            yy: self.yy + o.yy,
            xy: self.xy + o.xy,
        }
    }
}

impl<'a> PooledKernel<'a> {
    fn new(sample: &'a JointSample, bandwidth: f64) -> Self {
        let mut budget = GRAM_CACHE_ENTRIES;
        let blocks = class_blocks(sample)
            .into_iter()
            .map(|members| {
                let m = members.len();
                let size = m * m.saturating_sub(1) / 2;
                let packed = (size <= budget).then(|| {
                    budget -= size;
                    let rows: Vec<Vec<f64>> = (0..m)
                        .into_par_iter()
                        .map(|a| {
                            let pa = sample.point(members[a]);
                            members[a + 1..]
                                .iter()
                                .map(|&j| rbf(sq_dist(pa, sample.point(j)), bandwidth))
                                .collect()
                        })
                        .collect();
                    rows.concat()
                });
                Block { members, packed }
            })
            .collect();
        Self { sample, bandwidth, blocks }
    }

    fn row_sums(&self, block: &Block, a: usize, offset: usize, side: &[Side]) -> PairSums {
        let m = block.members.len();
        let sa = side[block.members[a]];
        let mut s = PairSums::default();
        if sa == Side::Out {
            return s;
        }
        let pa = self.sample.point(block.members[a]);
        for b in a + 1..m {
            let j = block.members[b];
            let sb = side[j];
            if sb == Side::Out {
                continue;
            }
            let k = match &block.packed {
                Some(p) => p[offset + b - a - 1],
                None => rbf(sq_dist(pa, self.sample.point(j)), self.bandwidth),
            };
            match (sa, sb) {
                (Side::X, Side::X) => s.xx += k,
                (Side::Y, Side::Y) => s.yy += k,
                _ => s.xy += k,
            }
        }
        s
    }

    /// Sums of kernel values over unordered pairs of distinct points: both
    /// in X, both in Y, and one in each. Row partial sums are combined in a
    /// fixed order so the result does not depend on the thread count.
    fn sums(&self, side: &[Side]) -> PairSums {
        let mut total = PairSums::default();
        for block in &self.blocks {
            let m = block.members.len();
            let offsets: Vec<usize> = (0..m).scan(0, |acc, a| {
                let o = *acc;
                *acc += m - a - 1;
                Some(o)
            }).collect();
            let rows: Vec<PairSums> = (0..m)
                .into_par_iter()
                .map(|a| self.row_sums(block, a, offsets[a], side))
                .collect();
            total = rows.into_iter().fold(total, PairSums::add);
        }
        total
    }

    fn mmd2(&self, side: &[Side], estimator: Estimator) -> f64 {
        let n = side.iter().filter(|s| **s == Side::X).count() as f64;
        let m = side.iter().filter(|s| **s == Side::Y).count() as f64;
        let s = self.sums(side);
        match estimator {
            Estimator::Unbiased => 2.0 * s.xx / (n * (n - 1.0)) + 2.0 * s.yy / (m * (m - 1.0)) - 2.0 * s.xy / (n * m),
            Estimator::Biased => (2.0 * s.xx + n) / (n * n) + (2.0 * s.yy + m) / (m * m) - 2.0 * s.xy / (n * m),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Biased,
    Unbiased,
}

impl Estimator {
    fn min_points(self) -> usize {
        match self {
            Estimator::Biased => 1,
            Estimator::Unbiased => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MmdResult {
    pub mmd2: f64,
    pub bandwidth: f64,
    pub estimator: Estimator,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ci95: Option<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub permutation_uci: Option<f64>,
}

fn check_sizes(n: usize, m: usize, needed: usize) -> Result<(), ShiftError> {
    let found = n.min(m);
    if found < needed {
        return Err(ShiftError::TooFewPoints { needed, found });
    }
    Ok(())
}

fn split_sides(n: usize, m: usize) -> Vec<Side> {
    let mut side = vec![Side::X; n];
    side.resize(n + m, Side::Y);
    side
}

/// MMD² between `x` and `y` under the joint kernel. `bandwidth = None`
/// uses the median heuristic on the pooled sample.
pub fn mmd2(
    x: &JointSample,
    y: &JointSample,
    bandwidth: Option<f64>,
    estimator: Estimator,
) -> Result<MmdResult, ShiftError> {
    check_sizes(x.len(), y.len(), estimator.min_points())?;
    let pooled = x.concat(y)?;
    let h = bandwidth.unwrap_or_else(|| median_bandwidth(&pooled));
    check_bandwidth(h)?;
    let kernel = PooledKernel::new(&pooled, h);
    Ok(MmdResult {
        mmd2: kernel.mmd2(&split_sides(x.len(), y.len()), estimator),
        bandwidth: h,
        estimator,
        ci95: None,
        permutation_uci: None,
    })
}

/// How the homogeneous baseline splits its sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauSplit {
    /// Random halves of the whole sample.
    Halves,
    /// Two disjoint random subsets of the given size.
    Fixed(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauResult {
    pub tau: f64,
    pub quantile: f64,
    pub bandwidth: f64,
    pub replicates: Vec<f64>,
}

fn check_level(level: f64) -> Result<(), ShiftError> {
    if level > 0.0 && level <= 1.0 {
        Ok(())
    } else {
        Err(ShiftError::Level(level))
    }
}

fn check_replicates(b: usize, min: usize) -> Result<(), ShiftError> {
    if b < min {
        return Err(ShiftError::Replicates { min, found: b });
    }
    Ok(())
}

/// Homogeneous baseline: the `quantile` of unbiased MMD² between random
/// disjoint splits of one sample.
pub fn homogeneous_tau(
    d: &JointSample,
    splits: usize,
    quantile: f64,
    bandwidth: f64,
    split: TauSplit,
    seed: u64,
) -> Result<TauResult, ShiftError> {
    check_replicates(splits, 1)?;
    check_level(quantile)?;
    check_bandwidth(bandwidth)?;
    let half = match split {
        TauSplit::Halves => d.len() / 2,
        TauSplit::Fixed(s) => s,
    };
    if half < 2 || 2 * half > d.len() {
        return Err(ShiftError::TooFewPoints { needed: 2 * half.max(2), found: d.len() });
    }
    let kernel = PooledKernel::new(d, bandwidth);
    let replicates: Vec<f64> = (0..splits)
        .into_par_iter()
        .map(|r| {
            let mut rng = replicate_rng(seed, r as u64);
            let mut idx: Vec<usize> = (0..d.len()).collect();
            idx.shuffle(&mut rng);
            let mut side = vec![Side::Out; d.len()];
            let y_end = match split {
                TauSplit::Halves => d.len(),
                TauSplit::Fixed(_) => 2 * half,
            };
            for &i in &idx[..half] {
                side[i] = Side::X;
            }
            for &i in &idx[half..y_end] {
                side[i] = Side::Y;
            }
            kernel.mmd2(&side, Estimator::Unbiased)
        })
        .collect();
    Ok(TauResult {
        tau: order_quantile(&replicates, quantile),
        quantile,
        bandwidth,
        replicates,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermutationResult {
    pub observed: f64,
    pub uci: f64,
    pub level: f64,
    pub b: usize,
    pub bandwidth: f64,
    pub null: Vec<f64>,
}

/// Permutation upper confidence bound on unbiased MMD²: the `level`
/// quantile of MMD² after `b` random relabellings of the pooled sample.
pub fn mmd_permutation_uci(
    x: &JointSample,
    y: &JointSample,
    b: usize,
    level: f64,
    bandwidth: f64,
    seed: u64,
) -> Result<PermutationResult, ShiftError> {
    check_replicates(b, 1)?;
    check_level(level)?;
    check_bandwidth(bandwidth)?;
    check_sizes(x.len(), y.len(), 2)?;
    let pooled = x.concat(y)?;
    let kernel = PooledKernel::new(&pooled, bandwidth);
    let base = split_sides(x.len(), y.len());
    let observed = kernel.mmd2(&base, Estimator::Unbiased);
    let null: Vec<f64> = (0..b)
        .into_par_iter()
        .map(|r| {
            let mut rng = replicate_rng(seed, r as u64);
            let mut side = base.clone();
            side.shuffle(&mut rng);
            kernel.mmd2(&side, Estimator::Unbiased)
        })
        .collect();
    Ok(PermutationResult {
        observed,
        uci: order_quantile(&null, level),
        level,
        b,
        bandwidth,
        null,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TostDecision {
    pub uci: f64,
    pub tau: f64,
    pub equivalent: bool,
}

/// Distributional equivalence: the MMD² upper bound lies strictly below τ.
pub fn tost_distribution(uci: f64, tau: f64) -> Result<TostDecision, ShiftError> {
    if tau.is_nan() || tau <= 0.0 {
        return Err(ShiftError::Tau(tau));
    }
    Ok(TostDecision {
        uci,
        tau,
        equivalent: uci < tau,
    })
}

// ---------------------------------------------------------------------------
// behavioural tests on scored answers

/// A scored binary answer: what the model said and the gold.
pub type Outcome = (Parsed, YesNo);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Accuracy,
    F1,
    Precision,
    Recall,
    Mcc,
}

impl Metric {
    pub const ALL: [Metric; 5] = [Metric::Accuracy, Metric::F1, Metric::Precision, Metric::Recall, Metric::Mcc];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Accuracy => "accuracy",
            Metric::F1 => "f1",
            Metric::Precision => "precision",
            Metric::Recall => "recall",
            Metric::Mcc => "mcc",
        }
    }

    pub fn of(self, c: Confusion) -> Result<f64, ScoringError> {
        let r = MetricsReport::from_confusion(c)?;
        Ok(match self {
            Metric::Accuracy => r.accuracy,
            Metric::F1 => r.f1,
            Metric::Precision => r.precision,
            Metric::Recall => r.recall,
            Metric::Mcc => r.mcc,
        })
    }
}

fn confusion_of<'a>(items: impl IntoIterator<Item = &'a Outcome>) -> Confusion {
    let mut c = Confusion::default();
    for &(p, g) in items {
        c.add(p, g);
    }
    c
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegradationTest {
    pub metric_name: String,
    pub delta_obs: f64,
    pub p_value: f64,
    pub b: usize,
    pub exceedances: usize,
}

/// Permutation test of `metric(ID) − metric(OOD)`, with
/// `p = (1 + #{Δ_b ≥ Δ_obs}) / (B + 1)`.
pub fn degradation_perm_test(
    id: &[Outcome],
    ood: &[Outcome],
    metric: Metric,
    b: usize,
    seed: u64,
) -> Result<DegradationTest, ShiftError> {
    check_replicates(b, 1)?;
    if id.is_empty() || ood.is_empty() {
        return Err(ShiftError::Empty);
    }
    let delta_obs = metric.of(confusion_of(id))? - metric.of(confusion_of(ood))?;
    let pooled: Vec<Outcome> = id.iter().chain(ood).copied().collect();
    let deltas: Vec<f64> = (0..b)
        .into_par_iter()
        .map(|r| {
            let mut rng = replicate_rng(seed, r as u64);
            let mut perm = pooled.clone();
            perm.shuffle(&mut rng);
            let (a, o) = perm.split_at(id.len());
            Ok(metric.of(confusion_of(a))? - metric.of(confusion_of(o))?)
        })
        .collect::<Result<_, ScoringError>>()?;
    let exceedances = deltas.iter().filter(|&&d| d >= delta_obs).count();
    Ok(DegradationTest {
        metric_name: metric.name().to_string(),
        delta_obs,
        p_value: (1 + exceedances) as f64 / (b + 1) as f64,
        b,
        exceedances,
    })
}

/// Outcomes of one model on the ID and OOD items, in a common item order
/// shared by every model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelOutcomes {
    pub model_id: String,
    pub id: Vec<Outcome>,
    pub ood: Vec<Outcome>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EtaMode {
    /// Standard deviation of the open-model mean degradation over replicates.
    SigmaOpen,
    Explicit(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpenInterval {
    pub model_id: String,
    pub ci90: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceTest {
    pub metric_name: String,
    pub ci90: (f64, f64),
    pub eta: f64,
    pub equivalent: bool,
    pub b: usize,
    pub open_cis: Vec<OpenInterval>,
    /// Union band of the open models' degradation intervals.
    pub open_band: (f64, f64),
}

/// `CI ⊂ (−η, η)`.
pub fn equivalence_decision(ci90: (f64, f64), eta: f64) -> bool {
    -eta < ci90.0 && ci90.1 < eta
}

/// `(min of lowers, max of uppers)`; `None` for no intervals.
pub fn signature_band(cis: &[(f64, f64)]) -> Option<(f64, f64)> {
    let first = *cis.first()?;
    Some(cis.iter().fold(first, |(lo, hi), &(l, h)| (lo.min(l), hi.max(h))))
}

fn ci90(values: &[f64]) -> (f64, f64) {
    (order_quantile(values, 0.05), order_quantile(values, 0.95))
}

/// Paired bootstrap of `δ = Δ_closed − mean_open Δ_open`, where Δ is the ID
/// minus OOD value of `metric`. ID and OOD items are resampled independently
/// with replacement; every model sees the same resampled items.
pub fn bootstrap_equivalence(
    closed: &ModelOutcomes,
    open: &[ModelOutcomes],
    metric: Metric,
    b: usize,
    eta_mode: EtaMode,
    seed: u64,
) -> Result<EquivalenceTest, ShiftError> {
    check_replicates(b, MIN_BOOTSTRAP)?;
    if open.is_empty() {
        return Err(ShiftError::NoOpenModels);
    }
    if closed.id.is_empty() || closed.ood.is_empty() {
        return Err(ShiftError::Empty);
    }
    for m in open {
        if m.id.len() != closed.id.len() || m.ood.len() != closed.ood.len() {
            return Err(ShiftError::MisalignedModels(m.model_id.clone()));
        }
    }
    if let EtaMode::Explicit(eta) = eta_mode {
        if eta.is_nan() || eta <= 0.0 {
            return Err(ShiftError::Eta(eta));
        }
    }
    let (n_id, n_ood) = (closed.id.len(), closed.ood.len());
    let delta = |m: &ModelOutcomes, id_idx: &[usize], ood_idx: &[usize]| -> Result<f64, ScoringError> {
        Ok(metric.of(confusion_of(id_idx.iter().map(|&i| &m.id[i])))?
            - metric.of(confusion_of(ood_idx.iter().map(|&i| &m.ood[i])))?)
    };
    // per replicate: (closed Δ, open Δs)
    let reps: Vec<(f64, Vec<f64>)> = (0..b)
        .into_par_iter()
        .map(|r| {
            let mut rng = replicate_rng(seed, r as u64);
            let id_idx: Vec<usize> = (0..n_id).map(|_| rng.random_range(0..n_id)).collect();
            let ood_idx: Vec<usize> = (0..n_ood).map(|_| rng.random_range(0..n_ood)).collect();
            let c = delta(closed, &id_idx, &ood_idx)?;
            let o = open
                .iter()
                .map(|m| delta(m, &id_idx, &ood_idx))
                .collect::<Result<Vec<_>, _>>()?;
            Ok((c, o))
        })
        .collect::<Result<_, ScoringError>>()?;

    let open_mean: Vec<f64> = reps.iter().map(|(_, o)| o.iter().sum::<f64>() / o.len() as f64).collect();
    let deltas: Vec<f64> = reps.iter().zip(&open_mean).map(|((c, _), m)| c - m).collect();
    let interval = ci90(&deltas);
    let eta = match eta_mode {
        EtaMode::SigmaOpen => sample_std(&open_mean),
        EtaMode::Explicit(e) => e,
    };
    let open_cis: Vec<OpenInterval> = open
        .iter()
        .enumerate()
        .map(|(j, m)| OpenInterval {
            model_id: m.model_id.clone(),
            ci90: ci90(&reps.iter().map(|(_, o)| o[j]).collect::<Vec<_>>()),
        })
        .collect();
    let open_band = signature_band(&open_cis.iter().map(|o| o.ci90).collect::<Vec<_>>()).expect("non-empty");
    Ok(EquivalenceTest {
        metric_name: metric.name().to_string(),
        ci90: interval,
        eta,
        equivalent: equivalence_decision(interval, eta),
        b,
        open_cis,
        open_band,
    })
}

// ---------------------------------------------------------------------------
// cross-model comparisons

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FTest {
    pub f: f64,
    pub d1: f64,
    pub d2: f64,
    pub p: f64,
}

/// `F = Var(a) / Var(b)` with a right-tail p-value from F(|a|−1, |b|−1).
pub fn variance_f_test(a: &[f64], b: &[f64]) -> Result<FTest, ShiftError> {
    check_sizes(a.len(), b.len(), 2)?;
    let (va, vb) = (sample_variance(a), sample_variance(b));
    if vb == 0.0 {
        return Err(ShiftError::ZeroVariance("denominator sample"));
    }
    let f = va / vb;
    let (d1, d2) = ((a.len() - 1) as f64, (b.len() - 1) as f64);
    Ok(FTest { f, d1, d2, p: f_sf(f, d1, d2)? })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlations {
    pub n: usize,
    pub pearson: f64,
    pub spearman: f64,
    pub p_pearson: f64,
    pub p_spearman: f64,
}

fn corr_p(r: f64, n: usize) -> Result<f64, DomainError> {
    if r.abs() >= 1.0 {
        return Ok(0.0);
    }
    let df = (n - 2) as f64;
    t_two_sided(r * (df / (1.0 - r * r)).sqrt(), df)
}

/// Pearson and Spearman correlations with two-sided t-approximation
/// p-values on `n − 2` degrees of freedom.
pub fn correlations(a: &[f64], b: &[f64]) -> Result<Correlations, ShiftError> {
    if a.len() != b.len() {
        return Err(ShiftError::LengthMismatch(a.len(), b.len()));
    }
    check_sizes(a.len(), a.len(), 3)?;
    let r = pearson(a, b);
    if r.is_nan() {
        return Err(ShiftError::ZeroVariance("correlation input"));
    }
    let rho = spearman(a, b);
    Ok(Correlations {
        n: a.len(),
        pearson: r,
        spearman: rho,
        p_pearson: corr_p(r, a.len())?,
        p_spearman: corr_p(rho, a.len())?,
    })
}
