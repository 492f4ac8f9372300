//! Population-level inference on training overlap.
//!
//! Each model m contributes an overlap rate `r_m = H_m / C` (OOD pairs seen
//! in training over all OOD pairs) and a flag `Z_m = 1[upper(r_m) < ε]`.
//! From `k = Σ Z_m` out of `n` models we report the exact Clopper–Pearson
//! lower bound and the uniform-prior Bayesian lower bound on the share of
//! the model population whose overlap stays below ε.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::special::{beta_inv, DomainError};

pub const DEFAULT_ALPHA: f64 = 0.05;
pub const DEFAULT_EPSILON: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PopStatsError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("need 0 <= k <= n and n >= 1, got k = {k}, n = {n}")]
    Counts { k: u64, n: u64 },
    #[error("alpha must lie strictly between 0 and 1, got {0}")]
    Alpha(f64),
    #[error("no models given")]
    Empty,
    #[error("model `{0}` appears more than once")]
    DuplicateModel(String),
}

fn check(k: u64, n: u64, alpha: f64) -> Result<(), PopStatsError> {
    if n == 0 || k > n {
        return Err(PopStatsError::Counts { k, n });
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(PopStatsError::Alpha(alpha));
    }
    Ok(())
}

/// Exact two-sided `1 − alpha` interval for a binomial proportion.
pub fn clopper_pearson(k: u64, n: u64, alpha: f64) -> Result<(f64, f64), PopStatsError> {
    check(k, n, alpha)?;
    let (kf, nf) = (k as f64, n as f64);
    let lower = if k == 0 {
        0.0
    } else {
        beta_inv(alpha / 2.0, kf, nf - kf + 1.0)?
    };
    let upper = if k == n {
        1.0
    } else {
        beta_inv(1.0 - alpha / 2.0, kf + 1.0, nf - kf)?
    };
    Ok((lower, upper))
}

/// Lower `alpha / 2` quantile of the Beta(k + 1, n − k + 1) posterior under
/// a uniform prior.
pub fn bayes_beta_lower(k: u64, n: u64, alpha: f64) -> Result<f64, PopStatsError> {
    check(k, n, alpha)?;
    let (kf, nf) = (k as f64, n as f64);
    Ok(beta_inv(alpha / 2.0, kf + 1.0, nf - kf + 1.0)?)
}

/// Overlap input for one model, as read from `overlaps.jsonl`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverlapRecord {
    pub model_id: String,
    pub overlapping: u64,
    pub total: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapStat {
    pub model_id: String,
    pub h: u64,
    pub c: u64,
    pub r: f64,
    pub r_percent: f64,
    pub uci95: f64,
}

impl OverlapStat {
    pub fn new(model_id: impl Into<String>, h: u64, c: u64) -> Result<Self, PopStatsError> {
        let (_, upper) = clopper_pearson(h, c, DEFAULT_ALPHA)?;
        let r = h as f64 / c as f64;
        Ok(Self {
            model_id: model_id.into(),
            h,
            c,
            r,
            r_percent: 100.0 * r,
            uci95: upper,
        })
    }

    pub fn from_record(rec: &OverlapRecord) -> Result<Self, PopStatsError> {
        Self::new(rec.model_id.clone(), rec.overlapping, rec.total)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationDecision {
    pub epsilon: f64,
    pub alpha: f64,
    pub z: BTreeMap<String, bool>,
    pub k: u64,
    pub n: u64,
    pub lcp: f64,
    pub l_bayes: f64,
}

/// Lower bounds from an already tallied `k` of `n`.
pub fn decide_counts(k: u64, n: u64, epsilon: f64, alpha: f64) -> Result<PopulationDecision, PopStatsError> {
    let (lcp, _) = clopper_pearson(k, n, alpha)?;
    Ok(PopulationDecision {
        epsilon,
        alpha,
        z: BTreeMap::new(),
        k,
        n,
        lcp,
        l_bayes: bayes_beta_lower(k, n, alpha)?,
    })
}

/// `Z_m` for every model and the population bounds on `k / n`.
pub fn decide_population(
    overlaps: &[OverlapStat],
    epsilon: f64,
    alpha: f64,
) -> Result<PopulationDecision, PopStatsError> {
    if overlaps.is_empty() {
        return Err(PopStatsError::Empty);
    }
    let mut z = BTreeMap::new();
    for o in overlaps {
        if z.insert(o.model_id.clone(), o.uci95 < epsilon).is_some() {
            return Err(PopStatsError::DuplicateModel(o.model_id.clone()));
        }
    }
    let k = z.values().filter(|&&b| b).count() as u64;
    let mut decision = decide_counts(k, z.len() as u64, epsilon, alpha)?;
    decision.z = z;
    Ok(decision)
}
