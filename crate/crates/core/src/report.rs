//! Histogram data for plotting detector score distributions.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::division::{DetectorVerdict, Trigger};

pub const DEFAULT_BINS: usize = 100;

/// Equal-width bins over `[0, 1]`; the last bin is closed on the right.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// Values outside `[0, 1]` or not finite.
    pub out_of_range: u64,
}

impl Histogram {
    pub fn unit(bins: usize) -> Self {
        let bins = bins.max(1);
        Self {
            edges: (0..=bins).map(|i| i as f64 / bins as f64).collect(),
            counts: vec![0; bins],
            out_of_range: 0,
        }
    }

    pub fn add(&mut self, x: f64) {
        if !(0.0..=1.0).contains(&x) {
            self.out_of_range += 1;
            return;
        }
        let bins = self.counts.len();
        let i = ((x * bins as f64) as usize).min(bins - 1);
        self.counts[i] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.out_of_range
    }
}

pub fn histogram(values: impl IntoIterator<Item = f64>, bins: usize) -> Histogram {
    let mut h = Histogram::unit(bins);
    for v in values {
        h.add(v);
    }
    h
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorScores {
    pub detector_id: String,
    pub n: u64,
    pub n_ood: u64,
    pub triggers: BTreeMap<String, u64>,
    /// Purified match probabilities of all units, of units judged ID and of
    /// units judged OOD.
    pub all: Histogram,
    pub id: Histogram,
    pub ood: Histogram,
}

fn trigger_name(t: Trigger) -> &'static str {
    match t {
        Trigger::None => "none",
        Trigger::Case1Rival => "case1_rival",
        Trigger::Case2Threshold => "case2_threshold",
        Trigger::Both => "both",
    }
}

/// Histograms over every verdict of every detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub bins: usize,
    pub pooled: Histogram,
    pub per_class: BTreeMap<usize, Histogram>,
    pub detectors: Vec<DetectorScores>,
}

pub fn score_report(verdicts: &[DetectorVerdict], bins: usize) -> ScoreReport {
    let mut per_class: BTreeMap<usize, Histogram> = BTreeMap::new();
    for v in verdicts {
        per_class.entry(v.label).or_insert_with(|| Histogram::unit(bins)).add(v.match_prob);
    }
    ScoreReport {
        bins: bins.max(1),
        pooled: histogram(verdicts.iter().map(|v| v.match_prob), bins),
        per_class,
        detectors: detector_scores(verdicts, bins),
    }
}

/// Per-detector match-probability histograms, ordered by detector id.
pub fn detector_scores(verdicts: &[DetectorVerdict], bins: usize) -> Vec<DetectorScores> {
    let mut out: BTreeMap<&str, DetectorScores> = BTreeMap::new();
    for v in verdicts {
        let entry = out.entry(&v.detector_id).or_insert_with(|| DetectorScores {
            detector_id: v.detector_id.clone(),
            n: 0,
            n_ood: 0,
            triggers: BTreeMap::new(),
            all: Histogram::unit(bins),
            id: Histogram::unit(bins),
            ood: Histogram::unit(bins),
        });
        entry.n += 1;
        *entry.triggers.entry(trigger_name(v.trigger).to_string()).or_default() += 1;
        entry.all.add(v.match_prob);
        if v.is_ood {
            entry.n_ood += 1;
            entry.ood.add(v.match_prob);
        } else {
            entry.id.add(v.match_prob);
        }
    }
    out.into_values().collect()
}
