//! Transcript parsing and metrics.
//!
//! Yes/no answers are read off the first standalone `yes` or `no` token and
//! counts off the first integer token. Anything else is unparseable and
//! counts as a wrong answer rather than being dropped, so every model is
//! scored on the same N.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Transcript;
use crate::questiongen::{BapSample, Gold, QuestionItem, QuestionKind, YesNo};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScoringError {
    #[error("response references unknown question `{0}`")]
    IdMismatch(String),
    #[error("no prediction for question `{0}`")]
    MissingPrediction(String),
    #[error("model `{model_id}` answered question `{question_id}` more than once")]
    DuplicateResponse { model_id: String, question_id: String },
    #[error("question `{0}` has a count gold but a binary metric was requested")]
    NotBinary(String),
    #[error("no items to score")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parsed {
    Yes,
    No,
    Number(u64),
    Unparseable,
}

impl Parsed {
    pub fn yes_no(self) -> Option<YesNo> {
        match self {
            Parsed::Yes => Some(YesNo::Yes),
            Parsed::No => Some(YesNo::No),
            _ => None,
        }
    }

    /// Whether this answer matches `gold`.
    pub fn is_correct(self, gold: Gold) -> bool {
        match (self, gold) {
            (Parsed::Yes, Gold::Binary(YesNo::Yes)) | (Parsed::No, Gold::Binary(YesNo::No)) => true,
            (Parsed::Number(n), Gold::Count(g)) => n == u64::from(g),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub question_id: String,
    pub parsed: Parsed,
}

fn tokens(text: &str) -> impl Iterator<Item = &str> {
    text.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty())
}

pub fn parse_response(text: &str, kind: QuestionKind) -> Parsed {
    if kind.is_binary() {
        for t in tokens(text) {
            if t.eq_ignore_ascii_case("yes") {
                return Parsed::Yes;
            }
            if t.eq_ignore_ascii_case("no") {
                return Parsed::No;
            }
        }
    } else {
        for t in tokens(text) {
            if t.bytes().all(|b| b.is_ascii_digit()) {
                return t.parse().map_or(Parsed::Unparseable, Parsed::Number);
            }
        }
    }
    Parsed::Unparseable
}

/// Confusion counts with "yes" as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl Confusion {
    /// Record one answer. An answer that is not yes/no is taken to be the
    /// opposite of the gold, i.e. wrong.
    pub fn add(&mut self, parsed: Parsed, gold: YesNo) {
        let predicted = parsed.yes_no().unwrap_or(gold.flip());
        match (predicted, gold) {
            (YesNo::Yes, YesNo::Yes) => self.tp += 1,
            (YesNo::Yes, YesNo::No) => self.fp += 1,
            (YesNo::No, YesNo::No) => self.tn += 1,
            (YesNo::No, YesNo::Yes) => self.fn_ += 1,
        }
    }

    pub fn merge(self, other: Confusion) -> Confusion {
        Confusion {
            tp: self.tp + other.tp,
            fp: self.fp + other.fp,
            tn: self.tn + other.tn,
            fn_: self.fn_ + other.fn_,
        }
    }

    pub fn n(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    pub mcc: f64,
    #[serde(flatten)]
    pub counts: Confusion,
    pub n: u64,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

impl MetricsReport {
    /// Percent-scale metrics. Precision, recall and F1 are 0 when their
    /// denominator is empty; MCC is 0 when any marginal is empty.
    pub fn from_confusion(c: Confusion) -> Result<Self, ScoringError> {
        if c.n() == 0 {
            return Err(ScoringError::Empty);
        }
        let (tp, fp, tn, fn_) = (c.tp as f64, c.fp as f64, c.tn as f64, c.fn_ as f64);
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = ratio(2.0 * precision * recall, precision + recall);
        let den = (tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_);
        let mcc = if den == 0.0 {
            0.0
        } else {
            ((tp * tn - fp * fn_) / den.sqrt()).clamp(-1.0, 1.0)
        };
        Ok(MetricsReport {
            accuracy: 100.0 * (tp + tn) / c.n() as f64,
            f1: 100.0 * f1,
            precision: 100.0 * precision,
            recall: 100.0 * recall,
            mcc: 100.0 * mcc,
            counts: c,
            n: c.n(),
        })
    }
}

/// Metrics over `(answer, gold)` items.
pub fn classification_metrics<I>(items: I) -> Result<MetricsReport, ScoringError>
where
    I: IntoIterator<Item = (Parsed, YesNo)>,
{
    let mut c = Confusion::default();
    for (p, g) in items {
        c.add(p, g);
    }
    MetricsReport::from_confusion(c)
}

/// One scored answer, as written to `scored_items.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredItem {
    pub model_id: String,
    pub question_id: String,
    pub image_id: String,
    pub kind: QuestionKind,
    pub cot: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<String>,
    pub gold: Gold,
    pub parsed: Parsed,
    pub correct: bool,
}

/// Parse every transcript against its question. Output is grouped by model
/// and sorted by question id.
pub fn score_transcripts(
    questions: &BTreeMap<String, QuestionItem>,
    transcripts: &[Transcript],
) -> Result<BTreeMap<String, Vec<ScoredItem>>, ScoringError> {
    let mut seen: BTreeSet<(&str, &str)> = BTreeSet::new();
    let mut out: BTreeMap<String, Vec<ScoredItem>> = BTreeMap::new();
    for t in transcripts {
        let q = questions
            .get(&t.question_id)
            .ok_or_else(|| ScoringError::IdMismatch(t.question_id.clone()))?;
        if !seen.insert((&t.model_id, &t.question_id)) {
            return Err(ScoringError::DuplicateResponse {
                model_id: t.model_id.clone(),
                question_id: t.question_id.clone(),
            });
        }
        let parsed = parse_response(&t.response_text, q.kind);
        out.entry(t.model_id.clone()).or_default().push(ScoredItem {
            model_id: t.model_id.clone(),
            question_id: q.question_id.clone(),
            image_id: q.image_id.clone(),
            kind: q.kind,
            cot: q.cot,
            split: q.split.clone(),
            gold: q.gold,
            parsed,
            correct: parsed.is_correct(q.gold),
        });
    }
    for items in out.values_mut() {
        items.sort_by(|a, b| a.question_id.cmp(&b.question_id));
    }
    Ok(out)
}

/// Metrics of one model on one question group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupMetrics {
    pub model_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<String>,
    pub cot: bool,
    #[serde(flatten)]
    pub metrics: MetricsReport,
}

/// Contain / not-contain metrics per (model, split, cot). Every such
/// question in `questions` must have been answered by every model.
pub fn contain_metrics(
    questions: &BTreeMap<String, QuestionItem>,
    scored: &BTreeMap<String, Vec<ScoredItem>>,
) -> Result<Vec<GroupMetrics>, ScoringError> {
    let binary: Vec<&QuestionItem> = questions
        .values()
        .filter(|q| matches!(q.kind, QuestionKind::Contain | QuestionKind::NotContain))
        .collect();
    let mut out = Vec::new();
    for (model_id, items) in scored {
        let by_id: BTreeMap<&str, &ScoredItem> = items.iter().map(|s| (s.question_id.as_str(), s)).collect();
        let mut groups: BTreeMap<(Option<String>, bool), Confusion> = BTreeMap::new();
        for q in &binary {
            let item = by_id
                .get(q.question_id.as_str())
                .ok_or_else(|| ScoringError::MissingPrediction(q.question_id.clone()))?;
            let Gold::Binary(gold) = q.gold else {
                return Err(ScoringError::NotBinary(q.question_id.clone()));
            };
            groups.entry((q.split.clone(), q.cot)).or_default().add(item.parsed, gold);
        }
        for ((split, cot), c) in groups {
            out.push(GroupMetrics {
                model_id: model_id.clone(),
                split,
                cot,
                metrics: MetricsReport::from_confusion(c)?,
            });
        }
    }
    Ok(out)
}

/// Points earned on one BAP sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BapPoints {
    pub existential: bool,
    pub count: bool,
    pub logical: bool,
}

pub fn bap_points(
    sample: &BapSample,
    questions: &BTreeMap<String, QuestionItem>,
    preds: &BTreeMap<String, Parsed>,
) -> Result<BapPoints, ScoringError> {
    let correct = |id: &String| -> Result<bool, ScoringError> {
        let q = questions.get(id).ok_or_else(|| ScoringError::IdMismatch(id.clone()))?;
        let p = preds.get(id).ok_or_else(|| ScoringError::MissingPrediction(id.clone()))?;
        Ok(p.is_correct(q.gold))
    };
    let ids = &sample.question_ids;
    let existential = correct(&ids.existential[0])? & correct(&ids.existential[1])?;
    let count = correct(&ids.count[0])? & correct(&ids.count[1])?;
    let compare = correct(&ids.compare)?;
    Ok(BapPoints {
        existential,
        count,
        logical: count && compare,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BapReport {
    pub e_acc: f64,
    pub c_acc: f64,
    pub l_acc: f64,
    pub n_samples: usize,
}

pub fn bap_metrics(
    samples: &[BapSample],
    questions: &BTreeMap<String, QuestionItem>,
    preds: &BTreeMap<String, Parsed>,
) -> Result<BapReport, ScoringError> {
    if samples.is_empty() {
        return Err(ScoringError::Empty);
    }
    let (mut e, mut c, mut l) = (0usize, 0usize, 0usize);
    for s in samples {
        let p = bap_points(s, questions, preds)?;
        e += p.existential as usize;
        c += p.count as usize;
        l += p.logical as usize;
    }
    let pct = |k: usize| 100.0 * k as f64 / samples.len() as f64;
    Ok(BapReport {
        e_acc: pct(e),
        c_acc: pct(c),
        l_acc: pct(l),
        n_samples: samples.len(),
    })
}
