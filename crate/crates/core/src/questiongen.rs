//! Question generation.
//!
//! Every benchmark unit becomes a *contain* / *not contain* pair with opposite
//! gold answers, so the yes/no balance of a corpus is exactly even and a
//! model that always answers one way scores at chance. Images with at least
//! two present labels additionally yield Basic-to-Advanced Progression (BAP)
//! samples: two existential questions, two counting questions and one
//! comparison.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::seq::IteratorRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::{Annotation, LabelSpace};
use crate::division::PairKey;
use crate::rng::keyed_rng;

pub const COT_SUFFIX: &str = " Let's break down the information step by step.";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QuestionError {
    #[error("no instance counts for image `{0}`")]
    MissingCounts(String),
    #[error("image `{0}` is annotated more than once")]
    DuplicateAnnotation(String),
    #[error("label index {0} is outside the label space")]
    UnknownLabel(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionKind {
    Contain,
    NotContain,
    Count,
    Compare,
}

impl QuestionKind {
    pub fn is_binary(self) -> bool {
        !matches!(self, QuestionKind::Count)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            QuestionKind::Contain => "contain",
            QuestionKind::NotContain => "not_contain",
            QuestionKind::Count => "count",
            QuestionKind::Compare => "compare",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum YesNo {
    Yes,
    No,
}

impl YesNo {
    pub fn from_bool(b: bool) -> Self {
        if b {
            YesNo::Yes
        } else {
            YesNo::No
        }
    }

    pub fn flip(self) -> Self {
        match self {
            YesNo::Yes => YesNo::No,
            YesNo::No => YesNo::Yes,
        }
    }
}

impl fmt::Display for YesNo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            YesNo::Yes => "yes",
            YesNo::No => "no",
        })
    }
}

/// Gold answer: `"yes"` / `"no"` or a non-negative count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Gold {
    Binary(YesNo),
    Count(u32),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuestionItem {
    pub question_id: String,
    pub image_id: String,
    pub kind: QuestionKind,
    pub labels: Vec<usize>,
    pub prompt_text: String,
    pub gold: Gold,
    pub cot: bool,
    /// Benchmark split the question was generated for, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BapQuestionIds {
    pub existential: [String; 2],
    pub count: [String; 2],
    pub compare: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BapSample {
    pub sample_id: String,
    pub image_id: String,
    pub label_pair: (usize, usize),
    pub question_ids: BapQuestionIds,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<String>,
}

fn short_hash(prefix: &str, parts: &[&str]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p.as_bytes());
        h.update([0x1f]);
    }
    let digest = h.finalize();
    let hex: String = digest[..8].iter().map(|b| format!("{b:02x}")).collect();
    format!("{prefix}-{hex}")
}

/// Stable id of a question, independent of prompt wording and split.
pub fn question_id(image_id: &str, kind: QuestionKind, labels: &[usize], cot: bool) -> String {
    let labels = labels.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(",");
    short_hash("q", &[image_id, kind.as_str(), &labels, if cot { "cot" } else { "plain" }])
}

fn item(
    image_id: &str,
    kind: QuestionKind,
    labels: Vec<usize>,
    prompt_text: String,
    gold: Gold,
    cot: bool,
    split: Option<&str>,
) -> QuestionItem {
    QuestionItem {
        question_id: question_id(image_id, kind, &labels, cot),
        image_id: image_id.to_string(),
        kind,
        labels,
        prompt_text,
        gold,
        cot,
        split: split.map(str::to_string),
    }
}

fn label_name(space: &LabelSpace, label: usize) -> Result<&str, QuestionError> {
    if label < space.len() {
        Ok(space.name(label))
    } else {
        Err(QuestionError::UnknownLabel(label))
    }
}

/// The contain / not-contain pair for one unit. Golds are (yes, no) when the
/// label is present and (no, yes) otherwise.
pub fn gen_contain_pair(
    image_id: &str,
    label: usize,
    space: &LabelSpace,
    present: bool,
    cot: bool,
) -> Result<(QuestionItem, QuestionItem), QuestionError> {
    let name = label_name(space, label)?;
    let suffix = if cot { COT_SUFFIX } else { "" };
    let gold = YesNo::from_bool(present);
    let contain = item(
        image_id,
        QuestionKind::Contain,
        vec![label],
        format!("Does this image contain a {name}? (yes or no){suffix}"),
        Gold::Binary(gold),
        cot,
        None,
    );
    let not_contain = item(
        image_id,
        QuestionKind::NotContain,
        vec![label],
        format!("Does this image not contain a {name}? (yes or no){suffix}"),
        Gold::Binary(gold.flip()),
        cot,
        None,
    );
    Ok((contain, not_contain))
}

/// Index annotations by image id.
pub fn index_annotations(annotations: Vec<Annotation>) -> Result<BTreeMap<String, Annotation>, QuestionError> {
    let mut out = BTreeMap::new();
    for a in annotations {
        if out.contains_key(&a.image_id) {
            return Err(QuestionError::DuplicateAnnotation(a.image_id));
        }
        out.insert(a.image_id.clone(), a);
    }
    Ok(out)
}

/// Contain / not-contain pairs for every unit, in plain form and, with
/// `with_cot`, the step-by-step form too. Presence comes from the
/// annotations. Output is sorted by question id.
pub fn gen_contain_questions(
    units: &BTreeSet<PairKey>,
    annotations: &BTreeMap<String, Annotation>,
    space: &LabelSpace,
    split: Option<&str>,
    with_cot: bool,
) -> Result<Vec<QuestionItem>, QuestionError> {
    let variants: &[bool] = if with_cot { &[false, true] } else { &[false] };
    let units: Vec<&PairKey> = units.iter().collect();
    let mut out: Vec<QuestionItem> = units
        .par_iter()
        .map(|unit| {
            let ann = annotations
                .get(&unit.image_id)
                .ok_or_else(|| QuestionError::MissingCounts(unit.image_id.clone()))?;
            let present = ann.count(unit.label) > 0;
            let mut qs = Vec::with_capacity(2 * variants.len());
            for &cot in variants {
                let (a, b) = gen_contain_pair(&unit.image_id, unit.label, space, present, cot)?;
                qs.push(a);
                qs.push(b);
            }
            Ok(qs)
        })
        .collect::<Result<Vec<_>, QuestionError>>()?
        .into_iter()
        .flatten()
        .map(|mut q| {
            q.split = split.map(str::to_string);
            q
        })
        .collect();
    out.sort_by(|a, b| a.question_id.cmp(&b.question_id));
    Ok(out)
}

fn bap_for_image(
    image_id: &str,
    eligible: &BTreeSet<usize>,
    ann: &Annotation,
    space: &LabelSpace,
    split: Option<&str>,
    seed: u64,
) -> Result<(BapSample, Vec<QuestionItem>), QuestionError> {
    let mut rng = keyed_rng(seed, image_id);
    let mut picked = eligible.iter().copied().choose_multiple(&mut rng, 2);
    picked.sort_by(|&a, &b| space.name(a).cmp(space.name(b)));
    let (c1, c2) = (picked[0], picked[1]);
    let (n1, n2) = (ann.count(c1), ann.count(c2));
    let (name1, name2) = (label_name(space, c1)?, label_name(space, c2)?);

    let (e1, _) = gen_contain_pair(image_id, c1, space, true, false)?;
    let (e2, _) = gen_contain_pair(image_id, c2, space, true, false)?;
    let count = |label: usize, name: &str, n: u32| {
        item(
            image_id,
            QuestionKind::Count,
            vec![label],
            format!("How many {name} are there in the image? Answer with a number."),
            Gold::Count(n),
            false,
            split,
        )
    };
    let k1 = count(c1, name1, n1);
    let k2 = count(c2, name2, n2);
    let cmp = item(
        image_id,
        QuestionKind::Compare,
        vec![c1, c2],
        format!(
            "Is the number of {name1} in the image greater than the number of {name2}? Answer with `yes` or `no`"
        ),
        Gold::Binary(YesNo::from_bool(n1 > n2)),
        false,
        split,
    );
    let questions: Vec<QuestionItem> = [e1, e2, k1, k2, cmp]
        .into_iter()
        .map(|mut q| {
            q.split = split.map(str::to_string);
            q
        })
        .collect();
    let sample = BapSample {
        sample_id: short_hash("bap", &[image_id, &c1.to_string(), &c2.to_string()]),
        image_id: image_id.to_string(),
        label_pair: (c1, c2),
        question_ids: BapQuestionIds {
            existential: [questions[0].question_id.clone(), questions[1].question_id.clone()],
            count: [questions[2].question_id.clone(), questions[3].question_id.clone()],
            compare: questions[4].question_id.clone(),
        },
        split: split.map(str::to_string),
    };
    Ok((sample, questions))
}

/// One BAP sample per image that has at least two distinct labels which are
/// both in `units` and present in the image. The label pair is drawn
/// uniformly from those labels with a generator keyed by the image id.
///
/// Returns the samples sorted by id together with the questions they
/// reference, sorted by question id.
pub fn gen_bap_samples(
    units: &BTreeSet<PairKey>,
    annotations: &BTreeMap<String, Annotation>,
    space: &LabelSpace,
    split: Option<&str>,
    seed: u64,
) -> Result<(Vec<BapSample>, Vec<QuestionItem>), QuestionError> {
    let mut per_image: BTreeMap<&str, BTreeSet<usize>> = BTreeMap::new();
    for u in units {
        per_image.entry(&u.image_id).or_default().insert(u.label);
    }
    let images: Vec<(&str, BTreeSet<usize>)> = per_image.into_iter().collect();
    let results = images
        .par_iter()
        .map(|(image_id, labels)| {
            let ann = annotations
                .get(*image_id)
                .ok_or_else(|| QuestionError::MissingCounts(image_id.to_string()))?;
            let eligible: BTreeSet<usize> = labels.iter().copied().filter(|&l| ann.count(l) > 0).collect();
            if eligible.len() < 2 {
                return Ok(None);
            }
            bap_for_image(image_id, &eligible, ann, space, split, seed).map(Some)
        })
        .collect::<Result<Vec<_>, QuestionError>>()?;

    let mut samples = Vec::new();
    let mut questions = Vec::new();
    for (s, qs) in results.into_iter().flatten() {
        samples.push(s);
        questions.extend(qs);
    }
    samples.sort_by(|a, b| a.sample_id.cmp(&b.sample_id));
    questions.sort_by(|a, b| a.question_id.cmp(&b.question_id));
    Ok((samples, questions))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceReport {
    pub binary_questions: usize,
    pub yes: usize,
    pub no: usize,
    /// Share of yes golds; `None` when there are no binary questions.
    pub yes_ratio: Option<f64>,
}

impl BalanceReport {
    pub fn ratio_text(&self) -> String {
        match self.yes_ratio {
            Some(r) => format!("{r:.4}"),
            None => "n/a".to_string(),
        }
    }
}

pub fn balance_check(questions: &[QuestionItem]) -> BalanceReport {
    let (mut yes, mut no) = (0, 0);
    for q in questions {
        match q.gold {
            Gold::Binary(YesNo::Yes) => yes += 1,
            Gold::Binary(YesNo::No) => no += 1,
            Gold::Count(_) => {}
        }
    }
    let total = yes + no;
    BalanceReport {
        binary_questions: total,
        yes,
        no,
        yes_ratio: (total > 0).then(|| yes as f64 / total as f64),
    }
}
