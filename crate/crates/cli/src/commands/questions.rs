use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use oodkit_core::corpus::{load_annotations, LabelSpace};
use oodkit_core::division::{NamedPair, PairKey};
use oodkit_core::questiongen::{
    balance_check, gen_bap_samples, gen_contain_questions, index_annotations, BapSample, QuestionItem, QuestionKind,
};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{load_space, require, stage_seed};
use crate::config::layered;
use crate::error::CliError;
use crate::output::{read_json, run_config, without_paths, write_json, write_records};
use crate::Context;

/// Benchmark splits in the order they are written.
pub const SPLITS: [&str; 3] = ["id", "ood_simple", "ood_hard"];

#[derive(Debug, Clone, Default, clap::Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Args {
    #[arg(long)]
    pub labelspace: Option<PathBuf>,
    /// `division.json` written by `divide`.
    #[arg(long)]
    pub division: Option<PathBuf>,
    /// Instance counts per image (JSON Lines).
    #[arg(long)]
    pub annotations: Option<PathBuf>,
    /// Skip the step-by-step prompt variants.
    #[arg(long)]
    pub no_cot: bool,
}

#[derive(Deserialize)]
struct DivisionFile {
    benchmark: BTreeMap<String, serde_json::Value>,
}

fn split_units(
    file: &DivisionFile,
    split: &str,
    space: &LabelSpace,
    path: &std::path::Path,
) -> Result<BTreeSet<PairKey>, CliError> {
    let malformed = |message: String| CliError::Malformed {
        path: path.to_path_buf(),
        message,
    };
    let raw = file
        .benchmark
        .get(split)
        .ok_or_else(|| malformed(format!("benchmark has no `{split}` split")))?;
    let pairs: Vec<NamedPair> =
        serde_json::from_value(raw.clone()).map_err(|e| malformed(format!("benchmark.{split}: {e}")))?;
    pairs
        .iter()
        .map(|p| {
            p.resolve(space)
                .map_err(|why| malformed(format!("label `{}` does not resolve ({why:?})", p.label)))
        })
        .collect()
}

/// Merge question lists, keeping one copy of each id.
fn merge_questions(all: &mut BTreeMap<String, QuestionItem>, items: Vec<QuestionItem>) -> Result<(), CliError> {
    for q in items {
        match all.get(&q.question_id) {
            Some(existing) if *existing != q => {
                return Err(CliError::Usage(format!(
                    "question {} generated twice with different content",
                    q.question_id
                )))
            }
            Some(_) => {}
            None => {
                all.insert(q.question_id.clone(), q);
            }
        }
    }
    Ok(())
}

pub fn run(ctx: &Context, a: Args) -> Result<(), CliError> {
    let a = layered(a, ctx.file.gen_questions.as_ref())?;
    let space_path = require(a.labelspace.clone(), "labelspace")?;
    let division_path = require(a.division.clone(), "division")?;
    let ann_path = require(a.annotations.clone(), "annotations")?;
    let space = load_space(&space_path)?;
    let division: DivisionFile = read_json(&division_path)?;
    let annotations =
        index_annotations(load_annotations(&ann_path, &space).map_err(CliError::input(&ann_path))?)?;

    let bap_seed = stage_seed(ctx.seed, "bap");
    let mut questions = BTreeMap::new();
    let mut samples: Vec<BapSample> = Vec::new();
    let mut balance = BTreeMap::new();
    for split in SPLITS {
        let units = split_units(&division, split, &space, &division_path)?;
        let contain = gen_contain_questions(&units, &annotations, &space, Some(split), !a.no_cot)?;
        balance.insert(split, balance_check(&contain));
        merge_questions(&mut questions, contain)?;
        let (s, qs) = gen_bap_samples(&units, &annotations, &space, Some(split), bap_seed)?;
        samples.extend(s);
        merge_questions(&mut questions, qs)?;
    }
    samples.sort_by(|x, y| x.sample_id.cmp(&y.sample_id));

    let mut by_kind: BTreeMap<&str, usize> = BTreeMap::new();
    for q in questions.values() {
        *by_kind.entry(q.kind.as_str()).or_default() += 1;
    }
    let contain_all: Vec<QuestionItem> = questions
        .values()
        .filter(|q| matches!(q.kind, QuestionKind::Contain | QuestionKind::NotContain))
        .cloned()
        .collect();
    let run = run_config(
        "gen-questions",
        ctx.seed,
        &without_paths(&a, &["labelspace", "division", "annotations"]),
        &[
            ("labelspace", &[space_path]),
            ("division", &[division_path]),
            ("annotations", &[ann_path]),
        ],
    )?;
    write_records(&ctx.out_dir.join("questions.jsonl"), questions.values())?;
    write_records(&ctx.out_dir.join("bap_samples.jsonl"), &samples)?;
    write_json(
        &ctx.out_dir.join("balance.json"),
        &json!({
            "run_config": run,
            "questions": questions.len(),
            "bap_samples": samples.len(),
            "by_kind": by_kind,
            "contain_balance": {
                "overall": balance_check(&contain_all),
                "per_split": balance,
            },
        }),
    )
}
