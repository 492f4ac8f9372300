use std::collections::BTreeMap;
use std::path::PathBuf;

use oodkit_core::corpus::{load_records, load_transcripts};
use oodkit_core::questiongen::{BapSample, QuestionItem};
use oodkit_core::scoring::{bap_metrics, contain_metrics, score_transcripts, Parsed, ScoredItem};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{require, require_files};
use crate::config::layered;
use crate::error::CliError;
use crate::output::{run_config, without_paths, write_json, write_records};
use crate::Context;

#[derive(Debug, Clone, Default, clap::Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Args {
    /// `questions.jsonl` from `gen-questions`.
    #[arg(long)]
    pub questions: Option<PathBuf>,
    /// `bap_samples.jsonl`; enables the E/C/L accuracies.
    #[arg(long)]
    pub bap: Option<PathBuf>,
    /// Model answers (JSON Lines); repeat for several files.
    #[arg(long, num_args = 1..)]
    pub transcripts: Vec<PathBuf>,
}

pub fn run(ctx: &Context, a: Args) -> Result<(), CliError> {
    let a = layered(a, ctx.file.score.as_ref())?;
    let q_path = require(a.questions.clone(), "questions")?;
    require_files(&a.transcripts, "transcripts")?;
    let questions: BTreeMap<String, QuestionItem> = load_records::<QuestionItem>(&q_path)
        .map_err(CliError::input(&q_path))?
        .into_iter()
        .map(|q| (q.question_id.clone(), q))
        .collect();
    let mut transcripts = Vec::new();
    for p in &a.transcripts {
        transcripts.extend(load_transcripts(p).map_err(CliError::input(p))?);
    }
    let scored = score_transcripts(&questions, &transcripts)?;
    let groups = contain_metrics(&questions, &scored)?;

    let mut inputs = vec![("questions", vec![q_path.clone()]), ("transcripts", a.transcripts.clone())];
    if let Some(b) = &a.bap {
        inputs.push(("bap", vec![b.clone()]));
    }
    let input_refs: Vec<(&str, &[PathBuf])> = inputs.iter().map(|(k, v)| (*k, v.as_slice())).collect();
    let run = run_config(
        "score",
        ctx.seed,
        &without_paths(&a, &["questions", "bap", "transcripts"]),
        &input_refs,
    )?;

    let all_items: Vec<&ScoredItem> = scored.values().flatten().collect();
    write_records(&ctx.out_dir.join("scored_items.jsonl"), all_items)?;
    write_json(
        &ctx.out_dir.join("metrics.json"),
        &json!({
            "run_config": run,
            "positive_class": "yes",
            "groups": groups,
        }),
    )?;

    if let Some(bap_path) = &a.bap {
        let samples: Vec<BapSample> = load_records(bap_path).map_err(CliError::input(bap_path))?;
        let mut by_split: BTreeMap<Option<String>, Vec<BapSample>> = BTreeMap::new();
        for s in samples {
            by_split.entry(s.split.clone()).or_default().push(s);
        }
        let mut reports = Vec::new();
        for (model_id, items) in &scored {
            let preds: BTreeMap<String, Parsed> =
                items.iter().map(|s| (s.question_id.clone(), s.parsed)).collect();
            for (split, group) in &by_split {
                let r = bap_metrics(group, &questions, &preds)?;
                reports.push(json!({
                    "model_id": model_id,
                    "split": split,
                    "e_acc": r.e_acc,
                    "c_acc": r.c_acc,
                    "l_acc": r.l_acc,
                    "n_samples": r.n_samples,
                }));
            }
        }
        write_json(&ctx.out_dir.join("bap.json"), &json!({ "run_config": run, "reports": reports }))?;
    }
    Ok(())
}
