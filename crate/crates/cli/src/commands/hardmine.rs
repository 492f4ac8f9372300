use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use oodkit_core::corpus::load_pair_logits;
use oodkit_core::division::NamedPair;
use oodkit_core::hardmine::{
    empirical_baseline, mine, overlap_rate, BaselinePool, BaselineStatistic, MineParams, Proposal,
    DEFAULT_BASELINE_REPLICATES, DEFAULT_GAMMA, DEFAULT_SUBSET_SIZE,
};
use oodkit_core::shifttests::{correlations, variance_f_test};
use oodkit_core::stats::{pearson, sample_variance, spearman};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{load_space, require, require_files, stage_seed};
use crate::config::layered;
use crate::error::CliError;
use crate::output::{read_json, run_config, without_paths, write_json, write_records};
use crate::Context;

#[derive(Debug, Clone, Default, clap::Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Args {
    #[arg(long)]
    pub labelspace: Option<PathBuf>,
    /// Detector proposals in the pairs schema; `logits` holds class
    /// probabilities unless `--softmax` is set.
    #[arg(long, num_args = 1..)]
    pub proposals: Vec<PathBuf>,
    /// Treat the scores as raw logits.
    #[arg(long)]
    pub softmax: bool,
    /// Proposals kept per image and predicted class.
    #[arg(long)]
    pub k: Option<usize>,
    /// Percentage of each class's survivors retained.
    #[arg(long)]
    pub q: Option<f64>,
    /// Focal-loss exponent.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Per-model drop vectors and an optional baseline pool (JSON).
    #[arg(long)]
    pub evidence: Option<PathBuf>,
    /// `division.json` whose OOD pairs are compared with the hard set.
    #[arg(long)]
    pub division: Option<PathBuf>,
    /// Replicates of each empirical baseline.
    #[arg(long)]
    pub baseline_replicates: Option<usize>,
    /// Hard items drawn per baseline replicate.
    #[arg(long)]
    pub subset_size: Option<usize>,
}

/// Input of the hard-versus-OOD evidence report. Drops are ID accuracy minus
/// accuracy on the subset, in percentage points, one entry per model.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Evidence {
    pub models: Vec<String>,
    pub hard_drops: Vec<f64>,
    pub ood_drops: Vec<f64>,
    #[serde(default)]
    pub baseline_pool: Option<PoolFile>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoolFile {
    /// ID accuracy per model, in `models` order.
    pub id_accuracy: Vec<f64>,
    /// Per model, correctness on each pool item.
    pub correct: Vec<Vec<bool>>,
}

#[derive(Deserialize)]
struct DivisionOod {
    ood_hard: Vec<NamedPair>,
    ood_simple: Vec<NamedPair>,
}

fn evidence_report(ctx: &Context, a: &Args, ev: &Evidence, path: &Path) -> Result<Value, CliError> {
    let n = ev.models.len();
    if ev.hard_drops.len() != n || ev.ood_drops.len() != n {
        return Err(CliError::Malformed {
            path: path.to_path_buf(),
            message: format!("expected {n} drops per vector, one per model"),
        });
    }
    let f_test = variance_f_test(&ev.hard_drops, &ev.ood_drops)?;
    let corr = correlations(&ev.ood_drops, &ev.hard_drops)?;
    let mut report = json!({
        "models": ev.models,
        "hard_drops": ev.hard_drops,
        "ood_drops": ev.ood_drops,
        "variance": {
            "hard": sample_variance(&ev.hard_drops),
            "ood": sample_variance(&ev.ood_drops),
        },
        "f_test": f_test,
        "correlations": corr,
    });
    if let Some(pool) = &ev.baseline_pool {
        let pool = BaselinePool {
            model_ids: ev.models.clone(),
            id_accuracy: pool.id_accuracy.clone(),
            correct: pool.correct.clone(),
        };
        let b = a.baseline_replicates.unwrap_or(DEFAULT_BASELINE_REPLICATES);
        let size = a.subset_size.unwrap_or(DEFAULT_SUBSET_SIZE);
        let candidates = [
            (
                BaselineStatistic::Variance,
                sample_variance(&ev.ood_drops) / sample_variance(&ev.hard_drops),
            ),
            (BaselineStatistic::Pearson, pearson(&ev.ood_drops, &ev.hard_drops)),
            (BaselineStatistic::Spearman, spearman(&ev.ood_drops, &ev.hard_drops)),
        ];
        let mut baselines = Vec::new();
        for (stat, candidate) in candidates {
            let seed = stage_seed(ctx.seed, &format!("baseline-{stat:?}"));
            let mut r = empirical_baseline(&pool, b, size, stat, &ev.hard_drops, candidate, seed)?;
            r.replicates.clear();
            baselines.push(r);
        }
        report["baselines"] = json!(baselines);
    }
    Ok(report)
}

pub fn run(ctx: &Context, a: Args) -> Result<(), CliError> {
    let a = layered(a, ctx.file.hardmine.as_ref())?;
    let space_path = require(a.labelspace.clone(), "labelspace")?;
    require_files(&a.proposals, "proposals")?;
    let params = MineParams {
        gamma: a.gamma.unwrap_or(DEFAULT_GAMMA),
        k: require(a.k, "k")?,
        q_percent: require(a.q, "q")?,
    };
    let space = load_space(&space_path)?;
    let mut proposals = Vec::new();
    for p in &a.proposals {
        for rec in load_pair_logits(p, &space).map_err(CliError::input(p))? {
            proposals.push(Proposal::from_pair(&rec, a.softmax, params.gamma)?);
        }
    }
    let hard = mine(proposals, params)?;
    let records: Vec<_> = hard.selected.iter().map(|p| p.to_record(&space)).collect();
    write_records(&ctx.out_dir.join("hardset.jsonl"), &records)?;

    let mut inputs = vec![("labelspace", vec![space_path.clone()]), ("proposals", a.proposals.clone())];
    let mut report = serde_json::Map::new();
    let mut retained: BTreeMap<&str, usize> = BTreeMap::new();
    for p in &hard.selected {
        *retained.entry(space.name(p.predicted)).or_default() += 1;
    }
    let survivors: BTreeMap<&str, usize> = hard.survivors.iter().map(|(&c, &n)| (space.name(c), n)).collect();
    report.insert(
        "hard_set".into(),
        json!({ "params": params, "size": hard.selected.len(), "survivors": survivors, "retained": retained }),
    );

    if let Some(path) = &a.division {
        let div: DivisionOod = read_json(path)?;
        let ood: BTreeSet<NamedPair> = div.ood_hard.into_iter().chain(div.ood_simple).collect();
        let hard_pairs: BTreeSet<NamedPair> = records
            .iter()
            .map(|r| NamedPair {
                image_id: r.image_id.clone(),
                label: r.predicted.clone(),
            })
            .collect();
        report.insert("overlap".into(), json!(overlap_rate(&hard_pairs, &ood)));
        inputs.push(("division", vec![path.clone()]));
    }
    if let Some(path) = &a.evidence {
        let ev: Evidence = read_json(path)?;
        report.insert("evidence".into(), evidence_report(ctx, &a, &ev, path)?);
        inputs.push(("evidence", vec![path.clone()]));
    }
    let input_refs: Vec<(&str, &[PathBuf])> = inputs.iter().map(|(k, v)| (*k, v.as_slice())).collect();
    let settings = without_paths(&a, &["labelspace", "proposals", "division", "evidence"]);
    report.insert(
        "run_config".into(),
        run_config("hardmine", ctx.seed, &settings, &input_refs)?,
    );
    write_json(&ctx.out_dir.join("distinction_report.json"), &Value::Object(report))
}
