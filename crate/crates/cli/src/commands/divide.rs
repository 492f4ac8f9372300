use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use oodkit_core::corpus::{load_pair_logits, LabelSpace, PairLogits};
use oodkit_core::division::{
    by_detector, check_threshold, divide, downsample_category, judge_all, pairing_universe, sample_id_pairs,
    DivisionConfig, DivisionResult, NamedPair, PairKey, DEFAULT_CATEGORY_CAP, DEFAULT_THRESHOLD,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{load_space, require, require_files};
use crate::config::layered;
use crate::error::CliError;
use crate::output::{run_config, without_paths, write_json, write_records};
use crate::Context;

pub const DEFAULT_DETECTOR_COUNT: usize = 2;

#[derive(Debug, Clone, Default, clap::Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Args {
    /// Label space JSON.
    #[arg(long)]
    pub labelspace: Option<PathBuf>,
    /// Detector logits files (JSON Lines); repeat for several files.
    #[arg(long, num_args = 1..)]
    pub pairs: Vec<PathBuf>,
    /// Detectors to combine, in order; defaults to the first
    /// `--detector-count` ids in sorted order.
    #[arg(long, value_delimiter = ',')]
    pub detectors: Vec<String>,
    #[arg(long)]
    pub detector_count: Option<usize>,
    /// Match-probability threshold; a comma-separated list runs a sweep.
    #[arg(long, visible_alias = "T", value_delimiter = ',')]
    pub threshold: Vec<f64>,
    /// Also rerun with the first 2, 3, … detectors.
    #[arg(long)]
    pub detector_sweep: bool,
    /// Per-category cap of the released benchmark.
    #[arg(long)]
    pub cap: Option<usize>,
    /// Number of ID pairs to sample; defaults to the cap, or the whole
    /// non-OOD pool when smaller.
    #[arg(long)]
    pub id_count: Option<usize>,
}

fn named(set: &BTreeSet<PairKey>, space: &LabelSpace) -> Vec<NamedPair> {
    let mut out: Vec<NamedPair> = set.iter().map(|k| k.named(space)).collect();
    out.sort();
    out
}

fn division_report(
    result: &DivisionResult,
    benchmark: [&BTreeSet<PairKey>; 3],
    cap: usize,
    space: &LabelSpace,
    run: Value,
) -> Value {
    let per_detector: BTreeMap<&str, Vec<NamedPair>> = result
        .per_detector
        .iter()
        .map(|(d, s)| (d.as_str(), named(s, space)))
        .collect();
    let per_detector_counts: BTreeMap<&str, usize> =
        result.per_detector.iter().map(|(d, s)| (d.as_str(), s.len())).collect();
    let [id, simple, hard] = benchmark;
    json!({
        "run_config": run,
        "config": {
            "T": result.config.threshold,
            "detector_ids": result.config.detector_ids,
            "seed": result.config.seed,
        },
        "counts": {
            "judged": result.judged.len(),
            "ood_hard": result.ood_hard.len(),
            "ood_simple": result.ood_simple.len(),
            "id_pairs": result.id_pairs.len(),
            "per_detector": per_detector_counts,
        },
        "ood_hard": named(&result.ood_hard, space),
        "ood_simple": named(&result.ood_simple, space),
        "id_pairs": named(&result.id_pairs, space),
        "per_detector": per_detector,
        "benchmark": {
            "cap": cap,
            "id": named(id, space),
            "ood_simple": named(simple, space),
            "ood_hard": named(hard, space),
        },
    })
}

pub fn run(ctx: &Context, a: Args) -> Result<(), CliError> {
    let a = layered(a, ctx.file.divide.as_ref())?;
    let space_path = require(a.labelspace.clone(), "labelspace")?;
    require_files(&a.pairs, "pairs")?;
    let space = load_space(&space_path)?;
    let mut records: Vec<PairLogits> = Vec::new();
    for p in &a.pairs {
        records.extend(load_pair_logits(p, &space).map_err(CliError::input(p))?);
    }

    let available: BTreeSet<&str> = records.iter().map(|r| r.detector_id.as_str()).collect();
    let detectors: Vec<String> = if !a.detectors.is_empty() {
        a.detectors.clone()
    } else if a.detector_sweep {
        available.iter().map(|d| d.to_string()).collect()
    } else {
        let n = a.detector_count.unwrap_or(DEFAULT_DETECTOR_COUNT);
        available.iter().take(n).map(|d| d.to_string()).collect()
    };
    let thresholds = if a.threshold.is_empty() {
        vec![DEFAULT_THRESHOLD]
    } else {
        a.threshold.clone()
    };
    for &t in &thresholds {
        check_threshold(t)?;
    }
    let counts: Vec<usize> = if a.detector_sweep {
        (2..=detectors.len()).collect()
    } else {
        vec![detectors.len()]
    };
    let cap = a.cap.unwrap_or(DEFAULT_CATEGORY_CAP);
    let sweep = thresholds.len() > 1 || counts.len() > 1;

    let chosen: BTreeSet<&str> = detectors.iter().map(String::as_str).collect();
    let used: Vec<PairLogits> = records
        .into_iter()
        .filter(|r| chosen.contains(r.detector_id.as_str()))
        .collect();
    let params = json!({
        "settings": without_paths(&a, &["labelspace", "pairs"]),
        "resolved": {
            "detectors": detectors,
            "thresholds": thresholds,
            "cap": cap,
        },
    });
    let run = run_config(
        "divide",
        ctx.seed,
        &params,
        &[("labelspace", &[space_path]), ("pairs", &a.pairs)],
    )?;

    let mut summary = Vec::new();
    for &t in &thresholds {
        let verdicts = judge_all(&used, t)?;
        let grouped = by_detector(verdicts);
        for &n in &counts {
            let ids = detectors[..n.min(detectors.len())].to_vec();
            let mut result = divide(
                &grouped,
                DivisionConfig {
                    threshold: t,
                    detector_ids: ids.clone(),
                    seed: ctx.seed,
                },
            )?;
            let images = result.judged.iter().map(|k| k.image_id.as_str());
            let universe = pairing_universe(images, space.len());
            let ood = result.ood_union();
            let pool = universe.difference(&ood).count();
            let id_count = a.id_count.unwrap_or(cap.min(pool));
            result.id_pairs = sample_id_pairs(&universe, &ood, id_count, ctx.seed)?;
            debug_assert_eq!(result.check_invariants(), Ok(()));

            let bench_id = downsample_category(&result.id_pairs, cap, ctx.seed)?;
            let bench_simple = downsample_category(&result.ood_simple, cap, ctx.seed)?;
            let bench_hard = downsample_category(&result.ood_hard, cap, ctx.seed)?;

            let dir = if sweep {
                ctx.out_dir.join(format!("t{t}_d{n}"))
            } else {
                ctx.out_dir.clone()
            };
            let report = division_report(&result, [&bench_id, &bench_simple, &bench_hard], cap, &space, run.clone());
            write_json(&dir.join("division.json"), &report)?;
            let verdict_records: Vec<_> = ids
                .iter()
                .flat_map(|d| grouped.get(d).into_iter().flatten())
                .map(|v| v.to_record(&space))
                .collect();
            write_records(&dir.join("verdicts.jsonl"), &verdict_records)?;
            summary.push(json!({
                "T": t,
                "detectors": n,
                "dir": dir.file_name().map(|s| s.to_string_lossy().into_owned()),
                "ood_hard": result.ood_hard.len(),
                "ood_simple": result.ood_simple.len(),
                "id_pairs": result.id_pairs.len(),
            }));
        }
    }
    if sweep {
        write_json(&ctx.out_dir.join("sweep.json"), &json!({ "run_config": run, "runs": summary }))?;
    }
    Ok(())
}
