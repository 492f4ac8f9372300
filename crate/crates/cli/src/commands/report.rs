use std::collections::BTreeMap;
use std::path::PathBuf;

use oodkit_core::corpus::{load_records, LabelSpace};
use oodkit_core::division::VerdictRecord;
use oodkit_core::report::{score_report, DEFAULT_BINS};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{load_space, require_files};
use crate::config::layered;
use crate::error::CliError;
use crate::output::{run_config, without_paths, write_json};
use crate::Context;

#[derive(Debug, Clone, Default, clap::Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Args {
    /// `verdicts.jsonl` files from `divide`.
    #[arg(long, num_args = 1..)]
    pub verdicts: Vec<PathBuf>,
    /// Label space; when absent, classes are the labels seen in the verdicts.
    #[arg(long)]
    pub labelspace: Option<PathBuf>,
    /// Histogram bins over [0, 1].
    #[arg(long)]
    pub bins: Option<usize>,
}

pub fn run(ctx: &Context, a: Args) -> Result<(), CliError> {
    let a = layered(a, ctx.file.report.as_ref())?;
    require_files(&a.verdicts, "verdicts")?;
    let bins = a.bins.unwrap_or(DEFAULT_BINS);
    let mut records: Vec<(&PathBuf, usize, VerdictRecord)> = Vec::new();
    for p in &a.verdicts {
        let file = load_records::<VerdictRecord>(p).map_err(CliError::input(p))?;
        records.extend(file.into_iter().enumerate().map(|(i, r)| (p, i + 1, r)));
    }
    let space = match &a.labelspace {
        Some(p) => load_space(p)?,
        None => {
            let mut labels: Vec<String> = records.iter().map(|(_, _, r)| r.label.clone()).collect();
            labels.sort();
            labels.dedup();
            LabelSpace::new("verdicts", labels, None).map_err(CliError::input("verdicts"))?
        }
    };
    let mut verdicts = Vec::with_capacity(records.len());
    for (path, n, r) in records {
        let label = r.label.clone();
        verdicts.push(r.into_verdict(&space).map_err(|why| CliError::Malformed {
            path: path.clone(),
            message: format!("record {n}: label `{label}` does not resolve ({why:?})"),
        })?);
    }
    let report = score_report(&verdicts, bins);
    let per_class: BTreeMap<&str, _> = report.per_class.iter().map(|(&c, h)| (space.name(c), h)).collect();

    let mut inputs = vec![("verdicts", a.verdicts.clone())];
    if let Some(p) = &a.labelspace {
        inputs.push(("labelspace", vec![p.clone()]));
    }
    let input_refs: Vec<(&str, &[PathBuf])> = inputs.iter().map(|(k, v)| (*k, v.as_slice())).collect();
    let run = run_config("report", ctx.seed, &without_paths(&a, &["verdicts", "labelspace"]), &input_refs)?;
    write_json(
        &ctx.out_dir.join("histograms.json"),
        &json!({
            "run_config": run,
            "bins": report.bins,
            "range": [0.0, 1.0],
            "pooled": report.pooled,
            "per_class": per_class,
            "detectors": report.detectors,
        }),
    )
}
