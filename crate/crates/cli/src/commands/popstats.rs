use std::path::PathBuf;

use oodkit_core::corpus::load_records;
use oodkit_core::popstats::{decide_counts, decide_population, OverlapRecord, OverlapStat, DEFAULT_ALPHA, DEFAULT_EPSILON};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::layered;
use crate::error::CliError;
use crate::output::{run_config, without_paths, write_json};
use crate::Context;

#[derive(Debug, Clone, Default, clap::Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Args {
    /// Per-model overlap counts (JSON Lines of model_id, overlapping, total).
    #[arg(long, conflicts_with_all = ["k", "n"])]
    pub overlaps: Option<PathBuf>,
    /// Number of models with `Z = 1`, when already tallied.
    #[arg(long, requires = "n")]
    pub k: Option<u64>,
    /// Number of models tested, with `--k`.
    #[arg(long, requires = "k")]
    pub n: Option<u64>,
    /// Overlap tolerance below which a model counts as unexposed.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// One-sided level of the population lower bounds.
    #[arg(long)]
    pub alpha: Option<f64>,
}

pub fn run(ctx: &Context, a: Args) -> Result<(), CliError> {
    let a = layered(a, ctx.file.popstats.as_ref())?;
    let epsilon = a.epsilon.unwrap_or(DEFAULT_EPSILON);
    let alpha = a.alpha.unwrap_or(DEFAULT_ALPHA);
    let params = json!({
        "settings": without_paths(&a, &["overlaps"]),
        "resolved": { "epsilon": epsilon, "alpha": alpha },
    });
    let (stats, decision, inputs) = match (&a.overlaps, a.k, a.n) {
        (Some(path), _, _) => {
            let records: Vec<OverlapRecord> = load_records(path).map_err(CliError::input(path))?;
            let stats = records
                .iter()
                .map(OverlapStat::from_record)
                .collect::<Result<Vec<_>, _>>()?;
            let decision = decide_population(&stats, epsilon, alpha)?;
            (stats, decision, vec![path.clone()])
        }
        (None, Some(k), Some(n)) => (Vec::new(), decide_counts(k, n, epsilon, alpha)?, Vec::new()),
        _ => return Err(CliError::Usage("give --overlaps, or --k with --n".into())),
    };
    let run = run_config("popstats", ctx.seed, &params, &[("overlaps", &inputs)])?;
    write_json(
        &ctx.out_dir.join("popstats.json"),
        &json!({
            "run_config": run,
            "overlaps": stats,
            "decision": decision,
        }),
    )
}
