use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use oodkit_core::corpus::{load_embeddings, load_records};
use oodkit_core::questiongen::{Gold, QuestionKind};
use oodkit_core::scoring::ScoredItem;
use oodkit_core::shifttests::{
    bootstrap_equivalence, degradation_perm_test, homogeneous_tau, median_bandwidth, mmd2, mmd_permutation_uci,
    tost_distribution, EtaMode, Estimator, JointSample, Metric, ModelOutcomes, ShiftError, TauSplit,
    DEFAULT_BOOTSTRAP, DEFAULT_DEGRADATION_PERMUTATIONS, DEFAULT_PERMUTATIONS,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{load_space, require, stage_seed};
use crate::config::layered;
use crate::error::CliError;
use crate::output::{run_config, without_paths, write_json};
use crate::Context;

pub const DEFAULT_TAU_SPLITS: usize = 500;
pub const DEFAULT_LEVEL: f64 = 0.95;
pub const DEFAULT_ID_SPLIT: &str = "id";
pub const DEFAULT_OOD_SPLIT: &str = "ood_hard";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorArg {
    Biased,
    Unbiased,
}

#[derive(Debug, Clone, Default, clap::Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Args {
    /// Label space used to read the embedding files.
    #[arg(long)]
    pub labelspace: Option<PathBuf>,
    /// Reference sample (also the source of the homogeneous baseline).
    #[arg(long)]
    pub embeddings_a: Option<PathBuf>,
    /// Sample compared against the reference.
    #[arg(long)]
    pub embeddings_b: Option<PathBuf>,
    /// RBF bandwidth; defaults to the within-class median distance.
    #[arg(long)]
    pub bandwidth: Option<f64>,
    #[arg(long, value_enum)]
    pub estimator: Option<EstimatorArg>,
    /// Permutations for the MMD upper bound.
    #[arg(long, visible_alias = "B")]
    pub permutations: Option<usize>,
    /// Quantile used for the upper bound and for τ.
    #[arg(long)]
    pub level: Option<f64>,
    /// Equivalence margin; computed from the reference sample when absent.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Random splits of the reference sample for τ.
    #[arg(long)]
    pub tau_splits: Option<usize>,
    /// Size of each τ subset; equal halves when absent.
    #[arg(long)]
    pub tau_subset: Option<usize>,

    /// `scored_items.jsonl` files for the behavioural tests.
    #[arg(long, num_args = 1..)]
    pub scored: Vec<PathBuf>,
    /// Models tested for equivalence with the open reference models.
    #[arg(long, value_delimiter = ',')]
    pub closed: Vec<String>,
    /// Open reference models.
    #[arg(long, value_delimiter = ',')]
    pub open: Vec<String>,
    #[arg(long)]
    pub id_split: Option<String>,
    #[arg(long)]
    pub ood_split: Option<String>,
    /// Use the step-by-step question variants.
    #[arg(long)]
    pub cot: bool,
    /// Permutations of the degradation test.
    #[arg(long)]
    pub degradation_permutations: Option<usize>,
    /// Bootstrap replicates of the equivalence test.
    #[arg(long)]
    pub bootstrap: Option<usize>,
    /// Fixed equivalence tolerance; the open-model spread when absent.
    #[arg(long)]
    pub eta: Option<f64>,
}

fn distribution_tests(ctx: &Context, a: &Args, a_path: &PathBuf, b_path: &PathBuf) -> Result<Value, CliError> {
    let space_path = require(a.labelspace.clone(), "labelspace")?;
    let space = load_space(&space_path)?;
    let xa = load_embeddings(a_path, &space).map_err(CliError::input(a_path))?;
    let xb = load_embeddings(b_path, &space).map_err(CliError::input(b_path))?;
    let x = JointSample::from_embeddings(&xa)?;
    let y = JointSample::from_embeddings(&xb)?;
    let bandwidth = match a.bandwidth {
        Some(h) => h,
        None => median_bandwidth(&x.concat(&y)?),
    };
    let estimator = match a.estimator.unwrap_or(EstimatorArg::Unbiased) {
        EstimatorArg::Biased => Estimator::Biased,
        EstimatorArg::Unbiased => Estimator::Unbiased,
    };
    let level = a.level.unwrap_or(DEFAULT_LEVEL);
    let b = a.permutations.unwrap_or(DEFAULT_PERMUTATIONS);

    let mut mmd = mmd2(&x, &y, Some(bandwidth), estimator)?;
    let perm = mmd_permutation_uci(&x, &y, b, level, bandwidth, stage_seed(ctx.seed, "mmd-permutation"))?;
    mmd.permutation_uci = Some(perm.uci);
    let tau = match a.tau {
        Some(t) => json!({ "tau": t, "source": "explicit" }),
        None => {
            let split = a.tau_subset.map_or(TauSplit::Halves, TauSplit::Fixed);
            let splits = a.tau_splits.unwrap_or(DEFAULT_TAU_SPLITS);
            let r = homogeneous_tau(&x, splits, level, bandwidth, split, stage_seed(ctx.seed, "tau"))?;
            json!({
                "tau": r.tau,
                "source": "homogeneous_baseline",
                "quantile": r.quantile,
                "splits": splits,
                "split": split,
            })
        }
    };
    let tau_value = tau["tau"].as_f64().unwrap_or(f64::NAN);
    let tost = tost_distribution(perm.uci, tau_value)?;
    Ok(json!({
        "n_a": x.len(),
        "n_b": y.len(),
        "bandwidth": bandwidth,
        "mmd": mmd,
        "permutation": {
            "observed": perm.observed,
            "uci": perm.uci,
            "level": perm.level,
            "b": perm.b,
        },
        "tau": tau,
        "tost": tost,
    }))
}

type Outcomes = BTreeMap<String, (oodkit_core::scoring::Parsed, oodkit_core::questiongen::YesNo)>;

/// Per model: ID and OOD outcomes keyed by question id.
fn collect_outcomes(
    items: &[ScoredItem],
    id_split: &str,
    ood_split: &str,
    cot: bool,
) -> BTreeMap<String, (Outcomes, Outcomes)> {
    let mut out: BTreeMap<String, (Outcomes, Outcomes)> = BTreeMap::new();
    for s in items {
        if s.cot != cot || !matches!(s.kind, QuestionKind::Contain | QuestionKind::NotContain) {
            continue;
        }
        let Gold::Binary(gold) = s.gold else { continue };
        let entry = out.entry(s.model_id.clone()).or_default();
        let target = match s.split.as_deref() {
            Some(sp) if sp == id_split => &mut entry.0,
            Some(sp) if sp == ood_split => &mut entry.1,
            _ => continue,
        };
        target.insert(s.question_id.clone(), (s.parsed, gold));
    }
    out
}

fn model_outcomes(
    model_id: &str,
    all: &BTreeMap<String, (Outcomes, Outcomes)>,
    reference: Option<(&BTreeSet<&String>, &BTreeSet<&String>)>,
) -> Result<ModelOutcomes, CliError> {
    let (id, ood) = all
        .get(model_id)
        .ok_or_else(|| CliError::Usage(format!("model `{model_id}` has no scored items in the chosen splits")))?;
    if let Some((ref_id, ref_ood)) = reference {
        let same = id.keys().collect::<BTreeSet<_>>() == *ref_id && ood.keys().collect::<BTreeSet<_>>() == *ref_ood;
        if !same {
            return Err(ShiftError::MisalignedModels(model_id.to_string()).into());
        }
    }
    Ok(ModelOutcomes {
        model_id: model_id.to_string(),
        id: id.values().copied().collect(),
        ood: ood.values().copied().collect(),
    })
}

fn behaviour_tests(ctx: &Context, a: &Args) -> Result<Value, CliError> {
    let mut items: Vec<ScoredItem> = Vec::new();
    for p in &a.scored {
        items.extend(load_records::<ScoredItem>(p).map_err(CliError::input(p))?);
    }
    let id_split = a.id_split.as_deref().unwrap_or(DEFAULT_ID_SPLIT);
    let ood_split = a.ood_split.as_deref().unwrap_or(DEFAULT_OOD_SPLIT);
    let all = collect_outcomes(&items, id_split, ood_split, a.cot);

    let models: Vec<&String> = a.closed.iter().chain(&a.open).collect();
    let tested: Vec<&String> = if models.is_empty() { all.keys().collect() } else { models };
    let deg_b = a.degradation_permutations.unwrap_or(DEFAULT_DEGRADATION_PERMUTATIONS);
    let deg_seed = stage_seed(ctx.seed, "degradation");
    let mut degradation = Vec::new();
    for m in tested {
        let o = model_outcomes(m, &all, None)?;
        let tests = Metric::ALL
            .iter()
            .map(|&metric| degradation_perm_test(&o.id, &o.ood, metric, deg_b, deg_seed))
            .collect::<Result<Vec<_>, _>>()?;
        degradation.push(json!({ "model_id": m, "n_id": o.id.len(), "n_ood": o.ood.len(), "tests": tests }));
    }

    let mut equivalence = Vec::new();
    if !a.closed.is_empty() {
        if a.open.is_empty() {
            return Err(ShiftError::NoOpenModels.into());
        }
        let b = a.bootstrap.unwrap_or(DEFAULT_BOOTSTRAP);
        let eta_mode = a.eta.map_or(EtaMode::SigmaOpen, EtaMode::Explicit);
        let boot_seed = stage_seed(ctx.seed, "bootstrap");
        for c in &a.closed {
            let closed = model_outcomes(c, &all, None)?;
            let (id_keys, ood_keys) = &all[c];
            let reference = (&id_keys.keys().collect(), &ood_keys.keys().collect());
            let open = a
                .open
                .iter()
                .map(|m| model_outcomes(m, &all, Some(reference)))
                .collect::<Result<Vec<_>, _>>()?;
            let tests = Metric::ALL
                .iter()
                .map(|&metric| bootstrap_equivalence(&closed, &open, metric, b, eta_mode, boot_seed))
                .collect::<Result<Vec<_>, _>>()?;
            equivalence.push(json!({ "model_id": c, "tests": tests }));
        }
    }
    Ok(json!({
        "id_split": id_split,
        "ood_split": ood_split,
        "cot": a.cot,
        "degradation": degradation,
        "equivalence": equivalence,
    }))
}

pub fn run(ctx: &Context, a: Args) -> Result<(), CliError> {
    let a = layered(a, ctx.file.shifttests.as_ref())?;
    let mut report = serde_json::Map::new();
    let mut inputs: Vec<(&str, Vec<PathBuf>)> = Vec::new();
    match (&a.embeddings_a, &a.embeddings_b) {
        (Some(pa), Some(pb)) => {
            report.insert("distribution".into(), distribution_tests(ctx, &a, pa, pb)?);
            inputs.push(("labelspace", a.labelspace.iter().cloned().collect()));
            inputs.push(("embeddings_a", vec![pa.clone()]));
            inputs.push(("embeddings_b", vec![pb.clone()]));
        }
        (None, None) => {}
        _ => return Err(CliError::Usage("--embeddings-a and --embeddings-b go together".into())),
    }
    if !a.scored.is_empty() {
        report.insert("behaviour".into(), behaviour_tests(ctx, &a)?);
        inputs.push(("scored", a.scored.clone()));
    }
    if report.is_empty() {
        return Err(CliError::Usage(
            "nothing to test: give --embeddings-a/--embeddings-b and/or --scored".into(),
        ));
    }
    let input_refs: Vec<(&str, &[PathBuf])> = inputs.iter().map(|(k, v)| (*k, v.as_slice())).collect();
    let params = without_paths(&a, &["labelspace", "embeddings_a", "embeddings_b", "scored"]);
    report.insert("run_config".into(), run_config("shifttests", ctx.seed, &params, &input_refs)?);
    write_json(&ctx.out_dir.join("shift_report.json"), &Value::Object(report))
}
