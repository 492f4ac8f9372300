use std::path::PathBuf;

use oodkit_core::corpus::{
    check_annotation_consistency, load_annotations, load_embeddings, load_pair_logits, load_transcripts, open,
    lint::find_excluded,
};
use serde::{Deserialize, Serialize};

use super::{load_space, require};
use crate::error::CliError;
use crate::Context;

#[derive(Debug, Clone, Default, clap::Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Args {
    #[arg(long)]
    pub labelspace: Option<PathBuf>,
    #[arg(long, num_args = 1..)]
    pub pairs: Vec<PathBuf>,
    #[arg(long, num_args = 1..)]
    pub annotations: Vec<PathBuf>,
    #[arg(long, num_args = 1..)]
    pub embeddings: Vec<PathBuf>,
    #[arg(long, num_args = 1..)]
    pub transcripts: Vec<PathBuf>,
    /// Fail when annotation counts disagree with the ground-truth labels of
    /// the logits records.
    #[arg(long)]
    pub strict_counts: bool,
}

#[derive(Debug, Clone, Default, clap::Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LintArgs {
    /// Label space with the remap table whose dropped labels are searched for.
    #[arg(long)]
    pub labelspace: Option<PathBuf>,
    /// JSON Lines files to scan.
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
}

pub fn run(_ctx: &Context, a: Args) -> Result<(), CliError> {
    let space_path = require(a.labelspace.clone(), "labelspace")?;
    let space = load_space(&space_path)?;
    println!("{}: {} labels", space_path.display(), space.len());
    let mut pairs = Vec::new();
    for p in &a.pairs {
        let recs = load_pair_logits(p, &space).map_err(CliError::input(p))?;
        println!("{}: {} pair records", p.display(), recs.len());
        pairs.extend(recs);
    }
    let mut annotations = Vec::new();
    for p in &a.annotations {
        let recs = load_annotations(p, &space).map_err(CliError::input(p))?;
        println!("{}: {} annotation records", p.display(), recs.len());
        annotations.extend(recs);
    }
    for p in &a.embeddings {
        let recs = load_embeddings(p, &space).map_err(CliError::input(p))?;
        println!("{}: {} embedding records", p.display(), recs.len());
    }
    for p in &a.transcripts {
        let recs = load_transcripts(p).map_err(CliError::input(p))?;
        println!("{}: {} transcript records", p.display(), recs.len());
    }
    let mismatches = check_annotation_consistency(&pairs, &annotations);
    for m in &mismatches {
        let names = |ls: &[usize]| ls.iter().map(|&l| space.name(l)).collect::<Vec<_>>().join(", ");
        eprintln!(
            "warning: {}: counted but not ground truth [{}]; ground truth without count [{}]",
            m.image_id,
            names(&m.counted_not_gt),
            names(&m.gt_not_counted)
        );
    }
    if a.strict_counts && !mismatches.is_empty() {
        return Err(CliError::Malformed {
            path: a.annotations[0].clone(),
            message: format!("{} image(s) with inconsistent counts", mismatches.len()),
        });
    }
    Ok(())
}

pub fn lint(_ctx: &Context, a: LintArgs) -> Result<(), CliError> {
    let space_path = require(a.labelspace.clone(), "labelspace")?;
    let space = load_space(&space_path)?;
    let mut total = 0;
    for p in &a.files {
        let findings = find_excluded(open(p).map_err(CliError::input(p))?, space.excluded())
            .map_err(CliError::input(p))?;
        for f in &findings {
            println!("{}:{}: excluded label `{}`", p.display(), f.line, f.label);
        }
        total += findings.len();
    }
    if total > 0 {
        return Err(CliError::LintFindings(total));
    }
    Ok(())
}
