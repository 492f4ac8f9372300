use std::collections::BTreeMap;
use std::path::PathBuf;

use oodkit_core::corpus::{
    load_records, presets, AnnotationRecord, EmbeddingRecord, LabelSpace, PairRecord, Transcript,
};
use oodkit_core::popstats::OverlapRecord;
use oodkit_core::questiongen::{Gold, QuestionItem, YesNo};
use oodkit_core::rng::keyed_rng;
use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::require;
use crate::config::layered;
use crate::error::CliError;
use crate::output::{write_json, write_records};
use crate::Context;

#[derive(Debug, Clone, Default, clap::Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Args {
    #[arg(long)]
    pub images: Option<usize>,
    /// Number of labels, taken from the start of the COCO label list.
    #[arg(long)]
    pub labels: Option<usize>,
    #[arg(long)]
    pub detectors: Option<usize>,
    /// Points in each embedding file.
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub dim: Option<usize>,
    /// Models in the overlap and evidence files.
    #[arg(long)]
    pub models: Option<usize>,
}

#[derive(Debug, Clone, Default, clap::Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateArgs {
    /// `questions.jsonl` to answer.
    #[arg(long)]
    pub questions: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub models: Vec<String>,
    /// Probability of a correct answer on the ID split.
    #[arg(long)]
    pub accuracy: Option<f64>,
    /// Accuracy lost on the hard OOD split; half of it on the simple one.
    #[arg(long)]
    pub drop: Option<f64>,
    /// Share of answers with no usable keyword.
    #[arg(long)]
    pub unparseable: Option<f64>,
}

fn normal(sd: f64) -> Normal<f64> {
    Normal::new(0.0, sd).expect("positive standard deviation")
}

fn write_labelspace(ctx: &Context, space: &LabelSpace) -> Result<(), CliError> {
    write_json(&ctx.out_dir.join("labelspace.json"), &space.to_file())
}

pub fn run(ctx: &Context, a: Args) -> Result<(), CliError> {
    let a = layered(a, ctx.file.synth.as_ref())?;
    let n_images = a.images.unwrap_or(300);
    let coco = presets::coco();
    let n_labels = a.labels.unwrap_or(6).clamp(2, coco.len());
    let n_detectors = a.detectors.unwrap_or(2).max(1);
    let n_points = a.points.unwrap_or(200);
    let dim = a.dim.unwrap_or(4).max(1);
    let n_models = a.models.unwrap_or(9).max(3);

    let labels: Vec<String> = coco.labels()[..n_labels].to_vec();
    let space = LabelSpace::new("synthetic", labels.clone(), None).map_err(CliError::input("labelspace"))?;
    write_labelspace(ctx, &space)?;

    let mut rng = keyed_rng(ctx.seed, "synth-images");
    let detector_ids: Vec<String> = (0..n_detectors).map(|d| format!("det-{}", (b'a' + d as u8 % 26) as char)).collect();
    let mut pairs = Vec::new();
    let mut proposals = Vec::new();
    let mut annotations = Vec::new();
    for i in 0..n_images {
        let image_id = format!("img-{i:05}");
        let n_gt = rng.random_range(1..=3.min(n_labels));
        let gt: Vec<usize> = {
            let mut v = index::sample(&mut rng, n_labels, n_gt).into_vec();
            v.sort_unstable();
            v
        };
        let counts: BTreeMap<String, u32> = gt.iter().map(|&l| (labels[l].clone(), rng.random_range(1..=4))).collect();
        let difficulty: Vec<f64> = (0..n_labels).map(|_| normal(1.0).sample(&mut rng)).collect();
        for det in &detector_ids {
            let logits: Vec<f64> = (0..n_labels)
                .map(|l| {
                    let noise = normal(1.0).sample(&mut rng);
                    if gt.contains(&l) {
                        3.0 - 2.0 * difficulty[l] + 0.7 * noise
                    } else {
                        noise
                    }
                })
                .collect();
            pairs.push(PairRecord {
                detector_id: det.clone(),
                image_id: image_id.clone(),
                gt_labels: gt.iter().map(|&l| labels[l].clone()).collect(),
                logits,
            });
        }
        for _ in 0..rng.random_range(1..=4) {
            let logits: Vec<f64> = (0..n_labels).map(|_| normal(2.0).sample(&mut rng)).collect();
            proposals.push(PairRecord {
                detector_id: "proposer".into(),
                image_id: image_id.clone(),
                gt_labels: gt.iter().map(|&l| labels[l].clone()).collect(),
                logits,
            });
        }
        annotations.push(AnnotationRecord { image_id, counts });
    }
    write_records(&ctx.out_dir.join("pairs.jsonl"), &pairs)?;
    write_records(&ctx.out_dir.join("proposals.jsonl"), &proposals)?;
    write_records(&ctx.out_dir.join("annotations.jsonl"), &annotations)?;

    let mut means_rng = keyed_rng(ctx.seed, "synth-class-means");
    let means: Vec<Vec<f64>> = (0..n_labels)
        .map(|_| (0..dim).map(|_| normal(2.0).sample(&mut means_rng)).collect())
        .collect();
    for name in ["embeddings_a", "embeddings_b"] {
        let mut rng = keyed_rng(ctx.seed, name);
        let records: Vec<EmbeddingRecord> = (0..n_points)
            .map(|i| {
                let l = rng.random_range(0..n_labels);
                EmbeddingRecord {
                    image_id: format!("{name}-{i:05}"),
                    label: labels[l].clone(),
                    vector: means[l].iter().map(|m| m + normal(1.0).sample(&mut rng)).collect(),
                }
            })
            .collect();
        write_records(&ctx.out_dir.join(format!("{name}.jsonl")), &records)?;
    }

    let mut rng = keyed_rng(ctx.seed, "synth-models");
    let models: Vec<String> = (0..n_models).map(|m| format!("model-{m}")).collect();
    let overlaps: Vec<OverlapRecord> = models
        .iter()
        .map(|m| OverlapRecord {
            model_id: m.clone(),
            overlapping: rng.random_range(0..150),
            total: 5000,
        })
        .collect();
    write_records(&ctx.out_dir.join("overlaps.jsonl"), &overlaps)?;

    let pool_items = 1500;
    let id_accuracy: Vec<f64> = models.iter().map(|_| rng.random_range(75.0..90.0)).collect();
    let skill: Vec<f64> = models.iter().map(|_| rng.random_range(0.45..0.8)).collect();
    let correct: Vec<Vec<bool>> = skill
        .iter()
        .map(|&s| (0..pool_items).map(|_| rng.random_bool(s)).collect())
        .collect();
    let hard_drops: Vec<f64> = id_accuracy
        .iter()
        .zip(&correct)
        .map(|(acc, row)| acc - 100.0 * row[..500].iter().filter(|&&c| c).count() as f64 / 500.0)
        .collect();
    let ood_drops: Vec<f64> = models.iter().map(|_| rng.random_range(12.0..22.0)).collect();
    write_json(
        &ctx.out_dir.join("evidence.json"),
        &json!({
            "models": models,
            "hard_drops": hard_drops,
            "ood_drops": ood_drops,
            "baseline_pool": { "id_accuracy": id_accuracy, "correct": correct },
        }),
    )
}

fn answer(q: &QuestionItem, correct: bool, rng: &mut impl Rng) -> String {
    match q.gold {
        Gold::Binary(g) => {
            let said = if correct { g } else { g.flip() };
            match said {
                YesNo::Yes => "Yes, it does.".to_string(),
                YesNo::No => "No, it does not.".to_string(),
            }
        }
        Gold::Count(n) => {
            let said = if correct {
                n
            } else if n == 0 || rng.random_bool(0.5) {
                n + 1
            } else {
                n - 1
            };
            format!("There are {said} of them.")
        }
    }
}

pub fn simulate(ctx: &Context, a: SimulateArgs) -> Result<(), CliError> {
    let a = layered(a, ctx.file.simulate.as_ref())?;
    let q_path = require(a.questions.clone(), "questions")?;
    let questions: Vec<QuestionItem> = load_records(&q_path).map_err(CliError::input(&q_path))?;
    let models = if a.models.is_empty() {
        vec!["open-a".to_string(), "open-b".to_string(), "closed-x".to_string()]
    } else {
        a.models.clone()
    };
    let accuracy = a.accuracy.unwrap_or(0.85);
    let drop = a.drop.unwrap_or(0.2);
    let unparseable = a.unparseable.unwrap_or(0.02);
    let mut transcripts = Vec::new();
    for m in &models {
        let offset: f64 = keyed_rng(ctx.seed, m).random_range(-0.05..0.05);
        for q in &questions {
            let p = match q.split.as_deref() {
                Some("ood_hard") => accuracy - drop,
                Some("ood_simple") => accuracy - drop / 2.0,
                _ => accuracy,
            };
            let mut rng = keyed_rng(ctx.seed, &format!("{m}\u{1f}{}", q.question_id));
            let text = if rng.random_bool(unparseable.clamp(0.0, 1.0)) {
                "I cannot tell from this image.".to_string()
            } else {
                let correct = rng.random_bool((p + offset).clamp(0.0, 1.0));
                answer(q, correct, &mut rng)
            };
            transcripts.push(Transcript {
                question_id: q.question_id.clone(),
                model_id: m.clone(),
                response_text: text,
            });
        }
    }
    write_records(&ctx.out_dir.join("transcripts.jsonl"), &transcripts)
}
