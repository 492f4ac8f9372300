//! Building blocks for instance-level out-of-distribution benchmarks.
//!
//! The crate is organised the way the data flows:
//!
//! - [`corpus`]: file formats and validation for detector logits, annotations,
//!   embeddings, transcripts and label spaces.
//! - [`division`]: purified match probabilities, per-detector failure
//!   detection and the multi-detector ID / OOD-Simple / OOD-Hard split.
//! - [`questiongen`]: balanced yes/no questions and Basic-to-Advanced
//!   Progression (BAP) samples.
//! - [`scoring`]: transcript parsing, confusion-matrix metrics and BAP metrics.
//! - [`popstats`]: overlap rates and exact / Bayesian binomial bounds.
//! - [`shifttests`]: joint-kernel MMD, permutation and bootstrap tests.
//! - [`hardmine`]: focal-loss hard-sample mining and the hard-vs-OOD evidence.
//! - [`report`]: histogram data for plotting detector score distributions.
//!
//! All randomized procedures take an explicit `u64` seed. Replicate loops
//! derive one ChaCha stream per replicate index (see [`rng`]) so results do
//! not depend on thread count or scheduling.

pub mod corpus;
pub mod division;
pub mod hardmine;
pub mod popstats;
pub mod questiongen;
pub mod report;
pub mod rng;
pub mod scoring;
pub mod shifttests;
pub mod special;
pub mod stats;

pub use corpus::{Annotation, Embedding, LabelSpace, PairLogits, Transcript};
pub use division::{DetectorVerdict, DivisionResult, PairKey, Trigger};
pub use questiongen::{BapSample, Gold, QuestionItem, QuestionKind};
pub use scoring::{BapReport, MetricsReport, Prediction};
