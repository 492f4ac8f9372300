//! Data model and line-delimited JSON ingestion.
//!
//! Every input file except `labelspace.json` is JSON Lines: one record per
//! line, read as a stream so large logits files never need a whole-file
//! parse. Files carry label *strings*; after ingestion everything downstream
//! works on label indices into a [`LabelSpace`].
//!
//! | file | record |
//! |---|---|
//! | `pairs.jsonl` | `{"detector_id","image_id","gt_labels":[str],"logits":[num]}` |
//! | `annotations.jsonl` | `{"image_id","counts":{label:count}}` |
//! | `embeddings.jsonl` | `{"image_id","label","vector":[num]}` |
//! | `transcripts.jsonl` | `{"question_id","model_id","response_text"}` |

mod labels;
pub mod lint;
pub mod presets;

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use labels::{LabelSpace, LabelSpaceFile, RemapEntry, Unresolved};

/// A problem with one record, independent of where it was read from.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum RecordError {
    #[error("malformed record: {0}")]
    Schema(String),
    #[error("expected {expected} values, found {found}")]
    Dimension { expected: usize, found: usize },
    /// `excluded` is set when the label is a remap tombstone.
    #[error("unknown label `{label}`{}", if *excluded { " (dropped by the label remap)" } else { "" })]
    UnknownLabel { label: String, excluded: bool },
    #[error("non-finite value in `{0}`")]
    NonFinite(&'static str),
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("line {line}: {source}")]
    Record { line: usize, source: RecordError },
    #[error("duplicate label `{0}` in label space")]
    DuplicateLabel(String),
    #[error("remap table refers to `{0}`, which is not a label of the space")]
    RemapUnknownLabel(String),
    #[error("labels `{first}` and `{second}` both map to `{target}`")]
    DuplicateAfterRemap {
        first: String,
        second: String,
        target: String,
    },
}

impl CorpusError {
    /// Whether the error came from a record that failed validation (as
    /// opposed to I/O or label-space construction).
    pub fn is_record_error(&self) -> bool {
        matches!(self, CorpusError::Record { .. })
    }
}

fn resolve_label(space: &LabelSpace, name: &str) -> Result<usize, RecordError> {
    space.resolve(name).map_err(|why| match why {
        Unresolved::Unknown => RecordError::UnknownLabel {
            label: name.to_string(),
            excluded: false,
        },
        Unresolved::Excluded => RecordError::UnknownLabel {
            label: name.to_string(),
            excluded: true,
        },
    })
}

fn check_finite(values: &[f64], field: &'static str) -> Result<(), RecordError> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(RecordError::NonFinite(field))
    }
}

// ---------------------------------------------------------------------------
// records

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairRecord {
    pub detector_id: String,
    pub image_id: String,
    pub gt_labels: Vec<String>,
    pub logits: Vec<f64>,
}

/// One image's candidate-label logits from one detector.
#[derive(Debug, Clone, PartialEq)]
pub struct PairLogits {
    pub detector_id: String,
    pub image_id: String,
    pub gt_labels: BTreeSet<usize>,
    pub logits: Vec<f64>,
}

impl PairLogits {
    pub fn from_record(rec: PairRecord, space: &LabelSpace) -> Result<Self, RecordError> {
        if rec.logits.len() != space.len() {
            return Err(RecordError::Dimension {
                expected: space.len(),
                found: rec.logits.len(),
            });
        }
        check_finite(&rec.logits, "logits")?;
        let gt_labels = rec
            .gt_labels
            .iter()
            .map(|name| resolve_label(space, name))
            .collect::<Result<_, _>>()?;
        Ok(Self {
            detector_id: rec.detector_id,
            image_id: rec.image_id,
            gt_labels,
            logits: rec.logits,
        })
    }

    pub fn to_record(&self, space: &LabelSpace) -> PairRecord {
        PairRecord {
            detector_id: self.detector_id.clone(),
            image_id: self.image_id.clone(),
            gt_labels: self.gt_labels.iter().map(|&i| space.name(i).to_string()).collect(),
            logits: self.logits.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationRecord {
    pub image_id: String,
    pub counts: BTreeMap<String, u32>,
}

/// Ground-truth instance counts for one image.
#[derive(Debug, Clone, PartialEq)]
pub struct Annotation {
    pub image_id: String,
    pub counts: BTreeMap<usize, u32>,
}

impl Annotation {
    pub fn from_record(rec: AnnotationRecord, space: &LabelSpace) -> Result<Self, RecordError> {
        let counts = rec
            .counts
            .iter()
            .map(|(name, &n)| Ok((resolve_label(space, name)?, n)))
            .collect::<Result<_, RecordError>>()?;
        Ok(Self {
            image_id: rec.image_id,
            counts,
        })
    }

    pub fn to_record(&self, space: &LabelSpace) -> AnnotationRecord {
        AnnotationRecord {
            image_id: self.image_id.clone(),
            counts: self
                .counts
                .iter()
                .map(|(&i, &n)| (space.name(i).to_string(), n))
                .collect(),
        }
    }

    pub fn count(&self, label: usize) -> u32 {
        self.counts.get(&label).copied().unwrap_or(0)
    }

    /// Labels with at least one instance.
    pub fn present(&self) -> BTreeSet<usize> {
        self.counts.iter().filter(|(_, &n)| n > 0).map(|(&l, _)| l).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingRecord {
    pub image_id: String,
    pub label: String,
    pub vector: Vec<f64>,
}

/// Image feature vector tagged with the class of the pair it belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub image_id: String,
    pub label: usize,
    pub vector: Vec<f64>,
}

impl Embedding {
    pub fn from_record(rec: EmbeddingRecord, space: &LabelSpace) -> Result<Self, RecordError> {
        check_finite(&rec.vector, "vector")?;
        Ok(Self {
            label: resolve_label(space, &rec.label)?,
            image_id: rec.image_id,
            vector: rec.vector,
        })
    }

    pub fn to_record(&self, space: &LabelSpace) -> EmbeddingRecord {
        EmbeddingRecord {
            image_id: self.image_id.clone(),
            label: space.name(self.label).to_string(),
            vector: self.vector.clone(),
        }
    }
}

/// A model's raw answer to one question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Transcript {
    pub question_id: String,
    pub model_id: String,
    pub response_text: String,
}

// ---------------------------------------------------------------------------
// streaming IO

/// Iterate over the records of a JSON Lines stream, skipping blank lines.
/// Items carry their 1-based line number.
pub fn jsonl_records<T: DeserializeOwned, R: BufRead>(
    reader: R,
) -> impl Iterator<Item = Result<(usize, T), CorpusError>> {
    reader.lines().enumerate().filter_map(|(i, line)| {
        let line_no = i + 1;
        let line = match line {
            Ok(line) => line,
            Err(source) => {
                return Some(Err(CorpusError::Io {
                    path: PathBuf::from("<stream>"),
                    source,
                }))
            }
        };
        if line.trim().is_empty() {
            return None;
        }
        Some(
            serde_json::from_str(&line)
                .map(|rec| (line_no, rec))
                .map_err(|e| CorpusError::Record {
                    line: line_no,
                    source: RecordError::Schema(e.to_string()),
                }),
        )
    })
}

pub fn open(path: &Path) -> Result<BufReader<File>, CorpusError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })
}

fn read_validated<Raw, T, R, F>(reader: R, mut convert: F) -> Result<Vec<T>, CorpusError>
where
    Raw: DeserializeOwned,
    R: BufRead,
    F: FnMut(Raw) -> Result<T, RecordError>,
{
    jsonl_records::<Raw, R>(reader)
        .map(|item| {
            let (line, raw) = item?;
            convert(raw).map_err(|source| CorpusError::Record { line, source })
        })
        .collect()
}

pub fn read_pair_logits<R: BufRead>(reader: R, space: &LabelSpace) -> Result<Vec<PairLogits>, CorpusError> {
    read_validated(reader, |rec| PairLogits::from_record(rec, space))
}

/// Load `pairs.jsonl`, validating every record against `space`.
pub fn load_pair_logits(path: impl AsRef<Path>, space: &LabelSpace) -> Result<Vec<PairLogits>, CorpusError> {
    read_pair_logits(open(path.as_ref())?, space)
}

pub fn read_annotations<R: BufRead>(reader: R, space: &LabelSpace) -> Result<Vec<Annotation>, CorpusError> {
    read_validated(reader, |rec| Annotation::from_record(rec, space))
}

pub fn load_annotations(path: impl AsRef<Path>, space: &LabelSpace) -> Result<Vec<Annotation>, CorpusError> {
    read_annotations(open(path.as_ref())?, space)
}

/// Embeddings must share one dimension per file; the first record fixes it.
pub fn read_embeddings<R: BufRead>(reader: R, space: &LabelSpace) -> Result<Vec<Embedding>, CorpusError> {
    let mut dim = None;
    read_validated(reader, |rec: EmbeddingRecord| {
        let expected = *dim.get_or_insert(rec.vector.len());
        if rec.vector.len() != expected {
            return Err(RecordError::Dimension {
                expected,
                found: rec.vector.len(),
            });
        }
        Embedding::from_record(rec, space)
    })
}

pub fn load_embeddings(path: impl AsRef<Path>, space: &LabelSpace) -> Result<Vec<Embedding>, CorpusError> {
    read_embeddings(open(path.as_ref())?, space)
}

pub fn read_transcripts<R: BufRead>(reader: R) -> Result<Vec<Transcript>, CorpusError> {
    read_validated(reader, Ok)
}

pub fn load_transcripts(path: impl AsRef<Path>) -> Result<Vec<Transcript>, CorpusError> {
    read_transcripts(open(path.as_ref())?)
}

/// Load any JSON Lines file of `T` records without further validation.
pub fn load_records<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>, CorpusError> {
    read_validated(open(path.as_ref())?, Ok)
}

/// Write records as JSON Lines.
pub fn write_jsonl<'a, T, W, I>(mut writer: W, records: I) -> io::Result<()>
where
    T: Serialize + 'a,
    W: Write,
    I: IntoIterator<Item = &'a T>,
{
    for rec in records {
        serde_json::to_writer(&mut writer, rec)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()
}

pub fn save_jsonl<'a, T, I>(path: impl AsRef<Path>, records: I) -> Result<(), CorpusError>
where
    T: Serialize + 'a,
    I: IntoIterator<Item = &'a T>,
{
    let path = path.as_ref();
    let wrap = |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(wrap)?;
    write_jsonl(BufWriter::new(file), records).map_err(wrap)
}

// ---------------------------------------------------------------------------
// cross-file checks

/// An image whose annotation counts disagree with the ground-truth label set
/// carried by its logits records.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CountMismatch {
    pub image_id: String,
    /// Labels with a positive count that are not ground truth.
    pub counted_not_gt: Vec<usize>,
    /// Ground-truth labels without a positive count.
    pub gt_not_counted: Vec<usize>,
}

/// Check that `count > 0` exactly for ground-truth labels, for every image
/// present in both collections.
pub fn check_annotation_consistency(pairs: &[PairLogits], annotations: &[Annotation]) -> Vec<CountMismatch> {
    let mut gt: BTreeMap<&str, BTreeSet<usize>> = BTreeMap::new();
    for rec in pairs {
        gt.entry(&rec.image_id).or_default().extend(rec.gt_labels.iter().copied());
    }
    let mut out = Vec::new();
    for ann in annotations {
        let Some(gt) = gt.get(ann.image_id.as_str()) else {
            continue;
        };
        let present = ann.present();
        let counted_not_gt: Vec<usize> = present.difference(gt).copied().collect();
        let gt_not_counted: Vec<usize> = gt.difference(&present).copied().collect();
        if !counted_not_gt.is_empty() || !gt_not_counted.is_empty() {
            out.push(CountMismatch {
                image_id: ann.image_id.clone(),
                counted_not_gt,
                gt_not_counted,
            });
        }
    }
    out
}
