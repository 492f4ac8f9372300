use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CorpusError;

/// One row of a remap table: rename a label or drop it entirely.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawRemap", into = "RawRemap")]
pub enum RemapEntry {
    To(String),
    Drop,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
enum RawRemap {
    To { to: String },
    Drop { drop: bool },
}

impl TryFrom<RawRemap> for RemapEntry {
    type Error = String;

    fn try_from(raw: RawRemap) -> Result<Self, Self::Error> {
        match raw {
            RawRemap::To { to } => Ok(RemapEntry::To(to)),
            RawRemap::Drop { drop: true } => Ok(RemapEntry::Drop),
            RawRemap::Drop { drop: false } => Err("`drop` must be true when present".into()),
        }
    }
}

impl From<RemapEntry> for RawRemap {
    fn from(entry: RemapEntry) -> Self {
        match entry {
            RemapEntry::To(to) => RawRemap::To { to },
            RemapEntry::Drop => RawRemap::Drop { drop: true },
        }
    }
}

/// On-disk shape of `labelspace.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelSpaceFile {
    pub dataset_id: String,
    pub labels: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub remap: Option<BTreeMap<String, RemapEntry>>,
}

/// Why a label string failed to resolve to an index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unresolved {
    Unknown,
    /// The label existed in the original table but was dropped by a remap.
    Excluded,
}

/// The ordered candidate-label set of a dataset.
///
/// After [`LabelSpace::apply_remap`] the labels are the natural-language
/// names; original names keep resolving to the same index through an alias
/// table, and dropped names resolve to [`Unresolved::Excluded`].
#[derive(Debug, Clone, PartialEq)]
pub struct LabelSpace {
    dataset_id: String,
    labels: Vec<String>,
    remap: Option<BTreeMap<String, RemapEntry>>,
    index: HashMap<String, usize>,
    aliases: HashMap<String, usize>,
    excluded: BTreeSet<String>,
}

impl LabelSpace {
    pub fn new(
        dataset_id: impl Into<String>,
        labels: Vec<String>,
        remap: Option<BTreeMap<String, RemapEntry>>,
    ) -> Result<Self, CorpusError> {
        let mut index = HashMap::with_capacity(labels.len());
        for (i, label) in labels.iter().enumerate() {
            if index.insert(label.clone(), i).is_some() {
                return Err(CorpusError::DuplicateLabel(label.clone()));
            }
        }
        if let Some(table) = &remap {
            if let Some(stray) = table.keys().find(|k| !index.contains_key(*k)) {
                return Err(CorpusError::RemapUnknownLabel(stray.clone()));
            }
        }
        Ok(Self {
            dataset_id: dataset_id.into(),
            labels,
            remap,
            index,
            aliases: HashMap::new(),
            excluded: BTreeSet::new(),
        })
    }

    pub fn from_file(file: LabelSpaceFile) -> Result<Self, CorpusError> {
        Self::new(file.dataset_id, file.labels, file.remap)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CorpusError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let file: LabelSpaceFile = serde_json::from_str(&text).map_err(|e| CorpusError::Record {
            line: e.line(),
            source: super::RecordError::Schema(e.to_string()),
        })?;
        Self::from_file(file)
    }

    /// The file representation. Aliases and exclusions of an already
    /// remapped space are not part of the format.
    pub fn to_file(&self) -> LabelSpaceFile {
        LabelSpaceFile {
            dataset_id: self.dataset_id.clone(),
            labels: self.labels.clone(),
            remap: self.remap.clone(),
        }
    }

    pub fn dataset_id(&self) -> &str {
        &self.dataset_id
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn name(&self, index: usize) -> &str {
        &self.labels[index]
    }

    pub fn remap(&self) -> Option<&BTreeMap<String, RemapEntry>> {
        self.remap.as_ref()
    }

    /// Original label names removed by a remap.
    pub fn excluded(&self) -> &BTreeSet<String> {
        &self.excluded
    }

    pub fn resolve(&self, name: &str) -> Result<usize, Unresolved> {
        if let Some(&i) = self.index.get(name).or_else(|| self.aliases.get(name)) {
            return Ok(i);
        }
        if self.excluded.contains(name) {
            return Err(Unresolved::Excluded);
        }
        if let Some(RemapEntry::Drop) = self.remap.as_ref().and_then(|t| t.get(name)) {
            return Err(Unresolved::Excluded);
        }
        Err(Unresolved::Unknown)
    }

    /// Rename labels to their natural-language form and drop excluded ones.
    ///
    /// Survivors keep their relative order. A space without a remap table is
    /// returned unchanged.
    pub fn apply_remap(&self) -> Result<LabelSpace, CorpusError> {
        let Some(table) = &self.remap else {
            return Ok(self.clone());
        };
        let mut labels = Vec::with_capacity(self.labels.len());
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut origin: HashMap<String, String> = HashMap::new();
        let mut aliases: HashMap<String, usize> = HashMap::new();
        let mut old_to_new: HashMap<usize, usize> = HashMap::new();
        let mut excluded = self.excluded.clone();

        for (old, label) in self.labels.iter().enumerate() {
            let target = match table.get(label) {
                Some(RemapEntry::Drop) => {
                    excluded.insert(label.clone());
                    continue;
                }
                Some(RemapEntry::To(to)) => to.clone(),
                None => label.clone(),
            };
            if let Some(first) = origin.get(&target) {
                return Err(CorpusError::DuplicateAfterRemap {
                    first: first.clone(),
                    second: label.clone(),
                    target,
                });
            }
            let new = labels.len();
            origin.insert(target.clone(), label.clone());
            index.insert(target.clone(), new);
            old_to_new.insert(old, new);
            if target != *label {
                aliases.insert(label.clone(), new);
            }
            labels.push(target);
        }
        // aliases inherited from an earlier remap follow their label
        for (alias, old) in &self.aliases {
            match old_to_new.get(old) {
                Some(&new) if !index.contains_key(alias) => {
                    aliases.entry(alias.clone()).or_insert(new);
                }
                Some(_) => {}
                None => {
                    excluded.insert(alias.clone());
                }
            }
        }
        // live names are never excluded
        for name in labels.iter() {
            excluded.remove(name);
        }

        Ok(LabelSpace {
            dataset_id: self.dataset_id.clone(),
            labels,
            remap: None,
            index,
            aliases,
            excluded,
        })
    }
}
