//! Scan JSON Lines files for references to labels a remap has excluded.

use std::collections::BTreeSet;
use std::io::BufRead;

use serde::Serialize;
use serde_json::Value;

use super::{jsonl_records, CorpusError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LintFinding {
    pub line: usize,
    pub label: String,
}

fn visit(value: &Value, excluded: &BTreeSet<String>, hits: &mut BTreeSet<String>) {
    match value {
        Value::String(s) if excluded.contains(s) => {
            hits.insert(s.clone());
        }
        Value::Array(items) => items.iter().for_each(|v| visit(v, excluded, hits)),
        Value::Object(map) => {
            for (k, v) in map {
                if excluded.contains(k) {
                    hits.insert(k.clone());
                }
                visit(v, excluded, hits);
            }
        }
        _ => {}
    }
}

/// Every string value or object key equal to an excluded label.
pub fn find_excluded<R: BufRead>(reader: R, excluded: &BTreeSet<String>) -> Result<Vec<LintFinding>, CorpusError> {
    let mut out = Vec::new();
    for item in jsonl_records::<Value, R>(reader) {
        let (line, value) = item?;
        let mut hits = BTreeSet::new();
        visit(&value, excluded, &mut hits);
        out.extend(hits.into_iter().map(|label| LintFinding { line, label }));
    }
    Ok(out)
}
