use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use oodkit_core::corpus::write_jsonl;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::CliError;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        ensure_dir(parent)?;
    }
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| io_err(path)(e.into()))?;
    w.write_all(b"\n").map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

pub fn write_records<'a, T: Serialize + 'a>(
    path: &Path,
    records: impl IntoIterator<Item = &'a T>,
) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        ensure_dir(parent)?;
    }
    let file = File::create(path).map_err(io_err(path))?;
    write_jsonl(BufWriter::new(file), records).map_err(io_err(path))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| CliError::Malformed {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// File name and content digest of an input, so reports do not depend on
/// where the inputs happen to live.
pub fn input_echo(path: &Path) -> Result<Value, CliError> {
    let bytes = std::fs::read(path).map_err(io_err(path))?;
    let digest: String = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
    Ok(json!({
        "file": path.file_name().map(|n| n.to_string_lossy().into_owned()),
        "sha256": digest,
    }))
}

/// The `run_config` block embedded in every report.
pub fn run_config<P: Serialize>(
    subcommand: &str,
    seed: u64,
    params: &P,
    inputs: &[(&str, &[PathBuf])],
) -> Result<Value, CliError> {
    let mut echoed = serde_json::Map::new();
    for (name, paths) in inputs {
        let list = paths.iter().map(|p| input_echo(p)).collect::<Result<Vec<_>, _>>()?;
        echoed.insert(name.to_string(), Value::Array(list));
    }
    Ok(json!({
        "subcommand": subcommand,
        "seed": seed,
        "params": params,
        "inputs": echoed,
    }))
}

/// Strip path-valued keys before echoing parameters.
pub fn without_paths<P: Serialize>(params: &P, keys: &[&str]) -> Value {
    let mut v = serde_json::to_value(params).unwrap_or(Value::Null);
    if let Value::Object(map) = &mut v {
        for k in keys {
            map.remove(*k);
        }
    }
    v
}

/// Wall-clock data kept apart from the reports so those stay reproducible.
pub fn write_run_meta(out_dir: &Path, argv: &[String]) -> Result<(), CliError> {
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    write_json(
        &out_dir.join("run_meta.json"),
        &json!({
            "tool": "oodkit",
            "version": env!("CARGO_PKG_VERSION"),
            "created_unix": secs,
            "argv": argv,
        }),
    )
}
