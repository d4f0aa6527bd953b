use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use seedstab::Variant;

use crate::error::{CliError, CliResult};

/// File locations under the output directory.
#[derive(Debug, Clone)]
pub struct Layout {
    root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Layout { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }
    pub fn config(&self) -> PathBuf {
        self.root.join("config.toml")
    }
    pub fn split(&self, name: &str) -> PathBuf {
        self.root.join("data").join(format!("{name}.jsonl"))
    }
    pub fn test_match(&self) -> PathBuf {
        self.root.join("data").join("test_match.json")
    }
    pub fn lexicons(&self) -> PathBuf {
        self.root.join("lexicons")
    }
    pub fn names(&self, file: &str) -> PathBuf {
        self.root.join("names").join(file)
    }
    pub fn vocab(&self) -> PathBuf {
        self.root.join("vocab.txt")
    }
    pub fn suite_instances(&self) -> PathBuf {
        self.root.join("suite").join("instances.jsonl")
    }
    pub fn suite_manifest(&self) -> PathBuf {
        self.root.join("suite").join("manifest.json")
    }
    pub fn weights(&self, seed: u64, v: Variant) -> PathBuf {
        self.root.join("models").join(format!("weights_seed{seed}_{v}.bin"))
    }
    pub fn snapshot(&self, seed: u64, v: Variant, epoch: usize) -> PathBuf {
        self.root
            .join("models")
            .join("snapshots")
            .join(format!("weights_seed{seed}_{v}_epoch{epoch}.bin"))
    }
    pub fn train_log(&self, seed: u64, v: Variant) -> PathBuf {
        self.root.join("logs").join(format!("train_seed{seed}_{v}.json"))
    }
    pub fn failures(&self) -> PathBuf {
        self.root.join("logs").join("failures.json")
    }
    pub fn eval_records(&self, seed: u64, v: Variant) -> PathBuf {
        self.root.join("eval").join(format!("records_seed{seed}_{v}.jsonl"))
    }
    pub fn dev_predictions(&self, seed: u64, v: Variant) -> PathBuf {
        self.root.join("eval").join(format!("dev_seed{seed}_{v}.jsonl"))
    }
    pub fn report(&self) -> PathBuf {
        self.root.join("report")
    }
    pub fn report_without_outliers(&self) -> PathBuf {
        self.root.join("report_without_outliers")
    }
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir).map_err(|e| CliError::file(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::file(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::file(path, e))?;
    tmp.persist(path).map_err(|e| CliError::file(path, e.error))?;
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> CliResult<()> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::file(path, e))?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let bytes = fs::read(path).map_err(|e| CliError::file(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| CliError::file(path, e))
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> CliResult<()> {
    let mut bytes = Vec::new();
    for item in items {
        serde_json::to_writer(&mut bytes, item).map_err(|e| CliError::file(path, e))?;
        bytes.push(b'\n');
    }
    write_atomic(path, &bytes)
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> CliResult<Vec<T>> {
    Ok(seedstab::data::read_jsonl(path)?)
}

pub fn write_lines(path: &Path, lines: &[String]) -> CliResult<()> {
    let mut body = String::new();
    for l in lines {
        body.push_str(l);
        body.push('\n');
    }
    write_atomic(path, body.as_bytes())
}
