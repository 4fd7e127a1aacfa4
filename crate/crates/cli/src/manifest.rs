//! Run manifests and JSON documents.
//!
//! Each stage writes `<stage>.manifest.json` listing its config, seed and the
//! SHA-256 of every input and output file. File names are recorded relative
//! to the output directory so two runs in different directories produce
//! identical manifests.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const TOOL: &str = "tutorsim";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub stage: String,
    pub command: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    /// Seconds since the epoch from `SOURCE_DATE_EPOCH`; absent otherwise so
    /// that repeated runs stay byte-identical.
    pub created: Option<u64>,
}

/// A JSON output file: the manifest it belongs to plus its content.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document<T> {
    pub manifest: String,
    pub content: T,
}

pub fn manifest_name(stage: &str) -> String {
    format!("{stage}.manifest.json")
}

pub fn sha256_file(path: &Path) -> CliResult<String> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn digest(path: &Path) -> CliResult<FileDigest> {
    let file = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    Ok(FileDigest {
        file,
        sha256: sha256_file(path)?,
    })
}

fn created() -> Option<u64> {
    std::env::var("SOURCE_DATE_EPOCH").ok()?.trim().parse().ok()
}

impl RunManifest {
    pub fn new(stage: &str, command: String, seed: u64, config: impl Serialize) -> CliResult<Self> {
        Ok(Self {
            tool: TOOL.into(),
            version: VERSION.into(),
            stage: stage.into(),
            command,
            seed,
            config: serde_json::to_value(config).map_err(|e| CliError::Data(e.to_string()))?,
            inputs: Vec::new(),
            outputs: Vec::new(),
            created: created(),
        })
    }

    pub fn input(&mut self, path: &Path) -> CliResult<()> {
        self.inputs.push(digest(path)?);
        Ok(())
    }

    pub fn output(&mut self, path: &Path) -> CliResult<()> {
        self.outputs.push(digest(path)?);
        Ok(())
    }

    pub fn write(&self, out_dir: &Path) -> CliResult<()> {
        write_json(&out_dir.join(manifest_name(&self.stage)), self)
    }
}

pub fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| CliError::Data(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::schema(path, e.to_string()))
}

pub fn write_document<T: Serialize>(path: &Path, stage: &str, content: &T) -> CliResult<()> {
    write_json(
        path,
        &Document {
            manifest: manifest_name(stage),
            content,
        },
    )
}
