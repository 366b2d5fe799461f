//! Output directory with a content-hash manifest.

use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub struct OutputDir {
    root: PathBuf,
    files: Vec<String>,
    warnings: Vec<String>,
}

#[derive(Serialize)]
struct ManifestEntry {
    path: String,
    sha256: String,
    bytes: usize,
}

#[derive(Serialize)]
struct Manifest<'a> {
    experiment: &'a str,
    config: &'a str,
    files: Vec<ManifestEntry>,
    warnings: &'a [String],
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
            warnings: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        let msg = msg.into();
        eprintln!("warning: {msg}");
        self.warnings.push(msg);
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        std::fs::write(self.root.join(name), bytes)?;
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
        Ok(())
    }

    /// Serializes `rows` with a header row, comma separators and LF endings.
    pub fn write_csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<(), CliError> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        for row in rows {
            w.serialize(row)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        self.write_bytes(name, &bytes)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write_bytes(name, &bytes)
    }

    /// Writes `manifest.json` listing every file written so far with its hash.
    pub fn finish(mut self, experiment: &str, config_toml: &str) -> Result<PathBuf, CliError> {
        let mut files = Vec::with_capacity(self.files.len());
        for name in &self.files {
            let bytes = std::fs::read(self.root.join(name))?;
            files.push(ManifestEntry {
                path: name.clone(),
                sha256: hex::encode(Sha256::digest(&bytes)),
                bytes: bytes.len(),
            });
        }
        let manifest = Manifest {
            experiment,
            config: config_toml,
            files,
            warnings: &self.warnings,
        };
        let mut bytes = serde_json::to_vec_pretty(&manifest)?;
        bytes.push(b'\n');
        std::fs::write(self.root.join("manifest.json"), bytes)?;
        self.files.clear();
        Ok(self.root.join("manifest.json"))
    }
}
