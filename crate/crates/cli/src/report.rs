use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Serialize, Serializer};
use serde_json::Value;
use sha2::{Digest, Sha256};

/// Envelope written for every command. Nothing in it depends on wall-clock
/// time or thread count, so equal configs give byte-identical reports.
#[derive(Debug, Serialize)]
pub struct Report<R: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config: Value,
    /// SHA-256 over the config JSON followed by the bytes of every input file.
    pub input_hash: String,
    pub result: R,
}

impl<R: Serialize> Report<R> {
    pub fn new(
        command: &'static str,
        config: Value,
        inputs: &[Vec<u8>],
        result: R,
    ) -> Result<Self> {
        let mut hasher = Sha256::new();
        hasher.update(serde_json::to_vec(&config)?);
        for bytes in inputs {
            hasher.update(bytes);
        }
        Ok(Self {
            tool: "rwre",
            version: env!("CARGO_PKG_VERSION"),
            command,
            config,
            input_hash: hex::encode(hasher.finalize()),
            result,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

/// Output directory, created on first write.
pub struct OutDir(Option<PathBuf>);

impl OutDir {
    pub fn new(path: Option<PathBuf>) -> Self {
        Self(path)
    }

    fn path(&self, name: &str) -> Result<Option<PathBuf>> {
        let Some(dir) = &self.0 else { return Ok(None) };
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Some(dir.join(name)))
    }

    pub fn write(&self, name: &str, contents: &[u8]) -> Result<()> {
        if let Some(path) = self.path(name)? {
            fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        }
        Ok(())
    }

    /// Runs `f` on a buffer and writes it out; skipped without an output dir.
    pub fn write_with<F>(&self, name: &str, f: F) -> Result<()>
    where
        F: FnOnce(&mut Vec<u8>) -> Result<()>,
    {
        if self.0.is_none() {
            return Ok(());
        }
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.write(name, &buf)
    }
}

pub fn read_json(path: &Path) -> Result<Value> {
    let text = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_slice(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Infinite resistances are written as the string `"inf"`.
pub fn resistance<S: Serializer>(r: &f64, s: S) -> Result<S::Ok, S::Error> {
    if r.is_infinite() {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*r)
    }
}

pub fn format_resistance(r: f64) -> String {
    if r.is_infinite() {
        "inf".into()
    } else {
        r.to_string()
    }
}
