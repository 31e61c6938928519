//! Run manifests: for every output file `X` a sibling `X.manifest` records
//! the command, resolved settings, input digests, seed, tool version, and
//! timestamp, which is enough to re-run the command exactly.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use sha2::{Digest, Sha256};

pub struct Manifest {
    command: &'static str,
    settings: Vec<(String, String)>,
    inputs: Vec<(PathBuf, String)>,
    seed: Option<u64>,
}

impl Manifest {
    pub fn new(command: &'static str) -> Self {
        Manifest { command, settings: Vec::new(), inputs: Vec::new(), seed: None }
    }

    pub fn setting(mut self, key: &str, value: impl ToString) -> Self {
        self.settings.push((key.to_string(), value.to_string()));
        self
    }

    pub fn input(mut self, path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)
            .with_context(|| format!("reading input {}", path.display()))?;
        let digest = Sha256::digest(&bytes);
        let mut hex = String::with_capacity(64);
        for b in digest {
            hex.push_str(&format!("{b:02x}"));
        }
        self.inputs.push((path.to_path_buf(), hex));
        Ok(self)
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    /// Writes `<output>.manifest` next to the output file.
    pub fn write_for(&self, output: &Path) -> Result<()> {
        let mut text = String::new();
        text.push_str(&format!("command = {}\n", self.command));
        text.push_str(&format!("version = {}\n", env!("CARGO_PKG_VERSION")));
        text.push_str(&format!("timestamp = {}\n", chrono::Utc::now().to_rfc3339()));
        if let Some(seed) = self.seed {
            text.push_str(&format!("master_seed = {seed}\n"));
        }
        for (key, value) in &self.settings {
            text.push_str(&format!("arg.{key} = {value}\n"));
        }
        for (path, digest) in &self.inputs {
            text.push_str(&format!("input = {} sha256={digest}\n", path.display()));
        }
        text.push_str(&format!("output = {}\n", output.display()));

        let manifest_path = manifest_path(output);
        etf_fingerprints::io::atomic_write(&manifest_path, &text)
            .with_context(|| format!("writing {}", manifest_path.display()))?;
        Ok(())
    }
}

pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().map_or_else(Default::default, |n| n.to_os_string());
    name.push(".manifest");
    output.with_file_name(name)
}
