use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Provenance record written next to every command's outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: String,
    pub args: serde_json::Value,
    /// Input path -> sha256 of its bytes.
    pub inputs: BTreeMap<String, String>,
    pub seeds: Vec<u64>,
    pub outputs: Vec<String>,
    pub exit_code: i32,
    pub wall_time_s: f64,
}

/// Collects inputs and outputs of one run.
#[derive(Debug)]
pub struct Run {
    pub out: PathBuf,
    pub inputs: BTreeMap<String, String>,
    pub seeds: Vec<u64>,
    pub outputs: Vec<String>,
}

impl Run {
    pub fn new(out: &Path) -> Result<Self> {
        fs::create_dir_all(out).with_context(|| format!("cannot create output directory {}", out.display()))?;
        Ok(Run { out: out.to_path_buf(), inputs: BTreeMap::new(), seeds: Vec::new(), outputs: Vec::new() })
    }

    /// Reads an input file as UTF-8 and records its digest.
    pub fn read(&mut self, path: &Path) -> Result<String> {
        let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
        self.inputs.insert(path.display().to_string(), format!("{:x}", Sha256::digest(&bytes)));
        String::from_utf8(bytes).with_context(|| format!("{} is not UTF-8", path.display()))
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.out.join(name);
        fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, &text)
    }

    pub fn finish(mut self, subcommand: &str, args: serde_json::Value, exit_code: i32, wall_time_s: f64) -> Result<()> {
        let manifest = RunManifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            subcommand: subcommand.to_string(),
            args,
            inputs: std::mem::take(&mut self.inputs),
            seeds: std::mem::take(&mut self.seeds),
            outputs: std::mem::take(&mut self.outputs),
            exit_code,
            wall_time_s,
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        let path = self.out.join("manifest.json");
        fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))
    }
}
