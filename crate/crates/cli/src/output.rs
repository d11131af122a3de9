//! Experiment directories: data files stamped with the config hash and seed,
//! plus a `manifest.json` written last.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

pub struct Experiment {
    pub dir: PathBuf,
    command: &'static str,
    config: Value,
    hash: String,
    seed: u64,
    files: Vec<(String, String)>,
}

impl Experiment {
    /// `config` must hold every input that influences the outputs. Its
    /// compact JSON form (keys sorted) is what gets hashed.
    pub fn create(command: &'static str, mut config: Value, seed: u64, out: Option<&Path>, root: &Path) -> Result<Self> {
        config["seed"] = seed.into();
        let hash = sha256_hex(config.to_string().as_bytes());
        let dir = match out {
            Some(dir) => dir.to_path_buf(),
            None => root.join(format!("{command}-{}", &hash[..12])),
        };
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Experiment { dir, command, config, hash, seed, files: Vec::new() })
    }

    fn stamp(&self) -> String {
        format!("mcpg {} {} config={} seed={}", mcpg_core::VERSION, self.command, self.hash, self.seed)
    }

    fn write(&mut self, name: &str, body: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
        self.files.push((name.to_string(), sha256_hex(body.as_bytes())));
        Ok(())
    }

    /// CSV and plain text get a leading `#` comment line.
    pub fn text(&mut self, name: &str, body: &str) -> Result<()> {
        let body = format!("# {}\n{body}", self.stamp());
        self.write(name, &body)
    }

    pub fn svg(&mut self, name: &str, body: &str) -> Result<()> {
        let body = format!("<!-- {} -->\n{body}", self.stamp());
        self.write(name, &body)
    }

    pub fn json(&mut self, name: &str, data: Value) -> Result<()> {
        let doc = json!({ "config_hash": self.hash, "seed": self.seed, "data": data });
        let body = serde_json::to_string_pretty(&doc)? + "\n";
        self.write(name, &body)
    }

    /// Writes the manifest and returns the experiment directory.
    pub fn finish(mut self, summary: Value) -> Result<PathBuf> {
        let files: Vec<Value> = self.files.iter().map(|(n, h)| json!({ "name": n, "sha256": h })).collect();
        let manifest = json!({
            "command": self.command,
            "config": self.config,
            "config_hash": self.hash,
            "seed": self.seed,
            "versions": { "mcpg-core": mcpg_core::VERSION, "mcpg-cli": env!("CARGO_PKG_VERSION") },
            "files": files,
            "summary": summary,
        });
        let body = serde_json::to_string_pretty(&manifest)? + "\n";
        self.write("manifest.json", &body)?;
        Ok(self.dir)
    }
}
