//! Output directory, artifact headers, and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Name accepted wherever a treebank path is expected, standing for the
/// bundled sample.
pub const SAMPLE: &str = "@sample";

#[derive(Serialize)]
struct FileDigest {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config: &'a serde_json::Value,
    config_hash: &'a str,
    seed: u64,
    inputs: &'a [FileDigest],
    artifacts: &'a [FileDigest],
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// One invocation: records inputs and artifacts, then writes
/// `manifest.json` on [`Run::finish`].
pub struct Run {
    out: PathBuf,
    command: String,
    config: serde_json::Value,
    hash: String,
    seed: u64,
    inputs: Vec<FileDigest>,
    artifacts: Vec<FileDigest>,
}

impl Run {
    pub fn new(out: &Path, command: &str, config: &impl Serialize, seed: u64) -> Result<Self> {
        let config = serde_json::to_value(config)?;
        let canonical = serde_json::to_string(&(command, &config, seed))?;
        let hash = sha256_hex(canonical.as_bytes())[..16].to_owned();
        fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
        Ok(Run {
            out: out.to_owned(),
            command: command.to_owned(),
            config,
            hash,
            seed,
            inputs: Vec::new(),
            artifacts: Vec::new(),
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Reads an input file and records its digest.
    pub fn read_input(&mut self, path: &Path) -> Result<Vec<u8>> {
        let bytes = if path.as_os_str() == SAMPLE {
            cpmi::SAMPLE_CONLLU.as_bytes().to_vec()
        } else {
            fs::read(path).with_context(|| format!("reading {}", path.display()))?
        };
        self.inputs.push(FileDigest {
            path: path.display().to_string(),
            sha256: sha256_hex(&bytes),
        });
        Ok(bytes)
    }

    pub fn read_input_text(&mut self, path: &Path) -> Result<String> {
        let bytes = self.read_input(path)?;
        String::from_utf8(bytes).with_context(|| format!("{} is not UTF-8", path.display()))
    }

    pub fn header(&self) -> String {
        format!("# cpmi config={} seed={}\n", self.hash, self.seed)
    }

    /// Writes a line-oriented artifact with the `#` header prepended.
    pub fn write_text(&mut self, name: &str, body: &str) -> Result<()> {
        let mut text = self.header();
        text.push_str(body);
        self.write_raw(name, text.as_bytes())
    }

    /// Writes a JSON artifact wrapping `body` with the config hash and seed.
    pub fn write_json(&mut self, name: &str, body: &impl Serialize) -> Result<()> {
        #[derive(Serialize)]
        struct Wrapped<'a, T> {
            config: &'a str,
            seed: u64,
            #[serde(flatten)]
            body: &'a T,
        }
        let w = Wrapped {
            config: &self.hash,
            seed: self.seed,
            body,
        };
        let mut text = serde_json::to_string_pretty(&w)?;
        text.push('\n');
        self.write_raw(name, text.as_bytes())
    }

    pub fn write_raw(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.out.join(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.artifacts.push(FileDigest {
            path: name.to_owned(),
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    pub fn finish(self) -> Result<()> {
        let m = Manifest {
            tool: "cpmi",
            version: env!("CARGO_PKG_VERSION"),
            command: &self.command,
            config: &self.config,
            config_hash: &self.hash,
            seed: self.seed,
            inputs: &self.inputs,
            artifacts: &self.artifacts,
        };
        let mut text = serde_json::to_string_pretty(&m)?;
        text.push('\n');
        let path = self.out.join("manifest.json");
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_depends_on_config_and_seed() {
        let dir = tempfile::tempdir().unwrap();
        let a = Run::new(dir.path(), "x", &("a", 1), 0).unwrap();
        let b = Run::new(dir.path(), "x", &("a", 1), 0).unwrap();
        let c = Run::new(dir.path(), "x", &("a", 2), 0).unwrap();
        let d = Run::new(dir.path(), "x", &("a", 1), 1).unwrap();
        assert_eq!(a.header(), b.header());
        assert_ne!(a.header(), c.header());
        assert_ne!(a.header(), d.header());
        assert_eq!(a.header(), format!("# cpmi config={} seed=0\n", a.hash));
        assert_eq!(a.hash.len(), 16);
    }
}
