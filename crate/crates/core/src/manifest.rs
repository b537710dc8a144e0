//! Run manifests and atomic output files.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Result, WsiError};

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_bytes(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

pub fn file_digest(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    let mut file = File::open(path).map_err(|e| WsiError::io(path, e))?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 1 << 16];
    loop {
        let n = file.read(&mut buf).map_err(|e| WsiError::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex(&hasher.finalize()))
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| WsiError::io(&dir, e))?;
    tmp.write_all(bytes).map_err(|e| WsiError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| WsiError::io(path, e))?;
    tmp.persist(path).map_err(|e| WsiError::io(path, e.error))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub config_sha256: String,
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub wall_time_secs: f64,
    #[serde(skip)]
    started: Option<Instant>,
}

impl RunManifest {
    pub fn start(command: impl Into<String>, config: serde_json::Value, seeds: Vec<u64>) -> Self {
        let config_sha256 = sha256_bytes(config.to_string().as_bytes());
        RunManifest {
            command: command.into(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_sha256,
            config,
            seeds,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            wall_time_secs: 0.0,
            started: Some(Instant::now()),
        }
    }

    pub fn input(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        self.inputs.insert(path.display().to_string(), file_digest(path)?);
        Ok(())
    }

    pub fn output(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        self.outputs.insert(path.display().to_string(), file_digest(path)?);
        Ok(())
    }

    /// Stamps the elapsed time and writes the manifest atomically.
    pub fn finish(mut self, path: impl AsRef<Path>) -> Result<()> {
        if let Some(t) = self.started {
            self.wall_time_secs = t.elapsed().as_secs_f64();
        }
        let text = serde_json::to_string_pretty(&self)?;
        write_atomic(path, format!("{text}\n").as_bytes())
    }
}

/// `out.jsonl` → `out.jsonl.manifest.json`.
pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    output.with_file_name(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_of_known_bytes() {
        assert_eq!(
            sha256_bytes(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn atomic_write_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out.txt");
        write_atomic(&out, b"abc").unwrap();
        assert_eq!(file_digest(&out).unwrap(), sha256_bytes(b"abc"));
        let mut m = RunManifest::start("test", serde_json::json!({"k": 1}), vec![7]);
        m.output(&out).unwrap();
        let mpath = manifest_path(&out);
        m.finish(&mpath).unwrap();
        let back: RunManifest = serde_json::from_str(&std::fs::read_to_string(&mpath).unwrap()).unwrap();
        assert_eq!(back.seeds, vec![7]);
        assert_eq!(back.outputs.values().next().unwrap(), &sha256_bytes(b"abc"));
        assert!(mpath.ends_with("out.txt.manifest.json"));
    }
}
