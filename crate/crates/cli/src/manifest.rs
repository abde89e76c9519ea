//! Artifact bookkeeping: content-hashed manifests and per-unit checkpoints.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const CHECKPOINT_DIR: &str = ".partial";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckOutcome {
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub schema_version: u32,
    pub tool: String,
    pub tool_version: String,
    pub command: String,
    pub seed: u64,
    pub config_hash: String,
    pub check: Option<CheckOutcome>,
    /// sorted by path
    pub files: Vec<FileEntry>,
}

impl Manifest {
    pub fn read(dir: &Path) -> Option<Self> {
        let text = fs::read_to_string(dir.join(MANIFEST_FILE)).ok()?;
        serde_json::from_str(&text).ok()
    }

    /// Whether every listed file exists with its recorded hash.
    pub fn files_intact(&self, dir: &Path) -> bool {
        self.files.iter().all(|f| {
            fs::read(dir.join(&f.path))
                .map(|bytes| bytes.len() as u64 == f.bytes && sha256_hex(&bytes) == f.sha256)
                .unwrap_or(false)
        })
    }

    /// A previous run in `dir` that produced exactly what this run would.
    pub fn reusable(dir: &Path, command: &str, config_hash: &str) -> Option<Self> {
        let m = Self::read(dir)?;
        let same = m.schema_version == SCHEMA_VERSION
            && m.tool_version == env!("CARGO_PKG_VERSION")
            && m.command == command
            && m.config_hash == config_hash;
        (same && m.files_intact(dir)).then_some(m)
    }
}

/// Writes artifacts into one directory and records their hashes.
#[derive(Debug)]
pub struct ArtifactWriter {
    dir: PathBuf,
    files: Vec<FileEntry>,
}

impl ArtifactWriter {
    pub fn new(dir: &Path) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> io::Result<()> {
        fs::write(self.dir.join(name), bytes)?;
        self.files.retain(|f| f.path != name);
        self.files.push(FileEntry {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> io::Result<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// Writes the manifest last, so a present manifest implies complete artifacts.
    pub fn finish(
        mut self,
        command: &str,
        seed: u64,
        config_hash: &str,
        check: Option<CheckOutcome>,
    ) -> io::Result<Manifest> {
        self.files.sort_by(|a, b| a.path.cmp(&b.path));
        let manifest = Manifest {
            schema_version: SCHEMA_VERSION,
            tool: env!("CARGO_PKG_NAME").to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            seed,
            config_hash: config_hash.to_string(),
            check,
            files: self.files,
        };
        let mut text = serde_json::to_string_pretty(&manifest).map_err(io::Error::other)?;
        text.push('\n');
        fs::write(self.dir.join(MANIFEST_FILE), text)?;
        Ok(manifest)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Checkpoint<T> {
    config_hash: String,
    unit: String,
    payload: T,
}

/// Completed work units of an interrupted run, keyed by config hash.
#[derive(Debug)]
pub struct Checkpoints {
    dir: PathBuf,
    config_hash: String,
}

impl Checkpoints {
    pub fn new(out: &Path, config_hash: &str) -> Self {
        Self {
            dir: out.join(CHECKPOINT_DIR),
            config_hash: config_hash.to_string(),
        }
    }

    fn path(&self, unit: &str) -> PathBuf {
        self.dir.join(format!("{unit}.json"))
    }

    pub fn load<T: DeserializeOwned>(&self, unit: &str) -> Option<T> {
        let text = fs::read_to_string(self.path(unit)).ok()?;
        let cp: Checkpoint<T> = serde_json::from_str(&text).ok()?;
        (cp.config_hash == self.config_hash && cp.unit == unit).then_some(cp.payload)
    }

    pub fn save<T: Serialize>(&self, unit: &str, payload: &T) -> io::Result<()> {
        fs::create_dir_all(&self.dir)?;
        let cp = Checkpoint {
            config_hash: self.config_hash.clone(),
            unit: unit.to_string(),
            payload,
        };
        let tmp = self.dir.join(format!("{unit}.json.tmp"));
        fs::write(&tmp, serde_json::to_vec(&cp).map_err(io::Error::other)?)?;
        fs::rename(tmp, self.path(unit))
    }

    /// Loads `unit` or computes and saves it.
    pub fn get_or_run<T, E, F>(&self, unit: &str, run: F) -> Result<T, E>
    where
        T: Serialize + DeserializeOwned,
        E: From<io::Error>,
        F: FnOnce() -> Result<T, E>,
    {
        if let Some(done) = self.load(unit) {
            return Ok(done);
        }
        let value = run()?;
        self.save(unit, &value)?;
        Ok(value)
    }

    pub fn clear(&self) -> io::Result<()> {
        match fs::remove_dir_all(&self.dir) {
            Err(e) if e.kind() != io::ErrorKind::NotFound => Err(e),
            _ => Ok(()),
        }
    }
}
