//! Run directory: exclusive lock, artifact I/O and the metadata file.

use std::collections::BTreeMap;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;

use crate::failure::{CliResult, Failure, EXIT_IO};

pub const LOCK_FILE: &str = ".rdagg.lock";
pub const METADATA_FILE: &str = "metadata.json";

pub struct RunDir {
    root: PathBuf,
    lock: PathBuf,
    written: Vec<String>,
}

impl RunDir {
    /// Creates the directory if needed and takes its lock.
    pub fn open(root: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(root).map_err(|e| Failure::io(root, e))?;
        let lock = root.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&lock) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                return Err(Failure::new(
                    EXIT_IO,
                    format!(
                        "run directory {} is locked by another command (remove {} if it is stale)",
                        root.display(),
                        lock.display()
                    ),
                ));
            }
            Err(e) => return Err(Failure::io(&lock, e)),
        }
        Ok(Self {
            root: root.to_path_buf(),
            lock,
            written: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> CliResult<()> {
        let path = self.path(name);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| Failure::io(dir, e))?;
        }
        std::fs::write(&path, bytes).map_err(|e| Failure::io(&path, e))?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let mut bytes =
            serde_json::to_vec_pretty(value).map_err(|e| Failure::new(1, e.to_string()))?;
        bytes.push(b'\n');
        self.write_bytes(name, &bytes)
    }

    /// Runs a writer into an in-memory buffer and stores the result.
    pub fn write_with(
        &mut self,
        name: &str,
        f: impl FnOnce(&mut Vec<u8>) -> rdagg::Result<()>,
    ) -> CliResult<()> {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.write_bytes(name, &buf)
    }

    pub fn note_written(&mut self, name: &str) {
        self.written.push(name.to_string());
    }

    pub fn require(&self, name: &str, hint: &str) -> CliResult<PathBuf> {
        let p = self.path(name);
        if p.exists() {
            Ok(p)
        } else {
            Err(Failure::new(
                EXIT_IO,
                format!("{} not found; run `{hint}` first", p.display()),
            ))
        }
    }

    /// Records the command, its outputs and a timestamp in the metadata file.
    /// Timestamps live only here so artifacts stay byte-identical across reruns.
    pub fn finish(&mut self, command: &str, params: Value) -> CliResult<()> {
        let path = self.path(METADATA_FILE);
        let mut meta: BTreeMap<String, Value> = std::fs::read(&path)
            .ok()
            .and_then(|b| serde_json::from_slice(&b).ok())
            .unwrap_or_default();
        let secs = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        meta.insert(
            command.to_string(),
            serde_json::json!({
                "finished_unix": secs,
                "version": env!("CARGO_PKG_VERSION"),
                "params": params,
                "outputs": self.written,
            }),
        );
        let bytes = serde_json::to_vec_pretty(&meta).map_err(|e| Failure::new(1, e.to_string()))?;
        std::fs::write(&path, bytes).map_err(|e| Failure::io(&path, e))
    }
}

impl Drop for RunDir {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.lock);
    }
}
