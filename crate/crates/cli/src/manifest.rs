//! Artifact bookkeeping: every file a run writes is hashed into
//! `manifest.json` next to it.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::failure::{code, CliResult, Failure};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    /// Path relative to the output directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Versions {
    pub lasched: String,
    pub lasched_cli: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub name: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    /// Command line without the program name; `rerun` replays it.
    pub argv: Vec<String>,
    pub config: serde_json::Value,
    pub artifacts: Vec<Artifact>,
    pub versions: Versions,
    pub stages: Vec<Stage>,
}

impl RunManifest {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text =
            fs::read_to_string(path).map_err(|e| Failure::new(code::UNREADABLE, format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Failure::new(code::UNREADABLE, format!("{}: {e}", path.display())))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Output directory of one run.
pub struct Run {
    out: PathBuf,
    artifacts: Vec<Artifact>,
    stages: Vec<Stage>,
}

impl Run {
    pub fn create(out: &Path) -> CliResult<Self> {
        fs::create_dir_all(out).map_err(|e| io_failure(out, e))?;
        Ok(Self {
            out: out.to_path_buf(),
            artifacts: Vec::new(),
            stages: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> CliResult<()> {
        let path = self.out.join(name);
        fs::write(&path, contents).map_err(|e| io_failure(&path, e))?;
        self.artifacts.retain(|a| a.path != name);
        self.artifacts.push(Artifact {
            path: name.to_string(),
            sha256: sha256_hex(contents.as_bytes()),
            bytes: contents.len() as u64,
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(value).expect("artifacts serialize");
        text.push('\n');
        self.write(name, &text)
    }

    /// Runs `f` and records its wall-clock time.
    pub fn stage<T>(&mut self, name: &str, f: impl FnOnce(&mut Self) -> CliResult<T>) -> CliResult<T> {
        let start = Instant::now();
        let out = f(self)?;
        self.stages.push(Stage {
            name: name.to_string(),
            seconds: start.elapsed().as_secs_f64(),
        });
        Ok(out)
    }

    /// Writes the manifest after checking every artifact against its hash.
    pub fn finish(self, argv: Vec<String>, config: serde_json::Value) -> CliResult<RunManifest> {
        for a in &self.artifacts {
            let path = self.out.join(&a.path);
            let bytes = fs::read(&path).map_err(|e| io_failure(&path, e))?;
            if sha256_hex(&bytes) != a.sha256 {
                return Err(Failure::new(
                    code::IO,
                    format!("{} changed while the run was writing it", a.path),
                ));
            }
        }
        let manifest = RunManifest {
            argv,
            config,
            artifacts: self.artifacts,
            versions: Versions {
                lasched: lasched::VERSION.to_string(),
                lasched_cli: env!("CARGO_PKG_VERSION").to_string(),
            },
            stages: self.stages,
        };
        let path = self.out.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        fs::write(&path, text).map_err(|e| io_failure(&path, e))?;
        Ok(manifest)
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::new(code::IO, format!("{}: {e}", path.display()))
}
