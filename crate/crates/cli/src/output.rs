//! Output directories. Every artifact is written atomically; the manifest
//! is written first with status `running` and rewritten last, so an
//! interrupted run is always flagged.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use selfrepel_core::record::atomic_write;

use crate::error::CliResult;

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Running,
    Complete,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub path: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicaSeed {
    pub replica: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub tool_version: String,
    pub command: String,
    pub status: Status,
    /// The resolved configuration; `run --config` on it replays the run.
    pub config: String,
    pub seeds: Vec<ReplicaSeed>,
    pub artifacts: Vec<Artifact>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub struct Output {
    root: PathBuf,
    manifest: Manifest,
}

impl Output {
    pub fn create(root: &Path, command: &str, config_toml: String) -> CliResult<Self> {
        std::fs::create_dir_all(root)?;
        let mut out = Output {
            root: root.to_path_buf(),
            manifest: Manifest {
                schema_version: crate::config::CONFIG_SCHEMA,
                tool_version: env!("CARGO_PKG_VERSION").into(),
                command: command.into(),
                status: Status::Running,
                config: config_toml.clone(),
                seeds: Vec::new(),
                artifacts: Vec::new(),
                error: None,
            },
        };
        out.write_manifest()?;
        out.write("config.toml", config_toml.as_bytes())?;
        Ok(out)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn record_seed(&mut self, replica: u64, seed: u64) {
        self.manifest.seeds.push(ReplicaSeed { replica, seed });
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> CliResult<()> {
        let path = self.root.join(rel);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        atomic_write(&path, bytes)?;
        self.add_artifact(rel, bytes.len() as u64);
        Ok(())
    }

    /// Registers a file written by a core routine (which writes atomically).
    pub fn register(&mut self, rel: &str) -> CliResult<()> {
        let bytes = std::fs::metadata(self.root.join(rel))?.len();
        self.add_artifact(rel, bytes);
        Ok(())
    }

    fn add_artifact(&mut self, rel: &str, bytes: u64) {
        self.manifest.artifacts.retain(|a| a.path != rel);
        self.manifest.artifacts.push(Artifact {
            path: rel.into(),
            bytes,
        });
    }

    fn write_manifest(&mut self) -> CliResult<()> {
        self.manifest.artifacts.sort_by(|a, b| a.path.cmp(&b.path));
        self.manifest.seeds.sort_by_key(|s| s.replica);
        let text = serde_json::to_string_pretty(&self.manifest)?;
        atomic_write(&self.root.join(MANIFEST), text.as_bytes())?;
        Ok(())
    }

    pub fn finish(mut self) -> CliResult<PathBuf> {
        self.manifest.status = Status::Complete;
        self.write_manifest()?;
        Ok(self.root.join(MANIFEST))
    }

    pub fn fail(mut self, message: String) {
        self.manifest.status = Status::Failed;
        self.manifest.error = Some(message);
        let _ = self.write_manifest();
    }
}
