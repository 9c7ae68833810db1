//! Run manifest: config snapshot, per-item status, and content hashes of
//! every data file, written alongside the outputs. Re-running the same
//! config + seed reproduces byte-identical data files (the manifest itself
//! carries the wall clock).

use serde::Serialize;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use crate::report::{write_atomic, OutputRecord};

#[derive(Debug, Clone, Serialize)]
pub struct ItemStatus {
    pub name: String,
    pub status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ItemStatus {
    pub fn ok(name: impl Into<String>) -> Self {
        Self { name: name.into(), status: "ok", error: None }
    }

    pub fn failed(name: impl Into<String>, error: impl Into<String>) -> Self {
        Self { name: name.into(), status: "error", error: Some(error.into()) }
    }
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub tool_version: &'static str,
    pub command: String,
    pub created_unix: u64,
    pub wall_clock_secs: f64,
    pub seed: u64,
    pub threads: usize,
    pub config: crate::config::RunConfig,
    pub items: Vec<ItemStatus>,
    pub outputs: Vec<OutputRecord>,
}

impl RunManifest {
    pub fn new(config: crate::config::RunConfig, seed: u64, threads: usize) -> Self {
        Self {
            tool: "mipt",
            tool_version: env!("CARGO_PKG_VERSION"),
            command: config.command.clone(),
            created_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            wall_clock_secs: 0.0,
            seed,
            threads,
            config,
            items: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn any_failed(&self) -> bool {
        self.items.iter().any(|i| i.status != "ok")
    }

    pub fn write(&self, dir: &Path) -> anyhow::Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        write_atomic(&dir.join("manifest.json"), json.as_bytes())?;
        Ok(())
    }
}
