//! Run manifest: records the ingested law spec, command, parameters, tool
//! version, seed, timestamps, and a SHA-256 digest of every output file,
//! so analytic runs reproduce bit-identically and Monte Carlo runs
//! statistically under the same seed.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use branchkit::LawSpec;
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Serialize)]
pub struct OutputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Serialize)]
pub struct RunManifest {
    pub law: LawSpec,
    pub command: String,
    pub parameters: Vec<String>,
    pub tool_version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub outputs: Vec<OutputDigest>,
}

fn now_unix() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

impl RunManifest {
    pub fn new(law: LawSpec, command: &str, parameters: Vec<String>, seed: Option<u64>) -> Self {
        Self {
            law,
            command: command.to_string(),
            parameters,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            started_unix: now_unix(),
            finished_unix: 0,
            outputs: Vec::new(),
        }
    }

    pub fn record_output(&mut self, path: &Path, content: &str) {
        let digest = Sha256::digest(content.as_bytes());
        self.outputs.push(OutputDigest {
            path: path.display().to_string(),
            sha256: format!("{digest:x}"),
        });
    }

    pub fn finish(mut self) -> Result<String, super::CliError> {
        self.finished_unix = now_unix();
        serde_json::to_string_pretty(&self)
            .map(|s| s + "\n")
            .map_err(|e| super::CliError::input(e.to_string()))
    }
}
