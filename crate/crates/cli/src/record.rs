//! Run records written next to every file output.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliResult;
use crate::io::{json_bytes, sha256_hex, to_json, write_atomic, OutTarget};

pub const VERSION: &str = concat!("graham-seq ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputChecksum {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub command: String,
    pub params: BTreeMap<String, Value>,
    /// Decimal string, since seeds use all 64 bits.
    pub seed: Option<String>,
    pub git_like_version: String,
    pub started: String,
    pub finished: String,
    pub outputs: Vec<String>,
    pub output_sha256: Option<String>,
    pub inputs: Vec<InputChecksum>,
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

/// Collects what a command did while it runs.
#[derive(Debug)]
pub struct Recorder {
    command: String,
    params: BTreeMap<String, Value>,
    seed: Option<u64>,
    started: String,
    outputs: Vec<String>,
    inputs: Vec<InputChecksum>,
}

impl Recorder {
    pub fn start(command: &str) -> Self {
        Recorder {
            command: command.to_string(),
            params: BTreeMap::new(),
            seed: None,
            started: now(),
            outputs: Vec::new(),
            inputs: Vec::new(),
        }
    }

    pub fn param<T: Serialize>(&mut self, key: &str, value: T) {
        self.params.insert(key.to_string(), to_json(&value));
    }

    pub fn seed(&mut self, seed: u64) {
        self.seed = Some(seed);
    }

    pub fn input(&mut self, path: &Path, bytes: &[u8]) {
        self.inputs.push(InputChecksum {
            path: path.display().to_string(),
            sha256: sha256_hex(bytes),
        });
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    /// Writes the payload to `out` and, for file outputs, the run record
    /// beside it.
    pub fn finish(mut self, out: &OutTarget, payload: &[u8]) -> CliResult<()> {
        out.write(payload)?;
        let Some(record_path) = out.record_path() else {
            return Ok(());
        };
        if let OutTarget::File(path) = out {
            self.outputs.insert(0, path.display().to_string());
        }
        let record = RunRecord {
            command: self.command,
            params: self.params,
            seed: self.seed.map(|s| s.to_string()),
            git_like_version: VERSION.to_string(),
            started: self.started,
            finished: now(),
            outputs: self.outputs,
            output_sha256: Some(sha256_hex(payload)),
            inputs: self.inputs,
        };
        write_atomic(&record_path, &json_bytes(&to_json(&record)))
    }
}
