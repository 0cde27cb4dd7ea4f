//! Run manifests. Every data file a command emits is listed in exactly
//! one `manifest.json` beside it, recording the command, the full
//! parameter set, and the seed needed to reproduce the bytes.
//!
//! All data files are byte-deterministic for identical flags and seed;
//! the manifest itself carries the wall-clock duration and is the one
//! file excluded from that guarantee.

use std::path::Path;
use std::time::Instant;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(serde::Serialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub tool: Tool,
    pub command: &'static str,
    /// Resolved values of every flag, defaults included.
    pub parameters: serde_json::Value,
    /// Shot-noise seed, present only when sampling was requested.
    pub seed: Option<u64>,
    /// Emitted data files, relative to the manifest's directory.
    pub outputs: Vec<String>,
    pub duration_seconds: f64,
}

#[derive(serde::Serialize)]
pub struct Tool {
    pub name: &'static str,
    pub version: &'static str,
}

impl RunManifest {
    pub fn new(
        command: &'static str,
        parameters: serde_json::Value,
        seed: Option<u64>,
        outputs: Vec<String>,
        started: Instant,
    ) -> RunManifest {
        RunManifest {
            schema_version: SCHEMA_VERSION,
            tool: Tool {
                name: "qdmft",
                version: env!("CARGO_PKG_VERSION"),
            },
            command,
            parameters,
            seed,
            outputs,
            duration_seconds: started.elapsed().as_secs_f64(),
        }
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        let mut text =
            serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        std::fs::write(dir.join("manifest.json"), text)
    }
}
