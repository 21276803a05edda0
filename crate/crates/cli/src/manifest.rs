use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const MANIFEST: &str = "manifest.json";

/// Everything needed to repeat a run. Wall times live here rather than in
/// the CSV outputs so that those stay byte-reproducible.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub library_version: String,
    pub seed: Option<u64>,
    /// Resolved settings, defaults filled in and input paths absolute.
    pub settings: serde_json::Value,
    pub wall_time_s: f64,
    #[serde(default)]
    pub iteration_seconds: Vec<f64>,
    /// Output files, relative to the manifest's directory.
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn write(&self, dir: &Path) -> CliResult<()> {
        fs::write(dir.join(MANIFEST), serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
    }
}
