//! Run manifests: enough to replay a command and get the same bytes back.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Versions {
    pub relicomp: String,
    pub relicomp_cli: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    /// The full argument vector after the program name.
    pub arguments: Vec<String>,
    pub seed: Option<u64>,
    pub rng: Option<String>,
    pub versions: Versions,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(subcommand: &str, arguments: Vec<String>) -> Self {
        Self {
            subcommand: subcommand.to_string(),
            arguments,
            seed: None,
            rng: None,
            versions: Versions {
                relicomp: relicomp::VERSION.to_string(),
                relicomp_cli: env!("CARGO_PKG_VERSION").to_string(),
            },
            outputs: Vec::new(),
        }
    }

    pub fn with_rng(mut self, seed: u64, rng: &str) -> Self {
        self.seed = Some(seed);
        self.rng = Some(rng.to_string());
        self
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("{} is not a run manifest: {e}", path.display())))
    }

    /// Written next to the first output as `<output>.manifest.json`, to
    /// `explicit` when given, and to stderr when there is nowhere else.
    pub fn emit(&self, explicit: Option<&Path>) -> CliResult<()> {
        let target: Option<PathBuf> = explicit
            .map(Path::to_path_buf)
            .or_else(|| self.outputs.first().map(|o| PathBuf::from(format!("{o}.manifest.json"))));
        match target {
            Some(p) => std::fs::write(&p, self.to_json()).map_err(|e| CliError::io(&p, e)),
            None => {
                eprint!("{}", self.to_json());
                Ok(())
            }
        }
    }
}
