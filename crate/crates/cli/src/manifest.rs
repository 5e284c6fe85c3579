use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use cll_core::data::ExperimentConfig;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// Provenance of one subcommand invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub command: String,
    pub toolkit_version: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub options: Vec<(String, String)>,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<String>,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let mut f = std::fs::File::open(path).map_err(|e| cll_core::Error::io(path, e))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf).map_err(|e| cll_core::Error::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex(&hasher.finalize()))
}

impl RunManifest {
    /// Digests every input up front; the run id hashes command, config,
    /// options and input digests.
    pub fn begin(
        command: &str,
        config: &ExperimentConfig,
        options: Vec<(String, String)>,
        inputs: &[PathBuf],
    ) -> Result<Self, CliError> {
        let inputs = inputs
            .iter()
            .map(|p| {
                Ok(InputDigest {
                    path: p.display().to_string(),
                    sha256: sha256_file(p)?,
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        let mut hasher = Sha256::new();
        hasher.update(command.as_bytes());
        hasher.update(config.to_toml_string().as_bytes());
        for (k, v) in &options {
            hasher.update(format!("{k}={v}\n").as_bytes());
        }
        for d in &inputs {
            hasher.update(d.sha256.as_bytes());
        }
        Ok(Self {
            run_id: hex(&hasher.finalize()[..8]),
            command: command.to_string(),
            toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: config.seed,
            config: config.clone(),
            options,
            inputs,
            outputs: Vec::new(),
        })
    }

    /// Writes `<command>.manifest.json` into `dir` via a temporary file and rename.
    pub fn commit(&self, dir: &Path) -> Result<PathBuf, CliError> {
        let path = dir.join(format!("{}.manifest.json", self.command));
        let tmp = dir.join(format!(".{}.manifest.json.tmp", self.command));
        let mut text = serde_json::to_string_pretty(self).map_err(|e| CliError::Data(e.to_string()))?;
        text.push('\n');
        std::fs::write(&tmp, text).map_err(|e| cll_core::Error::io(&tmp, e))?;
        std::fs::rename(&tmp, &path).map_err(|e| cll_core::Error::io(&path, e))?;
        Ok(path)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| cll_core::Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
    }
}
