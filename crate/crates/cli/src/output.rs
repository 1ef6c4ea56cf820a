use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use qsearch_core::{Placement, RotationParams, Termination, TrialRecord};

use crate::spec::ExperimentSpec;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub spec: ExperimentSpec,
    pub started_at: String,
    pub finished_at: String,
    pub files: Vec<FileDigest>,
    pub summary: serde_json::Value,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Output directory that remembers what it wrote, for the manifest.
pub struct OutputDir {
    root: PathBuf,
    files: Vec<FileDigest>,
    started: DateTime<Utc>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
            started: Utc::now(),
        })
    }

    pub fn write(&mut self, name: &str, contents: &[u8]) -> Result<PathBuf> {
        let path = self.root.join(name);
        std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.files.retain(|f| f.path != name);
        self.files.push(FileDigest {
            path: name.to_string(),
            sha256: sha256_hex(contents),
            bytes: contents.len() as u64,
        });
        Ok(path)
    }

    pub fn finish(mut self, command: &str, spec: &ExperimentSpec, summary: serde_json::Value) -> Result<RunManifest> {
        let manifest = RunManifest {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            spec: spec.clone(),
            started_at: self.started.to_rfc3339_opts(SecondsFormat::Millis, true),
            finished_at: Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true),
            files: std::mem::take(&mut self.files),
            summary,
        };
        let text = serde_json::to_string_pretty(&manifest)? + "\n";
        let path = self.root.join("manifest.json");
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(manifest)
    }
}

/// One JSONL line per trial. Wall time is left out so reruns are
/// byte-identical; it goes to `timings.csv`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrialLine {
    pub size: usize,
    pub trial_index: u64,
    pub placements: Vec<Placement>,
    pub fidelity: f64,
    pub infidelity: f64,
    pub perfect: bool,
    pub near_miss: bool,
    pub iterations: u64,
    pub termination: Termination,
    pub restarts_used: u32,
    pub angles: RotationParams,
}

impl TrialLine {
    pub fn new(size: usize, t: &TrialRecord) -> Self {
        Self {
            size,
            trial_index: t.trial_index,
            placements: t.config.placements().to_vec(),
            fidelity: t.result.fidelity,
            infidelity: t.result.infidelity(),
            perfect: t.result.perfect,
            near_miss: t.result.near_miss,
            iterations: t.result.iterations,
            termination: t.result.termination,
            restarts_used: t.result.restarts_used,
            angles: t.result.params.clone(),
        }
    }
}

pub fn trials_jsonl(size: usize, trials: &[TrialRecord]) -> Result<String> {
    let mut out = String::new();
    for t in trials {
        out.push_str(&serde_json::to_string(&TrialLine::new(size, t))?);
        out.push('\n');
    }
    Ok(out)
}

pub fn timings_csv(size: usize, trials: &[TrialRecord]) -> String {
    let mut out = String::from("N,trial_index,wall_time_s\n");
    for t in trials {
        out.push_str(&format!("{},{},{:.6}\n", size, t.trial_index, t.wall_time));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_of_known_input() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
