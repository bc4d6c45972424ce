//! Run manifest and content hashes.

use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use torusflow::solver::DriftSummary;

use crate::config::ExperimentConfig;

/// SHA-256 of `"blob {len}\0" + content`, as git computes object ids.
pub fn blob_sha256(content: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", content.len()).as_bytes());
    h.update(content);
    hex::encode(h.finalize())
}

pub fn drift_json(d: &DriftSummary) -> Value {
    json!({
        "energy": d.energy,
        "enstrophy": d.enstrophy,
        "lp": d.lp.iter().map(|&(p, v)| json!({ "p": p, "drift": v })).collect::<Vec<_>>(),
        "flux": d.flux,
        "perp_ratio": d.perp_ratio,
    })
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub config_sha256: String,
    pub drift: Value,
    pub results: Value,
    /// Output file name to content hash.
    pub outputs: Vec<(String, String)>,
}

impl Manifest {
    pub fn new(command: &str, config: &ExperimentConfig, config_text: &str) -> Self {
        Self {
            tool: "torusflow",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            status: "ok".into(),
            error: None,
            seed: config.initial.seed,
            config: config.clone(),
            config_sha256: blob_sha256(config_text.as_bytes()),
            drift: Value::Null,
            results: json!({}),
            outputs: Vec::new(),
        }
    }

    pub fn fail(&mut self, status: &str, error: impl ToString) {
        self.status = status.into();
        self.error = Some(error.to_string());
    }

    /// Hashes every regular file under `dir` (except the manifest) and writes
    /// `manifest.json`.
    pub fn write(&mut self, dir: &Path) -> std::io::Result<()> {
        self.outputs.clear();
        let mut files = Vec::new();
        collect_files(dir, dir, &mut files)?;
        files.sort();
        for rel in files {
            if rel == "manifest.json" {
                continue;
            }
            let bytes = std::fs::read(dir.join(&rel))?;
            self.outputs.push((rel, blob_sha256(&bytes)));
        }
        let text = serde_json::to_string_pretty(self).map_err(std::io::Error::other)?;
        std::fs::write(dir.join("manifest.json"), text + "\n")
    }
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<String>) -> std::io::Result<()> {
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            collect_files(root, &path, out)?;
        } else {
            let rel = path.strip_prefix(root).expect("walked from root");
            out.push(rel.to_string_lossy().replace('\\', "/"));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_git_object_ids() {
        // `git hash-object --object-format=sha256` on empty input and on "hello\n".
        assert_eq!(
            blob_sha256(b""),
            "473a0f4c3be8a93681a267e3b1e9a7dcda1185436fe141f7749120a303721813"
        );
        assert_eq!(
            blob_sha256(b"hello\n"),
            "2cf8d83d9ee29543b34a87727421fdecb7e3f3a183d337639025de576db9ebb4"
        );
    }
}
