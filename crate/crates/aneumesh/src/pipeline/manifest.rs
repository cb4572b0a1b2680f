//! Run manifest: config snapshot, stage timings, and output digests.

use super::config::PipelineConfig;
use crate::error::MeshError;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FileDigest {
    /// Path relative to the output directory.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: PipelineConfig,
    /// Applied pressure after unit mapping, when the command solves.
    pub applied_pressure_kpa: Option<f64>,
    /// (stage name, wall-clock seconds) in execution order.
    pub timings_s: Vec<(String, f64)>,
    pub files: Vec<FileDigest>,
}

impl RunManifest {
    pub fn new(command: &str, config: &PipelineConfig) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config: config.clone(),
            applied_pressure_kpa: None,
            timings_s: Vec::new(),
            files: Vec::new(),
        }
    }

    /// Time a stage and record it.
    pub fn stage<T, E>(
        &mut self,
        name: &str,
        f: impl FnOnce() -> Result<T, E>,
    ) -> Result<T, E> {
        let t0 = Instant::now();
        let out = f()?;
        self.timings_s
            .push((name.to_string(), t0.elapsed().as_secs_f64()));
        Ok(out)
    }

    /// Digest an emitted file and record it (path stored relative to
    /// `out_dir`).
    pub fn record_file(&mut self, out_dir: &Path, path: &Path) -> Result<(), MeshError> {
        let data = std::fs::read(path)?;
        let rel = path
            .strip_prefix(out_dir)
            .unwrap_or(path)
            .to_string_lossy()
            .into_owned();
        self.files.push(FileDigest {
            path: rel,
            bytes: data.len() as u64,
            sha256: hex(&Sha256::digest(&data)),
        });
        Ok(())
    }

    /// Write the manifest itself (not listed in `files`).
    pub fn write(&self, out_dir: &Path) -> Result<PathBuf, MeshError> {
        let path = out_dir.join("manifest.json");
        crate::io::write_json(&path, self)?;
        Ok(path)
    }

    /// Re-hash every recorded file; returns the relative paths whose
    /// digests no longer match (drift detection).
    pub fn check_digests(&self, out_dir: &Path) -> Vec<String> {
        let mut drifted = Vec::new();
        for f in &self.files {
            let ok = std::fs::read(out_dir.join(&f.path))
                .map(|data| hex(&Sha256::digest(&data)) == f.sha256)
                .unwrap_or(false);
            if !ok {
                drifted.push(f.path.clone());
            }
        }
        drifted
    }
}

pub fn sha256_file(path: &Path) -> Result<String, MeshError> {
    let data = std::fs::read(path)?;
    Ok(hex(&Sha256::digest(&data)))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_and_drift_detection() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("a.txt");
        std::fs::write(&file, "hello").unwrap();
        let mut m = RunManifest::new("mesh", &PipelineConfig::default());
        m.record_file(dir.path(), &file).unwrap();
        assert_eq!(m.files[0].path, "a.txt");
        assert_eq!(
            m.files[0].sha256,
            "2cf24dba5fb0a30e26e83b2ac5b9e29e1b161e5c1fa7425e73043362938b9824"
        );
        assert!(m.check_digests(dir.path()).is_empty());
        std::fs::write(&file, "tampered").unwrap();
        assert_eq!(m.check_digests(dir.path()), vec!["a.txt".to_string()]);
    }

    #[test]
    fn stage_records_timing_in_order() {
        let mut m = RunManifest::new("solve", &PipelineConfig::default());
        m.stage::<_, std::convert::Infallible>("first", || Ok(1)).unwrap();
        m.stage::<_, std::convert::Infallible>("second", || Ok(2)).unwrap();
        let names: Vec<&str> = m.timings_s.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(names, vec!["first", "second"]);
        assert!(m.timings_s.iter().all(|&(_, t)| t >= 0.0));
    }

    #[test]
    fn manifest_json_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let m = RunManifest::new("mesh", &PipelineConfig::default());
        let path = m.write(dir.path()).unwrap();
        let text = std::fs::read_to_string(path).unwrap();
        let back: RunManifest = serde_json::from_str(&text).unwrap();
        assert_eq!(back.command, "mesh");
        assert_eq!(back.version, env!("CARGO_PKG_VERSION"));
    }
}
