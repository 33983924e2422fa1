//! Artifact writing: CSV tables and a JSON manifest, staged in a temporary directory
//! and moved into place only when the whole command succeeds.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::harness::cache::digest;

/// Formats a float with the shortest representation that round-trips.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}

#[derive(Clone, Debug, Serialize)]
struct ArtifactRecord {
    file: String,
    sha256: String,
    config_hash: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config_hash: &'a str,
    inputs_hash: &'a str,
    threads: usize,
    artifacts: &'a [ArtifactRecord],
    timings_s: &'a BTreeMap<String, f64>,
}

/// Collects the artifacts of one command.
pub struct Artifacts {
    out: PathBuf,
    staging: tempfile::TempDir,
    records: Vec<ArtifactRecord>,
    timings: BTreeMap<String, f64>,
    config_hash: String,
    inputs: Vec<String>,
}

impl Artifacts {
    pub fn new(out: &Path, config_hash: &str) -> Result<Self> {
        fs::create_dir_all(out)?;
        let staging = tempfile::Builder::new().prefix(".partial-").tempdir_in(out)?;
        Ok(Self {
            out: out.to_path_buf(),
            staging,
            records: Vec::new(),
            timings: BTreeMap::new(),
            config_hash: config_hash.to_string(),
            inputs: vec![config_hash.to_string()],
        })
    }

    /// Adds a hash of an input (e.g. a mesh) to the manifest's input hash.
    pub fn add_input(&mut self, hash: String) {
        self.inputs.push(hash);
    }

    /// Runs `f`, recording its wall time under `stage`.
    pub fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let value = f()?;
        *self.timings.entry(stage.to_string()).or_default() += start.elapsed().as_secs_f64();
        Ok(value)
    }

    /// Writes an RFC 4180 CSV with LF line endings.
    pub fn csv<I>(&mut self, name: &str, header: &[&str], rows: I) -> Result<()>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e.to_string()));
        w.write_record(header).map_err(csv_err)?;
        for row in rows {
            if row.len() != header.len() {
                return Err(Error::Internal(format!("{name}: row of {} fields under {} columns", row.len(), header.len())));
            }
            w.write_record(&row).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
        self.bytes(name, &bytes)
    }

    pub fn bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        fs::write(self.staging.path().join(name), bytes)?;
        self.records.push(ArtifactRecord {
            file: name.to_string(),
            sha256: digest(&[bytes]),
            config_hash: self.config_hash.clone(),
        });
        Ok(())
    }

    /// Moves every artifact into the output directory and writes `manifest.json`.
    pub fn commit(self, command: &str, threads: usize) -> Result<PathBuf> {
        let inputs: Vec<&[u8]> = self.inputs.iter().map(|s| s.as_bytes()).collect();
        let inputs_hash = digest(&inputs);
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            config_hash: &self.config_hash,
            inputs_hash: &inputs_hash,
            threads,
            artifacts: &self.records,
            timings_s: &self.timings,
        };
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Internal(e.to_string()))?;
        fs::write(self.staging.path().join("manifest.json"), text + "\n")?;
        for rec in &self.records {
            fs::rename(self.staging.path().join(&rec.file), self.out.join(&rec.file))?;
        }
        fs::rename(self.staging.path().join("manifest.json"), self.out.join("manifest.json"))?;
        Ok(self.out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_uses_lf_and_quotes_when_needed() {
        let dir = tempfile::tempdir().unwrap();
        let mut a = Artifacts::new(dir.path(), "h").unwrap();
        a.csv("t.csv", &["a", "b"], vec![vec!["1".into(), "x,y".into()]]).unwrap();
        a.commit("test", 1).unwrap();
        let text = fs::read_to_string(dir.path().join("t.csv")).unwrap();
        assert_eq!(text, "a,b\n1,\"x,y\"\n");
        let manifest: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
        assert_eq!(manifest["artifacts"][0]["config_hash"], "h");
    }

    #[test]
    fn dropped_artifacts_leave_nothing_behind() {
        let dir = tempfile::tempdir().unwrap();
        {
            let mut a = Artifacts::new(dir.path(), "h").unwrap();
            a.csv("t.csv", &["a"], vec![vec!["1".into()]]).unwrap();
        }
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
    }

    #[test]
    fn number_format_round_trips() {
        for x in [0.1, 1e-300, -2.5, 123456.789, 0.0] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(0.5), "5e-1");
    }
}
