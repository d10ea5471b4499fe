//! Run-stamped output directories.
//!
//! A run directory is named `<command>-<fingerprint>` where the fingerprint
//! is a SHA-256 of the command, the effective config and a digest of the
//! corpus files it read. The output parent is left out, so the same job
//! written to two places carries the same fingerprint.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

/// Length of the fingerprint prefix used in directory names.
pub const SHORT: usize = 12;

#[derive(Debug, Clone, Serialize)]
pub struct RunRecord<'a> {
    pub command: &'a str,
    /// SHA-256 over the sorted corpus file names and contents, if one was read.
    pub corpus_digest: Option<String>,
    pub config: &'a RunConfig,
}

pub struct RunDir {
    pub path: PathBuf,
    pub fingerprint: String,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::with_capacity(2 * bytes.len()), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

pub fn fingerprint(record: &RunRecord<'_>) -> String {
    let bytes = serde_json::to_vec(record).expect("run record serializes");
    hex(&Sha256::digest(&bytes))
}

/// Digest of every `.csv` file directly under `dir`, in name order.
pub fn corpus_digest(dir: &Path) -> Result<String> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("csv")))
        .collect();
    paths.sort();
    let mut h = Sha256::new();
    for p in paths {
        h.update(p.file_name().unwrap_or_default().as_encoded_bytes());
        h.update([0]);
        h.update(fs::read(&p).with_context(|| format!("reading {}", p.display()))?);
        h.update([0]);
    }
    Ok(hex(&h.finalize()))
}

impl RunDir {
    /// Creates (or reopens) the run directory and echoes the config into it.
    pub fn create(record: &RunRecord<'_>) -> Result<Self> {
        let fingerprint = fingerprint(record);
        let path = record
            .config
            .out
            .join(format!("{}-{}", record.command, &fingerprint[..SHORT]));
        fs::create_dir_all(&path).with_context(|| format!("creating {}", path.display()))?;
        let dir = Self { path, fingerprint };
        dir.write_json("run.json", record)?;
        dir.write_text(
            "config.toml",
            &format!("# fingerprint {}\n{}", dir.fingerprint, record.config.to_toml()),
        )?;
        log::info!("writing to {}", dir.path.display());
        Ok(dir)
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.path.join(name)
    }

    pub fn write_text(&self, name: &str, text: &str) -> Result<()> {
        let p = self.file(name);
        fs::write(&p, text).with_context(|| format!("writing {}", p.display()))
    }

    /// Pretty JSON wrapped with the fingerprint.
    pub fn write_json<T: Serialize + ?Sized>(&self, name: &str, value: &T) -> Result<()> {
        #[derive(Serialize)]
        struct Stamped<'a, T: ?Sized> {
            fingerprint: &'a str,
            data: &'a T,
        }
        let stamped = Stamped {
            fingerprint: &self.fingerprint,
            data: value,
        };
        let mut text = serde_json::to_string_pretty(&stamped)?;
        text.push('\n');
        self.write_text(name, &text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fingerprint_ignores_the_output_parent() {
        let a = RunConfig::default();
        let b = RunConfig {
            out: PathBuf::from("elsewhere"),
            ..RunConfig::default()
        };
        let rec = |c| RunRecord {
            command: "evaluate",
            corpus_digest: None,
            config: c,
        };
        assert_eq!(fingerprint(&rec(&a)), fingerprint(&rec(&b)));
        let c = RunConfig {
            seed: 1,
            ..RunConfig::default()
        };
        assert_ne!(fingerprint(&rec(&a)), fingerprint(&rec(&c)));
        assert_eq!(fingerprint(&rec(&a)).len(), 64);
    }

    #[test]
    fn corpus_digest_tracks_contents() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("A.csv"), "x").unwrap();
        let d1 = corpus_digest(dir.path()).unwrap();
        fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
        assert_eq!(corpus_digest(dir.path()).unwrap(), d1);
        fs::write(dir.path().join("A.csv"), "y").unwrap();
        assert_ne!(corpus_digest(dir.path()).unwrap(), d1);
    }

    #[test]
    fn run_dir_echoes_config() {
        let tmp = tempfile::tempdir().unwrap();
        let config = RunConfig {
            out: tmp.path().to_path_buf(),
            ..RunConfig::default()
        };
        let rec = RunRecord {
            command: "label",
            corpus_digest: None,
            config: &config,
        };
        let dir = RunDir::create(&rec).unwrap();
        assert!(dir.path.file_name().unwrap().to_str().unwrap().starts_with("label-"));
        let toml_text = fs::read_to_string(dir.file("config.toml")).unwrap();
        assert!(toml_text.starts_with(&format!("# fingerprint {}", dir.fingerprint)));
        assert_eq!(RunConfig::from_toml(&toml_text).unwrap().seed, config.seed);
        let json: serde_json::Value = serde_json::from_slice(&fs::read(dir.file("run.json")).unwrap()).unwrap();
        assert_eq!(json["fingerprint"], dir.fingerprint.as_str());
        assert_eq!(json["data"]["command"], "label");
    }
}
