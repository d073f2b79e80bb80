//! Artifact files, input readers and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::embedding::EmbeddedIsing;
use crate::error::{Error, Result};
use crate::fixtures;
use crate::ising::IsingModel;
use crate::poly::MultilinearPolynomial;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "FOLDQ_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "foldq-out";

pub fn default_out_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn file_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::File {
        path: path.to_path_buf(),
        source,
    }
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(file_err(path))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    let written = match path.parent().filter(|d| !d.as_os_str().is_empty()) {
        Some(dir) => fs::create_dir_all(dir).and_then(|_| fs::write(path, bytes)),
        None => fs::write(path, bytes),
    };
    written.map_err(|e| Error::Io(e).in_stage("write", path.display().to_string()))
}

pub fn to_json_bytes<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| {
        Error::validation(format!("{}: {e}", path.display()))
    })
}

/// `fixture:NAME` refers to a bundled fixture, anything else is a path.
pub fn fixture_name(spec: &str) -> Option<&str> {
    spec.strip_prefix("fixture:")
}

/// Polynomial from a JSON interchange file, a text file (`-q2 + 2q1q2 ...`) or a
/// `fixture:NAME` reference.
pub fn load_polynomial(spec: &str) -> Result<MultilinearPolynomial> {
    if let Some(name) = fixture_name(spec) {
        return fixtures::polynomial(name);
    }
    let path = Path::new(spec);
    let text = read_text(path)?;
    if text.trim_start().starts_with('{') {
        serde_json::from_str(&text).map_err(|e| Error::validation(format!("{spec}: {e}")))
    } else {
        MultilinearPolynomial::parse(&text)
    }
}

/// Ising model from a JSON file (plain or embedded form) or a fixture reference.
pub fn load_ising(spec: &str) -> Result<IsingModel> {
    if let Some(name) = fixture_name(spec) {
        return fixtures::ising(name);
    }
    let value: serde_json::Value = read_json(Path::new(spec))?;
    let parsed = if value.get("model").is_some() {
        serde_json::from_value::<EmbeddedIsing>(value).map(|e| e.model)
    } else {
        serde_json::from_value::<IsingModel>(value)
    };
    parsed.map_err(|e| Error::validation(format!("{spec}: {e}")))
}

/// Any JSON-backed artifact from a file or a fixture of the right kind.
pub fn load_json_or_fixture<T: DeserializeOwned>(spec: &str) -> Result<T> {
    if let Some(name) = fixture_name(spec) {
        let text = fixtures::info(name)?.text(fixtures::Variant::Sanitized);
        return serde_json::from_str(&text).map_err(|e| Error::validation(format!("{spec}: {e}")));
    }
    read_json(Path::new(spec))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub stage: String,
    /// Path relative to the run directory.
    pub file: String,
    pub sha256: String,
    /// Hash of this entry's content, parameters and the previous chain value.
    pub chain: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    pub seed: Option<u64>,
    /// Fixture variant used for bundled inputs.
    pub fixture_variant: String,
    pub entries: Vec<ManifestEntry>,
}

/// Writes artifacts under one directory and records them in a hash-chained manifest,
/// so every entry's `chain` depends on all earlier artifacts and on the seed.
#[derive(Debug)]
pub struct ArtifactWriter {
    root: PathBuf,
    manifest: Manifest,
    head: String,
}

impl ArtifactWriter {
    pub fn new(root: impl Into<PathBuf>, seed: Option<u64>, fixture_variant: &str) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root)
            .map_err(|e| Error::Io(e).in_stage("write", root.display().to_string()))?;
        let head = sha256_hex(
            format!("foldq {} seed={seed:?} variant={fixture_variant}", env!("CARGO_PKG_VERSION"))
                .as_bytes(),
        );
        Ok(ArtifactWriter {
            root,
            manifest: Manifest {
                tool_version: env!("CARGO_PKG_VERSION").into(),
                seed,
                fixture_variant: fixture_variant.into(),
                entries: Vec::new(),
            },
            head,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub fn write_raw(&mut self, stage: &str, file: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.root.join(file);
        write_bytes(&path, bytes)?;
        let sha = sha256_hex(bytes);
        self.head = sha256_hex(format!("{}|{stage}|{file}|{sha}", self.head).as_bytes());
        self.manifest.entries.push(ManifestEntry {
            stage: stage.into(),
            file: file.into(),
            sha256: sha,
            chain: self.head.clone(),
        });
        Ok(path)
    }

    /// Writes `value` as JSON and checks that reading it back gives the same value.
    pub fn write_json<T>(&mut self, stage: &'static str, file: &str, value: &T) -> Result<PathBuf>
    where
        T: Serialize + DeserializeOwned + PartialEq,
    {
        let bytes = to_json_bytes(value)?;
        let path = self.write_raw(stage, file, &bytes)?;
        let back: T = read_json(&path).map_err(|e| e.in_stage(stage, file))?;
        if &back != value {
            return Err(Error::validation("value changed after a write/read round trip")
                .in_stage(stage, file));
        }
        Ok(path)
    }

    pub fn finish(self) -> Result<(PathBuf, Manifest)> {
        let path = self.root.join("manifest.json");
        write_bytes(&path, &to_json_bytes(&self.manifest)?)?;
        Ok((path, self.manifest))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_depends_on_seed_and_content() {
        let dir = tempfile::tempdir().unwrap();
        let run = |seed: u64, body: &[u8], sub: &str| {
            let mut w = ArtifactWriter::new(dir.path().join(sub), Some(seed), "sanitized").unwrap();
            w.write_raw("a", "a.txt", b"first").unwrap();
            w.write_raw("b", "b.txt", body).unwrap();
            w.manifest().entries.iter().map(|e| e.chain.clone()).collect::<Vec<_>>()
        };
        let base = run(1, b"x", "r1");
        assert_eq!(base, run(1, b"x", "r2"));
        let other_seed = run(2, b"x", "r3");
        assert!(base.iter().zip(&other_seed).all(|(a, b)| a != b));
        let other_body = run(1, b"y", "r4");
        assert_eq!(base[0], other_body[0]);
        assert_ne!(base[1], other_body[1]);
    }

    #[test]
    fn polynomial_sources() {
        let dir = tempfile::tempdir().unwrap();
        let txt = dir.path().join("p.txt");
        fs::write(&txt, "-q2 + 2q1q2 + 2q2q3 - 3q1q2q3\n").unwrap();
        let from_text = load_polynomial(txt.to_str().unwrap()).unwrap();
        assert_eq!(from_text, load_polynomial("fixture:hpph").unwrap());
        let json = dir.path().join("p.json");
        fs::write(&json, to_json_bytes(&from_text).unwrap()).unwrap();
        assert_eq!(load_polynomial(json.to_str().unwrap()).unwrap(), from_text);
        assert!(matches!(
            load_polynomial(dir.path().join("missing").to_str().unwrap()),
            Err(Error::File { .. })
        ));
    }
}
