//! Artifact persistence: little-endian binary arrays with JSON sidecars,
//! CSV tables and run manifests with SHA-256 checksums.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{Error, Result};

/// Element type of a stored array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    /// IEEE-754 binary64.
    F64,
    /// Pairs of binary64, real part first.
    C128,
}

/// Sidecar record describing a binary array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayMeta {
    pub shape: Vec<usize>,
    pub dtype: Dtype,
    pub byte_order: String,
    pub axes: Vec<String>,
    pub units: String,
    /// Free-form geometry (grid size, spacing, distances).
    #[serde(default)]
    pub geometry: serde_json::Value,
    pub sha256: String,
}

/// Lowercase hexadecimal SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn check_shape(shape: &[usize], len: usize) -> Result<()> {
    let n: usize = shape.iter().product();
    if n != len {
        return Err(Error::Config(format!("array of {len} elements does not have shape {shape:?}")));
    }
    Ok(())
}

fn write_bytes(dir: &Path, name: &str, bytes: Vec<u8>, meta: ArrayMeta) -> Result<ArrayMeta> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(format!("{name}.bin")), &bytes)?;
    fs::write(dir.join(format!("{name}.json")), serde_json::to_string_pretty(&meta)?)?;
    Ok(meta)
}

/// Write `name.bin` and its sidecar `name.json` into `dir`.
pub fn write_real_array(
    dir: &Path,
    name: &str,
    data: &[f64],
    shape: &[usize],
    axes: &[&str],
    units: &str,
    geometry: serde_json::Value,
) -> Result<ArrayMeta> {
    check_shape(shape, data.len())?;
    let bytes: Vec<u8> = data.iter().flat_map(|v| v.to_le_bytes()).collect();
    let meta = ArrayMeta {
        shape: shape.to_vec(),
        dtype: Dtype::F64,
        byte_order: "little-endian".into(),
        axes: axes.iter().map(|s| s.to_string()).collect(),
        units: units.into(),
        geometry,
        sha256: sha256_hex(&bytes),
    };
    write_bytes(dir, name, bytes, meta)
}

/// Complex counterpart of [`write_real_array`], interleaving real and
/// imaginary parts.
pub fn write_complex_array(
    dir: &Path,
    name: &str,
    data: &[Complex64],
    shape: &[usize],
    axes: &[&str],
    units: &str,
    geometry: serde_json::Value,
) -> Result<ArrayMeta> {
    check_shape(shape, data.len())?;
    let bytes: Vec<u8> = data.iter().flat_map(|v| v.re.to_le_bytes().into_iter().chain(v.im.to_le_bytes())).collect();
    let meta = ArrayMeta {
        shape: shape.to_vec(),
        dtype: Dtype::C128,
        byte_order: "little-endian".into(),
        axes: axes.iter().map(|s| s.to_string()).collect(),
        units: units.into(),
        geometry,
        sha256: sha256_hex(&bytes),
    };
    write_bytes(dir, name, bytes, meta)
}

fn read_payload(dir: &Path, name: &str, expect: Dtype) -> Result<(ArrayMeta, Vec<f64>)> {
    let meta: ArrayMeta = serde_json::from_str(&fs::read_to_string(dir.join(format!("{name}.json")))?)?;
    if meta.dtype != expect {
        return Err(Error::Config(format!("array {name} has dtype {:?}, expected {expect:?}", meta.dtype)));
    }
    let bytes = fs::read(dir.join(format!("{name}.bin")))?;
    if sha256_hex(&bytes) != meta.sha256 {
        return Err(Error::Config(format!("array {name} does not match its checksum")));
    }
    let width = if expect == Dtype::F64 { 1 } else { 2 };
    if bytes.len() != 8 * width * meta.shape.iter().product::<usize>() {
        return Err(Error::Config(format!("array {name} has the wrong byte length")));
    }
    let vals = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8"))).collect();
    Ok((meta, vals))
}

pub fn read_real_array(dir: &Path, name: &str) -> Result<(ArrayMeta, Vec<f64>)> {
    read_payload(dir, name, Dtype::F64)
}

pub fn read_complex_array(dir: &Path, name: &str) -> Result<(ArrayMeta, Vec<Complex64>)> {
    let (meta, v) = read_payload(dir, name, Dtype::C128)?;
    Ok((meta, v.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect()))
}

/// Write a CSV table with a header row.
pub fn write_csv<S: AsRef<str>>(path: &Path, header: &[&str], rows: &[Vec<S>]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for (k, row) in rows.iter().enumerate() {
        if row.len() != header.len() {
            return Err(Error::Config(format!("CSV row {k} has {} fields, header has {}", row.len(), header.len())));
        }
        w.write_record(row.iter().map(|s| s.as_ref()))?;
    }
    w.flush()?;
    Ok(())
}

/// Shortest round-trip text for a float.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:e}")
}

/// Record of one run, sufficient to reproduce every array it emitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: RunConfig,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub wall_clock_seconds: f64,
    /// Artifact file name to SHA-256 checksum.
    pub checksums: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(config: RunConfig, seed: Option<u64>) -> Self {
        Self {
            config,
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_clock_seconds: 0.0,
            checksums: BTreeMap::new(),
        }
    }

    pub fn record(&mut self, name: impl Into<String>, sha256: impl Into<String>) {
        self.checksums.insert(name.into(), sha256.into());
    }

    /// Record the checksum of a file already written into `dir`.
    pub fn record_file(&mut self, dir: &Path, name: &str) -> Result<()> {
        let bytes = fs::read(dir.join(name))?;
        self.record(name, sha256_hex(&bytes));
        Ok(())
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        fs::create_dir_all(dir)?;
        let path = dir.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(self)?)?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }

    /// Whether two manifests list identical artifact checksums.
    pub fn same_artifacts(&self, other: &Self) -> bool {
        self.checksums == other.checksums
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn arrays_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let re = vec![1.0, -2.5, 3.25, 0.0, 1e-300, f64::MAX];
        let meta = write_real_array(dir.path(), "a", &re, &[2, 3], &["i", "j"], "1", serde_json::json!({"n": 3})).unwrap();
        let (back_meta, back) = read_real_array(dir.path(), "a").unwrap();
        assert_eq!(back, re);
        assert_eq!(back_meta, meta);
        let bytes = fs::read(dir.path().join("a.bin")).unwrap();
        assert_eq!(&bytes[8..16], &(-2.5f64).to_le_bytes());
        let cx = vec![Complex64::new(1.0, -1.0), Complex64::new(0.5, 2.0)];
        write_complex_array(dir.path(), "c", &cx, &[2], &["probe"], "1", serde_json::Value::Null).unwrap();
        assert_eq!(read_complex_array(dir.path(), "c").unwrap().1, cx);
        assert!(write_real_array(dir.path(), "bad", &re, &[4], &["i"], "1", serde_json::Value::Null).is_err());
    }

    #[test]
    fn tampering_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        write_real_array(dir.path(), "a", &[1.0, 2.0], &[2], &["i"], "1", serde_json::Value::Null).unwrap();
        fs::write(dir.path().join("a.bin"), 3.0f64.to_le_bytes().repeat(2)).unwrap();
        assert!(read_real_array(dir.path(), "a").is_err());
    }

    #[test]
    fn csv_has_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_csv(&path, &["a", "b"], &[vec!["1".to_string(), "2".to_string()]]).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "a,b\n1,2\n");
        assert!(write_csv(&path, &["a"], &[vec!["1", "2"]]).is_err());
    }
}
