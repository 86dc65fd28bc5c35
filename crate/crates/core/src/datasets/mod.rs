//! Deterministic synthetic datasets with the shape of the benchmark
//! workloads (HTML pages, images, video, and large single files).
//!
//! Sizes are drawn uniformly from the scaled `[min, max]` interval and file
//! contents are a seeded ChaCha byte stream, so the same `(spec, seed, scale)`
//! always produces bit-identical files and manifests.

pub mod fixture;

use std::io::Write;
use std::path::{Path, PathBuf};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const KB: u64 = 1024;
pub const MB: u64 = 1024 * KB;
pub const GB: u64 = 1024 * MB;

/// Slack allowed between the declared total and the per-file bounds.
const DECLARED_TOTAL_SLACK: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub name: String,
    pub file_count: u32,
    pub min_bytes: u64,
    pub max_bytes: u64,
    pub declared_total_bytes: u64,
}

impl DatasetSpec {
    pub fn new(name: &str, file_count: u32, min_bytes: u64, max_bytes: u64, declared_total_bytes: u64) -> Result<Self> {
        let spec = Self {
            name: name.to_string(),
            file_count,
            min_bytes,
            max_bytes,
            declared_total_bytes,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.file_count == 0 || self.min_bytes > self.max_bytes {
            return Err(Error::InvalidParameter(format!(
                "dataset {}: need file_count >= 1 and min <= max",
                self.name
            )));
        }
        let n = f64::from(self.file_count);
        let total = self.declared_total_bytes as f64;
        let lower = n * self.min_bytes as f64 * (1.0 - DECLARED_TOTAL_SLACK);
        let upper = n * self.max_bytes as f64 * (1.0 + DECLARED_TOTAL_SLACK);
        if total < lower || total > upper {
            return Err(Error::InvalidParameter(format!(
                "dataset {}: declared total {} outside [{lower}, {upper}]",
                self.name, self.declared_total_bytes
            )));
        }
        Ok(())
    }

    /// Midpoint of the size bounds, the mean of the uniform draw.
    pub fn mean_bytes(&self) -> f64 {
        (self.min_bytes as f64 + self.max_bytes as f64) / 2.0
    }

    fn scaled_bounds(&self, scale: f64) -> Result<(u64, u64)> {
        if !(scale > 0.0 && scale <= 1.0) {
            return Err(Error::InvalidParameter(format!("scale must be in (0, 1], got {scale}")));
        }
        let lo = (self.min_bytes as f64 * scale).ceil() as u64;
        let hi = (self.max_bytes as f64 * scale).floor() as u64;
        if lo == 0 || hi == 0 {
            return Err(Error::InvalidParameter(format!(
                "scale {scale} shrinks {} files below one byte",
                self.name
            )));
        }
        if lo > hi {
            // no integer inside a fixed-size spec's scaled interval
            let nearest = (self.min_bytes as f64 * scale).round() as u64;
            return Ok((nearest, nearest));
        }
        Ok((lo, hi))
    }

    /// File name of entry `index`.
    pub fn file_name(&self, index: u32) -> String {
        format!("{}_{index:05}.bin", self.name.to_ascii_lowercase())
    }
}

/// The six benchmark datasets.
pub fn builtin_specs() -> Vec<DatasetSpec> {
    let table = [
        ("HTML", 1500, 102 * KB, 153 * KB, 196 * MB),
        ("IMAGE", 200, 524 * KB, 786 * KB, 128 * MB),
        ("VIDEO", 64, 10 * MB, 20 * MB, 1124 * MB),
        ("32GB", 32, GB, GB, 32768 * MB),
        ("3GB", 1, 3 * GB, 3 * GB, 3072 * MB),
        ("10GB", 1, 10 * GB, 10 * GB, 10240 * MB),
    ];
    table
        .into_iter()
        .map(|(name, count, min, max, total)| DatasetSpec {
            name: name.to_string(),
            file_count: count,
            min_bytes: min,
            max_bytes: max,
            declared_total_bytes: total,
        })
        .collect()
}

/// Case-insensitive lookup in [`builtin_specs`].
pub fn builtin_spec(name: &str) -> Result<DatasetSpec> {
    builtin_specs()
        .into_iter()
        .find(|s| s.name.eq_ignore_ascii_case(name))
        .ok_or_else(|| Error::UnknownDataset(name.to_string()))
}

/// Deterministic file sizes for `(spec, seed, scale)` without touching disk.
pub fn sample_sizes(spec: &DatasetSpec, seed: u64, scale: f64) -> Result<Vec<u64>> {
    let (lo, hi) = spec.scaled_bounds(scale)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..spec.file_count).map(|_| rng.gen_range(lo..=hi)).collect())
}

/// Pseudorandom content stream of file `index`.
fn content_rng(seed: u64, index: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::from(index) + 1);
    rng
}

fn for_each_block(seed: u64, index: u32, bytes: u64, mut f: impl FnMut(&[u8]) -> Result<()>) -> Result<()> {
    let mut rng = content_rng(seed, index);
    let mut buf = vec![0u8; 64 * 1024];
    let mut left = bytes;
    while left > 0 {
        let n = left.min(buf.len() as u64) as usize;
        rng.fill_bytes(&mut buf[..n]);
        f(&buf[..n])?;
        left -= n as u64;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub bytes: u64,
    /// Lowercase hex SHA-256 of the file contents.
    pub digest: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    /// Computes the manifest of `(spec, seed, scale)` by streaming the
    /// contents through the digest, without writing files.
    pub fn compute(spec: &DatasetSpec, seed: u64, scale: f64) -> Result<Self> {
        let sizes = sample_sizes(spec, seed, scale)?;
        let mut entries = Vec::with_capacity(sizes.len());
        for (i, &bytes) in sizes.iter().enumerate() {
            let index = i as u32;
            let mut hasher = Sha256::new();
            for_each_block(seed, index, bytes, |block| {
                hasher.update(block);
                Ok(())
            })?;
            entries.push(ManifestEntry {
                name: spec.file_name(index),
                bytes,
                digest: hex::encode(hasher.finalize()),
            });
        }
        Ok(Self { entries })
    }

    pub fn total_bytes(&self) -> u64 {
        self.entries.iter().map(|e| e.bytes).sum()
    }

    pub fn sizes(&self) -> Vec<u64> {
        self.entries.iter().map(|e| e.bytes).collect()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for e in &self.entries {
            w.serialize(e)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let entries = r.deserialize().collect::<std::result::Result<Vec<ManifestEntry>, _>>()?;
        Ok(Self { entries })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::path_io(path, e))?;
        self.write_csv(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::path_io(path, e))?;
        Self::read_csv(file)
    }
}

pub const MANIFEST_FILE: &str = "manifest.csv";

/// Writes the dataset files and `manifest.csv` into `dir`.
pub fn generate_dataset(spec: &DatasetSpec, seed: u64, scale: f64, dir: &Path) -> Result<Manifest> {
    let sizes = sample_sizes(spec, seed, scale)?;
    std::fs::create_dir_all(dir).map_err(|e| Error::path_io(dir, e))?;
    let required: u64 = sizes.iter().sum();
    if let Some(available) = available_space(dir) {
        if available < required {
            return Err(Error::InsufficientSpace {
                path: dir.to_path_buf(),
                required,
                available,
            });
        }
    }

    let mut entries = Vec::with_capacity(sizes.len());
    for (i, &bytes) in sizes.iter().enumerate() {
        let index = i as u32;
        let name = spec.file_name(index);
        let path = dir.join(&name);
        let file = std::fs::File::create(&path).map_err(|e| Error::path_io(&path, e))?;
        let mut out = std::io::BufWriter::new(file);
        let mut hasher = Sha256::new();
        for_each_block(seed, index, bytes, |block| {
            hasher.update(block);
            out.write_all(block).map_err(|e| Error::path_io(&path, e))
        })?;
        out.flush().map_err(|e| Error::path_io(&path, e))?;
        entries.push(ManifestEntry {
            name,
            bytes,
            digest: hex::encode(hasher.finalize()),
        });
    }
    let manifest = Manifest { entries };
    manifest.save(&dir.join(MANIFEST_FILE))?;
    Ok(manifest)
}

/// Hex SHA-256 of a file.
pub fn file_digest(path: &Path) -> Result<String> {
    let mut file = std::fs::File::open(path).map_err(|e| Error::path_io(path, e))?;
    let mut hasher = Sha256::new();
    std::io::copy(&mut file, &mut hasher).map_err(|e| Error::path_io(path, e))?;
    Ok(hex::encode(hasher.finalize()))
}

#[cfg(unix)]
fn available_space(dir: &Path) -> Option<u64> {
    use std::ffi::CString;
    use std::os::unix::ffi::OsStrExt;

    let c_path = CString::new(dir.as_os_str().as_bytes()).ok()?;
    let mut stat: libc::statvfs = unsafe { std::mem::zeroed() };
    // SAFETY: c_path is NUL-terminated and stat is a valid out-pointer.
    let rc = unsafe { libc::statvfs(c_path.as_ptr(), &mut stat) };
    if rc != 0 {
        return None;
    }
    Some(stat.f_bavail as u64 * stat.f_frsize as u64)
}

#[cfg(not(unix))]
fn available_space(_dir: &Path) -> Option<u64> {
    None
}

/// Parses a scale given as a decimal (`0.25`) or a ratio (`1/64`).
pub fn parse_scale(text: &str) -> Result<f64> {
    let bad = || Error::InvalidParameter(format!("bad scale `{text}`"));
    let value = match text.split_once('/') {
        Some((num, den)) => {
            let num: f64 = num.trim().parse().map_err(|_| bad())?;
            let den: f64 = den.trim().parse().map_err(|_| bad())?;
            num / den
        }
        None => text.trim().parse().map_err(|_| bad())?,
    };
    if !(value > 0.0 && value <= 1.0) {
        return Err(bad());
    }
    Ok(value)
}

/// Default download location for a dataset directory served at `base_url`.
pub fn dataset_urls(base_url: &str, manifest: &Manifest) -> Vec<(String, PathBuf)> {
    let base = base_url.trim_end_matches('/');
    manifest
        .entries
        .iter()
        .map(|e| (format!("{base}/{}", e.name), PathBuf::from(&e.name)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_table() {
        let specs = builtin_specs();
        assert_eq!(specs.len(), 6);
        for s in &specs {
            s.validate().unwrap();
        }
        let html = builtin_spec("html").unwrap();
        assert_eq!(html.file_count, 1500);
        assert!((html.mean_bytes() / KB as f64 - 128.0).abs() / 128.0 < 0.01);
        let three = builtin_spec("3GB").unwrap();
        assert_eq!((three.file_count, three.min_bytes, three.max_bytes), (1, 3 * GB, 3 * GB));
        assert!(builtin_spec("AUDIO").is_err());
    }

    #[test]
    fn declared_totals_sum() {
        let total: u64 = builtin_specs().iter().map(|s| s.declared_total_bytes).sum();
        // 196 + 128 + 1124 + 32768 + 3072 + 10240 MB
        assert_eq!(total, 47_528 * MB);
    }

    #[test]
    fn scaled_video_bounds() {
        let video = builtin_spec("VIDEO").unwrap();
        let sizes = sample_sizes(&video, 3, 1.0 / 64.0).unwrap();
        assert_eq!(sizes.len(), 64);
        assert!(sizes.iter().all(|&b| (160 * KB..=320 * KB).contains(&b)));
    }

    #[test]
    fn html_statistics() {
        let html = builtin_spec("HTML").unwrap();
        let sizes = sample_sizes(&html, 7, 1.0).unwrap();
        assert!(sizes.iter().all(|&b| (102 * KB..=153 * KB).contains(&b)));
        let mean = sizes.iter().sum::<u64>() as f64 / sizes.len() as f64;
        assert!((mean - 128.0 * KB as f64).abs() / (128.0 * KB as f64) <= 0.05);
        assert_eq!(sizes, sample_sizes(&html, 7, 1.0).unwrap());
        assert_ne!(sizes, sample_sizes(&html, 8, 1.0).unwrap());
    }

    #[test]
    fn scale_validation() {
        let html = builtin_spec("HTML").unwrap();
        assert!(sample_sizes(&html, 1, 0.0).is_err());
        assert!(sample_sizes(&html, 1, 1.5).is_err());
        assert!(sample_sizes(&html, 1, 1e-9).is_err());
        assert_eq!(parse_scale("1/64").unwrap(), 1.0 / 64.0);
        assert_eq!(parse_scale("0.5").unwrap(), 0.5);
        assert!(parse_scale("2").is_err());
    }

    #[test]
    fn generated_files_match_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let spec = DatasetSpec::new("TINY", 5, 1000, 5000, 15000).unwrap();
        let m = generate_dataset(&spec, 42, 1.0, dir.path()).unwrap();
        assert_eq!(m, Manifest::compute(&spec, 42, 1.0).unwrap());
        for e in &m.entries {
            let path = dir.path().join(&e.name);
            assert_eq!(std::fs::metadata(&path).unwrap().len(), e.bytes);
            assert_eq!(file_digest(&path).unwrap(), e.digest);
        }
        let reloaded = Manifest::load(&dir.path().join(MANIFEST_FILE)).unwrap();
        assert_eq!(reloaded, m);
        let text = std::fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap();
        assert!(text.starts_with("name,bytes,digest\ntiny_00000.bin,"));
    }

    #[test]
    fn spec_bounds_checked() {
        assert!(DatasetSpec::new("X", 0, 1, 2, 1).is_err());
        assert!(DatasetSpec::new("X", 2, 5, 4, 9).is_err());
        assert!(DatasetSpec::new("X", 10, 100, 200, 5000).is_err());
    }
}
