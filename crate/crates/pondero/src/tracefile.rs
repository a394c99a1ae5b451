//! Raw record files: little-endian `f32` samples next to a TOML sidecar
//! describing how the record was made.
//!
//! A trace named `run` is the pair `run.f32` (samples) and `run.toml`
//! (metadata). Any of `run`, `run.f32`, or `run.toml` names the same
//! trace.

use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::{AppError, FORMAT_VERSION};

/// Sidecar metadata of a synthesized record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceMeta {
    /// File format version; readers reject versions they do not know.
    pub format_version: u32,
    /// Sample rate, Hz.
    pub sample_rate_hz: f64,
    /// Number of samples in the `.f32` file.
    pub n_samples: u64,
    /// Seed of the noise draw.
    pub seed: u64,
    /// Beat-note frequency, Hz.
    pub carrier_freq_hz: f64,
    /// Beat-note amplitude, record units.
    pub carrier_amplitude: f64,
    /// Beat-note phase, degrees.
    pub carrier_phase_deg: f64,
    /// Width of the model-colored band, Hz.
    pub colored_band_hz: f64,
    /// True when the record is an empty-cavity (coupling off) reference.
    pub empty_cavity: bool,
    /// Shot-noise record level used by the synthesis, W^2/Hz.
    pub shot_level: f64,
    /// Detection efficiency used by the synthesis.
    pub efficiency: f64,
    /// Drive tone, when one was added.
    pub drive: Option<DriveMeta>,
}

/// Drive tone fields of the sidecar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveMeta {
    /// Modulation frequency, Hz.
    pub freq_hz: f64,
    /// Amplitude-modulation depth, record units.
    pub am_depth: f64,
}

/// Resolve a user-supplied trace name to the `(samples, sidecar)` path
/// pair.
fn trace_paths(name: &Path) -> (PathBuf, PathBuf) {
    let stem = match name.extension().and_then(|e| e.to_str()) {
        Some("f32") | Some("toml") => name.with_extension(""),
        _ => name.to_path_buf(),
    };
    (stem.with_extension("f32"), stem.with_extension("toml"))
}

/// Write a record and its sidecar.
pub fn write_trace(name: &Path, samples: &[f64], meta: &TraceMeta) -> Result<(), AppError> {
    if meta.n_samples as usize != samples.len() {
        return Err(AppError::Numerical(format!(
            "trace meta claims {} samples but {} were provided",
            meta.n_samples,
            samples.len()
        )));
    }
    let (data_path, meta_path) = trace_paths(name);
    let mut w = BufWriter::new(std::fs::File::create(&data_path)?);
    for &v in samples {
        w.write_all(&(v as f32).to_le_bytes())?;
    }
    w.flush()?;
    let text = toml::to_string_pretty(meta)
        .map_err(|e| AppError::Numerical(format!("trace sidecar serialization: {e}")))?;
    std::fs::write(&meta_path, text)?;
    Ok(())
}

/// Read a record and its sidecar, checking the format version and the
/// sample count.
pub fn read_trace(name: &Path) -> Result<(Vec<f64>, TraceMeta), AppError> {
    let (data_path, meta_path) = trace_paths(name);
    let text = std::fs::read_to_string(&meta_path)?;
    let meta: TraceMeta = toml::from_str(&text)
        .map_err(|e| AppError::Config(format!("{}: {e}", meta_path.display())))?;
    if meta.format_version != FORMAT_VERSION {
        return Err(AppError::Config(format!(
            "{}: format_version {} is not supported (expected {FORMAT_VERSION})",
            meta_path.display(),
            meta.format_version
        )));
    }
    let mut bytes = Vec::new();
    std::fs::File::open(&data_path)?.read_to_end(&mut bytes)?;
    if bytes.len() % 4 != 0 {
        return Err(AppError::Config(format!(
            "{}: length {} is not a whole number of f32 samples",
            data_path.display(),
            bytes.len()
        )));
    }
    let samples: Vec<f64> = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    if samples.len() as u64 != meta.n_samples {
        return Err(AppError::Config(format!(
            "{}: {} samples on disk but sidecar claims {}",
            data_path.display(),
            samples.len(),
            meta.n_samples
        )));
    }
    Ok((samples, meta))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta(n: u64) -> TraceMeta {
        TraceMeta {
            format_version: FORMAT_VERSION,
            sample_rate_hz: 80e6,
            n_samples: n,
            seed: 7,
            carrier_freq_hz: 10e6,
            carrier_amplitude: 1e-5,
            carrier_phase_deg: 0.0,
            colored_band_hz: 500e3,
            empty_cavity: false,
            shot_level: 2.495020050e-22,
            efficiency: 0.101,
            drive: Some(DriveMeta {
                freq_hz: 100e3,
                am_depth: 1e-7,
            }),
        }
    }

    #[test]
    fn trace_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let name = dir.path().join("run");
        let x: Vec<f64> = (0..100).map(|i| (i as f64 - 50.0) * 1e-7).collect();
        write_trace(&name, &x, &meta(100)).unwrap();
        let (y, m) = read_trace(&dir.path().join("run.f32")).unwrap();
        assert_eq!(m, meta(100));
        for (a, b) in x.iter().zip(y.iter()) {
            assert_eq!(*a as f32 as f64, *b);
        }
    }

    #[test]
    fn version_and_length_are_checked() {
        let dir = tempfile::tempdir().unwrap();
        let name = dir.path().join("bad");
        let mut m = meta(10);
        write_trace(&name, &vec![0.0; 10], &m).unwrap();
        // Corrupt the sidecar version.
        m.format_version = 99;
        let text = toml::to_string_pretty(&m).unwrap();
        std::fs::write(dir.path().join("bad.toml"), text).unwrap();
        assert!(matches!(read_trace(&name), Err(AppError::Config(_))));
        // Restore the version but lie about the count.
        m.format_version = FORMAT_VERSION;
        m.n_samples = 11;
        let text = toml::to_string_pretty(&m).unwrap();
        std::fs::write(dir.path().join("bad.toml"), text).unwrap();
        assert!(matches!(read_trace(&name), Err(AppError::Config(_))));
    }
}
