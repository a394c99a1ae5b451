//! Frequency-grid containers shared by every module.

use alloc::vec::Vec;
use num_complex::Complex64;

use crate::ModelError;

/// A complex-valued response sampled on a strictly increasing frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSpectrum {
    /// Angular frequencies, rad/s, strictly increasing.
    pub freqs: Vec<f64>,
    /// Response value at each grid point.
    pub values: Vec<Complex64>,
}

impl ComplexSpectrum {
    /// Builds the container, checking lengths and grid monotonicity.
    pub fn new(freqs: Vec<f64>, values: Vec<Complex64>) -> Result<Self, ModelError> {
        check_grid(&freqs)?;
        if freqs.len() != values.len() {
            return Err(ModelError::GridMismatch);
        }
        Ok(ComplexSpectrum { freqs, values })
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }
}

/// A real power spectral density on a strictly increasing frequency grid.
/// Unless documented otherwise the values are relative to shot noise
/// (vacuum = 1).
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureSpectrum {
    /// Angular frequencies, rad/s, strictly increasing.
    pub freqs: Vec<f64>,
    /// PSD value at each grid point.
    pub psd: Vec<f64>,
}

impl QuadratureSpectrum {
    pub fn new(freqs: Vec<f64>, psd: Vec<f64>) -> Result<Self, ModelError> {
        check_grid(&freqs)?;
        if freqs.len() != psd.len() {
            return Err(ModelError::GridMismatch);
        }
        Ok(QuadratureSpectrum { freqs, psd })
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    /// Smallest PSD value as `(frequency, value)`.
    pub fn min_bin(&self) -> Option<(f64, f64)> {
        let mut best: Option<(f64, f64)> = None;
        for (&f, &s) in self.freqs.iter().zip(&self.psd) {
            if best.map_or(true, |(_, b)| s < b) {
                best = Some((f, s));
            }
        }
        best
    }

    /// Largest PSD value as `(frequency, value)`.
    pub fn max_bin(&self) -> Option<(f64, f64)> {
        let mut best: Option<(f64, f64)> = None;
        for (&f, &s) in self.freqs.iter().zip(&self.psd) {
            if best.map_or(true, |(_, b)| s > b) {
                best = Some((f, s));
            }
        }
        best
    }
}

pub(crate) fn check_grid(freqs: &[f64]) -> Result<(), ModelError> {
    for pair in freqs.windows(2) {
        if !(pair[1] > pair[0]) {
            return Err(ModelError::GridMismatch);
        }
    }
    if freqs.iter().any(|f| !f.is_finite()) {
        return Err(ModelError::GridMismatch);
    }
    Ok(())
}

/// Builds `n` evenly spaced angular frequencies over `[lo, hi]` rad/s.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => alloc::vec![lo],
        _ => {
            let step = (hi - lo) / (n - 1) as f64;
            (0..n).map(|i| lo + step * i as f64).collect()
        }
    }
}
