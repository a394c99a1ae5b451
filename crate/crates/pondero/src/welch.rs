//! Welch power spectral density estimation with a Hann window and 50%
//! overlap.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::AppError;

/// One-sided power spectral density estimate.
#[derive(Debug, Clone)]
pub struct WelchPsd {
    /// Bin centers, Hz (0 to Nyquist inclusive).
    pub freqs_hz: Vec<f64>,
    /// Power density per bin, input units squared per Hz.
    pub psd: Vec<f64>,
    /// Number of averaged segments.
    pub segments: usize,
}

impl WelchPsd {
    /// Index of the bin nearest a frequency.
    pub fn nearest_bin(&self, freq_hz: f64) -> usize {
        let mut best = 0;
        let mut dist = f64::INFINITY;
        for (i, f) in self.freqs_hz.iter().enumerate() {
            let d = (f - freq_hz).abs();
            if d < dist {
                dist = d;
                best = i;
            }
        }
        best
    }

    /// Mean density over an inclusive frequency band, Hz.
    pub fn band_mean(&self, lo_hz: f64, hi_hz: f64) -> Option<f64> {
        let vals: Vec<f64> = self
            .freqs_hz
            .iter()
            .zip(self.psd.iter())
            .filter(|(f, _)| **f >= lo_hz && **f <= hi_hz)
            .map(|(_, p)| *p)
            .collect();
        if vals.is_empty() {
            None
        } else {
            Some(vals.iter().sum::<f64>() / vals.len() as f64)
        }
    }
}

/// Periodic Hann window of length `n`.
fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 * (1.0 - (std::f64::consts::TAU * i as f64 / n as f64).cos()))
        .collect()
}

/// One-sided Welch estimate of a real record sampled at `fs` Hz.
///
/// Segments of `nperseg` samples overlap by half; each has its mean
/// removed and a Hann window applied. The normalization makes unit
/// variance white noise read `2 / fs` away from DC and Nyquist, and an
/// on-bin sine of amplitude `A` integrate to `A^2 / 2`.
pub fn welch(x: &[f64], fs: f64, nperseg: usize) -> Result<WelchPsd, AppError> {
    if nperseg < 8 {
        return Err(AppError::Numerical("welch: nperseg must be at least 8".into()));
    }
    if x.len() < nperseg {
        return Err(AppError::Numerical(format!(
            "welch: record of {} samples is shorter than one segment of {nperseg}",
            x.len()
        )));
    }
    if !(fs > 0.0) {
        return Err(AppError::Numerical("welch: sample rate must be > 0".into()));
    }
    let window = hann(nperseg);
    let u: f64 = window.iter().map(|w| w * w).sum();
    let step = nperseg / 2;
    let n_bins = nperseg / 2 + 1;

    let fft = FftPlanner::new().plan_fft_forward(nperseg);
    let mut acc = vec![0.0f64; n_bins];
    let mut buf = vec![Complex64::new(0.0, 0.0); nperseg];
    let mut segments = 0usize;
    let mut start = 0usize;
    while start + nperseg <= x.len() {
        let seg = &x[start..start + nperseg];
        let mean: f64 = seg.iter().sum::<f64>() / nperseg as f64;
        for (b, (s, w)) in buf.iter_mut().zip(seg.iter().zip(window.iter())) {
            *b = Complex64::new((s - mean) * w, 0.0);
        }
        fft.process(&mut buf);
        for (a, b) in acc.iter_mut().zip(buf.iter().take(n_bins)) {
            *a += b.norm_sqr();
        }
        segments += 1;
        start += step;
    }

    let scale = 1.0 / (segments as f64 * fs * u);
    let psd: Vec<f64> = acc
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let one_sided = if k == 0 || (nperseg % 2 == 0 && k == nperseg / 2) {
                1.0
            } else {
                2.0
            };
            one_sided * scale * a
        })
        .collect();
    let freqs_hz = (0..n_bins).map(|k| k as f64 * fs / nperseg as f64).collect();
    Ok(WelchPsd {
        freqs_hz,
        psd,
        segments,
    })
}
