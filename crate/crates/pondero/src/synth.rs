//! Synthesis of heterodyne photocurrent records whose quadrature noise is
//! colored by the model.
//!
//! The two baseband quadrature processes are drawn in the frequency
//! domain: each positive DFT bin gets a pair of complex Gaussians shaped
//! by the Cholesky factor of the one-sided cross-spectral matrix the
//! detection chain predicts there, and an inverse FFT turns them into
//! time series. The raw record is the beat note with those quadratures
//! riding on it.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;

use pondero_core::{quad, scattering, DetectionChain, DetuningJitter, GainMode, SystemParams};

use crate::AppError;

/// Per-bin Cholesky factors of the detected quadrature cross-spectral
/// matrix on the DFT grid of a record.
#[derive(Debug, Clone)]
pub struct ColoredModel {
    /// Record length in samples.
    pub n: usize,
    /// Record sample rate, Hz.
    pub fs: f64,
    l11: Vec<f64>,
    l21: Vec<Complex64>,
    l22: Vec<f64>,
}

/// Detuning-averaged cross-spectral matrix of the cavity output
/// quadratures, weights and nodes shared with the core detection average.
pub fn averaged_cross_spectra(
    p: &SystemParams,
    jitter: &DetuningJitter,
    freqs: &[f64],
    mode: GainMode,
) -> Result<scattering::CrossSpectra, AppError> {
    let (nodes, weights) = quad::gauss_hermite(jitter.n_points);
    let n = freqs.len();
    let mut s_aa = vec![0.0; n];
    let mut s_pp = vec![0.0; n];
    let mut s_ap = vec![Complex64::new(0.0, 0.0); n];
    for (x, w) in nodes.iter().zip(weights.iter()) {
        let delta = p.kappa * (jitter.mean_delta_over_kappa + jitter.sigma_over_kappa * x);
        let node = scattering::cross_spectral_matrix(&p.at_delta(delta), freqs, mode)?;
        for i in 0..n {
            s_aa[i] += w * node.s_aa[i];
            s_pp[i] += w * node.s_pp[i];
            s_ap[i] += w * node.s_ap[i];
        }
    }
    Ok(scattering::CrossSpectra {
        freqs: freqs.to_vec(),
        s_aa,
        s_pp,
        s_ap,
    })
}

impl ColoredModel {
    /// Shape every bin inside `band_hz` with the detected model spectrum;
    /// bins outside stay white at the shot level.
    pub fn from_system(
        p: &SystemParams,
        chain: &DetectionChain,
        jitter: &DetuningJitter,
        mode: GainMode,
        n: usize,
        fs: f64,
        band_hz: f64,
    ) -> Result<Self, AppError> {
        let mut model = ColoredModel::white(n, fs, chain.shot_level());
        let df = fs / n as f64;
        let k_max = ((band_hz / df).floor() as usize).min(n / 2);
        if k_max < 1 {
            return Ok(model);
        }
        let freqs: Vec<f64> = (1..=k_max).map(|k| TAU * k as f64 * df).collect();
        let cross = averaged_cross_spectra(p, jitter, &freqs, mode)?;
        let n0 = chain.shot_level();
        let eps = chain.efficiency();
        for (i, k) in (1..=k_max).enumerate() {
            let m11 = n0 * (1.0 + 0.5 * eps * (cross.s_aa[i] - 1.0));
            let m22 = n0 * (1.0 + 0.5 * eps * (cross.s_pp[i] - 1.0));
            let m12 = 0.5 * eps * n0 * cross.s_ap[i];
            if !(m11 > 0.0) {
                return Err(AppError::Numerical(format!(
                    "colored model: non-positive diagonal at bin {k}"
                )));
            }
            let l11 = m11.sqrt();
            let l21 = m12.conj() / l11;
            let rem = m22 - l21.norm_sqr();
            if rem < -1e-9 * m22 {
                return Err(AppError::Numerical(format!(
                    "colored model: cross-spectral matrix not positive at bin {k}"
                )));
            }
            model.l11[k] = l11;
            model.l21[k] = l21;
            model.l22[k] = rem.max(0.0).sqrt();
        }
        Ok(model)
    }

    /// Uncorrelated white quadratures at a given one-sided level.
    pub fn white(n: usize, fs: f64, level: f64) -> Self {
        let bins = n / 2 + 1;
        let l = level.sqrt();
        ColoredModel {
            n,
            fs,
            l11: vec![l; bins],
            l21: vec![Complex64::new(0.0, 0.0); bins],
            l22: vec![l; bins],
        }
    }

    /// Restrict the quadrature processes to `|freq| <= limit_hz`.
    ///
    /// A quadrature pair riding on a beat note only represents the record
    /// faithfully within one carrier frequency of the carrier; noise
    /// beyond that folds through the mixer image into the demodulated
    /// band and double-counts the floor. Bins above the limit still
    /// consume random draws so records stay comparable across limits.
    pub fn with_band_limit(mut self, limit_hz: f64) -> Self {
        for k in 0..self.l11.len() {
            if self.bin_freq(k) > limit_hz {
                self.l11[k] = 0.0;
                self.l21[k] = Complex64::new(0.0, 0.0);
                self.l22[k] = 0.0;
            }
        }
        self
    }

    /// One-sided PSD targets `(S_aa, S_pp)` at bin `k`, record units per
    /// Hz (what a spectral estimate of the demodulated quadratures should
    /// converge to).
    pub fn bin_targets(&self, k: usize) -> (f64, f64) {
        let s_aa = self.l11[k] * self.l11[k];
        let s_pp = self.l21[k].norm_sqr() + self.l22[k] * self.l22[k];
        (s_aa, s_pp)
    }

    /// Frequency of bin `k`, Hz.
    pub fn bin_freq(&self, k: usize) -> f64 {
        k as f64 * self.fs / self.n as f64
    }
}

/// Draw the pair of baseband quadrature time series for one seed.
///
/// The draw is deterministic in the seed, independent of the colored
/// band contents (the same bins consume the same random values).
pub fn synthesize_quadratures(model: &ColoredModel, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let n = model.n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amp = (model.fs * n as f64 / 2.0).sqrt();
    let mut spec_a = vec![Complex64::new(0.0, 0.0); n];
    let mut spec_p = vec![Complex64::new(0.0, 0.0); n];

    let draw = |rng: &mut ChaCha8Rng| -> f64 { StandardNormal.sample(rng) };

    for k in 1..n.div_ceil(2) {
        let z1 = Complex64::new(draw(&mut rng), draw(&mut rng)) / 2f64.sqrt();
        let z2 = Complex64::new(draw(&mut rng), draw(&mut rng)) / 2f64.sqrt();
        let xa = amp * model.l11[k] * z1;
        let xp = amp * (model.l21[k] * z1 + model.l22[k] * z2);
        spec_a[k] = xa;
        spec_a[n - k] = xa.conj();
        spec_p[k] = xp;
        spec_p[n - k] = xp.conj();
    }
    if n % 2 == 0 {
        // Nyquist bin must be real; the DC bin stays zero (record means
        // carry no physics and are removed by every analysis step).
        let k = n / 2;
        let g1: f64 = draw(&mut rng);
        let g2: f64 = draw(&mut rng);
        spec_a[k] = Complex64::new(amp * model.l11[k] * g1, 0.0);
        spec_p[k] = Complex64::new(
            amp * (model.l21[k].norm() * g1 + model.l22[k] * g2),
            0.0,
        );
    }

    let fft = FftPlanner::new().plan_fft_inverse(n);
    fft.process(&mut spec_a);
    fft.process(&mut spec_p);
    let scale = 1.0 / n as f64;
    let a = spec_a.iter().map(|z| z.re * scale).collect();
    let p = spec_p.iter().map(|z| z.re * scale).collect();
    (a, p)
}

/// A coherent drive tone and the complex response it produces on each
/// output quadrature.
#[derive(Debug, Clone, Copy)]
pub struct DriveTone {
    /// Modulation frequency, Hz.
    pub freq_hz: f64,
    /// Amplitude-modulation depth in record units.
    pub am_depth: f64,
    /// Amplitude-quadrature transmission at the drive frequency.
    pub t_am: Complex64,
    /// Amplitude-to-phase conversion at the drive frequency.
    pub t_pm: Complex64,
}

/// Everything needed to build one raw record.
#[derive(Debug, Clone)]
pub struct RecordSpec<'a> {
    pub model: &'a ColoredModel,
    /// Beat-note amplitude, record units.
    pub carrier_amplitude: f64,
    /// Beat-note frequency, Hz.
    pub carrier_freq_hz: f64,
    /// Beat-note (local oscillator) phase, rad, shared by carrier and
    /// quadratures.
    pub carrier_phase_rad: f64,
    pub drive: Option<DriveTone>,
    pub seed: u64,
}

/// Synthesize the raw heterodyne record
/// `(A + a(t)) cos(w_b t + phi) - p(t) sin(w_b t + phi)`.
pub fn synthesize_record(spec: &RecordSpec) -> Vec<f64> {
    let (mut a, mut p) = synthesize_quadratures(spec.model, spec.seed);
    let n = spec.model.n;
    let fs = spec.model.fs;
    if let Some(d) = spec.drive {
        let wd = TAU * d.freq_hz;
        for i in 0..n {
            let t = i as f64 / fs;
            let ph = Complex64::from_polar(1.0, -wd * t);
            a[i] += d.am_depth * (d.t_am * ph).re;
            p[i] += d.am_depth * (d.t_pm * ph).re;
        }
    }
    let wb = TAU * spec.carrier_freq_hz;
    let phi = spec.carrier_phase_rad;
    (0..n)
        .map(|i| {
            let t = i as f64 / fs;
            let (s, c) = (wb * t + phi).sin_cos();
            (spec.carrier_amplitude + a[i]) * c - p[i] * s
        })
        .collect()
}
