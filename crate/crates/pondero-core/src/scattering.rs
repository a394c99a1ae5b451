//! Input-output scattering of field fluctuations and the quadrature noise
//! spectra it produces.
//!
//! Fluctuations are tracked in the sideband-pair basis `(a(omega),
//! a_dag(-omega))`: a 2x2 complex matrix maps the input pair to the output
//! (or intracavity) pair. The lower row is fixed by conjugation symmetry,
//! `m21(omega) = conj(m12(-omega))` and `m22(omega) = conj(m11(-omega))`,
//! so only the physical upper row is computed directly.
//!
//! From the matrix follow the quadrature rows `U, V`, the symmetrized
//! vacuum noise spectra (shot noise = 1), the two-quadrature cross-spectral
//! matrix used by time-series synthesis, and quadrature-angle maps for
//! locating squeezed regions.

use alloc::vec::Vec;
use num_complex::Complex64;

use crate::model::{self, GainMode};
use crate::params::SystemParams;
use crate::spectrum::{check_grid, QuadratureSpectrum};
use crate::ModelError;

/// Sideband-pair transfer matrix at one frequency.
///
/// Maps `(a_in(omega), a_in_dag(-omega))` to the corresponding output pair.
/// Rows: `(m11, m12)` produces `a_out(omega)`, `(m21, m22)` produces
/// `a_out_dag(-omega)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringMatrix {
    pub m11: Complex64,
    pub m12: Complex64,
    pub m21: Complex64,
    pub m22: Complex64,
}

impl ScatteringMatrix {
    /// Quadrature row for angle `theta` (radians): coefficients `(U, V)`
    /// such that `X_theta(omega) = U a_in(omega) + V a_in_dag(-omega)`,
    /// with `X_theta = a_out e^{-i theta} + a_out_dag e^{+i theta}`.
    pub fn quadrature_row(&self, theta: f64) -> (Complex64, Complex64) {
        let em = Complex64::from_polar(1.0, -theta);
        let ep = Complex64::from_polar(1.0, theta);
        (em * self.m11 + ep * self.m21, em * self.m12 + ep * self.m22)
    }

    /// Symmetrized vacuum power spectral density of the `theta` quadrature,
    /// `(|U|^2 + |V|^2) / 2`, normalized so vacuum in = 1 out when the
    /// matrix is passive.
    pub fn quadrature_psd(&self, theta: f64) -> f64 {
        let (u, v) = self.quadrature_row(theta);
        0.5 * (u.norm_sqr() + v.norm_sqr())
    }
}

/// Transfer matrix from input fluctuations to the output field.
///
/// Upper row: `m11 = (1 + G/2) C(omega) - 1` and
/// `m12 = (G/2) conj(C(-omega))`, with `C` the cavity round trip and `G`
/// the closed-loop gain. At zero coupling this reduces to the all-pass
/// `C - 1`, which has unit magnitude at every frequency.
pub fn output_transfer(
    p: &SystemParams,
    omega: f64,
    mode: GainMode,
) -> Result<ScatteringMatrix, ModelError> {
    let g_p = model::gain(p, omega, mode)?;
    let g_m = model::gain(p, -omega, mode)?;
    let c_p = model::cavity_roundtrip(p, omega);
    let c_m = model::cavity_roundtrip(p, -omega);
    let one = Complex64::new(1.0, 0.0);
    let m11 = (one + 0.5 * g_p) * c_p - one;
    let m12 = 0.5 * g_p * c_m.conj();
    let m21 = 0.5 * g_m.conj() * c_p;
    let m22 = (one + 0.5 * g_m.conj()) * c_m.conj() - one;
    Ok(ScatteringMatrix { m11, m12, m21, m22 })
}

/// Transfer matrix from input fluctuations to the intracavity field, in
/// units of 1/sqrt(rad/s).
///
/// Upper row: `m11 = sqrt(2 kappa) f(omega) (1 + G/2)` and
/// `m12 = sqrt(2 kappa) conj(f(-omega)) G/2`, with `f` the bare cavity
/// filter. The same conjugation symmetry fixes the lower row.
pub fn intracavity_transfer(
    p: &SystemParams,
    omega: f64,
    mode: GainMode,
) -> Result<ScatteringMatrix, ModelError> {
    let g_p = model::gain(p, omega, mode)?;
    let g_m = model::gain(p, -omega, mode)?;
    let root = model::kappa_coupling(p);
    let f_p = model::cavity_filter(p, omega) / p.kappa;
    let f_m = model::cavity_filter(p, -omega) / p.kappa;
    let one = Complex64::new(1.0, 0.0);
    let m11 = root * f_p * (one + 0.5 * g_p);
    let m12 = root * f_m.conj() * (0.5 * g_p);
    let m21 = root * f_p * (0.5 * g_m.conj());
    let m22 = root * f_m.conj() * (one + 0.5 * g_m.conj());
    Ok(ScatteringMatrix { m11, m12, m21, m22 })
}

/// Symmetrized vacuum noise spectrum of the output quadrature at angle
/// `theta` over a grid of frequencies (rad/s). Shot noise = 1.
pub fn vacuum_quadrature_psd(
    p: &SystemParams,
    theta: f64,
    freqs: &[f64],
    mode: GainMode,
) -> Result<QuadratureSpectrum, ModelError> {
    check_grid(freqs)?;
    let mut psd = Vec::with_capacity(freqs.len());
    for &w in freqs {
        psd.push(output_transfer(p, w, mode)?.quadrature_psd(theta));
    }
    QuadratureSpectrum::new(freqs.to_vec(), psd)
}

/// Two-quadrature cross-spectral matrix of the output field on a frequency
/// grid, for driving correlated time-series synthesis.
///
/// Quadratures are amplitude (`theta = 0`) and phase (`theta = pi/2`). Each
/// entry is `S_ij = (U_i conj(U_j) + V_i conj(V_j)) / 2`; the diagonal is
/// real and the matrix Hermitian, so only `S_aa`, `S_pp`, and the upper
/// off-diagonal `S_ap` are stored. Shot noise corresponds to the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossSpectra {
    /// Frequency grid, rad/s, strictly increasing.
    pub freqs: Vec<f64>,
    /// Amplitude-quadrature PSD, shot noise = 1.
    pub s_aa: Vec<f64>,
    /// Phase-quadrature PSD, shot noise = 1.
    pub s_pp: Vec<f64>,
    /// Amplitude-phase cross spectrum; the phase-amplitude entry is its
    /// conjugate.
    pub s_ap: Vec<Complex64>,
}

/// Evaluate [`CrossSpectra`] for the output field.
pub fn cross_spectral_matrix(
    p: &SystemParams,
    freqs: &[f64],
    mode: GainMode,
) -> Result<CrossSpectra, ModelError> {
    check_grid(freqs)?;
    let n = freqs.len();
    let mut s_aa = Vec::with_capacity(n);
    let mut s_pp = Vec::with_capacity(n);
    let mut s_ap = Vec::with_capacity(n);
    for &w in freqs {
        let m = output_transfer(p, w, mode)?;
        let (ua, va) = m.quadrature_row(0.0);
        let (up, vp) = m.quadrature_row(core::f64::consts::FRAC_PI_2);
        s_aa.push(0.5 * (ua.norm_sqr() + va.norm_sqr()));
        s_pp.push(0.5 * (up.norm_sqr() + vp.norm_sqr()));
        s_ap.push(0.5 * (ua * up.conj() + va * vp.conj()));
    }
    Ok(CrossSpectra {
        freqs: freqs.to_vec(),
        s_aa,
        s_pp,
        s_ap,
    })
}

/// Noise power on a quadrature-angle by frequency grid.
///
/// Values are stored row-major: `values[i * freqs.len() + j]` is angle
/// `thetas[i]` at frequency `freqs[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SqueezeMap {
    /// Quadrature angles, radians.
    pub thetas: Vec<f64>,
    /// Frequency grid, rad/s.
    pub freqs: Vec<f64>,
    /// PSD values relative to shot noise, row-major.
    pub values: Vec<f64>,
}

impl SqueezeMap {
    /// Smallest value together with its angle and frequency.
    pub fn global_min(&self) -> Option<(f64, f64, f64)> {
        self.min_in(f64::NEG_INFINITY..=f64::INFINITY, f64::NEG_INFINITY..=f64::INFINITY)
    }

    /// Smallest value restricted to angle and frequency windows; `None`
    /// when no grid point falls inside both.
    pub fn min_in(
        &self,
        theta_range: core::ops::RangeInclusive<f64>,
        freq_range: core::ops::RangeInclusive<f64>,
    ) -> Option<(f64, f64, f64)> {
        let mut best: Option<(f64, f64, f64)> = None;
        for (i, &th) in self.thetas.iter().enumerate() {
            if !theta_range.contains(&th) {
                continue;
            }
            for (j, &f) in self.freqs.iter().enumerate() {
                if !freq_range.contains(&f) {
                    continue;
                }
                let v = self.values[i * self.freqs.len() + j];
                if best.map_or(true, |(bv, _, _)| v < bv) {
                    best = Some((v, th, f));
                }
            }
        }
        best
    }
}

/// Map of the symmetrized vacuum output noise over quadrature angles and
/// frequencies. Angles need not be ordered; the frequency grid must be
/// strictly increasing.
pub fn squeezing_map(
    p: &SystemParams,
    thetas: &[f64],
    freqs: &[f64],
    mode: GainMode,
) -> Result<SqueezeMap, ModelError> {
    check_grid(freqs)?;
    let mut values = alloc::vec![0.0; thetas.len() * freqs.len()];
    for (j, &w) in freqs.iter().enumerate() {
        let m = output_transfer(p, w, mode)?;
        for (i, &th) in thetas.iter().enumerate() {
            values[i * freqs.len() + j] = m.quadrature_psd(th);
        }
    }
    Ok(SqueezeMap {
        thetas: thetas.to_vec(),
        freqs: freqs.to_vec(),
        values,
    })
}

/// Field-amplitude suppression factor of intracavity amplitude
/// fluctuations at the bare mechanical frequency, `|1 + g_s(omega_m)|`.
///
/// Near `|delta| = kappa` this approaches the inverse cooperativity
/// `1 / C_om`, the textbook feedback-suppression limit.
pub fn field_suppression(p: &SystemParams, mode: GainMode) -> Result<f64, ModelError> {
    let gs = model::gain_symmetric(p, p.omega_m, mode)?;
    Ok((Complex64::new(1.0, 0.0) + gs).norm())
}
