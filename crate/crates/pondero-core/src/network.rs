//! Coherent drive response of the amplifier: transmission of an amplitude
//! modulation tone into the amplitude and phase quadratures, phase
//! profiles, and a stability scan.
//!
//! Responses are normalized to the empty-cavity transmission, so with the
//! coupling off the amplitude response is exactly 1 and the phase response
//! exactly 0. In terms of the symmetric and antisymmetric parts of the
//! closed-loop gain, `t_am = 1 + g_s` and `t_pm = -i g_a`.
//!
//! Reported phases follow the lock-in convention: a pure delay is a
//! negative phase. The quasi-static gain (`GainMode::Simplified`) is the
//! default here because it is the form whose phase profile matches the
//! measured network analysis, including the amplitude response crossing 0
//! and the phase response crossing -180 degrees at the frequency where the
//! light-induced anti-damping cancels the mechanical damping.

use alloc::vec::Vec;
use num_complex::Complex64;
// Inherent f64 methods shadow the trait when std is linked (tests).
#[allow(unused_imports)]
use num_traits::Float;

use crate::model::{self, GainMode};
use crate::params::SystemParams;
use crate::spectrum::check_grid;
use crate::ModelError;

/// Default gain variant for network analysis.
pub const NETWORK_MODE: GainMode = GainMode::Simplified;

/// Complex transmission of a drive tone into both quadratures, on a
/// drive-frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DriveResponse {
    /// Drive frequency grid, rad/s, strictly increasing.
    pub freqs: Vec<f64>,
    /// Amplitude-quadrature transmission, empty cavity = 1.
    pub am: Vec<Complex64>,
    /// Phase-quadrature transmission, empty cavity = 0.
    pub pm: Vec<Complex64>,
}

/// Single-frequency drive transmission `(t_am, t_pm)` for an explicit gain
/// variant.
pub fn drive_point(
    p: &SystemParams,
    omega: f64,
    mode: GainMode,
) -> Result<(Complex64, Complex64), ModelError> {
    let gs = model::gain_symmetric(p, omega, mode)?;
    let ga = model::gain_antisymmetric(p, omega, mode)?;
    let t_am = Complex64::new(1.0, 0.0) + gs;
    let t_pm = Complex64::new(0.0, -1.0) * ga;
    Ok((t_am, t_pm))
}

/// Drive transmission over a frequency grid with the default
/// [`NETWORK_MODE`] gain variant.
pub fn drive_response(p: &SystemParams, freqs: &[f64]) -> Result<DriveResponse, ModelError> {
    drive_response_in(p, freqs, NETWORK_MODE)
}

/// Drive transmission over a frequency grid with an explicit gain variant.
pub fn drive_response_in(
    p: &SystemParams,
    freqs: &[f64],
    mode: GainMode,
) -> Result<DriveResponse, ModelError> {
    check_grid(freqs)?;
    let mut am = Vec::with_capacity(freqs.len());
    let mut pm = Vec::with_capacity(freqs.len());
    for &w in freqs {
        let (a, p_) = drive_point(p, w, mode)?;
        am.push(a);
        pm.push(p_);
    }
    Ok(DriveResponse {
        freqs: freqs.to_vec(),
        am,
        pm,
    })
}

/// Gain magnitudes (dB) and unwrapped phases (degrees) of a drive
/// response.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseProfile {
    /// Drive frequency grid, rad/s.
    pub freqs: Vec<f64>,
    /// `20 log10 |t_am|`.
    pub am_db: Vec<f64>,
    /// Unwrapped `-arg(t_am)` in degrees.
    pub am_phase_deg: Vec<f64>,
    /// `20 log10 |t_pm|`.
    pub pm_db: Vec<f64>,
    /// Unwrapped `-arg(t_pm)` in degrees.
    pub pm_phase_deg: Vec<f64>,
}

impl PhaseProfile {
    /// Frequencies (rad/s) where the unwrapped amplitude phase crosses
    /// `level_deg`, linearly interpolated between grid points.
    pub fn am_phase_crossings(&self, level_deg: f64) -> Vec<f64> {
        crossings(&self.freqs, &self.am_phase_deg, level_deg)
    }

    /// Same for the phase-quadrature phase.
    pub fn pm_phase_crossings(&self, level_deg: f64) -> Vec<f64> {
        crossings(&self.freqs, &self.pm_phase_deg, level_deg)
    }

    /// Grid point with the largest amplitude gain, `(freq, db)`.
    pub fn am_max(&self) -> Option<(f64, f64)> {
        argmax(&self.freqs, &self.am_db)
    }

    /// Grid point with the smallest amplitude gain, `(freq, db)`.
    pub fn am_min(&self) -> Option<(f64, f64)> {
        argmin(&self.freqs, &self.am_db)
    }
}

fn argmax(freqs: &[f64], vals: &[f64]) -> Option<(f64, f64)> {
    vals.iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, &v)| (freqs[i], v))
}

fn argmin(freqs: &[f64], vals: &[f64]) -> Option<(f64, f64)> {
    vals.iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, &v)| (freqs[i], v))
}

fn crossings(freqs: &[f64], phase: &[f64], level: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 1..phase.len() {
        let a = phase[i - 1] - level;
        let b = phase[i] - level;
        if a == 0.0 {
            out.push(freqs[i - 1]);
        } else if a * b < 0.0 {
            let t = a / (a - b);
            out.push(freqs[i - 1] + t * (freqs[i] - freqs[i - 1]));
        }
    }
    if let Some(&last) = phase.last() {
        if last == level {
            out.push(*freqs.last().unwrap());
        }
    }
    out
}

/// Convert a drive response to magnitudes and unwrapped lock-in phases.
pub fn phase_profile(resp: &DriveResponse) -> PhaseProfile {
    let am_db = resp.am.iter().map(|z| 20.0 * z.norm().log10()).collect();
    let pm_db = resp.pm.iter().map(|z| 20.0 * z.norm().log10()).collect();
    let mut am_phase: Vec<f64> = resp.am.iter().map(|z| -z.arg().to_degrees()).collect();
    let mut pm_phase: Vec<f64> = resp.pm.iter().map(|z| -z.arg().to_degrees()).collect();
    unwrap_degrees(&mut am_phase);
    unwrap_degrees(&mut pm_phase);
    PhaseProfile {
        freqs: resp.freqs.clone(),
        am_db,
        am_phase_deg: am_phase,
        pm_db,
        pm_phase_deg: pm_phase,
    }
}

/// Remove 360-degree jumps along an ascending-frequency phase sequence.
fn unwrap_degrees(phase: &mut [f64]) {
    let mut offset = 0.0;
    for i in 1..phase.len() {
        let raw = phase[i] + offset;
        let mut d = raw - phase[i - 1];
        while d > 180.0 {
            offset -= 360.0;
            d -= 360.0;
        }
        while d < -180.0 {
            offset += 360.0;
            d += 360.0;
        }
        phase[i] += offset;
    }
}

/// Outcome of a stability scan over drive frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    /// True when the static optical anti-spring exceeds the mechanical
    /// restoring force (`omega_s^2 <= 0`).
    pub spring_unstable: bool,
    /// The squared shifted resonance that was checked, rad^2/s^2.
    pub omega_s_squared: f64,
    /// Frequencies (rad/s) where the amplitude response shows phase lead
    /// together with net gain, the classic oscillation precursor.
    pub flagged: Vec<f64>,
}

impl StabilityReport {
    /// True when the scan found nothing to report.
    pub fn is_empty(&self) -> bool {
        !self.spring_unstable && self.flagged.is_empty()
    }
}

/// Scan drive frequencies for instability precursors using the default
/// [`NETWORK_MODE`] gain variant.
///
/// Two independent checks: per frequency, phase lead (`-arg(t_am) > 0`,
/// principal value) combined with `|t_am| >= 1`; and globally, collapse of
/// the static spring. A report that [`StabilityReport::is_empty`] denies
/// means no precursor was found.
pub fn stability_scan(p: &SystemParams, freqs: &[f64]) -> Result<StabilityReport, ModelError> {
    stability_scan_in(p, freqs, NETWORK_MODE)
}

/// Stability scan with an explicit gain variant.
pub fn stability_scan_in(
    p: &SystemParams,
    freqs: &[f64],
    mode: GainMode,
) -> Result<StabilityReport, ModelError> {
    check_grid(freqs)?;
    let omega_s_squared = model::shifted_frequency_squared(p)?;
    let mut flagged = Vec::new();
    for &w in freqs {
        let (t_am, _) = drive_point(p, w, mode)?;
        if -t_am.arg() > 0.0 && t_am.norm() >= 1.0 {
            flagged.push(w);
        }
    }
    Ok(StabilityReport {
        spring_unstable: omega_s_squared <= 0.0,
        omega_s_squared,
        flagged,
    })
}
