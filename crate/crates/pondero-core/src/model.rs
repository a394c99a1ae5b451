//! Cavity filter, optical spring, optomechanical damping, and the
//! closed-loop gain of the amplifier.
//!
//! The mechanical oscillator sits in a detuned cavity. Amplitude
//! fluctuations of the cavity-filtered input field drive mechanical motion,
//! which is transduced back onto the field; the loop closes into a complex,
//! frequency-dependent gain `G(omega)` acting on the filtered amplitude
//! quadrature. Two gain variants are provided: the full expression with the
//! frequency-dependent spring, and the quasi-static simplification with the
//! spring frozen at its zero-frequency value.
//!
//! ```
//! use pondero_core::{model, SystemParams};
//! let tau = core::f64::consts::TAU;
//! let p = SystemParams::new(tau * 1.8e6, -tau * 1.0e6, tau * 155.5e3,
//!                           tau * 1.91e3, tau * 68e3, 6.0).unwrap();
//! let ws = model::shifted_frequency(&p).unwrap();
//! assert!((ws / tau - 141_810.64).abs() < 0.01);
//! ```

use num_complex::Complex64;
// Inherent f64 methods shadow the trait when std is linked (tests).
#[allow(unused_imports)]
use num_traits::Float;

use crate::params::SystemParams;
use crate::ModelError;

/// Which gain expression to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GainMode {
    /// Full expression: frequency-dependent spring in the denominator and
    /// the `+omega` correction in the numerator.
    #[default]
    Full,
    /// Quasi-static spring: `s_opt` frozen at zero frequency, numerator
    /// without the `+omega` term. This is the form usually quoted for the
    /// unresolved-sideband regime and the one used for network-response
    /// fits.
    Simplified,
}

/// Normalized cavity amplitude filter.
///
/// Returns `kappa / (kappa - i (omega + delta))`, the single-pole response
/// of the cavity field to an input sideband at `omega`, scaled so its
/// magnitude is 1 for a resonant carrier (`omega = 0`, `delta = 0`). The
/// physical field transfer carries an extra `sqrt(2 kappa) / kappa`; see
/// [`kappa_coupling`].
pub fn cavity_filter(p: &SystemParams, omega: f64) -> Complex64 {
    p.kappa * filter_raw(p.kappa, p.delta, omega)
}

/// Input-output coupling rate `sqrt(2 kappa)`, in sqrt(rad/s).
///
/// Multiplying the raw filter `cavity_filter / kappa` by this gives the
/// field amplitude entering the cavity mode per unit input amplitude.
pub fn kappa_coupling(p: &SystemParams) -> f64 {
    (2.0 * p.kappa).sqrt()
}

/// Round-trip cavity factor `2 kappa / (kappa - i (omega + delta))`.
///
/// For a lossless single-sided cavity this is an all-pass: `|C - 1| = 1`
/// exactly at every real frequency and detuning, which is what guarantees
/// that vacuum stays vacuum when the optomechanical gain vanishes.
pub fn cavity_roundtrip(p: &SystemParams, omega: f64) -> Complex64 {
    2.0 * cavity_filter(p, omega)
}

/// The bare single-pole filter `1 / (kappa - i (omega + delta))`, units
/// 1/(rad/s). Written in the algebraically expanded form to keep it
/// identical, bit for bit, with the published expression.
fn filter_raw(kappa: f64, delta: f64, omega: f64) -> Complex64 {
    let num = Complex64::new(kappa, delta - omega);
    let den = {
        let a = Complex64::new(kappa, -omega);
        a * a + delta * delta
    };
    num / den
}

/// Frequency-dependent optical spring `s_opt(omega)`, rad/s.
///
/// `s_opt = 4 g^2 n_bar omega_m / (kappa^2 + delta^2 - omega^2)`. The pole
/// where the denominator vanishes is guarded: frequencies within
/// `pole_epsilon * omega_m^2` of it are reported as [`ModelError::PolePassage`]
/// rather than evaluated.
pub fn optical_spring(p: &SystemParams, omega: f64) -> Result<f64, ModelError> {
    let den = sideband_denominator(p, omega)?;
    Ok(p.coupling_strength() / den)
}

/// Frequency-dependent optomechanical damping `Gamma_opt(omega)`, rad/s.
///
/// `Gamma_opt = damping_scale * 2 kappa (omega_m^2 - omega^2) /
/// (kappa^2 + delta^2 - omega^2)`. It vanishes exactly at `omega = omega_m`
/// and is negative above (anti-damping) for frequencies below the sideband
/// pole. The overall scale follows the same convention knob as the spring;
/// the default 0.5 reproduces the measured amplifier gain curve.
pub fn optomechanical_damping(p: &SystemParams, omega: f64) -> Result<f64, ModelError> {
    let den = sideband_denominator(p, omega)?;
    Ok(p.damping_scale * 2.0 * p.kappa * (p.omega_m * p.omega_m - omega * omega) / den)
}

fn sideband_denominator(p: &SystemParams, omega: f64) -> Result<f64, ModelError> {
    let den = p.kappa * p.kappa + p.delta * p.delta - omega * omega;
    let guard = p.pole_epsilon * p.omega_m * p.omega_m;
    if den.abs() <= guard {
        return Err(ModelError::PolePassage {
            omega,
            pole: (p.kappa * p.kappa + p.delta * p.delta).sqrt(),
        });
    }
    Ok(den)
}

/// Closed-loop optomechanical gain `G(omega)`.
///
/// The full form is
/// `(i kappa - delta + omega) s_opt(omega) /
///  (omega_m^2 + delta s_opt(omega) - omega^2 - i omega (gamma_m + Gamma_opt(omega)))`;
/// the simplified form freezes `s_opt` at zero frequency in both numerator
/// and denominator and drops the `+omega` numerator term, while
/// `Gamma_opt` keeps its frequency dependence in both modes. `G -> 0`
/// whenever the coupling (`n_bar` or `g_om`) goes to zero.
pub fn gain(p: &SystemParams, omega: f64, mode: GainMode) -> Result<Complex64, ModelError> {
    let gamma_t = p.gamma_m + optomechanical_damping(p, omega)?;
    let (s, numerator) = match mode {
        GainMode::Full => {
            let s = optical_spring(p, omega)?;
            (s, Complex64::new(-p.delta + omega, p.kappa) * s)
        }
        GainMode::Simplified => {
            let s0 = optical_spring(p, 0.0)?;
            (s0, Complex64::new(-p.delta, p.kappa) * s0)
        }
    };
    let den = Complex64::new(
        p.omega_m * p.omega_m + p.delta * s - omega * omega,
        -omega * gamma_t,
    );
    let guard = p.pole_epsilon * p.omega_m * p.omega_m;
    if den.norm() <= guard {
        return Err(ModelError::GainPole { omega });
    }
    Ok(numerator / den)
}

/// Symmetric part of the gain, `g_s(omega) = (G(omega) + G~(omega)) / 2`
/// with `G~(omega) = conj(G(-omega))`.
///
/// This is the closed-loop response seen by the amplitude quadrature: the
/// amplitude transfer through the loop is `1 + g_s`. The `+omega` numerator
/// pieces of the full mode cancel between the two terms, so `g_s` has the
/// same algebraic shape in both modes (they still differ through the
/// frequency dependence of the spring in the denominator).
pub fn gain_symmetric(p: &SystemParams, omega: f64, mode: GainMode) -> Result<Complex64, ModelError> {
    let g = gain(p, omega, mode)?;
    let gm = gain(p, -omega, mode)?.conj();
    Ok(0.5 * (g + gm))
}

/// Antisymmetric part of the gain, `g_a(omega) = (G(omega) - G~(omega)) / 2`.
///
/// This is the cross-quadrature piece: an amplitude drive leaks into the
/// phase quadrature with transfer `-i g_a`.
pub fn gain_antisymmetric(
    p: &SystemParams,
    omega: f64,
    mode: GainMode,
) -> Result<Complex64, ModelError> {
    let g = gain(p, omega, mode)?;
    let gm = gain(p, -omega, mode)?.conj();
    Ok(0.5 * (g - gm))
}

/// Collective optomechanical cooperativity `2 n_bar g^2 / (gamma_m kappa)`.
///
/// Sets the maximum field-amplitude suppression of intracavity amplitude
/// fluctuations at `omega_m` when `|delta| = kappa`.
pub fn cooperativity(p: &SystemParams) -> f64 {
    2.0 * p.n_bar * p.g_om * p.g_om / (p.gamma_m * p.kappa)
}

/// Optically shifted mechanical resonance
/// `omega_s = sqrt(omega_m^2 + delta * s_opt(0))`, rad/s.
///
/// Errors with [`ModelError::ImaginarySpring`] when the light-induced
/// anti-spring exceeds the bare restoring force.
pub fn shifted_frequency(p: &SystemParams) -> Result<f64, ModelError> {
    let ws2 = shifted_frequency_squared(p)?;
    if ws2 <= 0.0 {
        return Err(ModelError::ImaginarySpring { omega_s_squared: ws2 });
    }
    Ok(ws2.sqrt())
}

/// The squared shifted resonance, allowed to be negative (used by the
/// stability scan to detect static collapse without erroring).
pub fn shifted_frequency_squared(p: &SystemParams) -> Result<f64, ModelError> {
    let s0 = optical_spring(p, 0.0)?;
    Ok(p.omega_m * p.omega_m + p.delta * s0)
}
