//! End-to-end measurement pipelines: demodulate a raw record, estimate
//! quadrature spectra, and extract network transmission points the way
//! the instrument chain does.

use num_complex::Complex64;

use crate::config::DemodConfig;
use crate::demod::{self, Baseband};
use crate::welch::{self, WelchPsd};
use crate::AppError;

/// Equivalent noise bandwidth of the carrier phase estimator, Hz. Records
/// shorter than `1 / CARRIER_ENBW_HZ` (all the usual ones) therefore get
/// a single per-trace phase rotation.
pub const CARRIER_ENBW_HZ: f64 = 10.0;

/// Demodulate a raw record at its beat frequency and rotate the carrier
/// onto the real axis.
pub fn demodulate_record(
    x: &[f64],
    fs_hz: f64,
    carrier_freq_hz: f64,
    cfg: &DemodConfig,
) -> Result<Baseband, AppError> {
    let taps = demod::lowpass_taps(cfg.taps, cfg.cutoff_hz, fs_hz)?;
    let mut bb = demod::demodulate(x, fs_hz, carrier_freq_hz, &taps, cfg.decimation)?;
    demod::correct_carrier_phase(&mut bb, CARRIER_ENBW_HZ)?;
    Ok(bb)
}

/// Welch spectra of the amplitude and phase quadrature channels.
pub fn quadrature_psds(
    bb: &Baseband,
    nperseg: usize,
) -> Result<(WelchPsd, WelchPsd), AppError> {
    let i = welch::welch(&bb.i_channel(), bb.fs_hz, nperseg)?;
    let q = welch::welch(&bb.q_channel(), bb.fs_hz, nperseg)?;
    Ok((i, q))
}

/// Network transmission at the drive frequency from a coupled record and
/// an empty-cavity reference record.
///
/// The amplitude transmission is the tone ratio against the reference,
/// which calibrates away the drive depth and the receiver gain. The
/// phase-quadrature tone of the reference (residual mixer leakage) is
/// subtracted in phase before the same normalization.
pub fn tone_response(
    signal: &Baseband,
    reference: &Baseband,
    freq_hz: f64,
) -> Result<(Complex64, Complex64), AppError> {
    let (sig_am, sig_pm) = demod::lockin(signal, freq_hz)?;
    let (ref_am, ref_pm) = demod::lockin(reference, freq_hz)?;
    if ref_am.norm() == 0.0 {
        return Err(AppError::Numerical(
            "tone response: reference carries no drive tone".into(),
        ));
    }
    Ok(((sig_am / ref_am), (sig_pm - ref_pm) / ref_am))
}

/// Squared transmission magnitude from spectral estimates at the tone
/// bin, with the noise floor subtracted from both sides:
/// `(S_sig - floor) / (S_ref - floor)`.
pub fn shot_subtracted_gain(
    signal: &WelchPsd,
    reference: &WelchPsd,
    floor: f64,
    freq_hz: f64,
) -> Result<f64, AppError> {
    let ks = signal.nearest_bin(freq_hz);
    let kr = reference.nearest_bin(freq_hz);
    let num = signal.psd[ks] - floor;
    let den = reference.psd[kr] - floor;
    if den <= 0.0 {
        return Err(AppError::Numerical(
            "shot-subtracted gain: reference tone does not clear the floor".into(),
        ));
    }
    Ok(num / den)
}
