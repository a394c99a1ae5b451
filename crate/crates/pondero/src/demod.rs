//! Heterodyne demodulation: complex mixing at the beat frequency, a
//! windowed-sinc decimating lowpass, carrier phase recovery, and tone
//! lock-in readout.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::AppError;

/// Complex baseband record produced by [`demodulate`].
#[derive(Debug, Clone)]
pub struct Baseband {
    /// Sample rate after decimation, Hz.
    pub fs_hz: f64,
    /// Time of the first sample relative to the raw record start, s
    /// (the filter group delay).
    pub t0_s: f64,
    /// Complex samples; real part is the amplitude quadrature, imaginary
    /// part the phase quadrature once the carrier phase is corrected.
    pub z: Vec<Complex64>,
    /// Global rotation removed by [`correct_carrier_phase`], rad.
    pub phase_correction_rad: f64,
}

impl Baseband {
    /// Amplitude-quadrature samples.
    pub fn i_channel(&self) -> Vec<f64> {
        self.z.iter().map(|z| z.re).collect()
    }

    /// Phase-quadrature samples.
    pub fn q_channel(&self) -> Vec<f64> {
        self.z.iter().map(|z| z.im).collect()
    }

    /// Time of sample `m`, s.
    pub fn time(&self, m: usize) -> f64 {
        self.t0_s + m as f64 / self.fs_hz
    }
}

/// Odd-length windowed-sinc lowpass with a Blackman window, normalized to
/// unit gain at DC.
pub fn lowpass_taps(n_taps: usize, cutoff_hz: f64, fs: f64) -> Result<Vec<f64>, AppError> {
    if n_taps % 2 == 0 || n_taps < 3 {
        return Err(AppError::Numerical(
            "lowpass_taps: tap count must be odd and at least 3".into(),
        ));
    }
    if !(cutoff_hz > 0.0 && cutoff_hz < fs / 2.0) {
        return Err(AppError::Numerical(
            "lowpass_taps: cutoff must lie inside (0, fs/2)".into(),
        ));
    }
    let m = (n_taps - 1) as f64 / 2.0;
    let fc = cutoff_hz / fs;
    let mut taps: Vec<f64> = (0..n_taps)
        .map(|i| {
            let t = i as f64 - m;
            let sinc = if t == 0.0 {
                2.0 * fc
            } else {
                (TAU * fc * t).sin() / (std::f64::consts::PI * t)
            };
            let w = 0.42 - 0.5 * (TAU * i as f64 / (n_taps - 1) as f64).cos()
                + 0.08 * (2.0 * TAU * i as f64 / (n_taps - 1) as f64).cos();
            sinc * w
        })
        .collect();
    let sum: f64 = taps.iter().sum();
    for t in taps.iter_mut() {
        *t /= sum;
    }
    Ok(taps)
}

/// Magnitude of the filter's frequency response at one frequency.
pub fn tap_response(taps: &[f64], freq_hz: f64, fs: f64) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, t) in taps.iter().enumerate() {
        acc += t * Complex64::from_polar(1.0, -TAU * freq_hz * i as f64 / fs);
    }
    acc.norm()
}

/// Mix a raw record down by `f_if`, lowpass with `taps`, and keep every
/// `decim`-th sample. The factor 2 in the mixer undoes the 1/2 that
/// splitting a real tone into counter-rotating halves costs, so a tone
/// `A cos(2 pi f_if t + phi)` lands at DC as the constant `A exp(i phi)`.
pub fn demodulate(
    x: &[f64],
    fs: f64,
    f_if: f64,
    taps: &[f64],
    decim: usize,
) -> Result<Baseband, AppError> {
    if decim == 0 {
        return Err(AppError::Numerical("demodulate: decimation must be >= 1".into()));
    }
    if x.len() < taps.len() {
        return Err(AppError::Numerical(format!(
            "demodulate: record of {} samples is shorter than the {}-tap filter",
            x.len(),
            taps.len()
        )));
    }
    let mixed: Vec<Complex64> = x
        .iter()
        .enumerate()
        .map(|(n, &v)| {
            let (s, c) = (-TAU * f_if * n as f64 / fs).sin_cos();
            Complex64::new(2.0 * v * c, 2.0 * v * s)
        })
        .collect();

    let n_out = (x.len() - taps.len()) / decim + 1;
    let mut z = Vec::with_capacity(n_out);
    for m in 0..n_out {
        let end = taps.len() - 1 + m * decim;
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, t) in taps.iter().enumerate() {
            acc += *t * mixed[end - j];
        }
        z.push(acc);
    }
    let group_delay = (taps.len() - 1) as f64 / 2.0;
    Ok(Baseband {
        fs_hz: fs / decim as f64,
        t0_s: group_delay / fs,
        z,
        phase_correction_rad: 0.0,
    })
}

/// Rotate the record so the carrier (the DC component of the baseband) is
/// real and positive, and return the rotation applied.
///
/// The carrier phase is read from a boxcar average of the requested
/// equivalent noise bandwidth. A bandwidth narrower than `1 / T` needs a
/// boxcar longer than the record, so the estimate saturates to the global
/// mean and the whole trace gets one common rotation; a wider bandwidth
/// tracks slow phase drift with a sliding boxcar.
pub fn correct_carrier_phase(bb: &mut Baseband, enbw_hz: f64) -> Result<f64, AppError> {
    if !(enbw_hz > 0.0) {
        return Err(AppError::Numerical("carrier phase: bandwidth must be > 0".into()));
    }
    if bb.z.is_empty() {
        return Err(AppError::Numerical("carrier phase: empty record".into()));
    }
    let len = bb.z.len();
    let box_len = (bb.fs_hz / enbw_hz).round() as usize;
    if box_len >= len {
        let mean: Complex64 = bb.z.iter().sum::<Complex64>() / len as f64;
        let phi = mean.arg();
        let rot = Complex64::from_polar(1.0, -phi);
        for z in bb.z.iter_mut() {
            *z *= rot;
        }
        bb.phase_correction_rad = phi;
        return Ok(phi);
    }
    // Sliding boxcar: rotate each sample by the local carrier phase.
    let half = box_len / 2;
    let mut prefix = Vec::with_capacity(len + 1);
    prefix.push(Complex64::new(0.0, 0.0));
    for z in bb.z.iter() {
        let last = *prefix.last().unwrap();
        prefix.push(last + z);
    }
    let mut mean_phi = 0.0;
    for m in 0..len {
        let lo = m.saturating_sub(half);
        let hi = (m + half + 1).min(len);
        let local = (prefix[hi] - prefix[lo]) / (hi - lo) as f64;
        let phi = local.arg();
        bb.z[m] *= Complex64::from_polar(1.0, -phi);
        mean_phi += phi;
    }
    mean_phi /= len as f64;
    bb.phase_correction_rad = mean_phi;
    Ok(mean_phi)
}

/// Complex tone amplitude of a real record at one frequency:
/// `(2 / N) sum x_n exp(+i 2 pi f t_n)`, with the record mean removed
/// first and the sum trimmed to an integer number of cycles when
/// possible. A tone `A cos(2 pi f t + phi)` reads `A exp(-i phi)`; the
/// lock-in convention reports its phase as `-arg`.
pub fn superheterodyne(x: &[f64], fs: f64, t0: f64, freq_hz: f64) -> Result<Complex64, AppError> {
    if x.is_empty() {
        return Err(AppError::Numerical("superheterodyne: empty record".into()));
    }
    if !(freq_hz > 0.0) || freq_hz >= fs / 2.0 {
        return Err(AppError::Numerical(
            "superheterodyne: frequency must lie inside (0, fs/2)".into(),
        ));
    }
    let n = x.len();
    let cycles = (n as f64 / fs * freq_hz).floor();
    let n_used = if cycles >= 1.0 {
        ((cycles * fs / freq_hz).floor() as usize).clamp(1, n)
    } else {
        n
    };
    let mean: f64 = x[..n_used].iter().sum::<f64>() / n_used as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for (m, &v) in x[..n_used].iter().enumerate() {
        let t = t0 + m as f64 / fs;
        acc += (v - mean) * Complex64::from_polar(1.0, TAU * freq_hz * t);
    }
    Ok(2.0 * acc / n_used as f64)
}

/// Lock-in readout of both baseband channels at a drive frequency:
/// returns the complex tone amplitudes seen by the amplitude and phase
/// quadratures.
pub fn lockin(bb: &Baseband, freq_hz: f64) -> Result<(Complex64, Complex64), AppError> {
    let i = superheterodyne(&bb.i_channel(), bb.fs_hz, bb.t0_s, freq_hz)?;
    let q = superheterodyne(&bb.q_channel(), bb.fs_hz, bb.t0_s, freq_hz)?;
    Ok((i, q))
}

#[cfg(test)]
mod tests {
    use super::*;

    const FS: f64 = 80e6;
    const F_IF: f64 = 10e6;

    fn taps() -> Vec<f64> {
        lowpass_taps(2561, 0.8e6, FS).unwrap()
    }

    #[test]
    fn filter_gain_profile() {
        let t = taps();
        assert!((t.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((tap_response(&t, 100e3, FS) - 1.0).abs() < 1e-3);
        assert!((tap_response(&t, 500e3, FS) - 1.0).abs() < 1e-3);
        assert!(tap_response(&t, 2e6, FS) < 1e-3);
        assert!(tap_response(&t, 20e6, FS) < 1e-3);
    }

    #[test]
    fn carrier_lands_at_dc_with_its_phase() {
        let phi = 0.7;
        let a = 3.0e-5;
        let x: Vec<f64> = (0..80_000)
            .map(|n| a * (TAU * F_IF * n as f64 / FS + phi).cos())
            .collect();
        let bb = demodulate(&x, FS, F_IF, &taps(), 40).unwrap();
        let mid = bb.z[bb.z.len() / 2];
        assert!((mid.norm() - a).abs() < 1e-9 * a.max(1.0));
        assert!((mid.arg() - phi).abs() < 1e-9);
    }

    #[test]
    fn phase_correction_makes_carrier_real_and_preserves_power() {
        let phi = -1.2;
        let x: Vec<f64> = (0..80_000)
            .map(|n| {
                let t = n as f64 / FS;
                2e-5 * (TAU * F_IF * t + phi).cos()
                    + 1e-6 * (TAU * 100e3 * t).cos() * (TAU * F_IF * t + phi).cos()
            })
            .collect();
        let mut bb = demodulate(&x, FS, F_IF, &taps(), 40).unwrap();
        let power_before: f64 = bb.z.iter().map(|z| z.norm_sqr()).sum();
        let got = correct_carrier_phase(&mut bb, 10.0).unwrap();
        assert!((got - phi).abs() < 1e-6, "recovered {got}");
        let power_after: f64 = bb.z.iter().map(|z| z.norm_sqr()).sum();
        assert!((power_after / power_before - 1.0).abs() < 1e-12);
        let mean: Complex64 = bb.z.iter().sum::<Complex64>() / bb.z.len() as f64;
        assert!(mean.im.abs() < 1e-12 * mean.re);
        assert!(mean.re > 0.0);
    }

    #[test]
    fn quadrature_tones_read_out_their_complex_amplitude() {
        // Amplitude tone m cos(wd t) and phase tone with a 40 degree lag.
        let m_am = 4.0e-7;
        let m_pm = 2.5e-7;
        let lag = 40f64.to_radians();
        let fd = 100e3;
        let x: Vec<f64> = (0..400_000)
            .map(|n| {
                let t = n as f64 / FS;
                let a = m_am * (TAU * fd * t).cos();
                let p = m_pm * (TAU * fd * t + lag).cos();
                let carrier = 1e-5;
                (carrier + a) * (TAU * F_IF * t).cos() - p * (TAU * F_IF * t).sin()
            })
            .collect();
        let bb = demodulate(&x, FS, F_IF, &taps(), 40).unwrap();
        let (zi, zq) = lockin(&bb, fd).unwrap();
        // A cos(w t + phi) reads A exp(-i phi); magnitude tolerance covers
        // the filter's passband ripple.
        assert!((zi.norm() - m_am).abs() < 2e-3 * m_am, "am {}", zi.norm());
        assert!(zi.arg().abs() < 1e-4);
        assert!((zq.norm() - m_pm).abs() < 2e-3 * m_pm, "pm {}", zq.norm());
        assert!((zq.arg() + lag).abs() < 1e-4);
    }

    #[test]
    fn demodulation_is_linear() {
        let x1: Vec<f64> = (0..20_000)
            .map(|n| ((n * 7919) % 1000) as f64 / 1000.0 - 0.5)
            .collect();
        let x2: Vec<f64> = (0..20_000)
            .map(|n| ((n * 104_729) % 1000) as f64 / 1000.0 - 0.5)
            .collect();
        let both: Vec<f64> = x1.iter().zip(x2.iter()).map(|(a, b)| 2.0 * a - 3.0 * b).collect();
        let t = taps();
        let b1 = demodulate(&x1, FS, F_IF, &t, 40).unwrap();
        let b2 = demodulate(&x2, FS, F_IF, &t, 40).unwrap();
        let bb = demodulate(&both, FS, F_IF, &t, 40).unwrap();
        for ((a, b), c) in b1.z.iter().zip(b2.z.iter()).zip(bb.z.iter()) {
            let lin = 2.0 * a - 3.0 * b;
            assert!((lin - c).norm() <= 1e-12 * lin.norm().max(1.0));
        }
    }

    #[test]
    fn output_length_and_time_base() {
        let x = vec![0.0; 100_000];
        let t = taps();
        let bb = demodulate(&x, FS, F_IF, &t, 40).unwrap();
        assert_eq!(bb.z.len(), (100_000 - 2561) / 40 + 1);
        assert_eq!(bb.fs_hz, 2e6);
        assert!((bb.t0_s - 1280.0 / FS).abs() < 1e-18);
    }
}
