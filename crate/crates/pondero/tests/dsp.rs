//! End-to-end checks of the synthesis and demodulation chain against the
//! spectra it is built to realize.

use std::f64::consts::TAU;

use num_complex::Complex64;
use pondero::config::DemodConfig;
use pondero::pipeline::{demodulate_record, quadrature_psds, tone_response};
use pondero::synth::{ColoredModel, DriveTone, RecordSpec};
use pondero::welch::welch;
use pondero_core::{DetectionChain, DetuningJitter, GainMode, SystemParams};

fn quantum_params() -> SystemParams {
    SystemParams::from_shifted_frequency(
        TAU * 1.8e6,
        -0.575 * TAU * 1.8e6,
        TAU * 155.5e3,
        TAU * 3.2e3,
        TAU * 140.8e3,
        6.0,
    )
    .unwrap()
}

fn jitter() -> DetuningJitter {
    DetuningJitter::new(-0.575, 0.14, 15).unwrap()
}

const FS: f64 = 80e6;
const F_IF: f64 = 10e6;
const N: usize = 1 << 18;

fn demod_cfg() -> DemodConfig {
    DemodConfig::default()
}

/// Welch of the demodulated quadratures converges to the colored model's
/// per-bin targets across the band, and to the white level outside it.
#[test]
fn colored_record_reproduces_model_spectra() {
    let p = quantum_params();
    let chain = DetectionChain::default();
    let model = ColoredModel::from_system(&p, &chain, &jitter(), GainMode::Full, N, FS, 500e3)
        .unwrap()
        .with_band_limit(F_IF);
    let spec = RecordSpec {
        model: &model,
        carrier_amplitude: 1e-5,
        carrier_freq_hz: F_IF,
        carrier_phase_rad: 0.3,
        drive: None,
        seed: 11,
    };
    let x = pondero::synth::synthesize_record(&spec);
    let bb = demodulate_record(&x, FS, F_IF, &demod_cfg()).unwrap();
    let cfg = demod_cfg();
    let (psd_i, psd_q) = quadrature_psds(&bb, cfg.nperseg).unwrap();

    // Per-bin model targets live on the record's DFT grid; resample them
    // onto the Welch grid by nearest bin (the model is smooth at 1 kHz).
    let df_model = FS / N as f64;
    let target = |freq_hz: f64| {
        let k = (freq_hz / df_model).round() as usize;
        model.bin_targets(k)
    };

    // Colored band: average measured/target per bin; 8 segments per bin
    // and ~200 bins leave a few percent of estimator noise.
    let mut ratio_i = 0.0;
    let mut ratio_q = 0.0;
    let mut count = 0;
    for (i, &f) in psd_i.freqs_hz.iter().enumerate() {
        if !(20e3..=480e3).contains(&f) {
            continue;
        }
        let (t_aa, t_pp) = target(f);
        ratio_i += psd_i.psd[i] / t_aa;
        ratio_q += psd_q.psd[i] / t_pp;
        count += 1;
    }
    let (ri, rq) = (ratio_i / count as f64, ratio_q / count as f64);
    assert!(count > 100);
    assert!((ri - 1.0).abs() < 0.10, "I band ratio {ri}");
    assert!((rq - 1.0).abs() < 0.10, "Q band ratio {rq}");

    // White region inside the anti-alias passband: shot level.
    let n0 = chain.shot_level();
    let white_i = psd_i.band_mean(550e3, 750e3).unwrap() / n0;
    let white_q = psd_q.band_mean(550e3, 750e3).unwrap() / n0;
    assert!((white_i - 1.0).abs() < 0.10, "white I {white_i}");
    assert!((white_q - 1.0).abs() < 0.10, "white Q {white_q}");
}

/// A drive tone injected on top of shot-level noise is recovered by the
/// lock-in ratio against an empty-cavity reference to about a percent.
#[test]
fn tone_recovery_under_shot_noise() {
    let chain = DetectionChain::default();
    let model = ColoredModel::white(N, FS, chain.shot_level()).with_band_limit(F_IF);
    let t_am = Complex64::new(1.9, -0.6);
    let t_pm = Complex64::new(-0.4, 2.3);
    let mk = |t_am, t_pm, seed| {
        let spec = RecordSpec {
            model: &model,
            carrier_amplitude: 1e-5,
            carrier_freq_hz: F_IF,
            carrier_phase_rad: 0.0,
            drive: Some(DriveTone {
                freq_hz: 100e3,
                am_depth: 1e-7,
                t_am,
                t_pm,
            }),
            seed,
        };
        let x = pondero::synth::synthesize_record(&spec);
        demodulate_record(&x, FS, F_IF, &demod_cfg()).unwrap()
    };
    let sig = mk(t_am, t_pm, 21);
    let refr = mk(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), 22);
    let (am, pm) = tone_response(&sig, &refr, 100e3).unwrap();
    assert!((am - t_am).norm() < 0.01 * t_am.norm(), "am {am}");
    assert!((pm - t_pm).norm() < 0.01 * t_pm.norm(), "pm {pm}");
}

/// The full mixer, FIR, and decimation chain is transparent to the noise
/// normalization: a flat record floor reads back flat at the same level.
#[test]
fn demodulation_preserves_white_level()
{
    let n0 = 3.7e-22;
    let model = ColoredModel::white(N, FS, n0).with_band_limit(F_IF);
    let spec = RecordSpec {
        model: &model,
        carrier_amplitude: 1e-5,
        carrier_freq_hz: F_IF,
        carrier_phase_rad: 0.0,
        drive: None,
        seed: 5,
    };
    let x = pondero::synth::synthesize_record(&spec);
    let bb = demodulate_record(&x, FS, F_IF, &demod_cfg()).unwrap();
    let cfg = demod_cfg();
    let (psd_i, psd_q) = quadrature_psds(&bb, cfg.nperseg).unwrap();
    let mi = psd_i.band_mean(50e3, 750e3).unwrap();
    let mq = psd_q.band_mean(50e3, 750e3).unwrap();
    assert!((mi / n0 - 1.0).abs() < 0.05, "{}", mi / n0);
    assert!((mq / n0 - 1.0).abs() < 0.05, "{}", mq / n0);
}

/// Welch applied straight to the synthesized quadratures agrees with
/// Welch applied after riding the carrier and demodulating.
#[test]
fn direct_and_demodulated_spectra_agree() {
    let p = quantum_params();
    let chain = DetectionChain::default();
    let model = ColoredModel::from_system(&p, &chain, &jitter(), GainMode::Full, N, FS, 500e3)
        .unwrap()
        .with_band_limit(F_IF);
    let (a, _) = pondero::synth::synthesize_quadratures(&model, 31);
    let direct = welch(&a, FS, 80_000).unwrap();

    let spec = RecordSpec {
        model: &model,
        carrier_amplitude: 1e-5,
        carrier_freq_hz: F_IF,
        carrier_phase_rad: 0.0,
        drive: None,
        seed: 31,
    };
    let x = pondero::synth::synthesize_record(&spec);
    let bb = demodulate_record(&x, FS, F_IF, &demod_cfg()).unwrap();
    let cfg = demod_cfg();
    let (psd_i, _) = quadrature_psds(&bb, cfg.nperseg).unwrap();

    // Same seed, same underlying process: band averages must agree to
    // well under estimator noise (the records differ only by the FIR's
    // passband ripple and segment layout).
    for (lo, hi) in [(30e3, 120e3), (130e3, 180e3), (250e3, 450e3)] {
        let d = direct.band_mean(lo, hi).unwrap();
        let m = psd_i.band_mean(lo, hi).unwrap();
        assert!(
            (d / m - 1.0).abs() < 0.12,
            "band {lo}-{hi}: direct {d}, demod {m}"
        );
    }
}
