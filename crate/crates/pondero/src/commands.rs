//! Subcommand implementations, separated from argument parsing so tests
//! can drive them directly.

use std::f64::consts::TAU;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Map};

use pondero_core::{
    detection, fit, model, network, DetuningJitter, FitStatus, GainMode, QuadratureSpectrum,
    SystemParams,
};

use crate::config::{self, Config};
use crate::logging;
use crate::report::{self, OutputFormat, Table};
use crate::synth::{ColoredModel, DriveTone, RecordSpec};
use crate::tracefile::{self, DriveMeta, TraceMeta};
use crate::{pipeline, AppError};

/// Where and how a command writes its result.
#[derive(Debug, Clone)]
pub struct OutputOptions {
    /// Target file; stdout when absent.
    pub path: Option<PathBuf>,
    pub format: OutputFormat,
}

impl OutputOptions {
    fn write(&self, command: &str, table: &Table, extra: Map<String, serde_json::Value>) -> Result<(), AppError> {
        let mut sink: Box<dyn Write> = match &self.path {
            Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p)?)),
            None => Box::new(std::io::stdout()),
        };
        match self.format {
            OutputFormat::Csv => report::write_csv(&mut sink, table),
            OutputFormat::Json => report::write_json(&mut sink, command, table, extra),
        }
    }
}

/// Run a closure inside a rayon pool of the requested size, or inline
/// when no worker count is given.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, AppError> {
    match workers {
        None => Ok(f()),
        Some(0) => Err(AppError::Config("--workers must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| AppError::Config(format!("worker pool: {e}")))
            .map(|pool| pool.install(f)),
    }
}

/// Closed-loop gain over the configured grid, both gain variants side by
/// side, with the light-induced damping curve.
pub fn run_gain(cfg: &Config, out: &OutputOptions) -> Result<(), AppError> {
    let p = cfg.system.to_params()?;
    let freqs = cfg.require_grid("gain")?.freqs_rad()?;
    let mut table = Table::new(vec![
        "freq_hz",
        "full_re",
        "full_im",
        "full_abs",
        "simplified_re",
        "simplified_im",
        "simplified_abs",
        "gamma_opt_hz",
    ]);
    for &w in &freqs {
        let gf = model::gain(&p, w, GainMode::Full)?;
        let gs = model::gain(&p, w, GainMode::Simplified)?;
        let gopt = model::optomechanical_damping(&p, w)?;
        table.push(vec![
            w / TAU,
            gf.re,
            gf.im,
            gf.norm(),
            gs.re,
            gs.im,
            gs.norm(),
            gopt / TAU,
        ]);
    }
    let mut extra = Map::new();
    let ws = model::shifted_frequency(&p)?;
    extra.insert("omega_s_hz".into(), json!(ws / TAU));
    extra.insert("cooperativity".into(), json!(model::cooperativity(&p)));
    logging::info(format!("gain: {} points, omega_s = {:.1} Hz", freqs.len(), ws / TAU));
    out.write("gain", &table, extra)
}

/// Drive response of the modulation network with magnitude and unwrapped
/// lock-in phase, plus crossing and stability summaries.
pub fn run_network(cfg: &Config, out: &OutputOptions) -> Result<(), AppError> {
    let p = cfg.system.to_params()?;
    let freqs = cfg.require_grid("network")?.freqs_rad()?;
    let net_cfg = cfg.network.clone().unwrap_or_default();
    let mode = config::parse_mode(&net_cfg.mode)?;
    let resp = network::drive_response_in(&p, &freqs, mode)?;
    let profile = network::phase_profile(&resp);
    let mut table = Table::new(vec![
        "freq_hz",
        "am_re",
        "am_im",
        "am_db",
        "am_phase_deg",
        "pm_re",
        "pm_im",
        "pm_db",
        "pm_phase_deg",
    ]);
    for i in 0..freqs.len() {
        table.push(vec![
            freqs[i] / TAU,
            resp.am[i].re,
            resp.am[i].im,
            profile.am_db[i],
            profile.am_phase_deg[i],
            resp.pm[i].re,
            resp.pm[i].im,
            profile.pm_db[i],
            profile.pm_phase_deg[i],
        ]);
    }
    let stability = network::stability_scan_in(&p, &freqs, mode)?;
    let to_hz = |v: Vec<f64>| -> Vec<f64> { v.into_iter().map(|w| w / TAU).collect() };
    let mut extra = Map::new();
    if let Some((w, db)) = profile.am_max() {
        extra.insert("am_peak_hz".into(), json!(w / TAU));
        extra.insert("am_peak_db".into(), json!(db));
    }
    if let Some((w, db)) = profile.am_min() {
        extra.insert("am_notch_hz".into(), json!(w / TAU));
        extra.insert("am_notch_db".into(), json!(db));
    }
    extra.insert(
        "am_zero_phase_crossings_hz".into(),
        json!(to_hz(profile.am_phase_crossings(0.0))),
    );
    extra.insert(
        "pm_inversion_crossings_hz".into(),
        json!(to_hz(profile.pm_phase_crossings(-180.0))),
    );
    let stable = stability.is_empty();
    extra.insert("spring_unstable".into(), json!(stability.spring_unstable));
    extra.insert(
        "flagged_frequencies_hz".into(),
        json!(to_hz(stability.flagged)),
    );
    logging::info(format!(
        "network: {} points, mode {}, stable: {}",
        freqs.len(),
        net_cfg.mode,
        stable
    ));
    out.write("network", &table, extra)
}

/// Detected quadrature noise relative to shot over an angle and frequency
/// grid (a single-angle spectrum when one angle is configured).
pub fn run_squeeze(cfg: &Config, out: &OutputOptions, workers: Option<usize>) -> Result<(), AppError> {
    let p = cfg.system.to_params()?;
    let chain = cfg.detection.to_chain()?;
    let jitter = config::jitter_or_fixed(&cfg.jitter, &p)?;
    let freqs = cfg.require_grid("squeeze")?.freqs_rad()?;
    let sq = cfg.squeeze.clone().unwrap_or_default();
    let mode = config::parse_mode(&sq.mode)?;
    let thetas = sq.thetas_rad()?;

    let rows: Vec<Result<QuadratureSpectrum, AppError>> = with_workers(workers, || {
        thetas
            .par_iter()
            .map(|&th| {
                detection::detected_relative(&p, &chain, &jitter, th, &freqs, mode)
                    .map_err(AppError::from)
            })
            .collect()
    })?;

    let mut table = Table::new(vec!["theta_deg", "freq_hz", "detected_rel"]);
    let mut global: Option<(f64, f64, f64)> = None;
    for (th, row) in thetas.iter().zip(rows) {
        let row = row?;
        for (w, v) in row.freqs.iter().zip(row.psd.iter()) {
            table.push(vec![th.to_degrees(), w / TAU, *v]);
            if global.map_or(true, |(g, _, _)| *v < g) {
                global = Some((*v, th.to_degrees(), w / TAU));
            }
        }
    }
    let mut extra = Map::new();
    if let Some((v, th, f)) = global {
        extra.insert("min_value".into(), json!(v));
        extra.insert("min_theta_deg".into(), json!(th));
        extra.insert("min_freq_hz".into(), json!(f));
        logging::info(format!("squeeze: minimum {v:.6} at {th:.1} deg, {f:.0} Hz"));
    }
    extra.insert("shot_level".into(), json!(chain.shot_level()));
    out.write("squeeze", &table, extra)
}

/// Synthesize one raw heterodyne record and write it as a trace pair.
pub fn run_synth(cfg: &Config, trace_out: &Path, seed_override: Option<u64>) -> Result<(), AppError> {
    let synth_cfg = cfg.synth.clone().unwrap_or_default();
    let p = if synth_cfg.empty_cavity {
        cfg.system.to_empty_params()?
    } else {
        cfg.system.to_params()?
    };
    let chain = cfg.detection.to_chain()?;
    let jitter = config::jitter_or_fixed(&cfg.jitter, &p)?;
    let n = synth_cfg.n_samples()?;
    let seed = seed_override.unwrap_or(synth_cfg.seed);

    let model = ColoredModel::from_system(
        &p,
        &chain,
        &jitter,
        GainMode::Full,
        n,
        synth_cfg.sample_rate_hz,
        synth_cfg.colored_band_hz,
    )?
    .with_band_limit(synth_cfg.carrier_freq_hz);
    let drive = match synth_cfg.drive {
        None => None,
        Some(d) => {
            let (t_am, t_pm) = network::drive_point(&p, TAU * d.freq_hz, network::NETWORK_MODE)?;
            Some(DriveTone {
                freq_hz: d.freq_hz,
                am_depth: d.am_depth,
                t_am,
                t_pm,
            })
        }
    };
    let spec = RecordSpec {
        model: &model,
        carrier_amplitude: synth_cfg.carrier_amplitude,
        carrier_freq_hz: synth_cfg.carrier_freq_hz,
        carrier_phase_rad: synth_cfg.carrier_phase_deg.to_radians(),
        drive,
        seed,
    };
    let samples = crate::synth::synthesize_record(&spec);
    let meta = TraceMeta {
        format_version: crate::FORMAT_VERSION,
        sample_rate_hz: synth_cfg.sample_rate_hz,
        n_samples: samples.len() as u64,
        seed,
        carrier_freq_hz: synth_cfg.carrier_freq_hz,
        carrier_amplitude: synth_cfg.carrier_amplitude,
        carrier_phase_deg: synth_cfg.carrier_phase_deg,
        colored_band_hz: synth_cfg.colored_band_hz,
        empty_cavity: synth_cfg.empty_cavity,
        shot_level: chain.shot_level(),
        efficiency: chain.efficiency(),
        drive: synth_cfg.drive.map(|d| DriveMeta {
            freq_hz: d.freq_hz,
            am_depth: d.am_depth,
        }),
    };
    tracefile::write_trace(trace_out, &samples, &meta)?;
    logging::info(format!(
        "synth: {} samples at {} MS/s, seed {seed} -> {}",
        samples.len(),
        synth_cfg.sample_rate_hz / 1e6,
        trace_out.display()
    ));
    Ok(())
}

/// Demodulate a trace and report the quadrature spectra (and the drive
/// tone, when the trace carries one).
pub fn run_demod(cfg: &Config, trace: &Path, out: &OutputOptions) -> Result<(), AppError> {
    let demod_cfg = cfg.demod.clone().unwrap_or_default();
    let (samples, meta) = tracefile::read_trace(trace)?;
    let bb = pipeline::demodulate_record(
        &samples,
        meta.sample_rate_hz,
        meta.carrier_freq_hz,
        &demod_cfg,
    )?;
    let (psd_i, psd_q) = pipeline::quadrature_psds(&bb, demod_cfg.nperseg)?;
    let mut table = Table::new(vec!["freq_hz", "psd_i", "psd_q"]);
    for i in 0..psd_i.freqs_hz.len() {
        table.push(vec![psd_i.freqs_hz[i], psd_i.psd[i], psd_q.psd[i]]);
    }
    let mut extra = Map::new();
    extra.insert("shot_level".into(), json!(meta.shot_level));
    extra.insert("baseband_rate_hz".into(), json!(bb.fs_hz));
    extra.insert(
        "carrier_phase_correction_deg".into(),
        json!(bb.phase_correction_rad.to_degrees()),
    );
    extra.insert("welch_segments".into(), json!(psd_i.segments));
    if let Some(d) = meta.drive {
        let (z_am, z_pm) = crate::demod::lockin(&bb, d.freq_hz)?;
        extra.insert("drive_freq_hz".into(), json!(d.freq_hz));
        extra.insert(
            "tone_am".into(),
            json!({
                "re": z_am.re, "im": z_am.im,
                "abs": z_am.norm(), "phase_deg": (-z_am.arg()).to_degrees()
            }),
        );
        extra.insert(
            "tone_pm".into(),
            json!({
                "re": z_pm.re, "im": z_pm.im,
                "abs": z_pm.norm(), "phase_deg": (-z_pm.arg()).to_degrees()
            }),
        );
    }
    logging::info(format!(
        "demod: {} baseband samples, {} Welch segments",
        bb.z.len(),
        psd_i.segments
    ));
    out.write("demod", &table, extra)
}

fn fit_status_name(s: FitStatus) -> &'static str {
    match s {
        FitStatus::Converged => "converged",
        FitStatus::MaxIterations => "max_iterations",
        FitStatus::Singular => "singular",
    }
}

/// Fit a stored spectrum or network response with the configured model.
pub fn run_fit(cfg: &Config, input: &Path, out: &OutputOptions) -> Result<(), AppError> {
    let fit_cfg = cfg
        .fit
        .as_ref()
        .ok_or_else(|| AppError::Config("[fit] section required by `fit`".into()))?;
    let base = cfg.system.to_params()?;
    let masks = fit_cfg.masks_rad();
    let (header, rows) = report::read_csv(input)?;
    if rows.is_empty() {
        return Err(AppError::Config(format!("{}: no data rows", input.display())));
    }

    let (result, table) = match fit_cfg.kind.as_str() {
        "pm" => {
            let spec = spectrum_from_rows(&header, &rows, fit_cfg.value_column.as_deref(), input)?;
            let chain = cfg.detection.to_chain()?;
            let res = fit::fit_pm_spectrum(&spec, &base, &chain, &masks)?;
            let mut t = Table::new(vec![
                "omega_s_hz",
                "gamma_m_hz",
                "sigma_delta_over_kappa",
                "amplitude",
            ]);
            t.push(vec![
                res.estimates[0] / TAU,
                res.estimates[1] / TAU,
                res.estimates[2],
                res.estimates[3],
            ]);
            t.push(vec![
                res.uncertainties[0] / TAU,
                res.uncertainties[1] / TAU,
                res.uncertainties[2],
                res.uncertainties[3],
            ]);
            (res, t)
        }
        "network" => {
            if header.len() < 5 {
                return Err(AppError::Config(format!(
                    "{}: network fit needs columns freq_hz, am_re, am_im, pm_re, pm_im",
                    input.display()
                )));
            }
            // Column order as written by `network`: freq, am_re, am_im,
            // then possibly derived columns; pm_re/pm_im are found by
            // header name to stay robust.
            let col = |name: &str| -> Result<usize, AppError> {
                header
                    .iter()
                    .position(|h| h == name)
                    .ok_or_else(|| AppError::Config(format!("{}: missing column {name}", input.display())))
            };
            let (cf, car, cai, cpr, cpi) = (
                col("freq_hz")?,
                col("am_re")?,
                col("am_im")?,
                col("pm_re")?,
                col("pm_im")?,
            );
            let freqs: Vec<f64> = rows.iter().map(|r| TAU * r[cf]).collect();
            let am: Vec<Complex64> = rows.iter().map(|r| Complex64::new(r[car], r[cai])).collect();
            let pm: Vec<Complex64> = rows.iter().map(|r| Complex64::new(r[cpr], r[cpi])).collect();
            let resp = network::DriveResponse { freqs, am, pm };
            let res = fit::fit_network(&resp, &base)?;
            let mut t = Table::new(vec!["omega_s_hz", "gamma_m_hz"]);
            t.push(vec![res.estimates[0] / TAU, res.estimates[1] / TAU]);
            t.push(vec![res.uncertainties[0] / TAU, res.uncertainties[1] / TAU]);
            (res, t)
        }
        "brownian" => {
            let spec = spectrum_from_rows(&header, &rows, fit_cfg.value_column.as_deref(), input)?;
            let res = fit::fit_brownian(&spec, &masks)?;
            let mut t = Table::new(vec!["coefficient"]);
            t.push(vec![res.estimates[0]]);
            t.push(vec![res.uncertainties[0]]);
            (res, t)
        }
        other => {
            return Err(AppError::Config(format!(
                "[fit] unknown kind `{other}` (expected `pm`, `network`, or `brownian`)"
            )))
        }
    };

    let mut extra = Map::new();
    extra.insert("status".into(), json!(fit_status_name(result.status)));
    extra.insert("iterations".into(), json!(result.iterations));
    extra.insert("residual_norm".into(), json!(result.residual_norm));
    extra.insert(
        "row_meaning".into(),
        json!(["estimates", "one_sigma_uncertainties"]),
    );
    logging::info(format!(
        "fit {}: {} after {} iterations, residual {:.3e}",
        fit_cfg.kind,
        fit_status_name(result.status),
        result.iterations,
        result.residual_norm
    ));
    out.write("fit", &table, extra)
}

/// Pull a `(freq_hz, value)` spectrum out of a CSV. The frequency column
/// is the one headed `freq_hz` (column 0 otherwise); the value column is
/// the named one, or the column right after the frequency.
fn spectrum_from_rows(
    header: &[String],
    rows: &[Vec<f64>],
    value_column: Option<&str>,
    path: &Path,
) -> Result<QuadratureSpectrum, AppError> {
    if header.len() < 2 {
        return Err(AppError::Config(format!(
            "{}: need at least two columns (freq_hz, value)",
            path.display()
        )));
    }
    let f_idx = header.iter().position(|h| h == "freq_hz").unwrap_or(0);
    let v_idx = match value_column {
        Some(name) => header.iter().position(|h| h == name).ok_or_else(|| {
            AppError::Config(format!("{}: no column named {name}", path.display()))
        })?,
        None => f_idx + 1,
    };
    if v_idx >= header.len() {
        return Err(AppError::Config(format!(
            "{}: no value column after the frequency column",
            path.display()
        )));
    }
    let freqs: Vec<f64> = rows.iter().map(|r| TAU * r[f_idx]).collect();
    let psd: Vec<f64> = rows.iter().map(|r| r[v_idx]).collect();
    Ok(QuadratureSpectrum::new(freqs, psd)?)
}

/// Spectrum synthesis helper shared by tests and the Monte Carlo checks:
/// synthesize, demodulate, and return the quadrature spectra of one seed.
pub fn synth_and_analyze(
    p: &SystemParams,
    chain: &pondero_core::DetectionChain,
    jitter: &DetuningJitter,
    synth_cfg: &config::SynthConfig,
    demod_cfg: &config::DemodConfig,
    seed: u64,
) -> Result<(crate::welch::WelchPsd, crate::welch::WelchPsd), AppError> {
    let n = synth_cfg.n_samples()?;
    let model = ColoredModel::from_system(
        p,
        chain,
        jitter,
        GainMode::Full,
        n,
        synth_cfg.sample_rate_hz,
        synth_cfg.colored_band_hz,
    )?
    .with_band_limit(synth_cfg.carrier_freq_hz);
    let spec = RecordSpec {
        model: &model,
        carrier_amplitude: synth_cfg.carrier_amplitude,
        carrier_freq_hz: synth_cfg.carrier_freq_hz,
        carrier_phase_rad: synth_cfg.carrier_phase_deg.to_radians(),
        drive: None,
        seed,
    };
    let x = crate::synth::synthesize_record(&spec);
    let bb = pipeline::demodulate_record(&x, synth_cfg.sample_rate_hz, synth_cfg.carrier_freq_hz, demod_cfg)?;
    pipeline::quadrature_psds(&bb, demod_cfg.nperseg)
}
