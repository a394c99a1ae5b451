//! TOML configuration shared by all subcommands.
//!
//! Every frequency key in a config file is an ordinary frequency in Hz
//! (the core crate works in rad/s; conversion happens here). Unknown keys
//! are rejected so typos fail loudly.

use std::f64::consts::TAU;
use std::path::Path;

use pondero_core::{DetectionChain, DetuningJitter, GainMode, SystemParams};
use serde::Deserialize;

use crate::AppError;

/// Root of a config file. Only `[system]` is always required; commands
/// demand the sections they need.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub system: SystemConfig,
    #[serde(default)]
    pub detection: DetectionConfig,
    pub jitter: Option<JitterConfig>,
    pub grid: Option<GridConfig>,
    pub network: Option<NetworkConfig>,
    pub squeeze: Option<SqueezeConfig>,
    pub synth: Option<SynthConfig>,
    pub demod: Option<DemodConfig>,
    pub fit: Option<FitConfig>,
}

impl Config {
    /// Read and parse a config file.
    pub fn load(path: &Path) -> Result<Config, AppError> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| AppError::Config(format!("{}: {e}", path.display())))
    }

    /// The `[grid]` section, or an error naming the command that needs it.
    pub fn require_grid(&self, command: &str) -> Result<&GridConfig, AppError> {
        self.grid
            .as_ref()
            .ok_or_else(|| AppError::Config(format!("[grid] section required by `{command}`")))
    }
}

/// Physical system, `[system]`.
///
/// The light-mechanics coupling is given either microscopically
/// (`g_om_hz` with `n_bar`) or through the spring-shifted mechanical
/// frequency it produces (`omega_s_hz`); exactly one of the two.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// Cavity half linewidth, Hz.
    pub kappa_hz: f64,
    /// Probe detuning from cavity resonance, Hz (signed).
    pub delta_hz: f64,
    /// Bare mechanical resonance, Hz.
    pub omega_m_hz: f64,
    /// Intrinsic mechanical damping, Hz.
    pub gamma_m_hz: f64,
    /// Mean intracavity photon number.
    pub n_bar: f64,
    /// Optomechanical coupling rate, Hz.
    pub g_om_hz: Option<f64>,
    /// Spring-shifted mechanical frequency, Hz.
    pub omega_s_hz: Option<f64>,
    /// Scale of the light-induced damping curve (default 0.5).
    pub damping_scale: Option<f64>,
    /// Relative pole guard width (default 1e-9).
    pub pole_epsilon: Option<f64>,
}

impl SystemConfig {
    /// Build validated core parameters.
    pub fn to_params(&self) -> Result<SystemParams, AppError> {
        let mut p = match (self.g_om_hz, self.omega_s_hz) {
            (Some(_), Some(_)) => {
                return Err(AppError::Config(
                    "[system] specify either g_om_hz or omega_s_hz, not both".into(),
                ))
            }
            (None, None) => {
                return Err(AppError::Config(
                    "[system] one of g_om_hz or omega_s_hz is required".into(),
                ))
            }
            (Some(g), None) => SystemParams::new(
                TAU * self.kappa_hz,
                TAU * self.delta_hz,
                TAU * self.omega_m_hz,
                TAU * self.gamma_m_hz,
                TAU * g,
                self.n_bar,
            )?,
            (None, Some(ws)) => SystemParams::from_shifted_frequency(
                TAU * self.kappa_hz,
                TAU * self.delta_hz,
                TAU * self.omega_m_hz,
                TAU * self.gamma_m_hz,
                TAU * ws,
                self.n_bar,
            )?,
        };
        if let Some(s) = self.damping_scale {
            if !s.is_finite() || s < 0.0 {
                return Err(AppError::Config("damping_scale must be finite and >= 0".into()));
            }
            p = p.with_damping_scale(s);
        }
        if let Some(e) = self.pole_epsilon {
            if !(e > 0.0) {
                return Err(AppError::Config("pole_epsilon must be > 0".into()));
            }
            p = p.with_pole_epsilon(e);
        }
        Ok(p)
    }

    /// Same cavity and mechanics with the light switched off (used for
    /// empty-cavity reference traces and responses).
    pub fn to_empty_params(&self) -> Result<SystemParams, AppError> {
        let p = self.to_params()?;
        Ok(SystemParams::new(p.kappa, p.delta, p.omega_m, p.gamma_m, 0.0, 0.0)?
            .with_damping_scale(p.damping_scale)
            .with_pole_epsilon(p.pole_epsilon))
    }
}

fn default_eps_cav() -> f64 {
    DetectionChain::default().eps_cav
}
fn default_eps_det() -> f64 {
    DetectionChain::default().eps_det
}
fn default_p_lo() -> f64 {
    DetectionChain::default().p_lo
}
fn default_lo_frequency_hz() -> f64 {
    DetectionChain::default().omega_lo / TAU
}

/// Heterodyne receiver, `[detection]`. Every field has the default of the
/// reference chain, so the whole section may be omitted.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionConfig {
    /// Cavity-to-receiver efficiency.
    #[serde(default = "default_eps_cav")]
    pub eps_cav: f64,
    /// Photodiode quantum efficiency.
    #[serde(default = "default_eps_det")]
    pub eps_det: f64,
    /// Local oscillator power, W.
    #[serde(default = "default_p_lo")]
    pub p_lo_w: f64,
    /// Local oscillator optical frequency, Hz.
    #[serde(default = "default_lo_frequency_hz")]
    pub lo_frequency_hz: f64,
    /// Electronic dark floor, W^2/Hz.
    #[serde(default)]
    pub detector_floor: f64,
    /// Calibrated shot-noise record level, W^2/Hz, overriding the LO
    /// estimate.
    pub shot_anchor: Option<f64>,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        DetectionConfig {
            eps_cav: default_eps_cav(),
            eps_det: default_eps_det(),
            p_lo_w: default_p_lo(),
            lo_frequency_hz: default_lo_frequency_hz(),
            detector_floor: 0.0,
            shot_anchor: None,
        }
    }
}

impl DetectionConfig {
    /// Build and validate the core chain.
    pub fn to_chain(&self) -> Result<DetectionChain, AppError> {
        let chain = DetectionChain {
            eps_cav: self.eps_cav,
            eps_det: self.eps_det,
            p_lo: self.p_lo_w,
            omega_lo: TAU * self.lo_frequency_hz,
            detector_floor: self.detector_floor,
            shot_anchor: self.shot_anchor,
        };
        chain.validate()?;
        Ok(chain)
    }
}

fn default_n_points() -> usize {
    15
}

/// Slow detuning wander, `[jitter]`. When absent, commands use a frozen
/// detuning (no averaging).
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JitterConfig {
    /// Mean detuning over kappa; defaults to the system detuning.
    pub mean_delta_over_kappa: Option<f64>,
    /// Detuning standard deviation over kappa.
    pub sigma_over_kappa: f64,
    /// Gauss-Hermite nodes for the average.
    #[serde(default = "default_n_points")]
    pub n_points: usize,
}

impl JitterConfig {
    /// Build the core jitter description against a parameter set.
    pub fn to_jitter(&self, p: &SystemParams) -> Result<DetuningJitter, AppError> {
        let mean = self
            .mean_delta_over_kappa
            .unwrap_or(p.delta / p.kappa);
        Ok(DetuningJitter::new(mean, self.sigma_over_kappa, self.n_points)?)
    }
}

/// Frozen-detuning fallback used when `[jitter]` is absent.
pub fn jitter_or_fixed(cfg: &Option<JitterConfig>, p: &SystemParams) -> Result<DetuningJitter, AppError> {
    match cfg {
        Some(j) => j.to_jitter(p),
        None => Ok(DetuningJitter::fixed(p.delta / p.kappa)),
    }
}

/// Analysis frequency grid, `[grid]`, uniform in Hz.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// First grid frequency, Hz (must be > 0).
    pub start_hz: f64,
    /// Last grid frequency, Hz.
    pub stop_hz: f64,
    /// Number of points, at least 2.
    pub points: usize,
}

impl GridConfig {
    /// Angular frequencies (rad/s) for the core crate.
    pub fn freqs_rad(&self) -> Result<Vec<f64>, AppError> {
        if !(self.start_hz > 0.0) {
            return Err(AppError::Config("[grid] start_hz must be > 0".into()));
        }
        if !(self.stop_hz > self.start_hz) {
            return Err(AppError::Config("[grid] stop_hz must exceed start_hz".into()));
        }
        if self.points < 2 {
            return Err(AppError::Config("[grid] points must be at least 2".into()));
        }
        Ok(pondero_core::spectrum::linspace(
            TAU * self.start_hz,
            TAU * self.stop_hz,
            self.points,
        ))
    }
}

fn default_mode() -> String {
    "simplified".into()
}

/// Modulation-network options, `[network]`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    /// Gain mode: `simplified` (default) or `full`.
    #[serde(default = "default_mode")]
    pub mode: String,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            mode: default_mode(),
        }
    }
}

/// Parse a gain-mode name.
pub fn parse_mode(name: &str) -> Result<GainMode, AppError> {
    match name {
        "simplified" => Ok(GainMode::Simplified),
        "full" => Ok(GainMode::Full),
        other => Err(AppError::Config(format!(
            "unknown gain mode `{other}` (expected `simplified` or `full`)"
        ))),
    }
}

fn default_theta_start() -> f64 {
    -90.0
}
fn default_theta_stop() -> f64 {
    90.0
}
fn default_theta_points() -> usize {
    361
}
fn default_full_mode() -> String {
    "full".into()
}

/// Quadrature-noise map options, `[squeeze]`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SqueezeConfig {
    /// First quadrature angle, degrees.
    #[serde(default = "default_theta_start")]
    pub theta_start_deg: f64,
    /// Last quadrature angle, degrees.
    #[serde(default = "default_theta_stop")]
    pub theta_stop_deg: f64,
    /// Number of angles; 1 produces a single-angle spectrum at
    /// `theta_start_deg`.
    #[serde(default = "default_theta_points")]
    pub theta_points: usize,
    /// Gain mode: `full` (default) or `simplified`.
    #[serde(default = "default_full_mode")]
    pub mode: String,
}

impl Default for SqueezeConfig {
    fn default() -> Self {
        SqueezeConfig {
            theta_start_deg: default_theta_start(),
            theta_stop_deg: default_theta_stop(),
            theta_points: default_theta_points(),
            mode: default_full_mode(),
        }
    }
}

impl SqueezeConfig {
    /// Quadrature angles in radians.
    pub fn thetas_rad(&self) -> Result<Vec<f64>, AppError> {
        if self.theta_points == 0 {
            return Err(AppError::Config("[squeeze] theta_points must be >= 1".into()));
        }
        if self.theta_points == 1 {
            return Ok(vec![self.theta_start_deg.to_radians()]);
        }
        if !(self.theta_stop_deg > self.theta_start_deg) {
            return Err(AppError::Config(
                "[squeeze] theta_stop_deg must exceed theta_start_deg".into(),
            ));
        }
        Ok(pondero_core::spectrum::linspace(
            self.theta_start_deg.to_radians(),
            self.theta_stop_deg.to_radians(),
            self.theta_points,
        ))
    }
}

fn default_sample_rate() -> f64 {
    80e6
}
fn default_duration() -> f64 {
    5e-3
}
fn default_carrier_freq() -> f64 {
    10e6
}
fn default_carrier_amplitude() -> f64 {
    1e-5
}
fn default_colored_band() -> f64 {
    500e3
}
fn default_seed() -> u64 {
    1
}

/// Heterodyne record synthesis, `[synth]`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    /// Record sample rate, Hz.
    #[serde(default = "default_sample_rate")]
    pub sample_rate_hz: f64,
    /// Record length, s.
    #[serde(default = "default_duration")]
    pub duration_s: f64,
    /// Beat-note (intermediate) frequency, Hz.
    #[serde(default = "default_carrier_freq")]
    pub carrier_freq_hz: f64,
    /// Beat-note amplitude in record units.
    #[serde(default = "default_carrier_amplitude")]
    pub carrier_amplitude: f64,
    /// Beat-note phase, degrees.
    #[serde(default)]
    pub carrier_phase_deg: f64,
    /// Half width of the band carrying the modeled spectra; outside it the
    /// quadrature noise is white at the shot level.
    #[serde(default = "default_colored_band")]
    pub colored_band_hz: f64,
    /// Random seed for the noise draw.
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Synthesize the empty-cavity reference (coupling off) instead of the
    /// coupled system.
    #[serde(default)]
    pub empty_cavity: bool,
    /// Optional coherent amplitude-modulation drive tone.
    pub drive: Option<DriveConfig>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            sample_rate_hz: default_sample_rate(),
            duration_s: default_duration(),
            carrier_freq_hz: default_carrier_freq(),
            carrier_amplitude: default_carrier_amplitude(),
            carrier_phase_deg: 0.0,
            colored_band_hz: default_colored_band(),
            seed: default_seed(),
            empty_cavity: false,
            drive: None,
        }
    }
}

impl SynthConfig {
    /// Number of samples in the record.
    pub fn n_samples(&self) -> Result<usize, AppError> {
        if !(self.sample_rate_hz > 0.0) || !(self.duration_s > 0.0) {
            return Err(AppError::Config(
                "[synth] sample_rate_hz and duration_s must be > 0".into(),
            ));
        }
        let n = (self.sample_rate_hz * self.duration_s).round() as usize;
        if n < 16 {
            return Err(AppError::Config("[synth] record too short".into()));
        }
        Ok(n)
    }
}

/// Coherent drive tone riding on the probe, `[synth.drive]`.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveConfig {
    /// Modulation frequency, Hz.
    pub freq_hz: f64,
    /// Amplitude-modulation depth in record units.
    pub am_depth: f64,
}

fn default_decimation() -> usize {
    40
}
fn default_taps() -> usize {
    2561
}
fn default_cutoff() -> f64 {
    0.8e6
}
fn default_nperseg() -> usize {
    2000
}

/// Demodulation and spectral estimation, `[demod]`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemodConfig {
    /// Decimation factor after the mixer.
    #[serde(default = "default_decimation")]
    pub decimation: usize,
    /// Length of the windowed-sinc lowpass, in taps.
    #[serde(default = "default_taps")]
    pub taps: usize,
    /// Lowpass cutoff, Hz.
    #[serde(default = "default_cutoff")]
    pub cutoff_hz: f64,
    /// Welch segment length on the decimated record.
    #[serde(default = "default_nperseg")]
    pub nperseg: usize,
}

impl Default for DemodConfig {
    fn default() -> Self {
        DemodConfig {
            decimation: default_decimation(),
            taps: default_taps(),
            cutoff_hz: default_cutoff(),
            nperseg: default_nperseg(),
        }
    }
}

/// Spectrum-fit options, `[fit]`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    /// Which fit: `pm`, `network`, or `brownian`.
    pub kind: String,
    /// Frequency bands (Hz) excluded from the residuals.
    #[serde(default)]
    pub mask_hz: Vec<[f64; 2]>,
    /// Header name of the spectrum column (default: the column after the
    /// frequency column). Lets a fit read e.g. `psd_q` from demodulation
    /// output directly.
    pub value_column: Option<String>,
}

impl FitConfig {
    /// Exclusion bands in rad/s.
    pub fn masks_rad(&self) -> Vec<(f64, f64)> {
        self.mask_hz
            .iter()
            .map(|[lo, hi]| (TAU * lo, TAU * hi))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_parses() {
        let cfg: Config = toml::from_str(
            r#"
            [system]
            kappa_hz = 1.8e6
            delta_hz = -1.0e6
            omega_m_hz = 155.5e3
            gamma_m_hz = 1.91e3
            n_bar = 6.0
            omega_s_hz = 136.0e3
            "#,
        )
        .unwrap();
        let p = cfg.system.to_params().unwrap();
        assert!((p.kappa - TAU * 1.8e6).abs() < 1e-6);
        assert!(cfg.jitter.is_none());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let r: Result<Config, _> = toml::from_str(
            r#"
            [system]
            kappa_hz = 1.8e6
            delta_hz = -1.0e6
            omega_m_hz = 155.5e3
            gamma_m_hz = 1.91e3
            n_bar = 6.0
            omega_s_hz = 136.0e3
            typo_key = 1
            "#,
        );
        assert!(r.is_err());
    }

    #[test]
    fn coupling_must_be_specified_exactly_once() {
        let both: Config = toml::from_str(
            r#"
            [system]
            kappa_hz = 1.8e6
            delta_hz = -1.0e6
            omega_m_hz = 155.5e3
            gamma_m_hz = 1.91e3
            n_bar = 6.0
            omega_s_hz = 136.0e3
            g_om_hz = 68.0e3
            "#,
        )
        .unwrap();
        assert!(both.system.to_params().is_err());
        let neither: Config = toml::from_str(
            r#"
            [system]
            kappa_hz = 1.8e6
            delta_hz = -1.0e6
            omega_m_hz = 155.5e3
            gamma_m_hz = 1.91e3
            n_bar = 6.0
            "#,
        )
        .unwrap();
        assert!(neither.system.to_params().is_err());
    }

    #[test]
    fn default_detection_matches_reference_chain() {
        let cfg = DetectionConfig::default();
        let chain = cfg.to_chain().unwrap();
        let reference = DetectionChain::default();
        assert_eq!(chain.eps_cav, reference.eps_cav);
        assert_eq!(chain.p_lo, reference.p_lo);
        assert!((chain.omega_lo / reference.omega_lo - 1.0).abs() < 1e-12);
    }

    #[test]
    fn grid_and_thetas_validate() {
        let g = GridConfig {
            start_hz: 0.0,
            stop_hz: 1e3,
            points: 10,
        };
        assert!(g.freqs_rad().is_err());
        let g = GridConfig {
            start_hz: 1e3,
            stop_hz: 2e3,
            points: 3,
        };
        let f = g.freqs_rad().unwrap();
        assert_eq!(f.len(), 3);
        assert!((f[2] - TAU * 2e3).abs() < 1e-9);
        let s = SqueezeConfig {
            theta_points: 1,
            theta_start_deg: -40.0,
            ..SqueezeConfig::default()
        };
        assert_eq!(s.thetas_rad().unwrap().len(), 1);
    }
}
