//! Frequency-domain model of a linearized cavity optomechanical amplifier.
//!
//! The crate computes the closed-loop optomechanical gain of a detuned,
//! driven cavity coupled to a mechanical oscillator, the two-component
//! (Bogoliubov) scattering matrices it induces on the optical field, the
//! resulting vacuum quadrature noise spectra (including sub-shot-noise
//! ponderomotive squeezing), the heterodyne detection chain that maps those
//! spectra onto measured power spectral densities, the classical network
//! response to a coherent amplitude-modulation drive, and least-squares
//! fitting routines that recover model parameters from spectra.
//!
//! Everything here is pure math over `f64`, usable without the standard
//! library (`alloc` is required). File formats, trace synthesis and the
//! command line tool live in the companion `pondero` crate.
//!
//! Conventions used throughout:
//!
//! * All frequencies, linewidths and damping rates are angular (rad/s)
//!   unless a name says otherwise.
//! * Fourier transforms follow the physics sign `x(t) ~ exp(-i w t)`, so a
//!   pure delay has a positive phase. Reported phases flip the sign to the
//!   lock-in convention where a delay is negative; see [`network`].
//! * Noise spectra are normalized so that vacuum (shot noise) is exactly 1.

#![no_std]

extern crate alloc;

pub mod detection;
pub mod fit;
pub mod model;
pub mod network;
pub mod params;
pub mod quad;
pub mod scattering;
pub mod spectrum;

pub use detection::{DetectionChain, DetuningJitter, Quadrature, SqueezeReport, TechnicalNoise};
pub use fit::{FitResult, FitStatus};
pub use model::GainMode;
pub use network::{DriveResponse, PhaseProfile, StabilityReport};
pub use params::{ParamError, SystemParams};
pub use scattering::{CrossSpectra, ScatteringMatrix, SqueezeMap};
pub use spectrum::{ComplexSpectrum, QuadratureSpectrum};

/// Errors produced by model evaluation (as opposed to parameter validation).
#[derive(Debug, Clone, PartialEq)]
pub enum ModelError {
    /// Requested frequency sits closer to the cavity sideband pole
    /// `kappa^2 + delta^2 = omega^2` than the configured guard.
    PolePassage { omega: f64, pole: f64 },
    /// Closed-loop denominator vanished within the configured guard;
    /// the linear response diverges at this frequency.
    GainPole { omega: f64 },
    /// The optical spring overwhelms the bare restoring force:
    /// `omega_m^2 + delta * s_opt(0) <= 0`, so no real oscillation
    /// frequency exists and the static system is unstable.
    ImaginarySpring { omega_s_squared: f64 },
    /// A detuning-average quadrature node landed on a model error.
    NodeFailure { node_delta: f64 },
    /// Input arrays that must share a grid or ordering do not.
    GridMismatch,
    /// The 1/f^2 technical background diverges at zero frequency.
    ZeroFrequency,
    /// A requested averaging band contains no grid points.
    EmptyBand { lo: f64, hi: f64 },
    /// Too few data points for the number of fit parameters.
    UnderDetermined { needed: usize, got: usize },
}

impl core::fmt::Display for ModelError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ModelError::PolePassage { omega, pole } => write!(
                f,
                "frequency {omega:.6e} rad/s is within the guard band of the \
                 cavity sideband pole at {pole:.6e} rad/s"
            ),
            ModelError::GainPole { omega } => write!(
                f,
                "closed-loop gain pole at {omega:.6e} rad/s: response diverges"
            ),
            ModelError::ImaginarySpring { omega_s_squared } => write!(
                f,
                "shifted spring constant is non-positive ({omega_s_squared:.6e} \
                 rad^2/s^2): static optomechanical instability"
            ),
            ModelError::NodeFailure { node_delta } => write!(
                f,
                "detuning-average node at delta = {node_delta:.6e} rad/s hit a pole"
            ),
            ModelError::GridMismatch => write!(f, "input grids do not match"),
            ModelError::ZeroFrequency => {
                write!(f, "technical background is undefined at zero frequency")
            }
            ModelError::EmptyBand { lo, hi } => write!(
                f,
                "band [{lo:.6e}, {hi:.6e}] rad/s contains no spectrum points"
            ),
            ModelError::UnderDetermined { needed, got } => write!(
                f,
                "fit needs at least {needed} data points, got {got}"
            ),
        }
    }
}
