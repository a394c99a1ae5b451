//! Physical parameters of the optomechanical system and their validation.

// Inherent f64 methods shadow the trait when std is linked (tests).
#[allow(unused_imports)]
use num_traits::Float;

/// Parameter validation failure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParamError {
    /// Named field must be strictly positive.
    NonPositive(&'static str),
    /// Named field must not be negative.
    Negative(&'static str),
    /// Named field must be finite.
    NotFinite(&'static str),
}

impl core::fmt::Display for ParamError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ParamError::NonPositive(name) => write!(f, "{name} must be > 0"),
            ParamError::Negative(name) => write!(f, "{name} must be >= 0"),
            ParamError::NotFinite(name) => write!(f, "{name} must be finite"),
        }
    }
}

/// Physical constants of the optomechanical system, all angular (rad/s)
/// except the dimensionless photon number.
///
/// Only the product `n_bar * g_om^2` enters the light-induced dynamics, so a
/// system known through its shifted resonance rather than through microscopic
/// coupling can be built with [`SystemParams::from_shifted_frequency`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Cavity half linewidth, rad/s.
    pub kappa: f64,
    /// Probe detuning from cavity resonance, rad/s (signed).
    pub delta: f64,
    /// Bare mechanical resonance frequency, rad/s.
    pub omega_m: f64,
    /// Intrinsic mechanical damping rate, rad/s.
    pub gamma_m: f64,
    /// Optomechanical coupling rate, rad/s.
    pub g_om: f64,
    /// Mean intracavity photon number.
    pub n_bar: f64,
    /// Overall scale applied to the optomechanical damping curve.
    /// 0.5 reproduces the measured amplifier gain; 1.0 is the bare
    /// published form of the curve. See [`crate::model::optomechanical_damping`].
    pub damping_scale: f64,
    /// Relative guard half-width around model poles, in units of
    /// `omega_m^2`. Evaluations closer than this return an error instead
    /// of a huge number.
    pub pole_epsilon: f64,
}

impl SystemParams {
    /// Builds a parameter set from the microscopic coupling, validating
    /// every invariant. Optional knobs start at their defaults
    /// (`damping_scale = 0.5`, `pole_epsilon = 1e-9`).
    pub fn new(
        kappa: f64,
        delta: f64,
        omega_m: f64,
        gamma_m: f64,
        g_om: f64,
        n_bar: f64,
    ) -> Result<Self, ParamError> {
        let p = SystemParams {
            kappa,
            delta,
            omega_m,
            gamma_m,
            g_om,
            n_bar,
            damping_scale: 0.5,
            pole_epsilon: 1e-9,
        };
        p.validate()?;
        Ok(p)
    }

    /// Builds a parameter set whose coupling strength is chosen so the
    /// zero-frequency optical spring shifts the resonance to `omega_s`
    /// (rad/s) at this detuning. `n_bar` is kept as given and `g_om` is
    /// derived; only their product matters to the response.
    pub fn from_shifted_frequency(
        kappa: f64,
        delta: f64,
        omega_m: f64,
        gamma_m: f64,
        omega_s: f64,
        n_bar: f64,
    ) -> Result<Self, ParamError> {
        if delta == 0.0 {
            return Err(ParamError::NonPositive("delta (for coupling inversion)"));
        }
        if !(omega_s > 0.0) {
            return Err(ParamError::NonPositive("omega_s"));
        }
        // s_opt(0) = (omega_s^2 - omega_m^2)/delta, and
        // s_opt(0) = 4 g^2 n_bar omega_m / (kappa^2 + delta^2).
        let s0 = (omega_s * omega_s - omega_m * omega_m) / delta;
        let four_g2n = s0 * (kappa * kappa + delta * delta) / omega_m;
        if four_g2n < 0.0 {
            // A repulsive-side target cannot be reached with real coupling.
            return Err(ParamError::Negative("implied coupling strength"));
        }
        let g_om = (four_g2n / (4.0 * n_bar)).sqrt();
        Self::new(kappa, delta, omega_m, gamma_m, g_om, n_bar)
    }

    /// Replaces the damping-curve scale convention (default 0.5).
    pub fn with_damping_scale(mut self, scale: f64) -> Self {
        self.damping_scale = scale;
        self
    }

    /// Replaces the relative pole guard (default 1e-9).
    pub fn with_pole_epsilon(mut self, eps: f64) -> Self {
        self.pole_epsilon = eps;
        self
    }

    fn validate(&self) -> Result<(), ParamError> {
        for (v, name) in [
            (self.kappa, "kappa"),
            (self.delta, "delta"),
            (self.omega_m, "omega_m"),
            (self.gamma_m, "gamma_m"),
            (self.g_om, "g_om"),
            (self.n_bar, "n_bar"),
            (self.damping_scale, "damping_scale"),
            (self.pole_epsilon, "pole_epsilon"),
        ] {
            if !v.is_finite() {
                return Err(ParamError::NotFinite(name));
            }
        }
        if !(self.kappa > 0.0) {
            return Err(ParamError::NonPositive("kappa"));
        }
        if !(self.omega_m > 0.0) {
            return Err(ParamError::NonPositive("omega_m"));
        }
        if !(self.gamma_m > 0.0) {
            return Err(ParamError::NonPositive("gamma_m"));
        }
        if self.g_om < 0.0 {
            return Err(ParamError::Negative("g_om"));
        }
        if self.n_bar < 0.0 {
            return Err(ParamError::Negative("n_bar"));
        }
        if !(self.pole_epsilon > 0.0) {
            return Err(ParamError::NonPositive("pole_epsilon"));
        }
        Ok(())
    }

    /// The coupling combination `4 g^2 n_bar omega_m` that drives every
    /// light-induced term, rad^3/s^3.
    pub fn coupling_strength(&self) -> f64 {
        4.0 * self.g_om * self.g_om * self.n_bar * self.omega_m
    }

    /// True when the mechanical quality factor `omega_m / gamma_m` falls
    /// below `threshold`. The model assumes a high-Q oscillator; the
    /// conventional threshold is 10.
    pub fn low_q_warning(&self, threshold: f64) -> bool {
        self.omega_m / self.gamma_m < threshold
    }

    /// Returns a copy with the detuning replaced (used by detuning-jitter
    /// averaging, which holds everything else fixed).
    pub fn at_delta(&self, delta: f64) -> Self {
        SystemParams { delta, ..*self }
    }
}
