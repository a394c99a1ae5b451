//! Least-squares parameter estimation: a small damped Gauss-Newton engine
//! plus fits for detected phase spectra, network responses, and Brownian
//! backgrounds.
//!
//! The engine minimizes a sum of squared residuals over at most four
//! parameters with a numerically differenced Jacobian, Levenberg-style
//! damping, and internal rescaling of the parameters to their initial
//! magnitudes so that rates in rad/s and dimensionless amplitudes can be
//! mixed freely. Everything is deterministic: the same inputs produce the
//! same estimates bit for bit.

use alloc::vec;
use alloc::vec::Vec;
// Inherent f64 methods shadow the trait when std is linked (tests).
#[allow(unused_imports)]
use num_traits::Float;

use crate::detection::{self, DetectionChain, DetuningJitter};
use crate::model::GainMode;
use crate::network::{self, DriveResponse};
use crate::params::SystemParams;
use crate::spectrum::QuadratureSpectrum;
use crate::ModelError;

/// How a fit terminated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitStatus {
    /// Step size fell below the relative tolerance.
    Converged,
    /// Iteration budget exhausted before convergence.
    MaxIterations,
    /// Normal equations could not be solved or the model failed to
    /// evaluate; estimates are the best point reached.
    Singular,
}

/// Estimates and diagnostics returned by every fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    /// Best-fit parameter values, in the order documented by each fit.
    pub estimates: Vec<f64>,
    /// One-sigma uncertainties from the linearized covariance
    /// (`NaN` when the curvature matrix is singular).
    pub uncertainties: Vec<f64>,
    /// Euclidean norm of the residual vector at the optimum.
    pub residual_norm: f64,
    /// Termination status.
    pub status: FitStatus,
    /// Number of outer iterations performed.
    pub iterations: usize,
}

const MAX_ITERATIONS: usize = 200;
const REL_STEP_TOL: f64 = 1e-10;
const LAMBDA_START: f64 = 1e-3;
const LAMBDA_MAX: f64 = 1e12;
const DIFF_STEP: f64 = 1e-6;
const MAX_PARAMS: usize = 4;

/// Minimize `|r(x)|^2` from `x0`. The closure fills the residual slice and
/// returns false when the model cannot be evaluated at `x` (such points
/// are treated as uphill).
pub fn least_squares<F>(f: &mut F, x0: &[f64], n_res: usize) -> FitResult
where
    F: FnMut(&[f64], &mut [f64]) -> bool,
{
    let k = x0.len();
    assert!(k >= 1 && k <= MAX_PARAMS, "1 to 4 parameters supported");
    let scale: Vec<f64> = x0
        .iter()
        .map(|v| if v.abs() > 0.0 { v.abs() } else { 1.0 })
        .collect();

    let mut x = x0.to_vec();
    let mut r = vec![0.0; n_res];
    if !f(&x, &mut r) {
        return FitResult {
            estimates: x,
            uncertainties: vec![f64::NAN; k],
            residual_norm: f64::NAN,
            status: FitStatus::Singular,
            iterations: 0,
        };
    }
    let mut cost = dot(&r, &r);
    let mut lambda = LAMBDA_START;
    let mut status = FitStatus::MaxIterations;
    let mut iterations = 0;

    let mut jac = vec![0.0; n_res * k];
    let mut r_trial = vec![0.0; n_res];
    let mut x_trial = vec![0.0; k];

    'outer: for iter in 0..MAX_ITERATIONS {
        iterations = iter + 1;
        if !jacobian(f, &x, &scale, &mut jac, n_res) {
            status = FitStatus::Singular;
            break;
        }
        let (a, g) = normal_equations(&jac, &r, n_res, k);

        // Inner damping loop: raise lambda until a step goes downhill.
        loop {
            let mut m = a;
            for j in 0..k {
                let d = if a[j][j] > 0.0 { a[j][j] } else { 1.0 };
                m[j][j] += lambda * d;
            }
            let mut delta = [0.0; MAX_PARAMS];
            for j in 0..k {
                delta[j] = -g[j];
            }
            if !solve(&mut m, &mut delta, k) {
                lambda *= 10.0;
                if lambda > LAMBDA_MAX {
                    status = FitStatus::Singular;
                    break 'outer;
                }
                continue;
            }
            for j in 0..k {
                x_trial[j] = x[j] + delta[j] * scale[j];
            }
            let ok = f(&x_trial, &mut r_trial);
            let cost_trial = if ok { dot(&r_trial, &r_trial) } else { f64::INFINITY };
            if cost_trial < cost {
                x.copy_from_slice(&x_trial);
                r.copy_from_slice(&r_trial);
                cost = cost_trial;
                lambda = (lambda / 10.0).max(1e-12);
                let step: f64 = dot_k(&delta, &delta, k).sqrt();
                if step <= REL_STEP_TOL {
                    status = FitStatus::Converged;
                    break 'outer;
                }
                break;
            }
            lambda *= 10.0;
            if lambda > LAMBDA_MAX {
                // No downhill direction left at machine precision: treat
                // the current point as the optimum.
                status = FitStatus::Converged;
                break 'outer;
            }
        }
    }

    let uncertainties = if jacobian(f, &x, &scale, &mut jac, n_res) {
        covariance_sigmas(&jac, n_res, k, cost, &scale)
    } else {
        vec![f64::NAN; k]
    };
    FitResult {
        estimates: x,
        uncertainties,
        residual_norm: cost.sqrt(),
        status,
        iterations,
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn dot_k(a: &[f64; MAX_PARAMS], b: &[f64; MAX_PARAMS], k: usize) -> f64 {
    (0..k).map(|i| a[i] * b[i]).sum()
}

/// Central-difference Jacobian with respect to the scaled parameters
/// `u_j = x_j / scale_j`. Returns false when the model fails near `x`.
fn jacobian<F>(f: &mut F, x: &[f64], scale: &[f64], jac: &mut [f64], n_res: usize) -> bool
where
    F: FnMut(&[f64], &mut [f64]) -> bool,
{
    let k = x.len();
    let mut xp = x.to_vec();
    let mut rp = vec![0.0; n_res];
    let mut rm = vec![0.0; n_res];
    for j in 0..k {
        let h = DIFF_STEP * (x[j].abs() / scale[j]).max(1.0);
        xp.copy_from_slice(x);
        xp[j] = x[j] + h * scale[j];
        if !f(&xp, &mut rp) {
            return false;
        }
        xp[j] = x[j] - h * scale[j];
        if !f(&xp, &mut rm) {
            return false;
        }
        for i in 0..n_res {
            jac[i * k + j] = (rp[i] - rm[i]) / (2.0 * h);
        }
    }
    true
}

type SmallMatrix = [[f64; MAX_PARAMS]; MAX_PARAMS];

fn normal_equations(
    jac: &[f64],
    r: &[f64],
    n_res: usize,
    k: usize,
) -> (SmallMatrix, [f64; MAX_PARAMS]) {
    let mut a = [[0.0; MAX_PARAMS]; MAX_PARAMS];
    let mut g = [0.0; MAX_PARAMS];
    for i in 0..n_res {
        for p in 0..k {
            let jp = jac[i * k + p];
            g[p] += jp * r[i];
            for q in p..k {
                a[p][q] += jp * jac[i * k + q];
            }
        }
    }
    for p in 0..k {
        for q in 0..p {
            a[p][q] = a[q][p];
        }
    }
    (a, g)
}

/// Gaussian elimination with partial pivoting on the leading `k x k`
/// block. Returns false on a (numerically) singular pivot.
fn solve(a: &mut SmallMatrix, b: &mut [f64; MAX_PARAMS], k: usize) -> bool {
    for col in 0..k {
        let mut pivot = col;
        for row in col + 1..k {
            if a[row][col].abs() > a[pivot][col].abs() {
                pivot = row;
            }
        }
        if a[pivot][col].abs() < 1e-300 {
            return false;
        }
        if pivot != col {
            a.swap(pivot, col);
            b.swap(pivot, col);
        }
        let inv = 1.0 / a[col][col];
        for row in col + 1..k {
            let factor = a[row][col] * inv;
            if factor == 0.0 {
                continue;
            }
            for c in col..k {
                a[row][c] -= factor * a[col][c];
            }
            b[row] -= factor * b[col];
        }
    }
    for col in (0..k).rev() {
        let mut s = b[col];
        for c in col + 1..k {
            s -= a[col][c] * b[c];
        }
        b[col] = s / a[col][col];
    }
    true
}

/// One-sigma uncertainties from `s^2 (J^T J)^{-1}` with
/// `s^2 = cost / (n - k)`, mapped back to physical units.
fn covariance_sigmas(jac: &[f64], n_res: usize, k: usize, cost: f64, scale: &[f64]) -> Vec<f64> {
    let r0 = vec![0.0; n_res];
    let (a, _) = normal_equations(jac, &r0, n_res, k);
    let mut inv_diag = vec![f64::NAN; k];
    for j in 0..k {
        let mut m = a;
        let mut e = [0.0; MAX_PARAMS];
        e[j] = 1.0;
        if solve(&mut m, &mut e, k) {
            inv_diag[j] = e[j];
        }
    }
    let dof = (n_res.saturating_sub(k)).max(1) as f64;
    let s2 = cost / dof;
    inv_diag
        .iter()
        .zip(scale)
        .map(|(c, s)| if *c >= 0.0 { (s2 * c).sqrt() * s } else { f64::NAN })
        .collect()
}

/// Indices of spectrum bins not covered by any exclusion band.
fn unmasked(freqs: &[f64], masks: &[(f64, f64)]) -> Vec<usize> {
    freqs
        .iter()
        .enumerate()
        .filter(|(_, &f)| !masks.iter().any(|&(lo, hi)| f >= lo && f <= hi))
        .map(|(i, _)| i)
        .collect()
}

/// Fit a detected phase-quadrature spectrum (relative to shot noise).
///
/// Parameters, in order: shifted mechanical frequency `omega_s` (rad/s),
/// mechanical damping `gamma_m` (rad/s), detuning jitter width in units of
/// `kappa`, and an overall amplitude nuisance multiplying the model.
/// `base` supplies everything held fixed (`kappa`, `delta`, `omega_m`,
/// `n_bar`, damping convention); `masks` lists frequency bands (rad/s)
/// excluded from the residuals, e.g. around calibration tones.
pub fn fit_pm_spectrum(
    psd: &QuadratureSpectrum,
    base: &SystemParams,
    chain: &DetectionChain,
    masks: &[(f64, f64)],
) -> Result<FitResult, ModelError> {
    let keep = unmasked(&psd.freqs, masks);
    if keep.len() < 4 {
        return Err(ModelError::UnderDetermined {
            needed: 4,
            got: keep.len(),
        });
    }
    let freqs: Vec<f64> = keep.iter().map(|&i| psd.freqs[i]).collect();
    let data: Vec<f64> = keep.iter().map(|&i| psd.psd[i]).collect();

    // Start at the spectral peak for omega_s, the bare linewidth for
    // gamma_m, a moderate jitter, and unit amplitude.
    let peak = keep
        .iter()
        .max_by(|a, b| psd.psd[**a].total_cmp(&psd.psd[**b]))
        .copied()
        .unwrap();
    let x0 = [psd.freqs[peak], base.gamma_m, 0.1, 1.0];

    let mean = base.delta / base.kappa;
    let mut model_fn = |x: &[f64], out: &mut [f64]| -> bool {
        let (omega_s, gamma_m, sigma, amp) = (x[0], x[1], x[2].abs(), x[3]);
        let p = match SystemParams::from_shifted_frequency(
            base.kappa,
            base.delta,
            base.omega_m,
            gamma_m,
            omega_s,
            base.n_bar,
        ) {
            Ok(p) => p
                .with_damping_scale(base.damping_scale)
                .with_pole_epsilon(base.pole_epsilon),
            Err(_) => return false,
        };
        let jitter = DetuningJitter {
            mean_delta_over_kappa: mean,
            sigma_over_kappa: sigma,
            n_points: 15,
        };
        let spec = match detection::detected_relative(
            &p,
            chain,
            &jitter,
            core::f64::consts::FRAC_PI_2,
            &freqs,
            GainMode::Full,
        ) {
            Ok(s) => s,
            Err(_) => return false,
        };
        for (o, (m, d)) in out.iter_mut().zip(spec.psd.iter().zip(data.iter())) {
            *o = amp * m - d;
        }
        true
    };

    let mut result = least_squares(&mut model_fn, &x0, data.len());
    result.estimates[2] = result.estimates[2].abs();
    Ok(result)
}

/// Fit a measured drive response with the quasi-static network model.
///
/// Parameters, in order: shifted mechanical frequency `omega_s` (rad/s)
/// and mechanical damping `gamma_m` (rad/s). Residuals are the real and
/// imaginary parts of both quadrature transmissions, so each frequency
/// contributes four numbers; at least four frequencies are required.
pub fn fit_network(resp: &DriveResponse, base: &SystemParams) -> Result<FitResult, ModelError> {
    let n = resp.freqs.len();
    if n < 4 {
        return Err(ModelError::UnderDetermined { needed: 4, got: n });
    }
    let peak = resp
        .am
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm_sqr().total_cmp(&b.1.norm_sqr()))
        .map(|(i, _)| i)
        .unwrap();
    let x0 = [resp.freqs[peak], base.gamma_m];

    let mut model_fn = |x: &[f64], out: &mut [f64]| -> bool {
        let (omega_s, gamma_m) = (x[0], x[1]);
        let p = match SystemParams::from_shifted_frequency(
            base.kappa,
            base.delta,
            base.omega_m,
            gamma_m,
            omega_s,
            base.n_bar,
        ) {
            Ok(p) => p
                .with_damping_scale(base.damping_scale)
                .with_pole_epsilon(base.pole_epsilon),
            Err(_) => return false,
        };
        for (i, &w) in resp.freqs.iter().enumerate() {
            let (am, pm) = match network::drive_point(&p, w, GainMode::Simplified) {
                Ok(t) => t,
                Err(_) => return false,
            };
            out[4 * i] = am.re - resp.am[i].re;
            out[4 * i + 1] = am.im - resp.am[i].im;
            out[4 * i + 2] = pm.re - resp.pm[i].re;
            out[4 * i + 3] = pm.im - resp.pm[i].im;
        }
        true
    };

    Ok(least_squares(&mut model_fn, &x0, 4 * n))
}

/// Closed-form fit of a `A / nu^2` Brownian background to a spectrum in
/// record units, with `nu` the frequency in Hz.
///
/// Returns a single estimate `A` (record units times Hz^2) with its
/// standard error. Bands in `masks` (rad/s) are excluded, e.g. around the
/// mechanical resonance; at least two bins must remain, and a bin at zero
/// frequency is an error.
pub fn fit_brownian(
    psd: &QuadratureSpectrum,
    masks: &[(f64, f64)],
) -> Result<FitResult, ModelError> {
    let keep = unmasked(&psd.freqs, masks);
    if keep.len() < 2 {
        return Err(ModelError::UnderDetermined {
            needed: 2,
            got: keep.len(),
        });
    }
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut basis = Vec::with_capacity(keep.len());
    for &i in &keep {
        if psd.freqs[i] == 0.0 {
            return Err(ModelError::ZeroFrequency);
        }
        let nu = psd.freqs[i] / core::f64::consts::TAU;
        let x = 1.0 / (nu * nu);
        basis.push(x);
        sxy += x * psd.psd[i];
        sxx += x * x;
    }
    let a = sxy / sxx;
    let mut cost = 0.0;
    for (&i, &x) in keep.iter().zip(basis.iter()) {
        let r = psd.psd[i] - a * x;
        cost += r * r;
    }
    let dof = (keep.len() - 1) as f64;
    let sigma = (cost / dof / sxx).sqrt();
    Ok(FitResult {
        estimates: vec![a],
        uncertainties: vec![sigma],
        residual_norm: cost.sqrt(),
        status: FitStatus::Converged,
        iterations: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_quadratic_minimum() {
        // r = [x - 3, 2 (y + 1)] has the unique optimum (3, -1).
        let mut f = |x: &[f64], out: &mut [f64]| {
            out[0] = x[0] - 3.0;
            out[1] = 2.0 * (x[1] + 1.0);
            true
        };
        let res = least_squares(&mut f, &[1.0, 1.0], 2);
        assert_eq!(res.status, FitStatus::Converged);
        assert!((res.estimates[0] - 3.0).abs() < 1e-8);
        assert!((res.estimates[1] + 1.0).abs() < 1e-8);
        assert!(res.residual_norm < 1e-8);
    }

    #[test]
    fn gradient_vanishes_at_optimum() {
        // Rosenbrock-style residuals; the gradient projection at the
        // reported optimum must be negligible relative to the curvature.
        let mut f = |x: &[f64], out: &mut [f64]| {
            out[0] = 10.0 * (x[1] - x[0] * x[0]);
            out[1] = 1.0 - x[0];
            true
        };
        let res = least_squares(&mut f, &[-1.2, 1.0], 2);
        assert_eq!(res.status, FitStatus::Converged);
        let x = &res.estimates;
        let g0 = 10.0 * (x[1] - x[0] * x[0]) * (-20.0 * x[0]) - (1.0 - x[0]);
        let g1 = 10.0 * (x[1] - x[0] * x[0]) * 10.0;
        assert!(g0.abs() < 1e-8, "grad x: {g0}");
        assert!(g1.abs() < 1e-8, "grad y: {g1}");
    }

    #[test]
    fn model_failure_at_start_reports_singular() {
        let mut f = |_: &[f64], _: &mut [f64]| false;
        let res = least_squares(&mut f, &[1.0], 3);
        assert_eq!(res.status, FitStatus::Singular);
    }

    #[test]
    fn brownian_closed_form_is_exact_on_clean_data() {
        let tau = core::f64::consts::TAU;
        let freqs: Vec<f64> = (1..50).map(|i| tau * 1e3 * i as f64).collect();
        let psd: Vec<f64> = freqs.iter().map(|w| 460.0 / (w / tau).powi(2)).collect();
        let spec = QuadratureSpectrum::new(freqs, psd).unwrap();
        let res = fit_brownian(&spec, &[]).unwrap();
        assert!((res.estimates[0] - 460.0).abs() < 1e-9);
        assert!(res.uncertainties[0] < 1e-9);
    }

    #[test]
    fn brownian_masking_excludes_contaminated_bins() {
        let tau = core::f64::consts::TAU;
        let freqs: Vec<f64> = (1..50).map(|i| tau * 1e3 * i as f64).collect();
        let mut psd: Vec<f64> = freqs.iter().map(|w| 120.0 / (w / tau).powi(2)).collect();
        psd[20] += 1e-3; // a narrow tone
        let spec = QuadratureSpectrum::new(freqs.clone(), psd).unwrap();
        let biased = fit_brownian(&spec, &[]).unwrap();
        let masked = fit_brownian(&spec, &[(freqs[19], freqs[21])]).unwrap();
        assert!((masked.estimates[0] - 120.0).abs() < 1e-9);
        assert!((biased.estimates[0] - 120.0).abs() > (masked.estimates[0] - 120.0).abs());
    }
}
