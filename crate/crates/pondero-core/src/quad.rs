//! Gauss-Hermite quadrature for averages over a Gaussian-distributed
//! parameter.
//!
//! Nodes and weights are produced for the probabilists' weight
//! `exp(-x^2/2) / sqrt(2 pi)`, i.e. a standard normal, with the weights
//! normalized to sum to exactly 1. An n-point rule integrates polynomials
//! up to degree `2n - 1` exactly, so a handful of nodes suffices for the
//! smooth detuning dependence of the detected spectra.

use alloc::vec;
use alloc::vec::Vec;
// Inherent f64 methods shadow the trait when std is linked (tests).
#[allow(unused_imports)]
use num_traits::Float;

/// Nodes (ascending) and weights (normalized to unit sum) of the n-point
/// Gauss-Hermite rule for a standard normal distribution.
///
/// The mean of `f` over `x ~ N(0, 1)` is then `sum_i w_i f(x_i)`. For a
/// general normal with mean `mu` and width `sigma`, evaluate at
/// `mu + sigma * x_i`.
///
/// Panics if `n == 0`.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "quadrature order must be at least 1");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];

    // Roots of the physicists' Hermite polynomial, largest first, with
    // Newton refinement on the orthonormal recurrence. Only the upper half
    // is computed; the rest follows by symmetry.
    let half = (n + 1) / 2;
    let nf = n as f64;
    let mut z = 0.0;
    for i in 0..half {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * nodes[0],
            3 => 1.91 * z - 0.91 * nodes[1],
            _ => 2.0 * z - nodes[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..200 {
            let (p, d) = orthonormal_hermite(n, z);
            pp = d;
            let step = p / d;
            z -= step;
            if step.abs() <= 1e-15 * (1.0 + z.abs()) {
                let (_, d) = orthonormal_hermite(n, z);
                pp = d;
                break;
            }
        }
        nodes[i] = z;
        weights[i] = 2.0 / (pp * pp);
    }

    // Mirror onto the lower half and pin the middle root of odd rules to
    // exactly zero.
    for i in 0..half {
        nodes[n - 1 - i] = -nodes[i];
        weights[n - 1 - i] = weights[i];
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    nodes.reverse();
    weights.reverse();

    // Rescale from the physicists' weight exp(-x^2) to a standard normal:
    // stretch the abscissas by sqrt(2) and normalize the weights, which at
    // this point sum to sqrt(pi).
    let sum: f64 = weights.iter().sum();
    for x in nodes.iter_mut() {
        *x *= core::f64::consts::SQRT_2;
    }
    for w in weights.iter_mut() {
        *w /= sum;
    }
    (nodes, weights)
}

/// Value and derivative of the orthonormal physicists' Hermite polynomial
/// of degree `n` at `z`, via the three-term recurrence.
fn orthonormal_hermite(n: usize, z: f64) -> (f64, f64) {
    let pi_quarter = 0.751_125_544_464_942_5; // pi^(-1/4)
    let mut pm1 = 0.0;
    let mut p = pi_quarter;
    for k in 0..n {
        let kf = k as f64;
        let next = z * (2.0 / (kf + 1.0)).sqrt() * p - (kf / (kf + 1.0)).sqrt() * pm1;
        pm1 = p;
        p = next;
    }
    let d = (2.0 * n as f64).sqrt() * pm1;
    (p, d)
}
