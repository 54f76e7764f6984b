//! Fock-basis foundation: oscillator wavefunctions, density matrices,
//! quadrature marginals, Wigner functions and the photon-loss channel.
//!
//! All quadratures follow the convention `[Q, P] = i`, so the vacuum has
//! quadrature variance 1/2 and `Q_theta = Q cos(theta) + P sin(theta)`.
//! The quadrature eigenstates carry the phase convention
//! `<m|Q_theta> = exp(i m theta) psi_m(Q)`.

mod density;
mod loss;
mod wigner;

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub(crate) use density::eigh;
pub use density::{fidelity, DensityMatrix};
pub use loss::bernoulli_loss;
pub(crate) use loss::loss_amplitudes;
pub use wigner::{marginal, wigner, wigner_convolve_loss, wigner_point, GridSpec, WignerGrid};

/// Highest Fock order the wavefunction recursions accept.
pub const MAX_FOCK_ORDER: usize = 200;

/// `pi^(-1/4)`
pub(crate) const PI_POW_M14: f64 = 0.751_125_544_464_942_5;

/// One homodyne outcome: local-oscillator phase and measured quadrature.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSample {
    pub theta: f64,
    pub q: f64,
}

impl QuadratureSample {
    /// Builds a sample, wrapping the phase into `[0, 2pi)`.
    pub fn new(theta: f64, q: f64) -> Result<Self> {
        if !theta.is_finite() {
            return Err(Error::domain("theta", theta, "finite"));
        }
        if !q.is_finite() {
            return Err(Error::domain("q", q, "finite"));
        }
        Ok(QuadratureSample {
            theta: wrap_phase(theta),
            q,
        })
    }
}

pub(crate) fn wrap_phase(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    // rem_euclid can round up to exactly 2pi for tiny negative inputs
    if t >= TAU {
        0.0
    } else {
        t
    }
}

pub(crate) fn check_order(n: usize) -> Result<()> {
    if n > MAX_FOCK_ORDER {
        Err(Error::UnsupportedOrder {
            n,
            cap: MAX_FOCK_ORDER,
        })
    } else {
        Ok(())
    }
}

/// Fills `out[n] = psi_n(x)` for `n < out.len()` with the normalised
/// three-term recursion `psi_{n+1} = sqrt(2/(n+1)) x psi_n - sqrt(n/(n+1)) psi_{n-1}`.
pub(crate) fn fill_wavefunctions(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = PI_POW_M14 * (-0.5 * x * x).exp();
    if out.len() == 1 {
        return;
    }
    out[1] = std::f64::consts::SQRT_2 * x * out[0];
    for n in 1..out.len() - 1 {
        let nf = n as f64;
        out[n + 1] = (2.0 / (nf + 1.0)).sqrt() * x * out[n] - (nf / (nf + 1.0)).sqrt() * out[n - 1];
    }
}

/// Harmonic-oscillator eigenfunction `psi_n(x)`.
pub fn fock_wavefunction(n: usize, x: f64) -> Result<f64> {
    check_order(n)?;
    if !x.is_finite() {
        return Err(Error::domain("x", x, "finite"));
    }
    let mut buf = vec![0.0; n + 1];
    fill_wavefunctions(x, &mut buf);
    Ok(buf[n])
}

/// All of `psi_0(x) ..= psi_{n_max}(x)`.
pub fn fock_wavefunctions(n_max: usize, x: f64) -> Result<Vec<f64>> {
    check_order(n_max)?;
    let mut buf = vec![0.0; n_max + 1];
    fill_wavefunctions(x, &mut buf);
    Ok(buf)
}

/// `<n|Q_theta = q> = exp(i n theta) psi_n(q)`.
pub fn quadrature_overlap(n: usize, q: f64, theta: f64) -> Result<Complex64> {
    let psi = fock_wavefunction(n, q)?;
    Ok(Complex64::from_polar(psi, n as f64 * theta))
}
