use nalgebra::DMatrix;
use num_complex::Complex64;

use super::DensityMatrix;
use crate::error::{Error, Result};

/// Binomial coefficient as f64. Exact below 2^53 and well within range for
/// the dimensions used here.
fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    let mut c = 1.0;
    for i in 0..k {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c.round()
}

/// Kraus amplitudes of the beam-splitter loss channel:
/// `amp[m][k] = sqrt(C(m+k, k) eta^m (1-eta)^k)` for `m + k < dim`.
///
/// The channel maps `rho_{m+k, n+k}` into `rho_{m, n}` with weight
/// `amp[m][k] * amp[n][k]`.
pub(crate) fn loss_amplitudes(dim: usize, eta: f64) -> Vec<Vec<f64>> {
    (0..dim)
        .map(|m| {
            (0..dim - m)
                .map(|k| {
                    (binomial(m + k, k) * eta.powi(m as i32) * (1.0 - eta).powi(k as i32)).sqrt()
                })
                .collect()
        })
        .collect()
}

/// Photon loss through an absorber of transmissivity `eta` (generalized
/// Bernoulli transformation):
///
/// `rho'_mn = sum_k sqrt(C(m+k,k) C(n+k,k)) eta^((m+n)/2) (1-eta)^k rho_{m+k,n+k}`
///
/// The sum over `k` runs to the stored dimension, so the truncation error is
/// bounded by the population above `n_max`.
pub fn bernoulli_loss(rho: &DensityMatrix, eta: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::domain("eta", eta, "[0, 1]"));
    }
    if eta == 1.0 {
        return Ok(rho.clone());
    }
    let d = rho.dim();
    let amp = loss_amplitudes(d, eta);
    let src = rho.matrix();
    let out = DMatrix::from_fn(d, d, |m, n| {
        let kmax = d - m.max(n);
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..kmax {
            acc += src[(m + k, n + k)] * (amp[m][k] * amp[n][k]);
        }
        acc
    });
    Ok(DensityMatrix::from_matrix_unchecked(out))
}
