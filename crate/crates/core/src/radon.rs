//! Filtered back-projection (inverse Radon transform) of homodyne data.
//!
//! The Wigner function is recovered as
//!
//! `W(Q, P) = 1/(2 pi^2) int_0^pi dtheta int dq pr(q, theta) K(Q cos(theta) + P sin(theta) - q)`
//!
//! with the band-limited kernel [`kernel`]. For `N` records whose phases are
//! uniform on `[0, pi)` or `[0, 2pi)`, each record carries phase weight
//! `pi / N` and the estimate is `1/(2 pi N) sum_i K(...)`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{wrap_phase, GridSpec, QuadratureSample, WignerGrid};

/// Below this `|k_c x|` the kernel is evaluated from its Taylor series.
const SERIES_LIMIT: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Binning {
    /// Sum the kernel over every record.
    DirectSum,
    /// Histogram records into phase and quadrature bins first.
    Binned {
        n_phase_bins: usize,
        n_q_bins: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadonConfig {
    pub k_c: f64,
    pub grid: GridSpec,
    pub binning: Binning,
}

impl RadonConfig {
    /// Direct sum with the given cutoff on `grid`.
    pub fn new(k_c: f64, grid: GridSpec) -> Self {
        RadonConfig {
            k_c,
            grid,
            binning: Binning::DirectSum,
        }
    }

    pub fn binned(mut self, n_phase_bins: usize, n_q_bins: usize) -> Self {
        self.binning = Binning::Binned {
            n_phase_bins,
            n_q_bins,
        };
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k_c > 0.0 && self.k_c.is_finite()) {
            return Err(Error::domain("k_c", self.k_c, "> 0"));
        }
        self.grid.validate()?;
        if let Binning::Binned {
            n_phase_bins,
            n_q_bins,
        } = self.binning
        {
            if n_phase_bins < 8 || n_q_bins < 8 {
                return Err(Error::InvalidParameter(
                    "binned mode needs at least 8 bins per axis".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Band-limited filter `1/2 int_{-k_c}^{k_c} |xi| exp(i xi x) dxi`
/// `= (cos(k_c x) - 1)/x^2 + k_c sin(k_c x)/x`.
pub fn kernel(x: f64, k_c: f64) -> f64 {
    let (s, c) = (k_c * x).sin_cos();
    kernel_with(x, k_c, c, s)
}

/// Kernel given `cos(k_c x)` and `sin(k_c x)`.
#[inline]
fn kernel_with(x: f64, k_c: f64, cos: f64, sin: f64) -> f64 {
    let kx = k_c * x;
    if kx.abs() < SERIES_LIMIT {
        // sum_j (-1)^j (k x)^(2j) k^2 / ((2j)! (2j + 2))
        let u = kx * kx;
        let k2 = k_c * k_c;
        k2 * (0.5 - u * (1.0 / 8.0 - u * (1.0 / 144.0 - u * (1.0 / 5760.0 - u / 403_200.0))))
    } else {
        (cos - 1.0) / (x * x) + k_c * sin / x
    }
}

/// Back-projects weighted records `(theta, q, w)`:
/// `W(Q, P) = 1/(2 pi^2) sum_i w_i K(Q cos(theta_i) + P sin(theta_i) - q_i)`.
///
/// The weights carry the phase and quadrature measure, so that for
/// projection data sampled on a `(theta, q)` lattice over `[0, pi)` one uses
/// `w = pr(q, theta) dq dtheta`.
pub fn back_project(records: &[(f64, f64, f64)], k_c: f64, grid: &GridSpec) -> Result<WignerGrid> {
    if records.is_empty() {
        return Err(Error::EmptyData);
    }
    if !(k_c > 0.0 && k_c.is_finite()) {
        return Err(Error::domain("k_c", k_c, "> 0"));
    }
    grid.validate()?;
    let (nq, np) = (grid.nq, grid.np);
    let dp = grid.dp();
    let mut values = vec![0.0; grid.len()];
    for &(theta, q, w) in records {
        if w == 0.0 {
            continue;
        }
        let (s, c) = theta.sin_cos();
        let dx = dp * s;
        let step = Complex64::from_polar(1.0, k_c * dx);
        for i in 0..nq {
            let x0 = grid.q(i) * c + grid.p_min * s - q;
            let mut z = Complex64::from_polar(1.0, k_c * x0);
            let row = &mut values[i * np..(i + 1) * np];
            for (j, cell) in row.iter_mut().enumerate() {
                let x = x0 + j as f64 * dx;
                *cell += w * kernel_with(x, k_c, z.re, z.im);
                z *= step;
            }
        }
    }
    let norm = 1.0 / (2.0 * PI * PI);
    for v in &mut values {
        *v *= norm;
    }
    Ok(WignerGrid {
        spec: *grid,
        values,
    })
}

/// Reconstructs the Wigner function from homodyne records whose phases are
/// spread uniformly over `[0, pi)` or `[0, 2pi)`.
pub fn reconstruct(samples: &[QuadratureSample], cfg: &RadonConfig) -> Result<WignerGrid> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(Error::EmptyData);
    }
    let w = PI / samples.len() as f64;
    let records: Vec<(f64, f64, f64)> = match cfg.binning {
        Binning::DirectSum => samples.iter().map(|s| (s.theta, s.q, w)).collect(),
        Binning::Binned {
            n_phase_bins,
            n_q_bins,
        } => bin_records(samples, n_phase_bins, n_q_bins)
            .into_iter()
            .map(|(theta, q, count)| (theta, q, count as f64 * w))
            .collect(),
    };
    back_project(&records, cfg.k_c, &cfg.grid)
}

/// Histogram of `(theta, q)`; returns bin centres with nonzero counts.
fn bin_records(samples: &[QuadratureSample], n_phase: usize, n_q: usize) -> Vec<(f64, f64, usize)> {
    let (lo, hi) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), s| {
            (a.min(s.q), b.max(s.q))
        });
    let width = if hi > lo { (hi - lo) / n_q as f64 } else { 1.0 };
    let dtheta = TAU / n_phase as f64;
    let mut counts = vec![0usize; n_phase * n_q];
    for s in samples {
        let a = ((wrap_phase(s.theta) / dtheta) as usize).min(n_phase - 1);
        let b = (((s.q - lo) / width) as usize).min(n_q - 1);
        counts[a * n_q + b] += 1;
    }
    counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(k, &c)| {
            let (a, b) = (k / n_q, k % n_q);
            ((a as f64 + 0.5) * dtheta, lo + (b as f64 + 0.5) * width, c)
        })
        .collect()
}
