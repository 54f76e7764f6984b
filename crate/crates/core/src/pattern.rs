//! Pattern-function (direct sampling) estimation.
//!
//! A density-matrix element is the phase-weighted average of a real pattern
//! function over the homodyne records,
//! `rho_mn = < exp(i (m - n) theta) M_mn(q) >`, valid when the phases are
//! uniform over `[0, pi)` or `[0, 2pi)`. The pattern functions are
//! `M_mn = d/dx [psi_m(x) phi_n(x)]` for `n >= m`, with `phi_n` the irregular
//! (non-normalisable) oscillator solutions, and `M_nm = M_mn`.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{check_order, wrap_phase, DensityMatrix, QuadratureSample, PI_POW_M14};
use crate::special::scaled_dawson_derivatives;

/// Largest `|x|` at which irregular wavefunctions are evaluated.
pub const MAX_IRREGULAR_X: f64 = 12.0;

/// Nodes of a [`PatternTable`].
pub const TABLE_NODES: usize = 4096;

fn check_x(x: f64) -> Result<()> {
    if x.is_finite() && x.abs() <= MAX_IRREGULAR_X {
        Ok(())
    } else {
        Err(Error::domain("x", x, "|x| <= 12"))
    }
}

/// Irregular wavefunction `phi_n(x)`.
///
/// `phi_0 = pi^(3/4) exp(-x^2/2) erfi(x) = 2 pi^(1/4) exp(x^2/2) D(x)` and
/// `phi_{n+1} = (x phi_n - phi_n') / sqrt(2n + 2)`, which makes
/// `phi_n = 2 pi^(1/4) exp(x^2/2) d_n` with `d_n` the scaled derivatives of
/// Dawson's integral. The recursion is evaluated on `d_n`, free of the
/// exponential factor.
pub fn irregular_wavefunction(n: usize, x: f64) -> Result<f64> {
    check_order(n)?;
    check_x(x)?;
    let mut d = vec![0.0; n + 1];
    scaled_dawson_derivatives(x, &mut d);
    Ok(2.0 / PI_POW_M14 * (0.5 * x * x).exp() * d[n])
}

/// All pattern functions `M_mn(x)` with `m <= n <= n_max`, written to
/// `out[pair_index(m, n)]`.
///
/// With `psi_m = pi^(-1/4) exp(-x^2/2) h_m` (`h_m` the normalised Hermite
/// polynomials) the product `psi_m phi_n = 2 h_m d_n` and
/// `M_mn = 2 (sqrt(2m) h_{m-1} d_n - sqrt(2(n+1)) h_m d_{n+1})`.
fn fill_patterns(x: f64, n_max: usize, out: &mut [f64]) {
    let dim = n_max + 1;
    let mut h = vec![0.0; dim];
    h[0] = 1.0;
    if dim > 1 {
        h[1] = SQRT_2 * x;
    }
    for m in 1..dim.saturating_sub(1) {
        let mf = m as f64;
        h[m + 1] = (2.0 / (mf + 1.0)).sqrt() * x * h[m] - (mf / (mf + 1.0)).sqrt() * h[m - 1];
    }
    let mut d = vec![0.0; dim + 1];
    scaled_dawson_derivatives(x, &mut d);
    for m in 0..dim {
        let down = if m > 0 {
            (2.0 * m as f64).sqrt() * h[m - 1]
        } else {
            0.0
        };
        for n in m..dim {
            let up = (2.0 * (n + 1) as f64).sqrt() * h[m];
            out[pair_index(m, n, dim)] = 2.0 * (down * d[n] - up * d[n + 1]);
        }
    }
}

/// Index of `(m, n)`, `m <= n < d`, in the packed upper triangle.
fn pair_index(m: usize, n: usize, d: usize) -> usize {
    m * d - m * (m + 1) / 2 + n
}

/// Pattern function `M_mn(x)`.
pub fn pattern_function(m: usize, n: usize, x: f64) -> Result<f64> {
    let (lo, hi) = (m.min(n), m.max(n));
    check_order(hi + 1)?;
    check_x(x)?;
    let mut out = vec![0.0; (hi + 1) * (hi + 2) / 2];
    fill_patterns(x, hi, &mut out);
    Ok(out[pair_index(lo, hi, hi + 1)])
}

/// Pattern functions up to `n_max` tabulated on a regular grid and
/// interpolated linearly. Arguments outside the table are evaluated
/// directly.
#[derive(Clone, Debug)]
pub struct PatternTable {
    n_max: usize,
    x_min: f64,
    h: f64,
    /// `values[node * pairs + pair]`
    values: Vec<f64>,
}

impl PatternTable {
    pub fn new(n_max: usize) -> Result<Self> {
        check_order(n_max + 1)?;
        let half = (2.0 * (n_max as f64).sqrt() + 4.0).min(MAX_IRREGULAR_X);
        let h = 2.0 * half / (TABLE_NODES - 1) as f64;
        let pairs = Self::pairs_for(n_max);
        let mut values = vec![0.0; TABLE_NODES * pairs];
        // M_mn(-x) = (-1)^(m+n) M_mn(x) on the symmetric grid
        let (left, right) = values.split_at_mut(TABLE_NODES / 2 * pairs);
        for (node, chunk) in right.chunks_mut(pairs).enumerate() {
            let x = -half + (TABLE_NODES / 2 + node) as f64 * h;
            fill_patterns(x, n_max, chunk);
            let mirror = &mut left[(TABLE_NODES / 2 - 1 - node) * pairs..][..pairs];
            for m in 0..=n_max {
                for n in m..=n_max {
                    let p = pair_index(m, n, n_max + 1);
                    mirror[p] = if (m + n) % 2 == 0 {
                        chunk[p]
                    } else {
                        -chunk[p]
                    };
                }
            }
        }
        Ok(PatternTable {
            n_max,
            x_min: -half,
            h,
            values,
        })
    }

    fn pairs_for(n_max: usize) -> usize {
        (n_max + 1) * (n_max + 2) / 2
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Tabulated range `[x_min, x_max]`.
    pub fn range(&self) -> (f64, f64) {
        (self.x_min, -self.x_min)
    }

    /// Writes every `M_mn(x)`, `m <= n`, into `out` in packed order.
    fn eval_into(&self, x: f64, out: &mut [f64]) -> Result<()> {
        let pairs = out.len();
        let t = (x - self.x_min) / self.h;
        if t >= 0.0 && t <= (TABLE_NODES - 1) as f64 {
            let k = (t as usize).min(TABLE_NODES - 2);
            let f = t - k as f64;
            let a = &self.values[k * pairs..(k + 1) * pairs];
            let b = &self.values[(k + 1) * pairs..(k + 2) * pairs];
            for ((o, &va), &vb) in out.iter_mut().zip(a).zip(b) {
                *o = va + f * (vb - va);
            }
            Ok(())
        } else {
            check_x(x)?;
            fill_patterns(x, self.n_max, out);
            Ok(())
        }
    }

    /// Interpolated `M_mn(x)`.
    pub fn get(&self, m: usize, n: usize, x: f64) -> Result<f64> {
        let d = self.n_max + 1;
        if m >= d || n >= d {
            return Err(Error::UnsupportedOrder {
                n: m.max(n),
                cap: self.n_max,
            });
        }
        let mut out = vec![0.0; Self::pairs_for(self.n_max)];
        self.eval_into(x, &mut out)?;
        Ok(out[pair_index(m.min(n), m.max(n), d)])
    }
}

/// Direct-sampling estimate with element-wise standard errors.
#[derive(Clone, Debug)]
pub struct PatternEstimate {
    /// Hermitian, unit trace only on average; may have negative eigenvalues.
    pub rho: DensityMatrix,
    /// `sqrt((Var Re + Var Im) / N)` of each element's estimator.
    pub se: DMatrix<f64>,
    /// Largest gap between recorded phases, folded onto `[0, pi)`. Off-diagonal
    /// elements are unreliable when this is not small.
    pub phase_gap: f64,
    pub n_samples: usize,
}

/// Largest empty arc among the phases folded onto the half circle.
pub fn max_phase_gap(samples: &[QuadratureSample]) -> f64 {
    if samples.is_empty() {
        return PI;
    }
    let mut t: Vec<f64> = samples.iter().map(|s| wrap_phase(s.theta) % PI).collect();
    t.sort_by(f64::total_cmp);
    let wrap = t[0] + PI - t[t.len() - 1];
    t.windows(2).map(|w| w[1] - w[0]).fold(wrap, f64::max)
}

/// Estimates `rho_mn`, `m, n <= n_max`, by averaging pattern functions over
/// the records. No detector-efficiency correction is applied: lossy data
/// yield the lossy state.
pub fn estimate_density_matrix(
    samples: &[QuadratureSample],
    n_max: usize,
) -> Result<PatternEstimate> {
    let table = PatternTable::new(n_max)?;
    estimate_with_table(samples, &table)
}

/// As [`estimate_density_matrix`] with a prebuilt table.
pub fn estimate_with_table(
    samples: &[QuadratureSample],
    table: &PatternTable,
) -> Result<PatternEstimate> {
    if samples.is_empty() {
        return Err(Error::EmptyData);
    }
    let d = table.n_max + 1;
    let pairs = PatternTable::pairs_for(table.n_max);
    let mut m_vals = vec![0.0; pairs];
    let mut sum = vec![Complex64::new(0.0, 0.0); pairs];
    let mut sum_sq = vec![0.0; pairs];
    let mut phases = vec![Complex64::new(1.0, 0.0); d];
    for s in samples {
        table.eval_into(s.q, &mut m_vals)?;
        let step = Complex64::from_polar(1.0, s.theta);
        for k in 1..d {
            phases[k] = phases[k - 1] * step;
        }
        for m in 0..d {
            for n in m..d {
                let p = pair_index(m, n, d);
                // exp(i (m - n) theta) = conj(phases[n - m])
                let f = phases[n - m].conj() * m_vals[p];
                sum[p] += f;
                sum_sq[p] += f.norm_sqr();
            }
        }
    }
    let nf = samples.len() as f64;
    let mut rho = DMatrix::zeros(d, d);
    let mut se = DMatrix::zeros(d, d);
    for m in 0..d {
        for n in m..d {
            let p = pair_index(m, n, d);
            let mean = sum[p] / nf;
            let var = (sum_sq[p] / nf - mean.norm_sqr()).max(0.0);
            rho[(m, n)] = mean;
            rho[(n, m)] = mean.conj();
            let e = if nf > 1.0 {
                (var * nf / (nf - 1.0) / nf).sqrt()
            } else {
                f64::INFINITY
            };
            se[(m, n)] = e;
            se[(n, m)] = e;
        }
        rho[(m, m)].im = 0.0;
    }
    Ok(PatternEstimate {
        rho: DensityMatrix::estimate(rho),
        se,
        phase_gap: max_phase_gap(samples),
        n_samples: samples.len(),
    })
}

/// Photon-number distribution with standard errors.
#[derive(Clone, Debug, PartialEq)]
pub struct PhotonStatistics {
    pub probabilities: Vec<f64>,
    pub se: Vec<f64>,
}

/// `pr(j) = < M_jj(q) >`. The diagonal pattern functions carry no phase
/// factor, so the phases need not have been recorded.
pub fn photon_number_stats(samples: &[QuadratureSample], n_max: usize) -> Result<PhotonStatistics> {
    if samples.is_empty() {
        return Err(Error::EmptyData);
    }
    let table = PatternTable::new(n_max)?;
    let d = n_max + 1;
    let mut m_vals = vec![0.0; PatternTable::pairs_for(n_max)];
    let mut sum = vec![0.0; d];
    let mut sum_sq = vec![0.0; d];
    for s in samples {
        table.eval_into(s.q, &mut m_vals)?;
        for j in 0..d {
            let v = m_vals[pair_index(j, j, d)];
            sum[j] += v;
            sum_sq[j] += v * v;
        }
    }
    let nf = samples.len() as f64;
    let probabilities: Vec<f64> = sum.iter().map(|s| s / nf).collect();
    let se = (0..d)
        .map(|j| {
            let var = (sum_sq[j] / nf - probabilities[j].powi(2)).max(0.0);
            if nf > 1.0 {
                (var / (nf - 1.0)).sqrt()
            } else {
                f64::INFINITY
            }
        })
        .collect();
    Ok(PhotonStatistics { probabilities, se })
}
