use std::f64::consts::{PI, SQRT_2};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{bernoulli_loss, fill_wavefunctions, DensityMatrix};
use crate::error::{Error, Result};

/// Regular rectangular phase-space grid, endpoints included.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub q_min: f64,
    pub q_max: f64,
    pub nq: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub np: usize,
}

impl GridSpec {
    pub fn new(
        q_min: f64,
        q_max: f64,
        nq: usize,
        p_min: f64,
        p_max: f64,
        np: usize,
    ) -> Result<Self> {
        let spec = GridSpec {
            q_min,
            q_max,
            nq,
            p_min,
            p_max,
            np,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// `[-half_width, half_width]^2` with `n` points per axis.
    pub fn square(half_width: f64, n: usize) -> Result<Self> {
        Self::new(-half_width, half_width, n, -half_width, half_width, n)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.q_min, self.q_max, self.p_min, self.p_max]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Grid("non-finite bounds".into()));
        }
        if !(self.q_min < self.q_max) || !(self.p_min < self.p_max) {
            return Err(Error::Grid("bounds must be strictly ordered".into()));
        }
        if self.nq < 2 || self.np < 2 {
            return Err(Error::Grid("need at least two points per axis".into()));
        }
        Ok(())
    }

    pub fn dq(&self) -> f64 {
        (self.q_max - self.q_min) / (self.nq - 1) as f64
    }

    pub fn dp(&self) -> f64 {
        (self.p_max - self.p_min) / (self.np - 1) as f64
    }

    pub fn q(&self, i: usize) -> f64 {
        self.q_min + i as f64 * self.dq()
    }

    pub fn p(&self, j: usize) -> f64 {
        self.p_min + j as f64 * self.dp()
    }

    pub fn len(&self) -> usize {
        self.nq * self.np
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Real function sampled on a [`GridSpec`]; `values[i * np + j] = W(q_i, p_j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct WignerGrid {
    pub spec: GridSpec,
    pub values: Vec<f64>,
}

impl WignerGrid {
    pub fn from_fn(spec: GridSpec, mut f: impl FnMut(f64, f64) -> f64) -> Result<Self> {
        spec.validate()?;
        let mut values = Vec::with_capacity(spec.len());
        for i in 0..spec.nq {
            let q = spec.q(i);
            for j in 0..spec.np {
                values.push(f(q, spec.p(j)));
            }
        }
        Ok(WignerGrid { spec, values })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.spec.np + j]
    }

    /// `sum W dq dp`
    pub fn riemann_sum(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.spec.dq() * self.spec.dp()
    }

    /// Grid indices and value of the maximum.
    pub fn argmax(&self) -> (usize, usize, f64) {
        let (k, v) = self
            .values
            .iter()
            .enumerate()
            .fold(
                (0, f64::NEG_INFINITY),
                |acc, (k, &v)| if v > acc.1 { (k, v) } else { acc },
            );
        (k / self.spec.np, k % self.spec.np, v)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Value at the grid node nearest to `(q, p)`.
    pub fn nearest(&self, q: f64, p: f64) -> f64 {
        let s = &self.spec;
        let i = (((q - s.q_min) / s.dq()).round().max(0.0) as usize).min(s.nq - 1);
        let j = (((p - s.p_min) / s.dp()).round().max(0.0) as usize).min(s.np - 1);
        self.get(i, j)
    }

    /// Largest pointwise difference to a grid of identical shape.
    pub fn sup_distance(&self, other: &WignerGrid) -> Result<f64> {
        if self.spec != other.spec {
            return Err(Error::Grid("grids differ".into()));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

/// Quadrature distribution `pr(q, theta)` seen by a detector of efficiency `eta`.
pub fn marginal(rho: &DensityMatrix, q: f64, theta: f64, eta: f64) -> Result<f64> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::domain("eta", eta, "(0, 1]"));
    }
    let lossy;
    let rho = if eta < 1.0 {
        lossy = bernoulli_loss(rho, eta)?;
        &lossy
    } else {
        rho
    };
    let d = rho.dim();
    let mut psi = vec![0.0; d];
    fill_wavefunctions(q, &mut psi);
    Ok(marginal_with(rho.matrix(), &psi, theta))
}

/// `v^dagger rho v` with `v_n = exp(i n theta) psi_n`.
pub(crate) fn marginal_with(rho: &DMatrix<Complex64>, psi: &[f64], theta: f64) -> f64 {
    let d = psi.len();
    let v: Vec<Complex64> = (0..d)
        .map(|n| Complex64::from_polar(psi[n], n as f64 * theta))
        .collect();
    let mut acc = 0.0;
    for m in 0..d {
        acc += rho[(m, m)].re * psi[m] * psi[m];
        for n in m + 1..d {
            acc += 2.0 * (v[m].conj() * rho[(m, n)] * v[n]).re;
        }
    }
    acc.max(0.0)
}

/// Wigner function at a single phase-space point.
///
/// Uses the closed form of the Wigner transform of `|n+k><n|`,
/// `(-1)^n / pi * sqrt(n!/(n+k)!) (sqrt2 (q - ip))^k exp(-r^2) L_n^(k)(2 r^2)`,
/// with normalised Laguerre recursions so no factorial is ever formed.
pub fn wigner_point(rho: &DensityMatrix, q: f64, p: f64) -> f64 {
    let m = rho.matrix();
    let d = rho.dim();
    let r2 = q * q + p * p;
    let x = 2.0 * r2;
    let step = Complex64::new(q, -p) * SQRT_2;
    let mut s = Complex64::new((-r2).exp(), 0.0);
    let mut total = 0.0;
    for k in 0..d {
        let kf = k as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        let mut l_prev = 0.0;
        let mut l = 1.0;
        for n in 0..d - k {
            let nf = n as f64;
            let signed = if n % 2 == 0 { l } else { -l };
            acc += m[(n + k, n)] * signed;
            let l_next = ((2.0 * nf + 1.0 + kf - x) * l - (nf * (nf + kf)).sqrt() * l_prev)
                / ((nf + 1.0) * (nf + 1.0 + kf)).sqrt();
            l_prev = l;
            l = l_next;
        }
        total += if k == 0 {
            acc.re * s.re
        } else {
            2.0 * (acc * s).re
        };
        s *= step / (kf + 1.0).sqrt();
    }
    total / PI
}

/// Wigner function of `rho` sampled on `spec`.
pub fn wigner(rho: &DensityMatrix, spec: &GridSpec) -> Result<WignerGrid> {
    WignerGrid::from_fn(*spec, |q, p| wigner_point(rho, q, p))
}

/// Applies detector loss directly in phase space: Gaussian smoothing of the
/// `sqrt(eta)`-contracted Wigner function,
///
/// `W_eta(Q,P) = 1/(pi (1-eta)) int W(Q',P') exp(-[(Q - sqrt(eta) Q')^2 + (P - sqrt(eta) P')^2] / (1-eta)) dQ' dP'`.
///
/// The kernel factorises, so the discrete convolution is two matrix
/// products. The output lives on the input grid.
pub fn wigner_convolve_loss(w: &WignerGrid, eta: f64) -> Result<WignerGrid> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::domain("eta", eta, "(0, 1]"));
    }
    if eta == 1.0 {
        return Ok(w.clone());
    }
    let spec = w.spec;
    let width = (1.0 - eta).sqrt();
    if spec.dq().max(spec.dp()) > width {
        return Err(Error::Grid(format!(
            "grid step {:.3} is coarser than the loss kernel width {width:.3}",
            spec.dq().max(spec.dp())
        )));
    }
    let se = eta.sqrt();
    let kernel = |n: usize, coord: &dyn Fn(usize) -> f64, step: f64| {
        DMatrix::from_fn(n, n, |out, inp| {
            let t = coord(out) - se * coord(inp);
            (-t * t / (1.0 - eta)).exp() * step
        })
    };
    let kq = kernel(spec.nq, &|i| spec.q(i), spec.dq());
    let kp = kernel(spec.np, &|j| spec.p(j), spec.dp());
    let src = DMatrix::from_row_slice(spec.nq, spec.np, &w.values);
    let out = kq * src * kp.transpose() / (PI * (1.0 - eta));
    let mut values = Vec::with_capacity(spec.len());
    for i in 0..spec.nq {
        for j in 0..spec.np {
            values.push(out[(i, j)]);
        }
    }
    Ok(WignerGrid { spec, values })
}
