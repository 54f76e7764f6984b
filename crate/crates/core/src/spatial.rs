//! Transverse spatial modes of one-photon fields: paraxial propagation and
//! phase-space (Wigner) tomography by parity measurement.
//!
//! Positions `x` and transverse wavenumbers `k` are conjugate, so a mode
//! `E(x)` has the Wigner function
//!
//! `W(x, k) = (1/pi) int E(x + u) E*(x - u) exp(-2 i k u) du`,
//!
//! which equals `1/pi` times the parity of the mode after it has been shifted
//! by `-x` and tilted by `-k`: the difference of the energies in its even and
//! odd parts. In two dimensions the prefactor is `1/pi^2` and the parity is
//! the inversion `E(-x, -y)`.
//!
//! Fields live on centered periodic grids with an odd number of points per
//! axis, so the origin is a node and the inversion is exact. Shifts, tilts
//! and propagation act through the discrete Fourier transform.

use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::fock::{eigh, GridSpec, WignerGrid};
use crate::radon::back_project;

/// Fraction of the norm that has to stay away from the grid edges.
pub const MIN_RETAINED: f64 = 0.999;
/// Outer part of each axis (in either domain) regarded as the edge.
const GUARD_FRACTION: usize = 16;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Geometry shared by modes and correlation matrices.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpatialGrid {
    /// 1 or 2.
    pub dims: usize,
    /// Odd number of points per axis.
    pub n: usize,
    pub pitch: f64,
    /// Reference wavenumber.
    pub k0: f64,
}

impl SpatialGrid {
    pub fn new(dims: usize, n: usize, pitch: f64, k0: f64) -> Result<Self> {
        if dims != 1 && dims != 2 {
            return Err(Error::InvalidParameter(format!(
                "dims must be 1 or 2, got {dims}"
            )));
        }
        if n.is_multiple_of(2) || n < 3 {
            return Err(Error::Grid(format!(
                "need an odd point count of at least 3, got {n}"
            )));
        }
        if !(pitch > 0.0 && pitch.is_finite()) {
            return Err(Error::domain("pitch", pitch, "> 0"));
        }
        if !(k0 > 0.0 && k0.is_finite()) {
            return Err(Error::domain("k0", k0, "> 0"));
        }
        Ok(SpatialGrid { dims, n, pitch, k0 })
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dims as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate of node `i` along an axis.
    pub fn coordinate(&self, i: usize) -> f64 {
        (i as f64 - (self.n / 2) as f64) * self.pitch
    }

    /// Wavenumber of FFT bin `j` along an axis.
    pub fn wavenumber(&self, j: usize) -> f64 {
        let n = self.n;
        let j = if j <= n / 2 {
            j as f64
        } else {
            j as f64 - n as f64
        };
        TAU * j / (n as f64 * self.pitch)
    }

    /// Area element `pitch^dims`.
    pub fn cell(&self) -> f64 {
        self.pitch.powi(self.dims as i32)
    }

    /// Axis indices of flat index `p` (`x` fastest).
    fn split(&self, p: usize) -> [usize; 2] {
        [p % self.n, p / self.n]
    }

    /// Flat index of the inverted node.
    fn mirror(&self, p: usize) -> usize {
        let n = self.n;
        match self.dims {
            1 => n - 1 - p,
            _ => {
                let [i, j] = self.split(p);
                (n - 1 - j) * n + (n - 1 - i)
            }
        }
    }

    fn check_point(&self, v: &[f64], what: &str) -> Result<()> {
        if v.len() != self.dims || v.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "{what} needs {} finite components, got {v:?}",
                self.dims
            )));
        }
        Ok(())
    }

    fn same_as(&self, other: &SpatialGrid) -> Result<()> {
        if self != other {
            return Err(Error::Grid(format!("grids differ: {self:?} vs {other:?}")));
        }
        Ok(())
    }

    fn in_guard(&self, i: usize) -> bool {
        let g = (self.n / GUARD_FRACTION).max(1);
        i < g || i >= self.n - g
    }

    /// Whether flat index `p` lies in the edge band (position domain).
    fn edge(&self, p: usize) -> bool {
        let [i, j] = self.split(p);
        self.in_guard(i) || (self.dims == 2 && self.in_guard(j))
    }

    /// Whether FFT bin `p` lies near the band limit.
    fn spectral_edge(&self, p: usize) -> bool {
        let n = self.n;
        let g = (n / GUARD_FRACTION).max(1);
        let near = |j: usize| {
            let centered = if j <= n / 2 { j } else { n - j };
            centered > n / 2 - g
        };
        let [i, j] = self.split(p);
        near(i) || (self.dims == 2 && near(j))
    }

    /// In-place DFT along every axis; the inverse carries the `1/len` factor.
    fn fft(&self, data: &mut [Complex64], inverse: bool) {
        let n = self.n;
        let mut planner = FftPlanner::new();
        let plan = if inverse {
            planner.plan_fft_inverse(n)
        } else {
            planner.plan_fft_forward(n)
        };
        for row in data.chunks_mut(n) {
            plan.process(row);
        }
        if self.dims == 2 {
            let mut column = vec![c(0.0, 0.0); n];
            for i in 0..n {
                for j in 0..n {
                    column[j] = data[j * n + i];
                }
                plan.process(&mut column);
                for j in 0..n {
                    data[j * n + i] = column[j];
                }
            }
        }
        if inverse {
            let scale = 1.0 / self.len() as f64;
            for z in data.iter_mut() {
                *z *= scale;
            }
        }
    }

    /// Fraction of the energy away from the edges of the position grid, or
    /// of the spectrum when `spectral`.
    fn retained(&self, energies: &[f64], spectral: bool) -> f64 {
        let mut total = 0.0;
        let mut edge = 0.0;
        for (p, &e) in energies.iter().enumerate() {
            total += e;
            let at_edge = if spectral {
                self.spectral_edge(p)
            } else {
                self.edge(p)
            };
            if at_edge {
                edge += e;
            }
        }
        if total > 0.0 {
            1.0 - edge / total
        } else {
            1.0
        }
    }

    fn check_retained(&self, v: &[Complex64]) -> Result<()> {
        let mut spectrum = v.to_vec();
        self.fft(&mut spectrum, false);
        let energy = |v: &[Complex64]| v.iter().map(|z| z.norm_sqr()).collect::<Vec<_>>();
        let retained = self
            .retained(&energy(v), false)
            .min(self.retained(&energy(&spectrum), true));
        if retained < MIN_RETAINED {
            return Err(Error::Aliasing { retained });
        }
        Ok(())
    }

    /// Shift by `x0` then tilt by `k0`: `E'(x) = E(x - x0) exp(i k0 x)`.
    fn displace_raw(&self, v: &[Complex64], x0: &[f64], k0: &[f64]) -> Vec<Complex64> {
        let mut out = v.to_vec();
        if x0.iter().any(|&x| x != 0.0) {
            self.fft(&mut out, false);
            for (p, z) in out.iter_mut().enumerate() {
                let [i, j] = self.split(p);
                let mut phase = self.wavenumber(i) * x0[0];
                if self.dims == 2 {
                    phase += self.wavenumber(j) * x0[1];
                }
                *z *= Complex64::from_polar(1.0, -phase);
            }
            self.fft(&mut out, true);
        }
        if k0.iter().any(|&k| k != 0.0) {
            for (p, z) in out.iter_mut().enumerate() {
                let [i, j] = self.split(p);
                let mut phase = k0[0] * self.coordinate(i);
                if self.dims == 2 {
                    phase += k0[1] * self.coordinate(j);
                }
                *z *= Complex64::from_polar(1.0, phase);
            }
        }
        out
    }

    /// `sum_p v_p conj(v_{-p})` times the cell: even minus odd energy.
    fn parity_overlap(&self, v: &[Complex64]) -> f64 {
        let s: f64 = v
            .iter()
            .enumerate()
            .map(|(p, z)| (z * v[self.mirror(p)].conj()).re)
            .sum();
        s * self.cell()
    }

    fn wigner_prefactor(&self) -> f64 {
        PI.powi(-(self.dims as i32))
    }
}

/// A normalised field on a [`SpatialGrid`], stored with `x` fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct SpatialMode {
    grid: SpatialGrid,
    samples: Vec<Complex64>,
}

impl SpatialMode {
    /// Normalises `samples` so that `sum |E|^2 pitch^dims = 1`.
    pub fn new(grid: SpatialGrid, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                left: samples.len(),
                right: grid.len(),
            });
        }
        let norm: f64 = samples.iter().map(|z| z.norm_sqr()).sum::<f64>() * grid.cell();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidParameter(
                "mode has zero or non-finite norm".into(),
            ));
        }
        let scale = 1.0 / norm.sqrt();
        Ok(SpatialMode {
            grid,
            samples: samples.into_iter().map(|z| z * scale).collect(),
        })
    }

    /// Samples `f(x)` (1D) or `f(x, y)` (2D, second argument `y`).
    pub fn from_fn(grid: SpatialGrid, f: impl Fn(f64, f64) -> Complex64) -> Result<Self> {
        let samples = (0..grid.len())
            .map(|p| {
                let [i, j] = grid.split(p);
                let y = if grid.dims == 2 {
                    grid.coordinate(j)
                } else {
                    0.0
                };
                f(grid.coordinate(i), y)
            })
            .collect();
        Self::new(grid, samples)
    }

    /// `exp(-|x - center|^2 / (2 sigma^2))`, whose Wigner function is
    /// `pi^-dims exp(-|x - center|^2 / sigma^2 - |k|^2 sigma^2)`.
    pub fn gaussian(grid: SpatialGrid, sigma: f64, center: &[f64]) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::domain("sigma", sigma, "> 0"));
        }
        grid.check_point(center, "center")?;
        let cy = center.get(1).copied().unwrap_or(0.0);
        Self::from_fn(grid, |x, y| {
            let r2 = (x - center[0]).powi(2)
                + if grid.dims == 2 {
                    (y - cy).powi(2)
                } else {
                    0.0
                };
            c((-r2 / (2.0 * sigma * sigma)).exp(), 0.0)
        })
    }

    /// Normalised `a E_1 + b E_2` on a common grid.
    pub fn superpose(
        a: Complex64,
        first: &SpatialMode,
        b: Complex64,
        second: &SpatialMode,
    ) -> Result<Self> {
        first.grid.same_as(&second.grid)?;
        let samples = first
            .samples
            .iter()
            .zip(&second.samples)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Self::new(first.grid, samples)
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    /// `|E|^2` per node.
    pub fn intensity(&self) -> Vec<f64> {
        self.samples.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn norm(&self) -> f64 {
        self.intensity().iter().sum::<f64>() * self.grid.cell()
    }

    /// `int E_1^* E_2`.
    pub fn overlap(&self, other: &SpatialMode) -> Result<Complex64> {
        self.grid.same_as(&other.grid)?;
        let s: Complex64 = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(s * self.grid.cell())
    }

    /// Intensity-weighted mean position along each axis.
    pub fn centroid(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.grid.dims];
        for (p, z) in self.samples.iter().enumerate() {
            let ij = self.grid.split(p);
            for (axis, v) in m.iter_mut().enumerate() {
                *v += z.norm_sqr() * self.grid.coordinate(ij[axis]);
            }
        }
        m.iter().map(|v| v * self.grid.cell()).collect()
    }

    /// Paraxial free propagation over `z != 0`: the spectrum is multiplied by
    /// `exp(-i |k|^2 z / (2 k0))`.
    pub fn propagate(&self, z: f64) -> Result<SpatialMode> {
        if !(z.is_finite() && z != 0.0) {
            return Err(Error::domain("z", z, "finite and nonzero"));
        }
        let g = &self.grid;
        let mut v = self.samples.clone();
        g.fft(&mut v, false);
        for (p, s) in v.iter_mut().enumerate() {
            let [i, j] = g.split(p);
            let mut k2 = g.wavenumber(i).powi(2);
            if g.dims == 2 {
                k2 += g.wavenumber(j).powi(2);
            }
            *s *= Complex64::from_polar(1.0, -k2 * z / (2.0 * g.k0));
        }
        g.fft(&mut v, true);
        g.check_retained(&v)?;
        Ok(SpatialMode {
            grid: self.grid,
            samples: v,
        })
    }

    /// `E'(x) = E(x - x0) exp(i kx0 . x)`, with band-limited (sub-pixel) shifts.
    pub fn displace(&self, x0: &[f64], kx0: &[f64]) -> Result<SpatialMode> {
        self.grid.check_point(x0, "shift")?;
        self.grid.check_point(kx0, "tilt")?;
        let v = self.grid.displace_raw(&self.samples, x0, kx0);
        self.grid.check_retained(&v)?;
        Ok(SpatialMode {
            grid: self.grid,
            samples: v,
        })
    }

    /// Energies of the even and odd parts about the origin.
    pub fn parity_intensities(&self) -> (f64, f64) {
        let total = self.norm();
        let diff = self.grid.parity_overlap(&self.samples);
        (0.5 * (total + diff), 0.5 * (total - diff))
    }

    /// The Wigner function at `(x, k)` from the parity of the displaced mode.
    pub fn wigner_point(&self, x: &[f64], k: &[f64]) -> Result<f64> {
        let neg = |v: &[f64]| v.iter().map(|a| -a).collect::<Vec<_>>();
        let shifted = self.displace(&neg(x), &neg(k))?;
        let (even, odd) = shifted.parity_intensities();
        Ok(self.grid.wigner_prefactor() * (even - odd))
    }

    /// [`SpatialMode::wigner_point`] over a `(x, k)` grid of a 1D mode.
    pub fn wigner_scan(&self, spec: &GridSpec) -> Result<WignerGrid> {
        scan(&self.grid, spec, |x, k| self.wigner_point(&[x], &[k]))
    }
}

fn scan(
    grid: &SpatialGrid,
    spec: &GridSpec,
    mut f: impl FnMut(f64, f64) -> Result<f64>,
) -> Result<WignerGrid> {
    if grid.dims != 1 {
        return Err(Error::InvalidParameter(
            "phase-space scans are one-dimensional".into(),
        ));
    }
    spec.validate()?;
    let mut values = Vec::with_capacity(spec.len());
    for i in 0..spec.nq {
        for j in 0..spec.np {
            values.push(f(spec.q(i), spec.p(j))?);
        }
    }
    Ok(WignerGrid {
        spec: *spec,
        values,
    })
}

/// `rho(x1, x2) = <E(x1) E*(x2)>` on a grid; the trace `sum rho(x, x) pitch^dims`
/// is one.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationMatrix {
    grid: SpatialGrid,
    matrix: DMatrix<Complex64>,
}

/// `sum_k w_k E_k(x1) E_k*(x2)` for weights summing to one.
pub fn ensemble_correlation(ensemble: &[(f64, SpatialMode)]) -> Result<CorrelationMatrix> {
    let Some((_, first)) = ensemble.first() else {
        return Err(Error::EmptyData);
    };
    let grid = first.grid;
    let mut total = 0.0;
    let mut matrix = DMatrix::zeros(grid.len(), grid.len());
    for (w, mode) in ensemble {
        if !(*w >= 0.0 && w.is_finite()) {
            return Err(Error::domain("weight", *w, ">= 0"));
        }
        grid.same_as(&mode.grid)?;
        total += w;
        let v = nalgebra::DVector::from_column_slice(&mode.samples);
        matrix += (&v * v.adjoint()).map(|z| z * *w);
    }
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "ensemble weights sum to {total}, not 1"
        )));
    }
    Ok(CorrelationMatrix { grid, matrix })
}

impl CorrelationMatrix {
    pub fn from_mode(mode: &SpatialMode) -> Self {
        ensemble_correlation(&[(1.0, mode.clone())]).expect("a single normalised mode")
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re * self.grid.cell()
    }

    /// `a rho_1 + b rho_2` on a common grid; not renormalised.
    pub fn combine(
        a: f64,
        first: &CorrelationMatrix,
        b: f64,
        second: &CorrelationMatrix,
    ) -> Result<Self> {
        first.grid.same_as(&second.grid)?;
        Ok(CorrelationMatrix {
            grid: first.grid,
            matrix: first.matrix.map(|z| z * a) + second.matrix.map(|z| z * b),
        })
    }

    /// Coherent modes and their weights, largest first; weights below
    /// `1e-14` of the largest are dropped.
    pub fn modes(&self) -> Vec<(f64, SpatialMode)> {
        let h = self.grid.cell();
        let eig = eigh(self.matrix.map(|z| z * h));
        let top = eig.eigenvalues.max();
        let mut out: Vec<(f64, SpatialMode)> = eig
            .eigenvalues
            .iter()
            .enumerate()
            .filter(|(_, &l)| l > 1e-14 * top)
            .map(|(k, &l)| {
                let v = eig.eigenvectors.column(k).map(|z| z / h.sqrt());
                let mode = SpatialMode {
                    grid: self.grid,
                    samples: v.iter().copied().collect(),
                };
                (l, mode)
            })
            .collect();
        out.sort_by(|a, b| b.0.total_cmp(&a.0));
        out
    }

    /// Eigenvalues of the correlation operator (`rho` times the cell),
    /// ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let h = self.grid.cell();
        let mut ev: Vec<f64> = eigh(self.matrix.map(|z| z * h))
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// `(1/pi) Tr[D^-1 rho D Pi]`: the parity-weighted trace of the displaced
    /// correlation. Linear in `rho`.
    pub fn wigner_point(&self, x: &[f64], k: &[f64]) -> Result<f64> {
        let g = &self.grid;
        g.check_point(x, "shift")?;
        g.check_point(k, "tilt")?;
        let neg = |v: &[f64]| v.iter().map(|a| -a).collect::<Vec<_>>();
        let (mx, mk) = (neg(x), neg(k));
        let apply = |m: &DMatrix<Complex64>| {
            let cols: Vec<Complex64> = m
                .column_iter()
                .flat_map(|col| g.displace_raw(col.as_slice(), &mx, &mk))
                .collect();
            DMatrix::from_vec(m.nrows(), m.ncols(), cols)
        };
        // D rho D^dagger = (D (D rho)^dagger)^dagger
        let left = apply(&self.matrix);
        let both = apply(&left.adjoint()).adjoint();
        let diag: Vec<f64> = both.diagonal().iter().map(|z| z.re).collect();
        let retained = g.retained(&diag, false);
        if retained < MIN_RETAINED {
            return Err(Error::Aliasing { retained });
        }
        let s: f64 = (0..g.len()).map(|p| both[(p, g.mirror(p))].re).sum();
        Ok(g.wigner_prefactor() * s * g.cell())
    }

    /// Wigner scan of a 1D correlation through its coherent-mode expansion.
    pub fn wigner_scan(&self, spec: &GridSpec) -> Result<WignerGrid> {
        let modes = self.modes();
        scan(&self.grid, spec, |x, k| {
            modes
                .iter()
                .try_fold(0.0, |acc, (w, m)| Ok(acc + w * m.wigner_point(&[x], &[k])?))
        })
    }
}

/// An intensity profile `I(x)` recorded a distance `z` from the object plane.
#[derive(Clone, Debug, PartialEq)]
pub struct IntensityProfile {
    pub z: f64,
    pub values: Vec<f64>,
}

/// Intensity profiles of a 1D mode at the distances that realise the
/// rotation angles `thetas` for length `scale` (see [`profile_records`]).
pub fn simulate_profiles(
    mode: &SpatialMode,
    thetas: &[f64],
    scale: f64,
) -> Result<Vec<IntensityProfile>> {
    let g = mode.grid;
    thetas
        .iter()
        .map(|&theta| {
            if !(theta.abs() < 0.5 * PI) {
                return Err(Error::domain("theta", theta, "(-pi/2, pi/2)"));
            }
            let z = g.k0 * scale * scale * theta.tan();
            let values = if z == 0.0 {
                mode.intensity()
            } else {
                mode.propagate(z)?.intensity()
            };
            Ok(IntensityProfile { z, values })
        })
        .collect()
}

/// Maps intensity profiles to weighted quadrature records for
/// [`back_project`]. With `q = x / scale` and `p = k scale`, free propagation
/// over `z` rotates phase space by `tan(theta) = z / (k0 scale^2)` and scales
/// the marginal by `cos(theta)`, so node `x_i` of profile `z` becomes
/// `(theta, x_i cos(theta) / scale)` with weight `I(x_i) pitch dtheta`. The
/// phase cells `dtheta` split the half circle between neighbouring angles.
pub fn profile_records(
    grid: &SpatialGrid,
    profiles: &[IntensityProfile],
    scale: f64,
) -> Result<Vec<(f64, f64, f64)>> {
    if grid.dims != 1 {
        return Err(Error::InvalidParameter(
            "profile tomography is one-dimensional".into(),
        ));
    }
    if profiles.is_empty() {
        return Err(Error::EmptyData);
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::domain("scale", scale, "> 0"));
    }
    let mut angles: Vec<(f64, usize)> = profiles
        .iter()
        .enumerate()
        .map(|(k, p)| ((p.z / (grid.k0 * scale * scale)).atan(), k))
        .collect();
    angles.sort_by(|a, b| a.0.total_cmp(&b.0));
    let m = angles.len();
    let mut records = Vec::with_capacity(m * grid.n);
    for (idx, &(theta, k)) in angles.iter().enumerate() {
        let profile = &profiles[k];
        if profile.values.len() != grid.n {
            return Err(Error::DimensionMismatch {
                left: profile.values.len(),
                right: grid.n,
            });
        }
        // neighbours on the circle of period pi
        let prev = if idx == 0 {
            angles[m - 1].0 - PI
        } else {
            angles[idx - 1].0
        };
        let next = if idx + 1 == m {
            angles[0].0 + PI
        } else {
            angles[idx + 1].0
        };
        let dtheta = if m == 1 { PI } else { 0.5 * (next - prev) };
        let cos = theta.cos();
        for (i, &v) in profile.values.iter().enumerate() {
            records.push((
                theta,
                grid.coordinate(i) * cos / scale,
                v * grid.pitch * dtheta,
            ));
        }
    }
    Ok(records)
}

/// Non-interferometric reconstruction: back-projects intensity profiles onto
/// `spec`, whose axes are position and wavenumber.
pub fn reconstruct_from_profiles(
    grid: &SpatialGrid,
    profiles: &[IntensityProfile],
    scale: f64,
    k_c: f64,
    spec: &GridSpec,
) -> Result<WignerGrid> {
    let records = profile_records(grid, profiles, scale)?;
    let scaled = GridSpec::new(
        spec.q_min / scale,
        spec.q_max / scale,
        spec.nq,
        spec.p_min * scale,
        spec.p_max * scale,
        spec.np,
    )?;
    // dq dp = dx dk, so the values carry over unchanged
    let w = back_project(&records, k_c, &scaled)?;
    Ok(WignerGrid {
        spec: *spec,
        values: w.values,
    })
}
