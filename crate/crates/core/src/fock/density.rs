use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

const HERMITIAN_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-8;
/// Numerical floor for the smallest eigenvalue of a physical state.
pub const PSD_FLOOR: f64 = -1e-10;

/// A density operator in the Fock basis, truncated at `n_max = dim - 1`.
///
/// Element `(m, n)` is `<m|rho|n>`. The matrix is stored Hermitian; states
/// built through [`DensityMatrix::try_new`] or the constructors below are
/// also unit-trace and positive semidefinite. Estimators that are allowed to
/// return unphysical matrices use [`DensityMatrix::estimate`].
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    m: DMatrix<Complex64>,
}

fn hermitize(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    (m + m.adjoint()).map(|z| z * 0.5)
}

/// Hermitian eigendecomposition. Entries far below the matrix scale are
/// flushed first: the solver overflows on near-subnormal inputs.
pub(crate) fn eigh(m: DMatrix<Complex64>) -> SymmetricEigen<Complex64, nalgebra::Dyn> {
    let scale = m.iter().fold(0.0f64, |a, z| a.max(z.norm()));
    let cut = 1e-100 * scale;
    SymmetricEigen::new(m.map(|z| {
        if z.norm() < cut {
            Complex64::new(0.0, 0.0)
        } else {
            z
        }
    }))
}

fn hermiticity_defect(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

impl DensityMatrix {
    /// Validates a Hermitian, unit-trace, positive semidefinite matrix.
    pub fn try_new(m: DMatrix<Complex64>) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(Error::NotPhysical(format!(
                "expected a non-empty square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NotPhysical("non-finite element".into()));
        }
        let defect = hermiticity_defect(&m);
        if defect > HERMITIAN_TOL {
            return Err(Error::NotPhysical(format!(
                "not Hermitian (defect {defect:.3e})"
            )));
        }
        let h = hermitize(&m);
        let tr = h.trace().re;
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::NotPhysical(format!("trace {tr} != 1")));
        }
        let rho = DensityMatrix {
            m: h.map(|z| z / tr),
        };
        let min = rho.min_eigenvalue();
        if min < PSD_FLOOR {
            return Err(Error::NotPhysical(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(rho)
    }

    /// Hermitizes and trace-normalizes a positive semidefinite operator.
    pub fn from_unnormalized(m: DMatrix<Complex64>) -> Result<Self> {
        let h = hermitize(&m);
        let tr = h.trace().re;
        if !(tr > 0.0) || !tr.is_finite() {
            return Err(Error::NotPhysical(format!("cannot normalize trace {tr}")));
        }
        Self::try_new(h.map(|z| z / tr))
    }

    /// Wraps an estimator output. Only Hermiticity is enforced.
    pub fn estimate(m: DMatrix<Complex64>) -> Self {
        DensityMatrix { m: hermitize(&m) }
    }

    pub(crate) fn from_matrix_unchecked(m: DMatrix<Complex64>) -> Self {
        DensityMatrix { m }
    }

    pub fn from_ket(amplitudes: &[Complex64]) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|c| c.norm_sqr()).sum();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidParameter(
                "ket has zero or non-finite norm".into(),
            ));
        }
        let d = amplitudes.len();
        let m = DMatrix::from_fn(d, d, |i, j| amplitudes[i] * amplitudes[j].conj() / norm);
        Ok(DensityMatrix { m: hermitize(&m) })
    }

    pub fn from_diagonal(populations: &[f64]) -> Result<Self> {
        if populations.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::InvalidParameter("negative population".into()));
        }
        let total: f64 = populations.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidParameter("populations sum to zero".into()));
        }
        let d = populations.len();
        let m = DMatrix::from_fn(d, d, |i, j| {
            if i == j {
                Complex64::new(populations[i] / total, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        Ok(DensityMatrix { m })
    }

    pub fn vacuum(n_max: usize) -> Self {
        Self::fock(0, n_max).expect("vacuum fits any truncation")
    }

    pub fn fock(n: usize, n_max: usize) -> Result<Self> {
        if n > n_max {
            return Err(Error::InvalidParameter(format!(
                "Fock state |{n}> does not fit n_max = {n_max}"
            )));
        }
        let mut pops = vec![0.0; n_max + 1];
        pops[n] = 1.0;
        Self::from_diagonal(&pops)
    }

    /// `N[1]`, the maximally mixed state on the truncated space.
    pub fn maximally_mixed(n_max: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n_max + 1]).expect("uniform populations")
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn n_max(&self) -> usize {
        self.dim() - 1
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.m
    }

    pub fn get(&self, m: usize, n: usize) -> Complex64 {
        self.m[(m, n)]
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.m[(i, i)].re).collect()
    }

    pub fn trace(&self) -> f64 {
        self.m.trace().re
    }

    pub fn purity(&self) -> f64 {
        self.m.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = eigh(self.m.clone()).eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// Unit trace (to 1e-8) and no eigenvalue below [`PSD_FLOOR`].
    pub fn is_physical(&self) -> bool {
        (self.trace() - 1.0).abs() <= TRACE_TOL && self.min_eigenvalue() >= PSD_FLOOR
    }

    /// Mean photon number `sum_n n rho_nn`.
    pub fn mean_photon_number(&self) -> f64 {
        self.diagonal()
            .iter()
            .enumerate()
            .map(|(n, p)| n as f64 * p)
            .sum()
    }

    /// `(1/pi)`-free parity expectation `sum_n (-1)^n rho_nn`.
    pub fn parity(&self) -> f64 {
        self.diagonal()
            .iter()
            .enumerate()
            .map(|(n, p)| if n % 2 == 0 { *p } else { -p })
            .sum()
    }

    /// Population above `n_max` that a truncation would discard.
    pub fn tail_population(&self, n_max: usize) -> f64 {
        self.diagonal().iter().skip(n_max + 1).sum()
    }

    /// Zero-pads or truncates to dimension `dim`. Truncation does not
    /// renormalize.
    pub fn resized(&self, dim: usize) -> DensityMatrix {
        let d = self.dim();
        let m = DMatrix::from_fn(dim, dim, |i, j| {
            if i < d && j < d {
                self.m[(i, j)]
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        DensityMatrix { m }
    }

    /// Truncates to `n_max` and renormalizes.
    pub fn truncated(&self, n_max: usize) -> Result<DensityMatrix> {
        DensityMatrix::from_unnormalized(self.resized(n_max + 1).m)
    }

    /// Frobenius-norm distance.
    pub fn frobenius_distance(&self, other: &DensityMatrix) -> Result<f64> {
        check_dims(self, other)?;
        Ok((&self.m - &other.m).norm())
    }

    /// Trace distance `(1/2) ||a - b||_1`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        check_dims(self, other)?;
        let diff = &self.m - &other.m;
        let ev = eigh(diff).eigenvalues;
        Ok(0.5 * ev.iter().map(|v| v.abs()).sum::<f64>())
    }
}

fn check_dims(a: &DensityMatrix, b: &DensityMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        Err(Error::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        })
    } else {
        Ok(())
    }
}

/// Principal square root of a Hermitian positive semidefinite matrix;
/// negative rounding noise in the spectrum is clipped to zero.
pub(crate) fn psd_sqrt(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let eig = eigh(m.clone());
    let v = &eig.eigenvectors;
    // Rounding noise near zero would otherwise be amplified by the root.
    let floor = 1e-13 * eig.eigenvalues.amax();
    let s = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| {
        let l = if l > floor { l } else { 0.0 };
        Complex64::new(l.sqrt(), 0.0)
    }));
    v * s * v.adjoint()
}

/// Uhlmann fidelity `(Tr sqrt(sqrt(a) b sqrt(a)))^2`, clamped to `[0, 1]`.
pub fn fidelity(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    check_dims(a, b)?;
    let sa = psd_sqrt(&a.m);
    let inner = hermitize(&(&sa * &b.m * &sa));
    let ev = eigh(inner).eigenvalues;
    // Roots of round-off sized eigenvalues would add ~1e-8 each.
    let floor = 1e-14 * ev.amax();
    let root: f64 = ev.iter().filter(|&&l| l > floor).map(|l| l.sqrt()).sum();
    Ok((root * root).clamp(0.0, 1.0))
}
