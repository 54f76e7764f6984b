use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::fock::{
    check_order, fill_wavefunctions, loss_amplitudes, DensityMatrix, QuadratureSample,
};
use crate::special::gauss_nodes;

/// Smallest probability density used inside logarithms and ratios.
pub const PROBABILITY_FLOOR: f64 = 1e-300;

/// Fock-basis matrix of a (possibly loss-degraded) quadrature projector.
#[derive(Clone, Debug, PartialEq)]
pub struct PovmElement {
    pub matrix: DMatrix<Complex64>,
    pub q: f64,
    pub theta: f64,
    pub eta: f64,
}

fn check_eta(eta: f64) -> Result<()> {
    if eta > 0.0 && eta <= 1.0 {
        Ok(())
    } else {
        Err(Error::domain("eta", eta, "(0, 1]"))
    }
}

/// Upper triangle of the real kernel `S_ab(q)`, with
/// `Pi_ab = exp(i (a - b) theta) S_ab(q)`, packed by diagonals: all
/// `(a, a)`, then all `(a, a + 1)`, and so on.
///
/// For `eta = 1`, `S_ab = psi_a psi_b`. Otherwise the projector is pulled
/// back through the loss channel:
/// `S_ab = sum_k A[a-k][k] A[b-k][k] psi_{a-k} psi_{b-k}`.
fn fill_kernel(q: f64, amp: Option<&[Vec<f64>]>, psi: &mut [f64], out: &mut [f64]) {
    let d = psi.len();
    fill_wavefunctions(q, psi);
    for (p, (a, b)) in diagonal_order(d).enumerate() {
        out[p] = match amp {
            None => psi[a] * psi[b],
            Some(amp) => (0..=a)
                .map(|k| amp[a - k][k] * amp[b - k][k] * psi[a - k] * psi[b - k])
                .sum(),
        };
    }
}

/// `(a, b)` with `a <= b` in packing order.
fn diagonal_order(d: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..d).flat_map(move |k| (0..d - k).map(move |a| (a, a + k)))
}

/// Dense Hermitian matrix from a packed kernel at phase `theta`.
fn unpack(kernel: &[f64], theta: f64, d: usize) -> DMatrix<Complex64> {
    let mut matrix = DMatrix::zeros(d, d);
    for (p, (a, b)) in diagonal_order(d).enumerate() {
        let z = Complex64::from_polar(kernel[p], (a as f64 - b as f64) * theta);
        matrix[(a, b)] = z;
        matrix[(b, a)] = z.conj();
    }
    matrix
}

fn packed_len(d: usize) -> usize {
    d * (d + 1) / 2
}

fn pack(rho: &DMatrix<Complex64>) -> Vec<Complex64> {
    diagonal_order(rho.nrows())
        .map(|(a, b)| rho[(a, b)])
        .collect()
}

/// `Tr[Pi rho] = sum_k c_k Re(exp(i k theta) sum_a S_{a,a+k} rho_{a,a+k})`
/// with `c_0 = 1` and `c_k = 2` otherwise.
fn trace_with(packed: &[Complex64], phases: &[Complex64], kernel: &[f64]) -> f64 {
    let d = phases.len();
    let mut start = 0;
    let mut total = 0.0;
    for (k, ph) in phases.iter().enumerate() {
        let end = start + d - k;
        let (mut re, mut im) = (0.0, 0.0);
        for (z, &s) in packed[start..end].iter().zip(&kernel[start..end]) {
            re += z.re * s;
            im += z.im * s;
        }
        let v = ph.re * re - ph.im * im;
        total += if k == 0 { v } else { 2.0 * v };
        start = end;
    }
    total
}

/// Adds `scale * Pi` to a packed upper triangle; `Pi_{a,a+k} = exp(-i k theta) S_{a,a+k}`.
fn accumulate(upper: &mut [Complex64], scale: f64, phases: &[Complex64], kernel: &[f64]) {
    let d = phases.len();
    let mut start = 0;
    for (k, ph) in phases.iter().enumerate() {
        let end = start + d - k;
        let (zr, zi) = (ph.re * scale, -ph.im * scale);
        for (u, &s) in upper[start..end].iter_mut().zip(&kernel[start..end]) {
            u.re += zr * s;
            u.im += zi * s;
        }
        start = end;
    }
}

/// The POVM element for outcome `q` at phase `theta`, seen through a detector
/// of efficiency `eta`. Satisfies `Tr[Pi_eta rho] = Tr[Pi_1 loss(rho, eta)]`.
pub fn build_povm(q: f64, theta: f64, eta: f64, n_max: usize) -> Result<PovmElement> {
    check_order(n_max)?;
    check_eta(eta)?;
    let s = QuadratureSample::new(theta, q)?;
    let d = n_max + 1;
    let amp = (eta < 1.0).then(|| loss_amplitudes(d, eta));
    let mut psi = vec![0.0; d];
    let mut kernel = vec![0.0; packed_len(d)];
    fill_kernel(s.q, amp.as_deref(), &mut psi, &mut kernel);
    Ok(PovmElement {
        matrix: unpack(&kernel, s.theta, d),
        q: s.q,
        theta: s.theta,
        eta,
    })
}

/// Weighted POVM elements for a whole data set, stored as phases, weights and
/// packed real kernels.
#[derive(Clone, Debug)]
pub struct PovmSet {
    dim: usize,
    eta: f64,
    thetas: Vec<f64>,
    // exp(i theta) per element
    steps: Vec<Complex64>,
    qs: Vec<f64>,
    weights: Vec<f64>,
    total_weight: f64,
    kernels: Vec<f64>,
    // quadrature interval the detector covered
    window: (f64, f64),
}

/// Log-likelihood and the unnormalised upper triangle of `R` from one pass.
pub(crate) struct Evaluation {
    pub ll: f64,
    pub hits: usize,
    upper: Vec<Complex64>,
    // first weighted element with a non-positive probability
    bad: Option<usize>,
}

impl PovmSet {
    /// One unit-weight element per sample.
    pub fn from_samples(samples: &[QuadratureSample], eta: f64, n_max: usize) -> Result<Self> {
        let records: Vec<(f64, f64, f64)> = samples.iter().map(|s| (s.theta, s.q, 1.0)).collect();
        Self::from_records(&records, eta, n_max)
    }

    /// Elements `(theta, q, weight)`; weights play the role of outcome
    /// frequencies.
    pub fn from_records(records: &[(f64, f64, f64)], eta: f64, n_max: usize) -> Result<Self> {
        check_order(n_max)?;
        check_eta(eta)?;
        if records.is_empty() {
            return Err(Error::EmptyData);
        }
        let d = n_max + 1;
        let len = packed_len(d);
        let amp = (eta < 1.0).then(|| loss_amplitudes(d, eta));
        let mut psi = vec![0.0; d];
        let mut kernels = vec![0.0; records.len() * len];
        let mut thetas = Vec::with_capacity(records.len());
        let mut qs = Vec::with_capacity(records.len());
        let mut weights = Vec::with_capacity(records.len());
        for (&(theta, q, w), chunk) in records.iter().zip(kernels.chunks_mut(len)) {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::domain("weight", w, ">= 0"));
            }
            let s = QuadratureSample::new(theta, q)?;
            fill_kernel(s.q, amp.as_deref(), &mut psi, chunk);
            thetas.push(s.theta);
            qs.push(s.q);
            weights.push(w);
        }
        let total_weight: f64 = weights.iter().sum();
        if !(total_weight > 0.0) {
            return Err(Error::InvalidParameter(
                "records carry zero total weight".into(),
            ));
        }
        let window = qs
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &q| {
                (a.min(q), b.max(q))
            });
        Ok(PovmSet {
            window,
            dim: d,
            eta,
            steps: thetas
                .iter()
                .map(|&t| Complex64::from_polar(1.0, t))
                .collect(),
            thetas,
            qs,
            weights,
            total_weight,
            kernels,
        })
    }

    /// Histograms the samples on an `n_phase x n_q` lattice and keeps one
    /// element per occupied cell, weighted by its count.
    pub fn binned(
        samples: &[QuadratureSample],
        eta: f64,
        n_max: usize,
        n_phase: usize,
        n_q: usize,
    ) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyData);
        }
        if n_phase == 0 || n_q == 0 {
            return Err(Error::InvalidParameter(
                "binning needs at least one bin per axis".into(),
            ));
        }
        let (lo, hi) = samples
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), s| {
                (a.min(s.q), b.max(s.q))
            });
        let width = if hi > lo { (hi - lo) / n_q as f64 } else { 1.0 };
        let dtheta = TAU / n_phase as f64;
        let mut counts = vec![0usize; n_phase * n_q];
        for s in samples {
            let a = ((s.theta / dtheta) as usize).min(n_phase - 1);
            let b = (((s.q - lo) / width) as usize).min(n_q - 1);
            counts[a * n_q + b] += 1;
        }
        let records: Vec<(f64, f64, f64)> = counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(k, &c)| {
                let (a, b) = (k / n_q, k % n_q);
                (
                    (a as f64 + 0.5) * dtheta,
                    lo + (b as f64 + 0.5) * width,
                    c as f64,
                )
            })
            .collect();
        let mut set = Self::from_records(&records, eta, n_max)?;
        set.window = (lo, lo + n_q as f64 * width);
        Ok(set)
    }

    /// Restricts the detection window to `[lo, hi]`, which must contain every
    /// recorded outcome. By default it spans the recorded outcomes.
    pub fn with_window(mut self, lo: f64, hi: f64) -> Result<Self> {
        let (a, b) = self.window;
        if !(lo <= a && hi >= b) {
            return Err(Error::InvalidParameter(format!(
                "window [{lo}, {hi}] does not contain the outcomes [{a}, {b}]"
            )));
        }
        self.window = (lo, hi);
        Ok(self)
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thetas.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    /// Element `i` as a dense matrix.
    pub fn element(&self, i: usize) -> PovmElement {
        let d = self.dim;
        let kernel = &self.kernels[i * packed_len(d)..(i + 1) * packed_len(d)];
        PovmElement {
            matrix: unpack(kernel, self.thetas[i], d),
            q: self.qs[i],
            theta: self.thetas[i],
            eta: self.eta,
        }
    }

    fn check_dim(&self, rho: &DMatrix<Complex64>) -> Result<()> {
        if rho.nrows() != self.dim {
            return Err(Error::DimensionMismatch {
                left: rho.nrows(),
                right: self.dim,
            });
        }
        Ok(())
    }

    /// Visits `(index, weight, phases, kernel)` where `phases[k] = exp(i k theta)`.
    fn for_each(&self, mut f: impl FnMut(usize, f64, &[Complex64], &[f64])) {
        let d = self.dim;
        let len = packed_len(d);
        let mut phases = vec![Complex64::new(1.0, 0.0); d];
        for (i, kernel) in self.kernels.chunks(len).enumerate() {
            let step = self.steps[i];
            for k in 1..d {
                phases[k] = phases[k - 1] * step;
            }
            f(i, self.weights[i], &phases, kernel);
        }
    }

    /// `pr_i = Tr[Pi_i rho]` for every element.
    pub fn probabilities(&self, rho: &DensityMatrix) -> Result<Vec<f64>> {
        self.check_dim(rho.matrix())?;
        Ok(self.probabilities_raw(rho.matrix()))
    }

    pub(crate) fn probabilities_raw(&self, rho: &DMatrix<Complex64>) -> Vec<f64> {
        let packed = pack(rho);
        let mut out = vec![0.0; self.len()];
        self.for_each(|i, _, phases, kernel| out[i] = trace_with(&packed, phases, kernel));
        out
    }

    /// Probabilities, floored log-likelihood and `R` accumulated in a single
    /// pass over the elements.
    pub(crate) fn evaluate(&self, rho: &DMatrix<Complex64>) -> Evaluation {
        let packed = pack(rho);
        let mut eval = Evaluation {
            ll: 0.0,
            hits: 0,
            upper: vec![Complex64::new(0.0, 0.0); packed.len()],
            bad: None,
        };
        self.for_each(|i, w, phases, kernel| {
            if w == 0.0 {
                return;
            }
            let pr = trace_with(&packed, phases, kernel);
            if pr < PROBABILITY_FLOOR {
                eval.hits += 1;
            }
            eval.ll += w * pr.max(PROBABILITY_FLOOR).ln();
            if !(pr > 0.0) {
                eval.bad.get_or_insert(i);
            } else if eval.bad.is_none() {
                accumulate(
                    &mut eval.upper,
                    w / pr.max(PROBABILITY_FLOOR),
                    phases,
                    kernel,
                );
            }
        });
        eval
    }

    /// `R` from a finished [`Evaluation`].
    pub(crate) fn r_from(&self, eval: &Evaluation) -> Result<DMatrix<Complex64>> {
        if let Some(index) = eval.bad {
            return Err(self.singular(index));
        }
        Ok(self.assemble(&eval.upper))
    }

    fn singular(&self, index: usize) -> Error {
        Error::SingularData {
            index,
            theta: self.thetas[index],
            q: self.qs[index],
        }
    }

    fn assemble(&self, upper: &[Complex64]) -> DMatrix<Complex64> {
        let d = self.dim;
        let norm = 1.0 / self.total_weight;
        let mut r = DMatrix::zeros(d, d);
        for (p, (a, b)) in diagonal_order(d).enumerate() {
            let z = upper[p] * norm;
            r[(a, b)] = z;
            r[(b, a)] = z.conj();
        }
        for a in 0..d {
            r[(a, a)].im = 0.0;
        }
        r
    }

    /// `sum_i w_i ln max(pr_i, floor)` and the number of floored elements.
    pub(crate) fn log_likelihood_of(&self, probs: &[f64]) -> (f64, usize) {
        let mut hits = 0;
        let mut total = 0.0;
        for (&p, &w) in probs.iter().zip(&self.weights) {
            if w == 0.0 {
                continue;
            }
            if p < PROBABILITY_FLOOR {
                hits += 1;
            }
            total += w * p.max(PROBABILITY_FLOOR).ln();
        }
        (total, hits)
    }

    /// Log-likelihood `sum_i w_i ln pr_i` with probabilities floored at
    /// [`PROBABILITY_FLOOR`].
    pub fn log_likelihood(&self, rho: &DensityMatrix) -> Result<f64> {
        let probs = self.probabilities(rho)?;
        Ok(self.log_likelihood_of(&probs).0)
    }

    /// `R = sum_i w_i Pi_i / pr_i / sum_i w_i` for given probabilities. A
    /// non-positive probability on a weighted element is an error; positive
    /// values below the floor are clamped and counted.
    pub(crate) fn r_operator_with(&self, probs: &[f64]) -> Result<(DMatrix<Complex64>, usize)> {
        let mut upper = vec![Complex64::new(0.0, 0.0); packed_len(self.dim)];
        let mut hits = 0;
        let mut bad = None;
        self.for_each(|i, w, phases, kernel| {
            if w == 0.0 || bad.is_some() {
                return;
            }
            let pr = probs[i];
            if !(pr > 0.0) {
                bad = Some(i);
                return;
            }
            if pr < PROBABILITY_FLOOR {
                hits += 1;
            }
            accumulate(&mut upper, w / pr.max(PROBABILITY_FLOOR), phases, kernel);
        });
        match bad {
            Some(index) => Err(self.singular(index)),
            None => Ok((self.assemble(&upper), hits)),
        }
    }

    /// The operator `R(rho) = sum_i w_i Pi_i / Tr[Pi_i rho] / sum_i w_i`.
    pub fn r_operator(&self, rho: &DensityMatrix) -> Result<DMatrix<Complex64>> {
        let probs = self.probabilities(rho)?;
        Ok(self.r_operator_with(&probs)?.0)
    }

    /// The completeness operator of the measurement actually performed,
    /// `G = sum_i w_i int_window Pi(q, theta_i) dq / sum_i w_i`: every
    /// recorded phase contributes all outcomes the detector could have
    /// registered. It equals the identity when the window is the whole line.
    pub fn completeness(&self) -> DMatrix<Complex64> {
        let d = self.dim;
        let (lo, hi) = self.window;
        let amp = (self.eta < 1.0).then(|| loss_amplitudes(d, self.eta));
        let mut integral = vec![0.0; packed_len(d)];
        let mut psi = vec![0.0; d];
        let mut kernel = vec![0.0; packed_len(d)];
        let count = ((hi - lo) * 2.0).ceil().max(1.0) as usize + d / 8;
        for (q, w) in gauss_nodes(lo, hi, count) {
            fill_kernel(q, amp.as_deref(), &mut psi, &mut kernel);
            for (acc, &s) in integral.iter_mut().zip(&kernel) {
                *acc += w * s;
            }
        }
        // weighted phase moments c_k = sum_i w_i exp(-i k theta_i)
        let mut moments = vec![Complex64::new(0.0, 0.0); d];
        for (step, &w) in self.steps.iter().zip(&self.weights) {
            let mut ph = Complex64::new(w, 0.0);
            for m in moments.iter_mut() {
                *m += ph;
                ph *= step.conj();
            }
        }
        let mut upper = vec![Complex64::new(0.0, 0.0); packed_len(d)];
        for (p, (a, b)) in diagonal_order(d).enumerate() {
            upper[p] = moments[b - a] * integral[p];
        }
        self.assemble(&upper)
    }

    /// The weighted element sum `sum_i w_i Pi_i / sum_i w_i`.
    pub fn element_sum(&self) -> DMatrix<Complex64> {
        let ones = vec![1.0; self.len()];
        self.r_operator_with(&ones)
            .expect("unit probabilities are positive")
            .0
    }
}

/// `ln L = sum_i ln pr(q_i, theta_i)` of `rho` on unit-weight samples seen with
/// efficiency `eta`.
pub fn log_likelihood(rho: &DensityMatrix, samples: &[QuadratureSample], eta: f64) -> Result<f64> {
    PovmSet::from_samples(samples, eta, rho.n_max())?.log_likelihood(rho)
}

/// The operator `R` for unit-weight samples, normalised by their number.
pub fn r_operator(
    rho: &DensityMatrix,
    samples: &[QuadratureSample],
    eta: f64,
) -> Result<DMatrix<Complex64>> {
    PovmSet::from_samples(samples, eta, rho.n_max())?.r_operator(rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{bernoulli_loss, fock_wavefunctions, marginal};
    use std::f64::consts::PI;

    #[test]
    fn ideal_projector_elements() {
        let (q, theta) = (0.7, 1.1);
        let pi = build_povm(q, theta, 1.0, 4).unwrap();
        let psi = fock_wavefunctions(4, q).unwrap();
        for a in 0..5 {
            for b in 0..5 {
                let want = Complex64::from_polar(psi[a] * psi[b], (a as f64 - b as f64) * theta);
                assert!((pi.matrix[(a, b)] - want).norm() < 1e-15);
            }
        }
        // rank one: Pi^2 = Tr(Pi) Pi
        let sq = &pi.matrix * &pi.matrix;
        let tr = pi.matrix.trace();
        assert!((sq - pi.matrix.map(|z| z * tr)).norm() < 1e-14);
    }

    #[test]
    fn lossy_element_is_dual_to_the_channel() {
        let rho = DensityMatrix::from_ket(&[
            Complex64::new(0.5, 0.0),
            Complex64::new(0.3, -0.4),
            Complex64::new(0.1, 0.2),
            Complex64::new(-0.3, 0.1),
        ])
        .unwrap();
        for &(q, theta, eta) in &[(0.2, 0.0, 0.55), (-1.3, 2.0, 0.8), (2.1, -0.7, 0.3)] {
            let pi = build_povm(q, theta, eta, 3).unwrap();
            let lhs = (&pi.matrix * rho.matrix()).trace().re;
            let rhs = marginal(&bernoulli_loss(&rho, eta).unwrap(), q, theta, 1.0).unwrap();
            assert!((lhs - rhs).abs() < 1e-12, "{lhs} vs {rhs}");
        }
        // Tr[Pi_0.55 |1><1|] = 0.55 psi_1^2 + 0.45 psi_0^2
        let q = 0.4;
        let psi = fock_wavefunctions(1, q).unwrap();
        let pi = build_povm(q, 0.3, 0.55, 3).unwrap();
        let want = 0.55 * psi[1] * psi[1] + 0.45 * psi[0] * psi[0];
        assert!((pi.matrix[(1, 1)].re - want).abs() < 1e-15);
    }

    #[test]
    fn elements_are_hermitian_psd_and_periodic() {
        let a = build_povm(0.9, 0.4, 0.7, 5).unwrap();
        let b = build_povm(0.9, 0.4 + 2.0 * PI, 0.7, 5).unwrap();
        assert!((&a.matrix - &b.matrix).norm() < 1e-12);
        assert_eq!(a.matrix, a.matrix.adjoint());
        let ev = nalgebra::SymmetricEigen::new(a.matrix.clone()).eigenvalues;
        assert!(ev.min() > -1e-14);
    }

    #[test]
    fn set_matches_dense_elements() {
        let records = [(0.3, -0.5, 1.0), (2.0, 1.2, 2.5), (4.0, 0.1, 0.5)];
        let set = PovmSet::from_records(&records, 0.8, 4).unwrap();
        let rho = DensityMatrix::maximally_mixed(4);
        let probs = set.probabilities(&rho).unwrap();
        let mut r = DMatrix::zeros(5, 5);
        for (i, &(theta, q, w)) in records.iter().enumerate() {
            let e = build_povm(q, theta, 0.8, 4).unwrap();
            assert!((set.element(i).matrix.clone() - &e.matrix).norm() < 1e-15);
            let pr = (&e.matrix * rho.matrix()).trace().re;
            assert!((probs[i] - pr).abs() < 1e-15);
            r += e.matrix.map(|z| z * (w / pr));
        }
        r /= Complex64::new(4.0, 0.0);
        assert!((set.r_operator(&rho).unwrap() - r).norm() < 1e-14);
    }

    #[test]
    fn vacuum_sample_likelihood() {
        let s = [QuadratureSample::new(0.0, 0.0).unwrap()];
        let ll = log_likelihood(&DensityMatrix::vacuum(3), &s, 1.0).unwrap();
        assert!((ll + 0.5 * PI.ln()).abs() < 1e-15);
        assert!((ll + 0.5724).abs() < 1e-4);
    }

    #[test]
    fn zero_probability_is_singular() {
        // psi_1(0) = 0
        let s = [QuadratureSample::new(0.0, 0.0).unwrap()];
        let err = r_operator(&DensityMatrix::fock(1, 2).unwrap(), &s, 1.0).unwrap_err();
        assert!(matches!(err, Error::SingularData { index: 0, .. }));
        let ll = log_likelihood(&DensityMatrix::fock(1, 2).unwrap(), &s, 1.0).unwrap();
        assert_eq!(ll, PROBABILITY_FLOOR.ln());
    }
}
