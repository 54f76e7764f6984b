//! Monte Carlo homodyne data from a known state.
//!
//! Each record is drawn by inverting the cumulative marginal at the record's
//! phase. The cumulative distribution is tabulated once per state on a
//! 4096-node grid, split by Fock off-diagonal order `d` so that the CDF at an
//! arbitrary phase is `B_0(q) + 2 Re sum_d B_d(q) exp(i d theta)`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{
    bernoulli_loss, fill_wavefunctions, wrap_phase, DensityMatrix, QuadratureSample,
};

/// Nodes of the inverse-CDF table.
pub const CDF_NODES: usize = 4096;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhaseSchedule {
    /// Independent uniform phases on `[0, 2pi)`.
    UniformRandom,
    /// `n_phases` equally spaced phases on `[0, 2pi)`, recorded in
    /// consecutive equal-sized blocks as a slow phase sweep would.
    Swept { n_phases: usize },
    /// The listed phases, cycled.
    Fixed { thetas: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionPlan {
    pub n_samples: usize,
    pub phase_schedule: PhaseSchedule,
    /// Detector efficiency in `(0, 1]`.
    pub eta: f64,
    /// Electronic signal-to-noise ratio, `> 1` when present.
    pub snr: Option<f64>,
    /// Mode-match probability in `(0, 1]`.
    pub xi: f64,
    pub seed: u64,
}

impl AcquisitionPlan {
    /// Ideal detection with uniformly random phases.
    pub fn new(n_samples: usize, seed: u64) -> Self {
        AcquisitionPlan {
            n_samples,
            phase_schedule: PhaseSchedule::UniformRandom,
            eta: 1.0,
            snr: None,
            xi: 1.0,
            seed,
        }
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    pub fn with_schedule(mut self, schedule: PhaseSchedule) -> Self {
        self.phase_schedule = schedule;
        self
    }

    pub fn with_snr(mut self, snr: f64) -> Self {
        self.snr = Some(snr);
        self
    }

    pub fn with_xi(mut self, xi: f64) -> Self {
        self.xi = xi;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::InvalidParameter("n_samples must be positive".into()));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::domain("eta", self.eta, "(0, 1]"));
        }
        if !(self.xi > 0.0 && self.xi <= 1.0) {
            return Err(Error::domain("xi", self.xi, "(0, 1]"));
        }
        effective_efficiency(self.eta, self.snr)?;
        match &self.phase_schedule {
            PhaseSchedule::UniformRandom => {}
            PhaseSchedule::Swept { n_phases } => {
                if *n_phases == 0 {
                    return Err(Error::InvalidParameter(
                        "swept schedule needs n_phases >= 1".into(),
                    ));
                }
            }
            PhaseSchedule::Fixed { thetas } => {
                if thetas.is_empty() {
                    return Err(Error::InvalidParameter(
                        "fixed schedule needs at least one phase".into(),
                    ));
                }
                if let Some(t) = thetas.iter().find(|t| !t.is_finite()) {
                    return Err(Error::domain("theta", *t, "finite"));
                }
            }
        }
        Ok(())
    }
}

/// Overall efficiency once electronic noise of signal-to-noise ratio `S` is
/// counted as an extra optical loss of `1/S`.
pub fn effective_efficiency(eta: f64, snr: Option<f64>) -> Result<f64> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::domain("eta", eta, "(0, 1]"));
    }
    match snr {
        None => Ok(eta),
        Some(s) if s > 1.0 && s.is_finite() => Ok(eta * (1.0 - 1.0 / s)),
        Some(s) if s == f64::INFINITY => Ok(eta),
        Some(s) => Err(Error::domain("snr", s, "> 1")),
    }
}

/// Tabulated cumulative quadrature distribution of one state, valid at any
/// phase.
pub struct MarginalTable {
    q_cut: f64,
    h: f64,
    /// `cum[d][j]`, cumulative integral of the `d`-th off-diagonal band.
    cum: Vec<Vec<Complex64>>,
}

impl MarginalTable {
    pub fn new(rho: &DensityMatrix) -> Self {
        let dim = rho.dim();
        let n_max = dim - 1;
        let q_cut = 2.0 * (n_max as f64).sqrt() + 4.0;
        let h = 2.0 * q_cut / (CDF_NODES - 1) as f64;
        let m = rho.matrix();
        let mut psi = vec![0.0; dim];
        let mut cum = vec![vec![Complex64::new(0.0, 0.0); CDF_NODES]; dim];
        let mut prev = vec![Complex64::new(0.0, 0.0); dim];
        for j in 0..CDF_NODES {
            let q = -q_cut + j as f64 * h;
            fill_wavefunctions(q, &mut psi);
            for d in 0..dim {
                let mut a = Complex64::new(0.0, 0.0);
                for k in 0..dim - d {
                    a += m[(k, k + d)] * (psi[k] * psi[k + d]);
                }
                if j > 0 {
                    cum[d][j] = cum[d][j - 1] + (a + prev[d]) * (0.5 * h);
                }
                prev[d] = a;
            }
        }
        MarginalTable { q_cut, h, cum }
    }

    pub fn q_cut(&self) -> f64 {
        self.q_cut
    }

    /// Unnormalised CDF at node `j`; `phases[d] = exp(i d theta)`.
    fn cdf_at(&self, j: usize, phases: &[Complex64]) -> f64 {
        let mut acc = self.cum[0][j].re;
        for (row, ph) in self.cum.iter().zip(phases).skip(1) {
            acc += 2.0 * (row[j] * ph).re;
        }
        acc
    }

    fn phases(&self, theta: f64) -> Vec<Complex64> {
        let step = Complex64::from_polar(1.0, theta);
        let mut out = Vec::with_capacity(self.cum.len());
        let mut z = Complex64::new(1.0, 0.0);
        for _ in 0..self.cum.len() {
            out.push(z);
            z *= step;
        }
        out
    }

    /// Quadrature value whose cumulative probability at `theta` is `u`.
    pub fn invert(&self, theta: f64, u: f64) -> f64 {
        let phases = self.phases(theta);
        let total = self.cdf_at(CDF_NODES - 1, &phases);
        let target = u * total;
        let (mut lo, mut hi) = (0usize, CDF_NODES - 1);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.cdf_at(mid, &phases) <= target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let c_lo = self.cdf_at(lo, &phases);
        let c_hi = self.cdf_at(hi, &phases);
        let frac = if c_hi > c_lo {
            ((target - c_lo) / (c_hi - c_lo)).clamp(0.0, 1.0)
        } else {
            0.5
        };
        -self.q_cut + (lo as f64 + frac) * self.h
    }
}

fn phase_for(schedule: &PhaseSchedule, i: usize, n: usize, rng: &mut ChaCha20Rng) -> f64 {
    match schedule {
        PhaseSchedule::UniformRandom => rng.gen::<f64>() * TAU,
        PhaseSchedule::Swept { n_phases } => {
            let block = (i as u128 * *n_phases as u128 / n as u128) as usize;
            TAU * block as f64 / *n_phases as f64
        }
        PhaseSchedule::Fixed { thetas } => thetas[i % thetas.len()],
    }
}

/// Draws `plan.n_samples` homodyne records from `rho`.
///
/// Per record: with probability `xi` the detected mode is `rho`, otherwise
/// vacuum; the effective efficiency is then applied as photon loss (vacuum
/// is loss-invariant, so the order matters only for bookkeeping). The output
/// depends only on `rho` and `plan`.
pub fn sample(rho: &DensityMatrix, plan: &AcquisitionPlan) -> Result<Vec<QuadratureSample>> {
    plan.validate()?;
    let eta = effective_efficiency(plan.eta, plan.snr)?;
    let lossy = bernoulli_loss(rho, eta)?;
    let target = MarginalTable::new(&lossy);
    let vacuum = if plan.xi < 1.0 {
        Some(MarginalTable::new(&DensityMatrix::vacuum(0)))
    } else {
        None
    };
    let mut rng = ChaCha20Rng::seed_from_u64(plan.seed);
    let n = plan.n_samples;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let theta = wrap_phase(phase_for(&plan.phase_schedule, i, n, &mut rng));
        let table = match &vacuum {
            Some(v) if rng.gen::<f64>() >= plan.xi => v,
            _ => &target,
        };
        let q = table.invert(theta, rng.gen::<f64>());
        out.push(QuadratureSample { theta, q });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn moments(s: &[QuadratureSample]) -> (f64, f64) {
        let n = s.len() as f64;
        let mean = s.iter().map(|r| r.q).sum::<f64>() / n;
        let m2 = s.iter().map(|r| r.q * r.q).sum::<f64>() / n;
        (mean, m2)
    }

    #[test]
    fn effective_efficiency_examples() {
        assert_eq!(effective_efficiency(0.62, None).unwrap(), 0.62);
        assert!((effective_efficiency(1.0, Some(10.0)).unwrap() - 0.9).abs() < 1e-15);
        assert!(
            (effective_efficiency(0.62, Some(14.0)).unwrap() - 0.62 * 13.0 / 14.0).abs() < 1e-15
        );
        assert!((effective_efficiency(0.62, Some(14.0)).unwrap() - 0.5757).abs() < 1e-4);
        assert!(effective_efficiency(0.62, Some(1.0)).is_err());
        assert!(effective_efficiency(0.62, Some(0.5)).is_err());
    }

    #[test]
    fn same_seed_same_output() {
        let rho = DensityMatrix::fock(1, 4).unwrap();
        let plan = AcquisitionPlan::new(500, 7).with_eta(0.8).with_xi(0.9);
        let a = sample(&rho, &plan).unwrap();
        let b = sample(&rho, &plan).unwrap();
        assert_eq!(a, b);
        let c = sample(&rho, &AcquisitionPlan { seed: 8, ..plan }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn vacuum_variance() {
        let s = sample(&DensityMatrix::vacuum(6), &AcquisitionPlan::new(100_000, 1)).unwrap();
        let (mean, m2) = moments(&s);
        assert!((m2 - mean * mean - 0.5).abs() < 0.01);
    }

    #[test]
    fn single_photon_second_moment() {
        let one = DensityMatrix::fock(1, 6).unwrap();
        let (_, m2) = moments(&sample(&one, &AcquisitionPlan::new(100_000, 2)).unwrap());
        assert!((m2 - 1.5).abs() < 0.02, "{m2}");
        let plan = AcquisitionPlan::new(100_000, 3).with_eta(0.55);
        let (_, m2) = moments(&sample(&one, &plan).unwrap());
        assert!((m2 - 1.05).abs() < 0.02, "{m2}");
    }

    #[test]
    fn mode_mismatch_mixes_in_vacuum() {
        let one = DensityMatrix::fock(1, 6).unwrap();
        let plan = AcquisitionPlan::new(100_000, 4).with_xi(0.5);
        let (_, m2) = moments(&sample(&one, &plan).unwrap());
        assert!((m2 - 1.0).abs() < 0.02, "{m2}");
    }

    #[test]
    fn schedules() {
        let vac = DensityMatrix::vacuum(2);
        let s = sample(
            &vac,
            &AcquisitionPlan::new(12, 0).with_schedule(PhaseSchedule::Swept { n_phases: 4 }),
        )
        .unwrap();
        let thetas: Vec<f64> = s.iter().map(|r| r.theta).collect();
        for (k, chunk) in thetas.chunks(3).enumerate() {
            assert!(chunk
                .iter()
                .all(|&t| (t - TAU * k as f64 / 4.0).abs() < 1e-15));
        }
        let fixed = PhaseSchedule::Fixed {
            thetas: vec![0.5, -1.0],
        };
        let s = sample(&vac, &AcquisitionPlan::new(4, 0).with_schedule(fixed)).unwrap();
        assert_eq!(s[2].theta, 0.5);
        assert!((s[3].theta - (TAU - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn invalid_plans() {
        let vac = DensityMatrix::vacuum(2);
        assert!(sample(&vac, &AcquisitionPlan::new(0, 0)).is_err());
        assert!(sample(&vac, &AcquisitionPlan::new(5, 0).with_eta(0.0)).is_err());
        assert!(sample(&vac, &AcquisitionPlan::new(5, 0).with_xi(1.5)).is_err());
        assert!(sample(&vac, &AcquisitionPlan::new(5, 0).with_snr(0.9)).is_err());
        let empty = PhaseSchedule::Fixed { thetas: vec![] };
        assert!(sample(&vac, &AcquisitionPlan::new(5, 0).with_schedule(empty)).is_err());
    }
}
