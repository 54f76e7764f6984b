//! Maximum-likelihood reconstruction by the `R rho R` iteration.
//!
//! For weighted outcomes with POVM elements `Pi_i` and probabilities
//! `pr_i = Tr[Pi_i rho]`, the likelihood is maximal where
//! `R rho R = rho` with `R = sum_i w_i Pi_i / pr_i / sum_i w_i`. Each step
//!
//! `rho <- N[(1 + eps R) rho (1 + eps R)]`
//!
//! keeps the iterate positive and unit-trace; `eps = inf` is the plain
//! `R rho R` map. A step that lowers the likelihood is retried with half the
//! step length, so accepted iterates never lose likelihood.

mod bootstrap;
mod povm;

pub use bootstrap::{
    bootstrap_errors, bootstrap_with_seeds, BootstrapResult, MIN_BOOTSTRAP_REPLICATES,
};
pub use povm::{build_povm, log_likelihood, r_operator, PovmElement, PovmSet, PROBABILITY_FLOOR};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{eigh, DensityMatrix, QuadratureSample};

/// Consecutive small likelihood changes required to stop.
pub const STOP_WINDOW: usize = 10;
/// Step lengths below this end the iteration: no ascent is left to resolve.
pub const MIN_EPSILON: f64 = 1e-12;
/// Above this condition number of `G` a warning is recorded.
pub const G_CONDITION_WARN: f64 = 1e4;
/// Above this condition number of `G` the correction is refused.
pub const G_CONDITION_MAX: f64 = 1e12;
/// Unbinned data sets larger than this are binned by [`reconstruct`].
pub const AUTO_BIN_THRESHOLD: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxlikConfig {
    pub n_max: usize,
    pub max_iters: usize,
    /// Dilution step length; `None` is the undiluted `R rho R` map.
    pub epsilon: Option<f64>,
    /// Relative log-likelihood change regarded as stationary.
    pub stop_tol: f64,
    pub bias_correction: bool,
    /// Detector efficiency folded into the POVM elements.
    pub eta: f64,
    /// `(phase bins, quadrature bins)` for binned likelihoods.
    pub binning: Option<(usize, usize)>,
    /// Quadrature range the detector covers, for the bias correction;
    /// `None` takes the range of the recorded outcomes.
    pub window: Option<(f64, f64)>,
}

impl Default for MaxlikConfig {
    fn default() -> Self {
        MaxlikConfig {
            n_max: 10,
            max_iters: 2000,
            epsilon: Some(1.0),
            stop_tol: 1e-9,
            bias_correction: false,
            eta: 1.0,
            binning: None,
            window: None,
        }
    }
}

impl MaxlikConfig {
    pub fn new(n_max: usize) -> Self {
        MaxlikConfig {
            n_max,
            ..Default::default()
        }
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    pub fn with_epsilon(mut self, epsilon: Option<f64>) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_bias_correction(mut self, on: bool) -> Self {
        self.bias_correction = on;
        self
    }

    pub fn with_window(mut self, lo: f64, hi: f64) -> Self {
        self.window = Some((lo, hi));
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be positive".into()));
        }
        if let Some(eps) = self.epsilon {
            if !(eps > 0.0) {
                return Err(Error::domain("epsilon", eps, "> 0 or infinite"));
            }
        }
        if !(self.stop_tol > 0.0 && self.stop_tol.is_finite()) {
            return Err(Error::domain("stop_tol", self.stop_tol, "> 0"));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::domain("eta", self.eta, "(0, 1]"));
        }
        if let Some((lo, hi)) = self.window {
            if !(lo < hi && lo.is_finite() && hi.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "window [{lo}, {hi}] is empty"
                )));
            }
        }
        crate::fock::check_order(self.n_max)
    }
}

/// Final state and iteration record.
#[derive(Clone, Debug)]
pub struct MaxlikResult {
    pub rho: DensityMatrix,
    pub iterations: usize,
    /// False when `max_iters` ran out first.
    pub converged: bool,
    /// Objective after each accepted step, starting with the initial state.
    pub log_likelihood: Vec<f64>,
    /// `||R rho R - rho||_F` at the final state.
    pub residual: f64,
    /// Step length in use at the end; `None` for undiluted.
    pub epsilon: Option<f64>,
    /// Whether an undiluted run had to switch to dilution.
    pub fallback: bool,
    /// Probabilities clamped at [`PROBABILITY_FLOOR`] at the final state.
    pub floor_hits: usize,
    /// Condition number of `G` for bias-corrected runs.
    pub g_condition: Option<f64>,
    pub warnings: Vec<String>,
}

fn normalized(m: DMatrix<Complex64>) -> DMatrix<Complex64> {
    let h = (&m + m.adjoint()).map(|z| z * 0.5);
    let tr = h.trace().re;
    h.map(|z| z / tr)
}

/// One diluted step `N[(1 + eps R) s (1 + eps R)]`, or `N[R s R]`.
fn step(s: &DMatrix<Complex64>, r: &DMatrix<Complex64>, eps: Option<f64>) -> DMatrix<Complex64> {
    match eps {
        None => normalized(r * s * r),
        Some(e) => {
            let a = DMatrix::identity(r.nrows(), r.ncols()) + r.map(|z| z * e);
            normalized(&a * s * &a)
        }
    }
}

/// `G^(1/2)`, `G^(-1/2)` and the condition number of a positive definite `G`.
struct Conditioner {
    root: DMatrix<Complex64>,
    inv_root: DMatrix<Complex64>,
    g: DMatrix<Complex64>,
    condition: f64,
}

impl Conditioner {
    fn new(g: &DMatrix<Complex64>) -> Result<Self> {
        let eig = eigh(g.clone());
        let (lo, hi) = (eig.eigenvalues.min(), eig.eigenvalues.max());
        let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        if !(condition <= G_CONDITION_MAX) {
            return Err(Error::IllConditioned { condition });
        }
        let v = &eig.eigenvectors;
        let diag = |f: &dyn Fn(f64) -> f64| {
            DMatrix::from_diagonal(&eig.eigenvalues.map(|l| Complex64::new(f(l), 0.0)))
        };
        Ok(Conditioner {
            root: v * diag(&|l| l.sqrt()) * v.adjoint(),
            inv_root: v * diag(&|l| 1.0 / l.sqrt()) * v.adjoint(),
            g: g.clone(),
            condition,
        })
    }
}

fn validate_start(rho0: &DensityMatrix, set: &PovmSet) -> Result<()> {
    if rho0.dim() != set.dim() {
        return Err(Error::DimensionMismatch {
            left: rho0.dim(),
            right: set.dim(),
        });
    }
    if !rho0.is_physical() {
        return Err(Error::NotPhysical(
            "starting state must be positive with unit trace".into(),
        ));
    }
    Ok(())
}

/// Runs the diluted iteration from `rho0`.
pub fn iterate(rho0: &DensityMatrix, set: &PovmSet, cfg: &MaxlikConfig) -> Result<MaxlikResult> {
    cfg.validate()?;
    validate_start(rho0, set)?;
    run(rho0, set, cfg, None)
}

/// Runs the iteration for the extremal equation `G^-1 R rho R G^-1 = rho`,
/// which maximises the likelihood renormalised by `Tr[G rho]`. With
/// `G = c * 1` this is [`iterate`].
pub fn bias_corrected_iterate(
    rho0: &DensityMatrix,
    set: &PovmSet,
    cfg: &MaxlikConfig,
    g: &DMatrix<Complex64>,
) -> Result<MaxlikResult> {
    cfg.validate()?;
    validate_start(rho0, set)?;
    if g.nrows() != set.dim() || g.ncols() != set.dim() {
        return Err(Error::DimensionMismatch {
            left: g.nrows(),
            right: set.dim(),
        });
    }
    let cond = Conditioner::new(g)?;
    run(rho0, set, cfg, Some(&cond))
}

fn run(
    rho0: &DensityMatrix,
    set: &PovmSet,
    cfg: &MaxlikConfig,
    cond: Option<&Conditioner>,
) -> Result<MaxlikResult> {
    let total_weight = set.total_weight();
    // state <-> iterated variable: sigma = G^(1/2) rho G^(1/2)
    let to_rho = |s: &DMatrix<Complex64>| match cond {
        None => s.clone(),
        Some(c) => normalized(&c.inv_root * s * &c.inv_root),
    };
    let objective = |rho: &DMatrix<Complex64>, ll: f64| match cond {
        None => ll,
        Some(c) => ll - total_weight * (&c.g * rho).trace().re.ln(),
    };
    // R in the iterated variable
    let r_tilde = |rho: &DMatrix<Complex64>, r: DMatrix<Complex64>| match cond {
        None => r,
        Some(c) => {
            let scale = (&c.g * rho).trace().re;
            (&c.inv_root * r * &c.inv_root).map(|z| z * scale)
        }
    };

    let mut sigma = match cond {
        None => rho0.matrix().clone(),
        Some(c) => normalized(&c.root * rho0.matrix() * &c.root),
    };
    let mut rho = to_rho(&sigma);
    let mut eval = set.evaluate(&rho);
    let mut ll = objective(&rho, eval.ll);
    let mut trace = vec![ll];
    let mut eps = cfg.epsilon;
    let mut fallback = false;
    let mut quiet = 0;
    let mut converged = false;
    let mut iterations = 0;
    let mut warnings = Vec::new();
    if let Some(c) = cond {
        if c.condition > G_CONDITION_WARN {
            warnings.push(format!(
                "G is poorly conditioned (condition number {:.3e})",
                c.condition
            ));
        }
    }

    while iterations < cfg.max_iters {
        let r = r_tilde(&rho, set.r_from(&eval)?);
        let accepted = loop {
            let cand_sigma = step(&sigma, &r, eps);
            let cand_rho = to_rho(&cand_sigma);
            let cand_eval = set.evaluate(&cand_rho);
            let cand_ll = objective(&cand_rho, cand_eval.ll);
            if cand_ll >= ll && cand_ll.is_finite() {
                break Some((cand_sigma, cand_rho, cand_eval, cand_ll));
            }
            eps = match eps {
                None => {
                    fallback = true;
                    Some(1.0)
                }
                Some(e) if e / 2.0 >= MIN_EPSILON => Some(e / 2.0),
                Some(_) => break None,
            };
        };
        let Some((s, new_rho, new_eval, l)) = accepted else {
            // no representable ascent step is left
            converged = true;
            break;
        };
        iterations += 1;
        let rel = (l - ll).abs() / ll.abs().max(f64::MIN_POSITIVE);
        sigma = s;
        rho = new_rho;
        eval = new_eval;
        ll = l;
        trace.push(ll);
        quiet = if rel < cfg.stop_tol { quiet + 1 } else { 0 };
        if quiet >= STOP_WINDOW {
            converged = true;
            break;
        }
    }
    if !converged {
        warnings.push(format!(
            "no convergence within {} iterations",
            cfg.max_iters
        ));
    }

    let r = set.r_from(&eval)?;
    let floor_hits = eval.hits;
    let residual = match cond {
        None => (&r * &rho * &r - &rho).norm(),
        Some(c) => {
            let gi = &c.inv_root * &c.inv_root;
            let scale = (&c.g * &rho).trace().re;
            ((&gi * &r * &rho * &r * &gi).map(|z| z * scale * scale) - &rho).norm()
        }
    };
    if floor_hits > 0 {
        warnings.push(format!("{floor_hits} probabilities clamped at the floor"));
    }
    Ok(MaxlikResult {
        rho: DensityMatrix::from_matrix_unchecked(rho),
        iterations,
        converged,
        log_likelihood: trace,
        residual,
        epsilon: eps,
        fallback,
        floor_hits,
        g_condition: cond.map(|c| c.condition),
        warnings,
    })
}

/// Builds the POVM set for `samples` under `cfg` (binning large data sets)
/// and iterates from the maximally mixed state. With `bias_correction` the
/// completeness operator of the recorded phases over the observed window
/// enters as `G`.
pub fn reconstruct(samples: &[QuadratureSample], cfg: &MaxlikConfig) -> Result<MaxlikResult> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(Error::EmptyData);
    }
    let binning = cfg
        .binning
        .or_else(|| (samples.len() > AUTO_BIN_THRESHOLD).then_some((256, 1024)));
    let set = match binning {
        Some((a, b)) => PovmSet::binned(samples, cfg.eta, cfg.n_max, a, b)?,
        None => PovmSet::from_samples(samples, cfg.eta, cfg.n_max)?,
    };
    let set = match cfg.window {
        Some((lo, hi)) => set.with_window(lo, hi)?,
        None => set,
    };
    let start = DensityMatrix::maximally_mixed(cfg.n_max);
    if cfg.bias_correction {
        bias_corrected_iterate(&start, &set, cfg, &set.completeness())
    } else {
        iterate(&start, &set, cfg)
    }
}
