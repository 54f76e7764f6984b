use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::{reconstruct, MaxlikConfig};
use crate::error::{Error, Result};
use crate::fock::DensityMatrix;
use crate::sampler::{sample, AcquisitionPlan};

/// Fewest replicates [`bootstrap_errors`] accepts.
pub const MIN_BOOTSTRAP_REPLICATES: usize = 10;

/// Element-wise spread of re-simulated reconstructions.
#[derive(Clone, Debug)]
pub struct BootstrapResult {
    /// `sqrt(mean_k |rho'_k(m, n) - mean(m, n)|^2)`.
    pub se: DMatrix<f64>,
    pub replicates: usize,
    /// Replicates whose iteration hit `max_iters`.
    pub unconverged: usize,
}

/// Parametric bootstrap: `k` data sets are simulated from `rho_ml` with
/// `plan` (its seed replaced by seeds drawn from `base_seed`) and
/// reconstructed with `cfg`.
pub fn bootstrap_errors(
    rho_ml: &DensityMatrix,
    plan: &AcquisitionPlan,
    k: usize,
    base_seed: u64,
    cfg: &MaxlikConfig,
) -> Result<BootstrapResult> {
    if k < MIN_BOOTSTRAP_REPLICATES {
        return Err(Error::InvalidParameter(format!(
            "bootstrap needs at least {MIN_BOOTSTRAP_REPLICATES} replicates, got {k}"
        )));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(base_seed);
    let seeds: Vec<u64> = (0..k).map(|_| rng.gen()).collect();
    bootstrap_with_seeds(rho_ml, plan, &seeds, cfg)
}

/// As [`bootstrap_errors`] with explicit replicate seeds.
pub fn bootstrap_with_seeds(
    rho_ml: &DensityMatrix,
    plan: &AcquisitionPlan,
    seeds: &[u64],
    cfg: &MaxlikConfig,
) -> Result<BootstrapResult> {
    if seeds.is_empty() {
        return Err(Error::InvalidParameter(
            "bootstrap needs at least one replicate".into(),
        ));
    }
    let d = cfg.n_max + 1;
    let mut sum = DMatrix::<Complex64>::zeros(d, d);
    let mut sum_sq = DMatrix::<f64>::zeros(d, d);
    let mut unconverged = 0;
    for &seed in seeds {
        let mut p = plan.clone();
        p.seed = seed;
        let data = sample(rho_ml, &p)?;
        let fit = reconstruct(&data, cfg)?;
        if !fit.converged {
            unconverged += 1;
        }
        let m = fit.rho.matrix();
        sum += m;
        sum_sq += m.map(|z| z.norm_sqr());
    }
    let k = seeds.len() as f64;
    let se = DMatrix::from_fn(d, d, |i, j| {
        let mean = sum[(i, j)] / k;
        (sum_sq[(i, j)] / k - mean.norm_sqr()).max(0.0).sqrt()
    });
    Ok(BootstrapResult {
        se,
        replicates: seeds.len(),
        unconverged,
    })
}
