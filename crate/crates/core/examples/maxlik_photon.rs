// Maximum-likelihood reconstruction of a photon seen through a 62% detector,
// with and without folding the loss into the measurement operators, and
// bootstrap error bars.

use cvtomo::fock::{bernoulli_loss, fidelity, wigner_point, DensityMatrix};
use cvtomo::maxlik::{bootstrap_errors, reconstruct, MaxlikConfig};
use cvtomo::sampler::{sample, AcquisitionPlan};

/// Returns the fidelity of the loss-corrected estimate with `|1>`.
pub fn run_example() -> cvtomo::Result<f64> {
    let n_max = 3;
    let photon = DensityMatrix::fock(1, n_max)?;
    let plan = AcquisitionPlan::new(10_000, 9).with_eta(0.62);
    let data = sample(&photon, &plan)?;

    let raw = reconstruct(&data, &MaxlikConfig::new(n_max))?;
    let measured = bernoulli_loss(&photon, 0.62)?;
    println!(
        "as measured: F = {:.4} against rho(0.62), W(0,0) = {:+.4}, {} iterations",
        fidelity(&raw.rho, &measured)?,
        wigner_point(&raw.rho, 0.0, 0.0),
        raw.iterations
    );

    let cfg = MaxlikConfig::new(n_max).with_eta(0.62).with_epsilon(None);
    let corrected = reconstruct(&data, &cfg)?;
    let f = fidelity(&corrected.rho, &photon)?;
    println!(
        "loss-corrected: F = {f:.4} against |1>, W(0,0) = {:+.4}",
        wigner_point(&corrected.rho, 0.0, 0.0)
    );

    let boot = bootstrap_errors(&corrected.rho, &plan, 10, 1, &cfg)?;
    println!(
        "rho[11] = {:.4} +- {:.4} ({} replicates)",
        corrected.rho.get(1, 1).re,
        boot.se[(1, 1)],
        boot.replicates
    );
    Ok(f)
}

#[allow(dead_code)]
fn main() -> cvtomo::Result<()> {
    run_example().map(|_| ())
}
