// Direct density-matrix sampling with pattern functions, and photon-number
// statistics from phase-randomised data.

use cvtomo::fock::{bernoulli_loss, DensityMatrix};
use cvtomo::pattern::{estimate_density_matrix, photon_number_stats};
use cvtomo::sampler::{sample, AcquisitionPlan};

/// Returns the estimated one-photon population.
pub fn run_example() -> cvtomo::Result<f64> {
    let rho = bernoulli_loss(&DensityMatrix::fock(1, 4)?, 0.62)?;
    let data = sample(&rho, &AcquisitionPlan::new(30_000, 5))?;

    let est = estimate_density_matrix(&data, 3)?;
    for n in 0..=3 {
        println!(
            "rho[{n}{n}] = {:+.4} +- {:.4}",
            est.rho.get(n, n).re,
            est.se[(n, n)]
        );
    }
    let stats = photon_number_stats(&data, 3)?;
    println!(
        "pr(n) = {:?}",
        stats
            .probabilities
            .iter()
            .map(|p| (p * 1e4).round() / 1e4)
            .collect::<Vec<_>>()
    );
    Ok(est.rho.get(1, 1).re)
}

#[allow(dead_code)]
fn main() -> cvtomo::Result<()> {
    run_example().map(|_| ())
}
