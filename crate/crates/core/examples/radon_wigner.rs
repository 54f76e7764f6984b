// Filtered back-projection of homodyne data for a coherent state, both
// sample by sample and from a binned histogram.

use std::f64::consts::FRAC_1_PI;

use cvtomo::fock::GridSpec;
use cvtomo::radon::{reconstruct, RadonConfig};
use cvtomo::sampler::{sample, AcquisitionPlan};
use cvtomo::states::{StateKind, StateSpec};
use num_complex::Complex64;

/// Returns the location `(q, p)` of the reconstructed peak.
pub fn run_example() -> cvtomo::Result<(f64, f64)> {
    let rho = StateSpec::new(
        StateKind::Coherent {
            alpha: Complex64::new(1.0, 0.0),
        },
        20,
    )
    .build()?;
    let data = sample(&rho, &AcquisitionPlan::new(20_000, 3))?;
    let spec = GridSpec::square(4.0, 41)?;

    let w = reconstruct(&data, &RadonConfig::new(4.0, spec))?;
    let (i, j, peak) = w.argmax();
    let at = (spec.q(i), spec.p(j));
    println!(
        "peak {peak:.4} (ideal {FRAC_1_PI:.4}) at q = {:.2}, p = {:.2}",
        at.0, at.1
    );
    println!("normalisation {:.4}", w.riemann_sum());

    let binned = reconstruct(&data, &RadonConfig::new(4.0, spec).binned(64, 200))?;
    println!(
        "binned vs per-sample: sup distance {:.4}",
        binned.sup_distance(&w)?
    );
    Ok(at)
}

#[allow(dead_code)]
fn main() -> cvtomo::Result<()> {
    run_example().map(|_| ())
}
