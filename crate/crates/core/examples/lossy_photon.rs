// A single photon through a lossy detector: the density matrix, the Wigner
// value at the origin and its sign change at half efficiency.

use std::f64::consts::PI;

use cvtomo::fock::{
    bernoulli_loss, wigner, wigner_convolve_loss, wigner_point, DensityMatrix, GridSpec,
};

/// Returns `(eta, W(0,0))` pairs.
pub fn run_example() -> cvtomo::Result<Vec<(f64, f64)>> {
    let photon = DensityMatrix::fock(1, 3)?;
    let mut rows = Vec::new();
    for eta in [1.0, 0.75, 0.62, 0.55, 0.5, 0.4] {
        let rho = bernoulli_loss(&photon, eta)?;
        let w00 = wigner_point(&rho, 0.0, 0.0);
        println!(
            "eta {eta:.2}: p0 {:.3} p1 {:.3}  W(0,0) {w00:+.5} (expected {:+.5})",
            rho.get(0, 0).re,
            rho.get(1, 1).re,
            (1.0 - 2.0 * eta) / PI
        );
        rows.push((eta, w00));
    }

    // same thing in phase space: a Gaussian blur of the ideal Wigner function
    let spec = GridSpec::square(5.0, 101)?;
    let blurred = wigner_convolve_loss(&wigner(&photon, &spec)?, 0.62)?;
    let direct = wigner(&bernoulli_loss(&photon, 0.62)?, &spec)?;
    println!(
        "convolution vs channel: sup distance {:.2e}",
        blurred.sup_distance(&direct)?
    );
    Ok(rows)
}

#[allow(dead_code)]
fn main() -> cvtomo::Result<()> {
    run_example().map(|_| ())
}
