// Non-interferometric reconstruction: intensity profiles at several
// propagation distances act as rotated quadratures of the field and are
// back-projected like homodyne data.

use cvtomo::fock::GridSpec;
use cvtomo::spatial::{reconstruct_from_profiles, simulate_profiles, SpatialGrid, SpatialMode};

/// Returns the sup distance to the parity-scan Wigner function.
pub fn run_example() -> cvtomo::Result<f64> {
    let grid = SpatialGrid::new(1, 2001, 0.05, 1.0)?;
    let mode = SpatialMode::gaussian(grid, 1.0, &[0.5])?;
    let scale = 0.6;
    let n_angles = 60;
    let thetas: Vec<f64> = (0..n_angles)
        .map(|i| {
            -std::f64::consts::FRAC_PI_2 + std::f64::consts::PI * (i as f64 + 0.5) / n_angles as f64
        })
        .collect();
    let profiles = simulate_profiles(&mode, &thetas, scale)?;
    let spec = GridSpec::square(3.0, 31)?;
    let w = reconstruct_from_profiles(&grid, &profiles, scale, 16.0, &spec)?;
    let reference = mode.wigner_scan(&spec)?;
    let err = w.sup_distance(&reference)?;
    let (i, j, peak) = w.argmax();
    println!(
        "{} profiles; peak {peak:.4} at x = {:.2}, k = {:.2}",
        profiles.len(),
        spec.q(i),
        spec.p(j)
    );
    println!("sup distance to the parity scan {err:.2e}");
    Ok(err)
}

#[allow(dead_code)]
fn main() -> cvtomo::Result<()> {
    run_example().map(|_| ())
}
