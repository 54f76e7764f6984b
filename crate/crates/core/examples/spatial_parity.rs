// The optical-field Wigner function read off a parity interferometer: a
// coherent two-peak field shows fringes with a negative centre, an incoherent
// mixture of the same peaks does not.

use cvtomo::spatial::{ensemble_correlation, CorrelationMatrix, SpatialGrid, SpatialMode};
use num_complex::Complex64;

/// Returns `W(0,0)` of the odd superposition.
pub fn run_example() -> cvtomo::Result<f64> {
    let grid = SpatialGrid::new(1, 401, 0.05, 40.0)?;
    let left = SpatialMode::gaussian(grid, 0.6, &[-2.0])?;
    let right = SpatialMode::gaussian(grid, 0.6, &[2.0])?;
    let one = Complex64::new(1.0, 0.0);
    let odd = SpatialMode::superpose(one, &right, -one, &left)?;
    let (even_out, odd_out) = odd.parity_intensities();
    let w00 = odd.wigner_point(&[0.0], &[0.0])?;
    println!("odd field: parity outputs {even_out:.4} / {odd_out:.4}, W(0,0) = {w00:+.5}");

    let coherent = CorrelationMatrix::from_mode(&odd);
    let mixture = ensemble_correlation(&[(0.5, left), (0.5, right)])?;
    for k in [0.0, 0.4, 0.8, 1.2] {
        println!(
            "W(0, {k:.1}): coherent {:+.5}  mixture {:+.2e}",
            coherent.wigner_point(&[0.0], &[k])?,
            mixture.wigner_point(&[0.0], &[k])?
        );
    }
    Ok(w00)
}

#[allow(dead_code)]
fn main() -> cvtomo::Result<()> {
    run_example().map(|_| ())
}
