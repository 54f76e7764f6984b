// Builds each state family and prints a few moments, plus the small-cat
// approximation by a squeezed vacuum.

use cvtomo::states::{kitten_fidelity_check, StateKind, StateSpec};
use num_complex::Complex64;

/// Returns the kitten fidelity at alpha = 0.5.
pub fn run_example() -> cvtomo::Result<f64> {
    let thermal = || Box::new(StateKind::Thermal { nbar: 0.5 });
    let gallery = [
        ("vacuum", StateKind::Vacuum),
        ("fock 2", StateKind::Fock { n: 2 }),
        (
            "coherent",
            StateKind::Coherent {
                alpha: Complex64::new(1.0, 0.5),
            },
        ),
        ("squeezed", StateKind::SqueezedVacuum { zeta: 0.3 }),
        ("odd cat", StateKind::OddCat { alpha: 1.2 }),
        ("even cat", StateKind::EvenCat { alpha: 1.2 }),
        (
            "single rail",
            StateKind::SingleRail {
                c0: Complex64::new(1.0, 0.0),
                c1: Complex64::new(0.0, 1.0),
            },
        ),
        ("thermal", StateKind::Thermal { nbar: 0.5 }),
        (
            "added thermal",
            StateKind::PhotonAdded {
                base: thermal(),
                m: 1,
            },
        ),
        (
            "subtracted thermal",
            StateKind::PhotonSubtracted {
                base: thermal(),
                m: 1,
            },
        ),
    ];
    println!(
        "{:<20} {:>8} {:>8} {:>8}",
        "state", "<n>", "parity", "purity"
    );
    for (name, kind) in gallery {
        let rho = StateSpec::new(kind, 30).build()?;
        println!(
            "{name:<20} {:>8.4} {:>8.4} {:>8.4}",
            rho.mean_photon_number(),
            rho.parity(),
            rho.purity()
        );
    }
    let f = kitten_fidelity_check(0.5)?;
    println!("odd cat (alpha 0.5) vs photon-subtracted squeezed vacuum: F = {f:.5}");
    Ok(f)
}

#[allow(dead_code)]
fn main() -> cvtomo::Result<()> {
    run_example().map(|_| ())
}
