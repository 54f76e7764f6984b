// Every example must run and land where its printout says it does.

mod lossy_photon {
    include!("../examples/lossy_photon.rs");
}
mod state_gallery {
    include!("../examples/state_gallery.rs");
}
mod homodyne_sampling {
    include!("../examples/homodyne_sampling.rs");
}
mod radon_wigner {
    include!("../examples/radon_wigner.rs");
}
mod pattern_density {
    include!("../examples/pattern_density.rs");
}
mod maxlik_photon {
    include!("../examples/maxlik_photon.rs");
}
mod spatial_parity {
    include!("../examples/spatial_parity.rs");
}
mod profile_tomography {
    include!("../examples/profile_tomography.rs");
}

use std::f64::consts::FRAC_1_PI;

#[test]
fn lossy_photon_changes_sign_at_half_efficiency() {
    for (eta, w) in lossy_photon::run_example().unwrap() {
        assert!((w - (1.0 - 2.0 * eta) * FRAC_1_PI).abs() < 1e-12);
    }
}

#[test]
fn state_gallery_kitten() {
    assert!(state_gallery::run_example().unwrap() > 0.99);
}

#[test]
fn homodyne_sampling_variances() {
    // odd cat: var = <n> + 1/2 +- alpha^2, <n> = alpha^2 coth alpha^2
    let n = 1.0 / 1f64.tanh();
    let (vq, vp) = homodyne_sampling::run_example().unwrap();
    assert!((vq - (n + 1.5)).abs() < 0.1, "{vq}");
    assert!((vp - (n - 0.5)).abs() < 0.05, "{vp}");
}

#[test]
fn radon_wigner_peak() {
    let (q, p) = radon_wigner::run_example().unwrap();
    assert!((q - 2f64.sqrt()).abs() < 0.2 && p.abs() < 0.2);
}

#[test]
fn pattern_density_population() {
    assert!((pattern_density::run_example().unwrap() - 0.62).abs() < 0.03);
}

#[test]
fn maxlik_photon_fidelity() {
    assert!(maxlik_photon::run_example().unwrap() > 0.95);
}

#[test]
fn spatial_parity_centre() {
    assert!((spatial_parity::run_example().unwrap() + FRAC_1_PI).abs() < 1e-9);
}

#[test]
fn profile_tomography_matches() {
    assert!(profile_tomography::run_example().unwrap() < 1e-4);
}
