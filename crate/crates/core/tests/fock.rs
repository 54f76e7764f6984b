use std::f64::consts::{FRAC_1_PI, PI};

use cvtomo::fock::{
    bernoulli_loss, fidelity, fock_wavefunction, marginal, quadrature_overlap, wigner,
    wigner_convolve_loss, wigner_point, DensityMatrix, GridSpec, QuadratureSample,
};
use cvtomo::states::{StateKind, StateSpec};
use cvtomo::Error;
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

// rho = A A^dagger / Tr, A filled from `entries` (re, im interleaved).
fn random_state(d: usize, entries: &[f64]) -> DensityMatrix {
    let a = DMatrix::from_fn(d, d, |i, j| {
        c(entries[2 * (i * d + j)], entries[2 * (i * d + j) + 1])
    });
    DensityMatrix::from_unnormalized(&a * a.adjoint()).unwrap()
}

fn arb_state(max_dim: usize) -> impl Strategy<Value = DensityMatrix> {
    (1..=max_dim).prop_flat_map(|d| {
        prop::collection::vec(-1.0f64..1.0, 2 * d * d).prop_map(move |e| random_state(d, &e))
    })
}

fn trapezoid(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    let h = (hi - lo) / n as f64;
    let inner: f64 = (1..n).map(|i| f(lo + i as f64 * h)).sum();
    h * (inner + 0.5 * (f(lo) + f(hi)))
}

fn fock(n: usize, n_max: usize) -> DensityMatrix {
    DensityMatrix::fock(n, n_max).unwrap()
}

#[test]
fn wavefunction_values() {
    let pi_m14 = PI.powf(-0.25);
    assert!((fock_wavefunction(0, 0.0).unwrap() - 0.7511255).abs() < 1e-7);
    assert_eq!(fock_wavefunction(1, 0.0).unwrap(), 0.0);
    assert!((fock_wavefunction(2, 0.0).unwrap() + pi_m14 / 2f64.sqrt()).abs() < 1e-15);
    assert!((fock_wavefunction(2, 0.0).unwrap() + 0.5311259).abs() < 1e-7);
    // H_3(x) = 8x^3 - 12x against the recursion
    let x = 0.7f64;
    let direct =
        pi_m14 * (8.0 * x.powi(3) - 12.0 * x) * (-x * x / 2.0).exp() / (8.0f64 * 6.0).sqrt();
    assert!((fock_wavefunction(3, x).unwrap() - direct).abs() < 1e-14);
    assert!(matches!(
        fock_wavefunction(100_000, 0.0),
        Err(Error::UnsupportedOrder { .. })
    ));
    assert!(fock_wavefunction(60, 3.0).unwrap().is_finite());
}

#[test]
fn overlap_values() {
    let z = quadrature_overlap(0, 0.0, 1.234).unwrap();
    assert!((z - c(0.7511255, 0.0)).norm() < 1e-7);
    let psi1 = 2f64.sqrt() * PI.powf(-0.25) * (-0.5f64).exp();
    let z = quadrature_overlap(1, 1.0, PI / 2.0).unwrap();
    assert!((z - c(0.0, psi1)).norm() < 1e-14);
    assert!((psi1 - 0.644).abs() < 1e-3);
    let z = quadrature_overlap(2, 0.0, PI).unwrap();
    assert!((z - c(-0.5311259, 0.0)).norm() < 1e-7);
}

#[test]
fn marginal_values() {
    let vac = fock(0, 3);
    for &(q, th) in &[(0.0f64, 0.0), (0.8, 1.0), (-1.7, 4.0)] {
        let want = (-q * q).exp() / PI.sqrt();
        assert!((marginal(&vac, q, th, 1.0).unwrap() - want).abs() < 1e-14);
    }
    let one = fock(1, 3);
    assert!(marginal(&one, 0.0, 0.3, 1.0).unwrap().abs() < 1e-15);
    let v = marginal(&one, 0.0, 2.0, 0.55).unwrap();
    assert!((v - 0.45 / PI.sqrt()).abs() < 1e-14);
    assert!((v - 0.2539).abs() < 1e-4);
    assert!(marginal(&one, 0.0, 0.0, 0.0).is_err());
    assert!(marginal(&one, 0.0, 0.0, 1.5).is_err());
}

#[test]
fn wigner_values_at_the_origin() {
    let spec = GridSpec::square(4.0, 9).unwrap();
    let w = wigner(&fock(0, 2), &spec).unwrap();
    assert!((w.nearest(0.0, 0.0) - FRAC_1_PI).abs() < 1e-12);
    assert!((wigner_point(&fock(1, 2), 0.0, 0.0) + FRAC_1_PI).abs() < 1e-12);
    let meas = bernoulli_loss(&fock(1, 2), 0.55).unwrap();
    let w00 = wigner_point(&meas, 0.0, 0.0);
    assert!((w00 - (1.0 - 1.1) / PI).abs() < 1e-12);
    assert!((w00 + 0.0318).abs() < 1e-4);
}

#[test]
fn loss_values() {
    let out = bernoulli_loss(&fock(1, 3), 0.55).unwrap();
    let want = DensityMatrix::from_diagonal(&[0.45, 0.55, 0.0, 0.0]).unwrap();
    assert!((out.matrix() - want.matrix()).norm() < 1e-15);
    let out = bernoulli_loss(&fock(2, 2), 0.5).unwrap();
    let want = DensityMatrix::from_diagonal(&[0.25, 0.5, 0.25]).unwrap();
    assert!((out.matrix() - want.matrix()).norm() < 1e-15);
    assert!(bernoulli_loss(&fock(1, 3), -0.1).is_err());
}

#[test]
fn fidelity_values() {
    let rho = StateSpec::new(StateKind::OddCat { alpha: 0.8 }, 10)
        .build()
        .unwrap();
    assert!((fidelity(&rho, &rho).unwrap() - 1.0).abs() < 1e-10);
    assert!(fidelity(&fock(0, 1), &fock(1, 1)).unwrap().abs() < 1e-12);
    let mixed = DensityMatrix::from_diagonal(&[0.5, 0.5]).unwrap();
    assert!((fidelity(&fock(0, 1), &mixed).unwrap() - 0.5).abs() < 1e-12);
    assert!(matches!(
        fidelity(&fock(0, 1), &fock(0, 2)),
        Err(Error::DimensionMismatch { .. })
    ));
}

#[test]
fn samples_wrap_their_phase() {
    let s = QuadratureSample::new(-0.5, 1.0).unwrap();
    assert!((s.theta - (2.0 * PI - 0.5)).abs() < 1e-15);
    assert!(QuadratureSample::new(0.0, f64::NAN).is_err());
    assert!(QuadratureSample::new(f64::INFINITY, 0.0).is_err());
}

#[test]
fn wigner_integrates_to_one() {
    let spec = GridSpec::square(8.0, 161).unwrap();
    let states = [
        fock(10, 10),
        StateSpec::new(
            StateKind::Coherent {
                alpha: c(0.8, -0.6),
            },
            10,
        )
        .build()
        .unwrap(),
        StateSpec::new(StateKind::Thermal { nbar: 0.3 }, 10)
            .build()
            .unwrap(),
        StateSpec::new(StateKind::SqueezedVacuum { zeta: 0.3 }, 10)
            .build()
            .unwrap(),
    ];
    for rho in &states {
        let s = wigner(rho, &spec).unwrap().riemann_sum();
        assert!((s - 1.0).abs() < 1e-3, "{s}");
    }
}

#[test]
fn convolution_matches_the_loss_channel() {
    let spec = GridSpec::square(7.0, 141).unwrap();
    for rho in [
        fock(1, 12),
        StateSpec::new(StateKind::Coherent { alpha: c(1.0, 0.0) }, 12)
            .build()
            .unwrap(),
        StateSpec::new(StateKind::OddCat { alpha: 1.0 }, 12)
            .build()
            .unwrap(),
    ] {
        let lossy = wigner(&bernoulli_loss(&rho, 0.7).unwrap(), &spec).unwrap();
        let conv = wigner_convolve_loss(&wigner(&rho, &spec).unwrap(), 0.7).unwrap();
        assert!(lossy.sup_distance(&conv).unwrap() < 1e-3);
    }
    let w = wigner(&fock(1, 4), &spec).unwrap();
    let half = wigner_convolve_loss(&w, 0.5).unwrap();
    assert!(half.nearest(0.0, 0.0).abs() < 1e-6);
    let w55 = wigner_convolve_loss(&w, 0.55).unwrap();
    assert!((w55.nearest(0.0, 0.0) + 0.1 / PI).abs() < 1e-4);
    assert!(wigner_convolve_loss(&w, 0.0).is_err());
    assert_eq!(wigner_convolve_loss(&w, 1.0).unwrap(), w);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn marginals_are_normalised(rho in arb_state(7), theta in 0.0f64..6.3, eta in 0.05f64..1.0) {
        let total = trapezoid(|q| marginal(&rho, q, theta, eta).unwrap(), -10.0, 10.0, 2000);
        prop_assert!((total - 1.0).abs() < 1e-6, "{}", total);
        for &q in &[-2.0, -0.3, 0.0, 1.1] {
            prop_assert!(marginal(&rho, q, theta, eta).unwrap() >= 0.0);
        }
    }

    #[test]
    fn loss_composes_and_stays_physical(rho in arb_state(7), e1 in 0.0f64..1.0, e2 in 0.0f64..1.0) {
        let once = bernoulli_loss(&rho, e1 * e2).unwrap();
        let twice = bernoulli_loss(&bernoulli_loss(&rho, e1).unwrap(), e2).unwrap();
        prop_assert!((once.matrix() - twice.matrix()).norm() < 1e-12);
        prop_assert!((once.trace() - 1.0).abs() < 1e-12);
        prop_assert!(once.min_eigenvalue() >= -1e-10);
        let m = once.matrix();
        prop_assert!((m - m.adjoint()).norm() < 1e-12);
    }

    #[test]
    fn origin_value_is_the_parity(rho in arb_state(11)) {
        let parity: f64 = rho.diagonal().iter().enumerate()
            .map(|(n, p)| if n % 2 == 0 { *p } else { -*p }).sum();
        prop_assert!((wigner_point(&rho, 0.0, 0.0) - parity / PI).abs() < 1e-10);
    }

    #[test]
    fn wigner_projects_onto_the_marginal(rho in arb_state(7), theta in 0.0f64..6.3, q in -3.0f64..3.0) {
        let (s, co) = theta.sin_cos();
        let line = |t: f64| wigner_point(&rho, q * co - t * s, q * s + t * co);
        let projected = trapezoid(line, -9.0, 9.0, 600);
        prop_assert!((projected - marginal(&rho, q, theta, 1.0).unwrap()).abs() < 1e-3);
    }

    #[test]
    fn fidelity_is_symmetric_and_bounded(a in arb_state(5), b in arb_state(5)) {
        let d = a.dim().max(b.dim());
        let (a, b) = (a.resized(d), b.resized(d));
        let f = fidelity(&a, &b).unwrap();
        prop_assert!((-1e-10..=1.0 + 1e-10).contains(&f));
        prop_assert!((f - fidelity(&b, &a).unwrap()).abs() < 1e-8);
    }
}

#[test]
fn grid_marginal_along_the_axes() {
    // at theta = 0 the projection is a sum over p at fixed q
    let rho = random_state(
        5,
        &(0..50)
            .map(|k| ((k * 37 % 23) as f64 / 11.0) - 1.0)
            .collect::<Vec<_>>(),
    );
    let spec = GridSpec::square(9.0, 181).unwrap();
    let w = wigner(&rho, &spec).unwrap();
    for i in (40..140).step_by(13) {
        let q = spec.q(i);
        let row: f64 = (0..spec.np).map(|j| w.get(i, j)).sum::<f64>() * spec.dp();
        assert!((row - marginal(&rho, q, 0.0, 1.0).unwrap()).abs() < 1e-3);
        let col: f64 = (0..spec.nq).map(|k| w.get(k, i)).sum::<f64>() * spec.dq();
        assert!((col - marginal(&rho, spec.p(i), PI / 2.0, 1.0).unwrap()).abs() < 1e-3);
    }
}
