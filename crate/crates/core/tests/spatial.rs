use std::f64::consts::{FRAC_1_PI, PI};

use cvtomo::fock::GridSpec;
use cvtomo::spatial::{
    ensemble_correlation, profile_records, reconstruct_from_profiles, simulate_profiles,
    CorrelationMatrix, IntensityProfile, SpatialGrid, SpatialMode,
};
use cvtomo::Error;
use num_complex::Complex64;
use proptest::prelude::*;

fn grid() -> SpatialGrid {
    SpatialGrid::new(1, 401, 0.05, 40.0).unwrap()
}

fn gaussian(sigma: f64, center: f64) -> SpatialMode {
    SpatialMode::gaussian(grid(), sigma, &[center]).unwrap()
}

fn gaussian_wigner(x: f64, k: f64, sigma: f64, center: f64) -> f64 {
    FRAC_1_PI * (-(x - center).powi(2) / (sigma * sigma) - k * k * sigma * sigma).exp()
}

// two well separated peaks at +-d with relative sign `sign`
fn two_peaks(d: f64, sign: f64) -> SpatialMode {
    SpatialMode::superpose(
        Complex64::new(1.0, 0.0),
        &gaussian(0.6, d),
        Complex64::new(sign, 0.0),
        &gaussian(0.6, -d),
    )
    .unwrap()
}

fn second_moment(mode: &SpatialMode) -> f64 {
    let g = mode.grid();
    let c = mode.centroid()[0];
    mode.intensity()
        .iter()
        .enumerate()
        .map(|(i, e)| e * (g.coordinate(i) - c).powi(2))
        .sum::<f64>()
        * g.pitch
}

#[test]
fn gaussian_beam_spreads_as_predicted() {
    let sigma = 0.5;
    let mode = gaussian(sigma, 0.0);
    let k0 = grid().k0;
    // |E|^2 = exp(-2 x^2 / w0^2) with w0 = sqrt(2) sigma
    let w0 = 2f64.sqrt() * sigma;
    let z_r = k0 * w0 * w0 / 2.0;
    for z in [0.3 * z_r, z_r, 2.5 * z_r, -z_r] {
        let w = 2.0 * second_moment(&mode.propagate(z).unwrap()).sqrt();
        let want = w0 * (1.0 + (z / z_r).powi(2)).sqrt();
        assert!((w / want - 1.0).abs() < 1e-3, "z = {z}: {w} vs {want}");
    }
}

#[test]
fn propagation_is_unitary() {
    let mode = two_peaks(2.0, -1.0).displace(&[0.3], &[1.5]).unwrap();
    let there = mode.propagate(7.0).unwrap();
    assert!((there.norm() - 1.0).abs() < 1e-9);
    let back = there.propagate(-7.0).unwrap();
    assert!((back.overlap(&mode).unwrap().norm() - 1.0).abs() < 1e-9);
    for (a, b) in back.samples().iter().zip(mode.samples()) {
        assert!((a - b).norm() < 1e-9);
    }
    let tiny = mode.propagate(1e-14).unwrap();
    for (a, b) in tiny.samples().iter().zip(mode.samples()) {
        assert!((a - b).norm() < 1e-12);
    }
    assert!(mode.propagate(0.0).is_err());
}

#[test]
fn diffraction_off_the_grid_is_an_error() {
    let mode = gaussian(0.2, 0.0);
    match mode.propagate(1e3) {
        Err(Error::Aliasing { retained }) => assert!(retained < 0.999),
        other => panic!("{other:?}"),
    }
}

#[test]
fn displacement_moves_the_centroid() {
    let mode = gaussian(0.8, 0.0);
    let same = mode.displace(&[0.0], &[0.0]).unwrap();
    assert_eq!(same, mode);
    for x0 in [0.537, -2.21, 3.0] {
        let moved = mode.displace(&[x0], &[0.0]).unwrap();
        assert!((moved.centroid()[0] - x0).abs() < 1e-9);
        assert!((moved.norm() - 1.0).abs() < 1e-12);
    }
    let tilted = mode.displace(&[0.4], &[2.5]).unwrap();
    assert!((tilted.norm() - 1.0).abs() < 1e-12);
    assert!(matches!(
        mode.displace(&[9.0], &[0.0]),
        Err(Error::Aliasing { .. })
    ));
    assert!(matches!(
        mode.displace(&[0.0], &[60.0]),
        Err(Error::Aliasing { .. })
    ));
    assert!(mode.displace(&[0.0, 1.0], &[0.0]).is_err());
}

#[test]
fn parity_at_the_origin() {
    let even = two_peaks(2.0, 1.0);
    assert!((even.wigner_point(&[0.0], &[0.0]).unwrap() - FRAC_1_PI).abs() < 1e-9);
    let odd = two_peaks(2.0, -1.0);
    assert!((odd.wigner_point(&[0.0], &[0.0]).unwrap() + FRAC_1_PI).abs() < 1e-9);
}

#[test]
fn gaussian_wigner_scan_matches_closed_form() {
    let (sigma, center) = (0.9, 0.4);
    let mode = gaussian(sigma, center);
    let spec = GridSpec::new(-3.0, 3.0, 25, -3.0, 3.0, 25).unwrap();
    let scan = mode.wigner_scan(&spec).unwrap();
    for i in 0..spec.nq {
        for j in 0..spec.np {
            let want = gaussian_wigner(spec.q(i), spec.p(j), sigma, center);
            assert!((scan.get(i, j) - want).abs() < 1e-6);
        }
    }
}

#[test]
fn scan_normalisation_and_purity() {
    let mode = two_peaks(1.5, -1.0);
    let spec = GridSpec::new(-5.0, 5.0, 81, -6.0, 6.0, 97).unwrap();
    let scan = mode.wigner_scan(&spec).unwrap();
    assert!((scan.riemann_sum() - 1.0).abs() < 1e-3);
    let squares: f64 = scan.values.iter().map(|w| w * w).sum::<f64>() * spec.dq() * spec.dp();
    assert!((squares - 1.0 / (2.0 * PI)).abs() < 1e-3, "{squares}");
}

#[test]
fn incoherent_peaks_lose_their_fringes() {
    let d = 2.0;
    let coherent = CorrelationMatrix::from_mode(&two_peaks(d, 1.0));
    let mixture =
        ensemble_correlation(&[(0.5, gaussian(0.6, d)), (0.5, gaussian(0.6, -d))]).unwrap();
    let fringe = |rho: &CorrelationMatrix| {
        (0..=40)
            .map(|j| rho.wigner_point(&[0.0], &[j as f64 * 0.1]).unwrap().abs())
            .fold(0.0, f64::max)
    };
    let (a, b) = (fringe(&coherent), fringe(&mixture));
    assert!(a > 0.5 * FRAC_1_PI, "{a}");
    assert!(b < 0.01 * a, "{b} vs {a}");
    // the peaks themselves are common to both
    let peak = |rho: &CorrelationMatrix| rho.wigner_point(&[d], &[0.0]).unwrap();
    assert!((peak(&coherent) - peak(&mixture)).abs() < 1e-3);
}

#[test]
fn correlation_matrices() {
    let mode = two_peaks(1.0, -1.0).displace(&[0.2], &[0.7]).unwrap();
    let pure = CorrelationMatrix::from_mode(&mode);
    assert!((pure.trace() - 1.0).abs() < 1e-12);
    let ev = pure.eigenvalues();
    assert!((ev[ev.len() - 1] - 1.0).abs() < 1e-10);
    assert!(ev[ev.len() - 2].abs() < 1e-10);

    let negated =
        SpatialMode::new(*mode.grid(), mode.samples().iter().map(|z| -z).collect()).unwrap();
    let both = ensemble_correlation(&[(0.5, mode.clone()), (0.5, negated)]).unwrap();
    assert!((both.matrix() - pure.matrix()).norm() < 1e-12);

    let half =
        ensemble_correlation(&[(0.5, two_peaks(1.5, 1.0)), (0.5, two_peaks(1.5, -1.0))]).unwrap();
    let ev = half.eigenvalues();
    let n = ev.len();
    assert!((ev[n - 1] - 0.5).abs() < 1e-10 && (ev[n - 2] - 0.5).abs() < 1e-10);
    assert!(ev[n - 3].abs() < 1e-10);
    let m = half.matrix();
    assert!((m - m.adjoint()).norm() < 1e-12);

    assert!(ensemble_correlation(&[(0.7, mode.clone()), (0.7, mode.clone())]).is_err());
    assert!(ensemble_correlation(&[(-0.5, mode.clone()), (1.5, mode.clone())]).is_err());
    assert!(ensemble_correlation(&[]).is_err());
}

#[test]
fn matrix_and_mode_routes_agree() {
    let rho =
        ensemble_correlation(&[(0.3, two_peaks(1.2, -1.0)), (0.7, gaussian(0.7, 0.5))]).unwrap();
    let spec = GridSpec::new(-1.0, 1.0, 3, -1.0, 1.0, 3).unwrap();
    let scan = rho.wigner_scan(&spec).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            let direct = rho.wigner_point(&[spec.q(i)], &[spec.p(j)]).unwrap();
            assert!((direct - scan.get(i, j)).abs() < 1e-10);
        }
    }
}

#[test]
fn free_propagation_shears_phase_space() {
    let mode = two_peaks(1.0, -1.0);
    let z = 10.0;
    let k0 = grid().k0;
    let later = mode.propagate(z).unwrap();
    for &(x, k) in &[(0.0, 0.0), (0.5, 1.0), (-1.0, 2.0), (1.3, -0.8)] {
        let a = later.wigner_point(&[x], &[k]).unwrap();
        let b = mode.wigner_point(&[x - k * z / k0], &[k]).unwrap();
        assert!((a - b).abs() < 1e-4, "({x}, {k}): {a} vs {b}");
    }
}

#[test]
fn two_dimensional_modes() {
    let g = SpatialGrid::new(2, 81, 0.15, 10.0).unwrap();
    let (sigma, c) = (0.8, [0.3, -0.2]);
    let mode = SpatialMode::gaussian(g, sigma, &c).unwrap();
    assert!((mode.norm() - 1.0).abs() < 1e-12);
    for &(x, k) in &[
        ([0.0, 0.0], [0.0, 0.0]),
        ([0.5, -0.4], [0.3, 0.9]),
        ([-0.2, 0.1], [-1.0, 0.2]),
    ] {
        let r2 = (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2);
        let k2 = k[0] * k[0] + k[1] * k[1];
        let want = (-r2 / (sigma * sigma) - k2 * sigma * sigma).exp() / (PI * PI);
        assert!((mode.wigner_point(&x, &k).unwrap() - want).abs() < 1e-6);
    }
    // odd under the inversion (x, y) -> (-x, -y)
    let odd = SpatialMode::from_fn(g, |x, y| {
        Complex64::new((x + 2.0 * y) * (-(x * x + y * y)).exp(), 0.0)
    })
    .unwrap();
    assert!((odd.wigner_point(&[0.0, 0.0], &[0.0, 0.0]).unwrap() + 1.0 / (PI * PI)).abs() < 1e-9);
    let moved = mode.displace(&[1.0, -0.5], &[0.0, 0.0]).unwrap();
    let cen = moved.centroid();
    assert!((cen[0] - 1.3).abs() < 1e-9 && (cen[1] + 0.7).abs() < 1e-9);
    let w0 = 2f64.sqrt() * sigma;
    let z_r = g.k0 * w0 * w0 / 2.0;
    let wide = mode.propagate(z_r).unwrap();
    assert!((wide.norm() - 1.0).abs() < 1e-9);
    assert!(wide
        .wigner_scan(&GridSpec::square(1.0, 3).unwrap())
        .is_err());
}

fn profile_error(grid: SpatialGrid, max_angle: f64) -> f64 {
    let (sigma, center) = (0.6, 0.3);
    let mode = SpatialMode::gaussian(grid, sigma, &[center]).unwrap();
    let m = 48;
    let thetas: Vec<f64> = (0..m)
        .map(|j| -0.5 * PI + (j as f64 + 0.5) * PI / m as f64)
        .filter(|t| t.abs() < max_angle)
        .collect();
    let profiles = simulate_profiles(&mode, &thetas, sigma).unwrap();
    let spec = GridSpec::new(-1.5, 2.1, 13, -2.5, 2.5, 13).unwrap();
    let w = reconstruct_from_profiles(&grid, &profiles, sigma, 6.0, &spec).unwrap();
    let mut worst: f64 = 0.0;
    for i in 0..spec.nq {
        for j in 0..spec.np {
            worst = worst
                .max((w.get(i, j) - gaussian_wigner(spec.q(i), spec.p(j), sigma, center)).abs());
        }
    }
    worst
}

#[test]
fn profiles_reconstruct_the_wigner_function() {
    // the widest profile is 30 times the waist
    let wide = SpatialGrid::new(1, 2001, 0.05, 40.0).unwrap();
    let full = profile_error(wide, PI);
    assert!(full < 0.01 * FRAC_1_PI, "{full}");
    // without the far-field profiles the waist is no longer enclosed
    let partial = profile_error(SpatialGrid::new(1, 801, 0.05, 40.0).unwrap(), 1.4);
    assert!(partial > 5.0 * full);

    let mode = gaussian(0.6, 0.0);
    let profiles = simulate_profiles(&mode, &[-0.7, 0.0, 0.4], 0.6).unwrap();
    let records = profile_records(&grid(), &profiles, 0.6).unwrap();
    let total: f64 = records.iter().map(|r| r.2).sum();
    assert!((total - PI).abs() < 1e-9);
    assert!(simulate_profiles(&mode, &[PI / 2.0], 0.6).is_err());
    let bad = [IntensityProfile {
        z: 1.0,
        values: vec![0.0; 3],
    }];
    assert!(profile_records(&grid(), &bad, 0.6).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn wigner_is_bounded_and_linear(
        a in -1.0f64..1.0, b in -1.0f64..1.0, ph in 0.0f64..std::f64::consts::TAU,
        x in -2.0f64..2.0, k in -3.0f64..3.0, t in 0.0f64..1.0,
    ) {
        let first = SpatialMode::superpose(
            Complex64::new(a, b), &gaussian(0.7, 1.1),
            Complex64::from_polar(1.0, ph), &gaussian(0.5, -0.9),
        ).unwrap();
        let second = gaussian(0.9, 0.2).displace(&[0.0], &[a]).unwrap();
        let w1 = first.wigner_point(&[x], &[k]).unwrap();
        prop_assert!(w1.abs() <= FRAC_1_PI + 1e-12);
        let r1 = CorrelationMatrix::from_mode(&first);
        let r2 = CorrelationMatrix::from_mode(&second);
        let mix = CorrelationMatrix::combine(t, &r1, 1.0 - t, &r2).unwrap();
        let lhs = mix.wigner_point(&[x], &[k]).unwrap();
        let rhs = t * r1.wigner_point(&[x], &[k]).unwrap() + (1.0 - t) * r2.wigner_point(&[x], &[k]).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-12);
        prop_assert!(lhs.abs() <= FRAC_1_PI + 1e-12);
        prop_assert!((r1.wigner_point(&[x], &[k]).unwrap() - w1).abs() < 1e-12);
    }
}
