// Simulated balanced homodyne data for an odd cat, with detector loss,
// electronic noise and mode mismatch, and the resulting quadrature variances.

use std::f64::consts::PI;

use cvtomo::fock::QuadratureSample;
use cvtomo::io::samples_to_csv;
use cvtomo::sampler::{effective_efficiency, sample, AcquisitionPlan, PhaseSchedule};
use cvtomo::states::{StateKind, StateSpec};

fn variance_near(data: &[QuadratureSample], theta: f64) -> f64 {
    let qs: Vec<f64> = data
        .iter()
        .filter(|s| (s.theta - theta).abs() < 1e-9)
        .map(|s| s.q)
        .collect();
    let mean = qs.iter().sum::<f64>() / qs.len() as f64;
    qs.iter().map(|q| (q - mean).powi(2)).sum::<f64>() / qs.len() as f64
}

/// Returns the q and p variances of the ideal data.
pub fn run_example() -> cvtomo::Result<(f64, f64)> {
    let cat = StateSpec::new(StateKind::OddCat { alpha: 1.0 }, 20).build()?;
    let schedule = PhaseSchedule::Fixed {
        thetas: vec![0.0, PI / 2.0],
    };
    let ideal = sample(
        &cat,
        &AcquisitionPlan::new(20_000, 1).with_schedule(schedule.clone()),
    )?;
    let (vq, vp) = (variance_near(&ideal, 0.0), variance_near(&ideal, PI / 2.0));
    println!("ideal detector: var q {vq:.3}, var p {vp:.3}");

    let plan = AcquisitionPlan::new(20_000, 1)
        .with_schedule(schedule)
        .with_eta(0.8)
        .with_snr(20.0)
        .with_xi(0.95);
    let noisy = sample(&cat, &plan)?;
    println!(
        "eta 0.8, S 20, xi 0.95 (effective eta {:.3}): var q {:.3}, var p {:.3}",
        effective_efficiency(0.8, Some(20.0))?,
        variance_near(&noisy, 0.0),
        variance_near(&noisy, PI / 2.0)
    );
    print!("first rows:\n{}", samples_to_csv(&noisy[..3]));
    Ok((vq, vp))
}

#[allow(dead_code)]
fn main() -> cvtomo::Result<()> {
    run_example().map(|_| ())
}
