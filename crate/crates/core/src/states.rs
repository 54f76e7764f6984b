//! Reference optical states used as simulation truth.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{fidelity, DensityMatrix, MAX_FOCK_ORDER};

/// Largest population a truncation may discard.
pub const MAX_TAIL_POPULATION: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StateKind {
    Vacuum,
    Fock {
        n: usize,
    },
    Coherent {
        alpha: Complex64,
    },
    /// `zeta = tanh(r)`; the ket is `|0> + zeta/sqrt2 |2> + ...` up to
    /// normalisation.
    SqueezedVacuum {
        zeta: f64,
    },
    /// `|alpha> - |-alpha>`, normalised.
    OddCat {
        alpha: f64,
    },
    /// `|alpha> + |-alpha>`, normalised.
    EvenCat {
        alpha: f64,
    },
    SingleRail {
        c0: Complex64,
        c1: Complex64,
    },
    /// `(a^dagger)^m rho a^m`, normalised.
    PhotonAdded {
        base: Box<StateKind>,
        m: usize,
    },
    /// `a^m rho (a^dagger)^m`, normalised.
    PhotonSubtracted {
        base: Box<StateKind>,
        m: usize,
    },
    Thermal {
        nbar: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateSpec {
    #[serde(flatten)]
    pub kind: StateKind,
    pub n_max: usize,
}

impl StateSpec {
    pub fn new(kind: StateKind, n_max: usize) -> Self {
        StateSpec { kind, n_max }
    }

    pub fn build(&self) -> Result<DensityMatrix> {
        build(self)
    }

    /// Reads a state from flat `key = value` pairs, e.g. `kind = odd_cat`,
    /// `alpha = 0.79`. Nested bases of photon-added/subtracted states use
    /// the `base_` prefix (`base_kind = thermal`, `base_nbar = 1`).
    pub fn from_key_values(map: &BTreeMap<String, String>, default_n_max: usize) -> Result<Self> {
        let n_max = match map.get("n_max") {
            Some(v) => parse_num(v, "n_max")?,
            None => default_n_max,
        };
        Ok(StateSpec {
            kind: kind_from_key_values(map, "")?,
            n_max,
        })
    }
}

fn parse_num<T: std::str::FromStr>(v: &str, key: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::InvalidParameter(format!("cannot parse {key} = {v:?}")))
}

fn kind_from_key_values(map: &BTreeMap<String, String>, prefix: &str) -> Result<StateKind> {
    let get = |key: &str| map.get(&format!("{prefix}{key}")).map(String::as_str);
    let need = |key: &str| -> Result<f64> {
        let full = format!("{prefix}{key}");
        match map.get(&full) {
            Some(v) => parse_num(v, &full),
            None => Err(Error::InvalidParameter(format!("missing key {full}"))),
        }
    };
    let opt = |key: &str| -> Result<f64> {
        match get(key) {
            Some(v) => parse_num(v, key),
            None => Ok(0.0),
        }
    };
    let kind =
        get("kind").ok_or_else(|| Error::InvalidParameter(format!("missing key {prefix}kind")))?;
    let m = || -> Result<usize> {
        match get("m") {
            Some(v) => parse_num(v, "m"),
            None => Ok(1),
        }
    };
    let base = || -> Result<Box<StateKind>> {
        Ok(Box::new(kind_from_key_values(
            map,
            &format!("{prefix}base_"),
        )?))
    };
    Ok(match kind.trim() {
        "vacuum" => StateKind::Vacuum,
        "fock" => StateKind::Fock {
            n: parse_num(get("n").unwrap_or("1"), "n")?,
        },
        "coherent" => {
            let re = if get("alpha").is_some() {
                need("alpha")?
            } else {
                opt("alpha_re")?
            };
            StateKind::Coherent {
                alpha: Complex64::new(re, opt("alpha_im")?),
            }
        }
        "squeezed_vacuum" => StateKind::SqueezedVacuum {
            zeta: need("zeta")?,
        },
        "odd_cat" => StateKind::OddCat {
            alpha: need("alpha")?,
        },
        "even_cat" => StateKind::EvenCat {
            alpha: need("alpha")?,
        },
        "single_rail" => StateKind::SingleRail {
            c0: Complex64::new(need("c0_re")?, opt("c0_im")?),
            c1: Complex64::new(need("c1_re")?, opt("c1_im")?),
        },
        "photon_added" => StateKind::PhotonAdded {
            base: base()?,
            m: m()?,
        },
        "photon_subtracted" => StateKind::PhotonSubtracted {
            base: base()?,
            m: m()?,
        },
        "thermal" => StateKind::Thermal {
            nbar: need("nbar")?,
        },
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown state kind {other:?}"
            )))
        }
    })
}

fn ladder_depth(kind: &StateKind) -> usize {
    match kind {
        StateKind::PhotonAdded { base, m } | StateKind::PhotonSubtracted { base, m } => {
            m + ladder_depth(base)
        }
        _ => 0,
    }
}

/// Builds the state, truncated at `spec.n_max`.
///
/// The state is first formed in a larger working space; if the population
/// above `n_max` exceeds [`MAX_TAIL_POPULATION`] the truncation is refused.
pub fn build(spec: &StateSpec) -> Result<DensityMatrix> {
    let n_max = spec.n_max;
    let work_dim = n_max + 1 + 32 + 2 * ladder_depth(&spec.kind);
    if work_dim > MAX_FOCK_ORDER + 1 {
        return Err(Error::UnsupportedOrder {
            n: work_dim - 1,
            cap: MAX_FOCK_ORDER,
        });
    }
    let full = build_at(&spec.kind, work_dim)?;
    let tr = full.trace().re;
    let tail: f64 = (n_max + 1..work_dim).map(|n| full[(n, n)].re).sum::<f64>() / tr;
    if tail > MAX_TAIL_POPULATION {
        return Err(Error::TailPopulation { n_max, tail });
    }
    let kept = full.view((0, 0), (n_max + 1, n_max + 1)).into_owned();
    DensityMatrix::from_unnormalized(kept)
}

fn pure(amplitudes: Vec<Complex64>) -> Result<DMatrix<Complex64>> {
    Ok(DensityMatrix::from_ket(&amplitudes)?.into_matrix())
}

fn finite(name: &'static str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::domain(name, v, "finite"))
    }
}

fn coherent_amplitudes(alpha: Complex64, dim: usize) -> Vec<Complex64> {
    let mut amp = Vec::with_capacity(dim);
    amp.push(Complex64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0));
    for n in 1..dim {
        let prev = amp[n - 1];
        amp.push(prev * alpha / (n as f64).sqrt());
    }
    amp
}

fn creation(dim: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(dim, dim, |i, j| {
        if i == j + 1 {
            Complex64::new((i as f64).sqrt(), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

fn normalized(m: DMatrix<Complex64>, what: &str) -> Result<DMatrix<Complex64>> {
    let tr = m.trace().re;
    if !(tr > 1e-300) {
        return Err(Error::InvalidParameter(format!(
            "{what} annihilates the base state"
        )));
    }
    Ok(m / Complex64::new(tr, 0.0))
}

fn build_at(kind: &StateKind, dim: usize) -> Result<DMatrix<Complex64>> {
    match kind {
        StateKind::Vacuum => Ok(DensityMatrix::vacuum(dim - 1).into_matrix()),
        StateKind::Fock { n } => {
            if *n >= dim {
                return Err(Error::UnsupportedOrder {
                    n: *n,
                    cap: dim - 1,
                });
            }
            Ok(DensityMatrix::fock(*n, dim - 1)?.into_matrix())
        }
        StateKind::Coherent { alpha } => {
            finite("alpha", alpha.re)?;
            finite("alpha", alpha.im)?;
            pure(coherent_amplitudes(*alpha, dim))
        }
        StateKind::SqueezedVacuum { zeta } => {
            if !(zeta.abs() < 1.0) {
                return Err(Error::domain("zeta", *zeta, "(-1, 1)"));
            }
            // c_{2n} = (1 - zeta^2)^(1/4) zeta^n sqrt((2n)!) / (2^n n!)
            let mut amp = vec![Complex64::new(0.0, 0.0); dim];
            let mut c = (1.0 - zeta * zeta).powf(0.25);
            let mut n = 0;
            while 2 * n < dim {
                amp[2 * n] = Complex64::new(c, 0.0);
                let nf = n as f64;
                c *= zeta * ((2.0 * nf + 1.0) / (2.0 * nf + 2.0)).sqrt();
                n += 1;
            }
            pure(amp)
        }
        StateKind::OddCat { alpha } | StateKind::EvenCat { alpha } => {
            finite("alpha", *alpha)?;
            let odd = matches!(kind, StateKind::OddCat { .. });
            if odd && *alpha == 0.0 {
                return Err(Error::domain("alpha", 0.0, "nonzero for an odd cat"));
            }
            let amp = coherent_amplitudes(Complex64::new(*alpha, 0.0), dim)
                .into_iter()
                .enumerate()
                .map(|(n, c)| {
                    if (n % 2 == 1) == odd {
                        c
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                })
                .collect();
            pure(amp)
        }
        StateKind::SingleRail { c0, c1 } => {
            if dim < 2 {
                return Err(Error::UnsupportedOrder { n: 1, cap: dim - 1 });
            }
            let mut amp = vec![Complex64::new(0.0, 0.0); dim];
            amp[0] = *c0;
            amp[1] = *c1;
            pure(amp)
        }
        StateKind::Thermal { nbar } => {
            if !(*nbar >= 0.0) || !nbar.is_finite() {
                return Err(Error::domain("nbar", *nbar, ">= 0"));
            }
            let ratio = nbar / (1.0 + nbar);
            let pops: Vec<f64> = (0..dim)
                .map(|n| ratio.powi(n as i32) / (1.0 + nbar))
                .collect();
            Ok(DensityMatrix::from_diagonal(&pops)?.into_matrix())
        }
        StateKind::PhotonAdded { base, m } => {
            let rho = build_at(base, dim)?;
            let a_dag = creation(dim);
            let mut out = rho;
            for _ in 0..*m {
                out = &a_dag * out * a_dag.adjoint();
            }
            normalized(out, "photon addition")
        }
        StateKind::PhotonSubtracted { base, m } => {
            let rho = build_at(base, dim)?;
            let a = creation(dim).adjoint();
            let mut out = rho;
            for _ in 0..*m {
                out = &a * out * a.adjoint();
            }
            normalized(out, "photon subtraction")
        }
    }
}

/// Fidelity between the odd cat of amplitude `alpha` and the single-photon-
/// subtracted squeezed vacuum with `zeta = alpha^2 / 6`.
pub fn kitten_fidelity_check(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::domain("alpha", alpha, "(0, 1]"));
    }
    let n_max = 30;
    let cat = build(&StateSpec::new(StateKind::OddCat { alpha }, n_max))?;
    let kitten = build(&StateSpec::new(
        StateKind::PhotonSubtracted {
            base: Box::new(StateKind::SqueezedVacuum {
                zeta: alpha * alpha / 6.0,
            }),
            m: 1,
        },
        n_max,
    ))?;
    fidelity(&cat, &kitten)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(kind: StateKind, n_max: usize) -> StateSpec {
        StateSpec::new(kind, n_max)
    }

    #[test]
    fn fock_and_vacuum() {
        let rho = build(&spec(StateKind::Fock { n: 1 }, 5)).unwrap();
        assert_eq!(rho.diagonal(), vec![0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        let vac = build(&spec(StateKind::Vacuum, 3)).unwrap();
        assert_eq!(vac.get(0, 0).re, 1.0);
    }

    #[test]
    fn odd_cat_leading_weights() {
        let alpha = 0.3;
        let rho = build(&spec(StateKind::OddCat { alpha }, 12)).unwrap();
        // amplitudes proportional to alpha |1> + alpha^3/sqrt6 |3> + ...
        let ratio = (rho.get(3, 3).re / rho.get(1, 1).re).sqrt();
        assert!((ratio - alpha * alpha / 6f64.sqrt()).abs() < 1e-12);
        assert!(rho.get(0, 0).re.abs() < 1e-15 && rho.get(2, 2).re.abs() < 1e-15);
    }

    #[test]
    fn squeezed_vacuum_small_zeta_series() {
        let zeta = 0.01;
        let rho = build(&spec(StateKind::SqueezedVacuum { zeta }, 20)).unwrap();
        let c0 = rho.get(0, 0).re.sqrt();
        let c2 = rho.get(2, 0).re / c0;
        let c4 = rho.get(4, 0).re / c0;
        assert!((c2 / c0 - zeta / 2f64.sqrt()).abs() < 1e-14);
        // exact coefficient of |4> is sqrt(3/8) zeta^2
        assert!((c4 / c0 - (3.0f64 / 8.0).sqrt() * zeta * zeta).abs() < 1e-15);
        assert!(build(&spec(StateKind::SqueezedVacuum { zeta: 1.0 }, 20)).is_err());
    }

    #[test]
    fn adding_a_photon_to_vacuum() {
        let s = spec(
            StateKind::PhotonAdded {
                base: Box::new(StateKind::Thermal { nbar: 0.0 }),
                m: 1,
            },
            4,
        );
        let rho = build(&s).unwrap();
        assert!((rho.get(1, 1).re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn subtracting_from_vacuum_is_rejected() {
        let s = spec(
            StateKind::PhotonSubtracted {
                base: Box::new(StateKind::Vacuum),
                m: 1,
            },
            4,
        );
        assert!(build(&s).is_err());
    }

    #[test]
    fn photon_addition_and_subtraction_do_not_commute() {
        let thermal = || Box::new(StateKind::Thermal { nbar: 1.0 });
        let add_then_sub = StateKind::PhotonSubtracted {
            base: Box::new(StateKind::PhotonAdded {
                base: thermal(),
                m: 1,
            }),
            m: 1,
        };
        let sub_then_add = StateKind::PhotonAdded {
            base: Box::new(StateKind::PhotonSubtracted {
                base: thermal(),
                m: 1,
            }),
            m: 1,
        };
        let a = build(&spec(add_then_sub, 60)).unwrap();
        let b = build(&spec(sub_then_add, 60)).unwrap();
        assert!(a.trace_distance(&b).unwrap() > 0.01);
    }

    #[test]
    fn tail_population_guard() {
        let big = spec(
            StateKind::Coherent {
                alpha: Complex64::new(3.0, 0.0),
            },
            5,
        );
        assert!(matches!(build(&big), Err(Error::TailPopulation { .. })));
        let ok = spec(
            StateKind::Coherent {
                alpha: Complex64::new(3.0, 0.0),
            },
            30,
        );
        assert!(build(&ok).is_ok());
    }

    #[test]
    fn thermal_is_bose_einstein() {
        let rho = build(&spec(StateKind::Thermal { nbar: 0.5 }, 40)).unwrap();
        for n in 0..10 {
            let want = 0.5f64.powi(n as i32) / 1.5f64.powi(n as i32 + 1);
            assert!((rho.get(n, n).re - want).abs() < 1e-12);
        }
        assert!(build(&spec(StateKind::Thermal { nbar: -1.0 }, 4)).is_err());
    }

    #[test]
    fn single_rail_is_normalized() {
        let s = spec(
            StateKind::SingleRail {
                c0: Complex64::new(1.0, 0.0),
                c1: Complex64::new(0.0, 1.0),
            },
            3,
        );
        let rho = build(&s).unwrap();
        assert!((rho.get(0, 0).re - 0.5).abs() < 1e-15);
        assert!((rho.get(1, 0) - Complex64::new(0.0, 0.5)).norm() < 1e-15);
    }

    #[test]
    fn kitten_fidelities() {
        assert!(kitten_fidelity_check(0.5).unwrap() >= 0.99);
        let small = kitten_fidelity_check(1e-3).unwrap();
        assert!((small - 1.0).abs() < 1e-6, "{small}");
        let one = kitten_fidelity_check(1.0).unwrap();
        assert!(one > 0.9 && one < 1.0, "{one}");
        assert!(kitten_fidelity_check(0.0).is_err());
        assert!(kitten_fidelity_check(1.5).is_err());
    }

    #[test]
    fn key_value_parsing() {
        let map: BTreeMap<String, String> = [
            ("kind", "photon_added"),
            ("m", "2"),
            ("base_kind", "coherent"),
            ("base_alpha_re", "0.5"),
            ("base_alpha_im", "-0.1"),
            ("n_max", "12"),
        ]
        .iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
        let s = StateSpec::from_key_values(&map, 8).unwrap();
        assert_eq!(s.n_max, 12);
        assert_eq!(
            s.kind,
            StateKind::PhotonAdded {
                base: Box::new(StateKind::Coherent {
                    alpha: Complex64::new(0.5, -0.1)
                }),
                m: 2
            }
        );
        let json = serde_json::to_string(&s).unwrap();
        let back: StateSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);

        let mut bad = BTreeMap::new();
        bad.insert("kind".to_string(), "banana".to_string());
        assert!(StateSpec::from_key_values(&bad, 4).is_err());
    }
}
