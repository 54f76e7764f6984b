//! File formats: sample CSV, density-matrix JSON, Wigner CSV, spatial-mode CSV.
//!
//! Every number is written with 9 significant digits in Rust's own
//! formatting, which does not depend on the process locale.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::fock::{DensityMatrix, GridSpec, QuadratureSample, WignerGrid};
use crate::sampler::AcquisitionPlan;
use crate::spatial::{SpatialGrid, SpatialMode};
use crate::states::StateSpec;

/// `x` in scientific notation with 9 significant digits.
pub fn format_number(x: f64) -> String {
    format!("{x:.8e}")
}

/// `x` rounded to 9 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if x.is_finite() {
        format_number(x).parse().unwrap_or(x)
    } else {
        x
    }
}

/// Rounds every float inside a JSON value to 9 significant digits.
pub fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => n
            .as_f64()
            .and_then(|x| serde_json::Number::from_f64(round_sig(x)))
            .map(Value::Number)
            .unwrap_or(Value::Null),
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

/// Pretty JSON with rounded floats and a trailing newline.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let v = round_json(serde_json::to_value(value)?);
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

fn display(path: &Path) -> String {
    path.display().to_string()
}

fn parse_error(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: display(path),
        line,
        msg: msg.into(),
    }
}

/// Data rows of a CSV file with the given header: `(line number, fields)`.
fn csv_rows(path: &Path, text: &str, header: &[&str]) -> Result<Vec<(usize, Vec<f64>)>> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let got: Vec<&str> = match lines.find(|(_, l)| !l.is_empty()) {
        Some((_, l)) => l.split(',').map(str::trim).collect(),
        None => return Err(parse_error(path, 1, "empty file")),
    };
    if got != header {
        return Err(parse_error(
            path,
            1,
            format!("expected header {:?}", header.join(",")),
        ));
    }
    let mut rows = Vec::new();
    for (no, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != header.len() {
            return Err(parse_error(
                path,
                no,
                format!("expected {} fields, found {}", header.len(), fields.len()),
            ));
        }
        let mut values = Vec::with_capacity(fields.len());
        for (name, f) in header.iter().zip(&fields) {
            match f.parse::<f64>() {
                Ok(v) if v.is_finite() => values.push(v),
                _ => {
                    return Err(parse_error(
                        path,
                        no,
                        format!("{name} = {f:?} is not a finite number"),
                    ))
                }
            }
        }
        rows.push((no, values));
    }
    Ok(rows)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text)?;
    Ok(())
}

// ---- samples ---------------------------------------------------------------

pub fn samples_to_csv(samples: &[QuadratureSample]) -> String {
    let mut s = String::with_capacity(32 * samples.len() + 8);
    s.push_str("theta,q\n");
    for r in samples {
        s.push_str(&format_number(r.theta));
        s.push(',');
        s.push_str(&format_number(r.q));
        s.push('\n');
    }
    s
}

pub fn write_samples(path: &Path, samples: &[QuadratureSample]) -> Result<()> {
    write_text(path, &samples_to_csv(samples))
}

pub fn read_samples(path: &Path) -> Result<Vec<QuadratureSample>> {
    let text = fs::read_to_string(path)?;
    parse_samples(path, &text)
}

/// Parses `theta,q` CSV text; `path` only labels errors.
pub fn parse_samples(path: &Path, text: &str) -> Result<Vec<QuadratureSample>> {
    csv_rows(path, text, &["theta", "q"])?
        .into_iter()
        .map(|(no, v)| {
            QuadratureSample::new(v[0], v[1]).map_err(|e| parse_error(path, no, e.to_string()))
        })
        .collect()
}

/// Sidecar written next to simulated samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleMetadata {
    pub plan: AcquisitionPlan,
    /// State the samples were drawn from, before detector loss.
    pub truth: Option<StateSpec>,
}

pub fn write_metadata(path: &Path, meta: &SampleMetadata) -> Result<()> {
    write_text(path, &to_json_string(meta)?)
}

pub fn read_metadata(path: &Path) -> Result<SampleMetadata> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

// ---- density matrices ------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct DensityFile {
    dim: usize,
    re: Vec<f64>,
    #[serde(default)]
    im: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    se: Option<Vec<f64>>,
}

/// JSON object `{dim, re, im[, se]}` with row-major element lists.
pub fn density_to_json(rho: &DensityMatrix, se: Option<&DMatrix<f64>>) -> Result<String> {
    let m = rho.matrix();
    let d = m.nrows();
    let row_major = |f: &dyn Fn(usize, usize) -> f64| -> Vec<f64> {
        (0..d * d).map(|k| f(k / d, k % d)).collect()
    };
    let file = DensityFile {
        dim: d,
        re: row_major(&|i, j| m[(i, j)].re),
        im: Some(row_major(&|i, j| m[(i, j)].im)),
        se: se.map(|s| row_major(&|i, j| s[(i, j)])),
    };
    to_json_string(&file)
}

/// Reads an estimate. A missing `im` list means a real matrix; only
/// Hermiticity is imposed, so unphysical estimates load unchanged.
pub fn density_from_json(text: &str) -> Result<(DensityMatrix, Option<DMatrix<f64>>)> {
    let f: DensityFile = serde_json::from_str(text)?;
    let d = f.dim;
    if d == 0 {
        return Err(Error::InvalidParameter("dim must be positive".into()));
    }
    let check = |name: &str, len: usize| -> Result<()> {
        if len != d * d {
            return Err(Error::InvalidParameter(format!(
                "{name} has {len} entries, dim {d} needs {}",
                d * d
            )));
        }
        Ok(())
    };
    check("re", f.re.len())?;
    if let Some(im) = &f.im {
        check("im", im.len())?;
    }
    if let Some(se) = &f.se {
        check("se", se.len())?;
    }
    let m = DMatrix::from_fn(d, d, |i, j| {
        let k = i * d + j;
        Complex64::new(f.re[k], f.im.as_ref().map_or(0.0, |im| im[k]))
    });
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NotPhysical("non-finite element".into()));
    }
    let se = f.se.map(|s| DMatrix::from_fn(d, d, |i, j| s[i * d + j]));
    Ok((DensityMatrix::estimate(m), se))
}

pub fn write_density(path: &Path, rho: &DensityMatrix, se: Option<&DMatrix<f64>>) -> Result<()> {
    write_text(path, &density_to_json(rho, se)?)
}

pub fn read_density(path: &Path) -> Result<(DensityMatrix, Option<DMatrix<f64>>)> {
    density_from_json(&fs::read_to_string(path)?)
}

// ---- Wigner grids ----------------------------------------------------------

pub fn wigner_to_csv(w: &WignerGrid) -> String {
    let mut s = String::with_capacity(48 * w.values.len() + 8);
    s.push_str("q,p,w\n");
    for i in 0..w.spec.nq {
        for j in 0..w.spec.np {
            s.push_str(&format!(
                "{},{},{}\n",
                format_number(w.spec.q(i)),
                format_number(w.spec.p(j)),
                format_number(w.get(i, j))
            ));
        }
    }
    s
}

pub fn write_wigner(path: &Path, w: &WignerGrid) -> Result<()> {
    write_text(path, &wigner_to_csv(w))
}

pub fn read_wigner(path: &Path) -> Result<WignerGrid> {
    let text = fs::read_to_string(path)?;
    parse_wigner(path, &text)
}

/// Parses `q,p,w` CSV laid out `q`-major on a regular grid.
pub fn parse_wigner(path: &Path, text: &str) -> Result<WignerGrid> {
    let rows = csv_rows(path, text, &["q", "p", "w"])?;
    if rows.is_empty() {
        return Err(parse_error(path, 2, "no data rows"));
    }
    let q0 = rows[0].1[0];
    let np = rows.iter().take_while(|(_, v)| v[0] == q0).count();
    if np < 2 || rows.len() % np != 0 || rows.len() / np < 2 {
        return Err(parse_error(
            path,
            2,
            "rows do not form a regular grid of at least 2x2",
        ));
    }
    let nq = rows.len() / np;
    let (q_min, q_max) = (q0, rows[rows.len() - 1].1[0]);
    let (p_min, p_max) = (rows[0].1[1], rows[np - 1].1[1]);
    let spec = GridSpec::new(q_min, q_max, nq, p_min, p_max, np)
        .map_err(|e| parse_error(path, 2, e.to_string()))?;
    let tol = |step: f64| 1e-6 * step.abs().max(f64::MIN_POSITIVE);
    for (k, (no, v)) in rows.iter().enumerate() {
        let (i, j) = (k / np, k % np);
        if (v[0] - spec.q(i)).abs() > tol(spec.dq()) || (v[1] - spec.p(j)).abs() > tol(spec.dp()) {
            return Err(parse_error(
                path,
                *no,
                format!("node ({}, {}) is off the regular grid", v[0], v[1]),
            ));
        }
    }
    Ok(WignerGrid {
        spec,
        values: rows.into_iter().map(|(_, v)| v[2]).collect(),
    })
}

// ---- spatial modes ---------------------------------------------------------

pub fn mode_to_csv(mode: &SpatialMode) -> String {
    let g = mode.grid();
    let mut s = String::new();
    s.push_str(if g.dims == 1 {
        "x,re,im\n"
    } else {
        "x,y,re,im\n"
    });
    for (p, z) in mode.samples().iter().enumerate() {
        s.push_str(&format_number(g.coordinate(p % g.n)));
        s.push(',');
        if g.dims == 2 {
            s.push_str(&format_number(g.coordinate(p / g.n)));
            s.push(',');
        }
        s.push_str(&format!(
            "{},{}\n",
            format_number(z.re),
            format_number(z.im)
        ));
    }
    s
}

pub fn write_mode(path: &Path, mode: &SpatialMode) -> Result<()> {
    write_text(path, &mode_to_csv(mode))
}

/// Reads a mode on a centred grid; `k0` is not stored in the file.
pub fn read_mode(path: &Path, k0: f64) -> Result<SpatialMode> {
    let text = fs::read_to_string(path)?;
    parse_mode(path, &text, k0)
}

pub fn parse_mode(path: &Path, text: &str, k0: f64) -> Result<SpatialMode> {
    let header = text
        .lines()
        .find(|l| !l.trim().is_empty())
        .unwrap_or("")
        .trim();
    let dims = if header.split(',').count() == 4 { 2 } else { 1 };
    let names: &[&str] = if dims == 1 {
        &["x", "re", "im"]
    } else {
        &["x", "y", "re", "im"]
    };
    let rows = csv_rows(path, text, names)?;
    let n = match dims {
        1 => rows.len(),
        _ => (rows.len() as f64).sqrt().round() as usize,
    };
    if n < 3 || n.pow(dims as u32) != rows.len() {
        return Err(parse_error(
            path,
            2,
            format!("{} rows do not form a square grid", rows.len()),
        ));
    }
    let pitch = rows[1].1[0] - rows[0].1[0];
    let grid =
        SpatialGrid::new(dims, n, pitch, k0).map_err(|e| parse_error(path, 2, e.to_string()))?;
    let tol = 1e-6 * pitch.abs();
    for (p, (no, v)) in rows.iter().enumerate() {
        let off = (v[0] - grid.coordinate(p % n)).abs() > tol
            || (dims == 2 && (v[1] - grid.coordinate(p / n)).abs() > tol);
        if off {
            return Err(parse_error(path, *no, "node is off the centred grid"));
        }
    }
    let samples = rows
        .iter()
        .map(|(_, v)| Complex64::new(v[dims], v[dims + 1]))
        .collect();
    SpatialMode::new(grid, samples)
}
