//! Command pipeline behind the `cvtomo` binary.
//!
//! Settings live in a flat `key = value` file (`#` starts a comment). Flags
//! given on the command line are applied on top and win. Recognised keys:
//!
//! | command | keys |
//! |---|---|
//! | simulate | state keys (`kind`, `alpha`, `n`, ... see [`StateSpec::from_key_values`]), `n_max`, `n_samples`, `seed`, `eta`, `snr`, `xi`, `schedule` (`uniform` or `swept`), `n_phases`, `out` |
//! | reconstruct | `input`, `method` (`radon`, `pattern`, `maxlik`), `kc`, `grid` (`half_width,points`), `binned` (`phase_bins,q_bins`), `n_max`, `eta`, `epsilon` (`inf` for the undiluted map), `bias_correction`, `max_iters`, `window` (`lo,hi`), `bootstrap` (replicates), `seed`, `out` |
//! | analyze | `input` (density JSON or Wigner CSV), `truth`, `out` |
//! | spatial-scan | `profile` (`gaussian`, `cat`, `mixture`, `file`), `input`, `n`, `pitch`, `k0`, `sigma`, `separation`, `phase`, `z`, `x_range` / `k_range` (`lo,hi,points`), `route` (`parity` or `profiles`), `n_angles`, `scale`, `kc`, `out` |
//!
//! Output files are written under `out` (default `.`):
//! `samples.csv` + `samples.json` (simulate); `wigner.csv`, `rho.json`,
//! `likelihood.csv`, `summary.json`, `truth.json` (reconstruct);
//! `report.json` (analyze); `wigner.csv`, `mode.csv` (spatial-scan).

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::{fidelity, wigner, wigner_point, DensityMatrix, GridSpec, WignerGrid};
use crate::io::{self, SampleMetadata};
use crate::maxlik::{self, bootstrap_errors, MaxlikConfig};
use crate::pattern;
use crate::radon::{self, RadonConfig};
use crate::sampler::{sample, AcquisitionPlan, PhaseSchedule};
use crate::spatial::{self, CorrelationMatrix, SpatialGrid, SpatialMode};
use crate::states::StateSpec;

/// Fock truncation used when neither the config nor `--nmax` gives one.
pub const DEFAULT_N_MAX: usize = 10;
/// Default Radon cutoff.
pub const DEFAULT_KC: f64 = 4.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Reconstruct,
    Analyze,
    SpatialScan,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Radon,
    Pattern,
    Maxlik,
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "radon" => Ok(Method::Radon),
            "pattern" => Ok(Method::Pattern),
            "maxlik" => Ok(Method::Maxlik),
            other => Err(Error::InvalidParameter(format!(
                "unknown method {other:?} (expected radon, pattern or maxlik)"
            ))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Radon => "radon",
            Method::Pattern => "pattern",
            Method::Maxlik => "maxlik",
        })
    }
}

/// Flat settings for one command.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PipelineConfig {
    values: BTreeMap<String, String>,
    /// Directory relative paths in the file resolve against.
    base: Option<PathBuf>,
    /// Keys set after loading; their paths resolve against the working directory.
    overridden: BTreeSet<String>,
}

impl PipelineConfig {
    pub fn new() -> Self {
        Self::default()
    }

    /// Reads a `key = value` file. Relative paths inside it resolve against
    /// the file's directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut cfg = Self::parse(path, &text)?;
        cfg.base = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    /// Parses `key = value` lines; `path` only labels errors.
    pub fn parse(path: &Path, text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::Parse {
                path: path.display().to_string(),
                line: i + 1,
                msg,
            };
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected key = value, found {line:?}")))?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(err("empty key".into()));
            }
            if values.insert(k.to_string(), v.to_string()).is_some() {
                return Err(err(format!("duplicate key {k:?}")));
            }
        }
        Ok(PipelineConfig {
            values,
            ..Self::default()
        })
    }

    /// Sets or replaces a value.
    pub fn set(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.values.insert(key.to_string(), value.to_string());
        self.overridden.insert(key.to_string());
        self
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn values(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.get_str(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::InvalidParameter(format!("cannot parse {key} = {v:?}"))),
        }
    }

    fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    fn list(&self, key: &str, len: usize) -> Result<Option<Vec<f64>>> {
        let Some(v) = self.get_str(key) else {
            return Ok(None);
        };
        let parts: Vec<f64> = v
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::InvalidParameter(format!("cannot parse {key} = {v:?}")))?;
        if parts.len() != len {
            return Err(Error::InvalidParameter(format!(
                "{key} needs {len} comma-separated values, got {v:?}"
            )));
        }
        Ok(Some(parts))
    }

    fn flag(&self, key: &str) -> Result<bool> {
        match self.get_str(key) {
            None => Ok(false),
            Some("true" | "yes" | "1" | "on") => Ok(true),
            Some("false" | "no" | "0" | "off") => Ok(false),
            Some(v) => Err(Error::InvalidParameter(format!(
                "{key} must be a boolean, got {v:?}"
            ))),
        }
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        let p = PathBuf::from(self.get_str(key)?);
        match &self.base {
            Some(b) if p.is_relative() && !self.overridden.contains(key) => Some(b.join(p)),
            _ => Some(p),
        }
    }

    fn input(&self) -> Result<PathBuf> {
        let p = self
            .path("input")
            .ok_or_else(|| Error::InvalidParameter("missing key input".into()))?;
        if !p.is_file() {
            return Err(Error::InvalidParameter(format!(
                "input {} does not exist",
                p.display()
            )));
        }
        Ok(p)
    }

    fn out_dir(&self) -> PathBuf {
        self.path("out").unwrap_or_else(|| PathBuf::from("."))
    }

    fn n_max(&self) -> Result<usize> {
        self.get_or("n_max", DEFAULT_N_MAX)
    }

    fn grid(&self) -> Result<GridSpec> {
        let (half, n) = match self.list("grid", 2)? {
            Some(v) => (v[0], v[1]),
            None => (5.0, 101.0),
        };
        if n.fract() != 0.0 || n < 2.0 {
            return Err(Error::InvalidParameter(format!(
                "grid point count {n} must be an integer >= 2"
            )));
        }
        GridSpec::square(half, n as usize)
    }
}

/// What a command wrote and reports.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub messages: Vec<String>,
}

pub fn run(command: Command, cfg: &PipelineConfig) -> Result<Outcome> {
    match command {
        Command::Simulate => run_simulate(cfg),
        Command::Reconstruct => run_reconstruct(cfg),
        Command::Analyze => run_analyze(cfg),
        Command::SpatialScan => run_spatial_scan(cfg),
    }
}

// ---- simulate --------------------------------------------------------------

pub fn simulate_settings(cfg: &PipelineConfig) -> Result<(StateSpec, AcquisitionPlan)> {
    let state = StateSpec::from_key_values(cfg.values(), 15)?;
    let n = cfg
        .get::<usize>("n_samples")?
        .ok_or_else(|| Error::InvalidParameter("missing key n_samples".into()))?;
    let mut plan = AcquisitionPlan::new(n, cfg.get_or("seed", 0)?)
        .with_eta(cfg.get_or("eta", 1.0)?)
        .with_xi(cfg.get_or("xi", 1.0)?);
    if let Some(snr) = cfg.get("snr")? {
        plan = plan.with_snr(snr);
    }
    plan.phase_schedule = match cfg.get_str("schedule").unwrap_or("uniform") {
        "uniform" => PhaseSchedule::UniformRandom,
        "swept" => PhaseSchedule::Swept {
            n_phases: cfg.get_or("n_phases", 36)?,
        },
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown schedule {other:?}"
            )))
        }
    };
    plan.validate()?;
    Ok((state, plan))
}

/// Writes `samples.csv` and its `samples.json` sidecar.
pub fn run_simulate(cfg: &PipelineConfig) -> Result<Outcome> {
    let (state, plan) = simulate_settings(cfg)?;
    let rho = state.build()?;
    let data = sample(&rho, &plan)?;
    let dir = cfg.out_dir();
    let csv = dir.join("samples.csv");
    let meta = dir.join("samples.json");
    io::write_samples(&csv, &data)?;
    io::write_metadata(
        &meta,
        &SampleMetadata {
            plan,
            truth: Some(state),
        },
    )?;
    Ok(Outcome {
        messages: vec![format!("wrote {} samples to {}", data.len(), csv.display())],
        files: vec![csv, meta],
    })
}

// ---- reconstruct -----------------------------------------------------------

/// Sidecar next to a samples file: `x.csv` -> `x.json`.
pub fn sidecar_path(samples: &Path) -> PathBuf {
    samples.with_extension("json")
}

fn method_of(cfg: &PipelineConfig) -> Result<Method> {
    cfg.get_str("method")
        .ok_or_else(|| Error::InvalidParameter("missing key method".into()))?
        .parse()
}

fn radon_config(cfg: &PipelineConfig) -> Result<RadonConfig> {
    let mut rc = RadonConfig::new(cfg.get_or("kc", DEFAULT_KC)?, cfg.grid()?);
    if let Some(b) = cfg.list("binned", 2)? {
        rc = rc.binned(b[0] as usize, b[1] as usize);
    }
    rc.validate()?;
    Ok(rc)
}

fn maxlik_config(cfg: &PipelineConfig) -> Result<MaxlikConfig> {
    let epsilon = match cfg.get_str("epsilon") {
        None => Some(1.0),
        Some("inf" | "infinity" | "none") => None,
        Some(_) => cfg.get::<f64>("epsilon")?.filter(|e| e.is_finite()),
    };
    let mut mc = MaxlikConfig::new(cfg.n_max()?)
        .with_eta(cfg.get_or("eta", 1.0)?)
        .with_epsilon(epsilon)
        .with_bias_correction(cfg.flag("bias_correction")?);
    mc.max_iters = cfg.get_or("max_iters", mc.max_iters)?;
    if let Some(w) = cfg.list("window", 2)? {
        mc = mc.with_window(w[0], w[1]);
    }
    if let Some(b) = cfg.list("binned", 2)? {
        mc.binning = Some((b[0] as usize, b[1] as usize));
    }
    mc.validate()?;
    Ok(mc)
}

#[derive(Serialize)]
struct MaxlikSummary {
    method: Method,
    iterations: usize,
    converged: bool,
    residual: f64,
    log_likelihood: Option<f64>,
    epsilon: Option<f64>,
    fallback: bool,
    floor_hits: usize,
    g_condition: Option<f64>,
    warnings: Vec<String>,
    bootstrap_replicates: Option<usize>,
}

/// Reconstructs from `input` with the configured method.
pub fn run_reconstruct(cfg: &PipelineConfig) -> Result<Outcome> {
    let method = method_of(cfg)?;
    let input = cfg.input()?;
    let grid = cfg.grid()?;
    let (radon_cfg, ml_cfg, bootstrap) = match method {
        Method::Radon => (Some(radon_config(cfg)?), None, None),
        Method::Pattern => {
            crate::fock::check_order(cfg.n_max()?)?;
            (None, None, None)
        }
        Method::Maxlik => (
            None,
            Some(maxlik_config(cfg)?),
            cfg.get::<usize>("bootstrap")?,
        ),
    };
    let sidecar = sidecar_path(&input);
    let meta = if sidecar.is_file() {
        Some(io::read_metadata(&sidecar)?)
    } else {
        None
    };
    if bootstrap.is_some() && meta.is_none() {
        return Err(Error::InvalidParameter(format!(
            "bootstrap needs the acquisition plan in {}",
            sidecar.display()
        )));
    }

    let data = io::read_samples(&input)?;
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    let dir = cfg.out_dir();
    let mut out = Outcome::default();
    let wigner_path = dir.join("wigner.csv");
    match method {
        Method::Radon => {
            let w = radon::reconstruct(&data, radon_cfg.as_ref().expect("radon settings"))?;
            io::write_wigner(&wigner_path, &w)?;
        }
        Method::Pattern => {
            let est = pattern::estimate_density_matrix(&data, cfg.n_max()?)?;
            let rho_path = dir.join("rho.json");
            io::write_density(&rho_path, &est.rho, Some(&est.se))?;
            io::write_wigner(&wigner_path, &wigner(&est.rho, &grid)?)?;
            out.files.push(rho_path);
        }
        Method::Maxlik => {
            let mc = ml_cfg.expect("maxlik settings");
            let fit = maxlik::reconstruct(&data, &mc)?;
            let se = match (bootstrap, &meta) {
                (Some(k), Some(m)) => {
                    let mut plan = m.plan.clone();
                    plan.n_samples = data.len();
                    Some(bootstrap_errors(&fit.rho, &plan, k, cfg.get_or("seed", 0)?, &mc)?.se)
                }
                _ => None,
            };
            let rho_path = dir.join("rho.json");
            io::write_density(&rho_path, &fit.rho, se.as_ref())?;
            io::write_wigner(&wigner_path, &wigner(&fit.rho, &grid)?)?;

            let trace_path = dir.join("likelihood.csv");
            let mut trace = String::from("iteration,log_likelihood\n");
            for (i, ll) in fit.log_likelihood.iter().enumerate() {
                trace.push_str(&format!("{i},{}\n", io::format_number(*ll)));
            }
            fs::write(&trace_path, trace)?;

            let summary_path = dir.join("summary.json");
            let summary = MaxlikSummary {
                method,
                iterations: fit.iterations,
                converged: fit.converged,
                residual: fit.residual,
                log_likelihood: fit.log_likelihood.last().copied(),
                epsilon: fit.epsilon,
                fallback: fit.fallback,
                floor_hits: fit.floor_hits,
                g_condition: fit.g_condition,
                warnings: fit.warnings.clone(),
                bootstrap_replicates: bootstrap,
            };
            fs::write(&summary_path, io::to_json_string(&summary)?)?;
            out.messages
                .extend(fit.warnings.iter().map(|w| format!("warning: {w}")));
            out.messages.push(format!(
                "maxlik: {} iterations, converged = {}",
                fit.iterations, fit.converged
            ));
            out.files.extend([rho_path, trace_path, summary_path]);
        }
    }
    out.files.push(wigner_path);
    if let Some(m) = &meta {
        let truth = dir.join("truth.json");
        io::write_metadata(&truth, m)?;
        out.files.push(truth);
    }
    out.messages.push(format!(
        "{method} reconstruction from {} samples written to {}",
        data.len(),
        dir.display()
    ));
    Ok(out)
}

// ---- analyze ---------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhotonReport {
    pub probabilities: Vec<f64>,
    pub mean: f64,
    pub variance: f64,
}

/// Contents of `report.json`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub estimate: String,
    /// `density_matrix` or `wigner_grid`.
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fidelity: Option<f64>,
    /// `2 pi int W_est W_truth`, for Wigner-grid estimates.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub overlap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub photon_number: Option<PhotonReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub purity: Option<f64>,
    pub w00: f64,
    pub w_min: f64,
    pub negative: bool,
    pub notices: Vec<String>,
}

fn load_truth(path: &Path, n_max: usize) -> Result<DensityMatrix> {
    let text = fs::read_to_string(path)?;
    if let Ok(meta) = serde_json::from_str::<SampleMetadata>(&text) {
        let spec = meta.truth.ok_or_else(|| {
            Error::InvalidParameter(format!("{} records no truth state", path.display()))
        })?;
        return StateSpec {
            n_max: spec.n_max.max(n_max),
            ..spec
        }
        .build();
    }
    Ok(io::density_from_json(&text)?.0)
}

fn same_dim(a: &DensityMatrix, b: &DensityMatrix) -> (DensityMatrix, DensityMatrix) {
    let d = a.dim().max(b.dim());
    (a.resized(d), b.resized(d))
}

/// Locates the truth: the `truth` key, else `truth.json` beside the input.
fn truth_path(cfg: &PipelineConfig, input: &Path) -> Result<Option<PathBuf>> {
    if let Some(p) = cfg.path("truth") {
        if !p.is_file() {
            return Err(Error::InvalidParameter(format!(
                "truth {} does not exist",
                p.display()
            )));
        }
        return Ok(Some(p));
    }
    let beside = input.with_file_name("truth.json");
    Ok(beside.is_file().then_some(beside))
}

/// Builds the report for the estimate in `input`.
pub fn analyze(cfg: &PipelineConfig) -> Result<Report> {
    let input = cfg.input()?;
    let truth_file = truth_path(cfg, &input)?;
    let is_grid = input.extension().is_some_and(|e| e == "csv");
    let mut report = if is_grid {
        let w = io::read_wigner(&input)?;
        let overlap = match &truth_file {
            Some(p) => {
                let truth = load_truth(p, 0)?;
                let wt = wigner(&truth, &w.spec)?;
                let s: f64 = w.values.iter().zip(&wt.values).map(|(a, b)| a * b).sum();
                Some(2.0 * PI * s * w.spec.dq() * w.spec.dp())
            }
            None => None,
        };
        let w00 = w.nearest(0.0, 0.0);
        Report {
            estimate: input.display().to_string(),
            kind: "wigner_grid".into(),
            fidelity: None,
            overlap,
            photon_number: None,
            purity: None,
            w00,
            w_min: w.min_value(),
            negative: w00 < 0.0,
            notices: Vec::new(),
        }
    } else {
        let (rho, _) = io::read_density(&input)?;
        let fid = match &truth_file {
            Some(p) => {
                let truth = load_truth(p, rho.n_max())?;
                let (a, b) = same_dim(&rho, &truth);
                Some(fidelity(&a, &b)?)
            }
            None => None,
        };
        let probabilities = rho.diagonal();
        let mean: f64 = probabilities
            .iter()
            .enumerate()
            .map(|(n, p)| n as f64 * p)
            .sum();
        let second: f64 = probabilities
            .iter()
            .enumerate()
            .map(|(n, p)| (n * n) as f64 * p)
            .sum();
        let w00 = wigner_point(&rho, 0.0, 0.0);
        let spec = GridSpec::square(5.0, 101)?;
        let w_min = wigner(&rho, &spec)?.min_value().min(w00);
        Report {
            estimate: input.display().to_string(),
            kind: "density_matrix".into(),
            fidelity: fid,
            overlap: None,
            photon_number: Some(PhotonReport {
                probabilities,
                mean,
                variance: second - mean * mean,
            }),
            purity: Some(rho.purity()),
            w00,
            w_min,
            negative: w00 < 0.0,
            notices: Vec::new(),
        }
    };
    if truth_file.is_none() {
        report
            .notices
            .push("no truth state found; fidelity omitted".into());
    } else if is_grid {
        report
            .notices
            .push("fidelity needs a density matrix; Wigner overlap reported instead".into());
    }
    Ok(report)
}

/// Writes `report.json` and returns a human-readable summary.
pub fn run_analyze(cfg: &PipelineConfig) -> Result<Outcome> {
    let report = analyze(cfg)?;
    let path = cfg.out_dir().join("report.json");
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(&path, io::to_json_string(&report)?)?;
    let mut messages = report
        .notices
        .iter()
        .map(|n| format!("notice: {n}"))
        .collect::<Vec<_>>();
    if let Some(f) = report.fidelity {
        messages.push(format!("fidelity        {}", io::format_number(f)));
    }
    if let Some(o) = report.overlap {
        messages.push(format!("overlap         {}", io::format_number(o)));
    }
    if let Some(p) = &report.photon_number {
        messages.push(format!("mean photons    {}", io::format_number(p.mean)));
        messages.push(format!("photon variance {}", io::format_number(p.variance)));
        let probs: Vec<String> = p
            .probabilities
            .iter()
            .map(|&x| io::format_number(x))
            .collect();
        messages.push(format!("p(n)            {}", probs.join(" ")));
    }
    messages.push(format!("W(0,0)          {}", io::format_number(report.w00)));
    messages.push(format!("negative        {}", report.negative));
    Ok(Outcome {
        files: vec![path],
        messages,
    })
}

// ---- spatial-scan ----------------------------------------------------------

fn range(cfg: &PipelineConfig, key: &str, default: [f64; 3]) -> Result<(f64, f64, usize)> {
    let v = cfg.list(key, 3)?.unwrap_or(default.to_vec());
    if v[2].fract() != 0.0 || v[2] < 2.0 {
        return Err(Error::InvalidParameter(format!(
            "{key} point count must be an integer >= 2"
        )));
    }
    Ok((v[0], v[1], v[2] as usize))
}

enum Field {
    Pure(SpatialMode),
    Mixed(CorrelationMatrix),
}

/// Scans the Wigner function of a configured transverse field.
pub fn run_spatial_scan(cfg: &PipelineConfig) -> Result<Outcome> {
    let k0 = cfg.get_or("k0", 1.0)?;
    let (x_lo, x_hi, nx) = range(cfg, "x_range", [-4.0, 4.0, 81.0])?;
    let (k_lo, k_hi, nk) = range(cfg, "k_range", [-4.0, 4.0, 81.0])?;
    let spec = GridSpec::new(x_lo, x_hi, nx, k_lo, k_hi, nk)?;
    let profile = cfg.get_str("profile").unwrap_or("gaussian");
    let route = cfg.get_str("route").unwrap_or("parity");
    if route != "parity" && route != "profiles" {
        return Err(Error::InvalidParameter(format!("unknown route {route:?}")));
    }
    let z: Option<f64> = cfg.get("z")?;
    let input = if profile == "file" {
        Some(cfg.input()?)
    } else {
        None
    };
    // far-field profiles need a wider window
    let n_default = if route == "profiles" { 2001 } else { 401 };
    let grid = SpatialGrid::new(
        1,
        cfg.get_or("n", n_default)?,
        cfg.get_or("pitch", 0.05)?,
        k0,
    )?;
    let sigma = cfg.get_or("sigma", 1.0)?;
    let half = 0.5 * cfg.get_or("separation", 3.0)?;

    let mut field = match profile {
        "gaussian" => Field::Pure(SpatialMode::gaussian(grid, sigma, &[0.0])?),
        "cat" => {
            let a = SpatialMode::gaussian(grid, sigma, &[-half])?;
            let b = SpatialMode::gaussian(grid, sigma, &[half])?;
            let phase = Complex64::from_polar(1.0, cfg.get_or("phase", 0.0)?);
            Field::Pure(SpatialMode::superpose(
                Complex64::new(1.0, 0.0),
                &a,
                phase,
                &b,
            )?)
        }
        "mixture" => {
            let a = SpatialMode::gaussian(grid, sigma, &[-half])?;
            let b = SpatialMode::gaussian(grid, sigma, &[half])?;
            Field::Mixed(spatial::ensemble_correlation(&[(0.5, a), (0.5, b)])?)
        }
        "file" => Field::Pure(io::read_mode(input.as_deref().expect("checked above"), k0)?),
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown profile {other:?}"
            )))
        }
    };
    if let Some(z) = z {
        field = match field {
            Field::Pure(m) => Field::Pure(m.propagate(z)?),
            Field::Mixed(_) => {
                return Err(Error::InvalidParameter(
                    "propagation applies to pure profiles only".into(),
                ))
            }
        };
    }

    let dir = cfg.out_dir();
    let mut files = Vec::new();
    let w: WignerGrid = match (&field, route) {
        (Field::Pure(m), "parity") => m.wigner_scan(&spec)?,
        (Field::Mixed(c), "parity") => c.wigner_scan(&spec)?,
        (Field::Pure(m), _) => {
            let n_angles: usize = cfg.get_or("n_angles", 60)?;
            if n_angles < 2 {
                return Err(Error::InvalidParameter(
                    "n_angles must be at least 2".into(),
                ));
            }
            let thetas: Vec<f64> = (0..n_angles)
                .map(|i| -0.5 * PI + PI * (i as f64 + 0.5) / n_angles as f64)
                .collect();
            let scale = cfg.get_or("scale", 0.6)?;
            let profiles = spatial::simulate_profiles(m, &thetas, scale)?;
            spatial::reconstruct_from_profiles(
                &grid,
                &profiles,
                scale,
                cfg.get_or("kc", 16.0)?,
                &spec,
            )?
        }
        (Field::Mixed(_), _) => {
            return Err(Error::InvalidParameter(
                "the profiles route needs a pure profile".into(),
            ))
        }
    };
    if let Field::Pure(m) = &field {
        let p = dir.join("mode.csv");
        io::write_mode(&p, m)?;
        files.push(p);
    }
    let p = dir.join("wigner.csv");
    io::write_wigner(&p, &w)?;
    files.push(p);
    Ok(Outcome {
        messages: vec![format!(
            "{profile} profile scanned on {nx} x {nk} points; W(0,0) = {}",
            io::format_number(w.nearest(0.0, 0.0))
        )],
        files,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_file_syntax() {
        let p = Path::new("c.conf");
        let cfg =
            PipelineConfig::parse(p, "# comment\nkind = vacuum  # trailing\n\nn_samples=10\n")
                .unwrap();
        assert_eq!(cfg.get_str("kind"), Some("vacuum"));
        assert_eq!(cfg.get::<usize>("n_samples").unwrap(), Some(10));
        let err = PipelineConfig::parse(p, "kind = vacuum\nnonsense\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = PipelineConfig::parse(p, "a = 1\na = 2\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn methods_parse() {
        assert_eq!("maxlik".parse::<Method>().unwrap(), Method::Maxlik);
        assert!("fourier".parse::<Method>().unwrap_err().is_validation());
    }
}
