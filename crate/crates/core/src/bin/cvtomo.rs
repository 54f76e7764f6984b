use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cvtomo::pipeline::{run, Command, PipelineConfig};

/// Homodyne tomography pipeline.
#[derive(Parser)]
#[command(name = "cvtomo", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Draw homodyne samples from a configured state.
    Simulate(Flags),
    /// Reconstruct a Wigner function or density matrix from samples.
    Reconstruct(Flags),
    /// Report fidelity, photon statistics and W(0,0) of an estimate.
    Analyze(Flags),
    /// Scan the Wigner function of a transverse field.
    SpatialScan(Flags),
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Radon,
    Pattern,
    Maxlik,
}

#[derive(Args)]
struct Flags {
    /// `key = value` settings file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    kc: Option<f64>,
    #[arg(long)]
    nmax: Option<usize>,
    /// Step size; `inf` selects the undiluted map.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Extra `key=value` setting, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn settings(flags: &Flags) -> cvtomo::Result<PipelineConfig> {
    let mut cfg = match &flags.config {
        Some(p) => PipelineConfig::from_file(p)?,
        None => PipelineConfig::new(),
    };
    for kv in &flags.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| {
            cvtomo::Error::InvalidParameter(format!("--set expects KEY=VALUE, got {kv:?}"))
        })?;
        cfg.set(k.trim(), v.trim());
    }
    if let Some(s) = flags.seed {
        cfg.set("seed", s);
    }
    if let Some(m) = flags.method {
        let name = match m {
            MethodArg::Radon => "radon",
            MethodArg::Pattern => "pattern",
            MethodArg::Maxlik => "maxlik",
        };
        cfg.set("method", name);
    }
    if let Some(e) = flags.eta {
        cfg.set("eta", e);
    }
    if let Some(k) = flags.kc {
        cfg.set("kc", k);
    }
    if let Some(n) = flags.nmax {
        cfg.set("n_max", n);
    }
    if let Some(e) = flags.epsilon {
        cfg.set("epsilon", e);
    }
    if let Some(o) = &flags.out {
        cfg.set("out", o.display());
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let (command, flags) = match &cli.command {
        Cmd::Simulate(f) => (Command::Simulate, f),
        Cmd::Reconstruct(f) => (Command::Reconstruct, f),
        Cmd::Analyze(f) => (Command::Analyze, f),
        Cmd::SpatialScan(f) => (Command::SpatialScan, f),
    };
    match settings(flags).and_then(|cfg| run(command, &cfg)) {
        Ok(outcome) => {
            for m in &outcome.messages {
                println!("{m}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
