use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mch_core::cell_problems::GradientAnchor;
use mch_core::experiments::config::parse_switch;
use mch_core::experiments::{paper_grid, run_case, sweep, ErrorNorm, ExperimentConfig};
use mch_core::{Kappa, Period};

#[derive(Parser)]
#[command(name = "mch", version, about = "Multicontinuum homogenization of diffusion in perforated domains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one case.
    Run(RunArgs),
    /// Run a grid of cases and write error tables.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct Common {
    /// Flat JSON object of settings; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Fine cells per coarse block side.
    #[arg(long)]
    n_fine: Option<usize>,
    /// Include the gradient load term (on|off).
    #[arg(long, value_parser = switch)]
    grad_load: Option<bool>,
    /// Write per-block basis CSVs under <out>/basis.
    #[arg(long)]
    dump_basis: bool,
    /// sqrt: relative L2 norm; ratio: squared-sum ratio without the root.
    #[arg(long)]
    error_norm: Option<ErrorNorm>,
    /// Centring of the gradient cell problems (central|per-block).
    #[arg(long, value_parser = anchor)]
    anchor: Option<GradientAnchor>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// Channel structure (1|2).
    #[arg(long)]
    structure: Option<u32>,
    /// Permeability (one|sine|half-sine).
    #[arg(long)]
    kappa: Option<Kappa>,
    /// Period, e.g. 1/10.
    #[arg(long)]
    eps: Option<Period>,
    /// Oversampling layers (0|1|2).
    #[arg(long)]
    layers: Option<usize>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct SweepArgs {
    /// Comma-separated structures.
    #[arg(long, value_delimiter = ',', default_values_t = [1u32, 2])]
    structure: Vec<u32>,
    /// Comma-separated permeabilities.
    #[arg(long, value_delimiter = ',', default_values = ["one", "sine"])]
    kappa: Vec<Kappa>,
    /// Comma-separated periods.
    #[arg(long, value_delimiter = ',', default_values = ["1/10", "1/20", "1/40"])]
    eps: Vec<Period>,
    /// Comma-separated layer counts.
    #[arg(long, value_delimiter = ',', default_values_t = [0usize, 1, 2])]
    layers: Vec<usize>,
    #[command(flatten)]
    common: Common,
}

fn switch(s: &str) -> Result<bool, String> {
    parse_switch(s).ok_or_else(|| format!("expected on or off, got `{s}`"))
}

fn anchor(s: &str) -> Result<GradientAnchor, String> {
    match s {
        "central" => Ok(GradientAnchor::Central),
        "per-block" | "per_block" => Ok(GradientAnchor::PerBlock),
        _ => Err(format!("expected central or per-block, got `{s}`")),
    }
}

fn base_config(c: &Common) -> mch_core::Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = &c.config {
        cfg.apply_json(&std::fs::read_to_string(path)?)?;
    }
    if let Some(v) = c.n_fine {
        cfg.n_fine = v;
    }
    if let Some(v) = c.grad_load {
        cfg.gradient_load = v;
    }
    if c.dump_basis {
        cfg.dump_basis = true;
    }
    if let Some(v) = c.error_norm {
        cfg.error_norm = v;
    }
    if let Some(v) = c.anchor {
        cfg.anchor = v;
    }
    if let Some(v) = &c.out {
        cfg.out = Some(v.clone());
    }
    Ok(cfg)
}

fn run(args: RunArgs) -> mch_core::Result<()> {
    let mut cfg = base_config(&args.common)?;
    if let Some(v) = args.structure {
        cfg.structure = v;
    }
    if let Some(v) = args.kappa {
        cfg.kappa = v;
    }
    if let Some(v) = args.eps {
        cfg.eps = v;
    }
    if let Some(v) = args.layers {
        cfg.layers = v;
    }
    let report = run_case(&cfg)?;
    println!("{}", report.errors_row());
    Ok(())
}

fn run_sweep(args: SweepArgs) -> mch_core::Result<bool> {
    let base = base_config(&args.common)?;
    let out = base.out.clone().unwrap_or_else(|| PathBuf::from("sweep_out"));
    let eps: Vec<usize> = args.eps.iter().map(|e| e.inverse()).collect();
    let configs: Vec<ExperimentConfig> = paper_grid(&base, &eps, &args.layers)?
        .into_iter()
        .filter(|c| args.structure.contains(&c.structure) && args.kappa.contains(&c.kappa))
        .collect();
    let outcome = sweep(&configs, &out)?;
    for t in &outcome.tables {
        println!("{}", std::fs::read_to_string(t)?);
    }
    for (c, msg) in &outcome.failures {
        eprintln!("failed {}: {msg}", c.tag());
    }
    Ok(outcome.succeeded())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a).map(|_| true),
        Command::Sweep(a) => run_sweep(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
