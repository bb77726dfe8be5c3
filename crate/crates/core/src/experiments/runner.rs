use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::experiments::config::{ErrorNorm, ExperimentConfig, DEFAULT_N_FINE};
use crate::experiments::pipeline::{evaluate, CaseContext, CaseResult, StageTiming};
use crate::geometry::UnitCellSpec;
use crate::macro_solver::MacroOptions;
use crate::upscaling::write_coefficients_csv;

pub const ERRORS_HEADER: &str = "structure,kappa,eps,l,e1,e2";

#[derive(Debug, Clone, Serialize)]
pub struct ErrorReport {
    pub config: ExperimentConfig,
    /// (e₂⁽¹⁾, e₂⁽²⁾) under `config.error_norm`.
    pub errors: [f64; 2],
    /// Same errors with the gradient-load term toggled.
    pub errors_flipped_load: [f64; 2],
    pub reference_averages: Vec<[Option<f64>; 2]>,
    pub macro_averages: Vec<[f64; 2]>,
    pub max_constraint_residual: f64,
    pub max_stationarity_residual: f64,
    pub timings: Vec<StageTiming>,
    pub notes: Vec<String>,
}

impl ErrorReport {
    pub fn errors_row(&self) -> String {
        let c = &self.config;
        format!(
            "{},{},{},{},{},{}",
            c.structure,
            c.kappa.cli_name(),
            c.eps,
            c.layers,
            self.errors[0],
            self.errors[1]
        )
    }
}

/// Tracks files written into an output directory and removes them unless
/// `commit` is reached.
struct Staging {
    dir: PathBuf,
    created_dir: bool,
    files: Vec<PathBuf>,
    subdirs: Vec<PathBuf>,
    committed: bool,
}

impl Staging {
    fn new(dir: &Path) -> Result<Self> {
        let created_dir = !dir.exists();
        fs::create_dir_all(dir)?;
        Ok(Staging { dir: dir.to_path_buf(), created_dir, files: Vec::new(), subdirs: Vec::new(), committed: false })
    }

    fn subdir(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.subdirs.push(p.clone());
        p
    }

    fn write(&mut self, name: &str, body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
        let path = self.dir.join(name);
        self.files.push(path.clone());
        let mut w = BufWriter::new(File::create(&path)?);
        body(&mut w)?;
        w.flush()?;
        Ok(())
    }

    fn commit(mut self) {
        self.committed = true;
    }
}

impl Drop for Staging {
    fn drop(&mut self) {
        if self.committed {
            return;
        }
        for f in &self.files {
            let _ = fs::remove_file(f);
        }
        for d in &self.subdirs {
            let _ = fs::remove_dir_all(d);
        }
        if self.created_dir {
            let _ = fs::remove_dir(&self.dir);
        }
    }
}

pub fn write_labels_csv<W: Write>(spec: &UnitCellSpec, mut out: W) -> std::io::Result<()> {
    writeln!(out, "row,col,label")?;
    for r in 0..spec.n_fine {
        for c in 0..spec.n_fine {
            writeln!(out, "{r},{c},{}", spec.label(r, c))?;
        }
    }
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn notes_for(config: &ExperimentConfig) -> Vec<String> {
    let mut notes = Vec::new();
    if config.n_fine != DEFAULT_N_FINE {
        notes.push(format!("n_fine = {} differs from the default {DEFAULT_N_FINE}", config.n_fine));
    }
    if config.error_norm == ErrorNorm::Ratio {
        notes.push("errors are squared-sum ratios without the square root".into());
    }
    notes
}

/// Run one case end to end. Outputs are written only when `config.out` is set.
pub fn run_case(config: &ExperimentConfig) -> Result<ErrorReport> {
    config.validate().map_err(|e| e.in_stage("config"))?;
    let ctx = CaseContext::build(config.structure, config.kappa, config.eps, config.n_fine, config.source())?;
    run_on_context(&ctx, config)
}

/// Run one `l` on a prebuilt context whose geometry and reference match `config`.
pub fn run_on_context(ctx: &CaseContext, config: &ExperimentConfig) -> Result<ErrorReport> {
    config.validate().map_err(|e| e.in_stage("config"))?;
    if ctx.structure != config.structure
        || ctx.kappa != config.kappa
        || ctx.mesh.period() != config.eps
        || ctx.mesh.n_fine() != config.n_fine
        || ctx.source != config.source()
    {
        return Err(Error::Config("case context does not match config".into()).in_stage("config"));
    }
    let mut staging = match &config.out {
        Some(dir) => Some(Staging::new(dir).map_err(|e| e.in_stage("output"))?),
        None => None,
    };
    let dump_dir = match (&mut staging, config.dump_basis) {
        (Some(s), true) => Some(s.subdir("basis")),
        _ => None,
    };
    let opts = MacroOptions { gradient_load: config.gradient_load };
    let result = evaluate(ctx, config.layers, config.anchor, opts, config.error_norm, dump_dir.as_deref())?;
    let report = build_report(ctx, config, &result);
    if let Some(mut s) = staging {
        write_outputs(&mut s, ctx, &report, &result).map_err(|e| e.in_stage("output"))?;
        s.commit();
    }
    Ok(report)
}

fn build_report(ctx: &CaseContext, config: &ExperimentConfig, r: &CaseResult) -> ErrorReport {
    let n = ctx.mesh.n_blocks();
    ErrorReport {
        config: config.clone(),
        errors: r.errors,
        errors_flipped_load: r.errors_flipped_load,
        reference_averages: ctx.ref_averages.clone(),
        macro_averages: (0..n)
            .map(|p| [r.macro_solution.block_mean(p, 0), r.macro_solution.block_mean(p, 1)])
            .collect(),
        max_constraint_residual: r.upscaled.max_constraint_residual,
        max_stationarity_residual: r.upscaled.max_stationarity_residual,
        timings: ctx.timings.iter().chain(&r.timings).cloned().collect(),
        notes: notes_for(config),
    }
}

const OUTPUT_FILES: [&str; 7] = [
    "errors.csv",
    "coefficients.csv",
    "averages.csv",
    "fields_ref.csv",
    "fields_macro.csv",
    "labels.csv",
    "manifest.json",
];

fn write_outputs(s: &mut Staging, ctx: &CaseContext, report: &ErrorReport, r: &CaseResult) -> Result<()> {
    s.write("errors.csv", |w| {
        writeln!(w, "{ERRORS_HEADER}")?;
        writeln!(w, "{}", report.errors_row())
    })?;
    s.write("coefficients.csv", |w| write_coefficients_csv(&r.upscaled.coefficients, w))?;
    s.write("averages.csv", |w| {
        writeln!(w, "p,ref1,ref2,macro1,macro2")?;
        for (p, (rf, m)) in report.reference_averages.iter().zip(&report.macro_averages).enumerate() {
            writeln!(w, "{p},{},{},{},{}", opt(rf[0]), opt(rf[1]), m[0], m[1])?;
        }
        Ok(())
    })?;
    s.write("fields_ref.csv", |w| ctx.reference.write_csv(&ctx.mesh, w))?;
    s.write("fields_macro.csv", |w| r.macro_solution.write_csv(w))?;
    s.write("labels.csv", |w| write_labels_csv(&ctx.spec, w))?;

    let c = &report.config;
    let manifest = json!({
        "config": c,
        "structure_id": c.structure,
        "kappa": c.kappa.to_string(),
        "eps": c.eps.to_string(),
        "n_coarse": ctx.mesh.n_coarse(),
        "n_fine": c.n_fine,
        "fine_cells_per_side": ctx.mesh.cells_per_side(),
        "fine_unknowns": ctx.reference.region.n_unknowns(),
        "unit_cell": ctx.spec,
        "error_norm": c.error_norm,
        "gradient_load": c.gradient_load,
        "e1": report.errors[0],
        "e2": report.errors[1],
        "e1_flipped_load": report.errors_flipped_load[0],
        "e2_flipped_load": report.errors_flipped_load[1],
        "max_constraint_residual": report.max_constraint_residual,
        "max_stationarity_residual": report.max_stationarity_residual,
        "timings": report.timings,
        "notes": report.notes,
        "outputs": OUTPUT_FILES,
    });
    s.write("manifest.json", |w| {
        serde_json::to_writer_pretty(&mut *w, &manifest)?;
        writeln!(w)
    })?;
    Ok(())
}
