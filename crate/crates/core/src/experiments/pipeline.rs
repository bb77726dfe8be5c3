use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cell_problems::{solve_cell_problems, CellBasisSet, GradientAnchor};
use crate::error::{Error, Result};
use crate::experiments::config::ErrorNorm;
use crate::experiments::metrics::relative_error;
use crate::field::{Kappa, ScalarField, Source};
use crate::fine_solver::{solve_reference, ReferenceSolution};
use crate::geometry::{build_structure, rasterize, Continuum, PerforatedMesh, Period, UnitCellSpec};
use crate::macro_solver::{assemble_macro, solve_macro, MacroOptions, MacroSolution};
use crate::upscaling::{compute_coefficients, EffectiveCoefficients};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

pub(crate) fn timed<T>(timings: &mut Vec<StageTiming>, stage: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let start = Instant::now();
    let out = f().map_err(|e| e.in_stage(stage))?;
    timings.push(StageTiming { stage: stage.into(), seconds: start.elapsed().as_secs_f64() });
    Ok(out)
}

/// Geometry and fine reference for one (structure, κ, ε, n_fine, f).
/// Independent of the oversampling depth, so several `l` can share it.
pub struct CaseContext {
    pub structure: u32,
    pub kappa: Kappa,
    pub source: Source,
    pub spec: UnitCellSpec,
    pub mesh: PerforatedMesh,
    pub reference: ReferenceSolution,
    pub ref_averages: Vec<[Option<f64>; 2]>,
    pub timings: Vec<StageTiming>,
}

impl CaseContext {
    pub fn build(structure: u32, kappa: Kappa, eps: Period, n_fine: usize, source: Source) -> Result<Self> {
        let mut timings = Vec::new();
        let (spec, mesh) = timed(&mut timings, "geometry", || {
            let spec = build_structure(structure, n_fine)?;
            let mesh = rasterize(&spec, eps)?;
            Ok((spec, mesh))
        })?;
        let reference = timed(&mut timings, "fine_solver", || solve_reference(&mesh, &kappa, &source))?;
        let ref_averages = reference.block_averages(&mesh);
        Ok(CaseContext { structure, kappa, source, spec, mesh, reference, ref_averages, timings })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Upscaled {
    pub layers: usize,
    pub anchor: GradientAnchor,
    pub coefficients: Vec<EffectiveCoefficients>,
    pub max_constraint_residual: f64,
    pub max_stationarity_residual: f64,
}

fn block_coefficients(
    mesh: &PerforatedMesh,
    kappa: &dyn ScalarField,
    f: &dyn ScalarField,
    p: usize,
    layers: usize,
    anchor: GradientAnchor,
) -> Result<(EffectiveCoefficients, CellBasisSet)> {
    let basis = solve_cell_problems(mesh, kappa, p, layers, anchor)?;
    Ok((compute_coefficients(mesh, kappa, f, &basis), basis))
}

/// Cell problems and coefficients for every block. With `dump_dir`, blocks
/// are processed in order and each basis is written as `block_<p>.csv`.
pub fn upscale(
    mesh: &PerforatedMesh,
    kappa: &dyn ScalarField,
    f: &dyn ScalarField,
    layers: usize,
    anchor: GradientAnchor,
    dump_dir: Option<&Path>,
) -> Result<Upscaled> {
    let summary = |(c, b): (EffectiveCoefficients, CellBasisSet)| (c, b.constraint_residual, b.stationarity_residual);
    let per_block: Vec<(EffectiveCoefficients, f64, f64)> = match dump_dir {
        None => (0..mesh.n_blocks())
            .into_par_iter()
            .map(|p| block_coefficients(mesh, kappa, f, p, layers, anchor).map(summary))
            .collect::<Result<_>>()?,
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let mut out = Vec::with_capacity(mesh.n_blocks());
            for p in 0..mesh.n_blocks() {
                let (c, b) = block_coefficients(mesh, kappa, f, p, layers, anchor)?;
                let file = std::fs::File::create(dir.join(format!("block_{p}.csv")))?;
                b.write_csv(std::io::BufWriter::new(file))?;
                out.push(summary((c, b)));
            }
            out
        }
    };
    let mut coefficients = Vec::with_capacity(per_block.len());
    let (mut cres, mut sres) = (0.0f64, 0.0f64);
    for (c, r, s) in per_block {
        coefficients.push(c);
        cres = cres.max(r);
        sres = sres.max(s);
    }
    Ok(Upscaled {
        layers,
        anchor,
        coefficients,
        max_constraint_residual: cres,
        max_stationarity_residual: sres,
    })
}

pub fn macro_solve(n_coarse: usize, coefficients: &[EffectiveCoefficients], opts: MacroOptions) -> Result<MacroSolution> {
    solve_macro(&assemble_macro(n_coarse, coefficients, opts)?)
}

/// (e₂⁽¹⁾, e₂⁽²⁾)
pub fn continuum_errors(u: &MacroSolution, ref_averages: &[[Option<f64>; 2]], norm: ErrorNorm) -> Result<[f64; 2]> {
    Ok([
        relative_error(u, ref_averages, Continuum::One, norm)?,
        relative_error(u, ref_averages, Continuum::Two, norm)?,
    ])
}

/// Everything computed for one `l` on a shared context.
pub struct CaseResult {
    pub upscaled: Upscaled,
    pub macro_solution: MacroSolution,
    pub errors: [f64; 2],
    /// Errors with the gradient-load switch flipped.
    pub errors_flipped_load: [f64; 2],
    pub timings: Vec<StageTiming>,
}

pub fn evaluate(
    ctx: &CaseContext,
    layers: usize,
    anchor: GradientAnchor,
    opts: MacroOptions,
    norm: ErrorNorm,
    dump_dir: Option<&Path>,
) -> Result<CaseResult> {
    let mut timings = Vec::new();
    let mesh = &ctx.mesh;
    let upscaled = timed(&mut timings, "cell_problems", || {
        upscale(mesh, &ctx.kappa, &ctx.source, layers, anchor, dump_dir)
    })?;
    let (macro_solution, flipped) = timed(&mut timings, "macro_solver", || {
        let main = macro_solve(mesh.n_coarse(), &upscaled.coefficients, opts)?;
        let other = MacroOptions { gradient_load: !opts.gradient_load };
        let flipped = macro_solve(mesh.n_coarse(), &upscaled.coefficients, other)?;
        Ok((main, flipped))
    })?;
    let (errors, errors_flipped_load) = timed(&mut timings, "errors", || {
        Ok((
            continuum_errors(&macro_solution, &ctx.ref_averages, norm)?,
            continuum_errors(&flipped, &ctx.ref_averages, norm)?,
        ))
    })?;
    if errors.iter().any(|e| !e.is_finite() || *e < 0.0) {
        return Err(Error::InvalidParameter(format!("non-finite error {errors:?}")).in_stage("errors"));
    }
    Ok(CaseResult { upscaled, macro_solution, errors, errors_flipped_load, timings })
}
