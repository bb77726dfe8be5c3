use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::experiments::config::ExperimentConfig;
use crate::experiments::pipeline::CaseContext;
use crate::experiments::runner::{run_on_context, ErrorReport, ERRORS_HEADER};
use crate::field::Kappa;

#[derive(Debug)]
pub struct SweepOutcome {
    pub reports: Vec<ErrorReport>,
    pub failures: Vec<(ExperimentConfig, String)>,
    pub tables: Vec<PathBuf>,
}

impl SweepOutcome {
    pub fn succeeded(&self) -> bool {
        self.failures.is_empty()
    }
}

/// The full grid of cases: 2 structures × 2 κ × `eps` × `layers`.
pub fn paper_grid(base: &ExperimentConfig, eps_inverses: &[usize], layers: &[usize]) -> Result<Vec<ExperimentConfig>> {
    let mut out = Vec::new();
    for structure in [1, 2] {
        for kappa in [Kappa::ConstantOne, Kappa::TwoPlusSine] {
            for &inv in eps_inverses {
                for &l in layers {
                    out.push(ExperimentConfig {
                        structure,
                        kappa,
                        eps: crate::geometry::Period::from_inverse(inv)?,
                        layers: l,
                        ..base.clone()
                    });
                }
            }
        }
    }
    Ok(out)
}

fn same_context(a: &ExperimentConfig, b: &ExperimentConfig) -> bool {
    a.structure == b.structure
        && a.kappa == b.kappa
        && a.eps == b.eps
        && a.n_fine == b.n_fine
        && a.source_amplitude == b.source_amplitude
}

/// Run every config under `out/<tag>/`, merge `errors.csv`, and write one
/// table per (structure, κ). Failed cases go to `failures.log`.
pub fn sweep(configs: &[ExperimentConfig], out: &Path) -> Result<SweepOutcome> {
    if configs.is_empty() {
        return Err(Error::Config("sweep needs at least one case".into()));
    }
    for c in configs {
        c.validate()?;
    }
    fs::create_dir_all(out)?;

    // cases sharing geometry and reference are evaluated on one context
    let mut groups: Vec<Vec<&ExperimentConfig>> = Vec::new();
    for c in configs {
        match groups.iter_mut().find(|g| same_context(g[0], c)) {
            Some(g) => g.push(c),
            None => groups.push(vec![c]),
        }
    }

    let mut reports = Vec::new();
    let mut failures = Vec::new();
    for group in groups {
        let head = group[0];
        match CaseContext::build(head.structure, head.kappa, head.eps, head.n_fine, head.source()) {
            Ok(ctx) => {
                for c in group {
                    let case = ExperimentConfig { out: Some(out.join(c.tag())), ..c.clone() };
                    match run_on_context(&ctx, &case) {
                        Ok(r) => reports.push(r),
                        Err(e) => failures.push((case, e.to_string())),
                    }
                }
            }
            Err(e) => {
                for c in group {
                    failures.push((c.clone(), e.to_string()));
                }
            }
        }
    }

    let mut merged = format!("{ERRORS_HEADER}\n");
    for r in &reports {
        merged.push_str(&r.errors_row());
        merged.push('\n');
    }
    fs::write(out.join("errors.csv"), merged)?;

    let failure_log = out.join("failures.log");
    if failures.is_empty() {
        let _ = fs::remove_file(&failure_log);
    } else {
        let mut log = String::new();
        for (c, msg) in &failures {
            writeln!(log, "{}: {msg}", c.tag()).unwrap();
        }
        fs::write(&failure_log, log)?;
    }

    let mut tables = Vec::new();
    let keys: BTreeSet<(u32, &'static str)> =
        reports.iter().map(|r| (r.config.structure, r.config.kappa.cli_name())).collect();
    for (structure, kappa) in keys {
        let rows: Vec<&ErrorReport> = reports
            .iter()
            .filter(|r| r.config.structure == structure && r.config.kappa.cli_name() == kappa)
            .collect();
        let path = out.join(format!("table_s{structure}_{kappa}.md"));
        fs::write(&path, format_table(structure, kappa, &rows))?;
        tables.push(path);
    }
    Ok(SweepOutcome { reports, failures, tables })
}

/// Rows l, one (e₂⁽¹⁾, e₂⁽²⁾) column pair per ε.
pub fn format_table(structure: u32, kappa: &str, reports: &[&ErrorReport]) -> String {
    let eps: BTreeSet<usize> = reports.iter().map(|r| r.config.eps.inverse()).collect();
    let layers: BTreeSet<usize> = reports.iter().map(|r| r.config.layers).collect();
    let norm = reports.first().map(|r| r.config.error_norm);
    let mut s = String::new();
    writeln!(s, "structure {structure}, kappa {kappa}, norm {norm:?}").unwrap();
    writeln!(s).unwrap();
    let mut header = String::from("| l |");
    let mut rule = String::from("|---|");
    for inv in &eps {
        write!(header, " e1 (1/{inv}) | e2 (1/{inv}) |").unwrap();
        rule.push_str("---|---|");
    }
    writeln!(s, "{header}").unwrap();
    writeln!(s, "{rule}").unwrap();
    for l in layers {
        write!(s, "| {l} |").unwrap();
        for inv in &eps {
            match reports.iter().find(|r| r.config.layers == l && r.config.eps.inverse() == *inv) {
                Some(r) => write!(s, " {:.2e} | {:.2e} |", r.errors[0], r.errors[1]).unwrap(),
                None => s.push_str(" - | - |"),
            }
        }
        writeln!(s).unwrap();
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_sweep_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(sweep(&[], dir.path()), Err(Error::Config(_))));
    }

    #[test]
    fn full_grid_counts() {
        let grid = paper_grid(&ExperimentConfig::default(), &[10, 20, 40], &[0, 1, 2]).unwrap();
        assert_eq!(grid.len(), 36);
        let keys: BTreeSet<_> = grid.iter().map(|c| (c.structure, c.kappa.cli_name())).collect();
        assert_eq!(keys.len(), 4);
    }
}
