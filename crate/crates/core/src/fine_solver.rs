//! Fine-grid reference solution of −div(κ∇u) = f in Ω^ε, u = 0 on ∂Ω^ε.

use std::io::Write;

use crate::error::{Error, Result};
use crate::fem::{assemble_load, assemble_stiffness, factor_region};
use crate::field::ScalarField;
use crate::geometry::{Continuum, PerforatedMesh, Region};

#[derive(Debug, Clone)]
pub struct ReferenceSolution {
    pub region: Region,
    /// Values on the free nodes of `region`; Dirichlet nodes are zero.
    pub u: Vec<f64>,
}

pub fn solve_reference(
    mesh: &PerforatedMesh,
    kappa: &dyn ScalarField,
    f: &dyn ScalarField,
) -> Result<ReferenceSolution> {
    let region = Region::whole(mesh);
    let a = assemble_stiffness(mesh, &region, kappa);
    let b = assemble_load(mesh, &region, f);
    let solver = factor_region(&region, &a)?;
    let u = solver.solve(&b)?;
    drop(solver);
    Ok(ReferenceSolution { region, u })
}

impl ReferenceSolution {
    pub fn node_value(&self, nr: usize, nc: usize) -> f64 {
        self.region.local_index(nr, nc).map_or(0.0, |k| self.u[k])
    }

    /// Mean of the bilinear interpolant over one fine cell.
    pub fn cell_mean(&self, r: usize, c: usize) -> f64 {
        0.25 * (self.node_value(r, c)
            + self.node_value(r, c + 1)
            + self.node_value(r + 1, c + 1)
            + self.node_value(r + 1, c))
    }

    /// (1/|K_p^ε ∩ Ω_i|) ∫_{K_p^ε ∩ Ω_i} u
    pub fn cell_continuum_average(&self, mesh: &PerforatedMesh, p: usize, i: Continuum) -> Result<f64> {
        let count = mesh.continuum_cell_count(p, i);
        if count == 0 {
            return Err(Error::DegenerateContinuum { block: p, continuum: i.label() });
        }
        let (rows, cols) = mesh.block_cells(p);
        let mut sum = 0.0;
        for r in rows {
            for c in cols.clone() {
                if mesh.label(r, c) == i.label() {
                    sum += self.cell_mean(r, c);
                }
            }
        }
        Ok(sum / count as f64)
    }

    /// Per-block continuum averages, `None` where the continuum is absent.
    pub fn block_averages(&self, mesh: &PerforatedMesh) -> Vec<[Option<f64>; 2]> {
        (0..mesh.n_blocks())
            .map(|p| Continuum::ALL.map(|i| self.cell_continuum_average(mesh, p, i).ok()))
            .collect()
    }

    /// One line per open fine cell: `x1,x2,u,label` at the cell midpoint.
    pub fn write_csv<W: Write>(&self, mesh: &PerforatedMesh, mut out: W) -> std::io::Result<()> {
        writeln!(out, "x1,x2,u,label")?;
        let n = mesh.cells_per_side();
        for r in 0..n {
            for c in 0..n {
                let label = mesh.label(r, c);
                if label == 0 {
                    continue;
                }
                let x = mesh.cell_midpoint(r, c);
                writeln!(out, "{},{},{},{}", x[0], x[1], self.cell_mean(r, c), label)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Kappa, Source};
    use crate::geometry::{build_structure, rasterize, Period};

    fn small_mesh() -> PerforatedMesh {
        rasterize(&build_structure(1, 20).unwrap(), Period::from_inverse(3).unwrap()).unwrap()
    }

    #[test]
    fn zero_source_gives_zero() {
        let mesh = small_mesh();
        let sol = solve_reference(&mesh, &Kappa::ConstantOne, &|_: [f64; 2]| 0.0).unwrap();
        assert!(sol.u.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn linear_in_source() {
        let mesh = small_mesh();
        let u1 = solve_reference(&mesh, &Kappa::TwoPlusSine, &Source::default()).unwrap();
        let u3 = solve_reference(&mesh, &Kappa::TwoPlusSine, &Source { amplitude: 3.0 }).unwrap();
        let scale = u1.u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in u1.u.iter().zip(&u3.u) {
            assert!((3.0 * a - b).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn averages_of_constant_field() {
        let mesh = small_mesh();
        let mut sol = solve_reference(&mesh, &Kappa::ConstantOne, &Source::default()).unwrap();
        sol.u.iter_mut().for_each(|v| *v = 0.0);
        assert_eq!(sol.cell_continuum_average(&mesh, 4, Continuum::One).unwrap(), 0.0);
    }

    #[test]
    fn average_by_hand_enumeration() {
        // 1×1 block, 4×4 cells: continuum 2 is the 2×2 centre, continuum 1 a
        // ring row that connects it
        let period = Period::from_inverse(1).unwrap();
        let mut labels = vec![0u8; 16];
        for c in 0..4 {
            labels[4 + c] = 1;
        }
        labels[4 + 1] = 2;
        labels[4 + 2] = 2;
        labels[8 + 1] = 2;
        labels[8 + 2] = 2;
        let mesh = PerforatedMesh::from_labels(period, 4, labels).unwrap();
        let region = Region::whole(&mesh);
        // only node (2,2) is free: it touches the four continuum-2 cells
        assert_eq!(region.n_unknowns(), 1);
        let sol = ReferenceSolution { region, u: vec![0.8] };
        // each of the four cells holds the free node at one corner → mean 0.2
        let avg = sol.cell_continuum_average(&mesh, 0, Continuum::Two).unwrap();
        assert!((avg - 0.2).abs() < 1e-15);
        // continuum 1 cells (1,0) and (1,3) never touch the free node
        let avg1 = sol.cell_continuum_average(&mesh, 0, Continuum::One).unwrap();
        assert_eq!(avg1, 0.0);
    }
}
