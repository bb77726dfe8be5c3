//! Piecewise-constant macroscopic coefficients from the local energy inner
//! product a_p(u, v) = ∫_{K_p^ε} κ ∇u·∇v.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::cell_problems::CellBasisSet;
use crate::fem::assembly::{cell_values, element_energy};
use crate::field::ScalarField;
use crate::geometry::PerforatedMesh;

/// Extensive (per-block) coefficients. Index order follows the macroscopic
/// equation for test continuum j and trial continuum i.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveCoefficients {
    pub block: usize,
    /// `b_mat[j][i] = a_p(φ_i, φ_j)`
    pub b_mat: [[f64; 2]; 2],
    /// `bm[j][i][m] = a_p(φ_i^m, φ_j)`
    pub bm: [[[f64; 2]; 2]; 2],
    /// `bbar[j][i][n] = a_p(φ_i, φ_j^n)`
    pub bbar: [[[f64; 2]; 2]; 2],
    /// `bmn[j][i][m][n] = a_p(φ_i^m, φ_j^n)`
    pub bmn: [[[[f64; 2]; 2]; 2]; 2],
    /// `load[j] = ∫_{K_p^ε} f φ_j`
    pub load: [f64; 2],
    /// `load_grad[j][n] = ∫_{K_p^ε} f φ_j^n`
    pub load_grad: [[f64; 2]; 2],
    /// |K_p| = ε²
    pub block_area: f64,
}

const fn avg(i: usize) -> usize {
    i
}

const fn grad(i: usize, m: usize) -> usize {
    2 + 2 * i + m
}

pub fn compute_coefficients(
    mesh: &PerforatedMesh,
    kappa: &dyn ScalarField,
    f: &dyn ScalarField,
    basis: &CellBasisSet,
) -> EffectiveCoefficients {
    let p = basis.p;
    let fields = basis.fields();
    let h = mesh.h();
    let quarter = 0.25 * h * h;

    let mut gram = [[0.0f64; 6]; 6];
    let mut loads = [0.0f64; 6];
    let (rows, cols) = mesh.block_cells(p);
    for r in rows {
        for c in cols.clone() {
            if mesh.is_solid(r, c) {
                continue;
            }
            let mid = mesh.cell_midpoint(r, c);
            let k = kappa.value(mid);
            let fv = f.value(mid);
            let vals: [[f64; 4]; 6] = std::array::from_fn(|a| cell_values(&basis.region, fields[a].1, r, c));
            for a in 0..6 {
                loads[a] += fv * quarter * vals[a].iter().sum::<f64>();
                for b in a..6 {
                    gram[a][b] += k * element_energy(&vals[a], &vals[b]);
                }
            }
        }
    }
    for a in 0..6 {
        for b in 0..a {
            gram[a][b] = gram[b][a];
        }
    }

    let mut out = EffectiveCoefficients {
        block: p,
        b_mat: [[0.0; 2]; 2],
        bm: [[[0.0; 2]; 2]; 2],
        bbar: [[[0.0; 2]; 2]; 2],
        bmn: [[[[0.0; 2]; 2]; 2]; 2],
        load: [0.0; 2],
        load_grad: [[0.0; 2]; 2],
        block_area: mesh.eps() * mesh.eps(),
    };
    for j in 0..2 {
        out.load[j] = loads[avg(j)];
        for n in 0..2 {
            out.load_grad[j][n] = loads[grad(j, n)];
        }
        for i in 0..2 {
            out.b_mat[j][i] = gram[avg(i)][avg(j)];
            for m in 0..2 {
                out.bm[j][i][m] = gram[grad(i, m)][avg(j)];
                out.bbar[j][i][m] = gram[avg(i)][grad(j, m)];
                for n in 0..2 {
                    out.bmn[j][i][m][n] = gram[grad(i, m)][grad(j, n)];
                }
            }
        }
    }
    out
}

impl EffectiveCoefficients {
    /// Flattened values in the column order of [`coefficients_csv_header`].
    pub fn csv_values(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(40);
        for j in 0..2 {
            for i in 0..2 {
                v.push(self.b_mat[j][i]);
            }
        }
        for j in 0..2 {
            for i in 0..2 {
                for m in 0..2 {
                    v.push(self.bm[j][i][m]);
                }
            }
        }
        for j in 0..2 {
            for i in 0..2 {
                for n in 0..2 {
                    v.push(self.bbar[j][i][n]);
                }
            }
        }
        for j in 0..2 {
            for i in 0..2 {
                for m in 0..2 {
                    for n in 0..2 {
                        v.push(self.bmn[j][i][m][n]);
                    }
                }
            }
        }
        v.extend_from_slice(&self.load);
        for j in 0..2 {
            v.extend_from_slice(&self.load_grad[j]);
        }
        v
    }
}

/// Column names with 1-based indices, e.g. `B12`, `Bm_121`, `Bmn_1212`.
pub fn coefficients_csv_header() -> Vec<String> {
    let mut h = vec!["p".to_string()];
    for j in 1..=2 {
        for i in 1..=2 {
            h.push(format!("B{j}{i}"));
        }
    }
    for j in 1..=2 {
        for i in 1..=2 {
            for m in 1..=2 {
                h.push(format!("Bm_{j}{i}{m}"));
            }
        }
    }
    for j in 1..=2 {
        for i in 1..=2 {
            for n in 1..=2 {
                h.push(format!("Bbar_{j}{i}{n}"));
            }
        }
    }
    for j in 1..=2 {
        for i in 1..=2 {
            for m in 1..=2 {
                for n in 1..=2 {
                    h.push(format!("Bmn_{j}{i}{m}{n}"));
                }
            }
        }
    }
    h.push("b1".into());
    h.push("b2".into());
    for j in 1..=2 {
        for n in 1..=2 {
            h.push(format!("bgrad_{j}{n}"));
        }
    }
    h
}

pub fn write_coefficients_csv<W: Write>(coeffs: &[EffectiveCoefficients], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{}", coefficients_csv_header().join(","))?;
    for c in coeffs {
        write!(out, "{}", c.block)?;
        for v in c.csv_values() {
            write!(out, ",{v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}
