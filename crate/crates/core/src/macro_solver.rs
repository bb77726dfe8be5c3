//! Coupled two-continuum macroscopic system on the unperforated coarse grid.
//!
//! U₁, U₂ are continuous bilinear functions on the coarse grid with zero
//! boundary values. On each coarse block the weak form is collocated at the
//! block centre: the block's extensive coefficients multiply U_i(x_p),
//! ∂_m U_i(x_p) and the matching test quantities, so the discrete system is
//! the cellwise sum
//!
//! ```text
//! Σ_p  B_ji U_i V_j + Bm_ji^m ∂_m U_i V_j + Bbar_ji^n U_i ∂_n V_j
//!      + Bmn_ji^{mn} ∂_m U_i ∂_n V_j  =  Σ_p  b_j V_j + bgrad_j^n ∂_n V_j
//! ```

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::banded::BandedMatrix;
use crate::fem::sparse::norm2;
use crate::upscaling::EffectiveCoefficients;

pub const MACRO_TOLERANCE: f64 = 1e-10;
const SINGULAR_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MacroOptions {
    /// Include the (f, φ_j^n) ∂_n V_j load term.
    pub gradient_load: bool,
}

impl Default for MacroOptions {
    fn default() -> Self {
        MacroOptions { gradient_load: true }
    }
}

/// Bilinear shape data at a block centre for corners ordered bottom-left,
/// bottom-right, top-right, top-left: values and x₁/x₂ derivatives.
fn center_shape(h: f64) -> ([f64; 4], [[f64; 4]; 2]) {
    let d = 0.5 / h;
    ([0.25; 4], [[-d, d, d, -d], [-d, -d, d, d]])
}

#[derive(Debug, Clone)]
pub struct MacroSystem {
    pub n_coarse: usize,
    pub matrix: BandedMatrix,
    pub rhs: Vec<f64>,
}

impl MacroSystem {
    /// Unknown index of continuum `i` at coarse node `(a, b)`, if interior.
    pub fn unknown(n_coarse: usize, a: usize, b: usize, i: usize) -> Option<usize> {
        if a == 0 || b == 0 || a >= n_coarse || b >= n_coarse {
            return None;
        }
        Some(((a - 1) * (n_coarse - 1) + (b - 1)) * 2 + i)
    }

    pub fn n_unknowns(&self) -> usize {
        self.rhs.len()
    }
}

fn block_corners(n_coarse: usize, p: usize) -> [(usize, usize); 4] {
    let (a, b) = (p / n_coarse, p % n_coarse);
    [(a, b), (a, b + 1), (a + 1, b + 1), (a + 1, b)]
}

pub fn assemble_macro(n_coarse: usize, coeffs: &[EffectiveCoefficients], opts: MacroOptions) -> Result<MacroSystem> {
    if coeffs.len() != n_coarse * n_coarse {
        return Err(Error::InvalidParameter(format!(
            "expected {} coefficient blocks, got {}",
            n_coarse * n_coarse,
            coeffs.len()
        )));
    }
    if n_coarse < 2 {
        return Err(Error::InvalidParameter("need at least 2 coarse blocks per side".into()));
    }
    let n = 2 * (n_coarse - 1) * (n_coarse - 1);
    let band = 2 * n_coarse + 1;
    let mut matrix = BandedMatrix::zeros(n, band, band);
    let mut rhs = vec![0.0; n];
    let h = 1.0 / n_coarse as f64;
    let (val, der) = center_shape(h);

    for c in coeffs {
        let corners = block_corners(n_coarse, c.block);
        for j in 0..2 {
            for (a, &(ar, ac)) in corners.iter().enumerate() {
                let Some(row) = MacroSystem::unknown(n_coarse, ar, ac, j) else { continue };
                let mut f = c.load[j] * val[a];
                if opts.gradient_load {
                    for nd in 0..2 {
                        f += c.load_grad[j][nd] * der[nd][a];
                    }
                }
                rhs[row] += f;
                for i in 0..2 {
                    for (b, &(br, bc)) in corners.iter().enumerate() {
                        let Some(col) = MacroSystem::unknown(n_coarse, br, bc, i) else { continue };
                        let mut v = c.b_mat[j][i] * val[b] * val[a];
                        for m in 0..2 {
                            v += c.bm[j][i][m] * der[m][b] * val[a];
                            v += c.bbar[j][i][m] * val[b] * der[m][a];
                            for nd in 0..2 {
                                v += c.bmn[j][i][m][nd] * der[m][b] * der[nd][a];
                            }
                        }
                        matrix.add(row, col, v);
                    }
                }
            }
        }
    }
    Ok(MacroSystem { n_coarse, matrix, rhs })
}

/// Nodal values of U₁, U₂ on the `(n_coarse + 1)²` coarse grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MacroSolution {
    pub n_coarse: usize,
    pub u: [Vec<f64>; 2],
}

impl MacroSolution {
    pub fn node(&self, i: usize, a: usize, b: usize) -> f64 {
        self.u[i][a * (self.n_coarse + 1) + b]
    }

    /// (1/|K_p|) ∫_{K_p} U_i, exact for bilinears.
    pub fn block_mean(&self, p: usize, i: usize) -> f64 {
        block_corners(self.n_coarse, p).iter().map(|&(a, b)| self.node(i, a, b)).sum::<f64>() * 0.25
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "x1,x2,U1,U2")?;
        let h = 1.0 / self.n_coarse as f64;
        for a in 0..=self.n_coarse {
            for b in 0..=self.n_coarse {
                writeln!(out, "{},{},{},{}", b as f64 * h, a as f64 * h, self.node(0, a, b), self.node(1, a, b))?;
            }
        }
        Ok(())
    }
}

pub fn solve_macro(system: &MacroSystem) -> Result<MacroSolution> {
    let a = &system.matrix;
    let b = &system.rhs;
    let lu = a.clone().factor(SINGULAR_TOL)?;
    let mut x = lu.solve(b);
    let bnorm = norm2(b);
    if bnorm > 0.0 {
        let mut steps = 0;
        loop {
            let ax = a.mul_vec(&x);
            let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
            let rel = norm2(&r) / bnorm;
            if rel <= MACRO_TOLERANCE {
                break;
            }
            if steps == 3 {
                return Err(Error::Residual { residual: rel, tolerance: MACRO_TOLERANCE });
            }
            let dx = lu.solve(&r);
            x.iter_mut().zip(&dx).for_each(|(xi, di)| *xi += di);
            steps += 1;
        }
    }

    let nc = system.n_coarse;
    let mut u = [vec![0.0; (nc + 1) * (nc + 1)], vec![0.0; (nc + 1) * (nc + 1)]];
    for a in 1..nc {
        for bcol in 1..nc {
            for (i, ui) in u.iter_mut().enumerate() {
                ui[a * (nc + 1) + bcol] = x[MacroSystem::unknown(nc, a, bcol, i).unwrap()];
            }
        }
    }
    Ok(MacroSolution { n_coarse: nc, u })
}
