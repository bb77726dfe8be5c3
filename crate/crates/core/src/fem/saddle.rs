//! SPD solves and equality-constrained energy minimization.
//!
//! The constrained problem is min ½ φᵀAφ subject to Cφ = g. Its optimality
//! system is written with the multiplier sign that matches the weak form
//! of the cell problems:
//!
//! ```text
//!     A φ − Cᵀ λ = 0,    C φ = g.
//! ```
//!
//! Eliminating φ = A⁻¹Cᵀλ leaves the dense Schur system S λ = g with
//! S = C A⁻¹ Cᵀ. The columns W = A⁻¹Cᵀ are computed once, so any number of
//! right-hand sides g cost only a small dense solve and one product W λ.

use crate::error::{Error, Result, RowTag};
use crate::fem::assembly::ConstraintBlock;
use crate::fem::cholesky::SparseCholesky;
use crate::fem::dense::DenseCholesky;
use crate::fem::sparse::{norm2, CsrMatrix};

pub const SPD_TOLERANCE: f64 = 1e-10;
pub const CONSTRAINT_TOLERANCE: f64 = 1e-9;
const MAX_REFINEMENT: usize = 3;
const SCHUR_RANK_TOL: f64 = 1e-10;

/// A factored SPD matrix with residual-checked solves.
#[derive(Debug, Clone)]
pub struct SpdSolver<'a> {
    a: &'a CsrMatrix,
    chol: SparseCholesky,
}

impl<'a> SpdSolver<'a> {
    /// Natural ordering; fine for small systems.
    pub fn new(a: &'a CsrMatrix) -> Result<Self> {
        Self::with_permutation(a, (0..a.nrows()).collect())
    }

    /// `perm[new] = old`, typically from
    /// [`nested_dissection`](crate::fem::ordering::nested_dissection).
    pub fn with_permutation(a: &'a CsrMatrix, perm: Vec<usize>) -> Result<Self> {
        let chol = SparseCholesky::factor(a, perm)?;
        Ok(SpdSolver { a, chol })
    }

    pub fn matrix(&self) -> &CsrMatrix {
        self.a
    }

    pub fn factor_nnz(&self) -> usize {
        self.chol.factor_nnz()
    }

    /// Solve A x = b to relative residual [`SPD_TOLERANCE`], refining
    /// iteratively if the first pass falls short.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let bnorm = norm2(rhs);
        if bnorm == 0.0 {
            return Ok(vec![0.0; rhs.len()]);
        }
        let mut x = self.chol.solve(rhs);
        let mut res = residual(self.a, &x, rhs);
        let mut rel = norm2(&res) / bnorm;
        let mut steps = 0;
        while rel > SPD_TOLERANCE && steps < MAX_REFINEMENT {
            let dx = self.chol.solve(&res);
            x.iter_mut().zip(&dx).for_each(|(xi, di)| *xi += di);
            res = residual(self.a, &x, rhs);
            rel = norm2(&res) / bnorm;
            steps += 1;
        }
        if !(rel <= SPD_TOLERANCE) {
            return Err(Error::Residual { residual: rel, tolerance: SPD_TOLERANCE });
        }
        Ok(x)
    }
}

fn residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> Vec<f64> {
    let ax = a.mul_vec(x);
    b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect()
}

/// Factor and solve once.
pub fn solve_spd(a: &CsrMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    SpdSolver::new(a)?.solve(rhs)
}

#[derive(Debug, Clone)]
pub struct SaddleSolution {
    pub phi: Vec<f64>,
    /// Unscaled multipliers, one per constraint row.
    pub lambda: Vec<f64>,
    /// ‖Cφ − g‖ / ‖g‖ (absolute when g = 0).
    pub constraint_residual: f64,
}

/// Schur-complement solver for one constraint block; reusable across
/// right-hand sides.
#[derive(Debug, Clone)]
pub struct SaddleSolver {
    c: CsrMatrix,
    /// Columns of A⁻¹Cᵀ.
    w: Vec<Vec<f64>>,
    schur: DenseCholesky,
}

impl SaddleSolver {
    pub fn new(spd: &SpdSolver<'_>, constraints: &ConstraintBlock) -> Result<Self> {
        let c = constraints.matrix.clone();
        let r = c.nrows();
        let n = c.ncols();
        assert_eq!(n, spd.matrix().nrows());
        let mut w = Vec::with_capacity(r);
        for row in 0..r {
            let mut ct = vec![0.0; n];
            for (j, v) in c.row(row) {
                ct[j] = v;
            }
            w.push(spd.solve(&ct)?);
        }
        let mut s = vec![0.0; r * r];
        for a in 0..r {
            for b in a..r {
                let v: f64 = c.row(a).map(|(j, cv)| cv * w[b][j]).sum();
                s[a * r + b] = v;
                s[b * r + a] = v;
            }
        }
        let schur = DenseCholesky::factor(&s, r, SCHUR_RANK_TOL).map_err(|dep| Error::RankDeficient {
            rows: dep.into_iter().map(|k| constraints.rows[k]).collect::<Vec<RowTag>>(),
        })?;
        Ok(SaddleSolver { c, w, schur })
    }

    pub fn n_rows(&self) -> usize {
        self.w.len()
    }

    fn combine(&self, lambda: &[f64]) -> Vec<f64> {
        let n = self.c.ncols();
        let mut phi = vec![0.0; n];
        for (col, &l) in self.w.iter().zip(lambda) {
            if l != 0.0 {
                phi.iter_mut().zip(col).for_each(|(p, w)| *p += l * w);
            }
        }
        phi
    }

    pub fn solve(&self, g: &[f64]) -> Result<SaddleSolution> {
        assert_eq!(g.len(), self.n_rows());
        let gnorm = norm2(g);
        let mut lambda = self.schur.solve(g);
        let mut phi = self.combine(&lambda);
        let mut rel = self.constraint_residual(&phi, g, gnorm);
        let mut steps = 0;
        while rel > CONSTRAINT_TOLERANCE && steps < MAX_REFINEMENT {
            let cphi = self.c.mul_vec(&phi);
            let r: Vec<f64> = g.iter().zip(&cphi).map(|(a, b)| a - b).collect();
            let dl = self.schur.solve(&r);
            lambda.iter_mut().zip(&dl).for_each(|(l, d)| *l += d);
            phi = self.combine(&lambda);
            rel = self.constraint_residual(&phi, g, gnorm);
            steps += 1;
        }
        if !(rel <= CONSTRAINT_TOLERANCE) {
            return Err(Error::Residual { residual: rel, tolerance: CONSTRAINT_TOLERANCE });
        }
        Ok(SaddleSolution { phi, lambda, constraint_residual: rel })
    }

    fn constraint_residual(&self, phi: &[f64], g: &[f64], gnorm: f64) -> f64 {
        let cphi = self.c.mul_vec(phi);
        let r: f64 = g.iter().zip(&cphi).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        if gnorm > 0.0 {
            r / gnorm
        } else {
            r
        }
    }
}

/// One-shot constrained solve for each target vector in `targets`.
pub fn solve_saddle(
    a: &CsrMatrix,
    constraints: &ConstraintBlock,
    targets: &[Vec<f64>],
) -> Result<Vec<SaddleSolution>> {
    let spd = SpdSolver::new(a)?;
    let saddle = SaddleSolver::new(&spd, constraints)?;
    targets.iter().map(|g| saddle.solve(g)).collect()
}

/// ‖Aφ − Cᵀλ‖ / max(‖Aφ‖, ‖Cᵀλ‖): how far φ is from being stationary.
pub fn stationarity_residual(a: &CsrMatrix, c: &CsrMatrix, sol: &SaddleSolution) -> f64 {
    let aphi = a.mul_vec(&sol.phi);
    let ctl = c.mul_transpose_vec(&sol.lambda);
    let diff: Vec<f64> = aphi.iter().zip(&ctl).map(|(x, y)| x - y).collect();
    let scale = norm2(&aphi).max(norm2(&ctl));
    if scale == 0.0 {
        0.0
    } else {
        norm2(&diff) / scale
    }
}
