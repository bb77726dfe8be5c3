//! Up-looking sparse Cholesky factorization `P A Pᵀ = L Lᵀ`.
//!
//! Row k of L is found by a triangular solve against the rows already
//! computed; its pattern is the reach of A(:, k) in the elimination tree.

use crate::error::{Error, Result};
use crate::fem::sparse::CsrMatrix;

const NONE: usize = usize::MAX;

#[derive(Debug, Clone)]
pub struct SparseCholesky {
    n: usize,
    perm: Vec<usize>,
    pinv: Vec<usize>,
    lp: Vec<usize>,
    li: Vec<u32>,
    lx: Vec<f64>,
}

/// Upper triangle of `P A Pᵀ` in compressed-column form.
struct UpperCsc {
    cp: Vec<usize>,
    ci: Vec<usize>,
    cx: Vec<f64>,
}

fn permuted_upper(a: &CsrMatrix, pinv: &[usize]) -> UpperCsc {
    let n = a.nrows();
    let mut cp = vec![0usize; n + 1];
    for i in 0..n {
        for (j, _) in a.row(i) {
            let (ii, jj) = (pinv[i], pinv[j]);
            if ii <= jj {
                cp[jj + 1] += 1;
            }
        }
    }
    for k in 0..n {
        cp[k + 1] += cp[k];
    }
    let mut next = cp[..n].to_vec();
    let mut ci = vec![0usize; cp[n]];
    let mut cx = vec![0.0; cp[n]];
    for i in 0..n {
        for (j, v) in a.row(i) {
            let (ii, jj) = (pinv[i], pinv[j]);
            if ii <= jj {
                ci[next[jj]] = ii;
                cx[next[jj]] = v;
                next[jj] += 1;
            }
        }
    }
    UpperCsc { cp, ci, cx }
}

fn etree(c: &UpperCsc, n: usize) -> Vec<usize> {
    let mut parent = vec![NONE; n];
    let mut ancestor = vec![NONE; n];
    for k in 0..n {
        for p in c.cp[k]..c.cp[k + 1] {
            let mut i = c.ci[p];
            while i != NONE && i < k {
                let inext = ancestor[i];
                ancestor[i] = k;
                if inext == NONE {
                    parent[i] = k;
                }
                i = inext;
            }
        }
    }
    parent
}

/// Nonzero pattern of row k of L (excluding the diagonal) in topological
/// order, written to `stack[top..]`; returns `top`.
fn ereach(c: &UpperCsc, k: usize, parent: &[usize], stack: &mut [usize], mark: &mut [usize]) -> usize {
    let n = stack.len();
    let mut top = n;
    mark[k] = k;
    for p in c.cp[k]..c.cp[k + 1] {
        let mut i = c.ci[p];
        if i > k {
            continue;
        }
        let mut len = 0;
        while mark[i] != k {
            stack[len] = i;
            len += 1;
            mark[i] = k;
            i = parent[i];
        }
        while len > 0 {
            len -= 1;
            top -= 1;
            stack[top] = stack[len];
        }
    }
    top
}

impl SparseCholesky {
    /// Factor a symmetric positive definite matrix. `perm[new] = old`.
    pub fn factor(a: &CsrMatrix, perm: Vec<usize>) -> Result<Self> {
        let n = a.nrows();
        assert_eq!(a.ncols(), n);
        assert_eq!(perm.len(), n);
        let mut pinv = vec![NONE; n];
        for (k, &i) in perm.iter().enumerate() {
            pinv[i] = k;
        }
        let c = permuted_upper(a, &pinv);
        let parent = etree(&c, n);

        let mut stack = vec![0usize; n];
        let mut mark = vec![NONE; n];

        let mut counts = vec![1usize; n];
        for k in 0..n {
            let top = ereach(&c, k, &parent, &mut stack, &mut mark);
            for &i in &stack[top..] {
                counts[i] += 1;
            }
        }
        let mut lp = vec![0usize; n + 1];
        for k in 0..n {
            lp[k + 1] = lp[k] + counts[k];
        }
        let nnz = lp[n];
        let mut li = vec![0u32; nnz];
        let mut lx = vec![0.0f64; nnz];
        let mut next = lp[..n].to_vec();
        let mut x = vec![0.0f64; n];
        mark.fill(NONE);

        for k in 0..n {
            let top = ereach(&c, k, &parent, &mut stack, &mut mark);
            x[k] = 0.0;
            for p in c.cp[k]..c.cp[k + 1] {
                x[c.ci[p]] += c.cx[p];
            }
            let mut d = x[k];
            x[k] = 0.0;
            for &i in &stack[top..] {
                let lki = x[i] / lx[lp[i]];
                x[i] = 0.0;
                for p in lp[i] + 1..next[i] {
                    x[li[p] as usize] -= lx[p] * lki;
                }
                d -= lki * lki;
                let p = next[i];
                next[i] += 1;
                li[p] = k as u32;
                lx[p] = lki;
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite { column: perm[k], pivot: d });
            }
            let p = next[k];
            next[k] += 1;
            li[p] = k as u32;
            lx[p] = d.sqrt();
        }

        Ok(SparseCholesky { n, perm, pinv, lp, li, lx })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Nonzeros in L including the diagonal.
    pub fn factor_nnz(&self) -> usize {
        self.lx.len()
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        assert_eq!(rhs.len(), self.n);
        let mut x = vec![0.0; self.n];
        for (i, &b) in rhs.iter().enumerate() {
            x[self.pinv[i]] = b;
        }
        // L y = b
        for j in 0..self.n {
            let (start, end) = (self.lp[j], self.lp[j + 1]);
            x[j] /= self.lx[start];
            let xj = x[j];
            if xj != 0.0 {
                for p in start + 1..end {
                    x[self.li[p] as usize] -= self.lx[p] * xj;
                }
            }
        }
        // Lᵀ x = y
        for j in (0..self.n).rev() {
            let (start, end) = (self.lp[j], self.lp[j + 1]);
            let mut s = x[j];
            for p in start + 1..end {
                s -= self.lx[p] * x[self.li[p] as usize];
            }
            x[j] = s / self.lx[start];
        }
        let mut out = vec![0.0; self.n];
        for (k, &i) in self.perm.iter().enumerate() {
            out[i] = x[k];
        }
        out
    }
}
