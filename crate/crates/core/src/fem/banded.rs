//! General banded LU with partial pivoting for the nonsymmetric macroscopic
//! system.

use crate::error::{Error, Result};

/// Row-band storage: row `i` keeps columns `i - kl ..= i + ku + kl`, the
/// extra `kl` super-diagonals absorbing fill from row interchanges.
#[derive(Debug, Clone)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        BandedMatrix { n, kl, ku, width, data: vec![0.0; n * width] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.ku + self.kl);
        i * self.width + (j + self.kl - i)
    }

    pub fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && j + self.kl >= i && j <= i + self.ku
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(self.in_band(i, j), "entry ({i}, {j}) outside band kl={} ku={}", self.kl, self.ku);
        let s = self.slot(i, j);
        self.data[s] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.data[self.slot(i, j)]
        } else {
            0.0
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.n - 1);
                (lo..=hi).map(|j| self.data[self.slot(i, j)] * x[j]).sum()
            })
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Factor in place; `singular_tol` is relative to the largest entry.
    pub fn factor(mut self, singular_tol: f64) -> Result<BandedLu> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let scale = self.max_abs();
        let mut pivots = vec![0usize; n];
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.data[self.slot(k, k)].abs();
            for i in k + 1..=last_row {
                let v = self.data[self.slot(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > singular_tol * scale) {
                return Err(Error::SingularMacro { index: k });
            }
            pivots[k] = p;
            let last_col = (k + ku + kl).min(n - 1);
            if p != k {
                for j in k..=last_col {
                    let (a, b) = (self.slot(k, j), self.slot(p, j));
                    self.data.swap(a, b);
                }
            }
            let pivot = self.data[self.slot(k, k)];
            for i in k + 1..=last_row {
                let sik = self.slot(i, k);
                let factor = self.data[sik] / pivot;
                self.data[sik] = factor;
                if factor != 0.0 {
                    for j in k + 1..=last_col {
                        let (a, b) = (self.slot(i, j), self.slot(k, j));
                        self.data[a] -= factor * self.data[b];
                    }
                }
            }
        }
        Ok(BandedLu { m: self, pivots })
    }
}

#[derive(Debug, Clone)]
pub struct BandedLu {
    m: BandedMatrix,
    pivots: Vec<usize>,
}

impl BandedLu {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let m = &self.m;
        let n = m.n;
        let mut x = b.to_vec();
        for k in 0..n {
            x.swap(k, self.pivots[k]);
            let last_row = (k + m.kl).min(n - 1);
            for i in k + 1..=last_row {
                x[i] -= m.data[m.slot(i, k)] * x[k];
            }
        }
        for k in (0..n).rev() {
            let last_col = (k + m.ku + m.kl).min(n - 1);
            let mut s = x[k];
            for j in k + 1..=last_col {
                s -= m.data[m.slot(k, j)] * x[j];
            }
            x[k] = s / m.data[m.slot(k, k)];
        }
        x
    }
}
