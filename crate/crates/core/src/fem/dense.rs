//! Small dense kernels for Schur complements.

/// Cholesky of a row-major SPD matrix. Rows whose pivot falls below
/// `rel_tol` times their original diagonal are reported as dependent.
#[derive(Debug, Clone)]
pub struct DenseCholesky {
    n: usize,
    l: Vec<f64>,
}

impl DenseCholesky {
    pub fn factor(a: &[f64], n: usize, rel_tol: f64) -> Result<Self, Vec<usize>> {
        assert_eq!(a.len(), n * n);
        let mut l = vec![0.0; n * n];
        let mut dependent = Vec::new();
        for k in 0..n {
            let mut d = a[k * n + k];
            for p in 0..k {
                d -= l[k * n + p] * l[k * n + p];
            }
            if !(d > rel_tol * a[k * n + k].abs()) {
                dependent.push(k);
                // keep going with a unit pivot so every dependent row is found
                l[k * n + k] = 1.0;
                continue;
            }
            let dk = d.sqrt();
            l[k * n + k] = dk;
            for i in k + 1..n {
                let mut s = a[i * n + k];
                for p in 0..k {
                    s -= l[i * n + p] * l[k * n + p];
                }
                l[i * n + k] = s / dk;
            }
        }
        if dependent.is_empty() {
            Ok(DenseCholesky { n, l })
        } else {
            Err(dependent)
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x = b.to_vec();
        for i in 0..n {
            let mut s = x[i];
            for p in 0..i {
                s -= self.l[i * n + p] * x[p];
            }
            x[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for p in i + 1..n {
                s -= self.l[p * n + i] * x[p];
            }
            x[i] = s / self.l[i * n + i];
        }
        x
    }
}
