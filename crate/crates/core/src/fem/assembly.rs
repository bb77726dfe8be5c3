//! Bilinear-quadrilateral assembly on the unknowns of a [`Region`].
//!
//! Coefficients are sampled once per fine cell at its midpoint. The Q1
//! Laplace element matrix on a square does not depend on the cell size, so
//! the stiffness entries are just κ-weighted sums of [`Q1_STIFFNESS`].

use crate::error::RowTag;
use crate::fem::sparse::CsrMatrix;
use crate::field::ScalarField;
use crate::geometry::{Continuum, PerforatedMesh, Region};

/// Reference Q1 stiffness for corners ordered bottom-left, bottom-right,
/// top-right, top-left.
pub const Q1_STIFFNESS: [[f64; 4]; 4] = [
    [2.0 / 3.0, -1.0 / 6.0, -1.0 / 3.0, -1.0 / 6.0],
    [-1.0 / 6.0, 2.0 / 3.0, -1.0 / 6.0, -1.0 / 3.0],
    [-1.0 / 3.0, -1.0 / 6.0, 2.0 / 3.0, -1.0 / 6.0],
    [-1.0 / 6.0, -1.0 / 3.0, -1.0 / 6.0, 2.0 / 3.0],
];

/// Corner offsets `(dr, dc)` in element-local order.
pub const CORNERS: [(usize, usize); 4] = [(0, 0), (0, 1), (1, 1), (1, 0)];

fn corner_index(dr: usize, dc: usize) -> usize {
    match (dr, dc) {
        (0, 0) => 0,
        (0, 1) => 1,
        (1, 1) => 2,
        _ => 3,
    }
}

/// a(u, v) = ∫ κ ∇u·∇v with Dirichlet rows and columns removed.
pub fn assemble_stiffness(mesh: &PerforatedMesh, region: &Region, kappa: &dyn ScalarField) -> CsrMatrix {
    let n = region.n_unknowns();
    let mut row_ptr = Vec::with_capacity(n + 1);
    row_ptr.push(0);
    let mut col_idx = Vec::with_capacity(9 * n);
    let mut values = Vec::with_capacity(9 * n);

    for &(nr, nc) in region.nodes() {
        let (nr, nc) = (nr as usize, nc as usize);
        let mut stencil = [0.0f64; 9];
        let mut cols = [u32::MAX; 9];
        for cr in nr - 1..=nr {
            for cc in nc - 1..=nc {
                if mesh.is_solid(cr, cc) {
                    continue;
                }
                let k = kappa.value(mesh.cell_midpoint(cr, cc));
                let me = corner_index(nr - cr, nc - cc);
                for (other, &(ar, ac)) in CORNERS.iter().enumerate() {
                    let (mr, mc) = (cr + ar, cc + ac);
                    if let Some(j) = region.local_index(mr, mc) {
                        let s = (mr + 1 - nr) * 3 + (mc + 1 - nc);
                        stencil[s] += k * Q1_STIFFNESS[me][other];
                        cols[s] = j as u32;
                    }
                }
            }
        }
        for s in 0..9 {
            if cols[s] != u32::MAX {
                col_idx.push(cols[s]);
                values.push(stencil[s]);
            }
        }
        row_ptr.push(values.len());
    }
    CsrMatrix::from_raw(n, n, row_ptr, col_idx, values)
}

/// (f, v) with f at cell midpoints lumped as h²/4 onto each corner.
pub fn assemble_load(mesh: &PerforatedMesh, region: &Region, f: &dyn ScalarField) -> Vec<f64> {
    let h = mesh.h();
    let quarter = 0.25 * h * h;
    region
        .nodes()
        .iter()
        .map(|&(nr, nc)| {
            let (nr, nc) = (nr as usize, nc as usize);
            let mut s = 0.0;
            for cr in nr - 1..=nr {
                for cc in nc - 1..=nc {
                    if !mesh.is_solid(cr, cc) {
                        s += f.value(mesh.cell_midpoint(cr, cc)) * quarter;
                    }
                }
            }
            s
        })
        .collect()
}

/// Values of a region field at the four corners of cell `(r, c)`, zero on
/// Dirichlet nodes.
pub fn cell_values(region: &Region, field: &[f64], r: usize, c: usize) -> [f64; 4] {
    let idx = region.cell_corners(r, c);
    let mut v = [0.0; 4];
    for k in 0..4 {
        if let Some(i) = idx[k] {
            v[k] = field[i];
        }
    }
    v
}

/// uᵀ K_ref v for one element.
pub fn element_energy(u: &[f64; 4], v: &[f64; 4]) -> f64 {
    let mut s = 0.0;
    for a in 0..4 {
        let mut t = 0.0;
        for b in 0..4 {
            t += Q1_STIFFNESS[a][b] * v[b];
        }
        s += u[a] * t;
    }
    s
}

/// Linear constraints `C φ = g`, one row per retained (continuum, block)
/// pair, with `C[(j,q), n] = ∫_{K_q^ε} ψ_j v_n`.
#[derive(Debug, Clone)]
pub struct ConstraintBlock {
    pub rows: Vec<RowTag>,
    pub matrix: CsrMatrix,
    /// ∫_{K_q^ε} ψ_j for each row.
    pub measures: Vec<f64>,
}

impl ConstraintBlock {
    pub fn new(rows: Vec<RowTag>, matrix: CsrMatrix, measures: Vec<f64>) -> Self {
        assert_eq!(rows.len(), matrix.nrows());
        assert_eq!(rows.len(), measures.len());
        ConstraintBlock { rows, matrix, measures }
    }

    /// Rows for every block of `region` and both continua; empty pairs are
    /// dropped.
    pub fn continuum_averages(mesh: &PerforatedMesh, region: &Region) -> Self {
        let h = mesh.h();
        let quarter = 0.25 * h * h;
        let mut rows = Vec::new();
        let mut measures = Vec::new();
        let mut triplets = Vec::new();
        for &q in &region.blocks {
            for j in Continuum::ALL {
                if mesh.continuum_cell_count(q, j) == 0 {
                    continue;
                }
                let row = rows.len();
                rows.push(RowTag { continuum: j.label(), block: q });
                measures.push(mesh.continuum_measure(q, j));
                let (rr, cc) = mesh.block_cells(q);
                for r in rr {
                    for c in cc.clone() {
                        if mesh.label(r, c) != j.label() {
                            continue;
                        }
                        for i in region.cell_corners(r, c).into_iter().flatten() {
                            triplets.push((row, i, quarter));
                        }
                    }
                }
            }
        }
        let matrix = CsrMatrix::from_triplets(rows.len(), region.n_unknowns(), &triplets);
        ConstraintBlock { rows, matrix, measures }
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn row_of(&self, tag: RowTag) -> Option<usize> {
        self.rows.iter().position(|&r| r == tag)
    }
}
