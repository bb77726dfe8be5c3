//! Periodic channel structures, rasterization onto the fine grid, and the
//! rectangular node windows (whole domain or oversampled coarse patches)
//! that the finite-element layer works on.
//!
//! Conventions: fine cells are addressed as `(row, col)` with `row` along
//! x₂ and `col` along x₁; fine nodes as `(nr, nc)` on the same lattice, so
//! cell `(r, c)` has corners `(r, c)`, `(r, c+1)`, `(r+1, c+1)`, `(r+1, c)`.
//! Coarse blocks are numbered row-major: `p = br * n_coarse + bc`.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One of the two continua. `One` is the thick-channel continuum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Continuum {
    One,
    Two,
}

impl Continuum {
    pub const ALL: [Continuum; 2] = [Continuum::One, Continuum::Two];

    /// Zero-based index (0 or 1).
    pub fn index(self) -> usize {
        match self {
            Continuum::One => 0,
            Continuum::Two => 1,
        }
    }

    /// Label value stored in the mesh (1 or 2).
    pub fn label(self) -> u8 {
        self.index() as u8 + 1
    }

    pub fn from_label(label: u8) -> Option<Self> {
        match label {
            1 => Some(Continuum::One),
            2 => Some(Continuum::Two),
            _ => None,
        }
    }
}

impl fmt::Display for Continuum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

pub const SOLID: u8 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    /// Runs along x₁; `offset` counts fine rows.
    Horizontal,
    /// Runs along x₂; `offset` counts fine columns.
    Vertical,
}

/// A straight channel spanning the whole unit cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub axis: Axis,
    pub offset: usize,
    pub width: usize,
    pub continuum: Continuum,
}

impl ChannelSpec {
    fn contains(&self, row: usize, col: usize) -> bool {
        let t = match self.axis {
            Axis::Horizontal => row,
            Axis::Vertical => col,
        };
        t >= self.offset && t < self.offset + self.width
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitCellSpec {
    pub n_fine: usize,
    pub channels: Vec<ChannelSpec>,
}

impl UnitCellSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_fine == 0 {
            return Err(Error::InvalidParameter("n_fine must be positive".into()));
        }
        for ch in &self.channels {
            if ch.width == 0 || ch.offset + ch.width > self.n_fine {
                return Err(Error::InvalidParameter(format!(
                    "channel {ch:?} does not fit in a unit cell of {} fine cells",
                    self.n_fine
                )));
            }
        }
        for j in Continuum::ALL {
            if !self.channels.iter().any(|c| c.continuum == j) {
                return Err(Error::InvalidParameter(format!("continuum {j} has no channel")));
            }
        }
        Ok(())
    }

    /// Label of a unit-cell fine cell. Overlaps go to continuum 1.
    pub fn label(&self, row: usize, col: usize) -> u8 {
        let mut label = SOLID;
        for ch in &self.channels {
            if ch.contains(row, col) {
                match ch.continuum {
                    Continuum::One => return Continuum::One.label(),
                    Continuum::Two => label = Continuum::Two.label(),
                }
            }
        }
        label
    }
}

/// Structure 1: one thick vertical channel crossed by one thin horizontal
/// channel. Structure 2 adds a thin network on the quarter lines.
pub fn build_structure(structure_id: u32, n_fine: usize) -> Result<UnitCellSpec> {
    if !(1..=2).contains(&structure_id) {
        return Err(Error::UnknownStructure(structure_id));
    }
    if n_fine < 20 || n_fine % 4 != 0 {
        return Err(Error::InvalidParameter(format!(
            "n_fine = {n_fine} must be >= 20 and divisible by 4"
        )));
    }
    let thick = 10;
    let thin = 2;
    let mut channels = vec![
        ChannelSpec {
            axis: Axis::Vertical,
            offset: (n_fine - thick) / 2,
            width: thick,
            continuum: Continuum::One,
        },
        ChannelSpec {
            axis: Axis::Horizontal,
            offset: (n_fine - thin) / 2,
            width: thin,
            continuum: Continuum::Two,
        },
    ];
    if structure_id == 2 {
        for axis in [Axis::Vertical, Axis::Horizontal] {
            for offset in [n_fine / 4 - 1, 3 * n_fine / 4 - 1] {
                channels.push(ChannelSpec { axis, offset, width: thin, continuum: Continuum::Two });
            }
        }
    }
    let spec = UnitCellSpec { n_fine, channels };
    spec.validate()?;
    Ok(spec)
}

/// The period ε, always of the form 1/N.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Period {
    inverse: usize,
}

impl Period {
    pub fn from_inverse(inverse: usize) -> Result<Self> {
        if inverse == 0 {
            return Err(Error::InvalidParameter("1/eps must be a positive integer".into()));
        }
        Ok(Period { inverse })
    }

    /// Number of coarse blocks per dimension.
    pub fn inverse(self) -> usize {
        self.inverse
    }

    pub fn eps(self) -> f64 {
        1.0 / self.inverse as f64
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "1/{}", self.inverse)
    }
}

impl FromStr for Period {
    type Err = Error;

    /// Accepts `1/N` or a decimal whose reciprocal is an integer.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(den) = s.strip_prefix("1/") {
            let n = den
                .trim()
                .parse::<usize>()
                .map_err(|_| Error::InvalidParameter(format!("bad period `{s}`")))?;
            return Period::from_inverse(n);
        }
        let v: f64 = s
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("bad period `{s}`")))?;
        if !(v > 0.0) {
            return Err(Error::InvalidParameter(format!("bad period `{s}`")));
        }
        let inv = (1.0 / v).round();
        if (inv * v - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!("1/eps is not an integer for `{s}`")));
        }
        Period::from_inverse(inv as usize)
    }
}

const NODE_ACTIVE: u8 = 1;
const NODE_DIRICHLET: u8 = 2;

/// Periodically tiled fine grid over [0,1]².
#[derive(Debug, Clone)]
pub struct PerforatedMesh {
    period: Period,
    n_fine: usize,
    labels: Vec<u8>,
    node_flags: Vec<u8>,
    block_counts: Vec<[usize; 2]>,
}

/// Tile `spec` over [0,1]² with period `period`.
pub fn rasterize(spec: &UnitCellSpec, period: Period) -> Result<PerforatedMesh> {
    spec.validate()?;
    let n_fine = spec.n_fine;
    let nc = period.inverse();
    let n = nc * n_fine;

    let cell: Vec<u8> = (0..n_fine * n_fine)
        .map(|k| spec.label(k / n_fine, k % n_fine))
        .collect();
    let mut labels = vec![SOLID; n * n];
    for r in 0..n {
        let src = &cell[(r % n_fine) * n_fine..(r % n_fine + 1) * n_fine];
        let row = &mut labels[r * n..(r + 1) * n];
        for chunk in row.chunks_mut(n_fine) {
            chunk.copy_from_slice(src);
        }
    }

    let mesh = PerforatedMesh::from_labels(period, n_fine, labels)?;
    Ok(mesh)
}

impl PerforatedMesh {
    /// Build a mesh from explicit cell labels (row-major, `n × n` with
    /// `n = n_coarse * n_fine`). Labels need not be periodic.
    pub fn from_labels(period: Period, n_fine: usize, labels: Vec<u8>) -> Result<Self> {
        let nc = period.inverse();
        let n = nc * n_fine;
        if labels.len() != n * n {
            return Err(Error::InvalidParameter(format!(
                "expected {} labels, got {}",
                n * n,
                labels.len()
            )));
        }
        if labels.iter().any(|&l| l > 2) {
            return Err(Error::InvalidParameter("labels must be 0, 1 or 2".into()));
        }

        let components = count_components(&labels, n);
        if components != 1 {
            return Err(Error::Disconnected { components });
        }

        let nn = n + 1;
        let mut node_flags = vec![0u8; nn * nn];
        for r in 0..n {
            for c in 0..n {
                let solid = labels[r * n + c] == SOLID;
                for (dr, dc) in [(0, 0), (0, 1), (1, 1), (1, 0)] {
                    let f = &mut node_flags[(r + dr) * nn + c + dc];
                    if solid {
                        *f |= NODE_DIRICHLET;
                    } else {
                        *f |= NODE_ACTIVE;
                    }
                }
            }
        }
        for (k, f) in node_flags.iter_mut().enumerate() {
            let (nr, ncol) = (k / nn, k % nn);
            if nr == 0 || ncol == 0 || nr == n || ncol == n {
                *f |= NODE_DIRICHLET;
            }
            if *f & NODE_ACTIVE == 0 {
                *f = 0;
            }
        }

        let mut block_counts = vec![[0usize; 2]; nc * nc];
        for r in 0..n {
            for c in 0..n {
                if let Some(j) = Continuum::from_label(labels[r * n + c]) {
                    block_counts[(r / n_fine) * nc + c / n_fine][j.index()] += 1;
                }
            }
        }

        Ok(PerforatedMesh { period, n_fine, labels, node_flags, block_counts })
    }

    pub fn period(&self) -> Period {
        self.period
    }

    pub fn eps(&self) -> f64 {
        self.period.eps()
    }

    pub fn n_coarse(&self) -> usize {
        self.period.inverse()
    }

    pub fn n_fine(&self) -> usize {
        self.n_fine
    }

    pub fn n_blocks(&self) -> usize {
        self.n_coarse() * self.n_coarse()
    }

    /// Fine cells per dimension over the whole domain.
    pub fn cells_per_side(&self) -> usize {
        self.n_coarse() * self.n_fine
    }

    /// Fine cell size.
    pub fn h(&self) -> f64 {
        1.0 / self.cells_per_side() as f64
    }

    pub fn label(&self, row: usize, col: usize) -> u8 {
        self.labels[row * self.cells_per_side() + col]
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn is_solid(&self, row: usize, col: usize) -> bool {
        self.label(row, col) == SOLID
    }

    fn node_flag(&self, nr: usize, nc: usize) -> u8 {
        self.node_flags[nr * (self.cells_per_side() + 1) + nc]
    }

    pub fn node_active(&self, nr: usize, nc: usize) -> bool {
        self.node_flag(nr, nc) & NODE_ACTIVE != 0
    }

    pub fn node_dirichlet(&self, nr: usize, nc: usize) -> bool {
        self.node_flag(nr, nc) & NODE_DIRICHLET != 0
    }

    /// Active and not Dirichlet.
    pub fn node_free(&self, nr: usize, nc: usize) -> bool {
        self.node_flag(nr, nc) == NODE_ACTIVE
    }

    pub fn coarse_of(&self, row: usize, col: usize) -> usize {
        (row / self.n_fine) * self.n_coarse() + col / self.n_fine
    }

    /// `(block row, block col)` of coarse block `p`.
    pub fn block_coords(&self, p: usize) -> (usize, usize) {
        (p / self.n_coarse(), p % self.n_coarse())
    }

    /// Center of coarse block `p` as `[x₁, x₂]`.
    pub fn block_center(&self, p: usize) -> [f64; 2] {
        let (br, bc) = self.block_coords(p);
        let eps = self.eps();
        [(bc as f64 + 0.5) * eps, (br as f64 + 0.5) * eps]
    }

    /// Midpoint of fine cell `(row, col)` as `[x₁, x₂]`.
    pub fn cell_midpoint(&self, row: usize, col: usize) -> [f64; 2] {
        let h = self.h();
        [(col as f64 + 0.5) * h, (row as f64 + 0.5) * h]
    }

    /// Fine-cell ranges `(rows, cols)` of coarse block `p`.
    pub fn block_cells(&self, p: usize) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
        let (br, bc) = self.block_coords(p);
        let n = self.n_fine;
        (br * n..(br + 1) * n, bc * n..(bc + 1) * n)
    }

    pub fn continuum_cell_count(&self, q: usize, j: Continuum) -> usize {
        self.block_counts[q][j.index()]
    }

    /// |K_q^ε ∩ Ω_j|.
    pub fn continuum_measure(&self, q: usize, j: Continuum) -> f64 {
        let h = self.h();
        self.continuum_cell_count(q, j) as f64 * h * h
    }

    /// Non-solid area of block `q`.
    pub fn open_measure(&self, q: usize) -> f64 {
        Continuum::ALL.iter().map(|&j| self.continuum_measure(q, j)).sum()
    }

    /// Centroid coordinate `c_mj` of continuum `j` in block `p` along
    /// direction `m` (0 for x₁, 1 for x₂), by midpoint quadrature.
    pub fn centered_offset(&self, p: usize, j: Continuum, m: usize) -> Result<f64> {
        let count = self.continuum_cell_count(p, j);
        if count == 0 {
            return Err(Error::DegenerateContinuum { block: p, continuum: j.label() });
        }
        let (rows, cols) = self.block_cells(p);
        let mut sum = 0.0;
        for r in rows {
            for c in cols.clone() {
                if self.label(r, c) == j.label() {
                    sum += self.cell_midpoint(r, c)[m];
                }
            }
        }
        Ok(sum / count as f64)
    }

    /// Midpoint-rule value of ∫_{K_q^ε} (x_m − c) ψ_j.
    pub fn centered_moment(&self, q: usize, j: Continuum, m: usize, c: f64) -> f64 {
        let (rows, cols) = self.block_cells(q);
        let h = self.h();
        let mut sum = 0.0;
        for r in rows {
            for col in cols.clone() {
                if self.label(r, col) == j.label() {
                    sum += self.cell_midpoint(r, col)[m] - c;
                }
            }
        }
        sum * h * h
    }
}

/// Connected components of non-solid cells under edge adjacency.
fn count_components(labels: &[u8], n: usize) -> usize {
    let mut seen = vec![false; labels.len()];
    let mut components = 0;
    let mut queue = VecDeque::new();
    for start in 0..labels.len() {
        if labels[start] == SOLID || seen[start] {
            continue;
        }
        components += 1;
        seen[start] = true;
        queue.push_back(start);
        while let Some(k) = queue.pop_front() {
            let (r, c) = (k / n, k % n);
            let mut visit = |rr: usize, cc: usize| {
                let idx = rr * n + cc;
                if labels[idx] != SOLID && !seen[idx] {
                    seen[idx] = true;
                    queue.push_back(idx);
                }
            };
            if r > 0 {
                visit(r - 1, c);
            }
            if r + 1 < n {
                visit(r + 1, c);
            }
            if c > 0 {
                visit(r, c - 1);
            }
            if c + 1 < n {
                visit(r, c + 1);
            }
        }
    }
    components
}

/// A rectangular window of whole coarse blocks. Nodes strictly inside the
/// window that are free in the mesh are the unknowns; everything on the
/// window's outer boundary is held at zero.
#[derive(Debug, Clone)]
pub struct Region {
    /// Central block for oversampled regions.
    pub center: Option<usize>,
    pub layers: usize,
    /// Coarse blocks covered, ascending.
    pub blocks: Vec<usize>,
    /// Cell window `[row0, row1) × [col0, col1)`.
    pub rows: std::ops::Range<usize>,
    pub cols: std::ops::Range<usize>,
    /// Node coordinates `(nr, nc)` of each unknown, row-major.
    nodes: Vec<(u32, u32)>,
    /// Window node → local unknown index (`u32::MAX` when not free).
    local: Vec<u32>,
}

impl Region {
    /// The whole domain.
    pub fn whole(mesh: &PerforatedMesh) -> Self {
        let nc = mesh.n_coarse();
        Self::from_blocks(mesh, None, 0, 0..nc, 0..nc)
    }

    /// K_{p,l}: block `p` extended by `layers` coarse blocks, clipped to Ω.
    pub fn oversample(mesh: &PerforatedMesh, p: usize, layers: usize) -> Self {
        let nc = mesh.n_coarse();
        let (br, bc) = mesh.block_coords(p);
        let r0 = br.saturating_sub(layers);
        let r1 = (br + layers + 1).min(nc);
        let c0 = bc.saturating_sub(layers);
        let c1 = (bc + layers + 1).min(nc);
        Self::from_blocks(mesh, Some(p), layers, r0..r1, c0..c1)
    }

    fn from_blocks(
        mesh: &PerforatedMesh,
        center: Option<usize>,
        layers: usize,
        brows: std::ops::Range<usize>,
        bcols: std::ops::Range<usize>,
    ) -> Self {
        let nf = mesh.n_fine();
        let nc = mesh.n_coarse();
        let mut blocks = Vec::new();
        for br in brows.clone() {
            for bc in bcols.clone() {
                blocks.push(br * nc + bc);
            }
        }
        let rows = brows.start * nf..brows.end * nf;
        let cols = bcols.start * nf..bcols.end * nf;
        let width = cols.len() + 1;
        let height = rows.len() + 1;
        let mut local = vec![u32::MAX; width * height];
        let mut nodes = Vec::new();
        for nr in rows.start + 1..rows.end {
            for ncol in cols.start + 1..cols.end {
                if mesh.node_free(nr, ncol) {
                    local[(nr - rows.start) * width + ncol - cols.start] = nodes.len() as u32;
                    nodes.push((nr as u32, ncol as u32));
                }
            }
        }
        Region { center, layers, blocks, rows, cols, nodes, local }
    }

    pub fn n_unknowns(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[(u32, u32)] {
        &self.nodes
    }

    /// Local unknown index of global node `(nr, nc)`, if it is one.
    pub fn local_index(&self, nr: usize, nc: usize) -> Option<usize> {
        if nr < self.rows.start || nr > self.rows.end || nc < self.cols.start || nc > self.cols.end {
            return None;
        }
        let width = self.cols.len() + 1;
        let k = self.local[(nr - self.rows.start) * width + nc - self.cols.start];
        (k != u32::MAX).then_some(k as usize)
    }

    /// Local indices of the four corners of cell `(r, c)` in the order
    /// bottom-left, bottom-right, top-right, top-left.
    pub fn cell_corners(&self, r: usize, c: usize) -> [Option<usize>; 4] {
        [
            self.local_index(r, c),
            self.local_index(r, c + 1),
            self.local_index(r + 1, c + 1),
            self.local_index(r + 1, c),
        ]
    }

    pub fn contains_block(&self, q: usize) -> bool {
        self.blocks.binary_search(&q).is_ok()
    }
}
