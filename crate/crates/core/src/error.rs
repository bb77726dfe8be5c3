use std::fmt;

use thiserror::Error;

/// A (continuum, coarse block) pair identifying one constraint row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RowTag {
    pub continuum: u8,
    pub block: usize,
}

impl fmt::Display for RowTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(j={}, q={})", self.continuum, self.block)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown structure id {0} (expected 1 or 2)")]
    UnknownStructure(u32),

    #[error("active region is disconnected ({components} components)")]
    Disconnected { components: usize },

    #[error("continuum {continuum} has zero measure in block {block}")]
    DegenerateContinuum { block: usize, continuum: u8 },

    #[error("matrix is not positive definite (pivot {pivot} at column {column})")]
    NotPositiveDefinite { column: usize, pivot: f64 },

    #[error("linear solve did not reach tolerance: relative residual {residual:e} > {tolerance:e}")]
    Residual { residual: f64, tolerance: f64 },

    #[error("constraint rows are linearly dependent: {}", fmt_rows(.rows))]
    RankDeficient { rows: Vec<RowTag> },

    #[error("macroscopic system is singular at unknown {index}")]
    SingularMacro { index: usize },

    #[error("cell problem failed for block {block}, l={layers}, field {field}: {source}")]
    CellProblem {
        block: usize,
        layers: usize,
        field: String,
        #[source]
        source: Box<Error>,
    },

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("reference average of continuum {continuum} is identically zero")]
    ZeroReference { continuum: u8 },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn fmt_rows(rows: &[RowTag]) -> String {
    rows.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(", ")
}

impl Error {
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage { stage, source: Box::new(self) }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
