use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = GdError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum GdError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("row {row}, column {column}: cannot parse {cell:?} as {expected}")]
    BadCell {
        row: usize,
        column: usize,
        cell: String,
        expected: &'static str,
    },

    #[error("row {row} has {found} fields, expected {expected}")]
    RaggedRow { row: usize, found: usize, expected: usize },

    #[error("table has no data rows")]
    EmptyTable,

    #[error("invalid schema: {0}")]
    Schema(String),

    #[error("preprocessing plan violated: {0}")]
    PlanViolation(String),

    #[error("bit {0} is already part of the base tree")]
    BitAlreadyInTree(usize),

    #[error("bit index {bit} out of range for a {l_c}-bit chunk")]
    BitOutOfRange { bit: usize, l_c: usize },

    #[error("deviation place value {place} is not set in {delta}")]
    PlaceNotSet { delta: u64, place: u64 },

    #[error("subset size {size} outside 1..={n}")]
    SubsetSize { size: usize, n: usize },

    #[error("layout mismatch: {0}")]
    LayoutMismatch(String),

    #[error("corrupt container: {0}")]
    Corrupt(String),

    #[error("bad magic {0:?}, expected \"GDC1\"")]
    BadMagic([u8; 4]),

    #[error("unsupported container version {0}")]
    Version(u16),

    #[error("truncated container: needed {needed} bytes at offset {offset}, {available} available")]
    Truncated {
        offset: usize,
        needed: usize,
        available: usize,
    },

    #[error("checksum mismatch: stored {stored:08x}, computed {computed:08x}")]
    Checksum { stored: u32, computed: u32 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("k = {k} exceeds the {distinct} distinct points available")]
    TooFewPoints { k: usize, distinct: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("silhouette needs at least two clusters, found {0}")]
    SingleCluster(usize),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
