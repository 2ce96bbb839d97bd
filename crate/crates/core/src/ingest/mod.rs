//! Tabular input, lossless preprocessing, and the chunk bit layout.

mod matrix;
mod plan;
mod table;

pub use matrix::{constant_bits, sample_subset, subset_rows, ChunkLayout, IntegerMatrix};
pub use plan::{forward_transform, infer_preprocessing, inverse_transform, ColumnKind, ColumnSpec, PreprocessPlan};
pub use table::{
    ingest_csv, parse_schema, read_csv, Column, ColumnData, CsvOptions, HeaderMode, Ingested, SourceType, Table,
};
