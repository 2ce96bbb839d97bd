//! Raw numeric tables and CSV input/output.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{GdError, Result};
use crate::scalar::SourceFloat;

/// Per-column source type, as detected or forced with `--schema`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceType {
    Int32,
    Int64,
    Float32,
    Float64,
}

impl SourceType {
    pub fn bits(self) -> u8 {
        match self {
            SourceType::Int32 | SourceType::Float32 => 32,
            SourceType::Int64 | SourceType::Float64 => 64,
        }
    }

    pub fn is_float(self) -> bool {
        matches!(self, SourceType::Float32 | SourceType::Float64)
    }

    fn name(self) -> &'static str {
        match self {
            SourceType::Int32 => "int32",
            SourceType::Int64 => "int64",
            SourceType::Float32 => "float32",
            SourceType::Float64 => "float64",
        }
    }
}

impl fmt::Display for SourceType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SourceType {
    type Err = GdError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "int32" | "i32" => Ok(SourceType::Int32),
            "int64" | "i64" => Ok(SourceType::Int64),
            "float32" | "f32" => Ok(SourceType::Float32),
            "float64" | "f64" => Ok(SourceType::Float64),
            other => Err(GdError::Schema(format!("unknown column type {other:?}"))),
        }
    }
}

/// Parses a comma-separated schema such as `int32,float64,float32`.
pub fn parse_schema(text: &str) -> Result<Vec<SourceType>> {
    text.split(',').map(str::parse).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub enum ColumnData {
    /// Integers whose range fits in `bits` bits after offsetting.
    Int {
        bits: u8,
        values: Vec<i64>,
    },
    F32(Vec<f32>),
    F64(Vec<f64>),
}

impl ColumnData {
    pub fn len(&self) -> usize {
        match self {
            ColumnData::Int { values, .. } => values.len(),
            ColumnData::F32(v) => v.len(),
            ColumnData::F64(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn source_bits(&self) -> u8 {
        match self {
            ColumnData::Int { bits, .. } => *bits,
            ColumnData::F32(_) => 32,
            ColumnData::F64(_) => 64,
        }
    }

    /// Cell value widened to `f64` (exact for floats and for |ints| ≤ 2^53).
    pub fn get_f64(&self, row: usize) -> f64 {
        match self {
            ColumnData::Int { values, .. } => values[row] as f64,
            ColumnData::F32(v) => f64::from(v[row]),
            ColumnData::F64(v) => v[row],
        }
    }

    fn select(&self, rows: &[usize]) -> ColumnData {
        match self {
            ColumnData::Int { bits, values } => ColumnData::Int {
                bits: *bits,
                values: rows.iter().map(|&r| values[r]).collect(),
            },
            ColumnData::F32(v) => ColumnData::F32(rows.iter().map(|&r| v[r]).collect()),
            ColumnData::F64(v) => ColumnData::F64(rows.iter().map(|&r| v[r]).collect()),
        }
    }

    fn format_cell(&self, row: usize) -> String {
        match self {
            ColumnData::Int { values, .. } => values[row].to_string(),
            ColumnData::F32(v) => format_float(v[row]),
            ColumnData::F64(v) => format_float(v[row]),
        }
    }

    fn cell_bits_eq(&self, other: &ColumnData, row: usize) -> bool {
        match (self, other) {
            (ColumnData::Int { values: a, .. }, ColumnData::Int { values: b, .. }) => a[row] == b[row],
            (ColumnData::F32(a), ColumnData::F32(b)) => a[row].to_bits() == b[row].to_bits(),
            (ColumnData::F64(a), ColumnData::F64(b)) => a[row].to_bits() == b[row].to_bits(),
            _ => false,
        }
    }
}

/// Shortest round-trip text, always carrying a decimal point for finite
/// values so the column is re-read as floating point.
fn format_float<F: SourceFloat>(v: F) -> String {
    let mut text = v.to_string();
    if v.is_finite() && !text.contains('.') {
        text.push_str(".0");
    }
    text
}

#[derive(Clone, Debug, PartialEq)]
pub struct Column {
    pub name: Option<String>,
    pub data: ColumnData,
}

/// Column-oriented numeric table with a fixed row count.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    columns: Vec<Column>,
    n_rows: usize,
}

impl Table {
    pub fn new(columns: Vec<Column>) -> Result<Self> {
        let n_rows = columns.first().map_or(0, |c| c.data.len());
        if let Some(bad) = columns.iter().find(|c| c.data.len() != n_rows) {
            return Err(GdError::LengthMismatch(bad.data.len(), n_rows));
        }
        Ok(Table { columns, n_rows })
    }

    /// Unnamed table from column data.
    pub fn from_data(data: Vec<ColumnData>) -> Result<Self> {
        Table::new(data.into_iter().map(|data| Column { name: None, data }).collect())
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, i: usize) -> &Column {
        &self.columns[i]
    }

    /// Keeps the first `d` columns.
    pub fn truncate_columns(&self, d: usize) -> Table {
        Table {
            columns: self.columns[..d.min(self.columns.len())].to_vec(),
            n_rows: self.n_rows,
        }
    }

    pub fn select_rows(&self, rows: &[usize]) -> Table {
        Table {
            columns: self
                .columns
                .iter()
                .map(|c| Column {
                    name: c.name.clone(),
                    data: c.data.select(rows),
                })
                .collect(),
            n_rows: rows.len(),
        }
    }

    /// Copies names from `other` where both tables have the column.
    pub fn with_names_from(mut self, other: &Table) -> Table {
        for (dst, src) in self.columns.iter_mut().zip(&other.columns) {
            dst.name = src.name.clone();
        }
        self
    }

    /// First cell `(row, column)` whose bit pattern differs, or `None` when the
    /// tables are bit-identical.
    pub fn first_mismatch(&self, other: &Table) -> Option<(usize, usize)> {
        if self.n_cols() != other.n_cols() || self.n_rows != other.n_rows {
            return Some((0, 0));
        }
        for (c, (a, b)) in self.columns.iter().zip(&other.columns).enumerate() {
            for r in 0..self.n_rows {
                if !a.data.cell_bits_eq(&b.data, r) {
                    return Some((r, c));
                }
            }
        }
        None
    }

    pub fn bit_eq(&self, other: &Table) -> bool {
        self.first_mismatch(other).is_none()
    }

    /// Uncompressed size in bits at native column widths (`n·l_c`).
    pub fn native_bits(&self) -> u64 {
        self.n_rows as u64
            * self
                .columns
                .iter()
                .map(|c| u64::from(c.data.source_bits()))
                .sum::<u64>()
    }

    pub fn write_csv<W: Write>(&self, sink: W, header: bool) -> Result<()> {
        let mut writer = csv::WriterBuilder::new().from_writer(sink);
        if header {
            let names: Vec<String> = self
                .columns
                .iter()
                .enumerate()
                .map(|(i, c)| c.name.clone().unwrap_or_else(|| format!("c{i}")))
                .collect();
            writer.write_record(&names)?;
        }
        let mut record = Vec::with_capacity(self.n_cols());
        for r in 0..self.n_rows {
            record.clear();
            record.extend(self.columns.iter().map(|c| c.data.format_cell(r)));
            writer.write_record(&record)?;
        }
        writer.flush()?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum HeaderMode {
    /// The first row is a header if any of its cells is not numeric.
    #[default]
    Auto,
    Present,
    Absent,
}

#[derive(Clone, Debug, Default)]
pub struct CsvOptions {
    pub skip_bad_rows: bool,
    pub header: HeaderMode,
    pub schema: Option<Vec<SourceType>>,
}

#[derive(Clone, Debug)]
pub struct Ingested {
    pub table: Table,
    /// Column types, detected or taken from the schema.
    pub types: Vec<SourceType>,
    /// 1-based line numbers of rows dropped under `skip_bad_rows`.
    pub skipped_rows: Vec<usize>,
}

pub fn ingest_csv(path: impl AsRef<Path>, options: &CsvOptions) -> Result<Ingested> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| GdError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(std::io::BufReader::new(file), options)
}

fn is_numeric(text: &str) -> bool {
    !text.is_empty() && (text.parse::<i64>().is_ok() || text.parse::<f64>().is_ok())
}

/// True when the shortest `f32` rendering of the cell denotes the same number.
fn fits_f32(text: &str) -> bool {
    let (Ok(wide), Ok(narrow)) = (text.parse::<f64>(), text.parse::<f32>()) else {
        return false;
    };
    if wide.is_nan() {
        return true;
    }
    narrow
        .to_string()
        .parse::<f64>()
        .is_ok_and(|v| v == wide && v.is_sign_negative() == wide.is_sign_negative())
}

fn cell_matches(text: &str, ty: SourceType) -> bool {
    match ty {
        SourceType::Int32 => text.parse::<i32>().is_ok(),
        SourceType::Int64 => text.parse::<i64>().is_ok(),
        SourceType::Float32 => text.parse::<f32>().is_ok(),
        SourceType::Float64 => text.parse::<f64>().is_ok(),
    }
}

pub fn read_csv<R: Read>(source: R, options: &CsvOptions) -> Result<Ingested> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);

    let records = reader.records();
    let mut names: Option<Vec<String>> = None;
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut skipped = Vec::new();
    let mut expected: Option<usize> = options.schema.as_ref().map(Vec::len);
    let mut line = 0usize;

    for record in records {
        let record = record?;
        line += 1;
        let cells: Vec<String> = record.iter().map(str::to_owned).collect();
        if cells.len() == 1 && cells[0].is_empty() {
            continue;
        }
        if line == 1 {
            let numeric = cells.iter().all(|c| is_numeric(c));
            let is_header = match options.header {
                HeaderMode::Present => true,
                HeaderMode::Absent => false,
                HeaderMode::Auto => !numeric,
            };
            if is_header {
                if expected.is_none() {
                    expected = Some(cells.len());
                }
                names = Some(cells);
                continue;
            }
        }
        let width = *expected.get_or_insert(cells.len());
        let problem = if cells.len() != width {
            Some(GdError::RaggedRow {
                row: line,
                found: cells.len(),
                expected: width,
            })
        } else {
            cells.iter().enumerate().find_map(|(c, text)| {
                let ok = match &options.schema {
                    Some(schema) => cell_matches(text, schema[c]),
                    None => is_numeric(text),
                };
                (!ok).then(|| GdError::BadCell {
                    row: line,
                    column: c,
                    cell: text.clone(),
                    expected: options.schema.as_ref().map_or("a number", |s| match s[c] {
                        SourceType::Int32 => "int32",
                        SourceType::Int64 => "int64",
                        SourceType::Float32 => "float32",
                        SourceType::Float64 => "float64",
                    }),
                })
            })
        };
        match problem {
            Some(_) if options.skip_bad_rows => skipped.push(line),
            Some(err) => return Err(err),
            None => rows.push(cells),
        }
    }

    if rows.is_empty() {
        return Err(GdError::EmptyTable);
    }
    if rows.len() > u32::MAX as usize {
        return Err(GdError::InvalidParameter("more than 2^32 - 1 rows".into()));
    }
    let d = rows[0].len();
    if let Some(names) = &names {
        if names.len() != d {
            return Err(GdError::RaggedRow {
                row: 1,
                found: names.len(),
                expected: d,
            });
        }
    }

    let types: Vec<SourceType> = match &options.schema {
        Some(schema) => schema.clone(),
        None => (0..d)
            .map(|c| detect_type(rows.iter().map(|r| r[c].as_str())))
            .collect(),
    };

    let columns = (0..d)
        .map(|c| {
            let cells = rows.iter().map(|r| r[c].as_str());
            let data = match types[c] {
                SourceType::Int32 => ColumnData::Int {
                    bits: 32,
                    values: cells.map(|t| t.parse::<i32>().map(i64::from).unwrap()).collect(),
                },
                SourceType::Int64 => ColumnData::Int {
                    bits: 64,
                    values: cells.map(|t| t.parse::<i64>().unwrap()).collect(),
                },
                SourceType::Float32 => ColumnData::F32(cells.map(|t| t.parse::<f32>().unwrap()).collect()),
                SourceType::Float64 => ColumnData::F64(cells.map(|t| t.parse::<f64>().unwrap()).collect()),
            };
            Column {
                name: names.as_ref().map(|n| n[c].clone()),
                data,
            }
        })
        .collect();

    Ok(Ingested {
        table: Table::new(columns)?,
        types,
        skipped_rows: skipped,
    })
}

fn detect_type<'a>(cells: impl Iterator<Item = &'a str> + Clone) -> SourceType {
    let ints: Option<Vec<i64>> = cells.clone().map(|t| t.parse::<i64>().ok()).collect();
    if let Some(ints) = ints {
        return if ints.iter().all(|&v| i32::try_from(v).is_ok()) {
            SourceType::Int32
        } else {
            SourceType::Int64
        };
    }
    let mut cells = cells;
    if cells.all(fits_f32) {
        SourceType::Float32
    } else {
        SourceType::Float64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(text: &str, options: &CsvOptions) -> Result<Ingested> {
        read_csv(text.as_bytes(), options)
    }

    #[test]
    fn decimal_column_detected_single_precision() {
        let got = read("0.39\n37.83\n98.92\n", &CsvOptions::default()).unwrap();
        assert_eq!(got.types, vec![SourceType::Float32]);
        assert_eq!(got.table.column(0).data, ColumnData::F32(vec![0.39, 37.83, 98.92]));
    }

    #[test]
    fn integer_column_detected() {
        let got = read("39\n3783\n9892\n", &CsvOptions::default()).unwrap();
        assert_eq!(got.types, vec![SourceType::Int32]);
        let big = read("1\n9999999999\n", &CsvOptions::default()).unwrap();
        assert_eq!(big.types, vec![SourceType::Int64]);
    }

    #[test]
    fn long_decimals_need_double_precision() {
        let got = read("0.123456789012\n1.5\n", &CsvOptions::default()).unwrap();
        assert_eq!(got.types, vec![SourceType::Float64]);
    }

    #[test]
    fn header_detected_and_bad_rows_skipped() {
        let text = "x,y\n1,2\na,1\n3,4\n";
        assert!(matches!(
            read(text, &CsvOptions::default()),
            Err(GdError::BadCell { row: 3, column: 0, .. })
        ));
        let options = CsvOptions {
            skip_bad_rows: true,
            ..Default::default()
        };
        let got = read(text, &options).unwrap();
        assert_eq!(got.table.n_rows(), 2);
        assert_eq!(got.skipped_rows, vec![3]);
        assert_eq!(got.table.column(1).name.as_deref(), Some("y"));
    }

    #[test]
    fn missing_and_ragged_rows() {
        let options = CsvOptions {
            skip_bad_rows: true,
            ..Default::default()
        };
        let got = read("1,2\n3,\n5\n7,8\n", &options).unwrap();
        assert_eq!(got.table.n_rows(), 2);
        assert!(read("1,2\n3\n", &CsvOptions::default()).is_err());
    }

    #[test]
    fn empty_table_rejected() {
        assert!(matches!(read("", &CsvOptions::default()), Err(GdError::EmptyTable)));
        assert!(matches!(
            read("a,b\n", &CsvOptions::default()),
            Err(GdError::EmptyTable)
        ));
    }

    #[test]
    fn schema_overrides_detection() {
        let options = CsvOptions {
            schema: Some(parse_schema("float64,int64").unwrap()),
            ..Default::default()
        };
        let got = read("1,2\n3,4\n", &options).unwrap();
        assert_eq!(got.types, vec![SourceType::Float64, SourceType::Int64]);
        let strict = CsvOptions {
            schema: Some(vec![SourceType::Int32]),
            ..Default::default()
        };
        assert!(read("1.5\n", &strict).is_err());
        assert!(parse_schema("int16").is_err());
    }

    #[test]
    fn csv_output_rereads_identically() {
        let table = Table::from_data(vec![
            ColumnData::F32(vec![0.39, 3.0, -1.25e-3]),
            ColumnData::F64(vec![1e30, 0.1, 0.123456789012]),
            ColumnData::Int {
                bits: 32,
                values: vec![-5, 0, 7],
            },
        ])
        .unwrap();
        let mut out = Vec::new();
        table.write_csv(&mut out, false).unwrap();
        let back = read(std::str::from_utf8(&out).unwrap(), &CsvOptions::default()).unwrap();
        assert!(back.table.bit_eq(&table), "{}", String::from_utf8_lossy(&out));
    }
}
