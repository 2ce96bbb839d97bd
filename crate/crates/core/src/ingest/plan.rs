//! Lossless per-column transform into non-negative integers.
//!
//! Decimal columns are scaled by `10^p` (with `p` the largest number of
//! decimal places in the column) and shifted by the column minimum. Columns
//! that do not survive an exact round trip at that scale keep their raw
//! IEEE-754 bit patterns instead.

use serde::{Deserialize, Serialize};

use super::matrix::IntegerMatrix;
use super::table::{Column, ColumnData, Table};
use crate::error::{GdError, Result};
use crate::scalar::SourceFloat;

/// Largest power of ten that is exact in `f64`.
const MAX_SCALE_EXPONENT: u32 = 22;
/// Scaled magnitudes above this are not exactly representable as `f64`.
const MAX_EXACT_INT: f64 = 9_007_199_254_740_992.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ColumnKind {
    Integer,
    DecimalScaled,
    RawFloatBits,
}

impl ColumnKind {
    pub fn code(self) -> u8 {
        match self {
            ColumnKind::Integer => 0,
            ColumnKind::DecimalScaled => 1,
            ColumnKind::RawFloatBits => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(ColumnKind::Integer),
            1 => Some(ColumnKind::DecimalScaled),
            2 => Some(ColumnKind::RawFloatBits),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub index: usize,
    pub kind: ColumnKind,
    /// Source width in bits; also the transformed width `w_i`.
    pub precision: u8,
    pub scale_exponent: u8,
    /// Subtracted from every scaled integer (the column minimum).
    pub offset: i64,
}

impl ColumnSpec {
    pub fn width(&self) -> u8 {
        self.precision
    }

    fn max_value(&self) -> u64 {
        if self.precision >= 64 {
            u64::MAX
        } else {
            (1u64 << self.precision) - 1
        }
    }

    fn encode_scaled(&self, scaled: i64) -> Result<u64> {
        let shifted = scaled.wrapping_sub(self.offset) as u64;
        if scaled < self.offset || shifted > self.max_value() {
            return Err(GdError::PlanViolation(format!(
                "column {}: scaled value {scaled} outside [{}, {} + 2^{})",
                self.index, self.offset, self.offset, self.precision
            )));
        }
        Ok(shifted)
    }

    fn unshift(&self, t: u64) -> Result<i64> {
        if t > self.max_value() {
            return Err(GdError::PlanViolation(format!(
                "column {}: stored value {t} exceeds {} bits",
                self.index, self.precision
            )));
        }
        Ok((t.wrapping_add(self.offset as u64)) as i64)
    }

    /// Real value of a transformed integer, exact for values produced by
    /// [`forward_transform`].
    pub fn decode_real(&self, t: u64) -> f64 {
        match self.kind {
            ColumnKind::Integer => (t.wrapping_add(self.offset as u64) as i64) as f64,
            ColumnKind::DecimalScaled => {
                let scaled = t.wrapping_add(self.offset as u64) as i64;
                if self.precision == 32 {
                    f64::from(decode_scaled::<f32>(scaled, self.scale_exponent))
                } else {
                    decode_scaled::<f64>(scaled, self.scale_exponent)
                }
            }
            ColumnKind::RawFloatBits => {
                if self.precision == 32 {
                    f64::from(f32::from_raw(t))
                } else {
                    f64::from_raw(t)
                }
            }
        }
    }

    /// Real value of a fractional position in the transformed domain, used
    /// for cell midpoints. Raw-bit columns round to the nearest pattern.
    pub fn decode_real_at(&self, t: f64) -> f64 {
        match self.kind {
            ColumnKind::Integer => t + self.offset as f64,
            ColumnKind::DecimalScaled => (t + self.offset as f64) / 10f64.powi(i32::from(self.scale_exponent)),
            ColumnKind::RawFloatBits => self.decode_real(t.round() as u64),
        }
    }
}

/// Ordered column transforms for one table.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreprocessPlan {
    pub columns: Vec<ColumnSpec>,
}

impl PreprocessPlan {
    pub fn widths(&self) -> Vec<u8> {
        self.columns.iter().map(ColumnSpec::width).collect()
    }

    pub fn d(&self) -> usize {
        self.columns.len()
    }

    pub fn validate(&self) -> Result<()> {
        for (i, spec) in self.columns.iter().enumerate() {
            let ok = spec.index == i
                && match spec.kind {
                    ColumnKind::Integer => (1..=64).contains(&spec.precision) && spec.scale_exponent == 0,
                    ColumnKind::DecimalScaled => {
                        matches!(spec.precision, 32 | 64) && u32::from(spec.scale_exponent) <= MAX_SCALE_EXPONENT
                    }
                    ColumnKind::RawFloatBits => {
                        matches!(spec.precision, 32 | 64) && spec.scale_exponent == 0 && spec.offset == 0
                    }
                };
            if !ok {
                return Err(GdError::PlanViolation(format!("invalid column spec {spec:?}")));
            }
        }
        Ok(())
    }
}

fn pow10(p: u8) -> f64 {
    10f64.powi(i32::from(p))
}

/// The single decode path for scaled decimals; the encoder verifies every
/// value against it.
fn decode_scaled<F: SourceFloat>(scaled: i64, p: u8) -> F {
    F::from_f64_rounded(scaled as f64 / pow10(p))
}

/// Scaled integers for a float column, or `None` if some value does not
/// survive the round trip at scale `10^p`.
fn scale_float_column<F: SourceFloat>(values: &[F]) -> Option<(u8, Vec<i64>)> {
    let p = values.iter().map(|v| v.decimal_places()).max().unwrap_or(0);
    if p > MAX_SCALE_EXPONENT {
        return None;
    }
    let p = p as u8;
    let factor = pow10(p);
    let mut scaled = Vec::with_capacity(values.len());
    for &v in values {
        let s = (v.to_f64_lossless() * factor).round();
        if !s.is_finite() || s.abs() > MAX_EXACT_INT {
            return None;
        }
        let s = s as i64;
        if decode_scaled::<F>(s, p).to_raw() != v.to_raw() {
            return None;
        }
        scaled.push(s);
    }
    Some((p, scaled))
}

fn range_fits(min: i64, max: i64, bits: u8) -> bool {
    let span = i128::from(max) - i128::from(min);
    bits >= 64 || span < (1i128 << bits)
}

fn float_spec<F: SourceFloat>(index: usize, values: &[F]) -> ColumnSpec {
    let raw = ColumnSpec {
        index,
        kind: ColumnKind::RawFloatBits,
        precision: F::BITS,
        scale_exponent: 0,
        offset: 0,
    };
    let Some((p, scaled)) = scale_float_column(values) else {
        return raw;
    };
    let min = *scaled.iter().min().expect("non-empty column");
    let max = *scaled.iter().max().expect("non-empty column");
    if !range_fits(min, max, F::BITS) {
        return raw;
    }
    ColumnSpec {
        index,
        kind: ColumnKind::DecimalScaled,
        precision: F::BITS,
        scale_exponent: p,
        offset: min,
    }
}

fn column_spec(index: usize, column: &Column) -> Result<ColumnSpec> {
    Ok(match &column.data {
        ColumnData::Int { bits, values } => {
            let min = *values.iter().min().ok_or(GdError::EmptyTable)?;
            let max = *values.iter().max().ok_or(GdError::EmptyTable)?;
            if !range_fits(min, max, *bits) {
                return Err(GdError::PlanViolation(format!(
                    "column {index}: integer range [{min}, {max}] exceeds {bits} bits"
                )));
            }
            ColumnSpec {
                index,
                kind: ColumnKind::Integer,
                precision: *bits,
                scale_exponent: 0,
                offset: min,
            }
        }
        ColumnData::F32(values) => float_spec(index, values),
        ColumnData::F64(values) => float_spec(index, values),
    })
}

/// Chooses the lossless transform for every column of `table`.
pub fn infer_preprocessing(table: &Table) -> Result<PreprocessPlan> {
    if table.n_rows() == 0 {
        return Err(GdError::EmptyTable);
    }
    let columns = table
        .columns()
        .iter()
        .enumerate()
        .map(|(i, c)| column_spec(i, c))
        .collect::<Result<Vec<_>>>()?;
    Ok(PreprocessPlan { columns })
}

fn forward_float<F: SourceFloat>(spec: &ColumnSpec, values: &[F]) -> Result<Vec<u64>> {
    match spec.kind {
        ColumnKind::RawFloatBits => Ok(values.iter().map(|v| v.to_raw()).collect()),
        ColumnKind::DecimalScaled => {
            let factor = pow10(spec.scale_exponent);
            values
                .iter()
                .map(|&v| {
                    let s = (v.to_f64_lossless() * factor).round();
                    if !s.is_finite() || s.abs() > MAX_EXACT_INT {
                        return Err(GdError::PlanViolation(format!(
                            "column {}: {v} cannot be scaled by 10^{}",
                            spec.index, spec.scale_exponent
                        )));
                    }
                    let s = s as i64;
                    if decode_scaled::<F>(s, spec.scale_exponent).to_raw() != v.to_raw() {
                        return Err(GdError::PlanViolation(format!(
                            "column {}: {v} is not exact at 10^{}",
                            spec.index, spec.scale_exponent
                        )));
                    }
                    spec.encode_scaled(s)
                })
                .collect()
        }
        ColumnKind::Integer => Err(GdError::PlanViolation(format!(
            "column {}: integer transform on a float column",
            spec.index
        ))),
    }
}

fn check_shape(table_bits: u8, spec: &ColumnSpec) -> Result<()> {
    if table_bits != spec.precision {
        return Err(GdError::PlanViolation(format!(
            "column {}: table has {table_bits}-bit values, plan expects {}",
            spec.index, spec.precision
        )));
    }
    Ok(())
}

/// Applies `plan` to `table`, producing the transformed integer matrix.
pub fn forward_transform(table: &Table, plan: &PreprocessPlan) -> Result<IntegerMatrix> {
    plan.validate()?;
    if table.n_cols() != plan.d() {
        return Err(GdError::PlanViolation(format!(
            "table has {} columns, plan has {}",
            table.n_cols(),
            plan.d()
        )));
    }
    let columns = table
        .columns()
        .iter()
        .zip(&plan.columns)
        .map(|(column, spec)| {
            check_shape(column.data.source_bits(), spec)?;
            match &column.data {
                ColumnData::Int { values, .. } => {
                    if spec.kind != ColumnKind::Integer {
                        return Err(GdError::PlanViolation(format!(
                            "column {}: {:?} transform on an integer column",
                            spec.index, spec.kind
                        )));
                    }
                    values.iter().map(|&v| spec.encode_scaled(v)).collect()
                }
                ColumnData::F32(values) => forward_float(spec, values),
                ColumnData::F64(values) => forward_float(spec, values),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    IntegerMatrix::from_columns(plan.widths(), columns)
}

fn inverse_float<F: SourceFloat>(spec: &ColumnSpec, values: &[u64]) -> Result<Vec<F>> {
    match spec.kind {
        ColumnKind::RawFloatBits => Ok(values.iter().map(|&t| F::from_raw(t)).collect()),
        _ => values
            .iter()
            .map(|&t| Ok(decode_scaled::<F>(spec.unshift(t)?, spec.scale_exponent)))
            .collect(),
    }
}

/// Inverse of [`forward_transform`]; bit-exact in the source precision.
pub fn inverse_transform(matrix: &IntegerMatrix, plan: &PreprocessPlan) -> Result<Table> {
    plan.validate()?;
    if matrix.d() != plan.d() {
        return Err(GdError::PlanViolation(format!(
            "matrix has {} columns, plan has {}",
            matrix.d(),
            plan.d()
        )));
    }
    let data = plan
        .columns
        .iter()
        .enumerate()
        .map(|(c, spec)| {
            let values = matrix.column(c);
            Ok(match (spec.kind, spec.precision) {
                (ColumnKind::Integer, bits) => ColumnData::Int {
                    bits,
                    values: values.iter().map(|&t| spec.unshift(t)).collect::<Result<_>>()?,
                },
                (_, 32) => ColumnData::F32(inverse_float::<f32>(spec, values)?),
                (_, _) => ColumnData::F64(inverse_float::<f64>(spec, values)?),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Table::from_data(data)
}
