use crate::error::{GdError, Result};
use crate::ingest::Table;
use crate::scalar::Real;

/// Row-major set of `d`-dimensional points.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet<T> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Real> PointSet<T> {
    pub fn new(dim: usize, data: Vec<T>) -> Result<Self> {
        if dim == 0 || !data.len().is_multiple_of(dim) {
            return Err(GdError::LengthMismatch(data.len(), dim));
        }
        Ok(PointSet { dim, data })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let dim = rows.first().map(Vec::len).ok_or(GdError::EmptyInput)?;
        if let Some(r) = rows.iter().find(|r| r.len() != dim) {
            return Err(GdError::LengthMismatch(r.len(), dim));
        }
        PointSet::new(dim, rows.concat())
    }

    /// One point per table row, widened from the source precision.
    pub fn from_table(table: &Table) -> Self {
        let dim = table.n_cols();
        let mut data = Vec::with_capacity(table.n_rows() * dim);
        for r in 0..table.n_rows() {
            for c in table.columns() {
                data.push(T::from_f64_lossy(c.data.get_f64(r)));
            }
        }
        PointSet { dim, data }
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[T] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn select(&self, rows: &[usize]) -> PointSet<T> {
        let mut data = Vec::with_capacity(rows.len() * self.dim);
        for &r in rows {
            data.extend_from_slice(self.point(r));
        }
        PointSet { dim: self.dim, data }
    }

    pub fn map(&self, f: impl Fn(usize, T) -> T) -> PointSet<T> {
        let dim = self.dim;
        PointSet {
            dim,
            data: self.data.iter().enumerate().map(|(i, &v)| f(i % dim, v)).collect(),
        }
    }

    /// Per-dimension mean and population standard deviation.
    pub fn column_moments(&self) -> Vec<(f64, f64)> {
        let n = self.len() as f64;
        (0..self.dim)
            .map(|c| {
                let mean = (0..self.len()).map(|i| self.point(i)[c].as_f64()).sum::<f64>() / n;
                let var = (0..self.len())
                    .map(|i| (self.point(i)[c].as_f64() - mean).powi(2))
                    .sum::<f64>()
                    / n;
                (mean, var.sqrt())
            })
            .collect()
    }

    /// Number of distinct points, counting at most `limit`.
    pub fn distinct_up_to(&self, limit: usize) -> usize {
        let mut seen: Vec<&[T]> = Vec::new();
        for i in 0..self.len() {
            if seen.len() >= limit {
                break;
            }
            let p = self.point(i);
            if !seen.iter().any(|q| q.iter().zip(p).all(|(a, b)| a == b)) {
                seen.push(p);
            }
        }
        seen.len()
    }
}

pub(crate) fn squared_distance<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum()
}
