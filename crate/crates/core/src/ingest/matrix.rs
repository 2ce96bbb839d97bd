use std::ops::Range;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::plan::PreprocessPlan;
use crate::bits::BitSet;
use crate::error::{GdError, Result};

fn width_mask(width: u8) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

/// Maps global chunk bit indices to `(column, significance)` positions.
///
/// Columns are laid out in order, each MSB first: column 0 covers global
/// indices `0..w_0`, column 1 the next `w_1`, and so on. Significance 0 is a
/// column's most significant bit.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkLayout {
    widths: Vec<u8>,
    starts: Vec<usize>,
    l_c: usize,
}

impl ChunkLayout {
    pub fn new(widths: Vec<u8>) -> Result<Self> {
        if widths.is_empty() {
            return Err(GdError::LayoutMismatch("no columns".into()));
        }
        if let Some(w) = widths.iter().find(|&&w| w == 0 || w > 64) {
            return Err(GdError::LayoutMismatch(format!("unsupported column width {w}")));
        }
        let mut starts = Vec::with_capacity(widths.len());
        let mut l_c = 0;
        for &w in &widths {
            starts.push(l_c);
            l_c += usize::from(w);
        }
        Ok(ChunkLayout { widths, starts, l_c })
    }

    pub fn from_plan(plan: &PreprocessPlan) -> Result<Self> {
        ChunkLayout::new(plan.widths())
    }

    pub fn l_c(&self) -> usize {
        self.l_c
    }

    pub fn d(&self) -> usize {
        self.widths.len()
    }

    pub fn widths(&self) -> &[u8] {
        &self.widths
    }

    pub fn width(&self, column: usize) -> u8 {
        self.widths[column]
    }

    pub fn column_range(&self, column: usize) -> Range<usize> {
        self.starts[column]..self.starts[column] + usize::from(self.widths[column])
    }

    /// `(column, significance)` of a global bit.
    pub fn locate(&self, bit: usize) -> (usize, usize) {
        assert!(bit < self.l_c, "bit {bit} outside {}-bit chunk", self.l_c);
        let column = self.starts.partition_point(|&s| s <= bit) - 1;
        (column, bit - self.starts[column])
    }

    pub fn global(&self, column: usize, significance: usize) -> usize {
        assert!(significance < usize::from(self.widths[column]));
        self.starts[column] + significance
    }

    /// Shift that brings a global bit to the least significant position of
    /// its column value (`w_i - 1 - significance`).
    pub fn place(&self, bit: usize) -> u32 {
        let (column, sig) = self.locate(bit);
        (usize::from(self.widths[column]) - 1 - sig) as u32
    }

    /// Bits of `set` that fall in `column`, as a mask over the column value.
    pub fn column_mask(&self, set: &BitSet, column: usize) -> u64 {
        let w = u32::from(self.widths[column]);
        self.column_range(column)
            .enumerate()
            .filter(|&(_, g)| set.contains(g))
            .fold(0u64, |m, (sig, _)| m | (1u64 << (w - 1 - sig as u32)))
    }
}

/// `n × d` matrix of transformed non-negative integers, stored by column.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntegerMatrix {
    n: usize,
    widths: Vec<u8>,
    columns: Vec<Vec<u64>>,
}

impl IntegerMatrix {
    pub fn from_columns(widths: Vec<u8>, columns: Vec<Vec<u64>>) -> Result<Self> {
        if widths.len() != columns.len() {
            return Err(GdError::LengthMismatch(widths.len(), columns.len()));
        }
        let n = columns.first().map_or(0, Vec::len);
        for (c, (col, &w)) in columns.iter().zip(&widths).enumerate() {
            if col.len() != n {
                return Err(GdError::LengthMismatch(col.len(), n));
            }
            if w == 0 || w > 64 {
                return Err(GdError::LayoutMismatch(format!("unsupported column width {w}")));
            }
            let mask = width_mask(w);
            if let Some(v) = col.iter().find(|&&v| v & !mask != 0) {
                return Err(GdError::PlanViolation(format!(
                    "column {c}: value {v} exceeds {w} bits"
                )));
            }
        }
        if n > u32::MAX as usize {
            return Err(GdError::InvalidParameter("more than 2^32 - 1 rows".into()));
        }
        Ok(IntegerMatrix { n, widths, columns })
    }

    /// Builds a matrix from row-major values.
    pub fn from_rows(widths: Vec<u8>, rows: &[Vec<u64>]) -> Result<Self> {
        let d = widths.len();
        if let Some(r) = rows.iter().find(|r| r.len() != d) {
            return Err(GdError::LengthMismatch(r.len(), d));
        }
        let columns = (0..d).map(|c| rows.iter().map(|r| r[c]).collect()).collect();
        IntegerMatrix::from_columns(widths, columns)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.widths.len()
    }

    pub fn widths(&self) -> &[u8] {
        &self.widths
    }

    pub fn column(&self, c: usize) -> &[u64] {
        &self.columns[c]
    }

    pub fn get(&self, row: usize, column: usize) -> u64 {
        self.columns[column][row]
    }

    pub fn row(&self, row: usize) -> Vec<u64> {
        self.columns.iter().map(|c| c[row]).collect()
    }

    /// Value of global bit `bit` in chunk `row`.
    pub fn bit(&self, layout: &ChunkLayout, row: usize, bit: usize) -> bool {
        let (c, _) = layout.locate(bit);
        (self.columns[c][row] >> layout.place(bit)) & 1 == 1
    }

    pub fn select_rows(&self, rows: &[usize]) -> IntegerMatrix {
        IntegerMatrix {
            n: rows.len(),
            widths: self.widths.clone(),
            columns: self
                .columns
                .iter()
                .map(|col| rows.iter().map(|&r| col[r]).collect())
                .collect(),
        }
    }

    /// Keeps the first `d` columns.
    pub fn truncate_columns(&self, d: usize) -> IntegerMatrix {
        IntegerMatrix {
            n: self.n,
            widths: self.widths[..d].to_vec(),
            columns: self.columns[..d].to_vec(),
        }
    }

    pub(crate) fn check_layout(&self, layout: &ChunkLayout) -> Result<()> {
        if self.widths != layout.widths() {
            return Err(GdError::LayoutMismatch(format!(
                "matrix widths {:?} vs layout widths {:?}",
                self.widths,
                layout.widths()
            )));
        }
        Ok(())
    }
}

/// Global indices of bits whose value is the same in every chunk.
pub fn constant_bits(matrix: &IntegerMatrix, layout: &ChunkLayout) -> Result<BitSet> {
    matrix.check_layout(layout)?;
    let mut set = BitSet::new(layout.l_c());
    if matrix.n() == 0 {
        return Ok(set);
    }
    for c in 0..matrix.d() {
        let col = matrix.column(c);
        let (all, any) = col.iter().fold((u64::MAX, 0u64), |(a, o), &v| (a & v, o | v));
        let varying = (all ^ any) & width_mask(layout.width(c));
        let w = usize::from(layout.width(c));
        for sig in 0..w {
            if varying >> (w - 1 - sig) & 1 == 0 {
                set.insert(layout.global(c, sig));
            }
        }
    }
    Ok(set)
}

/// Uniform sample of `size` rows without replacement, in original row order.
pub fn sample_subset(matrix: &IntegerMatrix, size: usize, seed: u64) -> Result<IntegerMatrix> {
    let rows = subset_rows(matrix.n(), size, seed)?;
    Ok(matrix.select_rows(&rows))
}

/// Row indices selected by [`sample_subset`].
pub fn subset_rows(n: usize, size: usize, seed: u64) -> Result<Vec<usize>> {
    if size == 0 || size > n {
        return Err(GdError::SubsetSize { size, n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = rand::seq::index::sample(&mut rng, n, size).into_vec();
    rows.sort_unstable();
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn layout_is_column_major_msb_first() {
        let single = ChunkLayout::new(vec![8]).unwrap();
        assert_eq!(single.l_c(), 8);
        assert_eq!(single.locate(0), (0, 0));
        assert_eq!(single.place(0), 7);

        let two = ChunkLayout::new(vec![32, 32]).unwrap();
        assert_eq!(two.l_c(), 64);
        assert_eq!(two.locate(32), (1, 0));
        assert_eq!(two.place(32), 31);

        let many = ChunkLayout::new(vec![32; 7]).unwrap();
        assert_eq!(many.l_c(), 32 * 7);
    }

    #[test]
    fn bit_map_is_a_bijection() {
        let layout = ChunkLayout::new(vec![3, 64, 1, 17]).unwrap();
        for g in 0..layout.l_c() {
            let (c, s) = layout.locate(g);
            assert_eq!(layout.global(c, s), g);
        }
    }

    #[test]
    fn single_sample_is_fully_constant() {
        let m = IntegerMatrix::from_columns(vec![8, 4], vec![vec![0xa5], vec![3]]).unwrap();
        let layout = ChunkLayout::new(vec![8, 4]).unwrap();
        assert_eq!(constant_bits(&m, &layout).unwrap().count(), 12);
    }

    #[test]
    fn integers_have_eighteen_leading_constant_bits() {
        let m = IntegerMatrix::from_columns(vec![32], vec![vec![39, 3783, 9892]]).unwrap();
        let layout = ChunkLayout::new(vec![32]).unwrap();
        let constant = constant_bits(&m, &layout).unwrap();
        assert!((0..18).all(|b| constant.contains(b)));
        assert!(!constant.contains(18));
    }

    #[test]
    fn subset_is_deterministic() {
        let m = IntegerMatrix::from_columns(vec![16], vec![(0..10_000).collect()]).unwrap();
        let a = sample_subset(&m, 250, 7).unwrap();
        let b = sample_subset(&m, 250, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n(), 250);
        let full = sample_subset(&m, 10_000, 3).unwrap();
        assert_eq!(full, m);
        assert!(sample_subset(&m, 0, 1).is_err());
        assert!(sample_subset(&m, 10_001, 1).is_err());
    }

    proptest! {
        #[test]
        fn constant_bits_are_sound_and_complete(
            rows in prop::collection::vec(prop::collection::vec(any::<u64>(), 2), 1..30),
            masks in (any::<u64>(), any::<u64>()),
        ) {
            let rows: Vec<Vec<u64>> = rows.iter().map(|r| vec![r[0] & masks.0 & 0xfff, r[1] & masks.1]).collect();
            let widths = vec![12, 64];
            let m = IntegerMatrix::from_rows(widths.clone(), &rows).unwrap();
            let layout = ChunkLayout::new(widths).unwrap();
            let constant = constant_bits(&m, &layout).unwrap();
            for g in 0..layout.l_c() {
                let first = m.bit(&layout, 0, g);
                let uniform = (0..m.n()).all(|r| m.bit(&layout, r, g) == first);
                prop_assert_eq!(uniform, constant.contains(g));
            }
        }
    }
}
