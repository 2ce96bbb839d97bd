//! Trie over the chosen base bits, stored as its leaf frontier.
//!
//! Every root-to-leaf path is one distinct base, so the leaf count is the
//! number of bases `n_b` for the current bit set. Interior nodes are never
//! materialized: leaves are contiguous ranges of a single sample
//! permutation, and adding a bit stably partitions each range by that bit.

use std::fmt::Write as _;
use std::ops::Range;

use crate::bits::{put_bits, BitPattern, BitSet};
use crate::error::{GdError, Result};
use crate::ingest::{ChunkLayout, IntegerMatrix};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BaseTree {
    /// Sample indices, grouped so that every leaf is a contiguous range.
    order: Vec<u32>,
    leaves: Vec<Range<u32>>,
    /// Tree levels, in insertion order.
    ordered_bits: Vec<usize>,
    members: Option<BitSet>,
}

/// One leaf of the tree: a distinct base and the samples that map to it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BaseLeaf<'a> {
    /// Base bits in ascending global-index order.
    pub pattern: BitPattern,
    pub count: usize,
    pub samples: &'a [u32],
}

impl BaseTree {
    /// Root-only tree holding all `n` samples.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "base tree needs at least one sample");
        assert!(n <= u32::MAX as usize);
        let root = 0..n as u32;
        BaseTree {
            order: root.clone().collect(),
            leaves: vec![root],
            ordered_bits: Vec::new(),
            members: None,
        }
    }

    pub fn n(&self) -> usize {
        self.order.len()
    }

    /// Current number of bases (`n_b`).
    pub fn width(&self) -> usize {
        self.leaves.len()
    }

    /// Number of bits added (`l_b`).
    pub fn height(&self) -> usize {
        self.ordered_bits.len()
    }

    pub fn ordered_bits(&self) -> &[usize] {
        &self.ordered_bits
    }

    pub fn contains_bit(&self, bit: usize) -> bool {
        self.members.as_ref().is_some_and(|m| m.contains(bit))
    }

    fn check_new_bit(&self, layout: &ChunkLayout, bit: usize) -> Result<()> {
        if bit >= layout.l_c() {
            return Err(GdError::BitOutOfRange { bit, l_c: layout.l_c() });
        }
        if self.contains_bit(bit) {
            return Err(GdError::BitAlreadyInTree(bit));
        }
        Ok(())
    }

    fn check_matrix(&self, matrix: &IntegerMatrix, layout: &ChunkLayout) -> Result<()> {
        matrix.check_layout(layout)?;
        if matrix.n() != self.n() {
            return Err(GdError::LengthMismatch(matrix.n(), self.n()));
        }
        Ok(())
    }

    fn record_bit(&mut self, layout: &ChunkLayout, bit: usize) {
        self.members
            .get_or_insert_with(|| BitSet::new(layout.l_c()))
            .insert(bit);
        self.ordered_bits.push(bit);
    }

    /// Leaf count after adding `bit`, without modifying the tree.
    pub fn would_split_count(&self, matrix: &IntegerMatrix, layout: &ChunkLayout, bit: usize) -> Result<usize> {
        self.check_new_bit(layout, bit)?;
        self.check_matrix(matrix, layout)?;
        let (column, _) = layout.locate(bit);
        let values = matrix.column(column);
        let shift = layout.place(bit);
        let splits = self
            .leaves
            .iter()
            .filter(|leaf| leaf.len() > 1)
            .filter(|leaf| {
                let samples = &self.order[leaf.start as usize..leaf.end as usize];
                let first = (values[samples[0] as usize] >> shift) & 1;
                samples[1..].iter().any(|&s| (values[s as usize] >> shift) & 1 != first)
            })
            .count();
        Ok(self.leaves.len() + splits)
    }

    /// Adds `bit` as a new level, splitting every leaf whose samples disagree
    /// on it. Zero children precede one children.
    pub fn expand(&mut self, matrix: &IntegerMatrix, layout: &ChunkLayout, bit: usize) -> Result<()> {
        self.check_new_bit(layout, bit)?;
        self.check_matrix(matrix, layout)?;
        let (column, _) = layout.locate(bit);
        let values = matrix.column(column);
        let shift = layout.place(bit);
        let mut leaves = Vec::with_capacity(self.leaves.len() * 2);
        let mut ones = Vec::new();
        for leaf in &self.leaves {
            let samples = &mut self.order[leaf.start as usize..leaf.end as usize];
            ones.clear();
            let mut zeros = 0usize;
            for i in 0..samples.len() {
                let s = samples[i];
                if (values[s as usize] >> shift) & 1 == 0 {
                    samples[zeros] = s;
                    zeros += 1;
                } else {
                    ones.push(s);
                }
            }
            samples[zeros..].copy_from_slice(&ones);
            let mid = leaf.start + zeros as u32;
            if mid > leaf.start {
                leaves.push(leaf.start..mid);
            }
            if mid < leaf.end {
                leaves.push(mid..leaf.end);
            }
        }
        self.leaves = leaves;
        self.record_bit(layout, bit);
        Ok(())
    }

    /// Adds a bit known to be constant across all samples; no leaf splits.
    pub fn expand_constant(&mut self, layout: &ChunkLayout, bit: usize) -> Result<()> {
        self.check_new_bit(layout, bit)?;
        self.record_bit(layout, bit);
        Ok(())
    }

    /// Distinct bases with their populations, ascending by base value over
    /// the base bits in global-index order.
    pub fn leaves(&self, matrix: &IntegerMatrix, layout: &ChunkLayout) -> Result<Vec<BaseLeaf<'_>>> {
        self.check_matrix(matrix, layout)?;
        let mut sorted_bits = self.ordered_bits.clone();
        sorted_bits.sort_unstable();
        let mut out: Vec<BaseLeaf<'_>> = self
            .leaves
            .iter()
            .map(|leaf| {
                let samples = &self.order[leaf.start as usize..leaf.end as usize];
                let rep = samples[0] as usize;
                let mut words = vec![0u64; sorted_bits.len().div_ceil(64).max(1)];
                for (i, &b) in sorted_bits.iter().enumerate() {
                    put_bits(&mut words, i, u64::from(matrix.bit(layout, rep, b)), 1);
                }
                BaseLeaf {
                    pattern: BitPattern::from_words(sorted_bits.len(), &words),
                    count: samples.len(),
                    samples,
                }
            })
            .collect();
        out.sort_by(|a, b| a.pattern.cmp(&b.pattern));
        Ok(out)
    }

    /// Indented text rendering of the tree, one line per node, in the style
    /// `bit <index> = <value>  [samples]`. Sample indices are 0-based.
    pub fn render(&self, matrix: &IntegerMatrix, layout: &ChunkLayout) -> Result<String> {
        self.check_matrix(matrix, layout)?;
        let mut text = String::from("root  [all samples]\n");
        self.render_level(matrix, layout, 0, 0..self.leaves.len(), &mut text);
        Ok(text)
    }

    fn render_level(
        &self,
        matrix: &IntegerMatrix,
        layout: &ChunkLayout,
        depth: usize,
        leaf_range: Range<usize>,
        text: &mut String,
    ) {
        let Some(&bit) = self.ordered_bits.get(depth) else {
            return;
        };
        let value_of = |leaf: usize| {
            let rep = self.order[self.leaves[leaf].start as usize] as usize;
            matrix.bit(layout, rep, bit)
        };
        let mut start = leaf_range.start;
        while start < leaf_range.end {
            let value = value_of(start);
            let mut end = start + 1;
            while end < leaf_range.end && value_of(end) == value {
                end += 1;
            }
            let lo = self.leaves[start].start as usize;
            let hi = self.leaves[end - 1].end as usize;
            let mut samples: Vec<u32> = self.order[lo..hi].to_vec();
            samples.sort_unstable();
            let _ = writeln!(
                text,
                "{}bit {} = {}  {:?}",
                "  ".repeat(depth + 1),
                bit,
                u8::from(value),
                samples
            );
            self.render_level(matrix, layout, depth + 1, start..end, text);
            start = end;
        }
    }
}
