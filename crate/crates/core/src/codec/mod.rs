//! Base/deviation split, deduplication, and the `GDC1` container.

mod container;

pub use container::{deserialize, from_bytes, serialize, to_bytes, SerializeReport, FORMAT_VERSION, MAGIC};

use rayon::prelude::*;

use crate::bits::{ceil_log2, get_bits, put_bits, BitPattern, BitSet};
use crate::configurator::{compressed_size, GdConfig};
use crate::error::{GdError, Result};
use crate::ingest::{inverse_transform, ChunkLayout, IntegerMatrix, PreprocessPlan, Table};

/// Contiguous runs of a column mask as `(shift, len)`, most significant first.
fn mask_runs(mask: u64) -> Vec<(u32, u32)> {
    let mut runs = Vec::new();
    let mut rest = mask;
    while rest != 0 {
        let top = 63 - rest.leading_zeros();
        let len = (rest << (63 - top)).leading_ones();
        let low = top + 1 - len;
        runs.push((low, len));
        rest &= !(low_mask(len) << low);
    }
    runs
}

fn low_mask(len: u32) -> u64 {
    if len >= 64 {
        u64::MAX
    } else {
        (1u64 << len) - 1
    }
}

/// How chunk bits split into base and deviation, per column.
#[derive(Clone, Debug)]
pub(crate) struct BitSplit {
    base_runs: Vec<Vec<(u32, u32)>>,
    dev_runs: Vec<Vec<(u32, u32)>>,
    dev_masks: Vec<u64>,
    l_b: usize,
    l_d: usize,
}

impl BitSplit {
    pub(crate) fn new(layout: &ChunkLayout, base_bits: &BitSet) -> Self {
        let mut split = BitSplit {
            base_runs: Vec::with_capacity(layout.d()),
            dev_runs: Vec::with_capacity(layout.d()),
            dev_masks: Vec::with_capacity(layout.d()),
            l_b: base_bits.count(),
            l_d: layout.l_c() - base_bits.count(),
        };
        for c in 0..layout.d() {
            let base = layout.column_mask(base_bits, c);
            let dev = low_mask(u32::from(layout.width(c))) & !base;
            split.base_runs.push(mask_runs(base));
            split.dev_runs.push(mask_runs(dev));
            split.dev_masks.push(dev);
        }
        split
    }

    fn pack(runs: &[Vec<(u32, u32)>], row: impl Fn(usize) -> u64, out: &mut [u64]) {
        let mut pos = 0;
        for (c, col_runs) in runs.iter().enumerate() {
            let v = row(c);
            for &(shift, len) in col_runs {
                put_bits(out, pos, (v >> shift) & low_mask(len), len);
                pos += len as usize;
            }
        }
    }

    fn unpack(runs: &[Vec<(u32, u32)>], words: &[u64], values: &mut [u64]) {
        let mut pos = 0;
        for (c, col_runs) in runs.iter().enumerate() {
            for &(shift, len) in col_runs {
                values[c] |= get_bits(words, pos, len) << shift;
                pos += len as usize;
            }
        }
    }

    pub(crate) fn dev_mask(&self, column: usize) -> u64 {
        self.dev_masks[column]
    }
}

fn stride(bits: usize) -> usize {
    bits.div_ceil(64).max(1)
}

/// A GD-compressed dataset: deduplicated sorted bases with counts, plus a
/// base ID and verbatim deviation per sample.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompressedDataset {
    plan: PreprocessPlan,
    layout: ChunkLayout,
    base_bits: BitSet,
    n: usize,
    bases: Vec<u64>,
    counts: Vec<u64>,
    ids: Vec<u32>,
    deviations: Vec<u64>,
}

impl CompressedDataset {
    pub fn plan(&self) -> &PreprocessPlan {
        &self.plan
    }

    pub fn layout(&self) -> &ChunkLayout {
        &self.layout
    }

    pub fn base_bits(&self) -> &BitSet {
        &self.base_bits
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_b(&self) -> usize {
        self.counts.len()
    }

    pub fn l_c(&self) -> usize {
        self.layout.l_c()
    }

    pub fn l_b(&self) -> usize {
        self.base_bits.count()
    }

    pub fn l_d(&self) -> usize {
        self.l_c() - self.l_b()
    }

    pub fn l_bc(&self) -> u32 {
        ceil_log2(self.n as u64)
    }

    pub fn l_id(&self) -> u32 {
        ceil_log2(self.n_b() as u64)
    }

    fn base_stride(&self) -> usize {
        stride(self.l_b())
    }

    fn dev_stride(&self) -> usize {
        stride(self.l_d())
    }

    pub(crate) fn base_words(&self, id: usize) -> &[u64] {
        let s = self.base_stride();
        &self.bases[id * s..(id + 1) * s]
    }

    pub(crate) fn deviation_words(&self, row: usize) -> &[u64] {
        let s = self.dev_stride();
        &self.deviations[row * s..(row + 1) * s]
    }

    pub fn base(&self, id: usize) -> BitPattern {
        BitPattern::from_words(self.l_b(), self.base_words(id))
    }

    pub fn deviation(&self, row: usize) -> BitPattern {
        BitPattern::from_words(self.l_d(), self.deviation_words(row))
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn ids(&self) -> &[u32] {
        &self.ids
    }

    pub(crate) fn split(&self) -> BitSplit {
        BitSplit::new(&self.layout, &self.base_bits)
    }

    /// Column values of base `id` with every deviation bit zero.
    pub fn base_values(&self, id: usize) -> Vec<u64> {
        let mut values = vec![0u64; self.layout.d()];
        BitSplit::unpack(&self.split().base_runs, self.base_words(id), &mut values);
        values
    }

    /// Reconstructs one sample from its ID, its deviation and one base.
    pub fn point_query(&self, row: usize) -> Vec<u64> {
        self.point_query_with(&self.split(), row)
    }

    fn point_query_with(&self, split: &BitSplit, row: usize) -> Vec<u64> {
        let mut values = vec![0u64; self.layout.d()];
        BitSplit::unpack(&split.base_runs, self.base_words(self.ids[row] as usize), &mut values);
        BitSplit::unpack(&split.dev_runs, self.deviation_words(row), &mut values);
        values
    }

    /// All samples, in transformed integer form.
    pub fn to_matrix(&self) -> Result<IntegerMatrix> {
        let split = self.split();
        let rows: Vec<Vec<u64>> = (0..self.n)
            .into_par_iter()
            .map(|r| self.point_query_with(&split, r))
            .collect();
        IntegerMatrix::from_rows(self.layout.widths().to_vec(), &rows)
    }

    /// Payload size in bits (bases, counts, IDs, deviations), i.e. the
    /// compressed size with no parameter overhead.
    pub fn payload_bits(&self) -> u64 {
        compressed_size(
            self.n as u64,
            self.n_b() as u64,
            self.l_b() as u64,
            self.l_d() as u64,
            0,
        )
    }

    /// Size of the serialized container in bits.
    pub fn container_bits(&self) -> u64 {
        container::container_len(self) as u64 * 8
    }

    /// Everything in the container that is not payload: header, section
    /// padding and checksum.
    pub fn s_params(&self) -> u64 {
        self.container_bits() - self.payload_bits()
    }

    /// Bases and counts relative to the uncompressed size `n·l_c`.
    pub fn analytics_data_ratio(&self) -> f64 {
        let used = self.n_b() as f64 * (self.l_b() as f64 + f64::from(self.l_bc()));
        used / (self.n as f64 * self.l_c() as f64)
    }

    /// Container size over `original_bits`.
    pub fn compression_ratio(&self, original_bits: u64) -> Result<f64> {
        compression_ratio(self, original_bits)
    }

    /// Checks the structural invariants of a dataset.
    pub(crate) fn validate(&self) -> Result<()> {
        let corrupt = |msg: String| Err(GdError::Corrupt(msg));
        self.plan.validate()?;
        if self.plan.widths() != self.layout.widths() {
            return corrupt("plan widths do not match layout".into());
        }
        if self.base_bits.universe() != self.l_c() {
            return corrupt("base bit set does not match chunk length".into());
        }
        if self.ids.len() != self.n || self.deviations.len() != self.n * self.dev_stride() {
            return corrupt("per-sample sections have the wrong length".into());
        }
        if self.bases.len() != self.n_b() * self.base_stride() {
            return corrupt("base section has the wrong length".into());
        }
        if self.n == 0 || self.n_b() == 0 || self.n_b() > self.n {
            return corrupt(format!("{} bases for {} samples", self.n_b(), self.n));
        }
        for j in 1..self.n_b() {
            if self.base_words(j - 1) >= self.base_words(j) {
                return corrupt(format!("bases {} and {j} are not strictly ascending", j - 1));
            }
        }
        let mut tally = vec![0u64; self.n_b()];
        for &id in &self.ids {
            let Some(t) = tally.get_mut(id as usize) else {
                return corrupt(format!("base id {id} out of range"));
            };
            *t += 1;
        }
        if tally != self.counts {
            return corrupt("base counts disagree with base ids".into());
        }
        Ok(())
    }
}

/// Splits each chunk into base and deviation and deduplicates the bases.
/// Base IDs follow ascending base value.
pub fn compress(
    matrix: &IntegerMatrix,
    layout: &ChunkLayout,
    plan: &PreprocessPlan,
    config: &GdConfig,
) -> Result<CompressedDataset> {
    matrix.check_layout(layout)?;
    if plan.widths() != layout.widths() {
        return Err(GdError::LayoutMismatch("plan widths differ from layout".into()));
    }
    if config.l_c() != layout.l_c() {
        return Err(GdError::LayoutMismatch(format!(
            "configuration covers {} bits, chunks have {}",
            config.l_c(),
            layout.l_c()
        )));
    }
    let n = matrix.n();
    if n == 0 {
        return Err(GdError::EmptyInput);
    }
    let split = BitSplit::new(layout, &config.base_bits);
    let (kb, kd) = (stride(split.l_b), stride(split.l_d));

    let mut keys = vec![0u64; n * kb];
    keys.par_chunks_mut(kb).enumerate().for_each(|(r, out)| {
        BitSplit::pack(&split.base_runs, |c| matrix.get(r, c), out);
    });
    let mut deviations = vec![0u64; n * kd];
    deviations.par_chunks_mut(kd).enumerate().for_each(|(r, out)| {
        BitSplit::pack(&split.dev_runs, |c| matrix.get(r, c), out);
    });

    let key = |r: u32| &keys[r as usize * kb..(r as usize + 1) * kb];
    let mut order: Vec<u32> = (0..n as u32).collect();
    order.par_sort_unstable_by(|&a, &b| key(a).cmp(key(b)));

    let mut bases = Vec::new();
    let mut counts: Vec<u64> = Vec::new();
    let mut ids = vec![0u32; n];
    let mut previous: Option<&[u64]> = None;
    for &r in &order {
        let k = key(r);
        if previous != Some(k) {
            bases.extend_from_slice(k);
            counts.push(0);
            previous = Some(k);
        }
        *counts.last_mut().expect("pushed above") += 1;
        ids[r as usize] = (counts.len() - 1) as u32;
    }

    Ok(CompressedDataset {
        plan: plan.clone(),
        layout: layout.clone(),
        base_bits: config.base_bits.clone(),
        n,
        bases,
        counts,
        ids,
        deviations,
    })
}

/// Rebuilds the original table.
pub fn decompress(compressed: &CompressedDataset) -> Result<Table> {
    inverse_transform(&compressed.to_matrix()?, &compressed.plan)
}

/// Serialized size relative to `original_bits` (lower is better).
pub fn compression_ratio(compressed: &CompressedDataset, original_bits: u64) -> Result<f64> {
    if original_bits == 0 {
        return Err(GdError::InvalidParameter("original size is zero".into()));
    }
    Ok(compressed.container_bits() as f64 / original_bits as f64)
}

pub fn analytics_data_ratio(compressed: &CompressedDataset) -> f64 {
    compressed.analytics_data_ratio()
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::ingest::{ColumnKind, ColumnSpec};
    use proptest::prelude::*;

    pub(crate) fn fixture() -> (IntegerMatrix, ChunkLayout, PreprocessPlan) {
        let rows = vec![
            0b1010_0000u64,
            0b1110_0010,
            0b1011_0110,
            0b1111_1000,
            0b1110_0010,
            0b1100_0000,
            0b1111_1110,
        ];
        let plan = PreprocessPlan {
            columns: vec![ColumnSpec {
                index: 0,
                kind: ColumnKind::Integer,
                precision: 8,
                scale_exponent: 0,
                offset: 0,
            }],
        };
        (
            IntegerMatrix::from_columns(vec![8], vec![rows]).unwrap(),
            ChunkLayout::new(vec![8]).unwrap(),
            plan,
        )
    }

    fn config(bits: &[usize], l_c: usize) -> GdConfig {
        GdConfig::new(
            BitSet::from_indices(l_c, bits.iter().copied()).unwrap(),
            Default::default(),
        )
    }

    #[test]
    fn mask_runs_split_contiguous_blocks() {
        assert_eq!(mask_runs(0), vec![]);
        assert_eq!(mask_runs(0b1110_0001), vec![(5, 3), (0, 1)]);
        assert_eq!(mask_runs(u64::MAX), vec![(0, 64)]);
        assert_eq!(mask_runs(1 << 63), vec![(63, 1)]);
        assert_eq!(mask_runs(0b0101), vec![(2, 1), (0, 1)]);
    }

    #[test]
    fn fixture_bases_counts_and_deviations() {
        let (m, layout, plan) = fixture();
        let cd = compress(&m, &layout, &plan, &config(&[0, 1, 2, 7], 8)).unwrap();
        let bases: Vec<String> = (0..cd.n_b()).map(|j| cd.base(j).to_string()).collect();
        assert_eq!(bases, vec!["1010", "1100", "1110"]);
        assert_eq!(cd.counts(), &[2, 1, 4]);
        assert_eq!(cd.ids(), &[0, 2, 0, 2, 2, 1, 2]);
        assert_eq!(cd.deviation(0).to_string(), "0000");
        assert_eq!(cd.deviation(2).to_string(), "1011");
        assert_eq!(cd.payload_bits(), 63);
        assert_eq!(cd.analytics_data_ratio(), 21.0 / 56.0);
        assert_eq!(cd.payload_bits() as f64 / 56.0, 1.125);
        assert_eq!(cd.to_matrix().unwrap(), m);
    }

    #[test]
    fn empty_base_is_one_base() {
        let (m, layout, plan) = fixture();
        let cd = compress(&m, &layout, &plan, &config(&[], 8)).unwrap();
        assert_eq!(cd.n_b(), 1);
        assert_eq!(cd.counts(), &[7]);
        assert_eq!(cd.l_id(), 0);
        assert_eq!(cd.deviation(3).to_string(), "11111000");
        assert_eq!(cd.to_matrix().unwrap(), m);
    }

    #[test]
    fn full_base_deduplicates_whole_chunks() {
        let (m, layout, plan) = fixture();
        let cd = compress(&m, &layout, &plan, &GdConfig::all_bits(8)).unwrap();
        assert_eq!(cd.l_d(), 0);
        assert_eq!(cd.n_b(), 6);
        // Rows 2 and 5 (1-indexed) are identical.
        assert_eq!(cd.ids()[1], cd.ids()[4]);
        assert_eq!(cd.to_matrix().unwrap(), m);
    }

    #[test]
    fn mismatched_configuration_is_rejected() {
        let (m, layout, plan) = fixture();
        assert!(matches!(
            compress(&m, &layout, &plan, &GdConfig::all_bits(9)),
            Err(GdError::LayoutMismatch(_))
        ));
    }

    #[test]
    fn point_query_reads_one_record() {
        let (m, layout, plan) = fixture();
        let cd = compress(&m, &layout, &plan, &config(&[0, 1, 2, 7], 8)).unwrap();
        for r in 0..m.n() {
            assert_eq!(cd.point_query(r), m.row(r));
        }
        assert_eq!(cd.base_values(0), vec![0b1010_0000]);
    }

    #[test]
    fn compression_ratio_improves_with_n_for_constant_data() {
        let ratios: Vec<f64> = [10usize, 100, 1000]
            .iter()
            .map(|&n| {
                let m = IntegerMatrix::from_columns(vec![32], vec![vec![12345; n]]).unwrap();
                let layout = ChunkLayout::new(vec![32]).unwrap();
                let plan = PreprocessPlan {
                    columns: vec![ColumnSpec {
                        index: 0,
                        kind: ColumnKind::Integer,
                        precision: 32,
                        scale_exponent: 0,
                        offset: 0,
                    }],
                };
                let cd = compress(&m, &layout, &plan, &GdConfig::all_bits(32)).unwrap();
                cd.compression_ratio(32 * n as u64).unwrap()
            })
            .collect();
        assert!(ratios[0] > ratios[1] && ratios[1] > ratios[2], "{ratios:?}");
        assert!(compression_ratio(
            &compress(&fixture().0, &fixture().1, &fixture().2, &GdConfig::all_bits(8)).unwrap(),
            0
        )
        .is_err());
    }

    proptest! {
        #[test]
        fn arbitrary_bit_sets_round_trip(
            rows in prop::collection::vec(prop::collection::vec(any::<u64>(), 3), 1..80),
            base in prop::collection::vec(any::<bool>(), 5 + 64 + 13),
        ) {
            let widths = vec![5u8, 64, 13];
            let rows: Vec<Vec<u64>> = rows.iter().map(|r| vec![r[0] & 0x1f, r[1], r[2] & 0x1fff]).collect();
            let m = IntegerMatrix::from_rows(widths.clone(), &rows).unwrap();
            let layout = ChunkLayout::new(widths.clone()).unwrap();
            let plan = PreprocessPlan {
                columns: widths.iter().enumerate().map(|(i, &w)| ColumnSpec {
                    index: i, kind: ColumnKind::Integer, precision: w, scale_exponent: 0, offset: 0,
                }).collect(),
            };
            let bits: Vec<usize> = base.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect();
            let cd = compress(&m, &layout, &plan, &config(&bits, layout.l_c())).unwrap();
            cd.validate().unwrap();
            prop_assert_eq!(cd.to_matrix().unwrap(), m.clone());
            let tree_n_b = crate::configurator::count_bases(&m, &layout, cd.base_bits()).unwrap();
            prop_assert_eq!(cd.n_b(), tree_n_b);
        }
    }
}
