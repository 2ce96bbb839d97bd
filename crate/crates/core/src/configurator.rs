//! Greedy base-bit selection.
//!
//! Starting from the constant bits, each iteration offers every column's most
//! significant deviation bit as a candidate, scores it by the resulting
//! compressed size scaled by a per-column balancing term, and appends the
//! cheapest one. Search stops once the iteration's best cost exceeds
//! `(1 + alpha)` times the best cost seen so far, and the best configuration
//! seen is returned.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basetree::BaseTree;
use crate::bits::{ceil_log2, BitSet};
use crate::error::{GdError, Result};
use crate::ingest::{
    constant_bits, forward_transform, infer_preprocessing, sample_subset, ChunkLayout, IntegerMatrix, PreprocessPlan,
    Table,
};

pub const DEFAULT_LAMBDA: f64 = 0.02;
pub const DEFAULT_ALPHA: f64 = 0.1;

/// Compressed size in bits: `n_b (l_b + l_bc) + n (l_id + l_d) + s_params`
/// with `l_bc = ⌈log2 n⌉` and `l_id = ⌈log2 n_b⌉`.
pub fn compressed_size(n: u64, n_b: u64, l_b: u64, l_d: u64, s_params: u64) -> u64 {
    compressed_size_with(n, ceil_log2(n), n_b, l_b, l_d, s_params)
}

/// [`compressed_size`] with an explicit base-count width, for sizing a
/// subset against the full dataset.
pub fn compressed_size_with(n: u64, l_bc: u32, n_b: u64, l_b: u64, l_d: u64, s_params: u64) -> u64 {
    n_b * (l_b + u64::from(l_bc)) + n * (u64::from(ceil_log2(n_b)) + l_d) + s_params
}

/// Clears one deviation bit from a column's maximum deviation.
pub fn update_max_deviation(delta: u64, place_value: u64) -> Result<u64> {
    if !place_value.is_power_of_two() || delta & place_value == 0 {
        return Err(GdError::PlaceNotSet {
            delta,
            place: place_value,
        });
    }
    Ok(delta ^ place_value)
}

/// Balanced cost `(1 - λ (Δ'/Δ⁰)²) · S`. A column with `Δ⁰ = 0` has nothing
/// to balance and costs `S`.
pub fn cost(size: u64, delta_prime: u64, delta0: u64, lambda: f64) -> f64 {
    let size = size as f64;
    if delta0 == 0 {
        return size;
    }
    let ratio = delta_prime as f64 / delta0 as f64;
    (1.0 - lambda * ratio * ratio) * size
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreedyParams {
    pub lambda: f64,
    /// `f64::INFINITY` disables early termination.
    pub alpha: f64,
}

impl Default for GreedyParams {
    fn default() -> Self {
        GreedyParams {
            lambda: DEFAULT_LAMBDA,
            alpha: DEFAULT_ALPHA,
        }
    }
}

impl GreedyParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.lambda) {
            return Err(GdError::InvalidParameter(format!(
                "lambda {} not in [0, 1)",
                self.lambda
            )));
        }
        if self.alpha.is_nan() || self.alpha <= 0.0 {
            return Err(GdError::InvalidParameter(format!("alpha {} must be > 0", self.alpha)));
        }
        Ok(())
    }
}

/// Chosen base bits and the parameters that produced them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GdConfig {
    pub base_bits: BitSet,
    pub lambda: f64,
    pub alpha: f64,
}

impl GdConfig {
    pub fn new(base_bits: BitSet, params: GreedyParams) -> Self {
        GdConfig {
            base_bits,
            lambda: params.lambda,
            alpha: params.alpha,
        }
    }

    /// Every bit in the base: exact deduplication of whole chunks.
    pub fn all_bits(l_c: usize) -> Self {
        GdConfig::new(BitSet::full(l_c), GreedyParams::default())
    }

    pub fn l_c(&self) -> usize {
        self.base_bits.universe()
    }

    pub fn l_b(&self) -> usize {
        self.base_bits.count()
    }

    pub fn l_d(&self) -> usize {
        self.l_c() - self.l_b()
    }
}

/// Per-column maximum deviation: the column value with every deviation bit
/// set, for the current base bits and right after the constant bits.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaxDeviation {
    pub current: Vec<u64>,
    pub initial: Vec<u64>,
}

impl MaxDeviation {
    pub fn for_bits(layout: &ChunkLayout, base_bits: &BitSet) -> Self {
        let current: Vec<u64> = (0..layout.d())
            .map(|c| {
                let w = layout.width(c);
                let full = if w >= 64 { u64::MAX } else { (1u64 << w) - 1 };
                full & !layout.column_mask(base_bits, c)
            })
            .collect();
        MaxDeviation {
            initial: current.clone(),
            current,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateEval {
    pub column: usize,
    pub bit: usize,
    pub n_b: usize,
    pub size: u64,
    pub delta_prime: u64,
    pub cost: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub iteration: usize,
    pub candidates: Vec<CandidateEval>,
    /// Bit appended this iteration; `None` when the search terminated.
    pub chosen: Option<usize>,
    pub best_cost: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SelectTrace {
    pub constant_bits: Vec<usize>,
    pub steps: Vec<TraceStep>,
    pub early_termination: bool,
    /// Columns with no varying bits, reported once.
    pub constant_columns: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub config: GdConfig,
    pub n_b: usize,
    pub best_cost: f64,
    pub trace: SelectTrace,
}

/// Runs greedy selection on `matrix`, taking its own constant bits.
pub fn greedy_select(matrix: &IntegerMatrix, layout: &ChunkLayout, params: GreedyParams) -> Result<Selection> {
    let constant = constant_bits(matrix, layout)?;
    greedy_select_with(matrix, layout, params, &constant, matrix.n())
}

/// Greedy selection with externally supplied constant bits and the row count
/// of the dataset that will actually be compressed (which sizes `l_bc`).
pub fn greedy_select_with(
    matrix: &IntegerMatrix,
    layout: &ChunkLayout,
    params: GreedyParams,
    constant: &BitSet,
    n_total: usize,
) -> Result<Selection> {
    params.validate()?;
    matrix.check_layout(layout)?;
    if matrix.n() == 0 {
        return Err(GdError::EmptyInput);
    }
    if constant.universe() != layout.l_c() {
        return Err(GdError::LayoutMismatch(format!(
            "constant bit set over {} bits, layout has {}",
            constant.universe(),
            layout.l_c()
        )));
    }

    let n = matrix.n() as u64;
    let l_bc = ceil_log2(n_total.max(matrix.n()) as u64);
    let l_c = layout.l_c() as u64;

    let mut base = constant.clone();
    let mut tree = BaseTree::new(matrix.n());
    for bit in constant.iter() {
        tree.expand_constant(layout, bit)?;
    }
    let mut deviation = MaxDeviation::for_bits(layout, &base);
    let mut trace = SelectTrace {
        constant_bits: constant.iter().collect(),
        constant_columns: (0..layout.d()).filter(|&c| deviation.initial[c] == 0).collect(),
        ..Default::default()
    };
    if !trace.constant_columns.is_empty() {
        log::info!("columns without varying bits: {:?}", trace.constant_columns);
    }

    let mut best_bits = base.clone();
    let mut best_cost = f64::INFINITY;

    loop {
        // Most significant deviation bit of each column still having one.
        let candidates: Vec<(usize, usize)> = (0..layout.d())
            .filter_map(|c| layout.column_range(c).find(|&g| !base.contains(g)).map(|g| (c, g)))
            .collect();
        if candidates.is_empty() {
            break;
        }
        let l_b = base.count() as u64;
        let evals = candidates
            .par_iter()
            .map(|&(column, bit)| {
                let n_b = tree.would_split_count(matrix, layout, bit)?;
                let size = compressed_size_with(n, l_bc, n_b as u64, l_b + 1, l_c - l_b - 1, 0);
                let place = 1u64 << layout.place(bit);
                let delta_prime = update_max_deviation(deviation.current[column], place)?;
                Ok(CandidateEval {
                    column,
                    bit,
                    n_b,
                    size,
                    delta_prime,
                    cost: cost(size, delta_prime, deviation.initial[column], params.lambda),
                })
            })
            .collect::<Result<Vec<_>>>()?;

        // Strict comparison keeps the lowest column on ties.
        let local = evals
            .iter()
            .fold(None::<&CandidateEval>, |acc, e| match acc {
                Some(a) if a.cost <= e.cost => Some(a),
                _ => Some(e),
            })
            .expect("at least one candidate")
            .clone();

        let iteration = trace.steps.len();
        if local.cost > (1.0 + params.alpha) * best_cost {
            trace.steps.push(TraceStep {
                iteration,
                candidates: evals,
                chosen: None,
                best_cost,
            });
            trace.early_termination = true;
            break;
        }

        base.insert(local.bit);
        tree.expand(matrix, layout, local.bit)?;
        debug_assert_eq!(tree.width(), local.n_b);
        deviation.current[local.column] = local.delta_prime;
        if local.cost < best_cost {
            best_cost = local.cost;
            best_bits = base.clone();
        }
        trace.steps.push(TraceStep {
            iteration,
            candidates: evals,
            chosen: Some(local.bit),
            best_cost,
        });
    }

    let n_b = if best_bits == base {
        tree.width()
    } else {
        count_bases(matrix, layout, &best_bits)?
    };
    Ok(Selection {
        config: GdConfig::new(best_bits, params),
        n_b,
        best_cost,
        trace,
    })
}

/// Number of distinct bases for an arbitrary bit set.
pub fn count_bases(matrix: &IntegerMatrix, layout: &ChunkLayout, bits: &BitSet) -> Result<usize> {
    let mut tree = BaseTree::new(matrix.n());
    for bit in bits.iter() {
        tree.expand(matrix, layout, bit)?;
    }
    Ok(tree.width())
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConfigureOptions {
    pub params: GreedyParams,
    /// Rows used for the greedy search; `None` uses all rows.
    pub subset_size: Option<usize>,
    pub seed: u64,
}

/// Everything produced by configuration, ready for compression.
#[derive(Clone, Debug)]
pub struct Configured {
    pub plan: PreprocessPlan,
    pub layout: ChunkLayout,
    pub matrix: IntegerMatrix,
    pub selection: Selection,
}

impl Configured {
    pub fn config(&self) -> &GdConfig {
        &self.selection.config
    }
}

/// Preprocessing and constant-bit detection on the full table, then greedy
/// selection on the optional subset.
pub fn configure(table: &Table, options: &ConfigureOptions) -> Result<Configured> {
    let plan = infer_preprocessing(table)?;
    let matrix = forward_transform(table, &plan)?;
    let layout = ChunkLayout::from_plan(&plan)?;
    let selection = configure_matrix(&matrix, &layout, options)?;
    Ok(Configured {
        plan,
        layout,
        matrix,
        selection,
    })
}

/// [`configure`] for an already transformed matrix.
pub fn configure_matrix(matrix: &IntegerMatrix, layout: &ChunkLayout, options: &ConfigureOptions) -> Result<Selection> {
    let constant = constant_bits(matrix, layout)?;
    match options.subset_size {
        Some(size) if size < matrix.n() => {
            let subset = sample_subset(matrix, size, options.seed)?;
            greedy_select_with(&subset, layout, options.params, &constant, matrix.n())
        }
        Some(size) if size > matrix.n() => Err(GdError::SubsetSize { size, n: matrix.n() }),
        _ => greedy_select_with(matrix, layout, options.params, &constant, matrix.n()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> (IntegerMatrix, ChunkLayout) {
        let rows = vec![
            0b1010_0000u64,
            0b1110_0010,
            0b1011_0110,
            0b1111_1000,
            0b1110_0010,
            0b1100_0000,
            0b1111_1110,
        ];
        (
            IntegerMatrix::from_columns(vec![8], vec![rows]).unwrap(),
            ChunkLayout::new(vec![8]).unwrap(),
        )
    }

    #[test]
    fn size_of_fixture_configuration() {
        // n=7, n_b=3, l_b=4, l_d=4: l_bc=3, l_id=2 -> 3*7 + 7*6
        assert_eq!(compressed_size(7, 3, 4, 4, 0), 63);
        assert_eq!(compressed_size(7, 1, 8, 0, 0), 8 + 3);
        assert_eq!(compressed_size(1, 1, 8, 0, 5), 13);
    }

    #[test]
    fn max_deviation_update() {
        assert_eq!(update_max_deviation(30, 16).unwrap(), 14);
        assert_eq!(update_max_deviation(1, 1).unwrap(), 0);
        assert!(update_max_deviation(14, 16).is_err());
        assert!(update_max_deviation(30, 6).is_err());
    }

    #[test]
    fn fixture_max_deviation_is_thirty() {
        let layout = ChunkLayout::new(vec![8]).unwrap();
        let base = BitSet::from_indices(8, [0, 1, 2, 7]).unwrap();
        assert_eq!(MaxDeviation::for_bits(&layout, &base).current, vec![30]);
    }

    #[test]
    fn cost_balancing() {
        assert_eq!(cost(1000, 7, 9, 0.0), 1000.0);
        assert_eq!(cost(1000, 1, 2, 0.02), 995.0);
        assert_eq!(cost(1000, 4, 4, 0.02), 980.0);
        assert_eq!(cost(1000, 0, 0, 0.02), 1000.0);
    }

    #[test]
    fn params_are_validated() {
        let (m, layout) = fixture();
        for params in [
            GreedyParams {
                lambda: 1.0,
                alpha: 0.1,
            },
            GreedyParams {
                lambda: -0.1,
                alpha: 0.1,
            },
            GreedyParams {
                lambda: 0.02,
                alpha: 0.0,
            },
        ] {
            assert!(greedy_select(&m, &layout, params).is_err());
        }
    }

    #[test]
    fn fixture_trace_reaches_level_four_at_63_bits() {
        let (m, layout) = fixture();
        let sel = greedy_select(
            &m,
            &layout,
            GreedyParams {
                lambda: 0.0,
                alpha: 1e9,
            },
        )
        .unwrap();
        assert_eq!(sel.trace.constant_bits, vec![0, 7]);
        let chosen: Vec<usize> = sel.trace.steps.iter().filter_map(|s| s.chosen).collect();
        assert_eq!(&chosen[..3], &[1, 2, 3]);
        // Second iteration adds bit 3 (1-indexed) giving B = {1, 2, 3, 8}.
        let step = &sel.trace.steps[1];
        assert_eq!(step.candidates.len(), 1);
        assert_eq!(step.candidates[0].bit, 2);
        assert_eq!(step.candidates[0].n_b, 3);
        assert_eq!(step.candidates[0].size, 63);
        assert_eq!(step.candidates[0].cost, 63.0);
        // B = {1, 2, 8} is cheaper (54 bits) and is the returned optimum.
        assert_eq!(sel.trace.steps[0].candidates[0].size, 54);
        assert_eq!(sel.config.base_bits.iter().collect::<Vec<_>>(), vec![0, 1, 7]);
        assert_eq!(sel.n_b, 2);
    }

    #[test]
    fn all_constant_data_has_no_iterations() {
        let m = IntegerMatrix::from_columns(vec![8, 16], vec![vec![5; 4], vec![9; 4]]).unwrap();
        let layout = ChunkLayout::new(vec![8, 16]).unwrap();
        let sel = greedy_select(&m, &layout, GreedyParams::default()).unwrap();
        assert!(sel.trace.steps.is_empty());
        assert_eq!(sel.config.l_b(), 24);
        assert_eq!(sel.n_b, 1);
        assert_eq!(sel.trace.constant_columns, vec![0, 1]);
    }

    #[test]
    fn ties_go_to_the_lowest_column() {
        // Two identical columns: every candidate pair has the same cost.
        let col: Vec<u64> = (0..64).map(|i| (i * 37) % 256).collect();
        let m = IntegerMatrix::from_columns(vec![8, 8], vec![col.clone(), col]).unwrap();
        let layout = ChunkLayout::new(vec![8, 8]).unwrap();
        let sel = greedy_select(
            &m,
            &layout,
            GreedyParams {
                lambda: 0.0,
                alpha: 1e9,
            },
        )
        .unwrap();
        let first = &sel.trace.steps[0];
        assert_eq!(first.candidates[0].cost, first.candidates[1].cost);
        assert_eq!(first.chosen, Some(first.candidates[0].bit));
    }

    #[test]
    fn early_termination_respects_alpha() {
        let values: Vec<u64> = (0..500u64).map(|i| (i * 2_654_435_761) % 65_536).collect();
        let m = IntegerMatrix::from_columns(vec![16], vec![values]).unwrap();
        let layout = ChunkLayout::new(vec![16]).unwrap();
        let sel = greedy_select(
            &m,
            &layout,
            GreedyParams {
                lambda: 0.02,
                alpha: 0.1,
            },
        )
        .unwrap();
        if sel.trace.early_termination {
            let last = sel.trace.steps.last().unwrap();
            assert!(last.chosen.is_none());
            let loc = last.candidates.iter().map(|c| c.cost).fold(f64::INFINITY, f64::min);
            assert!(loc > 1.1 * last.best_cost);
        }
        assert!(sel.trace.steps.len() <= 16);
    }

    #[test]
    fn subset_of_everything_matches_full_run() {
        let values: Vec<u64> = (0..300u64).map(|i| (i * i * 31 + 7) % 4096).collect();
        let m = IntegerMatrix::from_columns(vec![12], vec![values]).unwrap();
        let layout = ChunkLayout::new(vec![12]).unwrap();
        let full = configure_matrix(&m, &layout, &ConfigureOptions::default()).unwrap();
        let same = configure_matrix(
            &m,
            &layout,
            &ConfigureOptions {
                subset_size: Some(300),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(full, same);
    }

    #[test]
    fn full_data_constant_bits_survive_subsetting() {
        // Bit place 11 is set only in the last row; a subset that misses it
        // would otherwise treat that bit as constant.
        let mut values: Vec<u64> = (0..400u64).map(|i| i % 16).collect();
        values.push(1 << 11);
        let m = IntegerMatrix::from_columns(vec![12], vec![values]).unwrap();
        let layout = ChunkLayout::new(vec![12]).unwrap();
        let options = ConfigureOptions {
            subset_size: Some(20),
            seed: 3,
            ..Default::default()
        };
        let rows = crate::ingest::subset_rows(401, 20, 3).unwrap();
        assert!(!rows.contains(&400));
        let sel = configure_matrix(&m, &layout, &options).unwrap();
        assert!(!sel.trace.constant_bits.contains(&0));
        // Whatever was chosen is still an MSB prefix of the varying bits.
        let bits: Vec<usize> = sel
            .config
            .base_bits
            .iter()
            .filter(|b| !sel.trace.constant_bits.contains(b))
            .collect();
        let varying: Vec<usize> = (0..12).filter(|b| !sel.trace.constant_bits.contains(b)).collect();
        assert_eq!(bits, varying[..bits.len()].to_vec());
    }
}
