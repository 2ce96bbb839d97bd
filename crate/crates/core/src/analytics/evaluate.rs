//! Clustering on bases versus clustering on the uncompressed data.

use std::time::Instant;

use log::warn;
use serde::{Deserialize, Serialize};

use super::kmeans::{assign, weighted_kmeans, ClusteringResult, KMeansOptions};
use super::metrics::{adjusted_mutual_information, silhouette, DEFAULT_SILHOUETTE_SAMPLE};
use super::points::PointSet;
use crate::codec::{compress, CompressedDataset};
use crate::configurator::GdConfig;
use crate::error::{GdError, Result};
use crate::ingest::ColumnKind;
use crate::scalar::Real;

/// Value used for the deviation bits of a base.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RepresentativeMode {
    /// All deviation bits zero: the lower corner of the base cell.
    #[default]
    ZeroFill,
    /// Half the maximum deviation added per column.
    Midpoint,
}

/// One point per base in original units, weighted by the base count.
pub fn base_representatives<T: Real>(
    compressed: &CompressedDataset,
    mode: RepresentativeMode,
) -> Result<(PointSet<T>, Vec<T>)> {
    let plan = compressed.plan();
    if plan.columns.iter().any(|c| c.kind == ColumnKind::RawFloatBits) {
        warn!("raw float columns: base representatives are built from zero-filled bit patterns");
    }
    let split = compressed.split();
    let d = compressed.layout().d();
    let mut data = Vec::with_capacity(compressed.n_b() * d);
    for id in 0..compressed.n_b() {
        for (c, t) in compressed.base_values(id).into_iter().enumerate() {
            let spec = &plan.columns[c];
            let v = match mode {
                RepresentativeMode::ZeroFill => spec.decode_real(t),
                RepresentativeMode::Midpoint if split.dev_mask(c) == 0 => spec.decode_real(t),
                RepresentativeMode::Midpoint => spec.decode_real_at(t as f64 + split.dev_mask(c) as f64 / 2.0),
            };
            data.push(T::from_f64_lossy(v));
        }
    }
    let weights = compressed
        .counts()
        .iter()
        .map(|&w| T::from_f64_lossy(w as f64))
        .collect();
    Ok((PointSet::new(d, data)?, weights))
}

/// Every sample in original units.
pub fn original_points<T: Real>(compressed: &CompressedDataset) -> Result<PointSet<T>> {
    let matrix = compressed.to_matrix()?;
    let plan = compressed.plan();
    let d = matrix.d();
    let mut data = Vec::with_capacity(matrix.n() * d);
    for r in 0..matrix.n() {
        for (c, spec) in plan.columns.iter().enumerate() {
            data.push(T::from_f64_lossy(spec.decode_real(matrix.get(r, c))));
        }
    }
    PointSet::new(d, data)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterOptions {
    pub k: usize,
    pub n_init: usize,
    pub max_iter: usize,
    pub repeats: usize,
    pub seed: u64,
    /// Points sampled for the silhouette; 0 uses every point.
    pub silhouette_sample: usize,
    pub representative: RepresentativeMode,
    /// Scale every column to zero mean and unit variance first.
    pub standardize: bool,
}

impl Default for ClusterOptions {
    fn default() -> Self {
        ClusterOptions {
            k: 5,
            n_init: 100,
            max_iter: 300,
            repeats: 10,
            seed: 0,
            silhouette_sample: DEFAULT_SILHOUETTE_SAMPLE,
            representative: RepresentativeMode::ZeroFill,
            standardize: false,
        }
    }
}

impl ClusterOptions {
    pub fn seeds(&self) -> Vec<u64> {
        (0..self.repeats as u64).map(|r| self.seed.wrapping_add(r)).collect()
    }

    fn kmeans(&self) -> KMeansOptions {
        KMeansOptions {
            k: self.k,
            n_init: self.n_init,
            max_iter: self.max_iter,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepeatResult {
    pub seed: u64,
    pub sse_compressed: f64,
    pub sse_raw: f64,
    pub ar: f64,
    pub ami: f64,
    pub silhouette: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterEvaluation {
    /// Medians over repeats.
    pub ar: f64,
    pub ami: f64,
    pub silhouette: f64,
    pub repeats: Vec<RepeatResult>,
    pub compressed_seconds: f64,
    pub raw_seconds: f64,
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.is_empty() {
        f64::NAN
    } else if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

fn standardizer<T: Real>(points: &PointSet<T>) -> impl Fn(&PointSet<T>) -> PointSet<T> {
    let moments = points.column_moments();
    move |p: &PointSet<T>| {
        p.map(|c, v| {
            let (mean, sd) = moments[c];
            let sd = if sd > 0.0 { sd } else { 1.0 };
            T::from_f64_lossy((v.as_f64() - mean) / sd)
        })
    }
}

/// Clusters the weighted bases and, with the same seeds, the exact-duplicate
/// reduced raw data; both center sets are then applied to the original
/// samples. AR is the ratio of the resulting SSEs.
pub fn evaluate_clustering<T: Real>(
    compressed: &CompressedDataset,
    options: &ClusterOptions,
) -> Result<ClusterEvaluation> {
    if options.repeats == 0 {
        return Err(GdError::InvalidParameter("repeats must be positive".into()));
    }
    let exact = compress(
        &compressed.to_matrix()?,
        compressed.layout(),
        compressed.plan(),
        &GdConfig::all_bits(compressed.l_c()),
    )?;
    let mut originals = original_points::<T>(compressed)?;
    let (mut reps, rep_w) = base_representatives::<T>(compressed, options.representative)?;
    let (mut distinct, distinct_w) = base_representatives::<T>(&exact, RepresentativeMode::ZeroFill)?;
    if options.standardize {
        let scale = standardizer(&originals);
        reps = scale(&reps);
        distinct = scale(&distinct);
        originals = scale(&originals);
    }

    let km = options.kmeans();
    let mut repeats = Vec::with_capacity(options.repeats);
    let (mut compressed_seconds, mut raw_seconds) = (0.0, 0.0);
    for seed in options.seeds() {
        let started = Instant::now();
        let on_bases: ClusteringResult<T> = weighted_kmeans(&reps, &rep_w, &km, seed)?;
        let (labels_c, sse_c) = assign(&originals, None, &on_bases.centers);
        compressed_seconds += started.elapsed().as_secs_f64();

        let started = Instant::now();
        let on_raw = weighted_kmeans(&distinct, &distinct_w, &km, seed)?;
        let (labels_r, sse_r) = assign(&originals, None, &on_raw.centers);
        raw_seconds += started.elapsed().as_secs_f64();

        let (sse_c, sse_r) = (sse_c.as_f64(), sse_r.as_f64());
        let ar = if sse_c == sse_r { 1.0 } else { sse_c / sse_r };
        let sil = match silhouette(&originals, &labels_c, options.silhouette_sample, seed) {
            Ok(s) => s,
            Err(GdError::SingleCluster(_)) => f64::NAN,
            Err(e) => return Err(e),
        };
        repeats.push(RepeatResult {
            seed,
            sse_compressed: sse_c,
            sse_raw: sse_r,
            ar,
            ami: adjusted_mutual_information(&labels_c, &labels_r)?,
            silhouette: sil,
        });
    }
    let pick = |f: fn(&RepeatResult) -> f64| median(&repeats.iter().map(f).filter(|v| !v.is_nan()).collect::<Vec<_>>());
    Ok(ClusterEvaluation {
        ar: pick(|r| r.ar),
        ami: pick(|r| r.ami),
        silhouette: pick(|r| r.silhouette),
        repeats: repeats.clone(),
        compressed_seconds,
        raw_seconds,
    })
}

/// Median approximation ratio over the configured repeats.
pub fn approximation_ratio<T: Real>(compressed: &CompressedDataset, options: &ClusterOptions) -> Result<f64> {
    Ok(evaluate_clustering::<T>(compressed, options)?.ar)
}
