//! Clustering agreement and quality scores.

use std::collections::HashMap;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::function::factorial::ln_factorial;

use super::points::{squared_distance, PointSet};
use crate::error::{GdError, Result};
use crate::scalar::Real;

pub const DEFAULT_SILHOUETTE_SAMPLE: usize = 10_000;

/// Relabels to dense 0-based classes in order of first appearance.
fn dense_labels(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut map = HashMap::new();
    let dense = labels
        .iter()
        .map(|l| {
            let next = map.len();
            *map.entry(*l).or_insert(next)
        })
        .collect();
    (dense, map.len())
}

struct Contingency {
    n: usize,
    rows: Vec<u64>,
    cols: Vec<u64>,
    cells: HashMap<(usize, usize), u64>,
}

impl Contingency {
    fn new(a: &[usize], b: &[usize]) -> Self {
        let (a, ka) = dense_labels(a);
        let (b, kb) = dense_labels(b);
        let mut rows = vec![0u64; ka];
        let mut cols = vec![0u64; kb];
        let mut cells = HashMap::new();
        for (&i, &j) in a.iter().zip(&b) {
            rows[i] += 1;
            cols[j] += 1;
            *cells.entry((i, j)).or_insert(0) += 1;
        }
        Contingency {
            n: a.len(),
            rows,
            cols,
            cells,
        }
    }

    /// Identical partitions up to relabeling.
    fn is_bijective(&self) -> bool {
        self.rows.len() == self.cols.len() && self.cells.len() == self.rows.len()
    }
}

fn entropy(counts: &[u64], n: f64) -> f64 {
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

fn mutual_information(t: &Contingency) -> f64 {
    let n = t.n as f64;
    t.cells
        .iter()
        .map(|(&(i, j), &c)| {
            let c = c as f64;
            c / n * (n * c / (t.rows[i] as f64 * t.cols[j] as f64)).ln()
        })
        .sum()
}

/// Expected mutual information of two random partitions with the given
/// marginals under the hypergeometric model.
pub fn expected_mutual_information(rows: &[u64], cols: &[u64], n: u64) -> f64 {
    let nf = n as f64;
    let lf_n = ln_factorial(n);
    rows.par_iter()
        .map(|&a| {
            let mut sum = 0.0;
            for &b in cols {
                let lo = (a + b).saturating_sub(n).max(1);
                let hi = a.min(b);
                let fixed = ln_factorial(a) + ln_factorial(b) + ln_factorial(n - a) + ln_factorial(n - b) - lf_n;
                for nij in lo..=hi {
                    let x = nij as f64;
                    let term = x / nf * (nf * x / (a as f64 * b as f64)).ln();
                    let log_p = fixed
                        - ln_factorial(nij)
                        - ln_factorial(a - nij)
                        - ln_factorial(b - nij)
                        - ln_factorial(n + nij - a - b);
                    sum += term * log_p.exp();
                }
            }
            sum
        })
        .sum()
}

/// Adjusted mutual information with max-normalization.
pub fn adjusted_mutual_information(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(GdError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(GdError::EmptyInput);
    }
    let t = Contingency::new(a, b);
    if t.is_bijective() {
        return Ok(1.0);
    }
    let n = t.n as f64;
    let mi = mutual_information(&t);
    let emi = expected_mutual_information(&t.rows, &t.cols, t.n as u64);
    let h = entropy(&t.rows, n).max(entropy(&t.cols, n));
    let denom = h - emi;
    if denom.abs() < f64::EPSILON {
        return Ok(0.0);
    }
    Ok((mi - emi) / denom)
}

/// Per-point silhouette values; points alone in their cluster score 0.
pub fn silhouette_samples<T: Real>(points: &PointSet<T>, labels: &[usize]) -> Result<Vec<f64>> {
    if points.len() != labels.len() {
        return Err(GdError::LengthMismatch(points.len(), labels.len()));
    }
    if points.is_empty() {
        return Err(GdError::EmptyInput);
    }
    let (labels, k) = dense_labels(labels);
    if k < 2 {
        return Err(GdError::SingleCluster(k));
    }
    let mut sizes = vec![0usize; k];
    for &l in &labels {
        sizes[l] += 1;
    }
    Ok((0..points.len())
        .into_par_iter()
        .map(|i| {
            let own = labels[i];
            if sizes[own] == 1 {
                return 0.0;
            }
            let mut sums = vec![0.0f64; k];
            for j in 0..points.len() {
                sums[labels[j]] += squared_distance(points.point(i), points.point(j)).as_f64().sqrt();
            }
            let a = sums[own] / (sizes[own] - 1) as f64;
            let b = (0..k)
                .filter(|&c| c != own)
                .map(|c| sums[c] / sizes[c] as f64)
                .fold(f64::INFINITY, f64::min);
            let m = a.max(b);
            if m == 0.0 {
                0.0
            } else {
                (b - a) / m
            }
        })
        .collect())
}

/// Mean silhouette coefficient over a seeded uniform sample of at most
/// `sample_size` points, computed within the sample.
pub fn silhouette<T: Real>(points: &PointSet<T>, labels: &[usize], sample_size: usize, seed: u64) -> Result<f64> {
    if points.len() != labels.len() {
        return Err(GdError::LengthMismatch(points.len(), labels.len()));
    }
    let values = if sample_size > 0 && sample_size < points.len() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = index::sample(&mut rng, points.len(), sample_size).into_vec();
        rows.sort_unstable();
        let sub_labels: Vec<usize> = rows.iter().map(|&r| labels[r]).collect();
        silhouette_samples(&points.select(&rows), &sub_labels)?
    } else {
        silhouette_samples(points, labels)?
    };
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}
