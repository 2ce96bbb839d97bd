//! Weighted Lloyd k-means with weighted k-means++ seeding.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::points::{squared_distance, PointSet};
use crate::error::{GdError, Result};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KMeansOptions {
    pub k: usize,
    /// Independent seeded initializations; the lowest-SSE run wins.
    pub n_init: usize,
    pub max_iter: usize,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        KMeansOptions {
            k: 5,
            n_init: 100,
            max_iter: 300,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusteringResult<T> {
    pub centers: PointSet<T>,
    pub labels: Vec<usize>,
    /// Weighted sum of squared distances to the assigned centers.
    pub sse: T,
    /// SSE after each assignment step, starting with the initial centers.
    pub sse_history: Vec<T>,
}

/// Nearest center per point (lowest index on ties) and the weighted SSE.
pub fn assign<T: Real>(points: &PointSet<T>, weights: Option<&[T]>, centers: &PointSet<T>) -> (Vec<usize>, T) {
    let (labels, costs): (Vec<usize>, Vec<T>) = (0..points.len())
        .into_par_iter()
        .map(|i| {
            let p = points.point(i);
            let mut best = (0usize, T::infinity());
            for c in 0..centers.len() {
                let d = squared_distance(p, centers.point(c));
                if d < best.1 {
                    best = (c, d);
                }
            }
            let w = weights.map_or(T::one(), |w| w[i]);
            (best.0, best.1 * w)
        })
        .unzip();
    (labels, costs.into_iter().sum())
}

fn update_centers<T: Real>(
    points: &PointSet<T>,
    weights: &[T],
    labels: &[usize],
    previous: &PointSet<T>,
) -> PointSet<T> {
    let (k, dim) = (previous.len(), points.dim());
    let mut sums = vec![T::zero(); k * dim];
    let mut mass = vec![T::zero(); k];
    for (i, &l) in labels.iter().enumerate() {
        let w = weights[i];
        mass[l] = mass[l] + w;
        for (s, &x) in sums[l * dim..(l + 1) * dim].iter_mut().zip(points.point(i)) {
            *s = *s + w * x;
        }
    }
    let mut data = Vec::with_capacity(k * dim);
    for c in 0..k {
        if mass[c] > T::zero() {
            data.extend(sums[c * dim..(c + 1) * dim].iter().map(|&s| s / mass[c]));
        } else {
            // Empty cluster keeps its center.
            data.extend_from_slice(previous.point(c));
        }
    }
    PointSet::new(dim, data).expect("dimensions preserved")
}

fn check_inputs<T: Real>(points: &PointSet<T>, weights: &[T]) -> Result<()> {
    if points.is_empty() {
        return Err(GdError::EmptyInput);
    }
    if weights.len() != points.len() {
        return Err(GdError::LengthMismatch(weights.len(), points.len()));
    }
    if weights.iter().any(|&w| w.is_nan() || w <= T::zero()) {
        return Err(GdError::InvalidParameter("weights must be positive".into()));
    }
    Ok(())
}

/// Lloyd iterations from the given initial centers until assignments stop
/// changing or `max_iter` updates have been made.
pub fn lloyd<T: Real>(
    points: &PointSet<T>,
    weights: &[T],
    initial: PointSet<T>,
    max_iter: usize,
) -> Result<ClusteringResult<T>> {
    check_inputs(points, weights)?;
    if initial.dim() != points.dim() || initial.is_empty() {
        return Err(GdError::LengthMismatch(initial.dim(), points.dim()));
    }
    let mut centers = initial;
    let (mut labels, mut sse) = assign(points, Some(weights), &centers);
    let mut history = vec![sse];
    for _ in 0..max_iter {
        let next = update_centers(points, weights, &labels, &centers);
        let (next_labels, next_sse) = assign(points, Some(weights), &next);
        let slack = T::from_f64_lossy(1e-12) * (sse.abs() + T::one());
        debug_assert!(next_sse <= sse + slack, "SSE increased from {sse:?} to {next_sse:?}");
        let changed = next_labels != labels;
        centers = next;
        labels = next_labels;
        sse = next_sse;
        history.push(sse);
        if !changed {
            break;
        }
    }
    Ok(ClusteringResult {
        centers,
        labels,
        sse,
        sse_history: history,
    })
}

/// Draws an index with probability proportional to `mass`.
fn draw(mass: &[f64], rng: &mut impl Rng) -> usize {
    let total: f64 = mass.iter().sum();
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (i, &m) in mass.iter().enumerate() {
        acc += m;
        if target < acc && m > 0.0 {
            return i;
        }
    }
    mass.iter().rposition(|&m| m > 0.0).unwrap_or(0)
}

/// Weighted k-means++: the first center is drawn proportionally to weight,
/// each further one proportionally to weight times squared distance to the
/// nearest chosen center.
pub fn kmeans_plus_plus<T: Real>(points: &PointSet<T>, weights: &[T], k: usize, rng: &mut impl Rng) -> PointSet<T> {
    let n = points.len();
    let w: Vec<f64> = weights.iter().map(|x| x.as_f64()).collect();
    let mut chosen = vec![draw(&w, rng)];
    let mut nearest: Vec<f64> = (0..n)
        .map(|i| squared_distance(points.point(i), points.point(chosen[0])).as_f64())
        .collect();
    while chosen.len() < k {
        let mass: Vec<f64> = nearest.iter().zip(&w).map(|(d, w)| d * w).collect();
        let next = draw(&mass, rng);
        chosen.push(next);
        for (i, d) in nearest.iter_mut().enumerate() {
            *d = d.min(squared_distance(points.point(i), points.point(next)).as_f64());
        }
    }
    points.select(&chosen)
}

fn init_seed(seed: u64, init: usize) -> u64 {
    seed ^ (init as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// Best of `n_init` seeded runs by weighted SSE; deterministic for a seed.
pub fn weighted_kmeans<T: Real>(
    points: &PointSet<T>,
    weights: &[T],
    options: &KMeansOptions,
    seed: u64,
) -> Result<ClusteringResult<T>> {
    check_inputs(points, weights)?;
    if options.k == 0 || options.n_init == 0 {
        return Err(GdError::InvalidParameter("k and n_init must be positive".into()));
    }
    let distinct = points.distinct_up_to(options.k);
    if distinct < options.k {
        return Err(GdError::TooFewPoints { k: options.k, distinct });
    }
    let runs = (0..options.n_init)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(init_seed(seed, i));
            let init = kmeans_plus_plus(points, weights, options.k, &mut rng);
            lloyd(points, weights, init, options.max_iter)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(runs
        .into_iter()
        .reduce(|best, r| if r.sse < best.sse { r } else { best })
        .expect("n_init > 0"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn line(values: &[f64]) -> PointSet<f64> {
        PointSet::new(1, values.to_vec()).unwrap()
    }

    #[test]
    fn single_weighted_cluster() {
        let pts = line(&[0.0, 10.0]);
        let r = weighted_kmeans(
            &pts,
            &[2.0, 1.0],
            &KMeansOptions {
                k: 1,
                n_init: 3,
                max_iter: 10,
            },
            1,
        )
        .unwrap();
        assert_relative_eq!(r.centers.point(0)[0], 10.0 / 3.0, epsilon = 1e-12);
        let expected = 2.0 * (10.0f64 / 3.0).powi(2) + (20.0f64 / 3.0).powi(2);
        assert_relative_eq!(r.sse, expected, epsilon = 1e-9);
        assert_relative_eq!(r.sse, 66.666_666_666_666_67, epsilon = 1e-9);
    }

    #[test]
    fn k_equal_to_distinct_points_has_zero_sse() {
        let pts = line(&[1.0, 1.0, 4.0, 9.0]);
        let r = weighted_kmeans(
            &pts,
            &[1.0; 4],
            &KMeansOptions {
                k: 3,
                n_init: 5,
                max_iter: 50,
            },
            9,
        )
        .unwrap();
        assert_eq!(r.sse, 0.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let pts = line(&[1.0, 1.0]);
        let opts = KMeansOptions {
            k: 2,
            n_init: 1,
            max_iter: 5,
        };
        assert!(matches!(
            weighted_kmeans(&pts, &[1.0, 1.0], &opts, 0),
            Err(GdError::TooFewPoints { k: 2, distinct: 1 })
        ));
        assert!(weighted_kmeans(&pts, &[1.0], &opts, 0).is_err());
        assert!(weighted_kmeans(&pts, &[1.0, 0.0], &KMeansOptions { k: 1, ..opts }, 0).is_err());
        let empty = PointSet::<f64>::new(1, vec![]).unwrap();
        assert!(matches!(
            weighted_kmeans(&empty, &[], &opts, 0),
            Err(GdError::EmptyInput)
        ));
    }

    #[test]
    fn unit_weights_match_unweighted_assignment() {
        let pts = line(&[0.0, 0.5, 1.0, 10.0, 10.5, 11.0]);
        let r = weighted_kmeans(
            &pts,
            &[1.0; 6],
            &KMeansOptions {
                k: 2,
                n_init: 4,
                max_iter: 50,
            },
            3,
        )
        .unwrap();
        let (labels, sse) = assign(&pts, None, &r.centers);
        assert_eq!(labels, r.labels);
        assert_relative_eq!(sse, r.sse, epsilon = 1e-12);
        assert_relative_eq!(r.sse, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let pts = PointSet::new(2, (0..200).map(|i| ((i * 7919) % 101) as f64).collect()).unwrap();
        let w = vec![1.0; 100];
        let opts = KMeansOptions {
            k: 4,
            n_init: 8,
            max_iter: 100,
        };
        assert_eq!(
            weighted_kmeans(&pts, &w, &opts, 5).unwrap(),
            weighted_kmeans(&pts, &w, &opts, 5).unwrap()
        );
    }

    #[test]
    fn sse_never_increases() {
        let pts = PointSet::new(3, (0..900).map(|i| ((i * 104_729) % 997) as f32 / 10.0).collect()).unwrap();
        let w: Vec<f32> = (0..300).map(|i| 1.0 + (i % 4) as f32).collect();
        let r = weighted_kmeans(
            &pts,
            &w,
            &KMeansOptions {
                k: 6,
                n_init: 4,
                max_iter: 100,
            },
            11,
        )
        .unwrap();
        for pair in r.sse_history.windows(2) {
            assert!(pair[1] <= pair[0] * (1.0 + 1e-5), "{:?}", r.sse_history);
        }
    }
}
