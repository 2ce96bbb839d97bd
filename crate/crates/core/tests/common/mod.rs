#![allow(dead_code)]

use gdkit::ingest::{ColumnData, Table};
use rand::Rng;

/// A column drawn from one of several integer and decimal shapes, including
/// negatives, wide ranges and the odd non-scalable float.
pub fn random_column(rng: &mut impl Rng, n: usize) -> ColumnData {
    match rng.random_range(0..7) {
        0 => {
            let lo = rng.random_range(-1000i64..1000);
            let span = rng.random_range(0i64..300);
            ColumnData::Int {
                bits: 32,
                values: (0..n).map(|_| lo + rng.random_range(0..=span)).collect(),
            }
        }
        1 => ColumnData::Int {
            bits: 32,
            values: (0..n).map(|_| i64::from(rng.random::<i32>())).collect(),
        },
        2 => {
            let centre = rng.random_range(-(1i64 << 50)..(1i64 << 50));
            let span = 1i64 << rng.random_range(0..40);
            ColumnData::Int {
                bits: 64,
                values: (0..n).map(|_| centre + rng.random_range(-span..=span)).collect(),
            }
        }
        3 | 4 => {
            let p = rng.random_range(0..=4);
            let scale = 10f64.powi(p);
            let mut walk = rng.random_range(-5000.0..5000.0f64);
            ColumnData::F32(
                (0..n)
                    .map(|_| {
                        walk += rng.random_range(-3.0..3.0);
                        let v = ((walk * scale).round() / scale) as f32;
                        if rng.random_ratio(1, 500) {
                            -0.0
                        } else {
                            v
                        }
                    })
                    .collect(),
            )
        }
        5 => {
            let p = rng.random_range(0..=8);
            let scale = 10f64.powi(p);
            let base = rng.random_range(-1e6..1e6f64);
            ColumnData::F64(
                (0..n)
                    .map(|_| ((base + rng.random_range(-100.0..100.0)) * scale).round() / scale)
                    .collect(),
            )
        }
        _ => ColumnData::F64(
            (0..n)
                .map(|_| {
                    if rng.random_ratio(1, 50) {
                        f64::NAN
                    } else {
                        rng.random::<f64>() * 10f64.powi(rng.random_range(-30..30))
                    }
                })
                .collect(),
        ),
    }
}

pub fn random_table(rng: &mut impl Rng, max_n: usize, max_d: usize) -> Table {
    let n = rng.random_range(1..=max_n);
    let d = rng.random_range(1..=max_d);
    Table::from_data((0..d).map(|_| random_column(rng, n)).collect()).expect("equal lengths")
}
