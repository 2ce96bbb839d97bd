//! Lossless generalized-deduplication compression for numeric tables.
//!
//! Each row becomes one bit chunk. A greedy search picks which chunk bits form
//! the deduplicated *base*, the rest are stored verbatim as the *deviation*.
//! Bases keep the value order of the data, so k-means can run directly on
//! the bases weighted by their counts.
//!
//! ```
//! use gdkit::codec::{compress, decompress};
//! use gdkit::configurator::{configure, ConfigureOptions};
//! use gdkit::ingest::{read_csv, CsvOptions};
//!
//! let csv = "t,v\n0.39,12\n37.83,12\n98.92,13\n";
//! let table = read_csv(csv.as_bytes(), &CsvOptions::default()).unwrap().table;
//! let c = configure(&table, &ConfigureOptions::default()).unwrap();
//! let packed = compress(&c.matrix, &c.layout, &c.plan, c.config()).unwrap();
//! assert!(decompress(&packed).unwrap().bit_eq(&table));
//! ```

pub mod analytics;
pub mod basetree;
pub mod bits;
pub mod cli;
pub mod codec;
pub mod configurator;
pub mod error;
pub mod ingest;
pub mod scalar;
pub mod synth;

pub use error::{GdError, Result};

pub type PointSet32 = analytics::PointSet<f32>;
pub type PointSet64 = analytics::PointSet<f64>;
pub type Clustering32 = analytics::ClusteringResult<f32>;
pub type Clustering64 = analytics::ClusteringResult<f64>;
