//! k-means on weighted bases and the metrics comparing it with clustering
//! the uncompressed data.

mod evaluate;
mod kmeans;
mod metrics;
mod points;
mod report;

pub use evaluate::{
    approximation_ratio, base_representatives, evaluate_clustering, median, original_points, ClusterEvaluation,
    ClusterOptions, RepeatResult, RepresentativeMode,
};
pub use kmeans::{assign, kmeans_plus_plus, lloyd, weighted_kmeans, ClusteringResult, KMeansOptions};
pub use metrics::{
    adjusted_mutual_information, expected_mutual_information, silhouette, silhouette_samples, DEFAULT_SILHOUETTE_SAMPLE,
};
pub use points::PointSet;
pub use report::{MetricsReport, ReportFormat, Timings};
