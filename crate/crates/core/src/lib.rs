//! Clusterability of dissimilarity data through min-max matrix powers.
//!
//! Raising a dissimilarity matrix to successive powers under the min-max
//! product (`c[i][j] = min_k max(a[i][k], b[k][j])`) drives it down to its
//! subdominant ultrametric, the largest ultrametric lying entrywise below
//! it. The number of steps this takes, `m(A)`, measures how far the data is
//! from an ultrametric; `n / m(A)` is reported as its clusterability.
//!
//! - [`semiring`]: matrices, the product, powers and [`semiring::stabilize`].
//! - [`ultrametric`]: recognition, the subdominant, an independent
//!   spanning-tree oracle, and the indices.
//! - [`cluster`]: closed spheres, spheric clusterings, distance histograms.
//! - [`data`]: lattice datasets, metrics, CSV files.
//! - [`cli`]: the `ultraclust` command line.

pub mod cli;
pub mod cluster;
pub mod data;
pub mod error;
pub mod semiring;
pub mod ultrametric;
pub mod value;

pub use cluster::{
    closed_sphere, distance_histogram, estimate_num_clusters, is_perfect_clustering,
    radii_from_valleys, spheric_clustering, spheric_clustering_checked, Clustering,
    DistanceHistogram, HistogramMode, ValleyRadii,
};
pub use data::{
    example1_matrix, lattice_generate, load_matrix_csv, load_points_csv, pairwise_matrix,
    save_matrix_csv, LatticeConfig, Metric, PointSet,
};
pub use error::{Error, Result, ValidationError};
pub use semiring::{
    identity, matrix_leq, minmax_product, power, stabilize, stabilize_with, DissimMatrix,
    Execution, Matrix, Ratio, StabilizationResult, Strategy,
};
pub use ultrametric::{
    clusterability, is_ultrametric, minimax_oracle, subdominant, sup_ultrametrics,
    ultrametricity, UltraMatrix, WeightedGraph,
};
pub use value::ExtValue;
