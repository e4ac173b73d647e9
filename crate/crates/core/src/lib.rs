//! Dimensionality reduction that preserves clusters and distance correlations.
//!
//! The method embeds a dataset by jointly optimizing two objectives:
//!
//! - a global correlation objective: for every point, distances to a fixed
//!   set of sampled reference points should correlate (Pearson, and a soft
//!   Spearman built on differentiable ranks) between the input space and
//!   the embedding;
//! - a cluster-observability objective: linear classifiers trained jointly
//!   with the embedding must recover k-means memberships computed on the
//!   raw data, for several cluster counts at once.
//!
//! Around the optimizer the crate ships a refinement mode for externally
//! produced embeddings, a PCA baseline, synthetic datasets, and a suite of
//! embedding-quality metrics (trustworthiness, continuity, MRRE, and global
//! distance correlations).
//!
//! Data-parallel loops run on rayon when the `parallel` feature is enabled
//! (the default). All reductions happen in a fixed order, so results do not
//! depend on the number of worker threads.

pub mod cli;
pub mod clustering;
pub mod data;
pub mod datasets;
pub mod error;
pub mod losses;
pub mod metrics;
pub mod par;
pub mod pca;
pub mod plot;
pub mod softrank;
pub mod trainer;

pub use clustering::{kmeans_fit, predict_cluster, ClusterResult};
pub use data::{load_matrix, save_embedding, standardize, DataMatrix, Embedding, InputFormat, RunSeed};
pub use error::{Error, Result};
pub use losses::{ClassifierHead, LossValueGrad, ReferenceSet};
pub use metrics::{evaluate, MetricReport};
pub use pca::{pca_fit_transform, PcaModel};
pub use trainer::{fit_pcc, init_random_normal, refine_from_init, FitReport, PccConfig, RefineConfig};
