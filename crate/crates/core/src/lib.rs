//! BGP update-stream anomaly detection.
//!
//! The crate covers the full path from raw collector data to cross-event
//! model comparison: MRT/event-log ingest, per-bin routing-dynamics
//! features, rolling-correlation feature generation, 2-sigma feature
//! selection, a one-class nu-SVM novelty detector trained on normal
//! traffic, and accuracy/distance-matrix evaluation with k-means grouping
//! of events.
//!
//! All numeric stages are generic over the [`num::Scalar`] floating type;
//! the aliases below fix `f64` for the file formats and the CLI.

pub mod error;
pub mod eval;
pub mod event;
pub mod features;
pub mod matrix;
pub mod mrt;
pub mod num;
pub mod pipeline;
pub mod selector;
pub mod stats;
pub mod svm;
pub mod synth;

pub use error::{Error, Result};

/// Scalar type used by the CLI and the on-disk formats.
pub type Real = f64;

pub type FeatureMatrix = matrix::FeatureMatrix<Real>;
pub type StandardizationParams = stats::StandardizationParams<Real>;
pub type CorrelationFeatureSpec = stats::CorrelationFeatureSpec<Real>;
pub type SelectionReport = selector::SelectionReport<Real>;
pub type FeatureScore = selector::FeatureScore<Real>;
pub type OcsvmModel = svm::OcsvmModel<Real>;
pub type KernelParams = svm::KernelParams<Real>;
pub type TrainConfig = svm::TrainConfig<Real>;
pub type TrainingDiagnostics = svm::TrainingDiagnostics<Real>;
pub type ConfusionOutcome = eval::ConfusionOutcome<Real>;
pub type AccuracyMatrix = eval::AccuracyMatrix<Real>;
pub type DistanceMatrix = eval::DistanceMatrix<Real>;
pub type ClusterResult = eval::ClusterResult<Real>;
pub type KmeansResult = eval::KmeansResult<Real>;
