//! Dual-track DDoS detection experiments on SDN flow records.
//!
//! A flow table is split once into stratified train/test partitions. The
//! imbalanced track trains five classifiers on the raw training partition;
//! the balanced track first applies SMOTE and LOF outlier removal. Both
//! tracks standardize with training statistics, tune by stratified k-fold
//! grid search and report accuracy, precision, recall, F1, ROC AUC, Cohen's
//! kappa, MCC and the Brier score on the shared test partition.

// numeric kernels index several parallel buffers with one counter
#![allow(clippy::needless_range_loop)]

pub mod classifiers;
pub mod config;
pub mod dataset;
pub mod error;
pub mod experiment;
pub mod matrix;
pub mod metrics;
pub mod neighbors;
pub mod preprocess;
pub mod synth;

pub use classifiers::{predict, train, ModelArtifact, ModelKind, ModelSpec, PredictionSet, TrainedModel};
pub use dataset::{load_csv, stratified_split, Dataset, LabelDistribution, SplitPair, BENIGN, DDOS};
pub use error::{Error, Result};
pub use experiment::{run_full_experiment, run_track, ExperimentConfig, ExperimentReport, Track};
pub use matrix::Matrix;
pub use metrics::{evaluate, MetricsReport};
