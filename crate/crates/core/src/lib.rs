//! Efficient attention: the unique projection of attention matrices onto
//! `Ker([T,1]')^⊥ = Im([T,1])` that restores identifiability of attention
//! weights while preserving model predictions and probability structure.
//!
//! The crate bundles the dense linear-algebra kernels behind the projection
//! ([`linalg`]), the projection operators and identifiability predicates
//! ([`attention`]), a kernel-space adversarial generator ([`adversarial`]),
//! the comparison metrics ([`metrics`]), and a synthetic model harness with
//! three experiment runners ([`harness`]).

pub mod adversarial;
pub mod attention;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod matrix;
pub mod metrics;

pub use adversarial::{complement_attention, generate_adversarial, AdversarialSample};
pub use attention::{
    decompose, effective_attention_brunner, efficient_attention, efficient_attention_unvalidated,
    identifiability, prediction_preserved, project_rows_onto_image, validate_distribution,
    AttentionMatrix, Decomposition, HiddenStates, IdentifiabilityVerdict, Violation, ViolationKind,
};
pub use error::{Error, Result};
pub use harness::{
    forward, run_experiment1, run_experiment2, run_experiment3, synth_model, Dims,
    ExperimentConfig, ExperimentReport, ModelParams, SampleOutcome,
};
pub use linalg::{
    augment_ones, column_space_basis, null_space_basis, project_onto, rank, OrthonormalBasis,
    Tolerance,
};
pub use matrix::Matrix;
pub use metrics::{
    l2_rel, l2_scaled, mean_wasserstein_matrices, pearson_r2, rmse, wasserstein1_predictions,
    wasserstein1_rows, MetricsReport, PredictionVector,
};
