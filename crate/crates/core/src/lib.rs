//! Kernel-embedding distances between structural causal models.
//!
//! Given observational samples from two environments and a known causal DAG for
//! each, the crate estimates interventional kernel mean embeddings from the
//! data and compares them in the RKHS of a Gaussian kernel. The per-pair
//! discrepancies (MIMD) are summed into the structural causal model distance
//! ([`embedding::Estimator::scmd`]), restricted to one target
//! ([`embedding::Estimator::p_scmd`]) or averaged over quantile interventions
//! ([`embedding::Estimator::e_scmd`]). Baselines (empirical MMD and SID) and the
//! closed-form Gaussian values used as oracles live alongside.
//!
//! The crate is `no_std` + `alloc`. The default `std` feature only turns on
//! runtime SIMD dispatch inside the dense Cholesky backend.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod data;
pub mod distance;
pub mod embedding;
pub mod error;
pub mod graph;
pub mod kernel;
pub mod linalg;
pub mod oracle;
pub mod synth;

pub use data::Dataset;

pub use distance::{DistanceKind, DistanceReport, Environment, InterventionOrigin, InterventionSpec};
pub use embedding::{EmbeddingCase, Estimator, EstimatorConfig, RidgeScaling, WeightVector};
pub use error::{Error, Result};
pub use graph::Dag;
pub use kernel::{GramMatrix, KernelConfig};
