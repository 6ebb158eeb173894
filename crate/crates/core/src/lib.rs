//! Overlapping community detection in directed multilayer networks with
//! categorical node attributes.
//!
//! The model couples a Poisson factorization of the adjacency tensor with a
//! multinomial model of one categorical covariate through shared mixed
//! membership vectors; a scaling parameter gamma in [0, 1] balances the two
//! likelihood terms. Fitting runs an EM loop with closed-form block updates
//! and random restarts. The crate also ships the synthetic block-model
//! benchmarks, evaluation metrics and cross-validation machinery used to
//! exercise the solver end to end.

pub mod attributes;
pub mod cv;
pub mod error;
pub mod graph;
pub mod mask;
pub mod metrics;
pub mod params;
pub mod solver;
pub mod synth;

pub use attributes::DesignMatrix;
pub use error::{Error, Result};
pub use graph::{Edge, MultilayerGraph, ValidationReport};
pub use mask::HoldoutMask;
pub use params::ModelParams;
pub use solver::{fit, EmConfig, EmEngine, FitResult, RescaleCoefficients};
