//! Sparse causal compression of paired time series.
//!
//! Given the joint (copula) correlation of two series `Xⁿ` and `Yⁿ`, the
//! crate finds sparse noisy projections of X that preserve directed
//! information towards or from Y. From their solution paths it derives a
//! causal segmentation of X's time points and a causal bipartite graph
//! between the time points of both series.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); the
//! `*64` aliases below fix the usual double-precision choice.

// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod copula;
pub mod error;
pub mod gaussian_info;
pub mod linalg;
pub mod report;
pub mod scalar;
pub mod solver;
pub mod synth;
pub mod tasks;

pub use copula::{Estimator, SamplePanel};
pub use error::{Error, Result};
pub use gaussian_info::{CovarianceModel, Direction, IndexSet, MiDecomposition, ObjectiveKind};
pub use linalg::Matrix;
pub use scalar::Real;
pub use solver::{
    GradientMode, InformationScores, NullSettings, SolutionPath, SolverConfig, SparsityWeights, Termination,
};
pub use synth::LinkSpec;
pub use tasks::{BipartiteCausalGraph, CouplingRule, Segmentation};

/// Library version, echoed in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type Matrix64 = Matrix<f64>;
pub type CovarianceModel64 = CovarianceModel<f64>;
pub type CovarianceModel32 = CovarianceModel<f32>;
pub type SamplePanel64 = SamplePanel<f64>;
pub type SparsityWeights64 = SparsityWeights<f64>;
pub type SolverConfig64 = SolverConfig<f64>;
pub type SolutionPath64 = SolutionPath<f64>;
pub type Segmentation64 = Segmentation<f64>;
pub type BipartiteCausalGraph64 = BipartiteCausalGraph<f64>;
