//! Square-root nuclear-norm estimators for noisy matrix completion and matrix
//! regression when the noise level is unknown.
//!
//! Both estimators reduce to a one-dimensional spectral problem that is solved in
//! closed form by [`solve_sqrt_shrinkage`]. The [`harness`] module drives seeded
//! Monte Carlo experiments that check the accompanying inequalities and rates.

pub mod completion;
pub mod diagnostics;
pub mod error;
pub mod harness;
pub mod io;
pub mod linalg;
pub mod regression;
pub mod shrinkage;

pub use completion::{
    CompletionDataset, DesignList, EstimateReport, GroundTruth, HypothesisReport, NoiseLaw, NoiseSpec,
};
pub use diagnostics::{DiagnosticsRecord, NoiseNormCheck};
pub use error::{Error, Result};
pub use linalg::{ColumnSpaceProjector, Matrix, Schatten, SvdFactors, DEFAULT_RANK_TOL};
pub use regression::{RegressionDataset, RegressionEstimate, RegressionLambdaParams, RegressionSimulation};
pub use shrinkage::{solve_sqrt_shrinkage, ShrinkageSolution};
