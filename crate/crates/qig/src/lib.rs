//! Information geometry of density matrices through Hermitian square roots.
//!
//! A density matrix rho is represented by any Hermitian xi with xi^2 = rho
//! and tr(xi^2) = 1; the set of such xi is the unit sphere of the Hermitian
//! Hilbert-Schmidt space. This crate provides:
//!
//! - [`algebra`]: Hermitian matrices, square roots, commutators, unitary
//!   evolution, and random ensembles;
//! - [`geometry`]: the Fisher-Rao metric 4 tr(d xi d xi) on parametric
//!   families, its Monte-Carlo estimate from pure-state averages, and the
//!   per-orbit proportionality calibration;
//! - [`bloch`]: the complete 2x2 square-root preimage structure on the
//!   3-sphere, including the case classification and mesh export. (The mixed
//!   2x2 metric is the round metric of a 3-sphere of radius 2 — positive
//!   curvature, despite the coordinate singularity at the pure boundary.)
//! - [`estimation`]: skew informations, locally unbiased estimators, the
//!   square-root Cramer-Rao bound and its comparisons, and the higher-order
//!   projection corrections;
//! - [`stats`] and [`io`]: deterministic parallel Monte-Carlo batching and
//!   the JSON matrix interchange format.
//!
//! A note on the Monte-Carlo metric: the pure-state-averaged quadratic form
//! is proportional to 4 tr(d xi d xi) with a constant that depends on the
//! spectrum of the state, not just the dimension. The constant is exactly
//! invariant along unitary orbits, so calibration is defined per orbit; see
//! [`geometry::calibrate_metric_ratio`].

pub mod algebra;
pub mod bloch;
pub mod error;
pub mod estimation;
pub mod geometry;
pub mod io;
pub mod stats;

pub use algebra::{
    commutator, derivatives_unitary, hs_inner, principal_sqrt, unitary_evolve, DensityMatrix,
    HermitianMatrix, PureState, SqrtState, C64, CMat, CVec,
};
pub use bloch::{
    classify, figure1_mesh, sqrt_preimages, write_mesh_csv, CaseTag, PreimageSet,
    QubitDensityParams, S3Point,
};
pub use error::{Error, Result};
pub use estimation::{
    acceleration_curvature, bhattacharyya_directions, bound_report, higher_order_bound,
    make_locally_unbiased, perturb_estimator, quantum_skew_moments, skew_information, skew_second,
    variance, velocity_sq, BoundReport, EstimatorT, HigherOrderReport,
};
pub use geometry::{
    calibrate_metric_ratio, dual_expectation, fisher_rao_analytic, fisher_rao_mc,
    gibbons_expectation, DualCalibration, KappaFit, McEstimate, MetricEstimate, ParamFamily,
};
pub use io::{read_matrix, write_matrix, MatrixJson};
