//! Multi-task regularized regression for location-centered house price
//! prediction.
//!
//! The crate is organised as a pipeline:
//!
//! * [`data`] describes the feature schema, loads delimited transaction files
//!   and generates synthetic datasets with planted multi-task structure.
//! * [`tasks`] partitions a dataset into related tasks (regions, school
//!   districts, station radii, shared facilities and pairwise intersections).
//! * [`solver`] builds per-task design matrices and fits the joint weight
//!   matrix under ℓ1, ℓ2,1 or price-ratio graph regularization with an
//!   accelerated proximal gradient method.
//! * [`stl`] provides independent per-task baselines (OLS, ridge, lasso).
//! * [`eval`] runs the rolling monthly backtest and the statistical
//!   comparison suite (RMSE/MAE, rank-sum test, Win-Loss-Draw).
//! * [`report`] renders comparison results as csv, json or markdown tables.
//!
//! Numerical code is generic over the scalar type ([`Scalar`]); the aliases
//! below pin the common `f64` and `f32` instantiations.

pub mod data;
pub mod eval;
pub mod linalg;
pub mod report;
pub mod scalar;
pub mod solver;
pub mod stl;
pub mod tasks;

pub use scalar::Scalar;

pub use data::{Dataset, FeatureSchema, HouseRecord, Month, SyntheticConfig};
pub use eval::{ComparisonReport, MethodSpec, MetricRecord, RollingPlan};
pub use solver::{FitResult, RegularizerKind, RegularizerSpec, SolverParams};
pub use stl::{StlKind, StlSpec};
pub use tasks::{TaskDefinition, TaskSet};

/// Double-precision weight matrix.
pub type WeightMatrix = solver::WeightMatrix<f64>;
/// Single-precision weight matrix.
pub type WeightMatrix32 = solver::WeightMatrix<f32>;
/// Double-precision per-task training data.
pub type TaskData = solver::TaskData<f64>;
/// Single-precision per-task training data.
pub type TaskData32 = solver::TaskData<f32>;
/// Double-precision task graph.
pub type TaskGraph = solver::TaskGraph<f64>;
/// Single-precision task graph.
pub type TaskGraph32 = solver::TaskGraph<f32>;
