//! Joint estimation of the per-task weight matrix.
//!
//! The objective is `Σ_p ‖x_p w_p − y_p‖² + Ω(W)` with Ω one of
//!
//! * ℓ1: `θ1 Σ |W_ij|`
//! * ℓ2,1: `θ1 Σ_rows ‖W_j·‖₂`
//! * graph: `θ1 Σ_{p≠q} r_pq ‖w_p − w_q‖² + θ2 Σ_rows ‖W_j·‖₂`
//!
//! The graph double sum runs over ordered pairs, so each unordered pair is
//! counted twice. The trailing intercept row is left out of every penalty
//! unless `penalize_intercept` is set.

mod design;
mod fista;
mod graph;
mod objective;
mod prox;

use ndarray::{Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use design::{build_task_data, DesignEncoder, EncodedColumn, TaskBlock, TaskData};
pub use fista::{fit, fit_with, FitResult};
pub use graph::{build_task_graph, TaskGraph};
pub use objective::{nonsmooth_penalty, objective, smooth_gradient, smooth_objective};
pub use prox::{prox_l1, prox_l21};

use crate::data::DataError;
use crate::Scalar;

/// Name of the trailing all-ones design column.
pub const INTERCEPT: &str = "INTERCEPT";

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("graph regularization requires a task graph")]
    GraphRequired,
    #[error("a task graph was supplied for a non-graph regularizer")]
    GraphUnexpected,
    #[error("objective became non-finite at iteration {iteration}")]
    Divergence { iteration: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("no task has records in training window {0}")]
    EmptyWindow(String),
    #[error("unknown task {0}")]
    UnknownTask(String),
    #[error("singular normal matrix for task {task}; use ridge instead of ols")]
    Singular { task: String },
    #[error(transparent)]
    Data(#[from] DataError),
}

pub type Result<T, E = SolverError> = std::result::Result<T, E>;

/// D×P coefficient matrix; column `p` is the weight vector of task `p`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightMatrix<F> {
    w: Array2<F>,
    task_ids: Vec<String>,
}

impl<F: Scalar> WeightMatrix<F> {
    pub fn new(w: Array2<F>, task_ids: Vec<String>) -> Result<Self> {
        if w.ncols() != task_ids.len() {
            return Err(SolverError::DimensionMismatch(format!(
                "{} columns for {} tasks",
                w.ncols(),
                task_ids.len()
            )));
        }
        if w.iter().any(|v| !v.is_finite()) {
            return Err(SolverError::InvalidParams("non-finite weight".into()));
        }
        Ok(WeightMatrix { w, task_ids })
    }

    pub fn zeros(rows: usize, task_ids: Vec<String>) -> Self {
        let w = Array2::zeros((rows, task_ids.len()));
        WeightMatrix { w, task_ids }
    }

    pub fn matrix(&self) -> ArrayView2<'_, F> {
        self.w.view()
    }

    pub fn into_matrix(self) -> Array2<F> {
        self.w
    }

    pub fn task_ids(&self) -> &[String] {
        &self.task_ids
    }

    pub fn n_tasks(&self) -> usize {
        self.w.ncols()
    }

    pub fn n_rows(&self) -> usize {
        self.w.nrows()
    }

    pub fn task_index(&self, task_id: &str) -> Option<usize> {
        self.task_ids.iter().position(|t| t == task_id)
    }

    pub fn column(&self, task_id: &str) -> Option<ArrayView1<'_, F>> {
        self.task_index(task_id).map(|p| self.w.column(p))
    }
}

/// Inner product of a standardized design row with the task's weights.
pub fn predict<F: Scalar>(w: &WeightMatrix<F>, row: ArrayView1<F>, task_id: &str) -> Result<F> {
    let col = w
        .column(task_id)
        .ok_or_else(|| SolverError::UnknownTask(task_id.to_string()))?;
    if col.len() != row.len() {
        return Err(SolverError::DimensionMismatch(format!(
            "row has {} entries, weights have {}",
            row.len(),
            col.len()
        )));
    }
    Ok(row.dot(&col))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegularizerKind {
    Lasso,
    GroupL21,
    Graph,
}

impl RegularizerKind {
    pub fn label(self) -> &'static str {
        match self {
            RegularizerKind::Lasso => "lasso",
            RegularizerKind::GroupL21 => "group_l21",
            RegularizerKind::Graph => "graph",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularizerSpec {
    pub kind: RegularizerKind,
    pub theta1: f64,
    /// Group-sparsity weight of the graph regularizer; zero for other kinds.
    #[serde(default)]
    pub theta2: f64,
    #[serde(default)]
    pub penalize_intercept: bool,
}

impl RegularizerSpec {
    pub fn lasso(theta1: f64) -> Self {
        RegularizerSpec {
            kind: RegularizerKind::Lasso,
            theta1,
            theta2: 0.0,
            penalize_intercept: false,
        }
    }

    pub fn group_l21(theta1: f64) -> Self {
        RegularizerSpec {
            kind: RegularizerKind::GroupL21,
            ..Self::lasso(theta1)
        }
    }

    pub fn graph(theta1: f64, theta2: f64) -> Self {
        RegularizerSpec {
            kind: RegularizerKind::Graph,
            theta1,
            theta2,
            penalize_intercept: false,
        }
    }

    pub fn with_penalized_intercept(mut self, on: bool) -> Self {
        self.penalize_intercept = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v >= 0.0 && v.is_finite();
        if !ok(self.theta1) {
            return Err(SolverError::InvalidParams(format!("theta1 = {}", self.theta1)));
        }
        if !ok(self.theta2) {
            return Err(SolverError::InvalidParams(format!("theta2 = {}", self.theta2)));
        }
        if self.kind != RegularizerKind::Graph && self.theta2 != 0.0 {
            return Err(SolverError::InvalidParams(
                "theta2 only applies to the graph regularizer".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverParams {
    pub max_iters: usize,
    /// Stop once `|ΔF| ≤ rel_tol·|F|` between accepted iterates.
    pub rel_tol: f64,
    pub initial_step: f64,
    pub backtracking_shrink: f64,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            max_iters: 1000,
            rel_tol: 1e-6,
            initial_step: 1.0,
            backtracking_shrink: 0.5,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0
            || self.rel_tol.is_nan()
            || self.rel_tol <= 0.0
            || !(self.initial_step > 0.0 && self.initial_step.is_finite())
            || !(self.backtracking_shrink > 0.0 && self.backtracking_shrink < 1.0)
        {
            return Err(SolverError::InvalidParams(format!("{self:?}")));
        }
        Ok(())
    }
}

/// Number of leading rows subject to penalties: all rows, or all but the
/// trailing intercept row.
pub(crate) fn penalized_rows(total_rows: usize, penalize_intercept: bool) -> usize {
    if penalize_intercept {
        total_rows
    } else {
        total_rows.saturating_sub(1)
    }
}
