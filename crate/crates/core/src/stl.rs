//! Single-task baselines: every task is fitted on its own rows only.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::linalg::{cholesky_solve, min_norm_lstsq};
use crate::solver::{
    fit, RegularizerSpec, Result, SolverError, SolverParams, TaskData, WeightMatrix,
};
use crate::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StlKind {
    Ols,
    Ridge,
    Lasso,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StlSpec {
    pub kind: StlKind,
    /// Ignored for OLS.
    #[serde(default)]
    pub penalty: f64,
    #[serde(default)]
    pub penalize_intercept: bool,
}

impl StlSpec {
    pub fn ols() -> Self {
        StlSpec {
            kind: StlKind::Ols,
            penalty: 0.0,
            penalize_intercept: false,
        }
    }

    pub fn ridge(penalty: f64) -> Self {
        StlSpec {
            kind: StlKind::Ridge,
            penalty,
            penalize_intercept: false,
        }
    }

    pub fn lasso(penalty: f64) -> Self {
        StlSpec {
            kind: StlKind::Lasso,
            penalty,
            penalize_intercept: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.penalty >= 0.0 && self.penalty.is_finite()) {
            return Err(SolverError::InvalidParams(format!("penalty = {}", self.penalty)));
        }
        Ok(())
    }
}

/// Solves `(xᵀx + λI')w = xᵀy`, where `I'` skips the trailing intercept
/// unless `penalize_intercept`. `None` if the system is singular.
pub fn ridge_solve<F: Scalar>(
    x: ArrayView2<F>,
    y: ArrayView1<F>,
    penalty: f64,
    penalize_intercept: bool,
) -> Option<Array1<F>> {
    let d = x.ncols();
    let mut gram = x.t().dot(&x);
    let lam = F::of(penalty);
    let penalized = if penalize_intercept { d } else { d - 1 };
    for j in 0..penalized {
        gram[[j, j]] += lam;
    }
    cholesky_solve(gram.view(), x.t().dot(&y).view())
}

/// Fits every task independently; columns follow the task order of `data`.
pub fn fit_stl<F: Scalar>(
    data: &TaskData<F>,
    spec: &StlSpec,
    params: &SolverParams,
) -> Result<WeightMatrix<F>> {
    spec.validate()?;
    let columns: Vec<Array1<F>> = (0..data.n_tasks())
        .into_par_iter()
        .map(|p| {
            let t = &data.tasks()[p];
            let singular = || SolverError::Singular {
                task: t.task_id().to_string(),
            };
            match spec.kind {
                StlKind::Ols => ridge_solve(t.x().view(), t.y().view(), 0.0, false).ok_or_else(singular),
                StlKind::Ridge => {
                    ridge_solve(t.x().view(), t.y().view(), spec.penalty, spec.penalize_intercept)
                        .ok_or_else(singular)
                }
                StlKind::Lasso => {
                    let reg = RegularizerSpec::lasso(spec.penalty)
                        .with_penalized_intercept(spec.penalize_intercept);
                    let r = fit(&data.single(p), &reg, params)?;
                    Ok(r.weights.matrix().column(0).to_owned())
                }
            }
        })
        .collect::<Result<_>>()?;
    WeightMatrix::new(stack(&columns, data.n_features()), data.task_ids())
}

/// Per-task OLS that falls back to the minimum-norm least-squares solution
/// when a task's normal matrix is singular (fewer rows than columns,
/// collinear features). Returns the weights and the tasks that fell back.
pub fn fit_ols_min_norm<F: Scalar>(data: &TaskData<F>) -> Result<(WeightMatrix<F>, Vec<String>)> {
    let fitted: Vec<(Array1<F>, bool)> = data
        .tasks()
        .par_iter()
        .map(|t| match ridge_solve(t.x().view(), t.y().view(), 0.0, false) {
            Some(w) => (w, false),
            None => (min_norm_lstsq(t.x().view(), t.y().view()), true),
        })
        .collect();
    let fallback = data
        .tasks()
        .iter()
        .zip(&fitted)
        .filter(|(_, (_, f))| *f)
        .map(|(t, _)| t.task_id().to_string())
        .collect();
    let columns: Vec<Array1<F>> = fitted.into_iter().map(|(w, _)| w).collect();
    Ok((WeightMatrix::new(stack(&columns, data.n_features()), data.task_ids())?, fallback))
}

/// Ridge penalty per task chosen by k-fold cross-validation (k = min(5, m);
/// row `i` belongs to fold `i mod k`), then refitted on all rows. Tasks with
/// a single row get the largest penalty in the grid.
pub fn fit_ridge_cv<F: Scalar>(
    data: &TaskData<F>,
    grid: &[f64],
    penalize_intercept: bool,
) -> Result<(WeightMatrix<F>, Vec<f64>)> {
    if grid.is_empty() || grid.iter().any(|&g| !(g >= 0.0 && g.is_finite())) {
        return Err(SolverError::InvalidParams(format!("ridge grid {grid:?}")));
    }
    let chosen: Vec<(Array1<F>, f64)> = data
        .tasks()
        .par_iter()
        .map(|t| {
            let lam = select_ridge_penalty(t.x().view(), t.y().view(), grid, penalize_intercept);
            ridge_solve(t.x().view(), t.y().view(), lam, penalize_intercept)
                .map(|w| (w, lam))
                .ok_or_else(|| SolverError::Singular {
                    task: t.task_id().to_string(),
                })
        })
        .collect::<Result<_>>()?;
    let penalties = chosen.iter().map(|(_, l)| *l).collect();
    let columns: Vec<Array1<F>> = chosen.into_iter().map(|(w, _)| w).collect();
    Ok((WeightMatrix::new(stack(&columns, data.n_features()), data.task_ids())?, penalties))
}

fn select_ridge_penalty<F: Scalar>(
    x: ArrayView2<F>,
    y: ArrayView1<F>,
    grid: &[f64],
    penalize_intercept: bool,
) -> f64 {
    let m = x.nrows();
    let largest = grid.iter().copied().fold(f64::MIN, f64::max);
    if m < 2 {
        return largest;
    }
    let k = m.min(5);
    let mut best = (f64::INFINITY, largest);
    for &lam in grid {
        let mut sse = 0.0;
        for fold in 0..k {
            let (train, test): (Vec<usize>, Vec<usize>) = (0..m).partition(|i| i % k != fold);
            let xt = x.select(ndarray::Axis(0), &train);
            let yt = y.select(ndarray::Axis(0), &train);
            match ridge_solve(xt.view(), yt.view(), lam, penalize_intercept) {
                Some(w) => {
                    for &i in &test {
                        let e = (x.row(i).dot(&w) - y[i]).to_f64_lossy();
                        sse += e * e;
                    }
                }
                None => {
                    sse = f64::INFINITY;
                    break;
                }
            }
        }
        if sse < best.0 {
            best = (sse, lam);
        }
    }
    best.1
}

fn stack<F: Scalar>(columns: &[Array1<F>], d: usize) -> Array2<F> {
    let mut w = Array2::zeros((d, columns.len()));
    for (p, c) in columns.iter().enumerate() {
        w.slice_mut(s![.., p]).assign(c);
    }
    w
}
