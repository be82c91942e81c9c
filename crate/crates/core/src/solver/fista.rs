//! Accelerated proximal gradient (FISTA) with backtracking and
//! function-value restart.
//!
//! The step size starts at `initial_step` and is multiplied by
//! `backtracking_shrink` until the quadratic upper bound holds at the
//! candidate point. An extrapolated step that raises the objective is
//! rejected: momentum resets and the next step starts from the last accepted
//! iterate, so the recorded objective trace never increases.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::objective::{nonsmooth_penalty, smooth_gradient, smooth_objective};
use super::prox::{prox_l1, prox_l21};
use super::{
    build_task_graph, RegularizerKind, RegularizerSpec, Result, SolverError, SolverParams,
    TaskData, TaskGraph, WeightMatrix,
};
use crate::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult<F> {
    pub weights: WeightMatrix<F>,
    /// Objective at the starting point followed by one value per iteration.
    pub objective_trace: Vec<F>,
    pub iterations: usize,
    pub converged: bool,
}

/// Fit `W` from a zero start; the task graph is built from the data when the
/// regularizer needs one.
pub fn fit<F: Scalar>(
    data: &TaskData<F>,
    reg: &RegularizerSpec,
    params: &SolverParams,
) -> Result<FitResult<F>> {
    let graph = match reg.kind {
        RegularizerKind::Graph => Some(build_task_graph(data)?),
        _ => None,
    };
    fit_with(data, reg, graph.as_ref(), None, params)
}

/// Fit with an explicit graph and optional warm start.
pub fn fit_with<F: Scalar>(
    data: &TaskData<F>,
    reg: &RegularizerSpec,
    graph: Option<&TaskGraph<F>>,
    init: Option<ArrayView2<F>>,
    params: &SolverParams,
) -> Result<FitResult<F>> {
    reg.validate()?;
    params.validate()?;
    let (d, p) = (data.n_features(), data.n_tasks());
    let mut w = match init {
        Some(w0) if w0.dim() == (d, p) => w0.to_owned(),
        Some(w0) => {
            return Err(SolverError::DimensionMismatch(format!(
                "warm start is {:?}, expected {:?}",
                w0.dim(),
                (d, p)
            )))
        }
        None => Array2::zeros((d, p)),
    };

    let skip_intercept = !reg.penalize_intercept;
    let prox = |v: ArrayView2<F>, step: F| -> Array2<F> {
        match reg.kind {
            RegularizerKind::Lasso => prox_l1(v, step * F::of(reg.theta1), skip_intercept),
            RegularizerKind::GroupL21 => prox_l21(v, step * F::of(reg.theta1), skip_intercept),
            RegularizerKind::Graph => prox_l21(v, step * F::of(reg.theta2), skip_intercept),
        }
    };
    let smooth = |m: ArrayView2<F>| smooth_objective(m, data, reg, graph);

    let mut obj_w = smooth(w.view())? + nonsmooth_penalty(w.view(), reg);
    if !obj_w.is_finite() {
        return Err(SolverError::Divergence { iteration: 0 });
    }
    let mut trace = vec![obj_w];
    let mut y = w.clone();
    let mut t = F::one();
    let mut step = F::of(params.initial_step);
    let shrink = F::of(params.backtracking_shrink);
    let rel_tol = F::of(params.rel_tol);
    let half = F::of(0.5);
    let slack = F::epsilon() * F::of(16.0);
    let mut just_restarted = true;
    let mut converged = false;
    let mut iterations = 0;

    for it in 1..=params.max_iters {
        iterations = it;
        let f_y = smooth(y.view())?;
        let g_y = smooth_gradient(y.view(), data, reg, graph)?;
        if !f_y.is_finite() {
            return Err(SolverError::Divergence { iteration: it });
        }
        let (z, f_z) = loop {
            let z = prox((&y - &(&g_y * step)).view(), step);
            let f_z = smooth(z.view())?;
            let diff = &z - &y;
            let bound = f_y + (&g_y * &diff).sum() + diff.dot_self() * half / step;
            if f_z.is_finite() && f_z <= bound + slack * f_y.abs().max(F::one()) {
                break (z, f_z);
            }
            step *= shrink;
            if step < F::min_positive_value() {
                return Err(SolverError::Divergence { iteration: it });
            }
        };
        let obj_z = f_z + nonsmooth_penalty(z.view(), reg);
        if !obj_z.is_finite() {
            return Err(SolverError::Divergence { iteration: it });
        }

        if obj_z > obj_w {
            if just_restarted {
                // A plain proximal step from the accepted iterate can only
                // fail to descend through rounding: nothing left to gain.
                trace.push(obj_w);
                converged = true;
                break;
            }
            y.assign(&w);
            t = F::one();
            just_restarted = true;
            continue;
        }

        let t_next = (F::one() + (F::one() + F::of(4.0) * t * t).sqrt()) * half;
        let momentum = (t - F::one()) / t_next;
        y = &z + &((&z - &w) * momentum);
        let change = (obj_w - obj_z).abs();
        let scale = obj_w.abs();
        w = z;
        obj_w = obj_z;
        t = t_next;
        just_restarted = false;
        trace.push(obj_w);
        if change <= rel_tol * scale {
            converged = true;
            break;
        }
    }

    let weights = WeightMatrix::new(w, data.task_ids())?;
    Ok(FitResult {
        weights,
        objective_trace: trace,
        iterations,
        converged,
    })
}

trait DotSelf<F> {
    fn dot_self(&self) -> F;
}

impl<F: Scalar> DotSelf<F> for Array2<F> {
    fn dot_self(&self) -> F {
        self.iter().map(|&v| v * v).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::TaskBlock;
    use ndarray::{array, Array1};

    fn data() -> TaskData<f64> {
        TaskData::from_blocks(vec![
            TaskBlock::new(
                "a",
                array![[1.0, 0.5, 1.0], [-0.3, 1.2, 1.0], [0.8, -1.0, 1.0], [0.1, 0.1, 1.0]],
                array![13.1, 13.4, 12.9, 13.0],
            ),
            TaskBlock::new(
                "b",
                array![[0.2, -0.7, 1.0], [1.5, 0.3, 1.0], [-1.1, 0.4, 1.0]],
                array![13.6, 13.9, 13.2],
            ),
        ])
        .unwrap()
    }

    #[test]
    fn trace_is_monotone_for_every_kind() {
        let d = data();
        for reg in [
            RegularizerSpec::lasso(0.5),
            RegularizerSpec::group_l21(0.5),
            RegularizerSpec::graph(0.3, 0.2),
        ] {
            let r = fit(&d, &reg, &SolverParams::default()).unwrap();
            assert!(r.converged);
            for w in r.objective_trace.windows(2) {
                assert!(w[1] <= w[0], "{reg:?}: {} > {}", w[1], w[0]);
            }
            let n = r.objective_trace.len();
            let last = r.objective_trace[n - 1];
            let prev = r.objective_trace[n - 2];
            assert!((prev - last).abs() <= 1e-6 * prev.abs());
        }
    }

    #[test]
    fn huge_lasso_penalty_leaves_only_intercept() {
        let d = data();
        let r = fit(&d, &RegularizerSpec::lasso(1e4), &SolverParams::default()).unwrap();
        let w = r.weights.matrix();
        for j in 0..2 {
            assert!(w.row(j).iter().all(|&v| v == 0.0));
        }
        let mean_a: f64 = d.tasks()[0].y().mean().unwrap();
        assert!((w[[2, 0]] - mean_a).abs() < 1e-4);
    }

    #[test]
    fn warm_start_dimension_checked() {
        let d = data();
        let bad = Array2::<f64>::zeros((2, 2));
        let err = fit_with(&d, &RegularizerSpec::lasso(1.0), None, Some(bad.view()), &SolverParams::default());
        assert!(matches!(err, Err(SolverError::DimensionMismatch(_))));
    }

    #[test]
    fn divergence_reported() {
        let d = TaskData::from_blocks(vec![TaskBlock::new(
            "a",
            array![[f64::MAX, 1.0]],
            Array1::from(vec![1.0]),
        )])
        .unwrap();
        let r = fit(&d, &RegularizerSpec::lasso(0.0), &SolverParams::default());
        assert!(matches!(r, Err(SolverError::Divergence { .. })), "{r:?}");
    }

    #[test]
    fn single_precision_fit_runs() {
        let d = data();
        let d32 = TaskData::<f32>::from_blocks(
            d.tasks()
                .iter()
                .map(|t| TaskBlock::new(t.task_id(), t.x().mapv(|v| v as f32), t.y().mapv(|v| v as f32)))
                .collect(),
        )
        .unwrap();
        let r = fit(&d32, &RegularizerSpec::group_l21(0.5), &SolverParams::default()).unwrap();
        let r64 = fit(&d, &RegularizerSpec::group_l21(0.5), &SolverParams::default()).unwrap();
        for (a, b) in r.weights.matrix().iter().zip(r64.weights.matrix().iter()) {
            assert!((*a as f64 - b).abs() < 1e-2);
        }
    }
}
