use ndarray::{s, Array2, ArrayView2, Axis};

use super::{penalized_rows, RegularizerKind, RegularizerSpec, Result, SolverError, TaskData, TaskGraph};
use crate::Scalar;

fn check<F: Scalar>(
    w: ArrayView2<F>,
    data: &TaskData<F>,
    reg: &RegularizerSpec,
    graph: Option<&TaskGraph<F>>,
) -> Result<()> {
    if w.nrows() != data.n_features() || w.ncols() != data.n_tasks() {
        return Err(SolverError::DimensionMismatch(format!(
            "W is {}x{}, data has D={} and P={}",
            w.nrows(),
            w.ncols(),
            data.n_features(),
            data.n_tasks()
        )));
    }
    match (reg.kind, graph) {
        (RegularizerKind::Graph, None) => Err(SolverError::GraphRequired),
        (RegularizerKind::Graph, Some(g)) if g.n_tasks() != data.n_tasks() => Err(
            SolverError::DimensionMismatch(format!("graph has {} tasks", g.n_tasks())),
        ),
        (RegularizerKind::Lasso | RegularizerKind::GroupL21, Some(_)) => {
            Err(SolverError::GraphUnexpected)
        }
        _ => Ok(()),
    }
}

fn squared_loss<F: Scalar>(w: ArrayView2<F>, data: &TaskData<F>) -> F {
    data.tasks()
        .iter()
        .enumerate()
        .map(|(p, t)| {
            let r = t.x().dot(&w.column(p)) - t.y();
            r.dot(&r)
        })
        .sum()
}

fn graph_term<F: Scalar>(w: ArrayView2<F>, graph: &TaskGraph<F>, rows: usize) -> F {
    let w = w.slice(s![..rows, ..]);
    let r = graph.weights();
    let p = w.ncols();
    let mut total = F::zero();
    for a in 0..p {
        for b in 0..p {
            if a == b {
                continue;
            }
            let d = &w.column(a) - &w.column(b);
            total += r[[a, b]] * d.dot(&d);
        }
    }
    total
}

/// Smooth part of the objective: squared loss plus, for the graph kind, the
/// pairwise coupling term.
pub fn smooth_objective<F: Scalar>(
    w: ArrayView2<F>,
    data: &TaskData<F>,
    reg: &RegularizerSpec,
    graph: Option<&TaskGraph<F>>,
) -> Result<F> {
    check(w, data, reg, graph)?;
    let mut f = squared_loss(w, data);
    if let (RegularizerKind::Graph, Some(g)) = (reg.kind, graph) {
        let rows = penalized_rows(w.nrows(), reg.penalize_intercept);
        f += F::of(reg.theta1) * graph_term(w, g, rows);
    }
    Ok(f)
}

/// Non-smooth penalty handled by the proximal step.
pub fn nonsmooth_penalty<F: Scalar>(w: ArrayView2<F>, reg: &RegularizerSpec) -> F {
    let rows = penalized_rows(w.nrows(), reg.penalize_intercept);
    let w = w.slice(s![..rows, ..]);
    let l21 = || -> F { w.axis_iter(Axis(0)).map(|r| r.dot(&r).sqrt()).sum() };
    match reg.kind {
        RegularizerKind::Lasso => F::of(reg.theta1) * w.iter().map(|v| v.abs()).sum(),
        RegularizerKind::GroupL21 => F::of(reg.theta1) * l21(),
        RegularizerKind::Graph => F::of(reg.theta2) * l21(),
    }
}

/// Full objective `L(W) + Ω(W)`.
pub fn objective<F: Scalar>(
    w: ArrayView2<F>,
    data: &TaskData<F>,
    reg: &RegularizerSpec,
    graph: Option<&TaskGraph<F>>,
) -> Result<F> {
    Ok(smooth_objective(w, data, reg, graph)? + nonsmooth_penalty(w, reg))
}

/// Gradient of [`smooth_objective`]: column `p` is `2 x_pᵀ(x_p w_p − y_p)`,
/// plus `4 θ1 Σ_q r_pq (w_p − w_q)` on penalized rows for the graph kind.
pub fn smooth_gradient<F: Scalar>(
    w: ArrayView2<F>,
    data: &TaskData<F>,
    reg: &RegularizerSpec,
    graph: Option<&TaskGraph<F>>,
) -> Result<Array2<F>> {
    check(w, data, reg, graph)?;
    let two = F::of(2.0);
    let mut g = Array2::<F>::zeros(w.raw_dim());
    for (p, t) in data.tasks().iter().enumerate() {
        let r = t.x().dot(&w.column(p)) - t.y();
        let col = t.x().t().dot(&r) * two;
        g.column_mut(p).assign(&col);
    }
    if let (RegularizerKind::Graph, Some(gr)) = (reg.kind, graph) {
        let rows = penalized_rows(w.nrows(), reg.penalize_intercept);
        let coef = F::of(4.0 * reg.theta1);
        let r = gr.weights();
        let ws = w.slice(s![..rows, ..]);
        let n = ws.ncols();
        for p in 0..n {
            let mut acc = ndarray::Array1::<F>::zeros(rows);
            for q in 0..n {
                if p != q {
                    acc.scaled_add(r[[p, q]], &(&ws.column(p) - &ws.column(q)));
                }
            }
            let mut gp = g.slice_mut(s![..rows, p]);
            gp.scaled_add(coef, &acc);
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::TaskBlock;
    use ndarray::array;

    fn two_tasks() -> TaskData<f64> {
        TaskData::from_blocks(vec![
            TaskBlock::new("a", array![[1.0, 1.0], [2.0, 1.0]], array![1.0, 2.0]),
            TaskBlock::new("b", array![[0.5, 1.0]], array![3.0]),
        ])
        .unwrap()
    }

    #[test]
    fn zero_weights_give_target_energy() {
        let d = two_tasks();
        let w = Array2::zeros((2, 2));
        for reg in [RegularizerSpec::lasso(3.0), RegularizerSpec::group_l21(3.0)] {
            let f = objective(w.view(), &d, &reg, None).unwrap();
            assert_eq!(f, 1.0 + 4.0 + 9.0);
        }
    }

    #[test]
    fn zero_penalty_is_pure_loss() {
        let d = two_tasks();
        let w = array![[0.3, -0.2], [0.1, 0.7]];
        let loss = squared_loss(w.view(), &d);
        let g = TaskGraph::from_average_prices(&[1.0, 2.0]).unwrap();
        assert_eq!(objective(w.view(), &d, &RegularizerSpec::lasso(0.0), None).unwrap(), loss);
        assert_eq!(
            objective(w.view(), &d, &RegularizerSpec::graph(0.0, 0.0), Some(&g)).unwrap(),
            loss
        );
    }

    #[test]
    fn graph_term_vanishes_for_equal_columns() {
        let d = two_tasks();
        let w = array![[0.3, 0.3], [0.1, 0.1]];
        let g = TaskGraph::from_average_prices(&[1.0, 3.0]).unwrap();
        let reg = RegularizerSpec::graph(5.0, 0.0).with_penalized_intercept(true);
        let with = smooth_gradient(w.view(), &d, &reg, Some(&g)).unwrap();
        let without = smooth_gradient(w.view(), &d, &RegularizerSpec::lasso(0.0), None).unwrap();
        assert_eq!(with, without);
    }

    #[test]
    fn graph_requirements_enforced() {
        let d = two_tasks();
        let w = Array2::zeros((2, 2));
        let g = TaskGraph::from_average_prices(&[1.0, 2.0]).unwrap();
        assert!(matches!(
            objective(w.view(), &d, &RegularizerSpec::graph(1.0, 0.0), None),
            Err(SolverError::GraphRequired)
        ));
        assert!(matches!(
            objective(w.view(), &d, &RegularizerSpec::lasso(1.0), Some(&g)),
            Err(SolverError::GraphUnexpected)
        ));
        let bad = Array2::zeros((3, 2));
        assert!(matches!(
            smooth_gradient(bad.view(), &d, &RegularizerSpec::lasso(1.0), None),
            Err(SolverError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn intercept_row_excluded_by_default() {
        let w = array![[1.0, -2.0], [10.0, 10.0]];
        assert_eq!(nonsmooth_penalty(w.view(), &RegularizerSpec::lasso(1.0)), 3.0);
        let on = RegularizerSpec::lasso(1.0).with_penalized_intercept(true);
        assert_eq!(nonsmooth_penalty(w.view(), &on), 23.0);
        let l21 = RegularizerSpec::group_l21(2.0);
        assert!((nonsmooth_penalty(w.view(), &l21) - 2.0 * 5f64.sqrt()).abs() < 1e-15);
    }
}
