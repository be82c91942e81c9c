use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{Result, SolverError, TaskData};
use crate::Scalar;

/// Symmetric task-relatedness weights `r_pq = min(avg_p, avg_q) / max(avg_p, avg_q)`
/// over average raw prices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskGraph<F> {
    weights: Array2<F>,
}

impl<F: Scalar> TaskGraph<F> {
    /// Graph from per-task average prices.
    pub fn from_average_prices(averages: &[f64]) -> Result<Self> {
        if let Some(a) = averages.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
            return Err(SolverError::InvalidParams(format!("average price {a}")));
        }
        let p = averages.len();
        let weights = Array2::from_shape_fn((p, p), |(i, j)| {
            let (a, b) = (averages[i], averages[j]);
            F::of(a.min(b) / a.max(b))
        });
        Ok(TaskGraph { weights })
    }

    /// Uses caller-supplied weights after checking symmetry, the unit diagonal
    /// and the (0, 1] range.
    pub fn from_weights(weights: Array2<F>) -> Result<Self> {
        let p = weights.nrows();
        if weights.ncols() != p {
            return Err(SolverError::DimensionMismatch("graph must be square".into()));
        }
        for i in 0..p {
            if weights[[i, i]] != F::one() {
                return Err(SolverError::InvalidParams("graph diagonal must be 1".into()));
            }
            for j in 0..p {
                let r = weights[[i, j]];
                if !(r > F::zero() && r <= F::one()) || r != weights[[j, i]] {
                    return Err(SolverError::InvalidParams(format!(
                        "graph weight ({i}, {j}) = {r} invalid"
                    )));
                }
            }
        }
        Ok(TaskGraph { weights })
    }

    pub fn weights(&self) -> &Array2<F> {
        &self.weights
    }

    pub fn n_tasks(&self) -> usize {
        self.weights.nrows()
    }
}

/// Task graph over the average training-window price of each task.
pub fn build_task_graph<F: Scalar>(data: &TaskData<F>) -> Result<TaskGraph<F>> {
    let averages: Vec<f64> = data
        .tasks()
        .iter()
        .map(|t| t.prices().iter().sum::<f64>() / t.prices().len() as f64)
        .collect();
    TaskGraph::from_average_prices(&averages)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_of_averages() {
        let g = TaskGraph::<f64>::from_average_prices(&[500.0, 1000.0, 500.0]).unwrap();
        let w = g.weights();
        assert_eq!(w[[0, 1]], 0.5);
        assert_eq!(w[[1, 0]], 0.5);
        assert_eq!(w[[0, 2]], 1.0);
        assert_eq!(w[[1, 1]], 1.0);
    }

    #[test]
    fn rejects_bad_weights() {
        let mut w = Array2::<f64>::ones((2, 2));
        w[[0, 1]] = 0.4;
        assert!(TaskGraph::from_weights(w.clone()).is_err());
        w[[1, 0]] = 0.4;
        assert!(TaskGraph::from_weights(w).is_ok());
        assert!(TaskGraph::<f64>::from_average_prices(&[1.0, 0.0]).is_err());
    }
}
