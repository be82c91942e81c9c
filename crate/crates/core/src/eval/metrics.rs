use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{EvalError, Result};
use crate::Scalar;

fn check<F: Scalar>(actual: &[F], predicted: &[F]) -> Result<()> {
    if actual.is_empty() || actual.len() != predicted.len() {
        return Err(EvalError::Metric(format!(
            "{} actual vs {} predicted values",
            actual.len(),
            predicted.len()
        )));
    }
    Ok(())
}

/// Root mean squared error.
pub fn rmse<F: Scalar>(actual: &[F], predicted: &[F]) -> Result<F> {
    check(actual, predicted)?;
    let sse: F = actual
        .iter()
        .zip(predicted)
        .map(|(&a, &p)| (a - p) * (a - p))
        .sum();
    Ok((sse / F::of(actual.len() as f64)).sqrt())
}

/// Mean absolute error.
pub fn mae<F: Scalar>(actual: &[F], predicted: &[F]) -> Result<F> {
    check(actual, predicted)?;
    let sae: F = actual.iter().zip(predicted).map(|(&a, &p)| (a - p).abs()).sum();
    Ok(sae / F::of(actual.len() as f64))
}

/// Test-month errors of one method on one task in one round.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub round: usize,
    pub method: String,
    pub task_id: String,
    /// Test sample count.
    pub n: usize,
    pub rmse: f64,
    pub mae: f64,
    /// Training rows of the task in this round.
    pub n_train: usize,
    /// Quartile group (0..4) of the task by training count, when the round
    /// has at least four tasks.
    pub quartile: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundMean {
    pub round: usize,
    pub n_tasks: usize,
    pub rmse: f64,
    pub mae: f64,
}

/// Mean over tasks within each round, then over rounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodAggregate {
    pub method: String,
    pub rounds: Vec<RoundMean>,
    pub rmse: f64,
    pub mae: f64,
}

/// Two-level means per method, methods in order of first appearance.
pub fn aggregate(records: &[MetricRecord]) -> Vec<MethodAggregate> {
    let mut order: Vec<&str> = Vec::new();
    let mut by_method: BTreeMap<&str, BTreeMap<usize, Vec<&MetricRecord>>> = BTreeMap::new();
    for r in records {
        if !order.contains(&r.method.as_str()) {
            order.push(&r.method);
        }
        by_method
            .entry(&r.method)
            .or_default()
            .entry(r.round)
            .or_default()
            .push(r);
    }
    order
        .into_iter()
        .map(|m| {
            let rounds: Vec<RoundMean> = by_method[m]
                .iter()
                .map(|(&round, recs)| {
                    let n = recs.len() as f64;
                    RoundMean {
                        round,
                        n_tasks: recs.len(),
                        rmse: recs.iter().map(|r| r.rmse).sum::<f64>() / n,
                        mae: recs.iter().map(|r| r.mae).sum::<f64>() / n,
                    }
                })
                .collect();
            let n = rounds.len() as f64;
            MethodAggregate {
                method: m.to_string(),
                rmse: rounds.iter().map(|r| r.rmse).sum::<f64>() / n,
                mae: rounds.iter().map(|r| r.mae).sum::<f64>() / n,
                rounds,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(round: usize, method: &str, rmse: f64) -> MetricRecord {
        MetricRecord {
            round,
            method: method.into(),
            task_id: "t".into(),
            n: 1,
            rmse,
            mae: rmse / 2.0,
            n_train: 1,
            quartile: None,
        }
    }

    #[test]
    fn closed_forms() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(rmse(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(mae(&[0.0, 0.0], &[1.0, -1.0]).unwrap(), 1.0);
        assert_eq!(mae(&[3.0f32], &[3.0]).unwrap(), 0.0);
        assert!(rmse::<f64>(&[], &[]).is_err());
        assert!(mae(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn two_level_mean() {
        let one = aggregate(&[rec(0, "m", 0.4)]);
        assert_eq!(one[0].rmse, 0.4);
        assert_eq!(one[0].rounds[0].rmse, 0.4);
        let recs = [rec(0, "m", 0.1), rec(1, "m", 0.2), rec(1, "m", 0.4), rec(0, "b", 1.0)];
        let agg = aggregate(&recs);
        assert_eq!(agg[0].method, "m");
        assert!((agg[0].rmse - 0.2).abs() < 1e-15);
        assert_eq!(agg[0].rounds[1].n_tasks, 2);
        assert_eq!(agg[1].method, "b");
    }
}
