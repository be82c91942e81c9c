use serde::{Deserialize, Serialize};

use super::{EvalError, Result};
use crate::data::{Dataset, Month, MonthRange};

/// One prediction round: fit on `train`, predict `test`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Round {
    pub index: usize,
    pub train: MonthRange,
    pub test: Month,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RollingPlan {
    pub k: usize,
    pub h: usize,
    pub rounds: Vec<Round>,
}

/// One round per month `m` of the dataset whose `k` preceding months also lie
/// in its month range. Only a one-month horizon is evaluated.
pub fn make_rolling_plan(dataset: &Dataset, k: usize, h: usize) -> Result<RollingPlan> {
    plan_for_range(dataset.month_range(), k, h)
}

pub(crate) fn plan_for_range(range: MonthRange, k: usize, h: usize) -> Result<RollingPlan> {
    if k == 0 {
        return Err(EvalError::Plan("training window must span at least one month".into()));
    }
    if h != 1 {
        return Err(EvalError::Plan(format!("only a one-month horizon is supported, got {h}")));
    }
    if range.len() < k + h {
        return Err(EvalError::Plan(format!(
            "{} months of data cannot hold a {k}-month window plus {h} test month",
            range.len()
        )));
    }
    let rounds = (range.first.0 + k as i32..=range.last.0)
        .enumerate()
        .map(|(index, m)| Round {
            index,
            train: MonthRange::new(Month(m - k as i32), Month(m - 1)),
            test: Month(m),
        })
        .collect();
    Ok(RollingPlan { k, h, rounds })
}
