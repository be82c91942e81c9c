//! Rolling monthly backtests, error metrics and method comparisons.

mod backtest;
mod metrics;
mod plan;
mod stats;

use thiserror::Error;

pub use backtest::{
    run_backtest, run_backtest_tasks, BacktestOptions, ComparisonReport, MethodModel, MethodSpec,
    MethodSummary, RankSumRow, WldRow,
};
pub use metrics::{aggregate, mae, rmse, MethodAggregate, MetricRecord, RoundMean};
pub use plan::{make_rolling_plan, Round, RollingPlan};
pub use stats::{
    rank_sum_exact, rank_sum_normal, wilcoxon_rank_sum, win_loss_draw, RankSumResult,
    WinLossDraw, DRAW_DECIMALS,
};

use crate::solver::SolverError;
use crate::tasks::TaskError;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid rolling plan: {0}")]
    Plan(String),
    #[error("metric inputs: {0}")]
    Metric(String),
    #[error("invalid method: {0}")]
    Method(String),
    #[error("benchmark method {0} is not among the evaluated methods")]
    UnknownBenchmark(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Task(#[from] TaskError),
}

pub type Result<T, E = EvalError> = std::result::Result<T, E>;
