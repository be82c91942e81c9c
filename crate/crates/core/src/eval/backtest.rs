use log::info;
use ndarray::Array1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{aggregate, mae, rmse, MetricRecord};
use super::plan::{RollingPlan, Round};
use super::stats::{wilcoxon_rank_sum, win_loss_draw, WinLossDraw};
use super::{EvalError, Result};
use crate::data::{Dataset, MonthRange};
use crate::solver::{
    build_task_data, fit, RegularizerKind, RegularizerSpec, SolverError, SolverParams, TaskData,
    WeightMatrix,
};
use crate::stl::{fit_ols_min_norm, fit_ridge_cv, fit_stl, StlSpec};
use crate::tasks::{define_tasks, quartile_bins, TaskDefinition, TaskSet};
use crate::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodModel {
    MtlLasso,
    MtlGroupL21,
    MtlGraph,
    Ols,
    Ridge,
    Lasso,
}

impl MethodModel {
    pub fn default_label(self) -> &'static str {
        match self {
            MethodModel::MtlLasso => "MTL-L1",
            MethodModel::MtlGroupL21 => "MTL-L21",
            MethodModel::MtlGraph => "MTL-GRAPH",
            MethodModel::Ols => "OLS",
            MethodModel::Ridge => "RIDGE",
            MethodModel::Lasso => "LASSO",
        }
    }

    pub fn is_mtl(self) -> bool {
        matches!(self, MethodModel::MtlLasso | MethodModel::MtlGroupL21 | MethodModel::MtlGraph)
    }

    fn default_theta1(self) -> Vec<f64> {
        match self {
            MethodModel::Ols => Vec::new(),
            MethodModel::Ridge => vec![1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0, 1000.0],
            _ => vec![0.01, 0.1, 1.0, 10.0],
        }
    }
}

/// A method to evaluate with its hyperparameter grid. `theta1` is the
/// penalty of the baselines; `theta2` applies to the graph model only. Empty
/// grids fall back to built-in defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodSpec {
    pub model: MethodModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default)]
    pub theta1: Vec<f64>,
    #[serde(default)]
    pub theta2: Vec<f64>,
    #[serde(default)]
    pub penalize_intercept: bool,
}

impl MethodSpec {
    pub fn new(model: MethodModel) -> Self {
        MethodSpec {
            model,
            label: None,
            theta1: Vec::new(),
            theta2: Vec::new(),
            penalize_intercept: false,
        }
    }

    pub fn with_theta1(mut self, grid: &[f64]) -> Self {
        self.theta1 = grid.to_vec();
        self
    }

    pub fn with_theta2(mut self, grid: &[f64]) -> Self {
        self.theta2 = grid.to_vec();
        self
    }

    pub fn with_label(mut self, label: &str) -> Self {
        self.label = Some(label.to_string());
        self
    }

    pub fn label(&self) -> String {
        self.label
            .clone()
            .unwrap_or_else(|| self.model.default_label().to_string())
    }

    pub fn theta1_grid(&self) -> Vec<f64> {
        if self.theta1.is_empty() {
            self.model.default_theta1()
        } else {
            self.theta1.clone()
        }
    }

    pub fn theta2_grid(&self) -> Vec<f64> {
        match (self.model, self.theta2.is_empty()) {
            (MethodModel::MtlGraph, true) => vec![0.1, 1.0],
            (MethodModel::MtlGraph, false) => self.theta2.clone(),
            _ => vec![0.0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let label = self.label();
        if label.trim().is_empty() {
            return Err(EvalError::Method("empty method label".into()));
        }
        let ok = |g: &[f64]| g.iter().all(|&v| v >= 0.0 && v.is_finite());
        if !ok(&self.theta1) || !ok(&self.theta2) {
            return Err(EvalError::Method(format!("{label}: grid values must be finite and nonnegative")));
        }
        if !self.theta2.is_empty() && self.model != MethodModel::MtlGraph {
            return Err(EvalError::Method(format!("{label}: theta2 applies to the graph model only")));
        }
        if self.model == MethodModel::Ols && !self.theta1.is_empty() {
            return Err(EvalError::Method(format!("{label}: ols takes no penalty")));
        }
        Ok(())
    }

    /// Candidate `(theta1, theta2)` pairs for grid-searched models.
    fn grid(&self) -> Vec<(f64, f64)> {
        let t2 = self.theta2_grid();
        self.theta1_grid()
            .into_iter()
            .flat_map(|a| t2.iter().map(move |&b| (a, b)))
            .collect()
    }
}

/// Backtest settings shared by all methods.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BacktestOptions {
    /// Label of the method every other method is compared against.
    pub benchmark: String,
    pub alpha: f64,
    pub solver: SolverParams,
}

impl BacktestOptions {
    pub fn new(benchmark: &str) -> Self {
        BacktestOptions {
            benchmark: benchmark.to_string(),
            alpha: 0.05,
            solver: SolverParams::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    /// Mean over rounds of the per-round task means.
    pub rmse: f64,
    pub mae: f64,
    pub n_records: usize,
    pub round_rmse: Vec<f64>,
    pub round_mae: Vec<f64>,
}

/// Rank-sum test of a method's per-round mean errors against the
/// benchmark's.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankSumRow {
    pub method: String,
    pub metric: String,
    pub statistic: f64,
    pub p_value: f64,
    pub significant: bool,
    pub exact: bool,
}

/// Benchmark's win/loss/draw record against `method` over task-rounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WldRow {
    pub method: String,
    /// `all` or `Q1`..`Q4` (training-count quartile, Q1 smallest).
    pub group: String,
    pub metric: String,
    pub win: usize,
    pub loss: usize,
    pub draw: usize,
    pub units: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub definition: String,
    pub benchmark: String,
    pub alpha: f64,
    pub n_tasks: usize,
    pub rounds_planned: usize,
    pub rounds_evaluated: usize,
    pub methods: Vec<MethodSummary>,
    pub rank_sum: Vec<RankSumRow>,
    pub win_loss_draw: Vec<WldRow>,
    pub notices: Vec<String>,
}

struct RoundOutcome {
    records: Vec<MetricRecord>,
    notices: Vec<String>,
    evaluated: bool,
}

/// Partitions the dataset by `definition` and runs every round of `plan`
/// for every method.
pub fn run_backtest<F: Scalar>(
    dataset: &Dataset,
    definition: &TaskDefinition,
    methods: &[MethodSpec],
    plan: &RollingPlan,
    options: &BacktestOptions,
) -> Result<(Vec<MetricRecord>, ComparisonReport)> {
    let taskset = define_tasks(dataset, definition)?;
    run_backtest_tasks::<F>(dataset, &taskset, methods, plan, options)
}

/// [`run_backtest`] on an existing partition.
pub fn run_backtest_tasks<F: Scalar>(
    dataset: &Dataset,
    taskset: &TaskSet,
    methods: &[MethodSpec],
    plan: &RollingPlan,
    options: &BacktestOptions,
) -> Result<(Vec<MetricRecord>, ComparisonReport)> {
    if methods.is_empty() {
        return Err(EvalError::Method("no methods to evaluate".into()));
    }
    let labels: Vec<String> = methods.iter().map(MethodSpec::label).collect();
    for (i, m) in methods.iter().enumerate() {
        m.validate()?;
        if labels[..i].contains(&labels[i]) {
            return Err(EvalError::Method(format!("duplicate method label {}", labels[i])));
        }
    }
    if !labels.contains(&options.benchmark) {
        return Err(EvalError::UnknownBenchmark(options.benchmark.clone()));
    }
    options.solver.validate()?;

    let outcomes: Vec<RoundOutcome> = plan
        .rounds
        .par_iter()
        .map(|round| run_round::<F>(dataset, taskset, methods, &labels, round, &options.solver))
        .collect::<Result<_>>()?;

    let mut records = Vec::new();
    let mut notices = Vec::new();
    let mut evaluated = 0;
    for o in outcomes {
        records.extend(o.records);
        notices.extend(o.notices);
        evaluated += o.evaluated as usize;
    }
    info!(
        "{}: {evaluated} of {} rounds evaluated",
        taskset.definition,
        plan.rounds.len()
    );
    let report = compare(taskset, &labels, &records, plan, evaluated, notices, options)?;
    Ok((records, report))
}

fn run_round<F: Scalar>(
    dataset: &Dataset,
    taskset: &TaskSet,
    methods: &[MethodSpec],
    labels: &[String],
    round: &Round,
    params: &SolverParams,
) -> Result<RoundOutcome> {
    let mut notices = Vec::new();
    let skipped = |mut notices: Vec<String>, why: String| {
        notices.push(format!("round {} (test {}): skipped, {why}", round.index, round.test));
        RoundOutcome {
            records: Vec::new(),
            notices,
            evaluated: false,
        }
    };
    let data = match build_task_data::<F>(dataset, taskset, round.train) {
        Ok(d) => d,
        Err(SolverError::EmptyWindow(_)) => {
            return Ok(skipped(notices, format!("no training records in {}", round.train)))
        }
        Err(e) => return Err(e.into()),
    };
    for n in data.notices() {
        notices.push(format!("round {}: {n}", round.index));
    }

    // test rows per task present in training, in task order
    let mut tests: Vec<(usize, Vec<usize>)> = Vec::new();
    for t in &taskset.tasks {
        let rows: Vec<usize> = t
            .members
            .iter()
            .copied()
            .filter(|&i| dataset.record(i).sale_month == round.test)
            .collect();
        if rows.is_empty() {
            continue;
        }
        match data.task_index(&t.id) {
            Some(p) => tests.push((p, rows)),
            None => notices.push(format!(
                "round {}: task {} has test records but no training records; excluded",
                round.index, t.id
            )),
        }
    }
    if tests.is_empty() {
        return Ok(skipped(notices, format!("no test records in {}", round.test)));
    }
    for block in data.tasks() {
        for &i in block.records() {
            assert!(
                dataset.record(i).sale_month < round.test,
                "training record {i} is not before test month {}",
                round.test
            );
        }
    }

    let counts: Vec<usize> = data.tasks().iter().map(|t| t.n_rows()).collect();
    let quartiles = quartile_bins(&counts).map(|(_, bins)| bins);
    let encoder = data.encoder().expect("task data built from a dataset");
    let mut records = Vec::new();
    for (spec, label) in methods.iter().zip(labels) {
        let (w, fit_notices) = fit_method(dataset, taskset, &data, round.train, spec, params)?;
        notices.extend(fit_notices.into_iter().map(|n| format!("round {} {label}: {n}", round.index)));
        for (p, rows) in &tests {
            let col = w.matrix().column(*p).to_owned();
            let x = encoder.encode_rows::<F>(dataset, rows);
            let predicted: Vec<F> = x.dot(&col).to_vec();
            let actual: Vec<F> = rows
                .iter()
                .map(|&i| crate::data::log_target(F::of(dataset.record(i).price)))
                .collect::<std::result::Result<_, _>>()
                .map_err(SolverError::from)?;
            records.push(MetricRecord {
                round: round.index,
                method: label.clone(),
                task_id: data.tasks()[*p].task_id().to_string(),
                n: rows.len(),
                rmse: rmse(&actual, &predicted)?.to_f64_lossy(),
                mae: mae(&actual, &predicted)?.to_f64_lossy(),
                n_train: counts[*p],
                quartile: quartiles.as_ref().map(|q| q[*p]),
            });
        }
    }
    Ok(RoundOutcome {
        records,
        notices,
        evaluated: true,
    })
}

fn fit_once<F: Scalar>(
    data: &TaskData<F>,
    spec: &MethodSpec,
    theta: (f64, f64),
    params: &SolverParams,
) -> Result<WeightMatrix<F>> {
    let reg = |kind| RegularizerSpec {
        kind,
        theta1: theta.0,
        theta2: if kind == RegularizerKind::Graph { theta.1 } else { 0.0 },
        penalize_intercept: spec.penalize_intercept,
    };
    Ok(match spec.model {
        MethodModel::MtlLasso => fit(data, &reg(RegularizerKind::Lasso), params)?.weights,
        MethodModel::MtlGroupL21 => fit(data, &reg(RegularizerKind::GroupL21), params)?.weights,
        MethodModel::MtlGraph => fit(data, &reg(RegularizerKind::Graph), params)?.weights,
        MethodModel::Lasso => {
            let stl = StlSpec {
                penalize_intercept: spec.penalize_intercept,
                ..StlSpec::lasso(theta.0)
            };
            fit_stl(data, &stl, params)?
        }
        MethodModel::Ols | MethodModel::Ridge => unreachable!("closed-form baselines are not grid searched"),
    })
}

/// Fits one method on the round's training data, choosing grid values by
/// holding out the last training month.
fn fit_method<F: Scalar>(
    dataset: &Dataset,
    taskset: &TaskSet,
    data: &TaskData<F>,
    window: MonthRange,
    spec: &MethodSpec,
    params: &SolverParams,
) -> Result<(WeightMatrix<F>, Vec<String>)> {
    match spec.model {
        MethodModel::Ols => {
            let (w, fell_back) = fit_ols_min_norm(data)?;
            let notices = fell_back
                .into_iter()
                .map(|t| format!("task {t} has a singular normal matrix; minimum-norm solution used"))
                .collect();
            return Ok((w, notices));
        }
        MethodModel::Ridge => {
            let (w, _) = fit_ridge_cv(data, &spec.theta1_grid(), spec.penalize_intercept)?;
            return Ok((w, Vec::new()));
        }
        _ => {}
    }
    let grid = spec.grid();
    let theta = if grid.len() == 1 {
        grid[0]
    } else {
        select_by_holdout::<F>(dataset, taskset, window, spec, &grid, params)?.unwrap_or(grid[0])
    };
    Ok((fit_once(data, spec, theta, params)?, Vec::new()))
}

/// Grid point with the lowest pooled squared error on the last training
/// month when fitted on the earlier months; `None` if the window is too short
/// to split.
fn select_by_holdout<F: Scalar>(
    dataset: &Dataset,
    taskset: &TaskSet,
    window: MonthRange,
    spec: &MethodSpec,
    grid: &[(f64, f64)],
    params: &SolverParams,
) -> Result<Option<(f64, f64)>> {
    if window.len() < 2 {
        return Ok(None);
    }
    let inner = MonthRange::new(window.first, window.last.offset(-1));
    let data = match build_task_data::<F>(dataset, taskset, inner) {
        Ok(d) => d,
        Err(SolverError::EmptyWindow(_)) => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    let encoder = data.encoder().expect("task data built from a dataset");
    let mut validation: Vec<(usize, ndarray::Array2<F>, Array1<F>)> = Vec::new();
    for t in &taskset.tasks {
        let Some(p) = data.task_index(&t.id) else { continue };
        let rows: Vec<usize> = t
            .members
            .iter()
            .copied()
            .filter(|&i| dataset.record(i).sale_month == window.last)
            .collect();
        if rows.is_empty() {
            continue;
        }
        let y = rows
            .iter()
            .map(|&i| F::of(dataset.record(i).price.ln()))
            .collect();
        validation.push((p, encoder.encode_rows(dataset, &rows), y));
    }
    if validation.is_empty() {
        return Ok(None);
    }
    let mut best: Option<(f64, (f64, f64))> = None;
    for &theta in grid {
        let w = fit_once(&data, spec, theta, params)?;
        let sse: f64 = validation
            .iter()
            .map(|(p, x, y)| {
                let r = x.dot(&w.matrix().column(*p)) - y;
                r.iter().map(|v| v.to_f64_lossy().powi(2)).sum::<f64>()
            })
            .sum();
        if best.is_none_or(|(b, _)| sse < b) {
            best = Some((sse, theta));
        }
    }
    Ok(best.map(|(_, t)| t))
}

fn compare(
    taskset: &TaskSet,
    labels: &[String],
    records: &[MetricRecord],
    plan: &RollingPlan,
    evaluated: usize,
    notices: Vec<String>,
    options: &BacktestOptions,
) -> Result<ComparisonReport> {
    let aggregates = aggregate(records);
    let methods: Vec<MethodSummary> = labels
        .iter()
        .filter_map(|l| aggregates.iter().find(|a| &a.method == l))
        .map(|a| MethodSummary {
            method: a.method.clone(),
            rmse: a.rmse,
            mae: a.mae,
            n_records: records.iter().filter(|r| r.method == a.method).count(),
            round_rmse: a.rounds.iter().map(|r| r.rmse).collect(),
            round_mae: a.rounds.iter().map(|r| r.mae).collect(),
        })
        .collect();

    let mut rank_sum = Vec::new();
    let mut wld = Vec::new();
    let bench = &options.benchmark;
    if let Some(b) = methods.iter().find(|m| &m.method == bench) {
        for m in &methods {
            for (metric, a_vals, b_vals) in [
                ("rmse", &m.round_rmse, &b.round_rmse),
                ("mae", &m.round_mae, &b.round_mae),
            ] {
                let r = wilcoxon_rank_sum(a_vals, b_vals, options.alpha);
                rank_sum.push(RankSumRow {
                    method: m.method.clone(),
                    metric: metric.to_string(),
                    statistic: r.statistic,
                    p_value: r.p_value,
                    significant: r.significant,
                    exact: r.exact,
                });
            }
        }
        for m in labels {
            for metric in ["rmse", "mae"] {
                for group in ["all", "Q1", "Q2", "Q3", "Q4"] {
                    let t = task_round_wld(records, bench, m, metric, group)?;
                    wld.push(WldRow {
                        method: m.clone(),
                        group: group.to_string(),
                        metric: metric.to_string(),
                        win: t.win,
                        loss: t.loss,
                        draw: t.draw,
                        units: t.units(),
                    });
                }
            }
        }
    }
    Ok(ComparisonReport {
        definition: taskset.definition.to_string(),
        benchmark: bench.clone(),
        alpha: options.alpha,
        n_tasks: taskset.n_tasks(),
        rounds_planned: plan.rounds.len(),
        rounds_evaluated: evaluated,
        methods,
        rank_sum,
        win_loss_draw: wld,
        notices,
    })
}

/// Benchmark vs `method` over the task-rounds both evaluated, restricted to a
/// quartile group.
fn task_round_wld(
    records: &[MetricRecord],
    bench: &str,
    method: &str,
    metric: &str,
    group: &str,
) -> Result<WinLossDraw> {
    let in_group = |r: &MetricRecord| match group {
        "all" => true,
        g => r.quartile.map(|q| format!("Q{}", q + 1)).as_deref() == Some(g),
    };
    let value = |r: &MetricRecord| if metric == "rmse" { r.rmse } else { r.mae };
    let mut a = Vec::new();
    let mut b = Vec::new();
    for rb in records.iter().filter(|r| r.method == bench && in_group(r)) {
        if let Some(rm) = records
            .iter()
            .find(|r| r.method == method && r.round == rb.round && r.task_id == rb.task_id)
        {
            a.push(value(rb));
            b.push(value(rm));
        }
    }
    win_loss_draw(&a, &b, true)
}
