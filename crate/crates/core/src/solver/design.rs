//! Per-task design matrices: standardized numeric features, drop-first
//! one-hot categoricals, trailing intercept. Key columns only identify
//! tasks and never enter the design.

use std::collections::{BTreeSet, HashSet};

use log::warn;
use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::{Result, SolverError, INTERCEPT};
use crate::data::{log_target, Dataset, FeatureKind, HouseRecord, MonthRange};
use crate::tasks::TaskSet;
use crate::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EncodedColumn {
    /// `(x − mean) / std`, or constant zero when `std` is zero.
    Numeric { slot: usize, mean: f64, std: f64 },
    /// Indicator of one non-reference level.
    OneHot { slot: usize, level: String },
    Intercept,
}

/// Maps a record to a design row. Statistics come from training rows only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignEncoder {
    names: Vec<String>,
    columns: Vec<EncodedColumn>,
}

impl DesignEncoder {
    /// Standardization statistics from `rows`; categorical levels from the
    /// whole dataset so the column count does not depend on the window.
    pub fn fit(dataset: &Dataset, rows: &[usize], notices: &mut Vec<String>) -> Self {
        let schema = dataset.schema();
        let mut names = Vec::new();
        let mut columns = Vec::new();
        for slot in 0..schema.n_features() {
            let entry = schema.feature(slot);
            match entry.kind {
                FeatureKind::Key => {}
                FeatureKind::Numeric => {
                    let n = rows.len() as f64;
                    let mean = rows.iter().map(|&i| dataset.record(i).num(slot)).sum::<f64>() / n;
                    let var = rows
                        .iter()
                        .map(|&i| (dataset.record(i).num(slot) - mean).powi(2))
                        .sum::<f64>()
                        / n;
                    let mut std = var.sqrt();
                    if std.is_nan() || std <= 1e-12 * mean.abs().max(1.0) {
                        notices.push(format!(
                            "feature {} has zero variance in the training window; encoded as zeros",
                            entry.name
                        ));
                        std = 0.0;
                    }
                    names.push(entry.name.clone());
                    columns.push(EncodedColumn::Numeric { slot, mean, std });
                }
                FeatureKind::Categorical => {
                    let levels: BTreeSet<&str> =
                        dataset.records().iter().map(|r| r.label(slot)).collect();
                    for level in levels.into_iter().skip(1) {
                        names.push(format!("{}={level}", entry.name));
                        columns.push(EncodedColumn::OneHot {
                            slot,
                            level: level.to_string(),
                        });
                    }
                }
            }
        }
        names.push(INTERCEPT.to_string());
        columns.push(EncodedColumn::Intercept);
        DesignEncoder { names, columns }
    }

    pub fn feature_names(&self) -> &[String] {
        &self.names
    }

    pub fn columns(&self) -> &[EncodedColumn] {
        &self.columns
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn encode<F: Scalar>(&self, record: &HouseRecord) -> Array1<F> {
        self.columns
            .iter()
            .map(|c| match c {
                EncodedColumn::Numeric { slot, mean, std } => {
                    if *std == 0.0 {
                        F::zero()
                    } else {
                        F::of((record.num(*slot) - mean) / std)
                    }
                }
                EncodedColumn::OneHot { slot, level } => {
                    if record.label(*slot) == level {
                        F::one()
                    } else {
                        F::zero()
                    }
                }
                EncodedColumn::Intercept => F::one(),
            })
            .collect()
    }

    pub fn encode_rows<F: Scalar>(&self, dataset: &Dataset, rows: &[usize]) -> Array2<F> {
        let mut x = Array2::zeros((rows.len(), self.n_columns()));
        for (r, &i) in rows.iter().enumerate() {
            x.row_mut(r).assign(&self.encode::<F>(dataset.record(i)));
        }
        x
    }
}

/// Training rows of one task.
#[derive(Clone, Debug, PartialEq)]
pub struct TaskBlock<F> {
    task_id: String,
    x: Array2<F>,
    y: Array1<F>,
    prices: Vec<f64>,
    records: Vec<usize>,
}

impl<F: Scalar> TaskBlock<F> {
    /// Block with prices recovered as `exp(y)` and no record provenance.
    pub fn new(task_id: impl Into<String>, x: Array2<F>, y: Array1<F>) -> Self {
        let prices = y.iter().map(|v| v.to_f64_lossy().exp()).collect();
        TaskBlock {
            task_id: task_id.into(),
            x,
            y,
            prices,
            records: Vec::new(),
        }
    }

    pub fn with_prices(mut self, prices: Vec<f64>) -> Self {
        self.prices = prices;
        self
    }

    pub fn task_id(&self) -> &str {
        &self.task_id
    }

    pub fn x(&self) -> &Array2<F> {
        &self.x
    }

    pub fn y(&self) -> &Array1<F> {
        &self.y
    }

    /// Raw sale prices of the rows.
    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    /// Dataset indices of the rows (empty for hand-built blocks).
    pub fn records(&self) -> &[usize] {
        &self.records
    }

    pub fn n_rows(&self) -> usize {
        self.y.len()
    }
}

/// Training data of all tasks sharing one column layout.
#[derive(Clone, Debug, PartialEq)]
pub struct TaskData<F> {
    tasks: Vec<TaskBlock<F>>,
    feature_names: Vec<String>,
    encoder: Option<DesignEncoder>,
    notices: Vec<String>,
}

impl<F: Scalar> TaskData<F> {
    /// Checks shapes; columns are named `x0, x1, …` with the last one the
    /// intercept.
    pub fn from_blocks(tasks: Vec<TaskBlock<F>>) -> Result<Self> {
        let d = tasks.first().map(|t| t.x.ncols()).unwrap_or(0);
        let mut names: Vec<String> = (0..d.saturating_sub(1)).map(|j| format!("x{j}")).collect();
        names.push(INTERCEPT.to_string());
        Self::assemble(tasks, names, None, Vec::new())
    }

    fn assemble(
        tasks: Vec<TaskBlock<F>>,
        feature_names: Vec<String>,
        encoder: Option<DesignEncoder>,
        notices: Vec<String>,
    ) -> Result<Self> {
        if tasks.is_empty() {
            return Err(SolverError::DimensionMismatch("no tasks".into()));
        }
        let d = feature_names.len();
        let mut seen = HashSet::new();
        for t in &tasks {
            if t.x.ncols() != d {
                return Err(SolverError::DimensionMismatch(format!(
                    "task {} has {} columns, expected {d}",
                    t.task_id,
                    t.x.ncols()
                )));
            }
            if t.x.nrows() == 0 || t.x.nrows() != t.y.len() || t.prices.len() != t.y.len() {
                return Err(SolverError::DimensionMismatch(format!(
                    "task {} has {} rows, {} targets and {} prices",
                    t.task_id,
                    t.x.nrows(),
                    t.y.len(),
                    t.prices.len()
                )));
            }
            if t.x.iter().chain(t.y.iter()).any(|v| !v.is_finite()) {
                return Err(SolverError::InvalidParams(format!(
                    "task {} has non-finite data",
                    t.task_id
                )));
            }
            if !seen.insert(t.task_id.as_str()) {
                return Err(SolverError::DimensionMismatch(format!(
                    "duplicate task {}",
                    t.task_id
                )));
            }
        }
        Ok(TaskData {
            tasks,
            feature_names,
            encoder,
            notices,
        })
    }

    pub fn tasks(&self) -> &[TaskBlock<F>] {
        &self.tasks
    }

    pub fn n_tasks(&self) -> usize {
        self.tasks.len()
    }

    /// Column count D, intercept included.
    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn task_ids(&self) -> Vec<String> {
        self.tasks.iter().map(|t| t.task_id.clone()).collect()
    }

    pub fn task_index(&self, id: &str) -> Option<usize> {
        self.tasks.iter().position(|t| t.task_id == id)
    }

    /// Encoder for new rows, present when built from a dataset.
    pub fn encoder(&self) -> Option<&DesignEncoder> {
        self.encoder.as_ref()
    }

    /// Exclusions and degenerate columns met while building.
    pub fn notices(&self) -> &[String] {
        &self.notices
    }

    /// The same data restricted to one task.
    pub fn single(&self, p: usize) -> TaskData<F> {
        TaskData {
            tasks: vec![self.tasks[p].clone()],
            feature_names: self.feature_names.clone(),
            encoder: self.encoder.clone(),
            notices: Vec::new(),
        }
    }
}

/// Training rows for each task from the records sold within `window`.
/// Tasks without such records are left out with a notice.
pub fn build_task_data<F: Scalar>(
    dataset: &Dataset,
    taskset: &TaskSet,
    window: MonthRange,
) -> Result<TaskData<F>> {
    let mut notices = Vec::new();
    let mut kept = Vec::new();
    for t in &taskset.tasks {
        let rows: Vec<usize> = t
            .members
            .iter()
            .copied()
            .filter(|&i| window.contains(dataset.record(i).sale_month))
            .collect();
        if rows.is_empty() {
            notices.push(format!("task {} has no records in {window}; excluded", t.id));
        } else {
            kept.push((t.id.clone(), rows));
        }
    }
    if kept.is_empty() {
        return Err(SolverError::EmptyWindow(window.to_string()));
    }
    let all_rows: Vec<usize> = kept.iter().flat_map(|(_, r)| r.iter().copied()).collect();
    let encoder = DesignEncoder::fit(dataset, &all_rows, &mut notices);
    let mut blocks = Vec::with_capacity(kept.len());
    for (id, rows) in kept {
        let x = encoder.encode_rows::<F>(dataset, &rows);
        let prices: Vec<f64> = rows.iter().map(|&i| dataset.record(i).price).collect();
        let y = prices
            .iter()
            .map(|&p| log_target(F::of(p)))
            .collect::<std::result::Result<Array1<F>, _>>()?;
        blocks.push(TaskBlock {
            task_id: id,
            x,
            y,
            prices,
            records: rows,
        });
    }
    for n in &notices {
        warn!("{n}");
    }
    TaskData::assemble(blocks, encoder.feature_names().to_vec(), Some(encoder), notices)
}
