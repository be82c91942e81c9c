use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{TaskDefinition, TaskError};
use crate::data::{columns, Dataset, FeatureKind, MonthRange};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task {
    pub id: String,
    /// Ascending record indices into the dataset.
    pub members: Vec<usize>,
}

/// Tasks ordered by id; members of distinct tasks are disjoint and together
/// with `unassigned` cover every record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskSet {
    pub definition: TaskDefinition,
    pub tasks: Vec<Task>,
    pub unassigned: Vec<usize>,
}

impl TaskSet {
    pub fn n_tasks(&self) -> usize {
        self.tasks.len()
    }

    pub fn task(&self, id: &str) -> Option<&Task> {
        self.tasks
            .binary_search_by(|t| t.id.as_str().cmp(id))
            .ok()
            .map(|i| &self.tasks[i])
    }

    pub fn task_ids(&self) -> Vec<String> {
        self.tasks.iter().map(|t| t.id.clone()).collect()
    }
}

/// Per-record task label, `None` when the record matches no task.
type Labeller<'a> = Box<dyn Fn(usize) -> Option<String> + Sync + 'a>;

fn labeller<'a>(ds: &'a Dataset, def: &TaskDefinition) -> Result<Labeller<'a>, TaskError> {
    let schema = ds.schema();
    let key = |name: &str| schema.require(name, FeatureKind::Key);
    let num = |name: &str| schema.require(name, FeatureKind::Numeric);
    Ok(match def {
        TaskDefinition::Region(level) => {
            let col = level.column();
            let k = key(col)?;
            Box::new(move |i| Some(format!("{col}={}", ds.record(i).label(k))))
        }
        TaskDefinition::School {
            kind,
            rank_lo,
            rank_hi,
        } => {
            let (col, k) = match key(kind.district_column()) {
                Ok(k) => (kind.district_column(), k),
                Err(_) if schema.entry(kind.district_column()).is_none() => {
                    (columns::NEAR_SCH, key(columns::NEAR_SCH)?)
                }
                Err(e) => return Err(e.into()),
            };
            let r = num(kind.rank_column())?;
            let (lo, hi) = (*rank_lo as f64, *rank_hi as f64);
            Box::new(move |i| {
                let rec = ds.record(i);
                let rank = rec.num(r);
                (lo <= rank && rank <= hi).then(|| format!("{col}={}", rec.label(k)))
            })
        }
        TaskDefinition::Station(limit) => {
            let k = key(columns::STATION)?;
            let d = num(limit.column())?;
            let max = limit.value();
            Box::new(move |i| {
                let rec = ds.record(i);
                (rec.num(d) <= max).then(|| format!("{}={}", columns::STATION, rec.label(k)))
            })
        }
        TaskDefinition::Facility { kinds, .. } => {
            let slots = kinds
                .iter()
                .map(|f| Ok((f.column(), key(f.column())?)))
                .collect::<Result<Vec<_>, TaskError>>()?;
            Box::new(move |i| {
                let rec = ds.record(i);
                let parts: Vec<String> = slots
                    .iter()
                    .map(|(c, k)| format!("{c}={}", rec.label(*k)))
                    .collect();
                Some(parts.join("&"))
            })
        }
        TaskDefinition::Intersection(a, b) => {
            let la = labeller(ds, a)?;
            let lb = labeller(ds, b)?;
            Box::new(move |i| Some(format!("{}|{}", la(i)?, lb(i)?)))
        }
    })
}

/// Partitions the dataset's records according to `definition`.
pub fn define_tasks(dataset: &Dataset, definition: &TaskDefinition) -> Result<TaskSet, TaskError> {
    definition.validate().map_err(TaskError::Definition)?;
    let label = labeller(dataset, definition)?;
    let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    let mut unassigned = Vec::new();
    for i in 0..dataset.len() {
        match label(i) {
            Some(l) => groups.entry(l).or_default().push(i),
            None => unassigned.push(i),
        }
    }
    if groups.is_empty() {
        return Err(TaskError::EmptyTaskSet(definition.to_string()));
    }
    Ok(TaskSet {
        definition: definition.clone(),
        tasks: groups
            .into_iter()
            .map(|(id, members)| Task { id, members })
            .collect(),
        unassigned,
    })
}

/// Number of each task's records whose sale month lies in `window`.
pub fn window_counts(dataset: &Dataset, taskset: &TaskSet, window: MonthRange) -> Vec<usize> {
    taskset
        .tasks
        .iter()
        .map(|t| {
            t.members
                .iter()
                .filter(|&&i| window.contains(dataset.record(i).sale_month))
                .count()
        })
        .collect()
}

/// Drops tasks with fewer than `min_count` records in `window`; their
/// members become unassigned.
pub fn filter_min_samples(
    dataset: &Dataset,
    taskset: &TaskSet,
    window: MonthRange,
    min_count: usize,
) -> TaskSet {
    let counts = window_counts(dataset, taskset, window);
    let mut tasks = Vec::new();
    let mut unassigned = taskset.unassigned.clone();
    for (t, c) in taskset.tasks.iter().zip(counts) {
        if c >= min_count {
            tasks.push(t.clone());
        } else {
            unassigned.extend_from_slice(&t.members);
        }
    }
    unassigned.sort_unstable();
    TaskSet {
        definition: taskset.definition.clone(),
        tasks,
        unassigned,
    }
}

/// Tasks split into four groups by their window sample count.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuartileGrouping {
    /// Nearest-rank 25th, 50th and 75th percentiles of the counts.
    pub boundaries: (usize, usize, usize),
    pub groups: [Vec<String>; 4],
}

impl QuartileGrouping {
    /// Group index (0..4) of a task, if present.
    pub fn group_of(&self, task_id: &str) -> Option<usize> {
        self.groups
            .iter()
            .position(|g| g.iter().any(|t| t == task_id))
    }
}

/// Nearest-rank quartile boundaries of `counts` and the group (0..4) of
/// each count; `None` for fewer than four counts. See [`quartile_groups`].
pub fn quartile_bins(counts: &[usize]) -> Option<((usize, usize, usize), Vec<usize>)> {
    let n = counts.len();
    if n < 4 {
        return None;
    }
    let mut sorted = counts.to_vec();
    sorted.sort_unstable();
    let nearest_rank = |k: usize| sorted[(k * n).div_ceil(4) - 1];
    let boundaries = (nearest_rank(1), nearest_rank(2), nearest_rank(3));
    let bins = counts
        .iter()
        .map(|&c| (4 * sorted.partition_point(|&s| s <= c)).div_ceil(n) - 1)
        .collect();
    Some((boundaries, bins))
}

/// Bins tasks by the empirical distribution of their window counts: a task
/// whose count has cumulative share `F` (fraction of tasks with count ≤ its
/// own) lands in the group whose interval `(k/4, (k+1)/4]` contains `F`.
/// Ties therefore move together, towards the upper group.
pub fn quartile_groups(
    dataset: &Dataset,
    taskset: &TaskSet,
    window: MonthRange,
) -> Result<QuartileGrouping, TaskError> {
    let n = taskset.n_tasks();
    if n < 4 {
        return Err(TaskError::TooFewTasks(n));
    }
    let counts = window_counts(dataset, taskset, window);
    let (boundaries, bins) = quartile_bins(&counts).expect("at least 4 counts");
    let mut groups: [Vec<String>; 4] = Default::default();
    for (t, g) in taskset.tasks.iter().zip(bins) {
        groups[g].push(t.id.clone());
    }
    Ok(QuartileGrouping { boundaries, groups })
}
