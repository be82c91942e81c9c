//! Partitioning records into prediction tasks.

mod definition;
mod engine;

use thiserror::Error;

pub use definition::{
    Facility, ParseError, RegionLevel, SchoolKind, StationLimit, TaskDefinition,
};
pub use engine::{
    define_tasks, filter_min_samples, quartile_bins, quartile_groups, window_counts, QuartileGrouping, Task,
    TaskSet,
};

use crate::data::DataError;

#[derive(Debug, Error)]
pub enum TaskError {
    #[error("task definition error: {0}")]
    Definition(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("task definition {0} yields no tasks")]
    EmptyTaskSet(String),
    #[error("quartile grouping needs at least 4 tasks, got {0}")]
    TooFewTasks(usize),
}

impl From<DataError> for TaskError {
    fn from(e: DataError) -> Self {
        TaskError::Definition(e.to_string())
    }
}
