//! Result documents and their csv, json and markdown renderings.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::{ComparisonReport, MetricRecord};
use crate::solver::FitResult;
use crate::Scalar;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("unknown format {0:?}; expected csv, json or md")]
    UnknownFormat(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    #[serde(rename = "md")]
    Markdown,
}

impl std::str::FromStr for Format {
    type Err = ReportError;
    fn from_str(s: &str) -> Result<Self, ReportError> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "md" | "markdown" => Ok(Format::Markdown),
            other => Err(ReportError::UnknownFormat(other.to_string())),
        }
    }
}

/// Comparison reports of one experiment, one per task definition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub methods: Vec<String>,
    pub benchmark: String,
    pub runs: Vec<ComparisonReport>,
}

/// Definitions × methods table of overall errors. With more than one
/// definition a trailing row holds the column means.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryTable {
    pub metric: &'static str,
    pub methods: Vec<String>,
    pub rows: Vec<(String, Vec<Option<f64>>)>,
}

pub fn summary_table(report: &ExperimentReport, metric: &'static str) -> SummaryTable {
    let mut rows: Vec<(String, Vec<Option<f64>>)> = report
        .runs
        .iter()
        .map(|run| {
            let cells = report
                .methods
                .iter()
                .map(|m| {
                    run.methods
                        .iter()
                        .find(|s| &s.method == m)
                        .map(|s| if metric == "rmse" { s.rmse } else { s.mae })
                })
                .collect();
            (run.definition.clone(), cells)
        })
        .collect();
    if rows.len() < 2 {
        return SummaryTable {
            metric,
            methods: report.methods.clone(),
            rows,
        };
    }
    let mean = (0..report.methods.len())
        .map(|j| {
            let vals: Vec<f64> = rows.iter().filter_map(|r| r.1[j]).collect();
            (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
        })
        .collect();
    rows.push(("mean".to_string(), mean));
    SummaryTable {
        metric,
        methods: report.methods.clone(),
        rows,
    }
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

pub fn summary_csv(table: &SummaryTable) -> Result<String, ReportError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["definition".to_string()];
    header.extend(table.methods.iter().cloned());
    w.write_record(&header)?;
    for (def, cells) in &table.rows {
        let mut row = vec![def.clone()];
        row.extend(cells.iter().map(|&c| cell(c)));
        w.write_record(&row)?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?).expect("csv is utf-8"))
}

/// Markdown table with three decimals; the lowest value of each row is
/// bolded (every tied cell, after rounding).
pub fn summary_markdown(table: &SummaryTable) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "| definition | {} |", table.methods.join(" | "));
    let _ = writeln!(out, "|---|{}", "---:|".repeat(table.methods.len()));
    for (def, cells) in &table.rows {
        let rounded: Vec<Option<String>> = cells.iter().map(|c| c.map(|x| format!("{x:.3}"))).collect();
        let best = cells
            .iter()
            .flatten()
            .map(|x| (x * 1000.0).round())
            .fold(f64::INFINITY, f64::min);
        let shown: Vec<String> = cells
            .iter()
            .zip(&rounded)
            .map(|(c, r)| match (c, r) {
                (Some(x), Some(s)) if (x * 1000.0).round() == best => format!("**{s}**"),
                (_, Some(s)) => s.clone(),
                _ => "-".to_string(),
            })
            .collect();
        let _ = writeln!(out, "| {def} | {} |", shown.join(" | "));
    }
    out
}

pub fn rank_sum_csv(report: &ExperimentReport) -> Result<String, ReportError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["definition", "benchmark", "method", "metric", "statistic", "p_value", "significant", "exact"])?;
    for run in &report.runs {
        for r in &run.rank_sum {
            w.write_record([
                run.definition.as_str(),
                run.benchmark.as_str(),
                &r.method,
                &r.metric,
                &format!("{}", r.statistic),
                &format!("{:.6e}", r.p_value),
                &r.significant.to_string(),
                &r.exact.to_string(),
            ])?;
        }
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?).expect("csv is utf-8"))
}

pub fn wld_csv(report: &ExperimentReport) -> Result<String, ReportError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["definition", "benchmark", "method", "metric", "group", "win", "loss", "draw", "units"])?;
    for run in &report.runs {
        for r in &run.win_loss_draw {
            w.write_record([
                run.definition.as_str(),
                run.benchmark.as_str(),
                &r.method,
                &r.metric,
                &r.group,
                &r.win.to_string(),
                &r.loss.to_string(),
                &r.draw.to_string(),
                &r.units.to_string(),
            ])?;
        }
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?).expect("csv is utf-8"))
}

fn rank_sum_markdown(report: &ExperimentReport) -> String {
    let mut out = String::from("| definition | method | metric | statistic | p-value | significant |\n|---|---|---|---:|---:|---|\n");
    for run in &report.runs {
        for r in &run.rank_sum {
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} | {:.4} | {} |",
                run.definition,
                r.method,
                r.metric,
                r.statistic,
                r.p_value,
                if r.significant { "yes" } else { "no" }
            );
        }
    }
    out
}

/// Win/loss/draw table for one metric, quartile groups as columns.
fn wld_markdown(report: &ExperimentReport, metric: &str) -> String {
    let mut out = format!(
        "| definition | {} vs | all | Q1 | Q2 | Q3 | Q4 |\n|---|---|---|---|---|---|---|\n",
        report.benchmark
    );
    for run in &report.runs {
        for m in &report.methods {
            if m == &run.benchmark {
                continue;
            }
            let cells: Vec<String> = ["all", "Q1", "Q2", "Q3", "Q4"]
                .iter()
                .map(|g| {
                    run.win_loss_draw
                        .iter()
                        .find(|r| &r.method == m && r.metric == metric && r.group == *g)
                        .map(|r| format!("{}/{}/{}", r.win, r.loss, r.draw))
                        .unwrap_or_else(|| "-".into())
                })
                .collect();
            let _ = writeln!(out, "| {} | {m} | {} |", run.definition, cells.join(" | "));
        }
    }
    out
}

pub fn records_csv(records: &[MetricRecord]) -> Result<String, ReportError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(r)?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?).expect("csv is utf-8"))
}

pub fn to_json(report: &ExperimentReport) -> Result<String, ReportError> {
    let mut s = serde_json::to_string_pretty(report)?;
    s.push('\n');
    Ok(s)
}

pub fn from_json(text: &str) -> Result<ExperimentReport, ReportError> {
    Ok(serde_json::from_str(text)?)
}

/// Rendered files as `(file name, contents)`, in a fixed order.
pub fn render(report: &ExperimentReport, format: Format) -> Result<Vec<(String, String)>, ReportError> {
    let rmse = summary_table(report, "rmse");
    let mae = summary_table(report, "mae");
    Ok(match format {
        Format::Json => vec![("report.json".into(), to_json(report)?)],
        Format::Csv => vec![
            ("summary_rmse.csv".into(), summary_csv(&rmse)?),
            ("summary_mae.csv".into(), summary_csv(&mae)?),
            ("rank_sum.csv".into(), rank_sum_csv(report)?),
            ("win_loss_draw.csv".into(), wld_csv(report)?),
        ],
        Format::Markdown => {
            let mut md = String::new();
            let _ = writeln!(md, "## RMSE\n\n{}", summary_markdown(&rmse));
            let _ = writeln!(md, "## MAE\n\n{}", summary_markdown(&mae));
            let _ = writeln!(md, "## Rank-sum tests against {}\n\n{}", report.benchmark, rank_sum_markdown(report));
            let _ = writeln!(md, "## Win/Loss/Draw of {} (RMSE)\n\n{}", report.benchmark, wld_markdown(report, "rmse"));
            let _ = write!(md, "## Win/Loss/Draw of {} (MAE)\n\n{}", report.benchmark, wld_markdown(report, "mae"));
            vec![("report.md".into(), md)]
        }
    })
}

/// Serializable view of a fit: weights keyed by feature name per task.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub feature_names: Vec<String>,
    pub task_ids: Vec<String>,
    /// `weights[p][j]` is the weight of feature `j` for task `p`.
    pub weights: Vec<Vec<f64>>,
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl FitReport {
    pub fn new<F: Scalar>(fit: &FitResult<F>, feature_names: &[String]) -> Self {
        let w = fit.weights.matrix();
        FitReport {
            feature_names: feature_names.to_vec(),
            task_ids: fit.weights.task_ids().to_vec(),
            weights: w
                .columns()
                .into_iter()
                .map(|c| c.iter().map(|v| v.to_f64_lossy()).collect())
                .collect(),
            objective_trace: fit.objective_trace.iter().map(|v| v.to_f64_lossy()).collect(),
            iterations: fit.iterations,
            converged: fit.converged,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::MethodSummary;

    fn summary(method: &str, rmse: f64) -> MethodSummary {
        MethodSummary {
            method: method.into(),
            rmse,
            mae: rmse / 2.0,
            n_records: 1,
            round_rmse: vec![rmse],
            round_mae: vec![rmse / 2.0],
        }
    }

    pub(crate) fn report() -> ExperimentReport {
        let run = |def: &str, vals: [f64; 3]| ComparisonReport {
            definition: def.into(),
            benchmark: "A".into(),
            alpha: 0.05,
            n_tasks: 3,
            rounds_planned: 1,
            rounds_evaluated: 1,
            methods: vec![summary("A", vals[0]), summary("B", vals[1]), summary("C", vals[2])],
            rank_sum: Vec::new(),
            win_loss_draw: Vec::new(),
            notices: Vec::new(),
        };
        ExperimentReport {
            methods: vec!["A".into(), "B".into(), "C".into()],
            benchmark: "A".into(),
            runs: vec![run("region:SA3", [0.2, 0.1, 0.3]), run("region:SA4", [0.25, 0.25, 0.4])],
        }
    }

    #[test]
    fn csv_shape() {
        let csv = summary_csv(&summary_table(&report(), "rmse")).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], "definition,A,B,C");
        assert_eq!(lines[3], "mean,0.225000,0.175000,0.350000");
    }

    #[test]
    fn markdown_bolds_row_minimum() {
        let md = summary_markdown(&summary_table(&report(), "rmse"));
        let rows: Vec<&str> = md.lines().skip(2).collect();
        assert_eq!(rows[0], "| region:SA3 | 0.200 | **0.100** | 0.300 |");
        assert_eq!(rows[1], "| region:SA4 | **0.250** | **0.250** | 0.400 |");
    }

    #[test]
    fn single_definition_has_no_mean_row() {
        let mut r = report();
        r.runs.truncate(1);
        let t = summary_table(&r, "mae");
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.rows[0].1[1], Some(0.05));
    }

    #[test]
    fn json_round_trip() {
        let r = report();
        assert_eq!(from_json(&to_json(&r).unwrap()).unwrap(), r);
    }

    #[test]
    fn formats_parse() {
        assert_eq!("md".parse::<Format>().unwrap(), Format::Markdown);
        assert!("xml".parse::<Format>().is_err());
    }
}
