//! Experiment driver behind the `hpmtl` binary: configuration, the
//! `generate`, `run` and `report` commands, and output file layout.

pub mod config;

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use hpmtl::data::{generate_synthetic, load_dataset, save_dataset, Dataset, PlantedModel};
use hpmtl::eval::{make_rolling_plan, run_backtest, BacktestOptions, MetricRecord};
use hpmtl::report::{self, ExperimentReport, Format};
use log::{info, warn};

pub use config::ExperimentConfig;

/// Marker left in the output directory while a run is in progress or after
/// it failed.
pub const INCOMPLETE_MARKER: &str = "INCOMPLETE";
pub const REPORT_FILE: &str = "report.json";
pub const METRICS_FILE: &str = "metrics.csv";

/// Files written by `generate`.
pub const DATASET_FILE: &str = "dataset.csv";
pub const SCHEMA_FILE: &str = "schema.toml";
pub const PLANTED_FILE: &str = "planted_weights.csv";
pub const SYNTHETIC_FILE: &str = "synthetic.toml";

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))
}

fn planted_csv(model: &PlantedModel) -> String {
    let w = model.weights.matrix();
    let mut out = format!("feature,{}\n", model.weights.task_ids().join(","));
    for (j, name) in model.feature_names.iter().enumerate() {
        let row: Vec<String> = w.row(j).iter().map(|v| v.to_string()).collect();
        out.push_str(&format!("{name},{}\n", row.join(",")));
    }
    out
}

/// Writes the synthetic dataset, its schema, the planted weights and the
/// effective generator settings.
pub fn cmd_generate(cfg: &ExperimentConfig, out: &Path, seed: Option<u64>) -> Result<()> {
    let Some(syn) = cfg.synthetic(seed) else {
        bail!("generate needs a [data.synthetic] table in the config");
    };
    let (dataset, planted) = generate_synthetic(&syn)?;
    ensure_dir(out)?;
    save_dataset(&dataset, out.join(DATASET_FILE))?;
    write(out, SCHEMA_FILE, &toml::to_string(dataset.schema())?)?;
    write(out, PLANTED_FILE, &planted_csv(&planted))?;
    write(out, SYNTHETIC_FILE, &toml::to_string(&syn)?)?;
    info!("wrote {} records to {}", dataset.len(), out.display());
    Ok(())
}

/// Dataset named by the config: loaded from disk or generated.
pub fn load_data(cfg: &ExperimentConfig, seed: Option<u64>) -> Result<Dataset> {
    if let Some(syn) = cfg.synthetic(seed) {
        return Ok(generate_synthetic(&syn)?.0);
    }
    let path = cfg.resolve(cfg.data.path.as_deref().expect("validated config has a data source"));
    let schema = cfg.schema()?;
    load_dataset(&path, &schema).with_context(|| format!("loading {}", path.display()))
}

/// Metric records of one task definition, keyed by its canonical text.
pub type DefinitionRecords = (String, Vec<MetricRecord>);

/// Runs every task definition and returns the report with each
/// definition's metric records.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    seed: Option<u64>,
) -> Result<(ExperimentReport, Vec<DefinitionRecords>)> {
    let dataset = load_data(cfg, seed)?;
    let plan = make_rolling_plan(&dataset, cfg.plan.k, cfg.plan.h)?;
    let mut options = BacktestOptions::new(&cfg.benchmark_label());
    options.alpha = cfg.alpha;
    options.solver = cfg.solver;
    let mut runs = Vec::new();
    let mut all_records = Vec::new();
    for def in cfg.task_definitions()? {
        info!("backtesting {def}");
        let (records, report) = run_backtest::<f64>(&dataset, &def, &cfg.methods, &plan, &options)
            .with_context(|| format!("task definition {def}"))?;
        for n in &report.notices {
            warn!("{def}: {n}");
        }
        all_records.push((def.to_string(), records));
        runs.push(report);
    }
    let report = ExperimentReport {
        methods: cfg.methods.iter().map(|m| m.label()).collect(),
        benchmark: options.benchmark,
        runs,
    };
    Ok((report, all_records))
}

fn metrics_csv(runs: &[DefinitionRecords]) -> Result<String> {
    let mut out = String::from("definition,round,method,task_id,n,rmse,mae,n_train,quartile\n");
    for (def, records) in runs {
        let quoted = if def.contains(',') || def.contains('"') {
            format!("\"{}\"", def.replace('"', "\"\""))
        } else {
            def.clone()
        };
        let body = report::records_csv(records)?;
        for l in body.lines().skip(1) {
            out.push_str(&format!("{quoted},{l}\n"));
        }
    }
    Ok(out)
}

/// Runs the experiment and writes `report.json`, `metrics.csv` and the csv
/// and markdown tables. A failed run leaves an `INCOMPLETE` file holding the
/// error next to whatever was written.
pub fn cmd_run(cfg: &ExperimentConfig, out: &Path, seed: Option<u64>) -> Result<()> {
    ensure_dir(out)?;
    write(out, INCOMPLETE_MARKER, "run in progress\n")?;
    let result = (|| {
        let (report, records) = run_experiment(cfg, seed)?;
        write(out, METRICS_FILE, &metrics_csv(&records)?)?;
        render_all(&report, out)
    })();
    match result {
        Ok(()) => {
            fs::remove_file(out.join(INCOMPLETE_MARKER))?;
            Ok(())
        }
        Err(e) => {
            write(out, INCOMPLETE_MARKER, &format!("{e:#}\n"))?;
            Err(e)
        }
    }
}

fn render_all(report: &ExperimentReport, out: &Path) -> Result<()> {
    for format in [Format::Json, Format::Csv, Format::Markdown] {
        for (name, contents) in report::render(report, format)? {
            write(out, &name, &contents)?;
        }
    }
    Ok(())
}

/// Renders the report of a finished run in `results` into `out`.
pub fn cmd_report(results: &Path, format: Format, out: &Path) -> Result<Vec<PathBuf>> {
    if results.join(INCOMPLETE_MARKER).exists() {
        bail!("results in {} are incomplete", results.display());
    }
    let path = results.join(REPORT_FILE);
    let text = fs::read_to_string(&path)
        .with_context(|| format!("no results found: cannot read {}", path.display()))?;
    let report = report::from_json(&text).with_context(|| format!("invalid {}", path.display()))?;
    ensure_dir(out)?;
    let mut written = Vec::new();
    for (name, contents) in report::render(&report, format)? {
        write(out, &name, &contents)?;
        written.push(out.join(name));
    }
    Ok(written)
}
