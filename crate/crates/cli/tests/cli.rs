use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hpmtl::data::{generate_synthetic, load_dataset, synthetic::NUMERIC_RANGES, FeatureKind, FeatureSchema};
use hpmtl_cli::{ExperimentConfig, INCOMPLETE_MARKER};
use tempfile::TempDir;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn hpmtl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hpmtl"))
        .args(args)
        .env_remove("HPMTL_OUT_DIR")
        .env_remove("HPMTL_THREADS")
        .output()
        .unwrap()
}

fn ok(out: Output) -> Output {
    assert!(
        out.status.success(),
        "exit {:?}\nstderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn sorted_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

/// Small synthetic config for fast runs; `methods` is raw TOML.
fn write_config(dir: &Path, definitions: &str, methods: &str) -> PathBuf {
    let text = format!(
        r#"definitions = {definitions}

[data.synthetic]
n_tasks = 8
n_features = 5
months = 6
shared_support_size = 2
coefficient_noise = 0.05
observation_noise = 0.1
seed = 3

[data.synthetic.samples]
min_per_month = 6
max_per_month = 9

{methods}
"#
    );
    let path = dir.join("exp.toml");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn generate_reproduces_committed_fixture() {
    let tmp = TempDir::new().unwrap();
    ok(hpmtl(&["generate", "--config", s(&fixtures().join("tiny.toml")), "--out", s(tmp.path())]));
    let fresh = sorted_files(tmp.path());
    let golden = sorted_files(&fixtures().join("tiny_generated"));
    assert_eq!(fresh.len(), 4);
    for ((name_a, a), (name_b, b)) in fresh.iter().zip(&golden) {
        assert_eq!(name_a, name_b);
        assert!(a == b, "{name_a} differs from the committed copy");
    }
}

#[test]
fn committed_fixture_loads_and_stays_in_range() {
    let dir = fixtures().join("tiny_generated");
    let schema: FeatureSchema = toml::from_str(&fs::read_to_string(dir.join("schema.toml")).unwrap()).unwrap();
    let ds = load_dataset(dir.join("dataset.csv"), &schema).unwrap();
    assert_eq!(ds.len(), 500);
    assert_eq!(ds.month_range().len(), 10);

    let cfg = ExperimentConfig::load(&fixtures().join("tiny.toml")).unwrap();
    let (fresh, _) = generate_synthetic(&cfg.synthetic(None).unwrap()).unwrap();
    assert_eq!(fresh, ds);

    for (j, entry) in schema.features().enumerate() {
        if entry.kind != FeatureKind::Numeric {
            continue;
        }
        let (_, lo, hi, _) = NUMERIC_RANGES.iter().find(|r| r.0 == entry.name).unwrap();
        for r in ds.records() {
            let v = r.num(j);
            assert!(*lo <= v && v <= *hi, "{} = {v} outside [{lo}, {hi}]", entry.name);
        }
    }
}

#[test]
fn generate_is_deterministic_and_spans_configured_months() {
    let tmp = TempDir::new().unwrap();
    let text = fs::read_to_string(fixtures().join("tiny.toml"))
        .unwrap()
        .replace("months = 10", "months = 39")
        .replace("min_per_month = 10\nmax_per_month = 10", "min_per_month = 1\nmax_per_month = 2");
    let cfg = tmp.path().join("c.toml");
    fs::write(&cfg, text).unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    ok(hpmtl(&["generate", "--config", s(&cfg), "--out", s(&a), "--seed", "9"]));
    ok(hpmtl(&["generate", "--config", s(&cfg), "--out", s(&b), "--seed", "9"]));
    assert_eq!(sorted_files(&a), sorted_files(&b));

    let schema: FeatureSchema = toml::from_str(&fs::read_to_string(a.join("schema.toml")).unwrap()).unwrap();
    let ds = load_dataset(a.join("dataset.csv"), &schema).unwrap();
    assert_eq!(ds.month_range().len(), 39);
    let snapshot = fs::read_to_string(a.join("synthetic.toml")).unwrap();
    assert!(snapshot.contains("seed = 9"));

    let c = tmp.path().join("c");
    ok(hpmtl(&["generate", "--config", s(&cfg), "--out", s(&c), "--seed", "10"]));
    assert_ne!(fs::read(a.join("dataset.csv")).unwrap(), fs::read(c.join("dataset.csv")).unwrap());
}

#[test]
fn one_definition_one_method_gives_one_row() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), r#"["region:SA3"]"#, "[[methods]]\nmodel = \"ols\"");
    let out = tmp.path().join("out");
    ok(hpmtl(&["run", "--config", s(&cfg), "--out", s(&out)]));
    assert!(!out.join(INCOMPLETE_MARKER).exists());
    let csv = fs::read_to_string(out.join("summary_rmse.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines, [lines[0], lines[1]]);
    assert_eq!(lines[0], "definition,OLS");
    assert!(lines[1].starts_with("region:SA3,"));
}

#[test]
fn three_mtl_methods_give_three_columns() {
    let tmp = TempDir::new().unwrap();
    let methods = r#"
[[methods]]
model = "mtl_lasso"
theta1 = [0.1]

[[methods]]
model = "mtl_group_l21"
theta1 = [0.1]

[[methods]]
model = "mtl_graph"
theta1 = [0.1]
theta2 = [0.1]
"#;
    let cfg = write_config(tmp.path(), r#"["region:SA3", "region:SA4"]"#, methods);
    let out = tmp.path().join("out");
    ok(hpmtl(&["run", "--config", s(&cfg), "--out", s(&out)]));
    let csv = fs::read_to_string(out.join("summary_mae.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "definition,MTL-L1,MTL-L21,MTL-GRAPH");
    assert_eq!(lines.len(), 4);
    assert!(lines[3].starts_with("mean,"));
    let md = fs::read_to_string(out.join("report.md")).unwrap();
    assert!(md.contains("| definition | MTL-L1 | MTL-L21 | MTL-GRAPH |"));
    let wld = fs::read_to_string(out.join("win_loss_draw.csv")).unwrap();
    assert!(wld.lines().count() > 1);
}

#[test]
fn report_renders_each_format_and_rejects_missing_results() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), r#"["region:SA3"]"#, "[[methods]]\nmodel = \"ols\"\n\n[[methods]]\nmodel = \"ridge\"");
    let res = tmp.path().join("res");
    ok(hpmtl(&["run", "--config", s(&cfg), "--out", s(&res)]));
    for (fmt, file) in [("md", "report.md"), ("json", "report.json"), ("csv", "summary_rmse.csv")] {
        let out = tmp.path().join(fmt);
        let stdout = ok(hpmtl(&["report", s(&res), "--format", fmt, "--out", s(&out)])).stdout;
        assert!(String::from_utf8(stdout).unwrap().contains(file));
        assert_eq!(fs::read(out.join(file)).unwrap(), fs::read(res.join(file)).unwrap());
    }
    let bad = hpmtl(&["report", s(&res), "--format", "xml", "--out", s(&tmp.path().join("x"))]);
    assert!(!bad.status.success());

    let missing = hpmtl(&["report", s(&tmp.path().join("nothing")), "--out", s(&tmp.path().join("y"))]);
    assert!(!missing.status.success());
    assert!(String::from_utf8_lossy(&missing.stderr).contains("no results"));
}

#[test]
fn failed_run_is_flagged_incomplete() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("bad.toml");
    fs::write(&cfg, "definitions = [\"region:SA3\"]\n[data]\npath = \"absent.csv\"\n[[methods]]\nmodel = \"ols\"\n").unwrap();
    let out = tmp.path().join("out");
    let run = hpmtl(&["run", "--config", s(&cfg), "--out", s(&out)]);
    assert!(!run.status.success());
    let stderr = String::from_utf8_lossy(&run.stderr);
    assert!(stderr.contains("absent.csv"), "{stderr}");
    let marker = fs::read_to_string(out.join(INCOMPLETE_MARKER)).unwrap();
    assert!(marker.contains("absent.csv"));

    let report = hpmtl(&["report", s(&out), "--out", s(&tmp.path().join("r"))]);
    assert!(!report.status.success());
    assert!(String::from_utf8_lossy(&report.stderr).contains("incomplete"));
}

#[test]
fn malformed_definition_reports_position() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), r#"["station:-5"]"#, "[[methods]]\nmodel = \"ols\"");
    let run = hpmtl(&["run", "--config", s(&cfg), "--out", s(&tmp.path().join("o"))]);
    assert!(!run.status.success());
    assert!(String::from_utf8_lossy(&run.stderr).contains("column 9"));
}

#[test]
fn environment_overrides_output_dir_and_threads() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), r#"["region:SA3"]"#, "[[methods]]\nmodel = \"ols\"");
    let env_out = tmp.path().join("from_env");
    let out = Command::new(env!("CARGO_BIN_EXE_hpmtl"))
        .args(["run", "--config", s(&cfg)])
        .env("HPMTL_OUT_DIR", &env_out)
        .env("HPMTL_THREADS", "2")
        .output()
        .unwrap();
    ok(out);
    assert!(env_out.join("report.json").exists());

    let flag_out = tmp.path().join("from_flag");
    let out = Command::new(env!("CARGO_BIN_EXE_hpmtl"))
        .args(["run", "--config", s(&cfg), "--out", s(&flag_out), "--threads", "1"])
        .env("HPMTL_OUT_DIR", &env_out)
        .output()
        .unwrap();
    ok(out);
    assert!(flag_out.join("report.json").exists());
    assert_eq!(fs::read(flag_out.join("report.json")).unwrap(), fs::read(env_out.join("report.json")).unwrap());

    let zero = Command::new(env!("CARGO_BIN_EXE_hpmtl"))
        .args(["run", "--config", s(&cfg), "--out", s(&flag_out)])
        .env("HPMTL_THREADS", "0")
        .output()
        .unwrap();
    assert!(!zero.status.success());
}

#[test]
fn loads_delimited_data_from_disk() {
    let tmp = TempDir::new().unwrap();
    let dir = fixtures().join("tiny_generated");
    let cfg = tmp.path().join("disk.toml");
    fs::write(
        &cfg,
        format!(
            "definitions = [\"region:SA3\"]\n[data]\npath = {:?}\nschema = {:?}\n[[methods]]\nmodel = \"ols\"\n",
            s(&dir.join("dataset.csv")),
            s(&dir.join("schema.toml"))
        ),
    )
    .unwrap();
    let out = tmp.path().join("o");
    ok(hpmtl(&["run", "--config", s(&cfg), "--out", s(&out)]));
    let metrics = fs::read_to_string(out.join("metrics.csv")).unwrap();
    // 7 rounds over 10 months with k = 3, 5 tasks each
    assert_eq!(metrics.lines().count(), 1 + 7 * 5);
}
