use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use schatten_core::analysis::{experts_envelope, RateFit, RegretReport};
use serde_json::{json, Value};

fn bench() -> Command {
    Command::new(env!("CARGO_BIN_EXE_schatten-bench"))
}

fn run_config(dir: &Path, name: &str, config: &Value) -> Output {
    let path = dir.join(format!("{name}.json"));
    std::fs::write(&path, serde_json::to_string_pretty(config).unwrap()).unwrap();
    bench().arg("run").arg(&path).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn small_regret_config(out: &Path) -> Value {
    json!({
        "experiment": {
            "stream": {"kind": "schatten_lower", "T": 32, "p": 2, "c": 1, "seed": 0},
            "learner": {"kind": "ogd", "p": 2, "c": 1},
            "analysis": {"kind": "regret", "horizons": [8, 16, 32, 64, 128]}
        },
        "seed": 11,
        "trials": 3,
        "output_dir": out,
    })
}

#[test]
fn runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let config = small_regret_config(&out);
    assert_eq!(code(&run_config(tmp.path(), "a", &config)), 0);
    let first = read_dir_sorted(&out);
    std::fs::remove_dir_all(&out).unwrap();
    let second_run = run_config(tmp.path(), "a", &config);
    assert_eq!(code(&second_run), 0);
    assert_eq!(first, read_dir_sorted(&out));
    let names: Vec<&str> = first.iter().map(|f| f.0.as_str()).collect();
    assert_eq!(names, ["horizons.csv", "ratefit.json", "regret.csv", "report.json"]);
    assert!(String::from_utf8_lossy(&second_run.stdout).lines().count() >= 6);
}

#[test]
fn p2_preset_reports_a_square_root_rate() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let config = json!({"experiment": "thm2-p2", "trials": 3, "output_dir": out, "emit": ["csv", "json", "svg"]});
    let run = run_config(tmp.path(), "thm2", &config);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));

    let csv = std::fs::read_to_string(out.join("regret.csv")).unwrap();
    assert!(csv.starts_with("t,loss,cumulative\n"));
    assert_eq!(csv.lines().count(), 1025);

    let report: RegretReport = serde_json::from_slice(&std::fs::read(out.join("report.json")).unwrap()).unwrap();
    let horizon = report.per_round.len() as f64;
    assert!(report.regret >= horizon.sqrt() && report.regret <= 8.0 * horizon.sqrt());
    assert_eq!(report.metadata["config"], config);
    assert_eq!(report.metadata["version"], env!("CARGO_PKG_VERSION"));

    let fit: Value = serde_json::from_slice(&std::fs::read(out.join("ratefit.json")).unwrap()).unwrap();
    let slope = fit["slope"].as_f64().unwrap();
    assert!((0.4..=0.6).contains(&slope), "{slope}");
    assert_eq!(fit["metadata"]["config"], config);
    let svg = std::fs::read_to_string(out.join("regret.svg")).unwrap();
    assert_eq!(svg.matches(r#"data-series="envelope""#).count(), 2);
    assert!(std::fs::read_to_string(out.join("ratefit.svg")).unwrap().contains(r#"data-slope="0.5""#));
}

#[test]
fn separation_preset_stays_under_the_experts_envelope() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let run = run_config(tmp.path(), "thm4", &json!({"experiment": "thm4-separation", "trials": 2, "output_dir": out}));
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let report: RegretReport = serde_json::from_slice(&std::fs::read(out.join("report.json")).unwrap()).unwrap();
    assert!(report.regret <= experts_envelope(report.per_round.len()));
    assert_eq!(report.metadata["envelopes"][0]["experts"], true);
    let horizons = std::fs::read_to_string(out.join("horizons.csv")).unwrap();
    assert!(horizons.starts_with("T,trials,mean_regret,stderr,lower_bound,upper_envelope\n"));
}

#[test]
fn other_analyses_write_tables() {
    let tmp = tempfile::tempdir().unwrap();
    for (name, analysis, file) in [
        ("tree", json!({"kind": "rademacher_tree", "tree": "sign_aligned", "T": 8, "d": 8, "qs": [1, 2]}), "rademacher.csv"),
        ("witness", json!({"kind": "witness", "horizons": [4, 16]}), "witness.csv"),
        (
            "batch",
            json!({"kind": "batch_lower_bound", "construction": "realizable", "learners": ["erm"], "ns": [4], "p": 2, "c": 1}),
            "batch.csv",
        ),
    ] {
        let out = tmp.path().join(name);
        let config = json!({"experiment": {"analysis": analysis}, "trials": 4, "output_dir": out});
        let run = run_config(tmp.path(), name, &config);
        assert_eq!(code(&run), 0, "{name}: {}", String::from_utf8_lossy(&run.stderr));
        let table = std::fs::read_to_string(out.join(file)).unwrap();
        assert!(table.lines().count() >= 2, "{name}");
        assert!(!table.contains("false"), "{name}: {table}");
    }
}

#[test]
fn malformed_configs_exit_2_without_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let mut unknown_key = small_regret_config(&out);
    unknown_key["trails"] = json!(3);
    let mut bad_learner = small_regret_config(&out);
    bad_learner["experiment"]["learner"]["kind"] = json!("perceptron");
    for config in [
        unknown_key,
        bad_learner,
        json!({"experiment": "thm9", "output_dir": out}),
        json!({"experiment": "thm2-p2", "trials": 1, "output_dir": out}),
        json!({"experiment": {"analysis": {"kind": "regret"}}, "output_dir": out}),
    ] {
        let run = run_config(tmp.path(), "bad", &config);
        assert_eq!(code(&run), 2, "{config}: {}", String::from_utf8_lossy(&run.stderr));
        assert!(!out.exists());
    }
    std::fs::write(tmp.path().join("garbage.json"), "{\"experiment\": ").unwrap();
    let run = bench().arg("run").arg(tmp.path().join("garbage.json")).output().unwrap();
    assert_eq!(code(&run), 2);
    assert!(String::from_utf8_lossy(&run.stderr).contains("line"));
}

#[test]
fn infeasible_configs_exit_3_and_name_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let mut config = small_regret_config(&out);
    config["experiment"]["stream"]["d"] = json!(4);
    let run = run_config(tmp.path(), "dims", &config);
    assert_eq!(code(&run), 3);
    assert!(String::from_utf8_lossy(&run.stderr).contains("experiment.stream"));
    assert!(!out.exists());
}

#[test]
fn io_errors_exit_4() {
    let run = bench().arg("run").arg("/nonexistent/config.json").output().unwrap();
    assert_eq!(code(&run), 4);
    let tmp = tempfile::tempdir().unwrap();
    let blocker = tmp.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let config = small_regret_config(&blocker.join("out"));
    assert_eq!(code(&run_config(tmp.path(), "c", &config)), 4);
}

fn write_report(dir: &Path) -> PathBuf {
    let out = dir.join("out");
    assert_eq!(code(&run_config(dir, "r", &small_regret_config(&out))), 0);
    out
}

#[test]
fn plot_renders_reports_and_fits() {
    let tmp = tempfile::tempdir().unwrap();
    let out = write_report(tmp.path());
    let svg = tmp.path().join("plots/regret.svg");
    std::fs::create_dir_all(svg.parent().unwrap()).unwrap();
    let run = bench().arg("plot").arg(out.join("report.json")).arg(&svg).output().unwrap();
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let text = std::fs::read_to_string(&svg).unwrap();
    assert!(text.starts_with("<svg") && text.contains(r#"data-series="comparator""#));

    let fit_svg = tmp.path().join("fit.svg");
    assert_eq!(code(&bench().arg("plot").arg(out.join("ratefit.json")).arg(&fit_svg).output().unwrap()), 0);
    let fit: RateFit = serde_json::from_slice(&std::fs::read(out.join("ratefit.json")).unwrap()).unwrap();
    let text = std::fs::read_to_string(&fit_svg).unwrap();
    assert!(text.contains(r#"data-slope="0.5""#));
    assert!(text.contains(&format!(r#"data-slope="{}""#, fit.slope)));
}

#[test]
fn plot_rejects_empty_and_malformed_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let empty = tmp.path().join("empty.json");
    std::fs::write(
        &empty,
        r#"{"per_round": [], "comparator_loss": 0.0, "regret": 0.0, "comparator_source": "closed_form"}"#,
    )
    .unwrap();
    let svg = tmp.path().join("out.svg");
    assert_eq!(code(&bench().arg("plot").arg(&empty).arg(&svg).output().unwrap()), 2);
    assert!(!svg.exists());
    std::fs::write(&empty, r#"{"slope": "steep"}"#).unwrap();
    assert_eq!(code(&bench().arg("plot").arg(&empty).arg(&svg).output().unwrap()), 2);
    assert!(!svg.exists());
}

#[test]
fn verify_unit_passes_and_validates_flags() {
    let run = bench().args(["verify", "unit"]).env("SCHATTEN_BENCH_THREADS", "1").output().unwrap();
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stdout));
    let table = String::from_utf8_lossy(&run.stdout);
    assert_eq!(table.matches("PASS").count(), 8);
    assert!(table.contains("8 passed, 0 failed"));

    assert_eq!(code(&bench().args(["verify", "unit", "--trials", "1"]).output().unwrap()), 2);
    assert_eq!(code(&bench().args(["verify", "unit"]).env("SCHATTEN_BENCH_THREADS", "0").output().unwrap()), 2);
    assert_ne!(code(&bench().args(["verify", "everything"]).output().unwrap()), 0);
}
