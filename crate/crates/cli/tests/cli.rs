use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn rtrw(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rtrw"))
        .args(args)
        .current_dir(dir)
        .env_remove("RTRW_WORKERS")
        .env_remove("RTRW_OUT")
        .output()
        .unwrap()
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

const DIRAC_LINEAR: &str = r#"
recipe = "linear_limit"
seed = 5

[run]
out = "dirac"

[experiment]
scales = [100, 1000]
replicas = 20
[experiment.trap]
kind = "dirac"
value = 1.0
"#;

#[test]
fn dirac_linear_run_passes_and_writes_every_file() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.toml"), DIRAC_LINEAR).unwrap();
    let out = rtrw(&["run", "c.toml"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let summary = fs::read_to_string(dir.path().join("dirac/summary.txt")).unwrap();
    assert!(summary.contains("mean S(N)/N"), "{summary}");
    assert!(summary.contains("all criteria pass"), "{summary}");
    let report: serde_json::Value = serde_json::from_str(
        fs::read_to_string(dir.path().join("dirac/report.jsonl")).unwrap().trim_end(),
    )
    .unwrap();
    assert_eq!(report["recipe"], "linear_limit");
    assert_eq!(report["scales"][1]["statistics"]["mean S(N)/N"], 1.0);
    let csv = fs::read_to_string(dir.path().join("dirac/samples/N=1000.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("replica,N,value,statistic"));
    assert_eq!(lines.next(), Some("0,1000,1.0,S(N)/N"));
    assert_eq!(csv.lines().count(), 21);
}

#[test]
fn results_are_never_appended_and_reruns_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.toml"), DIRAC_LINEAR).unwrap();
    let report = dir.path().join("dirac/report.jsonl");
    assert_eq!(rtrw(&["run", "c.toml", "--workers", "1"], dir.path()).status.code(), Some(0));
    let first = fs::read(&report).unwrap();

    let refused = rtrw(&["run", "c.toml"], dir.path());
    assert_eq!(refused.status.code(), Some(1));
    assert!(text(&refused.stderr).contains("--overwrite"), "{}", text(&refused.stderr));
    assert_eq!(fs::read(&report).unwrap(), first);

    let again = rtrw(&["run", "c.toml", "--overwrite", "--workers", "3"], dir.path());
    assert_eq!(again.status.code(), Some(0));
    assert_eq!(fs::read(&report).unwrap(), first);
}

#[test]
fn infinite_mean_surfaces_as_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = DIRAC_LINEAR.replace("kind = \"dirac\"\nvalue = 1.0", "kind = \"bouchaud\"\nalpha = 0.5");
    fs::write(dir.path().join("c.toml"), config).unwrap();
    let out = rtrw(&["run", "c.toml"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("infinite annealed mean"), "{}", text(&out.stderr));
}

#[test]
fn a_failed_criterion_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let config = DIRAC_LINEAR
        .replace("kind = \"dirac\"\nvalue = 1.0", "kind = \"exponential_fixed_mean\"\nmean = 1.0")
        + "[experiment.thresholds]\nmean_tolerance = 1e-9\n";
    fs::write(dir.path().join("c.toml"), config).unwrap();
    let out = rtrw(&["run", "c.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2), "{}", text(&out.stderr));
    assert!(text(&out.stdout).contains("[FAIL] mean_convergence"));
}

#[test]
fn schema_errors_name_the_line_and_key() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.toml"), DIRAC_LINEAR.replace("replicas = 20", "replica = 20")).unwrap();
    let out = rtrw(&["run", "c.toml"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = text(&out.stderr);
    assert!(err.contains("replica") && err.contains("line 10"), "{err}");

    fs::write(dir.path().join("s.toml"), DIRAC_LINEAR.replace("seed = 5\n", "")).unwrap();
    let out = rtrw(&["run", "s.toml"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("seed"));
    assert_eq!(rtrw(&["run", "s.toml", "--seed", "5"], dir.path()).status.code(), Some(0));
}

#[test]
fn environment_overrides_the_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.toml"), DIRAC_LINEAR).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_rtrw"))
        .args(["run", "c.toml"])
        .current_dir(dir.path())
        .env("RTRW_OUT", "elsewhere")
        .env("RTRW_WORKERS", "2")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    assert!(dir.path().join("elsewhere/report.jsonl").exists());
    assert!(!dir.path().join("dirac").exists());
}

#[test]
fn catalog_is_sorted_and_lists_thresholds() {
    let dir = tempfile::tempdir().unwrap();
    let out = rtrw(&["list-recipes", "--json"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let entries: Vec<serde_json::Value> = text(&out.stdout)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    let names: Vec<&str> = entries.iter().map(|e| e["name"].as_str().unwrap()).collect();
    let mut sorted = names.clone();
    sorted.sort();
    assert_eq!(names, sorted);
    assert_eq!(names.len(), 8);
    for e in &entries {
        assert!(e["defaults"]["thresholds"].is_object(), "{e}");
    }
    let toml = text(&rtrw(&["list-recipes"], dir.path()).stdout);
    assert!(toml.contains("[experiment.thresholds]"));
    assert!(toml.contains("hill_window = 0.1"));
}

#[test]
fn drift_calibration_is_exact_and_reused_by_runs() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"
recipe = "range_lln"
seed = 2

[run]
out = "drift"

[experiment]
scales = [100, 1000]
replicas = 10
tail_replicas = 100
calibration_replicas = 200
[experiment.skeleton]
kind = "drift"
dimension = 1
"#;
    fs::write(dir.path().join("c.toml"), config).unwrap();
    let out = rtrw(&["calibrate", "c.toml"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let table = fs::read_to_string(dir.path().join("drift/calibration.csv")).unwrap();
    let mut lines = table.lines();
    assert_eq!(lines.next(), Some("n,replicas,escape,escape_se,ell_star,ell_star_se"));
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(&fields[2..], ["1.0", "0.0", "1.0", "0.0"], "{line}");
    }
    let cached: Vec<_> = fs::read_dir(dir.path().join("drift/calibration-cache")).unwrap().collect();
    assert_eq!(cached.len(), 1);

    let run = rtrw(&["run", "c.toml"], dir.path());
    assert_eq!(run.status.code(), Some(0), "{}", text(&run.stderr));
    assert_eq!(fs::read_dir(dir.path().join("drift/calibration-cache")).unwrap().count(), 1);
    assert_eq!(rtrw(&["calibrate", "c.toml"], dir.path()).status.code(), Some(1));
}
