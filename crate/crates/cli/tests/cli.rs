use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn fleetsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fleetsim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn scenario(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(format!("{name}.toml"))
        .to_string_lossy()
        .into_owned()
}

#[test]
fn size_prints_every_rule() {
    let o = fleetsim(&["size", "--m", "10", "--r", "3.39"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for line in [
        "naive       10",
        "duty-cycle  40",
        "erlang-b    46",
        "proposed    50",
    ] {
        assert!(text.contains(line), "{text}");
    }
}

#[test]
fn size_from_scenario_file() {
    let o = fleetsim(&["size", "--scenario", &scenario("s4")]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("m = 7"));
    assert!(
        text.contains("duty-cycle  28")
            && text.contains("erlang-b    34")
            && text.contains("proposed    35")
    );
}

#[test]
fn oracle_examples() {
    let o = fleetsim(&["oracle", "--m", "7", "--r", "3.30", "--k", "28"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("exhausted at t = 4"));

    let o = fleetsim(&[
        "oracle",
        "--m",
        "7",
        "--r",
        "3.30",
        "--k",
        "35",
        "--mode",
        "worst_case",
    ]);
    assert!(stdout(&o).contains("verdict: no exhaustion"));

    let o = fleetsim(&[
        "oracle",
        "--m",
        "4",
        "--r",
        "2.15",
        "--k",
        "12",
        "--mode",
        "staggered",
    ]);
    assert!(stdout(&o).contains("verdict: no exhaustion"));
}

#[test]
fn reference_table_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ref.csv");
    let o = fleetsim(&["reference", "--out", path.to_str().unwrap()]);
    assert!(o.status.success());
    let text = fs::read_to_string(path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "epsilon,h,reference");
    assert_eq!(lines.len(), 101);
    let v: f64 = lines[69].rsplit(',').next().unwrap().parse().unwrap();
    assert!((0.4994..=0.5004).contains(&v));
}

#[test]
fn run_writes_outputs_and_exits_zero_even_when_methods_fail() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("res");
    let o = fleetsim(&[
        "run",
        "--scenario",
        &scenario("s2"),
        "--trials",
        "4",
        "--jobs",
        "2",
        "--seed",
        "11",
        "--out",
        out.to_str().unwrap(),
        "--dump-sites",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("naive"));
    for f in [
        "summary.csv",
        "trials.csv",
        "manifest.json",
        "sites_s2_trial0.csv",
    ] {
        assert!(out.join(f).exists(), "{f} missing");
    }
}

#[test]
fn sweep_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = fleetsim(&[
        "sweep",
        "--scenario",
        &scenario("s1"),
        "--methods",
        "naive,proposed",
        "--cv-list",
        "0,0.3",
        "--trials",
        "3",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let text = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn usage_and_config_errors_exit_one() {
    assert_eq!(fleetsim(&["run"]).status.code(), Some(1));
    assert_eq!(fleetsim(&["size", "--m", "2"]).status.code(), Some(1));
    assert_eq!(
        fleetsim(&["run", "--scenario", &scenario("s1"), "--methods", "greedy"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        fleetsim(&["oracle", "--m", "2", "--r", "1.5", "--k", "2", "--mode", "diagonal"])
            .status
            .code(),
        Some(1)
    );

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "site_count = 5\nflight_speed = fast\n").unwrap();
    let o = fleetsim(&[
        "run",
        "--scenario",
        bad.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.toml:2"), "{err}");
}

#[test]
fn help_exits_zero() {
    let o = fleetsim(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("oracle"));
}
