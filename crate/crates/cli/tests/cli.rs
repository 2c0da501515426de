use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use exciton_cli::output::{LearnedParameters, Manifest};

fn exciton(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_exciton"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_scenario(dir: &Path, name: &str, json: &str) -> String {
    let path = dir.join(format!("{name}.json"));
    fs::write(&path, json).unwrap();
    path.to_string_lossy().into_owned()
}

fn csv_rows(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

fn column(header: &[String], rows: &[Vec<String>], name: &str) -> Vec<f64> {
    let k = header.iter().position(|h| h == name).unwrap();
    rows.iter().map(|r| r[k].parse().unwrap()).collect()
}

#[test]
fn simulate_writes_trajectory_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write_scenario(dir.path(), "base", r#"{"name": "base", "times": {"t_end": 50}}"#);
    let out = dir.path().join("out");
    let res = exciton(&["simulate", "--scenario", &scenario, "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));

    let (header, rows) = csv_rows(&out.join("base.trajectory.csv"));
    assert_eq!(
        header.join(","),
        "t,p_rad,p_ant,p_site_1,p_site_2,p_site_3,p_site_4,p_sink,trace,sink_integral"
    );
    assert_eq!(rows.len(), 501);
    assert!(rows.iter().all(|r| r.len() == header.len()));
    for tr in column(&header, &rows, "trace") {
        assert!((tr - 1.0).abs() <= 1e-8);
    }
    let p = column(&header, &rows, "p_sink");
    assert!(p.windows(2).all(|w| w[1] >= w[0]));

    let text = fs::read_to_string(out.join("base.manifest.json")).unwrap();
    let manifest: Manifest = serde_json::from_str(&text).unwrap();
    assert_eq!(exciton_cli::output::to_json(&manifest), text);
    assert_eq!(manifest.version, env!("CARGO_PKG_VERSION"));
    assert_eq!(manifest.scenario.times.dt, Some(1e-3));
    assert!(manifest.convergence.converged);
}

#[test]
fn resonant_default_run_matches_regression() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write_scenario(dir.path(), "reg", r#"{"name": "reg"}"#);
    let res = exciton(&[
        "simulate",
        "--scenario",
        &scenario,
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(res.status.success());
    let (header, rows) = csv_rows(&dir.path().join("reg.trajectory.csv"));
    let last = rows.last().unwrap();
    assert_eq!(last[0], "1.20000000000e3");
    let p_sink: f64 = last[header.iter().position(|h| h == "p_sink").unwrap()]
        .parse()
        .unwrap();
    assert!((p_sink - 0.9998862218536902).abs() < 1e-10);
}

#[test]
fn sink_initialised_run_stays_in_sink() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write_scenario(
        dir.path(),
        "sink",
        r#"{"name": "sink", "initial": "sink", "times": {"t_end": 20}}"#,
    );
    let res = exciton(&[
        "simulate",
        "--scenario",
        &scenario,
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(res.status.success());
    let (header, rows) = csv_rows(&dir.path().join("sink.trajectory.csv"));
    assert!(column(&header, &rows, "p_sink").iter().all(|&p| p == 1.0));
}

#[test]
fn bad_scenarios_exit_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_scenario(dir.path(), "bad", r#"{"name": "bad", "lambda": {"sink_rate": -0.1}}"#);
    let res = exciton(&["simulate", "--scenario", &bad, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("lambda.sink_rate"), "{err}");

    let res = exciton(&["simulate", "--preset", "fig3"]);
    assert_eq!(res.status.code(), Some(2));
    let res = exciton(&["simulate", "--scenario", "/nonexistent/x.json"]);
    assert_eq!(res.status.code(), Some(1));
}

#[test]
fn divergence_exits_with_code_three() {
    let dir = tempfile::tempdir().unwrap();
    let s = write_scenario(
        dir.path(),
        "blowup",
        r#"{"name": "blowup", "lambda": {"dephasing": 1e6}, "times": {"dt": 0.1, "t_l": 1, "t_end": 10}}"#,
    );
    let res = exciton(&["simulate", "--scenario", &s, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(3), "{}", String::from_utf8_lossy(&res.stderr));
}

#[test]
fn strict_convergence_rejects_coarse_steps() {
    let dir = tempfile::tempdir().unwrap();
    let s = write_scenario(
        dir.path(),
        "coarse",
        r#"{"name": "coarse", "times": {"dt": 0.5, "t_l": 3, "t_end": 3}}"#,
    );
    let out = dir.path().to_str().unwrap();
    assert!(exciton(&["simulate", "--scenario", &s, "--out", out]).status.success());
    let res = exciton(&["simulate", "--scenario", &s, "--out", out, "--strict-convergence"]);
    assert_eq!(res.status.code(), Some(4));
}

#[test]
fn zero_iterations_reproduce_the_unoptimised_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let s = write_scenario(
        dir.path(),
        "zero",
        r#"{"name": "zero", "omega_r": 15, "strategy": {"kind": "couplings"},
            "adam": {"iterations": 0}, "restarts": 1, "times": {"t_end": 60}}"#,
    );
    let out = dir.path().to_str().unwrap();
    assert!(exciton(&["simulate", "--scenario", &s, "--out", out]).status.success());
    let res = exciton(&["optimize", "--scenario", &s, "--out", out]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let plain = fs::read_to_string(dir.path().join("zero.trajectory.csv")).unwrap();
    let optimised = fs::read_to_string(dir.path().join("zero.optimized.csv")).unwrap();
    assert_eq!(plain, optimised);

    let params: LearnedParameters =
        serde_json::from_str(&fs::read_to_string(dir.path().join("zero.params.json")).unwrap()).unwrap();
    assert_eq!(params.best_params, vec![1.0, 1.0]);
    assert_eq!(params.best_objective, params.unoptimized_objective);
    assert_eq!(params.history, vec![vec![params.best_objective]]);
}

#[test]
fn optimisation_is_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let s = write_scenario(
        dir.path(),
        "drv",
        r#"{"name": "drv", "omega_r": 15, "strategy": {"kind": "driving", "terms": 1},
            "adam": {"iterations": 3}, "restarts": 3, "times": {"t_l": 5, "t_end": 20, "dt": 0.002}}"#,
    );
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let out = dir.path().join(format!("t{threads}"));
        let res = exciton(&[
            "optimize",
            "--scenario",
            &s,
            "--out",
            out.to_str().unwrap(),
            "--threads",
            threads,
        ]);
        assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
        let files: Vec<String> = ["drv.params.json", "drv.optimized.csv", "drv.manifest.json"]
            .iter()
            .map(|f| fs::read_to_string(out.join(f)).unwrap())
            .collect();
        outputs.push(files);
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn single_point_sweep_picks_that_point() {
    let dir = tempfile::tempdir().unwrap();
    let s = write_scenario(
        dir.path(),
        "one",
        r#"{"name": "one", "sweep": {"min": 0.3, "max": 0.3, "step": 0.01}}"#,
    );
    let res = exciton(&["sweep", "--scenario", &s, "--out", dir.path().to_str().unwrap()]);
    assert!(res.status.success());
    let (header, rows) = csv_rows(&dir.path().join("one.sweep.csv"));
    assert_eq!(header, vec!["omega_r", "ip"]);
    assert_eq!(rows.len(), 1);
    let manifest: Manifest =
        serde_json::from_str(&fs::read_to_string(dir.path().join("one.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.sweep_argmax.unwrap().omega_r, 0.3);
}

#[test]
fn identical_scenarios_compare_to_one() {
    let dir = tempfile::tempdir().unwrap();
    let s = write_scenario(
        dir.path(),
        "pair",
        r#"[{"name": "a", "times": {"t_end": 40}}, {"name": "b", "times": {"t_end": 40}}]"#,
    );
    let res = exciton(&["compare", "--scenario", &s, "--out", dir.path().to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let (header, rows) = csv_rows(&dir.path().join("pair.compare.csv"));
    assert_eq!(header, vec!["t", "ratio_b"]);
    // p_sink(0) = 0 leaves the first field empty
    assert_eq!(rows[0][1], "");
    let filled: Vec<f64> = rows
        .iter()
        .filter(|r| !r[1].is_empty())
        .map(|r| r[1].parse().unwrap())
        .collect();
    assert!(filled.len() > rows.len() / 2);
    assert!(filled.iter().all(|&x| x == 1.0));
}

#[test]
fn compare_rejects_mismatched_grids() {
    let dir = tempfile::tempdir().unwrap();
    let s = write_scenario(
        dir.path(),
        "mismatch",
        r#"[{"name": "a", "times": {"t_end": 40}}, {"name": "b", "times": {"t_end": 20}}]"#,
    );
    let res = exciton(&["compare", "--scenario", &s, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn verify_default_scenario_passes() {
    let dir = tempfile::tempdir().unwrap();
    let s = write_scenario(dir.path(), "nn4", r#"{"name": "nn4"}"#);
    let res = exciton(&["verify", "--scenario", &s]);
    let table = String::from_utf8_lossy(&res.stdout);
    assert!(res.status.success(), "{table}");
    for check in [
        "oracle",
        "dt_convergence",
        "gradient[driving_r1]",
        "gradient[couplings]",
        "gradient[site_energies]",
        "invariants",
    ] {
        assert!(
            table.lines().any(|l| l.contains(check) && l.contains("PASS")),
            "{check}\n{table}"
        );
    }
}

#[test]
fn verify_fails_on_coarse_fmo_step() {
    let dir = tempfile::tempdir().unwrap();
    let s = write_scenario(
        dir.path(),
        "fmo",
        r#"{"name": "fmo", "network": {"kind": "fmo"}, "omega_r": 0.242,
            "strategy": {"kind": "couplings"}, "times": {"dt": 0.1, "t_end": 30}}"#,
    );
    let res = exciton(&["verify", "--scenario", &s]);
    assert_eq!(res.status.code(), Some(4));
    let table = String::from_utf8_lossy(&res.stdout);
    assert!(
        table
            .lines()
            .any(|l| l.contains("dt_convergence") && l.contains("FAIL")),
        "{table}"
    );
}

#[test]
fn verify_without_sink_coupling() {
    let dir = tempfile::tempdir().unwrap();
    let s = write_scenario(
        dir.path(),
        "nosink",
        r#"{"name": "nosink", "lambda": {"sink_rate": 0}, "strategy": {"kind": "couplings"}, "times": {"t_end": 100}}"#,
    );
    let res = exciton(&["verify", "--scenario", &s]);
    let table = String::from_utf8_lossy(&res.stdout);
    assert!(res.status.success(), "{table}");
    assert!(table.lines().any(|l| l.contains("zero_sink") && l.contains("PASS")));
}
