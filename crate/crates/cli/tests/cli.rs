//! End-to-end tests of the `ttn` binary: exit codes, output determinism,
//! and agreement between the CSV tables and in-process recomputation.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

fn ttn() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ttn"))
}

fn write_config(dir: &Path, name: &str, cfg: &Value) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
    path
}

fn run(config: &Path, out: &Path, extra: &[&str]) -> Output {
    ttn()
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .expect("spawning ttn")
}

fn assert_code(out: &Output, want: i32) {
    assert_eq!(
        out.status.code(),
        Some(want),
        "stdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

/// CSV data rows: everything after the '#' metadata block and the header.
fn data_rows(path: &Path) -> Vec<Vec<String>> {
    let text = fs::read_to_string(path).unwrap();
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn csv_body(path: &Path) -> String {
    let text = fs::read_to_string(path).unwrap();
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .collect::<Vec<_>>()
        .join("\n")
        + "\n"
}

#[test]
fn outputs_are_byte_identical_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let approx = write_config(
        dir.path(),
        "approx.json",
        &json!({
            "command": "run_approx",
            "function": {"random": [5, 4, 3, 3]},
            "trees": ["trivial", "balanced_binary"],
            "ranks": [1, 2, 3],
            "seed": 11
        }),
    );
    let compose = write_config(
        dir.path(),
        "compose.json",
        &json!({
            "command": "run_compose",
            "spec": {"registry": "product-balanced-d4-s2"},
            "ranks": [2, 3],
            "oversample": 2
        }),
    );
    for (cfg, stem) in [(&approx, "approx"), (&compose, "compose")] {
        let runs = [
            (dir.path().join("r1"), vec![]),
            (dir.path().join("r2"), vec![]),
            (dir.path().join("r3"), vec!["--threads", "3"]),
        ];
        for (out, extra) in &runs {
            assert_code(&run(cfg, out, extra), 0);
        }
        let read = |sub: &Path, name: String| fs::read(sub.join(name)).unwrap();
        let first_csv = read(&runs[0].0, format!("{stem}.csv"));
        let first_sum = read(&runs[0].0, format!("{stem}_summary.json"));
        for (out, _) in &runs[1..] {
            assert_eq!(read(out, format!("{stem}.csv")), first_csv, "{stem} csv");
            assert_eq!(
                read(out, format!("{stem}_summary.json")),
                first_sum,
                "{stem} summary"
            );
        }
    }
}

#[test]
fn rejected_inputs_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");

    let unknown_field = write_config(
        dir.path(),
        "unknown.json",
        &json!({"command": "run_widths", "function": {"name": "sum", "d": 4}, "bogus": 1}),
    );
    assert_code(&run(&unknown_field, &out, &[]), 2);

    let missing_function = write_config(
        dir.path(),
        "missing_function.json",
        &json!({"command": "run_approx", "ranks": [1]}),
    );
    assert_code(&run(&missing_function, &out, &[]), 2);

    let unknown_registry = write_config(
        dir.path(),
        "unknown_registry.json",
        &json!({"command": "run_compose", "spec": {"registry": "nope"}, "ranks": [2]}),
    );
    assert_code(&run(&unknown_registry, &out, &[]), 2);

    assert_code(
        &run(&dir.path().join("no_such_file.json"), &out, &[]),
        2,
    );

    let fine = write_config(
        dir.path(),
        "fine.json",
        &json!({"command": "run_widths", "function": {"random": [3, 3]}}),
    );
    assert_code(&run(&fine, &out, &["--threads", "0"]), 2);

    // Usage errors from the argument parser use the same code.
    let none = ttn().output().unwrap();
    assert_code(&none, 2);
    let bad_flag = ttn().arg("--nope").output().unwrap();
    assert_code(&bad_flag, 2);
    let bad_model = ttn()
        .args(["predict", "--model", "nope", "--d", "2", "--s", "1", "--eps", "0.5"])
        .output()
        .unwrap();
    assert_code(&bad_model, 2);
}

#[test]
fn understated_derivative_bounds_trip_the_violation_exit() {
    // The declared first-derivative bound is 1, but the component's true
    // slope is ~18.5, so the certificate is built on false premises and the
    // measured error must expose it.
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "lying_spec.json",
        &json!({
            "command": "run_compose",
            "spec": {
                "tree": [[1, 2], [[1]], [[2]]],
                "domain": [[0.0, 1.0], [0.0, 1.0]],
                "smoothness": 1,
                "derivative_bounds": [1.0],
                "components": {"1-2": {"expr": "0.5 + 0.5*sin(37.0*(u1+u2))"}}
            },
            "ranks": [4],
            "oversample": 8
        }),
    );
    let out = dir.path().join("out");
    let res = run(&cfg, &out, &[]);
    assert_code(&res, 3);
    let stderr = String::from_utf8_lossy(&res.stderr);
    assert!(stderr.contains("bound violation"), "{stderr}");

    // The run still completes and writes its table.
    let rows = data_rows(&out.join("compose.csv"));
    assert_eq!(rows.len(), 1);
    let linf_error: f64 = rows[0][3].parse().unwrap();
    let linf_bound: f64 = rows[0][4].parse().unwrap();
    assert!(linf_error > linf_bound * 1.5, "{linf_error} vs {linf_bound}");
}

#[test]
fn rank_one_functions_collapse_after_the_first_width() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "widths.json",
        &json!({
            "command": "run_widths",
            "function": {"name": "rank-one", "d": 4},
            "trees": ["balanced_binary"],
            "grid": 6
        }),
    );
    let out = dir.path().join("out");
    assert_code(&run(&cfg, &out, &[]), 0);
    let rows = data_rows(&out.join("widths.csv"));
    assert!(!rows.is_empty());
    for row in rows {
        let n: usize = row[1].parse().unwrap();
        let delta: f64 = row[3].parse().unwrap();
        if n >= 1 {
            assert!(
                delta <= 1e-12,
                "node {} keeps width {delta} after one rank",
                row[0]
            );
        }
    }
}

#[test]
fn widths_csv_matches_an_in_process_recomputation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "widths.json",
        &json!({
            "command": "run_widths",
            "function": {"random": [4, 3, 3]},
            "trees": ["linear_binary"],
            "seed": 9
        }),
    );
    let out = dir.path().join("out");
    assert_code(&run(&cfg, &out, &[]), 0);

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let t = treetensor::FullTensor::random_normal(vec![4, 3, 3], &mut rng).unwrap();
    let tree = treetensor::DimensionTree::linear_binary(3).unwrap();
    let profile = treetensor::width_profile(&t, &tree).unwrap();
    assert_eq!(csv_body(&out.join("widths.csv")), profile.to_csv());
}

#[test]
fn full_rank_projections_reach_machine_precision() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "approx.json",
        &json!({
            "command": "run_approx",
            "function": {"random": [4, 4, 4]},
            "trees": ["balanced_binary"],
            "ranks": [1, 4],
            "seed": 2
        }),
    );
    let out = dir.path().join("out");
    assert_code(&run(&cfg, &out, &[]), 0);
    let rows = data_rows(&out.join("approx.csv"));
    let last = rows.last().unwrap();
    let error: f64 = last[3].parse().unwrap();
    assert!(error <= 1e-10, "full-rank error {error}");
}

#[test]
fn structured_functions_need_far_fewer_parameters_on_matching_trees() {
    // The cube of a mean has every unfolding rank equal to 4, so a binary
    // tree stores it exactly with a fraction of the flat tree's core.
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "approx.json",
        &json!({
            "command": "run_approx",
            "function": {"name": "sum-power", "d": 6},
            "trees": ["trivial", "balanced_binary"],
            "ranks": [4],
            "grid": 5
        }),
    );
    let out = dir.path().join("out");
    assert_code(&run(&cfg, &out, &[]), 0);
    let rows = data_rows(&out.join("approx.csv"));
    assert_eq!(rows.len(), 2);
    let (trivial, balanced) = (&rows[0], &rows[1]);
    assert_eq!(trivial[0], "trivial");
    assert_eq!(balanced[0], "balanced_binary");
    let n_trivial: u128 = trivial[2].parse().unwrap();
    let n_balanced: u128 = balanced[2].parse().unwrap();
    let e_trivial: f64 = trivial[3].parse().unwrap();
    let e_balanced: f64 = balanced[3].parse().unwrap();
    assert!(e_trivial <= 1e-10 && e_balanced <= 1e-10, "{e_trivial}, {e_balanced}");
    assert!(
        n_balanced * 5 <= n_trivial,
        "expected a >= 5x saving, got {n_balanced} vs {n_trivial}"
    );
}

#[test]
fn schedule_rows_certify_their_target() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "compose.json",
        &json!({
            "command": "run_compose",
            "spec": {"registry": "mean-balanced-d4-s1"},
            "ranks": [2, 4, 8],
            "schedule_eps": 0.2,
            "oversample": 2
        }),
    );
    let out = dir.path().join("out");
    assert_code(&run(&cfg, &out, &[]), 0);

    let rows = data_rows(&out.join("compose.csv"));
    let sched = rows.iter().find(|r| r[0] == "schedule").expect("schedule row");
    let linf_error: f64 = sched[3].parse().unwrap();
    let linf_bound: f64 = sched[4].parse().unwrap();
    assert!(linf_bound <= 0.2 + 1e-12, "certificate {linf_bound}");
    assert!(linf_error <= linf_bound, "{linf_error} vs {linf_bound}");

    let summary: Value =
        serde_json::from_str(&fs::read_to_string(out.join("compose_summary.json")).unwrap())
            .unwrap();
    let ranks: Vec<u64> = summary["schedule"]["ranks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_u64().unwrap())
        .collect();
    assert_eq!(ranks.iter().max(), Some(&30));
    assert!(summary["fit"]["slope"].as_f64().unwrap() < 0.0);
}

#[test]
fn predict_prints_the_documented_json() {
    let out = ttn()
        .args(["predict", "--model", "sobolev", "--d", "4", "--s", "2", "--eps", "0.1"])
        .output()
        .unwrap();
    assert_code(&out, 0);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["model"], "sobolev");
    assert!((v["value"].as_f64().unwrap() - 100.0).abs() < 1e-9);
    assert!(!v["caveats"].as_array().unwrap().is_empty());

    let out = ttn()
        .args([
            "predict",
            "--model",
            "compositional-bounded-arity",
            "--d",
            "16",
            "--s",
            "1",
            "--eps",
            "0.1",
            "--arity",
            "2",
            "--depth",
            "2",
        ])
        .output()
        .unwrap();
    assert_code(&out, 0);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["value"].as_f64().unwrap() - 8000.0).abs() < 1e-6);
}

#[test]
fn seed_flag_overrides_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "widths.json",
        &json!({
            "command": "run_widths",
            "function": {"random": [3, 3, 3]},
            "seed": 0
        }),
    );
    let out0 = dir.path().join("o0");
    let out1 = dir.path().join("o1");
    assert_code(&run(&cfg, &out0, &[]), 0);
    assert_code(&run(&cfg, &out1, &["--seed", "1"]), 0);
    let a = fs::read_to_string(out0.join("widths.csv")).unwrap();
    let b = fs::read_to_string(out1.join("widths.csv")).unwrap();
    assert!(a.contains("# seed: 0\n"));
    assert!(b.contains("# seed: 1\n"));
    assert_ne!(csv_body(&out0.join("widths.csv")), csv_body(&out1.join("widths.csv")));
}
