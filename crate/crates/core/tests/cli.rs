use std::path::PathBuf;
use std::process::{Command, Output};

use nullscreen::parallel::Execution;
use nullscreen::runner::report::RunReport;
use nullscreen::runner::{run, RunConfig};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nullscreen")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn golden_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/mink_cone_seed5.json")
}

const GOLDEN_ARGS: [&str; 12] = [
    "--entry",
    "mink_cone",
    "--n",
    "2",
    "--seed",
    "5",
    "--sample_count",
    "20",
    "--suites",
    "frames,shape,cartan,corollary",
    "--format",
    "json",
];

#[test]
fn passing_run_exits_zero() {
    let o = cli(&["--entry", "mink_hyperplane", "--sample_count", "20", "--suites", "frames,shape"]);
    assert_eq!(code(&o), 0);
    let out = String::from_utf8(o.stdout).unwrap();
    assert!(out.contains("result: PASS"));
}

#[test]
fn failing_check_exits_one() {
    let o = cli(&["--sample_count", "20", "--suites", "frames", "--tolerances.abs_eq", "1e-40"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn control_counts_only_when_included() {
    let base = ["--entry", "mink_ellipsoid_negcontrol", "--sample_count", "20", "--suites", "shape"];
    assert_eq!(code(&cli(&base)), 0);
    let mut with = base.to_vec();
    with.extend(["--rollup.include_controls", "true"]);
    assert_eq!(code(&cli(&with)), 1);
}

#[test]
fn config_errors_exit_two() {
    for args in [
        vec!["--bogus", "1"],
        vec!["--entry", "no_such_entry"],
        vec!["--n", "zero"],
        vec!["--suites", "frames,nope"],
        vec!["--entry.r_min", "-1"],
        vec!["--config", "/nonexistent/run.cfg"],
        vec!["--seed"],
    ] {
        let o = cli(&args);
        assert_eq!(code(&o), 2, "{args:?}");
        assert!(String::from_utf8_lossy(&o.stderr).contains("usage:"), "{args:?}");
    }
}

#[test]
fn unwritable_output_exits_three() {
    let o = cli(&["--sample_count", "10", "--suites", "frames", "--out", "/nonexistent/dir/r.json"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn config_file_and_flag_override() {
    let dir = std::env::temp_dir().join(format!("nullscreen-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("run.cfg");
    std::fs::write(&cfg, "# test\nentry.name = ds_gudermann\nn = 3\nseed = 9\nsample_count = 20\nsuites = frames\n").unwrap();
    let out = dir.join("r.json");
    let o = cli(&[
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "4",
        "--format",
        "json",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    assert!(o.stdout.is_empty());
    let r: RunReport = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(r.entry, "ds_gudermann");
    assert_eq!(r.config["n"], "3");
    assert_eq!(r.config["seed"], "4");
    assert_eq!(r.suites.len(), 2);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn empty_suite_list_is_a_trivial_pass() {
    let o = cli(&["--suites", "", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let r: RunReport = serde_json::from_slice(&o.stdout).unwrap();
    assert!(r.suites.is_empty() && r.spectra.is_empty() && r.pass);
}

#[test]
fn json_output_round_trips() {
    let o = cli(&GOLDEN_ARGS);
    let text = String::from_utf8(o.stdout.clone()).unwrap();
    let r: RunReport = serde_json::from_str(&text).unwrap();
    assert_eq!(r.to_json(), text);
    assert_eq!(r.pass, code(&o) == 0);
}

#[test]
fn matches_golden_report() {
    let o = cli(&GOLDEN_ARGS);
    assert_eq!(code(&o), 0);
    let got: RunReport = serde_json::from_slice(&o.stdout).unwrap();
    let want: RunReport = serde_json::from_str(&std::fs::read_to_string(golden_path()).unwrap()).unwrap();
    assert_eq!(got.config, want.config);
    assert_eq!(got.suites.len(), want.suites.len());
    for (g, w) in got.suites.iter().zip(&want.suites) {
        assert_eq!((&g.name, g.pass, g.samples), (&w.name, w.pass, w.samples));
        assert_eq!(g.threshold, w.threshold);
        assert!((g.max_residual - w.max_residual).abs() < 1e-12, "{}", g.name);
    }
    assert_eq!(got.spectra.len(), want.spectra.len());
    for (g, w) in got.spectra.iter().zip(&want.spectra) {
        assert!((g.t - w.t).abs() < 1e-12);
        assert_eq!(g.lambdas.len(), w.lambdas.len());
        for (a, b) in g.lambdas.iter().zip(&w.lambdas) {
            assert_eq!(a.multiplicity, b.multiplicity);
            assert!((a.value - b.value).abs() < 1e-9);
        }
    }
}

#[test]
fn repeated_runs_are_identical() {
    let a = cli(&GOLDEN_ARGS).stdout;
    let b = cli(&GOLDEN_ARGS).stdout;
    assert_eq!(a, b);
}

#[test]
fn sequential_matches_parallel() {
    for entry in ["ds_gudermann", "mink_cylinder"] {
        let mut cfg = RunConfig::from_args(&["--entry", entry, "--n", "3", "--seed", "3", "--sample_count", "20"]).unwrap();
        cfg.execution = Execution::Parallel;
        let p = run(&cfg).unwrap().to_json();
        cfg.execution = Execution::Sequential;
        let s = run(&cfg).unwrap().to_json();
        assert_eq!(p, s, "{entry}");
    }
}

#[test]
fn text_format_lists_rows() {
    let o = cli(&["--entry", "ads_gudermann_tube", "--n", "3", "--sample_count", "20", "--suites", "chart"]);
    assert_eq!(code(&o), 0);
    let out = String::from_utf8(o.stdout).unwrap();
    for row in ["chart/rank", "chart/spatial_block", "conventions", "fiber_unit"] {
        assert!(out.contains(row), "{row}");
    }
}
