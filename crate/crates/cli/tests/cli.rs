use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_vrsim"))
}

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).current_dir(repo()).output().unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn calc_hmd_with_compression() {
    let v = json(&run(&[
        "calc",
        "--per-eye-res",
        "1440x1600",
        "--bit-depth",
        "24",
        "--fps",
        "72",
        "--compression",
        "200:300",
    ]));
    assert_eq!(v["raw_bits_per_s"], 7_962_624_000u64);
    assert_eq!(v["compressed_mbps"], serde_json::json!([26.54, 39.81]));
}

#[test]
fn calc_input_errors_exit_one() {
    assert_eq!(
        run(&["calc", "--bit-depth", "24", "--fps", "72"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        run(&[
            "calc",
            "--per-eye-res",
            "14x",
            "--bit-depth",
            "24",
            "--fps",
            "72"
        ])
        .status
        .code(),
        Some(1)
    );
    assert_eq!(
        run(&[
            "calc",
            "--fov",
            "150x120",
            "--ppd",
            "0",
            "--bit-depth",
            "36",
            "--fps",
            "150"
        ])
        .status
        .code(),
        Some(1)
    );
}

#[test]
fn unknown_subcommand_exits_one_help_zero() {
    let o = run(&["bogus"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!o.stderr.is_empty());
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn fit_reaches_targets() {
    let v = json(&run(&["fit", "--mean", "24800", "--frac", "0.47"]));
    assert!((v["achieved_mean_bytes"].as_f64().unwrap() - 24800.0).abs() < 248.0);
    assert!((v["achieved_frac_over_threshold"].as_f64().unwrap() - 0.47).abs() < 0.01);
    assert_eq!(
        run(&["fit", "--mean", "24800", "--frac", "1.5"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn simulate_bad_inputs_exit_one() {
    assert_eq!(
        run(&["simulate", "no/such/file.json"]).status.code(),
        Some(1)
    );
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"schema_version\": 1,").unwrap();
    let o = run(&["simulate", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.json"));
    assert_eq!(
        run(&["analyze", "no/such/trace.csv"]).status.code(),
        Some(1)
    );
}

#[test]
fn simulate_then_analyze_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n).to_str().unwrap().to_string();
    let sim = run(&[
        "simulate",
        "scenarios/rr_h265_30.json",
        "--duration",
        "3",
        "--out",
        &p("t.csv"),
        "--delays",
        &p("d.csv"),
        "--summary",
        &p("s.json"),
    ]);
    let summary = json(&sim);
    assert_eq!(
        summary,
        serde_json::from_str::<serde_json::Value>(&std::fs::read_to_string(p("s.json")).unwrap())
            .unwrap()
    );

    let analyzed = json(&run(&["analyze", &p("t.csv"), "--delays", &p("d.csv")]));
    assert_eq!(analyzed["rates"], summary["rates"]);
    assert_eq!(analyzed["delays"]["total"], summary["delays"]["total"]);

    let csv = run(&["analyze", &p("t.csv"), "--format", "csv"]);
    assert!(csv.status.success());
    assert!(
        String::from_utf8_lossy(&csv.stdout).starts_with("t_s,direction,layer,bits,bits_per_s\n")
    );
    let table = run(&[
        "analyze",
        &p("t.csv"),
        "--delays",
        &p("d.csv"),
        "--format",
        "table",
    ]);
    assert!(String::from_utf8_lossy(&table.stdout).contains("Render2 (Eyes)"));
    assert_eq!(
        run(&["analyze", &p("t.csv"), "--format", "table"])
            .status
            .code(),
        Some(1)
    );

    let replay = run(&[
        "replay",
        &p("t.csv"),
        "--scenario",
        "scenarios/rr_h265_30.json",
        "--duration",
        "3",
        "--out",
        &p("r.csv"),
    ]);
    assert!(replay.status.success());
    assert_eq!(replay.stdout, sim.stdout);
    assert_eq!(
        std::fs::read(p("r.csv")).unwrap(),
        std::fs::read(p("t.csv")).unwrap()
    );
}

#[test]
fn batch_runs_consecutive_seeds() {
    let v = json(&run(&[
        "simulate",
        "scenarios/rr_h265_30.json",
        "--duration",
        "2",
        "--batch",
        "3",
        "--seed",
        "7",
    ]));
    let seeds: Vec<u64> = v
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["seed"].as_u64().unwrap())
        .collect();
    assert_eq!(seeds, [7, 8, 9]);
}
