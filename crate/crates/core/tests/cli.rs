use std::path::Path;
use std::process::{Command, Output};

use deepbsde::harness::{mean, sample_std, RowRecord, CSV_HEADER};
use deepbsde::networks::read_archive;

fn deepbsde(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_deepbsde"))
        .args(args)
        .env("DEEPBSDE_WORKERS", "1")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

const SMALL: &[&str] = &[
    "--problem",
    "allen_cahn",
    "--dim",
    "3",
    "--steps",
    "2,4",
    "--batch",
    "8",
    "--iters",
    "20",
    "--runs",
    "2",
];

#[test]
fn table_csv_is_byte_identical_across_invocations() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        let mut args = vec!["table", "--no-timing", "--reference", "0.3", "--out", path.to_str().unwrap()];
        args.extend_from_slice(SMALL);
        stdout(&deepbsde(&args));
    }
    let first = std::fs::read(&a).unwrap();
    assert_eq!(first, std::fs::read(&b).unwrap());

    let text = String::from_utf8(first).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], CSV_HEADER);
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("2,0.0000e+00,"), "{}", lines[1]);
    // 2 -> 4 doubles, so the second row carries an order
    assert_eq!(lines[1].split(',').nth(4), Some(""));
    assert_ne!(lines[2].split(',').nth(4), Some(""));
}

#[test]
fn json_rows_reproduce_their_summary_fields() {
    let mut args = vec!["table", "--format", "json"];
    args.extend_from_slice(SMALL);
    let records: Vec<RowRecord> = serde_json::from_str(&stdout(&deepbsde(&args))).unwrap();
    assert_eq!(records.len(), 2);
    for rec in &records {
        assert_eq!(rec.row.run_values.len(), 2);
        assert_eq!(mean(&rec.row.run_values), rec.row.value);
        assert_eq!(sample_std(&rec.row.run_values), rec.row.std_dev);
        assert_eq!(rec.row.run_seeds, vec![0, 1]);
        assert_eq!(rec.config.problem, "allen_cahn");
        assert_eq!(rec.config.dim, 3);
    }
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "# tiny run\nproblem = linear_quadratic\ndim = 2\nsteps = 3\nbatch = 4\niters = 10\nruns = 1\nseed = 7\n",
    )
    .unwrap();
    let rec: serde_json::Value =
        serde_json::from_str(&stdout(&deepbsde(&["solve", "--config", cfg.to_str().unwrap(), "--seed", "9"]))).unwrap();
    assert_eq!(rec["problem"], "linear_quadratic");
    assert_eq!(rec["steps"], 3);
    assert_eq!(rec["seed"], 9);
    assert!((rec["reference"].as_f64().unwrap() - 1.2).abs() < 1e-12);

    std::fs::write(&cfg, "problem = allen_cahn\nlearning_rate = 1\n").unwrap();
    let out = deepbsde(&["solve", "--config", cfg.to_str().unwrap()]);
    assert!(!out.status.success());
}

#[test]
fn solve_saves_a_readable_archive() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.bin");
    stdout(&deepbsde(&[
        "solve",
        "--problem",
        "allen_cahn",
        "--dim",
        "2",
        "--steps",
        "3",
        "--batch",
        "4",
        "--iters",
        "5",
        "--arch",
        "two-layer",
        "--save",
        path.to_str().unwrap(),
    ]));
    let named = read_archive(Path::new(&path)).unwrap();
    let names: Vec<&str> = named.iter().map(|(n, _)| n.as_str()).collect();
    assert!(names.contains(&"theta_u0"));
    assert!(names.contains(&"theta_grad_u0"));
    assert!(names.iter().any(|n| n.starts_with("net2.")));
    assert!(!names.iter().any(|n| n.starts_with("net3.")));
}

#[test]
fn unknown_problem_is_reported() {
    let out = deepbsde(&["solve", "--problem", "heat", "--dim", "2"]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("heat") && err.contains("allen_cahn"), "{err}");
}

#[test]
fn feynman_kac_oracle_emits_a_json_estimate() {
    let rec: serde_json::Value = serde_json::from_str(&stdout(&deepbsde(&[
        "oracle",
        "--problem",
        "linear_quadratic",
        "--dim",
        "10",
        "--method",
        "feynman-kac",
        "--samples",
        "20000",
        "--seed",
        "3",
    ])))
    .unwrap();
    let est = &rec["estimate"];
    assert_eq!(est["samples"], 20000);
    assert_eq!(est["seed"], 3);
    let (lo, hi) = (est["ci_low"].as_f64().unwrap(), est["ci_high"].as_f64().unwrap());
    assert!(lo <= 6.0 && 6.0 <= hi, "[{lo}, {hi}]");
}

#[test]
fn branching_oracle_rejects_gradient_dependent_generators() {
    let out = deepbsde(&["oracle", "--problem", "pricing_diffrate", "--dim", "2", "--samples", "10"]);
    assert!(!out.status.success());
}

#[test]
fn check_subcommand_passes_on_a_few_cases() {
    let text = stdout(&deepbsde(&["check", "--cases", "4", "--seed", "2"]));
    assert_eq!(text.lines().count(), 4);
    assert!(text.lines().all(|l| l.starts_with("PASS")), "{text}");
}

#[test]
fn approx_prints_one_row_per_kernel_count() {
    let text = stdout(&deepbsde(&[
        "approx", "--target", "exp", "--basis", "1,2", "--iters", "200", "--restarts", "1",
    ]));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "basis,max_abs_error,l2_error");
    assert!(lines[1].starts_with("1,") && lines[2].starts_with("2,"));
}
