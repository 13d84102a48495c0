use std::path::Path;
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_kdisc")
}

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(bin())
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary should spawn")
}

fn stdout_json(output: &Output) -> serde_json::Value {
    assert!(
        output.status.success(),
        "expected success, got {:?} with stderr: {}",
        output.status.code(),
        String::from_utf8_lossy(&output.stderr)
    );
    serde_json::from_slice(&output.stdout).expect("stdout should be JSON")
}

fn write_file(dir: &Path, name: &str, contents: &str) {
    std::fs::write(dir.join(name), contents).unwrap();
}

/// Two small two-column samples plus a one-column sample, shared by most tests.
fn fixture_dir() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    write_file(
        dir.path(),
        "a.csv",
        "0.1,0.2\n1.3,-0.4\n2.1,0.9\n-0.5,1.1\n0.7,0.3\n-0.9,0.6\n",
    );
    write_file(
        dir.path(),
        "b.csv",
        "1.1,0.3\n-0.2,0.8\n0.4,-1.2\n0.9,0.5\n1.6,0.1\n0.3,-0.7\n",
    );
    write_file(dir.path(), "x.csv", "0.4\n-0.3\n1.2\n0.8\n-1.1\n0.2\n");
    dir
}

#[test]
fn median_kernel_plug_in_run_reports_the_expected_shape() {
    let dir = fixture_dir();
    let out = run(dir.path(), &["mmd", "a.csv", "b.csv", "--kernel", "gaussian:median", "--stat", "v"]);
    let report = stdout_json(&out);
    assert_eq!(report["command"], "mmd");
    assert_eq!(report["statistic_kind"], "v");
    assert_eq!(report["design"], "full");
    assert_eq!(report["kernels"].as_array().unwrap().len(), 1);
    assert_eq!(report["kernels"][0]["family"], "gaussian");
    assert!(report["kernels"][0]["bandwidth"].as_f64().unwrap() > 0.0);
    assert_eq!(report["kernels"][0]["r"], 2.0);
    assert_eq!(report["raw_values"].as_array().unwrap().len(), 1);
    assert!(report["sigmas"].is_null());
    assert!(report["value"].as_f64().unwrap() >= 0.0);
    assert!(report.get("pooled_value").is_none());
    assert_eq!(report["seed"], 0);
    assert_eq!(report["n"], 6);
    assert_eq!(report["m"], 6);
    assert_eq!(report["d"], 2);
    assert_eq!(report["clamped"], false);
}

#[test]
fn fused_normalized_collection_reports_sigmas_and_pooled_value() {
    let dir = fixture_dir();
    let out = run(
        dir.path(),
        &["mmd", "a.csv", "b.csv", "--kernel", "collection", "--stat", "paired-u", "--pool", "fuse", "--normalize"],
    );
    let report = stdout_json(&out);
    assert_eq!(report["statistic_kind"], "paired-u");
    assert_eq!(report["design"], "distinct");
    assert_eq!(report["kernels"].as_array().unwrap().len(), 20);
    assert_eq!(report["raw_values"].as_array().unwrap().len(), 20);
    let sigmas = report["sigmas"].as_array().unwrap();
    assert_eq!(sigmas.len(), 20);
    assert!(sigmas.iter().all(|s| s.as_f64().unwrap() > 0.0));
    assert!(report["pooled_value"].is_number());
    assert!(report.get("value").is_none());
}

#[test]
fn goodness_of_fit_run_verifies_against_the_reference() {
    let dir = fixture_dir();
    let out = run(
        dir.path(),
        &["ksd", "x.csv", "--score", "gaussian:0:1", "--kernel", "gaussian:1.0", "--stat", "v", "--verify"],
    );
    let report = stdout_json(&out);
    assert_eq!(report["command"], "ksd");
    assert!(report["m"].is_null());
    assert_eq!(report["d"], 1);
    let diff = report["abs_diff"].as_f64().unwrap();
    assert!(diff <= 1e-8, "verification drift {diff}");
    assert!(report["oracle_value"].is_number());
}

#[test]
fn same_seed_runs_emit_identical_bytes() {
    let dir = fixture_dir();
    let args = ["mmd", "a.csv", "b.csv", "--kernel", "collection", "--stat", "r:9", "--pool", "max", "--seed", "41"];
    let first = run(dir.path(), &args);
    let second = run(dir.path(), &args);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout);
    assert!(!first.stdout.is_empty());

    let report: serde_json::Value = serde_json::from_slice(&first.stdout).unwrap();
    assert_eq!(report["design"], "random:9:without-replacement");
    assert_eq!(report["seed"], 41);
}

#[test]
fn different_seeds_change_the_subsample() {
    let dir = fixture_dir();
    let base = ["mmd", "a.csv", "b.csv", "--kernel", "gaussian:1.0", "--stat", "r:5"];
    let first = run(dir.path(), &{
        let mut v = base.to_vec();
        v.extend(["--seed", "1"]);
        v
    });
    let second = run(dir.path(), &{
        let mut v = base.to_vec();
        v.extend(["--seed", "2"]);
        v
    });
    let a: serde_json::Value = serde_json::from_slice(&first.stdout).unwrap();
    let b: serde_json::Value = serde_json::from_slice(&second.stdout).unwrap();
    assert_ne!(a["raw_values"], b["raw_values"]);
}

#[test]
fn dependence_runs_accept_a_column_split() {
    let dir = fixture_dir();
    write_file(
        dir.path(),
        "z.csv",
        "0.1,0.2,0.9\n1.3,-0.4,0.5\n2.1,0.9,-0.3\n-0.5,1.1,0.7\n0.7,0.3,0.2\n-0.9,0.6,1.4\n",
    );
    let out = run(dir.path(), &["hsic", "z.csv", "--split", "2", "--kernel", "gaussian:median", "--stat", "v"]);
    let report = stdout_json(&out);
    assert_eq!(report["command"], "hsic");
    // Per-stream medians: one kernel entry per stream.
    assert_eq!(report["kernels"].as_array().unwrap().len(), 2);
    assert_eq!(report["n"], 6);
    assert_eq!(report["d"], 2);
    assert!(report["value"].as_f64().unwrap() >= 0.0);
}

#[test]
fn dependence_runs_verify_on_two_files() {
    let dir = fixture_dir();
    let out = run(dir.path(), &["hsic", "a.csv", "b.csv", "--kernel", "laplace:0.8", "--stat", "u", "--verify"]);
    let report = stdout_json(&out);
    assert!(report["abs_diff"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn paired_two_sample_verification_passes() {
    let dir = fixture_dir();
    let out = run(
        dir.path(),
        &["mmd", "a.csv", "b.csv", "--kernel", "imq:1.5", "--stat", "paired-u", "--verify"],
    );
    let report = stdout_json(&out);
    assert!(report["abs_diff"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn dependence_runs_need_exactly_one_pairing_source() {
    let dir = fixture_dir();
    let neither = run(dir.path(), &["hsic", "a.csv", "--kernel", "gaussian:1.0", "--stat", "v"]);
    assert_eq!(neither.status.code(), Some(2));
    let both = run(
        dir.path(),
        &["hsic", "a.csv", "b.csv", "--split", "1", "--kernel", "gaussian:1.0", "--stat", "v"],
    );
    assert_eq!(both.status.code(), Some(2));
}

#[test]
fn configuration_problems_exit_two() {
    let dir = fixture_dir();
    let bad_kernel = run(dir.path(), &["mmd", "a.csv", "b.csv", "--kernel", "gaussian:wide", "--stat", "v"]);
    assert_eq!(bad_kernel.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad_kernel.stderr).contains("bandwidth"));

    let missing_pool = run(dir.path(), &["mmd", "a.csv", "b.csv", "--kernel", "collection", "--stat", "v"]);
    assert_eq!(missing_pool.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing_pool.stderr).contains("--pool"));

    let verify_design = run(
        dir.path(),
        &["mmd", "a.csv", "b.csv", "--kernel", "gaussian:1.0", "--stat", "l", "--verify"],
    );
    assert_eq!(verify_design.status.code(), Some(2));

    let bad_stat = run(dir.path(), &["mmd", "a.csv", "b.csv", "--kernel", "gaussian:1.0", "--stat", "w"]);
    assert_eq!(bad_stat.status.code(), Some(2));

    let score_outside_ksd = run(dir.path(), &["ksd", "x.csv", "--score", "gaussian:0:0", "--kernel", "gaussian:1.0", "--stat", "v"]);
    assert_eq!(score_outside_ksd.status.code(), Some(2));
}

#[test]
fn data_problems_exit_three() {
    let dir = fixture_dir();
    write_file(dir.path(), "ragged.csv", "1,2\n3\n4,5\n");
    let ragged = run(dir.path(), &["mmd", "ragged.csv", "b.csv", "--kernel", "gaussian:1.0", "--stat", "v"]);
    assert_eq!(ragged.status.code(), Some(3));
    let message = String::from_utf8_lossy(&ragged.stderr);
    assert!(message.contains("line 2"), "got: {message}");

    write_file(dir.path(), "words.csv", "1,2\n3,phi\n");
    let words = run(dir.path(), &["mmd", "words.csv", "b.csv", "--kernel", "gaussian:1.0", "--stat", "v"]);
    assert_eq!(words.status.code(), Some(3));
    let message = String::from_utf8_lossy(&words.stderr);
    assert!(message.contains("column 2"), "got: {message}");

    let mismatched = run(dir.path(), &["mmd", "a.csv", "x.csv", "--kernel", "gaussian:1.0", "--stat", "v"]);
    assert_eq!(mismatched.status.code(), Some(3));

    // The shifted dependence form pairs row i with row i + n/2, so it
    // needs an even row count.
    write_file(dir.path(), "odd.csv", "0.1,0.9\n0.4,-0.2\n1.1,0.5\n-0.3,0.8\n0.6,0.1\n");
    let odd = run(dir.path(), &["hsic", "odd.csv", "--split", "1", "--kernel", "gaussian:1.0", "--stat", "v", "--normalize"]);
    assert_eq!(odd.status.code(), Some(3));
}

#[test]
fn degenerate_normalizers_exit_four() {
    let dir = fixture_dir();
    write_file(dir.path(), "const.csv", "1.0\n1.0\n1.0\n1.0\n");
    let out = run(
        dir.path(),
        &["mmd", "const.csv", "const.csv", "--kernel", "gaussian:1.0", "--stat", "paired-u", "--normalize"],
    );
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sigma"));
}

#[test]
fn header_rows_are_skipped_on_request() {
    let dir = fixture_dir();
    write_file(dir.path(), "with_header.csv", "u,v\n0.1,0.2\n1.3,-0.4\n2.1,0.9\n");
    write_file(dir.path(), "plain.csv", "0.1,0.2\n1.3,-0.4\n2.1,0.9\n");
    let header = run(
        dir.path(),
        &["mmd", "with_header.csv", "plain.csv", "--kernel", "gaussian:1.0", "--stat", "v", "--has-header"],
    );
    // --has-header applies to both inputs, so the unheaded file loses a row.
    let report: serde_json::Value = serde_json::from_slice(&header.stdout).unwrap();
    assert_eq!(report["n"], 3);
    assert_eq!(report["m"], 2);

    write_file(dir.path(), "plain2.csv", "9.9,9.9\n0.1,0.2\n1.3,-0.4\n2.1,0.9\n");
    let both = run(
        dir.path(),
        &["mmd", "with_header.csv", "plain2.csv", "--kernel", "gaussian:1.0", "--stat", "v", "--has-header"],
    );
    let report = stdout_json(&both);
    assert_eq!(report["n"], 3);
    assert_eq!(report["m"], 3);
}

#[test]
fn output_flag_writes_the_report_to_a_file() {
    let dir = fixture_dir();
    let out = run(
        dir.path(),
        &["mmd", "a.csv", "b.csv", "--kernel", "gaussian:1.0", "--stat", "v", "--output", "report.json"],
    );
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
    assert!(text.ends_with('\n'));
    let report: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(report["command"], "mmd");
}

#[test]
fn design_tokens_round_trip_into_the_report() {
    let dir = fixture_dir();
    let cases = [
        ("l", "linear"),
        ("d:2", "diagonals:2"),
        ("b:3", "blocks:[3,3]"),
        ("x:4", "cross:4"),
        ("r:7:with-replacement", "random:7:with-replacement"),
    ];
    for (token, rendered) in cases {
        let out = run(dir.path(), &["mmd", "a.csv", "b.csv", "--kernel", "gaussian:1.0", "--stat", token]);
        let report = stdout_json(&out);
        assert_eq!(report["design"], rendered, "token {token}");
        assert_eq!(report["statistic_kind"], token);
    }
}

#[test]
fn kernel_cap_truncates_the_collection() {
    let dir = fixture_dir();
    let out = run(
        dir.path(),
        &["mmd", "a.csv", "b.csv", "--kernel", "collection", "--stat", "v", "--pool", "mean", "--max-kernels", "4"],
    );
    let report = stdout_json(&out);
    let kernels = report["kernels"].as_array().unwrap();
    assert_eq!(kernels.len(), 4);
    assert!(kernels.iter().all(|k| k["family"] == "gaussian"));

    let zero = run(
        dir.path(),
        &["mmd", "a.csv", "b.csv", "--kernel", "collection", "--stat", "v", "--pool", "mean", "--max-kernels", "0"],
    );
    assert_eq!(zero.status.code(), Some(2));
}

#[test]
fn indicator_kernel_reports_no_bandwidth() {
    let dir = fixture_dir();
    let out = run(dir.path(), &["hsic", "a.csv", "b.csv", "--kernel", "indicator", "--stat", "v"]);
    let report = stdout_json(&out);
    assert_eq!(report["kernels"][0]["family"], "indicator");
    assert!(report["kernels"][0]["bandwidth"].is_null());
    assert!(report["kernels"][0]["r"].is_null());
}

#[test]
fn diagonal_score_models_broadcast_per_column() {
    let dir = fixture_dir();
    let out = run(
        dir.path(),
        &["ksd", "a.csv", "--score", "gaussian:0.5,-0.5:1,2", "--kernel", "matern1.5:1.2", "--stat", "u"],
    );
    let report = stdout_json(&out);
    assert_eq!(report["kernels"][0]["family"], "matern1.5");
    assert!(report["value"].is_number());
}
