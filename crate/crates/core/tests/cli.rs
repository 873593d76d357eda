use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bgk-affine")).args(args).output().unwrap()
}

fn records(out: &[u8]) -> (Vec<String>, Vec<Vec<String>>) {
    let mut reader = csv::Reader::from_reader(out);
    let header = reader.headers().unwrap().iter().map(String::from).collect();
    let rows = reader
        .records()
        .map(|r| r.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn significant_digits(field: &str) -> usize {
    let mantissa = field.split('e').next().unwrap();
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    digits.trim_start_matches('0').len()
}

#[test]
fn dispersion_curve_csv_shape() {
    let out = run(&["dispersion-curve", "--a", "0"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    assert!(!text.contains('\r'));
    assert!(text.ends_with('\n'));
    let (header, rows) = records(&out.stdout);
    assert_eq!(header, ["x", "re_lambda_plus", "im_lambda_plus"]);
    assert_eq!(rows.len(), 401);
    assert_eq!(rows[0][0], "-4");
    assert_eq!(rows[200], ["0", "1", "0"]);
    for row in &rows {
        for field in row {
            assert!(significant_digits(field) <= 12, "{field}");
            field.parse::<f64>().unwrap();
        }
    }
}

#[test]
fn dispersion_curve_custom_grid_and_file_output() {
    let dir = std::env::temp_dir().join(format!("bgk-affine-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("curve.json");
    let out = run(&[
        "dispersion-curve",
        "--a",
        "1",
        "--x-min=-0.5",
        "--x-max",
        "0.5",
        "--points",
        "11",
        "--format",
        "json",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let doc: serde_json::Value = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    assert_eq!(doc["rows"].as_array().unwrap().len(), 11);
    assert_eq!(doc["header"]["nodes"], 200);
    assert_eq!(doc["header"]["defaults"]["points"], 401);
    assert_eq!(doc["header"]["grid"]["points"], 11);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn spectrum_verify_default_run_passes() {
    let out = run(&["spectrum-verify", "--a", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["all_passed"], true);
    assert_eq!(doc["header"]["defaults"]["nodes"], 200);
    let checks = doc["checks"].as_array().unwrap();
    for c in checks {
        for key in ["check", "status", "value", "tolerance"] {
            assert!(c.get(key).is_some(), "{c}");
        }
    }
    let find = |name: &str| checks.iter().find(|c| c["check"] == name).unwrap();
    assert_eq!(find("zero_count_rectangle_1")["value"], 0.0);
    assert_eq!(find("discrete_residual_h3")["status"], "pass");
    assert_eq!(find("fm_decay_rate_derived")["status"], "info");
}

#[test]
fn spectrum_verify_constant_frequency_has_closed_form_entry() {
    let out = run(&["spectrum-verify", "--a", "0", "--format", "csv"]);
    assert!(out.status.success());
    let (header, rows) = records(&out.stdout);
    assert_eq!(header, ["check", "status", "value", "tolerance"]);
    let entry = rows.iter().find(|r| r[0] == "closed_form_agreement").unwrap();
    assert_eq!(entry[1], "pass");
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["spectrum-verify", "--a", "-1"][..],
        &["spectrum-verify", "--a=-1"],
        &["dispersion-curve", "--a", "1", "--x-max", "3"],
        &["fm-solve", "--coefficients", "1,2"],
        &["no-such-command"],
        &["dispersion-curve", "--format", "xml"],
    ] {
        let out = run(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn help_documents_defaults() {
    let out = run(&["--help"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for needle in ["--nodes 200", "401 points over [-4, 4]", "Exit codes", "--points", "--out"] {
        assert!(text.contains(needle), "{needle}");
    }
}

#[test]
fn limits_compare_rows() {
    let out = run(&["limits-compare", "--a", "0"]);
    assert!(out.status.success());
    let (header, rows) = records(&out.stdout);
    assert_eq!(header[0], "a");
    assert_eq!(rows.len(), 3);
    let v = |r: usize, c: usize| rows[r][c].parse::<f64>().unwrap();
    assert!(v(0, 1) < 1e-8);
    assert!(v(1, 1) < 1e-5);
    assert_eq!(v(2, 0), 1000.0);
    assert!(v(2, 3) < 1e-2);
}

#[test]
fn fm_solve_is_deterministic_and_solves() {
    let args = ["fm-solve", "--coefficients", "0.5,1,-2,0.25,0.75,-0.1", "--points", "5"];
    let first = run(&args);
    let second = run(&args);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout);
    let (header, rows) = records(&first.stdout);
    assert_eq!(header, ["x", "C", "h"]);
    assert_eq!(rows.len(), 5 * 64 + 1);
    let last = rows.last().unwrap();
    assert_eq!(last[0], "residual");
    assert_eq!(last[1], "");
    assert!(last[2].parse::<f64>().unwrap() < 1e-8);
}

#[test]
fn fm_solve_zero_constants() {
    let out = run(&["fm-solve"]);
    assert!(out.status.success());
    let (_, rows) = records(&out.stdout);
    assert_eq!(rows.len(), 21 * 64 + 1);
    assert!(rows.iter().all(|r| r[2] == "0"));
}

#[test]
fn dispersion_eval_json() {
    let out = run(&["dispersion-eval", "--a", "1", "--z-re", "0.3", "--side", "plus", "--format", "json"]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let row = doc["rows"][0].as_array().unwrap();
    assert_eq!(row[2], "boundary-plus");
    assert!(row[3].is_f64() && row[5].is_f64());
    let off = run(&["dispersion-eval", "--z-re", "0", "--z-im", "-1e-8"]);
    let (_, rows) = records(&off.stdout);
    assert!((rows[0][3].parse::<f64>().unwrap() - 1.0).abs() < 1e-6);
}

#[test]
fn sequential_and_parallel_output_match() {
    let par = run(&["dispersion-curve", "--a", "0.5", "--points", "64"]);
    let seq = run(&["dispersion-curve", "--a", "0.5", "--points", "64", "--sequential"]);
    assert!(par.status.success() && seq.status.success());
    assert_eq!(par.stdout, seq.stdout);
}
