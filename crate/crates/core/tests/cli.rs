use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn manifest() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn example() -> PathBuf {
    manifest().join("examples/so3_paper.json")
}

fn data(name: &str) -> PathBuf {
    manifest().join("tests/data").join(name)
}

fn jetred(problem: &PathBuf, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jetred"))
        .arg("--problem")
        .arg(problem)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

#[test]
fn euler_lagrange_of_p() {
    let o = jetred(&example(), &["el", "--expr", "P"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        stdout(&o),
        "E[u1] = u2_xx + u2_yy + u2_zz\nE[u2] = u1_xx + u1_yy + u1_zz\n"
    );
}

#[test]
fn reductions_print_expected_text() {
    let o = jetred(&example(), &["reduce", "--expr", "laplacian"]);
    assert_eq!(
        (o.status.code(), stdout(&o).as_str()),
        (Some(0), "v1_rr + 2/r * v1_r\n")
    );
    let o = jetred(&example(), &["reduce-form", "--form", "nu"]);
    assert_eq!((o.status.code(), stdout(&o).as_str()), (Some(0), "r^2 dr\n"));
}

#[test]
fn output_is_byte_identical_across_runs() {
    for args in [
        &["verify", "all"][..],
        &["--json", "l2hat", "P", "Q"][..],
        &["bracket", "P", "R"][..],
    ] {
        let a = jetred(&example(), args);
        let b = jetred(&example(), args);
        assert_eq!(a.stdout, b.stdout, "{args:?}");
        assert_eq!(a.status.code(), b.status.code());
    }
}

#[test]
fn verify_all_passes_on_the_example() {
    let o = jetred(&example(), &["verify", "all"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let out = stdout(&o);
    assert!(out.lines().last().unwrap().ends_with("0 failed, 0 errors"), "{out}");
    assert!(!out.contains("FAIL"));
}

#[test]
fn failed_check_exits_one() {
    let o = jetred(&data("wrong_expectation.json"), &["verify", "covariance"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL  covariance[scaling]"));
    let o = jetred(&example(), &["--json", "verify", "covariance"]);
    assert_eq!(json(&o)["ok"], Value::Bool(true));
}

#[test]
fn load_errors_exit_two_with_kind_and_location() {
    let cases = [
        ("omega_not_skew.json", "not-skew", "omega"),
        ("inverse_mismatch.json", "inverse-mismatch", "reduction"),
        ("misspelled_field.json", "schema", "reduction.chain.scael"),
        ("future_schema.json", "schema", "schema"),
        ("wrong_type.json", "schema", "regions.shell.radii"),
    ];
    for (file, kind, location) in cases {
        let o = jetred(&data(file), &["el", "--expr", "u1"]);
        assert_eq!(o.status.code(), Some(2), "{file}");
        assert!(o.stdout.is_empty());
        assert!(
            stderr(&o).starts_with(&format!("error[{kind}] in el:")),
            "{file}: {}",
            stderr(&o)
        );
        let o = jetred(&data(file), &["--json", "el", "--expr", "u1"]);
        assert_eq!(o.status.code(), Some(2));
        let v = json(&o);
        assert_eq!(v["ok"], Value::Bool(false));
        assert_eq!(v["error"]["kind"], kind, "{file}");
        let locations: Vec<&str> = v["error"]["locations"]
            .as_array()
            .unwrap()
            .iter()
            .map(|l| l.as_str().unwrap())
            .collect();
        assert!(locations.iter().any(|l| l.contains(location)), "{file}: {locations:?}");
    }
}

#[test]
fn runtime_errors_exit_two() {
    let o = jetred(&example(), &["reduce", "--expr", "u1_x"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error[not-invariant]"));
    let o = jetred(&example(), &["el", "--expr", "w1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error[unknown-entity]"), "{}", stderr(&o));
}

#[test]
fn missing_problem_file_is_an_error() {
    let o = jetred(&data("does_not_exist.json"), &["el", "--expr", "u1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn json_output_carries_expression_trees() {
    let o = jetred(&example(), &["--json", "el", "--expr", "P"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["command"], "el");
    assert_eq!(v["components"][0]["fiber"], "u1");
    assert_eq!(v["components"][0]["component"]["text"], "u2_xx + u2_yy + u2_zz");
    assert_eq!(v["components"][0]["component"]["ast"].as_array().unwrap().len(), 3);
}

#[test]
fn compare_reduced_reports_four_pi() {
    let o = jetred(
        &example(),
        &[
            "--json",
            "compare-reduced",
            "--expr",
            "P",
            "--section",
            "gaussian",
            "--region",
            "shell",
            "--reduced-region",
            "radial",
            "--expect",
            "4*pi",
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let v = json(&o);
    let factor = v["comparison"]["volume_factor"].as_f64().unwrap();
    assert!((factor - 4.0 * std::f64::consts::PI).abs() < 1e-6 * factor);
    let o = jetred(
        &example(),
        &[
            "compare-reduced",
            "--expr",
            "P",
            "--section",
            "gaussian",
            "--region",
            "shell",
            "--reduced-region",
            "radial",
            "--expect",
            "3",
        ],
    );
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sequential_flag_gives_identical_numbers() {
    let args = ["eval", "--expr", "P", "--section", "gaussian", "--region", "shell"];
    let par = jetred(&example(), &args);
    let mut seq_args = vec!["--sequential"];
    seq_args.extend_from_slice(&args);
    let seq = jetred(&example(), &seq_args);
    assert_eq!(par.status.code(), Some(0), "{}", stderr(&par));
    assert_eq!(par.stdout, seq.stdout);
}
