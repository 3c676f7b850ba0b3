use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lfdecouple"))
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

fn ok(args: &[&str]) -> String {
    let o = run(args);
    assert!(
        o.status.success(),
        "{args:?} failed: {}{}",
        stdout(&o),
        stderr(&o)
    );
    stdout(&o)
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_string()
}

const POLYA: &str = "x*y+x*z+y*z";

fn polya_model(dir: &TempDir) -> String {
    let out = path(dir, "polya.json");
    ok(&[
        "decouple", "--expr", POLYA, "--vars", "x,y,z", "--out", &out,
    ]);
    out
}

/// Last number printed on the "max relative error" line.
fn reported_error(text: &str) -> f64 {
    let line = text
        .lines()
        .find(|l| l.starts_with("max relative error:"))
        .expect("error line");
    line.split_whitespace().nth(3).unwrap().parse().unwrap()
}

#[test]
fn detect_reports_degrees() {
    assert_eq!(
        ok(&["detect", "--expr", POLYA, "--vars", "x,y,z"]),
        "degrees: 1 1 1\n"
    );
    assert_eq!(
        ok(&["detect", "--expr", "(x^2+y)/(x*y+3)", "--vars", "x,y"]),
        "degrees: 2 1\n"
    );
}

#[test]
fn decouple_counts_samples_and_functions() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "m.json");
    let text = ok(&[
        "decouple", "--expr", POLYA, "--vars", "x,y,z", "--auto", "--out", &out,
    ]);
    assert!(text.contains("grid: 2 x 2 x 2 = 8 points"), "{text}");
    assert!(text.contains("8 samples, 7 decoupled functions"), "{text}");
    assert!(Path::new(&out).exists());
}

#[test]
fn eval_at_point_and_random_comparison() {
    let dir = TempDir::new().unwrap();
    let model = polya_model(&dir);
    assert_eq!(ok(&["eval", "--model", &model, "--at", "1,2,3"]), "11\n");
    assert_eq!(ok(&["eval", "--model", &model, "--at", "-1,2,3"]), "1\n");
    let text = ok(&[
        "eval",
        "--model",
        &model,
        "--random",
        "1000",
        "--compare-expr",
    ]);
    assert!(text.contains("over 1000 points"), "{text}");
    assert!(reported_error(&text) <= 1e-10, "{text}");
}

#[test]
fn verify_passes_for_polynomial_and_rational_models() {
    let dir = TempDir::new().unwrap();
    let model = polya_model(&dir);
    let text = ok(&["verify", "--model", &model]);
    assert!(text.contains("all checks passed"), "{text}");
    assert!(!text.contains("FAIL"), "{text}");

    let rational = path(&dir, "r.json");
    ok(&[
        "decouple",
        "--expr",
        "(x+y)/(x*y+2)",
        "--vars",
        "x,y",
        "--rational",
        "--left-nodes",
        "-1.5,-0.5;-1.5,-0.5",
        "--out",
        &rational,
    ]);
    let text = ok(&["verify", "--model", &rational]);
    assert!(text.contains("PASS off-grid"), "{text}");
    assert!(text.contains("all checks passed"), "{text}");
}

#[test]
fn rational_model_with_default_left_nodes() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "r.json");
    let expr = "(x*y+x*z+y*z)/(x*y*z+3)";
    let text = ok(&[
        "decouple",
        "--expr",
        expr,
        "--vars",
        "x,y,z",
        "--rational",
        "--out",
        &out,
    ]);
    assert!(text.contains("7 decoupled functions"), "{text}");
    assert!(ok(&["verify", "--model", &out]).contains("all checks passed"));
    let text = ok(&[
        "eval",
        "--model",
        &out,
        "--random",
        "200",
        "--box",
        "0.5,2",
        "--compare-expr",
    ]);
    assert!(reported_error(&text) <= 1e-10, "{text}");
}

#[test]
fn four_variable_model_verifies() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "four.json");
    let expr = "x^2 + s*x*z + t*z^2 + 1";
    let text = ok(&[
        "decouple", "--expr", expr, "--vars", "s,t,x,z", "--out", &out,
    ]);
    assert!(text.contains("degrees: 1 1 2 2"), "{text}");
    let text = ok(&["verify", "--model", &out, "--expr", expr]);
    assert!(text.contains("PASS off-grid"), "{text}");
    assert!(text.contains("PASS recursive vs direct"), "{text}");
}

#[test]
fn two_variable_rational_example_verifies() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "h.json");
    let expr = "(t^2+s-2)/(t^2+2*s+1)";
    let text = ok(&[
        "decouple",
        "--expr",
        expr,
        "--vars",
        "s,t",
        "--rational",
        "--out",
        &out,
    ]);
    assert!(text.contains("degrees: 1 2"), "{text}");
    let text = ok(&["verify", "--model", &out, "--expr", expr]);
    assert!(text.contains("PASS off-grid"), "{text}");
    assert!(text.contains("all checks passed"), "{text}");
    let value: f64 = ok(&["eval", "--model", &out, "--at", "0,0"])
        .trim()
        .parse()
        .unwrap();
    assert!((value + 2.0).abs() <= 1e-12, "{value}");
}

#[test]
fn corrupted_stack_fails_verification() {
    let dir = TempDir::new().unwrap();
    let model = polya_model(&dir);
    let mut json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&model).unwrap()).unwrap();
    json["num_stack"][1][0][0] = serde_json::json!(0.9);
    fs::write(&model, serde_json::to_string(&json).unwrap()).unwrap();
    let o = run(&["verify", "--model", &model]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL telescoping"), "{}", stdout(&o));
}

#[test]
fn samples_file_round_trip_and_length_mismatch() {
    let dir = TempDir::new().unwrap();
    let samples = path(&dir, "s.json");
    // f = x*y + 1 on x, y in {1, 2}
    fs::write(
        &samples,
        r#"{"shape": [2, 2], "nodes": [[1, 2], [1, 2]], "values": [2, 3, 3, 5]}"#,
    )
    .unwrap();
    let out = path(&dir, "m.json");
    let text = ok(&["decouple", "--samples", &samples, "--out", &out]);
    assert!(text.contains("4 samples, 3 decoupled functions"), "{text}");
    assert_eq!(ok(&["eval", "--model", &out, "--at", "3,4"]), "13\n");

    fs::write(
        &samples,
        r#"{"shape": [2, 2], "nodes": [[1, 2], [1, 2]], "values": [2, 3, 3]}"#,
    )
    .unwrap();
    let o = run(&["decouple", "--samples", &samples, "--out", &out]);
    assert_eq!(o.status.code(), Some(5), "{}", stderr(&o));

    let o = run(&[
        "decouple",
        "--samples",
        &samples,
        "--rational",
        "--out",
        &out,
    ]);
    assert_eq!(o.status.code(), Some(64));
}

#[test]
fn export_lists_every_decoupled_function() {
    let dir = TempDir::new().unwrap();
    let model = polya_model(&dir);
    let text = ok(&["export", "--model", &model]);
    let lines: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(lines.len(), 7, "{text}");
    assert!(lines[0].starts_with("φ(x) = f(x, y_2, z_2)"), "{text}");
    assert!(
        lines[1].starts_with("ψ_1(y) = f(x_1, y, z_2) / f(x_1, y_2, z_2)"),
        "{text}"
    );
    assert!(lines[1].ends_with("0.625, 1"), "{text}");
    assert!(lines[6].starts_with("ω_4(z)"), "{text}");

    let plain = ok(&["export", "--model", &model, "--format", "plain"]);
    assert!(plain.is_ascii());
    assert!(plain.contains("omega_4(z)"));

    let out = path(&dir, "two.json");
    ok(&[
        "decouple",
        "--expr",
        "x^2*y + 1",
        "--vars",
        "x,y",
        "--degrees",
        "2,1",
        "--out",
        &out,
    ]);
    let text = ok(&["export", "--model", &out]);
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 1 + 3);
}

#[test]
fn usage_errors_exit_64() {
    let dir = TempDir::new().unwrap();
    let model = polya_model(&dir);
    assert_eq!(
        run(&["export", "--model", &model, "--format", "latex"])
            .status
            .code(),
        Some(64)
    );
    assert_eq!(
        run(&["detect", "--expr", "x+", "--vars", "x"])
            .status
            .code(),
        Some(64)
    );
    assert_eq!(
        run(&["detect", "--expr", "x+w", "--vars", "x"])
            .status
            .code(),
        Some(64)
    );
    assert_eq!(run(&["frobnicate"]).status.code(), Some(64));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn failures_map_to_exit_codes() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "m.json");
    // f vanishes on the default anchor y = 2 but not on y = 1
    let o = run(&[
        "decouple",
        "--expr",
        "x*y - 2*x",
        "--vars",
        "x,y",
        "--nodes",
        "1,2;1,2",
        "--out",
        &out,
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("--anchor-policy reanchor"));
    ok(&[
        "decouple",
        "--expr",
        "x*y - 2*x",
        "--vars",
        "x,y",
        "--nodes",
        "1,2;1,2",
        "--anchor-policy",
        "reanchor",
        "--out",
        &out,
    ]);
    assert!(ok(&["verify", "--model", &out]).contains("all checks passed"));

    let o = run(&[
        "decouple", "--expr", "1/(x-1)", "--vars", "x", "--nodes", "1,2", "--out", &out,
    ]);
    assert_eq!(o.status.code(), Some(6), "{}", stderr(&o));
    assert!(stderr(&o).contains("[0]"), "{}", stderr(&o));

    let o = run(&[
        "decouple",
        "--expr",
        "x+y",
        "--vars",
        "x,y",
        "--degrees",
        "1",
        "--out",
        &out,
    ]);
    assert_eq!(o.status.code(), Some(5));
}

#[test]
fn output_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let a = path(&dir, "a.json");
    let b = path(&dir, "b.json");
    let expr = "(x*y+x*z+y*z)/(x*y*z+3)";
    ok(&[
        "decouple",
        "--expr",
        expr,
        "--vars",
        "x,y,z",
        "--rational",
        "--out",
        &a,
    ]);
    ok(&[
        "decouple",
        "--expr",
        expr,
        "--vars",
        "x,y,z",
        "--rational",
        "--out",
        &b,
    ]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let args = |m: &str| {
        vec!["eval", "--model", m, "--random", "5", "--seed", "7"]
            .into_iter()
            .map(String::from)
            .collect::<Vec<_>>()
    };
    let ra = run(&args(&a).iter().map(String::as_str).collect::<Vec<_>>());
    let rb = run(&args(&b).iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(ra.stdout, rb.stdout);
}
