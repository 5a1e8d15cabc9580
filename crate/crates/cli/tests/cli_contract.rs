use std::path::PathBuf;
use std::process::{Command, Output, Stdio};
use std::io::Write as _;

use meanfield::branch_tracer::BranchRoot;
use serde_json::Value;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_meanfield"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("valid JSON on stdout")
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    dir.join(name)
}

fn nonzero_root(lambda: &str) -> String {
    let doc = json(&bin(&["roots", "--lambda", lambda]));
    let root = doc["results"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["kind"] == "nonzero")
        .expect("a nonzero root");
    format!("{:?}", root["s_root"].as_f64().unwrap())
}

#[test]
fn beta_profile_has_one_row_per_grid_point() {
    let out = bin(&["beta", "--lambda", "6", "--s-min", "-10", "--s-max", "15", "--ds", "0.05"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("s,beta,d_beta,dd_beta"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 501);
    // 17 significant digits in every numeric cell.
    let first = rows[0].split(',').next().unwrap();
    assert_eq!(first, "-1.0000000000000000e1");
}

#[test]
fn lambda_below_two_is_a_usage_error() {
    let out = bin(&["beta", "--lambda", "1.5"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("lambda must exceed 2"));
}

#[test]
fn usage_errors_exit_one() {
    for args in [
        &["beta"][..],
        &["frobnicate"],
        &["beta", "--lambda", "6", "--ds", "-1"],
        &["beta", "--lambda", "6", "--format", "svg"],
        &["roots", "--lambda", "6", "--rel-tol", "0"],
        &["validate", "--lambda", "7"],
        &["bifurcation", "--lambda-min", "3"],
    ] {
        assert_eq!(bin(args).status.code(), Some(1), "{args:?}");
    }
    assert_eq!(bin(&["--help"]).status.code(), Some(0));
}

#[test]
fn profile_piped_into_roots_finds_ln_24() {
    let profile = bin(&["beta", "--lambda", "6", "--ds", "0.05"]);
    let mut child = Command::new(env!("CARGO_BIN_EXE_meanfield"))
        .args(["roots", "--lambda", "6", "--profile", "-"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(&profile.stdout).unwrap();
    let out = child.wait_with_output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    let roots = doc["results"].as_array().unwrap();
    assert_eq!(roots.len(), 1);
    assert!((roots[0]["s_root"].as_f64().unwrap() - 24f64.ln()).abs() <= 1e-6);
}

#[test]
fn roots_at_six_seven_and_eight() {
    let six = json(&bin(&["roots", "--lambda", "6"]));
    let r6 = six["results"].as_array().unwrap();
    assert_eq!(r6.len(), 1);
    assert_eq!(r6[0]["kind"], "trivial");

    let seven = bin(&["roots", "--lambda", "7"]);
    assert_eq!(seven.status.code(), Some(0));
    assert!(json(&seven)["results"].as_array().unwrap().len() >= 2);
}

#[test]
fn roots_document_round_trips() {
    let out = bin(&["roots", "--lambda", "8"]);
    let doc = json(&out);
    for key in ["schema_version", "params", "results", "diagnostics"] {
        assert!(doc.get(key).is_some(), "missing {key}");
    }
    assert_eq!(doc["schema_version"], 1);
    let roots: Vec<BranchRoot> = serde_json::from_value(doc["results"].clone()).unwrap();
    assert!(roots.len() >= 2);
    assert_eq!(serde_json::to_value(&roots).unwrap(), doc["results"]);
    let again: Value = serde_json::from_str(&serde_json::to_string_pretty(&doc).unwrap()).unwrap();
    assert_eq!(again, doc);
}

#[test]
fn bifurcation_table_and_svg() {
    let svg_path = scratch("branches.svg");
    let args = [
        "bifurcation",
        "--lambda-min",
        "4.5",
        "--lambda-max",
        "8",
        "--d-lambda",
        "0.5",
        "--svg",
        svg_path.to_str().unwrap(),
    ];
    let out = bin(&args);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(text.lines().next(), Some("lambda,s_root,kind,beta_slope"));
    for lambda in [5.0, 5.5, 6.0, 6.5, 7.0, 7.5, 8.0] {
        let at: Vec<_> = rows.iter().filter(|r| r[0].parse::<f64>().unwrap() == lambda).collect();
        assert_eq!(at.iter().filter(|r| r[2] == "trivial").count(), 1, "lambda {lambda}");
        let nonzero = at.iter().filter(|r| r[2] == "nonzero").count();
        assert_eq!(nonzero == 0, lambda == 6.0, "lambda {lambda}");
    }

    let svg = std::fs::read_to_string(&svg_path).unwrap();
    let doc = roxmltree::Document::parse(&svg).expect("well-formed SVG");
    let markers = doc.descendants().filter(|n| n.has_tag_name("circle")).count();
    assert_eq!(markers, rows.len());
    assert!(!svg.contains("href"), "standalone");

    let again = bin(&args);
    assert_eq!(again.stdout, out.stdout);
    assert_eq!(std::fs::read_to_string(&svg_path).unwrap(), svg);
}

#[test]
fn validate_accepts_roots_and_rejects_neighbours() {
    let s = nonzero_root("7");
    let ok = bin(&["validate", "--lambda", "7", "--s-root", &s]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    let doc = json(&ok);
    assert_eq!(doc["diagnostics"]["passed"], true);
    assert!(doc["diagnostics"]["equation_residual"].as_f64().unwrap() <= 1e-6);

    let off = format!("{:?}", s.parse::<f64>().unwrap() + 0.1);
    assert_eq!(bin(&["validate", "--lambda", "7", "--s-root", &off]).status.code(), Some(3));

    let trivial = bin(&["validate", "--lambda", "6", "--s-root", &format!("{:?}", 24f64.ln())]);
    assert_eq!(trivial.status.code(), Some(0));
    let report = &json(&trivial)["results"][0];
    assert!(report["rigidity_energy"].as_f64().unwrap() <= 1e-8);
    assert!(report["normalization_residual"].as_f64().unwrap() <= 1e-12);
}

#[test]
fn validate_can_emit_the_field() {
    let out = bin(&["validate", "--lambda", "6", "--s-root", &format!("{:?}", 24f64.ln()), "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert_eq!(text.lines().next(), Some("theta,u,u_prime,weight"));
    assert_eq!(text.lines().count(), 129);
}

#[test]
fn crosscheck_examples() {
    let s = nonzero_root("7");
    let out = bin(&["crosscheck", "--lambda", "7", "--s-root", &s]);
    assert_eq!(out.status.code(), Some(0));
    let r = &json(&out)["results"][0];
    assert!(r["sup_gap"].as_f64().unwrap() <= 1e-6);
    assert!(r["iterations"].as_u64().unwrap() <= 10);

    let zero = bin(&["crosscheck", "--lambda", "6", "--zero-guess"]);
    assert_eq!(zero.status.code(), Some(0));
    assert_eq!(json(&zero)["results"][0]["sup_u"].as_f64(), Some(0.0));

    let modes = bin(&["crosscheck", "--lambda", "6", "--spectrum", "5"]);
    assert_eq!(modes.status.code(), Some(0));
    let doc = json(&modes);
    let eig: Vec<f64> = doc["results"].as_array().unwrap().iter().map(|e| e["eigenvalue"].as_f64().unwrap()).collect();
    for (e, exact) in eig.iter().zip([0.0, 2.0, 6.0, 12.0, 20.0]) {
        assert!((e - exact).abs() <= 1e-6 * f64::max(exact, 1.0));
    }
    assert_eq!(doc["diagnostics"]["degenerate_mode"], 2);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let path = scratch("run.toml");
    std::fs::write(&path, "lambda = 8\nds = 0.1\nformat = \"csv\"\n").unwrap();
    let cfg = path.to_str().unwrap();

    let from_file = stdout(&bin(&["roots", "--config", cfg]));
    assert!(from_file.lines().skip(1).all(|l| l.starts_with("8.0000000000000000e0,")));
    let overridden = stdout(&bin(&["roots", "--config", cfg, "--lambda", "5"]));
    assert!(overridden.lines().skip(1).all(|l| l.starts_with("5.0000000000000000e0,")));

    std::fs::write(&path, "lamda = 8\n").unwrap();
    assert_eq!(bin(&["roots", "--config", cfg]).status.code(), Some(1));
}

#[test]
fn thread_cap_is_validated() {
    let out = Command::new(env!("CARGO_BIN_EXE_meanfield"))
        .args(["roots", "--lambda", "7"])
        .env("MEANFIELD_THREADS", "none")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn out_flag_writes_a_file() {
    let path = scratch("profile.csv");
    let out = bin(&["beta", "--lambda", "7", "--ds", "0.5", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 52);
}
