mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

use common::*;
use rectex::compression::expand;
use rectex::io::{load_matrix, save_matrix, NetworkFile};
use rectex::nalgebra::DMatrix;
use rectex::{AffineUnit, ThresholdNetwork};
use rectex::compression::UMatrix;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join("fixtures").join(name)
}

fn rectex(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rectex")).args(args).env("RECTEX_THREADS", "2").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout)
        .unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&o.stdout)))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn convert_reports_layer_sizes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.json");
    let o = rectex(&["convert", "--in", s(&fixture("running_example.json")), "--form", "dnf", "--out", s(&out)]);
    assert_eq!(code(&o), 0);
    let r = json(&o);
    assert_eq!((r["first_layer_units"].as_u64(), r["second_layer_units"].as_u64()), (Some(8), Some(2)));
    assert_eq!(r["form"], "dnf");
    assert!(matches!(NetworkFile::load(&out).unwrap(), NetworkFile::Threshold(_)));

    let o = rectex(&["convert", "--in", s(&fixture("running_example.json")), "--form", "cnf", "--out", s(&out)]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["second_layer_units"], 4);

    let o = rectex(&["convert", "--in", s(&fixture("empty_relu.json")), "--out", s(&out)]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["first_layer_units"], 1);
}

#[test]
fn convert_guards_and_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.json");
    let o = rectex(&["convert", "--in", s(&fixture("running_example.json")), "--out", s(&out), "--max-units", "4"]);
    assert_eq!(code(&o), 2);
    assert!(o.stdout.is_empty());
    let o = rectex(&["convert", "--in", s(&fixture("running_example.json")), "--out", s(&out), "--max-units", "4", "--force"]);
    assert_eq!(code(&o), 0);

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"kind\": \"relu\", \"dim\": 2").unwrap();
    assert_eq!(code(&rectex(&["convert", "--in", s(&bad), "--out", s(&out)])), 1);
    assert_eq!(code(&rectex(&["convert", "--in", s(&fixture("two_layer_threshold.json")), "--out", s(&out)])), 1);
}

#[test]
fn verify_conversion_and_identity() {
    let dir = tempfile::tempdir().unwrap();
    let a = fixture("running_example.json");
    let b = dir.path().join("dnf.json");
    assert_eq!(code(&rectex(&["convert", "--in", s(&a), "--out", s(&b)])), 0);
    let o = rectex(&["verify", "--a", s(&a), "--b", s(&b), "--dim-samples", "10000", "--seed", "3", "--boundary"]);
    assert_eq!(code(&o), 0);
    let r = json(&o);
    assert_eq!(r["samples"], 10000);
    assert_eq!(r["boundary_samples"], 50);
    assert_eq!(r["disagreements"], 0);
    assert!(r["first_disagreement_point"].is_null());

    let o = rectex(&["verify", "--a", s(&a), "--b", s(&a), "--samples", "500"]);
    assert_eq!((code(&o), json(&o)["disagreements"].as_u64()), (0, Some(0)));

    let o = rectex(&["verify", "--a", s(&a), "--b", s(&fixture("empty_relu.json"))]);
    assert_eq!(code(&o), 1);
}

#[test]
fn verify_reports_mismatch() {
    let a = fixture("running_example.json");
    let flipped = tempfile::tempdir().unwrap();
    let b = flipped.path().join("b.json");
    let text = std::fs::read_to_string(&a).unwrap().replace("\"w0\": -0.05", "\"w0\": 5.0");
    std::fs::write(&b, text).unwrap();
    let o = rectex(&["verify", "--a", s(&a), "--b", s(&b), "--samples", "2000"]);
    assert_eq!(code(&o), 1);
    let r = json(&o);
    assert!(r["disagreements"].as_u64().unwrap() > 0);
    assert_eq!(r["first_disagreement_point"].as_array().unwrap().len(), 2);
}

#[test]
fn approximation_agrees_off_the_band() {
    let dir = tempfile::tempdir().unwrap();
    let t = fixture("two_layer_threshold.json");
    let r = dir.path().join("r.json");
    let o = rectex(&["approximate", "--in", s(&t), "--eps", "1e-3", "--out", s(&r)]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["relu_units"], 6);
    let o = rectex(&["verify", "--a", s(&t), "--b", s(&r), "--samples", "20000", "--boundary", "--eps", "1e-3"]);
    let rep = json(&o);
    assert_eq!(rep["disagreements_outside_band"], 0);
    let band = rep["band_fraction"].as_f64().unwrap();
    let total = (rep["samples"].as_u64().unwrap() + rep["boundary_samples"].as_u64().unwrap()) as f64;
    assert!(rep["disagreements"].as_f64().unwrap() / total <= band);
    assert_eq!(code(&rectex(&["approximate", "--in", s(&t), "--eps", "0", "--out", s(&r)])), 2);
}

fn tiny_u() -> UMatrix {
    let units = [AffineUnit::new(vec![1.0], 0.5).unwrap(), AffineUnit::new(vec![-2.0], 0.25).unwrap()];
    UMatrix::from_parts(&units, -1.0).unwrap()
}

#[test]
fn compress_exact_and_lp() {
    let dir = tempfile::tempdir().unwrap();
    let (vp, up) = (dir.path().join("v.csv"), dir.path().join("u.csv"));
    let u = tiny_u();
    let v = expand(&u).unwrap().matrix().clone();
    save_matrix(&vp, &v).unwrap();
    let o = rectex(&["compress", "--in", s(&vp), "--mode", "exact", "--out", s(&up)]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["objective"], 0.0);
    assert!(max_abs_diff(&load_matrix(&up).unwrap(), u.matrix()) <= 1e-12);

    let mut perturbed = v.clone();
    perturbed[(0, 3)] += 0.1;
    save_matrix(&vp, &perturbed).unwrap();
    let o = rectex(&["compress", "--in", s(&vp), "--mode", "exact", "--out", s(&up)]);
    assert_eq!(code(&o), 1);
    assert_eq!(json(&o)["error"], "not_factorable");
    let o = rectex(&["compress", "--in", s(&vp), "--mode", "lp", "--out", s(&up)]);
    assert_eq!(code(&o), 0);
    let r = json(&o);
    let obj = r["objective"].as_f64().unwrap();
    assert!((obj - grid_min_infnorm(&perturbed, 2)).abs() <= 1e-3);
    assert!(obj > 0.0 && obj <= 0.1 + 1e-9);
    assert!(r["duality_gap"].as_f64().unwrap() <= 1e-7);

    let mut column_one = v.clone();
    column_one[(0, 0)] = 0.3;
    save_matrix(&vp, &column_one).unwrap();
    let o = rectex(&["compress", "--in", s(&vp), "--out", s(&up)]);
    assert_eq!(code(&o), 1);
    assert_eq!(json(&o)["column"], 1);
}

#[test]
fn compress_guards() {
    let dir = tempfile::tempdir().unwrap();
    let (vp, up) = (dir.path().join("v.csv"), dir.path().join("u.csv"));
    save_matrix(&vp, &DMatrix::from_element(2, 3, 1.0)).unwrap();
    assert_eq!(code(&rectex(&["compress", "--in", s(&vp), "--out", s(&up)])), 2);
    assert_eq!(code(&rectex(&["compress", "--in", s(&vp), "--mode", "lp", "--out", s(&up)])), 2);
    save_matrix(&vp, &DMatrix::from_element(2, 2048, 1.0)).unwrap();
    assert_eq!(code(&rectex(&["compress", "--in", s(&vp), "--mode", "lp", "--out", s(&up)])), 3);
}

fn write_points(path: &Path, points: &[Vec<f64>]) {
    let d = points[0].len();
    let mut text = (1..=d).map(|k| format!("x_{k}")).collect::<Vec<_>>().join(",") + "\n";
    for p in points {
        text += &(p.iter().map(|v| format!("{v:e}")).collect::<Vec<_>>().join(",") + "\n");
    }
    std::fs::write(path, text).unwrap();
}

#[test]
fn margin_audit_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let (vp, up, dp, ap) =
        (dir.path().join("v.csv"), dir.path().join("u.csv"), dir.path().join("x.csv"), dir.path().join("a.csv"));
    let u = tiny_u();
    save_matrix(&vp, expand(&u).unwrap().matrix()).unwrap();
    save_matrix(&up, u.matrix()).unwrap();
    let mut r = rng(4);
    let points: Vec<Vec<f64>> = (0..200).map(|_| point(&mut r, 1)).collect();
    write_points(&dp, &points);
    let o = rectex(&["margin-audit", "--v", s(&vp), "--u", s(&up), "--data", s(&dp), "--out", s(&ap)]);
    assert_eq!(code(&o), 0);
    let rep = json(&o);
    assert_eq!((rep["examples"].as_u64(), rep["passing"].as_u64()), (Some(200), Some(200)));
    let table = std::fs::read_to_string(&ap).unwrap();
    assert!(table.starts_with("example,gamma,x_inf_norm,bound,residual,passes,argmax_v,argmax_ut"));
    assert_eq!(table.lines().count(), 201);

    // Identical units give a zero margin everywhere, so a non-zero residual never passes.
    let v = DMatrix::from_row_slice(2, 4, &[1.0, 1.0, 1.0, 1.0, 0.5, 0.5, 0.5, 0.5]);
    let u = DMatrix::from_row_slice(2, 3, &[1.0, 1.0, 0.0, 0.5, 0.5, 0.01]);
    save_matrix(&vp, &v).unwrap();
    save_matrix(&up, &u).unwrap();
    let o = rectex(&["margin-audit", "--v", s(&vp), "--u", s(&up), "--data", s(&dp)]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().skip(1).all(|l| l.split(',').nth(5) == Some("false")));

    let bad = DMatrix::from_element(3, 3, 0.0);
    save_matrix(&up, &bad).unwrap();
    assert_ne!(code(&rectex(&["margin-audit", "--v", s(&vp), "--u", s(&up), "--data", s(&dp)])), 0);
}

#[test]
fn generate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = |tag: &str| {
        let (n, d) = (dir.path().join(format!("{tag}.json")), dir.path().join(format!("{tag}.csv")));
        let o = rectex(&[
            "generate", "--n", "3", "--d", "4", "--seed", "9", "--out", s(&n), "--data", s(&d), "--total", "300",
            "--test", "50",
        ]);
        assert_eq!(code(&o), 0);
        let f = json(&o)["positive_fraction"].as_f64().unwrap();
        assert!((0.05..=0.95).contains(&f));
        (std::fs::read(n).unwrap(), std::fs::read(d).unwrap())
    };
    assert_eq!(run("a"), run("b"));
    let out = dir.path().join("g.json");
    assert_eq!(code(&rectex(&["generate", "--n", "3", "--d", "0", "--out", s(&out)])), 2);
}

#[test]
fn experiment_writes_report_and_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = rectex(&[
            "experiment", "--dims", "3", "--ns", "3", "--seed", "1", "--out", s(&out), "--total", "400", "--test",
            "100", "--max-epochs", "5", "--patience", "2",
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(json(&o)["rows"], 3);
        std::fs::read(out).unwrap()
    };
    let first = run("a.csv");
    let text = String::from_utf8(first.clone()).unwrap();
    assert!(text.starts_with("n,d,setting,train_error,test_error,chosen_lr,epochs"));
    assert_eq!(text.lines().count(), 4);
    for setting in ["relu(3)", "ctanh(3)", "ctanh(8)"] {
        assert!(text.contains(setting));
    }
    assert!(dir.path().join("a.csv.artifacts").join("generator_n3_d3.json").exists());
    assert!(dir.path().join("a.csv.artifacts").join("data_n3_d3.csv").exists());
    assert_eq!(run("b.csv"), first);
    let out = dir.path().join("c.csv");
    assert_eq!(code(&rectex(&["experiment", "--ns", "11", "--dims", "3", "--out", s(&out)])), 2);
}

#[test]
fn witness_and_regions() {
    let o = rectex(&["witness", "--n", "3"]);
    assert_eq!(code(&o), 0);
    let r = json(&o);
    let w = r["witnesses"].as_array().unwrap();
    assert_eq!(w.len(), 7);
    assert!(w.iter().all(|x| x["verified"] == true && x["positive_hyperplanes"] == 1));
    assert_eq!(r["all_verified"], true);

    let o = rectex(&["witness", "--n", "3", "--lemma4"]);
    assert_eq!(code(&o), 0);
    let net: NetworkFile = serde_json::from_value(json(&o)["network"].clone()).unwrap();
    assert!(matches!(net, NetworkFile::Threshold(ThresholdNetwork { .. })));
    assert_eq!(code(&rectex(&["witness", "--n", "13"])), 2);

    assert_eq!(json(&rectex(&["regions", "--n", "3", "--d", "2"]))["regions"], 7);
    assert_eq!(json(&rectex(&["regions", "--n", "2", "--d", "5"]))["regions"], 4);
    assert_eq!(code(&rectex(&["regions", "--n", "3", "--d", "0"])), 2);
    assert_eq!(code(&rectex(&["regions", "--n", "200", "--d", "100"])), 2);
}
