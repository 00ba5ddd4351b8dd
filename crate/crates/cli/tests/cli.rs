mod common;

use std::fs;

use common::{code, kscale, ok, read};
use kscale::io::save_labeled_csv;
use kscale_core::intrinsic_dim::sample_unit_ball;
use kscale_core::{Matrix, Rng};
use serde_json::Value;

fn json(text: &str) -> Value {
    serde_json::from_str(text).unwrap()
}

fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines().filter(|l| !l.starts_with('#')).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn gen_spiral_figure_parameters() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        dir.path(),
        &[
            "gen", "spiral", "--nc", "4", "--np", "100", "--gap", "0.02", "--sigma", "0.4", "--seed", "7", "--out",
            "s.csv",
        ],
    );
    let text = String::from_utf8(read(dir.path(), "s.csv")).unwrap();
    assert!(text.starts_with("# x0,x1,x2,label\n"));
    let r = rows(&text);
    assert_eq!(r.len(), 400);
    assert!(r.iter().all(|row| row.len() == 4));
    let mut labels: Vec<&str> = r.iter().map(|row| row[3].as_str()).collect();
    labels.dedup();
    assert_eq!(labels, ["0", "1", "2", "3"]);
    let side = json(&String::from_utf8(read(dir.path(), "s.csv.params.json")).unwrap());
    assert_eq!(side["kind"], "spiral");
    assert_eq!(side["seed"], 7);
    assert_eq!(side["params"]["np"], 100);
    assert_eq!(side["r"].as_array().unwrap().len(), 400);
}

#[test]
fn gen_swiss_default_count() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["gen", "swiss", "--n", "2000", "--seed", "1", "--out", "w.csv"]);
    let r = rows(&String::from_utf8(read(dir.path(), "w.csv")).unwrap());
    assert_eq!(r.len(), 2000);
    assert!(r.iter().all(|row| row.len() == 3));
    let side = json(&String::from_utf8(read(dir.path(), "w.csv.params.json")).unwrap());
    assert_eq!(side["theta"].as_array().unwrap().len(), 2000);
    assert_eq!(side["labeled"], false);
}

#[test]
fn gen_is_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    for kind in ["swiss", "swiss-noisy", "mixture", "spiral"] {
        let args = |out: &'static str| ["gen", kind, "--n", "50", "--seed", "11", "--out", out];
        ok(dir.path(), &args("a.csv"));
        ok(dir.path(), &args("b.csv"));
        assert_eq!(read(dir.path(), "a.csv"), read(dir.path(), "b.csv"), "{kind}");
        assert_eq!(read(dir.path(), "a.csv.params.json"), read(dir.path(), "b.csv.params.json"), "{kind}");
    }
}

#[test]
fn maxmin_on_two_points() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("two.csv"), "0,0\n3,4\n").unwrap();
    let rep = json(&ok(dir.path(), &["scale", "--method", "maxmin", "--c", "2", "two.csv"]));
    assert_eq!(rep["method"], "maxmin");
    assert_eq!(rep["epsilon"], 50.0);
    assert_eq!(rep["config"]["c"], 2.0);
    assert!(rep["version"].is_string());
}

#[test]
fn singer_on_plane_gives_ordered_range() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = Rng::new(5);
    let x = Matrix::from_fn(400, 2, |_, _| rng.uniform());
    save_labeled_csv(&dir.path().join("plane.csv"), &x, None).unwrap();
    let rep = json(&ok(dir.path(), &["scale", "--method", "singer", "plane.csv", "--curve", "l.csv"]));
    let range = rep["range"].as_array().unwrap();
    let (e0, e1) = (range[0].as_f64().unwrap(), range[1].as_f64().unwrap());
    assert!(0.0 < e0 && e0 < e1, "{e0} {e1}");
    assert_eq!(rep["epsilon"].as_f64().unwrap(), e0);
    let curve = String::from_utf8(read(dir.path(), "l.csv")).unwrap();
    assert!(curve.starts_with("eps,kernel_sum\n"));
    assert_eq!(curve.lines().count(), 65);
}

#[test]
fn rho_p_argmax_inside_grid() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["gen", "spiral", "--nc", "3", "--np", "30", "--seed", "2", "--out", "s.csv"]);
    let rep = json(&ok(dir.path(), &["scale", "--method", "rho_p", "--labels", "last", "s.csv", "--eps-count", "12"]));
    let grid: Vec<f64> = rep["grid"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert_eq!(grid.len(), 12);
    let best = rep["argmax_eps"].as_f64().unwrap();
    assert!(grid[0] <= best && best <= grid[11]);
    assert!(grid.contains(&best));
    let scores: Vec<f64> = rep["scores"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    let top = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(scores[grid.iter().position(|&g| g == best).unwrap()], top);
}

#[test]
fn every_method_produces_a_report() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["gen", "mixture", "--n-per-class", "15", "--dim", "3", "--seed", "8", "--out", "m.csv"]);
    for m in ["std", "std-inverse", "maxmin", "singer", "zelnik", "manifold", "rho_psi", "ge", "rho_p"] {
        let extra: &[&str] = if m == "manifold" { &["--grid-points", "6"] } else { &[] };
        let mut args = vec!["scale", "--method", m, "--labels", "last", "m.csv"];
        args.extend_from_slice(extra);
        let rep = json(&ok(dir.path(), &args));
        assert_eq!(rep["method"], m);
        assert!(rep["epsilon"].as_f64().unwrap() > 0.0, "{m}");
        assert_eq!(rep["seed"], 0);
    }
}

#[test]
fn manifold_report_carries_scaling() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = Rng::new(9);
    let x = Matrix::from_fn(80, 3, |_, l| if l < 2 { rng.uniform() } else { 0.05 * rng.normal() });
    save_labeled_csv(&dir.path().join("p.csv"), &x, None).unwrap();
    let rep = json(&ok(
        dir.path(),
        &["scale", "--method", "manifold", "p.csv", "--d-hat", "2", "--grid-points", "8", "--curve", "t.csv"],
    ));
    assert_eq!(rep["scaling"].as_array().unwrap().len(), 3);
    assert_eq!(rep["trace"].as_array().unwrap().len(), 1);
    assert_eq!(rep["d_hat"], 2);
    let trace = String::from_utf8(read(dir.path(), "t.csv")).unwrap();
    assert_eq!(trace.lines().count(), 2);
}

#[test]
fn embed_swiss_roll_at_range_start() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["gen", "swiss", "--n", "300", "--seed", "1", "--out", "w.csv"]);
    let rep = json(&ok(dir.path(), &["scale", "--method", "singer", "w.csv"]));
    let e0 = rep["range"][0].as_f64().unwrap().to_string();
    let text = ok(dir.path(), &["embed", "w.csv", "--eps", &e0, "--d", "2"]);
    let r = rows(&text);
    assert_eq!(r.len(), 300);
    for row in &r {
        assert_eq!(row.len(), 2);
        assert!(row.iter().all(|v| v.parse::<f64>().unwrap().is_finite()));
    }
}

#[test]
fn embed_with_scaling_and_labels() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["gen", "spiral", "--nc", "2", "--np", "10", "--seed", "1", "--out", "s.csv"]);
    let text =
        ok(dir.path(), &["embed", "s.csv", "--labels", "last", "--eps", "3", "--scaling", "1,2,0.5", "--d", "3"]);
    let r = rows(&text);
    assert_eq!(r.len(), 20);
    assert!(r.iter().all(|row| row.len() == 4));
    assert_eq!(r[0][3], "0");
}

#[test]
fn dim_recovers_ball_in_ten_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = Rng::new(21);
    let ball = sample_unit_ball(3, 800, &mut rng).unwrap();
    // Random orthonormal 3 x 10 frame by Gram-Schmidt.
    let mut frame: Vec<Vec<f64>> = Vec::new();
    while frame.len() < 3 {
        let mut v: Vec<f64> = (0..10).map(|_| rng.normal()).collect();
        for f in &frame {
            let p: f64 = f.iter().zip(&v).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(f).for_each(|(a, b)| *a -= p * b);
        }
        let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        frame.push(v.into_iter().map(|a| a / n).collect());
    }
    let q = Matrix::from_fn(3, 10, |i, j| frame[i][j]);
    save_labeled_csv(&dir.path().join("b.csv"), &ball.matmul(&q).unwrap(), None).unwrap();
    let text = ok(dir.path(), &["dim", "b.csv"]);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("3"));
    assert_eq!(lines.next(), Some("d,kl"));
    assert_eq!(lines.count(), 10);
}

#[test]
fn sweep_schema() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["gen", "mixture", "--n-per-class", "20", "--seed", "3", "--out", "m.csv"]);
    let text = ok(dir.path(), &["sweep", "m.csv", "--eps-count", "7", "--report", "r.json"]);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("eps,acc,rho_psi,ge,rho_p"));
    let body: Vec<&str> = lines.collect();
    assert_eq!(body.len(), 7);
    for l in &body {
        assert_eq!(l.split(',').count(), 5);
    }
    let rep = json(&String::from_utf8(read(dir.path(), "r.json")).unwrap());
    for key in ["method", "grid", "scores", "argmax_eps", "accuracy", "seed", "config"] {
        assert!(rep.get(key).is_some(), "missing {key}");
    }
    assert_eq!(rep["accuracy"].as_array().unwrap().len(), 7);
}

#[test]
fn sweep_kfold_and_ambient() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["gen", "mixture", "--n-per-class", "20", "--seed", "3", "--out", "m.csv"]);
    let kf = ok(dir.path(), &["sweep", "m.csv", "--eps-count", "4", "--protocol", "kfold:5", "--seed", "2"]);
    assert_eq!(kf.lines().count(), 5);
    let amb = ok(dir.path(), &["sweep", "m.csv", "--eps-count", "4", "--space", "ambient"]);
    let acc: Vec<&str> = amb.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert!(acc.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn failed_grid_points_print_nan() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("f.csv"), "0,0,0\n0.1,0,0\n10,0,1\n10.1,0,1\n").unwrap();
    let text =
        ok(dir.path(), &["sweep", "f.csv", "--eps-min", "1e-6", "--eps-max", "1", "--eps-count", "3", "--d", "1"]);
    let first: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(&first[1..], ["nan", "nan", "nan", "nan"]);
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["gen", "spiral", "--nc", "2", "--np", "20", "--seed", "4", "--out", "s.csv"]);
    let args = ["sweep", "s.csv", "--eps-count", "6", "--d", "2"];
    let one = std::process::Command::new(env!("CARGO_BIN_EXE_kscale"))
        .current_dir(dir.path())
        .env("KSCALE_THREADS", "1")
        .args(args)
        .output()
        .unwrap();
    let three = std::process::Command::new(env!("CARGO_BIN_EXE_kscale"))
        .current_dir(dir.path())
        .env("KSCALE_THREADS", "3")
        .args(args)
        .output()
        .unwrap();
    assert!(one.status.success() && three.status.success());
    assert_eq!(one.stdout, three.stdout);
}

#[test]
fn config_file_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("two.csv"), "0,0\n3,4\n").unwrap();
    fs::write(dir.path().join("cfg.json"), r#"{"c": 3.0}"#).unwrap();
    let rep = json(&ok(dir.path(), &["scale", "--method", "maxmin", "--c", "2", "two.csv", "--config", "cfg.json"]));
    assert_eq!(rep["epsilon"], 75.0);
    assert_eq!(rep["config"]["c"], 3.0);
    fs::write(dir.path().join("bad.json"), r#"{"colour": 1}"#).unwrap();
    assert_eq!(code(dir.path(), &["scale", "--method", "maxmin", "two.csv", "--config", "bad.json"]), 2);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("two.csv"), "0,0\n3,4\n").unwrap();
    fs::write(d.join("ragged.csv"), "1,2\n# note\n3\n").unwrap();
    fs::write(d.join("word.csv"), "1,2\n3,x\n").unwrap();

    assert_eq!(code(d, &["--help"]), 0);
    assert_eq!(code(d, &["--version"]), 0);
    assert_eq!(code(d, &["scale", "--method", "maxmin", "two.csv"]), 0);

    assert_eq!(code(d, &["frobnicate"]), 2);
    assert_eq!(code(d, &["scale", "--method", "nonsense", "two.csv"]), 2);
    assert_eq!(code(d, &["scale", "--method", "rho_p", "two.csv"]), 2);
    assert_eq!(code(d, &["sweep", "two.csv", "--labels", "none"]), 2);
    assert_eq!(code(d, &["sweep", "two.csv", "--protocol", "kfold:x"]), 2);
    assert_eq!(code(d, &["sweep", "two.csv", "--eps-min", "1"]), 2);
    let bad_threads = std::process::Command::new(env!("CARGO_BIN_EXE_kscale"))
        .current_dir(d)
        .env("KSCALE_THREADS", "zero")
        .args(["scale", "--method", "maxmin", "two.csv"])
        .output()
        .unwrap();
    assert_eq!(bad_threads.status.code(), Some(2));

    let ragged = kscale(d, &["scale", "--method", "maxmin", "ragged.csv"]);
    assert_eq!(ragged.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&ragged.stderr).contains("ragged.csv:3:"));
    let word = kscale(d, &["scale", "--method", "maxmin", "word.csv"]);
    assert_eq!(word.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&word.stderr).contains("word.csv:2:"));
    assert_eq!(code(d, &["scale", "--method", "maxmin", "missing.csv"]), 3);
    assert_eq!(code(d, &["embed", "two.csv", "--eps", "1", "--d", "5"]), 3);
    assert_eq!(code(d, &["gen", "spiral", "--gap", "0.9", "--out", "g.csv"]), 3);

    assert_eq!(code(d, &["embed", "two.csv", "--eps", "1e-6", "--d", "1"]), 4);
}
