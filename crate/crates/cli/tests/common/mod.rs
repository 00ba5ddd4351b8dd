#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

pub fn kscale(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kscale"))
        .current_dir(dir)
        .env_remove("KSCALE_THREADS")
        .args(args)
        .output()
        .expect("spawn kscale")
}

/// Runs and requires exit code 0; returns stdout.
pub fn ok(dir: &Path, args: &[&str]) -> String {
    let out = kscale(dir, args);
    assert!(
        out.status.success(),
        "kscale {args:?} exited with {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

pub fn code(dir: &Path, args: &[&str]) -> i32 {
    kscale(dir, args).status.code().expect("exit code")
}

pub fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Small fixture commands covering gen, scale, embed and sweep. Each entry
/// is (output file, arguments); files are written relative to the working
/// directory, and stdout goes to the file named when `--out` is absent.
pub const GOLDEN_RUNS: &[(&str, &[&str])] = &[
    (
        "spiral.csv",
        &[
            "gen",
            "spiral",
            "--nc",
            "2",
            "--np",
            "8",
            "--gap",
            "0.05",
            "--sigma",
            "0.05",
            "--seed",
            "3",
            "--out",
            "spiral.csv",
        ],
    ),
    ("spiral.csv.params.json", &[]),
    ("swiss.csv", &["gen", "swiss-noisy", "--n", "12", "--d1", "3", "--d2", "1", "--seed", "4", "--out", "swiss.csv"]),
    ("scale_maxmin.json", &["scale", "--method", "maxmin", "swiss.csv", "--out", "scale_maxmin.json"]),
    (
        "scale_rho_p.json",
        &[
            "scale",
            "--method",
            "rho_p",
            "--labels",
            "last",
            "spiral.csv",
            "--eps-count",
            "6",
            "--out",
            "scale_rho_p.json",
            "--curve",
            "scale_rho_p_curve.csv",
        ],
    ),
    ("scale_rho_p_curve.csv", &[]),
    ("embed.csv", &["embed", "spiral.csv", "--labels", "last", "--eps", "2.0", "--d", "2", "--out", "embed.csv"]),
    (
        "sweep.csv",
        &["sweep", "spiral.csv", "--eps-count", "5", "--d", "2", "--out", "sweep.csv", "--report", "sweep.json"],
    ),
    ("sweep.json", &[]),
];

/// Executes every golden command in `dir`.
pub fn run_golden(dir: &Path) {
    for (_, args) in GOLDEN_RUNS {
        if !args.is_empty() {
            ok(dir, args);
        }
    }
}
