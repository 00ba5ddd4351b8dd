//! Fixed-seed command outputs compared byte for byte with committed files.
//! Set `KSCALE_BLESS=1` to rewrite the files after an intended change.

mod common;

use std::path::PathBuf;

use common::{read, run_golden, GOLDEN_RUNS};

fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

#[test]
fn outputs_match_committed_files() {
    let dir = tempfile::tempdir().unwrap();
    run_golden(dir.path());
    let bless = std::env::var_os("KSCALE_BLESS").is_some();
    for (name, _) in GOLDEN_RUNS {
        let got = read(dir.path(), name);
        let path = golden_dir().join(name);
        if bless {
            std::fs::write(&path, &got).unwrap();
            continue;
        }
        let want = std::fs::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert!(got == want, "{name} differs from {}", path.display());
    }
}

#[test]
fn two_runs_are_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_golden(a.path());
    run_golden(b.path());
    for (name, _) in GOLDEN_RUNS {
        assert_eq!(read(a.path(), name), read(b.path(), name), "{name}");
    }
}
