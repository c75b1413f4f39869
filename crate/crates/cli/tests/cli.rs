//! End-to-end runs of the `divsbl` binary.

use std::path::Path;
use std::process::{Command, Output};

fn divsbl(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_divsbl"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

const FAST: [&str; 8] = [
    "--trials",
    "2",
    "--set",
    "max_iters=20",
    "--set",
    "n=60",
    "--set",
    "m=30",
];

#[test]
fn bench_writes_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["bench", "hetero", "--seed", "3", "--out", "r.csv"];
    args.extend(FAST);
    let out = divsbl(&args, dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);

    let mut args = vec!["bench", "hetero", "--format", "json", "--out", "r.json"];
    args.extend(FAST);
    assert!(divsbl(&args, dir.path()).status.success());
    assert!(std::fs::read_to_string(dir.path().join("r.json"))
        .unwrap()
        .contains("\"base_seed\""));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("exp.conf"),
        "algorithm = bsbl\ntrials = 5\nn = 60\nm = 30\nmax_iters = 20\n",
    )
    .unwrap();
    let out = divsbl(
        &[
            "bench", "hetero", "--config", "exp.conf", "--trials", "1", "--out", "r.csv",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.lines().nth(1).unwrap().ends_with(",bsbl"));
}

#[test]
fn gen_then_solve() {
    let dir = tempfile::tempdir().unwrap();
    let out = divsbl(
        &["gen", "theorem1", "--seed", "5", "--out", "inst"],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for f in ["phi.csv", "y.csv", "x_true.csv", "meta.json"] {
        assert!(dir.path().join("inst").join(f).exists(), "{f}");
    }
    let out = divsbl(
        &[
            "solve",
            "--phi",
            "inst/phi.csv",
            "--y",
            "inst/y.csv",
            "--block-size",
            "4",
            "--set",
            "learn_beta=false",
            "--set",
            "beta_init=1e10",
            "--out",
            "x_hat.csv",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let x_hat = divsbl_core::io::read_vector(&dir.path().join("x_hat.csv")).unwrap();
    let x = divsbl_core::io::read_vector(&dir.path().join("inst/x_true.csv")).unwrap();
    assert!(divsbl_core::metrics::nmse(&x_hat, &x).unwrap() < 1e-2);
}

#[test]
fn exit_codes_follow_error_kind() {
    let dir = tempfile::tempdir().unwrap();
    let bad_key = divsbl(&["bench", "hetero", "--set", "colour=blue"], dir.path());
    assert_eq!(bad_key.status.code(), Some(1));
    let bad_sweep = divsbl(&["sweep", "wavelength"], dir.path());
    assert_eq!(bad_sweep.status.code(), Some(1));
    let missing = divsbl(
        &[
            "solve", "--phi", "nope.csv", "--y", "nope.csv", "--out", "x.csv",
        ],
        dir.path(),
    );
    assert_eq!(missing.status.code(), Some(2));
    let missing_config = divsbl(&["bench", "hetero", "--config", "nope.conf"], dir.path());
    assert_eq!(missing_config.status.code(), Some(2));
}
