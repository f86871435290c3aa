//! Acceptance: re-running any subcommand with an identical configuration
//! reproduces every non-timing output column bit for bit.

use std::path::Path;
use std::process::Command;

fn run(args: &[&str], out: &Path) {
    let status = Command::new(env!("CARGO_BIN_EXE_covsketch"))
        .args(args)
        .arg("--out")
        .arg(out)
        .status()
        .expect("spawn covsketch");
    assert!(status.success(), "covsketch {args:?} failed");
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).expect("read output")
}

/// Drops the named columns (by header position) from each data row.
fn strip_columns(csv: &str, drop: &[&str]) -> String {
    let mut out = Vec::new();
    let mut drop_idx: Vec<usize> = Vec::new();
    for line in csv.lines() {
        if line.starts_with('#') {
            out.push(line.to_string());
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if drop_idx.is_empty() && cells.iter().any(|c| drop.contains(c)) {
            drop_idx = cells
                .iter()
                .enumerate()
                .filter(|(_, c)| drop.contains(*c))
                .map(|(i, _)| i)
                .collect();
        }
        let kept: Vec<&str> = cells
            .iter()
            .enumerate()
            .filter(|(i, _)| !drop_idx.contains(i))
            .map(|(_, c)| *c)
            .collect();
        out.push(kept.join(","));
    }
    out.join("\n")
}

fn assert_repeatable(args: &[&str], timing_columns: &[&str]) {
    let dir = tempfile::tempdir().expect("tempdir");
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    run(args, &a);
    run(args, &b);
    let (ta, tb) = (read(&a), read(&b));
    if timing_columns.is_empty() {
        assert_eq!(ta, tb, "outputs differ for {args:?}");
    } else {
        assert_eq!(
            strip_columns(&ta, timing_columns),
            strip_columns(&tb, timing_columns),
            "non-timing columns differ for {args:?}"
        );
    }
}

#[test]
fn criterion_9_cli_runs_are_reproducible() {
    assert_repeatable(&["decay", "--kernel", "sqexp", "--n", "40"], &[]);
    assert_repeatable(
        &["cond", "--kernel", "matern", "--n", "40", "--theta2", "1"],
        &[],
    );
    assert_repeatable(
        &[
            "sketch-error",
            "--n",
            "64",
            "--r",
            "16",
            "--trials",
            "3",
            "--workers",
            "2",
            "--seed",
            "7",
        ],
        &[],
    );
    assert_repeatable(
        &[
            "speedup",
            "--n",
            "1024",
            "--r",
            "16",
            "--workers",
            "1,2",
            "--repeats",
            "3",
        ],
        &["median_seconds", "efficiency"],
    );
    assert_repeatable(
        &["loglik", "--n", "128", "--r", "16", "--workers", "2"],
        &["seconds"],
    );
    println!("acceptance 9 (identical configs reproduce all non-timing columns bit-identically): PASS");
}

#[test]
fn errors_exit_nonzero_with_one_line_diagnostic() {
    let output = Command::new(env!("CARGO_BIN_EXE_covsketch"))
        .args(["sketch-error", "--n", "100", "--sketch", "wht"])
        .output()
        .expect("spawn covsketch");
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert_eq!(stderr.lines().count(), 1, "stderr: {stderr}");
    assert!(stderr.starts_with("error:"), "stderr: {stderr}");
}

#[test]
fn header_records_full_config() {
    let dir = tempfile::tempdir().expect("tempdir");
    let out = dir.path().join("decay.csv");
    run(&["decay", "--kernel", "matern", "--n", "24", "--theta2", "2"], &out);
    let text = read(&out);
    for needle in [
        "# tool=covsketch decay",
        "# rng=chacha20",
        "# kernel=matern",
        "# n=24",
        "# theta2=2",
        "param,index,eigenvalue",
    ] {
        assert!(text.contains(needle), "missing {needle:?} in output header");
    }
    // One row per (sweep value, index) and eigenvalues nonincreasing within
    // every sweep group.
    let mut rows = 0;
    let mut last_param = f64::NAN;
    let mut last_val = f64::INFINITY;
    for line in text.lines().filter(|l| !l.starts_with('#')).skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        let param: f64 = cells[0].parse().unwrap();
        let val: f64 = cells[2].parse().unwrap();
        if param != last_param {
            last_param = param;
            last_val = f64::INFINITY;
        }
        assert!(val <= last_val, "eigenvalues not sorted at {line}");
        last_val = val;
        rows += 1;
    }
    assert_eq!(rows, 6 * 24, "sweep emits one row per (param, index)");
}

#[test]
fn speedup_checksum_is_worker_invariant() {
    let dir = tempfile::tempdir().expect("tempdir");
    let out = dir.path().join("speedup.csv");
    run(
        &["speedup", "--n", "1024", "--r", "16", "--workers", "1,2,4", "--repeats", "3"],
        &out,
    );
    let text = read(&out);
    let checksums: Vec<&str> = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').next_back().unwrap())
        .collect();
    assert_eq!(checksums.len(), 3);
    assert!(
        checksums.iter().all(|c| c == &checksums[0]),
        "checksums differ across worker counts: {checksums:?}"
    );
}
