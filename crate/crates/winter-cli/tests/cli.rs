//! End-to-end tests against the compiled `winter` binary: exit codes,
//! output determinism, config-file precedence, and the CSV contract.

use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_winter"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn winter")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn assert_exit(out: &Output, code: i32) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "stdout: {}\nstderr: {}",
        stdout_of(out),
        stderr_of(out)
    );
}

/// Data rows of a CSV output: skips '#' metadata and the header line.
fn csv_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .skip(1)
        .map(|l| {
            l.split(',')
                .map(|c| c.parse::<f64>().expect("numeric cell"))
                .collect()
        })
        .collect()
}

fn metadata_value(text: &str, key: &str) -> Option<String> {
    let prefix = format!("# {key} = ");
    text.lines()
        .find(|l| l.starts_with(&prefix))
        .map(|l| l[prefix.len()..].to_string())
}

#[test]
fn resonances_first_root_and_residual() {
    let out = run(&["resonances", "--nmax", "1"]);
    assert_exit(&out, 0);
    let text = stdout_of(&out);
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 1, "{text}");
    // columns: n, re_k, im_k, residual_abs, re_Q2, im_Q2
    let row = &rows[0];
    assert_eq!(row[0], 1.0);
    assert!((row[1] - 3.135_322_336_658_613_4).abs() < 1e-12, "{row:?}");
    assert!(row[2] < 0.0, "resonance lies in the lower half-plane");
    assert!(row[3] < 1e-10 * 500.0, "residual bound: {row:?}");
    assert!((row[4] - 1.0).abs() < 0.05, "Re Q^2 near 1: {row:?}");
    assert!(row[5].abs() < 0.05, "Im Q^2 small: {row:?}");
}

#[test]
fn identical_configs_give_byte_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        let out = run(&[
            "decay",
            "--nmax",
            "40",
            "--t-count",
            "300",
            "--smear",
            "0.02",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_exit(&out, 0);
    }
    let bytes_a = std::fs::read(&a).unwrap();
    let bytes_b = std::fs::read(&b).unwrap();
    assert!(!bytes_a.is_empty());
    assert_eq!(bytes_a, bytes_b, "repeated runs must be byte-identical");

    // thread count must not change the numbers either
    let c = dir.path().join("c.csv");
    let out = run(&[
        "decay",
        "--nmax",
        "40",
        "--t-count",
        "300",
        "--smear",
        "0.02",
        "--threads",
        "1",
        "--out",
        c.to_str().unwrap(),
    ]);
    assert_exit(&out, 0);
    let text_c = String::from_utf8(std::fs::read(&c).unwrap()).unwrap();
    let text_a = String::from_utf8(bytes_a).unwrap();
    assert_eq!(csv_rows(&text_a), csv_rows(&text_c));
}

#[test]
fn csv_cells_round_trip_f64_exactly() {
    let out = run(&["decay", "--nmax", "30", "--t-count", "300", "--smear", "0.02"]);
    assert_exit(&out, 0);
    let text = stdout_of(&out);
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 300);
    for line in text.lines().filter(|l| !l.starts_with('#')).skip(1) {
        for cell in line.split(',') {
            let v: f64 = cell.parse().unwrap();
            let re = format!("{v:.16e}");
            assert_eq!(re, cell, "17-significant-digit cells must round-trip");
        }
    }
}

#[test]
fn invalid_parameters_exit_1() {
    let out = run(&["resonances", "--alpha", "-1"]);
    assert_exit(&out, 1);
    assert!(stderr_of(&out).contains("alpha"), "{}", stderr_of(&out));

    let out = run(&["decay", "--radius", "0"]);
    assert_exit(&out, 1);

    let out = run(&["decay", "--t-stop", "bogus"]);
    assert_exit(&out, 1);

    // unknown flag is a configuration error too
    let out = run(&["decay", "--no-such-flag"]);
    assert_exit(&out, 1);

    // help and version are not errors
    let out = run(&["--help"]);
    assert_exit(&out, 0);
}

#[test]
fn gauss_classifications_and_mismatch_exit() {
    let out = run(&["gauss", "--time", "1/3", "--l-max", "20000", "--format", "json"]);
    assert_exit(&out, 0);
    let doc: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert_eq!(doc["class"], "bounded-pattern", "{doc}");

    let out = run(&["gauss", "--time", "1/2", "--l-max", "20000", "--format", "json"]);
    assert_exit(&out, 0);
    let doc: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert_eq!(doc["class"], "linear", "{doc}");
    let e = doc["exponent"].as_f64().unwrap();
    assert!((0.9..=1.1).contains(&e), "exponent {e}");

    let out = run(&["gauss", "--time", "0.70710678118654752", "--l-max", "50000"]);
    assert_exit(&out, 0);
    let doc: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert_eq!(doc["class"], "sublinear", "{doc}");

    // l_max below the fitting minimum is a configuration error
    let out = run(&["gauss", "--time", "1/2", "--l-max", "50"]);
    assert_exit(&out, 1);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "# sample config\nalpha = 200\nnmax = 25\nt-count = 120\nsmear = 0.05\n",
    )
    .unwrap();
    let out = run(&[
        "decay",
        "--config",
        cfg.to_str().unwrap(),
        "--alpha",
        "300",
    ]);
    assert_exit(&out, 0);
    let text = stdout_of(&out);
    // flag wins over the file; untouched file entries survive
    assert_eq!(
        metadata_value(&text, "alpha").as_deref(),
        Some("3.0000000000000000e2")
    );
    assert_eq!(metadata_value(&text, "n_max").as_deref(), Some("25"));
    assert_eq!(metadata_value(&text, "t_count").as_deref(), Some("120"));

    let bad = dir.path().join("bad.cfg");
    std::fs::write(&bad, "alpha = 200\nwibble = 3\n").unwrap();
    let out = run(&["decay", "--config", bad.to_str().unwrap()]);
    assert_exit(&out, 1);
}

#[test]
fn snapshot_writes_one_file_per_time() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("snap.csv");
    let out = run(&[
        "snapshot",
        "--nmax",
        "40",
        "--r-count",
        "64",
        "--times",
        "T/8,T/16",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_exit(&out, 0);
    for (idx, frac) in [(0usize, 8.0), (1usize, 16.0)] {
        let path = dir.path().join(format!("snap_{idx}.csv"));
        let text = std::fs::read_to_string(&path).unwrap();
        let t: f64 = metadata_value(&text, "t").unwrap().parse().unwrap();
        let t_rev = 2.0 / std::f64::consts::PI;
        assert!((t - t_rev / frac).abs() < 1e-12);
        let rows = csv_rows(&text);
        assert_eq!(rows.len(), 64);
        assert_eq!(rows[0][0], 0.0);
        assert_eq!(rows[0][1], 0.0, "density vanishes at the origin");
        assert!(rows.iter().all(|r| r[1] >= 0.0));
    }

    // a single time goes to the path as given
    let single = dir.path().join("one.csv");
    let out = run(&[
        "snapshot",
        "--nmax",
        "30",
        "--r-count",
        "16",
        "--times",
        "T/8",
        "--out",
        single.to_str().unwrap(),
    ]);
    assert_exit(&out, 0);
    assert!(single.exists());
}

#[test]
fn tabulated_state_runs_and_echoes_path() {
    let dir = tempfile::tempdir().unwrap();
    let profile = dir.path().join("profile.csv");
    // linear ramp sampled on a coarse grid; header comment must be skipped
    let mut body = String::from("# r, phi0\n");
    for i in 0..=50 {
        let r = i as f64 / 50.0;
        body.push_str(&format!("{r},{r}\n"));
    }
    std::fs::write(&profile, body).unwrap();

    let state_arg = format!("file:{}", profile.display());
    let out = run(&[
        "decay",
        "--nmax",
        "40",
        "--t-count",
        "300",
        "--smear",
        "0.02",
        "--state",
        &state_arg,
    ]);
    assert_exit(&out, 0);
    let text = stdout_of(&out);
    assert_eq!(
        metadata_value(&text, "state").as_deref(),
        Some(state_arg.as_str())
    );
    // a sampled linear ramp must reproduce the analytic linear profile
    let builtin = run(&["decay", "--nmax", "40", "--t-count", "300", "--smear", "0.02"]);
    assert_exit(&builtin, 0);
    let rows_file = csv_rows(&text);
    let rows_lin = csv_rows(&stdout_of(&builtin));
    for (a, b) in rows_file.iter().zip(&rows_lin) {
        assert!((a[2] - b[2]).abs() < 1e-10, "P mismatch: {} vs {}", a[2], b[2]);
    }

    let out = run(&["decay", "--state", "file:/does/not/exist.csv"]);
    assert_exit(&out, 1);
}

#[test]
fn limit_reports_target_constant() {
    let out = run(&["limit", "--alphas", "500", "--nmax", "150"]);
    assert_exit(&out, 0);
    let doc: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    let rows = doc["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 1);
    let target = rows[0]["target"].as_f64().unwrap();
    assert!((target - (-4.0 / (3.0 * 3.0f64.sqrt()))).abs() < 1e-14);
    let exact = rows[0]["Pdot_exact"].as_f64().unwrap();
    assert!((exact - target).abs() / target.abs() < 0.2, "exact {exact}");

    // alphas must ascend
    let out = run(&["limit", "--alphas", "2000,500", "--nmax", "100"]);
    assert_exit(&out, 1);
}

#[test]
fn selfcheck_passes() {
    let out = run(&["selfcheck", "--nmax", "60"]);
    assert_exit(&out, 0);
    let text = stdout_of(&out);
    assert!(text.contains("selfcheck: all checks passed"), "{text}");
    assert!(!text.contains("FAILED"), "{text}");
}

#[test]
fn derivative_scan_columns() {
    let out = run(&[
        "derivative-scan",
        "--nmax",
        "40",
        "--t-start",
        "0.01",
        "--t-stop",
        "0.5T",
        "--t-count",
        "20",
    ]);
    assert_exit(&out, 0);
    let text = stdout_of(&out);
    let header: Vec<&str> = text
        .lines()
        .find(|l| !l.starts_with('#'))
        .unwrap()
        .split(',')
        .collect();
    assert_eq!(header, ["t", "t_over_T", "Pdot"]);
    assert_eq!(csv_rows(&text).len(), 20);
}
