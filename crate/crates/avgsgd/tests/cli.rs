//! End-to-end tests of the `avgsgd` binary: artifact layout, byte-identical
//! reruns across worker counts, manifest checksums, error handling, and
//! option overrides.

use std::path::Path;
use std::process::{Command, Output};

use avgsgd::config::ExperimentConfig;
use avgsgd::manifest::sha256_hex;

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_avgsgd"))
}

fn run_ok(args: &[&str]) -> Output {
    let output = binary().args(args).output().expect("binary runs");
    assert!(
        output.status.success(),
        "command {args:?} failed:\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr),
    );
    output
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.display().to_string()
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap_or_else(|e| panic!("reading {name}: {e}"))
}

#[test]
fn exact_run_is_byte_identical_across_reruns_and_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("a");
    let config = write_config(
        dir.path(),
        "exp.cfg",
        "experiment = demo\nd = 8\nn = 30\ndelta = 0.15\nscheme = ema:0.9\nscheme = ta:10\ntrials = 40\n",
    );
    let names = ["demo_exact.csv", "demo_exact_config.txt", "demo_exact_manifest.txt"];
    run_ok(&["exact", "--config", &config, "--out", out.to_str().unwrap(), "--jobs", "1"]);
    let first: Vec<Vec<u8>> = names.iter().map(|n| read(&out, n)).collect();
    run_ok(&["exact", "--config", &config, "--out", out.to_str().unwrap(), "--jobs", "3"]);
    for (name, before) in names.iter().zip(&first) {
        assert_eq!(&read(&out, name), before, "{name} differs across reruns");
    }
}

#[test]
fn simulate_is_byte_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    let config = write_config(
        dir.path(),
        "sim.cfg",
        "experiment = sim\nd = 5\nn = 20\ndelta = 0.1\nscheme = ema:0.8\ntrials = 200\nsim_mode = full\n",
    );
    run_ok(&["simulate", "--config", &config, "--out", out_a.to_str().unwrap(), "--jobs", "1"]);
    run_ok(&["simulate", "--config", &config, "--out", out_b.to_str().unwrap(), "--jobs", "4"]);
    assert_eq!(read(&out_a, "sim_simulate.csv"), read(&out_b, "sim_simulate.csv"));
    // A different seed must change the Monte Carlo output.
    let out_c = dir.path().join("c");
    run_ok(&[
        "simulate", "--config", &config, "--out", out_c.to_str().unwrap(), "--seed", "777",
    ]);
    assert_ne!(read(&out_a, "sim_simulate.csv"), read(&out_c, "sim_simulate.csv"));
}

#[test]
fn manifest_checksums_match_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let config = write_config(
        dir.path(),
        "m.cfg",
        "experiment = m1\nd = 4\nn = 10\ndelta = 0.2\nscheme = ia\n",
    );
    run_ok(&["exact", "--config", &config, "--out", out.to_str().unwrap()]);
    let manifest = String::from_utf8(read(&out, "m1_exact_manifest.txt")).unwrap();
    let mut lines = manifest.lines();
    assert_eq!(lines.next(), Some("subcommand = exact"));
    assert_eq!(lines.next(), Some("experiment = m1"));
    // Every artifact line is followed by the sha256 of the file's bytes.
    let mut artifact_count = 0;
    let all: Vec<&str> = manifest.lines().collect();
    for pair in all.windows(2) {
        if let Some(name) = pair[0].strip_prefix("artifact = ") {
            let want = pair[1].strip_prefix("sha256 = ").expect("sha after artifact");
            let got = sha256_hex(&read(&out, name));
            assert_eq!(got, want, "checksum mismatch for {name}");
            artifact_count += 1;
        }
    }
    assert_eq!(artifact_count, 2); // config text + CSV
    // The recorded config_sha256 covers the canonical config text artifact.
    let config_line = all
        .iter()
        .find_map(|l| l.strip_prefix("config_sha256 = "))
        .unwrap();
    assert_eq!(config_line, sha256_hex(&read(&out, "m1_exact_config.txt")));
    // And that artifact re-parses to a config equal to itself (round-trip).
    let text = String::from_utf8(read(&out, "m1_exact_config.txt")).unwrap();
    let reparsed = ExperimentConfig::parse(&text).unwrap();
    assert_eq!(reparsed.format(), text);
}

#[test]
fn scheme_seed_and_stride_overrides_apply() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let config = write_config(
        dir.path(),
        "o.cfg",
        "experiment = ov\nd = 3\nn = 12\ndelta = 0.2\nscheme = ema:0.9\nmaster_seed = 1\n",
    );
    run_ok(&[
        "exact", "--config", &config, "--out", out.to_str().unwrap(),
        "--scheme", "none", "--scheme", "ta:4", "--stride", "0", "--seed", "99",
    ]);
    let csv = String::from_utf8(read(&out, "ov_exact.csv")).unwrap();
    // stride 0: only the final step, for exactly the two override schemes.
    let data_lines: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(data_lines.len(), 6); // 2 schemes × 3 quantities
    assert!(data_lines.iter().all(|l| l.starts_with("ov,12,")));
    assert!(data_lines.iter().any(|l| l.contains(",none,")));
    assert!(data_lines.iter().any(|l| l.contains(",ta:4,")));
    assert!(!csv.contains("ema:0.9"));
    let written_config = String::from_utf8(read(&out, "ov_exact_config.txt")).unwrap();
    assert!(written_config.contains("master_seed = 99"));
    assert!(written_config.contains("stride = 0"));
}

#[test]
fn figures_produce_csv_per_curve_and_svg_per_panel() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let config = write_config(
        dir.path(),
        "f.cfg",
        "experiment = fig\nd = 4\nn = 15\ndelta = 0.2\nscheme = ema:0.9\nscheme = ia\ntrials = 8\nstride = 5\n",
    );
    run_ok(&["figures", "--config", &config, "--out", out.to_str().unwrap()]);
    for name in [
        "fig_bias_ema_0.9.csv",
        "fig_bias_ia.csv",
        "fig_variance_ema_0.9.csv",
        "fig_variance_ia.csv",
    ] {
        let csv = String::from_utf8(read(&out, name)).unwrap();
        assert!(csv.starts_with("experiment,step,scheme,quantity,value,stderr,provenance\n"));
        assert_eq!(csv.lines().count(), 1 + 4); // header + steps {0,5,10,15}
    }
    for name in ["fig_bias.svg", "fig_variance.svg"] {
        let svg = String::from_utf8(read(&out, name)).unwrap();
        assert!(svg.starts_with("<svg"), "{name} is not an SVG");
        assert_eq!(svg.matches("<polyline").count(), 2, "{name} curve count");
    }
}

#[test]
fn sweep_expands_grids_and_other_subcommands_reject_them() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let config = write_config(
        dir.path(),
        "g.cfg",
        "experiment = g\nd = [2, 3]\nn = [5, 10]\ndelta = 0.2\nscheme = ema:0.9\n",
    );
    run_ok(&["sweep", "--config", &config, "--out", out.to_str().unwrap()]);
    let csv = String::from_utf8(read(&out, "g_sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 2 * 3); // header + cells × quantities
    assert!(csv.contains("g;d=2;delta=0.2;n=5;batch=1;sigma2=1,final,ema:0.9,bias,"));
    // The same config under `exact` must fail loudly.
    let output = binary()
        .args(["exact", "--config", &config, "--out", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("field `d` has 2 values"), "stderr: {stderr}");
}

#[test]
fn error_paths_exit_nonzero_with_context() {
    let dir = tempfile::tempdir().unwrap();
    // Missing config file.
    let output = binary()
        .args(["exact", "--config", dir.path().join("nope.cfg").to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&output.stderr).contains("failed to read config"));
    // Config that violates an engine precondition (δλ₁ ≥ 1).
    let config = write_config(
        dir.path(),
        "bad.cfg",
        "experiment = bad\nd = 3\nn = 5\ndelta = 1.5\nscheme = ema:0.9\n",
    );
    let out = dir.path().join("out");
    let output = binary()
        .args(["exact", "--config", &config, "--out", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&output.stderr).contains("stepsize too large"));
    // Unknown key with its line number.
    let config = write_config(dir.path(), "bad2.cfg", "experimnt = typo\n");
    let output = binary().args(["exact", "--config", &config]).output().unwrap();
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("unknown key `experimnt`"), "stderr: {stderr}");
}

#[test]
fn bounds_skips_inadmissible_bounds_but_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    // α too large for the lower bound's α^{N−1} ≤ 1/N at N=12.
    let config = write_config(
        dir.path(),
        "b.cfg",
        "experiment = b\nd = 6\nn = 12\ndelta = 0.2\nscheme = ema:0.9\n",
    );
    let output = run_ok(&["bounds", "--config", &config, "--out", out.to_str().unwrap()]);
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(
        stderr.contains("skipping the lower bound"),
        "expected a skip note, got: {stderr}"
    );
    let csv = String::from_utf8(read(&out, "b_bounds.csv")).unwrap();
    assert!(csv.contains(",eff_bias,"));
    assert!(csv.contains(",b_i,"));
    assert!(csv.contains(",min_form_variance,"));
    // Upper-bound rows are present, lower-bound rows are not.
    assert!(csv.contains("bound_upper"));
    assert!(!csv.contains("bound_lower"));
}

#[test]
fn critical_batch_rows_scale_with_the_budget_law() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let config = write_config(
        dir.path(),
        "cb.cfg",
        "experiment = cb\nspectrum = power_law:2\ndisplacement = source:1\nd = 10\n\
         delta = 0.2\nn = 100\nbatch = [1, 2, 4]\nscheme = ema:0.999\nbudget = 1e6\n",
    );
    run_ok(&["critical-batch", "--config", &config, "--out", out.to_str().unwrap()]);
    let csv = String::from_utf8(read(&out, "cb_critical_batch.csv")).unwrap();
    let critical: Vec<f64> = csv
        .lines()
        .filter(|l| l.contains(",critical_batch,"))
        .map(|l| l.split(',').nth(4).unwrap().parse().unwrap())
        .collect();
    assert_eq!(critical.len(), 3);
    // a=2, b=1: B* = M·(1−α); independent of the batch grid.
    for value in critical {
        assert!((value - 1000.0).abs() < 1e-9, "B* = {value}");
    }
    // θ terms halve when B doubles (explicit 1/B scaling).
    let theta1: Vec<f64> = csv
        .lines()
        .filter(|l| l.contains(",theta_term1,"))
        .map(|l| l.split(',').nth(4).unwrap().parse().unwrap())
        .collect();
    assert_eq!(theta1.len(), 3);
    assert_eq!(theta1[1], theta1[0] / 2.0);
    assert_eq!(theta1[2], theta1[0] / 4.0);
}

#[test]
fn verify_subcommand_passes_on_a_fresh_checkout() {
    let output = run_ok(&["verify", "--jobs", "2"]);
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("OK: 10 of 10 checks passed"), "stdout: {stdout}");
    assert_eq!(stdout.matches("[PASS]").count(), 10);
}
