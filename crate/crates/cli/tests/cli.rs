use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use pcsmri::container::{read_image, read_mask, read_sens};

fn run(args: &[&str], expect: i32) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_pcsmri")).args(args).output().unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout).into_owned();
    assert_eq!(
        out.status.code(),
        Some(expect),
        "pcsmri {args:?}\nstdout: {stdout}\nstderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    stdout
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn simulate(dir: &Path, name: &str, extra: &[&str]) -> PathBuf {
    let out = dir.join(name);
    let mut args = vec!["simulate", "--out", p(&out)];
    args.extend_from_slice(extra);
    run(&args, 0);
    out
}

fn write(path: &Path, text: &str) -> PathBuf {
    fs::write(path, text).unwrap();
    path.to_path_buf()
}

fn max_abs_diff_on(a: &pcsmri::ComplexImage, b: &pcsmri::ComplexImage, region: &[bool]) -> f64 {
    a.data()
        .iter()
        .zip(b.data())
        .zip(region)
        .filter(|(_, &r)| r)
        .map(|((x, y), _)| (x - y).norm())
        .fold(0.0, f64::max)
}

#[test]
fn brain_protocol_mask() {
    let dir = tempfile::tempdir().unwrap();
    let stem = dir.path().join("m");
    run(
        &[
            "mask",
            "--width",
            "320",
            "--r",
            "4",
            "--acs",
            "24",
            "--kind",
            "equispaced",
            "--seed",
            "7",
            "--out",
            p(&stem),
        ],
        0,
    );
    let mask = read_mask(&stem.with_extension("bin")).unwrap();
    assert!(mask.selected_count() >= 80);
    assert!(mask.covers(160 - 12, 24));
    assert!(dir.path().join("m.manifest").exists());
}

#[test]
fn phantom_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run(
        &["phantom", "--kind", "shepp_logan", "--size", "128", "--out", p(&a)],
        0,
    );
    run(
        &["phantom", "--kind", "shepp_logan", "--size", "128", "--out", p(&b)],
        0,
    );
    assert_eq!(
        fs::read(a.with_extension("bin")).unwrap(),
        fs::read(b.with_extension("bin")).unwrap()
    );
    assert_eq!(
        fs::read(a.with_extension("hdr")).unwrap(),
        fs::read(b.with_extension("hdr")).unwrap()
    );
}

#[test]
fn knee_preset_uses_random_r6() {
    let dir = tempfile::tempdir().unwrap();
    let case = simulate(dir.path(), "knee", &["--preset", "knee", "--size", "96"]);
    let mask = read_mask(&case.join("mask.bin")).unwrap();
    assert_eq!(mask.kind(), pcsmri::MaskKind::Random);
    assert_eq!(mask.acceleration(), 6.0);
    assert_eq!(mask.selected_count(), 16);
    let manifest = fs::read_to_string(case.join("manifest.txt")).unwrap();
    assert!(manifest.contains("preset = knee"));
}

#[test]
fn sense_estimation_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let case = simulate(dir.path(), "c", &["--size", "64", "--r", "2", "--acs", "16"]);
    let out = dir.path().join("est");
    run(
        &[
            "sense",
            "--kspace",
            p(&case.join("kspace")),
            "--mask",
            p(&case.join("mask")),
            "--out",
            p(&out),
        ],
        0,
    );
    let est = read_sens(&out.with_extension("bin")).unwrap();
    assert_eq!(est.num_coils(), 4);
    // Unsampled calibration band.
    run(
        &[
            "sense",
            "--kspace",
            p(&case.join("kspace")),
            "--mask",
            p(&case.join("mask")),
            "--acs",
            "40",
            "--out",
            p(&out),
        ],
        2,
    );
}

#[test]
fn fully_sampled_tikhonov_recovers_ground_truth() {
    let dir = tempfile::tempdir().unwrap();
    let case = simulate(dir.path(), "full", &["--size", "64", "--r", "1"]);
    let cfg = write(
        &dir.path().join("cfg.txt"),
        "prior = tikhonov\nlambda = 0\niterations = 2\n",
    );
    run(&["recon", p(&case), "--config", p(&cfg)], 0);
    let rec = read_image(&case.join("recon/tikhonov/recon.bin")).unwrap();
    let gt = read_image(&case.join("gt.bin")).unwrap();
    let sens = read_sens(&case.join("sens.bin")).unwrap();
    assert!(max_abs_diff_on(&rec, &gt, sens.support()) < 1e-6);
}

fn log_gain(log: &str) -> f64 {
    let line = log.lines().find(|l| l.starts_with("# PSNR")).expect("PSNR line");
    line.rsplit("gain = ").next().unwrap().trim().parse().unwrap()
}

#[test]
fn brain_tv_gain_is_logged() {
    let dir = tempfile::tempdir().unwrap();
    let case = simulate(
        dir.path(),
        "brain",
        &["--preset", "brain", "--size", "128", "--seed", "1"],
    );
    run(&["recon", p(&case)], 0);
    let log = fs::read_to_string(case.join("recon/tv/objective.log")).unwrap();
    assert_eq!(log.lines().filter(|l| !l.starts_with('#')).count(), 4);
    let gain = log_gain(&log);
    // Frozen from the first run: default TV config, 3 iterations.
    assert!((gain - 0.7875).abs() <= 0.1, "gain {gain}");
}

#[test]
fn snapshots_and_estimated_maps() {
    let dir = tempfile::tempdir().unwrap();
    let case = simulate(dir.path(), "c", &["--size", "48", "--r", "3", "--acs", "8"]);
    run(
        &[
            "recon",
            p(&case),
            "--prior",
            "haar",
            "--estimate-sens",
            "--snapshots",
            "--name",
            "h",
        ],
        0,
    );
    let out = case.join("recon/h");
    for f in [
        "recon.bin",
        "sens.bin",
        "objective.log",
        "config.txt",
        "manifest.txt",
        "snapshots/x_000.bin",
        "snapshots/z_003.bin",
    ] {
        assert!(out.join(f).exists(), "{f}");
    }
    assert!(fs::read_to_string(out.join("config.txt"))
        .unwrap()
        .contains("prior = haar"));
}

const IDENTITY_STUB: &str = "cp \"$1\" \"$2\"\ncp \"${1%.bin}.hdr\" \"${2%.bin}.hdr\"\n";

#[test]
fn identity_external_prior_matches_tikhonov_at_zero_lambda() {
    let dir = tempfile::tempdir().unwrap();
    let case = simulate(
        dir.path(),
        "c",
        &["--size", "48", "--r", "4", "--acs", "8", "--noise", "0.01"],
    );
    let stub = write(&dir.path().join("identity.sh"), IDENTITY_STUB);
    let cfg = write(&dir.path().join("cfg.txt"), "lambda = 0\niterations = 3\n");
    run(
        &[
            "recon",
            p(&case),
            "--config",
            p(&cfg),
            "--prior",
            "tikhonov",
            "--dtype",
            "cf64",
        ],
        0,
    );
    let cmd = format!("sh {}", p(&stub));
    run(
        &["recon", p(&case), "--config", p(&cfg), "--cmd", &cmd, "--dtype", "cf64"],
        0,
    );
    let a = read_image(&case.join("recon/tikhonov/recon.bin")).unwrap();
    let b = read_image(&case.join("recon/external/recon.bin")).unwrap();
    let diff = a.sub(&b).unwrap().l2_norm() / a.l2_norm();
    assert!(diff <= 1e-10, "{diff}");
    let log = fs::read_to_string(case.join("recon/external/objective.log")).unwrap();
    assert!(log.contains("prior term omitted"));
}

#[test]
fn failing_external_prior_exits_5() {
    let dir = tempfile::tempdir().unwrap();
    let case = simulate(dir.path(), "c", &["--size", "32", "--r", "2", "--acs", "4"]);
    let stub = write(&dir.path().join("fail.sh"), "exit 1\n");
    run(&["recon", p(&case), "--cmd", &format!("sh {}", p(&stub))], 5);
    let lazy = write(&dir.path().join("lazy.sh"), "true\n");
    run(&["recon", p(&case), "--cmd", &format!("sh {}", p(&lazy))], 5);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let case = simulate(dir.path(), "c", &["--size", "32", "--r", "2", "--acs", "4"]);
    let bad = write(&dir.path().join("bad.txt"), "alpha = banana\n");
    run(&["recon", p(&case), "--config", p(&bad)], 2);
    run(&["recon", p(&case), "--prior", "nonsense"], 2);
    run(&["recon", p(&dir.path().join("missing"))], 3);
    run(&["recon", p(&case), "--config", p(&dir.path().join("nocfg.txt"))], 3);
    let blowup = write(
        &dir.path().join("blowup.txt"),
        "prior = tikhonov\nalpha = 1e308\nbeta = 1e308\n",
    );
    run(&["recon", p(&case), "--config", p(&blowup)], 4);
    fs::write(case.join("kspace.bin"), b"short").unwrap();
    run(&["recon", p(&case)], 3);
    run(
        &[
            "mask",
            "--width",
            "64",
            "--r",
            "4",
            "--acs",
            "40",
            "--out",
            p(&dir.path().join("m")),
        ],
        2,
    );
}

#[test]
fn eval_single_and_batch() {
    let dir = tempfile::tempdir().unwrap();
    let case = simulate(dir.path(), "c", &["--size", "32"]);
    let gt = case.join("gt");
    let csv = run(
        &[
            "eval",
            "--recon",
            p(&gt),
            "--gt",
            p(&gt),
            "--support",
            p(&case.join("sens")),
        ],
        0,
    );
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "case,method,PSNR,SSIM,RMSE,NMSE");
    let fields: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(&fields[..4], &["case", "recon", "99.9900", "1.000000"]);
    assert_eq!(fields[4].parse::<f64>().unwrap(), 0.0);

    let mut dirs = Vec::new();
    for preset in ["knee", "cardiac", "brain"] {
        dirs.push(simulate(dir.path(), preset, &["--preset", preset, "--size", "64"]));
    }
    let mut args = vec!["eval", "--batch"];
    args.extend(dirs.iter().map(|d| p(d)));
    let csv = run(&args, 0);
    let cases: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(cases, ["brain", "cardiac", "knee"]);
}

fn sweep_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

#[test]
fn one_point_sweep_equals_recon_and_eval() {
    let dir = tempfile::tempdir().unwrap();
    let case = simulate(
        dir.path(),
        "c",
        &["--size", "48", "--r", "4", "--acs", "8", "--noise", "0.01"],
    );
    let grid = write(
        &dir.path().join("grid.txt"),
        "prior = tv\nlambda = 0.02\niterations = 4\n",
    );
    let csv = run(&["sweep", p(&case), "--grid", p(&grid)], 0);
    let rows = sweep_rows(&csv);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].last().unwrap(), "*");

    let cfg = write(
        &dir.path().join("cfg.txt"),
        "prior = tv\nlambda = 0.02\niterations = 4\n",
    );
    run(&["recon", p(&case), "--config", p(&cfg), "--name", "single"], 0);
    let report = run(&["eval", "--batch", p(&case)], 0);
    let single = report.lines().find(|l| l.starts_with("c,single,")).unwrap();
    let single: Vec<&str> = single.split(',').collect();
    // run,prior,lambda,iterations,status,PSNR,SSIM,RMSE,NMSE,best
    assert_eq!(&rows[0][5..9], &single[2..6]);
    assert_eq!(
        fs::read(case.join("sweep/run_000/recon.bin")).unwrap(),
        fs::read(case.join("recon/single/recon.bin")).unwrap()
    );
}

#[test]
fn two_by_two_sweep_and_parallel_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let case = simulate(
        dir.path(),
        "c",
        &["--size", "32", "--r", "2", "--acs", "4", "--noise", "0.01"],
    );
    let grid = write(
        &dir.path().join("grid.txt"),
        "alpha = 0.5, 1\nlambda = 0.01, 0.05\nprior = soft_threshold\n",
    );
    let serial = run(
        &[
            "sweep",
            p(&case),
            "--grid",
            p(&grid),
            "--out",
            p(&dir.path().join("s1")),
        ],
        0,
    );
    let parallel = run(
        &[
            "sweep",
            p(&case),
            "--grid",
            p(&grid),
            "--jobs",
            "3",
            "--out",
            p(&dir.path().join("s3")),
        ],
        0,
    );
    assert_eq!(sweep_rows(&serial).len(), 4);
    assert_eq!(serial, parallel);
    assert_eq!(serial.lines().filter(|l| l.ends_with(",*")).count(), 1);
}

#[test]
fn sweep_records_failures_and_continues() {
    let dir = tempfile::tempdir().unwrap();
    let case = simulate(dir.path(), "c", &["--size", "32", "--r", "2", "--acs", "4"]);
    let grid = write(
        &dir.path().join("grid.txt"),
        "prior = tikhonov\nalpha = 1, 1e308, -1\nbeta = 1e308\n",
    );
    let csv = run(&["sweep", p(&case), "--grid", p(&grid)], 0);
    let rows = sweep_rows(&csv);
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0][4], "ok");
    assert!(rows[1][4].trim_start_matches('"').starts_with("failed: exit 4"));
    assert!(rows[2][4].trim_start_matches('"').starts_with("failed: exit 2"));
    assert_eq!(rows[0].last().unwrap(), "*");
}

#[test]
fn knee_lambda_sweep_has_interior_optimum() {
    let dir = tempfile::tempdir().unwrap();
    let case = simulate(
        dir.path(),
        "knee",
        &["--preset", "knee", "--size", "128", "--seed", "1", "--noise", "0.1"],
    );
    let grid = write(
        &dir.path().join("grid.txt"),
        "prior = tv\niterations = 30\nlambda = 0, 0.005, 0.01, 0.02, 0.05, 0.1\n",
    );
    let csv = run(&["sweep", p(&case), "--grid", p(&grid), "--jobs", "4"], 0);
    let rows = sweep_rows(&csv);
    let best = rows.iter().position(|r| r.last().unwrap() == "*").unwrap();
    assert!(best != 0 && best != rows.len() - 1, "best row {best}");
    assert_eq!(rows[best][3], "0.01");
    let psnr: f64 = rows[best][5].parse().unwrap();
    assert!((psnr - 11.0947).abs() <= 0.1, "{psnr}");
}

#[test]
fn pipeline_rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for name in ["a", "b"] {
        let case = simulate(
            dir.path(),
            name,
            &[
                "--preset", "cardiac", "--size", "64", "--seed", "5", "--noise", "0.02", "--name", "x",
            ],
        );
        run(
            &["recon", p(&case), "--prior", "tv", "--estimate-sens", "--snapshots"],
            0,
        );
        files.push(case);
    }
    let rel = [
        "gt.bin",
        "gt.hdr",
        "sens.bin",
        "sens.hdr",
        "mask.bin",
        "mask.hdr",
        "kspace.bin",
        "kspace.hdr",
        "manifest.txt",
        "recon/tv/recon.bin",
        "recon/tv/recon.hdr",
        "recon/tv/sens.bin",
        "recon/tv/objective.log",
        "recon/tv/snapshots/x_002.bin",
    ];
    for f in rel {
        assert_eq!(
            fs::read(files[0].join(f)).unwrap(),
            fs::read(files[1].join(f)).unwrap(),
            "{f}"
        );
    }
}
