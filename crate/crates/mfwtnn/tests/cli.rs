//! End-to-end checks of the installed binary: artifact layout, exit codes,
//! determinism, and the printed contracts scripts rely on.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mfwtnn::io::{self, Scalar};
use mfwtnn::tensor3::Cube;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mfwtnn"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

/// Smooth deterministic 16x16x8 fixture written as a cube file.
fn write_clean(dir: &Path) -> PathBuf {
    let (n1, n2, n3) = (16, 16, 8);
    let mut values = Vec::with_capacity(n1 * n2 * n3);
    for i in 0..n1 {
        for j in 0..n2 {
            for k in 0..n3 {
                let v = 0.5
                    + 0.3 * ((i as f64) * 0.4).sin() * ((j as f64) * 0.3).cos()
                    + 0.1 * ((k as f64) * 0.7).sin();
                values.push(v.clamp(0.0, 1.0));
            }
        }
    }
    let cube = Cube::from_vec((n1, n2, n3), values).expect("fixture");
    let path = dir.join("clean.cube");
    io::save_cube(&cube, &path, Scalar::F64, false).expect("fixture written");
    path
}

fn simulate_into(clean: &Path, out: &Path, seed: &str) -> Output {
    run(&[
        "simulate",
        "--clean",
        clean.to_str().unwrap(),
        "--case",
        "1",
        "--seed",
        seed,
        "--out",
        out.to_str().unwrap(),
    ])
}

#[test]
fn simulate_is_deterministic_for_a_fixed_seed() {
    let tmp = TempDir::new().unwrap();
    let clean = write_clean(tmp.path());
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(code(&simulate_into(&clean, &a, "5")), 0);
    assert_eq!(code(&simulate_into(&clean, &b, "5")), 0);
    assert_eq!(
        std::fs::read(a.join("noisy.cube")).unwrap(),
        std::fs::read(b.join("noisy.cube")).unwrap(),
        "same seed must produce identical bytes"
    );
    assert_eq!(
        std::fs::read(a.join("noise.cfg")).unwrap(),
        std::fs::read(b.join("noise.cfg")).unwrap()
    );
    let c = tmp.path().join("c");
    assert_eq!(code(&simulate_into(&clean, &c, "6")), 0);
    assert_ne!(
        std::fs::read(a.join("noisy.cube")).unwrap(),
        std::fs::read(c.join("noisy.cube")).unwrap(),
        "a different seed must change the noise"
    );
    let manifest = std::fs::read_to_string(a.join("manifest.txt")).unwrap();
    assert!(manifest.contains("recipe = case 1"));
    assert!(manifest.contains("seed = 5"));
}

#[test]
fn simulate_accepts_a_noise_config_file() {
    let tmp = TempDir::new().unwrap();
    let clean = write_clean(tmp.path());
    let cfg = tmp.path().join("noise.cfg");
    std::fs::write(&cfg, "gaussian = 0.05\nimpulse = none\nseed = 3\n").unwrap();
    let out = run(&[
        "simulate",
        "--clean",
        clean.to_str().unwrap(),
        "--noise",
        cfg.to_str().unwrap(),
        "--out",
        tmp.path().join("sim").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(tmp.path().join("sim/noisy.cube").is_file());
}

#[test]
fn simulate_requires_exactly_one_recipe() {
    let tmp = TempDir::new().unwrap();
    let clean = write_clean(tmp.path());
    let out = run(&[
        "simulate",
        "--clean",
        clean.to_str().unwrap(),
        "--out",
        tmp.path().join("x").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2, "missing recipe is a usage error");
}

fn denoise_into(noisy: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "denoise",
        "--noisy",
        noisy.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    run(&args)
}

#[test]
fn denoise_writes_artifacts_and_reports_progress() {
    let tmp = TempDir::new().unwrap();
    let clean = write_clean(tmp.path());
    let sim = tmp.path().join("sim");
    assert_eq!(code(&simulate_into(&clean, &sim, "5")), 0);
    let den = tmp.path().join("den");
    let out = denoise_into(&sim.join("noisy.cube"), &den, &["--threads", "2"]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    for name in ["x_hat.cube", "s_hat.cube", "n_hat.cube", "history.csv", "config.cfg", "manifest.txt"] {
        assert!(den.join(name).is_file(), "{name} missing");
    }
    let text = stdout_of(&out);
    let iterations: usize = text
        .lines()
        .find_map(|l| l.strip_prefix("iterations = "))
        .expect("iterations line")
        .parse()
        .expect("iteration count");
    assert!(text.lines().any(|l| l == "converged = true"));
    let history = std::fs::read_to_string(den.join("history.csv")).unwrap();
    let mut rows = history.lines();
    assert_eq!(rows.next(), Some("iter,rel_change,residual,objective"));
    assert_eq!(rows.count(), iterations, "one row per sweep");
    // the emitted config is loadable and pins the resolved values as comments
    let cfg = std::fs::read_to_string(den.join("config.cfg")).unwrap();
    assert!(cfg.lines().any(|l| l.starts_with("# resolved")));
}

#[test]
fn denoise_cap_stop_exits_three() {
    let tmp = TempDir::new().unwrap();
    let clean = write_clean(tmp.path());
    let sim = tmp.path().join("sim");
    assert_eq!(code(&simulate_into(&clean, &sim, "5")), 0);
    let cfg = tmp.path().join("tight.cfg");
    std::fs::write(&cfg, "max_iters = 2\ntol = 1e-12\n").unwrap();
    let out = denoise_into(
        &sim.join("noisy.cube"),
        &tmp.path().join("den"),
        &["--config", cfg.to_str().unwrap()],
    );
    assert_eq!(code(&out), 3, "cap stop must be distinguishable");
    assert!(stdout_of(&out).lines().any(|l| l == "converged = false"));
}

#[test]
fn unknown_config_key_exits_two() {
    let tmp = TempDir::new().unwrap();
    let clean = write_clean(tmp.path());
    let sim = tmp.path().join("sim");
    assert_eq!(code(&simulate_into(&clean, &sim, "5")), 0);
    let cfg = tmp.path().join("bad.cfg");
    std::fs::write(&cfg, "bogus = 1\n").unwrap();
    let out = denoise_into(
        &sim.join("noisy.cube"),
        &tmp.path().join("den"),
        &["--config", cfg.to_str().unwrap()],
    );
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));
}

#[test]
fn outputs_are_never_replaced_without_force() {
    let tmp = TempDir::new().unwrap();
    let clean = write_clean(tmp.path());
    let sim = tmp.path().join("sim");
    assert_eq!(code(&simulate_into(&clean, &sim, "5")), 0);
    let again = simulate_into(&clean, &sim, "5");
    assert_eq!(code(&again), 1, "silent overwrite is forbidden");
    assert!(String::from_utf8_lossy(&again.stderr).contains("refusing to overwrite"));
    let forced = run(&[
        "simulate",
        "--clean",
        clean.to_str().unwrap(),
        "--case",
        "1",
        "--seed",
        "5",
        "--out",
        sim.to_str().unwrap(),
        "--force",
    ]);
    assert_eq!(code(&forced), 0);
}

#[test]
fn metrics_prints_all_four_scores() {
    let tmp = TempDir::new().unwrap();
    let clean = write_clean(tmp.path());
    let sim = tmp.path().join("sim");
    assert_eq!(code(&simulate_into(&clean, &sim, "5")), 0);
    let out = run(&[
        "metrics",
        "--reference",
        clean.to_str().unwrap(),
        "--estimate",
        sim.join("noisy.cube").to_str().unwrap(),
        "--out",
        tmp.path().join("scores").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = stdout_of(&out);
    for name in ["mpsnr", "mssim", "ergas", "msam"] {
        let value = text
            .lines()
            .find_map(|l| l.strip_prefix(&format!("{name} = ")))
            .unwrap_or_else(|| panic!("{name} line missing"));
        assert!(value.parse::<f64>().is_ok(), "{name} not a number: {value}");
    }
    assert!(tmp.path().join("scores/metrics.csv").is_file());
    assert!(tmp.path().join("scores/bands.csv").is_file());
}

#[test]
fn bench_emits_one_row_per_size_and_repeat() {
    let tmp = TempDir::new().unwrap();
    let out = run(&[
        "bench",
        "--sizes",
        "8",
        "--repeats",
        "2",
        "--seed",
        "1",
        "--out",
        tmp.path().join("bench").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = stdout_of(&out);
    assert!(text.lines().any(|l| l == "dims,repeat,seconds"));
    for rep in 1..=2 {
        assert!(
            text.lines().any(|l| l.starts_with(&format!("8x8x8,{rep},"))),
            "row for repeat {rep} missing"
        );
    }
    let csv = std::fs::read_to_string(tmp.path().join("bench/bench.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3, "header plus two rows");
}
