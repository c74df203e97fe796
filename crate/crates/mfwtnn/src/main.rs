//! Command-line front end: noise simulation, restoration, quality metrics,
//! and a per-iteration timing sweep.
//!
//! Exit codes: 0 success, 1 runtime or data error, 2 bad usage or config,
//! 3 the solver stopped at the iteration cap without meeting the tolerance.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{ArgGroup, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mfwtnn::error::Error;
use mfwtnn::io;
use mfwtnn::metrics;
use mfwtnn::noise;
use mfwtnn::solver;
use mfwtnn::tensor3::Cube;

#[derive(Parser)]
#[command(name = "mfwtnn", version, about = "Mixed-noise restoration of data cubes")]
struct Cli {
    /// Worker threads (default: all cores; MFWTNN_THREADS also works)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Corrupt a clean cube with a preset case or a noise config
    #[command(group(ArgGroup::new("recipe").required(true).args(["case", "noise"])))]
    Simulate {
        /// Clean input cube
        #[arg(long)]
        clean: PathBuf,
        /// Preset degradation case, 1..=8
        #[arg(long)]
        case: Option<u8>,
        /// Noise config file (alternative to --case)
        #[arg(long)]
        noise: Option<PathBuf>,
        /// Seed override (beats the config file; default 0)
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
        /// Replace existing outputs
        #[arg(long)]
        force: bool,
        /// Min-max map the clean cube to [0, 1] first
        #[arg(long)]
        normalize: bool,
    },
    /// Split a noisy cube into estimate, sparse, and dense parts
    Denoise {
        /// Noisy input cube
        #[arg(long)]
        noisy: PathBuf,
        /// Solver config file (defaults when omitted)
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory
        #[arg(long)]
        out: PathBuf,
        /// Replace existing outputs
        #[arg(long)]
        force: bool,
        /// Min-max map the input to [0, 1] first
        #[arg(long)]
        normalize: bool,
    },
    /// Score an estimate against a reference
    Metrics {
        /// Reference cube
        #[arg(long)]
        reference: PathBuf,
        /// Estimate cube
        #[arg(long)]
        estimate: PathBuf,
        /// Directory for metrics.csv and bands.csv (print-only when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Replace existing outputs
        #[arg(long)]
        force: bool,
    },
    /// Time single solver sweeps over a size ladder
    Bench {
        /// Cube edge lengths, comma separated
        #[arg(long, default_value = "16,32,64")]
        sizes: String,
        /// Timed sweeps per size
        #[arg(long, default_value_t = 3)]
        repeats: usize,
        /// Solver config file (defaults when omitted)
        #[arg(long)]
        config: Option<PathBuf>,
        /// Seed for the synthetic input
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory for bench.csv (print-only when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Replace existing outputs
        #[arg(long)]
        force: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = cli.threads.or_else(|| {
        std::env::var("MFWTNN_THREADS").ok().and_then(|v| v.parse().ok())
    });
    if let Some(n) = threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn load_input(path: &Path, normalize: bool) -> mfwtnn::Result<Cube> {
    let cube = io::load_cube(path)?;
    Ok(if normalize { io::normalize(&cube) } else { cube })
}

fn read_config(path: &Option<PathBuf>) -> mfwtnn::Result<solver::SolverConfig> {
    match path {
        None => Ok(solver::SolverConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(Error::io(p))?;
            io::parse_solver_config(&text)
        }
    }
}

fn run(command: Command) -> mfwtnn::Result<ExitCode> {
    match command {
        Command::Simulate {
            clean,
            case,
            noise: noise_path,
            seed,
            out,
            force,
            normalize,
        } => {
            let x = load_input(&clean, normalize)?;
            let mut spec = match (case, &noise_path) {
                (Some(c), None) => noise::case_spec(c, 0, x.dims().2)?,
                (None, Some(p)) => {
                    let text = std::fs::read_to_string(p).map_err(Error::io(p))?;
                    io::parse_noise_spec(&text)?
                }
                _ => unreachable!("clap enforces exactly one recipe source"),
            };
            if let Some(s) = seed {
                spec.seed = s;
            }
            let started = Instant::now();
            let noisy = spec.apply(&x)?;
            let seconds = started.elapsed().as_secs_f64();
            io::save_cube(&noisy, &io::out_path(&out, "noisy.cube")?, io::Scalar::F64, force)?;
            io::save_text(&io::out_path(&out, "noise.cfg")?, &io::noise_spec_text(&spec), force)?;
            let manifest = format!(
                "command = simulate\nclean = {}\nrecipe = {}\nseed = {}\nwall_seconds = {seconds}\noutputs = noisy.cube, noise.cfg\n",
                clean.display(),
                match (case, &noise_path) {
                    (Some(c), _) => format!("case {c}"),
                    (_, Some(p)) => p.display().to_string(),
                    _ => unreachable!(),
                },
                spec.seed,
            );
            io::save_text(&io::out_path(&out, "manifest.txt")?, &manifest, force)?;
            println!("wrote noisy.cube, noise.cfg, manifest.txt to {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Denoise {
            noisy,
            config: config_path,
            out,
            force,
            normalize,
        } => {
            let y = load_input(&noisy, normalize)?;
            let config = read_config(&config_path)?;
            let started = Instant::now();
            let result = solver::denoise(&y, &config)?;
            let seconds = started.elapsed().as_secs_f64();
            io::save_cube(&result.x, &io::out_path(&out, "x_hat.cube")?, io::Scalar::F64, force)?;
            io::save_cube(&result.s, &io::out_path(&out, "s_hat.cube")?, io::Scalar::F64, force)?;
            io::save_cube(&result.n, &io::out_path(&out, "n_hat.cube")?, io::Scalar::F64, force)?;
            io::write_history_csv(&io::out_path(&out, "history.csv")?, &result.history, force)?;
            let resolved = (config.resolve_lambda(y.dims())?, config.resolve_tau()?);
            io::save_text(
                &io::out_path(&out, "config.cfg")?,
                &io::solver_config_text(&config, Some(resolved)),
                force,
            )?;
            let final_change = result.history.last().map_or(f64::NAN, |r| r.rel_change);
            let manifest = format!(
                "command = denoise\nnoisy = {}\nconfig = {}\niterations = {}\nconverged = {}\nfinal_rel_change = {final_change}\nwall_seconds = {seconds}\noutputs = x_hat.cube, s_hat.cube, n_hat.cube, history.csv, config.cfg\n",
                noisy.display(),
                config_path.as_ref().map_or("default".to_string(), |p| p.display().to_string()),
                result.iterations,
                result.converged,
            );
            io::save_text(&io::out_path(&out, "manifest.txt")?, &manifest, force)?;
            println!(
                "iterations = {}\nconverged = {}\nfinal_rel_change = {final_change}\nwall_seconds = {seconds}",
                result.iterations, result.converged
            );
            println!("wrote x_hat.cube, s_hat.cube, n_hat.cube, history.csv, config.cfg, manifest.txt to {}", out.display());
            Ok(if result.converged {
                ExitCode::SUCCESS
            } else {
                eprintln!(
                    "stopped at the iteration cap ({}) above tolerance",
                    result.iterations
                );
                ExitCode::from(3)
            })
        }
        Command::Metrics {
            reference,
            estimate,
            out,
            force,
        } => {
            let r = io::load_cube(&reference)?;
            let e = io::load_cube(&estimate)?;
            let report = metrics::evaluate(&r, &e)?;
            println!("mpsnr = {}", report.mpsnr);
            println!("mssim = {}", report.mssim);
            println!("ergas = {}", report.ergas);
            println!("msam = {}", report.msam);
            if let Some(dir) = out {
                io::write_metrics_csv(&io::out_path(&dir, "metrics.csv")?, &report, force)?;
                io::write_band_csv(&io::out_path(&dir, "bands.csv")?, &report, force)?;
                println!("wrote metrics.csv, bands.csv to {}", dir.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Bench {
            sizes,
            repeats,
            config: config_path,
            seed,
            out,
            force,
        } => {
            let config = read_config(&config_path)?;
            if repeats == 0 {
                return Err(Error::Config("repeats must be at least 1".into()));
            }
            let sizes: Vec<usize> = sizes
                .split(',')
                .map(|s| {
                    s.trim().parse::<usize>().ok().filter(|&n| n >= 2).ok_or_else(|| {
                        Error::Config(format!("sizes: expected integers >= 2, got {s:?}"))
                    })
                })
                .collect::<mfwtnn::Result<_>>()?;
            let mut csv = String::from("dims,repeat,seconds\n");
            println!("dims,repeat,seconds");
            for &n in &sizes {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let values: Vec<f64> = (0..n * n * n).map(|_| rng.gen()).collect();
                let y = Cube::from_vec((n, n, n), values)?;
                for rep in 1..=repeats {
                    // fresh state per repeat so every timing covers the same
                    // first-sweep work
                    let mut state = solver::init_state(&y, &config)?;
                    let started = Instant::now();
                    solver::iterate(&mut state, &config, &y)?;
                    let seconds = started.elapsed().as_secs_f64();
                    let row = format!("{n}x{n}x{n},{rep},{seconds}");
                    println!("{row}");
                    csv.push_str(&row);
                    csv.push('\n');
                }
            }
            if let Some(dir) = out {
                io::save_text(&io::out_path(&dir, "bench.csv")?, &csv, force)?;
                println!("wrote bench.csv to {}", dir.display());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
