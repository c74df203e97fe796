//! Cube container format, flat key-value configs, and CSV writers.
//!
//! The cube container is a six-line ASCII header followed by raw
//! little-endian scalars in tube layout (band index fastest):
//!
//! ```text
//! cube3 1
//! dims 145 145 80
//! scalar f64
//! endian little
//! layout tube
//! data
//! <n1*n2*n3 scalars>
//! ```
//!
//! The header is strict: exact line order, one space between tokens, and the
//! payload length must match the declared dims. Configs are `key = value`
//! lines with `#` comments; unknown or repeated keys are errors so typos
//! cannot silently fall back to defaults.

use std::collections::HashSet;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::metrics::MetricsReport;
use crate::noise::{Level, NoiseSpec, StripeSpec};
use crate::solver::{IterRecord, Model, Setting, SolverConfig};
use crate::tensor3::Cube;
use crate::weights::ModalWeights;

/// Scalar width of a cube file payload.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scalar {
    F32,
    F64,
}

impl Scalar {
    fn tag(self) -> &'static str {
        match self {
            Scalar::F32 => "f32",
            Scalar::F64 => "f64",
        }
    }

    fn parse(s: &str) -> Option<Scalar> {
        match s {
            "f32" => Some(Scalar::F32),
            "f64" => Some(Scalar::F64),
            _ => None,
        }
    }

    fn width(self) -> usize {
        match self {
            Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }
}

fn format_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

fn read_header_line(
    reader: &mut impl BufRead,
    path: &Path,
    what: &str,
) -> Result<String> {
    let mut line = String::new();
    let n = reader
        .read_line(&mut line)
        .map_err(|e| format_err(path, format!("reading {what} line: {e}")))?;
    if n == 0 {
        return Err(format_err(path, format!("missing {what} line")));
    }
    Ok(line.trim_end_matches('\n').trim_end_matches('\r').to_string())
}

fn expect_line(reader: &mut impl BufRead, path: &Path, expected: &str) -> Result<()> {
    let line = read_header_line(reader, path, expected)?;
    if line != expected {
        return Err(format_err(
            path,
            format!("expected header line {expected:?}, got {line:?}"),
        ));
    }
    Ok(())
}

/// Reads a cube file. The payload must carry exactly the declared number of
/// finite scalars.
pub fn load_cube(path: &Path) -> Result<Cube> {
    let file = fs::File::open(path).map_err(Error::io(path))?;
    let mut reader = BufReader::new(file);
    expect_line(&mut reader, path, "cube3 1")?;
    let dims_line = read_header_line(&mut reader, path, "dims")?;
    let dims = parse_dims(&dims_line)
        .ok_or_else(|| format_err(path, format!("bad dims line {dims_line:?}")))?;
    let scalar_line = read_header_line(&mut reader, path, "scalar")?;
    let scalar = scalar_line
        .strip_prefix("scalar ")
        .and_then(Scalar::parse)
        .ok_or_else(|| format_err(path, format!("bad scalar line {scalar_line:?}")))?;
    expect_line(&mut reader, path, "endian little")?;
    expect_line(&mut reader, path, "layout tube")?;
    expect_line(&mut reader, path, "data")?;

    let count = dims.0 * dims.1 * dims.2;
    let expected = count * scalar.width();
    let mut payload = Vec::with_capacity(expected);
    reader
        .read_to_end(&mut payload)
        .map_err(Error::io(path))?;
    if payload.len() != expected {
        return Err(format_err(
            path,
            format!(
                "payload holds {} bytes, dims {} x {} x {} need {expected}",
                payload.len(),
                dims.0,
                dims.1,
                dims.2
            ),
        ));
    }
    let values: Vec<f64> = match scalar {
        Scalar::F64 => payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect(),
        Scalar::F32 => payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect(),
    };
    Cube::from_vec(dims, values).map_err(|e| format_err(path, e.to_string()))
}

fn parse_dims(line: &str) -> Option<(usize, usize, usize)> {
    let rest = line.strip_prefix("dims ")?;
    let mut it = rest.split(' ');
    let n1 = it.next()?.parse().ok()?;
    let n2 = it.next()?.parse().ok()?;
    let n3 = it.next()?.parse().ok()?;
    if it.next().is_some() {
        return None;
    }
    Some((n1, n2, n3))
}

fn refuse_overwrite(path: &Path, force: bool) -> Result<()> {
    if !force && path.exists() {
        return Err(Error::AlreadyExists(path.to_path_buf()));
    }
    Ok(())
}

/// Writes a cube file. Existing files are only replaced with `force`.
pub fn save_cube(cube: &Cube, path: &Path, scalar: Scalar, force: bool) -> Result<()> {
    refuse_overwrite(path, force)?;
    let (n1, n2, n3) = cube.dims();
    let file = fs::File::create(path).map_err(Error::io(path))?;
    let mut w = BufWriter::new(file);
    let header =
        format!("cube3 1\ndims {n1} {n2} {n3}\nscalar {}\nendian little\nlayout tube\ndata\n", scalar.tag());
    w.write_all(header.as_bytes()).map_err(Error::io(path))?;
    match scalar {
        Scalar::F64 => {
            for v in cube.data.iter() {
                w.write_all(&v.to_le_bytes()).map_err(Error::io(path))?;
            }
        }
        Scalar::F32 => {
            for v in cube.data.iter() {
                w.write_all(&(*v as f32).to_le_bytes()).map_err(Error::io(path))?;
            }
        }
    }
    w.flush().map_err(Error::io(path))
}

/// Min-max map to [0, 1]; a constant cube maps to zeros.
pub fn normalize(cube: &Cube) -> Cube {
    let lo = cube.data.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = cube.data.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out = cube.clone();
    if hi > lo {
        out.data.mapv_inplace(|v| (v - lo) / (hi - lo));
    } else {
        out.data.fill(0.0);
    }
    out
}

/// Writes a text file with the same overwrite rule as cubes.
pub fn save_text(path: &Path, text: &str, force: bool) -> Result<()> {
    refuse_overwrite(path, force)?;
    fs::write(path, text).map_err(Error::io(path))
}

/// Splits `key = value` lines; `#` starts a comment, blank lines are
/// skipped, repeated keys are errors.
pub fn parse_kv(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("line {}: expected `key = value`, got {raw:?}", lineno + 1))
        })?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if key.is_empty() || value.is_empty() {
            return Err(Error::Config(format!(
                "line {}: empty key or value in {raw:?}",
                lineno + 1
            )));
        }
        if !seen.insert(key.clone()) {
            return Err(Error::Config(format!(
                "line {}: key {key:?} given twice",
                lineno + 1
            )));
        }
        out.push((key, value));
    }
    Ok(out)
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: expected a number, got {value:?}")))
}

fn parse_setting(key: &str, value: &str) -> Result<Setting> {
    if value == "auto" {
        return Ok(Setting::Auto);
    }
    Ok(Setting::Fixed(parse_f64(key, value)?))
}

/// Applies one solver key. Shared by the config-file parser and the foreign
/// interface so both accept the identical key set.
pub fn apply_solver_kv(config: &mut SolverConfig, key: &str, value: &str) -> Result<()> {
    match key {
        "model" => config.model = Model::parse(value)?,
        "alpha" => {
            let parts: Vec<&str> = value.split(',').map(str::trim).collect();
            if parts.len() != 3 {
                return Err(Error::Config(format!(
                    "alpha: expected three comma-separated values, got {value:?}"
                )));
            }
            let raw = [
                parse_f64("alpha", parts[0])?,
                parse_f64("alpha", parts[1])?,
                parse_f64("alpha", parts[2])?,
            ];
            config.alpha =
                ModalWeights::normalized(raw).map_err(|e| Error::Config(e.to_string()))?;
        }
        "lambda" => config.lambda = parse_setting(key, value)?,
        "lambda_s" => config.lambda_s = parse_f64(key, value)?,
        "tau" => config.tau = parse_setting(key, value)?,
        "tau_n" => config.tau_n = parse_f64(key, value)?,
        "sigma" => config.sigma = parse_f64(key, value)?,
        "c1" => config.c1 = parse_f64(key, value)?,
        "c2" => config.c2 = parse_f64(key, value)?,
        "eps_log" => config.eps_log = parse_f64(key, value)?,
        "delta" => config.delta = parse_f64(key, value)?,
        "mu0" => config.mu0 = parse_f64(key, value)?,
        "beta0" => config.beta0 = parse_f64(key, value)?,
        "rho" => config.rho = parse_f64(key, value)?,
        "mu_max" => config.mu_max = parse_f64(key, value)?,
        "tol" => config.tol = parse_f64(key, value)?,
        "max_iters" => {
            config.max_iters = value.parse().map_err(|_| {
                Error::Config(format!("max_iters: expected an integer, got {value:?}"))
            })?
        }
        other => {
            return Err(Error::Config(format!("unknown solver key {other:?}")));
        }
    }
    Ok(())
}

/// Parses a solver config over the defaults and validates the result.
pub fn parse_solver_config(text: &str) -> Result<SolverConfig> {
    let mut config = SolverConfig::default();
    for (key, value) in parse_kv(text)? {
        apply_solver_kv(&mut config, &key, &value)?;
    }
    config.validate()?;
    Ok(config)
}

/// Config-file snapshot of a solver setup. Parsing the text reproduces the
/// config exactly; resolved automatic values ride along as comments.
pub fn solver_config_text(config: &SolverConfig, resolved: Option<(f64, f64)>) -> String {
    let mut s = String::new();
    s.push_str(&format!("model = {}\n", config.model.name()));
    let a = config.alpha.alpha();
    s.push_str(&format!("alpha = {},{},{}\n", a[0], a[1], a[2]));
    match config.lambda {
        Setting::Auto => s.push_str("lambda = auto\n"),
        Setting::Fixed(v) => s.push_str(&format!("lambda = {v}\n")),
    }
    s.push_str(&format!("lambda_s = {}\n", config.lambda_s));
    match config.tau {
        Setting::Auto => s.push_str("tau = auto\n"),
        Setting::Fixed(v) => s.push_str(&format!("tau = {v}\n")),
    }
    s.push_str(&format!("tau_n = {}\n", config.tau_n));
    s.push_str(&format!("sigma = {}\n", config.sigma));
    s.push_str(&format!("c1 = {}\n", config.c1));
    s.push_str(&format!("c2 = {}\n", config.c2));
    s.push_str(&format!("eps_log = {}\n", config.eps_log));
    s.push_str(&format!("delta = {}\n", config.delta));
    s.push_str(&format!("mu0 = {}\n", config.mu0));
    s.push_str(&format!("beta0 = {}\n", config.beta0));
    s.push_str(&format!("rho = {}\n", config.rho));
    s.push_str(&format!("mu_max = {}\n", config.mu_max));
    s.push_str(&format!("tol = {}\n", config.tol));
    s.push_str(&format!("max_iters = {}\n", config.max_iters));
    if let Some((lambda, tau)) = resolved {
        s.push_str(&format!("# resolved lambda = {lambda}\n"));
        s.push_str(&format!("# resolved tau = {tau}\n"));
    }
    s
}

fn parse_level(key: &str, value: &str) -> Result<Option<Level>> {
    if value == "none" {
        return Ok(None);
    }
    if let Some((lo, hi)) = value.split_once("..") {
        return Ok(Some(Level::Range(
            parse_f64(key, lo.trim())?,
            parse_f64(key, hi.trim())?,
        )));
    }
    Ok(Some(Level::Fixed(parse_f64(key, value)?)))
}

fn level_text(level: &Option<Level>) -> String {
    match level {
        None => "none".into(),
        Some(Level::Fixed(v)) => format!("{v}"),
        Some(Level::Range(lo, hi)) => format!("{lo}..{hi}"),
    }
}

/// Parses a noise recipe. Stripe detail keys require `stripe_bands`.
pub fn parse_noise_spec(text: &str) -> Result<NoiseSpec> {
    let mut gaussian = None;
    let mut impulse = None;
    let mut bands: Option<(usize, usize)> = None;
    let mut column_fraction = None;
    let mut offset = None;
    let mut seed = 0u64;
    for (key, value) in parse_kv(text)? {
        match key.as_str() {
            "gaussian" => gaussian = parse_level(&key, &value)?,
            "impulse" => impulse = parse_level(&key, &value)?,
            "stripe_bands" => {
                if value != "none" {
                    let (lo, hi) = value.split_once("..").ok_or_else(|| {
                        Error::Config(format!(
                            "stripe_bands: expected `lo..hi` or `none`, got {value:?}"
                        ))
                    })?;
                    let parse = |s: &str| -> Result<usize> {
                        s.trim().parse().map_err(|_| {
                            Error::Config(format!(
                                "stripe_bands: expected integers, got {value:?}"
                            ))
                        })
                    };
                    bands = Some((parse(lo)?, parse(hi)?));
                }
            }
            "stripe_column_fraction" => column_fraction = Some(parse_f64(&key, &value)?),
            "stripe_offset" => {
                offset = Some(match value.split_once("..") {
                    Some((lo, hi)) => {
                        (parse_f64(&key, lo.trim())?, parse_f64(&key, hi.trim())?)
                    }
                    None => {
                        let v = parse_f64(&key, &value)?;
                        (v, v)
                    }
                })
            }
            "seed" => {
                seed = value.parse().map_err(|_| {
                    Error::Config(format!("seed: expected an unsigned integer, got {value:?}"))
                })?
            }
            other => {
                return Err(Error::Config(format!("unknown noise key {other:?}")));
            }
        }
    }
    let stripes = match bands {
        Some(bands) => Some(StripeSpec {
            bands,
            column_fraction: column_fraction.unwrap_or(StripeSpec::DEFAULT_COLUMN_FRACTION),
            offsets: offset.unwrap_or(StripeSpec::DEFAULT_OFFSETS),
        }),
        None => {
            if column_fraction.is_some() || offset.is_some() {
                return Err(Error::Config(
                    "stripe detail keys need stripe_bands".into(),
                ));
            }
            None
        }
    };
    Ok(NoiseSpec {
        gaussian,
        impulse,
        stripes,
        seed,
    })
}

/// Config-file snapshot of a noise recipe; parses back to an equal spec.
pub fn noise_spec_text(spec: &NoiseSpec) -> String {
    let mut s = String::new();
    s.push_str(&format!("gaussian = {}\n", level_text(&spec.gaussian)));
    s.push_str(&format!("impulse = {}\n", level_text(&spec.impulse)));
    match &spec.stripes {
        None => s.push_str("stripe_bands = none\n"),
        Some(sp) => {
            s.push_str(&format!("stripe_bands = {}..{}\n", sp.bands.0, sp.bands.1));
            s.push_str(&format!("stripe_column_fraction = {}\n", sp.column_fraction));
            s.push_str(&format!("stripe_offset = {}..{}\n", sp.offsets.0, sp.offsets.1));
        }
    }
    s.push_str(&format!("seed = {}\n", spec.seed));
    s
}

/// History CSV: one row per sweep.
pub fn write_history_csv(path: &Path, history: &[IterRecord], force: bool) -> Result<()> {
    let mut s = String::from("iter,rel_change,residual,objective\n");
    for r in history {
        s.push_str(&format!(
            "{},{},{},{}\n",
            r.iter, r.rel_change, r.residual, r.objective
        ));
    }
    save_text(path, &s, force)
}

/// Summary CSV with the four aggregate scores.
pub fn write_metrics_csv(path: &Path, report: &MetricsReport, force: bool) -> Result<()> {
    let s = format!(
        "mpsnr,mssim,ergas,msam\n{},{},{},{}\n",
        report.mpsnr, report.mssim, report.ergas, report.msam
    );
    save_text(path, &s, force)
}

/// Per-band CSV behind the curve plots.
pub fn write_band_csv(path: &Path, report: &MetricsReport, force: bool) -> Result<()> {
    let mut s = String::from("band,psnr,ssim\n");
    for (k, (p, m)) in report.band_psnr.iter().zip(report.band_ssim.iter()).enumerate() {
        s.push_str(&format!("{},{},{}\n", k + 1, p, m));
    }
    save_text(path, &s, force)
}

/// Converts an output directory and name into a path, creating the
/// directory on the way.
pub fn out_path(dir: &Path, name: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(Error::io(dir))?;
    Ok(dir.join(name))
}
