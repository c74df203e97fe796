//! Mixed-noise simulator: per-band Gaussian, impulse, and stripe corruption.
//!
//! Every component draws from its own ChaCha substream keyed by (component,
//! band), so band order never changes results and components stay independent
//! under one seed. Corruption is applied in the order Gaussian -> impulse ->
//! stripes: impulse pixels overwrite whatever noise landed on them, stripes
//! add on top. Outputs are never clipped.
//!
//! Conventions:
//! - Gaussian levels are standard deviations.
//! - The impulse ratio buys `round(p * n1 * n2)` distinct pixels per band,
//!   each forced to 0 or 1 with equal probability.
//! - Stripes pick `round(fraction * n2)` columns once, draw one offset per
//!   column, and apply the same columns and offsets to every band in range.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::tensor3::Cube;

const STREAM_GAUSSIAN: u64 = 1 << 32;
const STREAM_IMPULSE: u64 = 2 << 32;
const STREAM_STRIPE: u64 = 3 << 32;

fn band_rng(seed: u64, stream: u64, band: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream | band as u64);
    rng
}

/// Fixed noise level or a range a fresh per-band level is drawn from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Level {
    Fixed(f64),
    Range(f64, f64),
}

impl Level {
    fn bounds(&self) -> (f64, f64) {
        match *self {
            Level::Fixed(v) => (v, v),
            Level::Range(lo, hi) => (lo, hi),
        }
    }

    fn validate(&self, what: &str, max: f64) -> Result<()> {
        let (lo, hi) = self.bounds();
        if !lo.is_finite() || !hi.is_finite() || lo < 0.0 || hi > max || lo > hi {
            return Err(Error::InvalidArgument(format!(
                "{what} level must satisfy 0 <= lo <= hi <= {max}, got {lo}..{hi}"
            )));
        }
        Ok(())
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            Level::Fixed(v) => v,
            Level::Range(lo, hi) if lo == hi => lo,
            Level::Range(lo, hi) => rng.gen_range(lo..=hi),
        }
    }
}

/// Stripe corruption: bands are 1-based and inclusive.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StripeSpec {
    pub bands: (usize, usize),
    pub column_fraction: f64,
    pub offsets: (f64, f64),
}

impl StripeSpec {
    pub const DEFAULT_COLUMN_FRACTION: f64 = 0.1;
    pub const DEFAULT_OFFSETS: (f64, f64) = (-0.25, 0.25);

    fn validate(&self, n3: usize) -> Result<()> {
        if self.bands.0 < 1 || self.bands.0 > self.bands.1 || self.bands.1 > n3 {
            return Err(Error::InvalidArgument(format!(
                "stripe bands {}..{} outside 1..{n3}",
                self.bands.0, self.bands.1
            )));
        }
        if !self.column_fraction.is_finite()
            || !(0.0..=1.0).contains(&self.column_fraction)
        {
            return Err(Error::InvalidArgument(format!(
                "stripe column fraction must lie in [0, 1], got {}",
                self.column_fraction
            )));
        }
        if !self.offsets.0.is_finite()
            || !self.offsets.1.is_finite()
            || self.offsets.0 > self.offsets.1
        {
            return Err(Error::InvalidArgument(format!(
                "stripe offsets must satisfy lo <= hi, got {}..{}",
                self.offsets.0, self.offsets.1
            )));
        }
        Ok(())
    }
}

/// Full corruption recipe. Serializing this plus the clean cube reproduces a
/// noisy cube exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseSpec {
    pub gaussian: Option<Level>,
    pub impulse: Option<Level>,
    pub stripes: Option<StripeSpec>,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn validate(&self, n3: usize) -> Result<()> {
        if let Some(g) = &self.gaussian {
            g.validate("gaussian", f64::INFINITY)?;
        }
        if let Some(p) = &self.impulse {
            p.validate("impulse", 1.0)?;
        }
        if let Some(s) = &self.stripes {
            s.validate(n3)?;
        }
        Ok(())
    }

    /// Applies all configured components in order.
    pub fn apply(&self, x: &Cube) -> Result<Cube> {
        self.validate(x.dims().2)?;
        let mut out = x.clone();
        if let Some(g) = &self.gaussian {
            out = add_gaussian(&out, g, self.seed)?;
        }
        if let Some(p) = &self.impulse {
            out = add_impulse(&out, p, self.seed)?;
        }
        if let Some(s) = &self.stripes {
            out = add_stripes(&out, s, self.seed)?;
        }
        Ok(out)
    }
}

/// Adds zero-mean Gaussian noise, one level per band.
pub fn add_gaussian(x: &Cube, level: &Level, seed: u64) -> Result<Cube> {
    level.validate("gaussian", f64::INFINITY)?;
    let (_, _, n3) = x.dims();
    let mut out = x.clone();
    for k in 0..n3 {
        let mut rng = band_rng(seed, STREAM_GAUSSIAN, k);
        let g = level.draw(&mut rng);
        let dist = Normal::new(0.0, g)
            .map_err(|e| Error::InvalidArgument(format!("gaussian level {g}: {e}")))?;
        for v in out.data.index_axis_mut(ndarray::Axis(2), k).iter_mut() {
            *v += dist.sample(&mut rng);
        }
    }
    Ok(out)
}

/// Forces a per-band ratio of pixels to 0 or 1, chosen without replacement.
pub fn add_impulse(x: &Cube, level: &Level, seed: u64) -> Result<Cube> {
    level.validate("impulse", 1.0)?;
    let (n1, n2, n3) = x.dims();
    let mut out = x.clone();
    for k in 0..n3 {
        let mut rng = band_rng(seed, STREAM_IMPULSE, k);
        let p = level.draw(&mut rng);
        let count = (p * (n1 * n2) as f64).round() as usize;
        let chosen = index::sample(&mut rng, n1 * n2, count);
        let mut band = out.data.index_axis_mut(ndarray::Axis(2), k);
        for idx in chosen.iter() {
            band[[idx / n2, idx % n2]] = if rng.gen_bool(0.5) { 1.0 } else { 0.0 };
        }
    }
    Ok(out)
}

/// Adds constant column offsets over a band range. Columns and offsets are
/// drawn once and shared by every band in the range.
pub fn add_stripes(x: &Cube, spec: &StripeSpec, seed: u64) -> Result<Cube> {
    let (n1, n2, n3) = x.dims();
    spec.validate(n3)?;
    let mut rng = band_rng(seed, STREAM_STRIPE, 0);
    let ncols = (spec.column_fraction * n2 as f64).round() as usize;
    let cols = index::sample(&mut rng, n2, ncols);
    let (lo, hi) = spec.offsets;
    let offsets: Vec<f64> = cols
        .iter()
        .map(|_| if lo == hi { lo } else { rng.gen_range(lo..=hi) })
        .collect();
    let mut out = x.clone();
    for b in (spec.bands.0 - 1)..spec.bands.1 {
        for (c, j) in cols.iter().enumerate() {
            for i in 0..n1 {
                out.data[[i, j, b]] += offsets[c];
            }
        }
    }
    Ok(out)
}

/// Preset recipe `case` in 1..=8. The stripe band range of case 8 defaults to
/// the relative window [0.675, 0.8] of the spectral axis, rounded to nearest.
pub fn case_spec(case: u8, seed: u64, n3: usize) -> Result<NoiseSpec> {
    let (gaussian, impulse, stripes) = match case {
        1 => (Level::Fixed(0.1), Level::Fixed(0.2), false),
        2 => (Level::Fixed(0.1), Level::Fixed(0.3), false),
        3 => (Level::Fixed(0.1), Level::Fixed(0.4), false),
        4 => (Level::Fixed(0.15), Level::Fixed(0.2), false),
        5 => (Level::Fixed(0.2), Level::Fixed(0.2), false),
        6 => (Level::Fixed(0.1), Level::Range(0.2, 0.4), false),
        7 => (Level::Range(0.1, 0.3), Level::Fixed(0.2), false),
        8 => (Level::Range(0.1, 0.3), Level::Range(0.1, 0.3), true),
        _ => {
            return Err(Error::InvalidArgument(format!(
                "noise case must lie in 1..=8, got {case}"
            )))
        }
    };
    let stripes = if stripes {
        let lo = ((0.675 * n3 as f64).round() as usize).max(1);
        let hi = ((0.8 * n3 as f64).round() as usize).clamp(lo, n3);
        Some(StripeSpec {
            bands: (lo, hi),
            column_fraction: StripeSpec::DEFAULT_COLUMN_FRACTION,
            offsets: StripeSpec::DEFAULT_OFFSETS,
        })
    } else {
        None
    };
    Ok(NoiseSpec {
        gaussian: Some(gaussian),
        impulse: Some(impulse),
        stripes,
        seed,
    })
}

/// Corrupts a cube with a preset case; returns the noisy cube and the recipe
/// that produced it.
pub fn make_case(x: &Cube, case: u8, seed: u64) -> Result<(Cube, NoiseSpec)> {
    let spec = case_spec(case, seed, x.dims().2)?;
    let noisy = spec.apply(x)?;
    Ok((noisy, spec))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat_cube(dims: (usize, usize, usize)) -> Cube {
        let n = dims.0 * dims.1 * dims.2;
        Cube::from_vec(
            dims,
            (0..n).map(|v| 0.1 + 0.8 * ((v * 13 % 97) as f64 / 96.0)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn same_seed_same_noise() {
        let x = flat_cube((8, 9, 5));
        let (a, _) = make_case(&x, 8, 42).unwrap();
        let (b, _) = make_case(&x, 8, 42).unwrap();
        assert_eq!(a.data, b.data);
        let (c, _) = make_case(&x, 8, 43).unwrap();
        assert_ne!(a.data, c.data);
    }

    #[test]
    fn impulse_hits_exactly_the_requested_count() {
        let x = flat_cube((50, 40, 3));
        let noisy = add_impulse(&x, &Level::Fixed(0.2), 7).unwrap();
        for k in 0..3 {
            let mut hits = 0;
            for i in 0..50 {
                for j in 0..40 {
                    let v = noisy.data[[i, j, k]];
                    if v != x.data[[i, j, k]] {
                        assert!(v == 0.0 || v == 1.0);
                        hits += 1;
                    }
                }
            }
            // clean values sit strictly inside (0, 1), so every chosen pixel
            // is visible: round(0.2 * 2000) = 400
            assert_eq!(hits, 400);
        }
    }

    #[test]
    fn ranged_impulse_varies_between_bands() {
        let x = flat_cube((40, 40, 6));
        let noisy = add_impulse(&x, &Level::Range(0.1, 0.3), 11).unwrap();
        let mut counts = Vec::new();
        for k in 0..6 {
            let hits = noisy
                .data
                .index_axis(ndarray::Axis(2), k)
                .iter()
                .zip(x.data.index_axis(ndarray::Axis(2), k).iter())
                .filter(|(a, b)| a != b)
                .count();
            assert!((160..=480).contains(&hits), "band {k}: {hits}");
            counts.push(hits);
        }
        assert!(counts.iter().any(|&c| c != counts[0]));
    }

    #[test]
    fn gaussian_level_is_a_standard_deviation() {
        let x = Cube::zeros((60, 60, 2)).unwrap();
        let noisy = add_gaussian(&x, &Level::Fixed(0.1), 3).unwrap();
        let band = noisy.data.index_axis(ndarray::Axis(2), 0);
        let n = band.len() as f64;
        let mean: f64 = band.iter().sum::<f64>() / n;
        let var: f64 = band.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        assert!((var.sqrt() - 0.1).abs() < 0.01, "std {}", var.sqrt());
        let same = add_gaussian(&x, &Level::Fixed(0.0), 3).unwrap();
        assert_eq!(same.data, x.data);
    }

    #[test]
    fn stripes_shift_whole_columns_by_a_constant() {
        let x = flat_cube((6, 145, 8));
        let spec = StripeSpec {
            bands: (3, 6),
            column_fraction: 0.1,
            offsets: (0.3, 0.3),
        };
        let noisy = add_stripes(&x, &spec, 5).unwrap();
        let mut striped_cols = Vec::new();
        for j in 0..145 {
            let d = noisy.data[[0, j, 2]] - x.data[[0, j, 2]];
            if d != 0.0 {
                assert!((d - 0.3).abs() <= 1e-15);
                striped_cols.push(j);
            }
        }
        // round(0.1 * 145) = 15, half-away-from-zero
        assert_eq!(striped_cols.len(), 15);
        for b in 0..8 {
            for j in 0..145 {
                for i in 0..6 {
                    let d = noisy.data[[i, j, b]] - x.data[[i, j, b]];
                    let inside = (2..6).contains(&b) && striped_cols.contains(&j);
                    if inside {
                        assert!((d - 0.3).abs() <= 1e-15);
                    } else {
                        assert_eq!(d, 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn case_table_and_validation() {
        let spec = case_spec(1, 9, 80).unwrap();
        assert_eq!(spec.gaussian, Some(Level::Fixed(0.1)));
        assert_eq!(spec.impulse, Some(Level::Fixed(0.2)));
        assert_eq!(spec.stripes, None);
        let spec8 = case_spec(8, 9, 80).unwrap();
        assert_eq!(spec8.stripes.unwrap().bands, (54, 64));
        assert!(case_spec(0, 9, 80).is_err());
        assert!(case_spec(9, 9, 80).is_err());
        let x = flat_cube((4, 4, 4));
        assert!(add_impulse(&x, &Level::Fixed(1.5), 0).is_err());
        assert!(add_gaussian(&x, &Level::Range(0.3, 0.1), 0).is_err());
        let bad = StripeSpec {
            bands: (2, 9),
            column_fraction: 0.1,
            offsets: (-0.1, 0.1),
        };
        assert!(add_stripes(&x, &bad, 0).is_err());
    }

    #[test]
    fn output_is_unclipped() {
        let x = flat_cube((12, 12, 4));
        let (noisy, spec) = make_case(&x, 5, 21).unwrap();
        assert!(noisy.data.iter().any(|&v| !(0.0..=1.0).contains(&v)));
        assert!(noisy.validate_finite().is_ok());
        assert_eq!(spec.seed, 21);
    }
}
