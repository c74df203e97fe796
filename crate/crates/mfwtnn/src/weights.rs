//! Frequency-adaptive weights and closed-form parameter defaults.
//!
//! Informative frequency slices have large Frobenius norms, so they get small
//! weights and keep their singular values; noise-dominated slices get large
//! weights and shrink harder. The raw profile for slice k is
//!
//!   h_k = 1 / (max(log ||slice k||_F^2, 1e-2) + delta)
//!
//! where the floor keeps near-empty slices from blowing the profile up and
//! delta guards the division. The schedule rescales the profile against its
//! maximum and lifts it off zero: w_k = C1 * h_k / max(h) + C2. Both steps
//! mirror conjugate slice pairs exactly, so downstream pairing checks can
//! use bitwise equality.

use crate::error::{Error, Result};
use crate::tensor3::{fft_mode3, half_spectrum, mirror_slice, permute, slice_norm_sqr, Cube, FreqCube, Mode};

/// Floor applied to the log of a slice's squared norm.
pub const NORM_LOG_FLOOR: f64 = 1e-2;
/// Division guard in the raw weight profile.
pub const DEFAULT_DELTA: f64 = 1e-6;
/// Default schedule coefficients.
pub const DEFAULT_C1: f64 = 0.6;
pub const DEFAULT_C2: f64 = 0.6;
/// Default scale for the closed-form sparse weight.
pub const DEFAULT_LAMBDA_S: f64 = 0.011;
/// Default numerator of the closed-form dense-noise weight tau = tau_n / sigma.
pub const DEFAULT_TAU_N: f64 = 1e-4;

const ALPHA_SUM_TOL: f64 = 1e-12;

/// Raw per-slice weight profile of a spectrum. Entries of conjugate pairs are
/// identical by construction.
pub fn raw_weights(xf: &FreqCube, delta: f64) -> Result<Vec<f64>> {
    if !delta.is_finite() || delta <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "delta must be finite and positive, got {delta}"
        )));
    }
    let n3 = xf.dims().2;
    let mut h = vec![0.0; n3];
    for k in 0..half_spectrum(n3) {
        let d = slice_norm_sqr(xf, k).ln().max(NORM_LOG_FLOOR) + delta;
        h[k] = 1.0 / d;
        h[mirror_slice(k, n3)] = h[k];
    }
    Ok(h)
}

/// Rescales a raw profile into usable weights: w_k = c1 * h_k / max(h) + c2.
pub fn schedule_weights(h: &[f64], c1: f64, c2: f64) -> Result<Vec<f64>> {
    if h.is_empty() {
        return Err(Error::InvalidArgument("empty weight profile".into()));
    }
    if !c1.is_finite() || !c2.is_finite() || c1 < 0.0 || c2 < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "schedule coefficients must be finite and nonnegative, got c1 = {c1}, c2 = {c2}"
        )));
    }
    if let Some(k) = h.iter().position(|v| !v.is_finite() || *v <= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "weight profile must be finite and positive; h[{k}] = {}",
            h[k]
        )));
    }
    let hmax = h.iter().fold(0.0_f64, |m, &v| m.max(v));
    Ok(h.iter().map(|&v| c1 * (v / hmax) + c2).collect())
}

/// Closed-form sparse weight for an n1 x n2 x n3 cube:
/// lambda_s * sum_p alpha_p / sqrt(max(other two dims) * n_p).
pub fn default_lambda(
    dims: (usize, usize, usize),
    lambda_s: f64,
    alpha: &ModalWeights,
) -> Result<f64> {
    if !lambda_s.is_finite() || lambda_s <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "lambda_s must be finite and positive, got {lambda_s}"
        )));
    }
    let (n1, n2, n3) = (dims.0 as f64, dims.1 as f64, dims.2 as f64);
    let a = alpha.alpha();
    let sum = a[0] / (n2.max(n3) * n1).sqrt()
        + a[1] / (n3.max(n1) * n2).sqrt()
        + a[2] / (n1.max(n2) * n3).sqrt();
    Ok(lambda_s * sum)
}

/// Closed-form dense-noise weight tau = tau_n / sigma.
pub fn default_tau(sigma: f64, tau_n: f64) -> Result<f64> {
    if !sigma.is_finite() || sigma <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "sigma must be finite and positive, got {sigma}"
        )));
    }
    if !tau_n.is_finite() || tau_n <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "tau_n must be finite and positive, got {tau_n}"
        )));
    }
    Ok(tau_n / sigma)
}

/// Convex combination over the three modes. Entries are nonnegative and sum
/// to one within 1e-12.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModalWeights {
    alpha: [f64; 3],
}

impl ModalWeights {
    pub fn new(alpha: [f64; 3]) -> Result<Self> {
        for (i, a) in alpha.iter().enumerate() {
            if !a.is_finite() || *a < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "modal weight {} must be finite and nonnegative, got {a}",
                    i + 1
                )));
            }
        }
        let sum: f64 = alpha.iter().sum();
        if (sum - 1.0).abs() > ALPHA_SUM_TOL {
            return Err(Error::InvalidArgument(format!(
                "modal weights must sum to 1 (got {sum}); use `normalized` to rescale"
            )));
        }
        Ok(ModalWeights { alpha })
    }

    /// Rescales arbitrary nonnegative components to sum to one.
    pub fn normalized(raw: [f64; 3]) -> Result<Self> {
        for (i, a) in raw.iter().enumerate() {
            if !a.is_finite() || *a < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "modal weight {} must be finite and nonnegative, got {a}",
                    i + 1
                )));
            }
        }
        let sum: f64 = raw.iter().sum();
        if sum <= 0.0 {
            return Err(Error::InvalidArgument(
                "modal weights must not all be zero".into(),
            ));
        }
        Ok(ModalWeights {
            alpha: [raw[0] / sum, raw[1] / sum, raw[2] / sum],
        })
    }

    pub fn alpha(&self) -> [f64; 3] {
        self.alpha
    }

    pub fn get(&self, p: Mode) -> f64 {
        self.alpha[p.index()]
    }
}

impl Default for ModalWeights {
    fn default() -> Self {
        ModalWeights::normalized([1.0, 1.0, 0.2]).expect("valid")
    }
}

/// Per-mode weight profiles and schedules, refreshed once per solver
/// iteration from the current estimate.
#[derive(Clone, Debug)]
pub struct WeightState {
    pub h: [Vec<f64>; 3],
    pub w: [Vec<f64>; 3],
    pub c1: f64,
    pub c2: f64,
    pub delta: f64,
}

impl WeightState {
    pub fn from_cube(x: &Cube, c1: f64, c2: f64, delta: f64) -> Result<Self> {
        let mut state = WeightState {
            h: [Vec::new(), Vec::new(), Vec::new()],
            w: [Vec::new(), Vec::new(), Vec::new()],
            c1,
            c2,
            delta,
        };
        state.refresh(x)?;
        Ok(state)
    }

    /// Recomputes every mode's profile from the spectrum of `x` permuted to
    /// that mode.
    pub fn refresh(&mut self, x: &Cube) -> Result<()> {
        for p in Mode::ALL {
            let xf = fft_mode3(&permute(x, p));
            let h = raw_weights(&xf, self.delta)?;
            let w = schedule_weights(&h, self.c1, self.c2)?;
            self.h[p.index()] = h;
            self.w[p.index()] = w;
        }
        Ok(())
    }

    pub fn weights(&self, p: Mode) -> &[f64] {
        &self.w[p.index()]
    }
}
