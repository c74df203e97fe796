//! ADMM solver for the decomposition Y = X + S + N with a frequency-weighted
//! spectral regularizer on X, an l1 penalty on the sparse part S, and a
//! squared Frobenius penalty on the dense part N.
//!
//! Each iteration runs a fixed Gauss-Seidel sweep: the three mode splits Z_p,
//! then X, S, N, then multipliers, penalty growth, and a weight refresh from
//! the new X. The stopping rule watches the relative change of X only; the
//! fit residual and an objective surrogate are logged for monitoring.

use crate::error::{Error, Result};
use crate::shrinkage::{dw_prox_full, fw_prox_full, soft_threshold};
use crate::tensor3::{ipermute, permute, Cube, Mode};
use crate::weights::{
    default_lambda, default_tau, ModalWeights, WeightState, DEFAULT_C1, DEFAULT_C2,
    DEFAULT_DELTA, DEFAULT_LAMBDA_S, DEFAULT_TAU_N,
};

pub const DEFAULT_MU0: f64 = 1e-3;
pub const DEFAULT_BETA0: f64 = 1e-3;
pub const DEFAULT_RHO: f64 = 1.2;
pub const DEFAULT_MU_MAX: f64 = 1e10;
pub const DEFAULT_TOL: f64 = 1e-5;
pub const DEFAULT_MAX_ITERS: usize = 100;
pub const DEFAULT_EPS_LOG: f64 = 0.1;
/// Gaussian level assumed when tau is resolved automatically.
pub const DEFAULT_SIGMA: f64 = 0.1;

/// Which regularizer shapes the Z updates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Model {
    /// Frequency-weighted nuclear shrinkage.
    Mfwtnn,
    /// Frequency-weighted log-determinant shrinkage.
    NonMfwtnn,
    /// Uniform weights with the threshold scaled by c2: the plain tensor
    /// nuclear norm that the weighted model collapses to at c1 = 0.
    TnnBaseline,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::Mfwtnn => "mfwtnn",
            Model::NonMfwtnn => "non-mfwtnn",
            Model::TnnBaseline => "tnn",
        }
    }

    pub fn parse(s: &str) -> Result<Model> {
        match s {
            "mfwtnn" => Ok(Model::Mfwtnn),
            "non-mfwtnn" => Ok(Model::NonMfwtnn),
            "tnn" => Ok(Model::TnnBaseline),
            other => Err(Error::Config(format!(
                "unknown model {other:?}, expected mfwtnn, non-mfwtnn, or tnn"
            ))),
        }
    }
}

/// A parameter either resolved from the data or pinned by the caller.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Setting {
    Auto,
    Fixed(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub model: Model,
    pub alpha: ModalWeights,
    pub lambda: Setting,
    pub lambda_s: f64,
    pub tau: Setting,
    pub tau_n: f64,
    pub sigma: f64,
    pub c1: f64,
    pub c2: f64,
    pub delta: f64,
    pub eps_log: f64,
    pub mu0: f64,
    pub beta0: f64,
    pub rho: f64,
    pub mu_max: f64,
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            model: Model::NonMfwtnn,
            alpha: ModalWeights::default(),
            lambda: Setting::Auto,
            lambda_s: DEFAULT_LAMBDA_S,
            tau: Setting::Auto,
            tau_n: DEFAULT_TAU_N,
            sigma: DEFAULT_SIGMA,
            c1: DEFAULT_C1,
            c2: DEFAULT_C2,
            delta: DEFAULT_DELTA,
            eps_log: DEFAULT_EPS_LOG,
            mu0: DEFAULT_MU0,
            beta0: DEFAULT_BETA0,
            rho: DEFAULT_RHO,
            mu_max: DEFAULT_MU_MAX,
            tol: DEFAULT_TOL,
            max_iters: DEFAULT_MAX_ITERS,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64, name: &str| -> Result<()> {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::Config(format!(
                    "{name} must be finite and positive, got {v}"
                )));
            }
            Ok(())
        };
        let nonneg = |v: f64, name: &str| -> Result<()> {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Config(format!(
                    "{name} must be finite and nonnegative, got {v}"
                )));
            }
            Ok(())
        };
        nonneg(self.c1, "c1")?;
        nonneg(self.c2, "c2")?;
        if self.c1 + self.c2 <= 0.0 {
            return Err(Error::Config(
                "c1 + c2 must be positive or every weight is zero".into(),
            ));
        }
        pos(self.delta, "delta")?;
        pos(self.eps_log, "eps_log")?;
        pos(self.mu0, "mu0")?;
        pos(self.beta0, "beta0")?;
        if !self.rho.is_finite() || self.rho <= 1.0 {
            return Err(Error::Config(format!(
                "rho must be finite and greater than 1, got {}",
                self.rho
            )));
        }
        pos(self.mu_max, "mu_max")?;
        if self.mu_max < self.mu0.max(self.beta0) {
            return Err(Error::Config(format!(
                "mu_max {} below initial penalty {}",
                self.mu_max,
                self.mu0.max(self.beta0)
            )));
        }
        pos(self.tol, "tol")?;
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        match self.lambda {
            Setting::Fixed(v) => pos(v, "lambda")?,
            Setting::Auto => pos(self.lambda_s, "lambda_s")?,
        }
        match self.tau {
            Setting::Fixed(v) => pos(v, "tau")?,
            Setting::Auto => {
                pos(self.tau_n, "tau_n")?;
                pos(self.sigma, "sigma")?;
            }
        }
        Ok(())
    }

    pub fn resolve_lambda(&self, dims: (usize, usize, usize)) -> Result<f64> {
        match self.lambda {
            Setting::Fixed(v) => Ok(v),
            Setting::Auto => default_lambda(dims, self.lambda_s, &self.alpha),
        }
    }

    pub fn resolve_tau(&self) -> Result<f64> {
        match self.tau {
            Setting::Fixed(v) => Ok(v),
            Setting::Auto => default_tau(self.sigma, self.tau_n),
        }
    }
}

/// All per-iteration variables. Z_p and its multiplier stay in the mode-p
/// orientation; everything else matches Y.
#[derive(Clone, Debug)]
pub struct SolverState {
    pub x: Cube,
    pub s: Cube,
    pub n: Cube,
    pub z: [Cube; 3],
    pub dual_z: [Cube; 3],
    pub dual_fit: Cube,
    pub mu: [f64; 3],
    pub beta: f64,
    pub weights: WeightState,
    pub lambda: f64,
    pub tau: f64,
    pub iter: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct IterRecord {
    pub iter: usize,
    pub rel_change: f64,
    pub residual: f64,
    pub objective: f64,
}

#[derive(Clone, Debug)]
pub struct DenoiseResult {
    pub x: Cube,
    pub s: Cube,
    pub n: Cube,
    pub iterations: usize,
    pub converged: bool,
    pub history: Vec<IterRecord>,
}

fn add_scaled(a: &Cube, b: &Cube, c: f64) -> Cube {
    let mut out = a.clone();
    out.data.zip_mut_with(&b.data, |x, &y| *x += c * y);
    out
}

/// Builds the starting point: X = Y, Z_p = permute(Y, p), S = N = 0, all
/// multipliers zero, weights taken from Y itself.
pub fn init_state(y: &Cube, config: &SolverConfig) -> Result<SolverState> {
    config.validate()?;
    y.validate_finite()?;
    let lo = y.data.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = y.data.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if lo < -0.5 || hi > 1.5 {
        eprintln!(
            "warning: input range [{lo:.3}, {hi:.3}] is far outside [0, 1]; \
             automatic lambda and tau assume unit scale"
        );
    }
    let dims = y.dims();
    let zeros = Cube::zeros(dims)?;
    Ok(SolverState {
        x: y.clone(),
        s: zeros.clone(),
        n: zeros.clone(),
        z: [
            permute(y, Mode::M1),
            permute(y, Mode::M2),
            permute(y, Mode::M3),
        ],
        dual_z: [
            Cube::zeros(permute(y, Mode::M1).dims())?,
            Cube::zeros(permute(y, Mode::M2).dims())?,
            Cube::zeros(permute(y, Mode::M3).dims())?,
        ],
        dual_fit: zeros,
        mu: [config.mu0; 3],
        beta: config.beta0,
        weights: WeightState::from_cube(y, config.c1, config.c2, config.delta)?,
        lambda: config.resolve_lambda(dims)?,
        tau: config.resolve_tau()?,
        iter: 0,
    })
}

/// One Z_p update; returns the new split and its regularizer value. A zero
/// modal weight skips the transform entirely, so those modes cost nothing
/// and stay bit-exact.
pub fn update_z(state: &SolverState, config: &SolverConfig, p: Mode) -> Result<(Cube, f64)> {
    let i = p.index();
    let alpha_p = config.alpha.get(p);
    let xp = permute(&state.x, p);
    let arg = add_scaled(&xp, &state.dual_z[i], 1.0 / state.mu[i]);
    if alpha_p == 0.0 {
        return Ok((arg, 0.0));
    }
    let tau_p = alpha_p / state.mu[i];
    let out = match config.model {
        Model::Mfwtnn => fw_prox_full(&arg, state.weights.weights(p), tau_p)?,
        Model::NonMfwtnn => {
            dw_prox_full(&arg, state.weights.weights(p), tau_p, config.eps_log)?
        }
        Model::TnnBaseline => {
            let ones = vec![1.0; arg.dims().2];
            fw_prox_full(&arg, &ones, config.c2 * tau_p)?
        }
    };
    Ok((out.cube, out.reg_value))
}

/// Least-squares X from the splits and the fit constraint.
pub fn update_x(state: &SolverState, y: &Cube) -> Result<Cube> {
    let dims = y.dims();
    let mut num = Cube::zeros(dims)?;
    let mut den = state.beta;
    for p in Mode::ALL {
        let i = p.index();
        let back = ipermute(&add_scaled(&state.z[i], &state.dual_z[i], -1.0 / state.mu[i]), p);
        num.data.zip_mut_with(&back.data, |a, &b| *a += state.mu[i] * b);
        den += state.mu[i];
    }
    for (((a, &yv), (&sv, &nv)), &lv) in num
        .data
        .iter_mut()
        .zip(y.data.iter())
        .zip(state.s.data.iter().zip(state.n.data.iter()))
        .zip(state.dual_fit.data.iter())
    {
        *a += state.beta * (yv - sv - nv) + lv;
        *a /= den;
    }
    Ok(num)
}

/// Soft-thresholded sparse part; N is still the previous iterate here.
pub fn update_s(state: &SolverState, y: &Cube) -> Result<Cube> {
    let mut arg = Cube::zeros(y.dims())?;
    for ((((a, &yv), &xv), &nv), &lv) in arg
        .data
        .iter_mut()
        .zip(y.data.iter())
        .zip(state.x.data.iter())
        .zip(state.n.data.iter())
        .zip(state.dual_fit.data.iter())
    {
        *a = yv - xv - nv + lv / state.beta;
    }
    soft_threshold(&arg, state.lambda / state.beta)
}

/// Ridge-shrunk dense part from the just-updated X and S.
pub fn update_n(state: &SolverState, y: &Cube) -> Result<Cube> {
    let mut out = Cube::zeros(y.dims())?;
    let scale = state.beta / (2.0 * state.tau + state.beta);
    for ((((a, &yv), &xv), &sv), &lv) in out
        .data
        .iter_mut()
        .zip(y.data.iter())
        .zip(state.x.data.iter())
        .zip(state.s.data.iter())
        .zip(state.dual_fit.data.iter())
    {
        *a = scale * (yv - xv - sv + lv / state.beta);
    }
    Ok(out)
}

/// Dual ascent plus capped geometric penalty growth.
pub fn update_multipliers(state: &mut SolverState, config: &SolverConfig, y: &Cube) {
    for p in Mode::ALL {
        let i = p.index();
        let xp = permute(&state.x, p);
        let mu = state.mu[i];
        state.dual_z[i]
            .data
            .zip_mut_with(&(&xp.data - &state.z[i].data), |g, &d| *g += mu * d);
        state.mu[i] = (state.mu[i] * config.rho).min(config.mu_max);
    }
    let beta = state.beta;
    for (((l, &yv), (&xv, &sv)), &nv) in state
        .dual_fit
        .data
        .iter_mut()
        .zip(y.data.iter())
        .zip(state.x.data.iter().zip(state.s.data.iter()))
        .zip(state.n.data.iter())
    {
        *l += beta * (yv - xv - sv - nv);
    }
    state.beta = (state.beta * config.rho).min(config.mu_max);
}

/// One full sweep. Returns the iteration record; the state is advanced in
/// place.
pub fn iterate(state: &mut SolverState, config: &SolverConfig, y: &Cube) -> Result<IterRecord> {
    let mut reg = 0.0;
    for p in Mode::ALL {
        let (z, r) = update_z(state, config, p)?;
        state.z[p.index()] = z;
        reg += config.alpha.get(p) * r;
    }
    let x_prev = state.x.clone();
    state.x = update_x(state, y)?;
    state.s = update_s(state, y)?;
    state.n = update_n(state, y)?;
    update_multipliers(state, config, y);
    state.weights.refresh(&state.x)?;
    state.iter += 1;

    let mut diff = state.x.clone();
    diff.data.zip_mut_with(&x_prev.data, |a, &b| *a -= b);
    let rel_change = diff.frobenius_norm() / x_prev.frobenius_norm().max(1.0);
    let mut fit = y.clone();
    for ((f, &xv), (&sv, &nv)) in fit
        .data
        .iter_mut()
        .zip(state.x.data.iter())
        .zip(state.s.data.iter().zip(state.n.data.iter()))
    {
        *f -= xv + sv + nv;
    }
    let residual = fit.frobenius_norm() / y.frobenius_norm().max(1.0);
    let nf = state.n.frobenius_norm();
    let objective = reg + state.lambda * state.s.l1_norm() + state.tau * nf * nf;
    Ok(IterRecord {
        iter: state.iter,
        rel_change,
        residual,
        objective,
    })
}

/// Runs the solver to convergence or the iteration cap.
pub fn denoise(y: &Cube, config: &SolverConfig) -> Result<DenoiseResult> {
    let mut state = init_state(y, config)?;
    let mut history = Vec::with_capacity(config.max_iters);
    let mut converged = false;
    for _ in 0..config.max_iters {
        let rec = iterate(&mut state, config, y)?;
        let done = rec.rel_change <= config.tol;
        history.push(rec);
        if done {
            converged = true;
            break;
        }
    }
    Ok(DenoiseResult {
        x: state.x,
        s: state.s,
        n: state.n,
        iterations: state.iter,
        converged,
        history,
    })
}
