//! Pairwise-coupled spin model (SK): exact log-likelihood via enumeration of
//! the 2^n state space, and maximum-likelihood fitting by damped Newton on
//! the concave log-likelihood.
//!
//! The sufficient statistics are the magnetizations m_i and the pairwise
//! correlations c_ij; the fitted (J, h) solve d ln Z / d h_i = m_i and
//! d ln Z / d J_ij = c_ij.

use nalgebra::{Cholesky, DMatrix, DVector};
use thiserror::Error;

use crate::numeric::log_sum_exp;
use crate::sample::SpinSample;

/// Exact enumeration of 2^n states caps the spin count.
pub const SK_MAX_SPINS: usize = 20;

#[derive(Debug, Error, PartialEq)]
pub enum SkError {
    #[error("state space too large: n = {0} exceeds {SK_MAX_SPINS}")]
    StateSpaceTooLarge(usize),
    #[error("parameter shape mismatch: {0}")]
    Shape(String),
    #[error("couplings must be symmetric with zero diagonal")]
    NotSymmetric,
    #[error("non-finite parameter value")]
    NonFinite,
    #[error("divergent parameters at boundary")]
    BoundaryMoments,
    #[error("moment matching failed to converge")]
    NoConvergence,
}

/// Couplings J (symmetric, zero diagonal) and fields h.
#[derive(Debug, Clone, PartialEq)]
pub struct SkParams {
    n: usize,
    h: Vec<f64>,
    j: Vec<f64>, // n*n row-major, kept symmetric with zero diagonal
}

impl SkParams {
    pub fn new(n: usize, h: Vec<f64>, j: Vec<f64>) -> Result<Self, SkError> {
        if n == 0 {
            return Err(SkError::Shape("n must be >= 1".into()));
        }
        if h.len() != n || j.len() != n * n {
            return Err(SkError::Shape(format!(
                "h len {} and j len {} do not match n = {n}",
                h.len(),
                j.len()
            )));
        }
        if h.iter().chain(j.iter()).any(|v| !v.is_finite()) {
            return Err(SkError::NonFinite);
        }
        for i in 0..n {
            if j[i * n + i] != 0.0 {
                return Err(SkError::NotSymmetric);
            }
            for k in 0..i {
                if (j[i * n + k] - j[k * n + i]).abs() > 1e-12 {
                    return Err(SkError::NotSymmetric);
                }
            }
        }
        Ok(SkParams { n, h, j })
    }

    pub fn zeros(n: usize) -> Self {
        SkParams {
            n,
            h: vec![0.0; n],
            j: vec![0.0; n * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    pub fn j(&self, i: usize, k: usize) -> f64 {
        self.j[i * self.n + k]
    }

    /// Parameter vector (h_1..h_n, J_{i<j} in row-major pair order).
    fn to_vector(&self) -> DVector<f64> {
        let mut v = Vec::with_capacity(param_dim(self.n));
        v.extend_from_slice(&self.h);
        for i in 0..self.n {
            for k in (i + 1)..self.n {
                v.push(self.j[i * self.n + k]);
            }
        }
        DVector::from_vec(v)
    }

    fn from_vector(n: usize, v: &DVector<f64>) -> Self {
        let mut h = vec![0.0; n];
        h.copy_from_slice(&v.as_slice()[..n]);
        let mut j = vec![0.0; n * n];
        let mut idx = n;
        for i in 0..n {
            for k in (i + 1)..n {
                j[i * n + k] = v[idx];
                j[k * n + i] = v[idx];
                idx += 1;
            }
        }
        SkParams { n, h, j }
    }
}

/// Magnetizations and pairwise correlations (diagonal fixed at 1).
#[derive(Debug, Clone, PartialEq)]
pub struct SkMoments {
    n: usize,
    m: Vec<f64>,
    c: Vec<f64>, // n*n row-major symmetric, diagonal 1
}

impl SkMoments {
    pub fn new(m: Vec<f64>, c: Vec<f64>) -> Result<Self, SkError> {
        let n = m.len();
        if n == 0 || c.len() != n * n {
            return Err(SkError::Shape("c must be n x n".into()));
        }
        if m.iter().any(|v| !v.is_finite() || v.abs() > 1.0)
            || c.iter().any(|v| !v.is_finite() || v.abs() > 1.0 + 1e-12)
        {
            return Err(SkError::Shape(
                "moments must be finite and within [-1, 1]".into(),
            ));
        }
        Ok(SkMoments { n, m, c })
    }

    pub fn from_sample(sample: &SpinSample) -> Self {
        let n = sample.n_units();
        let n_obs = sample.len() as f64;
        let mut m = vec![0.0; n];
        let mut c = vec![0.0; n * n];
        for &row in sample.rows() {
            for i in 0..n {
                let si = SpinSample::sign_of(row, i);
                m[i] += si;
                for k in (i + 1)..n {
                    c[i * n + k] += si * SpinSample::sign_of(row, k);
                }
            }
        }
        for v in m.iter_mut() {
            *v /= n_obs;
        }
        for i in 0..n {
            c[i * n + i] = 1.0;
            for k in (i + 1)..n {
                c[i * n + k] /= n_obs;
                c[k * n + i] = c[i * n + k];
            }
        }
        SkMoments { n, m, c }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> &[f64] {
        &self.m
    }

    pub fn c(&self, i: usize, k: usize) -> f64 {
        self.c[i * self.n + k]
    }

    fn to_vector(&self) -> DVector<f64> {
        let mut v = Vec::with_capacity(param_dim(self.n));
        v.extend_from_slice(&self.m);
        for i in 0..self.n {
            for k in (i + 1)..self.n {
                v.push(self.c[i * self.n + k]);
            }
        }
        DVector::from_vec(v)
    }

    fn interior(&self) -> bool {
        const EDGE: f64 = 1.0 - 1e-9;
        self.m.iter().all(|v| v.abs() < EDGE)
            && (0..self.n).all(|i| {
                ((i + 1)..self.n).all(|k| self.c[i * self.n + k].abs() < EDGE)
            })
    }
}

fn param_dim(n: usize) -> usize {
    n + n * (n - 1) / 2
}

fn check_budget(n: usize) -> Result<(), SkError> {
    if n == 0 || n > SK_MAX_SPINS {
        return Err(SkError::StateSpaceTooLarge(n));
    }
    Ok(())
}

/// Per-state sufficient statistics (s_1..s_n, s_i s_j for i<j).
fn stats_of_state(n: usize, code: u32, out: &mut [f64]) {
    for i in 0..n {
        out[i] = SpinSample::sign_of(code, i);
    }
    let mut idx = n;
    for i in 0..n {
        for k in (i + 1)..n {
            out[idx] = out[i] * out[k];
            idx += 1;
        }
    }
}

/// Energies theta . sigma(x) for every state x.
fn state_energies(params: &SkParams) -> Vec<f64> {
    let n = params.n;
    let mut energies = Vec::with_capacity(1 << n);
    let mut stats = vec![0.0; param_dim(n)];
    let theta = params.to_vector();
    for code in 0u32..(1 << n) {
        stats_of_state(n, code, &mut stats);
        let e: f64 = stats.iter().zip(theta.iter()).map(|(s, t)| s * t).sum();
        energies.push(e);
    }
    energies
}

/// ln Z(J, h) by exact enumeration over the 2^n states.
pub fn sk_log_partition(params: &SkParams) -> Result<f64, SkError> {
    check_budget(params.n)?;
    Ok(log_sum_exp(&state_energies(params)))
}

/// Total log-likelihood of a sample:
/// N ( sum_i h_i m_i + sum_{i<j} J_ij c_ij - ln Z ).
pub fn sk_log_likelihood(sample: &SpinSample, params: &SkParams) -> Result<f64, SkError> {
    if sample.n_units() != params.n {
        return Err(SkError::Shape(format!(
            "sample has {} units, params have {}",
            sample.n_units(),
            params.n
        )));
    }
    let moments = SkMoments::from_sample(sample);
    sk_log_likelihood_moments(&moments, sample.len() as u64, params)
}

/// Same likelihood from precomputed moments.
pub fn sk_log_likelihood_moments(
    moments: &SkMoments,
    n_obs: u64,
    params: &SkParams,
) -> Result<f64, SkError> {
    check_budget(params.n)?;
    let dot = params.to_vector().dot(&moments.to_vector());
    Ok(n_obs as f64 * (dot - sk_log_partition(params)?))
}

/// Model moments <s_i> and <s_i s_j> under the parameters.
pub fn sk_expected_moments(params: &SkParams) -> Result<SkMoments, SkError> {
    check_budget(params.n)?;
    let (mu, _) = model_mean_and_cov(params, false)?;
    let n = params.n;
    let mut m = vec![0.0; n];
    m.copy_from_slice(&mu.as_slice()[..n]);
    let mut c = vec![0.0; n * n];
    let mut idx = n;
    for i in 0..n {
        c[i * n + i] = 1.0;
        for k in (i + 1)..n {
            c[i * n + k] = mu[idx];
            c[k * n + i] = mu[idx];
            idx += 1;
        }
    }
    SkMoments::new(m, c)
}

/// Mean (and optionally covariance) of the sufficient statistics under the
/// model, by enumeration.
fn model_mean_and_cov(
    params: &SkParams,
    with_cov: bool,
) -> Result<(DVector<f64>, Option<DMatrix<f64>>), SkError> {
    let n = params.n;
    let d = param_dim(n);
    let energies = state_energies(params);
    let ln_z = log_sum_exp(&energies);
    let mut mu = DVector::zeros(d);
    let mut second = if with_cov {
        Some(DMatrix::zeros(d, d))
    } else {
        None
    };
    let mut stats = vec![0.0; d];
    for (code, &e) in energies.iter().enumerate() {
        let w = (e - ln_z).exp();
        if w == 0.0 {
            continue;
        }
        stats_of_state(n, code as u32, &mut stats);
        for a in 0..d {
            mu[a] += w * stats[a];
        }
        if let Some(sec) = second.as_mut() {
            for a in 0..d {
                let wa = w * stats[a];
                for b in a..d {
                    sec[(a, b)] += wa * stats[b];
                }
            }
        }
    }
    let cov = second.map(|mut sec| {
        for a in 0..d {
            for b in 0..a {
                sec[(a, b)] = sec[(b, a)];
            }
        }
        &sec - &mu * mu.transpose()
    });
    Ok((mu, cov))
}

const FIT_TOL: f64 = 1e-8;
const FIT_MAX_ITERS: usize = 500;

/// Maximum-likelihood fit of (J, h) to the given moments by damped Newton
/// ascent on the concave per-observation log-likelihood
/// theta . t_data - ln Z(theta). Boundary moments (|m_i| = 1 or |c_ij| = 1)
/// have no finite maximizer and are rejected.
pub fn sk_fit(moments: &SkMoments) -> Result<SkParams, SkError> {
    sk_fit_from(moments, None)
}

/// Fit with a warm start.
pub fn sk_fit_from(moments: &SkMoments, init: Option<&SkParams>) -> Result<SkParams, SkError> {
    let n = moments.n;
    check_budget(n)?;
    if !moments.interior() {
        return Err(SkError::BoundaryMoments);
    }
    let target = moments.to_vector();
    let mut params = match init {
        Some(p) if p.n == n => p.clone(),
        _ => SkParams::zeros(n),
    };
    let obj = |p: &SkParams| -> Result<f64, SkError> {
        Ok(p.to_vector().dot(&target) - sk_log_partition(p)?)
    };
    let mut f = obj(&params)?;
    for _ in 0..FIT_MAX_ITERS {
        let (mu, cov) = model_mean_and_cov(&params, true)?;
        let grad = &target - &mu;
        if grad.amax() < FIT_TOL {
            return Ok(params);
        }
        let cov = cov.expect("requested covariance");
        let dir = newton_direction(&cov, &grad)?;
        // damping: halve until the objective improves
        let theta = params.to_vector();
        let mut alpha = 1.0;
        let mut stepped = false;
        for _ in 0..60 {
            let cand = SkParams::from_vector(n, &(&theta + alpha * &dir));
            let fc = obj(&cand)?;
            if fc > f {
                params = cand;
                f = fc;
                stepped = true;
                break;
            }
            alpha *= 0.5;
        }
        if !stepped {
            // objective saturated at machine precision: take the raw Newton
            // step when it still shrinks the gradient
            let cand = SkParams::from_vector(n, &(&theta + &dir));
            let (mu_c, _) = model_mean_and_cov(&cand, false)?;
            if (&target - &mu_c).amax() < grad.amax() {
                f = obj(&cand)?;
                params = cand;
            } else {
                return Err(SkError::NoConvergence);
            }
        }
    }
    Err(SkError::NoConvergence)
}

fn newton_direction(cov: &DMatrix<f64>, grad: &DVector<f64>) -> Result<DVector<f64>, SkError> {
    let d = cov.nrows();
    let mut ridge = 0.0;
    for _ in 0..8 {
        let mut m = cov.clone();
        for a in 0..d {
            m[(a, a)] += ridge;
        }
        if let Some(chol) = Cholesky::new(m) {
            return Ok(chol.solve(grad));
        }
        ridge = if ridge == 0.0 { 1e-10 } else { ridge * 100.0 };
    }
    // covariance numerically singular: fall back to plain gradient ascent
    Ok(grad.clone())
}
