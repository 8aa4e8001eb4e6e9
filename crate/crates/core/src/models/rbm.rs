//! Restricted Boltzmann machine with boolean visible units and a layer of
//! hidden units that can follow either the {0,1} or the ±1 convention.
//!
//! The hidden layer is summed out in closed form: each hidden unit
//! contributes softplus(x_j) = ln(1 + e^{x_j}) for {0,1} hiddens or
//! ln 2 cosh(x_j) for ±1 hiddens, with x_j = b_j + sum_i v_i w_ij. The two
//! conventions describe the same family up to the reparametrization
//! (a, b, w) -> (a - w 1, 2b, 2w). Likelihood normalizers are computed by
//! exact enumeration over the visible states (budgeted), and fitting uses
//! (persistent) contrastive divergence with sigmoid conditionals.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::log_sum_exp;
use crate::sample::SpinSample;

/// Exact enumeration of the visible space caps the visible unit count.
pub const RBM_MAX_VISIBLE: usize = 20;

#[derive(Debug, Error, PartialEq)]
pub enum RbmError {
    #[error("visible state space too large: n_v = {0} exceeds {RBM_MAX_VISIBLE}")]
    StateSpaceTooLarge(usize),
    #[error("parameter shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite parameter value")]
    NonFinite,
    #[error("training diverged")]
    TrainingDiverged,
}

/// Hidden-unit value convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum HiddenUnits {
    /// h_j in {0, 1}; hidden term softplus, conditionals sigmoid(x).
    #[serde(rename = "hidden01")]
    #[default]
    Binary01,
    /// h_j in {-1, +1}; hidden term ln 2 cosh, conditionals sigmoid(2x).
    #[serde(rename = "hidden_pm1")]
    PlusMinus1,
}

/// Visible fields a, hidden fields b, couplings w (n_v x n_h row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct RbmParams {
    n_visible: usize,
    n_hidden: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    w: Vec<f64>,
    hidden_units: HiddenUnits,
}

impl RbmParams {
    pub fn new(
        n_visible: usize,
        n_hidden: usize,
        a: Vec<f64>,
        b: Vec<f64>,
        w: Vec<f64>,
        hidden_units: HiddenUnits,
    ) -> Result<Self, RbmError> {
        if n_visible == 0 || n_hidden == 0 {
            return Err(RbmError::Shape("unit counts must be >= 1".into()));
        }
        if a.len() != n_visible || b.len() != n_hidden || w.len() != n_visible * n_hidden {
            return Err(RbmError::Shape(format!(
                "a {} / b {} / w {} do not match {n_visible} x {n_hidden}",
                a.len(),
                b.len(),
                w.len()
            )));
        }
        if a.iter().chain(b.iter()).chain(w.iter()).any(|v| !v.is_finite()) {
            return Err(RbmError::NonFinite);
        }
        Ok(RbmParams {
            n_visible,
            n_hidden,
            a,
            b,
            w,
            hidden_units,
        })
    }

    /// Standard training start: couplings uniform in [-0.01, 0.01], fields 0.
    pub fn cd_init(
        n_visible: usize,
        n_hidden: usize,
        hidden_units: HiddenUnits,
        seed: u64,
    ) -> Result<Self, RbmError> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let w: Vec<f64> = (0..n_visible * n_hidden)
            .map(|_| rng.gen_range(-0.01..0.01))
            .collect();
        RbmParams::new(
            n_visible,
            n_hidden,
            vec![0.0; n_visible],
            vec![0.0; n_hidden],
            w,
            hidden_units,
        )
    }

    pub fn n_visible(&self) -> usize {
        self.n_visible
    }

    pub fn n_hidden(&self) -> usize {
        self.n_hidden
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn w(&self, i: usize, j: usize) -> f64 {
        self.w[i * self.n_hidden + j]
    }

    pub fn a_mut(&mut self) -> &mut [f64] {
        &mut self.a
    }

    pub fn b_mut(&mut self) -> &mut [f64] {
        &mut self.b
    }

    /// Couplings as a mutable n_v * n_h row-major slice.
    pub fn w_mut(&mut self) -> &mut [f64] {
        &mut self.w
    }

    pub fn hidden_units(&self) -> HiddenUnits {
        self.hidden_units
    }

    /// Map ±1-hidden parameters to the equivalent {0,1}-hidden model.
    pub fn to_binary01(&self) -> RbmParams {
        match self.hidden_units {
            HiddenUnits::Binary01 => self.clone(),
            HiddenUnits::PlusMinus1 => {
                let a: Vec<f64> = (0..self.n_visible)
                    .map(|i| {
                        self.a[i]
                            - (0..self.n_hidden).map(|j| self.w(i, j)).sum::<f64>()
                    })
                    .collect();
                let b: Vec<f64> = self.b.iter().map(|&v| 2.0 * v).collect();
                let w: Vec<f64> = self.w.iter().map(|&v| 2.0 * v).collect();
                RbmParams {
                    n_visible: self.n_visible,
                    n_hidden: self.n_hidden,
                    a,
                    b,
                    w,
                    hidden_units: HiddenUnits::Binary01,
                }
            }
        }
    }

    fn hidden_input(&self, v_code: u32, j: usize) -> f64 {
        let mut x = self.b[j];
        for i in 0..self.n_visible {
            if v_code & (1 << i) != 0 {
                x += self.w[i * self.n_hidden + j];
            }
        }
        x
    }

    /// Unnormalized log-probability of a visible configuration with the
    /// hidden layer summed out.
    fn free_log_weight(&self, v_code: u32) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n_visible {
            if v_code & (1 << i) != 0 {
                acc += self.a[i];
            }
        }
        for j in 0..self.n_hidden {
            let x = self.hidden_input(v_code, j);
            acc += match self.hidden_units {
                HiddenUnits::Binary01 => softplus(x),
                HiddenUnits::PlusMinus1 => ln_2cosh(x),
            };
        }
        acc
    }

    /// Conditional expectation of a hidden unit given the visible layer
    /// (sigmoid(x) for {0,1}, tanh(x) for ±1).
    fn hidden_mean(&self, v_code: u32, j: usize) -> f64 {
        let x = self.hidden_input(v_code, j);
        match self.hidden_units {
            HiddenUnits::Binary01 => sigmoid(x),
            HiddenUnits::PlusMinus1 => x.tanh(),
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

fn ln_2cosh(x: f64) -> f64 {
    x.abs() + (-2.0 * x.abs()).exp().ln_1p()
}

fn check_budget(n_visible: usize) -> Result<(), RbmError> {
    if n_visible > RBM_MAX_VISIBLE {
        return Err(RbmError::StateSpaceTooLarge(n_visible));
    }
    Ok(())
}

/// ln Z over the visible space, hidden layer in closed form.
pub fn rbm_log_partition(params: &RbmParams) -> Result<f64, RbmError> {
    check_budget(params.n_visible)?;
    let weights: Vec<f64> = (0u32..(1 << params.n_visible))
        .map(|v| params.free_log_weight(v))
        .collect();
    Ok(log_sum_exp(&weights))
}

/// Total log-likelihood sum_k ln P(v^{(k)} | params).
pub fn rbm_log_likelihood(sample: &SpinSample, params: &RbmParams) -> Result<f64, RbmError> {
    if sample.n_units() != params.n_visible {
        return Err(RbmError::Shape(format!(
            "sample has {} units, params have {} visible",
            sample.n_units(),
            params.n_visible
        )));
    }
    let ln_z = rbm_log_partition(params)?;
    let mut acc = 0.0;
    for &row in sample.rows() {
        acc += params.free_log_weight(row) - ln_z;
    }
    Ok(acc)
}

/// Total gradient of the log-likelihood, data term minus model term, with
/// the hidden units integrated out (model term by visible enumeration).
#[derive(Debug, Clone, PartialEq)]
pub struct RbmGradient {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub w: Vec<f64>,
}

pub fn rbm_exact_gradient(
    sample: &SpinSample,
    params: &RbmParams,
) -> Result<RbmGradient, RbmError> {
    check_budget(params.n_visible)?;
    let (nv, nh) = (params.n_visible, params.n_hidden);
    let n_obs = sample.len() as f64;
    let mut grad = RbmGradient {
        a: vec![0.0; nv],
        b: vec![0.0; nh],
        w: vec![0.0; nv * nh],
    };
    for &row in sample.rows() {
        accumulate_stats(params, row, 1.0, &mut grad);
    }
    // model expectation over P(v)
    let weights: Vec<f64> = (0u32..(1 << nv))
        .map(|v| params.free_log_weight(v))
        .collect();
    let ln_z = log_sum_exp(&weights);
    for (v, &lw) in weights.iter().enumerate() {
        let p = (lw - ln_z).exp();
        accumulate_stats(params, v as u32, -n_obs * p, &mut grad);
    }
    Ok(grad)
}

fn accumulate_stats(params: &RbmParams, v_code: u32, scale: f64, grad: &mut RbmGradient) {
    let (nv, nh) = (params.n_visible, params.n_hidden);
    for j in 0..nh {
        let hm = params.hidden_mean(v_code, j);
        grad.b[j] += scale * hm;
        for i in 0..nv {
            if v_code & (1 << i) != 0 {
                grad.w[i * nh + j] += scale * hm;
            }
        }
    }
    for i in 0..nv {
        if v_code & (1 << i) != 0 {
            grad.a[i] += scale;
        }
    }
}

/// Contrastive-divergence schedule. Defaults follow the standard recipe:
/// kappa = 10 Gibbs steps, learning rate 0.01, 2500 epochs with 200
/// mini-batches per epoch, persistent chains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdConfig {
    pub kappa: u32,
    pub epsilon: f64,
    pub epochs: u32,
    pub minibatches: u32,
    pub persistent: bool,
    pub seed: u64,
}

impl Default for CdConfig {
    fn default() -> Self {
        CdConfig {
            kappa: 10,
            epsilon: 0.01,
            epochs: 2500,
            minibatches: 200,
            persistent: true,
            seed: 0,
        }
    }
}

fn sample_hidden<R: Rng>(params: &RbmParams, v: u32, rng: &mut R) -> u32 {
    let mut h = 0u32;
    for j in 0..params.n_hidden {
        let x = params.hidden_input(v, j);
        let p_up = match params.hidden_units {
            HiddenUnits::Binary01 => sigmoid(x),
            HiddenUnits::PlusMinus1 => sigmoid(2.0 * x),
        };
        if rng.gen::<f64>() < p_up {
            h |= 1 << j;
        }
    }
    h
}

fn sample_visible<R: Rng>(params: &RbmParams, h: u32, rng: &mut R) -> u32 {
    let mut v = 0u32;
    for i in 0..params.n_visible {
        let mut x = params.a[i];
        for j in 0..params.n_hidden {
            if h & (1 << j) != 0 {
                x += params.w[i * params.n_hidden + j];
            } else if params.hidden_units == HiddenUnits::PlusMinus1 {
                x -= params.w[i * params.n_hidden + j];
            }
        }
        if rng.gen::<f64>() < sigmoid(x) {
            v |= 1 << i;
        }
    }
    v
}

fn hidden_value(hidden_units: HiddenUnits, h: u32, j: usize) -> f64 {
    match hidden_units {
        HiddenUnits::Binary01 => SpinSample::bit_of(h, j),
        HiddenUnits::PlusMinus1 => SpinSample::sign_of(h, j),
    }
}

/// CD_kappa / PCD training. Returns the final parameters.
pub fn rbm_fit_cd(
    sample: &SpinSample,
    init: &RbmParams,
    cfg: &CdConfig,
) -> Result<RbmParams, RbmError> {
    rbm_fit_cd_traced(sample, init, cfg, None).map(|(p, _)| p)
}

/// As `rbm_fit_cd`, additionally recording the exact per-observation
/// log-likelihood every `trace_every` epochs (requires the enumeration
/// budget).
pub fn rbm_fit_cd_traced(
    sample: &SpinSample,
    init: &RbmParams,
    cfg: &CdConfig,
    trace_every: Option<u32>,
) -> Result<(RbmParams, Vec<f64>), RbmError> {
    if sample.n_units() != init.n_visible {
        return Err(RbmError::Shape(format!(
            "sample has {} units, params have {} visible",
            sample.n_units(),
            init.n_visible
        )));
    }
    if cfg.kappa == 0 || !(cfg.epsilon > 0.0) || cfg.minibatches == 0 {
        return Err(RbmError::Shape(
            "kappa >= 1, epsilon > 0 and minibatches >= 1 required".into(),
        ));
    }
    let mut params = init.clone();
    let (nv, nh) = (params.n_visible, params.n_hidden);
    let n_obs = sample.len();
    let batches = (cfg.minibatches as usize).min(n_obs);
    let max_batch = n_obs.div_ceil(batches);
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..n_obs).collect();
    // persistent chains, one visible state per mini-batch slot, random start
    let mut chains: Vec<u32> = (0..max_batch)
        .map(|_| rng.gen_range(0u32..(1 << nv)))
        .collect();
    let mut trace = Vec::new();

    for epoch in 0..cfg.epochs {
        if let Some(every) = trace_every {
            if epoch % every == 0 {
                trace.push(rbm_log_likelihood(sample, &params)? / n_obs as f64);
            }
        }
        use rand::seq::SliceRandom;
        order.shuffle(&mut rng);
        for batch in order.chunks(max_batch) {
            let mut grad = RbmGradient {
                a: vec![0.0; nv],
                b: vec![0.0; nh],
                w: vec![0.0; nv * nh],
            };
            for (slot, &idx) in batch.iter().enumerate() {
                let v0 = sample.rows()[idx];
                let h0 = sample_hidden(&params, v0, &mut rng);
                add_pair_stats(&params, v0, h0, 1.0, &mut grad);
                // negative phase: kappa alternating sweeps
                let mut v = if cfg.persistent { chains[slot] } else { v0 };
                let mut h = sample_hidden(&params, v, &mut rng);
                for _ in 1..cfg.kappa {
                    v = sample_visible(&params, h, &mut rng);
                    h = sample_hidden(&params, v, &mut rng);
                }
                v = sample_visible(&params, h, &mut rng);
                h = sample_hidden(&params, v, &mut rng);
                add_pair_stats(&params, v, h, -1.0, &mut grad);
                if cfg.persistent {
                    chains[slot] = v;
                }
            }
            let scale = cfg.epsilon / batch.len() as f64;
            for i in 0..nv {
                params.a[i] += scale * grad.a[i];
            }
            for j in 0..nh {
                params.b[j] += scale * grad.b[j];
            }
            for k in 0..nv * nh {
                params.w[k] += scale * grad.w[k];
            }
        }
        if params
            .a
            .iter()
            .chain(params.b.iter())
            .chain(params.w.iter())
            .any(|v| !v.is_finite())
        {
            return Err(RbmError::TrainingDiverged);
        }
    }
    Ok((params, trace))
}

fn add_pair_stats(params: &RbmParams, v: u32, h: u32, scale: f64, grad: &mut RbmGradient) {
    let (nv, nh) = (params.n_visible, params.n_hidden);
    for j in 0..nh {
        let hv = hidden_value(params.hidden_units, h, j);
        grad.b[j] += scale * hv;
        for i in 0..nv {
            if v & (1 << i) != 0 {
                grad.w[i * nh + j] += scale * hv;
            }
        }
    }
    for i in 0..nv {
        if v & (1 << i) != 0 {
            grad.a[i] += scale;
        }
    }
}

/// Exact sampling of N visible configurations by inverse CDF over the
/// enumerated visible distribution.
pub fn rbm_sample_visible_exact(
    params: &RbmParams,
    n_obs: u64,
    seed: u64,
) -> Result<SpinSample, RbmError> {
    check_budget(params.n_visible)?;
    let weights: Vec<f64> = (0u32..(1 << params.n_visible))
        .map(|v| params.free_log_weight(v))
        .collect();
    let ln_z = log_sum_exp(&weights);
    let mut cdf = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for &lw in &weights {
        acc += (lw - ln_z).exp();
        cdf.push(acc);
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let rows: Vec<u32> = (0..n_obs)
        .map(|_| {
            let u: f64 = rng.gen();
            cdf.partition_point(|&c| c < u) as u32
        })
        .collect();
    SpinSample::new(params.n_visible, rows).map_err(|e| RbmError::Shape(e.to_string()))
}
