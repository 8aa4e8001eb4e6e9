//! Metropolis sampler over sample space for any refittable model class:
//! propose spin flips in a few observations, refit the maximum-likelihood
//! parameters, and accept on the maximized-likelihood difference, optionally
//! tilted by exp(beta N H[s]) for coding-cost large deviations.
//!
//! The stationary law is proportional to f(s | theta_hat(s)) e^{beta N H[s]}.
//! Proposals draw r (observation, unit) pairs i.i.d. uniformly; the flip set
//! is symmetric under reversal, so detailed balance holds with acceptance
//! min(1, exp(delta_max_ll + beta * delta(N H[s]))).

use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

use crate::models::sk::{self, SkMoments, SkParams};
use crate::models::rbm::{self, CdConfig, RbmParams};
use crate::numeric::xlnx;
use crate::sample::SpinSample;
use crate::spin::single_spin_max_log_likelihood;

#[derive(Debug, Error)]
pub enum McmcError {
    #[error("bad chain config: {0}")]
    BadConfig(String),
    #[error("unstable refit: {failures} fit failures in {steps} steps")]
    UnstableRefit { failures: u64, steps: u64 },
    #[error("model rejected the initial sample: {0}")]
    BadInit(String),
}

/// A refit that could not be completed; the proposal carrying it is
/// rejected and the chain continues.
#[derive(Debug, Clone)]
pub struct FitFailure(pub String);

/// One flipped (observation, unit) position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Flip {
    pub row: usize,
    pub unit: usize,
}

/// A model class the chain can refit after each proposal.
///
/// Protocol: `init` once, then repeatedly `propose` (the sample already has
/// the flips applied) followed by exactly one of `commit` / `rollback`. On a
/// `propose` error the model must stay in its committed state.
pub trait RefitModel {
    fn name(&self) -> &'static str;
    fn init(&mut self, sample: &SpinSample) -> Result<f64, FitFailure>;
    fn propose(&mut self, sample: &SpinSample, flips: &[Flip]) -> Result<f64, FitFailure>;
    fn commit(&mut self);
    fn rollback(&mut self);
}

/// Chain schedule: r flips per proposal, burn-in, thinning, total steps,
/// tilt beta and RNG seed.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ChainConfig {
    pub flips_per_proposal: u32,
    pub burn_in: u64,
    pub thin: u64,
    pub steps: u64,
    pub beta: f64,
    pub seed: u64,
}

impl ChainConfig {
    fn validate(&self) -> Result<(), McmcError> {
        if self.flips_per_proposal == 0 {
            return Err(McmcError::BadConfig("flips_per_proposal must be >= 1".into()));
        }
        if self.steps <= self.burn_in {
            return Err(McmcError::BadConfig(format!(
                "steps {} must exceed burn_in {}",
                self.steps, self.burn_in
            )));
        }
        if self.thin == 0 {
            return Err(McmcError::BadConfig("thin must be >= 1".into()));
        }
        Ok(())
    }
}

/// Summary statistics recorded along the chain.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ChainRecord {
    pub step: u64,
    pub resolution: f64,
    pub relevance: f64,
    pub kmax_frac: f64,
    pub log_likelihood: f64,
    pub acceptance_rate: f64,
}

#[derive(Debug, Clone)]
pub struct ChainOutput {
    pub records: Vec<ChainRecord>,
    pub samples: Vec<SpinSample>,
    pub acceptance_rate: f64,
    pub fit_failures: u64,
}

/// Live frequency profile of the chain's sample: counts per configuration,
/// degeneracy map and sum of k ln k, all updated in O(log #distinct).
struct ProfileTracker {
    counts: HashMap<u32, u64>,
    degeneracy: BTreeMap<u64, u64>,
    sum_klnk: f64,
    n: u64,
}

impl ProfileTracker {
    fn new(sample: &SpinSample) -> Self {
        let mut counts: HashMap<u32, u64> = HashMap::new();
        for &r in sample.rows() {
            *counts.entry(r).or_insert(0) += 1;
        }
        let mut degeneracy: BTreeMap<u64, u64> = BTreeMap::new();
        let mut sum_klnk = 0.0;
        for &k in counts.values() {
            *degeneracy.entry(k).or_insert(0) += 1;
            sum_klnk += xlnx(k as f64);
        }
        ProfileTracker {
            counts,
            degeneracy,
            sum_klnk,
            n: sample.len() as u64,
        }
    }

    fn move_code(&mut self, old: u32, new: u32) {
        if old == new {
            return;
        }
        let k_old = {
            let e = self.counts.get_mut(&old).expect("tracker out of sync");
            let k = *e;
            *e -= 1;
            if *e == 0 {
                self.counts.remove(&old);
            }
            k
        };
        self.deg_remove(k_old);
        if k_old > 1 {
            self.deg_add(k_old - 1);
        }
        self.sum_klnk += xlnx(k_old as f64 - 1.0) - xlnx(k_old as f64);
        let e = self.counts.entry(new).or_insert(0);
        let k_new = *e;
        *e += 1;
        if k_new > 0 {
            self.deg_remove(k_new);
        }
        self.deg_add(k_new + 1);
        self.sum_klnk += xlnx(k_new as f64 + 1.0) - xlnx(k_new as f64);
    }

    fn deg_add(&mut self, k: u64) {
        *self.degeneracy.entry(k).or_insert(0) += 1;
    }

    fn deg_remove(&mut self, k: u64) {
        let m = self.degeneracy.get_mut(&k).expect("degeneracy out of sync");
        *m -= 1;
        if *m == 0 {
            self.degeneracy.remove(&k);
        }
    }

    fn resolution(&self) -> f64 {
        let nf = self.n as f64;
        nf.ln() - self.sum_klnk / nf
    }

    fn relevance(&self) -> f64 {
        let nf = self.n as f64;
        let mut acc = 0.0;
        for (&k, &m) in &self.degeneracy {
            acc -= xlnx(k as f64 * m as f64 / nf);
        }
        acc
    }

    fn max_count(&self) -> u64 {
        self.degeneracy.keys().next_back().copied().unwrap_or(0)
    }

    /// Recompute sum k ln k exactly, clearing accumulated rounding drift.
    fn refresh(&mut self) {
        self.sum_klnk = self.counts.values().map(|&k| xlnx(k as f64)).sum();
    }
}

/// Run the Metropolis chain from the given initial sample.
pub fn run_chain<M: RefitModel>(
    model: &mut M,
    mut sample: SpinSample,
    cfg: &ChainConfig,
) -> Result<ChainOutput, McmcError> {
    cfg.validate()?;
    let n = sample.len();
    let n_units = sample.n_units();
    let nf = n as f64;
    let mut tracker = ProfileTracker::new(&sample);
    let mut ll = model
        .init(&sample)
        .map_err(|e| McmcError::BadInit(e.0))?;
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
    let mut accepted = 0u64;
    let mut failures = 0u64;
    let mut records = Vec::new();
    let mut samples = Vec::new();
    let mut flips: Vec<Flip> = Vec::with_capacity(cfg.flips_per_proposal as usize);

    for step in 1..=cfg.steps {
        // draw r positions i.i.d. and reduce to the parity flip set
        flips.clear();
        for _ in 0..cfg.flips_per_proposal {
            let f = Flip {
                row: rng.gen_range(0..n),
                unit: rng.gen_range(0..n_units),
            };
            if let Some(pos) = flips.iter().position(|&g| g == f) {
                flips.swap_remove(pos);
            } else {
                flips.push(f);
            }
        }
        if flips.is_empty() {
            // identity proposal: accepted with probability 1
            accepted += 1;
        } else {
            let before = tracker.sum_klnk;
            apply_flips(&mut sample, &mut tracker, &flips);
            match model.propose(&sample, &flips) {
                Err(_) => {
                    failures += 1;
                    apply_flips(&mut sample, &mut tracker, &flips);
                }
                Ok(ll_new) => {
                    // beta * delta(N H[s]) = -beta * delta(sum k ln k)
                    let delta = ll_new - ll - cfg.beta * (tracker.sum_klnk - before);
                    if delta >= 0.0 || rng.gen::<f64>().ln() < delta {
                        model.commit();
                        ll = ll_new;
                        accepted += 1;
                    } else {
                        model.rollback();
                        apply_flips(&mut sample, &mut tracker, &flips);
                    }
                }
            }
        }
        if step > cfg.burn_in && (step - cfg.burn_in) % cfg.thin == 0 {
            tracker.refresh();
            records.push(ChainRecord {
                step,
                resolution: tracker.resolution(),
                relevance: tracker.relevance(),
                kmax_frac: tracker.max_count() as f64 / nf,
                log_likelihood: ll,
                acceptance_rate: accepted as f64 / step as f64,
            });
            samples.push(sample.clone());
        }
    }
    if failures * 10 > cfg.steps {
        return Err(McmcError::UnstableRefit {
            failures,
            steps: cfg.steps,
        });
    }
    Ok(ChainOutput {
        records,
        samples,
        acceptance_rate: accepted as f64 / cfg.steps as f64,
        fit_failures: failures,
    })
}

fn apply_flips(sample: &mut SpinSample, tracker: &mut ProfileTracker, flips: &[Flip]) {
    // group by row so the tracker sees one old->new move per affected row
    let mut i = 0;
    let mut done = vec![false; flips.len()];
    while i < flips.len() {
        if done[i] {
            i += 1;
            continue;
        }
        let row = flips[i].row;
        let old = sample.rows()[row];
        for (j, f) in flips.iter().enumerate().skip(i) {
            if f.row == row {
                sample.flip(row, f.unit);
                done[j] = true;
            }
        }
        let new = sample.rows()[row];
        tracker.move_code(old, new);
        i += 1;
    }
}

/// Outcome of the proposal-size search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TuneOutcome {
    pub r: u32,
    pub acceptance: f64,
    /// Set when the target is unreachable even at r = 1.
    pub warning: bool,
}

/// Double/halve the per-proposal flip count over pilot chains until the
/// measured acceptance rate brackets the target, then return the bracketing
/// r whose acceptance is nearest the target. Acceptance below target even at
/// r = 1 returns r = 1 with a warning.
pub fn tune_r<M: RefitModel>(
    model: &mut M,
    init: &SpinSample,
    target: f64,
    pilot: &ChainConfig,
) -> Result<TuneOutcome, McmcError> {
    if !(target > 0.0 && target < 1.0) {
        return Err(McmcError::BadConfig("target acceptance must be in (0,1)".into()));
    }
    let r_cap = ((init.len() * init.n_units()) as u32).max(1);
    let measure = |model: &mut M, r: u32, salt: u64| -> Result<f64, McmcError> {
        let cfg = ChainConfig {
            flips_per_proposal: r,
            seed: pilot.seed.wrapping_add(salt),
            ..*pilot
        };
        Ok(run_chain(model, init.clone(), &cfg)?.acceptance_rate)
    };
    let r0 = pilot.flips_per_proposal.max(1);
    let mut r = r0;
    let mut acc = measure(model, r, 0)?;
    if acc >= target {
        // acceptance decreases with r: grow until it crosses the target
        let (mut r_lo, mut acc_lo) = (r, acc);
        loop {
            if r >= r_cap {
                // never bracketed (e.g. a degenerate model accepting
                // everything): keep the initial proposal size
                return Ok(TuneOutcome {
                    r: r0,
                    acceptance: acc_lo,
                    warning: false,
                });
            }
            r = (r * 2).min(r_cap);
            acc = measure(model, r, r as u64)?;
            if acc < target {
                let pick_hi = (acc - target).abs() < (acc_lo - target).abs();
                return Ok(TuneOutcome {
                    r: if pick_hi { r } else { r_lo },
                    acceptance: if pick_hi { acc } else { acc_lo },
                    warning: false,
                });
            }
            r_lo = r;
            acc_lo = acc;
        }
    } else {
        let (mut r_hi, mut acc_hi) = (r, acc);
        while r > 1 {
            r /= 2;
            acc = measure(model, r, 1000 + r as u64)?;
            if acc >= target {
                let pick_lo = (acc - target).abs() < (acc_hi - target).abs();
                return Ok(TuneOutcome {
                    r: if pick_lo { r } else { r_hi },
                    acceptance: if pick_lo { acc } else { acc_hi },
                    warning: false,
                });
            }
            r_hi = r;
            acc_hi = acc;
        }
        let _ = acc_hi;
        let _ = r_hi;
        Ok(TuneOutcome {
            r: 1,
            acceptance: acc,
            warning: true,
        })
    }
}

/// Paramagnet handle: the per-spin fit is closed-form (h_i = atanh m_i), so
/// the maximized log-likelihood updates in O(1) per flipped position.
pub struct ParamagnetModel {
    n_obs: u64,
    ups: Vec<u64>,
    ll_units: Vec<f64>,
    total: f64,
    pending: Vec<(usize, u64, f64)>, // (unit, old ups, old ll)
}

impl ParamagnetModel {
    pub fn new() -> Self {
        ParamagnetModel {
            n_obs: 0,
            ups: Vec::new(),
            ll_units: Vec::new(),
            total: 0.0,
            pending: Vec::new(),
        }
    }
}

impl Default for ParamagnetModel {
    fn default() -> Self {
        Self::new()
    }
}

impl RefitModel for ParamagnetModel {
    fn name(&self) -> &'static str {
        "paramagnet"
    }

    fn init(&mut self, sample: &SpinSample) -> Result<f64, FitFailure> {
        self.n_obs = sample.len() as u64;
        self.ups = (0..sample.n_units())
            .map(|u| {
                sample
                    .rows()
                    .iter()
                    .filter(|&&r| r & (1 << u) != 0)
                    .count() as u64
            })
            .collect();
        self.ll_units = self
            .ups
            .iter()
            .map(|&l| single_spin_max_log_likelihood(self.n_obs, l))
            .collect();
        self.total = self.ll_units.iter().sum();
        self.pending.clear();
        Ok(self.total)
    }

    fn propose(&mut self, sample: &SpinSample, flips: &[Flip]) -> Result<f64, FitFailure> {
        self.pending.clear();
        let mut total = self.total;
        for f in flips {
            if !self.pending.iter().any(|p| p.0 == f.unit) {
                self.pending
                    .push((f.unit, self.ups[f.unit], self.ll_units[f.unit]));
            }
            // sample already flipped: the bit holds the new value
            if sample.rows()[f.row] & (1 << f.unit) != 0 {
                self.ups[f.unit] += 1;
            } else {
                self.ups[f.unit] -= 1;
            }
            let new_ll = single_spin_max_log_likelihood(self.n_obs, self.ups[f.unit]);
            total += new_ll - self.ll_units[f.unit];
            self.ll_units[f.unit] = new_ll;
        }
        self.total = total;
        Ok(total)
    }

    fn commit(&mut self) {
        self.pending.clear();
    }

    fn rollback(&mut self) {
        for &(unit, ups, ll) in self.pending.iter().rev() {
            self.total += ll - self.ll_units[unit];
            self.ups[unit] = ups;
            self.ll_units[unit] = ll;
        }
        self.pending.clear();
    }
}

/// Pairwise-model handle: sufficient statistics are updated per flipped row
/// and the fit is warm-started from the previous parameters.
pub struct SkModel {
    n: usize,
    n_obs: u64,
    m_sum: Vec<f64>,
    c_sum: Vec<f64>,
    params: SkParams,
    ll: f64,
    saved: Option<(Vec<f64>, Vec<f64>, SkParams, f64)>,
}

impl SkModel {
    pub fn new() -> Self {
        SkModel {
            n: 0,
            n_obs: 0,
            m_sum: Vec::new(),
            c_sum: Vec::new(),
            params: SkParams::zeros(1),
            ll: 0.0,
            saved: None,
        }
    }

    fn moments(&self) -> Result<SkMoments, FitFailure> {
        let nf = self.n_obs as f64;
        let m: Vec<f64> = self.m_sum.iter().map(|&s| s / nf).collect();
        let mut c = vec![0.0; self.n * self.n];
        for i in 0..self.n {
            c[i * self.n + i] = 1.0;
            for k in (i + 1)..self.n {
                let v = self.c_sum[i * self.n + k] / nf;
                c[i * self.n + k] = v;
                c[k * self.n + i] = v;
            }
        }
        SkMoments::new(m, c).map_err(|e| FitFailure(e.to_string()))
    }

    fn refit(&mut self, warm: Option<&SkParams>) -> Result<f64, FitFailure> {
        let moments = self.moments()?;
        let params = sk::sk_fit_from(&moments, warm).map_err(|e| FitFailure(e.to_string()))?;
        let ll = sk::sk_log_likelihood_moments(&moments, self.n_obs, &params)
            .map_err(|e| FitFailure(e.to_string()))?;
        self.params = params;
        self.ll = ll;
        Ok(ll)
    }

    fn subtract_row(&mut self, code: u32, sign: f64) {
        for i in 0..self.n {
            let si = SpinSample::sign_of(code, i);
            self.m_sum[i] += sign * si;
            for k in (i + 1)..self.n {
                self.c_sum[i * self.n + k] += sign * si * SpinSample::sign_of(code, k);
            }
        }
    }
}

impl Default for SkModel {
    fn default() -> Self {
        Self::new()
    }
}

impl RefitModel for SkModel {
    fn name(&self) -> &'static str {
        "sk"
    }

    fn init(&mut self, sample: &SpinSample) -> Result<f64, FitFailure> {
        self.n = sample.n_units();
        self.n_obs = sample.len() as u64;
        self.m_sum = vec![0.0; self.n];
        self.c_sum = vec![0.0; self.n * self.n];
        for &row in sample.rows() {
            self.subtract_row(row, 1.0);
        }
        self.saved = None;
        self.params = SkParams::zeros(self.n);
        self.refit(None)
    }

    fn propose(&mut self, sample: &SpinSample, flips: &[Flip]) -> Result<f64, FitFailure> {
        let saved = (
            self.m_sum.clone(),
            self.c_sum.clone(),
            self.params.clone(),
            self.ll,
        );
        // one old->new stat update per affected row
        let mut seen: Vec<usize> = Vec::with_capacity(flips.len());
        for f in flips {
            if seen.contains(&f.row) {
                continue;
            }
            seen.push(f.row);
            let new = sample.rows()[f.row];
            let mut mask = 0u32;
            for g in flips {
                if g.row == f.row {
                    mask |= 1 << g.unit;
                }
            }
            let old = new ^ mask;
            self.subtract_row(old, -1.0);
            self.subtract_row(new, 1.0);
        }
        let warm = saved.2.clone();
        match self.refit(Some(&warm)) {
            Ok(ll) => {
                self.saved = Some(saved);
                Ok(ll)
            }
            Err(e) => {
                // restore committed state before surfacing the failure
                self.m_sum = saved.0;
                self.c_sum = saved.1;
                self.params = saved.2;
                self.ll = saved.3;
                Err(e)
            }
        }
    }

    fn commit(&mut self) {
        self.saved = None;
    }

    fn rollback(&mut self) {
        if let Some((m, c, params, ll)) = self.saved.take() {
            self.m_sum = m;
            self.c_sum = c;
            self.params = params;
            self.ll = ll;
        }
    }
}

/// RBM handle: warm-started contrastive-divergence refit with a short
/// schedule. The refit is stochastic and truncated, so stationarity is
/// approximate (exactness claims hold for the paramagnet and pairwise
/// handles, whose refits are exact).
pub struct RbmModel {
    refit_cfg: CdConfig,
    params: Option<RbmParams>,
    ll: f64,
    saved: Option<(RbmParams, f64)>,
    init_params: RbmParams,
    calls: u64,
}

impl RbmModel {
    /// `refit_cfg.epochs` is the per-step warm-start budget (default 50 in
    /// `short_refit`).
    pub fn new(init_params: RbmParams, refit_cfg: CdConfig) -> Self {
        RbmModel {
            refit_cfg,
            params: None,
            ll: 0.0,
            saved: None,
            init_params,
            calls: 0,
        }
    }

    pub fn short_refit(init_params: RbmParams, base: CdConfig) -> Self {
        Self::new(
            init_params,
            CdConfig {
                epochs: 50,
                ..base
            },
        )
    }

    fn fit(&mut self, sample: &SpinSample, warm: &RbmParams, epochs: u32) -> Result<f64, FitFailure> {
        let cfg = CdConfig {
            epochs,
            seed: self.refit_cfg.seed.wrapping_add(self.calls.wrapping_mul(0x9e37)),
            ..self.refit_cfg
        };
        self.calls += 1;
        let params = rbm::rbm_fit_cd(sample, warm, &cfg).map_err(|e| FitFailure(e.to_string()))?;
        let ll = rbm::rbm_log_likelihood(sample, &params)
            .map_err(|e| FitFailure(e.to_string()))?;
        self.params = Some(params);
        self.ll = ll;
        Ok(ll)
    }
}

impl RefitModel for RbmModel {
    fn name(&self) -> &'static str {
        "rbm"
    }

    fn init(&mut self, sample: &SpinSample) -> Result<f64, FitFailure> {
        let warm = self.init_params.clone();
        let epochs = self.refit_cfg.epochs.max(200);
        self.fit(sample, &warm, epochs)
    }

    fn propose(&mut self, sample: &SpinSample, _flips: &[Flip]) -> Result<f64, FitFailure> {
        let warm = self.params.clone().expect("propose before init");
        let prev_ll = self.ll;
        match self.fit(sample, &warm, self.refit_cfg.epochs) {
            Ok(ll) => {
                self.saved = Some((warm, prev_ll));
                Ok(ll)
            }
            Err(e) => {
                self.params = Some(warm);
                self.ll = prev_ll;
                Err(e)
            }
        }
    }

    fn commit(&mut self) {
        self.saved = None;
    }

    fn rollback(&mut self) {
        if let Some((params, ll)) = self.saved.take() {
            self.params = Some(params);
            self.ll = ll;
        }
    }
}
