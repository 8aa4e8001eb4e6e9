//! Independent-spin (paramagnet) model: the exact per-spin NML distribution
//! over the up-spin count, its parametric complexity, and an exact sampler.
//!
//! For one spin observed N times the NML puts weight
//! C(N,l) (l/N)^l (1-l/N)^{N-l} on l up-spins (0^0 := 1; the boundary
//! l in {0, N} has weight 1 even though the fitted field diverges there).
//! A paramagnet of n independent spins factorizes over spins.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

use crate::numeric::{ln_factorial, log_sum_exp, xlnx};
use crate::sample::SpinSample;

#[derive(Debug, Error, PartialEq)]
pub enum SpinError {
    #[error("spin count must be >= 1 and <= {max}", max = crate::sample::MAX_SPIN_UNITS)]
    BadSpinCount,
    #[error("sample size must be >= 1")]
    BadSampleSize,
}

/// n independent spins, each observed N times.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct ParamagnetSpec {
    pub n_spins: usize,
    pub n_obs: u64,
}

impl ParamagnetSpec {
    pub fn new(n_spins: usize, n_obs: u64) -> Result<Self, SpinError> {
        if n_spins == 0 || n_spins > crate::sample::MAX_SPIN_UNITS {
            return Err(SpinError::BadSpinCount);
        }
        if n_obs == 0 {
            return Err(SpinError::BadSampleSize);
        }
        Ok(ParamagnetSpec { n_spins, n_obs })
    }
}

/// Log weights ln[C(N,l) (l/N)^l (1-l/N)^{N-l}] for l = 0..=N.
fn single_spin_log_weights(n_obs: u64) -> Vec<f64> {
    let nf = n_obs as f64;
    (0..=n_obs)
        .map(|l| {
            let lf = l as f64;
            ln_factorial(n_obs) - ln_factorial(l) - ln_factorial(n_obs - l) + xlnx(lf)
                + xlnx(nf - lf)
                - nf * nf.ln()
        })
        .collect()
}

/// Exact single-spin NML pmf over the up-spin count l = 0..=N.
pub fn single_spin_nml_pmf(n_obs: u64) -> Vec<f64> {
    let lw = single_spin_log_weights(n_obs);
    let norm = log_sum_exp(&lw);
    lw.iter().map(|&w| (w - norm).exp()).collect()
}

/// Exact single-spin parametric complexity, ln sum_l of the NML weights.
pub fn single_spin_log_norm(n_obs: u64) -> f64 {
    log_sum_exp(&single_spin_log_weights(n_obs))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpinComplexityMethod {
    Exact,
    Asymptotic,
}

/// Parametric complexity of the n-spin paramagnet in nats:
/// exact n * ln sum_l, or the n * (1/2) ln(pi N / 2) asymptotic.
pub fn paramagnet_complexity(spec: &ParamagnetSpec, method: SpinComplexityMethod) -> f64 {
    match method {
        SpinComplexityMethod::Exact => spec.n_spins as f64 * single_spin_log_norm(spec.n_obs),
        SpinComplexityMethod::Asymptotic => {
            spec.n_spins as f64 * 0.5 * (std::f64::consts::PI * spec.n_obs as f64 / 2.0).ln()
        }
    }
}

/// Exact paramagnet NML sampler: draw the up-spin count l_i of each spin by
/// inverse CDF from the single-spin pmf, then place the l_i up positions
/// uniformly among the N observation slots, independently per spin.
pub fn sample_paramagnet_nml(spec: &ParamagnetSpec, seed: u64) -> SpinSample {
    let pmf = single_spin_nml_pmf(spec.n_obs);
    let mut cdf = Vec::with_capacity(pmf.len());
    let mut acc = 0.0;
    for &p in &pmf {
        acc += p;
        cdf.push(acc);
    }
    let n = spec.n_obs as usize;
    let mut rows = vec![0u32; n];
    let mut slots: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    for spin in 0..spec.n_spins {
        let u: f64 = rng.gen();
        let l = cdf.partition_point(|&c| c < u).min(n);
        slots.shuffle(&mut rng);
        for &slot in &slots[..l] {
            rows[slot] |= 1 << spin;
        }
    }
    SpinSample::new(spec.n_spins, rows).expect("spec is validated")
}

/// Per-spin maximum-likelihood field for magnetization m.
pub fn ml_field(m: f64) -> f64 {
    m.atanh()
}

/// Maximized log-likelihood of an n_obs-observation single-spin sample with
/// l up-spins: N [ (l/N) ln(l/N) + (1-l/N) ln(1-l/N) ] (0 ln 0 = 0).
pub fn single_spin_max_log_likelihood(n_obs: u64, l: u64) -> f64 {
    let nf = n_obs as f64;
    xlnx(l as f64) + xlnx(nf - l as f64) - nf * nf.ln()
}
