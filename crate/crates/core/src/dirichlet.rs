//! The Dirichlet (categorical) model: tilted frequency distribution q_beta(k|z),
//! saddle-point solution, parametric complexity (exact, saddle, asymptotic),
//! and exact samplers of the normalized-maximum-likelihood code.
//!
//! Notation: S states, N observations, rho = N/S. The per-state frequency of
//! typical samples follows q_beta(k|z) = k^{(1-beta)k} e^{-(1+z)k} / (k! NZ)
//! truncated to k in 0..=N (a state cannot occur more than N times), with z
//! fixed by <k> = rho. All weights live in the log domain.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

use crate::numeric::{ln_factorial, LogSumAcc};
use crate::numeric::xlnx;
use crate::sample::FrequencyProfile;

#[derive(Debug, Error, PartialEq)]
pub enum DirichletError {
    #[error("state count must be >= 1")]
    BadStateCount,
    #[error("sample size must be >= 1")]
    BadSampleSize,
    #[error("weight overflow")]
    WeightOverflow,
    #[error("saddle not bracketed")]
    SaddleNotBracketed,
    #[error("enumeration budget exceeded: {required} compositions > budget {budget}")]
    EnumerationBudget { required: u64, budget: u64 },
    #[error("rejection budget exceeded after {tries} tries")]
    RejectionBudget { tries: u64 },
    #[error("profile total {got} does not match spec N = {expected}")]
    ProfileMismatch { got: u64, expected: u64 },
}

/// State-space cardinality S and sample size N; rho = N/S.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct DirichletSpec {
    pub s: u64,
    pub n: u64,
}

impl DirichletSpec {
    pub fn new(s: u64, n: u64) -> Result<Self, DirichletError> {
        if s < 1 {
            return Err(DirichletError::BadStateCount);
        }
        if n < 1 {
            return Err(DirichletError::BadSampleSize);
        }
        Ok(DirichletSpec { s, n })
    }

    pub fn rho(&self) -> f64 {
        self.n as f64 / self.s as f64
    }
}

/// Tabulated q_beta(k|z) over k = 0..=k_max.
#[derive(Debug, Clone)]
pub struct TiltedFrequencyDist {
    z: f64,
    beta: f64,
    log_norm: f64,
    probs: Vec<f64>,
    cdf: Vec<f64>,
    mean: f64,
    variance: f64,
}

impl TiltedFrequencyDist {
    pub fn new(k_max: u64, z: f64, beta: f64) -> Result<Self, DirichletError> {
        let mut log_w = Vec::with_capacity(k_max as usize + 1);
        for k in 0..=k_max {
            let kf = k as f64;
            let lw = (1.0 - beta) * xlnx(kf) - (1.0 + z) * kf - ln_factorial(k);
            if !lw.is_finite() {
                return Err(DirichletError::WeightOverflow);
            }
            log_w.push(lw);
        }
        let log_norm = crate::numeric::log_sum_exp(&log_w);
        if !log_norm.is_finite() {
            return Err(DirichletError::WeightOverflow);
        }
        let probs: Vec<f64> = log_w.iter().map(|&lw| (lw - log_norm).exp()).collect();
        let mut cdf = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for &p in &probs {
            acc += p;
            cdf.push(acc);
        }
        let mean: f64 = probs
            .iter()
            .enumerate()
            .map(|(k, &p)| k as f64 * p)
            .sum();
        let m2: f64 = probs
            .iter()
            .enumerate()
            .map(|(k, &p)| (k as f64) * (k as f64) * p)
            .sum();
        Ok(TiltedFrequencyDist {
            z,
            beta,
            log_norm,
            probs,
            cdf,
            mean,
            variance: m2 - mean * mean,
        })
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn k_max(&self) -> u64 {
        (self.probs.len() - 1) as u64
    }

    /// ln of the normalizer NZ = sum_k k^{(1-beta)k} e^{-(1+z)k} / k!.
    pub fn log_norm(&self) -> f64 {
        self.log_norm
    }

    pub fn prob(&self, k: u64) -> f64 {
        self.probs.get(k as usize).copied().unwrap_or(0.0)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn cumulative(&self, k: u64) -> f64 {
        self.cdf.get(k as usize).copied().unwrap_or(1.0)
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn argmax(&self) -> u64 {
        let mut best = 0usize;
        for (k, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = k;
            }
        }
        best as u64
    }

    /// Inverse-CDF draw.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> u64 {
        let u: f64 = rng.gen();
        self.cdf.partition_point(|&c| c < u) as u64
    }
}

/// q_beta(k|z) normalized over k = 0..=k_max.
pub fn q_of_k(k: u64, z: f64, beta: f64, k_max: u64) -> Result<f64, DirichletError> {
    Ok(TiltedFrequencyDist::new(k_max, z, beta)?.prob(k))
}

/// Solution of <k>_{z,beta} = rho with the truncated tilted distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaddleSolution {
    pub z_star: f64,
    /// ln NZ(z*); the normalizer itself can overflow f64 for beta < 0.
    pub log_normalization: f64,
    pub mean_k: f64,
    pub var_k: f64,
    pub beta: f64,
}

impl SaddleSolution {
    pub fn normalization(&self) -> f64 {
        self.log_normalization.exp()
    }
}

const SADDLE_REL_TOL: f64 = 1e-8;

/// Bracketed bisection on z. <k>_z is strictly decreasing in z, so the root
/// is unique; the bracket is grown geometrically from z = 1/(2 rho).
pub fn solve_saddle(spec: &DirichletSpec, beta: f64) -> Result<SaddleSolution, DirichletError> {
    let rho = spec.rho();
    if !(rho > 0.0) {
        return Err(DirichletError::BadSampleSize);
    }
    if spec.s == 1 {
        // <k> = N is reached only as z -> -inf; no finite saddle exists
        return Err(DirichletError::SaddleNotBracketed);
    }
    let k_max = spec.n;
    let mean_at = |z: f64| -> Result<f64, DirichletError> {
        Ok(TiltedFrequencyDist::new(k_max, z, beta)?.mean())
    };

    let z0 = 1.0 / (2.0 * rho);
    let m0 = mean_at(z0)?;
    let (mut lo, mut hi);
    if m0 > rho {
        // mean too high: z must grow
        lo = z0;
        let mut step = z0.abs().max(0.5);
        loop {
            let cand = lo + step;
            if mean_at(cand)? < rho {
                hi = cand;
                break;
            }
            lo = cand;
            step *= 2.0;
            if step > 1e9 {
                return Err(DirichletError::SaddleNotBracketed);
            }
        }
    } else {
        hi = z0;
        let mut step = z0.abs().max(0.5);
        loop {
            let cand = hi - step;
            if mean_at(cand)? > rho {
                lo = cand;
                break;
            }
            hi = cand;
            step *= 2.0;
            if step > 1e9 {
                return Err(DirichletError::SaddleNotBracketed);
            }
        }
    }

    let mut z = 0.5 * (lo + hi);
    for _ in 0..200 {
        z = 0.5 * (lo + hi);
        let m = mean_at(z)?;
        if (m - rho).abs() < SADDLE_REL_TOL * rho {
            break;
        }
        if m > rho {
            lo = z;
        } else {
            hi = z;
        }
    }
    let dist = TiltedFrequencyDist::new(k_max, z, beta)?;
    if (dist.mean() - rho).abs() >= 10.0 * SADDLE_REL_TOL * rho {
        return Err(DirichletError::SaddleNotBracketed);
    }
    Ok(SaddleSolution {
        z_star: z,
        log_normalization: dist.log_norm(),
        mean_k: dist.mean(),
        var_k: dist.variance(),
        beta,
    })
}

/// Unnormalized log NML weight of a frequency profile:
/// ln[ N!/prod k_s! * prod (k_s/N)^{k_s} ].
pub fn nml_log_weight(profile: &FrequencyProfile) -> f64 {
    let n = profile.n();
    let nf = n as f64;
    let mut acc = ln_factorial(n) - nf * nf.ln();
    for k in profile.positive_counts() {
        acc += xlnx(k as f64) - ln_factorial(k);
    }
    acc
}

/// Same weight from a raw count vector summing to N.
pub fn nml_log_weight_counts(counts: &[u64], n: u64) -> f64 {
    let nf = n as f64;
    let mut acc = ln_factorial(n) - nf * nf.ln();
    for &k in counts {
        acc += xlnx(k as f64) - ln_factorial(k);
    }
    acc
}

/// Coding cost of a profile under a code with parametric complexity `r_nats`:
/// N * H[s] + R.
pub fn coding_cost(profile: &FrequencyProfile, r_nats: f64) -> f64 {
    profile.n() as f64 * crate::relevance::resolution(profile) + r_nats
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComplexityMethod {
    Exact,
    Saddle,
    Asymptotic,
}

pub const DEFAULT_ENUMERATION_BUDGET: u64 = 50_000_000;

/// Number of compositions of n into `parts` ordered non-negative parts,
/// C(n + parts - 1, parts - 1); None on overflow.
pub fn composition_count(n: u64, parts: u64) -> Option<u64> {
    if parts == 0 {
        return Some(0);
    }
    let mut acc: u128 = 1;
    let k = parts - 1;
    for i in 1..=k {
        acc = acc.checked_mul((n + i) as u128)?;
        acc /= i as u128;
        if acc > u64::MAX as u128 {
            return None;
        }
    }
    Some(acc as u64)
}

/// Visit every ordered composition of n into `parts` parts.
pub(crate) fn for_each_composition<F: FnMut(&[u64])>(n: u64, parts: usize, visit: &mut F) {
    let mut counts = vec![0u64; parts];
    fn rec<F: FnMut(&[u64])>(counts: &mut Vec<u64>, idx: usize, rem: u64, visit: &mut F) {
        if idx + 1 == counts.len() {
            counts[idx] = rem;
            visit(counts);
            return;
        }
        for k in 0..=rem {
            counts[idx] = k;
            rec(counts, idx + 1, rem - k, visit);
        }
    }
    rec(&mut counts, 0, n, visit);
}

fn check_budget(spec: &DirichletSpec, budget: u64) -> Result<(), DirichletError> {
    let required = composition_count(spec.n, spec.s).unwrap_or(u64::MAX);
    if required > budget {
        return Err(DirichletError::EnumerationBudget { required, budget });
    }
    Ok(())
}

/// Parametric complexity R in nats.
///
/// * `Exact`: brute-force sum over all frequency profiles (multinomial
///   multiplicities included), subject to the composition budget.
/// * `Saddle`: Gaussian integration around the saddle point,
///   R = ln sqrt(rho) + S Phi(z*) - ln sqrt(var_k), Phi(z) = rho z + ln NZ(z).
/// * `Asymptotic`: (S/2)(1 + ln rho) - (1/2) ln(2 rho), valid for rho >> 1.
pub fn parametric_complexity(
    spec: &DirichletSpec,
    method: ComplexityMethod,
    budget: Option<u64>,
) -> Result<f64, DirichletError> {
    match method {
        ComplexityMethod::Exact => {
            let budget = budget.unwrap_or(DEFAULT_ENUMERATION_BUDGET);
            check_budget(spec, budget)?;
            let n = spec.n;
            let nf = n as f64;
            // per-part term: k ln k - ln k!
            let t: Vec<f64> = (0..=n)
                .map(|k| xlnx(k as f64) - ln_factorial(k))
                .collect();
            let mut acc = LogSumAcc::new();
            for_each_composition(n, spec.s as usize, &mut |counts| {
                let mut term = 0.0;
                for &k in counts {
                    term += t[k as usize];
                }
                acc.add(term);
            });
            Ok(ln_factorial(n) - nf * nf.ln() + acc.value())
        }
        ComplexityMethod::Saddle => {
            let sol = solve_saddle(spec, 0.0)?;
            let rho = spec.rho();
            let phi = rho * sol.z_star + sol.log_normalization;
            Ok(0.5 * rho.ln() + spec.s as f64 * phi - 0.5 * sol.var_k.ln())
        }
        ComplexityMethod::Asymptotic => {
            let rho = spec.rho();
            Ok(spec.s as f64 / 2.0 * (1.0 + rho.ln()) - 0.5 * (2.0 * rho).ln())
        }
    }
}

/// Configuration of the exchange-move Metropolis chain over frequency
/// profiles.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ExchangeChainConfig {
    pub burn_in: u64,
    pub thin: u64,
    pub seed: u64,
}

impl ExchangeChainConfig {
    /// Burn-in and thinning proportional to the number of unit transfers
    /// needed to decorrelate a profile of size N.
    pub fn scaled_to(spec: &DirichletSpec, seed: u64) -> Self {
        ExchangeChainConfig {
            burn_in: 40 * spec.n.max(1000),
            thin: 4 * spec.n.max(250),
            seed,
        }
    }
}

/// Metropolis chain over (k_1..k_S) with single-unit exchange moves:
/// pick an ordered pair of distinct states (i, j) uniformly and propose
/// k_i - 1, k_j + 1 (a proposal with k_i = 0 counts as rejected). The
/// proposal is symmetric, so the chain has the tilted NML weight
/// exp(nml_log_weight + beta N H[s]) as its stationary law by detailed
/// balance, with O(1) acceptance-ratio updates.
#[derive(Debug, Clone)]
pub struct ExchangeChain {
    spec: DirichletSpec,
    beta: f64,
    counts: Vec<u64>,
    // v[k] = (1-beta) k ln k - ln k!; linear-in-k terms cancel in moves.
    v: Vec<f64>,
    xln: Vec<f64>,
    sum_klnk: f64,
    degeneracy: BTreeMap<u64, u64>,
    rng: ChaCha12Rng,
    proposed: u64,
    accepted: u64,
}

impl ExchangeChain {
    /// Warm start: draw k_s i.i.d. from q_beta(k|z*) and repair the sum by
    /// random unit moves, so the burn-in only has to erase the O(1/S)
    /// factorization error. Falls back to a near-uniform profile when the
    /// saddle does not exist (S = 1).
    pub fn new(spec: DirichletSpec, beta: f64, seed: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let counts = match solve_saddle(&spec, beta)
            .and_then(|sol| TiltedFrequencyDist::new(spec.n, sol.z_star, beta))
        {
            Ok(dist) => {
                let mut counts: Vec<u64> =
                    (0..spec.s).map(|_| dist.sample(&mut rng)).collect();
                let mut total: u64 = counts.iter().sum();
                while total > spec.n {
                    let i = rng.gen_range(0..spec.s) as usize;
                    if counts[i] > 0 {
                        counts[i] -= 1;
                        total -= 1;
                    }
                }
                while total < spec.n {
                    let i = rng.gen_range(0..spec.s) as usize;
                    if counts[i] < spec.n {
                        counts[i] += 1;
                        total += 1;
                    }
                }
                counts
            }
            Err(_) => {
                let base = spec.n / spec.s;
                let rem = (spec.n % spec.s) as usize;
                (0..spec.s as usize)
                    .map(|i| base + u64::from(i < rem))
                    .collect()
            }
        };
        let chain_seed = rng.gen::<u64>();
        Self::from_counts(spec, beta, counts, chain_seed).expect("warm start sums to N")
    }

    pub fn from_counts(
        spec: DirichletSpec,
        beta: f64,
        counts: Vec<u64>,
        seed: u64,
    ) -> Result<Self, DirichletError> {
        if counts.len() != spec.s as usize {
            return Err(DirichletError::BadStateCount);
        }
        let total: u64 = counts.iter().sum();
        if total != spec.n {
            return Err(DirichletError::ProfileMismatch {
                got: total,
                expected: spec.n,
            });
        }
        let xln: Vec<f64> = (0..=spec.n).map(|k| xlnx(k as f64)).collect();
        let v: Vec<f64> = (0..=spec.n)
            .map(|k| (1.0 - beta) * xln[k as usize] - ln_factorial(k))
            .collect();
        let mut degeneracy: BTreeMap<u64, u64> = BTreeMap::new();
        let mut sum_klnk = 0.0;
        for &k in &counts {
            if k > 0 {
                *degeneracy.entry(k).or_insert(0) += 1;
                sum_klnk += xln[k as usize];
            }
        }
        Ok(ExchangeChain {
            spec,
            beta,
            counts,
            v,
            xln,
            sum_klnk,
            degeneracy,
            rng: ChaCha12Rng::seed_from_u64(seed),
            proposed: 0,
            accepted: 0,
        })
    }

    pub fn spec(&self) -> &DirichletSpec {
        &self.spec
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn step(&mut self) {
        self.proposed += 1;
        let s = self.spec.s;
        let i = self.rng.gen_range(0..s) as usize;
        let mut j = self.rng.gen_range(0..s - 1) as usize;
        if j >= i {
            j += 1;
        }
        let ki = self.counts[i];
        if ki == 0 {
            return;
        }
        let kj = self.counts[j];
        let delta = self.v[(ki - 1) as usize] - self.v[ki as usize]
            + self.v[(kj + 1) as usize]
            - self.v[kj as usize];
        if delta < 0.0 && self.rng.gen::<f64>().ln() >= delta {
            return;
        }
        self.accepted += 1;
        self.counts[i] = ki - 1;
        self.counts[j] = kj + 1;
        self.sum_klnk += self.xln[(ki - 1) as usize] - self.xln[ki as usize]
            + self.xln[(kj + 1) as usize]
            - self.xln[kj as usize];
        self.deg_remove(ki);
        if ki > 1 {
            self.deg_add(ki - 1);
        }
        if kj > 0 {
            self.deg_remove(kj);
        }
        self.deg_add(kj + 1);
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

    pub fn run(&mut self, steps: u64) {
        for _ in 0..steps {
            self.step();
        }
    }

    /// Resolution H[s] of the current profile.
    pub fn resolution(&self) -> f64 {
        let nf = self.spec.n as f64;
        nf.ln() - self.sum_klnk / nf
    }

    /// Relevance H[k] of the current profile.
    pub fn relevance(&self) -> f64 {
        let nf = self.spec.n as f64;
        let mut acc = 0.0;
        for (&k, &m) in &self.degeneracy {
            acc -= xlnx(k as f64 * m as f64 / nf);
        }
        acc
    }

    pub fn max_count(&self) -> u64 {
        self.degeneracy.keys().next_back().copied().unwrap_or(0)
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }

    pub fn profile(&self) -> FrequencyProfile {
        FrequencyProfile::from_index_counts(&self.counts).expect("chain counts are non-empty")
    }

    /// Burn in, then collect `reps` profiles spaced `thin` steps apart.
    pub fn collect_profiles(&mut self, cfg: &ExchangeChainConfig, reps: u64) -> Vec<FrequencyProfile> {
        self.run(cfg.burn_in);
        let mut out = Vec::with_capacity(reps as usize);
        for _ in 0..reps {
            self.run(cfg.thin);
            out.push(self.profile());
        }
        out
    }
}

/// One profile drawn from the tilted NML over profiles via the exchange
/// chain (fresh chain, burn-in from the near-uniform start).
pub fn sample_nml(
    spec: &DirichletSpec,
    beta: f64,
    cfg: &ExchangeChainConfig,
) -> Result<FrequencyProfile, DirichletError> {
    let mut chain = ExchangeChain::new(*spec, beta, cfg.seed);
    chain.run(cfg.burn_in.max(1));
    Ok(chain.profile())
}

pub const DEFAULT_REJECTION_BUDGET: u64 = 2_000_000;

/// Factorized approximate sampler: draw k_s i.i.d. from q_beta(k|z*) and
/// reject unless sum k_s = N. Exact on acceptance only insofar as the
/// factorization holds; used to cross-check the exchange chain.
pub fn sample_nml_factorized(
    spec: &DirichletSpec,
    beta: f64,
    seed: u64,
    max_tries: Option<u64>,
) -> Result<Vec<u64>, DirichletError> {
    let max_tries = max_tries.unwrap_or(DEFAULT_REJECTION_BUDGET);
    let sol = solve_saddle(spec, beta)?;
    let dist = TiltedFrequencyDist::new(spec.n, sol.z_star, beta)?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut counts = vec![0u64; spec.s as usize];
    for tries in 1..=max_tries {
        let mut total: u64 = 0;
        let mut overflow = false;
        for c in counts.iter_mut() {
            let k = dist.sample(&mut rng);
            *c = k;
            total += k;
            if total > spec.n {
                overflow = true;
                break;
            }
        }
        if !overflow && total == spec.n {
            let _ = tries;
            return Ok(counts);
        }
    }
    Err(DirichletError::RejectionBudget { tries: max_tries })
}
