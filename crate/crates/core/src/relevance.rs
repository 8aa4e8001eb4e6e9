//! Resolution and relevance of a sample, the maximally-informative bound
//! curve, and the balls-in-boxes random baseline.
//!
//! Resolution is the plug-in entropy of the empirical state frequencies,
//!   H[s] = -sum_s (k_s/N) ln(k_s/N),
//! and relevance is the entropy of the frequency-of-frequencies weights,
//!   H[k] = -sum_k (k m_k/N) ln(k m_k/N),
//! both in nats, with 0 ln 0 = 0 throughout.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use std::collections::HashMap;
use thiserror::Error;

use crate::numeric::xlnx;
use crate::sample::FrequencyProfile;

#[derive(Debug, Error, PartialEq)]
pub enum RelevanceError {
    #[error("invalid exponent")]
    InvalidExponent,
    #[error("need at least two observations, got {0}")]
    TooFewObservations(u64),
}

/// Resolution H\[s\] in nats, from the per-state sum of Eq. form
/// -sum_s (k_s/N) ln(k_s/N).
pub fn resolution(profile: &FrequencyProfile) -> f64 {
    let n = profile.n() as f64;
    let mut acc = 0.0;
    for k in profile.positive_counts() {
        acc += xlnx(k as f64);
    }
    n.ln() - acc / n
}

/// Resolution computed from the degeneracy map, -sum_k (k m_k/N) ln(k/N).
/// Kept as an independent algebraic route for validation.
pub fn resolution_from_degeneracy(profile: &FrequencyProfile) -> f64 {
    let n = profile.n() as f64;
    let mut acc = 0.0;
    for (&k, &m) in profile.degeneracy() {
        let kf = k as f64;
        acc -= (kf * m as f64 / n) * (kf / n).ln();
    }
    acc
}

/// Relevance H\[k\] in nats, -sum_k (k m_k/N) ln(k m_k/N), occupied k only.
pub fn relevance(profile: &FrequencyProfile) -> f64 {
    let n = profile.n() as f64;
    let mut acc = 0.0;
    for (&k, &m) in profile.degeneracy() {
        let w = k as f64 * m as f64 / n;
        acc -= xlnx(w);
    }
    acc
}

/// Resolution and relevance of a profile, raw and normalized by ln N.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ResolutionRelevance {
    pub resolution: f64,
    pub relevance: f64,
    pub resolution_norm: f64,
    pub relevance_norm: f64,
}

impl ResolutionRelevance {
    pub fn of(profile: &FrequencyProfile) -> Self {
        let hs = resolution(profile);
        let hk = relevance(profile);
        let logn = (profile.n() as f64).ln();
        let (rn, kn) = if logn > 0.0 {
            (hs / logn, hk / logn)
        } else {
            (0.0, 0.0)
        };
        ResolutionRelevance {
            resolution: hs,
            relevance: hk,
            resolution_norm: rn,
            relevance_norm: kn,
        }
    }
}

/// One point of the maximally-informative bound curve.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct MisPoint {
    pub mu: f64,
    pub resolution: f64,
    pub relevance: f64,
}

/// Bound curve traced by the power-law degeneracy m_k = c k^(-1-mu) over
/// k = 1..N (continuous relaxation, real-valued m_k), with c fixed by
/// sum_k k m_k = N. Larger mu concentrates the degeneracy on k = 1
/// (all states singletons), i.e. moves the point toward the
/// high-resolution end; points come out sorted by mu as given.
pub fn mis_bound_curve(n: u64, mu_grid: &[f64]) -> Result<Vec<MisPoint>, RelevanceError> {
    if n < 2 {
        return Err(RelevanceError::TooFewObservations(n));
    }
    if mu_grid.iter().any(|&mu| !(mu > 0.0)) {
        return Err(RelevanceError::InvalidExponent);
    }
    let nf = n as f64;
    let lnk: Vec<f64> = (1..=n).map(|k| (k as f64).ln()).collect();
    Ok(mu_grid
        .iter()
        .map(|&mu| {
            // w_k = k m_k / N = (c/N) k^{-mu}; normalize sum_k w_k * N = N.
            let mut norm = 0.0;
            for l in &lnk {
                norm += (-mu * l).exp();
            }
            let c_over_n = 1.0 / norm;
            let mut hs = 0.0;
            let mut hk = 0.0;
            for l in &lnk {
                let w = c_over_n * (-mu * l).exp();
                hs -= w * (l - nf.ln());
                hk -= w * w.ln();
            }
            MisPoint {
                mu,
                resolution: hs,
                relevance: hk,
            }
        })
        .collect())
}

/// Relevance of the bound curve at a matched resolution, interpolated
/// linearly and capped at the data-processing bound H[k] <= H[s].
pub fn mis_relevance_at(curve: &[MisPoint], resolution: f64) -> f64 {
    let mut pts: Vec<(f64, f64)> = curve
        .iter()
        .map(|p| (p.resolution, p.relevance))
        .collect();
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    crate::numeric::interp_sorted(&xs, &ys, resolution).min(resolution)
}

/// Mean (resolution, relevance) of N balls thrown independently and
/// uniformly into L boxes, averaged over `reps` repetitions. Each
/// repetition uses its own RNG stream, so the result does not depend on
/// evaluation order.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct BaselinePoint {
    pub boxes: u64,
    pub resolution: f64,
    pub relevance: f64,
}

pub fn random_baseline(n: u64, boxes: u64, reps: u32, seed: u64) -> BaselinePoint {
    assert!(n >= 1 && boxes >= 1 && reps >= 1);
    let sums: Vec<(f64, f64)> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            rng.set_stream(rep as u64 + 1);
            let mut occupancy: HashMap<u64, u64> = HashMap::new();
            for _ in 0..n {
                let b = rng.gen_range(0..boxes);
                *occupancy.entry(b).or_insert(0) += 1;
            }
            let counts: Vec<u64> = occupancy.into_values().collect();
            let nf = n as f64;
            let mut hs = nf.ln();
            let mut deg: HashMap<u64, u64> = HashMap::new();
            for &k in &counts {
                hs -= xlnx(k as f64) / nf;
                *deg.entry(k).or_insert(0) += 1;
            }
            let mut hk = 0.0;
            for (&k, &m) in &deg {
                hk -= xlnx(k as f64 * m as f64 / nf);
            }
            (hs, hk)
        })
        .collect();
    let r = reps as f64;
    BaselinePoint {
        boxes,
        resolution: sums.iter().map(|p| p.0).sum::<f64>() / r,
        relevance: sums.iter().map(|p| p.1).sum::<f64>() / r,
    }
}

/// Baseline curve over a grid of box counts; points sorted by resolution.
pub fn baseline_curve(n: u64, box_grid: &[u64], reps: u32, seed: u64) -> Vec<BaselinePoint> {
    let mut pts: Vec<BaselinePoint> = box_grid
        .iter()
        .map(|&l| random_baseline(n, l, reps, seed ^ l))
        .collect();
    pts.sort_by(|a, b| a.resolution.partial_cmp(&b.resolution).unwrap());
    pts
}

/// Baseline relevance at a matched resolution (linear interpolation).
pub fn baseline_relevance_at(curve: &[BaselinePoint], resolution: f64) -> f64 {
    let xs: Vec<f64> = curve.iter().map(|p| p.resolution).collect();
    let ys: Vec<f64> = curve.iter().map(|p| p.relevance).collect();
    crate::numeric::interp_sorted(&xs, &ys, resolution)
}
