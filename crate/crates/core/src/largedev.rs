//! Large deviations of the coding cost: the scaled cumulant generating
//! function phi(beta) of the resolution under the NML code, its Legendre
//! rate function, thermodynamic integration for instances too large to
//! enumerate, and the localization diagnostics across the beta = 0
//! transition.
//!
//! Conventions: e^{N phi(beta)} = sum_s Pbar(s) e^{beta N H[s]}, so
//! phi(0) = 0, phi is convex and non-decreasing, and E(beta) = phi'(beta)
//! is the mean resolution under the tilted law. The rate function is
//! reported as the decay exponent I(E) = beta E - phi(beta) >= 0 of
//! P{H[s] = E} ~ e^{-N I(E)}.

use rayon::prelude::*;
use thiserror::Error;

use crate::dirichlet::{
    composition_count, for_each_composition, nml_log_weight_counts, DirichletError,
    DirichletSpec, ExchangeChain,
};
use crate::mcmc::{self, ChainConfig, ParamagnetModel};
use crate::numeric::{mean_se, xlnx, LogSumAcc};
use crate::spin::ParamagnetSpec;

#[derive(Debug, Error)]
pub enum LargeDevError {
    #[error("enumeration budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("beta grid must be sorted ascending without duplicates")]
    GridNotSorted,
    #[error("beta grid must contain 0 for thermodynamic integration")]
    GridMissingZero,
    #[error("invalid phi curve")]
    InvalidPhiCurve,
    #[error(transparent)]
    Dirichlet(#[from] DirichletError),
    #[error("chain error: {0}")]
    Chain(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum PhiMethod {
    Exact,
    ThermodynamicIntegration,
}

/// Tabulated (beta, phi, E, I, k_max/N) curve.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiCurve {
    pub beta: Vec<f64>,
    pub phi: Vec<f64>,
    pub phi_se: Vec<f64>,
    pub energy: Vec<f64>,
    pub energy_se: Vec<f64>,
    pub rate: Vec<f64>,
    pub kmax_frac: Vec<f64>,
    pub method: PhiMethod,
}

/// Models small enough for phi by exact enumeration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhiExactModel {
    Dirichlet(DirichletSpec),
    /// Single independent spin observed N times (equivalent to S = 2).
    SingleSpin { n_obs: u64 },
}

const EXACT_MAX_STATES: u64 = 4;
const EXACT_MAX_OBS: u64 = 40;

impl PhiExactModel {
    fn as_dirichlet(&self) -> Result<DirichletSpec, LargeDevError> {
        let spec = match self {
            PhiExactModel::Dirichlet(spec) => *spec,
            PhiExactModel::SingleSpin { n_obs } => {
                DirichletSpec::new(2, *n_obs).map_err(LargeDevError::Dirichlet)?
            }
        };
        if spec.s > EXACT_MAX_STATES || spec.n > EXACT_MAX_OBS {
            return Err(LargeDevError::BudgetExceeded(format!(
                "S = {}, N = {} exceeds S <= {EXACT_MAX_STATES}, N <= {EXACT_MAX_OBS}",
                spec.s, spec.n
            )));
        }
        Ok(spec)
    }
}

struct EnumeratedProfiles {
    log_w: Vec<f64>,    // ln multiplicity * max-likelihood
    resolution: Vec<f64>,
    kmax_frac: Vec<f64>,
    n_obs: u64,
}

fn enumerate_profiles(spec: &DirichletSpec) -> EnumeratedProfiles {
    let n = spec.n;
    let nf = n as f64;
    let count = composition_count(n, spec.s).unwrap_or(u64::MAX) as usize;
    let mut log_w = Vec::with_capacity(count);
    let mut resolution = Vec::with_capacity(count);
    let mut kmax_frac = Vec::with_capacity(count);
    for_each_composition(n, spec.s as usize, &mut |counts| {
        log_w.push(nml_log_weight_counts(counts, n));
        let sum_klnk: f64 = counts.iter().map(|&k| xlnx(k as f64)).sum();
        resolution.push(nf.ln() - sum_klnk / nf);
        kmax_frac.push(*counts.iter().max().unwrap() as f64 / nf);
    });
    EnumeratedProfiles {
        log_w,
        resolution,
        kmax_frac,
        n_obs: n,
    }
}

impl EnumeratedProfiles {
    /// ln sum of tilted weights at the given beta.
    fn log_tilted_sum(&self, beta: f64) -> f64 {
        let nf = self.n_obs as f64;
        let mut acc = LogSumAcc::new();
        for (lw, h) in self.log_w.iter().zip(&self.resolution) {
            acc.add(lw + beta * nf * h);
        }
        acc.value()
    }

    /// Tilted expectations of the resolution and of k_max/N.
    fn tilted_means(&self, beta: f64) -> (f64, f64) {
        let nf = self.n_obs as f64;
        let ln_z = self.log_tilted_sum(beta);
        let mut e = 0.0;
        let mut km = 0.0;
        for ((lw, h), kf) in self
            .log_w
            .iter()
            .zip(&self.resolution)
            .zip(&self.kmax_frac)
        {
            let p = (lw + beta * nf * h - ln_z).exp();
            e += p * h;
            km += p * kf;
        }
        (e, km)
    }

    /// E(beta) through the derivative of the log-sum (a second algebraic
    /// route: exp(ln sum H w_beta - ln sum w_beta)).
    fn energy_by_log_ratio(&self, beta: f64) -> f64 {
        let nf = self.n_obs as f64;
        let ln_z = self.log_tilted_sum(beta);
        let mut num = LogSumAcc::new();
        for (lw, h) in self.log_w.iter().zip(&self.resolution) {
            if *h > 0.0 {
                num.add(h.ln() + lw + beta * nf * h);
            }
        }
        (num.value() - ln_z).exp()
    }
}

/// phi(beta) by exact enumeration over frequency profiles (with multinomial
/// multiplicities), E by analytic differentiation of the same sum, and the
/// rate function by the Legendre relation.
pub fn phi_exact(model: &PhiExactModel, beta_grid: &[f64]) -> Result<PhiCurve, LargeDevError> {
    check_grid_sorted(beta_grid)?;
    let spec = model.as_dirichlet()?;
    let profiles = enumerate_profiles(&spec);
    let nf = spec.n as f64;
    let a0 = profiles.log_tilted_sum(0.0);
    let mut curve = PhiCurve {
        beta: beta_grid.to_vec(),
        phi: Vec::new(),
        phi_se: vec![0.0; beta_grid.len()],
        energy: Vec::new(),
        energy_se: vec![0.0; beta_grid.len()],
        rate: Vec::new(),
        kmax_frac: Vec::new(),
        method: PhiMethod::Exact,
    };
    for &beta in beta_grid {
        let phi = (profiles.log_tilted_sum(beta) - a0) / nf;
        let (e, km) = profiles.tilted_means(beta);
        curve.phi.push(phi);
        curve.energy.push(e);
        curve.rate.push(beta * e - phi);
        curve.kmax_frac.push(km);
    }
    Ok(curve)
}

/// The two algebraic routes to E(beta) on an exact instance (tilted
/// expectation and derivative of the log-sum); they must agree to 1e-10.
pub fn tilted_energy_routes(
    model: &PhiExactModel,
    beta: f64,
) -> Result<(f64, f64), LargeDevError> {
    let spec = model.as_dirichlet()?;
    let profiles = enumerate_profiles(&spec);
    let (e, _) = profiles.tilted_means(beta);
    Ok((e, profiles.energy_by_log_ratio(beta)))
}

fn check_grid_sorted(grid: &[f64]) -> Result<(), LargeDevError> {
    if grid.is_empty() || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(LargeDevError::GridNotSorted);
    }
    Ok(())
}

/// Batch-means estimate of the tilted mean resolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TiltedSeries {
    pub mean: f64,
    pub se: f64,
    pub kmax_frac: f64,
}

/// Chain schedule for one tilted estimate: burn-in, then
/// `segments * records_per_segment` records spaced `thin` steps apart;
/// standard errors by batch means over the segments.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct TiltedSeriesConfig {
    pub burn_in: u64,
    pub segments: u32,
    pub records_per_segment: u32,
    pub thin: u64,
    pub seed: u64,
}

impl TiltedSeriesConfig {
    pub fn scaled_to(n_obs: u64, seed: u64) -> Self {
        TiltedSeriesConfig {
            burn_in: 30 * n_obs.max(100),
            segments: 10,
            records_per_segment: 40,
            thin: (2 * n_obs).max(50),
            seed,
        }
    }
}

/// Anything that can estimate <H[s]> under the tilted law at a given beta.
pub trait TiltedResolutionSampler: Sync {
    fn n_obs(&self) -> u64;
    fn resolution_series(
        &self,
        beta: f64,
        cfg: &TiltedSeriesConfig,
    ) -> Result<TiltedSeries, LargeDevError>;
}

impl TiltedResolutionSampler for DirichletSpec {
    fn n_obs(&self) -> u64 {
        self.n
    }

    fn resolution_series(
        &self,
        beta: f64,
        cfg: &TiltedSeriesConfig,
    ) -> Result<TiltedSeries, LargeDevError> {
        let mut chain = ExchangeChain::new(*self, beta, cfg.seed);
        chain.run(cfg.burn_in);
        let mut segment_means = Vec::with_capacity(cfg.segments as usize);
        let mut kmax_acc = 0.0;
        let mut records = 0u64;
        for _ in 0..cfg.segments {
            let mut acc = 0.0;
            for _ in 0..cfg.records_per_segment {
                chain.run(cfg.thin);
                acc += chain.resolution();
                kmax_acc += chain.max_count() as f64 / self.n as f64;
                records += 1;
            }
            segment_means.push(acc / cfg.records_per_segment as f64);
        }
        let (mean, se) = batch_se(&segment_means);
        Ok(TiltedSeries {
            mean,
            se,
            kmax_frac: kmax_acc / records as f64,
        })
    }
}

impl TiltedResolutionSampler for ParamagnetSpec {
    fn n_obs(&self) -> u64 {
        self.n_obs
    }

    fn resolution_series(
        &self,
        beta: f64,
        cfg: &TiltedSeriesConfig,
    ) -> Result<TiltedSeries, LargeDevError> {
        let steps_per_segment = cfg.records_per_segment as u64 * cfg.thin;
        let chain_cfg = ChainConfig {
            flips_per_proposal: 1,
            burn_in: cfg.burn_in,
            thin: cfg.thin,
            steps: cfg.burn_in + cfg.segments as u64 * steps_per_segment,
            beta,
            seed: cfg.seed,
        };
        // equilibrium start: an exact draw from the untilted paramagnet NML
        let init = crate::spin::sample_paramagnet_nml(self, cfg.seed ^ 0x5eed);
        let mut model = ParamagnetModel::new();
        let out = mcmc::run_chain(&mut model, init, &chain_cfg)
            .map_err(|e| LargeDevError::Chain(e.to_string()))?;
        let mut segment_means = Vec::with_capacity(cfg.segments as usize);
        for seg in out.records.chunks(cfg.records_per_segment as usize) {
            let m: f64 = seg.iter().map(|r| r.resolution).sum::<f64>() / seg.len() as f64;
            segment_means.push(m);
        }
        let (mean, se) = batch_se(&segment_means);
        let kmax = out.records.iter().map(|r| r.kmax_frac).sum::<f64>()
            / out.records.len() as f64;
        Ok(TiltedSeries {
            mean,
            se,
            kmax_frac: kmax,
        })
    }
}

fn batch_se(segment_means: &[f64]) -> (f64, f64) {
    mean_se(segment_means)
}

/// phi(beta) by thermodynamic integration: estimate E(beta') on each grid
/// point with a tilted chain and integrate dphi/dbeta = E by the trapezoid
/// rule from phi(0) = 0. Grid points run independent chains (parallel).
pub fn phi_thermo_integration<S: TiltedResolutionSampler>(
    sampler: &S,
    beta_grid: &[f64],
    cfg: &TiltedSeriesConfig,
) -> Result<PhiCurve, LargeDevError> {
    check_grid_sorted(beta_grid)?;
    let zero_idx = beta_grid
        .iter()
        .position(|&b| b.abs() < 1e-12)
        .ok_or(LargeDevError::GridMissingZero)?;

    let series: Vec<TiltedSeries> = beta_grid
        .par_iter()
        .enumerate()
        .map(|(j, &beta)| {
            let cfg_j = TiltedSeriesConfig {
                seed: cfg.seed.wrapping_add((j as u64).wrapping_mul(0x9e3779b97f4a7c15)),
                ..*cfg
            };
            sampler.resolution_series(beta, &cfg_j)
        })
        .collect::<Result<_, _>>()?;

    let g = beta_grid.len();
    let mut phi = vec![0.0; g];
    let mut phi_se = vec![0.0; g];
    // trapezoid weights of each E_j inside the integral from 0 to beta_k
    for k in 0..g {
        if k == zero_idx {
            continue;
        }
        let (lo, hi, sign) = if k > zero_idx {
            (zero_idx, k, 1.0)
        } else {
            (k, zero_idx, -1.0)
        };
        let mut total = 0.0;
        let mut var = 0.0;
        for j in lo..hi {
            let h = beta_grid[j + 1] - beta_grid[j];
            total += 0.5 * h * (series[j].mean + series[j + 1].mean);
        }
        for j in lo..=hi {
            let left = if j > lo { beta_grid[j] - beta_grid[j - 1] } else { 0.0 };
            let right = if j < hi { beta_grid[j + 1] - beta_grid[j] } else { 0.0 };
            let w = 0.5 * (left + right);
            var += (w * series[j].se).powi(2);
        }
        phi[k] = sign * total;
        phi_se[k] = var.sqrt();
    }

    let energy: Vec<f64> = series.iter().map(|s| s.mean).collect();
    let energy_se: Vec<f64> = series.iter().map(|s| s.se).collect();
    let rate: Vec<f64> = beta_grid
        .iter()
        .zip(energy.iter().zip(&phi))
        .map(|(&b, (&e, &p))| b * e - p)
        .collect();
    Ok(PhiCurve {
        beta: beta_grid.to_vec(),
        phi,
        phi_se,
        energy,
        energy_se,
        rate,
        kmax_frac: series.iter().map(|s| s.kmax_frac).collect(),
        method: PhiMethod::ThermodynamicIntegration,
    })
}

/// Rate-function pairs (E, I(E)) from a phi curve; the curve's phi must be
/// non-decreasing on the grid.
pub fn rate_function(curve: &PhiCurve) -> Result<Vec<(f64, f64)>, LargeDevError> {
    if curve.phi.windows(2).any(|w| w[1] < w[0] - 1e-12) {
        return Err(LargeDevError::InvalidPhiCurve);
    }
    let mut pairs: Vec<(f64, f64)> = curve
        .energy
        .iter()
        .zip(&curve.rate)
        .map(|(&e, &i)| (e, i))
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    Ok(pairs)
}

/// One row of the localization table.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ScanRow {
    pub beta: f64,
    pub n_obs: u64,
    pub resolution_norm: f64,
    pub kmax_frac: f64,
}

/// Localization diagnostics over a (beta, N) grid at fixed S: mean
/// normalized resolution and mean maximal-frequency fraction under the
/// tilted Dirichlet law. Each system anneals downward in beta from the
/// typical (delocalized) phase, so the chain condenses progressively as
/// the tilt strengthens, the same protocol that produces the published
/// curves; rows come back sorted by (N, beta).
pub fn localization_scan(
    s: u64,
    n_list: &[u64],
    beta_grid: &[f64],
    reps: u32,
    seed: u64,
) -> Result<Vec<ScanRow>, LargeDevError> {
    check_grid_sorted(beta_grid)?;
    let reps = reps.max(1);
    let mut rows: Vec<ScanRow> = n_list
        .par_iter()
        .enumerate()
        .map(|(ni, &n)| -> Result<Vec<ScanRow>, LargeDevError> {
            let spec = DirichletSpec::new(s, n)?;
            let nf = n as f64;
            let top_beta = *beta_grid.last().expect("non-empty grid");
            let mut counts = ExchangeChain::new(
                spec,
                top_beta.max(0.0),
                seed.wrapping_add(ni as u64),
            )
            .counts()
            .to_vec();
            let mut out = Vec::with_capacity(beta_grid.len());
            for (bi, &beta) in beta_grid.iter().enumerate().rev() {
                let chain_seed = seed
                    .wrapping_add((ni as u64).wrapping_mul(0x51_7cc1))
                    .wrapping_add((bi as u64).wrapping_mul(0x9e3779b97f4a7c15));
                let mut chain = ExchangeChain::from_counts(spec, beta, counts, chain_seed)?;
                chain.run(30 * n);
                let thin = (2 * n).max(100);
                let mut hs = 0.0;
                let mut km = 0.0;
                for _ in 0..reps {
                    chain.run(thin);
                    hs += chain.resolution();
                    km += chain.max_count() as f64 / nf;
                }
                out.push(ScanRow {
                    beta,
                    n_obs: n,
                    resolution_norm: hs / reps as f64 / nf.ln(),
                    kmax_frac: km / reps as f64,
                });
                counts = chain.counts().to_vec();
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .flatten()
        .collect();
    rows.sort_by(|a, b| {
        a.n_obs
            .cmp(&b.n_obs)
            .then(a.beta.partial_cmp(&b.beta).expect("finite beta grid"))
    });
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..=n)
            .map(|i| {
                let v = lo + (hi - lo) * i as f64 / n as f64;
                if v.abs() < 1e-12 {
                    0.0
                } else {
                    v
                }
            })
            .collect()
    }

    fn closed_form_phi(beta: f64) -> f64 {
        0.5 * (0.8 + 0.2 * 4f64.powf(beta)).ln()
    }

    fn closed_form_energy(beta: f64) -> f64 {
        // d/dbeta of (1/2) ln(0.8 + 0.2 4^beta)
        let p = 4f64.powf(beta);
        0.5 * 0.2 * p * 4f64.ln() / (0.8 + 0.2 * p)
    }

    #[test]
    fn exact_matches_closed_form_s2_n2() {
        let model = PhiExactModel::Dirichlet(DirichletSpec::new(2, 2).unwrap());
        let betas = grid(-1.0, 1.0, 8);
        let curve = phi_exact(&model, &betas).unwrap();
        for (i, &b) in betas.iter().enumerate() {
            assert_relative_eq!(curve.phi[i], closed_form_phi(b), epsilon = 1e-12);
            assert_relative_eq!(curve.energy[i], closed_form_energy(b), epsilon = 1e-12);
            let want_rate = b * closed_form_energy(b) - closed_form_phi(b);
            assert_relative_eq!(curve.rate[i], want_rate, epsilon = 1e-10);
        }
        // E(0) = 0.2 ln 2
        let e0 = closed_form_energy(0.0);
        assert_relative_eq!(e0, 0.2 * 2f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn exact_beta_to_minus_infinity_limit() {
        // only the S localized profiles survive: phi -> (ln S - R)/N
        let model = PhiExactModel::Dirichlet(DirichletSpec::new(2, 2).unwrap());
        let curve = phi_exact(&model, &[-40.0]).unwrap();
        assert_relative_eq!(curve.phi[0], 0.5 * 0.8f64.ln(), epsilon = 1e-10);
    }

    #[test]
    fn exact_bounds_and_convexity() {
        for &(s, n) in &[(2u64, 12u64), (3, 9), (4, 7)] {
            let spec = DirichletSpec::new(s, n).unwrap();
            let model = PhiExactModel::Dirichlet(spec);
            let betas = grid(-2.0, 1.0, 30);
            let curve = phi_exact(&model, &betas).unwrap();
            let r = crate::dirichlet::parametric_complexity(
                &spec,
                crate::dirichlet::ComplexityMethod::Exact,
                None,
            )
            .unwrap();
            let lower = ((s as f64).ln() - r) / n as f64;
            for (i, &b) in betas.iter().enumerate() {
                assert!(curve.phi[i] >= lower - 1e-10, "phi below localized bound");
                if b <= 0.0 {
                    assert!(curve.phi[i] <= 1e-10, "phi positive at beta <= 0");
                }
                assert!(curve.energy[i] >= -1e-12);
                if i > 0 {
                    assert!(curve.phi[i] >= curve.phi[i - 1] - 1e-12, "phi decreasing");
                    assert!(
                        curve.rate[i] >= -1e-10,
                        "rate negative at beta={b}: {}",
                        curve.rate[i]
                    );
                }
            }
            // convexity: discrete second differences non-negative
            for w in curve.phi.windows(3) {
                assert!(w[2] - 2.0 * w[1] + w[0] >= -1e-10);
            }
        }
    }

    #[test]
    fn exact_transition_sharpens_with_n() {
        // discrete second derivative of phi at beta ~ 0 grows with N
        let betas = grid(-0.3, 0.3, 12);
        let h = betas[1] - betas[0];
        let mut prev = 0.0;
        for &n in &[10u64, 20, 40] {
            let model = PhiExactModel::Dirichlet(DirichletSpec::new(2, n).unwrap());
            let curve = phi_exact(&model, &betas).unwrap();
            let mut second_max: f64 = 0.0;
            for w in curve.phi.windows(3) {
                second_max = second_max.max((w[2] - 2.0 * w[1] + w[0]) / (h * h));
            }
            assert!(
                second_max > prev,
                "no sharpening at N={n}: {second_max} <= {prev}"
            );
            prev = second_max;
        }
    }

    #[test]
    fn energy_routes_agree() {
        let model = PhiExactModel::Dirichlet(DirichletSpec::new(3, 11).unwrap());
        for &beta in &[-1.5, -0.2, 0.0, 0.4, 1.0] {
            let (a, b) = tilted_energy_routes(&model, beta).unwrap();
            assert!((a - b).abs() < 1e-10, "beta={beta}: {a} vs {b}");
        }
    }

    #[test]
    fn single_spin_routes_through_two_states() {
        let a = phi_exact(&PhiExactModel::SingleSpin { n_obs: 6 }, &grid(-1.0, 1.0, 4))
            .unwrap();
        let b = phi_exact(
            &PhiExactModel::Dirichlet(DirichletSpec::new(2, 6).unwrap()),
            &grid(-1.0, 1.0, 4),
        )
        .unwrap();
        assert_eq!(a.phi, b.phi);
    }

    #[test]
    fn exact_budget_and_grid_errors() {
        let model = PhiExactModel::Dirichlet(DirichletSpec::new(5, 10).unwrap());
        assert!(matches!(
            phi_exact(&model, &[0.0]).unwrap_err(),
            LargeDevError::BudgetExceeded(_)
        ));
        let ok = PhiExactModel::Dirichlet(DirichletSpec::new(2, 10).unwrap());
        assert!(matches!(
            phi_exact(&ok, &[0.5, 0.2]).unwrap_err(),
            LargeDevError::GridNotSorted
        ));
    }

    #[test]
    fn rate_function_sorted_and_validated() {
        let model = PhiExactModel::Dirichlet(DirichletSpec::new(2, 8).unwrap());
        let curve = phi_exact(&model, &grid(-1.0, 1.0, 10)).unwrap();
        let pairs = rate_function(&curve).unwrap();
        assert!(pairs.windows(2).all(|w| w[1].0 >= w[0].0));
        assert!(pairs.iter().all(|&(_, i)| i >= -1e-10));
        let broken = PhiCurve {
            phi: vec![0.0, -0.5],
            beta: vec![0.0, 0.5],
            phi_se: vec![0.0; 2],
            energy: vec![0.1, 0.2],
            energy_se: vec![0.0; 2],
            rate: vec![0.0; 2],
            kmax_frac: vec![0.0; 2],
            method: PhiMethod::Exact,
        };
        assert!(matches!(
            rate_function(&broken).unwrap_err(),
            LargeDevError::InvalidPhiCurve
        ));
    }

    #[test]
    fn ti_matches_exact_on_small_instance() {
        let spec = DirichletSpec::new(2, 10).unwrap();
        let betas = grid(-1.0, 1.0, 10);
        let exact = phi_exact(&PhiExactModel::Dirichlet(spec), &betas).unwrap();
        let cfg = TiltedSeriesConfig {
            burn_in: 2000,
            segments: 8,
            records_per_segment: 30,
            thin: 25,
            seed: 42,
        };
        let ti = phi_thermo_integration(&spec, &betas, &cfg).unwrap();
        let zero = betas.iter().position(|&b| b == 0.0).unwrap();
        assert_eq!(ti.phi[zero], 0.0);
        for i in 0..betas.len() {
            let tol = (3.0 * ti.phi_se[i]).max(0.01);
            assert!(
                (ti.phi[i] - exact.phi[i]).abs() < tol,
                "beta={}: ti={} exact={} se={}",
                betas[i],
                ti.phi[i],
                exact.phi[i],
                ti.phi_se[i]
            );
        }
    }

    #[test]
    fn ti_requires_zero_in_grid() {
        let spec = DirichletSpec::new(2, 10).unwrap();
        let cfg = TiltedSeriesConfig::scaled_to(10, 1);
        assert!(matches!(
            phi_thermo_integration(&spec, &[0.5, 1.0], &cfg).unwrap_err(),
            LargeDevError::GridMissingZero
        ));
    }

    #[test]
    fn localization_scan_crosses_the_transition() {
        let betas = grid(-1.0, 1.0, 8);
        let rows = localization_scan(10, &[200], &betas, 10, 3).unwrap();
        assert_eq!(rows.len(), betas.len());
        let at = |b: f64| rows.iter().find(|r| (r.beta - b).abs() < 1e-9).unwrap();
        assert!(at(-1.0).kmax_frac > 0.9, "kmax at beta=-1: {}", at(-1.0).kmax_frac);
        assert!(at(-1.0).resolution_norm < 0.2);
        assert!(at(1.0).kmax_frac < 0.5);
        assert!(at(1.0).resolution_norm > at(-1.0).resolution_norm + 0.2);
    }
}
