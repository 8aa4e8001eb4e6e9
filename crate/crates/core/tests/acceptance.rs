//! Acceptance suite: one test per criterion, each printing a pass/fail line
//! with the measured values (run with `--nocapture` to see them all).
//!
//! Criterion 6 is asserted exactly as stated and is expected to fail: the
//! exact single-spin normalizer differs from sqrt(pi N / 2) by the known
//! O(1/sqrt(N)) constant correction (about 5.3e-3 nats at N = 1e4), which
//! exceeds the stated 1e-3 tolerance. The test reports the measured gap.

use std::time::Instant;

use rayon::prelude::*;

use nml_core::dirichlet::{
    nml_log_weight_counts, parametric_complexity, solve_saddle, ComplexityMethod,
    DirichletSpec, ExchangeChain, ExchangeChainConfig, TiltedFrequencyDist,
};
use nml_core::largedev::{
    localization_scan, phi_exact, phi_thermo_integration, PhiExactModel, TiltedSeriesConfig,
};
use nml_core::mcmc::{run_chain, ChainConfig, ParamagnetModel, RbmModel, SkModel};
use nml_core::models::rbm::{CdConfig, HiddenUnits, RbmParams};
use nml_core::models::sk::{sk_expected_moments, sk_fit, SkParams};
use nml_core::numeric::{log_sum_exp, mean_se};
use nml_core::relevance::{
    baseline_curve, baseline_relevance_at, mis_bound_curve, mis_relevance_at, relevance,
    resolution, BaselinePoint, MisPoint,
};
use nml_core::sample::{FrequencyProfile, SpinSample};
use nml_core::spin::{
    paramagnet_complexity, sample_paramagnet_nml, single_spin_log_norm, single_spin_nml_pmf,
    ParamagnetSpec, SpinComplexityMethod,
};

fn report(id: u32, pass: bool, started: Instant, detail: &str) {
    println!(
        "criterion {id:02} {} ({:.2} s): {detail}",
        if pass { "PASS" } else { "FAIL" },
        started.elapsed().as_secs_f64()
    );
}

fn beta_grid(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    (0..=steps)
        .map(|i| {
            let v = lo + (hi - lo) * i as f64 / steps as f64;
            if v.abs() < 1e-12 {
                0.0
            } else {
                v
            }
        })
        .collect()
}

fn log_mu_grid(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    (0..=steps)
        .map(|i| lo * (hi / lo).powf(i as f64 / steps as f64))
        .collect()
}

/// Independent exchange chains, one per repetition.
fn dirichlet_nml_profiles(
    spec: DirichletSpec,
    beta: f64,
    reps: u64,
    seed: u64,
) -> Vec<FrequencyProfile> {
    (0..reps)
        .into_par_iter()
        .map(|rep| {
            let cfg = ExchangeChainConfig::scaled_to(&spec, seed.wrapping_add(rep));
            let mut chain = ExchangeChain::new(spec, beta, cfg.seed);
            chain.run(cfg.burn_in);
            chain.profile()
        })
        .collect()
}

fn standard_baseline(n: u64) -> Vec<BaselinePoint> {
    let boxes: Vec<u64> = (1..=24).map(|i| 2u64 << i).collect();
    baseline_curve(n, &boxes, 8, 4242)
}

fn standard_mis(n: u64) -> Vec<MisPoint> {
    mis_bound_curve(n, &log_mu_grid(0.2, 30.0, 240)).unwrap()
}

/// 1. Exact parametric complexity oracle: e^R = 2.5 for the two-state model
///    at N = 2 and identically for the single spin, to 1e-12.
#[test]
fn criterion_01_exact_complexity_oracle() {
    let t = Instant::now();
    let r_dirichlet =
        parametric_complexity(&DirichletSpec::new(2, 2).unwrap(), ComplexityMethod::Exact, None)
            .unwrap();
    let r_spin = single_spin_log_norm(2);
    let e_dirichlet = r_dirichlet.exp();
    let e_spin = r_spin.exp();
    let pass = (e_dirichlet - 2.5).abs() < 1e-12
        && (e_spin - 2.5).abs() < 1e-12
        && t.elapsed().as_secs_f64() < 1.0;
    report(
        1,
        pass,
        t,
        &format!("e^R = {e_dirichlet:.15} (two-state) / {e_spin:.15} (single spin)"),
    );
    assert!(pass);
}

/// 2. Saddle asymptotics: z*(rho=100) within 10% of 1/(2 rho), var within
///    10% of 2 rho^2; saddle R within 0.05 nats of exact at S=4, N=400.
#[test]
fn criterion_02_saddle_asymptotics() {
    let t = Instant::now();
    let spec = DirichletSpec::new(100, 10_000).unwrap();
    let sol = solve_saddle(&spec, 0.0).unwrap();
    let rho = spec.rho();
    let z_ok = (sol.z_star - 1.0 / (2.0 * rho)).abs() < 0.1 / (2.0 * rho);
    let var_ok = (sol.var_k - 2.0 * rho * rho).abs() < 0.1 * 2.0 * rho * rho;

    let small = DirichletSpec::new(4, 400).unwrap();
    let exact = parametric_complexity(&small, ComplexityMethod::Exact, None).unwrap();
    let saddle = parametric_complexity(&small, ComplexityMethod::Saddle, None).unwrap();
    let gap = (exact - saddle).abs();
    let pass = z_ok && var_ok && gap < 0.05 && t.elapsed().as_secs_f64() < 10.0;
    report(
        2,
        pass,
        t,
        &format!(
            "z* = {:.6} (vs {:.6}), var = {:.0} (vs {:.0}), |R_saddle - R_exact| = {gap:.4}",
            sol.z_star,
            1.0 / (2.0 * rho),
            sol.var_k,
            2.0 * rho * rho
        ),
    );
    assert!(pass);
}

/// 3. Typical-frequency reproduction: 100 NML samples at S=1e3, N=1e4;
///    empirical frequency histogram vs q(k|z*), KS < 0.02.
#[test]
fn criterion_03_frequency_histogram_matches_q() {
    let t = Instant::now();
    let spec = DirichletSpec::new(1000, 10_000).unwrap();
    let profiles = dirichlet_nml_profiles(spec, 0.0, 100, 303);
    let mut hist = vec![0u64; spec.n as usize + 1];
    for p in &profiles {
        let mut occupied = 0u64;
        for (&k, &m) in p.degeneracy() {
            hist[k as usize] += m;
            occupied += m;
        }
        hist[0] += spec.s - occupied;
    }
    let sol = solve_saddle(&spec, 0.0).unwrap();
    let q = TiltedFrequencyDist::new(spec.n, sol.z_star, 0.0).unwrap();
    let total: u64 = hist.iter().sum();
    let mut emp_cdf = 0.0;
    let mut ks = 0.0f64;
    let mut th_cdf = 0.0;
    for (k, &c) in hist.iter().enumerate() {
        emp_cdf += c as f64 / total as f64;
        th_cdf += q.prob(k as u64);
        ks = ks.max((emp_cdf - th_cdf).abs());
    }
    let pass = ks < 0.02 && t.elapsed().as_secs_f64() < 600.0;
    report(3, pass, t, &format!("KS(empirical, q(k|z*)) = {ks:.4}"));
    assert!(pass);
}

/// 4. Relevance of typical samples at matched resolution: at rho >= 10 the
///    mean H[k] reaches 90% of the bound-curve value (capped by the
///    data-processing inequality), and sits strictly above the random
///    baseline. Beds: two-state-family S=100 N=1e4 (rho=100) and paramagnet
///    n=9 (rho=19.5); the pinned paramagnet n=12 instance (rho=2.4, below
///    the rho >= 10 premise of the 90% clause) is checked against the
///    baseline and its ratio reported.
#[test]
fn criterion_04_relevance_near_bound_curve() {
    let t = Instant::now();
    let n = 10_000u64;
    let mis = standard_mis(n);
    let baseline = standard_baseline(n);

    let eval_profiles = |profiles: &[FrequencyProfile]| -> (f64, f64, f64, f64) {
        let hs: Vec<f64> = profiles.iter().map(resolution).collect();
        let hk: Vec<f64> = profiles.iter().map(relevance).collect();
        let (hs_m, _) = mean_se(&hs);
        let (hk_m, hk_se) = mean_se(&hk);
        let bound = mis_relevance_at(&mis, hs_m);
        (hs_m, hk_m, hk_se, bound)
    };

    // Dirichlet bed, rho = 100
    let spec = DirichletSpec::new(100, n).unwrap();
    let profiles = dirichlet_nml_profiles(spec, 0.0, 100, 404);
    let (hs_d, hk_d, hk_d_se, bound_d) = eval_profiles(&profiles);
    let ratio_d = hk_d / bound_d;
    let base_d = baseline_relevance_at(&baseline, hs_d);

    // paramagnet bed with rho >= 10: n = 9 spins
    let collect_spins = |n_spins: usize, reps: u64, seed: u64| -> Vec<FrequencyProfile> {
        (0..reps)
            .into_par_iter()
            .map(|rep| {
                let spec = ParamagnetSpec::new(n_spins, n).unwrap();
                sample_paramagnet_nml(&spec, seed + rep).frequency_profile()
            })
            .collect()
    };
    let (hs_p9, hk_p9, hk_p9_se, bound_p9) = eval_profiles(&collect_spins(9, 50, 505));
    let ratio_p9 = hk_p9 / bound_p9;
    let base_p9 = baseline_relevance_at(&baseline, hs_p9);

    // pinned paramagnet instance n = 12 (rho = 2.4): baseline clause only
    let (hs_p12, hk_p12, hk_p12_se, bound_p12) = eval_profiles(&collect_spins(12, 50, 606));
    let ratio_p12 = hk_p12 / bound_p12;
    let base_p12 = baseline_relevance_at(&baseline, hs_p12);

    let pass = ratio_d >= 0.9
        && ratio_p9 >= 0.9
        && hk_d - base_d > 3.0 * hk_d_se
        && hk_p9 - base_p9 > 3.0 * hk_p9_se
        && hk_p12 - base_p12 > 3.0 * hk_p12_se
        && t.elapsed().as_secs_f64() < 600.0;
    report(
        4,
        pass,
        t,
        &format!(
            "bound ratios: two-state rho=100: {ratio_d:.3}, paramagnet n=9: {ratio_p9:.3}, \
             n=12 (rho<10, informational): {ratio_p12:.3} (bound {bound_p12:.3}); \
             baseline margins (nats): {:.3}, {:.3}, {:.3}",
            hk_d - base_d,
            hk_p9 - base_p9,
            hk_p12 - base_p12
        ),
    );
    assert!(pass);
}

/// 5. Arcsin law: 1e5 single-spin NML draws at N = 1e4; per-bin frequencies
///    vs the arcsin density over 20 equal-probability bins on |m| <= 0.99,
///    sup relative error < 5%.
#[test]
fn criterion_05_arcsin_law() {
    use rand::Rng;
    use rand::SeedableRng;
    let t = Instant::now();
    let n = 10_000u64;
    let pmf = single_spin_nml_pmf(n);
    let mut cdf = Vec::with_capacity(pmf.len());
    let mut acc = 0.0;
    for &p in &pmf {
        acc += p;
        cdf.push(acc);
    }
    let arcsin_cdf = |m: f64| (m.asin() + std::f64::consts::FRAC_PI_2) / std::f64::consts::PI;
    let bins = 20usize;
    let lo = arcsin_cdf(-0.99);
    let hi = arcsin_cdf(0.99);
    // bin edges equally spaced in arcsin mass
    let edges: Vec<f64> = (0..=bins)
        .map(|i| {
            let g = lo + (hi - lo) * i as f64 / bins as f64;
            (std::f64::consts::PI * g - std::f64::consts::FRAC_PI_2).sin()
        })
        .collect();
    let draws = 100_000u64;
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(55_005);
    let mut counts = vec![0u64; bins];
    for _ in 0..draws {
        let u: f64 = rng.gen();
        let l = cdf.partition_point(|&c| c < u) as f64;
        let m = (2.0 * l - n as f64) / n as f64;
        if m.abs() <= 0.99 {
            let idx = edges.partition_point(|&e| e < m).saturating_sub(1).min(bins - 1);
            counts[idx] += 1;
        }
    }
    let mut worst = 0.0f64;
    for (b, &c) in counts.iter().enumerate() {
        let expect = draws as f64 * (arcsin_cdf(edges[b + 1]) - arcsin_cdf(edges[b]));
        worst = worst.max((c as f64 - expect).abs() / expect);
    }
    let pass = worst < 0.05 && t.elapsed().as_secs_f64() < 60.0;
    report(5, pass, t, &format!("sup relative bin error = {worst:.4}"));
    assert!(pass);
}

/// 6. Paramagnet complexity: exact n=1 sum vs (1/2) ln(pi N / 2) at N = 1e4
///    within 1e-3 nats, as stated.
///
/// Expected to fail: the exact normalizer is sqrt(pi N / 2) plus a known
/// constant correction of 2/3 (next order in the Euler-Maclaurin/singularity
/// analysis of the binomial sum), so the gap is ln(1 + (2/3)/sqrt(pi N/2))
/// ~ 5.3e-3 nats at N = 1e4 - five times the stated tolerance. The gap does
/// shrink as O(N^{-1/2}) (checked in the module tests); the stated absolute
/// tolerance at the stated N is not attainable.
#[test]
fn criterion_06_paramagnet_complexity_asymptotics() {
    let t = Instant::now();
    let spec = ParamagnetSpec::new(1, 10_000).unwrap();
    let exact = paramagnet_complexity(&spec, SpinComplexityMethod::Exact);
    let asym = paramagnet_complexity(&spec, SpinComplexityMethod::Asymptotic);
    let gap = (exact - asym).abs();
    let predicted_correction =
        (1.0 + (2.0 / 3.0) / (std::f64::consts::PI * 5_000.0).sqrt()).ln();
    let pass = gap < 1e-3 && t.elapsed().as_secs_f64() < 1.0;
    report(
        6,
        pass,
        t,
        &format!(
            "|R_exact - R_asym| = {gap:.6} nats (stated tolerance 1e-3; known next-order \
             correction predicts {predicted_correction:.6})"
        ),
    );
    assert!(pass);
}

/// 7. Chain correctness oracle: paramagnet n=1, N=4 at beta=0 vs the exact
///    16-sample law, total variation < 0.02 over 1e6 steps, plus a
///    detailed-balance matrix check to 1e-10.
#[test]
fn criterion_07_chain_matches_exact_law() {
    let t = Instant::now();
    let n_obs = 4usize;
    // maximized log-likelihood of a 4-observation single-spin sample
    let max_ll = |code: u32| -> f64 {
        let l = (code & 0xf).count_ones() as u64;
        nml_core::spin::single_spin_max_log_likelihood(n_obs as u64, l)
    };
    let pi: Vec<f64> = {
        let lw: Vec<f64> = (0u32..16).map(max_ll).collect();
        let z = log_sum_exp(&lw);
        lw.iter().map(|&w| (w - z).exp()).collect()
    };

    // detailed balance of the r=1 kernel: T(x->y) = (1/4) min(1, pi_y/pi_x)
    let mut db_err = 0.0f64;
    for x in 0u32..16 {
        for flip in 0..n_obs {
            let y = x ^ (1 << flip);
            let txy = 0.25 * (pi[y as usize] / pi[x as usize]).min(1.0);
            let tyx = 0.25 * (pi[x as usize] / pi[y as usize]).min(1.0);
            db_err = db_err.max((pi[x as usize] * txy - pi[y as usize] * tyx).abs());
        }
    }

    let init = SpinSample::new(1, vec![0, 0, 1, 1]).unwrap();
    let cfg = ChainConfig {
        flips_per_proposal: 1,
        burn_in: 10_000,
        thin: 20,
        steps: 1_010_000,
        beta: 0.0,
        seed: 707,
    };
    let mut model = ParamagnetModel::new();
    let out = run_chain(&mut model, init, &cfg).unwrap();
    let mut visits = [0f64; 16];
    for s in &out.samples {
        let mut code = 0u32;
        for (i, &r) in s.rows().iter().enumerate() {
            code |= (r & 1) << i;
        }
        visits[code as usize] += 1.0;
    }
    let total: f64 = visits.iter().sum();
    let tv: f64 = (0..16)
        .map(|i| (visits[i] / total - pi[i]).abs())
        .sum::<f64>()
        / 2.0;
    let pass = tv < 0.02 && db_err < 1e-10 && t.elapsed().as_secs_f64() < 60.0;
    report(
        7,
        pass,
        t,
        &format!("total variation = {tv:.4}, detailed-balance residual = {db_err:.2e}"),
    );
    assert!(pass);
}

/// 8. Phase-transition sandwich on exact instances: S=2, N in {10,20,40}:
///    (ln S - R)/N <= phi(beta) <= 0 for beta <= 0 to 1e-10, phi(0) = 0,
///    and the discrete second derivative of phi at beta ~ 0 grows with N.
#[test]
fn criterion_08_exact_transition_sandwich() {
    let t = Instant::now();
    let betas = beta_grid(-2.0, 0.5, 50);
    let h = betas[1] - betas[0];
    let mut prev_second = 0.0;
    let mut pass = true;
    let mut details = Vec::new();
    for &n in &[10u64, 20, 40] {
        let spec = DirichletSpec::new(2, n).unwrap();
        let curve = phi_exact(&PhiExactModel::Dirichlet(spec), &betas).unwrap();
        let r = parametric_complexity(&spec, ComplexityMethod::Exact, None).unwrap();
        let lower = (2f64.ln() - r) / n as f64;
        for (i, &b) in betas.iter().enumerate() {
            if b <= 0.0 {
                pass &= curve.phi[i] >= lower - 1e-10 && curve.phi[i] <= 1e-10;
            }
            if b == 0.0 {
                pass &= curve.phi[i].abs() < 1e-12;
            }
        }
        let mut second_at_zero: f64 = 0.0;
        for (i, w) in curve.phi.windows(3).enumerate() {
            if betas[i + 1].abs() <= 2.5 * h {
                second_at_zero = second_at_zero.max((w[2] - 2.0 * w[1] + w[0]) / (h * h));
            }
        }
        pass &= second_at_zero > prev_second;
        details.push(format!("N={n}: phi''(0)~{second_at_zero:.3}"));
        prev_second = second_at_zero;
    }
    pass &= t.elapsed().as_secs_f64() < 60.0;
    report(8, pass, t, &details.join(", "));
    assert!(pass);
}

/// 9. Localization scan: S=100, N in {1e4, 1e5}, beta in [-1, 1]:
///    k_max/N > 0.95 at beta = -1, normalized resolution collapses across
///    beta = 0, and the transition sharpens with N.
#[test]
fn criterion_09_localization_scan() {
    let t = Instant::now();
    let betas = beta_grid(-1.0, 1.0, 20);
    let rows = localization_scan(100, &[10_000, 100_000], &betas, 20, 909).unwrap();
    let get = |n: u64, b: f64| {
        rows.iter()
            .find(|r| r.n_obs == n && (r.beta - b).abs() < 1e-9)
            .unwrap()
    };
    let mut pass = true;
    for &n in &[10_000u64, 100_000] {
        pass &= get(n, -1.0).kmax_frac > 0.95;
        let plateau = get(n, 0.0).resolution_norm;
        pass &= get(n, -0.5).resolution_norm < 0.5 * plateau;
        pass &= get(n, 1.0).resolution_norm >= plateau - 0.02;
        pass &= get(n, -1.0).resolution_norm < 0.1;
    }
    // sharpening: below the transition the larger system is more localized
    let sharpen: f64 = betas
        .iter()
        .filter(|&&b| b < 0.0)
        .map(|&b| get(100_000, b).kmax_frac - get(10_000, b).kmax_frac)
        .sum();
    pass &= sharpen > 0.0;
    pass &= t.elapsed().as_secs_f64() < 2400.0;
    report(
        9,
        pass,
        t,
        &format!(
            "kmax(-1) = {:.3}/{:.3} (N=1e4/1e5), Hs_norm(0) = {:.3}/{:.3}, \
             sharpening sum = {sharpen:.3}",
            get(10_000, -1.0).kmax_frac,
            get(100_000, -1.0).kmax_frac,
            get(10_000, 0.0).resolution_norm,
            get(100_000, 0.0).resolution_norm
        ),
    );
    assert!(pass);
}

/// 10. Thermodynamic integration vs exact: S=2, N=20, 21-point grid on
///     [-1, 1], max |phi_TI - phi_exact| < 3 standard errors.
#[test]
fn criterion_10_thermodynamic_integration() {
    let t = Instant::now();
    let spec = DirichletSpec::new(2, 20).unwrap();
    let betas = beta_grid(-1.0, 1.0, 20);
    let exact = phi_exact(&PhiExactModel::Dirichlet(spec), &betas).unwrap();
    let cfg = TiltedSeriesConfig {
        burn_in: 4000,
        segments: 10,
        records_per_segment: 60,
        thin: 60,
        seed: 1010,
    };
    let ti = phi_thermo_integration(&spec, &betas, &cfg).unwrap();
    let mut worst_sigma = 0.0f64;
    let mut worst_abs = 0.0f64;
    let mut pass = true;
    for i in 0..betas.len() {
        let err = (ti.phi[i] - exact.phi[i]).abs();
        worst_abs = worst_abs.max(err);
        if ti.phi_se[i] > 0.0 {
            let sigmas = err / ti.phi_se[i];
            worst_sigma = worst_sigma.max(sigmas);
            pass &= sigmas < 3.0;
        } else {
            pass &= err == 0.0;
        }
    }
    pass &= t.elapsed().as_secs_f64() < 600.0;
    report(
        10,
        pass,
        t,
        &format!("max |dphi| = {worst_abs:.5}, worst deviation = {worst_sigma:.2} se"),
    );
    assert!(pass);
}

/// 11. Fit oracles: 4-spin pairwise model round-trips moments -> parameters
///     within 1e-6; RBM exact gradient vs central finite differences at
///     (n_v, n_h) = (3, 2), relative error < 1e-5.
#[test]
fn criterion_11_fit_oracles() {
    use rand::Rng;
    use rand::SeedableRng;
    let t = Instant::now();
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(111);
    let n = 4usize;
    let h: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.7..0.7)).collect();
    let mut j = vec![0.0; n * n];
    for i in 0..n {
        for k in (i + 1)..n {
            let v = rng.gen_range(-0.7..0.7);
            j[i * n + k] = v;
            j[k * n + i] = v;
        }
    }
    let truth = SkParams::new(n, h, j).unwrap();
    let moments = sk_expected_moments(&truth).unwrap();
    let fitted = sk_fit(&moments).unwrap();
    let mut sk_err = 0.0f64;
    for i in 0..n {
        sk_err = sk_err.max((fitted.h()[i] - truth.h()[i]).abs());
        for k in 0..n {
            sk_err = sk_err.max((fitted.j(i, k) - truth.j(i, k)).abs());
        }
    }

    let params = RbmParams::new(
        3,
        2,
        vec![0.21, -0.4, 0.1],
        vec![0.3, -0.2],
        vec![0.5, -0.3, 0.2, 0.7, -0.6, 0.05],
        HiddenUnits::Binary01,
    )
    .unwrap();
    let sample = SpinSample::new(3, vec![0b101, 0b010, 0b111, 0b000, 0b110, 0b011]).unwrap();
    let grad = nml_core::models::rbm::rbm_exact_gradient(&sample, &params).unwrap();
    let step = 1e-5;
    let mut rbm_err = 0.0f64;
    let mut check = |apply: &dyn Fn(&mut RbmParams, f64), want: f64| {
        let mut up = params.clone();
        apply(&mut up, step);
        let mut dn = params.clone();
        apply(&mut dn, -step);
        let fd = (nml_core::models::rbm::rbm_log_likelihood(&sample, &up).unwrap()
            - nml_core::models::rbm::rbm_log_likelihood(&sample, &dn).unwrap())
            / (2.0 * step);
        rbm_err = rbm_err.max((fd - want).abs() / want.abs().max(1.0));
    };
    for i in 0..3 {
        check(&move |p: &mut RbmParams, d: f64| p.a_mut()[i] += d, grad.a[i]);
    }
    for jdx in 0..2 {
        check(&move |p: &mut RbmParams, d: f64| p.b_mut()[jdx] += d, grad.b[jdx]);
    }
    for i in 0..3 {
        for jdx in 0..2 {
            check(
                &move |p: &mut RbmParams, d: f64| p.w_mut()[i * 2 + jdx] += d,
                grad.w[i * 2 + jdx],
            );
        }
    }
    let pass = sk_err < 1e-6 && rbm_err < 1e-5 && t.elapsed().as_secs_f64() < 60.0;
    report(
        11,
        pass,
        t,
        &format!("pairwise param error = {sk_err:.2e}, RBM gradient rel error = {rbm_err:.2e}"),
    );
    assert!(pass);
}

/// 12. Interacting-model NML samples at N = 1e3 (pairwise n=5, RBM 6x3):
///     recorded (H[s], H[k]) points lie between the random-baseline and
///     bound curves, with the mean H[k] above the baseline by >= 3 standard
///     errors.
#[test]
fn criterion_12_interacting_model_samples() {
    use rand::Rng;
    use rand::SeedableRng;
    let t = Instant::now();
    let n_obs = 1000usize;
    let mis = standard_mis(n_obs as u64);
    let baseline = standard_baseline(n_obs as u64);
    let logn = (n_obs as f64).ln();

    let evaluate = |records: &[nml_core::mcmc::ChainRecord]| -> (f64, f64, f64, bool) {
        let hs: Vec<f64> = records.iter().map(|r| r.resolution).collect();
        let hk: Vec<f64> = records.iter().map(|r| r.relevance).collect();
        let (hs_m, _) = mean_se(&hs);
        // batch means over 10 segments for an autocorrelation-honest se
        let seg: Vec<f64> = hk
            .chunks(hk.len().div_ceil(10))
            .map(|c| c.iter().sum::<f64>() / c.len() as f64)
            .collect();
        let (hk_m, hk_se) = mean_se(&seg);
        let mut between = true;
        for r in records {
            let lo = baseline_relevance_at(&baseline, r.resolution) - 0.02 * logn;
            let hi = mis_relevance_at(&mis, r.resolution) + 0.02 * logn;
            between &= r.relevance >= lo && r.relevance <= hi;
        }
        let margin = hk_m - baseline_relevance_at(&baseline, hs_m);
        (margin, hk_se, hk_m, between)
    };

    // pairwise model, 5 spins
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(1212);
    let rows: Vec<u32> = (0..n_obs).map(|_| rng.gen_range(0u32..32)).collect();
    let init = SpinSample::new(5, rows).unwrap();
    let mut sk_model = SkModel::new();
    let sk_out = run_chain(
        &mut sk_model,
        init,
        &ChainConfig {
            flips_per_proposal: 2,
            burn_in: 20_000,
            thin: 500,
            steps: 70_000,
            beta: 0.0,
            seed: 121,
        },
    )
    .unwrap();
    let (sk_margin, sk_se, sk_hk, sk_between) = evaluate(&sk_out.records);

    // RBM 6 visible, 3 hidden, short warm-started refits
    let rows: Vec<u32> = (0..n_obs).map(|_| rng.gen_range(0u32..64)).collect();
    let init = SpinSample::new(6, rows).unwrap();
    let cd = CdConfig {
        kappa: 5,
        epsilon: 0.05,
        epochs: 3,
        minibatches: 50,
        persistent: true,
        seed: 22,
    };
    let mut rbm_model = RbmModel::new(
        RbmParams::cd_init(6, 3, HiddenUnits::Binary01, 5).unwrap(),
        cd,
    );
    let rbm_out = run_chain(
        &mut rbm_model,
        init,
        &ChainConfig {
            flips_per_proposal: 2,
            burn_in: 2_000,
            thin: 100,
            steps: 12_000,
            beta: 0.0,
            seed: 122,
        },
    )
    .unwrap();
    let (rbm_margin, rbm_se, rbm_hk, rbm_between) = evaluate(&rbm_out.records);

    let pass = sk_between
        && rbm_between
        && sk_margin > 3.0 * sk_se
        && rbm_margin > 3.0 * rbm_se
        && t.elapsed().as_secs_f64() < 3600.0;
    report(
        12,
        pass,
        t,
        &format!(
            "pairwise: mean H[k] = {sk_hk:.3}, baseline margin {sk_margin:.3} ({:.1} se); \
             RBM: mean H[k] = {rbm_hk:.3}, margin {rbm_margin:.3} ({:.1} se)",
            sk_margin / sk_se.max(1e-12),
            rbm_margin / rbm_se.max(1e-12)
        ),
    );
    assert!(pass);
}
