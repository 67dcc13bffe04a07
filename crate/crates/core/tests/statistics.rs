//! Monte Carlo checks of distributional properties.

use explosive_ar::functionals::{functionals, gamma_matrix, xi_matrix, zeta_combination};
use explosive_ar::harness::{run_property_suite, summation_comparison, IDENTITY_PATHS};
use explosive_ar::limits::{ks_distance, median, tail_fraction, CauchyRef};
use explosive_ar::model::effective_params;
use explosive_ar::rng::{replication_seed, stream};
use explosive_ar::{run_campaign, simulate, CampaignConfig, ModelConfig, Noise, Regime, TheoremBranch};
use rand::Rng;

#[test]
fn noise_has_zero_mean_and_variance_sigma_squared() {
    let n = 100_000;
    let sigma = 1.7;
    for noise in Noise::ALL {
        let mut rng = stream(17);
        let xs: Vec<f64> = (0..n).map(|_| noise.sample(&mut rng, sigma)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| x * x).sum::<f64>() / n as f64;
        let s2 = sigma * sigma;
        let fourth = xs.iter().map(|x| x.powi(4)).sum::<f64>() / n as f64;
        let se_mean = sigma / (n as f64).sqrt();
        let se_var = ((fourth - s2 * s2) / n as f64).sqrt();
        assert!(mean.abs() < 5.0 * se_mean, "{noise}: mean {mean}");
        assert!((var - s2).abs() < 5.0 * se_var.max(1e-12), "{noise}: var {var}");
    }
    let mut rng = stream(3);
    assert!((0..1000).all(|_| Noise::Rademacher.sample(&mut rng, 2.0).abs() == 2.0));
    let bound = 2.0 * 3f64.sqrt();
    assert!((0..1000).all(|_| Noise::Uniform.sample(&mut rng, 2.0).abs() <= bound));
}

#[test]
fn paths_grow_like_the_dominant_root() {
    let cfg = ModelConfig::default().with_n(2000);
    let theta = effective_params(&cfg).unwrap().theta;
    let logs: Vec<f64> = (0..50)
        .map(|s| {
            let p = simulate(&cfg, s).unwrap();
            (p.x[2000].abs() / p.x[1000].abs()).ln() / 1000.0
        })
        .collect();
    assert!((median(&logs).unwrap() - theta.ln()).abs() < 0.01 * theta.ln());
}

#[test]
fn phi_xi_eta_covariance_matches_gamma() {
    let cfg = ModelConfig { alpha: 0.5, ..ModelConfig::default().with_n(2000).with_gammas(1.0, 1.0) };
    let reps = 4000;
    let triples: Vec<[f64; 3]> = (0..reps)
        .map(|i| {
            let f = functionals(&simulate(&cfg, replication_seed(5, i)).unwrap());
            [f.phi_theta, f.xi_theta, f.eta_theta]
        })
        .collect();
    let g = gamma_matrix(1.0, 1.0);
    for i in 0..3 {
        for j in 0..3 {
            let m = triples.iter().map(|t| t[i] * t[j]).sum::<f64>() / reps as f64;
            assert!((m - g[i][j]).abs() < 0.05, "({i},{j}) {m} vs {}", g[i][j]);
        }
    }
}

#[test]
fn zeta_variance_near_five_eighths() {
    let cfg = ModelConfig::default().with_n(2000).with_gammas(1.0, 1.0);
    let reps = 10_000;
    let pairs: Vec<(f64, f64)> = (0..reps)
        .map(|i| {
            let f = functionals(&simulate(&cfg, replication_seed(8, i)).unwrap());
            (f.phi_theta, zeta_combination(&f, &cfg).unwrap())
        })
        .collect();
    let x = xi_matrix(1.0, 1.0);
    let var_zeta = pairs.iter().map(|p| p.1 * p.1).sum::<f64>() / reps as f64;
    let cov = pairs.iter().map(|p| p.0 * p.1).sum::<f64>() / reps as f64;
    assert!((var_zeta / x[1][1] - 1.0).abs() < 0.10, "var {var_zeta}");
    assert!((cov / x[0][1] - 1.0).abs() < 0.10, "cov {cov}");
}

fn campaign(model: ModelConfig, branch: TheoremBranch, reps: usize) -> CampaignConfig {
    CampaignConfig {
        replications: reps,
        base_seed: 77,
        workers: 4,
        ..CampaignConfig::new(model, branch)
    }
}

#[test]
fn statistics_have_cauchy_tails() {
    let res = run_campaign(&campaign(ModelConfig::default(), TheoremBranch::T1_1, 10_000)).unwrap();
    let frac = tail_fraction(&res.statistics, &res.reference, 10.0);
    assert!((0.03..=0.10).contains(&frac), "{frac}");
}

#[test]
fn swapping_rates_swaps_branches() {
    // X_k is symmetric in (theta, rho); T1_1 on (2, 1) and T1_2 on (1, 2)
    // see the same path and must agree up to rounding.
    let a = run_campaign(&campaign(ModelConfig::default().with_gammas(2.0, 1.0), TheoremBranch::T1_1, 200)).unwrap();
    let b = run_campaign(&campaign(ModelConfig::default().with_gammas(1.0, 2.0), TheoremBranch::T1_2, 200)).unwrap();
    assert_eq!(a.reference, b.reference);
    for (x, y) in a.statistics.iter().zip(&b.statistics) {
        assert!((x - y).abs() <= 1e-6 * (1.0 + x.abs()), "{x} vs {y}");
    }
}

#[test]
fn mm_statistics_center_at_negated_location() {
    let pp = ModelConfig::default();
    let mm = pp.with_regime(Regime::MM);
    let a = run_campaign(&campaign(pp, TheoremBranch::T1_1, 2000)).unwrap();
    let b = run_campaign(&campaign(mm, TheoremBranch::T1_1, 2000)).unwrap();
    assert_eq!(b.reference.location, -a.reference.location);
    assert_eq!(b.reference.scale, a.reference.scale);
    assert!((b.median().unwrap() - b.reference.location).abs() < 0.1);
    assert!(b.ks.unwrap() < 0.10);
}

#[test]
fn t2_campaign_at_design_point() {
    let cfg = ModelConfig::default().with_regime(Regime::MP);
    let res = run_campaign(&campaign(cfg, TheoremBranch::T2_1, 1000)).unwrap();
    assert!(res.ks.unwrap() < 0.10, "{:?}", res.ks);
    assert_eq!(res.nonfinite_count, 0);
}

#[test]
fn compensated_summation_does_not_worsen_residuals() {
    let (plain, comp) = summation_comparison(11, IDENTITY_PATHS);
    assert!(comp <= plain, "compensated {comp} vs plain {plain}");
}

#[test]
fn property_suites_pass() {
    for suite in ["signflip", "lemma2_distinct", "lemma2_equal", "S_decomp", "P_decomp", "step_Xn1", "tail_index"] {
        let rep = run_property_suite(suite, 1).unwrap();
        assert!(rep.passed, "{suite}: {:?}", rep.checks);
    }
}

fn cauchy_draws(r: &CauchyRef, count: usize, seed: u64) -> Vec<f64> {
    let mut rng = stream(seed);
    (0..count).map(|_| r.quantile(rng.random::<f64>())).collect()
}

#[test]
fn ks_of_reference_draws_is_below_the_critical_value() {
    // 1.36 / sqrt(1000) is the 95% Kolmogorov critical value.
    let r = CauchyRef::new(4.0 / 3.0, 2f64.sqrt() / 3.0).unwrap();
    let below = (0..20)
        .filter(|&s| ks_distance(&cauchy_draws(&r, 1000, s), &r).unwrap() < 0.043)
        .count();
    assert!(below >= 17, "{below}/20");
}

#[test]
fn median_of_reference_draws_is_near_location() {
    let r = CauchyRef::new(-1.0, 0.5).unwrap();
    let near = (0..20)
        .filter(|&s| (median(&cauchy_draws(&r, 1000, 100 + s)).unwrap() - r.location).abs() < 0.1 * r.scale)
        .count();
    assert!(near >= 17, "{near}/20");
}
