//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fail.
//!
//! Every criterion draws from `root(id)` with a fixed seed, so the
//! numbers below are reproducible run to run and across worker counts.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use statforge::concentration::{
    empirical_tail, er_connectivity, jl_experiment, tail_bound, JLConfig, TailBoundKind, TailSource,
};
use statforge::distributions::total_variation_discrete;
use statforge::estimation::{
    cramer_rao_study, gamma_mle_study, james_stein_study, mean_t_coverage, variance_family_experiment, MleFamily,
};
use statforge::glm::{glm_fit, glm_log_likelihood, glm_simulate, gaussian_design, wald_coverage_study, GlmFamily};
use statforge::hypothesis::{wilks_null_simulation, WilksScenario};
use statforge::regression::{
    lasso_fit, lasso_lambda, ols_study, prediction_error_experiment, soft_threshold, DesignMatrix, LassoOptions,
    Noise, PredictionEstimator,
};
use statforge::stochastic::{
    black_scholes_price, bs_mc_price, bs_pde_residual, feynman_kac_mc, gaussian_concentration_experiment,
    ito_isometry_study, qv_ito_study, BsParams, ConcFunction, Integrand,
};
use statforge::{DistributionSpec, RandomStream, Result};

const SEED: u64 = 20_240_917;

fn root(id: u64) -> RandomStream {
    RandomStream::new(SEED).split(id)
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn phi(x: f64) -> f64 {
    DistributionSpec::Normal { mu: 0.0, sigma2: 1.0 }.cdf(x)
}

fn c01_variance_mse() -> Result<Outcome> {
    let cs = [1.0 / 9.0, 1.0 / 10.0, 1.0 / 11.0];
    let pts = variance_family_experiment(10, &cs, 1.0, 200_000, &root(1))?;
    let rel: Vec<f64> = pts.iter().map(|p| (p.empirical_mse - p.theoretical_mse).abs() / p.theoretical_mse).collect();
    let argmin = (0..3).min_by(|&a, &b| pts[a].empirical_mse.total_cmp(&pts[b].empirical_mse)).unwrap();
    let detail = pts
        .iter()
        .zip(&rel)
        .map(|(p, r)| format!("c=1/{:.0}: {:.5} vs {:.5} ({:.2}%)", 1.0 / p.c, p.empirical_mse, p.theoretical_mse, 100.0 * r))
        .collect::<Vec<_>>()
        .join("; ");
    outcome(rel.iter().all(|&r| r <= 0.02) && argmin == 2, format!("{detail}; argmin c=1/{:.0}", 1.0 / cs[argmin]))
}

fn c02_t_coverage() -> Result<Outcome> {
    let s = mean_t_coverage(5, 0.0, 1.0, 0.05, 100_000, &root(2))?;
    outcome((0.94..=0.96).contains(&s.coverage), format!("coverage {:.4} (se {:.4})", s.coverage, s.std_error))
}

fn c03_cramer_rao() -> Result<Outcome> {
    let s = cramer_rao_study(MleFamily::Bernoulli, 0.3, 50, 100_000, &root(3))?;
    let z = (s.empirical_variance - s.inverse_information) / s.std_error;
    outcome(
        z.abs() <= 3.0,
        format!("var {:.6e} vs 1/I {:.6e}, {:+.2} SE", s.empirical_variance, s.inverse_information, z),
    )
}

fn c04_gamma_mle() -> Result<Outcome> {
    let s = gamma_mle_study(3.0, 2.0, 5000, 500, &root(4))?;
    outcome(
        s.ks_alpha <= 0.05 && s.ks_lambda <= 0.05,
        format!("KS alpha {:.4}, KS lambda {:.4}", s.ks_alpha, s.ks_lambda),
    )
}

fn c05_james_stein() -> Result<Outcome> {
    let s = james_stein_study(&[0.0; 10], 1.0, 100_000, &root(5))?;
    outcome(
        (1.95..=2.05).contains(&s.mse_js),
        format!("mse JS {:.4} (se {:.4}), mse MLE {:.3}", s.mse_js, s.se_js, s.mse_mle),
    )
}

fn c06_jl() -> Result<Outcome> {
    let cfg = JLConfig::new(50, 1000, 0.25, 0.05)?;
    let e = jl_experiment(&cfg, 200, &root(6))?;
    outcome(
        e.success_rate >= 0.95,
        format!("m={}, success {:.3}, mean max distortion {:.4}", cfg.m, e.success_rate, e.mean_max_distortion),
    )
}

fn c07_er_connectivity() -> Result<Outcome> {
    let lo = er_connectivity(2000, 0.7, 200, &root(7).split(0))?;
    let hi = er_connectivity(2000, 1.3, 200, &root(7).split(1))?;
    outcome(
        lo.connected_frequency <= 0.05 && hi.connected_frequency >= 0.8,
        format!("c=0.7: {:.3}; c=1.3: {:.3}", lo.connected_frequency, hi.connected_frequency),
    )
}

fn c08_tail_domination() -> Result<Outcome> {
    let cases = [
        (TailSource::single(DistributionSpec::normal(0.0, 1.0)?), 0.0, TailBoundKind::SubGaussian { sigma: 1.0 }, 4.0),
        (
            TailSource { spec: DistributionSpec::chi_squared(8)?, terms: 1, scale: 1.0 / 8.0 },
            1.0,
            TailBoundKind::ChiSquaredRelative { k: 8 },
            3.0,
        ),
    ];
    let mut pass = true;
    let mut worst = Vec::new();
    for (id, (src, center, kind, t_max)) in cases.iter().enumerate() {
        let grid: Vec<f64> = (1..=20).map(|i| t_max * i as f64 / 20.0).collect();
        let pts = empirical_tail(src, *center, &grid, 1_000_000, &root(8).split(id as u64))?;
        let mut slack = f64::INFINITY;
        for p in &pts {
            let b = tail_bound(kind, p.t)?.clamped;
            let se = p.std_error.max(1e-6);
            slack = slack.min((b - p.frequency) / se);
            pass &= p.frequency <= b + 3.0 * p.std_error;
        }
        worst.push(format!("min (bound - tail)/se {:.1}", slack));
    }
    outcome(pass, format!("normal: {}; chi2_8/8-1: {}", worst[0], worst[1]))
}

fn c09_ols_suite() -> Result<Outcome> {
    let design = gaussian_design(50, 3, &root(9).split(u64::MAX))?;
    let beta = [1.0, 2.0, 0.0, 0.0];
    let s = ols_study(&design, &beta, 1.0, &[2, 3], 0.05, 0.05, 10_000, &root(9))?;
    let beta_ok = (0..4).all(|j| (s.mean_beta[j] - beta[j]).abs() <= 4.0 * s.beta_se[j]);
    let cov_ok = s.coverage.iter().all(|c| (c - 0.95).abs() <= 0.01);
    let f_ok = (s.f_rejection_rate - 0.05).abs() <= 0.007;
    outcome(
        beta_ok && s.sigma2_ks <= 0.02 && cov_ok && f_ok,
        format!(
            "beta ok {beta_ok}; KS {:.4}; coverage {:?}; F size {:.4}",
            s.sigma2_ks,
            s.coverage.iter().map(|c| (c * 1e4).round() / 1e4).collect::<Vec<_>>(),
            s.f_rejection_rate
        ),
    )
}

fn normalized_gaussian(n: usize, p: usize, stream: &RandomStream) -> DMatrix<f64> {
    let mut s = stream.clone();
    let mut x = DMatrix::from_fn(n, p, |_, _| s.normal());
    for mut c in x.column_iter_mut() {
        let scale = (n as f64).sqrt() / c.norm();
        c *= scale;
    }
    x
}

fn c10_lasso() -> Result<Outcome> {
    let (n, p) = (100, 200);
    let x = normalized_gaussian(n, p, &root(10).split(u64::MAX - 1));
    let design = DesignMatrix::new(x, false)?;
    let mut beta = vec![0.0; p];
    beta[..3].copy_from_slice(&[1.5, -1.0, 2.0]);
    let est = PredictionEstimator::Lasso { t: 2.0, c: 1.0, lambda: None, kappa_trials: 20_000 };
    let r = prediction_error_experiment(&beta, &design, &Noise::Normal { sigma: 1.0 }, &est, 200, &root(10))?;
    let bound_ok = r.violation_rate <= r.nominal_violation + 3.0 * r.violation_se;

    // X'X = n I
    let (m, q) = (100, 20);
    let g = normalized_gaussian(m, q, &root(10).split(u64::MAX - 2));
    let xo = g.qr().q() * (m as f64).sqrt();
    let mut s = root(10).split(u64::MAX - 3);
    let y: Vec<f64> = (0..m).map(|_| 2.0 * s.normal()).collect();
    let lam = lasso_lambda(1.0, 1.0, q, m, 2.0);
    let fit = lasso_fit(&DesignMatrix::new(xo.clone(), false)?, &y, lam, &LassoOptions::default())?;
    let z = xo.transpose() * DVector::from_column_slice(&y) / m as f64;
    let oracle_err = (0..q).map(|j| (fit.beta[j] - soft_threshold(z[j], lam)).abs()).fold(0.0, f64::max);
    outcome(
        bound_ok && oracle_err <= 1e-8,
        format!(
            "kappa {:.4}, bound {:.3}, mean error {:.4}, violations {:.3} vs {:.3}; oracle max err {:.1e}",
            r.kappa.unwrap_or(f64::NAN),
            r.bound_value,
            r.mean_error,
            r.violation_rate,
            r.nominal_violation,
            oracle_err
        ),
    )
}

fn c11_glm() -> Result<Outcome> {
    let fam = GlmFamily::BernoulliLogit;
    let x = gaussian_design(2000, 3, &root(11).split(u64::MAX))?;
    let beta = [0.5, 1.0, -0.5, 0.25];
    let y = glm_simulate(&fam, &x, &beta, &mut root(11).split(u64::MAX - 1))?;
    let fit = glm_fit(&fam, &x, &y)?;
    let b: Vec<f64> = fit.beta.iter().copied().collect();
    let h = 1e-3;
    let ll = |v: &[f64]| glm_log_likelihood(&fam, &x, &y, v);
    let k = b.len();
    let mut fd = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            let at = |di: f64, dj: f64| {
                let mut v = b.clone();
                v[i] += di;
                v[j] += dj;
                ll(&v)
            };
            fd[(i, j)] = -(at(h, h)? - at(h, -h)? - at(-h, h)? + at(-h, -h)?) / (4.0 * h * h);
        }
    }
    let hess_rel = (&fd - &fit.fisher_info).norm() / fit.fisher_info.norm();
    let w = wald_coverage_study(&fam, &x, &beta, 0.05, 5000, &root(11))?;
    let cov_ok = w.coverage.iter().all(|c| (c - 0.95).abs() <= 0.015);
    outcome(
        fit.score_residual <= 1e-8 && cov_ok && hess_rel <= 1e-4,
        format!(
            "score residual {:.1e}; coverage {:?}; Hessian rel diff {:.1e}",
            fit.score_residual,
            w.coverage.iter().map(|c| (c * 1e4).round() / 1e4).collect::<Vec<_>>(),
            hess_rel
        ),
    )
}

fn c12_wilks() -> Result<Outcome> {
    let z = wilks_null_simulation(WilksScenario::ZTest, 20, 20_000, &root(12).split(0))?;
    let t = wilks_null_simulation(WilksScenario::TTest, 200, 20_000, &root(12).split(1))?;
    let l = wilks_null_simulation(WilksScenario::LogisticNested, 2000, 5000, &root(12).split(2))?;
    outcome(
        z.ks_distance <= 0.01 && t.ks_distance <= 0.02 && l.ks_distance <= 0.02,
        format!("KS z {:.4}, t {:.4}, logistic {:.4}", z.ks_distance, t.ks_distance, l.ks_distance),
    )
}

fn c13_quadratic_variation() -> Result<Outcome> {
    let s = qv_ito_study(1.0, 100_000, 100, &root(13))?;
    outcome(
        s.mean_abs_qv_error <= 0.02 && s.mean_abs_ito_error <= 0.02,
        format!("mean |QV-1| {:.5}, mean Ito identity error {:.5}", s.mean_abs_qv_error, s.mean_abs_ito_error),
    )
}

fn c14_isometry() -> Result<Outcome> {
    let s = ito_isometry_study(Integrand::Brownian, 1.0, 500, 100_000, &root(14))?;
    let z_mean = s.mean_integral / s.integral_se;
    let z_sq = (s.second_moment - 0.5) / s.second_moment_se;
    outcome(
        z_mean.abs() <= 4.0 && z_sq.abs() <= 4.0,
        format!("mean {:+.5} ({:+.2} SE); second moment {:.5} ({:+.2} SE)", s.mean_integral, z_mean, s.second_moment, z_sq),
    )
}

fn c15_feynman_kac() -> Result<Outcome> {
    let ind = |x: &[f64]| f64::from(x[0].abs() <= 1.0);
    let r = feynman_kac_mc(|_: &[f64]| 0.0, ind, 1.0, &[0.0], 1_000_000, 100, &root(15).split(0))?;
    let target = phi(1.0) - phi(-1.0);
    let z = (r.estimate - target) / r.std_error;
    let c = feynman_kac_mc(|_: &[f64]| 0.5, ind, 1.0, &[0.0], 100_000, 100, &root(15).split(1))?;
    let cap = (-0.5f64).exp();
    outcome(
        z.abs() <= 4.0 && c.estimate.abs() <= cap,
        format!("u {:.5} vs {:.5} ({:+.2} SE); V=0.5: |u| {:.5} <= {:.5}", r.estimate, target, z, c.estimate, cap),
    )
}

fn c16_black_scholes() -> Result<Outcome> {
    let p = BsParams::new(100.0, 100.0, 0.05, 0.2, 1.0)?;
    let closed = black_scholes_price(&p)?.price;
    let mc = bs_mc_price(&p, 1_000_000, &root(16).split(0))?;
    let z = (closed - mc.estimate) / mc.std_error;
    let oracle = bs_mc_price(&p, 10_000_000, &root(16).split(1))?;
    let z_oracle = (oracle.estimate - 10.4506) / oracle.std_error;
    let mut s = root(16).split(2);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let t = 0.05 + 0.9 * s.uniform();
        let x = 60.0 + 80.0 * s.uniform();
        worst = worst.max(bs_pde_residual(&p, t, x)?.abs());
    }
    outcome(
        z.abs() <= 3.0 && z_oracle.abs() <= 3.0 && worst <= 1e-5,
        format!(
            "closed {closed:.6}, MC {:.4} ({z:+.2} SE), 1e7 oracle {:.4} ({z_oracle:+.2} SE); max PDE residual {worst:.1e}",
            mc.estimate, oracle.estimate
        ),
    )
}

fn c17_gaussian_concentration() -> Result<Outcome> {
    let grid: Vec<f64> = (0..=16).map(|i| 0.25 * i as f64).collect();
    let pts = gaussian_concentration_experiment(ConcFunction::EuclideanNorm, 100, 1_000_000, &grid, &root(17))?;
    let pass = pts.iter().all(|p| p.empirical_tail <= p.bound + 3.0 * p.std_error);
    let at1 = pts.iter().find(|p| p.tau == 1.0).unwrap();
    outcome(pass, format!("{} tau values; at tau=1 tail {:.4} vs bound {:.4}", pts.len(), at1.empirical_tail, at1.bound))
}

fn c18_rare_events() -> Result<Outcome> {
    let tv = total_variation_discrete(&DistributionSpec::binomial(4e-4, 10_000)?, &DistributionSpec::poisson(4.0)?, 1e-15)?;
    outcome(tv <= 0.01, format!("TV {tv:.3e}"))
}

fn main() {
    let criteria: [(&str, fn() -> Result<Outcome>); 18] = [
        ("variance-family mse", c01_variance_mse),
        ("t-interval coverage", c02_t_coverage),
        ("Cramer-Rao attainment", c03_cramer_rao),
        ("Gamma MLE asymptotics", c04_gamma_mle),
        ("James-Stein risk", c05_james_stein),
        ("Johnson-Lindenstrauss", c06_jl),
        ("Erdos-Renyi connectivity", c07_er_connectivity),
        ("tail-bound domination", c08_tail_domination),
        ("OLS suite", c09_ols_suite),
        ("LASSO bound and oracle", c10_lasso),
        ("logistic GLM", c11_glm),
        ("Wilks null laws", c12_wilks),
        ("quadratic variation", c13_quadratic_variation),
        ("Ito isometry", c14_isometry),
        ("Feynman-Kac", c15_feynman_kac),
        ("Black-Scholes", c16_black_scholes),
        ("Gaussian concentration", c17_gaussian_concentration),
        ("law of rare events", c18_rare_events),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = match run() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!pass);
        println!(
            "[{}] {:>2} {name}: {detail} ({:.1}s)",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
