use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use statforge::concentration::tail_bound;
use statforge::concentration::TailBoundKind;
use statforge::distributions::total_variation_discrete;
use statforge::estimation::{conjugate_update, fisher_information, mle_fit, DataSummary, MleFamily, PosteriorSpec};
use statforge::glm::{glm_fit, glm_log_likelihood, GlmFamily};
use statforge::hypothesis::{anova_one_way, lrt_mean};
use statforge::regression::{lasso_fit, ols_fit, soft_threshold, DesignMatrix, LassoOptions};
use statforge::stochastic::{black_scholes_price, brownian_sample, ito_integral, quadratic_variation, BsParams, TimeGrid};
use statforge::{DistributionSpec, RandomStream};

fn gaussian(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
    let mut s = RandomStream::new(seed);
    DMatrix::from_fn(rows, cols, |_, _| s.normal())
}

fn normals(n: usize, seed: u64) -> Vec<f64> {
    let mut s = RandomStream::new(seed);
    (0..n).map(|_| s.normal()).collect()
}

/// Negative central-difference Hessian of `f` at `x`.
fn neg_hessian(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> DMatrix<f64> {
    let k = x.len();
    DMatrix::from_fn(k, k, |i, j| {
        let at = |di: f64, dj: f64| {
            let mut v = x.to_vec();
            v[i] += di;
            v[j] += dj;
            f(&v)
        };
        -(at(h, h) - at(h, -h) - at(-h, h) + at(-h, -h)) / (4.0 * h * h)
    })
}

fn rel_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn residuals_orthogonal_to_design(n in 8usize..40, p in 1usize..4, seed in any::<u64>()) {
        let z = gaussian(n, p, seed);
        let d = DesignMatrix::from_predictors(&z, true).unwrap();
        let y = normals(n, seed ^ 1);
        let fit = ols_fit(&d, &y).unwrap();
        let xtr = d.matrix().transpose() * &fit.residuals;
        prop_assert!(xtr.amax() <= 1e-9 * (1.0 + d.matrix().amax() * DVector::from_column_slice(&y).norm()));
        for i in 0..n {
            prop_assert!((fit.fitted[i] + fit.residuals[i] - y[i]).abs() < 1e-10);
            prop_assert!(fit.hat_diagonal[i] > -1e-12 && fit.hat_diagonal[i] < 1.0 + 1e-12);
        }
        prop_assert!((fit.hat_diagonal.sum() - d.ncols() as f64).abs() < 1e-8);
    }

    #[test]
    fn anova_sums_of_squares_add_up(sizes in prop::collection::vec(2usize..9, 2..5), seed in any::<u64>()) {
        let mut s = RandomStream::new(seed);
        let groups: Vec<Vec<f64>> = sizes.iter().enumerate()
            .map(|(g, &k)| (0..k).map(|_| g as f64 * 0.3 + s.normal()).collect())
            .collect();
        let r = anova_one_way(&groups).unwrap();
        prop_assert!((r.ss_total - r.ss_within - r.ss_between).abs() <= 1e-10 * (1.0 + r.ss_total));
        prop_assert!((0.0..=1.0).contains(&r.test.p_value));
    }

    #[test]
    fn p_value_falls_as_mean_moves_away(seed in any::<u64>(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let x = normals(20, seed);
        let xbar = statforge::stats::mean(&x);
        let (near, far) = if a < b { (a, b) } else { (b, a) };
        for sigma in [Some(1.0), None] {
            let p_near = lrt_mean(&x, xbar + near, sigma).unwrap().p_value;
            let p_far = lrt_mean(&x, xbar + far, sigma).unwrap().p_value;
            prop_assert!(p_far <= p_near + 1e-12);
        }
    }

    #[test]
    fn lasso_descends_and_meets_kkt(seed in any::<u64>(), lam in 0.01f64..1.0) {
        let x = gaussian(30, 12, seed);
        let mut beta = vec![0.0; 12];
        beta[0] = 2.0;
        beta[3] = -1.0;
        let noise = normals(30, seed ^ 7);
        let y: Vec<f64> = (&x * DVector::from_vec(beta)).iter().zip(&noise).map(|(m, e)| m + 0.5 * e).collect();
        let fit = lasso_fit(&DesignMatrix::new(x, false).unwrap(), &y, lam, &LassoOptions::default()).unwrap();
        for w in fit.objective_trace.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12 * (1.0 + w[0].abs()));
        }
        prop_assert!(fit.kkt_violation <= 1e-8, "kkt {}", fit.kkt_violation);
    }

    #[test]
    fn soft_threshold_contracts(z in -10.0f64..10.0, lam in 0.0f64..5.0) {
        let s = soft_threshold(z, lam);
        prop_assert!(s.abs() <= z.abs());
        prop_assert!(s * z >= 0.0);
        prop_assert!((s - z).abs() <= lam + 1e-15);
    }

    #[test]
    fn continuous_quantile_inverts_cdf(u in 0.001f64..0.999, which in 0usize..5) {
        let spec = [
            DistributionSpec::normal(1.0, 4.0),
            DistributionSpec::gamma(2.0, 3.0),
            DistributionSpec::student_t(5),
            DistributionSpec::beta(2.0, 5.0),
            DistributionSpec::fisher_f(3, 12),
        ]
        .into_iter()
        .nth(which)
        .unwrap()
        .unwrap();
        let x = spec.quantile(u).unwrap();
        prop_assert!((spec.cdf(x) - u).abs() < 1e-8);
        prop_assert!((spec.cdf(x) + spec.sf(x) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fisher_information_is_negative_hessian_at_mle(seed in any::<u64>(), which in 0usize..5) {
        let (family, truth): (MleFamily, &[f64]) = match which {
            0 => (MleFamily::Normal, &[1.0, 2.0]),
            1 => (MleFamily::Exponential, &[1.5]),
            2 => (MleFamily::Bernoulli, &[0.4]),
            3 => (MleFamily::Poisson, &[3.0]),
            _ => (MleFamily::Gamma, &[2.0, 3.0]),
        };
        let n = 200;
        let x = family.spec(truth).unwrap().sample(&mut RandomStream::new(seed), n);
        let fit = mle_fit(family, &x).unwrap();
        prop_assume!(!fit.boundary);
        let info = fisher_information(family, &fit.estimate, n).unwrap();
        let h = 1e-4 * fit.estimate.iter().fold(1.0f64, |m, v| m.min(v.abs().max(1e-3)));
        let fd = neg_hessian(|t| family.log_likelihood(t, &x).unwrap(), &fit.estimate, h);
        prop_assert!(rel_diff(&fd, &info) < 1e-4, "fd {fd} info {info}");
    }

    #[test]
    fn glm_information_is_negative_hessian(seed in any::<u64>(), poisson in any::<bool>()) {
        let z = gaussian(150, 2, seed);
        let d = DesignMatrix::from_predictors(&z, true).unwrap();
        let fam = if poisson { GlmFamily::PoissonLog } else { GlmFamily::BernoulliLogit };
        let beta = [0.3, 0.5, -0.4];
        let y = statforge::glm::glm_simulate(&fam, &d, &beta, &mut RandomStream::new(seed ^ 3)).unwrap();
        let fit = match glm_fit(&fam, &d, &y) {
            Ok(f) => f,
            Err(_) => return Ok(()),
        };
        let b: Vec<f64> = fit.beta.iter().copied().collect();
        let fd = neg_hessian(|v| glm_log_likelihood(&fam, &d, &y, v).unwrap(), &b, 1e-3);
        prop_assert!(rel_diff(&fd, &fit.fisher_info) < 1e-4);
    }

    #[test]
    fn tail_bounds_are_clamped_and_decreasing(t1 in 0.01f64..5.0, dt in 0.0f64..5.0, sigma in 0.1f64..3.0) {
        let kinds = [
            TailBoundKind::Markov { mean: 1.0 },
            TailBoundKind::Chebyshev { variance: sigma * sigma },
            TailBoundKind::SubGaussian { sigma },
            TailBoundKind::SubExponential { nu: sigma, beta: 1.0 },
            TailBoundKind::ChiSquaredRelative { k: 8 },
        ];
        for kind in &kinds {
            let a = tail_bound(kind, t1).unwrap();
            let b = tail_bound(kind, t1 + dt).unwrap();
            prop_assert!(a.clamped <= 1.0 && b.clamped <= a.clamped + 1e-15);
        }
    }

    #[test]
    fn total_variation_is_a_distance(lam in 0.1f64..10.0, n in 10u64..500) {
        let b = DistributionSpec::binomial(lam.min(n as f64 * 0.9) / n as f64, n).unwrap();
        let p = DistributionSpec::poisson(lam).unwrap();
        let ab = total_variation_discrete(&b, &p, 1e-14).unwrap();
        let ba = total_variation_discrete(&p, &b, 1e-14).unwrap();
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert!((ab - ba).abs() < 1e-12);
        prop_assert!(total_variation_discrete(&p, &p, 1e-14).unwrap() < 1e-12);
    }

    #[test]
    fn beta_posterior_mean_between_prior_and_data(a in 0.5f64..10.0, b in 0.5f64..10.0, k in 0u64..50, extra in 1u64..50) {
        let trials = k + extra;
        let post = conjugate_update(&PosteriorSpec::Beta { alpha: a, beta: b }, &DataSummary::Bernoulli { successes: k, trials }).unwrap();
        let (prior, freq) = (a / (a + b), k as f64 / trials as f64);
        prop_assert!(post.mean() >= prior.min(freq) - 1e-12 && post.mean() <= prior.max(freq) + 1e-12);
    }

    #[test]
    fn ito_integral_of_one_is_increment(steps in 1usize..200, seed in any::<u64>()) {
        let g = TimeGrid::uniform(2.0, steps).unwrap();
        let b = brownian_sample(&g, 1, &mut RandomStream::new(seed)).unwrap();
        let i = ito_integral(&vec![1.0; steps], &b, 0).unwrap();
        prop_assert!((i - b.value(steps, 0)).abs() < 1e-10);
        prop_assert!(quadratic_variation(&b, 0).unwrap() >= 0.0);
    }

    #[test]
    fn call_price_within_no_arbitrage_bounds(s in 10.0f64..200.0, k in 10.0f64..200.0, r in 0.0f64..0.1, v in 0.05f64..0.8, t in 0.1f64..3.0) {
        let p = black_scholes_price(&BsParams::new(s, k, r, v, t).unwrap()).unwrap();
        prop_assert!(p.price >= (s - k * (-r * t).exp()).max(0.0) - 1e-9);
        prop_assert!(p.price <= s + 1e-9);
        prop_assert!((0.0..=1.0).contains(&p.delta));
    }
}
