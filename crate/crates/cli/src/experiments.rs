//! The experiment registry. Each runner reads only its declared parameters,
//! draws from streams split off the root seed and returns metrics judged
//! against explicit tolerances.

use std::fs::File;

use statforge::concentration::{er_connectivity, jl_experiment, JLConfig};
use statforge::estimation::{
    ci_mle_asymptotic, conjugate_update, cramer_rao_study, exponential_asymptotic_ks, gamma_mle_study, james_stein_study,
    mean_t_coverage, mle_fit, variance_family_experiment, CiKind, DataSummary, MleFamily, PosteriorSpec,
};
use statforge::glm::{
    gaussian_design, glm_fit, glm_simulate, glm_wald_ci, irt_ability_study, standard_item_bank, wald_coverage_study,
    GlmFamily,
};
use statforge::hypothesis::{rejection_study, wilks_null_simulation, SizeTest, WilksScenario};
use statforge::io::{read_item_bank, read_regression, read_sample, write_brownian_csv};
use statforge::regression::{
    coef_interval, ols_fit, ols_study, prediction_error_experiment, DesignMatrix, Noise, PredictionEstimator,
};
use statforge::stochastic::{
    black_scholes_price, brownian_sample, bs_mc_price, bs_pde_residual, feynman_kac_mc,
    gaussian_concentration_experiment, ito_isometry_study, qv_ito_study, BsParams, ConcFunction, Integrand, TimeGrid,
};
use statforge::{DistributionSpec, RandomStream, Result, StatError};

use crate::params::{Decl, Default as D, Params};
use crate::report::{numeric_table, Metric, Table, Tolerance as T};

pub struct Ctx<'a> {
    pub params: &'a Params,
    pub replicates: usize,
    pub root: RandomStream,
}

#[derive(Default)]
pub struct Outcome {
    pub metrics: Vec<Metric>,
    pub formulas: Vec<String>,
    pub tables: Vec<Table>,
}

impl Outcome {
    fn push(&mut self, m: Metric) {
        self.metrics.push(m);
    }

    fn formula(&mut self, f: &str) {
        if !self.formulas.iter().any(|x| x == f) {
            self.formulas.push(f.to_string());
        }
    }
}

#[derive(Debug)]
pub struct Experiment {
    pub tag: &'static str,
    pub summary: &'static str,
    pub replicates: usize,
    pub params: &'static [Decl],
    pub run: fn(&Ctx) -> Result<Outcome>,
}

pub fn find(tag: &str) -> Option<&'static Experiment> {
    EXPERIMENTS.iter().find(|e| e.tag == tag)
}

fn choice<'a, V: Copy>(key: &str, value: &str, options: &'a [(&'a str, V)]) -> Result<V> {
    options.iter().find(|o| o.0 == value).map(|o| o.1).ok_or_else(|| {
        let names: Vec<&str> = options.iter().map(|o| o.0).collect();
        StatError::param("params", format!("'{key}' must be one of {}, got '{value}'", names.join(", ")))
    })
}

fn open(path: &str) -> Result<File> {
    File::open(path).map_err(|e| StatError::Io(format!("{path}: {e}")))
}

const MC: &str = "monte-carlo";
const EXACT: &str = "closed-form";
const FIT: &str = "fitted";

pub static EXPERIMENTS: &[Experiment] = &[
    Experiment {
        tag: "ci-coverage",
        summary: "coverage of the t interval for a normal mean",
        replicates: 100_000,
        params: &[("n", D::Int(5)), ("mu", D::Num(0.0)), ("sigma2", D::Num(1.0)), ("delta", D::Num(0.05))],
        run: ci_coverage,
    },
    Experiment {
        tag: "mse-variance",
        summary: "mse of c * sum (x - xbar)^2 across a family of scalings",
        replicates: 200_000,
        params: &[
            ("n", D::Int(10)),
            ("sigma2", D::Num(1.0)),
            ("cs", D::Nums(&[1.0 / 9.0, 1.0 / 10.0, 1.0 / 11.0])),
            ("rel_tolerance", D::Num(0.02)),
        ],
        run: mse_variance,
    },
    Experiment {
        tag: "jl",
        summary: "random projection distortion over all pairs",
        replicates: 200,
        params: &[("n_points", D::Int(50)), ("dim", D::Int(1000)), ("epsilon", D::Num(0.25)), ("delta", D::Num(0.05))],
        run: jl,
    },
    Experiment {
        tag: "er",
        summary: "Erdos-Renyi connectivity at p = c ln N / N",
        replicates: 200,
        params: &[("n", D::Int(2000)), ("c", D::Num(1.3)), ("tolerance", D::Num(0.1))],
        run: er,
    },
    Experiment {
        tag: "mle",
        summary: "MLE sampling behaviour, or a fit to a data file",
        replicates: 500,
        params: &[
            ("family", D::Text("gamma")),
            ("theta", D::Nums(&[3.0, 2.0])),
            ("n", D::Int(5000)),
            ("ks_tolerance", D::Num(0.05)),
            ("delta", D::Num(0.05)),
            ("data", D::Path),
        ],
        run: mle,
    },
    Experiment {
        tag: "regression",
        summary: "OLS sampling theory on a Gaussian design, or a fit to a data file",
        replicates: 10_000,
        params: &[
            ("n", D::Int(50)),
            ("beta", D::Nums(&[1.0, 2.0, 0.0, 0.0])),
            ("sigma", D::Num(1.0)),
            ("dropped", D::Ints(&[2, 3])),
            ("delta", D::Num(0.05)),
            ("alpha", D::Num(0.05)),
            ("data", D::Path),
            ("intercept", D::Text("yes")),
        ],
        run: regression,
    },
    Experiment {
        tag: "lasso-bound",
        summary: "LASSO prediction error against its high-probability bound",
        replicates: 200,
        params: &[
            ("n", D::Int(100)),
            ("p", D::Int(200)),
            ("s", D::Int(3)),
            ("signal", D::Num(1.5)),
            ("sigma", D::Num(1.0)),
            ("t", D::Num(2.0)),
            ("kappa_trials", D::Int(20_000)),
        ],
        run: lasso_bound,
    },
    Experiment {
        tag: "glm",
        summary: "Wald interval coverage for a canonical GLM, or a fit to a data file",
        replicates: 5000,
        params: &[
            ("family", D::Text("logistic")),
            ("n", D::Int(2000)),
            ("beta", D::Nums(&[0.5, 1.0, -0.5, 0.25])),
            ("delta", D::Num(0.05)),
            ("coverage_tolerance", D::Num(0.015)),
            ("data", D::Path),
        ],
        run: glm,
    },
    Experiment {
        tag: "irt",
        summary: "ability estimation in the two-parameter logistic item model",
        replicates: 4000,
        params: &[("items", D::Int(30)), ("gamma", D::Num(0.5)), ("item_bank", D::Path)],
        run: irt,
    },
    Experiment {
        tag: "test-size",
        summary: "rejection rate of a classical test under a mean shift",
        replicates: 20_000,
        params: &[("test", D::Text("t")), ("n", D::Int(12)), ("alpha", D::Num(0.05)), ("shift", D::Num(0.0))],
        run: test_size,
    },
    Experiment {
        tag: "wilks",
        summary: "null law of the likelihood-ratio statistic against chi-squared",
        replicates: 20_000,
        params: &[("scenario", D::Text("z")), ("n", D::Int(200)), ("ks_tolerance", D::Num(0.02))],
        run: wilks,
    },
    Experiment {
        tag: "brownian",
        summary: "quadratic variation and the Ito identity on fine grids",
        replicates: 100,
        params: &[("t_end", D::Num(1.0)), ("steps", D::Int(100_000)), ("dim", D::Int(1)), ("tolerance", D::Num(0.02))],
        run: brownian,
    },
    Experiment {
        tag: "ito",
        summary: "martingale and isometry moments of an Ito integral",
        replicates: 100_000,
        params: &[("integrand", D::Text("brownian")), ("t_end", D::Num(1.0)), ("steps", D::Int(500))],
        run: ito,
    },
    Experiment {
        tag: "feynman-kac",
        summary: "path-integral solution with constant potential and interval payoff",
        replicates: 1_000_000,
        params: &[
            ("potential", D::Num(0.0)),
            ("half_width", D::Num(1.0)),
            ("t", D::Num(1.0)),
            ("x0", D::Num(0.0)),
            ("steps", D::Int(100)),
        ],
        run: feynman_kac,
    },
    Experiment {
        tag: "bs-price",
        summary: "Black-Scholes call: closed form, risk-neutral Monte Carlo and PDE residual",
        replicates: 1_000_000,
        params: &[
            ("spot", D::Num(100.0)),
            ("strike", D::Num(100.0)),
            ("rate", D::Num(0.05)),
            ("volatility", D::Num(0.2)),
            ("maturity", D::Num(1.0)),
            ("pde_points", D::Int(100)),
        ],
        run: bs_price,
    },
    Experiment {
        tag: "gauss-conc",
        summary: "Gaussian concentration of a 1-Lipschitz function",
        replicates: 1_000_000,
        params: &[("function", D::Text("euclidean")), ("k", D::Int(100)), ("tau_max", D::Num(4.0)), ("points", D::Int(17))],
        run: gauss_conc,
    },
    Experiment {
        tag: "james-stein",
        summary: "James-Stein risk against the MLE",
        replicates: 100_000,
        params: &[("p", D::Int(10)), ("sigma2", D::Num(1.0)), ("mu", D::Num(0.0))],
        run: james_stein,
    },
    Experiment {
        tag: "bayes",
        summary: "conjugate posterior update with a simulated frequentist check",
        replicates: 100_000,
        params: &[
            ("model", D::Text("beta-bernoulli")),
            ("prior", D::Nums(&[1.0, 1.0])),
            ("successes", D::Int(7)),
            ("trials", D::Int(20)),
            ("xbar", D::Num(0.0)),
            ("n", D::Int(10)),
            ("sigma2", D::Num(1.0)),
        ],
        run: bayes,
    },
];

fn ci_coverage(c: &Ctx) -> Result<Outcome> {
    let p = c.params;
    let delta = p.num("delta");
    let s = mean_t_coverage(p.int("n"), p.num("mu"), p.num("sigma2"), delta, c.replicates, &c.root)?;
    let mut o = Outcome::default();
    let nominal = 1.0 - delta;
    o.push(Metric::new("coverage", s.coverage, Some(s.std_error), T::Interval { lo: nominal - 0.01, hi: nominal + 0.01 }, MC));
    o.push(Metric::info("mean_half_width", s.mean_half_width, MC));
    o.formula(CiKind::MeanT.formula());
    Ok(o)
}

fn mse_variance(c: &Ctx) -> Result<Outcome> {
    let p = c.params;
    let (n, cs) = (p.int("n"), p.nums("cs"));
    let pts = variance_family_experiment(n, &cs, p.num("sigma2"), c.replicates, &c.root)?;
    let mut o = Outcome::default();
    let rel = p.num("rel_tolerance");
    for pt in &pts {
        o.push(Metric::new(
            format!("mse[c={}]", pt.c),
            pt.empirical_mse,
            Some(pt.std_error),
            T::Relative { target: pt.theoretical_mse, rel },
            MC,
        ));
    }
    let best = pts.iter().min_by(|a, b| a.empirical_mse.total_cmp(&b.empirical_mse)).unwrap();
    let optimal = 1.0 / (n as f64 + 1.0);
    if cs.iter().any(|&x| (x - optimal).abs() < 1e-12) {
        o.push(Metric::new("argmin_c", best.c, None, T::Absolute { target: optimal, abs: 1e-12 }, MC));
    } else {
        o.push(Metric::info("argmin_c", best.c, MC));
    }
    o.formula("mse(c) = ((n-1)(n+1)c^2 - 2(n-1)c + 1) sigma^4");
    let rows: Vec<Vec<f64>> = pts.iter().map(|q| vec![q.c, q.empirical_mse, q.std_error, q.theoretical_mse]).collect();
    o.tables.push(numeric_table("mse", &["c", "empirical_mse", "std_error", "theoretical_mse"], &rows));
    Ok(o)
}

fn jl(c: &Ctx) -> Result<Outcome> {
    let p = c.params;
    let cfg = JLConfig::new(p.int("n_points"), p.int("dim"), p.num("epsilon"), p.num("delta"))?;
    let e = jl_experiment(&cfg, c.replicates, &c.root)?;
    let mut o = Outcome::default();
    o.push(Metric::info("target_dim", cfg.m as f64, EXACT));
    o.push(Metric::new("success_rate", e.success_rate, Some(e.success_rate_se), T::AtLeast { bound: 1.0 - cfg.delta }, MC));
    o.push(Metric::info("mean_max_distortion", e.mean_max_distortion, MC));
    o.formula("m = ceil(8 ln(n(n-1)/delta) / eps^2)");
    Ok(o)
}

fn er(c: &Ctx) -> Result<Outcome> {
    let p = c.params;
    let s = er_connectivity(p.int("n"), p.num("c"), c.replicates, &c.root)?;
    let mut o = Outcome::default();
    o.push(Metric::new(
        "connected_frequency",
        s.connected_frequency,
        Some(s.std_error),
        T::Absolute { target: s.asymptotic_limit, abs: p.num("tolerance") },
        MC,
    ));
    o.push(Metric::info("asymptotic_limit", s.asymptotic_limit, EXACT));
    o.push(Metric::info("edge_probability", s.p, EXACT));
    o.push(Metric::info("mean_edge_count", s.mean_edge_count, MC));
    o.formula("P(connected) -> exp(-exp(-K)), K = (c - 1) ln N");
    Ok(o)
}

fn mle_family(name: &str) -> Result<MleFamily> {
    choice(
        "family",
        name,
        &[
            ("normal", MleFamily::Normal),
            ("exponential", MleFamily::Exponential),
            ("bernoulli", MleFamily::Bernoulli),
            ("poisson", MleFamily::Poisson),
            ("gamma", MleFamily::Gamma),
        ],
    )
}

fn mle(c: &Ctx) -> Result<Outcome> {
    let p = c.params;
    let family = mle_family(p.text("family"))?;
    let mut o = Outcome::default();
    if let Some(path) = p.path("data") {
        let x = read_sample(open(path)?)?;
        let fit = mle_fit(family, &x)?;
        for (j, name) in fit.parameter_names.iter().enumerate() {
            o.push(Metric::info(name.as_str(), fit.estimate[j], FIT));
            if let Ok(ci) = ci_mle_asymptotic(&fit, j, p.num("delta")) {
                o.push(Metric::info(format!("{name}_ci_lo"), ci.lo, FIT));
                o.push(Metric::info(format!("{name}_ci_hi"), ci.hi, FIT));
                o.formula(&ci.formula);
            }
        }
        o.push(Metric::info("log_likelihood", fit.log_likelihood, FIT));
        o.formula(&fit.formula);
        return Ok(o);
    }
    let theta = p.nums("theta");
    let want = family.parameter_names().len();
    if theta.len() != want {
        return Err(StatError::LengthMismatch { expected: want, got: theta.len() });
    }
    let n = p.int("n");
    let ks_tol = p.num("ks_tolerance");
    match family {
        MleFamily::Gamma => {
            let s = gamma_mle_study(theta[0], theta[1], n, c.replicates, &c.root)?;
            o.push(Metric::new("ks_alpha", s.ks_alpha, None, T::AtMost { bound: ks_tol }, MC));
            o.push(Metric::new("ks_lambda", s.ks_lambda, None, T::AtMost { bound: ks_tol }, MC));
            o.push(Metric::info("mean_alpha", s.mean_alpha, MC));
            o.push(Metric::info("mean_lambda", s.mean_lambda, MC));
            o.formula("sqrt(n) (theta_hat - theta) ~ N(0, F^-1), F = [[lambda/alpha^2, -1/alpha], [-1/alpha, trigamma(lambda)]]");
        }
        MleFamily::Exponential => {
            let ks = exponential_asymptotic_ks(theta[0], n, c.replicates, &c.root)?;
            o.push(Metric::new("ks", ks, None, T::AtMost { bound: ks_tol }, MC));
            o.formula("sqrt(n) (lambda_hat - lambda) / lambda ~ N(0, 1)");
        }
        MleFamily::Bernoulli | MleFamily::Poisson => {
            let s = cramer_rao_study(family, theta[0], n, c.replicates, &c.root)?;
            o.push(Metric::new(
                "variance_of_mle",
                s.empirical_variance,
                Some(s.std_error),
                T::StdErrors { target: s.inverse_information, k: 3.0 },
                MC,
            ));
            o.push(Metric::info("inverse_information", s.inverse_information, EXACT));
            o.formula("var(xbar) = 1 / F_n(theta)");
        }
        MleFamily::Normal => {
            return Err(StatError::Domain("simulation mode covers gamma, exponential, bernoulli and poisson".into()))
        }
    }
    Ok(o)
}

fn regression(c: &Ctx) -> Result<Outcome> {
    let p = c.params;
    let mut o = Outcome::default();
    let delta = p.num("delta");
    if let Some(path) = p.path("data") {
        let intercept = choice("intercept", p.text("intercept"), &[("yes", true), ("no", false)])?;
        let (design, y) = read_regression(open(path)?, intercept)?;
        let fit = ols_fit(&design, &y)?;
        let names = design.names().to_vec();
        for (j, name) in names.iter().enumerate() {
            o.push(Metric::info(name.as_str(), fit.beta_hat[j], FIT));
            if let Ok(ci) = coef_interval(&fit, j, delta) {
                o.push(Metric::info(format!("{name}_ci_lo"), ci.lo, FIT));
                o.push(Metric::info(format!("{name}_ci_hi"), ci.hi, FIT));
                o.formula(&ci.formula);
            }
        }
        if let Some(s2) = fit.sigma2_hat {
            o.push(Metric::info("sigma2_hat", s2, FIT));
        }
        o.push(Metric::info("r2", fit.r2, FIT));
        let rows: Vec<Vec<f64>> = (0..y.len()).map(|i| vec![y[i], fit.fitted[i], fit.residuals[i], fit.hat_diagonal[i]]).collect();
        o.tables.push(numeric_table("fit", &["y", "fitted", "residual", "leverage"], &rows));
        return Ok(o);
    }
    let beta = p.nums("beta");
    if beta.len() < 2 {
        return Err(StatError::param("beta", "need an intercept and at least one slope"));
    }
    let design = gaussian_design(p.int("n"), beta.len() - 1, &c.root.split(u64::MAX))?;
    let dropped = p.ints("dropped");
    let s = ols_study(&design, &beta, p.num("sigma"), &dropped, delta, p.num("alpha"), c.replicates, &c.root)?;
    for j in 0..beta.len() {
        o.push(Metric::new(format!("mean_beta[{j}]"), s.mean_beta[j], Some(s.beta_se[j]), T::StdErrors { target: beta[j], k: 4.0 }, MC));
    }
    let df = design.nrows() - design.ncols();
    o.push(Metric::new("sigma2_ks_chi2", s.sigma2_ks, None, T::AtMost { bound: 0.02 }, MC));
    o.push(Metric::info("mean_sigma2", s.mean_sigma2, MC));
    o.push(Metric::info("residual_df", df as f64, EXACT));
    for (j, cov) in s.coverage.iter().enumerate() {
        let nominal = 1.0 - delta;
        o.push(Metric::new(format!("coverage[{j}]"), *cov, Some(s.coverage_se[j]), T::Absolute { target: nominal, abs: 0.01 }, MC));
    }
    if !dropped.is_empty() {
        let alpha = p.num("alpha");
        let truly_null = dropped.iter().all(|&j| beta.get(j) == Some(&0.0));
        let tol = if truly_null { T::Absolute { target: alpha, abs: 0.007 } } else { T::ReportOnly };
        o.push(Metric::new("f_rejection_rate", s.f_rejection_rate, Some(s.f_rejection_se), tol, MC));
        o.formula("F = ((RSS0 - RSS)/(p - q)) / (RSS/(n - p))");
    }
    o.formula(CiKind::CoefT.formula());
    Ok(o)
}

fn lasso_bound(c: &Ctx) -> Result<Outcome> {
    let p = c.params;
    let (n, dim, s) = (p.int("n"), p.int("p"), p.int("s"));
    if s == 0 || s > dim {
        return Err(StatError::param("s", "need 1 <= s <= p"));
    }
    // Gaussian columns rescaled to |x_j|^2 = n
    let mut ds = c.root.split(u64::MAX - 1);
    let cols: Vec<Vec<f64>> = (0..dim)
        .map(|_| {
            let v: Vec<f64> = (0..n).map(|_| ds.normal()).collect();
            let scale = (n as f64).sqrt() / v.iter().map(|a| a * a).sum::<f64>().sqrt();
            v.into_iter().map(|a| a * scale).collect()
        })
        .collect();
    let rows: Vec<Vec<f64>> = (0..n).map(|i| cols.iter().map(|col| col[i]).collect()).collect();
    let design = DesignMatrix::from_rows(&rows, false)?;
    let mut beta = vec![0.0; dim];
    for (j, b) in beta.iter_mut().take(s).enumerate() {
        *b = if j % 2 == 0 { p.num("signal") } else { -p.num("signal") };
    }
    let est = PredictionEstimator::Lasso { t: p.num("t"), c: 1.0, lambda: None, kappa_trials: p.int("kappa_trials") };
    let r = prediction_error_experiment(&beta, &design, &Noise::Normal { sigma: p.num("sigma") }, &est, c.replicates, &c.root)?;
    let mut o = Outcome::default();
    o.push(Metric::new(
        "violation_rate",
        r.violation_rate,
        Some(r.violation_se),
        T::AtMost { bound: r.nominal_violation + 3.0 * r.violation_se },
        MC,
    ));
    o.push(Metric::info("nominal_violation", r.nominal_violation, EXACT));
    o.push(Metric::info("bound", r.bound_value, EXACT));
    o.push(Metric::info("mean_prediction_error", r.mean_error, MC));
    o.push(Metric::info("lambda", r.lambda.unwrap_or(f64::NAN), EXACT));
    o.push(Metric::info("kappa_estimate", r.kappa.unwrap_or(f64::NAN), MC));
    o.formula("lambda = sqrt(8 C^2 sigma^2 (ln p / n + t^2 / 2n))");
    o.formula("|X(b_hat - b)|^2 / n <= 72 C^2 sigma^2 s (ln p + t^2/2) / (kappa n)");
    Ok(o)
}

fn glm_family(name: &str) -> Result<GlmFamily> {
    choice("family", name, &[("logistic", GlmFamily::BernoulliLogit), ("poisson", GlmFamily::PoissonLog)])
}

fn glm(c: &Ctx) -> Result<Outcome> {
    let p = c.params;
    let family = glm_family(p.text("family"))?;
    let delta = p.num("delta");
    let mut o = Outcome::default();
    o.formula(CiKind::GlmWald.formula());
    if let Some(path) = p.path("data") {
        let (design, y) = read_regression(open(path)?, true)?;
        let fit = glm_fit(&family, &design, &y)?;
        for (j, name) in fit.names.iter().enumerate() {
            o.push(Metric::info(name.as_str(), fit.beta[j], FIT));
            let ci = glm_wald_ci(&fit, j, delta)?;
            o.push(Metric::info(format!("{name}_ci_lo"), ci.lo, FIT));
            o.push(Metric::info(format!("{name}_ci_hi"), ci.hi, FIT));
        }
        o.push(Metric::info("log_likelihood", fit.log_likelihood, FIT));
        o.push(Metric::new("score_residual", fit.score_residual, None, T::AtMost { bound: 1e-8 }, FIT));
        return Ok(o);
    }
    let beta = p.nums("beta");
    if beta.len() < 2 {
        return Err(StatError::param("beta", "need an intercept and at least one slope"));
    }
    let x = gaussian_design(p.int("n"), beta.len() - 1, &c.root.split(u64::MAX))?;
    let y = glm_simulate(&family, &x, &beta, &mut c.root.split(u64::MAX - 1))?;
    let fit = glm_fit(&family, &x, &y)?;
    o.push(Metric::new("score_residual", fit.score_residual, None, T::AtMost { bound: 1e-8 }, FIT));
    let w = wald_coverage_study(&family, &x, &beta, delta, c.replicates, &c.root)?;
    let tol = p.num("coverage_tolerance");
    for (j, cov) in w.coverage.iter().enumerate() {
        o.push(Metric::new(format!("coverage[{j}]"), *cov, Some(w.coverage_se[j]), T::Absolute { target: 1.0 - delta, abs: tol }, MC));
    }
    o.push(Metric::info("max_score_residual", w.max_score_residual, MC));
    Ok(o)
}

fn irt(c: &Ctx) -> Result<Outcome> {
    let p = c.params;
    let bank = match p.path("item_bank") {
        Some(path) => read_item_bank(open(path)?)?,
        None => standard_item_bank(p.int("items"))?,
    };
    let s = irt_ability_study(&bank, p.num("gamma"), c.replicates, &c.root)?;
    let mut o = Outcome::default();
    o.push(Metric::new(
        "score_variance",
        s.score_variance,
        Some(s.score_variance_se),
        T::StdErrors { target: s.information, k: 4.0 },
        MC,
    ));
    o.push(Metric::info("information", s.information, EXACT));
    o.push(Metric::new("within_three_se", s.within_three_se, None, T::AtLeast { bound: 0.95 }, MC));
    o.push(Metric::info("no_finite_mle", s.no_finite_mle as f64, MC));
    o.push(Metric::info("mean_gamma_hat", s.mean_gamma_hat, MC));
    o.formula("I(gamma) = sum a_i^2 p_i (1 - p_i)");
    Ok(o)
}

fn test_size(c: &Ctx) -> Result<Outcome> {
    let p = c.params;
    let test = choice(
        "test",
        p.text("test"),
        &[("z", SizeTest::ZMean), ("t", SizeTest::TMean), ("f", SizeTest::FVariances), ("anova", SizeTest::Anova)],
    )?;
    let (alpha, shift) = (p.num("alpha"), p.num("shift"));
    let s = rejection_study(test, p.int("n"), alpha, shift, c.replicates, &c.root)?;
    let mut o = Outcome::default();
    let tol = if shift == 0.0 {
        T::StdErrors { target: alpha, k: 4.0 }
    } else {
        T::AtLeast { bound: alpha }
    };
    let se = s.std_error.max(statforge::stats::binomial_se(alpha, c.replicates));
    o.push(Metric::new(if shift == 0.0 { "size" } else { "power" }, s.rejection_rate, Some(se), tol, MC));
    Ok(o)
}

fn wilks(c: &Ctx) -> Result<Outcome> {
    let p = c.params;
    let scenario = choice(
        "scenario",
        p.text("scenario"),
        &[("z", WilksScenario::ZTest), ("t", WilksScenario::TTest), ("logistic", WilksScenario::LogisticNested)],
    )?;
    let r = wilks_null_simulation(scenario, p.int("n"), c.replicates, &c.root)?;
    let mut o = Outcome::default();
    o.push(Metric::new("ks_chi2", r.ks_distance, None, T::AtMost { bound: p.num("ks_tolerance") }, MC));
    o.push(Metric::info("df", r.df as f64, EXACT));
    let rows: Vec<Vec<f64>> = r.qq_table.iter().map(|q| vec![q.probability, q.empirical, q.theoretical]).collect();
    o.tables.push(numeric_table("qq", &["probability", "empirical", "chi2_quantile"], &rows));
    o.formula("-2 ln Lambda -> chi2(dim gap)");
    Ok(o)
}

fn brownian(c: &Ctx) -> Result<Outcome> {
    let p = c.params;
    let (t_end, steps) = (p.num("t_end"), p.int("steps"));
    let s = qv_ito_study(t_end, steps, c.replicates, &c.root)?;
    let tol = p.num("tolerance");
    let mut o = Outcome::default();
    o.push(Metric::new("mean_abs_qv_error", s.mean_abs_qv_error, None, T::AtMost { bound: tol }, MC));
    o.push(Metric::new("mean_abs_ito_identity_error", s.mean_abs_ito_error, None, T::AtMost { bound: tol }, MC));
    o.formula("sum (db)^2 -> T");
    o.formula("int b db = b_T^2/2 - T/2");
    // one sample path for plotting, capped so the file stays small
    let grid = TimeGrid::uniform(t_end, steps.min(10_000))?;
    let path = brownian_sample(&grid, p.int("dim"), &mut c.root.split(u64::MAX))?;
    let mut buf = Vec::new();
    write_brownian_csv(&path, &mut buf)?;
    o.tables.push(Table { name: "path".into(), content: buf });
    Ok(o)
}

fn ito(c: &Ctx) -> Result<Outcome> {
    let p = c.params;
    let integrand =
        choice("integrand", p.text("integrand"), &[("brownian", Integrand::Brownian), ("brownian_squared", Integrand::BrownianSquared)])?;
    let (t_end, k) = (p.num("t_end"), p.int("steps"));
    let s = ito_isometry_study(integrand, t_end, k, c.replicates, &c.root)?;
    // exact left-endpoint sums of E f(t_j)^2 dt
    let kf = k as f64;
    let target = match integrand {
        Integrand::Brownian => t_end * t_end * (kf - 1.0) / (2.0 * kf),
        Integrand::BrownianSquared => t_end.powi(3) * (kf - 1.0) * (2.0 * kf - 1.0) / (2.0 * kf * kf),
    };
    let mut o = Outcome::default();
    o.push(Metric::new("mean_integral", s.mean_integral, Some(s.integral_se), T::StdErrors { target: 0.0, k: 4.0 }, MC));
    o.push(Metric::new("second_moment", s.second_moment, Some(s.second_moment_se), T::StdErrors { target, k: 4.0 }, MC));
    o.push(Metric::new("time_integral", s.time_integral, Some(s.time_integral_se), T::StdErrors { target, k: 4.0 }, MC));
    o.formula("E (int f db)^2 = E int f^2 dt");
    Ok(o)
}

fn feynman_kac(c: &Ctx) -> Result<Outcome> {
    let p = c.params;
    let (v, a, t, x0) = (p.num("potential"), p.num("half_width"), p.num("t"), p.num("x0"));
    if !(v >= 0.0) {
        return Err(StatError::param("potential", "must be nonnegative"));
    }
    let r = feynman_kac_mc(move |_: &[f64]| v, move |x: &[f64]| f64::from(x[0].abs() <= a), t, &[x0], c.replicates, p.int("steps"), &c.root)?;
    let n01 = DistributionSpec::normal(0.0, 1.0)?;
    let sd = t.sqrt();
    let exact = (-v * t).exp() * (n01.cdf((a - x0) / sd) - n01.cdf((-a - x0) / sd));
    let cap = (-v * t).exp();
    let mut o = Outcome::default();
    o.push(Metric::new("u", r.estimate, Some(r.std_error), T::StdErrors { target: exact, k: 4.0 }, MC));
    o.push(Metric::new("abs_u", r.estimate.abs(), None, T::AtMost { bound: cap }, MC));
    o.push(Metric::info("exact", exact, EXACT));
    o.formula("u(t, x) = E[exp(-int V(x + b_s) ds) f(x + b_t)]");
    Ok(o)
}

fn bs_price(c: &Ctx) -> Result<Outcome> {
    let p = c.params;
    let params = BsParams::new(p.num("spot"), p.num("strike"), p.num("rate"), p.num("volatility"), p.num("maturity"))?;
    let closed = black_scholes_price(&params)?;
    let mc = bs_mc_price(&params, c.replicates, &c.root)?;
    let mut o = Outcome::default();
    o.push(Metric::info("closed_form", closed.price, EXACT));
    o.push(Metric::info("delta", closed.delta, EXACT));
    o.push(Metric::new("mc_price", mc.estimate, Some(mc.std_error), T::StdErrors { target: closed.price, k: 3.0 }, MC));
    let mut s = c.root.split(u64::MAX);
    let mut worst: f64 = 0.0;
    for _ in 0..p.int("pde_points") {
        let t = params.maturity * (0.05 + 0.9 * s.uniform());
        let x = params.spot * (0.6 + 0.8 * s.uniform());
        worst = worst.max(bs_pde_residual(&params, t, x)?.abs());
    }
    o.push(Metric::new("max_pde_residual", worst, None, T::AtMost { bound: 1e-5 }, "finite-difference"));
    o.formula("C = S Phi(d1) - K exp(-r tau) Phi(d2)");
    o.formula("u_t + sigma^2 x^2 u_xx / 2 + r x u_x - r u = 0");
    Ok(o)
}

fn gauss_conc(c: &Ctx) -> Result<Outcome> {
    let p = c.params;
    let f = choice(
        "function",
        p.text("function"),
        &[("euclidean", ConcFunction::EuclideanNorm), ("max", ConcFunction::MaxCoordinate), ("linear", ConcFunction::LinearUnit)],
    )?;
    let points = p.int("points").max(2);
    let grid: Vec<f64> = (0..points).map(|i| p.num("tau_max") * i as f64 / (points - 1) as f64).collect();
    let pts = gaussian_concentration_experiment(f, p.int("k"), c.replicates, &grid, &c.root)?;
    let mut o = Outcome::default();
    for q in &pts {
        o.push(Metric::new(
            format!("tail[tau={}]", q.tau),
            q.empirical_tail,
            Some(q.std_error),
            T::AtMost { bound: q.bound + 3.0 * q.std_error },
            MC,
        ));
    }
    let rows: Vec<Vec<f64>> = pts.iter().map(|q| vec![q.tau, q.empirical_tail, q.std_error, q.bound]).collect();
    o.tables.push(numeric_table("tails", &["tau", "empirical_tail", "std_error", "bound"], &rows));
    o.formula("P(|F - E F| > tau) <= 2 exp(-tau^2 / 2)");
    Ok(o)
}

fn james_stein(c: &Ctx) -> Result<Outcome> {
    let p = c.params;
    let (dim, sigma2, mu) = (p.int("p"), p.num("sigma2"), p.num("mu"));
    let s = james_stein_study(&vec![mu; dim], sigma2, c.replicates, &c.root)?;
    let mut o = Outcome::default();
    let js_tol = if mu == 0.0 && dim >= 3 {
        T::StdErrors { target: 2.0 * sigma2, k: 4.0 }
    } else {
        T::AtMost { bound: s.mse_mle }
    };
    o.push(Metric::new("mse_js", s.mse_js, Some(s.se_js), js_tol, MC));
    o.push(Metric::new("mse_mle", s.mse_mle, Some(s.se_mle), T::StdErrors { target: dim as f64 * sigma2, k: 4.0 }, MC));
    o.formula("mu_js = (1 - (p - 2) sigma^2 / |x|^2) x");
    Ok(o)
}

fn bayes(c: &Ctx) -> Result<Outcome> {
    let p = c.params;
    let prior = p.nums("prior");
    if prior.len() != 2 {
        return Err(StatError::LengthMismatch { expected: 2, got: prior.len() });
    }
    let mut o = Outcome::default();
    let post = match p.text("model") {
        "beta-bernoulli" => {
            let data = DataSummary::Bernoulli { successes: p.int("successes") as u64, trials: p.int("trials") as u64 };
            o.formula("Beta(a + k, b + n - k)");
            conjugate_update(&PosteriorSpec::Beta { alpha: prior[0], beta: prior[1] }, &data)?
        }
        "normal-normal" => {
            let data = DataSummary::NormalKnownVariance { xbar: p.num("xbar"), n: p.int("n") as u64, sigma2: p.num("sigma2") };
            o.formula("N((m/v + n xbar/sigma2) / (1/v + n/sigma2), 1 / (1/v + n/sigma2))");
            conjugate_update(&PosteriorSpec::Normal { mean: prior[0], variance: prior[1] }, &data)?
        }
        other => {
            return Err(StatError::param("params", format!("'model' must be beta-bernoulli or normal-normal, got '{other}'")))
        }
    };
    o.push(Metric::info("posterior_mean", post.mean(), EXACT));
    o.push(Metric::info("posterior_variance", post.variance(), EXACT));
    if let Some(pred) = post.predictive_success() {
        o.push(Metric::info("predictive_success", pred, EXACT));
    }
    // Draw posterior samples by simulation and compare moments.
    let spec = match post {
        PosteriorSpec::Beta { alpha, beta } => DistributionSpec::beta(alpha, beta)?,
        PosteriorSpec::Normal { mean, variance } => DistributionSpec::normal(mean, variance)?,
    };
    let draws = statforge::exec::replicate(&c.root, c.replicates, |_, s| spec.draw(s));
    let m = statforge::stats::mean(&draws);
    o.push(Metric::new(
        "sampled_posterior_mean",
        m,
        Some(statforge::stats::std_error(&draws)),
        T::StdErrors { target: post.mean(), k: 4.0 },
        MC,
    ));
    Ok(o)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tags_are_unique_and_complete() {
        let tags: Vec<&str> = EXPERIMENTS.iter().map(|e| e.tag).collect();
        assert_eq!(tags.len(), 18);
        for (i, t) in tags.iter().enumerate() {
            assert!(!tags[i + 1..].contains(t), "duplicate {t}");
        }
        assert!(find("bs-price").is_some() && find("nope").is_none());
    }

    #[test]
    fn defaults_resolve_for_every_experiment() {
        for e in EXPERIMENTS {
            Params::resolve(e.params, &Default::default()).unwrap();
        }
    }
}
