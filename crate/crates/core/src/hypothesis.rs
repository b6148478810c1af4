//! Likelihood-ratio tests, variance-ratio F tests, one-way ANOVA and
//! simulation checks of the chi-squared limit of the LRT statistic.

use serde::{Deserialize, Serialize};

use crate::distributions::{ks_distance, DistributionSpec};
use crate::error::{Result, StatError};
use crate::exec;
use crate::glm::{gaussian_design, glm_fit, glm_simulate, GlmFamily};
use crate::rng::RandomStream;
use crate::stats::{self, empirical_quantile, mean, sum_sq_dev};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub test: String,
    pub statistic: f64,
    pub null_law: DistributionSpec,
    pub p_value: f64,
    /// Whether `p_value` combines both tails.
    pub two_sided: bool,
    /// The LRT statistic `h = -2 ln Lambda`, when it differs from `statistic`.
    pub lrt_statistic: Option<f64>,
    pub formula: String,
}

fn formula_for(test: &str) -> &'static str {
    match test {
        "z_mean" => "h = Z^2 = n (xbar - mu0)^2 / sigma^2 ~ chi2(1)",
        "t_mean" => "T^2 ~ F(1, n-1); h = n ln(1 + T^2/(n-1))",
        "f_variances" => "U = S_X^2 / S_Y^2 ~ F(m-1, n-1), equal tails",
        "anova_one_way" => "V = (SS_B/(p-1)) / (SS_W/(n-p)) ~ F(p-1, n-p)",
        "lrt_generic" => "h = 2 (l_full - l_null) ~ chi2(l)",
        "nested_f" => "W = ((SS0 - SS1)/(p-q)) / (SS1/(n-p-1)) ~ F(p-q, n-p-1)",
        _ => "",
    }
}

impl TestReport {
    pub fn new(statistic: f64, null_law: DistributionSpec, p_value: f64, test: &str) -> Self {
        TestReport {
            test: test.to_string(),
            statistic,
            null_law,
            p_value: p_value.clamp(0.0, 1.0),
            two_sided: false,
            lrt_statistic: None,
            formula: formula_for(test).to_string(),
        }
    }

    /// p-value `P(law >= statistic)`.
    pub fn upper_tail(statistic: f64, null_law: DistributionSpec, test: &str) -> Self {
        let p = if statistic <= 0.0 { 1.0 } else { null_law.sf(statistic) };
        Self::new(statistic, null_law, p, test)
    }

    pub fn reject(&self, alpha: f64) -> bool {
        self.p_value <= alpha
    }
}

/// z test (known `sigma`) or t test of `mean = mu0`.
pub fn lrt_mean(sample: &[f64], mu0: f64, sigma_known: Option<f64>) -> Result<TestReport> {
    let n = sample.len();
    let xbar = mean(sample);
    match sigma_known {
        Some(sigma) => {
            if n == 0 {
                return Err(StatError::InsufficientData { needed: 1, got: 0 });
            }
            if !(sigma > 0.0) {
                return Err(StatError::param("sigma", "must be positive"));
            }
            let z = (n as f64).sqrt() * (xbar - mu0) / sigma;
            let mut r = TestReport::upper_tail(z * z, DistributionSpec::chi_squared(1)?, "z_mean");
            r.two_sided = true;
            Ok(r)
        }
        None => {
            if n < 2 {
                return Err(StatError::InsufficientData { needed: 2, got: n });
            }
            let sd = stats::std_dev(sample);
            if sd == 0.0 {
                return Err(StatError::DegenerateSample("zero sample standard deviation".into()));
            }
            let t = (n as f64).sqrt() * (xbar - mu0) / sd;
            let t2 = t * t;
            let mut r = TestReport::upper_tail(t2, DistributionSpec::fisher_f(1, (n - 1) as u32)?, "t_mean");
            r.two_sided = true;
            r.lrt_statistic = Some(n as f64 * (t2 / (n as f64 - 1.0)).ln_1p());
            Ok(r)
        }
    }
}

/// Equal-tailed test of `sigma_X^2 = sigma_Y^2`.
pub fn f_test_variances(x: &[f64], y: &[f64]) -> Result<TestReport> {
    let (m, n) = (x.len(), y.len());
    if m < 2 || n < 2 {
        return Err(StatError::InsufficientData { needed: 2, got: m.min(n) });
    }
    let (vx, vy) = (stats::variance(x), stats::variance(y));
    if vx == 0.0 || vy == 0.0 {
        return Err(StatError::DegenerateSample("a sample has zero variance".into()));
    }
    let u = vx / vy;
    let law = DistributionSpec::fisher_f((m - 1) as u32, (n - 1) as u32)?;
    let p = (2.0 * law.cdf(u).min(law.sf(u))).min(1.0);
    let mut r = TestReport::new(u, law, p, "f_variances");
    r.two_sided = true;
    Ok(r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaReport {
    pub test: TestReport,
    pub ss_total: f64,
    pub ss_within: f64,
    pub ss_between: f64,
    pub groups: usize,
    pub n: usize,
}

/// One-way ANOVA; two groups are accepted and give the pooled t statistic squared.
pub fn anova_one_way(groups: &[Vec<f64>]) -> Result<AnovaReport> {
    let p = groups.len();
    if p < 2 {
        return Err(StatError::InsufficientData { needed: 2, got: p });
    }
    if groups.iter().any(Vec::is_empty) {
        return Err(StatError::InsufficientData { needed: 1, got: 0 });
    }
    let all: Vec<f64> = groups.iter().flatten().copied().collect();
    let n = all.len();
    if n <= p {
        return Err(StatError::InsufficientData { needed: p + 1, got: n });
    }
    let grand = mean(&all);
    let ss_total = sum_sq_dev(&all);
    let ss_within: f64 = groups.iter().map(|g| sum_sq_dev(g)).sum();
    let ss_between: f64 = groups.iter().map(|g| g.len() as f64 * (mean(g) - grand).powi(2)).sum();
    if ss_within == 0.0 {
        return Err(StatError::DegenerateSample("no variation within groups".into()));
    }
    let v = (ss_between / (p - 1) as f64) / (ss_within / (n - p) as f64);
    let law = DistributionSpec::fisher_f((p - 1) as u32, (n - p) as u32)?;
    Ok(AnovaReport {
        test: TestReport::upper_tail(v, law, "anova_one_way"),
        ss_total,
        ss_within,
        ss_between,
        groups: p,
        n,
    })
}

/// `h = 2 (l_full - l_null)` against chi-squared on `df` degrees of freedom.
pub fn lrt_generic(loglik_full: f64, loglik_null: f64, df: usize) -> Result<TestReport> {
    if df == 0 {
        return Err(StatError::param("df", "dimension gap must be at least 1"));
    }
    let diff = loglik_full - loglik_null;
    if diff < -1e-8 {
        return Err(StatError::NestingViolation(format!(
            "null log-likelihood exceeds the full one by {}",
            -diff
        )));
    }
    let h = (2.0 * diff).max(0.0);
    let law = DistributionSpec::chi_squared(df as u32)?;
    Ok(TestReport::upper_tail(h, law, "lrt_generic"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WilksScenario {
    /// Normal mean, known variance: `h = Z^2`, exactly chi2(1).
    ZTest,
    /// Normal mean, unknown variance: `h = n ln(1 + T^2/(n-1))`.
    TTest,
    /// Logistic model with intercept and three predictors; the last two
    /// coefficients are zero and dropped under the null.
    LogisticNested,
}

impl WilksScenario {
    pub fn df(&self) -> usize {
        match self {
            WilksScenario::ZTest | WilksScenario::TTest => 1,
            WilksScenario::LogisticNested => 2,
        }
    }
}

/// True coefficients of the logistic scenario.
pub const LOGISTIC_NESTED_BETA: [f64; 4] = [0.5, 1.0, 0.0, 0.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QqRow {
    pub probability: f64,
    pub empirical: f64,
    pub theoretical: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WilksReport {
    pub scenario: WilksScenario,
    pub n: usize,
    pub replicates: usize,
    pub df: usize,
    pub ks_distance: f64,
    pub qq_table: Vec<QqRow>,
}

pub fn wilks_null_simulation(
    scenario: WilksScenario,
    n: usize,
    replicates: usize,
    stream: &RandomStream,
) -> Result<WilksReport> {
    if replicates < 100 {
        return Err(StatError::InsufficientData { needed: 100, got: replicates });
    }
    let min_n = if scenario == WilksScenario::ZTest { 1 } else { 2 };
    if n < min_n {
        return Err(StatError::InsufficientData { needed: min_n, got: n });
    }
    let stats: Vec<f64> = match scenario {
        WilksScenario::ZTest | WilksScenario::TTest => {
            let known = (scenario == WilksScenario::ZTest).then_some(1.0);
            exec::replicate(stream, replicates, |_, s| {
                let mut x = vec![0.0; n];
                s.fill_normal(&mut x);
                let r = lrt_mean(&x, 0.0, known)?;
                Ok::<_, StatError>(r.lrt_statistic.unwrap_or(r.statistic))
            })
            .into_iter()
            .collect::<Result<_>>()?
        }
        WilksScenario::LogisticNested => {
            let family = GlmFamily::BernoulliLogit;
            let full_design = gaussian_design(n, 3, &stream.split(u64::MAX))?;
            let null_design = full_design.select_columns(&[0, 1])?;
            exec::replicate(stream, replicates, |_, s| {
                let y = glm_simulate(&family, &full_design, &LOGISTIC_NESTED_BETA, s)?;
                let full = glm_fit(&family, &full_design, &y)?;
                let null = glm_fit(&family, &null_design, &y)?;
                Ok::<_, StatError>(lrt_generic(full.log_likelihood, null.log_likelihood, 2)?.statistic)
            })
            .into_iter()
            .collect::<Result<_>>()?
        }
    };
    let law = DistributionSpec::chi_squared(scenario.df() as u32)?;
    let mut sorted = stats.clone();
    sorted.sort_by(f64::total_cmp);
    let qq_table = [0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 0.99]
        .iter()
        .map(|&u| {
            Ok(QqRow { probability: u, empirical: empirical_quantile(&sorted, u), theoretical: law.quantile(u)? })
        })
        .collect::<Result<_>>()?;
    Ok(WilksReport {
        scenario,
        n,
        replicates,
        df: scenario.df(),
        ks_distance: ks_distance(&stats, |v| law.cdf(v)),
        qq_table,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SizeTest {
    ZMean,
    TMean,
    FVariances,
    /// Four groups of `n`.
    Anova,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectionStudy {
    pub test: SizeTest,
    pub n: usize,
    pub alpha: f64,
    pub shift: f64,
    pub replicates: usize,
    pub rejection_rate: f64,
    pub std_error: f64,
}

/// Rejection frequency with standard normal data, the first sample shifted by `shift`
/// (`shift = 0` gives the size under the null).
pub fn rejection_study(
    test: SizeTest,
    n: usize,
    alpha: f64,
    shift: f64,
    replicates: usize,
    stream: &RandomStream,
) -> Result<RejectionStudy> {
    let draw = |s: &mut RandomStream, k: usize, mu: f64| {
        let mut v = vec![0.0; k];
        s.fill_normal(&mut v);
        v.iter_mut().for_each(|x| *x += mu);
        v
    };
    let rejects = exec::replicate(stream, replicates, |_, s| {
        let r = match test {
            SizeTest::ZMean => lrt_mean(&draw(s, n, shift), 0.0, Some(1.0))?,
            SizeTest::TMean => lrt_mean(&draw(s, n, shift), 0.0, None)?,
            SizeTest::FVariances => {
                let x: Vec<f64> = draw(s, n, 0.0).iter().map(|v| v * (1.0 + shift)).collect();
                f_test_variances(&x, &draw(s, n, 0.0))?
            }
            SizeTest::Anova => {
                let groups: Vec<Vec<f64>> = (0..4).map(|g| draw(s, n, if g == 0 { shift } else { 0.0 })).collect();
                anova_one_way(&groups)?.test
            }
        };
        Ok::<_, StatError>(r.reject(alpha))
    });
    let rejects: Vec<bool> = rejects.into_iter().collect::<Result<_>>()?;
    let rate = stats::frequency(&rejects, |&r| r);
    Ok(RejectionStudy {
        test,
        n,
        alpha,
        shift,
        replicates,
        rejection_rate: rate,
        std_error: stats::binomial_se(rate.max(alpha), replicates),
    })
}

/// KS distance of the ANOVA statistic under the null to its F law.
pub fn anova_null_ks(groups: usize, size: usize, replicates: usize, stream: &RandomStream) -> Result<f64> {
    let n = groups * size;
    let law = DistributionSpec::fisher_f((groups - 1) as u32, (n - groups) as u32)?;
    let v = exec::replicate(stream, replicates, |_, s| {
        let gs: Vec<Vec<f64>> = (0..groups)
            .map(|_| {
                let mut g = vec![0.0; size];
                s.fill_normal(&mut g);
                g
            })
            .collect();
        anova_one_way(&gs).map(|r| r.test.statistic)
    });
    let v: Vec<f64> = v.into_iter().collect::<Result<_>>()?;
    Ok(ks_distance(&v, |x| law.cdf(x)))
}
