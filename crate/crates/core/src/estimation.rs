//! Point estimators, maximum likelihood, Fisher information, confidence
//! intervals, shrinkage and conjugate updates.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::distributions::{ks_distance, DistributionSpec};
use crate::error::{check_delta, Result, StatError};
use crate::exec;
use crate::rng::RandomStream;
use crate::special::{log_minus_digamma, norm_cdf, norm_quantile, pairwise_sum, trigamma};
use crate::stats::{self, mean, sum_sq_dev};

/// How a confidence interval was built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiKind {
    MeanZ,
    MeanT,
    VarianceAsymptotic,
    MleAsymptotic,
    TwoSampleT,
    DeltaMethod,
    CoefT,
    CoefZ,
    MeanPointwise,
    MeanScheffe,
    Prediction,
    GlmWald,
}

impl CiKind {
    /// Identifier of the formula used, echoed in reports.
    pub fn formula(&self) -> &'static str {
        match self {
            CiKind::MeanZ => "xbar -+ z[d/2] sigma/sqrt(n)",
            CiKind::MeanT => "xbar -+ t[n-1,d/2] S/sqrt(n)",
            CiKind::VarianceAsymptotic => "(1 -+ sqrt(2/n) z[d/2]) s2_mle",
            CiKind::MleAsymptotic => "theta -+ z[d/2] / sqrt(F_n(theta))",
            CiKind::TwoSampleT => "Dbar -+ t[m+n-2,d/2] sqrt(c(eta) S2(eta))",
            CiKind::DeltaMethod => "g(theta) -+ z[d/2] sqrt(grad' F^-1 grad)",
            CiKind::CoefT => "beta_j -+ t[n-p-1,d/2] sigma_hat sqrt(s_jj)",
            CiKind::CoefZ => "beta_j -+ z[d/2] sigma sqrt(s_jj)",
            CiKind::MeanPointwise => "x0'beta -+ t[n-p-1,d/2] sigma_hat sqrt(q)",
            CiKind::MeanScheffe => "x0'beta -+ sigma_hat sqrt((p+1) f[p+1,n-p-1,d]) sqrt(q)",
            CiKind::Prediction => "x0'beta -+ t[n-p-1,d/2] sigma_hat sqrt(1+q)",
            CiKind::GlmWald => "beta_j -+ z[d/2] sqrt((X'WX)^-1_jj)",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub lo: f64,
    pub hi: f64,
    pub level: f64,
    pub kind: CiKind,
    pub formula: String,
}

impl ConfidenceInterval {
    pub fn centered(center: f64, half_width: f64, delta: f64, kind: CiKind) -> Self {
        ConfidenceInterval {
            lo: center - half_width,
            hi: center + half_width,
            level: 1.0 - delta,
            kind,
            formula: kind.formula().to_string(),
        }
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.hi - self.lo)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }
}

/// Upper-tail standard normal quantile `z_{delta/2}`.
pub fn z_two_sided(delta: f64) -> f64 {
    norm_quantile(1.0 - 0.5 * delta)
}

/// Upper-tail Student quantile `t_{k, delta/2}`.
pub fn t_two_sided(k: usize, delta: f64) -> Result<f64> {
    let k = u32::try_from(k).map_err(|_| StatError::Domain("degrees of freedom too large".into()))?;
    DistributionSpec::student_t(k)?.quantile(1.0 - 0.5 * delta)
}

// ---------------------------------------------------------------------------
// sigma^2_c family

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceFamily {
    pub estimate: f64,
    pub c: f64,
    pub n: usize,
}

impl VarianceFamily {
    pub fn theoretical_bias(&self, sigma2: f64) -> f64 {
        variance_family_bias(self.n, self.c, sigma2)
    }

    pub fn theoretical_mse(&self, sigma2: f64) -> f64 {
        variance_family_mse(self.n, self.c, sigma2)
    }
}

/// `c * sum (x_j - xbar)^2`.
pub fn variance_family(sample: &[f64], c: f64) -> Result<VarianceFamily> {
    if sample.len() < 2 {
        return Err(StatError::DegenerateSample(format!(
            "variance estimation needs n >= 2, got {}",
            sample.len()
        )));
    }
    if !(c > 0.0) {
        return Err(StatError::param("c", "must be positive"));
    }
    Ok(VarianceFamily { estimate: c * sum_sq_dev(sample), c, n: sample.len() })
}

pub fn variance_family_bias(n: usize, c: f64, sigma2: f64) -> f64 {
    (c * (n as f64 - 1.0) - 1.0) * sigma2
}

/// Mean squared error under normal sampling.
pub fn variance_family_mse(n: usize, c: f64, sigma2: f64) -> f64 {
    let n = n as f64;
    ((n - 1.0) * (n + 1.0) * c * c - 2.0 * (n - 1.0) * c + 1.0) * sigma2 * sigma2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MsePoint {
    pub c: f64,
    pub empirical_mse: f64,
    pub std_error: f64,
    pub theoretical_mse: f64,
}

/// Empirical mse of every `sigma^2_c` on shared Normal{0, sigma2} samples.
pub fn variance_family_experiment(
    n: usize,
    cs: &[f64],
    sigma2: f64,
    replicates: usize,
    stream: &RandomStream,
) -> Result<Vec<MsePoint>> {
    let spec = DistributionSpec::normal(0.0, sigma2)?;
    if n < 2 {
        return Err(StatError::InsufficientData { needed: 2, got: n });
    }
    let ss = exec::replicate(stream, replicates, |_, s| sum_sq_dev(&spec.sample(s, n)));
    Ok(cs
        .iter()
        .map(|&c| {
            let errs: Vec<f64> = ss.iter().map(|v| (c * v - sigma2).powi(2)).collect();
            MsePoint {
                c,
                empirical_mse: mean(&errs),
                std_error: stats::std_error(&errs),
                theoretical_mse: variance_family_mse(n, c, sigma2),
            }
        })
        .collect())
}

// ---------------------------------------------------------------------------
// Maximum likelihood

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MleFamily {
    /// theta = (mu, sigma2)
    Normal,
    /// theta = (lambda)
    Exponential,
    /// theta = (p)
    Bernoulli,
    /// theta = (lambda)
    Poisson,
    /// theta = (alpha, lambda), rate and shape
    Gamma,
}

impl MleFamily {
    pub fn parameter_names(&self) -> &'static [&'static str] {
        match self {
            MleFamily::Normal => &["mu", "sigma2"],
            MleFamily::Exponential | MleFamily::Poisson => &["lambda"],
            MleFamily::Bernoulli => &["p"],
            MleFamily::Gamma => &["alpha", "lambda"],
        }
    }

    pub fn spec(&self, theta: &[f64]) -> Result<DistributionSpec> {
        match self {
            MleFamily::Normal => DistributionSpec::normal(theta[0], theta[1]),
            MleFamily::Exponential => DistributionSpec::exponential(theta[0]),
            MleFamily::Bernoulli => DistributionSpec::bernoulli(theta[0]),
            MleFamily::Poisson => DistributionSpec::poisson(theta[0]),
            MleFamily::Gamma => DistributionSpec::gamma(theta[0], theta[1]),
        }
    }

    pub fn log_likelihood(&self, theta: &[f64], sample: &[f64]) -> Result<f64> {
        let spec = self.spec(theta)?;
        let terms: Vec<f64> = sample.iter().map(|&x| spec.ln_pdf(x)).collect();
        Ok(pairwise_sum(&terms))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub family: MleFamily,
    pub parameter_names: Vec<String>,
    pub estimate: Vec<f64>,
    pub log_likelihood: f64,
    /// Absent for boundary estimates.
    pub fisher_info: Option<Vec<Vec<f64>>>,
    pub asymptotic_cov: Option<Vec<Vec<f64>>>,
    pub iterations: usize,
    pub boundary: bool,
    pub n: usize,
    pub formula: String,
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn from_rows(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    DMatrix::from_fn(n, m, |i, j| rows[i][j])
}

impl FitResult {
    pub fn fisher_matrix(&self) -> Result<DMatrix<f64>> {
        self.fisher_info
            .as_deref()
            .map(from_rows)
            .ok_or_else(|| StatError::Boundary("Fisher information undefined at a boundary estimate".into()))
    }

    pub fn cov_matrix(&self) -> Result<DMatrix<f64>> {
        self.asymptotic_cov
            .as_deref()
            .map(from_rows)
            .ok_or_else(|| StatError::Boundary("asymptotic covariance undefined at a boundary estimate".into()))
    }
}

/// Fisher information of `n` observations at `theta`.
pub fn fisher_information(family: MleFamily, theta: &[f64], n: usize) -> Result<DMatrix<f64>> {
    let k = family.parameter_names().len();
    if theta.len() != k {
        return Err(StatError::LengthMismatch { expected: k, got: theta.len() });
    }
    let nf = n as f64;
    let interior = |ok: bool, what: &str| {
        if ok {
            Ok(())
        } else {
            Err(StatError::Domain(format!("{what} is not interior to the parameter domain")))
        }
    };
    Ok(match family {
        MleFamily::Normal => {
            let s2 = theta[1];
            interior(s2 > 0.0 && theta[0].is_finite(), "sigma2")?;
            DMatrix::from_row_slice(2, 2, &[nf / s2, 0.0, 0.0, nf / (2.0 * s2 * s2)])
        }
        MleFamily::Exponential => {
            interior(theta[0] > 0.0, "lambda")?;
            DMatrix::from_element(1, 1, nf / (theta[0] * theta[0]))
        }
        MleFamily::Bernoulli => {
            let p = theta[0];
            interior(p > 0.0 && p < 1.0, "p")?;
            DMatrix::from_element(1, 1, nf / (p * (1.0 - p)))
        }
        MleFamily::Poisson => {
            interior(theta[0] > 0.0, "lambda")?;
            DMatrix::from_element(1, 1, nf / theta[0])
        }
        MleFamily::Gamma => {
            let (a, l) = (theta[0], theta[1]);
            interior(a > 0.0 && l > 0.0, "(alpha, lambda)")?;
            DMatrix::from_row_slice(2, 2, &[nf * l / (a * a), -nf / a, -nf / a, nf * trigamma(l)])
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaShapeSolution {
    pub lambda: f64,
    pub iterations: usize,
    /// `|psi(lambda) - ln(lambda) - (mean ln x - ln mean x)|` at the solution.
    pub residual: f64,
}

/// Solves `ln(lambda) - psi(lambda) = d` for `d > 0` by safeguarded Newton.
pub fn gamma_shape_newton(d: f64) -> Result<GammaShapeSolution> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(StatError::DegenerateDispersion(format!(
            "ln(mean x) - mean(ln x) = {d}; no finite shape estimate"
        )));
    }
    let mut lambda = (3.0 - d + ((d - 3.0).powi(2) + 24.0 * d).sqrt()) / (12.0 * d);
    for it in 1..=100 {
        let g = log_minus_digamma(lambda) - d;
        let gp = 1.0 / lambda - trigamma(lambda);
        let mut next = lambda - g / gp;
        if !(next > 0.0) || !next.is_finite() {
            next = 0.5 * lambda;
        }
        let step = (next - lambda).abs();
        lambda = next;
        if step <= 1e-12 * (1.0 + lambda) {
            let residual = (log_minus_digamma(lambda) - d).abs();
            return Ok(GammaShapeSolution { lambda, iterations: it, residual });
        }
    }
    Err(StatError::NotConverged { iterations: 100, last: vec![lambda] })
}

pub fn mle_fit(family: MleFamily, sample: &[f64]) -> Result<FitResult> {
    let n = sample.len();
    if n == 0 {
        return Err(StatError::InsufficientData { needed: 1, got: 0 });
    }
    if sample.iter().any(|x| !x.is_finite()) {
        return Err(StatError::Domain("sample contains non-finite values".into()));
    }
    let xbar = mean(sample);
    let mut iterations = 0;
    let mut boundary = false;
    let (theta, formula) = match family {
        MleFamily::Normal => {
            let s2 = sum_sq_dev(sample) / n as f64;
            if s2 <= 0.0 {
                return Err(StatError::DegenerateSample("constant sample has zero variance".into()));
            }
            (vec![xbar, s2], "mu = xbar, sigma2 = SS/n")
        }
        MleFamily::Exponential => {
            if sample.iter().any(|&x| x < 0.0) {
                return Err(StatError::Domain("exponential sample must be nonnegative".into()));
            }
            let total = pairwise_sum(sample);
            if total <= 0.0 {
                return Err(StatError::DegenerateSample("all-zero exponential sample".into()));
            }
            (vec![n as f64 / total], "lambda = n / sum x")
        }
        MleFamily::Bernoulli => {
            if sample.iter().any(|&x| x != 0.0 && x != 1.0) {
                return Err(StatError::Domain("Bernoulli sample must be 0/1".into()));
            }
            boundary = xbar == 0.0 || xbar == 1.0;
            (vec![xbar], "p = xbar")
        }
        MleFamily::Poisson => {
            if sample.iter().any(|&x| x < 0.0 || x != x.floor()) {
                return Err(StatError::Domain("Poisson sample must be nonnegative integers".into()));
            }
            boundary = xbar == 0.0;
            (vec![xbar], "lambda = xbar")
        }
        MleFamily::Gamma => {
            if sample.iter().any(|&x| x <= 0.0) {
                return Err(StatError::Domain("Gamma sample must be strictly positive".into()));
            }
            let logs: Vec<f64> = sample.iter().map(|x| x.ln()).collect();
            let d = xbar.ln() - mean(&logs);
            let sol = gamma_shape_newton(d)?;
            iterations = sol.iterations;
            (vec![sol.lambda / xbar, sol.lambda], "psi(lambda) - ln(lambda) = mean ln x - ln xbar; alpha = lambda/xbar")
        }
    };
    let log_likelihood = if boundary {
        // degenerate law: every observation has probability one
        0.0
    } else {
        family.log_likelihood(&theta, sample)?
    };
    let (fisher_info, asymptotic_cov) = if boundary {
        (None, None)
    } else {
        let f = fisher_information(family, &theta, n)?;
        let cov = f.clone().try_inverse().ok_or_else(|| StatError::Domain("singular Fisher information".into()))?;
        (Some(to_rows(&f)), Some(to_rows(&cov)))
    };
    Ok(FitResult {
        family,
        parameter_names: family.parameter_names().iter().map(|s| s.to_string()).collect(),
        estimate: theta,
        log_likelihood,
        fisher_info,
        asymptotic_cov,
        iterations,
        boundary,
        n,
        formula: formula.to_string(),
    })
}

// ---------------------------------------------------------------------------
// Confidence intervals

fn need(n: usize, needed: usize) -> Result<()> {
    if n < needed {
        Err(StatError::InsufficientData { needed, got: n })
    } else {
        Ok(())
    }
}

pub fn ci_mean_z(xbar: f64, sigma: f64, n: usize, delta: f64) -> Result<ConfidenceInterval> {
    check_delta(delta)?;
    need(n, 1)?;
    if !(sigma >= 0.0) {
        return Err(StatError::param("sigma", "must be nonnegative"));
    }
    let hw = z_two_sided(delta) * sigma / (n as f64).sqrt();
    Ok(ConfidenceInterval::centered(xbar, hw, delta, CiKind::MeanZ))
}

pub fn ci_mean_t_summary(xbar: f64, sd: f64, n: usize, delta: f64) -> Result<ConfidenceInterval> {
    check_delta(delta)?;
    need(n, 2)?;
    let hw = t_two_sided(n - 1, delta)? * sd / (n as f64).sqrt();
    Ok(ConfidenceInterval::centered(xbar, hw, delta, CiKind::MeanT))
}

pub fn ci_mean_t(sample: &[f64], delta: f64) -> Result<ConfidenceInterval> {
    need(sample.len(), 2)?;
    ci_mean_t_summary(mean(sample), stats::std_dev(sample), sample.len(), delta)
}

pub fn ci_variance_asymptotic(sample: &[f64], delta: f64) -> Result<ConfidenceInterval> {
    check_delta(delta)?;
    let n = sample.len();
    need(n, 2)?;
    let s2 = sum_sq_dev(sample) / n as f64;
    let r = (2.0 / n as f64).sqrt() * z_two_sided(delta);
    Ok(ConfidenceInterval {
        lo: (1.0 - r) * s2,
        hi: (1.0 + r) * s2,
        level: 1.0 - delta,
        kind: CiKind::VarianceAsymptotic,
        formula: CiKind::VarianceAsymptotic.formula().into(),
    })
}

pub fn ci_mle_asymptotic(fit: &FitResult, index: usize, delta: f64) -> Result<ConfidenceInterval> {
    check_delta(delta)?;
    let cov = fit.cov_matrix()?;
    if index >= fit.estimate.len() {
        return Err(StatError::Domain(format!("parameter index {index} out of range")));
    }
    let hw = z_two_sided(delta) * cov[(index, index)].sqrt();
    Ok(ConfidenceInterval::centered(fit.estimate[index], hw, delta, CiKind::MleAsymptotic))
}

/// Interval for `mu_X - mu_Y` when the variance ratio `eta = sigma_X^2 / sigma_Y^2` is known.
pub fn ci_two_sample_t(x: &[f64], y: &[f64], eta: f64, delta: f64) -> Result<ConfidenceInterval> {
    check_delta(delta)?;
    need(x.len(), 2)?;
    need(y.len(), 2)?;
    if !(eta > 0.0) {
        return Err(StatError::param("eta", "variance ratio must be positive"));
    }
    let (m, n) = (x.len() as f64, y.len() as f64);
    let d = mean(x) - mean(y);
    let s2 = ((m - 1.0) * stats::variance(x) + (n - 1.0) * eta * stats::variance(y)) / (m + n - 2.0);
    let c = 1.0 / m + 1.0 / (n * eta);
    let hw = t_two_sided(x.len() + y.len() - 2, delta)? * (c * s2).sqrt();
    Ok(ConfidenceInterval::centered(d, hw, delta, CiKind::TwoSampleT))
}

pub fn ci_delta_method(
    fit: &FitResult,
    g: &dyn Fn(&[f64]) -> f64,
    grad: &dyn Fn(&[f64]) -> Vec<f64>,
    delta: f64,
) -> Result<ConfidenceInterval> {
    check_delta(delta)?;
    let cov = fit.cov_matrix()?;
    let gr = DVector::from_vec(grad(&fit.estimate));
    if gr.len() != fit.estimate.len() {
        return Err(StatError::LengthMismatch { expected: fit.estimate.len(), got: gr.len() });
    }
    let var = (gr.transpose() * &cov * &gr)[(0, 0)];
    let hw = z_two_sided(delta) * var.max(0.0).sqrt();
    Ok(ConfidenceInterval::centered(g(&fit.estimate), hw, delta, CiKind::DeltaMethod))
}

/// Inputs for [`ci_parametric`].
pub enum CiRequest<'a> {
    MeanZ { xbar: f64, sigma: f64, n: usize },
    MeanT { sample: &'a [f64] },
    VarianceAsymptotic { sample: &'a [f64] },
    MleAsymptotic { fit: &'a FitResult, index: usize },
    TwoSampleT { x: &'a [f64], y: &'a [f64], eta: f64 },
    DeltaMethod { fit: &'a FitResult, g: &'a dyn Fn(&[f64]) -> f64, grad: &'a dyn Fn(&[f64]) -> Vec<f64> },
}

pub fn ci_parametric(request: CiRequest<'_>, delta: f64) -> Result<ConfidenceInterval> {
    match request {
        CiRequest::MeanZ { xbar, sigma, n } => ci_mean_z(xbar, sigma, n, delta),
        CiRequest::MeanT { sample } => ci_mean_t(sample, delta),
        CiRequest::VarianceAsymptotic { sample } => ci_variance_asymptotic(sample, delta),
        CiRequest::MleAsymptotic { fit, index } => ci_mle_asymptotic(fit, index, delta),
        CiRequest::TwoSampleT { x, y, eta } => ci_two_sample_t(x, y, eta, delta),
        CiRequest::DeltaMethod { fit, g, grad } => ci_delta_method(fit, g, grad, delta),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageStudy {
    pub replicates: usize,
    pub coverage: f64,
    pub std_error: f64,
    pub mean_half_width: f64,
}

/// Coverage of `mean_t` intervals for the mean of Normal{mu, sigma2} samples of size `n`.
pub fn mean_t_coverage(
    n: usize,
    mu: f64,
    sigma2: f64,
    delta: f64,
    replicates: usize,
    stream: &RandomStream,
) -> Result<CoverageStudy> {
    need(n, 2)?;
    let spec = DistributionSpec::normal(mu, sigma2)?;
    let t = t_two_sided(n - 1, delta)?;
    let out = exec::replicate(stream, replicates, |_, s| {
        let x = spec.sample(s, n);
        let hw = t * stats::std_dev(&x) / (n as f64).sqrt();
        ((mean(&x) - mu).abs() <= hw, hw)
    });
    let coverage = out.iter().filter(|o| o.0).count() as f64 / replicates as f64;
    let hws: Vec<f64> = out.iter().map(|o| o.1).collect();
    Ok(CoverageStudy {
        replicates,
        coverage,
        std_error: stats::binomial_se(coverage, replicates),
        mean_half_width: mean(&hws),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CramerRaoStudy {
    pub empirical_variance: f64,
    pub std_error: f64,
    pub inverse_information: f64,
}

/// Variance of the sample mean for Bernoulli or Poisson data against `1/F_n`.
pub fn cramer_rao_study(
    family: MleFamily,
    theta: f64,
    n: usize,
    replicates: usize,
    stream: &RandomStream,
) -> Result<CramerRaoStudy> {
    if !matches!(family, MleFamily::Bernoulli | MleFamily::Poisson) {
        return Err(StatError::Domain("Cramér–Rao attainment study covers Bernoulli and Poisson".into()));
    }
    let spec = family.spec(&[theta])?;
    let info = fisher_information(family, &[theta], n)?[(0, 0)];
    let means = exec::replicate(stream, replicates, |_, s| mean(&spec.sample(s, n)));
    Ok(CramerRaoStudy {
        empirical_variance: stats::variance(&means),
        std_error: stats::variance_se(&means),
        inverse_information: 1.0 / info,
    })
}

/// KS distance to N(0,1) of `sqrt(n F_1(theta)) (theta_hat - theta)` for Exponential{lambda}.
pub fn exponential_asymptotic_ks(lambda: f64, n: usize, replicates: usize, stream: &RandomStream) -> Result<f64> {
    let spec = DistributionSpec::exponential(lambda)?;
    let scale = (n as f64).sqrt() / lambda;
    let z = exec::replicate(stream, replicates, |_, s| {
        let x = spec.sample(s, n);
        let est = n as f64 / pairwise_sum(&x);
        scale * (est - lambda)
    });
    Ok(ks_distance(&z, norm_cdf))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaMleStudy {
    pub replicates: usize,
    pub ks_alpha: f64,
    pub ks_lambda: f64,
    pub mean_alpha: f64,
    pub mean_lambda: f64,
    pub max_newton_residual: f64,
}

/// Replicated Gamma MLE, each coordinate standardized by the asymptotic
/// covariance at the true parameter.
pub fn gamma_mle_study(alpha: f64, lambda: f64, n: usize, replicates: usize, stream: &RandomStream) -> Result<GammaMleStudy> {
    let spec = DistributionSpec::gamma(alpha, lambda)?;
    let cov = fisher_information(MleFamily::Gamma, &[alpha, lambda], n)?
        .try_inverse()
        .ok_or_else(|| StatError::Domain("singular Gamma information".into()))?;
    let (sa, sl) = (cov[(0, 0)].sqrt(), cov[(1, 1)].sqrt());
    let fits = exec::replicate(stream, replicates, |_, s| {
        let x = spec.sample(s, n);
        let logs: Vec<f64> = x.iter().map(|v| v.ln()).collect();
        let xbar = mean(&x);
        let sol = gamma_shape_newton(xbar.ln() - mean(&logs))?;
        Ok::<_, StatError>((sol.lambda / xbar, sol.lambda, sol.residual))
    });
    let fits: Vec<(f64, f64, f64)> = fits.into_iter().collect::<Result<_>>()?;
    let za: Vec<f64> = fits.iter().map(|f| (f.0 - alpha) / sa).collect();
    let zl: Vec<f64> = fits.iter().map(|f| (f.1 - lambda) / sl).collect();
    let a: Vec<f64> = fits.iter().map(|f| f.0).collect();
    let l: Vec<f64> = fits.iter().map(|f| f.1).collect();
    Ok(GammaMleStudy {
        replicates,
        ks_alpha: ks_distance(&za, norm_cdf),
        ks_lambda: ks_distance(&zl, norm_cdf),
        mean_alpha: mean(&a),
        mean_lambda: mean(&l),
        max_newton_residual: fits.iter().map(|f| f.2).fold(0.0, f64::max),
    })
}

// ---------------------------------------------------------------------------
// Shrinkage

/// `(1 - (p-2) sigma2 / |x - nu|^2)(x - nu) + nu`; `nu` defaults to 0.
pub fn james_stein(x: &[f64], sigma2: f64, nu: Option<&[f64]>) -> Result<Vec<f64>> {
    let p = x.len();
    if p == 0 {
        return Err(StatError::InsufficientData { needed: 1, got: 0 });
    }
    if let Some(nu) = nu {
        if nu.len() != p {
            return Err(StatError::LengthMismatch { expected: p, got: nu.len() });
        }
    }
    let target = |j: usize| nu.map_or(0.0, |v| v[j]);
    let norm2: f64 = (0..p).map(|j| (x[j] - target(j)).powi(2)).sum();
    if norm2 == 0.0 {
        return Err(StatError::Domain("x equals the shrinkage target; factor is singular".into()));
    }
    let factor = 1.0 - (p as f64 - 2.0) * sigma2 / norm2;
    Ok((0..p).map(|j| factor * (x[j] - target(j)) + target(j)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JamesSteinStudy {
    pub mse_js: f64,
    pub se_js: f64,
    pub mse_mle: f64,
    pub se_mle: f64,
}

/// Total squared error of James–Stein and of `X` itself for `X ~ N(mu, sigma2 I)`.
pub fn james_stein_study(mu: &[f64], sigma2: f64, replicates: usize, stream: &RandomStream) -> Result<JamesSteinStudy> {
    let sd = sigma2.sqrt();
    let out = exec::replicate(stream, replicates, |_, s| {
        let x: Vec<f64> = mu.iter().map(|m| m + sd * s.normal()).collect();
        let js = james_stein(&x, sigma2, None)?;
        let e_js: f64 = js.iter().zip(mu).map(|(a, b)| (a - b).powi(2)).sum();
        let e_mle: f64 = x.iter().zip(mu).map(|(a, b)| (a - b).powi(2)).sum();
        Ok::<_, StatError>((e_js, e_mle))
    });
    let out: Vec<(f64, f64)> = out.into_iter().collect::<Result<_>>()?;
    let js: Vec<f64> = out.iter().map(|o| o.0).collect();
    let ml: Vec<f64> = out.iter().map(|o| o.1).collect();
    Ok(JamesSteinStudy {
        mse_js: mean(&js),
        se_js: stats::std_error(&js),
        mse_mle: mean(&ml),
        se_mle: stats::std_error(&ml),
    })
}

// ---------------------------------------------------------------------------
// Conjugate Bayes

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum PosteriorSpec {
    Beta { alpha: f64, beta: f64 },
    Normal { mean: f64, variance: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum DataSummary {
    Bernoulli { successes: u64, trials: u64 },
    /// Sample mean of `n` observations with known variance `sigma2`.
    NormalKnownVariance { xbar: f64, n: u64, sigma2: f64 },
}

impl PosteriorSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PosteriorSpec::Beta { alpha, beta } => {
                DistributionSpec::beta(alpha, beta)?;
            }
            PosteriorSpec::Normal { mean, variance } => {
                DistributionSpec::normal(mean, variance)?;
            }
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        match *self {
            PosteriorSpec::Beta { alpha, beta } => alpha / (alpha + beta),
            PosteriorSpec::Normal { mean, .. } => mean,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            PosteriorSpec::Beta { alpha, beta } => {
                let s = alpha + beta;
                alpha * beta / (s * s * (s + 1.0))
            }
            PosteriorSpec::Normal { variance, .. } => variance,
        }
    }

    /// Predictive probability that the next Bernoulli trial succeeds.
    pub fn predictive_success(&self) -> Option<f64> {
        match *self {
            PosteriorSpec::Beta { alpha, beta } => Some(alpha / (alpha + beta)),
            PosteriorSpec::Normal { .. } => None,
        }
    }
}

pub fn conjugate_update(prior: &PosteriorSpec, data: &DataSummary) -> Result<PosteriorSpec> {
    prior.validate()?;
    match (*prior, *data) {
        (PosteriorSpec::Beta { alpha, beta }, DataSummary::Bernoulli { successes, trials }) => {
            if successes > trials {
                return Err(StatError::Domain(format!("{successes} successes exceed {trials} trials")));
            }
            Ok(PosteriorSpec::Beta {
                alpha: alpha + successes as f64,
                beta: beta + (trials - successes) as f64,
            })
        }
        (PosteriorSpec::Normal { mean, variance }, DataSummary::NormalKnownVariance { xbar, n, sigma2 }) => {
            if n == 0 || !(sigma2 > 0.0) {
                return Err(StatError::Domain("normal update needs n >= 1 and sigma2 > 0".into()));
            }
            let sn = sigma2 / n as f64;
            let w = variance / (variance + sn);
            Ok(PosteriorSpec::Normal {
                mean: (1.0 - w) * mean + w * xbar,
                variance: variance * sn / (variance + sn),
            })
        }
        _ => Err(StatError::Domain("prior family and data summary are not conjugate".into())),
    }
}

// ---------------------------------------------------------------------------
// Monte Carlo

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloResult {
    pub estimate: f64,
    pub sd: f64,
    pub std_error: f64,
    pub ci: ConfidenceInterval,
    /// Chebyshev sample size for precision `epsilon`, if one was given.
    pub n_chebyshev: Option<f64>,
    /// CLT sample size for precision `epsilon`, if one was given.
    pub n_clt: Option<f64>,
    pub zero_variance: bool,
    pub n: usize,
}

/// `(sigma_f^2 / (delta eps^2), 2 ln(1/delta) sigma_f^2 / eps^2)`.
pub fn mc_sample_sizes(sigma_f: f64, delta: f64, epsilon: f64) -> (f64, f64) {
    let v = sigma_f * sigma_f;
    (v / (delta * epsilon * epsilon), 2.0 * (1.0 / delta).ln() * v / (epsilon * epsilon))
}

fn summarize_mc(values: &[f64], delta: f64, epsilon: Option<f64>) -> Result<MonteCarloResult> {
    let n = values.len();
    let estimate = pairwise_sum(values) / n as f64;
    let sd = stats::std_dev(values);
    let se = sd / (n as f64).sqrt();
    let ci = ConfidenceInterval::centered(estimate, z_two_sided(delta) * se, delta, CiKind::MeanZ);
    let sizes = epsilon.map(|e| mc_sample_sizes(sd, delta, e));
    Ok(MonteCarloResult {
        estimate,
        sd,
        std_error: se,
        ci,
        n_chebyshev: sizes.map(|s| s.0),
        n_clt: sizes.map(|s| s.1),
        zero_variance: sd == 0.0,
        n,
    })
}

/// Mean of `f(X_i)` where draw `i` is `sampler(&mut stream.split(i))`.
pub fn monte_carlo_mean_with<S, F>(
    sampler: S,
    f: F,
    n: usize,
    delta: f64,
    epsilon: Option<f64>,
    stream: &RandomStream,
) -> Result<MonteCarloResult>
where
    S: Fn(&mut RandomStream) -> Vec<f64> + Sync + Send,
    F: Fn(&[f64]) -> f64 + Sync + Send,
{
    need(n, 2)?;
    check_delta(delta)?;
    let values = exec::replicate(stream, n, |_, s| f(&sampler(s)));
    summarize_mc(&values, delta, epsilon)
}

/// Mean of `f` over `n` draws of `dim` i.i.d. coordinates from `spec`.
pub fn monte_carlo_mean<F>(
    f: F,
    spec: &DistributionSpec,
    dim: usize,
    n: usize,
    delta: f64,
    epsilon: Option<f64>,
    stream: &RandomStream,
) -> Result<MonteCarloResult>
where
    F: Fn(&[f64]) -> f64 + Sync + Send,
{
    spec.validate()?;
    monte_carlo_mean_with(|s| spec.sample(s, dim), f, n, delta, epsilon, stream)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variance_family_examples() {
        let v = variance_family(&[0.0, 2.0], 1.0).unwrap();
        assert_eq!(v.estimate, 2.0);
        assert_eq!(variance_family_bias(10, 1.0 / 9.0, 1.0), 0.0);
        assert!((variance_family_mse(2, 1.0 / 3.0, 1.0) - 2.0 / 3.0).abs() < 1e-15);
        assert!(variance_family(&[1.0], 1.0).is_err());
    }

    #[test]
    fn mse_ordering_in_c() {
        let n = 10;
        let m = |c: f64| variance_family_mse(n, c, 1.0);
        assert!(m(1.0 / 11.0) < m(1.0 / 10.0));
        assert!(m(1.0 / 10.0) < m(1.0 / 9.0));
    }

    #[test]
    fn closed_form_mles() {
        let f = mle_fit(MleFamily::Exponential, &[1.0, 1.0]).unwrap();
        assert_eq!(f.estimate, vec![1.0]);
        let f = mle_fit(MleFamily::Bernoulli, &[1.0, 0.0, 1.0, 1.0]).unwrap();
        assert_eq!(f.estimate, vec![0.75]);
        let f = mle_fit(MleFamily::Normal, &[0.0, 2.0]).unwrap();
        assert_eq!(f.estimate, vec![1.0, 1.0]);
    }

    #[test]
    fn bernoulli_boundary_flagged() {
        let f = mle_fit(MleFamily::Bernoulli, &[1.0, 1.0, 1.0]).unwrap();
        assert!(f.boundary);
        assert_eq!(f.estimate, vec![1.0]);
        assert!(f.fisher_matrix().is_err());
        assert!(ci_mle_asymptotic(&f, 0, 0.05).is_err());
    }

    #[test]
    fn gamma_constant_sample_is_degenerate() {
        let err = mle_fit(MleFamily::Gamma, &[2.0, 2.0, 2.0]).unwrap_err();
        assert!(matches!(err, StatError::DegenerateDispersion(_)));
    }

    #[test]
    fn gamma_newton_residual() {
        for &d in &[1e-6, 0.01, 0.3, 2.0, 10.0] {
            let s = gamma_shape_newton(d).unwrap();
            assert!(s.residual <= 1e-10, "d={d} residual={}", s.residual);
        }
    }

    #[test]
    fn fisher_examples() {
        let f = fisher_information(MleFamily::Bernoulli, &[0.5], 100).unwrap();
        assert_eq!(f[(0, 0)], 400.0);
        let f = fisher_information(MleFamily::Normal, &[0.0, 1.0], 10).unwrap();
        assert_eq!(f, DMatrix::from_row_slice(2, 2, &[10.0, 0.0, 0.0, 5.0]));
        assert!(fisher_information(MleFamily::Bernoulli, &[1.0], 10).is_err());
    }

    #[test]
    fn covariance_inverts_information() {
        let f = mle_fit(MleFamily::Gamma, &[0.5, 1.0, 2.5, 3.0, 0.2]).unwrap();
        let prod = f.cov_matrix().unwrap() * f.fisher_matrix().unwrap();
        assert!((prod - DMatrix::identity(2, 2)).abs().max() < 1e-8);
    }

    #[test]
    fn mean_z_example() {
        let ci = ci_mean_z(0.0, 1.0, 100, 0.05).unwrap();
        assert!((ci.hi - 0.196).abs() < 5e-4);
        assert!((ci.lo + 0.196).abs() < 5e-4);
    }

    #[test]
    fn mean_t_large_n_approaches_z() {
        let t = ci_mean_t_summary(0.0, 1.0, 1_000_000, 0.05).unwrap();
        let z = ci_mean_z(0.0, 1.0, 1_000_000, 0.05).unwrap();
        assert!((t.half_width() / z.half_width() - 1.0).abs() < 1e-3);
        assert!(ci_mean_t(&[1.0], 0.05).is_err());
    }

    #[test]
    fn delta_outside_unit_interval_rejected() {
        assert!(ci_mean_z(0.0, 1.0, 10, 1.0).is_err());
        assert!(ci_mean_z(0.0, 1.0, 10, 0.0).is_err());
    }

    #[test]
    fn two_sample_equal_variance_matches_pooled_formula() {
        let x = [1.0, 2.0, 4.0];
        let y = [0.0, 1.0, 1.5, 3.5];
        let ci = ci_two_sample_t(&x, &y, 1.0, 0.1).unwrap();
        let sp2 = (2.0 * stats::variance(&x) + 3.0 * stats::variance(&y)) / 5.0;
        let hw = t_two_sided(5, 0.1).unwrap() * (sp2 * (1.0 / 3.0 + 1.0 / 4.0)).sqrt();
        assert!((ci.half_width() - hw).abs() < 1e-12);
    }

    #[test]
    fn delta_method_log_of_rate() {
        let fit = mle_fit(MleFamily::Exponential, &[0.5, 1.5, 2.0, 0.25]).unwrap();
        let ci = ci_delta_method(&fit, &|t| t[0].ln(), &|t| vec![1.0 / t[0]], 0.05).unwrap();
        // var(ln lambda_hat) = 1/n
        assert!((ci.half_width() - z_two_sided(0.05) * 0.5).abs() < 1e-12);
    }

    #[test]
    fn james_stein_examples() {
        assert_eq!(james_stein(&[1.0, 2.0], 1.0, None).unwrap(), vec![1.0, 2.0]);
        let v = james_stein(&[3.0, 0.0, 0.0], 1.0, None).unwrap();
        assert!((v[0] - 8.0 / 3.0).abs() < 1e-15);
        assert!(james_stein(&[1.0, 1.0, 1.0], 1.0, Some(&[1.0, 1.0, 1.0])).is_err());
    }

    #[test]
    fn conjugate_examples() {
        let post = conjugate_update(
            &PosteriorSpec::Beta { alpha: 1.0, beta: 1.0 },
            &DataSummary::Bernoulli { successes: 7, trials: 7 },
        )
        .unwrap();
        assert!((post.predictive_success().unwrap() - 8.0 / 9.0).abs() < 1e-15);
        let (sigma2, n) = (4.0, 8);
        let post = conjugate_update(
            &PosteriorSpec::Normal { mean: 1.0, variance: sigma2 / n as f64 },
            &DataSummary::NormalKnownVariance { xbar: 3.0, n, sigma2 },
        )
        .unwrap();
        assert!((post.mean() - 2.0).abs() < 1e-15);
        let post = conjugate_update(
            &PosteriorSpec::Normal { mean: 1.0, variance: 1e9 * sigma2 / n as f64 },
            &DataSummary::NormalKnownVariance { xbar: 3.0, n, sigma2 },
        )
        .unwrap();
        assert!((post.mean() - 3.0).abs() < 1e-6);
        assert!(conjugate_update(
            &PosteriorSpec::Beta { alpha: 1.0, beta: 1.0 },
            &DataSummary::Bernoulli { successes: 3, trials: 2 }
        )
        .is_err());
    }

    #[test]
    fn sample_size_example() {
        let (cheb, _) = mc_sample_sizes(0.5, 0.05, 0.01);
        assert!((cheb - 50_000.0).abs() < 1e-6);
    }

    #[test]
    fn constant_integrand_has_zero_variance() {
        let r = monte_carlo_mean(|_| 1.0, &DistributionSpec::Uniform01, 1, 100, 0.05, None, &RandomStream::new(1))
            .unwrap();
        assert_eq!(r.estimate, 1.0);
        assert_eq!(r.sd, 0.0);
        assert!(r.zero_variance);
        assert_eq!(r.ci.width(), 0.0);
    }
}
