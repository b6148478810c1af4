//! One-parameter exponential families, canonical-link GLMs fitted by Fisher
//! scoring, Wald intervals, and 2PL ability estimation.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_delta, Result, StatError};
use crate::estimation::{z_two_sided, CiKind, ConfidenceInterval};
use crate::exec;
use crate::regression::DesignMatrix;
use crate::rng::RandomStream;
use crate::special::{ln_factorial, ln_gamma};
use crate::stats::{self, mean};

const MAX_ITER: usize = 200;
const MAX_HALVINGS: usize = 30;
const DIVERGENCE_NORM: f64 = 1e3;
/// Linear predictors this large only arise on the way to an infinite MLE
/// (Bernoulli separation, Poisson zero cells).
const ETA_DIVERGENCE: f64 = 30.0;

/// Exponential family with its canonical link. The natural parameter is the
/// linear predictor `eta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum GlmFamily {
    BernoulliLogit,
    PoissonLog,
    /// Dispersion `sigma2` treated as known.
    NormalIdentity { sigma2: f64 },
    /// Gamma with known shape; `eta = -shape / mu` is minus the rate.
    #[serde(rename = "gamma_neglog")]
    GammaCanonical { shape: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpFamilyMoments {
    pub mean: f64,
    pub variance: f64,
}

fn logistic(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

impl GlmFamily {
    pub fn validate(&self) -> Result<()> {
        match *self {
            GlmFamily::NormalIdentity { sigma2 } if !(sigma2 > 0.0 && sigma2.is_finite()) => {
                Err(StatError::param("sigma2", "must be positive"))
            }
            GlmFamily::GammaCanonical { shape } if !(shape > 0.0 && shape.is_finite()) => {
                Err(StatError::param("shape", "must be positive"))
            }
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            GlmFamily::BernoulliLogit => "bernoulli_logit",
            GlmFamily::PoissonLog => "poisson_log",
            GlmFamily::NormalIdentity { .. } => "normal_identity",
            GlmFamily::GammaCanonical { .. } => "gamma_neglog",
        }
    }

    /// Dispersion `phi`.
    pub fn dispersion(&self) -> f64 {
        match *self {
            GlmFamily::NormalIdentity { sigma2 } => sigma2,
            _ => 1.0,
        }
    }

    pub fn eta_feasible(&self, eta: f64) -> bool {
        match self {
            GlmFamily::GammaCanonical { .. } => eta < 0.0 && eta.is_finite(),
            _ => eta.is_finite(),
        }
    }

    /// `b'(eta)`
    pub fn mean(&self, eta: f64) -> f64 {
        match *self {
            GlmFamily::BernoulliLogit => logistic(eta),
            GlmFamily::PoissonLog => eta.exp(),
            GlmFamily::NormalIdentity { .. } => eta,
            GlmFamily::GammaCanonical { shape } => -shape / eta,
        }
    }

    /// Canonical link `g(mu)`.
    pub fn link(&self, mu: f64) -> f64 {
        match *self {
            GlmFamily::BernoulliLogit => (mu / (1.0 - mu)).ln(),
            GlmFamily::PoissonLog => mu.ln(),
            GlmFamily::NormalIdentity { .. } => mu,
            GlmFamily::GammaCanonical { shape } => -shape / mu,
        }
    }

    /// Variance function `V(mu)`, so that `var Y = phi V(mu)`.
    pub fn variance_function(&self, mu: f64) -> f64 {
        match *self {
            GlmFamily::BernoulliLogit => mu * (1.0 - mu),
            GlmFamily::PoissonLog => mu,
            GlmFamily::NormalIdentity { .. } => 1.0,
            GlmFamily::GammaCanonical { shape } => mu * mu / shape,
        }
    }

    fn check_response(&self, y: f64) -> Result<()> {
        let ok = match self {
            GlmFamily::BernoulliLogit => y == 0.0 || y == 1.0,
            GlmFamily::PoissonLog => y >= 0.0 && y == y.floor() && y.is_finite(),
            GlmFamily::NormalIdentity { .. } => y.is_finite(),
            GlmFamily::GammaCanonical { .. } => y > 0.0 && y.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(StatError::Domain(format!("response {y} outside the {} range", self.name())))
        }
    }

    /// Log-density of one observation at natural parameter `eta`, constants included.
    pub fn ln_density(&self, y: f64, eta: f64) -> f64 {
        match *self {
            GlmFamily::BernoulliLogit => y * eta - softplus(eta),
            GlmFamily::PoissonLog => y * eta - eta.exp() - ln_factorial(y as u64),
            GlmFamily::NormalIdentity { sigma2 } => {
                -0.5 * (y - eta).powi(2) / sigma2 - 0.5 * (2.0 * std::f64::consts::PI * sigma2).ln()
            }
            GlmFamily::GammaCanonical { shape } => {
                let rate = -eta;
                shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * y.ln() - rate * y
            }
        }
    }

    /// Starting mean for the first least-squares pass.
    fn mustart(&self, y: f64) -> f64 {
        match self {
            GlmFamily::BernoulliLogit => (y + 0.5) / 2.0,
            GlmFamily::PoissonLog => y + 0.1,
            _ => y,
        }
    }
}

/// Mean and variance of the family at natural parameter `theta`.
pub fn expfam_moments(family: &GlmFamily, theta: f64) -> Result<ExpFamilyMoments> {
    family.validate()?;
    if !family.eta_feasible(theta) {
        return Err(StatError::Domain(format!("theta = {theta} is not interior for {}", family.name())));
    }
    let mu = family.mean(theta);
    Ok(ExpFamilyMoments { mean: mu, variance: family.dispersion() * family.variance_function(mu) })
}

/// Moments of `exp((xi(theta) y - b(theta)) / phi)` for a general parametrization,
/// given derivatives of `b` and `xi` at `theta`: mean `b'/xi'`,
/// variance `phi (b'' xi' - b' xi'') / xi'^3`.
pub fn expfam_moments_general(db: f64, d2b: f64, dxi: f64, d2xi: f64, phi: f64) -> Result<ExpFamilyMoments> {
    if dxi == 0.0 || !(phi > 0.0) {
        return Err(StatError::Domain("need xi'(theta) != 0 and phi > 0".into()));
    }
    let variance = phi * (d2b * dxi - db * d2xi) / dxi.powi(3);
    if !(variance > 0.0) {
        return Err(StatError::Domain("nonpositive variance; theta is not interior".into()));
    }
    Ok(ExpFamilyMoments { mean: db / dxi, variance })
}

#[derive(Debug, Clone)]
pub struct GlmFit {
    pub family: GlmFamily,
    pub beta: DVector<f64>,
    pub eta: DVector<f64>,
    /// Fitted means, never clamped.
    pub mu: DVector<f64>,
    /// `X' W X` at the estimate.
    pub fisher_info: DMatrix<f64>,
    pub cov_beta: DMatrix<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub log_likelihood: f64,
    /// Log-likelihood before the first and after every accepted step.
    pub loglik_trace: Vec<f64>,
    /// `max |X'(y - mu)|`
    pub score_residual: f64,
    pub names: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlmFitSummary {
    pub family: GlmFamily,
    pub names: Vec<String>,
    pub beta: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub log_likelihood: f64,
    pub score_residual: f64,
}

impl GlmFit {
    pub fn summary(&self) -> GlmFitSummary {
        GlmFitSummary {
            family: self.family,
            names: self.names.clone(),
            beta: self.beta.iter().copied().collect(),
            std_errors: self.cov_beta.diagonal().iter().map(|v| v.sqrt()).collect(),
            iterations: self.iterations,
            converged: self.converged,
            log_likelihood: self.log_likelihood,
            score_residual: self.score_residual,
        }
    }
}

/// Log-likelihood of `beta`; `-inf` where the linear predictor leaves the family's domain.
pub fn glm_log_likelihood(family: &GlmFamily, x: &DesignMatrix, y: &[f64], beta: &[f64]) -> Result<f64> {
    if beta.len() != x.ncols() {
        return Err(StatError::LengthMismatch { expected: x.ncols(), got: beta.len() });
    }
    let eta = x.matrix() * DVector::from_column_slice(beta);
    Ok(loglik_at(family, y, &eta))
}

fn loglik_at(family: &GlmFamily, y: &[f64], eta: &DVector<f64>) -> f64 {
    if eta.iter().any(|&e| !family.eta_feasible(e)) {
        return f64::NEG_INFINITY;
    }
    let terms: Vec<f64> = y.iter().zip(eta.iter()).map(|(&yi, &e)| family.ln_density(yi, e)).collect();
    crate::special::pairwise_sum(&terms)
}

/// Working weights `b''(eta) / phi`.
fn weights(family: &GlmFamily, mu: &DVector<f64>) -> DVector<f64> {
    let phi = family.dispersion();
    mu.map(|m| {
        let m = match family {
            GlmFamily::BernoulliLogit => m.clamp(1e-12, 1.0 - 1e-12),
            _ => m,
        };
        family.variance_function(m) / phi
    })
}

fn weighted_gram(x: &DMatrix<f64>, w: &DVector<f64>) -> DMatrix<f64> {
    let mut xw = x.clone();
    for (mut col, _) in xw.column_iter_mut().zip(0..) {
        col.component_mul_assign(w);
    }
    x.transpose() * xw
}

fn starting_beta(family: &GlmFamily, x: &DesignMatrix, y: &[f64]) -> Result<DVector<f64>> {
    let z = DVector::from_iterator(y.len(), y.iter().map(|&v| family.link(family.mustart(v))));
    let qr = x.matrix().clone().qr();
    let beta = qr
        .r()
        .solve_upper_triangular(&(qr.q().transpose() * z))
        .ok_or_else(|| StatError::SingularDesign("design is rank deficient".into()))?;
    let eta = x.matrix() * &beta;
    if eta.iter().all(|&e| family.eta_feasible(e)) {
        return Ok(beta);
    }
    if x.has_intercept() {
        let mut b = DVector::zeros(x.ncols());
        b[0] = family.link(family.mustart(mean(y)));
        if family.eta_feasible(b[0]) {
            return Ok(b);
        }
    }
    Err(StatError::Domain(format!("no feasible starting point for {}", family.name())))
}

fn diverged(family: &GlmFamily, beta: &DVector<f64>, iterations: usize) -> StatError {
    match family {
        GlmFamily::BernoulliLogit => {
            StatError::Separation(format!("|beta| = {:.3e} after {iterations} iterations", beta.norm()))
        }
        _ => StatError::NoFiniteMle(format!("|beta| = {:.3e} diverging", beta.norm())),
    }
}

/// Fisher scoring with step-halving on the canonical-link score `X'(y - mu) / phi`.
pub fn glm_fit(family: &GlmFamily, x: &DesignMatrix, y: &[f64]) -> Result<GlmFit> {
    family.validate()?;
    let n = x.nrows();
    if y.len() != n {
        return Err(StatError::LengthMismatch { expected: n, got: y.len() });
    }
    for &v in y {
        family.check_response(v)?;
    }
    x.check_rank()?;
    let xm = x.matrix();
    let yv = DVector::from_column_slice(y);
    let phi = family.dispersion();
    let tol = 1e-10 * (1.0 + (xm.transpose() * &yv).amax());

    let mut beta = starting_beta(family, x, y)?;
    let mut eta = xm * &beta;
    let mut ll = loglik_at(family, y, &eta);
    let mut trace = vec![ll];
    let mut iterations = 0;
    loop {
        let mu = eta.map(|e| family.mean(e));
        let raw_score = xm.transpose() * (&yv - &mu);
        let w = weights(family, &mu);
        let info = weighted_gram(xm, &w);
        if raw_score.amax() <= tol {
            // the score also vanishes numerically along a diverging ray
            let runaway = match family {
                GlmFamily::BernoulliLogit => eta.amax() > ETA_DIVERGENCE,
                GlmFamily::PoissonLog => eta.min() < -ETA_DIVERGENCE,
                _ => false,
            };
            if runaway {
                return Err(diverged(family, &beta, iterations));
            }
            let cov_beta = info
                .clone()
                .try_inverse()
                .ok_or_else(|| StatError::SingularDesign("information matrix is singular".into()))?;
            return Ok(GlmFit {
                family: *family,
                beta,
                eta,
                mu,
                fisher_info: info,
                cov_beta,
                iterations,
                converged: true,
                log_likelihood: ll,
                loglik_trace: trace,
                score_residual: raw_score.amax(),
                names: x.names().to_vec(),
            });
        }
        if iterations == MAX_ITER {
            return Err(StatError::NotConverged { iterations, last: beta.iter().copied().collect() });
        }
        iterations += 1;
        let step = info
            .cholesky()
            .ok_or_else(|| StatError::SingularDesign("information matrix not positive definite".into()))?
            .solve(&(raw_score / phi));
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..=MAX_HALVINGS {
            let cand = &beta + &step * scale;
            let cand_eta = xm * &cand;
            let cand_ll = loglik_at(family, y, &cand_eta);
            // a decrease at rounding level is not a decrease
            if cand_ll >= ll - 1e-13 * (1.0 + ll.abs()) {
                beta = cand;
                eta = cand_eta;
                ll = cand_ll;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            return Err(StatError::NotConverged { iterations, last: beta.iter().copied().collect() });
        }
        trace.push(ll);
        if beta.norm() > DIVERGENCE_NORM {
            return Err(diverged(family, &beta, iterations));
        }
    }
}

/// `beta_j -+ z sqrt((X'WX)^{-1}_jj)`.
pub fn glm_wald_ci(fit: &GlmFit, j: usize, delta: f64) -> Result<ConfidenceInterval> {
    check_delta(delta)?;
    if !fit.converged {
        return Err(StatError::NotConverged { iterations: fit.iterations, last: fit.beta.iter().copied().collect() });
    }
    if j >= fit.beta.len() {
        return Err(StatError::Domain(format!("coefficient index {j} out of range")));
    }
    let hw = z_two_sided(delta) * fit.cov_beta[(j, j)].sqrt();
    Ok(ConfidenceInterval::centered(fit.beta[j], hw, delta, CiKind::GlmWald))
}

/// Draws a response vector from the model at `beta`.
pub fn glm_simulate(family: &GlmFamily, x: &DesignMatrix, beta: &[f64], stream: &mut RandomStream) -> Result<Vec<f64>> {
    use crate::distributions::DistributionSpec as D;
    let eta = x.matrix() * DVector::from_column_slice(beta);
    eta.iter()
        .map(|&e| {
            if !family.eta_feasible(e) {
                return Err(StatError::Domain(format!("linear predictor {e} infeasible")));
            }
            let mu = family.mean(e);
            Ok(match *family {
                GlmFamily::BernoulliLogit => f64::from(stream.uniform() < mu),
                GlmFamily::PoissonLog => D::poisson(mu)?.draw(stream),
                GlmFamily::NormalIdentity { sigma2 } => mu + sigma2.sqrt() * stream.normal(),
                GlmFamily::GammaCanonical { shape } => D::gamma(shape / mu, shape)?.draw(stream),
            })
        })
        .collect()
}

/// Intercept plus `p` standard normal predictors, reproducible from `stream`.
pub fn gaussian_design(n: usize, p: usize, stream: &RandomStream) -> Result<DesignMatrix> {
    let mut s = stream.clone();
    let z = DMatrix::from_fn(n, p, |_, _| s.normal());
    DesignMatrix::from_predictors(&z, true)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaldCoverageStudy {
    pub replicates: usize,
    pub coverage: Vec<f64>,
    pub coverage_se: Vec<f64>,
    pub mean_half_width: Vec<f64>,
    pub max_score_residual: f64,
}

/// Refits the model on simulated responses over a fixed design.
pub fn wald_coverage_study(
    family: &GlmFamily,
    x: &DesignMatrix,
    beta: &[f64],
    delta: f64,
    replicates: usize,
    stream: &RandomStream,
) -> Result<WaldCoverageStudy> {
    let p = x.ncols();
    let rows = exec::replicate(stream, replicates, |_, s| {
        let y = glm_simulate(family, x, beta, s)?;
        let fit = glm_fit(family, x, &y)?;
        let cis: Vec<ConfidenceInterval> = (0..p).map(|j| glm_wald_ci(&fit, j, delta)).collect::<Result<_>>()?;
        Ok::<_, StatError>((cis, fit.score_residual))
    });
    let rows: Vec<_> = rows.into_iter().collect::<Result<_>>()?;
    let coverage: Vec<f64> = (0..p).map(|j| stats::frequency(&rows, |r| r.0[j].contains(beta[j]))).collect();
    Ok(WaldCoverageStudy {
        replicates,
        coverage_se: coverage.iter().map(|&c| stats::binomial_se(c, replicates)).collect(),
        coverage,
        mean_half_width: (0..p)
            .map(|j| mean(&rows.iter().map(|r| r.0[j].half_width()).collect::<Vec<_>>()))
            .collect(),
        max_score_residual: rows.iter().map(|r| r.1).fold(0.0, f64::max),
    })
}

// ---------------------------------------------------------------------------
// 2PL item response

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IrtItem {
    /// discrimination
    pub a: f64,
    /// difficulty
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrtItemBank {
    pub items: Vec<IrtItem>,
    pub calibrated: bool,
}

impl IrtItemBank {
    pub fn new(items: Vec<IrtItem>) -> Result<Self> {
        if items.is_empty() {
            return Err(StatError::InsufficientData { needed: 1, got: 0 });
        }
        if let Some(bad) = items.iter().find(|it| !(it.a > 0.0) || !it.b.is_finite()) {
            return Err(StatError::param("a", format!("item ({}, {}) needs a > 0 and finite b", bad.a, bad.b)));
        }
        Ok(IrtItemBank { items, calibrated: true })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// `(score, information)` at ability `gamma`.
    pub fn score_info(&self, responses: &[f64], gamma: f64) -> (f64, f64) {
        let mut score = 0.0;
        let mut info = 0.0;
        for (it, &y) in self.items.iter().zip(responses) {
            let p = irt_probability(it, gamma);
            score += it.a * (y - p);
            info += it.a * it.a * p * (1.0 - p);
        }
        (score, info)
    }

    pub fn information(&self, gamma: f64) -> f64 {
        self.items
            .iter()
            .map(|it| {
                let p = irt_probability(it, gamma);
                it.a * it.a * p * (1.0 - p)
            })
            .sum()
    }
}

pub fn irt_probability(item: &IrtItem, gamma: f64) -> f64 {
    logistic(item.a * (gamma - item.b))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbilityEstimate {
    pub gamma_hat: f64,
    pub se: f64,
    pub iterations: usize,
}

/// Root of the decreasing score `sum a_i (y_i - P_i(gamma))`, Newton steps kept inside a bracket.
pub fn irt_ability_fit(bank: &IrtItemBank, responses: &[f64]) -> Result<AbilityEstimate> {
    if responses.len() != bank.len() {
        return Err(StatError::LengthMismatch { expected: bank.len(), got: responses.len() });
    }
    if responses.iter().any(|&y| y != 0.0 && y != 1.0) {
        return Err(StatError::Domain("responses must be 0/1".into()));
    }
    if responses.iter().all(|&y| y == 1.0) || responses.iter().all(|&y| y == 0.0) {
        return Err(StatError::NoFiniteMle("all responses identical; the score never vanishes".into()));
    }
    let score = |g: f64| bank.score_info(responses, g).0;
    let (mut lo, mut hi) = (-1.0, 1.0);
    while score(lo) <= 0.0 {
        lo *= 2.0;
        if lo < -1e6 {
            return Err(StatError::NoFiniteMle("score has no sign change".into()));
        }
    }
    while score(hi) >= 0.0 {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(StatError::NoFiniteMle("score has no sign change".into()));
        }
    }
    let total_a: f64 = bank.items.iter().map(|it| it.a).sum();
    let tol = 1e-10 * (1.0 + total_a);
    let mut g = 0.5 * (lo + hi);
    for it in 1..=200 {
        let (s, info) = bank.score_info(responses, g);
        if s.abs() <= tol {
            return Ok(AbilityEstimate { gamma_hat: g, se: 1.0 / info.sqrt(), iterations: it });
        }
        if s > 0.0 {
            lo = g;
        } else {
            hi = g;
        }
        let newton = g + s / info;
        g = if newton > lo && newton < hi && info > 0.0 { newton } else { 0.5 * (lo + hi) };
        if hi - lo <= 1e-15 * (1.0 + g.abs()) {
            let info = bank.information(g);
            return Ok(AbilityEstimate { gamma_hat: g, se: 1.0 / info.sqrt(), iterations: it });
        }
    }
    Err(StatError::NotConverged { iterations: 200, last: vec![g] })
}

pub fn simulate_responses(bank: &IrtItemBank, gamma: f64, stream: &mut RandomStream) -> Vec<f64> {
    bank.items.iter().map(|it| f64::from(stream.uniform() < irt_probability(it, gamma))).collect()
}

/// Evenly spread discriminations in [0.8, 2.0] and difficulties in [-2, 2].
pub fn standard_item_bank(items: usize) -> Result<IrtItemBank> {
    let k = items.max(2) as f64 - 1.0;
    IrtItemBank::new(
        (0..items)
            .map(|i| {
                let u = i as f64 / k;
                IrtItem { a: 0.8 + 1.2 * ((i * 7) % items) as f64 / k.max(1.0), b: -2.0 + 4.0 * u }
            })
            .collect(),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbilityStudy {
    pub examinees: usize,
    /// Fraction with `|gamma_hat - gamma| <= 3 se`; examinees without a finite estimate count as misses.
    pub within_three_se: f64,
    pub no_finite_mle: usize,
    pub mean_gamma_hat: f64,
    pub score_variance: f64,
    pub score_variance_se: f64,
    pub information: f64,
}

pub fn irt_ability_study(bank: &IrtItemBank, gamma: f64, examinees: usize, stream: &RandomStream) -> Result<AbilityStudy> {
    let rows = exec::replicate(stream, examinees, |_, s| {
        let y = simulate_responses(bank, gamma, s);
        let score = bank.score_info(&y, gamma).0;
        (irt_ability_fit(bank, &y).ok(), score)
    });
    let hits = rows
        .iter()
        .filter(|r| r.0.is_some_and(|e| (e.gamma_hat - gamma).abs() <= 3.0 * e.se))
        .count();
    let ests: Vec<f64> = rows.iter().filter_map(|r| r.0.map(|e| e.gamma_hat)).collect();
    let scores: Vec<f64> = rows.iter().map(|r| r.1).collect();
    Ok(AbilityStudy {
        examinees,
        within_three_se: hits as f64 / examinees as f64,
        no_finite_mle: examinees - ests.len(),
        mean_gamma_hat: mean(&ests),
        score_variance: stats::variance(&scores),
        score_variance_se: stats::variance_se(&scores),
        information: bank.information(gamma),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regression::ols_fit;

    fn design(rows: &[f64]) -> DesignMatrix {
        DesignMatrix::from_rows(&rows.iter().map(|&v| vec![v]).collect::<Vec<_>>(), true).unwrap()
    }

    #[test]
    fn moments_examples() {
        let m = expfam_moments(&GlmFamily::PoissonLog, 0.7).unwrap();
        assert!((m.mean - 0.7f64.exp()).abs() < 1e-15 && (m.variance - 0.7f64.exp()).abs() < 1e-15);
        let m = expfam_moments(&GlmFamily::NormalIdentity { sigma2: 2.5 }, -1.0).unwrap();
        assert_eq!((m.mean, m.variance), (-1.0, 2.5));
        let m = expfam_moments(&GlmFamily::BernoulliLogit, 0.0).unwrap();
        assert_eq!((m.mean, m.variance), (0.5, 0.25));
        assert!(expfam_moments(&GlmFamily::GammaCanonical { shape: 2.0 }, 0.5).is_err());
        // Poisson in the mean parametrization: xi = ln theta, b = theta
        let th: f64 = 3.0;
        let g = expfam_moments_general(1.0, 0.0, 1.0 / th, -1.0 / (th * th), 1.0).unwrap();
        assert!((g.mean - th).abs() < 1e-14 && (g.variance - th).abs() < 1e-14);
    }

    #[test]
    fn normal_identity_is_ols() {
        let x = design(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        let y = [0.3, 1.1, 2.4, 2.8, 4.4, 5.2];
        let g = glm_fit(&GlmFamily::NormalIdentity { sigma2: 1.0 }, &x, &y).unwrap();
        let o = ols_fit(&x, &y).unwrap();
        assert!((g.beta.clone() - o.beta_hat).amax() < 1e-10);
    }

    #[test]
    fn intercept_only_closed_forms() {
        let x = DesignMatrix::new(DMatrix::from_element(4, 1, 1.0), true).unwrap();
        let b = glm_fit(&GlmFamily::BernoulliLogit, &x, &[1.0, 1.0, 0.0, 1.0]).unwrap();
        assert!((b.beta[0] - 3f64.ln()).abs() < 1e-10);
        let p = glm_fit(&GlmFamily::PoissonLog, &x, &[1.0, 4.0, 0.0, 2.0]).unwrap();
        assert!((p.beta[0] - 1.75f64.ln()).abs() < 1e-10);
        let g = glm_fit(&GlmFamily::GammaCanonical { shape: 2.0 }, &x, &[1.0, 4.0, 0.5, 2.0]).unwrap();
        assert!((g.mu[0] - 1.875).abs() < 1e-10);
    }

    #[test]
    fn separation_detected() {
        let x = design(&[-2.0, -1.0, 1.0, 2.0]);
        let err = glm_fit(&GlmFamily::BernoulliLogit, &x, &[0.0, 0.0, 1.0, 1.0]).unwrap_err();
        assert!(matches!(err, StatError::Separation(_)), "{err:?}");
    }

    #[test]
    fn irt_symmetry_and_boundary() {
        let bank = IrtItemBank::new(vec![IrtItem { a: 1.0, b: 0.8 }, IrtItem { a: 1.0, b: -0.8 }]).unwrap();
        let e = irt_ability_fit(&bank, &[1.0, 0.0]).unwrap();
        assert!(e.gamma_hat.abs() < 1e-10);
        assert!(matches!(irt_ability_fit(&bank, &[1.0, 1.0]), Err(StatError::NoFiniteMle(_))));
    }

    #[test]
    fn bank_rejects_nonpositive_discrimination() {
        assert!(IrtItemBank::new(vec![IrtItem { a: 0.0, b: 0.0 }]).is_err());
    }
}
