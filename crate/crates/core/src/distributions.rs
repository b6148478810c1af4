//! Parameterized univariate laws.
//!
//! Conventions: `Gamma { alpha, lambda }` has rate `alpha` and shape
//! `lambda`; `Binomial { p, n }` counts successes in `n` trials; `Geometric`
//! counts trials up to and including the first success (support 1, 2, ...).

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Result, StatError};
use crate::rng::RandomStream;
use crate::special::{
    beta_reg, gamma_p, gamma_q, ln_beta, ln_factorial, ln_gamma, norm_cdf, norm_quantile,
    norm_sf,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag")]
pub enum DistributionSpec {
    Normal { mu: f64, sigma2: f64 },
    LogNormal { mu: f64, sigma2: f64 },
    Gamma { alpha: f64, lambda: f64 },
    ChiSquared { k: u32 },
    StudentT { k: u32 },
    FisherF { k1: u32, k2: u32 },
    Beta { alpha: f64, beta: f64 },
    Exponential { lambda: f64 },
    Bernoulli { p: f64 },
    Binomial { p: f64, n: u64 },
    Poisson { lambda: f64 },
    Geometric { p: f64 },
    Uniform01,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(StatError::param(name, format!("must be a positive finite real, got {v}")))
    }
}

fn finite(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(StatError::param(name, format!("must be finite, got {v}")))
    }
}

fn open_unit(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(StatError::param(name, format!("must lie in (0,1), got {v}")))
    }
}

fn positive_int(name: &'static str, v: u64) -> Result<()> {
    if v >= 1 {
        Ok(())
    } else {
        Err(StatError::param(name, "must be a positive integer"))
    }
}

fn as_count(x: f64) -> Option<u64> {
    if x >= 0.0 && x == x.floor() && x < 9.0e15 {
        Some(x as u64)
    } else {
        None
    }
}

impl DistributionSpec {
    pub fn normal(mu: f64, sigma2: f64) -> Result<Self> {
        DistributionSpec::Normal { mu, sigma2 }.validated()
    }
    pub fn log_normal(mu: f64, sigma2: f64) -> Result<Self> {
        DistributionSpec::LogNormal { mu, sigma2 }.validated()
    }
    pub fn gamma(alpha: f64, lambda: f64) -> Result<Self> {
        DistributionSpec::Gamma { alpha, lambda }.validated()
    }
    pub fn chi_squared(k: u32) -> Result<Self> {
        DistributionSpec::ChiSquared { k }.validated()
    }
    pub fn student_t(k: u32) -> Result<Self> {
        DistributionSpec::StudentT { k }.validated()
    }
    pub fn fisher_f(k1: u32, k2: u32) -> Result<Self> {
        DistributionSpec::FisherF { k1, k2 }.validated()
    }
    pub fn beta(alpha: f64, beta: f64) -> Result<Self> {
        DistributionSpec::Beta { alpha, beta }.validated()
    }
    pub fn exponential(lambda: f64) -> Result<Self> {
        DistributionSpec::Exponential { lambda }.validated()
    }
    pub fn bernoulli(p: f64) -> Result<Self> {
        DistributionSpec::Bernoulli { p }.validated()
    }
    pub fn binomial(p: f64, n: u64) -> Result<Self> {
        DistributionSpec::Binomial { p, n }.validated()
    }
    pub fn poisson(lambda: f64) -> Result<Self> {
        DistributionSpec::Poisson { lambda }.validated()
    }
    pub fn geometric(p: f64) -> Result<Self> {
        DistributionSpec::Geometric { p }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        use DistributionSpec::*;
        match *self {
            Normal { mu, sigma2 } | LogNormal { mu, sigma2 } => {
                finite("mu", mu)?;
                positive("sigma2", sigma2)
            }
            Gamma { alpha, lambda } => {
                positive("alpha", alpha)?;
                positive("lambda", lambda)
            }
            ChiSquared { k } | StudentT { k } => positive_int("k", k as u64),
            FisherF { k1, k2 } => {
                positive_int("k1", k1 as u64)?;
                positive_int("k2", k2 as u64)
            }
            Beta { alpha, beta } => {
                positive("alpha", alpha)?;
                positive("beta", beta)
            }
            Exponential { lambda } | Poisson { lambda } => positive("lambda", lambda),
            Bernoulli { p } | Geometric { p } => open_unit("p", p),
            Binomial { p, n } => {
                open_unit("p", p)?;
                positive_int("n", n)
            }
            Uniform01 => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        use DistributionSpec::*;
        match self {
            Normal { .. } => "Normal",
            LogNormal { .. } => "LogNormal",
            Gamma { .. } => "Gamma",
            ChiSquared { .. } => "ChiSquared",
            StudentT { .. } => "StudentT",
            FisherF { .. } => "FisherF",
            Beta { .. } => "Beta",
            Exponential { .. } => "Exponential",
            Bernoulli { .. } => "Bernoulli",
            Binomial { .. } => "Binomial",
            Poisson { .. } => "Poisson",
            Geometric { .. } => "Geometric",
            Uniform01 => "Uniform01",
        }
    }

    pub fn is_discrete(&self) -> bool {
        use DistributionSpec::*;
        matches!(self, Bernoulli { .. } | Binomial { .. } | Poisson { .. } | Geometric { .. })
    }

    /// Closed support interval `[lo, hi]`.
    pub fn support(&self) -> (f64, f64) {
        use DistributionSpec::*;
        match *self {
            Normal { .. } | StudentT { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            LogNormal { .. } | Gamma { .. } | ChiSquared { .. } | FisherF { .. }
            | Exponential { .. } | Poisson { .. } => (0.0, f64::INFINITY),
            Beta { .. } | Uniform01 | Bernoulli { .. } => (0.0, 1.0),
            Binomial { n, .. } => (0.0, n as f64),
            Geometric { .. } => (1.0, f64::INFINITY),
        }
    }

    pub fn moments(&self) -> Result<Moments> {
        use DistributionSpec::*;
        self.validate()?;
        let (mean, variance) = match *self {
            Normal { mu, sigma2 } => (mu, sigma2),
            LogNormal { mu, sigma2 } => {
                let m = (mu + 0.5 * sigma2).exp();
                (m, sigma2.exp_m1() * (2.0 * mu + sigma2).exp())
            }
            Gamma { alpha, lambda } => (lambda / alpha, lambda / (alpha * alpha)),
            ChiSquared { k } => (k as f64, 2.0 * k as f64),
            StudentT { k } => {
                if k < 2 {
                    return Err(StatError::MomentUndefined(format!("StudentT{{k={k}}} has no mean")));
                }
                if k < 3 {
                    return Err(StatError::MomentUndefined(format!(
                        "StudentT{{k={k}}} has infinite variance"
                    )));
                }
                let k = k as f64;
                (0.0, k / (k - 2.0))
            }
            FisherF { k1, k2 } => {
                let (a, b) = (k1 as f64, k2 as f64);
                if k2 <= 2 {
                    return Err(StatError::MomentUndefined(format!("FisherF with k2={k2} has no mean")));
                }
                if k2 <= 4 {
                    return Err(StatError::MomentUndefined(format!(
                        "FisherF with k2={k2} has infinite variance"
                    )));
                }
                let m = b / (b - 2.0);
                (m, 2.0 * b * b * (a + b - 2.0) / (a * (b - 2.0).powi(2) * (b - 4.0)))
            }
            Beta { alpha, beta } => {
                let s = alpha + beta;
                (alpha / s, alpha * beta / (s * s * (s + 1.0)))
            }
            Exponential { lambda } => (1.0 / lambda, 1.0 / (lambda * lambda)),
            Bernoulli { p } => (p, p * (1.0 - p)),
            Binomial { p, n } => (n as f64 * p, n as f64 * p * (1.0 - p)),
            Poisson { lambda } => (lambda, lambda),
            Geometric { p } => (1.0 / p, (1.0 - p) / (p * p)),
            Uniform01 => (0.5, 1.0 / 12.0),
        };
        Ok(Moments { mean, variance })
    }

    /// Log density (log mass for discrete tags); `-inf` off the support.
    pub fn ln_pdf(&self, x: f64) -> f64 {
        use DistributionSpec::*;
        if x.is_nan() {
            return f64::NAN;
        }
        match *self {
            Normal { mu, sigma2 } => -0.5 * (x - mu).powi(2) / sigma2 - 0.5 * (2.0 * PI * sigma2).ln(),
            LogNormal { mu, sigma2 } => {
                if x <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                let l = x.ln();
                -0.5 * (l - mu).powi(2) / sigma2 - 0.5 * (2.0 * PI * sigma2).ln() - l
            }
            Gamma { alpha, lambda } => gamma_ln_pdf(alpha, lambda, x),
            ChiSquared { k } => gamma_ln_pdf(0.5, 0.5 * k as f64, x),
            StudentT { k } => {
                let k = k as f64;
                ln_gamma(0.5 * (k + 1.0)) - ln_gamma(0.5 * k) - 0.5 * (k * PI).ln()
                    - 0.5 * (k + 1.0) * (x * x / k).ln_1p()
            }
            FisherF { k1, k2 } => {
                let (a, b) = (k1 as f64, k2 as f64);
                if x < 0.0 {
                    return f64::NEG_INFINITY;
                }
                if x == 0.0 {
                    return match k1 {
                        1 => f64::INFINITY,
                        2 => 0.0,
                        _ => f64::NEG_INFINITY,
                    };
                }
                0.5 * (a * a.ln() + b * b.ln()) + (0.5 * a - 1.0) * x.ln()
                    - 0.5 * (a + b) * (a * x + b).ln()
                    - ln_beta(0.5 * a, 0.5 * b)
            }
            Beta { alpha, beta } => {
                if !(0.0..=1.0).contains(&x) {
                    return f64::NEG_INFINITY;
                }
                if x > 0.0 && x < 1.0 {
                    (alpha - 1.0) * x.ln() + (beta - 1.0) * (-x).ln_1p() - ln_beta(alpha, beta)
                } else {
                    (x.powf(alpha - 1.0) * (1.0 - x).powf(beta - 1.0)).ln() - ln_beta(alpha, beta)
                }
            }
            Exponential { lambda } => {
                if x < 0.0 {
                    f64::NEG_INFINITY
                } else {
                    lambda.ln() - lambda * x
                }
            }
            Bernoulli { p } => match as_count(x) {
                Some(0) => (-p).ln_1p(),
                Some(1) => p.ln(),
                _ => f64::NEG_INFINITY,
            },
            Binomial { p, n } => match as_count(x) {
                Some(k) if k <= n => {
                    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
                        + k as f64 * p.ln()
                        + (n - k) as f64 * (-p).ln_1p()
                }
                _ => f64::NEG_INFINITY,
            },
            Poisson { lambda } => match as_count(x) {
                Some(k) => k as f64 * lambda.ln() - lambda - ln_factorial(k),
                None => f64::NEG_INFINITY,
            },
            Geometric { p } => match as_count(x) {
                Some(k) if k >= 1 => (k - 1) as f64 * (-p).ln_1p() + p.ln(),
                _ => f64::NEG_INFINITY,
            },
            Uniform01 => {
                if (0.0..=1.0).contains(&x) {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    /// Density, or probability mass for discrete tags. Zero off the support.
    pub fn pdf(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        use DistributionSpec::*;
        if x.is_nan() {
            return f64::NAN;
        }
        match *self {
            Normal { mu, sigma2 } => norm_cdf((x - mu) / sigma2.sqrt()),
            LogNormal { mu, sigma2 } => {
                if x <= 0.0 {
                    0.0
                } else {
                    norm_cdf((x.ln() - mu) / sigma2.sqrt())
                }
            }
            Gamma { alpha, lambda } => gamma_p(lambda, alpha * x),
            ChiSquared { k } => gamma_p(0.5 * k as f64, 0.5 * x),
            StudentT { k } => student_t_lower(k as f64, x),
            FisherF { k1, k2 } => {
                if x <= 0.0 {
                    return 0.0;
                }
                let (a, b) = (k1 as f64, k2 as f64);
                let ax = a * x;
                if ax <= b {
                    beta_reg(0.5 * a, 0.5 * b, ax / (ax + b))
                } else {
                    1.0 - beta_reg(0.5 * b, 0.5 * a, b / (ax + b))
                }
            }
            Beta { alpha, beta } => beta_reg(alpha, beta, x),
            Exponential { lambda } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-lambda * x).exp_m1()
                }
            }
            Bernoulli { p } => {
                if x < 0.0 {
                    0.0
                } else if x < 1.0 {
                    1.0 - p
                } else {
                    1.0
                }
            }
            Binomial { p, n } => {
                if x < 0.0 {
                    return 0.0;
                }
                let k = x.floor();
                if k >= n as f64 {
                    return 1.0;
                }
                beta_reg(n as f64 - k, k + 1.0, 1.0 - p)
            }
            Poisson { lambda } => {
                if x < 0.0 {
                    0.0
                } else {
                    gamma_q(x.floor() + 1.0, lambda)
                }
            }
            Geometric { p } => {
                if x < 1.0 {
                    0.0
                } else {
                    -(x.floor() * (-p).ln_1p()).exp_m1()
                }
            }
            Uniform01 => x.clamp(0.0, 1.0),
        }
    }

    /// Survival function `P(X > x)`, computed without `1 - cdf` cancellation
    /// where the law allows it.
    pub fn sf(&self, x: f64) -> f64 {
        use DistributionSpec::*;
        if x.is_nan() {
            return f64::NAN;
        }
        match *self {
            Normal { mu, sigma2 } => norm_sf((x - mu) / sigma2.sqrt()),
            LogNormal { mu, sigma2 } => {
                if x <= 0.0 {
                    1.0
                } else {
                    norm_sf((x.ln() - mu) / sigma2.sqrt())
                }
            }
            Gamma { alpha, lambda } => gamma_q(lambda, alpha * x),
            ChiSquared { k } => gamma_q(0.5 * k as f64, 0.5 * x),
            StudentT { k } => student_t_lower(k as f64, -x),
            FisherF { k1, k2 } => {
                if x <= 0.0 {
                    return 1.0;
                }
                let (a, b) = (k1 as f64, k2 as f64);
                let ax = a * x;
                if ax > b {
                    beta_reg(0.5 * b, 0.5 * a, b / (ax + b))
                } else {
                    1.0 - beta_reg(0.5 * a, 0.5 * b, ax / (ax + b))
                }
            }
            Beta { alpha, beta } => {
                if x <= 0.0 {
                    1.0
                } else if x >= 1.0 {
                    0.0
                } else {
                    beta_reg(beta, alpha, 1.0 - x)
                }
            }
            Exponential { lambda } => {
                if x <= 0.0 {
                    1.0
                } else {
                    (-lambda * x).exp()
                }
            }
            Binomial { p, n } => {
                if x < 0.0 {
                    return 1.0;
                }
                let k = x.floor();
                if k >= n as f64 {
                    return 0.0;
                }
                beta_reg(k + 1.0, n as f64 - k, p)
            }
            Poisson { lambda } => {
                if x < 0.0 {
                    1.0
                } else {
                    gamma_p(x.floor() + 1.0, lambda)
                }
            }
            Geometric { p } => {
                if x < 1.0 {
                    1.0
                } else {
                    (x.floor() * (-p).ln_1p()).exp()
                }
            }
            Bernoulli { .. } | Uniform01 => 1.0 - self.cdf(x),
        }
    }

    /// Inverse cdf at probability `u`; for discrete tags the smallest
    /// support point with `cdf >= u`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        use DistributionSpec::*;
        self.validate()?;
        if !(u > 0.0 && u < 1.0) {
            return Err(StatError::Domain(format!("quantile probability must lie in (0,1), got {u}")));
        }
        Ok(match *self {
            Normal { mu, sigma2 } => mu + sigma2.sqrt() * norm_quantile(u),
            LogNormal { mu, sigma2 } => (mu + sigma2.sqrt() * norm_quantile(u)).exp(),
            Exponential { lambda } => -(-u).ln_1p() / lambda,
            Uniform01 => u,
            Bernoulli { p } => {
                if u <= 1.0 - p {
                    0.0
                } else {
                    1.0
                }
            }
            Binomial { .. } | Poisson { .. } | Geometric { .. } => self.discrete_quantile(u),
            StudentT { k: 1 } => (PI * (u - 0.5)).tan(),
            StudentT { k: 2 } => {
                let a = 4.0 * u * (1.0 - u);
                2.0 * (u - 0.5) * (2.0 / a).sqrt()
            }
            _ => self.continuous_quantile(u),
        })
    }

    fn discrete_quantile(&self, u: f64) -> f64 {
        let (lo_support, hi_support) = self.support();
        let mut lo = lo_support;
        let mut hi = if hi_support.is_finite() {
            hi_support
        } else {
            let m = self.moments().map(|m| m.mean + 10.0 * m.variance.sqrt()).unwrap_or(10.0);
            let mut h = m.max(lo + 1.0).ceil();
            while self.cdf(h) < u {
                h *= 2.0;
            }
            h
        };
        if self.cdf(lo) >= u {
            return lo;
        }
        // invariant: cdf(lo) < u <= cdf(hi)
        while hi - lo > 1.0 {
            let mid = ((lo + hi) * 0.5).floor();
            if self.cdf(mid) >= u {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    fn continuous_quantile(&self, u: f64) -> f64 {
        let (lo_s, hi_s) = self.support();
        let resid = |x: f64| {
            if u <= 0.5 {
                self.cdf(x) - u
            } else {
                (1.0 - u) - self.sf(x)
            }
        };
        let start = self.quantile_guess(u);
        let (mut lo, mut hi) = bracket(&resid, start, lo_s, hi_s);
        let mut x = start.clamp(lo, hi);
        if !(x > lo && x < hi) {
            x = mid_point(lo, hi);
        }
        for _ in 0..300 {
            let f = resid(x);
            if f == 0.0 {
                return x;
            }
            if f < 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            let d = self.pdf(x);
            let mut next = if d > 0.0 && d.is_finite() { x - f / d } else { f64::NAN };
            if !(next > lo && next < hi) {
                next = mid_point(lo, hi);
            }
            if (next - x).abs() <= 1e-15 * x.abs().max(1e-300) || hi - lo <= 1e-15 * hi.abs().max(lo.abs()) {
                return next;
            }
            x = next;
        }
        x
    }

    fn quantile_guess(&self, u: f64) -> f64 {
        use DistributionSpec::*;
        let z = norm_quantile(u);
        match *self {
            ChiSquared { k } => wilson_hilferty(k as f64, z),
            Gamma { alpha, lambda } => 0.5 * wilson_hilferty(2.0 * lambda, z) / alpha,
            StudentT { .. } => z,
            FisherF { k2, .. } if k2 > 2 => k2 as f64 / (k2 as f64 - 2.0),
            FisherF { .. } => 1.0,
            Beta { alpha, beta } => alpha / (alpha + beta),
            _ => z,
        }
    }

    /// One draw.
    pub fn draw(&self, s: &mut RandomStream) -> f64 {
        use DistributionSpec::*;
        match *self {
            Normal { mu, sigma2 } => mu + sigma2.sqrt() * s.normal(),
            LogNormal { mu, sigma2 } => (mu + sigma2.sqrt() * s.normal()).exp(),
            Gamma { alpha, lambda } => standard_gamma(s, lambda) / alpha,
            ChiSquared { k } => chi_squared_draw(s, k as f64),
            StudentT { k } => {
                let z = s.normal();
                z / (chi_squared_draw(s, k as f64) / k as f64).sqrt()
            }
            FisherF { k1, k2 } => {
                let a = chi_squared_draw(s, k1 as f64) / k1 as f64;
                let b = chi_squared_draw(s, k2 as f64) / k2 as f64;
                a / b
            }
            Beta { alpha, beta } => {
                let x = standard_gamma(s, alpha);
                let y = standard_gamma(s, beta);
                x / (x + y)
            }
            Exponential { lambda } => s.exponential() / lambda,
            Bernoulli { p } => {
                if s.uniform() < p {
                    1.0
                } else {
                    0.0
                }
            }
            Binomial { p, n } => binomial_draw(s, n, p) as f64,
            Poisson { lambda } => poisson_draw(s, lambda) as f64,
            Geometric { p } => {
                let k = (s.uniform_open().ln() / (-p).ln_1p()).ceil();
                k.max(1.0)
            }
            Uniform01 => s.uniform(),
        }
    }

    pub fn sample(&self, s: &mut RandomStream, count: usize) -> Vec<f64> {
        (0..count).map(|_| self.draw(s)).collect()
    }
}

fn mid_point(lo: f64, hi: f64) -> f64 {
    if lo.is_finite() && hi.is_finite() {
        lo + 0.5 * (hi - lo)
    } else if lo.is_finite() {
        lo.abs().max(1.0) * 2.0 + lo
    } else {
        hi - hi.abs().max(1.0) * 2.0
    }
}

fn bracket(resid: &dyn Fn(f64) -> f64, start: f64, lo_s: f64, hi_s: f64) -> (f64, f64) {
    let start = if start.is_finite() { start } else { 0.0 };
    let mut hi = if hi_s.is_finite() { hi_s } else { start.max(lo_s) + 1.0 };
    let mut step = 1.0f64.max(hi.abs());
    while !hi_s.is_finite() && resid(hi) < 0.0 {
        hi += step;
        step *= 2.0;
    }
    let mut lo = if lo_s.is_finite() { lo_s } else { start.min(hi) - 1.0 };
    let mut step = 1.0f64.max(lo.abs());
    while !lo_s.is_finite() && resid(lo) > 0.0 {
        lo -= step;
        step *= 2.0;
    }
    (lo, hi)
}

fn wilson_hilferty(k: f64, z: f64) -> f64 {
    let c = 2.0 / (9.0 * k);
    (k * (1.0 - c + z * c.sqrt()).powi(3)).max(1e-3 * k)
}

fn gamma_ln_pdf(rate: f64, shape: f64, x: f64) -> f64 {
    if x < 0.0 {
        return f64::NEG_INFINITY;
    }
    if x == 0.0 {
        return if shape < 1.0 {
            f64::INFINITY
        } else if shape == 1.0 {
            rate.ln()
        } else {
            f64::NEG_INFINITY
        };
    }
    shape * rate.ln() + (shape - 1.0) * x.ln() - rate * x - ln_gamma(shape)
}

/// P(T <= x) for Student t with k degrees of freedom.
fn student_t_lower(k: f64, x: f64) -> f64 {
    if x.is_infinite() {
        return if x > 0.0 { 1.0 } else { 0.0 };
    }
    let x2 = x * x;
    let z = k / (k + x2);
    // tail mass P(T > |x|)
    let tail = if z < 0.5 {
        0.5 * beta_reg(0.5 * k, 0.5, z)
    } else {
        0.5 - 0.5 * beta_reg(0.5, 0.5 * k, x2 / (k + x2))
    };
    if x <= 0.0 {
        tail
    } else {
        1.0 - tail
    }
}

/// Gamma(shape, rate 1) by Marsaglia-Tsang; shapes below 1 use the
/// `G(a+1) U^(1/a)` boost.
pub(crate) fn standard_gamma(s: &mut RandomStream, shape: f64) -> f64 {
    if shape < 1.0 {
        let g = standard_gamma(s, shape + 1.0);
        return g * s.uniform_open().powf(1.0 / shape);
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x = s.normal();
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u = s.uniform_open();
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 || u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

fn chi_squared_draw(s: &mut RandomStream, k: f64) -> f64 {
    2.0 * standard_gamma(s, 0.5 * k)
}

pub(crate) fn poisson_draw(s: &mut RandomStream, lambda: f64) -> u64 {
    if lambda <= 30.0 {
        let u = s.uniform();
        let mut k = 0u64;
        let mut p = (-lambda).exp();
        let mut cdf = p;
        while u > cdf && k < 10_000 {
            k += 1;
            p *= lambda / k as f64;
            cdf += p;
            if p == 0.0 {
                break;
            }
        }
        return k;
    }
    // PTRS transformed rejection.
    let slam = lambda.sqrt();
    let loglam = lambda.ln();
    let b = 0.931 + 2.53 * slam;
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let vr = 0.9277 - 3.6224 / (b - 2.0);
    loop {
        let u = s.uniform() - 0.5;
        let v = s.uniform_open();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + lambda + 0.43).floor();
        if us >= 0.07 && v <= vr {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        if v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln() <= -lambda + k * loglam - ln_gamma(k + 1.0) {
            return k as u64;
        }
    }
}

pub(crate) fn binomial_draw(s: &mut RandomStream, n: u64, p: f64) -> u64 {
    if p > 0.5 {
        return n - binomial_draw(s, n, 1.0 - p);
    }
    let mut n = n;
    let mut p = p;
    let mut acc = 0u64;
    // Beta splitting until the mean is small enough for inversion.
    while n as f64 * p >= 30.0 {
        let a = 1 + n / 2;
        let b = n + 1 - a;
        let x = {
            let g1 = standard_gamma(s, a as f64);
            let g2 = standard_gamma(s, b as f64);
            g1 / (g1 + g2)
        };
        if x >= p {
            n = a - 1;
            p /= x;
        } else {
            acc += a;
            n = b - 1;
            p = (p - x) / (1.0 - x);
        }
        if p > 0.5 {
            return acc + n - binomial_draw(s, n, 1.0 - p);
        }
    }
    if n == 0 || p <= 0.0 {
        return acc;
    }
    let q = 1.0 - p;
    let ratio = p / q;
    let a = (n + 1) as f64 * ratio;
    let mut r = (n as f64 * (-p).ln_1p()).exp();
    let mut u = s.uniform();
    let mut k = 0u64;
    while u > r {
        u -= r;
        k += 1;
        if k > n {
            // round-off left mass unassigned; restart this stage
            u = s.uniform();
            k = 0;
            r = (n as f64 * (-p).ln_1p()).exp();
            continue;
        }
        r *= a / k as f64 - ratio;
    }
    acc + k
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use DistributionSpec::*;
        match *self {
            Normal { mu, sigma2 } => write!(f, "Normal{{mu={mu}, sigma2={sigma2}}}"),
            LogNormal { mu, sigma2 } => write!(f, "LogNormal{{mu={mu}, sigma2={sigma2}}}"),
            Gamma { alpha, lambda } => write!(f, "Gamma{{alpha={alpha}, lambda={lambda}}}"),
            ChiSquared { k } => write!(f, "ChiSquared{{k={k}}}"),
            StudentT { k } => write!(f, "StudentT{{k={k}}}"),
            FisherF { k1, k2 } => write!(f, "FisherF{{k1={k1}, k2={k2}}}"),
            Beta { alpha, beta } => write!(f, "Beta{{alpha={alpha}, beta={beta}}}"),
            Exponential { lambda } => write!(f, "Exponential{{lambda={lambda}}}"),
            Bernoulli { p } => write!(f, "Bernoulli{{p={p}}}"),
            Binomial { p, n } => write!(f, "Binomial{{p={p}, n={n}}}"),
            Poisson { lambda } => write!(f, "Poisson{{lambda={lambda}}}"),
            Geometric { p } => write!(f, "Geometric{{p={p}}}"),
            Uniform01 => write!(f, "Uniform01"),
        }
    }
}

/// Parses `Name{key=value, ...}`, `name(key=value, ...)` or `name(v1, v2)`
/// with positional values in declaration order. Names are case-insensitive.
impl FromStr for DistributionSpec {
    type Err = StatError;

    fn from_str(text: &str) -> Result<Self> {
        let text = text.trim();
        let (name, body) = match text.find(['{', '(']) {
            Some(i) => {
                let close = text.chars().last().unwrap_or(' ');
                if close != '}' && close != ')' {
                    return Err(StatError::Parse(format!("unterminated parameter list in `{text}`")));
                }
                (&text[..i], &text[i + 1..text.len() - 1])
            }
            None => (text, ""),
        };
        let name = name.trim().to_ascii_lowercase().replace(['_', '-'], "");
        let keys: &[&str] = match name.as_str() {
            "normal" => &["mu", "sigma2"],
            "lognormal" => &["mu", "sigma2"],
            "gamma" => &["alpha", "lambda"],
            "chisquared" | "chi2" => &["k"],
            "studentt" | "t" => &["k"],
            "fisherf" | "f" => &["k1", "k2"],
            "beta" => &["alpha", "beta"],
            "exponential" => &["lambda"],
            "bernoulli" => &["p"],
            "binomial" => &["p", "n"],
            "poisson" => &["lambda"],
            "geometric" => &["p"],
            "uniform01" | "uniform" => &[],
            _ => return Err(StatError::Parse(format!("unknown distribution tag `{name}`"))),
        };
        let mut values: Vec<Option<f64>> = vec![None; keys.len()];
        let parts: Vec<&str> = body.split(',').map(str::trim).filter(|p| !p.is_empty()).collect();
        for (pos, part) in parts.iter().enumerate() {
            let (slot, raw) = match part.split_once('=') {
                Some((k, v)) => {
                    let k = k.trim();
                    let idx = keys
                        .iter()
                        .position(|c| *c == k)
                        .ok_or_else(|| StatError::Parse(format!("unknown parameter `{k}` for {name}")))?;
                    (idx, v.trim())
                }
                None => {
                    if pos >= keys.len() {
                        return Err(StatError::Parse(format!("too many parameters for {name}")));
                    }
                    (pos, *part)
                }
            };
            let v: f64 = raw
                .parse()
                .map_err(|_| StatError::Parse(format!("parameter `{}` is not a number: `{raw}`", keys[slot])))?;
            values[slot] = Some(v);
        }
        let get = |i: usize| -> Result<f64> {
            values[i].ok_or_else(|| StatError::Parse(format!("missing parameter `{}` for {name}", keys[i])))
        };
        let int = |i: usize| -> Result<u64> {
            let v = get(i)?;
            as_count(v).ok_or_else(|| StatError::Parse(format!("parameter `{}` must be a nonnegative integer", keys[i])))
        };
        let small = |i: usize| -> Result<u32> {
            u32::try_from(int(i)?).map_err(|_| StatError::Parse(format!("parameter `{}` is too large", keys[i])))
        };
        use DistributionSpec::*;
        let spec = match name.as_str() {
            "normal" => Normal { mu: get(0)?, sigma2: get(1)? },
            "lognormal" => LogNormal { mu: get(0)?, sigma2: get(1)? },
            "gamma" => Gamma { alpha: get(0)?, lambda: get(1)? },
            "chisquared" | "chi2" => ChiSquared { k: small(0)? },
            "studentt" | "t" => StudentT { k: small(0)? },
            "fisherf" | "f" => FisherF { k1: small(0)?, k2: small(1)? },
            "beta" => Beta { alpha: get(0)?, beta: get(1)? },
            "exponential" => Exponential { lambda: get(0)? },
            "bernoulli" => Bernoulli { p: get(0)? },
            "binomial" => Binomial { p: get(0)?, n: int(1)? },
            "poisson" => Poisson { lambda: get(0)? },
            "geometric" => Geometric { p: get(0)? },
            _ => Uniform01,
        };
        spec.validated()
    }
}

pub fn dist_moments(spec: &DistributionSpec) -> Result<Moments> {
    spec.moments()
}

pub fn dist_pdf(spec: &DistributionSpec, x: f64) -> f64 {
    spec.pdf(x)
}

pub fn dist_cdf(spec: &DistributionSpec, x: f64) -> f64 {
    spec.cdf(x)
}

pub fn dist_quantile(spec: &DistributionSpec, u: f64) -> Result<f64> {
    spec.quantile(u)
}

pub fn dist_sample(spec: &DistributionSpec, stream: &mut RandomStream, count: usize) -> Vec<f64> {
    spec.sample(stream, count)
}

pub fn stream_split(root: &RandomStream, id: u64) -> RandomStream {
    root.split(id)
}

/// Kolmogorov-Smirnov distance between the empirical law of `sample` and `cdf`.
pub fn ks_distance(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs: Vec<f64> = sample.to_vec();
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    d
}

/// Total-variation distance between two laws on the nonnegative integers,
/// enumerating mass until both cdfs reach `1 - tail`.
pub fn total_variation_discrete(a: &DistributionSpec, b: &DistributionSpec, tail: f64) -> Result<f64> {
    if !a.is_discrete() || !b.is_discrete() {
        return Err(StatError::Domain("total variation enumeration needs discrete laws".into()));
    }
    let mut sum = 0.0;
    let mut k = 0u64;
    loop {
        let x = k as f64;
        sum += (a.pdf(x) - b.pdf(x)).abs();
        if a.cdf(x) >= 1.0 - tail && b.cdf(x) >= 1.0 - tail {
            break;
        }
        k += 1;
    }
    let leftover = a.sf(k as f64) + b.sf(k as f64);
    Ok(0.5 * (sum + leftover))
}
