//! Special functions. Incomplete gamma/beta and erf come from `statrs`;
//! the polygamma functions are local because the Gamma MLE needs
//! `ln x - psi(x)` without cancellation for large shapes.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

pub use statrs::function::gamma::ln_gamma;

const FRAC_2_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;

/// `exp(-x^2)` with the rounding error of `x^2` compensated.
fn exp_neg_sq(x: f64) -> f64 {
    let x2 = x * x;
    let lo = x.mul_add(x, -x2);
    (-x2).exp() * (-lo).exp()
}

/// erf(x) for |x| < 2 from `exp(-x^2) * sum 2^n x^(2n+1) / (2n+1)!!`;
/// every term is positive so nothing cancels.
fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut n = 0.0;
    loop {
        n += 1.0;
        term *= 2.0 * x2 / (2.0 * n + 1.0);
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    FRAC_2_SQRT_PI * exp_neg_sq(x) * sum
}

/// erfc(x) for x >= 2 by the Laplace continued fraction (modified Lentz).
fn erfc_cf(x: f64) -> f64 {
    // erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
    let tiny = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..500 {
        let a = 0.5 * k as f64;
        d = x + a * d;
        d = if d.abs() < tiny { tiny } else { d };
        c = x + a / c;
        c = if c.abs() < tiny { tiny } else { c };
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    exp_neg_sq(x) / (f * PI.sqrt())
}

pub fn erf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x.abs() < 2.0 {
        erf_series(x)
    } else if x > 0.0 {
        1.0 - erfc_cf(x)
    } else {
        erfc_cf(-x) - 1.0
    }
}

/// Complementary error function with small relative error in the upper tail.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x >= 2.0 {
        if x > 27.3 {
            return 0.0;
        }
        erfc_cf(x)
    } else if x > -2.0 {
        1.0 - erf_series(x)
    } else {
        2.0 - erfc_cf(-x)
    }
}

/// Standard normal cdf.
pub fn norm_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal upper tail `1 - Phi(x)` without cancellation.
pub fn norm_sf(x: f64) -> f64 {
    norm_cdf(-x)
}

pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Standard normal quantile, polished with one Halley step.
pub fn norm_quantile(u: f64) -> f64 {
    if u <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if u >= 1.0 {
        return f64::INFINITY;
    }
    let mut x = -SQRT_2 * statrs::function::erf::erfc_inv(2.0 * u);
    for _ in 0..2 {
        let err = if u < 0.5 { norm_cdf(x) - u } else { (1.0 - u) - norm_sf(x) };
        let d = norm_pdf(x);
        if d > 0.0 && err.is_finite() && err != 0.0 {
            let t = err / d;
            x -= t / (1.0 + 0.5 * x * t);
        }
    }
    x
}

/// Regularized lower incomplete gamma P(a, x).
pub fn gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x.is_infinite() {
        1.0
    } else {
        statrs::function::gamma::gamma_lr(a, x)
    }
}

/// Regularized upper incomplete gamma Q(a, x).
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else if x.is_infinite() {
        0.0
    } else {
        statrs::function::gamma::gamma_ur(a, x)
    }
}

/// Regularized incomplete beta I_x(a, b).
pub fn beta_reg(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        statrs::function::beta::beta_reg(a, b, x)
    }
}

pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

pub fn ln_factorial(k: u64) -> f64 {
    statrs::function::factorial::ln_factorial(k)
}

const SHIFT: f64 = 10.0;

/// `ln x - psi(x)` for x > 0, accurate in the relative sense for large x.
pub fn log_minus_digamma(x: f64) -> f64 {
    if !(x > 0.0) {
        return f64::NAN;
    }
    if x >= SHIFT {
        let r = 1.0 / x;
        let r2 = r * r;
        return r * 0.5
            + r2 * (1.0 / 12.0
                - r2 * (1.0 / 120.0
                    - r2 * (1.0 / 252.0
                        - r2 * (1.0 / 240.0
                            - r2 * (1.0 / 132.0 - r2 * (691.0 / 32760.0 - r2 * (1.0 / 12.0)))))));
    }
    let mut acc = 0.0;
    let mut y = x;
    while y < SHIFT {
        acc += 1.0 / y;
        y += 1.0;
    }
    (x / y).ln() + acc + log_minus_digamma(y)
}

/// Digamma psi(x).
pub fn digamma(x: f64) -> f64 {
    if x.is_nan() || x == f64::NEG_INFINITY {
        return f64::NAN;
    }
    if x <= 0.0 {
        if x == x.floor() {
            return f64::NAN;
        }
        return digamma(1.0 - x) - PI / (PI * x).tan();
    }
    x.ln() - log_minus_digamma(x)
}

/// Trigamma psi_1(x) for x > 0.
pub fn trigamma(x: f64) -> f64 {
    if !(x > 0.0) {
        return f64::NAN;
    }
    let mut acc = 0.0;
    let mut y = x;
    while y < SHIFT {
        acc += 1.0 / (y * y);
        y += 1.0;
    }
    let r = 1.0 / y;
    let r2 = r * r;
    let tail = r
        + 0.5 * r2
        + r * r2
            * (1.0 / 6.0
                - r2 * (1.0 / 30.0
                    - r2 * (1.0 / 42.0
                        - r2 * (1.0 / 30.0
                            - r2 * (5.0 / 66.0 - r2 * (691.0 / 2730.0 - r2 * (7.0 / 6.0)))))));
    acc + tail
}

/// Sum using pairwise (cascade) summation.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 64;
    if xs.len() <= BLOCK {
        let mut s = 0.0;
        for &x in xs {
            s += x;
        }
        return s;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;

    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

    #[test]
    fn digamma_known_values() {
        assert!((digamma(1.0) + EULER_GAMMA).abs() < 1e-14);
        assert!((digamma(0.5) + EULER_GAMMA + 2.0 * 2f64.ln()).abs() < 1e-14);
        // psi(n+1) = H_n - gamma
        let h10: f64 = (1..=10).map(|k| 1.0 / k as f64).sum();
        assert!((digamma(11.0) - (h10 - EULER_GAMMA)).abs() < 1e-13);
    }

    #[test]
    fn digamma_recurrence() {
        for &x in &[0.01, 0.3, 1.7, 4.2, 9.99, 25.0, 1e4] {
            let lhs = digamma(x + 1.0) - digamma(x);
            assert!((lhs - 1.0 / x).abs() < 1e-12 * (1.0 + 1.0 / x), "x={x}");
        }
    }

    #[test]
    fn trigamma_known_values() {
        let pi2_6 = PI * PI / 6.0;
        assert!((trigamma(1.0) - pi2_6).abs() < 1e-13);
        assert!((trigamma(0.5) - PI * PI / 2.0).abs() < 1e-12);
        for &x in &[0.2, 2.5, 12.0, 300.0] {
            let lhs = trigamma(x) - trigamma(x + 1.0);
            assert!((lhs - 1.0 / (x * x)).abs() < 1e-12 * (1.0 + 1.0 / (x * x)));
        }
    }

    #[test]
    fn trigamma_matches_derivative_of_digamma() {
        for &x in &[0.7, 3.0, 40.0] {
            let h = 1e-5 * x;
            let fd = (digamma(x + h) - digamma(x - h)) / (2.0 * h);
            assert!((fd - trigamma(x)).abs() < 1e-7 * trigamma(x));
        }
    }

    #[test]
    fn log_minus_digamma_large_argument() {
        // ln x - psi(x) ~ 1/(2x) + 1/(12x^2)
        let x = 1e8;
        let v = log_minus_digamma(x);
        let approx = 0.5 / x + 1.0 / (12.0 * x * x);
        assert!(((v - approx) / approx).abs() < 1e-12);
    }

    #[test]
    fn normal_cdf_and_quantile() {
        assert_eq!(norm_cdf(0.0), 0.5);
        assert!((norm_quantile(0.975) - 1.959_963_984_540_054).abs() < 1e-13);
        for i in 1..1000 {
            let u = i as f64 / 1000.0;
            assert!((norm_cdf(norm_quantile(u)) - u).abs() < 1e-14);
        }
        assert!((norm_quantile(1e-300) + 37.0471).abs() < 1e-3);
    }

    #[test]
    fn erfc_reference_values() {
        // erfc(x) = Q(1/2, x^2), an independent route through the incomplete gamma
        for &x in &[0.1, 0.7, 1.3, 1.999, 2.0, 2.5, 4.0, 7.5] {
            let r = gamma_q(0.5, x * x);
            assert!(((erfc(x) - r) / r).abs() < 1e-13, "x={x}");
        }
        assert!((erf(0.5) - 0.520_499_877_813_046_5).abs() < 3e-16);
        assert!((erfc(-1.0) - (1.0 + erf(1.0))).abs() < 1e-16);
        assert!((norm_sf(10.0) - 7.619_853_024_160_527e-24).abs() < 1e-36);
    }

    #[test]
    fn pairwise_sum_exact_on_integers() {
        let xs: Vec<f64> = (0..10_000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 49_995_000.0);
    }
}
