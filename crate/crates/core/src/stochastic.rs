//! Brownian paths, Itô sums, geometric Brownian motion, Feynman–Kac Monte
//! Carlo, Black–Scholes, and Gaussian concentration.

use serde::{Deserialize, Serialize};

use crate::error::{Result, StatError};
use crate::estimation::{monte_carlo_mean_with, MonteCarloResult};
use crate::exec;
use crate::rng::RandomStream;
use crate::special::{norm_cdf, pairwise_sum};
use crate::stats::{self, mean};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    times: Vec<f64>,
    uniform: bool,
}

impl TimeGrid {
    /// `0 = t_0 < ... < t_k = T` with equal steps.
    pub fn uniform(t_end: f64, steps: usize) -> Result<Self> {
        if !(t_end > 0.0) || !t_end.is_finite() {
            return Err(StatError::param("T", "must be positive"));
        }
        if steps == 0 {
            return Err(StatError::param("steps", "need at least one step"));
        }
        let dt = t_end / steps as f64;
        let mut times: Vec<f64> = (0..=steps).map(|j| j as f64 * dt).collect();
        times[steps] = t_end;
        Ok(TimeGrid { times, uniform: true })
    }

    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.len() < 2 {
            return Err(StatError::param("times", "need at least one step"));
        }
        if times[0] != 0.0 {
            return Err(StatError::param("times", "grid must start at 0"));
        }
        if times.windows(2).any(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return Err(StatError::param("times", "grid must be strictly increasing"));
        }
        let d0 = times[1] - times[0];
        let uniform = times.windows(2).all(|w| ((w[1] - w[0]) - d0).abs() <= 1e-12 * d0);
        Ok(TimeGrid { times, uniform })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn t_end(&self) -> f64 {
        self.times[self.steps()]
    }

    pub fn dt(&self, j: usize) -> f64 {
        self.times[j + 1] - self.times[j]
    }

    pub fn mesh(&self) -> f64 {
        (0..self.steps()).map(|j| self.dt(j)).fold(0.0, f64::max)
    }

    pub fn is_uniform(&self) -> bool {
        self.uniform
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrownianPath {
    pub grid: TimeGrid,
    pub dim: usize,
    /// Row-major `(k+1) x dim`.
    pub values: Vec<f64>,
}

impl BrownianPath {
    /// Wraps precomputed values; handy for deterministic checks.
    pub fn from_values(grid: TimeGrid, dim: usize, values: Vec<f64>) -> Result<Self> {
        let expected = (grid.steps() + 1) * dim;
        if values.len() != expected {
            return Err(StatError::LengthMismatch { expected, got: values.len() });
        }
        Ok(BrownianPath { grid, dim, values })
    }

    pub fn value(&self, j: usize, coord: usize) -> f64 {
        self.values[j * self.dim + coord]
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.values[j * self.dim..(j + 1) * self.dim]
    }

    pub fn coordinate(&self, coord: usize) -> Result<Vec<f64>> {
        self.check_coord(coord)?;
        Ok((0..=self.grid.steps()).map(|j| self.value(j, coord)).collect())
    }

    fn check_coord(&self, coord: usize) -> Result<()> {
        if coord >= self.dim {
            return Err(StatError::Domain(format!("coordinate {coord} out of range for dimension {}", self.dim)));
        }
        Ok(())
    }
}

pub fn brownian_sample(grid: &TimeGrid, dim: usize, stream: &mut RandomStream) -> Result<BrownianPath> {
    if dim == 0 {
        return Err(StatError::param("dim", "must be at least 1"));
    }
    let k = grid.steps();
    let mut values = vec![0.0; (k + 1) * dim];
    for j in 0..k {
        let sd = grid.dt(j).sqrt();
        for c in 0..dim {
            values[(j + 1) * dim + c] = values[j * dim + c] + sd * stream.normal();
        }
    }
    Ok(BrownianPath { grid: grid.clone(), dim, values })
}

/// `sum_j (b_{t_{j+1}} - b_{t_j})^2` along one coordinate.
pub fn quadratic_variation(path: &BrownianPath, coord: usize) -> Result<f64> {
    path.check_coord(coord)?;
    let sq: Vec<f64> = (0..path.grid.steps())
        .map(|j| (path.value(j + 1, coord) - path.value(j, coord)).powi(2))
        .collect();
    Ok(pairwise_sum(&sq))
}

/// Left-endpoint sum `sum_j f_j (b_{t_{j+1}} - b_{t_j})`; `f_j` must only use the path up to `t_j`.
pub fn ito_integral(integrand: &[f64], path: &BrownianPath, coord: usize) -> Result<f64> {
    path.check_coord(coord)?;
    let k = path.grid.steps();
    if integrand.len() != k {
        return Err(StatError::LengthMismatch { expected: k, got: integrand.len() });
    }
    let terms: Vec<f64> = (0..k)
        .map(|j| integrand[j] * (path.value(j + 1, coord) - path.value(j, coord)))
        .collect();
    Ok(pairwise_sum(&terms))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GbmMethod {
    Exact,
    Euler,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbmPath {
    pub grid: TimeGrid,
    pub values: Vec<f64>,
    /// Set when an Euler step left the positive half-line.
    pub nonpositive: bool,
}

fn gbm_from_brownian(mu: f64, sigma: f64, s0: f64, b: &BrownianPath, method: GbmMethod) -> GbmPath {
    let grid = &b.grid;
    let values: Vec<f64> = match method {
        GbmMethod::Exact => grid
            .times()
            .iter()
            .enumerate()
            .map(|(j, &t)| s0 * ((mu - 0.5 * sigma * sigma) * t + sigma * b.value(j, 0)).exp())
            .collect(),
        GbmMethod::Euler => {
            let mut v = Vec::with_capacity(grid.steps() + 1);
            v.push(s0);
            for j in 0..grid.steps() {
                let s = v[j];
                v.push(s * (1.0 + mu * grid.dt(j) + sigma * (b.value(j + 1, 0) - b.value(j, 0))));
            }
            v
        }
    };
    let nonpositive = values.iter().any(|&s| s <= 0.0);
    GbmPath { grid: grid.clone(), values, nonpositive }
}

pub fn gbm_sample(
    mu: f64,
    sigma: f64,
    s0: f64,
    grid: &TimeGrid,
    stream: &mut RandomStream,
    method: GbmMethod,
) -> Result<GbmPath> {
    if !(s0 > 0.0) {
        return Err(StatError::param("s0", "must be positive"));
    }
    if !(sigma >= 0.0) || !mu.is_finite() {
        return Err(StatError::param("sigma", "need sigma >= 0 and finite mu"));
    }
    let b = brownian_sample(grid, 1, stream)?;
    Ok(gbm_from_brownian(mu, sigma, s0, &b, method))
}

/// Exact and Euler paths driven by the same Brownian increments.
pub fn gbm_coupled(mu: f64, sigma: f64, s0: f64, grid: &TimeGrid, stream: &mut RandomStream) -> Result<(GbmPath, GbmPath)> {
    if !(s0 > 0.0) || !(sigma >= 0.0) {
        return Err(StatError::param("s0", "need s0 > 0 and sigma >= 0"));
    }
    let b = brownian_sample(grid, 1, stream)?;
    Ok((gbm_from_brownian(mu, sigma, s0, &b, GbmMethod::Exact), gbm_from_brownian(mu, sigma, s0, &b, GbmMethod::Euler)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EulerGapStudy {
    pub steps: usize,
    /// Mean of `S_T(euler) - S_T(exact)` over coupled paths.
    pub mean_gap: f64,
    pub gap_se: f64,
    pub mean_exact: f64,
    pub exact_se: f64,
}

pub fn euler_gap_study(
    mu: f64,
    sigma: f64,
    s0: f64,
    t_end: f64,
    steps: usize,
    paths: usize,
    stream: &RandomStream,
) -> Result<EulerGapStudy> {
    let grid = TimeGrid::uniform(t_end, steps)?;
    let rows = exec::replicate(stream, paths, |_, s| {
        let (ex, eu) = gbm_coupled(mu, sigma, s0, &grid, s)?;
        Ok::<_, StatError>((ex.values[steps], eu.values[steps]))
    });
    let rows: Vec<(f64, f64)> = rows.into_iter().collect::<Result<_>>()?;
    let gaps: Vec<f64> = rows.iter().map(|r| r.1 - r.0).collect();
    let ex: Vec<f64> = rows.iter().map(|r| r.0).collect();
    Ok(EulerGapStudy {
        steps,
        mean_gap: mean(&gaps),
        gap_se: stats::std_error(&gaps),
        mean_exact: mean(&ex),
        exact_se: stats::std_error(&ex),
    })
}

// ---------------------------------------------------------------------------
// Path functionals without storing paths

/// Walks a Brownian motion from `x0` over `steps` equal steps of size `dt`,
/// calling `visit(j, x_j)` at every left endpoint, and returns the endpoint.
fn walk(x0: &[f64], dt: f64, steps: usize, s: &mut RandomStream, mut visit: impl FnMut(usize, &[f64])) -> Vec<f64> {
    let sd = dt.sqrt();
    let mut x = x0.to_vec();
    for j in 0..steps {
        visit(j, &x);
        for xi in x.iter_mut() {
            *xi += sd * s.normal();
        }
    }
    x
}

/// Endpoint `x0 + b_t` simulated on the same increments Feynman–Kac uses.
pub fn brownian_endpoint(x0: &[f64], t: f64, steps: usize, s: &mut RandomStream) -> Vec<f64> {
    walk(x0, t / steps as f64, steps, s, |_, _| {})
}

/// `E_{x0}[exp(-int_0^t V(b_s) ds) f(b_t)]`, the time integral by the left-endpoint rule.
/// Path `i` uses `stream.split(i)`.
pub fn feynman_kac_mc<V, F>(
    potential: V,
    payoff: F,
    t: f64,
    x0: &[f64],
    n_paths: usize,
    steps: usize,
    stream: &RandomStream,
) -> Result<MonteCarloResult>
where
    V: Fn(&[f64]) -> f64 + Sync + Send,
    F: Fn(&[f64]) -> f64 + Sync + Send,
{
    if steps == 0 {
        return Err(StatError::param("steps", "need at least one step"));
    }
    if !(t > 0.0) {
        return Err(StatError::param("t", "must be positive"));
    }
    if x0.is_empty() {
        return Err(StatError::param("x0", "dimension must be at least 1"));
    }
    let dt = t / steps as f64;
    monte_carlo_mean_with(
        |s| {
            let mut integral = 0.0;
            let end = walk(x0, dt, steps, s, |_, x| integral += potential(x) * dt);
            vec![(-integral).exp() * payoff(&end)]
        },
        |v| v[0],
        n_paths,
        0.05,
        None,
        stream,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QvItoStudy {
    pub paths: usize,
    pub steps: usize,
    pub mean_abs_qv_error: f64,
    /// Mean `|sum b db - (b_T^2/2 - T/2)|`.
    pub mean_abs_ito_error: f64,
}

pub fn qv_ito_study(t_end: f64, steps: usize, paths: usize, stream: &RandomStream) -> Result<QvItoStudy> {
    let grid = TimeGrid::uniform(t_end, steps)?;
    let rows = exec::replicate(stream, paths, |_, s| {
        let b = brownian_sample(&grid, 1, s)?;
        let qv = quadratic_variation(&b, 0)?;
        let left: Vec<f64> = b.values[..steps].to_vec();
        let ito = ito_integral(&left, &b, 0)?;
        let bt = b.values[steps];
        Ok::<_, StatError>(((qv - t_end).abs(), (ito - (0.5 * bt * bt - 0.5 * t_end)).abs()))
    });
    let rows: Vec<(f64, f64)> = rows.into_iter().collect::<Result<_>>()?;
    Ok(QvItoStudy {
        paths,
        steps,
        mean_abs_qv_error: mean(&rows.iter().map(|r| r.0).collect::<Vec<_>>()),
        mean_abs_ito_error: mean(&rows.iter().map(|r| r.1).collect::<Vec<_>>()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrand {
    /// `f = b`
    Brownian,
    /// `f = b^2`
    BrownianSquared,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsometryStudy {
    pub integrand: Integrand,
    pub paths: usize,
    pub steps: usize,
    pub mean_integral: f64,
    pub integral_se: f64,
    /// `E[(int f db)^2]`
    pub second_moment: f64,
    pub second_moment_se: f64,
    /// `E[int f^2 dt]`, left-endpoint rule.
    pub time_integral: f64,
    pub time_integral_se: f64,
}

pub fn ito_isometry_study(
    integrand: Integrand,
    t_end: f64,
    steps: usize,
    paths: usize,
    stream: &RandomStream,
) -> Result<IsometryStudy> {
    if steps == 0 || !(t_end > 0.0) {
        return Err(StatError::param("steps", "need T > 0 and at least one step"));
    }
    let dt = t_end / steps as f64;
    let f = move |b: f64| match integrand {
        Integrand::Brownian => b,
        Integrand::BrownianSquared => b * b,
    };
    let rows = exec::replicate(stream, paths, |_, s| {
        let sd = dt.sqrt();
        let (mut b, mut ito, mut time) = (0.0, 0.0, 0.0);
        for _ in 0..steps {
            let fb = f(b);
            let db = sd * s.normal();
            ito += fb * db;
            time += fb * fb * dt;
            b += db;
        }
        (ito, time)
    });
    let ito: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let sq: Vec<f64> = ito.iter().map(|v| v * v).collect();
    let time: Vec<f64> = rows.iter().map(|r| r.1).collect();
    Ok(IsometryStudy {
        integrand,
        paths,
        steps,
        mean_integral: mean(&ito),
        integral_se: stats::std_error(&ito),
        second_moment: mean(&sq),
        second_moment_se: stats::std_error(&sq),
        time_integral: mean(&time),
        time_integral_se: stats::std_error(&time),
    })
}

// ---------------------------------------------------------------------------
// Black–Scholes

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BsParams {
    pub spot: f64,
    pub strike: f64,
    pub rate: f64,
    pub volatility: f64,
    pub maturity: f64,
    /// Valuation time in `[0, maturity)`.
    pub time: f64,
}

impl BsParams {
    pub fn new(spot: f64, strike: f64, rate: f64, volatility: f64, maturity: f64) -> Result<Self> {
        let p = BsParams { spot, strike, rate, volatility, maturity, time: 0.0 };
        p.validate()?;
        Ok(p)
    }

    pub fn at_time(mut self, time: f64) -> Result<Self> {
        self.time = time;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_with(false)
    }

    /// Monte Carlo also accepts `sigma = 0` and `K = 0`.
    fn validate_with(&self, mc: bool) -> Result<()> {
        let bad = |n: &'static str, why: &str| Err(StatError::param(n, why.to_string()));
        if !(self.spot > 0.0) || !self.spot.is_finite() {
            return bad("spot", "must be positive");
        }
        if !(if mc { self.strike >= 0.0 } else { self.strike > 0.0 }) {
            return bad("strike", "must be positive");
        }
        if !(self.rate >= 0.0) || !self.rate.is_finite() {
            return bad("rate", "must be nonnegative");
        }
        if !(if mc { self.volatility >= 0.0 } else { self.volatility > 0.0 }) {
            return bad("volatility", "must be positive");
        }
        if !(self.maturity > 0.0) || !self.maturity.is_finite() {
            return bad("maturity", "must be positive");
        }
        if !(self.time >= 0.0) {
            return bad("time", "must be nonnegative");
        }
        if self.time >= self.maturity {
            return Err(StatError::Domain(
                "valuation time at or after maturity; the value is the payoff max(S - K, 0)".into(),
            ));
        }
        Ok(())
    }

    fn tau(&self) -> f64 {
        self.maturity - self.time
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BsPrice {
    pub params: BsParams,
    pub price: f64,
    /// Stock holding of the replicating portfolio, `Phi(g)`.
    pub delta: f64,
    /// Units of the bond `B_t = e^{rt}`: `e^{-rt} (u - delta S)`.
    pub bond_position: f64,
}

pub fn black_scholes_price(params: &BsParams) -> Result<BsPrice> {
    params.validate()?;
    let p = params;
    let tau = p.tau();
    let vs = p.volatility * tau.sqrt();
    let g = ((p.spot / p.strike).ln() + (p.rate + 0.5 * p.volatility * p.volatility) * tau) / vs;
    let h = g - vs;
    let disc = p.strike * (-p.rate * tau).exp();
    let price = p.spot * norm_cdf(g) - disc * norm_cdf(h);
    let delta = norm_cdf(g);
    Ok(BsPrice { params: *p, price, delta, bond_position: (-p.rate * p.time).exp() * (price - delta * p.spot) })
}

/// `u_t + sigma^2 x^2 u_xx / 2 + r x u_x - r u` at `(t, x)` by central differences,
/// with steps `1e-4 x` in space and `1e-4` in time.
pub fn bs_pde_residual(params: &BsParams, t: f64, x: f64) -> Result<f64> {
    params.validate()?;
    if !(t >= 0.0 && t < params.maturity) || !(x > 0.0) {
        return Err(StatError::Domain(format!("need 0 <= t < T and x > 0, got t = {t}, x = {x}")));
    }
    // steps follow the local scales: tau in time, x sigma sqrt(tau) in space
    let tau = params.maturity - t;
    let ht = 1e-2 * tau;
    let hx = 1e-2 * x * (params.volatility * tau.sqrt()).max(1e-2);
    // Shifting both clocks keeps the price a function of T - t while the
    // time stencil reaches below t = 0.
    let shift = 2.0 * ht;
    let u = |tt: f64, xx: f64| -> Result<f64> {
        let q = BsParams { spot: xx, time: tt + shift, maturity: params.maturity + shift, ..*params };
        Ok(black_scholes_price(&q)?.price)
    };
    // five-point stencils, fourth order
    let (xm2, xm1, x0, xp1, xp2) = (u(t, x - 2.0 * hx)?, u(t, x - hx)?, u(t, x)?, u(t, x + hx)?, u(t, x + 2.0 * hx)?);
    let ux = (xm2 - 8.0 * xm1 + 8.0 * xp1 - xp2) / (12.0 * hx);
    let uxx = (-xm2 + 16.0 * xm1 - 30.0 * x0 + 16.0 * xp1 - xp2) / (12.0 * hx * hx);
    let (tm2, tm1, tp1, tp2) = (u(t - 2.0 * ht, x)?, u(t - ht, x)?, u(t + ht, x)?, u(t + 2.0 * ht, x)?);
    let ut = (tm2 - 8.0 * tm1 + 8.0 * tp1 - tp2) / (12.0 * ht);
    let (s, r) = (params.volatility, params.rate);
    Ok(ut + 0.5 * s * s * x * x * uxx + r * x * ux - r * x0)
}

/// Discounted risk-neutral payoff over exact terminal draws; path `i` uses `stream.split(i)`.
pub fn bs_mc_price(params: &BsParams, n_paths: usize, stream: &RandomStream) -> Result<MonteCarloResult> {
    params.validate_with(true)?;
    let p = *params;
    let tau = p.tau();
    let drift = (p.rate - 0.5 * p.volatility * p.volatility) * tau;
    let vs = p.volatility * tau.sqrt();
    let disc = (-p.rate * tau).exp();
    monte_carlo_mean_with(
        |s| vec![p.spot * (drift + vs * s.normal()).exp()],
        |v| disc * (v[0] - p.strike).max(0.0),
        n_paths,
        0.05,
        None,
        stream,
    )
}

// ---------------------------------------------------------------------------
// Gaussian concentration

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConcFunction {
    /// `x_1`
    LinearUnit,
    MaxCoordinate,
    EuclideanNorm,
    Constant { value: f64 },
}

impl ConcFunction {
    pub fn lipschitz(&self) -> f64 {
        match self {
            ConcFunction::Constant { .. } => 0.0,
            _ => 1.0,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match *self {
            ConcFunction::LinearUnit => x[0],
            ConcFunction::MaxCoordinate => x.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            ConcFunction::EuclideanNorm => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
            ConcFunction::Constant { value } => value,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationPoint {
    pub tau: f64,
    /// Frequency of `|F(X) - mean F| > tau`.
    pub empirical_tail: f64,
    pub std_error: f64,
    /// `2 exp(-tau^2 / 2L^2)`, zero for `L = 0` and `tau > 0`.
    pub bound: f64,
}

pub fn gaussian_concentration_experiment(
    function: ConcFunction,
    k: usize,
    n_samples: usize,
    tau_grid: &[f64],
    stream: &RandomStream,
) -> Result<Vec<ConcentrationPoint>> {
    if k == 0 || n_samples == 0 {
        return Err(StatError::param("k", "need k >= 1 and at least one sample"));
    }
    let values = exec::replicate(stream, n_samples, |_, s| {
        let mut x = vec![0.0; k];
        s.fill_normal(&mut x);
        function.eval(&x)
    });
    let m = pairwise_sum(&values) / n_samples as f64;
    let mut dev: Vec<f64> = values.iter().map(|v| (v - m).abs()).collect();
    dev.sort_by(f64::total_cmp);
    let l = function.lipschitz();
    Ok(tau_grid
        .iter()
        .map(|&tau| {
            let above = n_samples - dev.partition_point(|&d| d <= tau);
            let freq = above as f64 / n_samples as f64;
            let bound = if l == 0.0 {
                if tau > 0.0 { 0.0 } else { 2.0 }
            } else {
                2.0 * (-tau * tau / (2.0 * l * l)).exp()
            };
            ConcentrationPoint { tau, empirical_tail: freq, std_error: stats::binomial_se(freq, n_samples), bound }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimation::monte_carlo_mean_with;

    #[test]
    fn grid_rules() {
        assert!(TimeGrid::new(vec![0.0, 0.5, 0.5, 1.0]).is_err());
        assert!(TimeGrid::new(vec![0.1, 1.0]).is_err());
        let g = TimeGrid::uniform(2.0, 4).unwrap();
        assert_eq!(g.mesh(), 0.5);
        assert!(g.is_uniform());
        assert!(!TimeGrid::new(vec![0.0, 0.1, 1.0]).unwrap().is_uniform());
    }

    #[test]
    fn path_starts_at_origin() {
        let g = TimeGrid::uniform(1.0, 10).unwrap();
        let p = brownian_sample(&g, 3, &mut RandomStream::new(5)).unwrap();
        assert_eq!(p.row(0), &[0.0, 0.0, 0.0]);
        assert_eq!(p.values.len(), 33);
    }

    #[test]
    fn qv_of_identity_path() {
        let g = TimeGrid::uniform(2.0, 8).unwrap();
        let p = BrownianPath::from_values(g.clone(), 1, g.times().to_vec()).unwrap();
        let qv = quadratic_variation(&p, 0).unwrap();
        assert!((qv - 2.0 * g.mesh()).abs() < 1e-15);
    }

    #[test]
    fn constant_integrand_telescopes() {
        let g = TimeGrid::uniform(1.0, 50).unwrap();
        let p = brownian_sample(&g, 1, &mut RandomStream::new(8)).unwrap();
        let v = ito_integral(&[2.5; 50], &p, 0).unwrap();
        assert!((v - 2.5 * p.values[50]).abs() < 1e-12);
        assert!(ito_integral(&[1.0; 49], &p, 0).is_err());
    }

    #[test]
    fn deterministic_gbm() {
        let g = TimeGrid::uniform(2.0, 20).unwrap();
        let p = gbm_sample(0.1, 0.0, 3.0, &g, &mut RandomStream::new(1), GbmMethod::Exact).unwrap();
        for (j, &t) in g.times().iter().enumerate() {
            assert!((p.values[j] - 3.0 * (0.1 * t).exp()).abs() < 1e-13);
        }
    }

    #[test]
    fn constant_potential_factorizes() {
        let root = RandomStream::new(17);
        let f = |x: &[f64]| x[0].cos();
        let a = feynman_kac_mc(|_| 0.7, f, 1.5, &[0.2], 200, 10, &root).unwrap();
        let b = feynman_kac_mc(|_| 0.0, f, 1.5, &[0.2], 200, 10, &root).unwrap();
        assert!((a.estimate - (-0.7f64 * 1.5).exp() * b.estimate).abs() < 1e-12);
    }

    #[test]
    fn zero_potential_reduces_to_plain_mean() {
        let root = RandomStream::new(99);
        let f = |x: &[f64]| f64::from(x[0].abs() <= 1.0);
        let fk = feynman_kac_mc(|_| 0.0, f, 1.0, &[0.0], 500, 20, &root).unwrap();
        let mc = monte_carlo_mean_with(|s| brownian_endpoint(&[0.0], 1.0, 20, s), f, 500, 0.05, None, &root).unwrap();
        assert_eq!(fk.estimate, mc.estimate);
        assert_eq!(fk.std_error, mc.std_error);
    }

    #[test]
    fn deep_in_the_money() {
        let k = 1.0;
        let p = BsParams::new(1e6 * k, k, 0.05, 0.2, 1.0).unwrap();
        let u = black_scholes_price(&p).unwrap();
        let intrinsic = p.spot - k * (-0.05f64).exp();
        assert!(((u.price - intrinsic) / intrinsic).abs() <= 1e-9);
    }

    #[test]
    fn vanishing_volatility() {
        let p = BsParams::new(100.0, 100.0, 0.05, 1e-9, 1.0).unwrap();
        let u = black_scholes_price(&p).unwrap();
        assert!((u.price - (100.0 - 100.0 * (-0.05f64).exp())).abs() < 1e-9);
    }

    #[test]
    fn expired_option_is_an_error() {
        let p = BsParams::new(100.0, 100.0, 0.05, 0.2, 1.0).unwrap();
        assert!(p.at_time(1.0).is_err());
    }

    #[test]
    fn zero_vol_mc_is_exact() {
        let p = BsParams { spot: 100.0, strike: 90.0, rate: 0.03, volatility: 0.0, maturity: 2.0, time: 0.0 };
        let r = bs_mc_price(&p, 10, &RandomStream::new(2)).unwrap();
        let exact = (-0.06f64).exp() * (100.0 * 0.06f64.exp() - 90.0);
        assert!((r.estimate - exact).abs() < 1e-11);
    }

    #[test]
    fn standard_point_closed_form() {
        let p = BsParams::new(100.0, 100.0, 0.05, 0.2, 1.0).unwrap();
        let u = black_scholes_price(&p).unwrap();
        // scipy: 100*norm.cdf(0.35) - 100*exp(-0.05)*norm.cdf(0.15)
        assert!((u.price - 10.450583572185565).abs() < 1e-10);
        // value of the replicating portfolio
        assert!((u.delta * p.spot + u.bond_position - u.price).abs() < 1e-12);
    }

    #[test]
    fn pde_residual_small_across_the_domain() {
        let p = BsParams::new(100.0, 100.0, 0.05, 0.2, 1.0).unwrap();
        let mut worst: f64 = 0.0;
        for i in 0..=20 {
            for j in 0..=20 {
                let t = 0.98 * i as f64 / 20.0;
                let x = 50.0 + 100.0 * j as f64 / 20.0;
                worst = worst.max(bs_pde_residual(&p, t, x).unwrap().abs());
            }
        }
        assert!(worst < 1e-6, "{worst}");
        assert!(bs_pde_residual(&p, 1.0, 100.0).is_err());
    }

    #[test]
    fn constant_function_has_no_tail() {
        let pts = gaussian_concentration_experiment(
            ConcFunction::Constant { value: 3.0 },
            5,
            1000,
            &[0.0, 0.5, 1.0],
            &RandomStream::new(4),
        )
        .unwrap();
        assert!(pts.iter().all(|p| p.empirical_tail == 0.0));
    }
}
