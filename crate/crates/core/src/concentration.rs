//! Tail-bound calculators, empirical tail checks, random projections and
//! Erdős–Rényi graphs.

use std::collections::VecDeque;
use std::io::Write;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::distributions::DistributionSpec;
use crate::error::{Result, StatError};
use crate::exec;
use crate::rng::RandomStream;
use crate::stats::binomial_se;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag")]
pub enum TailBoundKind {
    /// `P(X >= t) <= mean / t` for nonnegative X.
    Markov { mean: f64 },
    /// `P(|X - EX| >= t) <= variance / t^2`.
    Chebyshev { variance: f64 },
    /// Two-sided sub-Gaussian bound with variance proxy `sigma^2`.
    SubGaussian { sigma: f64 },
    /// Two-sided sub-exponential bound with parameters `(nu, beta)`.
    SubExponential { nu: f64, beta: f64 },
    /// `P(|Y/k - 1| >= t)` for `Y ~ chi^2_k`.
    ChiSquaredRelative { k: u32 },
    /// `P(|X - lambda| >= t)` for a binomial count with mean `lambda`;
    /// requires `t < lambda`.
    ChernoffBinomial { lambda: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailBound {
    pub raw: f64,
    pub clamped: f64,
}

impl TailBoundKind {
    pub fn validate(&self) -> Result<()> {
        let pos = |name: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(StatError::param(name, format!("must be positive, got {v}")))
            }
        };
        match *self {
            TailBoundKind::Markov { mean } => {
                if mean >= 0.0 && mean.is_finite() {
                    Ok(())
                } else {
                    Err(StatError::param("mean", "must be nonnegative"))
                }
            }
            TailBoundKind::Chebyshev { variance } => pos("variance", variance),
            TailBoundKind::SubGaussian { sigma } => pos("sigma", sigma),
            TailBoundKind::SubExponential { nu, beta } => {
                pos("nu", nu)?;
                pos("beta", beta)
            }
            TailBoundKind::ChiSquaredRelative { k } => pos("k", k as f64),
            TailBoundKind::ChernoffBinomial { lambda } => pos("lambda", lambda),
        }
    }
}

pub fn tail_bound(kind: &TailBoundKind, t: f64) -> Result<TailBound> {
    kind.validate()?;
    if !(t > 0.0) || !t.is_finite() {
        return Err(StatError::Domain(format!("tail bound needs t > 0, got {t}")));
    }
    let raw = match *kind {
        TailBoundKind::Markov { mean } => mean / t,
        TailBoundKind::Chebyshev { variance } => variance / (t * t),
        TailBoundKind::SubGaussian { sigma } => 2.0 * (-t * t / (2.0 * sigma * sigma)).exp(),
        TailBoundKind::SubExponential { nu, beta } => {
            if t <= nu * nu / beta {
                2.0 * (-t * t / (2.0 * nu * nu)).exp()
            } else {
                2.0 * (-t / (2.0 * beta)).exp()
            }
        }
        TailBoundKind::ChiSquaredRelative { k } => {
            let k = k as f64;
            if t < 1.0 {
                2.0 * (-k * t * t / 8.0).exp()
            } else {
                2.0 * (-k * t / 8.0).exp()
            }
        }
        TailBoundKind::ChernoffBinomial { lambda } => {
            let eps = t / lambda;
            if eps >= 1.0 {
                return Err(StatError::Domain(format!(
                    "Chernoff binomial bound needs t < lambda (relative deviation {eps} >= 1)"
                )));
            }
            2.0 * (-eps * eps * lambda / 3.0).exp()
        }
    };
    Ok(TailBound { raw, clamped: raw.min(1.0) })
}

/// The random variable `scale * (X_1 + ... + X_terms)` with i.i.d. `X_i ~ spec`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailSource {
    pub spec: DistributionSpec,
    pub terms: usize,
    pub scale: f64,
}

impl TailSource {
    pub fn single(spec: DistributionSpec) -> Self {
        TailSource { spec, terms: 1, scale: 1.0 }
    }

    pub fn draw(&self, s: &mut RandomStream) -> f64 {
        let mut acc = 0.0;
        for _ in 0..self.terms {
            acc += self.spec.draw(s);
        }
        self.scale * acc
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalTailPoint {
    pub t: f64,
    pub frequency: f64,
    pub std_error: f64,
}

/// Frequency of `|X - center| >= t` for each `t` in `t_grid`. Draw `i`
/// uses `stream.split(i)`.
pub fn empirical_tail(
    source: &TailSource,
    center: f64,
    t_grid: &[f64],
    n_samples: usize,
    stream: &RandomStream,
) -> Result<Vec<EmpiricalTailPoint>> {
    if n_samples == 0 {
        return Err(StatError::InsufficientData { needed: 1, got: 0 });
    }
    source.spec.validate()?;
    let devs = exec::replicate(stream, n_samples, |_, s| (source.draw(s) - center).abs());
    Ok(tail_frequencies(&devs, t_grid))
}

/// Exceedance frequencies `#{d >= t} / n` over a grid, from absolute deviations.
pub fn tail_frequencies(devs: &[f64], t_grid: &[f64]) -> Vec<EmpiricalTailPoint> {
    let mut sorted = devs.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len();
    t_grid
        .iter()
        .map(|&t| {
            let below = sorted.partition_point(|&d| d < t);
            let frequency = (n - below) as f64 / n as f64;
            EmpiricalTailPoint { t, frequency, std_error: binomial_se(frequency, n) }
        })
        .collect()
}

/// Smallest `m` with `n(n-1) exp(-m eps^2 / 8) <= delta`.
pub fn jl_target_dim(n: usize, epsilon: f64, delta: f64) -> Result<usize> {
    if n < 2 {
        return Err(StatError::Domain(format!("need at least 2 points, got {n}")));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(StatError::Domain(format!("epsilon must lie in (0,1), got {epsilon}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(StatError::Domain(format!("delta must lie in (0,1), got {delta}")));
    }
    let nf = n as f64;
    let raw = 8.0 / (epsilon * epsilon) * (nf * (nf - 1.0) / delta).ln();
    // absorb round-off when the exact value is an integer
    let near = raw.round();
    let m = if (raw - near).abs() <= 1e-9 * near.max(1.0) { near } else { raw.ceil() };
    Ok((m as usize).max(1))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JLConfig {
    pub n_points: usize,
    pub ambient_dim: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub m: usize,
}

impl JLConfig {
    pub fn new(n_points: usize, ambient_dim: usize, epsilon: f64, delta: f64) -> Result<Self> {
        if ambient_dim == 0 {
            return Err(StatError::param("ambient_dim", "must be at least 1"));
        }
        let m = jl_target_dim(n_points, epsilon, delta)?;
        Ok(JLConfig { n_points, ambient_dim, epsilon, delta, m })
    }
}

/// The m x p matrix with i.i.d. standard normal entries, drawn row by row.
pub fn jl_matrix(p: usize, m: usize, stream: &mut RandomStream) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(m, p);
    for i in 0..m {
        for j in 0..p {
            a[(i, j)] = stream.normal();
        }
    }
    a
}

/// Maps every row `x` of `points` to `A x / sqrt(m)`.
pub fn jl_project(points: &DMatrix<f64>, m: usize, stream: &mut RandomStream) -> Result<DMatrix<f64>> {
    if m == 0 || points.ncols() == 0 {
        return Err(StatError::Domain("projection needs m >= 1 and p >= 1".into()));
    }
    let a = jl_matrix(points.ncols(), m, stream);
    Ok(points * a.transpose() / (m as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JLTrial {
    pub max_distortion: f64,
    pub success: bool,
    pub skipped_pairs: usize,
}

fn pairwise_sq_dists(x: &DMatrix<f64>) -> DMatrix<f64> {
    let g = x * x.transpose();
    let n = x.nrows();
    DMatrix::from_fn(n, n, |i, j| (g[(i, i)] + g[(j, j)] - 2.0 * g[(i, j)]).max(0.0))
}

/// Projects `points` (or `n_points` fresh standard-normal points drawn from
/// `stream.split(0)`) with a matrix from `stream.split(1)` and checks every
/// pairwise squared-distance ratio against `[1 - eps, 1 + eps]`.
pub fn jl_trial(config: &JLConfig, points: Option<&DMatrix<f64>>, stream: &RandomStream) -> Result<JLTrial> {
    let owned;
    let x = match points {
        Some(p) => {
            if p.nrows() < 2 {
                return Err(StatError::Domain("need at least 2 points".into()));
            }
            p
        }
        None => {
            let mut s = stream.split(0);
            owned = DMatrix::from_fn(config.n_points, config.ambient_dim, |_, _| s.normal());
            &owned
        }
    };
    let projected = jl_project(x, config.m, &mut stream.split(1))?;
    // Exact differences for the originals avoid Gram cancellation on near-duplicates.
    let n = x.nrows();
    let proj = pairwise_sq_dists(&projected);
    let mut max_distortion: f64 = 0.0;
    let mut success = true;
    let mut skipped = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            let d2: f64 = x.row(i).iter().zip(x.row(j).iter()).map(|(a, b)| (a - b) * (a - b)).sum();
            if d2 == 0.0 {
                skipped += 1;
                continue;
            }
            let ratio = proj[(i, j)] / d2;
            max_distortion = max_distortion.max((ratio - 1.0).abs());
            if ratio < 1.0 - config.epsilon || ratio > 1.0 + config.epsilon {
                success = false;
            }
        }
    }
    Ok(JLTrial { max_distortion, success, skipped_pairs: skipped })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JLExperiment {
    pub config: JLConfig,
    pub trials: usize,
    pub success_rate: f64,
    pub success_rate_se: f64,
    pub mean_max_distortion: f64,
}

/// Runs `trials` independent trials; trial `r` uses `stream.split(r)`.
pub fn jl_experiment(config: &JLConfig, trials: usize, stream: &RandomStream) -> Result<JLExperiment> {
    let results = exec::replicate(stream, trials, |_, s| jl_trial(config, None, s));
    let results: Vec<JLTrial> = results.into_iter().collect::<Result<_>>()?;
    let success_rate = results.iter().filter(|r| r.success).count() as f64 / trials as f64;
    let d: Vec<f64> = results.iter().map(|r| r.max_distortion).collect();
    Ok(JLExperiment {
        config: *config,
        trials,
        success_rate,
        success_rate_se: binomial_se(success_rate, trials),
        mean_max_distortion: crate::stats::mean(&d),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErdosRenyiGraph {
    pub n: usize,
    pub p: f64,
    /// Unordered pairs `(i, j)` with `i < j`, in lexicographic order.
    pub edges: Vec<(usize, usize)>,
}

pub fn er_sample(n: usize, p: f64, stream: &mut RandomStream) -> Result<ErdosRenyiGraph> {
    if n < 2 {
        return Err(StatError::Domain(format!("need N >= 2, got {n}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(StatError::Domain(format!("edge probability must lie in [0,1], got {p}")));
    }
    let total = (n * (n - 1) / 2) as u64;
    let mut edges = Vec::new();
    if p == 1.0 {
        edges.extend((0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))));
    } else if p > 0.0 {
        // gaps between successive edges in pair order are geometric
        let lq = (-p).ln_1p();
        let (mut k, mut i, mut row_start, mut row_len) = (0u64, 0usize, 0u64, (n - 1) as u64);
        loop {
            let skip = (stream.uniform_open().ln() / lq).floor();
            if skip >= (total - k) as f64 {
                break;
            }
            k += skip as u64;
            while k >= row_start + row_len {
                row_start += row_len;
                row_len -= 1;
                i += 1;
            }
            edges.push((i, i + 1 + (k - row_start) as usize));
            k += 1;
            if k == total {
                break;
            }
        }
    }
    Ok(ErdosRenyiGraph { n, p, edges })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErMetrics {
    pub edge_count: usize,
    pub degree_sequence: Vec<usize>,
    pub mean_degree: f64,
    pub is_connected: bool,
}

pub fn er_metrics(graph: &ErdosRenyiGraph) -> ErMetrics {
    let n = graph.n;
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(i, j) in &graph.edges {
        adj[i].push(j);
        adj[j].push(i);
    }
    let degree_sequence: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    let mut reached = 1;
    while let Some(v) = queue.pop_front() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                reached += 1;
                queue.push_back(w);
            }
        }
    }
    ErMetrics {
        edge_count: graph.edges.len(),
        mean_degree: 2.0 * graph.edges.len() as f64 / n as f64,
        degree_sequence,
        is_connected: reached == n,
    }
}

/// True when every degree lies within `eps * d` of `d = (N-1)p`.
pub fn is_almost_regular(metrics: &ErMetrics, n: usize, p: f64, eps: f64) -> bool {
    let d = (n as f64 - 1.0) * p;
    metrics.degree_sequence.iter().all(|&di| (di as f64 - d).abs() <= eps * d)
}

/// `C` such that `d >= C ln N` guarantees almost regularity with probability `1 - delta`.
pub fn almost_regularity_constant(eps: f64, delta: f64) -> f64 {
    3.0 * (4.0 / delta).ln() / (eps * eps * std::f64::consts::LN_2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectivityStudy {
    pub n: usize,
    pub c: f64,
    pub p: f64,
    pub graphs: usize,
    pub connected_frequency: f64,
    pub std_error: f64,
    /// `exp(-exp(-K))` with `K = (c - 1) ln N`.
    pub asymptotic_limit: f64,
    pub mean_edge_count: f64,
}

/// Connectivity frequency at `p = c ln N / N`; graph `r` uses `stream.split(r)`.
pub fn er_connectivity(n: usize, c: f64, graphs: usize, stream: &RandomStream) -> Result<ConnectivityStudy> {
    let nf = n as f64;
    let p = (c * nf.ln() / nf).min(1.0);
    let runs = exec::replicate(stream, graphs, |_, s| {
        er_sample(n, p, s).map(|g| {
            let m = er_metrics(&g);
            (m.is_connected, m.edge_count)
        })
    });
    let runs: Vec<(bool, usize)> = runs.into_iter().collect::<Result<_>>()?;
    let freq = runs.iter().filter(|r| r.0).count() as f64 / graphs as f64;
    let edges: Vec<f64> = runs.iter().map(|r| r.1 as f64).collect();
    let k = (c - 1.0) * nf.ln();
    Ok(ConnectivityStudy {
        n,
        c,
        p,
        graphs,
        connected_frequency: freq,
        std_error: binomial_se(freq, graphs),
        asymptotic_limit: (-(-k).exp()).exp(),
        mean_edge_count: crate::stats::mean(&edges),
    })
}

/// Edge-list CSV: first line `N,p` (the values), then one `i,j` line per edge.
pub fn write_edge_list<W: Write>(graph: &ErdosRenyiGraph, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record([graph.n.to_string(), graph.p.to_string()])?;
    for &(i, j) in &graph.edges {
        w.write_record([i.to_string(), j.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
