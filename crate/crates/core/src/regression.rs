//! Least squares with exact normal-theory inference, ridge and LASSO.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::distributions::{ks_distance, DistributionSpec};
use crate::error::{check_delta, Result, StatError};
use crate::estimation::{t_two_sided, z_two_sided, CiKind, ConfidenceInterval};
use crate::exec;
use crate::hypothesis::TestReport;
use crate::rng::RandomStream;
use crate::stats::{self, mean};

/// Relative singular-value floor for the full-rank check.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    x: DMatrix<f64>,
    has_intercept: bool,
    names: Vec<String>,
}

impl DesignMatrix {
    /// Wraps a full design. With `has_intercept` the first column must be all ones.
    pub fn new(x: DMatrix<f64>, has_intercept: bool) -> Result<Self> {
        if x.ncols() == 0 || x.nrows() == 0 {
            return Err(StatError::InsufficientData { needed: 1, got: 0 });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(StatError::Domain("design contains non-finite entries".into()));
        }
        if has_intercept && x.column(0).iter().any(|&v| v != 1.0) {
            return Err(StatError::Domain("intercept column must be all ones".into()));
        }
        let off = usize::from(has_intercept);
        let names = (0..x.ncols())
            .map(|j| if has_intercept && j == 0 { "intercept".to_string() } else { format!("x{}", j + 1 - off) })
            .collect();
        Ok(DesignMatrix { x, has_intercept, names })
    }

    /// Builds `[1 | z]` (or just `z`) from an n×p predictor matrix.
    pub fn from_predictors(z: &DMatrix<f64>, intercept: bool) -> Result<Self> {
        let x = if intercept { z.clone().insert_column(0, 1.0) } else { z.clone() };
        Self::new(x, intercept)
    }

    /// Same as [`from_predictors`](Self::from_predictors) from row vectors.
    pub fn from_rows(rows: &[Vec<f64>], intercept: bool) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != p) {
            return Err(StatError::LengthMismatch { expected: p, got: bad.len() });
        }
        Self::from_predictors(&DMatrix::from_fn(n, p, |i, j| rows[i][j]), intercept)
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.ncols() {
            return Err(StatError::LengthMismatch { expected: self.ncols(), got: names.len() });
        }
        self.names = names;
        Ok(self)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn nrows(&self) -> usize {
        self.x.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.x.ncols()
    }

    /// Number of non-intercept columns.
    pub fn predictors(&self) -> usize {
        self.ncols() - usize::from(self.has_intercept)
    }

    pub fn has_intercept(&self) -> bool {
        self.has_intercept
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.x.row(i).iter().copied().collect()
    }

    /// Sub-design on the given columns, keeping the intercept flag only if column 0 is kept.
    pub fn select_columns(&self, cols: &[usize]) -> Result<Self> {
        if let Some(&bad) = cols.iter().find(|&&c| c >= self.ncols()) {
            return Err(StatError::Domain(format!("column {bad} out of range")));
        }
        let x = self.x.select_columns(cols);
        let intercept = self.has_intercept && cols.first() == Some(&0);
        let names = cols.iter().map(|&c| self.names[c].clone()).collect();
        Self::new(x, intercept)?.with_names(names)
    }

    /// Full column rank: smallest singular value above `RANK_TOL` times the largest.
    pub fn check_rank(&self) -> Result<()> {
        let (n, p) = (self.nrows(), self.ncols());
        if n < p {
            return Err(StatError::SingularDesign(format!("{n} rows cannot support {p} columns")));
        }
        let sv = self.x.singular_values();
        let max = sv.max();
        let min = sv.min();
        if max > 0.0 && min > RANK_TOL * max {
            return Ok(());
        }
        Err(StatError::SingularDesign(self.describe_dependency()))
    }

    fn describe_dependency(&self) -> String {
        let r = self.x.clone().qr().r();
        let p = self.ncols();
        for j in 0..p {
            let norm = self.x.column(j).norm();
            if norm == 0.0 {
                return format!("column '{}' is identically zero", self.names[j]);
            }
            if r[(j, j)].abs() > 1e-9 * norm {
                continue;
            }
            if j == 0 {
                break;
            }
            let block = r.view((0, 0), (j, j)).into_owned();
            let rhs = r.view((0, j), (j, 1)).into_owned();
            if let Some(c) = block.solve_upper_triangular(&rhs) {
                let terms: Vec<String> = (0..j)
                    .filter(|&i| c[i].abs() > 1e-9)
                    .map(|i| format!("{:.6}*'{}'", c[i], self.names[i]))
                    .collect();
                return format!("column '{}' = {}", self.names[j], terms.join(" + "));
            }
        }
        "columns are numerically collinear".to_string()
    }
}

#[derive(Debug, Clone)]
pub struct LinearFit {
    pub beta_hat: DVector<f64>,
    pub fitted: DVector<f64>,
    pub residuals: DVector<f64>,
    /// `|e|^2 / (n - cols)`; absent without residual degrees of freedom.
    pub sigma2_hat: Option<f64>,
    /// `(X'X)^{-1}`
    pub gram_inverse: DMatrix<f64>,
    pub cov_beta: Option<DMatrix<f64>>,
    pub r2: f64,
    pub r2_adj: Option<f64>,
    pub hat_diagonal: DVector<f64>,
    pub ss_res: f64,
    pub ss_reg: f64,
    pub ss_total: f64,
    pub df_resid: usize,
    pub n: usize,
    design: DesignMatrix,
    q: DMatrix<f64>,
    y: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearFitSummary {
    pub names: Vec<String>,
    pub beta_hat: Vec<f64>,
    pub std_errors: Option<Vec<f64>>,
    pub sigma2_hat: Option<f64>,
    pub r2: f64,
    pub r2_adj: Option<f64>,
    pub ss_res: f64,
    pub ss_reg: f64,
    pub ss_total: f64,
    pub df_resid: usize,
    pub n: usize,
}

impl LinearFit {
    pub fn design(&self) -> &DesignMatrix {
        &self.design
    }

    pub fn response(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn ncols(&self) -> usize {
        self.design.ncols()
    }

    /// `x0' (X'X)^{-1} x0`
    pub fn leverage(&self, x0: &[f64]) -> Result<f64> {
        if x0.len() != self.ncols() {
            return Err(StatError::LengthMismatch { expected: self.ncols(), got: x0.len() });
        }
        let v = DVector::from_column_slice(x0);
        Ok((v.transpose() * &self.gram_inverse * &v)[(0, 0)])
    }

    pub fn predict(&self, x0: &[f64]) -> Result<f64> {
        if x0.len() != self.ncols() {
            return Err(StatError::LengthMismatch { expected: self.ncols(), got: x0.len() });
        }
        Ok(x0.iter().zip(self.beta_hat.iter()).map(|(a, b)| a * b).sum())
    }

    fn sigma_hat(&self) -> Result<f64> {
        self.sigma2_hat
            .map(f64::sqrt)
            .ok_or(StatError::InsufficientData { needed: self.ncols() + 1, got: self.n })
    }

    pub fn summary(&self) -> LinearFitSummary {
        LinearFitSummary {
            names: self.design.names().to_vec(),
            beta_hat: self.beta_hat.iter().copied().collect(),
            std_errors: self.cov_beta.as_ref().map(|c| c.diagonal().iter().map(|v| v.sqrt()).collect()),
            sigma2_hat: self.sigma2_hat,
            r2: self.r2,
            r2_adj: self.r2_adj,
            ss_res: self.ss_res,
            ss_reg: self.ss_reg,
            ss_total: self.ss_total,
            df_resid: self.df_resid,
            n: self.n,
        }
    }
}

pub fn ols_fit(x: &DesignMatrix, y: &[f64]) -> Result<LinearFit> {
    let n = x.nrows();
    if y.len() != n {
        return Err(StatError::LengthMismatch { expected: n, got: y.len() });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(StatError::Domain("response contains non-finite values".into()));
    }
    x.check_rank()?;
    let cols = x.ncols();
    let yv = DVector::from_column_slice(y);
    let qr = x.matrix().clone().qr();
    let q = qr.q();
    let r = qr.r();
    let qty = q.transpose() * &yv;
    let beta_hat = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| StatError::SingularDesign("triangular factor is singular".into()))?;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(cols, cols))
        .ok_or_else(|| StatError::SingularDesign("triangular factor is singular".into()))?;
    let gram_inverse = &r_inv * r_inv.transpose();
    let fitted = x.matrix() * &beta_hat;
    let residuals = &yv - &fitted;
    let hat_diagonal = DVector::from_iterator(n, q.row_iter().map(|row| row.norm_squared()));

    let ss_res = residuals.norm_squared();
    let (ss_total, ss_reg) = if x.has_intercept() {
        let ybar = mean(y);
        (yv.iter().map(|v| (v - ybar).powi(2)).sum(), fitted.iter().map(|v| (v - ybar).powi(2)).sum())
    } else {
        (yv.norm_squared(), fitted.norm_squared())
    };
    let df_resid = n - cols;
    let sigma2_hat = (df_resid >= 1).then(|| ss_res / df_resid as f64);
    let r2 = if ss_total > 0.0 { (1.0 - ss_res / ss_total).clamp(0.0, 1.0) } else { 1.0 };
    let r2_adj = (df_resid >= 1 && n > 1).then(|| {
        let dof_total = if x.has_intercept() { n - 1 } else { n };
        1.0 - (1.0 - r2) * dof_total as f64 / df_resid as f64
    });
    let cov_beta = sigma2_hat.map(|s2| &gram_inverse * s2);
    Ok(LinearFit {
        beta_hat,
        fitted,
        residuals,
        sigma2_hat,
        gram_inverse,
        cov_beta,
        r2,
        r2_adj,
        hat_diagonal,
        ss_res,
        ss_reg,
        ss_total,
        df_resid,
        n,
        design: x.clone(),
        q,
        y: yv,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandKind {
    MeanPointwise,
    MeanScheffe,
    Prediction,
}

pub fn response_band(fit: &LinearFit, x0: &[f64], kind: BandKind, delta: f64) -> Result<ConfidenceInterval> {
    check_delta(delta)?;
    let sigma = fit.sigma_hat()?;
    let q = fit.leverage(x0)?;
    let center = fit.predict(x0)?;
    let df = fit.df_resid;
    let (hw, ci_kind) = match kind {
        BandKind::MeanPointwise => (t_two_sided(df, delta)? * sigma * q.sqrt(), CiKind::MeanPointwise),
        BandKind::MeanScheffe => {
            let k = fit.ncols();
            let f = DistributionSpec::fisher_f(k as u32, df as u32)?.quantile(1.0 - delta)?;
            ((k as f64 * f).sqrt() * sigma * q.sqrt(), CiKind::MeanScheffe)
        }
        BandKind::Prediction => (t_two_sided(df, delta)? * sigma * (1.0 + q).sqrt(), CiKind::Prediction),
    };
    Ok(ConfidenceInterval::centered(center, hw, delta, ci_kind))
}

/// `beta_j -+ t sigma_hat sqrt(s_jj)`.
pub fn coef_interval(fit: &LinearFit, j: usize, delta: f64) -> Result<ConfidenceInterval> {
    check_delta(delta)?;
    if j >= fit.ncols() {
        return Err(StatError::Domain(format!("coefficient index {j} out of range")));
    }
    let hw = t_two_sided(fit.df_resid, delta)? * fit.sigma_hat()? * fit.gram_inverse[(j, j)].sqrt();
    Ok(ConfidenceInterval::centered(fit.beta_hat[j], hw, delta, CiKind::CoefT))
}

/// Known-`sigma` variant with the normal quantile.
pub fn coef_interval_known_sigma(fit: &LinearFit, j: usize, sigma: f64, delta: f64) -> Result<ConfidenceInterval> {
    check_delta(delta)?;
    if j >= fit.ncols() {
        return Err(StatError::Domain(format!("coefficient index {j} out of range")));
    }
    if !(sigma >= 0.0) {
        return Err(StatError::param("sigma", "must be nonnegative"));
    }
    let hw = z_two_sided(delta) * sigma * fit.gram_inverse[(j, j)].sqrt();
    Ok(ConfidenceInterval::centered(fit.beta_hat[j], hw, delta, CiKind::CoefZ))
}

/// F test of a sub-model whose columns lie in the full model's column space.
pub fn f_test_nested(full: &LinearFit, null: &LinearFit) -> Result<TestReport> {
    if full.y != null.y {
        return Err(StatError::NestingViolation("fits use different responses".into()));
    }
    let (p, q) = (full.ncols(), null.ncols());
    if q > p {
        return Err(StatError::NestingViolation(format!("null model has {q} columns, full model {p}")));
    }
    for (j, z) in null.design.matrix().column_iter().enumerate() {
        let proj = &full.q * (full.q.transpose() * z);
        if (z - proj).norm() > 1e-8 * z.norm().max(1.0) {
            return Err(StatError::NestingViolation(format!(
                "null column '{}' is not in the full column space",
                null.design.names()[j]
            )));
        }
    }
    let df = full.df_resid;
    if df == 0 {
        return Err(StatError::InsufficientData { needed: p + 1, got: full.n });
    }
    if p == q {
        return Ok(TestReport::new(0.0, DistributionSpec::fisher_f(1, df as u32)?, 1.0, "nested_f"));
    }
    let law = DistributionSpec::fisher_f((p - q) as u32, df as u32)?;
    let num = (null.ss_res - full.ss_res).max(0.0) / (p - q) as f64;
    let den = full.ss_res / df as f64;
    let w = if den > 0.0 {
        num / den
    } else if num > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    Ok(TestReport::upper_tail(w, law, "nested_f"))
}

// ---------------------------------------------------------------------------
// Ridge

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeFit {
    pub lambda: f64,
    pub beta: Vec<f64>,
    pub fitted: Vec<f64>,
    pub residuals: Vec<f64>,
    /// `tr X (X'X + 2 lambda I)^{-1} X'`
    pub effective_df: f64,
}

/// Minimizer of `1/2 |y - Xb|^2 + lambda |b|^2`, i.e. `(X'X + 2 lambda I)^{-1} X'y`.
/// Every column, the intercept included, is penalized.
pub fn ridge_fit(x: &DesignMatrix, y: &[f64], lambda: f64) -> Result<RidgeFit> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(StatError::param("lambda", "must be a nonnegative real"));
    }
    if lambda == 0.0 {
        let ols = ols_fit(x, y)?;
        return Ok(RidgeFit {
            lambda,
            beta: ols.beta_hat.iter().copied().collect(),
            fitted: ols.fitted.iter().copied().collect(),
            residuals: ols.residuals.iter().copied().collect(),
            effective_df: ols.hat_diagonal.sum(),
        });
    }
    if y.len() != x.nrows() {
        return Err(StatError::LengthMismatch { expected: x.nrows(), got: y.len() });
    }
    let xm = x.matrix();
    let p = x.ncols();
    let yv = DVector::from_column_slice(y);
    let a = xm.transpose() * xm + DMatrix::identity(p, p) * (2.0 * lambda);
    let chol = a
        .cholesky()
        .ok_or_else(|| StatError::SingularDesign("penalized Gram matrix not positive definite".into()))?;
    let beta = chol.solve(&(xm.transpose() * &yv));
    let fitted = xm * &beta;
    let residuals = &yv - &fitted;
    let effective_df = (xm * chol.solve(&xm.transpose())).trace();
    Ok(RidgeFit {
        lambda,
        beta: beta.iter().copied().collect(),
        fitted: fitted.iter().copied().collect(),
        residuals: residuals.iter().copied().collect(),
        effective_df,
    })
}

// ---------------------------------------------------------------------------
// LASSO

pub fn soft_threshold(z: f64, lambda: f64) -> f64 {
    if z > lambda {
        z - lambda
    } else if z < -lambda {
        z + lambda
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoOptions {
    pub max_sweeps: usize,
    pub tolerance: f64,
    /// Caller-declared bound `C` on `|x_j| / sqrt(n)`, checked when present.
    pub declared_c: Option<f64>,
}

impl Default for LassoOptions {
    fn default() -> Self {
        LassoOptions { max_sweeps: 100_000, tolerance: 1e-10, declared_c: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoFit {
    pub lambda: f64,
    /// Full coefficient vector, intercept first when present.
    pub beta: Vec<f64>,
    /// Nonzero penalized coefficients, as design column indices.
    pub active_set: Vec<usize>,
    pub iterations: usize,
    pub objective: f64,
    /// Objective after every sweep, starting from the zero vector.
    pub objective_trace: Vec<f64>,
    /// Largest subgradient optimality violation at the returned point.
    pub kkt_violation: f64,
}

/// Cyclic coordinate descent on `(1/2n)|y - Xb|^2 + lambda |b_pen|_1`.
/// The intercept, if any, is left unpenalized by centering.
pub fn lasso_fit(x: &DesignMatrix, y: &[f64], lambda: f64, opts: &LassoOptions) -> Result<LassoFit> {
    let n = x.nrows();
    if y.len() != n {
        return Err(StatError::LengthMismatch { expected: n, got: y.len() });
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(StatError::param("lambda", "must be a nonnegative real"));
    }
    if lambda == 0.0 {
        x.check_rank()?;
    }
    let nf = n as f64;
    let off = usize::from(x.has_intercept());
    let p = x.ncols() - off;
    let mut cols: Vec<Vec<f64>> = (off..x.ncols()).map(|j| x.matrix().column(j).iter().copied().collect()).collect();
    if let Some(c) = opts.declared_c {
        for (j, col) in cols.iter().enumerate() {
            let scale = (col.iter().map(|v| v * v).sum::<f64>() / nf).sqrt();
            if scale > c * (1.0 + 1e-12) {
                return Err(StatError::Domain(format!(
                    "column '{}' has |x_j|/sqrt(n) = {scale} above the declared C = {c}",
                    x.names()[j + off]
                )));
            }
        }
    }
    let mut yc = y.to_vec();
    let mut xbar = vec![0.0; p];
    let ybar = if off == 1 { mean(y) } else { 0.0 };
    if off == 1 {
        for (col, m) in cols.iter_mut().zip(xbar.iter_mut()) {
            *m = mean(col);
            col.iter_mut().for_each(|v| *v -= *m);
        }
        yc.iter_mut().for_each(|v| *v -= ybar);
    }
    let z: Vec<f64> = cols.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>() / nf).collect();

    let objective = |r: &[f64], b: &[f64]| {
        r.iter().map(|v| v * v).sum::<f64>() / (2.0 * nf) + lambda * b.iter().map(|v| v.abs()).sum::<f64>()
    };
    let mut beta = vec![0.0; p];
    let mut r = yc.clone();
    let mut trace = vec![objective(&r, &beta)];
    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < opts.max_sweeps {
        sweeps += 1;
        let mut max_change: f64 = 0.0;
        for j in 0..p {
            if z[j] == 0.0 {
                continue;
            }
            let col = &cols[j];
            let rho = col.iter().zip(&r).map(|(a, b)| a * b).sum::<f64>() / nf + z[j] * beta[j];
            let new = soft_threshold(rho, lambda) / z[j];
            let d = new - beta[j];
            if d != 0.0 {
                r.iter_mut().zip(col).for_each(|(ri, xi)| *ri -= d * xi);
                beta[j] = new;
                max_change = max_change.max(d.abs());
            }
        }
        trace.push(objective(&r, &beta));
        let scale = beta.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if max_change <= opts.tolerance * (1.0 + scale) {
            converged = true;
            break;
        }
    }
    let full_beta = |b: &[f64]| {
        if off == 1 {
            let icpt = ybar - xbar.iter().zip(b).map(|(m, v)| m * v).sum::<f64>();
            std::iter::once(icpt).chain(b.iter().copied()).collect::<Vec<f64>>()
        } else {
            b.to_vec()
        }
    };
    if !converged {
        return Err(StatError::NotConverged { iterations: sweeps, last: full_beta(&beta) });
    }
    let kkt_violation = (0..p)
        .map(|j| {
            let g = cols[j].iter().zip(&r).map(|(a, b)| a * b).sum::<f64>() / nf;
            if beta[j] != 0.0 {
                (g - lambda * beta[j].signum()).abs()
            } else {
                (g.abs() - lambda).max(0.0)
            }
        })
        .fold(0.0, f64::max);
    let active_set = (0..p).filter(|&j| beta[j] != 0.0).map(|j| j + off).collect();
    Ok(LassoFit {
        lambda,
        beta: full_beta(&beta),
        active_set,
        iterations: sweeps,
        objective: *trace.last().unwrap(),
        objective_trace: trace,
        kkt_violation,
    })
}

/// Penalty level `sqrt(8 C^2 sigma^2 (ln p / n + t^2 / 2n))`.
pub fn lasso_lambda(c: f64, sigma: f64, p: usize, n: usize, t: f64) -> f64 {
    let (pf, nf) = (p as f64, n as f64);
    (8.0 * c * c * sigma * sigma * (pf.ln() / nf + t * t / (2.0 * nf))).sqrt()
}

/// `72 C^2 sigma^2 s (ln p + t^2/2) / (kappa n)`, holding with probability at least `1 - 2 exp(-t^2/2)`.
pub fn lasso_prediction_bound(c: f64, sigma: f64, s: usize, p: usize, n: usize, t: f64, kappa: f64) -> f64 {
    72.0 * c * c * sigma * sigma * s as f64 * ((p as f64).ln() + 0.5 * t * t) / (kappa * n as f64)
}

/// Randomized search for `min |Xv|^2 / (n |v|^2)` over the cone
/// `|v_{S^c}|_1 <= 3 |v_S|_1`. Being a minimum over samples, it overestimates the true constant.
pub fn restricted_eigenvalue_estimate(
    x: &DMatrix<f64>,
    support: &[usize],
    trials: usize,
    stream: &RandomStream,
) -> Result<f64> {
    let (n, p) = (x.nrows(), x.ncols());
    if support.is_empty() || support.iter().any(|&j| j >= p) {
        return Err(StatError::Domain("support must be a nonempty set of column indices".into()));
    }
    let off: Vec<usize> = (0..p).filter(|j| !support.contains(j)).collect();
    let vals = exec::replicate(stream, trials, |i, s| {
        let mut v = DVector::zeros(p);
        for &j in support {
            v[j] = s.normal();
        }
        let l1_s: f64 = support.iter().map(|&j| v[j].abs()).sum();
        if !off.is_empty() {
            // sparse and dense off-support directions, a quarter of them on the cone boundary
            let k = 1 + s.below(off.len() as u64) as usize;
            let mut chosen = off.clone();
            for a in 0..k {
                let b = a + s.below((chosen.len() - a) as u64) as usize;
                chosen.swap(a, b);
            }
            let mut l1 = 0.0;
            for &j in &chosen[..k] {
                v[j] = s.normal();
                l1 += v[j].abs();
            }
            let frac = if i % 4 == 0 { 1.0 } else { s.uniform() };
            let scale = frac * 3.0 * l1_s / l1;
            for &j in &chosen[..k] {
                v[j] *= scale;
            }
        }
        (x * &v).norm_squared() / (n as f64 * v.norm_squared())
    });
    Ok(vals.into_iter().fold(f64::INFINITY, f64::min))
}

// ---------------------------------------------------------------------------
// Experiments

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Noise {
    Normal { sigma: f64 },
    /// Any zero-mean law with finite variance.
    Distribution { spec: DistributionSpec },
}

impl Noise {
    fn sigma(&self) -> Result<f64> {
        match self {
            Noise::Normal { sigma } if *sigma >= 0.0 => Ok(*sigma),
            Noise::Normal { .. } => Err(StatError::param("sigma", "must be nonnegative")),
            Noise::Distribution { spec } => {
                let m = spec.moments()?;
                if m.mean.abs() > 1e-12 {
                    return Err(StatError::Domain(format!("noise law {spec} is not centered")));
                }
                Ok(m.variance.sqrt())
            }
        }
    }

    fn draw(&self, s: &mut RandomStream) -> f64 {
        match self {
            Noise::Normal { sigma } => sigma * s.normal(),
            Noise::Distribution { spec } => spec.draw(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PredictionEstimator {
    /// Bound `sigma^2 cols / (n delta)`, from the exact mean and Markov.
    Ols { delta: f64 },
    /// Penalty from the `t` rule unless `lambda` is given; `kappa` estimated on the true support.
    Lasso { t: f64, c: f64, lambda: Option<f64>, kappa_trials: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionErrorReport {
    pub replicates: usize,
    pub mean_error: f64,
    pub mean_error_se: f64,
    /// Exact expectation where known (OLS).
    pub expected_error: Option<f64>,
    pub bound_value: f64,
    /// Probability with which the bound is claimed to fail at most.
    pub nominal_violation: f64,
    pub violation_rate: f64,
    pub violation_se: f64,
    pub lambda: Option<f64>,
    pub kappa: Option<f64>,
}

/// Replicated `|X b_hat - X b|^2 / n` on a fixed design.
pub fn prediction_error_experiment(
    true_beta: &[f64],
    design: &DesignMatrix,
    noise: &Noise,
    estimator: &PredictionEstimator,
    replicates: usize,
    stream: &RandomStream,
) -> Result<PredictionErrorReport> {
    let (n, cols) = (design.nrows(), design.ncols());
    if true_beta.len() != cols {
        return Err(StatError::LengthMismatch { expected: cols, got: true_beta.len() });
    }
    if replicates == 0 {
        return Err(StatError::InsufficientData { needed: 1, got: 0 });
    }
    let sigma = noise.sigma()?;
    let mean_y = design.matrix() * DVector::from_column_slice(true_beta);
    let nf = n as f64;
    let (bound, nominal, expected, lambda, kappa) = match estimator {
        PredictionEstimator::Ols { delta } => {
            check_delta(*delta)?;
            design.check_rank()?;
            let e = sigma * sigma * cols as f64 / nf;
            (e / delta, *delta, Some(e), None, None)
        }
        PredictionEstimator::Lasso { t, c, lambda, kappa_trials } => {
            let off = usize::from(design.has_intercept());
            let support: Vec<usize> = (off..cols).filter(|&j| true_beta[j] != 0.0).map(|j| j - off).collect();
            let p = cols - off;
            let pen = design.matrix().columns(off, p).into_owned();
            let kappa = restricted_eigenvalue_estimate(&pen, &support, *kappa_trials, &stream.split(u64::MAX))?;
            let lam = lambda.unwrap_or_else(|| lasso_lambda(*c, sigma, p, n, *t));
            let b = lasso_prediction_bound(*c, sigma, support.len(), p, n, *t, kappa);
            (b, 2.0 * (-0.5 * t * t).exp(), None, Some(lam), Some(kappa))
        }
    };
    let errors = exec::replicate(stream, replicates, |_, s| {
        let y: Vec<f64> = mean_y.iter().map(|m| m + noise.draw(s)).collect();
        let fitted: DVector<f64> = match estimator {
            PredictionEstimator::Ols { .. } => ols_fit(design, &y)?.fitted,
            PredictionEstimator::Lasso { c, .. } => {
                let opts = LassoOptions { declared_c: Some(*c), ..LassoOptions::default() };
                let fit = lasso_fit(design, &y, lambda.unwrap(), &opts)?;
                design.matrix() * DVector::from_vec(fit.beta)
            }
        };
        Ok::<_, StatError>((fitted - &mean_y).norm_squared() / nf)
    });
    let errors: Vec<f64> = errors.into_iter().collect::<Result<_>>()?;
    let slack = 1e-12 * (mean_y.norm_squared() / nf + sigma * sigma);
    let violation_rate = stats::frequency(&errors, |&e| e > bound + slack);
    Ok(PredictionErrorReport {
        replicates,
        mean_error: mean(&errors),
        mean_error_se: if replicates > 1 { stats::std_error(&errors) } else { 0.0 },
        expected_error: expected,
        bound_value: bound,
        nominal_violation: nominal,
        violation_rate,
        violation_se: stats::binomial_se(violation_rate.max(1.0 / replicates as f64), replicates),
        lambda,
        kappa,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsStudy {
    pub replicates: usize,
    pub mean_beta: Vec<f64>,
    pub beta_se: Vec<f64>,
    pub mean_sigma2: f64,
    pub sigma2_se: f64,
    /// KS distance of `df sigma2_hat / sigma^2` to chi-squared on `df`.
    pub sigma2_ks: f64,
    /// Per-coefficient interval coverage.
    pub coverage: Vec<f64>,
    pub coverage_se: Vec<f64>,
    pub f_rejection_rate: f64,
    pub f_rejection_se: f64,
}

/// Normal-noise replicates on a fixed design: unbiasedness, the residual
/// variance law, coefficient coverage and the size of a nested F test
/// dropping `dropped` (whose true coefficients should be zero).
pub fn ols_study(
    design: &DesignMatrix,
    true_beta: &[f64],
    sigma: f64,
    dropped: &[usize],
    delta: f64,
    alpha: f64,
    replicates: usize,
    stream: &RandomStream,
) -> Result<OlsStudy> {
    let cols = design.ncols();
    if true_beta.len() != cols {
        return Err(StatError::LengthMismatch { expected: cols, got: true_beta.len() });
    }
    design.check_rank()?;
    let kept: Vec<usize> = (0..cols).filter(|j| !dropped.contains(j)).collect();
    let null_design = design.select_columns(&kept)?;
    let mean_y = design.matrix() * DVector::from_column_slice(true_beta);
    let df = design.nrows() - cols;
    let rows = exec::replicate(stream, replicates, |_, s| {
        let y: Vec<f64> = mean_y.iter().map(|m| m + sigma * s.normal()).collect();
        let full = ols_fit(design, &y)?;
        let null = ols_fit(&null_design, &y)?;
        let covered: Vec<bool> = (0..cols)
            .map(|j| coef_interval(&full, j, delta).map(|ci| ci.contains(true_beta[j])))
            .collect::<Result<_>>()?;
        let reject = f_test_nested(&full, &null)?.reject(alpha);
        Ok::<_, StatError>((full.beta_hat.iter().copied().collect::<Vec<f64>>(), full.sigma2_hat.unwrap(), covered, reject))
    });
    let rows: Vec<_> = rows.into_iter().collect::<Result<_>>()?;
    let col = |j: usize| rows.iter().map(|r| r.0[j]).collect::<Vec<f64>>();
    let s2: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let scaled: Vec<f64> = s2.iter().map(|v| df as f64 * v / (sigma * sigma)).collect();
    let chi = DistributionSpec::chi_squared(df as u32)?;
    let coverage: Vec<f64> = (0..cols).map(|j| stats::frequency(&rows, |r| r.2[j])).collect();
    let f_rate = stats::frequency(&rows, |r| r.3);
    Ok(OlsStudy {
        replicates,
        mean_beta: (0..cols).map(|j| mean(&col(j))).collect(),
        beta_se: (0..cols).map(|j| stats::std_error(&col(j))).collect(),
        mean_sigma2: mean(&s2),
        sigma2_se: stats::std_error(&s2),
        sigma2_ks: ks_distance(&scaled, |v| chi.cdf(v)),
        coverage_se: coverage.iter().map(|&c| stats::binomial_se(c, replicates)).collect(),
        coverage,
        f_rejection_rate: f_rate,
        f_rejection_se: stats::binomial_se(f_rate, replicates),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simple() -> (DesignMatrix, Vec<f64>, Vec<f64>) {
        let xs = vec![1.0, 2.0, 4.0, 5.0, 7.0, 8.0];
        let ys = vec![2.1, 3.9, 8.2, 9.8, 14.1, 16.3];
        let d = DesignMatrix::from_rows(&xs.iter().map(|&v| vec![v]).collect::<Vec<_>>(), true).unwrap();
        (d, xs, ys)
    }

    #[test]
    fn intercept_only_is_mean() {
        let y = [1.0, 4.0, 2.5, 8.0];
        let d = DesignMatrix::new(DMatrix::from_element(4, 1, 1.0), true).unwrap();
        let fit = ols_fit(&d, &y).unwrap();
        assert!((fit.beta_hat[0] - 3.875).abs() < 1e-14);
    }

    #[test]
    fn simple_regression_closed_form() {
        let (d, xs, ys) = simple();
        let fit = ols_fit(&d, &ys).unwrap();
        let slope = stats::covariance(&xs, &ys) / stats::variance(&xs);
        let icpt = mean(&ys) - slope * mean(&xs);
        assert!((fit.beta_hat[1] - slope).abs() < 1e-12);
        assert!((fit.beta_hat[0] - icpt).abs() < 1e-12);
        assert!((fit.ss_total - fit.ss_reg - fit.ss_res).abs() < 1e-10 * fit.ss_total);
    }

    #[test]
    fn exact_line() {
        let xs: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..5).map(|i| 2.0 + 3.0 * i as f64).collect();
        let fit = ols_fit(&DesignMatrix::from_rows(&xs, true).unwrap(), &y).unwrap();
        assert!(fit.residuals.amax() < 1e-12);
        assert!((fit.r2 - 1.0).abs() < 1e-15);
        let ci = coef_interval(&fit, 1, 0.05).unwrap();
        assert!(ci.width() < 1e-10);
    }

    #[test]
    fn collinear_design_names_columns() {
        let rows: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, (i * i) as f64, 2.0 * i as f64 + 1.0]).collect();
        let d = DesignMatrix::from_rows(&rows, true).unwrap();
        let err = ols_fit(&d, &[1.0; 6]).unwrap_err();
        match err {
            StatError::SingularDesign(msg) => {
                assert!(msg.contains("'x3'"), "{msg}");
                assert!(msg.contains("'intercept'") && msg.contains("'x1'"), "{msg}");
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn residual_orthogonality() {
        let (d, _, ys) = simple();
        let fit = ols_fit(&d, &ys).unwrap();
        let tol = 1e-8 * DVector::from_column_slice(&ys).norm();
        assert!((d.matrix().transpose() * &fit.residuals).amax() < tol);
        assert!(fit.fitted.dot(&fit.residuals).abs() < tol);
        assert!((fit.hat_diagonal.sum() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn bands() {
        let (d, xs, ys) = simple();
        let fit = ols_fit(&d, &ys).unwrap();
        let delta = 0.05;
        let ratio = (2.0 * DistributionSpec::fisher_f(2, 4).unwrap().quantile(0.95).unwrap()).sqrt()
            / t_two_sided(4, delta).unwrap();
        for x0 in [-3.0, 0.0, 4.5, 12.0] {
            let v = [1.0, x0];
            let pw = response_band(&fit, &v, BandKind::MeanPointwise, delta).unwrap();
            let sc = response_band(&fit, &v, BandKind::MeanScheffe, delta).unwrap();
            let pr = response_band(&fit, &v, BandKind::Prediction, delta).unwrap();
            assert!(pr.half_width() > pw.half_width());
            assert!((sc.half_width() / pw.half_width() - ratio).abs() < 1e-10);
        }
        // leverage is smallest at the mean predictor
        let xbar = mean(&xs);
        let grid: Vec<f64> = (0..=400).map(|i| i as f64 * 0.025).collect();
        let best = grid
            .iter()
            .copied()
            .min_by(|a, b| fit.leverage(&[1.0, *a]).unwrap().total_cmp(&fit.leverage(&[1.0, *b]).unwrap()))
            .unwrap();
        assert!((best - xbar).abs() <= 0.0125 + 1e-12);
    }

    #[test]
    fn inference_needs_residual_df() {
        let rows = vec![vec![0.0], vec![1.0]];
        let fit = ols_fit(&DesignMatrix::from_rows(&rows, true).unwrap(), &[1.0, 2.0]).unwrap();
        assert!(fit.sigma2_hat.is_none());
        assert!(coef_interval(&fit, 0, 0.05).is_err());
        assert!(response_band(&fit, &[1.0, 0.5], BandKind::Prediction, 0.05).is_err());
    }

    #[test]
    fn f_test_identities() {
        let (d, _, ys) = simple();
        let full = ols_fit(&d, &ys).unwrap();
        let same = f_test_nested(&full, &full).unwrap();
        assert_eq!(same.statistic, 0.0);
        assert_eq!(same.p_value, 1.0);
        let null = ols_fit(&d.select_columns(&[0]).unwrap(), &ys).unwrap();
        let rep = f_test_nested(&full, &null).unwrap();
        let w = (full.df_resid as f64 / 1.0) * full.r2 / (1.0 - full.r2);
        assert!((rep.statistic / w - 1.0).abs() < 1e-10);
        let other = DesignMatrix::from_rows(&(0..6).map(|i| vec![(i * i) as f64]).collect::<Vec<_>>(), false).unwrap();
        let bad = ols_fit(&other, &ys).unwrap();
        assert!(matches!(f_test_nested(&full, &bad), Err(StatError::NestingViolation(_))));
    }

    #[test]
    fn ridge_limits() {
        let (d, _, ys) = simple();
        let ols = ols_fit(&d, &ys).unwrap();
        let r0 = ridge_fit(&d, &ys, 0.0).unwrap();
        assert_eq!(r0.beta, ols.beta_hat.iter().copied().collect::<Vec<_>>());
        let big = ridge_fit(&d, &ys, 1e6).unwrap();
        let nb: f64 = big.beta.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(nb <= 1e-4 * ols.beta_hat.norm());
        // orthonormal columns
        let q = DMatrix::from_row_slice(4, 2, &[0.5, 0.5, 0.5, -0.5, 0.5, 0.5, 0.5, -0.5]);
        let dq = DesignMatrix::new(q.clone(), false).unwrap();
        let y = [1.0, 2.0, -1.0, 3.0];
        let r = ridge_fit(&dq, &y, 0.75).unwrap();
        let xty = q.transpose() * DVector::from_column_slice(&y);
        for j in 0..2 {
            assert!((r.beta[j] - xty[j] / 2.5).abs() < 1e-14);
        }
    }

    #[test]
    fn lasso_oracles() {
        let (d, _, ys) = simple();
        let ols = ols_fit(&d, &ys).unwrap();
        let l0 = lasso_fit(&d, &ys, 0.0, &LassoOptions::default()).unwrap();
        for j in 0..2 {
            assert!((l0.beta[j] - ols.beta_hat[j]).abs() < 1e-8);
        }
        // X'X/n = I
        let q = DMatrix::from_row_slice(4, 2, &[1.0, 1.0, 1.0, -1.0, 1.0, 1.0, 1.0, -1.0]);
        let dq = DesignMatrix::new(q.clone(), false).unwrap();
        let y = [1.0, 2.0, -1.0, 3.0];
        let lam = 0.3;
        let fit = lasso_fit(&dq, &y, lam, &LassoOptions::default()).unwrap();
        for j in 0..2 {
            let z: f64 = q.column(j).iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() / 4.0;
            assert!((fit.beta[j] - soft_threshold(z, lam)).abs() < 1e-12);
        }
        let lmax = (q.transpose() * DVector::from_column_slice(&y)).amax() / 4.0;
        let zero = lasso_fit(&dq, &y, lmax, &LassoOptions::default()).unwrap();
        assert!(zero.beta.iter().all(|&b| b == 0.0));
        assert!(zero.active_set.is_empty());
    }

    #[test]
    fn lasso_declared_c_is_checked() {
        let q = DMatrix::from_row_slice(2, 1, &[2.0, 2.0]);
        let d = DesignMatrix::new(q, false).unwrap();
        let opts = LassoOptions { declared_c: Some(1.0), ..LassoOptions::default() };
        assert!(lasso_fit(&d, &[1.0, 1.0], 0.1, &opts).is_err());
    }

    #[test]
    fn noiseless_prediction_error_is_zero() {
        let (d, _, _) = simple();
        let rep = prediction_error_experiment(
            &[1.0, 2.0],
            &d,
            &Noise::Normal { sigma: 0.0 },
            &PredictionEstimator::Ols { delta: 0.05 },
            5,
            &RandomStream::new(3),
        )
        .unwrap();
        assert!(rep.mean_error < 1e-25);
        assert_eq!(rep.violation_rate, 0.0);
    }
}
