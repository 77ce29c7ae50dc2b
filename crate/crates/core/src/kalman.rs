//! Random-walk coefficient regressions: filter, likelihood fit and comparisons.

use std::collections::BTreeMap;

use log::warn;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::optim;
use crate::regression::{least_squares, OlsFit};

const LN_2PI: f64 = 1.837_877_066_409_345_5;
/// Log-variance floor; state variances below `e^-30` are treated as zero.
pub const LOG_VAR_FLOOR: f64 = -30.0;
pub const MIN_KALMAN_OBS: usize = 36;
pub const DEFAULT_BURN_IN: usize = 12;

/// Observation `y(t) = x(t)'b(t) + e(t)`, state `b(t) = b(t-1) + eta(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceConfig {
    obs_var: f64,
    state_var: DVector<f64>,
    beta0: DVector<f64>,
    p0: DMatrix<f64>,
}

impl StateSpaceConfig {
    pub fn new(obs_var: f64, state_var: DVector<f64>, beta0: DVector<f64>, p0: DMatrix<f64>) -> Result<Self> {
        let k = beta0.len();
        if state_var.len() != k || p0.nrows() != k || p0.ncols() != k {
            return Err(Error::Dimension(format!("state dimension {k} inconsistent")));
        }
        if !(obs_var > 0.0 && obs_var.is_finite()) {
            return Err(Error::Domain("observation variance must be positive".into()));
        }
        if state_var.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::Domain("state variances must be non-negative".into()));
        }
        if beta0.iter().chain(p0.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite initial state".into()));
        }
        let scale = p0.amax().max(1.0);
        if (&p0 - p0.transpose()).amax() > 1e-12 * scale {
            return Err(Error::Domain("P0 is not symmetric".into()));
        }
        if k > 0 && p0.clone().symmetric_eigenvalues().min() < -1e-12 * scale {
            return Err(Error::Domain("P0 is not positive semidefinite".into()));
        }
        Ok(Self {
            obs_var,
            state_var,
            beta0,
            p0,
        })
    }

    pub fn dim(&self) -> usize {
        self.beta0.len()
    }

    pub fn obs_var(&self) -> f64 {
        self.obs_var
    }

    pub fn state_var(&self) -> &DVector<f64> {
        &self.state_var
    }

    pub fn beta0(&self) -> &DVector<f64> {
        &self.beta0
    }

    pub fn p0(&self) -> &DMatrix<f64> {
        &self.p0
    }

    fn with_variances(&self, obs_var: f64, state_var: DVector<f64>) -> Self {
        Self {
            obs_var,
            state_var,
            beta0: self.beta0.clone(),
            p0: self.p0.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KalmanFit {
    pub filtered: Vec<DVector<f64>>,
    pub prior: Vec<DVector<f64>>,
    pub filtered_cov: Vec<DMatrix<f64>>,
    pub prior_cov: Vec<DMatrix<f64>>,
    pub innovations: Vec<f64>,
    pub innovation_var: Vec<f64>,
    pub log_likelihood: f64,
}

impl KalmanFit {
    pub fn len(&self) -> usize {
        self.innovations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.innovations.is_empty()
    }

    /// Filtered path of one state coordinate.
    pub fn filtered_path(&self, coord: usize) -> Vec<f64> {
        self.filtered.iter().map(|b| b[coord]).collect()
    }
}

fn check_inputs(y: &[f64], x: &DMatrix<f64>, k: usize) -> Result<()> {
    if x.nrows() != y.len() || x.ncols() != k {
        return Err(Error::Dimension(format!(
            "design is {}x{}, expected {}x{k}",
            x.nrows(),
            x.ncols(),
            y.len()
        )));
    }
    if y.iter().chain(x.iter()).any(|v| !v.is_finite()) {
        return Err(Error::DegenerateData("non-finite value in filter input".into()));
    }
    Ok(())
}

/// Forward pass; `x` holds one regressor row per date, intercept included.
pub fn kalman_filter(y: &[f64], x: &DMatrix<f64>, cfg: &StateSpaceConfig) -> Result<KalmanFit> {
    check_inputs(y, x, cfg.dim())?;
    let t_len = y.len();
    let mut fit = KalmanFit {
        filtered: Vec::with_capacity(t_len),
        prior: Vec::with_capacity(t_len),
        filtered_cov: Vec::with_capacity(t_len),
        prior_cov: Vec::with_capacity(t_len),
        innovations: Vec::with_capacity(t_len),
        innovation_var: Vec::with_capacity(t_len),
        log_likelihood: 0.0,
    };
    let q = DMatrix::from_diagonal(&cfg.state_var);
    let mut b = cfg.beta0.clone();
    let mut p = cfg.p0.clone();
    let mut sum = 0.0;
    for t in 0..t_len {
        let xt = x.row(t).transpose();
        let p_prior = &p + &q;
        let v = y[t] - xt.dot(&b);
        let px = &p_prior * &xt;
        let f = xt.dot(&px) + cfg.obs_var;
        assert!(f > 0.0, "innovation variance {f} at step {t}");
        let gain = &px / f;
        let b_post = &b + &gain * v;
        let mut p_post = &p_prior - &gain * px.transpose();
        p_post = (&p_post + p_post.transpose()) * 0.5;
        sum += f.ln() + v * v / f;
        fit.prior.push(b);
        fit.prior_cov.push(p_prior);
        fit.innovations.push(v);
        fit.innovation_var.push(f);
        fit.filtered.push(b_post.clone());
        fit.filtered_cov.push(p_post.clone());
        b = b_post;
        p = p_post;
    }
    fit.log_likelihood = -0.5 * t_len as f64 * LN_2PI - 0.5 * sum;
    Ok(fit)
}

/// Likelihood only, without storing the paths.
fn log_likelihood(y: &[f64], x: &DMatrix<f64>, cfg: &StateSpaceConfig) -> f64 {
    let q = DMatrix::from_diagonal(&cfg.state_var);
    let mut b = cfg.beta0.clone();
    let mut p = cfg.p0.clone();
    let mut sum = 0.0;
    for t in 0..y.len() {
        let xt = x.row(t).transpose();
        p += &q;
        let v = y[t] - xt.dot(&b);
        let px = &p * &xt;
        let f = xt.dot(&px) + cfg.obs_var;
        if !(f > 0.0) {
            return f64::NEG_INFINITY;
        }
        b += &px * (v / f);
        p -= &px * px.transpose() / f;
        sum += f.ln() + v * v / f;
    }
    -0.5 * y.len() as f64 * LN_2PI - 0.5 * sum
}

/// Estimated hyperparameters with asymptotic standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct MleFit {
    pub config: StateSpaceConfig,
    pub obs_var_se: f64,
    pub state_var_se: Vec<f64>,
    pub log_likelihood: f64,
    /// Likelihood at the regression-implied start (state variances at the floor).
    pub start_log_likelihood: f64,
    pub filter: KalmanFit,
    pub iterations: u64,
}

impl MleFit {
    pub fn obs_var_t(&self) -> f64 {
        self.config.obs_var / self.obs_var_se
    }

    pub fn state_var_t(&self, coord: usize) -> f64 {
        self.config.state_var[coord] / self.state_var_se[coord]
    }

    /// Two-sided 5% test on a state variance.
    pub fn state_var_significant(&self, coord: usize) -> bool {
        self.state_var_t(coord).abs() > 1.96
    }
}

fn to_variance(theta: f64) -> f64 {
    theta.max(LOG_VAR_FLOOR).exp()
}

/// Starting state from the full-sample regression: its coefficients, and
/// `s²(X'X)⁻¹`, or `10·I` when the design is rank deficient.
pub fn ols_initial_state(y: &[f64], x: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>, f64) {
    let k = x.ncols();
    let yv = DVector::from_column_slice(y);
    match least_squares(&yv, x) {
        Ok(ls) => {
            let s2 = ls.rss / (y.len() - k) as f64;
            let p0 = &ls.cov_unscaled * s2;
            (ls.coef, (&p0 + p0.transpose()) * 0.5, s2)
        }
        Err(_) => {
            let mean = yv.mean();
            let s2 = yv.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (y.len() - 1) as f64;
            (DVector::zeros(k), DMatrix::identity(k, k) * 10.0, s2)
        }
    }
}

/// Maximum likelihood over log-variances, started from the regression fit.
pub fn mle_fit(y: &[f64], x: &DMatrix<f64>) -> Result<MleFit> {
    let k = x.ncols();
    check_inputs(y, x, k)?;
    if y.len() < MIN_KALMAN_OBS.max(k + 2) {
        return Err(Error::InsufficientSample {
            found: y.len(),
            required: MIN_KALMAN_OBS.max(k + 2),
        });
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let spread = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
    let mean_sq = y.iter().map(|v| v * v).sum::<f64>();
    if spread <= 1e-14 * mean_sq || spread == 0.0 {
        return Err(Error::DegenerateData("constant observations".into()));
    }
    let (beta0, p0, s2) = ols_initial_state(y, x);
    let s2 = s2.max(1e-12 * spread / y.len() as f64);
    let base = StateSpaceConfig::new(s2, DVector::zeros(k), beta0, p0)?;

    let unpack = |theta: &[f64]| {
        base.with_variances(
            to_variance(theta[0]),
            DVector::from_iterator(k, theta[1..].iter().map(|t| to_variance(*t))),
        )
    };
    let nll = |theta: &[f64]| -log_likelihood(y, x, &unpack(theta));

    // scale-aware starting candidates for the state variances
    let col_var: Vec<f64> = (0..k)
        .map(|j| {
            let c = x.column(j);
            let m = c.mean();
            let v = c.iter().map(|v| (v - m).powi(2)).sum::<f64>() / c.len() as f64;
            if v > 0.0 { v } else { 1.0 }
        })
        .collect();
    let mut start: Vec<f64> = std::iter::once(s2.ln()).chain(std::iter::repeat_n(LOG_VAR_FLOOR, k)).collect();
    let start_nll = nll(&start);
    let mut best_nll = start_nll;
    for frac in [1e-4, 1e-3, 1e-2, 1e-1] {
        let cand: Vec<f64> = std::iter::once(s2.ln())
            .chain(col_var.iter().map(|cv| (frac * s2 / cv).ln()))
            .collect();
        let v = nll(&cand);
        if v < best_nll {
            best_nll = v;
            start = cand;
        }
    }

    let m = optim::minimize(nll, &start, 1.0, 20_000)?;
    let (theta, value) = if m.value < best_nll { (m.x, m.value) } else { (start, best_nll) };
    let theta: Vec<f64> = theta.iter().map(|t| t.max(LOG_VAR_FLOOR)).collect();

    let cov_theta = inverse_hessian(&nll, &theta);
    let config = unpack(&theta);
    let se = |i: usize| to_variance(theta[i]) * cov_theta[(i, i)].max(0.0).sqrt();
    let filter = kalman_filter(y, x, &config)?;
    Ok(MleFit {
        obs_var_se: se(0),
        state_var_se: (1..=k).map(se).collect(),
        log_likelihood: -value,
        start_log_likelihood: -start_nll,
        config,
        filter,
        iterations: m.iterations,
    })
}

/// Inverse of a central-difference Hessian. Flat or concave directions get
/// their curvature clamped, which turns into very large standard errors.
fn inverse_hessian<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64]) -> DMatrix<f64> {
    let n = x.len();
    let h = 1e-3;
    let f0 = f(x);
    let eval = |di: usize, si: f64, dj: usize, sj: f64| {
        let mut p = x.to_vec();
        p[di] += si * h;
        p[dj] += sj * h;
        f(&p)
    };
    let mut hess = DMatrix::zeros(n, n);
    for i in 0..n {
        hess[(i, i)] = (eval(i, 1.0, i, 0.0) - 2.0 * f0 + eval(i, -1.0, i, 0.0)) / (h * h);
        for j in (i + 1)..n {
            let v = (eval(i, 1.0, j, 1.0) - eval(i, 1.0, j, -1.0) - eval(i, -1.0, j, 1.0) + eval(i, -1.0, j, -1.0))
                / (4.0 * h * h);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    let eig = hess.symmetric_eigen();
    let floor = 1e-10 * eig.eigenvalues.amax().max(1.0);
    let inv = eig.eigenvalues.map(|l| 1.0 / if l.is_finite() && l > floor { l } else { floor });
    &eig.eigenvectors * DMatrix::from_diagonal(&inv) * eig.eigenvectors.transpose()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForecastErrors {
    pub mae_ols: f64,
    pub rmse_ols: f64,
    pub mae_ssm: f64,
    pub rmse_ssm: f64,
}

/// In-sample regression residuals against one-step-ahead filter errors,
/// both measured after the first `burn_in` dates.
pub fn forecast_error_compare(ols: &OlsFit, ssm: &KalmanFit, burn_in: usize) -> Result<ForecastErrors> {
    if ols.residuals.len() != ssm.len() {
        return Err(Error::Alignment(format!(
            "regression has {} dates, filter {}",
            ols.residuals.len(),
            ssm.len()
        )));
    }
    if burn_in >= ssm.len() {
        return Err(Error::InsufficientSample {
            found: ssm.len(),
            required: burn_in + 1,
        });
    }
    let stats = |e: &[f64]| {
        let n = e.len() as f64;
        (
            e.iter().map(|v| v.abs()).sum::<f64>() / n,
            (e.iter().map(|v| v * v).sum::<f64>() / n).sqrt(),
        )
    };
    let (mae_ols, rmse_ols) = stats(&ols.residuals[burn_in..]);
    let (mae_ssm, rmse_ssm) = stats(&ssm.innovations[burn_in..]);
    Ok(ForecastErrors {
        mae_ols,
        rmse_ols,
        mae_ssm,
        rmse_ssm,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aggregation {
    Mean,
    MeanAbsolute,
    Median,
}

impl std::str::FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Self::Mean),
            "mean-abs" | "mean-absolute" => Ok(Self::MeanAbsolute),
            "median" => Ok(Self::Median),
            _ => Err(Error::Domain(format!("unknown aggregation {s}"))),
        }
    }
}

fn aggregate(values: &mut [f64], mode: Aggregation) -> f64 {
    let n = values.len() as f64;
    match mode {
        Aggregation::Mean => values.iter().sum::<f64>() / n,
        Aggregation::MeanAbsolute => values.iter().map(|v| v.abs()).sum::<f64>() / n,
        Aggregation::Median => {
            values.sort_by(f64::total_cmp);
            let m = values.len() / 2;
            if values.len().is_multiple_of(2) {
                0.5 * (values[m - 1] + values[m])
            } else {
                values[m]
            }
        }
    }
}

/// Per-date aggregate of one state coordinate by group label. Assets with no
/// label are left out; the result is keyed by label.
pub fn aggregate_betas(
    paths: &[Vec<f64>],
    groups: &[Option<String>],
    mode: Aggregation,
) -> Result<BTreeMap<String, Vec<f64>>> {
    if paths.len() != groups.len() {
        return Err(Error::Dimension("one group label per path required".into()));
    }
    let mut members: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, g) in groups.iter().enumerate() {
        match g {
            Some(g) => members.entry(g.as_str()).or_default().push(i),
            None => warn!("path {i} has no group"),
        }
    }
    let mut out = BTreeMap::new();
    for (g, idx) in members {
        let len = paths[idx[0]].len();
        if idx.iter().any(|&i| paths[i].len() != len) {
            return Err(Error::Alignment(format!("group {g} has paths of different length")));
        }
        let series = (0..len)
            .map(|t| {
                let mut v: Vec<f64> = idx.iter().map(|&i| paths[i][t]).collect();
                aggregate(&mut v, mode)
            })
            .collect();
        out.insert(g.to_string(), series);
    }
    Ok(out)
}
