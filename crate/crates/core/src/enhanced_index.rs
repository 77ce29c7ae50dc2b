//! Benchmark-relative optimization with carbon constraints.
//!
//! All problems minimize `½ (x − b)ᵀ Σ (x − b)` over long-only, fully
//! invested portfolios. The stationarity condition then reads
//! `Σ(x − b) = λ₀1 + λ − λ_bmg γ`, so `λ_bmg` is the shadow price of the
//! carbon constraint.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::FactorCovarianceModel;
use crate::minvar::{waci, CarbonIntensity, SUPPORT_TOL};
use crate::qp::{solve_qp, QpProblem, QpSolution, QpStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchmarkKind {
    EqualWeight,
    CapWeight,
    Custom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Benchmark {
    weights: DVector<f64>,
    kind: BenchmarkKind,
}

impl Benchmark {
    pub fn new(weights: DVector<f64>, kind: BenchmarkKind) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::EmptyUniverse("benchmark has no assets".into()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Domain("benchmark weights must be nonnegative".into()));
        }
        let total = weights.sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!("benchmark weights sum to {total}, not 1")));
        }
        Ok(Self { weights, kind })
    }

    pub fn equal_weight(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyUniverse("benchmark has no assets".into()));
        }
        Self::new(DVector::from_element(n, 1.0 / n as f64), BenchmarkKind::EqualWeight)
    }

    /// Capitalization-weighted benchmark from market caps.
    pub fn cap_weight(caps: &[f64]) -> Result<Self> {
        if caps.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(Error::Domain("market caps must be nonnegative".into()));
        }
        let total: f64 = caps.iter().sum();
        if total <= 0.0 {
            return Err(Error::DegenerateData("total market cap is zero".into()));
        }
        let mut w = DVector::from_iterator(caps.len(), caps.iter().map(|c| c / total));
        // renormalize once more so the sum is 1 to the last ulp
        let s = w.sum();
        w /= s;
        Self::new(w, BenchmarkKind::CapWeight)
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    pub fn kind(&self) -> BenchmarkKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IndexConstraint {
    None,
    /// `γᵀx ≤ β⁺`.
    RelativeCap(f64),
    /// `|γᵀx| ≤ cap`.
    AbsoluteCap(f64),
    /// Hold none of the `m` assets with the largest carbon beta.
    ExcludeTop(usize),
    /// Hold none of the `m` assets with the largest `b_i γ_i`.
    ExcludeWeightedTop(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexDiagnostics {
    pub tracking_error: f64,
    pub active_share: f64,
    /// Benchmark constituents left out of the portfolio.
    pub excluded_count: usize,
    /// `γᵀb − γᵀx`.
    pub delta_bmg: f64,
    pub waci: Option<f64>,
    pub lambda_bmg: f64,
    pub scaled_betas: DVector<f64>,
}

#[derive(Debug, Clone)]
pub struct IndexSolution {
    pub weights: DVector<f64>,
    pub diagnostics: IndexDiagnostics,
    /// Assets forced out by an order-statistic constraint.
    pub excluded: Vec<usize>,
    pub qp: QpSolution,
}

/// `Σ⁻¹ v` through the factored inverse.
pub fn scaled_betas(model: &FactorCovarianceModel, v: &DVector<f64>) -> Result<DVector<f64>> {
    if v.len() != model.n() {
        return Err(Error::Dimension(format!("{} assets but vector of {}", model.n(), v.len())));
    }
    Ok(model.inverse()?.apply(v))
}

pub fn active_share(x: &DVector<f64>, b: &DVector<f64>) -> Result<f64> {
    if x.len() != b.len() {
        return Err(Error::Dimension(format!("{} vs {} weights", x.len(), b.len())));
    }
    Ok(0.5 * x.iter().zip(b.iter()).map(|(a, c)| (a - c).abs()).sum::<f64>())
}

pub fn tracking_error(model: &FactorCovarianceModel, x: &DVector<f64>, b: &DVector<f64>) -> f64 {
    model.portfolio_variance(&(x - b)).max(0.0).sqrt()
}

/// Indices of the `m` largest scores, ties to the lower index.
fn top_m(scores: &DVector<f64>, m: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut out = order[..m].to_vec();
    out.sort_unstable();
    out
}

pub fn te_optimize(
    model: &FactorCovarianceModel,
    benchmark: &Benchmark,
    constraint: IndexConstraint,
    intensities: Option<&CarbonIntensity>,
) -> Result<IndexSolution> {
    let n = model.n();
    let b = benchmark.weights();
    if b.len() != n {
        return Err(Error::Dimension(format!("{n} assets but benchmark of {}", b.len())));
    }
    let cov = model.covariance();
    let g = &model.beta_bmg;
    let grow = || DMatrix::from_row_slice(1, n, g.as_slice());

    let mut a_eq = DMatrix::from_element(1, n, 1.0);
    let mut b_eq = DVector::from_element(1, 1.0);
    let mut problem = QpProblem::new(cov.clone(), -(&cov * b)).with_lower_bounds(DVector::zeros(n));
    let mut excluded = Vec::new();

    match constraint {
        IndexConstraint::None => {}
        IndexConstraint::RelativeCap(cap) => {
            if cap.is_nan() {
                return Err(Error::Domain("relative cap is NaN".into()));
            }
            problem = problem.with_inequalities(grow(), DVector::from_element(1, cap));
        }
        IndexConstraint::AbsoluteCap(cap) => {
            if !(cap >= 0.0) {
                return Err(Error::Domain(format!("absolute cap must be >= 0, got {cap}")));
            }
            if cap == 0.0 {
                a_eq = a_eq.insert_row(1, 0.0);
                a_eq.row_mut(1).copy_from(&grow().row(0));
                b_eq = DVector::from_vec(vec![1.0, 0.0]);
            } else {
                let mut h = DMatrix::zeros(2, n);
                h.row_mut(0).copy_from(&grow().row(0));
                h.row_mut(1).copy_from(&(-grow()).row(0));
                problem = problem.with_inequalities(h, DVector::from_element(2, cap));
            }
        }
        IndexConstraint::ExcludeTop(m) | IndexConstraint::ExcludeWeightedTop(m) => {
            if m >= n {
                return Err(Error::EmptyUniverse(format!("excluding {m} of {n} assets")));
            }
            let scores = match constraint {
                IndexConstraint::ExcludeTop(_) => g.clone(),
                _ => b.component_mul(g),
            };
            excluded = top_m(&scores, m);
            let mut upper = DVector::from_element(n, f64::INFINITY);
            for &i in &excluded {
                upper[i] = 0.0;
            }
            problem = problem.with_upper_bounds(upper);
        }
    }
    problem = problem.with_equalities(a_eq, b_eq);

    let qp = solve_qp(&problem)?;
    match qp.status {
        QpStatus::Optimal => {}
        QpStatus::Infeasible => {
            return Err(Error::Infeasible(format!("carbon constraint {constraint:?} cannot be met")))
        }
        QpStatus::MaxIter => return Err(Error::NotConverged("tracking-error QP hit the iteration cap".into())),
    }

    let mut weights = qp.x.clone();
    weights.iter_mut().for_each(|w| {
        if w.abs() < 1e-14 {
            *w = 0.0
        }
    });
    let lambda_bmg = match constraint {
        IndexConstraint::RelativeCap(_) => qp.ineq_multipliers[0],
        IndexConstraint::AbsoluteCap(0.0) => -qp.eq_multipliers[1],
        IndexConstraint::AbsoluteCap(_) => qp.ineq_multipliers[0] - qp.ineq_multipliers[1],
        _ => 0.0,
    };
    let diagnostics = IndexDiagnostics {
        tracking_error: tracking_error(model, &weights, b),
        active_share: active_share(&weights, b)?,
        excluded_count: (0..n).filter(|&i| weights[i] < SUPPORT_TOL && b[i] > 0.0).count(),
        delta_bmg: g.dot(b) - g.dot(&weights),
        waci: intensities.map(|ci| waci(&weights, ci)).transpose()?,
        lambda_bmg,
        scaled_betas: scaled_betas(model, g)?,
    };
    Ok(IndexSolution {
        weights,
        diagnostics,
        excluded,
        qp,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearityRow {
    pub delta_target: f64,
    pub feasible: bool,
    pub delta_bmg: f64,
    pub tracking_error: f64,
    pub lambda_bmg: f64,
    pub active_share: f64,
    pub excluded_count: usize,
    pub waci: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearityReport {
    /// One row per target, in increasing target order.
    pub rows: Vec<LinearityRow>,
    /// Least-squares fit `σ ≈ intercept + slope·Δ` over feasible rows.
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

impl LinearityReport {
    pub fn lambda_monotone(&self) -> bool {
        let feasible: Vec<&LinearityRow> = self.rows.iter().filter(|r| r.feasible).collect();
        feasible
            .windows(2)
            .all(|w| w[1].lambda_bmg >= w[0].lambda_bmg - 1e-10 * (1.0 + w[0].lambda_bmg.abs()))
    }
}

/// Solves the relative-cap problem for each reduction target `Δ`
/// (cap `β⁺ = γᵀb − Δ`) and fits tracking error against the realized `Δ_bmg`.
pub fn te_linearity_report(
    model: &FactorCovarianceModel,
    benchmark: &Benchmark,
    delta_targets: &[f64],
    intensities: Option<&CarbonIntensity>,
) -> Result<LinearityReport> {
    let mut targets = delta_targets.to_vec();
    targets.sort_by(f64::total_cmp);
    let base = model.beta_bmg.dot(benchmark.weights());

    let rows: Vec<LinearityRow> = targets
        .par_iter()
        .map(|&delta| {
            match te_optimize(model, benchmark, IndexConstraint::RelativeCap(base - delta), intensities) {
                Ok(sol) => Ok(LinearityRow {
                    delta_target: delta,
                    feasible: true,
                    delta_bmg: sol.diagnostics.delta_bmg,
                    tracking_error: sol.diagnostics.tracking_error,
                    lambda_bmg: sol.diagnostics.lambda_bmg,
                    active_share: sol.diagnostics.active_share,
                    excluded_count: sol.diagnostics.excluded_count,
                    waci: sol.diagnostics.waci,
                }),
                Err(Error::Infeasible(_)) => Ok(LinearityRow {
                    delta_target: delta,
                    feasible: false,
                    delta_bmg: f64::NAN,
                    tracking_error: f64::NAN,
                    lambda_bmg: f64::NAN,
                    active_share: f64::NAN,
                    excluded_count: 0,
                    waci: None,
                }),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;

    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.feasible)
        .map(|r| (r.delta_bmg, r.tracking_error))
        .collect();
    let (slope, intercept, r_squared) = line_fit(&pts);
    Ok(LinearityReport {
        rows,
        slope,
        intercept,
        r_squared,
    })
}

fn line_fit(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let k = pts.len() as f64;
    if pts.len() < 2 {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, intercept, r2)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupExposure {
    pub group: String,
    pub benchmark: f64,
    pub portfolio: f64,
    pub delta: f64,
}

/// Aggregates weights by group, sorted by group name.
pub fn group_exposure(
    x: &DVector<f64>,
    b: &DVector<f64>,
    groups: &[Option<String>],
) -> Result<Vec<GroupExposure>> {
    if x.len() != b.len() || groups.len() != x.len() {
        return Err(Error::Dimension(format!(
            "{} weights, {} benchmark weights, {} group labels",
            x.len(),
            b.len(),
            groups.len()
        )));
    }
    let mut acc: BTreeMap<&str, (f64, f64)> = BTreeMap::new();
    for (i, g) in groups.iter().enumerate() {
        let g = g
            .as_deref()
            .ok_or_else(|| Error::Mapping(format!("asset {i} has no group")))?;
        let e = acc.entry(g).or_insert((0.0, 0.0));
        e.0 += b[i];
        e.1 += x[i];
    }
    Ok(acc
        .into_iter()
        .map(|(g, (bg, xg))| GroupExposure {
            group: g.to_string(),
            benchmark: bg,
            portfolio: xg,
            delta: xg - bg,
        })
        .collect())
}
