//! Minimum-variance portfolios under the one- and two-factor covariance.
//!
//! Closed forms write every weight as
//! `x_i = σ²(x)/σ̃_i² · (1 − β_i/β* − γ_i/γ*)`. Internally the inverse
//! thresholds `1/β*` and `1/γ*` are carried instead, so a zero carbon
//! loading vector gives `1/γ* = 0` and the two-factor solver nests the
//! single-factor one exactly.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{phi, FactorCovarianceModel};
use crate::qp::{solve_qp, solve_qp_with, ConstraintRef, QpOptions, QpProblem, QpSolution, QpStatus};

/// Weights above this count as held.
pub const SUPPORT_TOL: f64 = 1e-8;

/// Threshold betas and the assets they were computed on.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoFactorThresholds {
    pub beta_star: f64,
    pub gamma_star: f64,
    pub support: Vec<usize>,
}

impl TwoFactorThresholds {
    fn from_inverse(inv_beta: f64, inv_gamma: f64, support: Vec<usize>) -> Self {
        Self {
            beta_star: 1.0 / inv_beta,
            gamma_star: 1.0 / inv_gamma,
            support,
        }
    }

    pub fn inv_beta_star(&self) -> f64 {
        1.0 / self.beta_star
    }

    pub fn inv_gamma_star(&self) -> f64 {
        1.0 / self.gamma_star
    }

    /// `1 − β/β* − γ/γ*`; positive for held assets.
    pub fn weight_factor(&self, beta_mkt: f64, beta_bmg: f64) -> f64 {
        1.0 - beta_mkt * self.inv_beta_star() - beta_bmg * self.inv_gamma_star()
    }

    /// Rebuild full-universe weights from the thresholds: the closed form on
    /// the support, zero elsewhere.
    pub fn reconstruct(&self, model: &FactorCovarianceModel) -> DVector<f64> {
        let mut raw = DVector::zeros(model.n());
        for &i in &self.support {
            raw[i] = self.weight_factor(model.beta_mkt[i], model.beta_bmg[i]) / model.idio_var[i];
        }
        let total = raw.sum();
        raw / total
    }
}

#[derive(Debug, Clone)]
pub struct CapmPortfolio {
    pub weights: DVector<f64>,
    pub beta_star: f64,
    pub support: Vec<usize>,
    pub variance: f64,
}

#[derive(Debug, Clone)]
pub struct TwoFactorPortfolio {
    pub weights: DVector<f64>,
    pub thresholds: TwoFactorThresholds,
    pub variance: f64,
}

/// Per-asset carbon intensity in tons CO₂e per million dollars of revenue.
#[derive(Debug, Clone, PartialEq)]
pub struct CarbonIntensity(DVector<f64>);

impl CarbonIntensity {
    pub fn new(values: DVector<f64>) -> Result<Self> {
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Domain("carbon intensities must be finite and nonnegative".into()));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct ConstrainedPortfolio {
    pub weights: DVector<f64>,
    /// Multiplier of `γᵀx ≤ β⁺`; zero when the constraint is slack or absent.
    pub lambda_bmg: f64,
    /// Multiplier of the budget constraint.
    pub lambda_budget: f64,
    pub variance: f64,
    pub qp: QpSolution,
}

fn require_assets(model: &FactorCovarianceModel, min: usize) -> Result<()> {
    if model.n() < min {
        return Err(Error::InsufficientUniverse {
            found: model.n(),
            required: min,
        });
    }
    Ok(())
}

/// Inverse thresholds `(1/β*, 1/γ*)` of the unconstrained portfolio on `model`.
fn inverse_thresholds(model: &FactorCovarianceModel) -> Result<(f64, f64)> {
    let d = &model.idio_var;
    let ones = DVector::from_element(model.n(), 1.0);
    let (b, g) = (&model.beta_mkt, &model.beta_bmg);
    let sm2 = model.sigma_mkt.powi(2);
    let sb2 = model.sigma_bmg.powi(2);
    let p_bb = phi(b, b, d);
    let p_gg = phi(g, g, d);
    let p_bg = phi(b, g, d);
    let sum_b = phi(b, &ones, d);
    let sum_g = phi(g, &ones, d);
    let det = 1.0 + sm2 * p_bb + sb2 * p_gg + sm2 * sb2 * (p_bb * p_gg - p_bg * p_bg);
    if !det.is_finite() || det.abs() < 1e-12 {
        return Err(Error::Singular { denominator: det });
    }
    let inv_beta = sm2 * (sum_b + sb2 * (p_gg * sum_b - p_bg * sum_g)) / det;
    let inv_gamma = sb2 * (sum_g + sm2 * (p_bb * sum_g - p_bg * sum_b)) / det;
    Ok((inv_beta, inv_gamma))
}

/// Normalized closed-form weights for given inverse thresholds.
fn closed_form_weights(model: &FactorCovarianceModel, inv_beta: f64, inv_gamma: f64) -> Result<DVector<f64>> {
    let raw = DVector::from_fn(model.n(), |i, _| {
        (1.0 - model.beta_mkt[i] * inv_beta - model.beta_bmg[i] * inv_gamma) / model.idio_var[i]
    });
    // the sum is 1ᵀΣ⁻¹1 / σ²-scale; it vanishes only for a degenerate model
    let total = raw.sum();
    let scale = raw.iter().map(|v| v.abs()).sum::<f64>();
    if !total.is_finite() || total.abs() <= 1e-12 * scale.max(1.0) {
        return Err(Error::Singular { denominator: total });
    }
    Ok(raw / total)
}

fn embed(n: usize, support: &[usize], sub: &DVector<f64>) -> DVector<f64> {
    let mut x = DVector::zeros(n);
    for (k, &i) in support.iter().enumerate() {
        x[i] = sub[k];
    }
    x
}

/// Global minimum-variance portfolio under the market-only model.
/// Any carbon loadings on `model` are ignored.
pub fn gmv_capm(model: &FactorCovarianceModel) -> Result<CapmPortfolio> {
    require_assets(model, 2)?;
    let inv_beta = capm_inverse_threshold(model);
    let weights = closed_form_weights(model, inv_beta, 0.0)?;
    let variance = capm_variance(model, &weights);
    Ok(CapmPortfolio {
        weights,
        beta_star: 1.0 / inv_beta,
        support: (0..model.n()).collect(),
        variance,
    })
}

fn capm_inverse_threshold(model: &FactorCovarianceModel) -> f64 {
    let d = &model.idio_var;
    let ones = DVector::from_element(model.n(), 1.0);
    let sm2 = model.sigma_mkt.powi(2);
    let p_bb = phi(&model.beta_mkt, &model.beta_mkt, d);
    sm2 * phi(&model.beta_mkt, &ones, d) / (1.0 + sm2 * p_bb)
}

fn capm_variance(model: &FactorCovarianceModel, x: &DVector<f64>) -> f64 {
    let m = model.beta_mkt.dot(x);
    let idio: f64 = x.iter().zip(model.idio_var.iter()).map(|(w, s)| w * w * s).sum();
    m * m * model.sigma_mkt.powi(2) + idio
}

/// Long-only minimum-variance portfolio under the market-only model.
///
/// Held assets are those with `β_i < β*`, where `β*` depends on the held set.
/// In increasing-beta order the held set is a prefix; the prefix whose
/// threshold separates it from the remaining assets is the solution.
pub fn mv_capm_long_only(model: &FactorCovarianceModel) -> Result<CapmPortfolio> {
    require_assets(model, 2)?;
    let n = model.n();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| model.beta_mkt[a].total_cmp(&model.beta_mkt[b]).then(a.cmp(&b)));

    for k in 1..=n {
        let mut support = order[..k].to_vec();
        let sub = model.restrict(&support);
        let inv_beta = capm_inverse_threshold(&sub);
        let held_ok = support.iter().all(|&i| 1.0 - model.beta_mkt[i] * inv_beta > 0.0);
        let rest_ok = order[k..].iter().all(|&j| 1.0 - model.beta_mkt[j] * inv_beta <= 0.0);
        if held_ok && rest_ok {
            let w = closed_form_weights(&sub, inv_beta, 0.0)?;
            let weights = embed(n, &support, &w);
            support.sort_unstable();
            return Ok(CapmPortfolio {
                variance: capm_variance(model, &weights),
                weights,
                beta_star: 1.0 / inv_beta,
                support,
            });
        }
    }
    Err(Error::NotConverged("no beta prefix satisfies the threshold conditions".into()))
}

/// Global minimum-variance portfolio under the two-factor model.
pub fn gmv_two_factor(model: &FactorCovarianceModel) -> Result<TwoFactorPortfolio> {
    require_assets(model, 3)?;
    let (inv_beta, inv_gamma) = inverse_thresholds(model)?;
    let weights = closed_form_weights(model, inv_beta, inv_gamma)?;
    Ok(TwoFactorPortfolio {
        variance: model.portfolio_variance(&weights),
        weights,
        thresholds: TwoFactorThresholds::from_inverse(inv_beta, inv_gamma, (0..model.n()).collect()),
    })
}

fn budget_row(n: usize) -> (DMatrix<f64>, DVector<f64>) {
    (DMatrix::from_element(1, n, 1.0), DVector::from_element(1, 1.0))
}

fn long_only_problem(cov: DMatrix<f64>) -> QpProblem {
    let n = cov.nrows();
    let (a, b) = budget_row(n);
    QpProblem::new(cov, DVector::zeros(n))
        .with_equalities(a, b)
        .with_lower_bounds(DVector::zeros(n))
}

fn expect_optimal(sol: QpSolution) -> Result<QpSolution> {
    match sol.status {
        QpStatus::Optimal => Ok(sol),
        QpStatus::Infeasible => Err(Error::Infeasible("constraint set is empty".into())),
        QpStatus::MaxIter => Err(Error::NotConverged(format!(
            "QP hit the iteration cap after {} iterations",
            sol.iterations
        ))),
    }
}

/// Long-only minimum-variance portfolio under the two-factor model.
///
/// The bounded QP identifies the held set; thresholds are then computed in
/// closed form on that set and must reproduce the QP weights.
pub fn mv_two_factor_long_only(model: &FactorCovarianceModel) -> Result<TwoFactorPortfolio> {
    require_assets(model, 3)?;
    let n = model.n();
    let qp = expect_optimal(solve_qp(&long_only_problem(model.covariance()))?)?;
    let support: Vec<usize> = (0..n).filter(|&i| qp.x[i] > SUPPORT_TOL).collect();
    let sub = model.restrict(&support);
    let (inv_beta, inv_gamma) = inverse_thresholds(&sub)?;
    let w = closed_form_weights(&sub, inv_beta, inv_gamma)?;
    let weights = embed(n, &support, &w);

    let gap = (&weights - &qp.x).amax();
    if gap > 1e-6 {
        return Err(Error::NotConverged(format!(
            "closed-form weights on the QP support differ by {gap:e}"
        )));
    }
    if let Some(j) = (0..n).find(|&j| {
        !support.contains(&j)
            && 1.0 - model.beta_mkt[j] * inv_beta - model.beta_bmg[j] * inv_gamma > 1e-6
    }) {
        return Err(Error::NotConverged(format!(
            "excluded asset {j} violates the threshold condition"
        )));
    }
    Ok(TwoFactorPortfolio {
        variance: model.portfolio_variance(&weights),
        weights,
        thresholds: TwoFactorThresholds::from_inverse(inv_beta, inv_gamma, support),
    })
}

/// `Σ̃ = Σ + λ (γ 1ᵀ + 1 γᵀ)`.
pub fn shrunk_covariance(model: &FactorCovarianceModel, lambda_bmg: f64) -> Result<DMatrix<f64>> {
    if !(lambda_bmg >= 0.0 && lambda_bmg.is_finite()) {
        return Err(Error::Domain(format!("shrinkage intensity must be >= 0, got {lambda_bmg}")));
    }
    let g = &model.beta_bmg;
    let n = model.n();
    let mut cov = model.covariance();
    for i in 0..n {
        for j in 0..n {
            cov[(i, j)] += lambda_bmg * (g[i] + g[j]);
        }
    }
    Ok(cov)
}

pub fn waci(weights: &DVector<f64>, intensities: &CarbonIntensity) -> Result<f64> {
    if weights.len() != intensities.len() {
        return Err(Error::Dimension(format!(
            "{} weights but {} intensities",
            weights.len(),
            intensities.len()
        )));
    }
    Ok(weights.dot(intensities.values()))
}

fn constrained_problem(model: &FactorCovarianceModel, beta_plus: f64, excluded: &[usize]) -> QpProblem {
    let n = model.n();
    let mut p = long_only_problem(model.covariance());
    if beta_plus.is_finite() {
        p = p.with_inequalities(
            DMatrix::from_row_slice(1, n, model.beta_bmg.as_slice()),
            DVector::from_element(1, beta_plus),
        );
    }
    if !excluded.is_empty() {
        let mut upper = DVector::from_element(n, f64::INFINITY);
        for &i in excluded {
            upper[i] = 0.0;
        }
        p = p.with_upper_bounds(upper);
    }
    p
}

fn finish_constrained(model: &FactorCovarianceModel, qp: QpSolution) -> Result<ConstrainedPortfolio> {
    let qp = expect_optimal(qp)?;
    let mut weights = qp.x.clone();
    // clear round-off on bounds so held sets are unambiguous
    weights.iter_mut().for_each(|w| {
        if w.abs() < 1e-14 {
            *w = 0.0
        }
    });
    Ok(ConstrainedPortfolio {
        variance: model.portfolio_variance(&weights),
        lambda_bmg: qp.ineq_multipliers.get(0).copied().unwrap_or(0.0),
        lambda_budget: qp.eq_multipliers[0],
        weights,
        qp,
    })
}

/// Long-only minimum variance with the carbon-beta cap `γᵀx ≤ β⁺`.
///
/// The objective is `½ xᵀΣx`, so `λ_bmg` is exactly the intensity at which
/// [`shrunk_covariance`] yields the same portfolio without the cap.
/// An infinite cap drops the constraint.
pub fn mv_carbon_constrained(model: &FactorCovarianceModel, beta_plus: f64) -> Result<ConstrainedPortfolio> {
    if beta_plus.is_nan() {
        return Err(Error::Domain("carbon-beta cap is NaN".into()));
    }
    let qp = solve_qp(&constrained_problem(model, beta_plus, &[]))?;
    finish_constrained(model, qp)
}

/// [`mv_carbon_constrained`] after dropping assets with `CI_i > CI⁺`.
pub fn mv_with_intensity_exclusion(
    model: &FactorCovarianceModel,
    beta_plus: f64,
    ci_plus: f64,
    intensities: &CarbonIntensity,
) -> Result<ConstrainedPortfolio> {
    if intensities.len() != model.n() {
        return Err(Error::Dimension(format!(
            "{} assets but {} intensities",
            model.n(),
            intensities.len()
        )));
    }
    if ci_plus.is_nan() {
        return Err(Error::Domain("intensity cap is NaN".into()));
    }
    let excluded: Vec<usize> = (0..model.n())
        .filter(|&i| intensities.values()[i] > ci_plus)
        .collect();
    if excluded.len() == model.n() {
        return Err(Error::EmptyUniverse(format!(
            "every asset has carbon intensity above {ci_plus}"
        )));
    }
    let qp = solve_qp(&constrained_problem(model, beta_plus, &excluded))?;
    finish_constrained(model, qp)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapSweepPoint {
    pub beta_plus: f64,
    pub lambda_bmg: f64,
    pub variance: f64,
    pub carbon_beta: f64,
}

/// Solves the capped problem at each `β⁺`. Sequential runs pass the previous
/// active set along as a warm start; parallel runs solve cold. Both orderings
/// give the same answers.
pub fn sweep_carbon_cap(
    model: &FactorCovarianceModel,
    caps: &[f64],
    parallel: bool,
) -> Result<Vec<ConstrainedPortfolio>> {
    if parallel {
        return caps
            .par_iter()
            .map(|&c| mv_carbon_constrained(model, c))
            .collect();
    }
    let mut warm: Vec<ConstraintRef> = Vec::new();
    let mut out = Vec::with_capacity(caps.len());
    for &c in caps {
        let opts = QpOptions {
            warm_start: warm.clone(),
            ..QpOptions::default()
        };
        let qp = solve_qp_with(&constrained_problem(model, c, &[]), &opts)?;
        let res = finish_constrained(model, qp)?;
        warm = res.qp.active.clone();
        out.push(res);
    }
    Ok(out)
}

impl ConstrainedPortfolio {
    pub fn sweep_point(&self, model: &FactorCovarianceModel, beta_plus: f64) -> CapSweepPoint {
        CapSweepPoint {
            beta_plus,
            lambda_bmg: self.lambda_bmg,
            variance: self.variance,
            carbon_beta: model.beta_bmg.dot(&self.weights),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    fn set1_capm() -> FactorCovarianceModel {
        let iv = v(&[0.04, 0.12, 0.05, 0.08, 0.05]);
        FactorCovarianceModel::capm(v(&[0.9, 0.8, 1.2, 0.7, 1.3]), 0.25, iv.map(|s| s * s)).unwrap()
    }

    fn with_gamma(g: &[f64]) -> FactorCovarianceModel {
        let iv = v(&[0.04, 0.12, 0.05, 0.08, 0.05]);
        FactorCovarianceModel::from_idio_vol(v(&[0.9, 0.8, 1.2, 0.7, 1.3]), v(g), 0.25, 0.10, &iv).unwrap()
    }

    fn assert_pct(x: &DVector<f64>, pct: &[f64]) {
        for (a, b) in x.iter().zip(pct) {
            assert!((a * 100.0 - b).abs() <= 0.01, "{} vs {b}", a * 100.0);
        }
    }

    #[test]
    fn capm_gmv_reference() {
        let p = gmv_capm(&set1_capm()).unwrap();
        assert_pct(&p.weights, &[147.33, 24.67, -49.19, 74.20, -97.01]);
        assert!((p.beta_star - 1.0972).abs() <= 1e-4);
        assert_relative_eq!(p.weights.sum(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn capm_long_only_reference() {
        let p = mv_capm_long_only(&set1_capm()).unwrap();
        assert_pct(&p.weights, &[0.0, 9.45, 0.0, 90.55, 0.0]);
        assert!((p.beta_star - 0.8307).abs() <= 1e-4);
        assert_eq!(p.support, vec![1, 3]);
    }

    #[test]
    fn two_identical_assets_split_evenly() {
        let m = FactorCovarianceModel::capm(v(&[1.0, 1.0]), 0.2, v(&[0.01, 0.01])).unwrap();
        assert_relative_eq!(gmv_capm(&m).unwrap().weights, v(&[0.5, 0.5]), epsilon = 1e-15);
    }

    #[test]
    fn identical_assets_long_only_equal_weights() {
        let m = FactorCovarianceModel::capm(v(&[1.1; 4]), 0.2, v(&[0.02; 4])).unwrap();
        assert_relative_eq!(mv_capm_long_only(&m).unwrap().weights, v(&[0.25; 4]), epsilon = 1e-14);
    }

    #[test]
    fn two_factor_gmv_reference() {
        let p = gmv_two_factor(&with_gamma(&[-0.5, 0.7, 0.2, 0.9, -0.3])).unwrap();
        assert_pct(&p.weights, &[166.55, 21.37, -58.80, 65.06, -94.18]);
        assert!((p.thresholds.beta_star - 1.0906).abs() <= 1e-4);
        assert!((p.thresholds.gamma_star - 19.7724).abs() <= 1e-4);
    }

    #[test]
    fn two_factor_long_only_reference() {
        let p = mv_two_factor_long_only(&with_gamma(&[-0.5, 0.7, 0.2, 0.9, -0.3])).unwrap();
        assert_pct(&p.weights, &[33.54, 1.46, 0.0, 64.99, 0.0]);
        assert!((p.thresholds.beta_star - 0.8667).abs() <= 1e-4);
        assert!((p.thresholds.gamma_star - 9.7394).abs() <= 1e-4);
    }

    #[test]
    fn parameter_sets_two_and_three() {
        let g2 = [-1.5, -0.5, 3.0, -1.2, -0.9];
        let m2 = with_gamma(&g2);
        assert_pct(&gmv_two_factor(&m2).unwrap().weights, &[105.46, 27.88, 40.19, 76.77, -150.30]);
        let p2 = mv_two_factor_long_only(&m2).unwrap();
        assert_pct(&p2.weights, &[0.0, 19.48, 13.61, 66.91, 0.0]);
        assert!((p2.thresholds.beta_star - 0.9070).abs() <= 1e-4);
        assert!((p2.thresholds.gamma_star + 9.0718).abs() <= 1e-4);
        let p3 = mv_two_factor_long_only(&m2.flip_bmg()).unwrap();
        assert_relative_eq!(p3.weights, p2.weights, epsilon = 1e-12);
        assert!((p3.thresholds.gamma_star - 9.0718).abs() <= 1e-4);
    }

    #[test]
    fn zero_carbon_loadings_nest_capm() {
        let m = with_gamma(&[0.0; 5]);
        let two = gmv_two_factor(&m).unwrap();
        let one = gmv_capm(&m).unwrap();
        assert!((two.weights - one.weights).amax() < 1e-12);
        assert_eq!(two.thresholds.inv_gamma_star(), 0.0);
    }

    #[test]
    fn constrained_reference_weights() {
        let p1 = mv_carbon_constrained(&with_gamma(&[-0.5, 0.7, 0.2, 0.9, -0.3]), 0.0).unwrap();
        assert_pct(&p1.weights, &[64.29, 0.0, 0.0, 35.71, 0.0]);
        assert!((p1.lambda_bmg * 1e4 - 65.0).abs() < 0.5);

        let m2 = with_gamma(&[-1.5, -0.5, 3.0, -1.2, -0.9]);
        let p2 = mv_carbon_constrained(&m2, 0.0).unwrap();
        assert_eq!(p2.lambda_bmg, 0.0);
        assert_pct(&p2.weights, &[0.0, 19.48, 13.61, 66.91, 0.0]);

        let p3 = mv_carbon_constrained(&m2.flip_bmg(), 0.0).unwrap();
        assert_pct(&p3.weights, &[0.0, 16.11, 25.89, 58.00, 0.0]);
        assert!((p3.lambda_bmg * 1e4 - 56.0).abs() < 0.5);
    }

    #[test]
    fn shrinkage_reproduces_constrained_active_set() {
        let m = with_gamma(&[-0.5, 0.7, 0.2, 0.9, -0.3]);
        let cap = mv_carbon_constrained(&m, 0.0).unwrap();
        let shrunk = shrunk_covariance(&m, cap.lambda_bmg).unwrap();
        // adding κ11ᵀ is a constant on the simplex but makes the matrix definite
        let kappa = shrunk.amax() * 10.0;
        let q = shrunk + DMatrix::from_element(5, 5, kappa);
        let free = solve_qp(&long_only_problem(q)).unwrap();
        assert!((free.x - &cap.weights).amax() < 1e-9);
    }

    #[test]
    fn shrinkage_zero_and_symmetry() {
        let m = with_gamma(&[-0.5, 0.7, 0.2, 0.9, -0.3]);
        assert_eq!(shrunk_covariance(&m, 0.0).unwrap(), m.covariance());
        let s = shrunk_covariance(&m, 0.3).unwrap();
        assert_eq!(s, s.transpose());
        assert!(shrunk_covariance(&m, -1.0).is_err());
    }

    #[test]
    fn waci_examples() {
        let ci = CarbonIntensity::new(v(&[100.0, 200.0, 300.0, 400.0, 500.0])).unwrap();
        assert_relative_eq!(waci(&v(&[0.2; 5]), &ci).unwrap(), 300.0, epsilon = 1e-12);
        assert_eq!(waci(&v(&[0.0, 0.0, 1.0, 0.0, 0.0]), &ci).unwrap(), 300.0);
        assert!(waci(&v(&[1.0]), &ci).is_err());
        assert!(CarbonIntensity::new(v(&[-1.0])).is_err());
    }

    #[test]
    fn intensity_exclusion_limits() {
        let m = with_gamma(&[-0.5, 0.7, 0.2, 0.9, -0.3]);
        let ci = CarbonIntensity::new(v(&[100.0, 200.0, 300.0, 400.0, 500.0])).unwrap();
        let open = mv_with_intensity_exclusion(&m, 0.0, f64::INFINITY, &ci).unwrap();
        let plain = mv_carbon_constrained(&m, 0.0).unwrap();
        assert!((open.weights - plain.weights).amax() < 1e-14);
        assert!(matches!(
            mv_with_intensity_exclusion(&m, 0.0, 50.0, &ci),
            Err(Error::EmptyUniverse(_))
        ));
        let cut = mv_with_intensity_exclusion(&m, 0.0, 350.0, &ci).unwrap();
        assert_eq!(cut.weights[3], 0.0);
        assert_eq!(cut.weights[4], 0.0);
    }

    #[test]
    fn infeasible_cap_is_reported() {
        let m = with_gamma(&[0.5, 0.7, 0.2, 0.9, 0.3]);
        assert!(matches!(mv_carbon_constrained(&m, 0.0), Err(Error::Infeasible(_))));
    }

    #[test]
    fn sweep_warm_and_cold_agree() {
        let m = with_gamma(&[-0.5, 0.7, 0.2, 0.9, -0.3]);
        let caps: Vec<f64> = (0..12).map(|k| 0.4 - 0.05 * k as f64).collect();
        let seq = sweep_carbon_cap(&m, &caps, false).unwrap();
        let par = sweep_carbon_cap(&m, &caps, true).unwrap();
        for (a, b) in seq.iter().zip(&par) {
            assert!((&a.weights - &b.weights).amax() < 1e-12);
            assert!((a.lambda_bmg - b.lambda_bmg).abs() < 1e-12);
        }
        for w in seq.windows(2) {
            assert!(w[1].lambda_bmg >= w[0].lambda_bmg - 1e-12);
            assert!(w[1].variance >= w[0].variance - 1e-15);
        }
    }
}
