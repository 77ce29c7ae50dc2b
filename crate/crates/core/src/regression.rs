//! Static factor regressions and summary statistics.

use chrono::NaiveDate;
use log::warn;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, FisherSnedecor, StudentsT};

use crate::data::{FactorSeries, ReturnsPanel};
use crate::error::{Error, Result};

pub const MIN_OLS_OBS: usize = 36;

/// Factors on the right-hand side; an intercept is always included.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ModelSpec {
    factors: Vec<String>,
}

impl ModelSpec {
    pub fn new<S: AsRef<str>>(factors: &[S]) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::Domain("model needs at least one factor".into()));
        }
        let factors: Vec<String> = factors.iter().map(|s| s.as_ref().to_string()).collect();
        for (i, f) in factors.iter().enumerate() {
            if factors[..i].contains(f) {
                return Err(Error::Domain(format!("factor {f} listed twice")));
            }
        }
        Ok(Self { factors })
    }

    pub fn factors(&self) -> &[String] {
        &self.factors
    }

    pub fn k(&self) -> usize {
        self.factors.len()
    }

    pub fn label(&self) -> String {
        self.factors.join("+")
    }

    pub fn is_nested_in(&self, full: &ModelSpec) -> bool {
        self.factors.iter().all(|f| full.factors.contains(f)) && self.k() < full.k()
    }
}

impl std::str::FromStr for ModelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(['+', ',']).map(str::trim).filter(|p| !p.is_empty()).collect();
        Self::new(&parts)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    pub spec: ModelSpec,
    pub alpha: f64,
    pub betas: Vec<f64>,
    /// Intercept first, then one per factor.
    pub std_errors: Vec<f64>,
    pub residual_variance: f64,
    pub r2: f64,
    pub adjusted_r2: f64,
    pub rss: f64,
    pub n_obs: usize,
    pub dates: Vec<NaiveDate>,
    pub fitted: Vec<f64>,
    pub residuals: Vec<f64>,
}

impl OlsFit {
    pub fn beta(&self, factor: &str) -> Option<f64> {
        self.spec.factors.iter().position(|f| f == factor).map(|i| self.betas[i])
    }

    pub fn t_stat(&self, coef: usize) -> f64 {
        let c = if coef == 0 { self.alpha } else { self.betas[coef - 1] };
        c / self.std_errors[coef]
    }
}

/// Least-squares core on a design without the intercept column.
pub(crate) struct LeastSquares {
    pub coef: DVector<f64>,
    pub cov_unscaled: DMatrix<f64>,
    pub fitted: DVector<f64>,
    pub residuals: DVector<f64>,
    pub rss: f64,
    pub tss: f64,
}

pub(crate) fn least_squares(y: &DVector<f64>, design: &DMatrix<f64>) -> Result<LeastSquares> {
    let n = y.len();
    let p = design.ncols();
    if n <= p {
        return Err(Error::InsufficientSample { found: n, required: p + 1 });
    }
    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-10 * smax) {
        return Err(Error::Collinearity(format!(
            "condition number {:.3e} exceeds 1e10",
            smax / smin
        )));
    }
    let coef = svd
        .solve(y, 0.0)
        .map_err(|e| Error::Collinearity(e.to_string()))?;
    let v = svd.v_t.as_ref().expect("requested V").transpose();
    let inv_s2 = DMatrix::from_diagonal(&svd.singular_values.map(|s| 1.0 / (s * s)));
    let cov_unscaled = &v * inv_s2 * v.transpose();
    let fitted = design * &coef;
    let residuals = y - &fitted;
    let rss = residuals.norm_squared();
    let mean = y.mean();
    let tss = y.iter().map(|v| (v - mean).powi(2)).sum();
    Ok(LeastSquares {
        coef,
        cov_unscaled,
        fitted,
        residuals,
        rss,
        tss,
    })
}

/// Months where both the asset return and every factor are observed.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub dates: Vec<NaiveDate>,
    pub y: Vec<f64>,
    /// Leading column of ones, then one column per factor.
    pub design: DMatrix<f64>,
}

pub fn aligned_sample<S: AsRef<str>>(
    dates: &[NaiveDate],
    returns: &[Option<f64>],
    factors: &FactorSeries,
    names: &[S],
) -> Result<Sample> {
    if dates.len() != returns.len() {
        return Err(Error::Dimension("return dates and values differ in length".into()));
    }
    let cols: Vec<&[f64]> = names
        .iter()
        .map(|f| {
            let f = f.as_ref();
            factors.get(f).ok_or_else(|| Error::MissingInput(format!("factor {f}")))
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for (d, r) in dates.iter().zip(returns) {
        if let (Some(r), Some(t)) = (r, factors.date_index(*d)) {
            rows.push((*d, *r, t));
        }
    }
    let design = DMatrix::from_fn(rows.len(), cols.len() + 1, |i, j| {
        if j == 0 {
            1.0
        } else {
            cols[j - 1][rows[i].2]
        }
    });
    Ok(Sample {
        dates: rows.iter().map(|r| r.0).collect(),
        y: rows.iter().map(|r| r.1).collect(),
        design,
    })
}

/// OLS of asset returns on the model factors over common dates.
/// Months where the asset is outside the index are dropped.
pub fn ols_fit(
    dates: &[NaiveDate],
    returns: &[Option<f64>],
    factors: &FactorSeries,
    spec: &ModelSpec,
    min_obs: usize,
) -> Result<OlsFit> {
    let sample = aligned_sample(dates, returns, factors, spec.factors())?;
    let k = spec.k();
    let required = min_obs.max(k + 2);
    if sample.y.len() < required {
        return Err(Error::InsufficientSample {
            found: sample.y.len(),
            required,
        });
    }
    let n = sample.y.len();
    let y = DVector::from_column_slice(&sample.y);
    let design = sample.design;
    let ls = least_squares(&y, &design)?;
    let dof = (n - k - 1) as f64;
    let residual_variance = ls.rss / dof;
    let r2 = if ls.tss > 0.0 { 1.0 - ls.rss / ls.tss } else { 1.0 };
    let adjusted_r2 = 1.0 - (1.0 - r2) * (n as f64 - 1.0) / dof;
    let std_errors = (0..=k)
        .map(|j| (residual_variance * ls.cov_unscaled[(j, j)]).sqrt())
        .collect();
    Ok(OlsFit {
        spec: spec.clone(),
        alpha: ls.coef[0],
        betas: ls.coef.iter().skip(1).copied().collect(),
        std_errors,
        residual_variance,
        r2,
        adjusted_r2,
        rss: ls.rss,
        n_obs: n,
        dates: sample.dates,
        fitted: ls.fitted.iter().copied().collect(),
        residuals: ls.residuals.iter().copied().collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FTest {
    pub statistic: f64,
    pub p_value: f64,
    pub df_num: usize,
    pub df_den: usize,
}

pub fn f_test_nested(full: &OlsFit, nested: &OlsFit) -> Result<FTest> {
    if full.dates != nested.dates {
        return Err(Error::Alignment("nested and full fits use different samples".into()));
    }
    if !nested.spec.is_nested_in(&full.spec) {
        return Err(Error::Alignment(format!(
            "{} is not nested in {}",
            nested.spec.label(),
            full.spec.label()
        )));
    }
    let q = full.spec.k() - nested.spec.k();
    let dof = full.n_obs - full.spec.k() - 1;
    let gain = (nested.rss - full.rss).max(0.0);
    let statistic = if gain == 0.0 {
        0.0
    } else if full.rss == 0.0 {
        f64::INFINITY
    } else {
        (gain / q as f64) / (full.rss / dof as f64)
    };
    Ok(FTest {
        statistic,
        p_value: f_p_value(statistic, q, dof),
        df_num: q,
        df_den: dof,
    })
}

pub fn f_p_value(statistic: f64, df_num: usize, df_den: usize) -> f64 {
    if statistic <= 0.0 {
        return 1.0;
    }
    if statistic.is_infinite() {
        return 0.0;
    }
    FisherSnedecor::new(df_num as f64, df_den as f64)
        .map(|d| d.sf(statistic))
        .unwrap_or(f64::NAN)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub nested: String,
    pub full: String,
    pub n_assets: usize,
    pub mean_adj_r2_diff: f64,
    pub share_10: f64,
    pub share_5: f64,
    pub share_1: f64,
}

/// Per-pair aggregates over all assets with enough history for both fits.
pub fn batch_compare(
    panel: &ReturnsPanel,
    factors: &FactorSeries,
    pairs: &[(ModelSpec, ModelSpec)],
    min_obs: usize,
) -> Vec<CompareRow> {
    let mut out = Vec::new();
    for (nested, full) in pairs {
        let per_asset: Vec<Option<(f64, f64)>> = (0..panel.n_assets())
            .into_par_iter()
            .map(|a| {
                let fit = |s: &ModelSpec| ols_fit(panel.dates(), panel.series(a), factors, s, min_obs);
                match (fit(full), fit(nested)) {
                    (Ok(f), Ok(n)) => match f_test_nested(&f, &n) {
                        Ok(t) => Some((f.adjusted_r2 - n.adjusted_r2, t.p_value)),
                        Err(e) => {
                            warn!("asset {}: {e}", panel.assets()[a]);
                            None
                        }
                    },
                    (Err(e), _) | (_, Err(e)) => {
                        warn!("asset {} skipped: {e}", panel.assets()[a]);
                        None
                    }
                }
            })
            .collect();
        let ok: Vec<(f64, f64)> = per_asset.into_iter().flatten().collect();
        if ok.is_empty() {
            warn!("no eligible assets for {} vs {}", nested.label(), full.label());
            continue;
        }
        let m = ok.len() as f64;
        let share = |lvl: f64| ok.iter().filter(|r| r.1 < lvl).count() as f64 / m;
        out.push(CompareRow {
            nested: nested.label(),
            full: full.label(),
            n_assets: ok.len(),
            mean_adj_r2_diff: ok.iter().map(|r| r.0).sum::<f64>() / m,
            share_10: share(0.10),
            share_5: share(0.05),
            share_1: share(0.01),
        });
    }
    out
}

pub fn significance_stars(p: f64) -> &'static str {
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.10 {
        "*"
    } else {
        ""
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub names: Vec<String>,
    pub corr: DMatrix<f64>,
    pub p_values: DMatrix<f64>,
    pub n_obs: usize,
}

impl CorrelationMatrix {
    pub fn stars(&self, i: usize, j: usize) -> &'static str {
        significance_stars(self.p_values[(i, j)])
    }
}

pub const MIN_CORR_OBS: usize = 24;

/// Pearson correlations with two-sided t-test p-values.
pub fn factor_correlation(factors: &FactorSeries) -> Result<CorrelationMatrix> {
    let n = factors.len();
    if n < MIN_CORR_OBS {
        return Err(Error::InsufficientSample {
            found: n,
            required: MIN_CORR_OBS,
        });
    }
    let k = factors.names().len();
    let centered: Vec<Vec<f64>> = (0..k)
        .map(|f| {
            let c = factors.column(f);
            let m = c.iter().sum::<f64>() / n as f64;
            c.iter().map(|v| v - m).collect()
        })
        .collect();
    let norms: Vec<f64> = centered.iter().map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
    for (f, nrm) in norms.iter().enumerate() {
        let scale = factors.column(f).iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if *nrm <= 1e-12 * scale * (n as f64).sqrt() || *nrm == 0.0 {
            return Err(Error::DegenerateData(format!(
                "factor {} is constant; correlation undefined",
                factors.names()[f]
            )));
        }
    }
    let t_dist = StudentsT::new(0.0, 1.0, (n - 2) as f64).map_err(|e| Error::Domain(e.to_string()))?;
    let mut corr = DMatrix::identity(k, k);
    let mut p_values = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in (i + 1)..k {
            let dot: f64 = centered[i].iter().zip(&centered[j]).map(|(a, b)| a * b).sum();
            let r = (dot / (norms[i] * norms[j])).clamp(-1.0, 1.0);
            let p = if r.abs() >= 1.0 {
                0.0
            } else {
                let t = r * ((n - 2) as f64).sqrt() / (1.0 - r * r).sqrt();
                2.0 * t_dist.sf(t.abs())
            };
            corr[(i, j)] = r;
            corr[(j, i)] = r;
            p_values[(i, j)] = p;
            p_values[(j, i)] = p;
        }
    }
    Ok(CorrelationMatrix {
        names: factors.names().to_vec(),
        corr,
        p_values,
        n_obs: n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescriptiveStats {
    pub mean: f64,
    pub volatility: f64,
    pub skewness: f64,
    /// Raw (not excess) kurtosis.
    pub kurtosis: f64,
    /// Maximum drawdown of the compounded level, as a non-positive number.
    pub max_drawdown: f64,
    pub best_month: f64,
    pub worst_month: f64,
}

/// Annualized statistics of a monthly return series.
pub fn descriptive_stats(series: &[f64]) -> Result<DescriptiveStats> {
    if series.is_empty() {
        return Err(Error::InsufficientSample { found: 0, required: 1 });
    }
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    let m2 = series.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
    let m3 = series.iter().map(|r| (r - mean).powi(3)).sum::<f64>() / n;
    let m4 = series.iter().map(|r| (r - mean).powi(4)).sum::<f64>() / n;
    let std = if series.len() > 1 { (m2 * n / (n - 1.0)).sqrt() } else { 0.0 };
    let (skewness, kurtosis) = if m2 > 0.0 {
        (m3 / m2.powf(1.5), m4 / (m2 * m2))
    } else {
        (f64::NAN, f64::NAN)
    };
    let mut level = 1.0;
    let mut peak = 1.0_f64;
    let mut mdd = 0.0_f64;
    for r in series {
        level *= 1.0 + r;
        peak = peak.max(level);
        mdd = mdd.min(level / peak - 1.0);
    }
    Ok(DescriptiveStats {
        mean: 12.0 * mean,
        volatility: 12f64.sqrt() * std,
        skewness,
        kurtosis,
        max_drawdown: mdd,
        best_month: series.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        worst_month: series.iter().copied().fold(f64::INFINITY, f64::min),
    })
}

/// Five equal-weight portfolios from lowest to highest beta.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Quintiles {
    pub members: [Vec<usize>; 5],
}

impl Quintiles {
    /// Equal-weight return of each quintile.
    pub fn returns(&self, asset_returns: &[f64]) -> [f64; 5] {
        std::array::from_fn(|q| {
            let m = &self.members[q];
            m.iter().map(|&i| asset_returns[i]).sum::<f64>() / m.len() as f64
        })
    }
}

/// Rank by `(beta, index)`; quintile `q` takes ranks `⌊qn/5⌋ .. ⌊(q+1)n/5⌋`.
pub fn quintile_sort(betas: &[f64]) -> Result<Quintiles> {
    let n = betas.len();
    if n < 5 {
        return Err(Error::InsufficientUniverse { found: n, required: 5 });
    }
    if betas.iter().any(|b| b.is_nan()) {
        return Err(Error::Domain("NaN beta".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| betas[a].total_cmp(&betas[b]).then(a.cmp(&b)));
    let members = std::array::from_fn(|q| {
        let mut m = order[q * n / 5..(q + 1) * n / 5].to_vec();
        m.sort_unstable();
        m
    });
    Ok(Quintiles { members })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::month_ends;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn dates(n: usize) -> Vec<NaiveDate> {
        month_ends(NaiveDate::from_ymd_opt(2010, 1, 31).unwrap(), n)
    }

    fn gaussian_factors(rng: &mut ChaCha8Rng, n: usize, names: &[&str], sd: f64) -> FactorSeries {
        let dist = Normal::new(0.0, sd).unwrap();
        FactorSeries::new(
            dates(n),
            names.iter().map(|s| s.to_string()).collect(),
            names.iter().map(|_| (0..n).map(|_| dist.sample(rng)).collect()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn perfect_fit_on_market() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = gaussian_factors(&mut rng, 60, &["MKT", "BMG"], 0.04);
        let y: Vec<Option<f64>> = f.get("MKT").unwrap().iter().map(|v| Some(*v)).collect();
        let fit = ols_fit(f.dates(), &y, &f, &ModelSpec::new(&["MKT"]).unwrap(), 36).unwrap();
        assert!(fit.alpha.abs() < 1e-14);
        assert!((fit.betas[0] - 1.0).abs() < 1e-13);
        assert!(fit.residual_variance < 1e-28);
        assert!((fit.adjusted_r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn residuals_orthogonal_to_regressors() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = gaussian_factors(&mut rng, 108, &["MKT", "SMB", "HML", "BMG"], 0.04);
        let noise = Normal::new(0.0, 0.03).unwrap();
        let y: Vec<Option<f64>> = (0..108)
            .map(|t| Some(0.001 + 0.9 * f.column(0)[t] + 0.4 * f.column(3)[t] + noise.sample(&mut rng)))
            .collect();
        let spec = ModelSpec::new(&["MKT", "SMB", "HML", "BMG"]).unwrap();
        let fit = ols_fit(f.dates(), &y, &f, &spec, 36).unwrap();
        let scale: f64 = fit.residuals.iter().map(|e| e.abs()).sum();
        assert!(fit.residuals.iter().sum::<f64>().abs() < 1e-12 * scale);
        for c in 0..4 {
            let dot: f64 = fit.residuals.iter().zip(f.column(c)).map(|(e, x)| e * x).sum();
            assert!(dot.abs() < 1e-12 * scale);
        }
        for (b, truth) in fit.betas.iter().zip([0.9, 0.0, 0.0, 0.4]) {
            assert!((b - truth).abs() < 3.0 * 0.03 / (0.04 * 108f64.sqrt()));
        }
    }

    #[test]
    fn duplicate_factor_is_collinear() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = gaussian_factors(&mut rng, 60, &["MKT"], 0.04);
        let g = f.clone().with_factor("MKT2", f.column(0).to_vec()).unwrap();
        let y: Vec<Option<f64>> = f.column(0).iter().map(|v| Some(v * 0.5)).collect();
        let r = ols_fit(g.dates(), &y, &g, &ModelSpec::new(&["MKT", "MKT2"]).unwrap(), 36);
        assert!(matches!(r, Err(Error::Collinearity(_))));
        assert!(ModelSpec::new(&["MKT", "MKT"]).is_err());
    }

    #[test]
    fn membership_mask_and_sample_floor() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let f = gaussian_factors(&mut rng, 40, &["MKT"], 0.04);
        let mut y: Vec<Option<f64>> = f.column(0).iter().map(|v| Some(*v)).collect();
        y[3] = None;
        y[10] = None;
        let spec = ModelSpec::new(&["MKT"]).unwrap();
        assert_eq!(ols_fit(f.dates(), &y, &f, &spec, 36).unwrap().n_obs, 38);
        y[11] = None;
        y[12] = None;
        y[13] = None;
        assert!(matches!(
            ols_fit(f.dates(), &y, &f, &spec, 36),
            Err(Error::InsufficientSample { found: 35, .. })
        ));
    }

    #[test]
    fn f_test_reference_points() {
        assert_eq!(f_p_value(0.0, 1, 100), 1.0);
        assert!((f_p_value(3.94, 1, 100) - 0.05).abs() < 1e-3);
    }

    #[test]
    fn f_test_scale_invariance_and_alignment() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = gaussian_factors(&mut rng, 80, &["MKT", "BMG"], 0.04);
        let noise = Normal::new(0.0, 0.02).unwrap();
        let y: Vec<f64> = (0..80).map(|t| f.column(0)[t] + 0.2 * f.column(1)[t] + noise.sample(&mut rng)).collect();
        let full = ModelSpec::new(&["MKT", "BMG"]).unwrap();
        let nested = ModelSpec::new(&["MKT"]).unwrap();
        let run = |s: f64| {
            let yy: Vec<Option<f64>> = y.iter().map(|v| Some(v * s)).collect();
            f_test_nested(
                &ols_fit(f.dates(), &yy, &f, &full, 36).unwrap(),
                &ols_fit(f.dates(), &yy, &f, &nested, 36).unwrap(),
            )
            .unwrap()
        };
        let a = run(1.0);
        let b = run(7.5);
        assert!((a.statistic - b.statistic).abs() < 1e-9 * a.statistic);
        let yy: Vec<Option<f64>> = y.iter().map(|v| Some(*v)).collect();
        let fit_full = ols_fit(f.dates(), &yy, &f, &full, 36).unwrap();
        assert!(f_test_nested(&fit_full, &fit_full).is_err());
        let mut short = yy.clone();
        short[0] = None;
        let fit_nested = ols_fit(f.dates(), &short, &f, &nested, 36).unwrap();
        assert!(matches!(f_test_nested(&fit_full, &fit_nested), Err(Error::Alignment(_))));
    }

    #[test]
    fn correlation_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let f = gaussian_factors(&mut rng, 108, &["A", "B"], 0.03);
        let neg: Vec<f64> = f.column(0).iter().map(|v| -2.0 * v + 0.1).collect();
        let g = f.clone().with_factor("NEG", neg).unwrap();
        let c = factor_correlation(&g).unwrap();
        assert_eq!(c.corr[(0, 0)], 1.0);
        assert_eq!(c.stars(0, 0), "***");
        assert!((c.corr[(0, 2)] + 1.0).abs() < 1e-12);
        assert_eq!(c.stars(0, 2), "***");

        let h = f.clone().with_factor("FLAT", vec![0.01; 108]).unwrap();
        assert!(matches!(factor_correlation(&h), Err(Error::DegenerateData(_))));

        // positive affine maps leave the matrix unchanged
        let a2: Vec<f64> = f.column(0).iter().map(|v| 3.0 * v - 1.0).collect();
        let b2: Vec<f64> = f.column(1).iter().map(|v| 0.5 * v + 2.0).collect();
        let t = FactorSeries::new(f.dates().to_vec(), vec!["A".into(), "B".into()], vec![a2, b2]).unwrap();
        let c2 = factor_correlation(&t).unwrap();
        assert!((c2.corr[(0, 1)] - c.corr[(0, 1)]).abs() < 1e-12);
    }

    #[test]
    fn independent_factors_rarely_correlate() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let hits = (0..200)
            .filter(|_| {
                let f = gaussian_factors(&mut rng, 108, &["A", "B"], 0.03);
                factor_correlation(&f).unwrap().corr[(0, 1)].abs() < 0.19
            })
            .count();
        assert!(hits as f64 >= 0.95 * 200.0 - 6.0, "{hits}");
    }

    #[test]
    fn descriptive_examples() {
        let s = descriptive_stats(&[0.01; 24]).unwrap();
        assert!((s.mean - 0.12).abs() < 1e-14);
        assert!(s.volatility < 1e-15);
        assert_eq!(s.max_drawdown, 0.0);
        assert_eq!(s.best_month, 0.01);
        assert_eq!(s.worst_month, 0.01);

        let d = descriptive_stats(&[-0.10, 0.0, 0.0, 0.0]).unwrap();
        assert!((d.max_drawdown + 0.10).abs() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let dist = Normal::new(0.0, 0.02).unwrap();
        let xs: Vec<f64> = (0..10_000).map(|_| dist.sample(&mut rng)).collect();
        let g = descriptive_stats(&xs).unwrap();
        assert!((g.volatility / (0.02 * 12f64.sqrt()) - 1.0).abs() < 0.05);
        assert!((g.kurtosis - 3.0).abs() < 0.2);
        assert!(g.worst_month <= g.best_month);
        assert!(descriptive_stats(&[]).is_err());
    }

    #[test]
    fn quintile_examples() {
        let b: Vec<f64> = (1..=10).map(|v| v as f64).collect();
        let q = quintile_sort(&b).unwrap();
        assert_eq!(q.members[0], vec![0, 1]);
        assert_eq!(q.members[4], vec![8, 9]);
        let eq = quintile_sort(&[1.0; 10]).unwrap();
        assert_eq!(eq.members[0], vec![0, 1]);
        assert_eq!(eq.members[2], vec![4, 5]);
        assert!(quintile_sort(&[1.0; 4]).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let dist = Normal::new(1.0, 0.3).unwrap();
        let betas: Vec<f64> = (0..1000).map(|_| dist.sample(&mut rng)).collect();
        let q = quintile_sort(&betas).unwrap();
        let means = q.returns(&betas);
        assert!(means.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(q.members.iter().map(Vec::len).sum::<usize>(), 1000);
    }

    #[test]
    fn spec_parsing() {
        let s: ModelSpec = "MKT+SMB+HML".parse().unwrap();
        assert_eq!(s.k(), 3);
        assert_eq!(s.label(), "MKT+SMB+HML");
        assert!(ModelSpec::new(&["MKT"]).unwrap().is_nested_in(&s));
        assert!("".parse::<ModelSpec>().is_err());
    }
}
