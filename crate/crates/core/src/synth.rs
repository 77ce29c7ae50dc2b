//! Seeded synthetic panels and universes with known parameters.

use chrono::NaiveDate;
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal, StandardNormal};

use crate::data::{month_ends, FactorSeries, ReturnsPanel};
use crate::error::{Error, Result};
use crate::factors::ScorePanel;
use crate::linalg::FactorCovarianceModel;
use crate::minvar::CarbonIntensity;

/// Cross-sectional distribution and dynamics of one factor loading.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadingSpec {
    pub mean: f64,
    pub dispersion: f64,
    /// Monthly random-walk step; zero keeps the loading fixed.
    pub step_sd: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorSpec {
    pub name: String,
    pub mean: f64,
    pub vol: f64,
    pub loading: LoadingSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub n_assets: usize,
    pub n_months: usize,
    pub start: NaiveDate,
    pub factors: Vec<FactorSpec>,
    pub alpha_sd: f64,
    /// Monthly idiosyncratic volatility drawn uniformly from this range.
    pub idio_vol: (f64, f64),
    pub seed: u64,
}

impl SynthSpec {
    /// MKT and BMG with static loadings.
    pub fn two_factor(n_assets: usize, n_months: usize, seed: u64) -> Self {
        Self {
            n_assets,
            n_months,
            start: NaiveDate::from_ymd_opt(2010, 1, 31).expect("valid date"),
            factors: vec![
                FactorSpec {
                    name: "MKT".into(),
                    mean: 0.006,
                    vol: 0.045,
                    loading: LoadingSpec {
                        mean: 1.0,
                        dispersion: 0.3,
                        step_sd: 0.0,
                    },
                },
                FactorSpec {
                    name: "BMG".into(),
                    mean: 0.0,
                    vol: 0.025,
                    loading: LoadingSpec {
                        mean: 0.0,
                        dispersion: 0.5,
                        step_sd: 0.0,
                    },
                },
            ],
            alpha_sd: 0.0,
            idio_vol: (0.03, 0.08),
            seed,
        }
    }

    pub fn with_step_sd(mut self, factor: usize, step_sd: f64) -> Self {
        self.factors[factor].loading.step_sd = step_sd;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_assets == 0 || self.n_months == 0 || self.factors.is_empty() {
            return Err(Error::Domain("synthetic panel needs assets, months and factors".into()));
        }
        for f in &self.factors {
            if !(f.vol > 0.0) || !(f.loading.dispersion >= 0.0) || !(f.loading.step_sd >= 0.0) {
                return Err(Error::Domain(format!("invalid settings for factor {}", f.name)));
            }
        }
        let (lo, hi) = self.idio_vol;
        if !(lo >= 0.0 && hi >= lo) || !(self.alpha_sd >= 0.0) {
            return Err(Error::Domain("invalid idiosyncratic volatility range".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrueParameters {
    pub alphas: Vec<f64>,
    /// Indexed `[asset][date][factor]`.
    pub betas: Vec<Vec<Vec<f64>>>,
    pub idio_vol: Vec<f64>,
}

impl TrueParameters {
    /// Loading of `asset` on `factor` at the first date.
    pub fn initial_beta(&self, asset: usize, factor: usize) -> f64 {
        self.betas[asset][0][factor]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthPanel {
    pub returns: ReturnsPanel,
    pub factors: FactorSeries,
    pub truth: TrueParameters,
}

pub fn asset_name(i: usize) -> String {
    format!("A{i:04}")
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// `r_i(t) = a_i + sum_j b_ij(t) f_j(t) + e_i(t)`, with iid Gaussian factors.
pub fn generate_panel(spec: &SynthSpec) -> Result<SynthPanel> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let t_len = spec.n_months;
    let k = spec.factors.len();
    let dates = month_ends(spec.start, t_len);

    let factor_values: Vec<Vec<f64>> = spec
        .factors
        .iter()
        .map(|f| (0..t_len).map(|_| f.mean + f.vol * normal(&mut rng)).collect())
        .collect();

    let mut alphas = Vec::with_capacity(spec.n_assets);
    let mut betas = Vec::with_capacity(spec.n_assets);
    let mut idio = Vec::with_capacity(spec.n_assets);
    let mut values = Vec::with_capacity(spec.n_assets);
    for _ in 0..spec.n_assets {
        let alpha = spec.alpha_sd * normal(&mut rng);
        let (lo, hi) = spec.idio_vol;
        let vol = if hi > lo { rng.random_range(lo..hi) } else { lo };
        let mut b: Vec<f64> = spec
            .factors
            .iter()
            .map(|f| f.loading.mean + f.loading.dispersion * normal(&mut rng))
            .collect();
        let mut path = Vec::with_capacity(t_len);
        let mut rets = Vec::with_capacity(t_len);
        for t in 0..t_len {
            if t > 0 {
                for (bj, f) in b.iter_mut().zip(&spec.factors) {
                    *bj += f.loading.step_sd * normal(&mut rng);
                }
            }
            let systematic: f64 = (0..k).map(|j| b[j] * factor_values[j][t]).sum();
            rets.push(Some(alpha + systematic + vol * normal(&mut rng)));
            path.push(b.clone());
        }
        alphas.push(alpha);
        betas.push(path);
        idio.push(vol);
        values.push(rets);
    }
    let names = spec.factors.iter().map(|f| f.name.clone()).collect();
    Ok(SynthPanel {
        returns: ReturnsPanel::new(dates.clone(), (0..spec.n_assets).map(asset_name).collect(), values)?,
        factors: FactorSeries::new(dates, names, factor_values)?,
        truth: TrueParameters {
            alphas,
            betas,
            idio_vol: idio,
        },
    })
}

/// Scores dated one month before each return, browner for higher loadings
/// on `factor`, with capitalizations compounding the asset returns.
pub fn generate_scores(panel: &SynthPanel, factor: usize, noise: f64, seed: u64) -> Result<ScorePanel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ret_dates = panel.returns.dates();
    let n = panel.returns.n_assets();
    let first = ret_dates
        .first()
        .ok_or_else(|| Error::Domain("empty panel".into()))?
        .checked_sub_months(chrono::Months::new(1))
        .ok_or_else(|| Error::Domain("date out of range".into()))?;
    let dates = month_ends(first, ret_dates.len());
    let cap0 = LogNormal::new(8.0, 1.0).map_err(|e| Error::Domain(e.to_string()))?;
    let mut caps: Vec<f64> = (0..n).map(|_| cap0.sample(&mut rng)).collect();
    let grid = |rng: &mut ChaCha8Rng, t: usize| -> Vec<Option<f64>> {
        (0..n)
            .map(|i| {
                let b = panel.truth.betas[i][t][factor];
                Some(1.0 / (1.0 + (-(b + noise * normal(rng))).exp()))
            })
            .collect()
    };
    let (mut vc, mut pp, mut na, mut mc) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for t in 0..dates.len() {
        vc.push(grid(&mut rng, t));
        pp.push(grid(&mut rng, t));
        na.push(grid(&mut rng, t));
        mc.push(caps.iter().map(|c| Some(*c)).collect());
        for (i, c) in caps.iter_mut().enumerate() {
            *c *= (1.0 + panel.returns.get(i, t).unwrap_or(0.0)).max(0.01);
        }
    }
    let scores = ScorePanel {
        dates,
        assets: panel.returns.assets().to_vec(),
        vc,
        pp,
        na,
        generic_score: None,
        market_cap: mc,
    };
    scores.validate()?;
    Ok(scores)
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniverseSpec {
    pub n_assets: usize,
    pub sigma_mkt: f64,
    pub sigma_bmg: f64,
    pub beta_range: (f64, f64),
    pub gamma_sd: f64,
    /// Annualized idiosyncratic volatility range.
    pub idio_vol: (f64, f64),
    pub seed: u64,
}

impl UniverseSpec {
    pub fn new(n_assets: usize, seed: u64) -> Self {
        Self {
            n_assets,
            sigma_mkt: 0.20,
            sigma_bmg: 0.10,
            beta_range: (0.5, 1.5),
            gamma_sd: 0.5,
            idio_vol: (0.05, 0.30),
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthUniverse {
    pub model: FactorCovarianceModel,
    pub intensity: CarbonIntensity,
    pub market_cap: Vec<f64>,
}

/// Cross-section for optimizer tests. Intensities rise with the carbon loading.
pub fn generate_universe(spec: &UniverseSpec) -> Result<SynthUniverse> {
    let n = spec.n_assets;
    let (blo, bhi) = spec.beta_range;
    let (vlo, vhi) = spec.idio_vol;
    if n == 0 || !(bhi > blo) || !(vhi > vlo && vlo > 0.0) || !(spec.gamma_sd >= 0.0) {
        return Err(Error::Domain("invalid universe parameters".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let gamma_dist = Normal::new(0.0, spec.gamma_sd).map_err(|e| Error::Domain(e.to_string()))?;
    let cap_dist = LogNormal::new(8.0, 1.2).map_err(|e| Error::Domain(e.to_string()))?;
    let mut beta = DVector::zeros(n);
    let mut gamma = DVector::zeros(n);
    let mut vol = DVector::zeros(n);
    let mut ci = DVector::zeros(n);
    let mut caps = Vec::with_capacity(n);
    for i in 0..n {
        beta[i] = rng.random_range(blo..bhi);
        gamma[i] = gamma_dist.sample(&mut rng);
        vol[i] = rng.random_range(vlo..vhi);
        let z = normal(&mut rng);
        ci[i] = (5.0 + 1.5 * gamma[i] + 0.7 * z).exp();
        caps.push(cap_dist.sample(&mut rng));
    }
    Ok(SynthUniverse {
        model: FactorCovarianceModel::from_idio_vol(beta, gamma, spec.sigma_mkt, spec.sigma_bmg, &vol)?,
        intensity: CarbonIntensity::new(ci)?,
        market_cap: caps,
    })
}
