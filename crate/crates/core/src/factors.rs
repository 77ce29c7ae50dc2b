//! Brown-minus-green factor construction and GARCH standardization.

use std::collections::HashMap;

use chrono::NaiveDate;
use rayon::prelude::*;

use crate::data::{FactorSeries, ReturnsPanel};
use crate::error::{Error, Result};
use crate::optim;

fn unit_interval(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::Domain(format!("{name} score {v} outside [0, 1]")));
    }
    Ok(())
}

/// Brown-green score from value-chain, public-perception and
/// non-adaptability sub-scores.
pub fn compute_bgs(vc: f64, pp: f64, na: f64) -> Result<f64> {
    unit_interval("vc", vc)?;
    unit_interval("pp", pp)?;
    unit_interval("na", na)?;
    let exposure = 0.7 * vc + 0.3 * pp;
    Ok(2.0 / 3.0 * exposure + na / 3.0 * exposure)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Bucket {
    SmallGreen,
    SmallNeutral,
    SmallBrown,
    BigGreen,
    BigNeutral,
    BigBrown,
}

impl Bucket {
    pub const ALL: [Bucket; 6] = [
        Bucket::SmallGreen,
        Bucket::SmallNeutral,
        Bucket::SmallBrown,
        Bucket::BigGreen,
        Bucket::BigNeutral,
        Bucket::BigBrown,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Bucket::SmallGreen => "SG",
            Bucket::SmallNeutral => "SN",
            Bucket::SmallBrown => "SB",
            Bucket::BigGreen => "BG",
            Bucket::BigNeutral => "BN",
            Bucket::BigBrown => "BB",
        }
    }

    fn from_parts(small: bool, tercile: Tercile) -> Self {
        match (small, tercile) {
            (true, Tercile::Green) => Bucket::SmallGreen,
            (true, Tercile::Neutral) => Bucket::SmallNeutral,
            (true, Tercile::Brown) => Bucket::SmallBrown,
            (false, Tercile::Green) => Bucket::BigGreen,
            (false, Tercile::Neutral) => Bucket::BigNeutral,
            (false, Tercile::Brown) => Bucket::BigBrown,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tercile {
    Green,
    Neutral,
    Brown,
}

/// Bucket of each asset; `None` for assets without both score and cap.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SortedBuckets {
    pub assignment: Vec<Option<Bucket>>,
}

impl SortedBuckets {
    pub fn members(&self, bucket: Bucket) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter(|(_, b)| **b == Some(bucket))
            .map(|(i, _)| i)
            .collect()
    }
}

pub const MIN_SORT_UNIVERSE: usize = 6;

/// Score terciles crossed with the cap median.
///
/// Assets are ranked by `(score, index)`, so callers that want
/// identifier-order tie breaks pass assets sorted by identifier. With
/// `k₁ = ⌈n/3⌉` and `k₂ = ⌈2n/3⌉`, an asset is Green when its rank is at most
/// `k₁` and its score is strictly below the score at rank `k₂`; Brown when its
/// rank exceeds `k₂` and its score is strictly above the score at rank `k₁`.
/// Assets tied across both breakpoints are therefore Neutral. Caps strictly
/// below the median are Small.
pub fn sort_universe(scores: &[Option<f64>], caps: &[Option<f64>]) -> Result<SortedBuckets> {
    if scores.len() != caps.len() {
        return Err(Error::Dimension(format!(
            "{} scores but {} caps",
            scores.len(),
            caps.len()
        )));
    }
    let mut usable = Vec::new();
    for (i, (s, c)) in scores.iter().zip(caps).enumerate() {
        if let (Some(s), Some(c)) = (s, c) {
            if s.is_nan() || c.is_nan() {
                return Err(Error::Domain(format!("NaN score or cap for asset {i}")));
            }
            usable.push(i);
        }
    }
    let n = usable.len();
    if n < MIN_SORT_UNIVERSE {
        return Err(Error::InsufficientUniverse {
            found: n,
            required: MIN_SORT_UNIVERSE,
        });
    }
    let score = |i: usize| scores[i].unwrap();
    let cap = |i: usize| caps[i].unwrap();

    let mut by_score = usable.clone();
    by_score.sort_by(|&a, &b| score(a).total_cmp(&score(b)).then(a.cmp(&b)));
    let k1 = n.div_ceil(3);
    let k2 = (2 * n).div_ceil(3);
    let q1 = score(by_score[k1 - 1]);
    let q2 = score(by_score[k2 - 1]);

    let mut sorted_caps: Vec<f64> = usable.iter().map(|&i| cap(i)).collect();
    sorted_caps.sort_by(f64::total_cmp);
    let median = if n % 2 == 1 {
        sorted_caps[n / 2]
    } else {
        0.5 * (sorted_caps[n / 2 - 1] + sorted_caps[n / 2])
    };

    let mut assignment = vec![None; scores.len()];
    for (r, &i) in by_score.iter().enumerate() {
        let rank = r + 1;
        let s = score(i);
        let tercile = if rank <= k1 && s < q2 {
            Tercile::Green
        } else if rank > k2 && s > q1 {
            Tercile::Brown
        } else {
            Tercile::Neutral
        };
        assignment[i] = Some(Bucket::from_parts(cap(i) < median, tercile));
    }
    Ok(SortedBuckets { assignment })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Weighting {
    Equal,
    #[default]
    Cap,
}

fn bucket_return(members: &[usize], returns: &[Option<f64>], caps: &[Option<f64>], weighting: Weighting) -> Option<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for &i in members {
        if let Some(r) = returns[i] {
            let w = match weighting {
                Weighting::Equal => 1.0,
                Weighting::Cap => caps[i]?,
            };
            num += w * r;
            den += w;
        }
    }
    (den > 0.0).then(|| num / den)
}

/// `½(R_SB + R_BB) − ½(R_SG + R_BG)`.
pub fn bmg_return(
    buckets: &SortedBuckets,
    returns: &[Option<f64>],
    caps: &[Option<f64>],
    weighting: Weighting,
) -> Result<f64> {
    let n = buckets.assignment.len();
    if returns.len() != n || caps.len() != n {
        return Err(Error::Dimension("buckets, returns and caps differ in length".into()));
    }
    let ret = |b: Bucket| {
        bucket_return(&buckets.members(b), returns, caps, weighting).ok_or(Error::DegenerateSort(b.label()))
    };
    let sb = ret(Bucket::SmallBrown)?;
    let bb = ret(Bucket::BigBrown)?;
    let sg = ret(Bucket::SmallGreen)?;
    let bg = ret(Bucket::BigGreen)?;
    Ok(0.5 * (sb + bb) - 0.5 * (sg + bg))
}

/// Month-end scores and market caps, indexed `[date][asset]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScorePanel {
    pub dates: Vec<NaiveDate>,
    pub assets: Vec<String>,
    pub vc: Vec<Vec<Option<f64>>>,
    pub pp: Vec<Vec<Option<f64>>>,
    pub na: Vec<Vec<Option<f64>>>,
    pub generic_score: Option<Vec<Vec<Option<f64>>>>,
    pub market_cap: Vec<Vec<Option<f64>>>,
}

impl ScorePanel {
    pub fn validate(&self) -> Result<()> {
        if self.dates.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain("score dates must be strictly increasing".into()));
        }
        let shape_ok = |m: &Vec<Vec<Option<f64>>>| {
            m.len() == self.dates.len() && m.iter().all(|r| r.len() == self.assets.len())
        };
        let mut grids = vec![&self.vc, &self.pp, &self.na, &self.market_cap];
        if let Some(g) = &self.generic_score {
            grids.push(g);
        }
        if !grids.iter().all(|g| shape_ok(g)) {
            return Err(Error::Dimension(format!(
                "score grids must be {} dates x {} assets",
                self.dates.len(),
                self.assets.len()
            )));
        }
        for (name, grid) in [("vc", &self.vc), ("pp", &self.pp), ("na", &self.na)] {
            for v in grid.iter().flatten().flatten() {
                unit_interval(name, *v)?;
            }
        }
        if self.market_cap.iter().flatten().flatten().any(|c| !(*c > 0.0 && c.is_finite())) {
            return Err(Error::Domain("market caps must be positive".into()));
        }
        if let Some(g) = &self.generic_score {
            if g.iter().flatten().flatten().any(|v| !v.is_finite()) {
                return Err(Error::Domain("generic scores must be finite".into()));
            }
        }
        Ok(())
    }

    /// Brown-green scores at a date; `None` unless all three sub-scores exist.
    pub fn bgs(&self, date: usize) -> Vec<Option<f64>> {
        (0..self.assets.len())
            .map(|a| match (self.vc[date][a], self.pp[date][a], self.na[date][a]) {
                (Some(v), Some(p), Some(n)) => compute_bgs(v, p, n).ok(),
                _ => None,
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Rebalance {
    /// Score each asset once, by its average over all score dates.
    Static,
    #[default]
    Monthly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScoreSource {
    #[default]
    Bgs,
    Generic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorBuildConfig {
    pub name: String,
    pub weighting: Weighting,
    pub rebalance: Rebalance,
    pub source: ScoreSource,
    /// Higher score means browner. When false, scores are negated first.
    pub brown_high: bool,
}

impl Default for FactorBuildConfig {
    fn default() -> Self {
        Self {
            name: "BMG".into(),
            weighting: Weighting::Cap,
            rebalance: Rebalance::Monthly,
            source: ScoreSource::Bgs,
            brown_high: true,
        }
    }
}

/// Builds the long-short factor: for each return month `t`, portfolios are
/// formed on the latest scores and caps dated strictly before `t`.
/// Months without a formation date are skipped.
pub fn build_bmg(scores: &ScorePanel, returns: &ReturnsPanel, cfg: &FactorBuildConfig) -> Result<FactorSeries> {
    scores.validate()?;
    let score_col: HashMap<&str, usize> = scores.assets.iter().enumerate().map(|(i, a)| (a.as_str(), i)).collect();
    // identifier order fixes tie breaks
    let mut order: Vec<usize> = (0..returns.n_assets()).collect();
    order.sort_by(|&a, &b| returns.assets()[a].cmp(&returns.assets()[b]));
    let cols: Vec<Option<usize>> = order.iter().map(|&a| score_col.get(returns.assets()[a].as_str()).copied()).collect();

    let raw_scores = |d: usize| -> Vec<Option<f64>> {
        match cfg.source {
            ScoreSource::Bgs => scores.bgs(d),
            ScoreSource::Generic => scores.generic_score.as_ref().map(|g| g[d].clone()).unwrap_or_else(|| vec![None; scores.assets.len()]),
        }
    };
    if cfg.source == ScoreSource::Generic && scores.generic_score.is_none() {
        return Err(Error::MissingInput("generic score column".into()));
    }
    let sign = if cfg.brown_high { 1.0 } else { -1.0 };

    let static_scores: Option<Vec<Option<f64>>> = (cfg.rebalance == Rebalance::Static).then(|| {
        let mut sum = vec![0.0; scores.assets.len()];
        let mut cnt = vec![0usize; scores.assets.len()];
        for d in 0..scores.dates.len() {
            for (a, s) in raw_scores(d).into_iter().enumerate() {
                if let Some(s) = s {
                    sum[a] += s;
                    cnt[a] += 1;
                }
            }
        }
        (0..sum.len()).map(|a| (cnt[a] > 0).then(|| sum[a] / cnt[a] as f64)).collect()
    });

    let months: Vec<(usize, usize)> = returns
        .dates()
        .iter()
        .enumerate()
        .filter_map(|(t, date)| {
            let k = scores.dates.partition_point(|d| d < date);
            (k > 0).then(|| (t, k - 1))
        })
        .collect();

    let values: Vec<f64> = months
        .par_iter()
        .map(|&(t, f)| {
            let base = static_scores.clone().unwrap_or_else(|| raw_scores(f));
            let s: Vec<Option<f64>> = cols.iter().map(|c| c.and_then(|c| base[c]).map(|v| sign * v)).collect();
            let caps: Vec<Option<f64>> = cols.iter().map(|c| c.and_then(|c| scores.market_cap[f][c])).collect();
            let r: Vec<Option<f64>> = order.iter().map(|&a| returns.get(a, t)).collect();
            let buckets = sort_universe(&s, &caps)?;
            bmg_return(&buckets, &r, &caps, cfg.weighting)
        })
        .collect::<Result<_>>()?;
    let dates = months.iter().map(|&(t, _)| returns.dates()[t]).collect();
    FactorSeries::new(dates, vec![cfg.name.clone()], vec![values])
}

/// `σ²(t) = ω + α R(t−1)² + β σ²(t−1)`, started at `initial_variance`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Garch11Params {
    pub omega: f64,
    pub alpha: f64,
    pub beta: f64,
    pub initial_variance: f64,
}

impl Garch11Params {
    pub fn new(omega: f64, alpha: f64, beta: f64, initial_variance: f64) -> Result<Self> {
        let p = Self {
            omega,
            alpha,
            beta,
            initial_variance,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0 && self.alpha >= 0.0 && self.beta >= 0.0 && self.alpha + self.beta < 1.0) {
            return Err(Error::Domain(format!("invalid GARCH(1,1) parameters {self:?}")));
        }
        if !(self.initial_variance > 0.0 && self.initial_variance.is_finite()) {
            return Err(Error::Domain("initial variance must be positive".into()));
        }
        Ok(())
    }

    pub fn unconditional_variance(&self) -> f64 {
        self.omega / (1.0 - self.alpha - self.beta)
    }

    pub fn conditional_variance(&self, series: &[f64]) -> Vec<f64> {
        let mut h = Vec::with_capacity(series.len());
        let mut prev = self.initial_variance;
        for t in 0..series.len() {
            if t > 0 {
                prev = self.omega + self.alpha * series[t - 1].powi(2) + self.beta * prev;
            }
            h.push(prev);
        }
        h
    }

    /// Gaussian log-likelihood of a zero-mean series.
    pub fn log_likelihood(&self, series: &[f64]) -> f64 {
        let ln2pi = (2.0 * std::f64::consts::PI).ln();
        self.conditional_variance(series)
            .iter()
            .zip(series)
            .map(|(h, r)| -0.5 * (ln2pi + h.ln() + r * r / h))
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Garch11Fit {
    pub params: Garch11Params,
    pub log_likelihood: f64,
    /// Best log-likelihood over the initialization grid.
    pub grid_log_likelihood: f64,
    pub iterations: u64,
}

pub const MIN_GARCH_OBS: usize = 24;

fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)
}

fn garch_from_theta(theta: &[f64], init: f64) -> Garch11Params {
    let (e1, e2) = (theta[1].exp(), theta[2].exp());
    let z = 1.0 + e1 + e2;
    Garch11Params {
        omega: theta[0].exp(),
        alpha: e1 / z,
        beta: e2 / z,
        initial_variance: init,
    }
}

fn garch_to_theta(p: &Garch11Params) -> Vec<f64> {
    let floor = 1e-8;
    let a = p.alpha.max(floor);
    let b = p.beta.max(floor);
    let rest = (1.0 - a - b).max(floor);
    vec![p.omega.ln(), (a / rest).ln(), (b / rest).ln()]
}

/// Maximum-likelihood GARCH(1,1) for a zero-mean series.
///
/// A coarse variance-targeted grid over `(α, β)` plus the default start
/// `(0.1·var, 0.05, 0.90)` seeds a Nelder-Mead search; the result is never
/// worse than the best grid point.
pub fn fit_garch11(series: &[f64]) -> Result<Garch11Fit> {
    if series.len() < MIN_GARCH_OBS {
        return Err(Error::InsufficientSample {
            found: series.len(),
            required: MIN_GARCH_OBS,
        });
    }
    if series.iter().any(|r| !r.is_finite()) {
        return Err(Error::DegenerateData("non-finite return".into()));
    }
    let var = sample_variance(series);
    let mean_sq = series.iter().map(|r| r * r).sum::<f64>() / series.len() as f64;
    if !(var > 1e-14 * mean_sq) {
        return Err(Error::DegenerateData("series has zero variance".into()));
    }

    let mut candidates = vec![Garch11Params {
        omega: 0.1 * var,
        alpha: 0.05,
        beta: 0.90,
        initial_variance: var,
    }];
    for &alpha in &[0.0, 0.02, 0.05, 0.1, 0.15, 0.2, 0.3] {
        for &beta in &[0.0, 0.3, 0.5, 0.7, 0.8, 0.85, 0.9, 0.95] {
            if alpha + beta < 0.995 {
                candidates.push(Garch11Params {
                    omega: var * (1.0 - alpha - beta),
                    alpha,
                    beta,
                    initial_variance: var,
                });
            }
        }
    }
    let grid_best = candidates
        .iter()
        .map(|p| (p.log_likelihood(series), *p))
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .expect("non-empty grid");

    let objective = |theta: &[f64]| -garch_from_theta(theta, var).log_likelihood(series);
    let found = optim::minimize(objective, &garch_to_theta(&grid_best.1), 0.5, 20_000)?;
    let fitted = garch_from_theta(&found.x, var);
    let ll = fitted.log_likelihood(series);
    let (params, log_likelihood) = if ll >= grid_best.0 {
        (fitted, ll)
    } else {
        (grid_best.1, grid_best.0)
    };
    Ok(Garch11Fit {
        params,
        log_likelihood,
        grid_log_likelihood: grid_best.0,
        iterations: found.iterations,
    })
}

/// Rescales returns to 1% conditional volatility: `R(t) / (100·σ(t))`.
pub fn standardize_factor(series: &[f64], params: &Garch11Params) -> Result<Vec<f64>> {
    params.validate()?;
    Ok(params
        .conditional_variance(series)
        .iter()
        .zip(series)
        .map(|(h, r)| r / (100.0 * h.sqrt()))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn bgs_examples() {
        assert_eq!(compute_bgs(0.0, 0.0, 0.0).unwrap(), 0.0);
        assert!((compute_bgs(1.0, 1.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((compute_bgs(1.0, 0.0, 0.0).unwrap() - 0.46667).abs() < 1e-5);
        assert!(compute_bgs(1.1, 0.0, 0.0).is_err());
        assert!(compute_bgs(0.5, -0.1, 0.0).is_err());
    }

    #[test]
    fn six_asset_sort() {
        let s: Vec<_> = [0.1, 0.2, 0.4, 0.5, 0.8, 0.9].iter().map(|v| Some(*v)).collect();
        let c: Vec<_> = (1..=6).map(|v| Some(v as f64)).collect();
        let b = sort_universe(&s, &c).unwrap();
        use Bucket::*;
        assert_eq!(
            b.assignment,
            vec![Some(SmallGreen), Some(SmallGreen), Some(SmallNeutral), Some(BigNeutral), Some(BigBrown), Some(BigBrown)]
        );
    }

    #[test]
    fn equal_scores_are_neutral() {
        let s = vec![Some(0.5); 9];
        let c: Vec<_> = (1..=9).map(|v| Some(v as f64)).collect();
        let b = sort_universe(&s, &c).unwrap();
        assert!(b.assignment.iter().all(|a| matches!(a, Some(Bucket::SmallNeutral | Bucket::BigNeutral))));
    }

    #[test]
    fn median_cap_goes_big() {
        let s: Vec<_> = (0..7).map(|v| Some(v as f64)).collect();
        let c: Vec<_> = (1..=7).map(|v| Some(v as f64)).collect();
        let b = sort_universe(&s, &c).unwrap();
        assert_eq!(b.assignment[3], Some(Bucket::BigNeutral));
    }

    #[test]
    fn sort_needs_six_assets() {
        let s = vec![Some(0.1), Some(0.2), None, Some(0.4), Some(0.5), Some(0.6)];
        let c = vec![Some(1.0); 6];
        assert!(matches!(
            sort_universe(&s, &c),
            Err(Error::InsufficientUniverse { found: 5, .. })
        ));
    }

    /// Independent oracle: explicit ranks, tercile cut counts, pairwise median test.
    fn oracle(scores: &[f64], caps: &[f64]) -> Vec<Bucket> {
        let n = scores.len();
        let rank = |i: usize| {
            1 + (0..n).filter(|&j| scores[j] < scores[i] || (scores[j] == scores[i] && j < i)).count()
        };
        let k1 = n.div_ceil(3);
        let k2 = (2 * n).div_ceil(3);
        let at_rank = |k: usize| scores[(0..n).find(|&i| rank(i) == k).unwrap()];
        let above = |i: usize| (0..n).filter(|&j| caps[j] > caps[i]).count();
        (0..n)
            .map(|i| {
                let r = rank(i);
                let t = if r <= k1 && scores[i] < at_rank(k2) {
                    Tercile::Green
                } else if r > k2 && scores[i] > at_rank(k1) {
                    Tercile::Brown
                } else {
                    Tercile::Neutral
                };
                // distinct caps: strictly below the median iff at least half lie above
                let small = 2 * above(i) >= n;
                Bucket::from_parts(small, t)
            })
            .collect()
    }

    #[test]
    fn thirty_assets_match_rank_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        for _ in 0..50 {
            let s: Vec<f64> = (0..30).map(|_| (rng.random_range(0..10) as f64) / 10.0).collect();
            let c: Vec<f64> = (0..30).map(|_| rng.random_range(1.0..100.0)).collect();
            let got = sort_universe(&s.iter().map(|v| Some(*v)).collect::<Vec<_>>(), &c.iter().map(|v| Some(*v)).collect::<Vec<_>>()).unwrap();
            let want = oracle(&s, &c);
            assert_eq!(got.assignment, want.into_iter().map(Some).collect::<Vec<_>>());
        }
    }

    fn random_month(rng: &mut ChaCha8Rng, n: usize) -> (Vec<Option<f64>>, Vec<Option<f64>>, Vec<Option<f64>>) {
        let s = (0..n).map(|_| Some(rng.random::<f64>())).collect();
        let c = (0..n).map(|_| Some(rng.random_range(1.0..50.0))).collect();
        let r = (0..n).map(|_| Some(rng.random_range(-0.1..0.1))).collect();
        (s, c, r)
    }

    #[test]
    fn bmg_arithmetic() {
        use Bucket::*;
        let buckets = SortedBuckets {
            assignment: vec![Some(SmallBrown), Some(BigBrown), Some(SmallGreen), Some(BigGreen)],
        };
        let caps = vec![Some(1.0); 4];
        let r = vec![Some(0.02), Some(0.02), Some(0.01), Some(0.01)];
        assert!((bmg_return(&buckets, &r, &caps, Weighting::Equal).unwrap() - 0.01).abs() < 1e-15);
        let flat = vec![Some(0.03); 4];
        assert!(bmg_return(&buckets, &flat, &caps, Weighting::Cap).unwrap().abs() < 1e-15);
        let missing = SortedBuckets {
            assignment: vec![Some(SmallBrown), Some(BigBrown), Some(SmallGreen), Some(SmallGreen)],
        };
        assert!(matches!(
            bmg_return(&missing, &r, &caps, Weighting::Cap),
            Err(Error::DegenerateSort("BG"))
        ));
    }

    #[test]
    fn bmg_cap_weighted_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let (s, c, r) = random_month(&mut rng, 20);
        let b = sort_universe(&s, &c).unwrap();
        let wmean = |bk: Bucket| {
            let idx = b.members(bk);
            let num: f64 = idx.iter().map(|&i| c[i].unwrap() * r[i].unwrap()).sum();
            let den: f64 = idx.iter().map(|&i| c[i].unwrap()).sum();
            num / den
        };
        let want = 0.5 * (wmean(Bucket::SmallBrown) + wmean(Bucket::BigBrown))
            - 0.5 * (wmean(Bucket::SmallGreen) + wmean(Bucket::BigGreen));
        assert!((bmg_return(&b, &r, &c, Weighting::Cap).unwrap() - want).abs() < 1e-15);
    }

    fn simulate_garch(n: usize, omega: f64, alpha: f64, beta: f64, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut h = omega / (1.0 - alpha - beta);
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let z: f64 = StandardNormal.sample(&mut rng);
            let r = h.sqrt() * z;
            out.push(r);
            h = omega + alpha * r * r + beta * h;
        }
        out
    }

    #[test]
    fn garch_on_iid_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let xs: Vec<f64> = (0..5000).map(|_| { let z: f64 = StandardNormal.sample(&mut rng); 0.04 * z }).collect();
        let fit = fit_garch11(&xs).unwrap();
        let p = fit.params;
        assert!(fit.log_likelihood >= fit.grid_log_likelihood);
        // a persistent β with a vanishing α is observationally flat, so only the sum is checked
        assert!(p.alpha < 0.2, "{p:?}");
        let v = sample_variance(&xs);
        assert!((p.unconditional_variance() / v - 1.0).abs() < 0.15, "{p:?}");
    }

    #[test]
    fn garch_recovers_simulated_parameters() {
        let xs = simulate_garch(10_000, 1e-5, 0.05, 0.90, 9);
        let p = fit_garch11(&xs).unwrap().params;
        assert!((p.alpha - 0.05).abs() < 0.05, "{p:?}");
        assert!((p.beta - 0.90).abs() < 0.05, "{p:?}");
    }

    #[test]
    fn garch_rejects_constant_and_short() {
        assert!(matches!(fit_garch11(&[0.01; 50]), Err(Error::DegenerateData(_))));
        assert!(matches!(fit_garch11(&[0.01; 10]), Err(Error::InsufficientSample { .. })));
    }

    #[test]
    fn standardization_examples() {
        // ω chosen so σ stays at 1%: ω = 1e-4 (1 − α − β) with r² = σ²
        let p = Garch11Params::new(1e-4 * 0.1, 0.0, 0.9, 1e-4).unwrap();
        let out = standardize_factor(&[0.02; 5], &p).unwrap();
        assert!(out.iter().all(|v| (v - 0.02).abs() < 1e-12));

        let xs = simulate_garch(200, 1e-5, 0.05, 0.9, 3);
        let p = Garch11Params::new(1e-5, 0.05, 0.9, 2e-4).unwrap();
        let a = standardize_factor(&xs, &p).unwrap();
        let doubled: Vec<f64> = xs.iter().map(|x| 2.0 * x).collect();
        let p2 = Garch11Params::new(4e-5, 0.05, 0.9, 8e-4).unwrap();
        let b = standardize_factor(&doubled, &p2).unwrap();
        let same = standardize_factor(&doubled, &p).unwrap();
        assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-12));
        // doubling the input under fixed params doubles only the numerator
        let h = p.conditional_variance(&doubled);
        assert!(same.iter().zip(&doubled).zip(&h).all(|((s, r), h)| (s - r / (100.0 * h.sqrt())).abs() < 1e-15));

        let back: Vec<f64> = a.iter().zip(p.conditional_variance(&xs)).map(|(s, h)| s * 100.0 * h.sqrt()).collect();
        assert!(back.iter().zip(&xs).all(|(x, y)| (x - y).abs() <= 1e-15 * y.abs().max(1e-300)));
    }

    #[test]
    fn build_bmg_monthly_and_static() {
        use crate::data::month_ends;
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let n = 24;
        let dates = month_ends(NaiveDate::from_ymd_opt(2015, 1, 1).unwrap(), 6);
        let assets: Vec<String> = (0..n).map(|i| format!("A{i:02}")).collect();
        let grid = |rng: &mut ChaCha8Rng| -> Vec<Vec<Option<f64>>> {
            (0..dates.len()).map(|_| (0..n).map(|_| Some(rng.random::<f64>())).collect()).collect()
        };
        let panel = ScorePanel {
            dates: dates.clone(),
            assets: assets.clone(),
            vc: grid(&mut rng),
            pp: grid(&mut rng),
            na: grid(&mut rng),
            generic_score: None,
            market_cap: (0..dates.len()).map(|_| (0..n).map(|_| Some(rng.random_range(1.0..10.0))).collect()).collect(),
        };
        let rets = ReturnsPanel::new(
            dates.clone(),
            assets,
            (0..n).map(|_| (0..dates.len()).map(|_| Some(rng.random_range(-0.1..0.1))).collect()).collect(),
        )
        .unwrap();
        let monthly = build_bmg(&panel, &rets, &FactorBuildConfig::default()).unwrap();
        assert_eq!(monthly.dates(), &dates[1..]);

        // month 2 by hand: formation on date index 0
        let s = panel.bgs(0);
        let b = sort_universe(&s, &panel.market_cap[0]).unwrap();
        let r: Vec<Option<f64>> = (0..n).map(|a| rets.get(a, 1)).collect();
        let want = bmg_return(&b, &r, &panel.market_cap[0], Weighting::Cap).unwrap();
        assert!((monthly.column(0)[0] - want).abs() < 1e-15);

        let cfg = FactorBuildConfig {
            rebalance: Rebalance::Static,
            ..FactorBuildConfig::default()
        };
        assert_eq!(build_bmg(&panel, &rets, &cfg).unwrap().len(), 5);

        // flipping the orientation swaps the legs
        let flipped = FactorBuildConfig {
            brown_high: false,
            weighting: Weighting::Equal,
            ..FactorBuildConfig::default()
        };
        let ew = FactorBuildConfig {
            weighting: Weighting::Equal,
            ..FactorBuildConfig::default()
        };
        let a = build_bmg(&panel, &rets, &ew).unwrap();
        let f = build_bmg(&panel, &rets, &flipped).unwrap();
        // with 24 distinct scores the terciles are symmetric, so the factor negates
        for (x, y) in a.column(0).iter().zip(f.column(0)) {
            assert!((x + y).abs() < 1e-15);
        }
    }
}
