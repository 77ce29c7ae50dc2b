use std::collections::HashMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use log::{info, warn};
use nalgebra::DVector;
use rayon::prelude::*;

use carbon_risk::enhanced_index::{
    group_exposure, te_linearity_report, te_optimize, Benchmark, BenchmarkKind, IndexConstraint,
};
use carbon_risk::factors::{
    build_bmg as build_factor, fit_garch11, standardize_factor, FactorBuildConfig, Rebalance, ScoreSource, Weighting,
};
use carbon_risk::io::{self, fmt_date, fmt_num, Table, UniverseTable};
use carbon_risk::kalman::{aggregate_betas, forecast_error_compare, mle_fit, Aggregation};
use carbon_risk::minvar::{
    gmv_capm, gmv_two_factor, mv_capm_long_only, mv_carbon_constrained, mv_two_factor_long_only,
    mv_with_intensity_exclusion, waci, CarbonIntensity,
};
use carbon_risk::regression::{
    aligned_sample, batch_compare, descriptive_stats, factor_correlation, ols_fit, ModelSpec,
};
use carbon_risk::synth::{generate_panel, generate_scores, generate_universe, SynthSpec, UniverseSpec};
use carbon_risk::{kalman, Error};

use crate::{
    BuildBmgArgs, ConstraintArg, FitKalmanArgs, FitOlsArgs, OptimizeIndexArgs, OptimizeMvArgs, RebalanceArg,
    ReportArgs, SourceArg, SynthArgs, WeightingArg,
};

fn out_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).with_context(|| format!("creating {}", path.display()))
}

/// Inclusive grid `start:stop:step`.
pub fn parse_sweep(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        bail!(Error::Domain(format!("sweep {s:?} is not start:stop:step")));
    }
    let p = |i: usize| -> Result<f64> {
        parts[i]
            .trim()
            .parse::<f64>()
            .map_err(|_| Error::Domain(format!("bad sweep bound {:?}", parts[i])).into())
    };
    let (start, stop, step) = (p(0)?, p(1)?, p(2)?);
    if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
        bail!(Error::Domain(format!("sweep {s:?} needs start <= stop and step > 0")));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize;
    if count > 100_000 {
        bail!(Error::Domain(format!("sweep {s:?} has too many points")));
    }
    Ok((0..=count).map(|k| start + k as f64 * step).collect())
}

pub fn build_bmg(a: BuildBmgArgs) -> Result<()> {
    let scores = io::read_scores(&a.scores, &a.caps)?;
    let returns = io::read_returns(&a.returns)?;
    let cfg = FactorBuildConfig {
        name: a.name.clone(),
        weighting: match a.weighting {
            WeightingArg::Cap => Weighting::Cap,
            WeightingArg::Equal => Weighting::Equal,
        },
        rebalance: match a.rebalance {
            RebalanceArg::Monthly => Rebalance::Monthly,
            RebalanceArg::Static => Rebalance::Static,
        },
        source: match a.source {
            SourceArg::Bgs => ScoreSource::Bgs,
            SourceArg::Generic => ScoreSource::Generic,
        },
        brown_high: !a.brown_low,
    };
    let mut factor = build_factor(&scores, &returns, &cfg)?;
    if a.garch {
        let series = factor.column(0).to_vec();
        let fit = fit_garch11(&series)?;
        info!("GARCH(1,1) {:?}", fit.params);
        factor = factor.with_factor(&format!("{}_GARCH", a.name), standardize_factor(&series, &fit.params)?)?;
    }
    if let Some(m) = &a.merge {
        factor = io::read_factors(m)?.merge(&factor)?;
    }
    if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        out_dir(parent)?;
    }
    io::write_factors(&a.out, &factor)?;
    println!("{} months of {} written to {}", factor.len(), a.name, a.out.display());
    Ok(())
}

pub fn fit_ols(a: FitOlsArgs) -> Result<()> {
    let panel = io::read_returns(&a.returns)?;
    let factors = io::read_factors(&a.factors)?;
    let specs: Vec<ModelSpec> = a.models.iter().map(|m| m.parse()).collect::<carbon_risk::Result<_>>()?;
    out_dir(&a.out)?;

    let fits: Vec<Vec<(String, carbon_risk::regression::OlsFit)>> = (0..panel.n_assets())
        .into_par_iter()
        .map(|i| {
            specs
                .iter()
                .filter_map(|s| match ols_fit(panel.dates(), panel.series(i), &factors, s, a.min_obs) {
                    Ok(f) => Some((panel.assets()[i].clone(), f)),
                    Err(e) => {
                        warn!("{} {}: {e}", panel.assets()[i], s.label());
                        None
                    }
                })
                .collect()
        })
        .collect();
    let fits: Vec<_> = fits.into_iter().flatten().collect();
    io::write_table(&a.out.join("ols_fits.csv"), &io::ols_fit_table(&fits))?;

    let pairs: Vec<(ModelSpec, ModelSpec)> = specs
        .iter()
        .flat_map(|n| specs.iter().filter(|f| n.is_nested_in(f)).map(move |f| (n.clone(), f.clone())))
        .collect();
    if !pairs.is_empty() {
        let rows = batch_compare(&panel, &factors, &pairs, a.min_obs);
        let mut t = Table::new(&["nested", "full", "n_assets", "mean_adj_r2_diff", "share_10", "share_5", "share_1"]);
        for r in rows {
            t.push(vec![
                r.nested,
                r.full,
                r.n_assets.to_string(),
                fmt_num(r.mean_adj_r2_diff),
                fmt_num(r.share_10),
                fmt_num(r.share_5),
                fmt_num(r.share_1),
            ]);
        }
        io::write_table(&a.out.join(io::BATCH_COMPARE_FILE), &t)?;
    }

    match factor_correlation(&factors) {
        Ok(c) => {
            let mut header = vec!["factor".to_string()];
            header.extend(c.names.iter().cloned());
            let mut t = Table::new(&header);
            for i in 0..c.names.len() {
                let mut row = vec![c.names[i].clone()];
                row.extend((0..c.names.len()).map(|j| format!("{:.4}{}", c.corr[(i, j)], c.stars(i, j))));
                t.push(row);
            }
            io::write_table(&a.out.join(io::CORRELATION_FILE), &t)?;
        }
        Err(e) => warn!("factor correlation skipped: {e}"),
    }

    let mut t = Table::new(&["factor", "mean", "volatility", "skewness", "kurtosis", "max_drawdown", "best_month", "worst_month"]);
    for (i, name) in factors.names().iter().enumerate() {
        let s = descriptive_stats(factors.column(i))?;
        t.push(vec![
            name.clone(),
            fmt_num(s.mean),
            fmt_num(s.volatility),
            fmt_num(s.skewness),
            fmt_num(s.kurtosis),
            fmt_num(s.max_drawdown),
            fmt_num(s.best_month),
            fmt_num(s.worst_month),
        ]);
    }
    io::write_table(&a.out.join(io::FACTOR_STATS_FILE), &t)?;
    println!("{} fits over {} assets written to {}", fits.len(), panel.n_assets(), a.out.display());
    Ok(())
}

struct AssetKalman {
    asset: String,
    dates: Vec<chrono::NaiveDate>,
    fit: kalman::MleFit,
    errors: kalman::ForecastErrors,
}

pub fn fit_kalman(a: FitKalmanArgs) -> Result<()> {
    let panel = io::read_returns(&a.returns)?;
    let factors = io::read_factors(&a.factors)?;
    let spec: ModelSpec = a.model.parse()?;
    let mode: Aggregation = a.aggregate.parse()?;
    out_dir(&a.out)?;

    let results: Vec<carbon_risk::Result<AssetKalman>> = (0..panel.n_assets())
        .into_par_iter()
        .map(|i| {
            let sample = aligned_sample(panel.dates(), panel.series(i), &factors, spec.factors())?;
            let fit = mle_fit(&sample.y, &sample.design)?;
            let ols = ols_fit(panel.dates(), panel.series(i), &factors, &spec, kalman::MIN_KALMAN_OBS)?;
            let errors = forecast_error_compare(&ols, &fit.filter, a.burn_in)?;
            Ok(AssetKalman {
                asset: panel.assets()[i].clone(),
                dates: sample.dates,
                fit,
                errors,
            })
        })
        .collect();
    let mut fitted = Vec::new();
    let mut first_err = None;
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(f) => fitted.push(f),
            Err(e) => {
                warn!("{} skipped: {e}", panel.assets()[i]);
                first_err.get_or_insert(e);
            }
        }
    }
    if fitted.is_empty() {
        return Err(first_err.map_or_else(|| anyhow::anyhow!("no assets in panel"), Into::into));
    }

    let outputs: Vec<io::KalmanOutput<'_>> = fitted
        .iter()
        .map(|f| io::KalmanOutput {
            asset: &f.asset,
            dates: &f.dates,
            fit: &f.fit,
        })
        .collect();
    io::write_table(&a.out.join("kalman_paths.csv"), &io::kalman_path_table(spec.factors(), &outputs))?;
    io::write_table(&a.out.join("kalman_hyper.csv"), &io::hyperparameter_table(spec.factors(), &outputs))?;
    let mut t = Table::new(&["asset", "mae_ols", "rmse_ols", "mae_ssm", "rmse_ssm"]);
    for f in &fitted {
        let e = f.errors;
        t.push(vec![f.asset.clone(), fmt_num(e.mae_ols), fmt_num(e.rmse_ols), fmt_num(e.mae_ssm), fmt_num(e.rmse_ssm)]);
    }
    io::write_table(&a.out.join("kalman_forecast.csv"), &t)?;

    if let Some(gpath) = &a.groups {
        write_group_paths(&a.out, gpath, panel.dates(), &fitted, spec.k(), mode)?;
    }
    println!("{} of {} assets fitted, outputs in {}", fitted.len(), panel.n_assets(), a.out.display());
    Ok(())
}

/// Aggregates the last state coordinate over assets observed on every date.
fn write_group_paths(
    out: &Path,
    gpath: &Path,
    dates: &[chrono::NaiveDate],
    fitted: &[AssetKalman],
    coord: usize,
    mode: Aggregation,
) -> Result<()> {
    let gt = io::read_table(gpath)?;
    let (ac, gc) = (gt.require("asset")?, gt.require("group")?);
    let labels: HashMap<&str, &str> = gt.rows.iter().map(|r| (r[ac].as_str(), r[gc].as_str())).collect();
    let mut paths = Vec::new();
    let mut groups = Vec::new();
    for f in fitted {
        if f.dates.as_slice() != dates {
            warn!("{} not observed on every date; left out of group paths", f.asset);
            continue;
        }
        paths.push(f.fit.filter.filtered_path(coord));
        groups.push(labels.get(f.asset.as_str()).map(|g| g.to_string()));
    }
    let agg = aggregate_betas(&paths, &groups, mode)?;
    let mut t = Table::new(&["date", "group", "beta"]);
    for (g, series) in &agg {
        for (d, v) in dates.iter().zip(series) {
            t.push(vec![fmt_date(*d), g.clone(), fmt_num(*v)]);
        }
    }
    Ok(io::write_table(&out.join("kalman_groups.csv"), &t)?)
}

fn intensity_or_fail(u: &UniverseTable) -> Result<CarbonIntensity> {
    u.carbon_intensity()?
        .ok_or_else(|| Error::MissingInput("universe file has no intensity column".into()).into())
}

pub fn optimize_mv(a: OptimizeMvArgs) -> Result<()> {
    let u = io::read_universe(&a.universe)?;
    let model = u.model(a.sigma_mkt, a.sigma_bmg)?;
    let ci = u.carbon_intensity()?;
    out_dir(&a.out)?;

    struct Column {
        name: String,
        weights: DVector<f64>,
        variance: f64,
        threshold_mkt: Option<f64>,
        threshold_bmg: Option<f64>,
        lambda_bmg: Option<f64>,
    }
    let mut cols = Vec::new();
    if !a.long_only {
        let p = gmv_capm(&model)?;
        cols.push(Column {
            name: "GMV_CAPM".into(),
            weights: p.weights,
            variance: p.variance,
            threshold_mkt: Some(p.beta_star),
            threshold_bmg: None,
            lambda_bmg: None,
        });
    }
    let p = mv_capm_long_only(&model)?;
    cols.push(Column {
        name: "MV_CAPM".into(),
        weights: p.weights,
        variance: p.variance,
        threshold_mkt: Some(p.beta_star),
        threshold_bmg: None,
        lambda_bmg: None,
    });
    if !a.long_only {
        match gmv_two_factor(&model) {
            Ok(p) => cols.push(Column {
                name: "GMV_MKT+BMG".into(),
                weights: p.weights,
                variance: p.variance,
                threshold_mkt: Some(p.thresholds.beta_star),
                threshold_bmg: Some(p.thresholds.gamma_star),
                lambda_bmg: None,
            }),
            Err(e) => warn!("two-factor GMV skipped: {e}"),
        }
    }
    let p = mv_two_factor_long_only(&model)?;
    cols.push(Column {
        name: "MV_MKT+BMG".into(),
        weights: p.weights,
        variance: p.variance,
        threshold_mkt: Some(p.thresholds.beta_star),
        threshold_bmg: Some(p.thresholds.gamma_star),
        lambda_bmg: None,
    });
    if let Some(cap) = a.beta_cap {
        let p = mv_carbon_constrained(&model, cap)?;
        cols.push(Column {
            name: "MV_CAPPED".into(),
            weights: p.weights,
            variance: p.variance,
            threshold_mkt: None,
            threshold_bmg: None,
            lambda_bmg: Some(p.lambda_bmg),
        });
    }
    if let Some(ci_cap) = a.ci_cap {
        let p = mv_with_intensity_exclusion(&model, a.beta_cap.unwrap_or(f64::INFINITY), ci_cap, &intensity_or_fail(&u)?)?;
        cols.push(Column {
            name: "MV_EXCLUDED".into(),
            weights: p.weights,
            variance: p.variance,
            threshold_mkt: None,
            threshold_bmg: None,
            lambda_bmg: Some(p.lambda_bmg),
        });
    }

    let mut header = vec!["asset".to_string(), "beta_mkt".into(), "beta_bmg".into(), "idio_vol".into()];
    header.extend(cols.iter().map(|c| c.name.clone()));
    let mut comp = Table::new(&header);
    for i in 0..u.len() {
        let mut row = vec![u.assets[i].clone(), fmt_num(u.beta_mkt[i]), fmt_num(u.beta_bmg[i]), fmt_num(u.idio_vol[i])];
        row.extend(cols.iter().map(|c| fmt_num(c.weights[i])));
        comp.push(row);
    }
    io::write_table(&a.out.join(io::COMPOSITION_FILE), &comp)?;

    let opt = |v: Option<f64>| v.map(fmt_num).unwrap_or_default();
    let mut diag = Table::new(&[
        "portfolio",
        "variance",
        "volatility",
        "beta_mkt_exposure",
        "beta_bmg_exposure",
        "threshold_mkt",
        "threshold_bmg",
        "lambda_bmg",
        "waci",
    ]);
    for c in &cols {
        let w = ci.as_ref().map(|ci| waci(&c.weights, ci)).transpose()?;
        diag.push(vec![
            c.name.clone(),
            fmt_num(c.variance),
            fmt_num(c.variance.max(0.0).sqrt()),
            fmt_num(model.beta_mkt.dot(&c.weights)),
            fmt_num(model.beta_bmg.dot(&c.weights)),
            opt(c.threshold_mkt),
            opt(c.threshold_bmg),
            opt(c.lambda_bmg),
            opt(w),
        ]);
    }
    io::write_table(&a.out.join(io::MV_DIAGNOSTICS_FILE), &diag)?;

    if let Some(s) = &a.sweep {
        let caps = parse_sweep(s)?;
        let mut t = Table::new(&["beta_plus", "feasible", "lambda_bmg", "variance", "volatility", "carbon_beta"]);
        let sols: Vec<carbon_risk::Result<_>> = caps.par_iter().map(|&c| mv_carbon_constrained(&model, c)).collect();
        for (c, s) in caps.iter().zip(sols) {
            match s {
                Ok(p) => {
                    let pt = p.sweep_point(&model, *c);
                    t.push(vec![
                        fmt_num(*c),
                        "true".into(),
                        fmt_num(pt.lambda_bmg),
                        fmt_num(pt.variance),
                        fmt_num(pt.variance.max(0.0).sqrt()),
                        fmt_num(pt.carbon_beta),
                    ]);
                }
                Err(e) if e.kind() == carbon_risk::ErrorKind::Infeasible => {
                    t.push(vec![fmt_num(*c), "false".into(), String::new(), String::new(), String::new(), String::new()]);
                }
                Err(e) => return Err(e.into()),
            }
        }
        io::write_table(&a.out.join(io::MV_SWEEP_FILE), &t)?;
    }
    println!("{} portfolios written to {}", cols.len(), a.out.display());
    Ok(())
}

fn benchmark(spec: &str, u: &UniverseTable) -> Result<Benchmark> {
    match spec {
        "ew" => Ok(Benchmark::equal_weight(u.len())?),
        "cw" => {
            let caps = u
                .cap
                .as_ref()
                .ok_or_else(|| Error::MissingInput("universe file has no cap column".into()))?;
            Ok(Benchmark::cap_weight(caps)?)
        }
        path => {
            let weights = io::read_weights(Path::new(path))?;
            let idx: HashMap<&str, usize> = u.assets.iter().enumerate().map(|(i, a)| (a.as_str(), i)).collect();
            let mut b = DVector::zeros(u.len());
            for (asset, w) in weights {
                let i = idx
                    .get(asset.as_str())
                    .ok_or_else(|| Error::Mapping(format!("benchmark asset {asset} not in universe")))?;
                b[*i] = w;
            }
            Ok(Benchmark::new(b, BenchmarkKind::Custom)?)
        }
    }
}

pub fn optimize_index(a: OptimizeIndexArgs) -> Result<()> {
    let u = io::read_universe(&a.universe)?;
    let model = u.model(a.sigma_mkt, a.sigma_bmg)?;
    let ci = u.carbon_intensity()?;
    let b = benchmark(&a.benchmark, &u)?;
    let need_cap = || a.cap.ok_or_else(|| Error::MissingInput("--cap is required for this constraint".into()));
    let need_m = || a.m.ok_or_else(|| Error::MissingInput("--m is required for this constraint".into()));
    let constraint = match a.constraint {
        ConstraintArg::None => IndexConstraint::None,
        ConstraintArg::Relative => IndexConstraint::RelativeCap(need_cap()?),
        ConstraintArg::Absolute => IndexConstraint::AbsoluteCap(need_cap()?),
        ConstraintArg::ExcludeM => IndexConstraint::ExcludeTop(need_m()?),
        ConstraintArg::ExcludeWeightedM => IndexConstraint::ExcludeWeightedTop(need_m()?),
    };
    out_dir(&a.out)?;

    let sol = te_optimize(&model, &b, constraint, ci.as_ref())?;
    let mut w = Table::new(&["asset", "benchmark", "portfolio", "active", "scaled_beta_bmg"]);
    for i in 0..u.len() {
        let (bi, xi) = (b.weights()[i], sol.weights[i]);
        w.push(vec![
            u.assets[i].clone(),
            fmt_num(bi),
            fmt_num(xi),
            fmt_num(xi - bi),
            fmt_num(sol.diagnostics.scaled_betas[i]),
        ]);
    }
    io::write_table(&a.out.join(io::INDEX_WEIGHTS_FILE), &w)?;

    let d = &sol.diagnostics;
    let mut diag = Table::new(&["metric", "value"]);
    for (k, v) in [
        ("tracking_error", d.tracking_error),
        ("active_share", d.active_share),
        ("excluded_count", d.excluded_count as f64),
        ("carbon_beta_benchmark", model.beta_bmg.dot(b.weights())),
        ("carbon_beta_portfolio", model.beta_bmg.dot(&sol.weights)),
        ("delta_bmg", d.delta_bmg),
        ("lambda_bmg", d.lambda_bmg),
    ] {
        diag.push(vec![k.into(), fmt_num(v)]);
    }
    if let Some(wc) = d.waci {
        diag.push(vec!["waci".into(), fmt_num(wc)]);
    }
    io::write_table(&a.out.join(io::INDEX_DIAGNOSTICS_FILE), &diag)?;

    if let Some(groups) = &u.group {
        let mut t = Table::new(&["group", "benchmark", "portfolio", "delta"]);
        for g in group_exposure(&sol.weights, b.weights(), groups)? {
            t.push(vec![g.group, fmt_num(g.benchmark), fmt_num(g.portfolio), fmt_num(g.delta)]);
        }
        io::write_table(&a.out.join("index_groups.csv"), &t)?;
    }

    if let Some(s) = &a.sweep {
        let targets = parse_sweep(s)?;
        let rep = te_linearity_report(&model, &b, &targets, ci.as_ref())?;
        let mut t = Table::new(&[
            "delta_target",
            "feasible",
            "delta_bmg",
            "tracking_error",
            "lambda_bmg",
            "active_share",
            "excluded_count",
            "waci",
        ]);
        for r in &rep.rows {
            let f = |v: f64| if r.feasible { fmt_num(v) } else { String::new() };
            t.push(vec![
                fmt_num(r.delta_target),
                r.feasible.to_string(),
                f(r.delta_bmg),
                f(r.tracking_error),
                f(r.lambda_bmg),
                f(r.active_share),
                if r.feasible { r.excluded_count.to_string() } else { String::new() },
                r.waci.map(fmt_num).unwrap_or_default(),
            ]);
        }
        io::write_table(&a.out.join(io::INDEX_SWEEP_FILE), &t)?;
        let mut fit = Table::new(&["metric", "value"]);
        fit.push(vec!["slope".into(), fmt_num(rep.slope)]);
        fit.push(vec!["intercept".into(), fmt_num(rep.intercept)]);
        fit.push(vec!["r_squared".into(), fmt_num(rep.r_squared)]);
        fit.push(vec!["lambda_monotone".into(), rep.lambda_monotone().to_string()]);
        io::write_table(&a.out.join("index_sweep_fit.csv"), &fit)?;
    }
    println!(
        "tracking error {:.4}%, carbon beta reduced by {:.4}; outputs in {}",
        100.0 * d.tracking_error,
        d.delta_bmg,
        a.out.display()
    );
    Ok(())
}

pub fn synth(a: SynthArgs) -> Result<()> {
    let spec = SynthSpec::two_factor(a.assets, a.months, a.seed)
        .with_step_sd(0, a.mkt_step)
        .with_step_sd(1, a.bmg_step);
    let panel = generate_panel(&spec)?;
    let scores = generate_scores(&panel, 1, 0.3, a.seed.wrapping_add(1))?;
    let uni = generate_universe(&UniverseSpec::new(a.assets, a.seed.wrapping_add(2)))?;
    out_dir(&a.out)?;
    io::write_returns(&a.out.join("returns.csv"), &panel.returns)?;
    io::write_factors(&a.out.join("factors.csv"), &panel.factors)?;
    io::write_scores(&a.out.join("scores.csv"), &a.out.join("caps.csv"), &scores)?;

    let table = UniverseTable {
        assets: panel.returns.assets().to_vec(),
        beta_mkt: uni.model.beta_mkt.iter().copied().collect(),
        beta_bmg: uni.model.beta_bmg.iter().copied().collect(),
        idio_vol: uni.model.idio_var.iter().map(|v| v.sqrt()).collect(),
        intensity: Some(uni.intensity.values().iter().copied().collect()),
        cap: Some(uni.market_cap.clone()),
        group: Some((0..a.assets).map(|i| Some(format!("S{}", i % 5 + 1))).collect()),
    };
    io::write_universe(&a.out.join("universe.csv"), &table)?;

    let mut truth = Table::new(&["asset", "alpha", "beta_mkt", "beta_bmg", "idio_vol"]);
    for (i, asset) in panel.returns.assets().iter().enumerate() {
        truth.push(vec![
            asset.clone(),
            fmt_num(panel.truth.alphas[i]),
            fmt_num(panel.truth.initial_beta(i, 0)),
            fmt_num(panel.truth.initial_beta(i, 1)),
            fmt_num(panel.truth.idio_vol[i]),
        ]);
    }
    io::write_table(&a.out.join("truth.csv"), &truth)?;
    println!("synthetic data for {} assets x {} months in {}", a.assets, a.months, a.out.display());
    Ok(())
}

pub fn report(a: ReportArgs) -> Result<()> {
    print!("{}", io::report(&a.dir)?);
    Ok(())
}
