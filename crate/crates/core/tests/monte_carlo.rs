//! Null and power simulations for the regression and state-space estimators.

use carbon_risk::kalman::{forecast_error_compare, mle_fit, DEFAULT_BURN_IN};
use carbon_risk::regression::{aligned_sample, batch_compare, f_test_nested, ols_fit, ModelSpec, MIN_OLS_OBS};
use carbon_risk::synth::{generate_panel, FactorSpec, LoadingSpec, SynthPanel, SynthSpec};
use rayon::prelude::*;

fn spec(names: &[&str]) -> ModelSpec {
    ModelSpec::new(names).unwrap()
}

fn factor(name: &str, vol: f64, loading: f64, dispersion: f64) -> FactorSpec {
    FactorSpec {
        name: name.into(),
        mean: 0.0,
        vol,
        loading: LoadingSpec {
            mean: loading,
            dispersion,
            step_sd: 0.0,
        },
    }
}

/// Five-factor panel; loadings on the non-market factors set by `bmg` and `style`.
fn five_factor_panel(n_assets: usize, bmg: f64, style: f64, seed: u64) -> SynthPanel {
    let spec = SynthSpec {
        factors: vec![
            factor("MKT", 0.045, 1.0, 0.3),
            factor("SMB", 0.03, style, 0.0),
            factor("HML", 0.03, style, 0.0),
            factor("WML", 0.04, style, 0.0),
            factor("BMG", 0.025, bmg, 0.1 * bmg.abs()),
        ],
        idio_vol: (0.03, 0.08),
        ..SynthSpec::two_factor(n_assets, 108, seed)
    };
    generate_panel(&spec).unwrap()
}

#[test]
fn static_betas_recovered_within_two_se() {
    let p = generate_panel(&SynthSpec::two_factor(50, 108, 21)).unwrap();
    let s = spec(&["MKT", "BMG"]);
    let mut hits = 0;
    for a in 0..50 {
        let fit = ols_fit(p.returns.dates(), p.returns.series(a), &p.factors, &s, MIN_OLS_OBS).unwrap();
        for j in 0..2 {
            if (fit.betas[j] - p.truth.initial_beta(a, j)).abs() <= 2.0 * fit.std_errors[j + 1] {
                hits += 1;
            }
        }
    }
    assert!(hits as f64 >= 0.9 * 100.0, "{hits}/100");
}

#[test]
fn orthogonal_returns_have_insignificant_betas() {
    let p = five_factor_panel(200, 0.0, 0.0, 22);
    let noise = generate_panel(&SynthSpec {
        factors: vec![factor("MKT", 0.045, 0.0, 0.0)],
        ..SynthSpec::two_factor(200, 108, 23)
    })
    .unwrap();
    let s = spec(&["MKT", "SMB", "HML", "BMG"]);
    let mut within = 0;
    for a in 0..200 {
        // returns drawn independently of the regressors
        let fit = ols_fit(p.returns.dates(), noise.returns.series(a), &p.factors, &s, MIN_OLS_OBS).unwrap();
        within += fit.betas.iter().zip(&fit.std_errors[1..]).filter(|(b, se)| b.abs() <= 2.0 * **se).count();
    }
    assert!(within as f64 >= 0.9 * 800.0, "{within}/800");
}

#[test]
fn f_test_rejects_when_bmg_loads() {
    let p = five_factor_panel(200, 1.0, 0.0, 24);
    let full = spec(&["MKT", "BMG"]);
    let nested = spec(&["MKT"]);
    let rejected = (0..200)
        .filter(|&a| {
            let f = ols_fit(p.returns.dates(), p.returns.series(a), &p.factors, &full, MIN_OLS_OBS).unwrap();
            let n = ols_fit(p.returns.dates(), p.returns.series(a), &p.factors, &nested, MIN_OLS_OBS).unwrap();
            f_test_nested(&f, &n).unwrap().p_value < 0.05
        })
        .count();
    assert!(rejected > 160, "{rejected}/200");
}

#[test]
fn batch_compare_size_and_power() {
    let capm_only = five_factor_panel(400, 0.0, 0.0, 25);
    let pairs = vec![
        (spec(&["MKT"]), spec(&["MKT", "SMB", "HML"])),
        (spec(&["MKT"]), spec(&["MKT", "BMG"])),
    ];
    let null = batch_compare(&capm_only.returns, &capm_only.factors, &pairs, MIN_OLS_OBS);
    assert_eq!(null.len(), 2);
    let se = (0.05 * 0.95 / 400.0_f64).sqrt();
    for row in &null {
        assert_eq!(row.n_assets, 400);
        assert!((row.share_5 - 0.05).abs() < 3.0 * se, "{row:?}");
        assert!(row.share_1 <= row.share_5 && row.share_5 <= row.share_10);
    }

    let loaded = five_factor_panel(400, 1.5, 0.0, 26);
    let power = batch_compare(&loaded.returns, &loaded.factors, &pairs[1..], MIN_OLS_OBS);
    assert!(power[0].share_5 > 0.9, "{:?}", power[0]);
    assert!(power[0].mean_adj_r2_diff > 0.0);

    // nobody has the 200 months required
    assert!(batch_compare(&loaded.returns, &loaded.factors, &pairs, 200).is_empty());
}

#[test]
fn batch_compare_is_order_independent() {
    let p = five_factor_panel(60, 0.5, 0.2, 27);
    let pairs = vec![(spec(&["MKT"]), spec(&["MKT", "SMB", "HML", "WML", "BMG"]))];
    let a = batch_compare(&p.returns, &p.factors, &pairs, MIN_OLS_OBS);
    let b = batch_compare(&p.returns, &p.factors, &pairs, MIN_OLS_OBS);
    assert_eq!(a, b);
}

fn two_factor_sample(step: f64, idio: (f64, f64), seed: u64) -> (SynthPanel, Vec<f64>, nalgebra::DMatrix<f64>) {
    let mut s = SynthSpec::two_factor(1, 108, seed).with_step_sd(0, step);
    s.idio_vol = idio;
    let p = generate_panel(&s).unwrap();
    let sample = aligned_sample(p.returns.dates(), p.returns.series(0), &p.factors, &["MKT", "BMG"]).unwrap();
    (p, sample.y, sample.design)
}

#[test]
fn static_state_variances_are_insignificant() {
    let flagged = (0..100u64)
        .into_par_iter()
        .filter(|s| {
            let (_, y, x) = two_factor_sample(0.0, (0.005, 0.01), 5000 + s);
            let fit = mle_fit(&y, &x).unwrap();
            assert!(fit.log_likelihood >= fit.start_log_likelihood);
            (0..3).any(|c| fit.state_var_significant(c))
        })
        .count();
    assert!(flagged <= 10, "{flagged}/100 flagged");
}

#[test]
fn random_walk_market_beta_is_detected() {
    let detected = (0..100u64)
        .into_par_iter()
        .filter(|s| {
            let (_, y, x) = two_factor_sample(0.05, (0.002, 0.005), 6000 + s);
            mle_fit(&y, &x).unwrap().state_var_significant(1)
        })
        .count();
    assert!(detected > 50, "{detected}/100");
}

#[test]
fn filter_forecasts_converge_to_regression_without_drift() {
    let (p, y, x) = two_factor_sample(0.0, (0.03, 0.03), 7000);
    let fit = mle_fit(&y, &x).unwrap();
    let s = spec(&["MKT", "BMG"]);
    let ols = ols_fit(p.returns.dates(), p.returns.series(0), &p.factors, &s, MIN_OLS_OBS).unwrap();
    let early = forecast_error_compare(&ols, &fit.filter, DEFAULT_BURN_IN).unwrap();
    let late = forecast_error_compare(&ols, &fit.filter, 60).unwrap();
    let gap = |e: &carbon_risk::kalman::ForecastErrors| (e.mae_ssm - e.mae_ols).abs() / e.mae_ols;
    assert!(gap(&late) < 0.1, "{late:?}");
    assert!(early.mae_ssm >= early.mae_ols * 0.9);
}
