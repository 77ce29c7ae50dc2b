use carbon_risk::data::{month_ends, FactorSeries, ReturnsPanel};
use carbon_risk::enhanced_index::{te_optimize, Benchmark, IndexConstraint};
use carbon_risk::factors::{bmg_return, compute_bgs, sort_universe, standardize_factor, Garch11Params, Weighting};
use carbon_risk::io::{read_factors, read_returns, write_factors, write_returns};
use carbon_risk::kalman::{kalman_filter, StateSpaceConfig};
use carbon_risk::linalg::{phi, smw_rank1_inverse_diag, smw_rank2_inverse, FactorCovarianceModel};
use carbon_risk::minvar::{gmv_two_factor, mv_carbon_constrained, mv_two_factor_long_only};
use carbon_risk::qp::{solve_qp, QpProblem};
use carbon_risk::regression::{f_test_nested, factor_correlation, ols_fit, ModelSpec};
use chrono::NaiveDate;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn vecf(n: usize, lo: f64, hi: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(lo..hi, n)
}

fn dv(xs: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(xs)
}

/// Two-factor universe of `n` assets.
fn universe(n: std::ops::Range<usize>) -> impl Strategy<Value = FactorCovarianceModel> {
    n.prop_flat_map(|n| (vecf(n, 0.5, 1.5), vecf(n, -1.0, 1.0), vecf(n, 0.05, 0.3)))
        .prop_map(|(b, g, s)| FactorCovarianceModel::from_idio_vol(dv(&b), dv(&g), 0.2, 0.1, &dv(&s)).unwrap())
}

fn start() -> NaiveDate {
    NaiveDate::from_ymd_opt(2010, 1, 31).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn bgs_monotone_in_each_score(base in vecf(3, 0.0, 1.0), bump in 0.0..1.0f64, axis in 0usize..3) {
        let mut up = base.clone();
        up[axis] = (up[axis] + bump).min(1.0);
        let lo = compute_bgs(base[0], base[1], base[2]).unwrap();
        let hi = compute_bgs(up[0], up[1], up[2]).unwrap();
        prop_assert!(hi >= lo);
    }

    #[test]
    fn bmg_ignores_common_shift(
        rows in (6usize..40).prop_flat_map(|n| (vecf(n, 0.0, 1.0), vecf(n, 1.0, 1e4), vecf(n, -0.2, 0.2))),
        shift in -0.5..0.5f64,
        equal in any::<bool>(),
    ) {
        let (s, c, r) = rows;
        let scores: Vec<Option<f64>> = s.into_iter().map(Some).collect();
        let caps: Vec<Option<f64>> = c.into_iter().map(Some).collect();
        let w = if equal { Weighting::Equal } else { Weighting::Cap };
        let buckets = sort_universe(&scores, &caps).unwrap();
        let base: Vec<Option<f64>> = r.iter().copied().map(Some).collect();
        let moved: Vec<Option<f64>> = r.iter().map(|x| Some(x + shift)).collect();
        match (bmg_return(&buckets, &base, &caps, w), bmg_return(&buckets, &moved, &caps, w)) {
            (Ok(a), Ok(b)) => prop_assert!((a - b).abs() < 1e-12),
            (a, b) => prop_assert_eq!(a.unwrap_err().to_string(), b.unwrap_err().to_string()),
        }
    }

    /// Scores from a coarse grid so ties reach the breakpoints.
    #[test]
    fn sort_invariant_to_increasing_transforms(
        rows in (6usize..40).prop_flat_map(|n| (prop::collection::vec(0u32..12, n), prop::collection::vec(1u32..30, n))),
    ) {
        let (s, c) = rows;
        let raw = |v: &[u32]| v.iter().map(|&k| Some(k as f64)).collect::<Vec<_>>();
        let cubed = |v: &[u32]| v.iter().map(|&k| Some((k as f64).powi(3) + 7.0)).collect::<Vec<_>>();
        let logged: Vec<Option<f64>> = c.iter().map(|&k| Some((k as f64).ln())).collect();
        let a = sort_universe(&raw(&s), &raw(&c)).unwrap();
        let b = sort_universe(&cubed(&s), &logged).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn standardization_inverts(series in vecf(30, -0.1, 0.1), alpha in 0.0..0.3f64, beta in 0.0..0.6f64) {
        let p = Garch11Params::new(1e-4, alpha, beta, 4e-4).unwrap();
        let z = standardize_factor(&series, &p).unwrap();
        let h = p.conditional_variance(&series);
        for ((zt, ht), rt) in z.iter().zip(&h).zip(&series) {
            prop_assert!((zt * 100.0 * ht.sqrt() - rt).abs() <= 1e-15 * (1.0 + rt.abs()));
        }
    }

    #[test]
    fn phi_bilinear_symmetric(x in vecf(8, -2.0, 2.0), y in vecf(8, -2.0, 2.0), z in vecf(8, -2.0, 2.0),
                              s in vecf(8, 0.01, 1.0), a in -3.0..3.0f64) {
        let (x, y, z, s) = (dv(&x), dv(&y), dv(&z), dv(&s));
        prop_assert!((phi(&x, &y, &s) - phi(&y, &x, &s)).abs() < 1e-12);
        let lhs = phi(&(&x * a + &z), &y, &s);
        let rhs = a * phi(&x, &y, &s) + phi(&z, &y, &s);
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
    }

    #[test]
    fn smw_inverses(d in vecf(12, 0.1, 2.0), u in vecf(12, -1.0, 1.0), v in vecf(12, -1.0, 1.0)) {
        let (d, u, v) = (dv(&d), dv(&u), dv(&v));
        let a = DMatrix::from_diagonal(&d);
        let one = smw_rank1_inverse_diag(&d, &u, &u).unwrap();
        let eye = DMatrix::identity(12, 12);
        prop_assert!(((&a + &u * u.transpose()) * one - &eye).amax() < 1e-9);
        let two = smw_rank2_inverse(&d, &u, &v).unwrap();
        prop_assert!((&two - two.transpose()).amax() < 1e-12);
        prop_assert!(((&a + &u * u.transpose() + &v * v.transpose()) * two - &eye).amax() < 1e-9);
    }

    #[test]
    fn qp_scaling_and_optimality(model in universe(3..12), scale in 0.01..100.0f64, cap in -0.2..0.4f64) {
        let n = model.n();
        let q = model.covariance();
        let base = QpProblem::new(q.clone(), DVector::zeros(n))
            .with_equalities(DMatrix::from_element(1, n, 1.0), DVector::from_element(1, 1.0))
            .with_lower_bounds(DVector::zeros(n))
            .with_inequalities(DMatrix::from_row_slice(1, n, model.beta_bmg.as_slice()), DVector::from_element(1, cap));
        let sol = solve_qp(&base).unwrap();
        prop_assume!(sol.is_optimal());
        prop_assert!(sol.kkt_residuals(&base).max() < 1e-9);

        let mut scaled = base.clone();
        scaled.q *= scale;
        let s2 = solve_qp(&scaled).unwrap();
        prop_assert!((&s2.x - &sol.x).amax() < 1e-9);
        prop_assert!((s2.ineq_multipliers[0] - scale * sol.ineq_multipliers[0]).abs() <= 1e-7 * (1.0 + s2.ineq_multipliers[0].abs()));
        prop_assert!((s2.eq_multipliers[0] - scale * sol.eq_multipliers[0]).abs() <= 1e-7 * (1.0 + s2.eq_multipliers[0].abs()));

        // feasible points built by mixing the optimum with feasible vertices
        let best = base.objective(&sol.x);
        for i in 0..n {
            let mut e = DVector::zeros(n);
            e[i] = 1.0;
            for t in [0.1, 0.5, 1.0] {
                let y = &sol.x * (1.0 - t) + &e * t;
                if base.max_violation(&y) <= 0.0 {
                    prop_assert!(base.objective(&y) >= best - 1e-12);
                }
            }
        }

        if sol.ineq_multipliers[0] == 0.0 {
            let mut free = base.clone();
            free.g_ineq = DMatrix::zeros(0, n);
            free.h_ineq = DVector::zeros(0);
            prop_assert!((solve_qp(&free).unwrap().x - &sol.x).amax() < 1e-8);
        }
    }

    #[test]
    fn sign_flip_invariance(model in universe(3..20)) {
        let flip = model.flip_bmg();
        let (a, b) = (gmv_two_factor(&model).unwrap(), gmv_two_factor(&flip).unwrap());
        prop_assert!((&a.weights - &b.weights).amax() < 1e-8);
        prop_assert!((a.thresholds.inv_gamma_star() + b.thresholds.inv_gamma_star()).abs() < 1e-10);
        let (a, b) = (mv_two_factor_long_only(&model).unwrap(), mv_two_factor_long_only(&flip).unwrap());
        prop_assert!((&a.weights - &b.weights).amax() < 1e-8);
        prop_assert!((a.thresholds.inv_beta_star() - b.thresholds.inv_beta_star()).abs() < 1e-10);
        prop_assert!((a.thresholds.reconstruct(&model) - &a.weights).amax() < 1e-6);
    }

    #[test]
    fn tighter_cap_costs_variance(model in universe(4..15), hi in 0.0..0.3f64, gap in 0.0..0.2f64) {
        let loose = mv_carbon_constrained(&model, hi);
        let tight = mv_carbon_constrained(&model, hi - gap);
        if let (Ok(l), Ok(t)) = (loose, tight) {
            prop_assert!(t.variance >= l.variance - 1e-14);
            prop_assert!(t.lambda_bmg >= l.lambda_bmg - 1e-9);
        }
    }

    #[test]
    fn index_kkt_and_neutral_equivalence(model in universe(4..15)) {
        let b = Benchmark::equal_weight(model.n()).unwrap();
        let rel = te_optimize(&model, &b, IndexConstraint::RelativeCap(0.0), None);
        let abs = te_optimize(&model, &b, IndexConstraint::AbsoluteCap(0.0), None);
        if let (Ok(r), Ok(a)) = (rel, abs) {
            let grad = model.covariance() * (&r.weights - b.weights());
            let resid = grad - DVector::from_element(model.n(), r.qp.eq_multipliers[0]) - &r.qp.lower_multipliers
                + &model.beta_bmg * r.diagnostics.lambda_bmg;
            prop_assert!(resid.amax() < 1e-8);
            if model.beta_bmg.dot(b.weights()) > 0.0 {
                prop_assert!((&r.weights - &a.weights).amax() < 1e-8);
            }
        }
    }

    #[test]
    fn regression_invariants(
        data in (vecf(48, -0.1, 0.1), vecf(48, -0.1, 0.1), vecf(48, -0.05, 0.05)),
        scale in 0.1..10.0f64,
        slope in 0.1..5.0f64,
        offset in -1.0..1.0f64,
    ) {
        let (m, g, e) = data;
        let dates = month_ends(start(), 48);
        let factors = FactorSeries::new(dates.clone(), vec!["MKT".into(), "BMG".into()], vec![m.clone(), g.clone()]).unwrap();
        let y: Vec<Option<f64>> = (0..48).map(|t| Some(0.9 * m[t] + 0.3 * g[t] + e[t])).collect();
        let ys: Vec<Option<f64>> = y.iter().map(|v| v.map(|x| x * scale)).collect();
        let full = ModelSpec::new(&["MKT", "BMG"]).unwrap();
        let capm = ModelSpec::new(&["MKT"]).unwrap();
        let fit = ols_fit(&dates, &y, &factors, &full, 36).unwrap();
        let norm = fit.residuals.iter().map(|r| r * r).sum::<f64>().sqrt().max(1e-300);
        for reg in [vec![1.0; 48], m.clone(), g.clone()] {
            let dot: f64 = reg.iter().zip(&fit.residuals).map(|(a, b)| a * b).sum();
            let rn = reg.iter().map(|r| r * r).sum::<f64>().sqrt();
            prop_assert!(dot.abs() <= 1e-8 * rn * norm + 1e-14);
        }
        let f1 = f_test_nested(&fit, &ols_fit(&dates, &y, &factors, &capm, 36).unwrap()).unwrap();
        let f2 = f_test_nested(
            &ols_fit(&dates, &ys, &factors, &full, 36).unwrap(),
            &ols_fit(&dates, &ys, &factors, &capm, 36).unwrap(),
        ).unwrap();
        prop_assert!((f1.statistic - f2.statistic).abs() <= 1e-8 * (1.0 + f1.statistic.abs()));

        let moved = FactorSeries::new(
            dates,
            vec!["MKT".into(), "BMG".into()],
            vec![m.iter().map(|x| slope * x + offset).collect(), g],
        ).unwrap();
        let (c1, c2) = (factor_correlation(&factors).unwrap(), factor_correlation(&moved).unwrap());
        prop_assert!((c1.corr - c2.corr).amax() < 1e-10);
    }

    #[test]
    fn kalman_coordinate_permutation(
        data in (vecf(40, -0.1, 0.1), vecf(40, -0.1, 0.1), vecf(40, -0.05, 0.05)),
        q in vecf(3, 1e-6, 1e-2),
    ) {
        let (a, b, y) = data;
        let x = DMatrix::from_fn(40, 3, |t, j| [1.0, a[t], b[t]][j]);
        let perm = [2usize, 0, 1];
        let xp = DMatrix::from_fn(40, 3, |t, j| x[(t, perm[j])]);
        let b0 = dv(&[0.01, 0.9, -0.2]);
        let p0 = DMatrix::from_fn(3, 3, |i, j| if i == j { 0.5 + i as f64 } else { 0.1 });
        let cfg = StateSpaceConfig::new(0.002, dv(&q), b0.clone(), p0.clone()).unwrap();
        let cfgp = StateSpaceConfig::new(
            0.002,
            DVector::from_fn(3, |j, _| q[perm[j]]),
            DVector::from_fn(3, |j, _| b0[perm[j]]),
            DMatrix::from_fn(3, 3, |i, j| p0[(perm[i], perm[j])]),
        ).unwrap();
        let f = kalman_filter(&y, &x, &cfg).unwrap();
        let g = kalman_filter(&y, &xp, &cfgp).unwrap();
        prop_assert!((f.log_likelihood - g.log_likelihood).abs() <= 1e-10 * f.log_likelihood.abs().max(1.0));
        for t in 0..40 {
            for j in 0..3 {
                prop_assert!((g.filtered[t][j] - f.filtered[t][perm[j]]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn csv_round_trip(values in prop::collection::vec(prop::option::weighted(0.8, -1e3..1e3f64), 3 * 7),
                      tiny in 1e-300..1e-200f64) {
        let dir = tempfile::tempdir().unwrap();
        let dates = month_ends(start(), 7);
        let mut v: Vec<Vec<Option<f64>>> = values.chunks(7).map(<[_]>::to_vec).collect();
        v[0] = vec![Some(tiny); 7];
        let panel = ReturnsPanel::new(dates.clone(), vec!["A".into(), "B".into(), "C".into()], v).unwrap();
        let path = dir.path().join("r.csv");
        write_returns(&path, &panel).unwrap();
        let back = read_returns(&path).unwrap();
        // assets with no rows at all cannot round-trip
        for a in panel.assets() {
            let i = panel.asset_index(a).unwrap();
            if panel.series(i).iter().any(Option::is_some) {
                let j = back.asset_index(a).unwrap();
                for (t, d) in panel.dates().iter().enumerate() {
                    let k = back.date_index(*d);
                    let got = k.and_then(|k| back.get(j, k));
                    prop_assert_eq!(got.map(f64::to_bits), panel.get(i, t).map(f64::to_bits));
                }
            }
        }

        let fs = FactorSeries::new(dates, vec!["MKT".into()], vec![vec![tiny, -tiny, 0.1, 1.0 / 3.0, 1e22, -0.0, 5e-324]]).unwrap();
        let fp = dir.path().join("f.csv");
        write_factors(&fp, &fs).unwrap();
        let fb = read_factors(&fp).unwrap();
        prop_assert_eq!(fb.column(0).iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
                        fs.column(0).iter().map(|x| x.to_bits()).collect::<Vec<_>>());
        prop_assert_eq!(fb.dates(), fs.dates());
    }
}
