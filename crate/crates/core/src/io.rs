//! CSV ingest and emit for panels, universes, fits and run summaries.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use chrono::NaiveDate;
use nalgebra::DVector;

use crate::data::{FactorSeries, ReturnsPanel};
use crate::error::{Error, Result};
use crate::factors::ScorePanel;
use crate::kalman::MleFit;
use crate::linalg::FactorCovarianceModel;
use crate::minvar::CarbonIntensity;
use crate::regression::OlsFit;

pub const DATE_FORMAT: &str = "%Y-%m-%d";

/// Header plus string cells, with the file line of every data row.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub lines: Vec<usize>,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Self {
            header: header.iter().map(|s| s.as_ref().to_string()).collect(),
            ..Self::default()
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.lines.push(self.rows.len() + 2);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn require(&self, name: &str) -> Result<usize> {
        self.column(name)
            .ok_or_else(|| Error::MissingInput(format!("column {name}")))
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

pub fn read_table(path: &Path) -> Result<Table> {
    if !path.exists() {
        return Err(Error::MissingInput(path.display().to_string()));
    }
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let header = rdr.headers()?.iter().map(str::to_string).collect();
    let mut t = Table {
        header,
        ..Table::default()
    };
    for rec in rdr.records() {
        let rec = rec?;
        t.lines.push(rec.position().map_or(0, |p| p.line() as usize));
        t.rows.push(rec.iter().map(str::to_string).collect());
    }
    Ok(t)
}

pub fn write_table(path: &Path, table: &Table) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(&table.header)?;
    for r in &table.rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn parse_date(row: usize, s: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s, DATE_FORMAT).map_err(|e| Error::Parse {
        row,
        message: format!("bad date {s:?}: {e}"),
    })
}

pub fn parse_number(row: usize, what: &str, s: &str) -> Result<f64> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::Parse {
            row,
            message: format!("{what} {s:?} is not a finite number"),
        }),
    }
}

pub fn fmt_date(d: NaiveDate) -> String {
    d.format(DATE_FORMAT).to_string()
}

/// Shortest decimal that parses back to the same value; exponent form for
/// very large or small magnitudes.
pub fn fmt_num(v: f64) -> String {
    format!("{v:?}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_num).unwrap_or_default()
}

/// Long records `(date, key, value)` keyed on unique `(date, key)`.
fn read_long(path: &Path, key_col: &str, value_cols: &[&str]) -> Result<Vec<(NaiveDate, String, Vec<f64>)>> {
    let t = read_table(path)?;
    let dc = t.require("date")?;
    let kc = t.require(key_col)?;
    let vcs: Vec<usize> = value_cols.iter().map(|c| t.require(c)).collect::<Result<_>>()?;
    let mut seen = HashMap::new();
    let mut out = Vec::with_capacity(t.len());
    for (r, line) in t.rows.iter().zip(&t.lines) {
        let date = parse_date(*line, &r[dc])?;
        let key = r[kc].clone();
        if key.is_empty() {
            return Err(Error::Parse {
                row: *line,
                message: format!("empty {key_col}"),
            });
        }
        if let Some(first) = seen.insert((date, key.clone()), *line) {
            return Err(Error::Duplicate {
                row: *line,
                key: format!("({}, {key}) first seen at row {first}", fmt_date(date)),
            });
        }
        let vals = vcs
            .iter()
            .zip(value_cols)
            .map(|(&c, name)| parse_number(*line, name, &r[c]))
            .collect::<Result<_>>()?;
        out.push((date, key, vals));
    }
    Ok(out)
}

/// `date,asset,return`; absent rows mark months outside the index.
pub fn read_returns(path: &Path) -> Result<ReturnsPanel> {
    let recs = read_long(path, "asset", &["return"])?;
    let dates: Vec<NaiveDate> = recs.iter().map(|r| r.0).collect::<BTreeSet<_>>().into_iter().collect();
    let assets: Vec<String> = recs.iter().map(|r| r.1.clone()).collect::<BTreeSet<_>>().into_iter().collect();
    let di: HashMap<NaiveDate, usize> = dates.iter().enumerate().map(|(i, d)| (*d, i)).collect();
    let ai: HashMap<&str, usize> = assets.iter().enumerate().map(|(i, a)| (a.as_str(), i)).collect();
    let mut values = vec![vec![None; dates.len()]; assets.len()];
    for (d, a, v) in &recs {
        values[ai[a.as_str()]][di[d]] = Some(v[0]);
    }
    ReturnsPanel::new(dates, assets, values)
}

pub fn write_returns(path: &Path, panel: &ReturnsPanel) -> Result<()> {
    let mut t = Table::new(&["date", "asset", "return"]);
    for (di, d) in panel.dates().iter().enumerate() {
        for (ai, a) in panel.assets().iter().enumerate() {
            if let Some(r) = panel.get(ai, di) {
                t.push(vec![fmt_date(*d), a.clone(), fmt_num(r)]);
            }
        }
    }
    write_table(path, &t)
}

/// `date,factor,return`; every factor must cover every date.
pub fn read_factors(path: &Path) -> Result<FactorSeries> {
    let recs = read_long(path, "factor", &["return"])?;
    let dates: Vec<NaiveDate> = recs.iter().map(|r| r.0).collect::<BTreeSet<_>>().into_iter().collect();
    let mut names: Vec<String> = Vec::new();
    for r in &recs {
        if !names.contains(&r.1) {
            names.push(r.1.clone());
        }
    }
    let di: HashMap<NaiveDate, usize> = dates.iter().enumerate().map(|(i, d)| (*d, i)).collect();
    let mut values = vec![vec![None; dates.len()]; names.len()];
    for (d, f, v) in &recs {
        let fi = names.iter().position(|n| n == f).expect("collected above");
        values[fi][di[d]] = Some(v[0]);
    }
    let mut full = Vec::with_capacity(names.len());
    for (f, col) in names.iter().zip(values) {
        let missing = col.iter().position(Option::is_none);
        if let Some(t) = missing {
            return Err(Error::Alignment(format!("factor {f} has no value on {}", fmt_date(dates[t]))));
        }
        full.push(col.into_iter().flatten().collect());
    }
    FactorSeries::new(dates, names, full)
}

pub fn write_factors(path: &Path, factors: &FactorSeries) -> Result<()> {
    let mut t = Table::new(&["date", "factor", "return"]);
    for (di, d) in factors.dates().iter().enumerate() {
        for (fi, f) in factors.names().iter().enumerate() {
            t.push(vec![fmt_date(*d), f.clone(), fmt_num(factors.column(fi)[di])]);
        }
    }
    write_table(path, &t)
}

/// Scores `date,asset,vc,pp,na[,score]` and capitalizations `date,asset,cap`.
/// Caps are looked up on the score dates.
pub fn read_scores(scores: &Path, caps: &Path) -> Result<ScorePanel> {
    let st = read_table(scores)?;
    let has_score = st.column("score").is_some();
    let mut cols = vec!["vc", "pp", "na"];
    if has_score {
        cols.push("score");
    }
    let recs = read_long(scores, "asset", &cols)?;
    let cap_recs = read_long(caps, "asset", &["cap"])?;
    let dates: Vec<NaiveDate> = recs.iter().map(|r| r.0).collect::<BTreeSet<_>>().into_iter().collect();
    let assets: Vec<String> = recs
        .iter()
        .map(|r| r.1.clone())
        .chain(cap_recs.iter().map(|r| r.1.clone()))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let di: HashMap<NaiveDate, usize> = dates.iter().enumerate().map(|(i, d)| (*d, i)).collect();
    let ai: HashMap<&str, usize> = assets.iter().enumerate().map(|(i, a)| (a.as_str(), i)).collect();
    let grid = || vec![vec![None; assets.len()]; dates.len()];
    let (mut vc, mut pp, mut na, mut sc, mut mc) = (grid(), grid(), grid(), grid(), grid());
    for (d, a, v) in &recs {
        let (t, i) = (di[d], ai[a.as_str()]);
        vc[t][i] = Some(v[0]);
        pp[t][i] = Some(v[1]);
        na[t][i] = Some(v[2]);
        if has_score {
            sc[t][i] = Some(v[3]);
        }
    }
    for (d, a, v) in &cap_recs {
        if let Some(&t) = di.get(d) {
            mc[t][ai[a.as_str()]] = Some(v[0]);
        }
    }
    let panel = ScorePanel {
        dates,
        assets,
        vc,
        pp,
        na,
        generic_score: has_score.then_some(sc),
        market_cap: mc,
    };
    panel.validate()?;
    Ok(panel)
}

pub fn write_scores(scores: &Path, caps: &Path, panel: &ScorePanel) -> Result<()> {
    let mut header = vec!["date", "asset", "vc", "pp", "na"];
    if panel.generic_score.is_some() {
        header.push("score");
    }
    let mut st = Table::new(&header);
    let mut ct = Table::new(&["date", "asset", "cap"]);
    for (t, d) in panel.dates.iter().enumerate() {
        for (i, a) in panel.assets.iter().enumerate() {
            if let (Some(v), Some(p), Some(n)) = (panel.vc[t][i], panel.pp[t][i], panel.na[t][i]) {
                let mut row = vec![fmt_date(*d), a.clone(), fmt_num(v), fmt_num(p), fmt_num(n)];
                if let Some(g) = &panel.generic_score {
                    row.push(fmt_opt(g[t][i]));
                }
                st.push(row);
            }
            if let Some(c) = panel.market_cap[t][i] {
                ct.push(vec![fmt_date(*d), a.clone(), fmt_num(c)]);
            }
        }
    }
    write_table(scores, &st)?;
    write_table(caps, &ct)
}

/// Cross-section file `asset,beta_mkt,beta_bmg,idio_vol[,intensity][,cap][,group]`.
#[derive(Debug, Clone, PartialEq)]
pub struct UniverseTable {
    pub assets: Vec<String>,
    pub beta_mkt: Vec<f64>,
    pub beta_bmg: Vec<f64>,
    pub idio_vol: Vec<f64>,
    pub intensity: Option<Vec<f64>>,
    pub cap: Option<Vec<f64>>,
    pub group: Option<Vec<Option<String>>>,
}

impl UniverseTable {
    pub fn len(&self) -> usize {
        self.assets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assets.is_empty()
    }

    pub fn model(&self, sigma_mkt: f64, sigma_bmg: f64) -> Result<FactorCovarianceModel> {
        FactorCovarianceModel::from_idio_vol(
            DVector::from_column_slice(&self.beta_mkt),
            DVector::from_column_slice(&self.beta_bmg),
            sigma_mkt,
            sigma_bmg,
            &DVector::from_column_slice(&self.idio_vol),
        )
    }

    pub fn carbon_intensity(&self) -> Result<Option<CarbonIntensity>> {
        self.intensity
            .as_ref()
            .map(|v| CarbonIntensity::new(DVector::from_column_slice(v)))
            .transpose()
    }
}

pub fn read_universe(path: &Path) -> Result<UniverseTable> {
    let t = read_table(path)?;
    let ac = t.require("asset")?;
    let req: Vec<usize> = ["beta_mkt", "beta_bmg", "idio_vol"]
        .iter()
        .map(|c| t.require(c))
        .collect::<Result<_>>()?;
    let opt = |name: &str| t.column(name);
    let mut u = UniverseTable {
        assets: Vec::new(),
        beta_mkt: Vec::new(),
        beta_bmg: Vec::new(),
        idio_vol: Vec::new(),
        intensity: opt("intensity").map(|_| Vec::new()),
        cap: opt("cap").map(|_| Vec::new()),
        group: opt("group").map(|_| Vec::new()),
    };
    let mut seen = HashMap::new();
    for (r, &line) in t.rows.iter().zip(&t.lines) {
        let a = r[ac].clone();
        if let Some(first) = seen.insert(a.clone(), line) {
            return Err(Error::Duplicate {
                row: line,
                key: format!("asset {a} first seen at row {first}"),
            });
        }
        u.assets.push(a);
        u.beta_mkt.push(parse_number(line, "beta_mkt", &r[req[0]])?);
        u.beta_bmg.push(parse_number(line, "beta_bmg", &r[req[1]])?);
        u.idio_vol.push(parse_number(line, "idio_vol", &r[req[2]])?);
        if let (Some(v), Some(c)) = (u.intensity.as_mut(), opt("intensity")) {
            v.push(parse_number(line, "intensity", &r[c])?);
        }
        if let (Some(v), Some(c)) = (u.cap.as_mut(), opt("cap")) {
            v.push(parse_number(line, "cap", &r[c])?);
        }
        if let (Some(v), Some(c)) = (u.group.as_mut(), opt("group")) {
            v.push(Some(r[c].clone()).filter(|g| !g.is_empty()));
        }
    }
    if u.is_empty() {
        return Err(Error::EmptyUniverse(path.display().to_string()));
    }
    Ok(u)
}

pub fn write_universe(path: &Path, u: &UniverseTable) -> Result<()> {
    let mut header = vec!["asset", "beta_mkt", "beta_bmg", "idio_vol"];
    if u.intensity.is_some() {
        header.push("intensity");
    }
    if u.cap.is_some() {
        header.push("cap");
    }
    if u.group.is_some() {
        header.push("group");
    }
    let mut t = Table::new(&header);
    for i in 0..u.len() {
        let mut row = vec![
            u.assets[i].clone(),
            fmt_num(u.beta_mkt[i]),
            fmt_num(u.beta_bmg[i]),
            fmt_num(u.idio_vol[i]),
        ];
        if let Some(v) = &u.intensity {
            row.push(fmt_num(v[i]));
        }
        if let Some(v) = &u.cap {
            row.push(fmt_num(v[i]));
        }
        if let Some(v) = &u.group {
            row.push(v[i].clone().unwrap_or_default());
        }
        t.push(row);
    }
    write_table(path, &t)
}

/// `asset,weight`
pub fn read_weights(path: &Path) -> Result<Vec<(String, f64)>> {
    let t = read_table(path)?;
    let (ac, wc) = (t.require("asset")?, t.require("weight")?);
    let mut seen = HashMap::new();
    let mut out = Vec::with_capacity(t.len());
    for (r, &line) in t.rows.iter().zip(&t.lines) {
        if seen.insert(r[ac].clone(), line).is_some() {
            return Err(Error::Duplicate {
                row: line,
                key: format!("asset {}", r[ac]),
            });
        }
        out.push((r[ac].clone(), parse_number(line, "weight", &r[wc])?));
    }
    Ok(out)
}

fn factor_column(name: &str) -> String {
    format!("beta_{}", name.to_lowercase())
}

/// `asset,model,alpha,beta_<factor>...,adj_r2,n` over the union of factors.
pub fn ols_fit_table(fits: &[(String, OlsFit)]) -> Table {
    let mut factors: Vec<String> = Vec::new();
    for (_, f) in fits {
        for name in f.spec.factors() {
            if !factors.contains(name) {
                factors.push(name.clone());
            }
        }
    }
    let mut header = vec!["asset".to_string(), "model".into(), "alpha".into()];
    header.extend(factors.iter().map(|f| factor_column(f)));
    header.extend(["adj_r2".into(), "n".into()]);
    let mut t = Table::new(&header);
    for (asset, f) in fits {
        let mut row = vec![asset.clone(), f.spec.label(), fmt_num(f.alpha)];
        row.extend(factors.iter().map(|name| fmt_opt(f.beta(name))));
        row.extend([fmt_num(f.adjusted_r2), f.n_obs.to_string()]);
        t.push(row);
    }
    t
}

/// One state-space fit per asset: the sample dates and the state labels.
pub struct KalmanOutput<'a> {
    pub asset: &'a str,
    pub dates: &'a [NaiveDate],
    pub fit: &'a MleFit,
}

/// `date,asset,alpha,beta_<factor>...,F` with filtered states.
pub fn kalman_path_table(factors: &[String], outputs: &[KalmanOutput<'_>]) -> Table {
    let mut header = vec!["date".to_string(), "asset".into(), "alpha".into()];
    header.extend(factors.iter().map(|f| factor_column(f)));
    header.push("F".into());
    let mut t = Table::new(&header);
    for o in outputs {
        for (k, d) in o.dates.iter().enumerate() {
            let mut row = vec![fmt_date(*d), o.asset.to_string()];
            row.extend(o.fit.filter.filtered[k].iter().map(|v| fmt_num(*v)));
            row.push(fmt_num(o.fit.filter.innovation_var[k]));
            t.push(row);
        }
    }
    t
}

/// `asset,parameter,estimate,std_error,t_stat`, plus the log-likelihood.
pub fn hyperparameter_table(factors: &[String], outputs: &[KalmanOutput<'_>]) -> Table {
    let mut t = Table::new(&["asset", "parameter", "estimate", "std_error", "t_stat"]);
    let labels: Vec<String> = std::iter::once("alpha".to_string())
        .chain(factors.iter().map(|f| f.to_lowercase()))
        .collect();
    for o in outputs {
        let f = o.fit;
        t.push(vec![
            o.asset.to_string(),
            "obs_var".into(),
            fmt_num(f.config.obs_var()),
            fmt_num(f.obs_var_se),
            fmt_num(f.obs_var_t()),
        ]);
        for (c, l) in labels.iter().enumerate() {
            t.push(vec![
                o.asset.to_string(),
                format!("state_var_{l}"),
                fmt_num(f.config.state_var()[c]),
                fmt_num(f.state_var_se[c]),
                fmt_num(f.state_var_t(c)),
            ]);
        }
        t.push(vec![
            o.asset.to_string(),
            "log_likelihood".into(),
            fmt_num(f.log_likelihood),
            String::new(),
            String::new(),
        ]);
    }
    t
}

/// `key = value` lines; `#` starts a comment.
pub fn read_key_values(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            row: i + 1,
            message: format!("expected key = value, got {line:?}"),
        })?;
        let key = k.trim().replace('_', "-");
        if out.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(Error::Duplicate { row: i + 1, key });
        }
    }
    Ok(out)
}

pub const COMPOSITION_FILE: &str = "mv_composition.csv";
pub const MV_DIAGNOSTICS_FILE: &str = "mv_diagnostics.csv";
pub const MV_SWEEP_FILE: &str = "mv_sweep.csv";
pub const INDEX_WEIGHTS_FILE: &str = "index_weights.csv";
pub const INDEX_DIAGNOSTICS_FILE: &str = "index_diagnostics.csv";
pub const INDEX_SWEEP_FILE: &str = "index_sweep.csv";
pub const BATCH_COMPARE_FILE: &str = "ols_compare.csv";
pub const CORRELATION_FILE: &str = "factor_correlation.csv";
pub const FACTOR_STATS_FILE: &str = "factor_stats.csv";

fn pct(s: &str) -> String {
    s.parse::<f64>().map(|v| format!("{:.2}", 100.0 * v)).unwrap_or_else(|_| s.to_string())
}

fn num(s: &str, digits: usize) -> String {
    s.parse::<f64>().map(|v| format!("{v:.digits$}")).unwrap_or_else(|_| s.to_string())
}

fn render(header: &[String], rows: &[Vec<String>]) -> String {
    let widths: Vec<usize> = (0..header.len())
        .map(|c| rows.iter().map(|r| r[c].len()).chain([header[c].len()]).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    let line = |cells: &[String], out: &mut String| {
        let parts: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
        let _ = writeln!(out, "{}", parts.join("  "));
    };
    line(header, &mut out);
    let _ = writeln!(out, "{}", "-".repeat(widths.iter().sum::<usize>() + 2 * widths.len().saturating_sub(1)));
    for r in rows {
        line(r, &mut out);
    }
    out
}

/// Composition table: loadings, then weights in percent per portfolio,
/// then the thresholds and volatility from the diagnostics file.
pub fn composition_summary(composition: &Table, diagnostics: Option<&Table>) -> Result<String> {
    let ac = composition.require("asset")?;
    let bm = composition.require("beta_mkt")?;
    let bb = composition.require("beta_bmg")?;
    let first_weight = composition.require("idio_vol")? + 1;
    let portfolios: Vec<String> = composition.header[first_weight..].to_vec();
    let mut header = vec!["Asset".to_string(), "beta_mkt".into(), "beta_bmg".into()];
    header.extend(portfolios.iter().cloned());
    let mut rows: Vec<Vec<String>> = composition
        .rows
        .iter()
        .map(|r| {
            let mut row = vec![r[ac].clone(), num(&r[bm], 2), num(&r[bb], 2)];
            row.extend(r[first_weight..].iter().map(|c| pct(c)));
            row
        })
        .collect();
    if let Some(d) = diagnostics {
        let pc = d.require("portfolio")?;
        let lookup = |metric: &str, fmt: &dyn Fn(&str) -> String| -> Result<Vec<String>> {
            let mc = d.require(metric)?;
            Ok(portfolios
                .iter()
                .map(|p| {
                    d.rows
                        .iter()
                        .find(|r| &r[pc] == p)
                        .map(|r| fmt(&r[mc]))
                        .unwrap_or_default()
                })
                .collect())
        };
        for (label, metric, f) in [
            ("beta*_mkt", "threshold_mkt", &(|s: &str| num(s, 4)) as &dyn Fn(&str) -> String),
            ("beta*_bmg", "threshold_bmg", &|s: &str| num(s, 4)),
            ("lambda_bmg (bps)", "lambda_bmg", &|s: &str| {
                s.parse::<f64>().map(|v| format!("{:.1}", 1e4 * v)).unwrap_or_default()
            }),
            ("sigma(x)", "volatility", &|s: &str| pct(s)),
        ] {
            let mut row = vec![label.to_string(), String::new(), String::new()];
            row.extend(lookup(metric, f)?);
            rows.push(row);
        }
    }
    Ok(render(&header, &rows))
}

/// Benchmark, optimized and active weights in percent, followed by scalar diagnostics.
pub fn index_summary(weights: &Table, diagnostics: &Table) -> Result<String> {
    let cols: Vec<usize> = ["asset", "benchmark", "portfolio", "active"]
        .iter()
        .map(|c| weights.require(c))
        .collect::<Result<_>>()?;
    let header: Vec<String> = ["Asset", "b (%)", "x* (%)", "x*-b (%)"].iter().map(|s| s.to_string()).collect();
    let rows: Vec<Vec<String>> = weights
        .rows
        .iter()
        .map(|r| vec![r[cols[0]].clone(), pct(&r[cols[1]]), pct(&r[cols[2]]), pct(&r[cols[3]])])
        .collect();
    let mut out = render(&header, &rows);
    let (mc, vc) = (diagnostics.require("metric")?, diagnostics.require("value")?);
    out.push('\n');
    for r in &diagnostics.rows {
        let _ = writeln!(out, "{:<18} {}", r[mc], num(&r[vc], 6));
    }
    Ok(out)
}

/// Points of a sweep file for a two-column plot.
pub fn plot_series(sweep: &Table, x: &str, y: &str) -> Result<Table> {
    let (xc, yc) = (sweep.require(x)?, sweep.require(y)?);
    let mut t = Table::new(&[x, y]);
    for r in &sweep.rows {
        if !r[xc].is_empty() && !r[yc].is_empty() {
            t.push(vec![r[xc].clone(), r[yc].clone()]);
        }
    }
    Ok(t)
}

/// Summaries of every known output in `dir`, and plot files written alongside.
pub fn report(dir: &Path) -> Result<String> {
    if !dir.is_dir() {
        return Err(Error::MissingInput(format!("output directory {}", dir.display())));
    }
    let load = |name: &str| -> Result<Option<Table>> {
        let p = dir.join(name);
        if p.exists() {
            read_table(&p).map(Some)
        } else {
            Ok(None)
        }
    };
    let mut out = String::new();
    let mut found = 0;
    if let Some(c) = load(COMPOSITION_FILE)? {
        found += 1;
        let _ = writeln!(out, "Composition of the minimum variance portfolios (weights in %)\n");
        out.push_str(&composition_summary(&c, load(MV_DIAGNOSTICS_FILE)?.as_ref())?);
        out.push('\n');
    }
    if let Some(s) = load(MV_SWEEP_FILE)? {
        found += 1;
        write_table(&dir.join("plot_mv_volatility.csv"), &plot_series(&s, "beta_plus", "volatility")?)?;
        write_table(&dir.join("plot_mv_lambda.csv"), &plot_series(&s, "beta_plus", "lambda_bmg")?)?;
        let _ = writeln!(out, "Carbon beta sweep: {} points, plot data in plot_mv_*.csv\n", s.len());
    }
    if let (Some(w), Some(d)) = (load(INDEX_WEIGHTS_FILE)?, load(INDEX_DIAGNOSTICS_FILE)?) {
        found += 1;
        let _ = writeln!(out, "Enhanced index portfolio\n");
        out.push_str(&index_summary(&w, &d)?);
        out.push('\n');
    }
    if let Some(s) = load(INDEX_SWEEP_FILE)? {
        found += 1;
        write_table(&dir.join("plot_te_delta.csv"), &plot_series(&s, "delta_bmg", "tracking_error")?)?;
        write_table(&dir.join("plot_te_lambda.csv"), &plot_series(&s, "delta_bmg", "lambda_bmg")?)?;
        let _ = writeln!(out, "Tracking error sweep: {} points, plot data in plot_te_*.csv\n", s.len());
    }
    for (file, title) in [
        (BATCH_COMPARE_FILE, "Comparison of nested factor models"),
        (CORRELATION_FILE, "Correlation of factor returns"),
        (FACTOR_STATS_FILE, "Statistics of factor returns"),
    ] {
        if let Some(t) = load(file)? {
            found += 1;
            let _ = writeln!(out, "{title}\n");
            out.push_str(&render(&t.header, &t.rows));
            out.push('\n');
        }
    }
    if found == 0 {
        return Err(Error::MissingInput(format!("no run outputs in {}", dir.display())));
    }
    Ok(out)
}
