//! Dated panels of asset and factor returns.

use std::collections::HashMap;

use chrono::NaiveDate;

use crate::error::{Error, Result};

fn check_dates(dates: &[NaiveDate]) -> Result<()> {
    if let Some(w) = dates.windows(2).find(|w| w[0] >= w[1]) {
        return Err(Error::Domain(format!(
            "dates must be strictly increasing ({} then {})",
            w[0], w[1]
        )));
    }
    Ok(())
}

fn check_unique(names: &[String], what: &str) -> Result<()> {
    let mut seen = HashMap::new();
    for (i, n) in names.iter().enumerate() {
        if seen.insert(n.as_str(), i).is_some() {
            return Err(Error::Duplicate {
                row: i,
                key: format!("{what} {n}"),
            });
        }
    }
    Ok(())
}

/// Monthly asset returns; `None` marks months the asset is outside the index.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnsPanel {
    dates: Vec<NaiveDate>,
    assets: Vec<String>,
    /// Indexed `[asset][date]`.
    values: Vec<Vec<Option<f64>>>,
}

impl ReturnsPanel {
    pub fn new(dates: Vec<NaiveDate>, assets: Vec<String>, values: Vec<Vec<Option<f64>>>) -> Result<Self> {
        check_dates(&dates)?;
        check_unique(&assets, "asset")?;
        if values.len() != assets.len() || values.iter().any(|v| v.len() != dates.len()) {
            return Err(Error::Dimension(format!(
                "panel needs {} assets x {} dates",
                assets.len(),
                dates.len()
            )));
        }
        if values.iter().flatten().flatten().any(|r| !r.is_finite()) {
            return Err(Error::DegenerateData("non-finite return in panel".into()));
        }
        Ok(Self { dates, assets, values })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn assets(&self) -> &[String] {
        &self.assets
    }

    pub fn n_assets(&self) -> usize {
        self.assets.len()
    }

    pub fn n_dates(&self) -> usize {
        self.dates.len()
    }

    pub fn series(&self, asset: usize) -> &[Option<f64>] {
        &self.values[asset]
    }

    pub fn get(&self, asset: usize, date: usize) -> Option<f64> {
        self.values[asset][date]
    }

    pub fn asset_index(&self, name: &str) -> Option<usize> {
        self.assets.iter().position(|a| a == name)
    }

    pub fn date_index(&self, date: NaiveDate) -> Option<usize> {
        self.dates.binary_search(&date).ok()
    }
}

/// Returns of named factors on a common date axis.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorSeries {
    dates: Vec<NaiveDate>,
    names: Vec<String>,
    /// Indexed `[factor][date]`.
    values: Vec<Vec<f64>>,
}

impl FactorSeries {
    pub fn new(dates: Vec<NaiveDate>, names: Vec<String>, values: Vec<Vec<f64>>) -> Result<Self> {
        check_dates(&dates)?;
        check_unique(&names, "factor")?;
        if values.len() != names.len() || values.iter().any(|v| v.len() != dates.len()) {
            return Err(Error::Dimension(format!(
                "factor table needs {} factors x {} dates",
                names.len(),
                dates.len()
            )));
        }
        if values.iter().flatten().any(|r| !r.is_finite()) {
            return Err(Error::DegenerateData("non-finite factor return".into()));
        }
        Ok(Self { dates, names, values })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&[f64]> {
        self.names.iter().position(|n| n == name).map(|i| self.values[i].as_slice())
    }

    pub fn column(&self, i: usize) -> &[f64] {
        &self.values[i]
    }

    pub fn date_index(&self, date: NaiveDate) -> Option<usize> {
        self.dates.binary_search(&date).ok()
    }

    /// Adds a factor on the same dates.
    pub fn with_factor(mut self, name: &str, values: Vec<f64>) -> Result<Self> {
        self.names.push(name.to_string());
        self.values.push(values);
        Self::new(self.dates, self.names, self.values)
    }

    /// Sub-table with the named factors, in the given order.
    pub fn select(&self, names: &[&str]) -> Result<Self> {
        let mut cols = Vec::with_capacity(names.len());
        for n in names {
            cols.push(
                self.get(n)
                    .ok_or_else(|| Error::MissingInput(format!("factor {n}")))?
                    .to_vec(),
            );
        }
        Self::new(self.dates.clone(), names.iter().map(|s| s.to_string()).collect(), cols)
    }

    /// Joins two tables on their common dates.
    pub fn merge(&self, other: &FactorSeries) -> Result<Self> {
        let common: Vec<(usize, usize)> = self
            .dates
            .iter()
            .enumerate()
            .filter_map(|(i, d)| other.date_index(*d).map(|j| (i, j)))
            .collect();
        let dates = common.iter().map(|&(i, _)| self.dates[i]).collect();
        let mut names = self.names.clone();
        names.extend(other.names.iter().cloned());
        let mut values: Vec<Vec<f64>> = self
            .values
            .iter()
            .map(|v| common.iter().map(|&(i, _)| v[i]).collect())
            .collect();
        values.extend(other.values.iter().map(|v| common.iter().map(|&(_, j)| v[j]).collect()));
        Self::new(dates, names, values)
    }
}

/// Month-end dates starting at the month containing `start`.
pub fn month_ends(start: NaiveDate, count: usize) -> Vec<NaiveDate> {
    use chrono::{Datelike, Months};
    let first = NaiveDate::from_ymd_opt(start.year(), start.month(), 1).expect("valid month start");
    (0..count)
        .map(|k| {
            first
                .checked_add_months(Months::new(k as u32 + 1))
                .and_then(|d| d.pred_opt())
                .expect("date in range")
        })
        .collect()
}
