use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Sampling frequency of a panel. Consecutive dates must be exactly one
/// period apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frequency {
    Daily,
    Weekly,
    Monthly,
    Quarterly,
    Annual,
}

impl Frequency {
    /// True when `next` is exactly one period after `prev`.
    pub fn is_successor(&self, prev: NaiveDate, next: NaiveDate) -> bool {
        let month_index = |d: NaiveDate| d.year() as i64 * 12 + d.month0() as i64;
        match self {
            Frequency::Daily => (next - prev).num_days() == 1,
            Frequency::Weekly => (next - prev).num_days() == 7,
            Frequency::Monthly => month_index(next) - month_index(prev) == 1,
            Frequency::Quarterly => month_index(next) - month_index(prev) == 3,
            Frequency::Annual => next.year() - prev.year() == 1,
        }
    }
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Frequency::Daily => "daily",
            Frequency::Weekly => "weekly",
            Frequency::Monthly => "monthly",
            Frequency::Quarterly => "quarterly",
            Frequency::Annual => "annual",
        };
        f.write_str(s)
    }
}

impl FromStr for Frequency {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "daily" | "d" => Ok(Frequency::Daily),
            "weekly" | "w" => Ok(Frequency::Weekly),
            "monthly" | "m" => Ok(Frequency::Monthly),
            "quarterly" | "q" => Ok(Frequency::Quarterly),
            "annual" | "yearly" | "a" | "y" => Ok(Frequency::Annual),
            other => Err(Error::Parse {
                what: "frequency".into(),
                value: other.into(),
            }),
        }
    }
}

/// Column names of the long-format panel file and the declared frequency.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PanelSchema {
    pub date: String,
    pub company: String,
    pub price: String,
    pub dividend: String,
    pub frequency: Frequency,
}

impl Default for PanelSchema {
    fn default() -> Self {
        Self {
            date: "date".into(),
            company: "company".into(),
            price: "price".into(),
            dividend: "dividend".into(),
            frequency: Frequency::Annual,
        }
    }
}

/// Aligned prices, dividends and macro series for `m` companies over `T + 1`
/// dates. Rows are sorted by date and spaced exactly one period apart.
#[derive(Debug, Clone, PartialEq)]
pub struct CompanyPanel<T: Scalar> {
    timestamps: Vec<NaiveDate>,
    prices: DMatrix<T>,
    dividends: DMatrix<T>,
    macro_data: DMatrix<T>,
    company_ids: Vec<String>,
    macro_ids: Vec<String>,
    frequency: Frequency,
}

impl<T: Scalar> CompanyPanel<T> {
    /// Validate and build a panel. Rows may come in any order; they are
    /// sorted by date.
    pub fn new(
        timestamps: Vec<NaiveDate>,
        prices: DMatrix<T>,
        dividends: DMatrix<T>,
        macro_data: DMatrix<T>,
        company_ids: Vec<String>,
        macro_ids: Vec<String>,
        frequency: Frequency,
    ) -> Result<Self> {
        let rows = timestamps.len();
        let m = company_ids.len();
        let ell = macro_ids.len();
        if m == 0 {
            return Err(Error::InvalidInput("panel needs at least one company".into()));
        }
        if rows < 2 {
            return Err(Error::InsufficientData { rows, needed: 2 });
        }
        if prices.shape() != (rows, m) || dividends.shape() != (rows, m) {
            return Err(Error::LengthMismatch(format!(
                "prices {:?} / dividends {:?} do not match {rows} dates x {m} companies",
                prices.shape(),
                dividends.shape()
            )));
        }
        if macro_data.shape() != (rows, ell) {
            return Err(Error::LengthMismatch(format!(
                "macro block {:?} does not match {rows} dates x {ell} series",
                macro_data.shape()
            )));
        }

        let mut order: Vec<usize> = (0..rows).collect();
        order.sort_by_key(|&r| timestamps[r]);
        let timestamps: Vec<NaiveDate> = order.iter().map(|&r| timestamps[r]).collect();
        let prices = prices.select_rows(order.iter());
        let dividends = dividends.select_rows(order.iter());
        let macro_data = macro_data.select_rows(order.iter());

        for w in timestamps.windows(2) {
            if w[0] == w[1] {
                return Err(Error::DuplicateDate {
                    date: w[0].to_string(),
                    company: None,
                });
            }
            if !frequency.is_successor(w[0], w[1]) {
                return Err(Error::FrequencyGap {
                    prev: w[0].to_string(),
                    next: w[1].to_string(),
                    frequency: frequency.to_string(),
                });
            }
        }
        for r in 0..rows {
            for i in 0..m {
                let p = prices[(r, i)];
                if !(p > T::zero()) || !p.is_finite_value() {
                    return Err(Error::NonPositivePrice {
                        company: company_ids[i].clone(),
                        date: timestamps[r].to_string(),
                        value: p.to_f64_lossy(),
                    });
                }
                let d = dividends[(r, i)];
                if !(d > T::zero()) || !d.is_finite_value() {
                    return Err(Error::NonPositiveDividend {
                        company: company_ids[i].clone(),
                        date: timestamps[r].to_string(),
                        value: d.to_f64_lossy(),
                    });
                }
            }
            for j in 0..ell {
                if !macro_data[(r, j)].is_finite_value() {
                    return Err(Error::Parse {
                        what: format!("macro value `{}`", macro_ids[j]),
                        value: macro_data[(r, j)].to_f64_lossy().to_string(),
                    });
                }
            }
        }

        Ok(Self {
            timestamps,
            prices,
            dividends,
            macro_data,
            company_ids,
            macro_ids,
            frequency,
        })
    }

    pub fn timestamps(&self) -> &[NaiveDate] {
        &self.timestamps
    }

    /// `(T+1) x m` price matrix.
    pub fn prices(&self) -> &DMatrix<T> {
        &self.prices
    }

    /// `(T+1) x m` dividend matrix.
    pub fn dividends(&self) -> &DMatrix<T> {
        &self.dividends
    }

    /// `(T+1) x ell` macro matrix.
    pub fn macro_data(&self) -> &DMatrix<T> {
        &self.macro_data
    }

    pub fn company_ids(&self) -> &[String] {
        &self.company_ids
    }

    pub fn macro_ids(&self) -> &[String] {
        &self.macro_ids
    }

    pub fn frequency(&self) -> Frequency {
        self.frequency
    }

    pub fn n_companies(&self) -> usize {
        self.company_ids.len()
    }

    pub fn n_macro(&self) -> usize {
        self.macro_ids.len()
    }

    /// Number of dates, `T + 1`.
    pub fn n_rows(&self) -> usize {
        self.timestamps.len()
    }

    /// Same panel with companies listed in `order`.
    pub fn reorder_companies<S: AsRef<str>>(&self, order: &[S]) -> Result<Self> {
        if order.len() != self.company_ids.len() {
            return Err(Error::LengthMismatch(format!(
                "expected {} company ids, got {}",
                self.company_ids.len(),
                order.len()
            )));
        }
        let mut idx = Vec::with_capacity(order.len());
        for id in order {
            let pos = self
                .company_ids
                .iter()
                .position(|c| c == id.as_ref())
                .ok_or_else(|| Error::InvalidInput(format!("unknown company `{}`", id.as_ref())))?;
            if idx.contains(&pos) {
                return Err(Error::InvalidInput(format!("company `{}` listed twice", id.as_ref())));
            }
            idx.push(pos);
        }
        Ok(Self {
            timestamps: self.timestamps.clone(),
            prices: self.prices.select_columns(idx.iter()),
            dividends: self.dividends.select_columns(idx.iter()),
            macro_data: self.macro_data.clone(),
            company_ids: idx.iter().map(|&k| self.company_ids[k].clone()).collect(),
            macro_ids: self.macro_ids.clone(),
            frequency: self.frequency,
        })
    }
}

/// Load a long-format `date,company,price,dividend` file and an optional
/// wide macro file `date,<macro_id>...`.
pub fn load_panel<T: Scalar>(
    path: impl AsRef<Path>,
    macro_path: Option<&Path>,
    schema: &PanelSchema,
) -> Result<CompanyPanel<T>> {
    let panel = std::fs::File::open(path.as_ref())?;
    match macro_path {
        Some(mp) => {
            let macro_file = std::fs::File::open(mp)?;
            read_panel(panel, Some(macro_file), schema)
        }
        None => read_panel::<T, _>(panel, None::<std::fs::File>, schema),
    }
}

/// Reader-based variant of [`load_panel`].
pub fn read_panel<T: Scalar, R: Read>(
    panel: R,
    macro_data: Option<R>,
    schema: &PanelSchema,
) -> Result<CompanyPanel<T>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(panel);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let (c_date, c_company, c_price, c_div) = (
        col(&schema.date)?,
        col(&schema.company)?,
        col(&schema.price)?,
        col(&schema.dividend)?,
    );

    let mut cells: BTreeMap<NaiveDate, BTreeMap<String, (f64, f64)>> = BTreeMap::new();
    let mut companies = BTreeSet::new();
    for rec in rdr.records() {
        let rec = rec?;
        let date = parse_date(rec.get(c_date).unwrap_or(""))?;
        let company = rec.get(c_company).unwrap_or("").to_string();
        if company.is_empty() {
            return Err(Error::Parse {
                what: "company id".into(),
                value: String::new(),
            });
        }
        let price = parse_number(&schema.price, rec.get(c_price).unwrap_or(""))?;
        let dividend = parse_number(&schema.dividend, rec.get(c_div).unwrap_or(""))?;
        if !(price > 0.0) {
            return Err(Error::NonPositivePrice {
                company,
                date: date.to_string(),
                value: price,
            });
        }
        if !(dividend > 0.0) {
            return Err(Error::NonPositiveDividend {
                company,
                date: date.to_string(),
                value: dividend,
            });
        }
        companies.insert(company.clone());
        let row = cells.entry(date).or_default();
        if row.insert(company.clone(), (price, dividend)).is_some() {
            return Err(Error::DuplicateDate {
                date: date.to_string(),
                company: Some(company),
            });
        }
    }

    let dates: Vec<NaiveDate> = cells.keys().copied().collect();
    let company_ids: Vec<String> = companies.into_iter().collect();
    let rows = dates.len();
    let m = company_ids.len();
    let mut prices = DMatrix::<T>::zeros(rows, m);
    let mut dividends = DMatrix::<T>::zeros(rows, m);
    for (r, (date, row)) in cells.iter().enumerate() {
        for (i, id) in company_ids.iter().enumerate() {
            let (p, d) = row.get(id).ok_or_else(|| Error::MissingObservation {
                series: id.clone(),
                date: date.to_string(),
            })?;
            prices[(r, i)] = T::lit(*p);
            dividends[(r, i)] = T::lit(*d);
        }
    }

    let (macro_ids, macro_matrix) = match macro_data {
        Some(reader) => read_macro(reader, &schema.date, &dates)?,
        None => (Vec::new(), DMatrix::<T>::zeros(rows, 0)),
    };

    CompanyPanel::new(
        dates,
        prices,
        dividends,
        macro_matrix,
        company_ids,
        macro_ids,
        schema.frequency,
    )
}

fn read_macro<T: Scalar, R: Read>(
    reader: R,
    date_col: &str,
    dates: &[NaiveDate],
) -> Result<(Vec<String>, DMatrix<T>)> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let c_date = headers
        .iter()
        .position(|h| h == date_col)
        .ok_or_else(|| Error::MissingColumn(date_col.to_string()))?;
    let ids: Vec<(usize, String)> = headers
        .iter()
        .enumerate()
        .filter(|(k, _)| *k != c_date)
        .map(|(k, h)| (k, h.to_string()))
        .collect();

    let mut by_date: BTreeMap<NaiveDate, Vec<f64>> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let date = parse_date(rec.get(c_date).unwrap_or(""))?;
        let values = ids
            .iter()
            .map(|(k, id)| parse_number(id, rec.get(*k).unwrap_or("")))
            .collect::<Result<Vec<f64>>>()?;
        if by_date.insert(date, values).is_some() {
            return Err(Error::DuplicateDate {
                date: date.to_string(),
                company: None,
            });
        }
    }

    let mut out = DMatrix::<T>::zeros(dates.len(), ids.len());
    for (r, date) in dates.iter().enumerate() {
        let values = by_date.get(date).ok_or_else(|| Error::MissingObservation {
            series: "macro".into(),
            date: date.to_string(),
        })?;
        for (j, v) in values.iter().enumerate() {
            out[(r, j)] = T::lit(*v);
        }
    }
    Ok((ids.into_iter().map(|(_, id)| id).collect(), out))
}

pub(crate) fn parse_date(s: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|_| Error::Parse {
        what: "date".into(),
        value: s.into(),
    })
}

fn parse_number(column: &str, s: &str) -> Result<f64> {
    let v: f64 = s.parse().map_err(|_| Error::Parse {
        what: format!("value in column `{column}`"),
        value: s.into(),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            what: format!("value in column `{column}`"),
            value: s.into(),
        });
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(csv: &str) -> Result<CompanyPanel<f64>> {
        read_panel(csv.as_bytes(), None, &PanelSchema::default())
    }

    #[test]
    fn parses_three_rows() {
        let p = read(
            "date,company,price,dividend\n\
             2020-01-01,ACME,100,1\n2021-01-01,ACME,102,2\n2022-01-01,ACME,105,2\n",
        )
        .unwrap();
        assert_eq!(p.n_rows(), 3);
        assert_eq!(p.n_companies(), 1);
        assert_eq!(p.prices().column(0).as_slice(), &[100.0, 102.0, 105.0]);
        assert_eq!(p.dividends().column(0).as_slice(), &[1.0, 2.0, 2.0]);
    }

    #[test]
    fn zero_dividend_rejected() {
        let err = read(
            "date,company,price,dividend\n2020-01-01,ACME,100,1\n2021-01-01,ACME,102,0\n",
        )
        .unwrap_err();
        assert!(matches!(err, Error::NonPositiveDividend { .. }), "{err}");
    }

    #[test]
    fn negative_price_rejected() {
        let err = read(
            "date,company,price,dividend\n2020-01-01,ACME,-1,1\n2021-01-01,ACME,102,1\n",
        )
        .unwrap_err();
        assert!(matches!(err, Error::NonPositivePrice { .. }));
    }

    #[test]
    fn shuffled_dates_sort() {
        let sorted = read(
            "date,company,price,dividend\n\
             2020-01-01,ACME,100,1\n2021-01-01,ACME,102,2\n2022-01-01,ACME,105,2\n",
        )
        .unwrap();
        let shuffled = read(
            "date,company,price,dividend\n\
             2022-01-01,ACME,105,2\n2020-01-01,ACME,100,1\n2021-01-01,ACME,102,2\n",
        )
        .unwrap();
        assert_eq!(sorted, shuffled);
    }

    #[test]
    fn missing_column() {
        let err = read("date,company,price\n2020-01-01,ACME,100\n").unwrap_err();
        assert!(matches!(err, Error::MissingColumn(ref c) if c == "dividend"));
    }

    #[test]
    fn duplicate_date() {
        let err = read(
            "date,company,price,dividend\n2020-01-01,ACME,100,1\n2020-01-01,ACME,101,1\n",
        )
        .unwrap_err();
        assert!(matches!(err, Error::DuplicateDate { .. }));
    }

    #[test]
    fn frequency_gap() {
        let err = read(
            "date,company,price,dividend\n2020-01-01,ACME,100,1\n2022-01-01,ACME,101,1\n",
        )
        .unwrap_err();
        assert!(matches!(err, Error::FrequencyGap { .. }));
    }

    #[test]
    fn quarterly_month_ends_are_contiguous() {
        let f = Frequency::Quarterly;
        let d = |s| parse_date(s).unwrap();
        assert!(f.is_successor(d("2020-03-31"), d("2020-06-30")));
        assert!(f.is_successor(d("2020-09-30"), d("2020-12-31")));
        assert!(!f.is_successor(d("2020-03-31"), d("2020-09-30")));
    }

    #[test]
    fn missing_company_observation() {
        let err = read(
            "date,company,price,dividend\n\
             2020-01-01,A,100,1\n2020-01-01,B,50,1\n2021-01-01,A,101,1\n",
        )
        .unwrap_err();
        assert!(matches!(err, Error::MissingObservation { .. }));
    }

    #[test]
    fn macro_file_aligned() {
        let panel = "date,company,price,dividend\n\
                     2020-01-01,B,50,1\n2020-01-01,A,100,1\n2021-01-01,A,101,1\n2021-01-01,B,51,1\n";
        let macro_csv = "date,gdp,infl\n2021-01-01,2.0,0.5\n2020-01-01,1.5,0.25\n2019-01-01,9,9\n";
        let p: CompanyPanel<f64> = read_panel(
            panel.as_bytes(),
            Some(macro_csv.as_bytes()),
            &PanelSchema::default(),
        )
        .unwrap();
        assert_eq!(p.company_ids(), &["A".to_string(), "B".to_string()]);
        assert_eq!(p.macro_ids(), &["gdp".to_string(), "infl".to_string()]);
        assert_eq!(p.macro_data()[(0, 0)], 1.5);
        assert_eq!(p.macro_data()[(1, 1)], 0.5);
        assert_eq!(p.prices()[(1, 1)], 51.0);
    }

    #[test]
    fn reorder_companies_permutes_columns() {
        let panel = "date,company,price,dividend\n\
                     2020-01-01,A,100,1\n2020-01-01,B,50,2\n2021-01-01,A,101,1\n2021-01-01,B,51,2\n";
        let p: CompanyPanel<f64> = read(panel).unwrap();
        let q = p.reorder_companies(&["B", "A"]).unwrap();
        assert_eq!(q.company_ids(), &["B".to_string(), "A".to_string()]);
        assert_eq!(q.prices().column(0), p.prices().column(1));
        assert!(p.reorder_companies(&["A", "A"]).is_err());
    }
}
