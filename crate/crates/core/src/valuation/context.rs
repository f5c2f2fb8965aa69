use chrono::NaiveDate;
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market_data::{CompanyPanel, VarInput};
use crate::scalar::Scalar;

/// Information available at the forecast origin.
///
/// Without `prices_now` this is the dividends-and-factors information set;
/// with it, the observed price is part of the conditioning information as
/// well.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastContext<T: Scalar> {
    /// Stacked `y*_t = (y_t', ..., y_{t-p+1}')'`.
    pub state: DVector<T>,
    /// `ln d_t` per company.
    pub log_dividends_now: DVector<T>,
    pub prices_now: Option<DVector<T>>,
    pub as_of: Option<NaiveDate>,
}

impl<T: Scalar> ForecastContext<T> {
    pub fn new(
        state: DVector<T>,
        log_dividends_now: DVector<T>,
        prices_now: Option<DVector<T>>,
        as_of: Option<NaiveDate>,
    ) -> Result<Self> {
        if let Some(p) = &prices_now {
            if p.len() != log_dividends_now.len() {
                return Err(Error::LengthMismatch(format!(
                    "{} prices for {} companies",
                    p.len(),
                    log_dividends_now.len()
                )));
            }
            if p.iter().any(|&x| !(x > T::zero()) || !x.is_finite_value()) {
                return Err(Error::InvalidInput("context prices must be positive".into()));
            }
        }
        if state.iter().chain(log_dividends_now.iter()).any(|x| !x.is_finite_value()) {
            return Err(Error::InvalidInput("context has non-finite entries".into()));
        }
        Ok(Self {
            state,
            log_dividends_now,
            prices_now,
            as_of,
        })
    }

    /// Origin at the last sample date: the last `p` observations (newest
    /// first), the last dividends and the last prices.
    pub fn from_sample(input: &VarInput<T>, panel: &CompanyPanel<T>, p: usize) -> Result<Self> {
        let t_len = input.n_obs();
        let n = input.layout.n();
        if p == 0 || t_len < p {
            return Err(Error::InsufficientData { rows: t_len, needed: p.max(1) });
        }
        let mut state = DVector::zeros(n * p);
        for lag in 0..p {
            let row = input.observations.row(t_len - 1 - lag);
            for c in 0..n {
                state[lag * n + c] = row[c];
            }
        }
        let last = panel.n_rows() - 1;
        let log_div = panel.dividends().row(last).transpose().map(|d| d.ln());
        let prices = panel.prices().row(last).transpose();
        Self::new(state, log_div, Some(prices), panel.timestamps().last().copied())
    }

    /// Same context without the observed price.
    pub fn without_prices(&self) -> Self {
        Self {
            prices_now: None,
            ..self.clone()
        }
    }

    pub fn with_prices(&self, prices: DVector<T>) -> Result<Self> {
        Self::new(self.state.clone(), self.log_dividends_now.clone(), Some(prices), self.as_of)
    }

    pub fn dividends_now(&self) -> DVector<T> {
        self.log_dividends_now.map(|x| x.exp())
    }

    pub fn prices(&self) -> Result<&DVector<T>> {
        self.prices_now.as_ref().ok_or(Error::MissingPrices)
    }

    pub fn to_file(&self) -> ContextFile {
        ContextFile {
            state: self.state.iter().map(|x| x.to_f64_lossy()).collect(),
            log_dividends: self.log_dividends_now.iter().map(|x| x.to_f64_lossy()).collect(),
            prices: self
                .prices_now
                .as_ref()
                .map(|p| p.iter().map(|x| x.to_f64_lossy()).collect()),
            as_of: self.as_of,
        }
    }
}

/// JSON form of a [`ForecastContext`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextFile {
    pub state: Vec<f64>,
    pub log_dividends: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prices: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub as_of: Option<NaiveDate>,
}

impl ContextFile {
    pub fn into_context<T: Scalar>(&self) -> Result<ForecastContext<T>> {
        let v = |xs: &[f64]| DVector::from_iterator(xs.len(), xs.iter().map(|&x| T::lit(x)));
        ForecastContext::new(
            v(&self.state),
            v(&self.log_dividends),
            self.prices.as_deref().map(v),
            self.as_of,
        )
    }
}
