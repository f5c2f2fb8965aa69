//! Price-anchored forecasts and price impulse responses.
//!
//! With `K_r = Σ_{j≤r} k̃_{t+j}` and `G_q = Σ_{j≤q} g̃_{t+j}`, the price
//! recursion gives
//!
//! `P_{t+r} = exp{K_r} ⊙ P_t - Σ_{q=1}^r exp{K_r - K_q + G_q} ⊙ d_t`,
//!
//! so `E[P_{t+r} | G_t] = a ⊙ P_t - b` with `a`, `b` sums of lognormal
//! expectations of linear functionals of the future VAR path.

use nalgebra::{DMatrix, DVector};

use super::context::ForecastContext;
use super::engine::PricingEngine;
use super::series::{Propagator, SumTracker};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `E[P_{t+r} | G_t] = a ⊙ P_t - b`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastCoefficients<T: Scalar> {
    pub horizon: usize,
    /// `E[exp{K_r} | F_t]`.
    pub a: DVector<T>,
    /// `Σ_q E[exp{K_r - K_q + G_q} | F_t] d_t`.
    pub b: DVector<T>,
}

impl<T: Scalar> ForecastCoefficients<T> {
    pub fn apply(&self, prices_now: &DVector<T>) -> DVector<T> {
        self.a.component_mul(prices_now) - &self.b
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriceForecast<T: Scalar> {
    pub horizon: usize,
    pub forecast: DVector<T>,
    pub coefficients: ForecastCoefficients<T>,
}

/// `∂P_{t+r} / ∂ξ_t'`, one row per company.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseResponse<T: Scalar> {
    pub horizon: usize,
    pub matrix: DMatrix<T>,
}

impl<T: Scalar> PricingEngine<T> {
    /// Closed-form coefficients of the price forecast at horizon `r`.
    pub fn forecast_coefficients(&self, ctx: &ForecastContext<T>, r: usize) -> Result<ForecastCoefficients<T>> {
        if r == 0 {
            return Err(Error::HorizonZero);
        }
        self.check_context(ctx)?;
        let m = self.m();
        let n = self.companion.n();
        // Column block 0 carries K_r; block q carries K_r - K_q + G_q.
        let blocks = r + 1;
        let jk_t = self.selectors.j_k.transpose();
        let jg_t = self.selectors.j_g.transpose();
        let mut weights = DMatrix::<T>::zeros(n, m * blocks);
        for b in 0..blocks {
            weights.columns_mut(b * m, m).copy_from(&jk_t);
        }

        let mut prop = Propagator::new(&self.model, &self.companion, &ctx.state);
        let mut tracker = SumTracker::new(self.companion.dim(), m * blocks);
        for j in 1..=r {
            // Step j enters block q through g̃ when j ≤ q.
            for q in j..=r {
                weights.columns_mut(q * m, m).copy_from(&jg_t);
            }
            if j > 1 {
                weights.columns_mut((j - 1) * m, m).copy_from(&jk_t);
            }
            prop.advance();
            tracker.update(&prop, &weights);
        }

        let half = T::lit(0.5);
        let lognormal = |c: usize| (tracker.mean[c] + half * tracker.var[c]).exp();
        let a = DVector::from_fn(m, |i, _| lognormal(i));
        let b = DVector::from_fn(m, |i, _| {
            let terms: Vec<T> = (1..blocks).map(|q| lognormal(q * m + i)).collect();
            crate::stats::pairwise_sum(&terms) * ctx.log_dividends_now[i].exp()
        });
        Ok(ForecastCoefficients { horizon: r, a, b })
    }

    /// `E[P_{t+r} | G_t]` given the observed prices in `ctx`.
    pub fn price_forecast(&self, ctx: &ForecastContext<T>, r: usize) -> Result<PriceForecast<T>> {
        let prices = ctx.prices()?;
        let coefficients = self.forecast_coefficients(ctx, r)?;
        Ok(PriceForecast {
            horizon: r,
            forecast: coefficients.apply(prices),
            coefficients,
        })
    }

    /// Conditional-mean path `E(y_{t+j} | F_t)`, `j = 1..=r`.
    pub fn mean_path(&self, ctx: &ForecastContext<T>, r: usize) -> Result<Vec<DVector<T>>> {
        self.check_context(ctx)?;
        let mut state = ctx.state.clone();
        Ok((0..r)
            .map(|_| {
                state = self.companion.step(&state);
                state.rows(0, self.companion.n()).into_owned()
            })
            .collect())
    }

    /// Prices along a realised path `y_{t+1}, ..., y_{t+r}` from the
    /// observed prices and dividends at the origin.
    pub fn prices_along_path(&self, ctx: &ForecastContext<T>, path: &[DVector<T>]) -> Result<DVector<T>> {
        let prices = ctx.prices()?;
        Ok(self.roll_prices(prices, &ctx.dividends_now(), path, |_, _| ()))
    }

    /// Price IRF with future rates set to their conditional means.
    pub fn price_irf(&self, ctx: &ForecastContext<T>, r: usize) -> Result<ImpulseResponse<T>> {
        if r == 0 {
            return Err(Error::HorizonZero);
        }
        let path = self.mean_path(ctx, r)?;
        self.price_irf_along(ctx, &path)
    }

    /// Price IRF with future rates taken from a realised path.
    pub fn price_irf_along(&self, ctx: &ForecastContext<T>, path: &[DVector<T>]) -> Result<ImpulseResponse<T>> {
        let r = path.len();
        if r == 0 {
            return Err(Error::HorizonZero);
        }
        self.check_context(ctx)?;
        let prices = ctx.prices()?;
        let n = self.companion.n();
        if path.iter().any(|y| y.len() != n) {
            return Err(Error::LengthMismatch(format!("path entries must have length {n}")));
        }
        let m = self.m();
        let phis = self.phis(r);
        // Prefix sums S_q = Φ_1 + ... + Φ_q.
        let mut prefix = vec![DMatrix::<T>::zeros(n, n)];
        for q in 1..=r {
            let next = &prefix[q - 1] + &phis[q];
            prefix.push(next);
        }
        let log_k: Vec<DVector<T>> = path.iter().map(|y| &self.selectors.j_k * y).collect();
        let log_g: Vec<DVector<T>> = path.iter().map(|y| &self.selectors.j_g * y).collect();
        let dividends = ctx.dividends_now();

        let mut out = DMatrix::<T>::zeros(m, n);
        for i in 0..m {
            let kc = self.model.layout().required_col(i);
            let gc = self.model.layout().growth_col(i);
            // K[q] = Σ_{j≤q} k̃_i, G[q] = Σ_{j≤q} g̃_i.
            let mut k_cum = vec![T::zero(); r + 1];
            let mut g_cum = vec![T::zero(); r + 1];
            for j in 1..=r {
                k_cum[j] = k_cum[j - 1] + log_k[j - 1][i];
                g_cum[j] = g_cum[j - 1] + log_g[j - 1][i];
            }
            let mut row = prefix[r].row(kc) * (k_cum[r].exp() * prices[i]);
            for q in 1..=r {
                let w = (k_cum[r] - k_cum[q] + g_cum[q]).exp() * dividends[i];
                let grad = (prefix[r].row(kc) - prefix[q].row(kc)) + prefix[q].row(gc);
                row -= grad * w;
            }
            out.row_mut(i).copy_from(&row);
        }
        Ok(ImpulseResponse { horizon: r, matrix: out })
    }

    /// Runs the one-step price and dividend recursion along `path`,
    /// calling `visit(step, prices)` after each step.
    pub(crate) fn roll_prices(
        &self,
        prices_now: &DVector<T>,
        dividends_now: &DVector<T>,
        path: &[DVector<T>],
        mut visit: impl FnMut(usize, &DVector<T>),
    ) -> DVector<T> {
        let layout = self.model.layout();
        let mut price = prices_now.clone();
        let mut div = dividends_now.clone();
        for (j, y) in path.iter().enumerate() {
            for i in 0..self.m() {
                div[i] *= y[layout.growth_col(i)].exp();
                price[i] = y[layout.required_col(i)].exp() * price[i] - div[i];
            }
            visit(j + 1, &price);
        }
        price
    }
}
