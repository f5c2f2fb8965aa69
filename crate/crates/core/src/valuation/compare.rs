//! Monte Carlo comparison of the price-anchored forecast with the forecast
//! that ignores the observed price.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::context::ForecastContext;
use super::engine::{PricingEngine, SeriesConfig};
use super::simulate::{path_rng, PathSampler};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::stats;

/// Hard cap on the series length used to generate origin prices.
const MAX_ORIGIN_TERMS: usize = 5_000;

/// How the origin price `P_t` of each simulated path is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ComparisonRegime {
    /// `P_t` is drawn from the model itself: the discounted dividend sum
    /// along an independent future scenario. Both forecasts are then
    /// conditional expectations of the same variable and share its mean.
    #[default]
    Nested,
    /// `P_t` is the observed price from the context, identical on every
    /// path. Only the mean-squared-error ordering is meaningful here.
    Observed,
}

impl std::fmt::Display for ComparisonRegime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Nested => "nested",
            Self::Observed => "observed",
        })
    }
}

impl std::str::FromStr for ComparisonRegime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nested" => Ok(Self::Nested),
            "observed" => Ok(Self::Observed),
            other => Err(Error::Parse {
                what: "comparison regime".into(),
                value: other.into(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonConfig {
    pub horizon: usize,
    pub n_paths: usize,
    pub seed: u64,
    pub regime: ComparisonRegime,
    pub series: SeriesConfig,
}

/// Per-company summary of the comparison at horizon `r`.
///
/// `X = P_{t+r}`; the `g` forecast conditions on the origin price, the `f`
/// forecast does not. Standard errors are Monte Carlo errors of the
/// reported sample quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport<T: Scalar> {
    pub regime: ComparisonRegime,
    pub horizon: usize,
    pub n_paths: usize,
    pub mse_f: DVector<T>,
    pub mse_g: DVector<T>,
    /// Standard error of the per-path difference `(X-f)² - (X-g)²`.
    pub mse_diff_se: DVector<T>,
    pub mean_f: DVector<T>,
    pub mean_g: DVector<T>,
    pub mean_f_se: DVector<T>,
    pub mean_g_se: DVector<T>,
    pub mean_x: DVector<T>,
    pub mean_x_se: DVector<T>,
    /// Theoretical price at the origin.
    pub theoretical_price: DVector<T>,
    /// Expectation of the shifted dividend series at `t+r` given dividends
    /// and factors only.
    pub series_forecast: DVector<T>,
    /// `a ⊙ P̄ - b`: the price-anchored formula applied to the theoretical
    /// price, i.e. `E[X | F_t]` when `P_t` is generated independently of
    /// the innovations after `t`.
    pub anchored_theoretical_forecast: DVector<T>,
    /// Series length used to generate origin prices (nested regime).
    pub origin_terms: usize,
    pub negativity_fraction: f64,
}

impl<T: Scalar> ComparisonReport<T> {
    /// True when, for every company, the means agree within `k` standard
    /// errors and `mse_g ≤ mse_f + k` standard errors.
    pub fn dominance_holds(&self, k: f64) -> bool {
        let k = T::lit(k);
        (0..self.mse_f.len()).all(|i| {
            let se = (self.mean_f_se[i] * self.mean_f_se[i] + self.mean_g_se[i] * self.mean_g_se[i]).sqrt();
            let means_ok = (self.mean_f[i] - self.mean_g[i]).abs() <= k * se;
            let mse_ok = self.mse_g[i] <= self.mse_f[i] + k * self.mse_diff_se[i];
            means_ok && mse_ok
        })
    }
}

struct PathOutcome<T> {
    x: Vec<T>,
    f_g: Vec<T>,
    negative: bool,
}

impl<T: Scalar> PricingEngine<T> {
    /// Simulates `X = P_{t+r}` and scores both forecasts against it.
    ///
    /// In the nested regime path `p` uses stream `2p` for the future and
    /// stream `2p + 1` for the scenario that prices the origin, so the
    /// origin price is independent of the innovations it is used with.
    pub fn forecast_comparison(&self, ctx: &ForecastContext<T>, cfg: &ComparisonConfig) -> Result<ComparisonReport<T>> {
        if cfg.horizon == 0 {
            return Err(Error::HorizonZero);
        }
        if cfg.n_paths < 2 {
            return Err(Error::InvalidInput("the comparison needs at least two paths".into()));
        }
        self.check_context(ctx)?;
        let observed = match cfg.regime {
            ComparisonRegime::Observed => Some(ctx.prices()?.clone()),
            ComparisonRegime::Nested => None,
        };
        let f_ctx = ctx.without_prices();
        let r = cfg.horizon;
        let m = self.m();

        let theoretical = self.theoretical_price(&f_ctx, &cfg.series)?;
        let all: Vec<usize> = (0..m).collect();
        let series_forecast = self.price_series(&f_ctx, r, &all, &cfg.series)?.price;
        let coef = self.forecast_coefficients(&f_ctx, r)?;
        let anchored = coef.apply(&theoretical.price);
        let origin_terms = theoretical.terms_used.iter().copied().max().unwrap_or(1).min(MAX_ORIGIN_TERMS);

        let f_f = match cfg.regime {
            ComparisonRegime::Nested => anchored.clone(),
            ComparisonRegime::Observed => series_forecast.clone(),
        };

        let sampler = PathSampler::new(self)?;
        let dividends = ctx.dividends_now();
        let layout = self.model.layout();
        let outcomes: Vec<PathOutcome<T>> = (0..cfg.n_paths)
            .into_par_iter()
            .map(|p| {
                let origin = match &observed {
                    Some(prices) => prices.clone(),
                    None => {
                        let mut rng = path_rng(cfg.seed, 2 * p as u64 + 1);
                        let mut log_ratio = vec![T::zero(); m];
                        let mut terms: Vec<Vec<T>> = vec![Vec::with_capacity(origin_terms); m];
                        sampler.run(&mut rng, &ctx.state, origin_terms, |y| {
                            for i in 0..m {
                                log_ratio[i] += y[layout.growth_col(i)] - y[layout.required_col(i)];
                                terms[i].push(log_ratio[i].exp());
                            }
                        });
                        DVector::from_fn(m, |i, _| stats::pairwise_sum(&terms[i]) * dividends[i])
                    }
                };
                let mut rng = path_rng(cfg.seed, 2 * p as u64);
                let mut path = Vec::with_capacity(r);
                sampler.run(&mut rng, &ctx.state, r, |y| path.push(y.clone()));
                let mut negative = false;
                let x = self.roll_prices(&origin, &dividends, &path, |_, pr| {
                    negative |= pr.iter().any(|&v| v < T::zero());
                });
                let f_g = coef.apply(&origin);
                PathOutcome {
                    x: x.iter().copied().collect(),
                    f_g: f_g.iter().copied().collect(),
                    negative,
                }
            })
            .collect();

        let n_paths = cfg.n_paths;
        let column = |f: &dyn Fn(&PathOutcome<T>) -> T| -> Vec<T> { outcomes.iter().map(f).collect() };
        let mut report = ComparisonReport {
            regime: cfg.regime,
            horizon: r,
            n_paths,
            mse_f: DVector::zeros(m),
            mse_g: DVector::zeros(m),
            mse_diff_se: DVector::zeros(m),
            mean_f: f_f.clone(),
            mean_g: DVector::zeros(m),
            mean_f_se: DVector::zeros(m),
            mean_g_se: DVector::zeros(m),
            mean_x: DVector::zeros(m),
            mean_x_se: DVector::zeros(m),
            theoretical_price: theoretical.price.clone(),
            series_forecast,
            anchored_theoretical_forecast: anchored,
            origin_terms: if observed.is_some() { 0 } else { origin_terms },
            negativity_fraction: outcomes.iter().filter(|o| o.negative).count() as f64 / n_paths as f64,
        };
        for i in 0..m {
            let ff = f_f[i];
            let err_f = column(&|o| (o.x[i] - ff) * (o.x[i] - ff));
            let err_g = column(&|o| (o.x[i] - o.f_g[i]) * (o.x[i] - o.f_g[i]));
            let diff: Vec<T> = err_f.iter().zip(&err_g).map(|(a, b)| *a - *b).collect();
            let g = column(&|o| o.f_g[i]);
            let x = column(&|o| o.x[i]);
            report.mse_f[i] = stats::mean(&err_f);
            report.mse_g[i] = stats::mean(&err_g);
            report.mse_diff_se[i] = stats::std_error(&diff);
            report.mean_g[i] = stats::mean(&g);
            report.mean_g_se[i] = stats::std_error(&g);
            report.mean_x[i] = stats::mean(&x);
            report.mean_x_se[i] = stats::std_error(&x);
        }
        Ok(report)
    }
}
