//! Theoretical price `Σ_q E[exp{d̃ + z_q}]` and the mixed second moment.

use nalgebra::{DMatrix, DVector};

use super::context::ForecastContext;
use super::engine::{PricingEngine, SeriesConfig};
use super::series::{Propagator, SumTracker, TailMonitor};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Output of a series valuation for a set of companies.
#[derive(Debug, Clone)]
pub struct ValuationResult<T: Scalar> {
    /// Company indices, in the order of every per-company field below.
    pub companies: Vec<usize>,
    pub price: DVector<T>,
    /// Filled by [`PricingEngine::value`] when second moments are requested;
    /// `None` entries failed their convergence gate.
    pub second_moment: Option<Vec<Vec<Option<T>>>>,
    pub terms_used: Vec<usize>,
    pub truncation_error_bound: Vec<T>,
    /// Per-company terms `ŝ_{i,q}`, `q = 1, 2, ...`.
    pub trace: Option<Vec<Vec<T>>>,
}

/// One entry of the second-moment matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixedMoment<T: Scalar> {
    pub value: T,
    pub terms: (usize, usize),
    pub truncation_error_bound: T,
}

/// Per-company ingredients of the double series, `q = 1..=len`.
struct Marginal<T: Scalar> {
    /// `d̃_i + E(e_i'z_q | F_t)`.
    level: Vec<T>,
    /// `Var(e_i'z_q | F_t)`.
    var: Vec<T>,
    /// `Ψ_k' J_{g,k}' e_i` with `Ψ_k = Φ_0 + ... + Φ_k`, `k = 0..len`.
    u: Vec<DVector<T>>,
    /// Dominating series `exp{level + var}` and its tail monitor.
    envelope: TailMonitor<T>,
}

impl<T: Scalar> PricingEngine<T> {
    /// Theoretical price of every company given dividends and factors.
    pub fn theoretical_price(&self, ctx: &ForecastContext<T>, cfg: &SeriesConfig) -> Result<ValuationResult<T>> {
        let all: Vec<usize> = (0..self.m()).collect();
        self.theoretical_price_of(ctx, &all, cfg)
    }

    pub fn theoretical_price_of(
        &self,
        ctx: &ForecastContext<T>,
        companies: &[usize],
        cfg: &SeriesConfig,
    ) -> Result<ValuationResult<T>> {
        self.price_series(ctx, 0, companies, cfg)
    }

    /// Sum of `E[exp{Σ_{j≤r} g̃_{t+j} + Σ_{j=r+1}^{r+q} (g̃ - k̃)_{t+j}}] d_t`
    /// over `q ≥ 1`; `r = 0` is the theoretical price at the origin.
    pub(crate) fn price_series(
        &self,
        ctx: &ForecastContext<T>,
        offset: usize,
        companies: &[usize],
        cfg: &SeriesConfig,
    ) -> Result<ValuationResult<T>> {
        self.check_context(ctx)?;
        for &i in companies {
            self.check_company(i)?;
        }
        if !cfg.skip_gate {
            let report = self.check_convergence()?;
            for &i in companies {
                if !report.first_ok[i] {
                    return Err(Error::NotConvergent {
                        company: i,
                        lhs: report.first_moment_lhs[i].to_f64_lossy(),
                    });
                }
            }
        }

        let k = companies.len();
        let pick = |sel: &DMatrix<T>| sel.select_rows(companies.iter()).transpose();
        let w_growth = pick(&self.selectors.j_g);
        let w_gap = pick(&self.selectors.j_gk);
        let log_d: Vec<T> = companies.iter().map(|&i| ctx.log_dividends_now[i]).collect();

        let mut prop = Propagator::new(&self.model, &self.companion, &ctx.state);
        let mut tracker = SumTracker::new(self.companion.dim(), k);
        for _ in 0..offset {
            prop.advance();
            tracker.update(&prop, &w_growth);
        }

        let tol = T::lit(cfg.tol);
        let half = T::lit(0.5);
        let mut monitors: Vec<TailMonitor<T>> = (0..k).map(|_| TailMonitor::new()).collect();
        let mut done = vec![false; k];
        let mut trace: Option<Vec<Vec<T>>> = cfg.keep_trace.then(|| vec![Vec::new(); k]);
        let mut q = 0usize;
        while done.iter().any(|d| !d) {
            if q >= cfg.max_terms {
                return Err(Error::TailBoundNotReached { terms: q });
            }
            q += 1;
            prop.advance();
            tracker.update(&prop, &w_gap);
            for c in 0..k {
                if done[c] {
                    continue;
                }
                let log_term = log_d[c] + tracker.mean[c] + half * tracker.var[c];
                let term = monitors[c].push_log(log_term);
                if let Some(tr) = trace.as_mut() {
                    tr[c].push(term);
                }
                if !monitors[c].partial.is_finite_value() {
                    return Err(Error::TailBoundNotReached { terms: q });
                }
                done[c] = monitors[c].certified(tol);
            }
        }

        Ok(ValuationResult {
            companies: companies.to_vec(),
            price: DVector::from_iterator(k, monitors.iter().map(|m| m.partial)),
            second_moment: None,
            terms_used: monitors.iter().map(|m| m.terms).collect(),
            truncation_error_bound: monitors
                .iter()
                .map(|m| m.bound.unwrap_or_else(T::zero))
                .collect(),
            trace,
        })
    }

    /// `E(P_{i1,t} P_{i2,t} | F_t)` as a double lognormal series.
    ///
    /// Each term is dominated by `exp{a_1 + v_1} exp{a_2 + v_2}` (the
    /// covariance term is at most the mean of the two variances), so the
    /// double tail is bounded through the two marginal envelope series.
    pub fn mixed_moment(
        &self,
        ctx: &ForecastContext<T>,
        i1: usize,
        i2: usize,
        cfg: &SeriesConfig,
    ) -> Result<MixedMoment<T>> {
        self.check_context(ctx)?;
        self.check_company(i1)?;
        self.check_company(i2)?;
        if !cfg.skip_gate {
            let report = self.check_convergence()?;
            if !report.second_ok[i1][i2] {
                let worst = if report.second_moment_lhs[(i1, i1)] >= report.second_moment_lhs[(i2, i2)] {
                    i1
                } else {
                    i2
                };
                return Err(Error::NotConvergent {
                    company: worst,
                    lhs: report.second_moment_lhs[(i1, i2)].to_f64_lossy(),
                });
            }
        }

        let tol = T::lit(cfg.tol);
        let half = T::lit(0.5);
        let sigma = self.model.sigma();
        let mut eps = tol * half;
        let mut first = self.marginal(ctx, i1, eps, cfg.max_terms)?;
        let mut second = if i1 == i2 {
            None
        } else {
            Some(self.marginal(ctx, i2, eps, cfg.max_terms)?)
        };

        for _ in 0..12 {
            let m2 = second.as_ref().unwrap_or(&first);
            let (q1, q2) = (first.level.len(), m2.level.len());

            // c(q1, q2) = c(q1-1, q2-1) + u1_{q1-1}' Σ u2_{q2-1}
            let sigma_u2 = DMatrix::from_fn(sigma.nrows(), q2, |r, c| sigma.row(r).dot(&m2.u[c].transpose()));
            let mut prev_row = vec![T::zero(); q2 + 1];
            let mut row = vec![T::zero(); q2 + 1];
            let mut total = T::zero();
            for a in 1..=q1 {
                let u1 = &first.u[a - 1];
                let mut row_sum = T::zero();
                for b in 1..=q2 {
                    let f = u1.dot(&sigma_u2.column(b - 1));
                    row[b] = prev_row[b - 1] + f;
                    let log_term = first.level[a - 1]
                        + m2.level[b - 1]
                        + half * (first.var[a - 1] + m2.var[b - 1])
                        + row[b];
                    row_sum += log_term.exp();
                }
                total += row_sum;
                std::mem::swap(&mut prev_row, &mut row);
            }
            if !total.is_finite_value() {
                return Err(Error::TailBoundNotReached { terms: q1.max(q2) });
            }

            let (h1, t1) = (first.envelope.partial, first.envelope.bound.unwrap_or_else(T::zero));
            let (h2, t2) = (m2.envelope.partial, m2.envelope.bound.unwrap_or_else(T::zero));
            let bound = t1 * (h2 + t2) + h1 * t2;
            if bound <= tol * total {
                return Ok(MixedMoment {
                    value: total,
                    terms: (q1, q2),
                    truncation_error_bound: bound,
                });
            }
            // Tighten the marginal tolerance in proportion to the shortfall.
            let ratio = (tol * total) / bound;
            eps = eps * ratio.max(T::lit(1e-6)) * half;
            first = self.marginal(ctx, i1, eps, cfg.max_terms)?;
            if i1 != i2 {
                second = Some(self.marginal(ctx, i2, eps, cfg.max_terms)?);
            }
        }
        Err(Error::TailBoundNotReached {
            terms: cfg.max_terms,
        })
    }

    /// Second-moment matrix; pairs that fail their gate are `None`.
    pub fn second_moments(&self, ctx: &ForecastContext<T>, cfg: &SeriesConfig) -> Result<Vec<Vec<Option<T>>>> {
        let m = self.m();
        let report = if cfg.skip_gate { None } else { Some(self.check_convergence()?) };
        let mut out = vec![vec![None; m]; m];
        for a in 0..m {
            for b in a..m {
                if report.as_ref().is_some_and(|r| !r.second_ok[a][b]) {
                    continue;
                }
                let v = self.mixed_moment(ctx, a, b, cfg)?.value;
                out[a][b] = Some(v);
                out[b][a] = Some(v);
            }
        }
        Ok(out)
    }

    /// Theoretical prices plus, optionally, the second-moment matrix.
    pub fn value(
        &self,
        ctx: &ForecastContext<T>,
        cfg: &SeriesConfig,
        with_second_moments: bool,
    ) -> Result<ValuationResult<T>> {
        let mut res = self.theoretical_price(ctx, cfg)?;
        if with_second_moments {
            res.second_moment = Some(self.second_moments(ctx, cfg)?);
        }
        Ok(res)
    }

    fn marginal(&self, ctx: &ForecastContext<T>, i: usize, eps: T, max_terms: usize) -> Result<Marginal<T>> {
        let n = self.companion.n();
        let w_col = self.selectors.j_gk.row(i).transpose();
        let w = DMatrix::from_column_slice(n, 1, w_col.as_slice());
        let sigma = self.model.sigma();
        let a_t = self.companion.a_star.transpose();

        let mut prop = Propagator::new(&self.model, &self.companion, &ctx.state);
        let mut mean = T::zero();
        let mut var = T::zero();
        // x_k = (A*')^k J' w, so that Φ_k' w = J x_k.
        let mut x = self.companion.j_selector.transpose() * &w_col;
        let mut psi = DVector::<T>::zeros(n);
        let mut out = Marginal {
            level: Vec::new(),
            var: Vec::new(),
            u: Vec::new(),
            envelope: TailMonitor::new(),
        };
        loop {
            if out.level.len() >= max_terms {
                return Err(Error::TailBoundNotReached { terms: max_terms });
            }
            psi += x.rows(0, n);
            x = &a_t * x;
            var += (psi.transpose() * sigma * &psi)[(0, 0)];
            out.u.push(psi.clone());

            prop.advance();
            mean += (w.transpose() * prop.mean.rows(0, n))[(0, 0)];
            let level = ctx.log_dividends_now[i] + mean;
            out.level.push(level);
            out.var.push(var);
            out.envelope.push_log(level + var);
            if !out.envelope.partial.is_finite_value() {
                return Err(Error::TailBoundNotReached { terms: out.level.len() });
            }
            if out.envelope.certified(eps) {
                return Ok(out);
            }
        }
    }

    pub(crate) fn check_context(&self, ctx: &ForecastContext<T>) -> Result<()> {
        self.companion.check_state(&ctx.state)?;
        if ctx.log_dividends_now.len() != self.m() {
            return Err(Error::LengthMismatch(format!(
                "context has {} dividends, model has {} companies",
                ctx.log_dividends_now.len(),
                self.m()
            )));
        }
        Ok(())
    }
}
