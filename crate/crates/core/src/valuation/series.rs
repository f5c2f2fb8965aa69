//! Running Gaussian moments of partial sums `Σ_j C_j' y_{t+j}` and the
//! empirical-ratio truncation rule for lognormal series.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use crate::scalar::Scalar;
use crate::var::{CompanionForm, VarModel};

/// Steps the conditional mean and covariance of the companion state
/// forward from a known origin.
#[derive(Debug, Clone)]
pub(crate) struct Propagator<'a, T: Scalar> {
    companion: &'a CompanionForm<T>,
    shock_cov: DMatrix<T>,
    /// `E(y*_{t+j} | F_t)`.
    pub mean: DVector<T>,
    /// `Cov(y*_{t+j} | F_t)`.
    pub cov: DMatrix<T>,
    pub step: usize,
}

impl<'a, T: Scalar> Propagator<'a, T> {
    pub fn new(model: &VarModel<T>, companion: &'a CompanionForm<T>, state: &DVector<T>) -> Self {
        let j = &companion.j_selector;
        let dim = companion.dim();
        Self {
            companion,
            shock_cov: j.transpose() * model.sigma() * j,
            mean: state.clone(),
            cov: DMatrix::zeros(dim, dim),
            step: 0,
        }
    }

    pub fn advance(&mut self) {
        let a = &self.companion.a_star;
        self.mean = &self.companion.nu_star + a * &self.mean;
        self.cov = a * &self.cov * a.transpose() + &self.shock_cov;
        self.step += 1;
    }
}

/// Mean and variance of `k` partial sums `S_j = S_{j-1} + C_j' y_{t+j}`
/// sharing one [`Propagator`].
///
/// With `x_j` the state deviation and `h_j = Cov(x_j, S_j)`:
/// `Var S_j = Var S_{j-1} + 2 c'J A* h_{j-1} + c'J P_j J'c`,
/// `h_j = A* h_{j-1} + P_j J'c`.
#[derive(Debug, Clone)]
pub(crate) struct SumTracker<T: Scalar> {
    h: DMatrix<T>,
    pub mean: DVector<T>,
    pub var: DVector<T>,
}

impl<T: Scalar> SumTracker<T> {
    pub fn new(dim: usize, k: usize) -> Self {
        Self {
            h: DMatrix::zeros(dim, k),
            mean: DVector::zeros(k),
            var: DVector::zeros(k),
        }
    }

    /// Fold in `y_{t+j}` with weights `c` (`n x k`). Call after the
    /// propagator has advanced to step `j`.
    pub fn update(&mut self, prop: &Propagator<'_, T>, c: &DMatrix<T>) {
        let comp = prop.companion;
        let n = comp.n();
        let ah = &comp.a_star * &self.h;
        let cross = c.transpose() * ah.rows(0, n);
        let p_jt = prop.cov.columns(0, n) * c;
        let own = c.transpose() * p_jt.rows(0, n);
        let two = T::lit(2.0);
        for i in 0..self.var.len() {
            self.var[i] += two * cross[(i, i)] + own[(i, i)];
        }
        self.h = ah + p_jt;
        self.mean += c.transpose() * prop.mean.rows(0, n);
    }
}

/// Stopping rule for a positive series with asymptotically geometric terms.
///
/// After at least `MIN_TERMS` terms, once the last `WINDOW` successive
/// ratios have all been below one, the remaining mass is bounded by the
/// geometric tail at the largest of those ratios.
#[derive(Debug, Clone)]
pub(crate) struct TailMonitor<T: Scalar> {
    recent: VecDeque<T>,
    prev_log: Option<T>,
    pub terms: usize,
    pub partial: T,
    pub bound: Option<T>,
}

pub(crate) const MIN_TERMS: usize = 10;
pub(crate) const WINDOW: usize = 5;

impl<T: Scalar> TailMonitor<T> {
    pub fn new() -> Self {
        Self {
            recent: VecDeque::with_capacity(WINDOW),
            prev_log: None,
            terms: 0,
            partial: T::zero(),
            bound: None,
        }
    }

    /// Add a term given by its logarithm; returns the term.
    pub fn push_log(&mut self, log_term: T) -> T {
        let term = log_term.exp();
        self.partial += term;
        self.terms += 1;
        if let Some(prev) = self.prev_log {
            if self.recent.len() == WINDOW {
                self.recent.pop_front();
            }
            self.recent.push_back((log_term - prev).exp());
        }
        self.prev_log = Some(log_term);
        self.bound = None;
        if self.terms >= MIN_TERMS && self.recent.len() == WINDOW {
            let rmax = self.recent.iter().fold(T::zero(), |a, &b| a.max(b));
            if rmax < T::one() {
                self.bound = Some(term * rmax / (T::one() - rmax));
            }
        }
        term
    }

    /// True once the certified tail is below `tol` times the partial sum.
    pub fn certified(&self, tol: T) -> bool {
        match self.bound {
            Some(b) => b < tol * self.partial || b == T::zero(),
            None => false,
        }
    }
}
