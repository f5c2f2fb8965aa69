//! Monte Carlo price ensembles.
//!
//! Every path owns a ChaCha stream keyed by `(seed, stream index)`, so a
//! path's draws do not depend on how many other paths are requested or on
//! how the work is scheduled across threads.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::context::ForecastContext;
use super::engine::PricingEngine;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::stats;

/// Probabilities of the per-company ensemble quantiles.
pub const SUMMARY_QUANTILES: [f64; 7] = [0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimulationConfig {
    pub horizon: usize,
    pub n_paths: usize,
    pub seed: u64,
    /// Keep the full `r x m` price path of every draw.
    pub keep_paths: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult<T: Scalar> {
    pub horizon: usize,
    /// `n_paths x m` prices at the horizon.
    pub terminal: DMatrix<T>,
    /// Per path, `r x m` prices at `t+1, ..., t+r`.
    pub paths: Option<Vec<DMatrix<T>>>,
    /// Paths on which some price was negative at some step.
    pub negative: Vec<bool>,
    pub negativity_fraction: f64,
    pub mean: DVector<T>,
    pub std_error: DVector<T>,
    /// `m x 7`, columns follow [`SUMMARY_QUANTILES`].
    pub quantiles: DMatrix<T>,
}

/// Deterministic generator for one path.
pub(crate) fn path_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draws `y_{t+1}, y_{t+2}, ...` from the VAR.
pub(crate) struct PathSampler<'a, T: Scalar> {
    engine: &'a PricingEngine<T>,
    factor: DMatrix<T>,
}

impl<'a, T: Scalar> PathSampler<'a, T> {
    pub fn new(engine: &'a PricingEngine<T>) -> Result<Self> {
        Ok(Self {
            engine,
            factor: engine.model.sigma_factor()?,
        })
    }

    /// Runs `steps` transitions from `state`, handing each new `y` to
    /// `visit`.
    pub fn run(&self, rng: &mut ChaCha8Rng, state: &DVector<T>, steps: usize, mut visit: impl FnMut(&DVector<T>)) {
        let comp = &self.engine.companion;
        let n = comp.n();
        let mut state = state.clone();
        let mut z = DVector::<T>::zeros(n);
        for _ in 0..steps {
            for zi in z.iter_mut() {
                let draw: f64 = rng.sample(StandardNormal);
                *zi = T::lit(draw);
            }
            let mut next = comp.step(&state);
            let shock = &self.factor * &z;
            for c in 0..n {
                next[c] += shock[c];
            }
            visit(&next.rows(0, n).into_owned());
            state = next;
        }
    }
}

impl<T: Scalar> PricingEngine<T> {
    /// Simulates `P_{t+1}, ..., P_{t+r}` from the observed prices in `ctx`.
    ///
    /// Negative prices are kept and flagged; clipping would bias every
    /// moment computed from the ensemble.
    pub fn simulate_prices(&self, ctx: &ForecastContext<T>, cfg: &SimulationConfig) -> Result<SimulationResult<T>> {
        if cfg.horizon == 0 {
            return Err(Error::HorizonZero);
        }
        if cfg.n_paths == 0 {
            return Err(Error::InvalidInput("at least one path is required".into()));
        }
        self.check_context(ctx)?;
        let prices = ctx.prices()?.clone();
        let dividends = ctx.dividends_now();
        let sampler = PathSampler::new(self)?;
        let m = self.m();
        let r = cfg.horizon;

        let draws: Vec<(DVector<T>, Option<DMatrix<T>>, bool)> = (0..cfg.n_paths)
            .into_par_iter()
            .map(|p| {
                let mut rng = path_rng(cfg.seed, p as u64);
                let mut path = Vec::with_capacity(r);
                sampler.run(&mut rng, &ctx.state, r, |y| path.push(y.clone()));
                let mut negative = false;
                let mut full = cfg.keep_paths.then(|| DMatrix::zeros(r, m));
                let terminal = self.roll_prices(&prices, &dividends, &path, |j, pr| {
                    negative |= pr.iter().any(|&x| x < T::zero());
                    if let Some(f) = full.as_mut() {
                        f.row_mut(j - 1).copy_from(&pr.transpose());
                    }
                });
                (terminal, full, negative)
            })
            .collect();

        let n_paths = cfg.n_paths;
        let terminal = DMatrix::from_fn(n_paths, m, |p, i| draws[p].0[i]);
        let negative: Vec<bool> = draws.iter().map(|d| d.2).collect();
        let paths = cfg
            .keep_paths
            .then(|| draws.into_iter().map(|d| d.1.expect("kept path")).collect());
        let negativity_fraction = negative.iter().filter(|&&b| b).count() as f64 / n_paths as f64;

        let mut mean = DVector::zeros(m);
        let mut std_error = DVector::zeros(m);
        let mut quantiles = DMatrix::zeros(m, SUMMARY_QUANTILES.len());
        for i in 0..m {
            let col: Vec<T> = terminal.column(i).iter().copied().collect();
            mean[i] = stats::mean(&col);
            std_error[i] = if n_paths > 1 { stats::std_error(&col) } else { T::zero() };
            for (c, q) in stats::quantiles(&col, &SUMMARY_QUANTILES).into_iter().enumerate() {
                quantiles[(i, c)] = q;
            }
        }

        Ok(SimulationResult {
            horizon: r,
            terminal,
            paths,
            negative,
            negativity_fraction,
            mean,
            std_error,
            quantiles,
        })
    }
}
