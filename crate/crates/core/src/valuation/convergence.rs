use nalgebra::{DMatrix, DVector};

use super::selectors::SelectorSet;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::var::{MomentSet, SpectralSummary};

/// Gate values at or above `-GATE_TOL` count as failures; the conditions
/// are strict inequalities.
pub const GATE_TOL: f64 = 1e-12;

/// Sufficient conditions for the price series and its second moment.
#[derive(Debug, Clone)]
pub struct ConvergenceReport<T: Scalar> {
    /// `e_i'J_{g,k}μ + e_i'J_{g,k}(½Γ(0) + Γ)J_{g,k}'e_i`.
    pub first_moment_lhs: DVector<T>,
    /// Pairwise max of `e'J_{g,k}μ + e'J_{g,k}(Γ(0) + 2Γ)J_{g,k}'e`.
    pub second_moment_lhs: DMatrix<T>,
    pub first_ok: Vec<bool>,
    pub second_ok: Vec<Vec<bool>>,
    pub spectral_summary: SpectralSummary<T>,
}

impl<T: Scalar> ConvergenceReport<T> {
    pub fn all_first_ok(&self) -> bool {
        self.first_ok.iter().all(|&b| b)
    }
}

pub fn check_convergence<T: Scalar>(
    moments: &MomentSet<T>,
    selectors: &SelectorSet<T>,
) -> Result<ConvergenceReport<T>> {
    let summary = moments.spectral;
    if !summary.stable {
        return Err(Error::UnstableModel {
            max_modulus: summary.max_modulus.to_f64_lossy(),
        });
    }
    let m = selectors.m();
    let jgk = &selectors.j_gk;
    let mean_gap = jgk * &moments.mu;
    let half = T::lit(0.5);
    let two = T::lit(2.0);
    let first_form = jgk * (&moments.gamma0 * half + &moments.gamma) * jgk.transpose();
    let second_form = jgk * (&moments.gamma0 + &moments.gamma * two) * jgk.transpose();

    let first_moment_lhs = DVector::from_fn(m, |i, _| mean_gap[i] + first_form[(i, i)]);
    let single: Vec<T> = (0..m).map(|i| mean_gap[i] + second_form[(i, i)]).collect();
    let second_moment_lhs = DMatrix::from_fn(m, m, |a, b| single[a].max(single[b]));

    let tol = T::lit(GATE_TOL);
    let passes = |v: T| v < -tol;
    let first_ok = first_moment_lhs.iter().map(|&v| passes(v)).collect();
    let second_ok = (0..m)
        .map(|a| (0..m).map(|b| passes(second_moment_lhs[(a, b)])).collect())
        .collect();

    Ok(ConvergenceReport {
        first_moment_lhs,
        second_moment_lhs,
        first_ok,
        second_ok,
        spectral_summary: summary,
    })
}
