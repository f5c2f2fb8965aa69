use nalgebra::DMatrix;

use super::convergence::{check_convergence, ConvergenceReport};
use super::selectors::SelectorSet;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::var::{
    companion, limit_moments, spectral, CompanionForm, MomentConfig, MomentSet, SpectralConfig,
    SpectralInfo, VarModel,
};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EngineConfig {
    pub spectral: SpectralConfig,
    pub moments: MomentConfig,
}

/// Truncation settings for the infinite price series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesConfig {
    /// Stop once the certified tail is below `tol` times the partial sum.
    pub tol: f64,
    /// Hard cap on the number of terms per series (per axis for double
    /// series).
    pub max_terms: usize,
    /// Keep every term of the series in the result.
    pub keep_trace: bool,
    /// Skip the convergence gate. The tail rule still has to certify the
    /// result, so a divergent series ends in `TailBoundNotReached`.
    pub skip_gate: bool,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_terms: 100_000,
            keep_trace: false,
            skip_gate: false,
        }
    }
}

/// A fitted model with everything derived from it that valuation needs.
///
/// Construction never fails on an unstable model: finite-horizon forecasts,
/// impulse responses and simulations remain defined. Operations that need
/// the long-run moments return [`Error::UnstableModel`] instead.
#[derive(Debug, Clone)]
pub struct PricingEngine<T: Scalar> {
    pub(crate) model: VarModel<T>,
    pub(crate) companion: CompanionForm<T>,
    pub(crate) spectral: SpectralInfo<T>,
    pub(crate) moments: Option<MomentSet<T>>,
    pub(crate) selectors: SelectorSet<T>,
}

impl<T: Scalar> PricingEngine<T> {
    pub fn new(model: VarModel<T>, cfg: &EngineConfig) -> Result<Self> {
        if model.m() == 0 {
            return Err(Error::InvalidModel("valuation needs at least one company".into()));
        }
        let companion = companion(&model);
        let spectral = spectral(&companion, &cfg.spectral)?;
        let moments = if spectral.stable {
            Some(limit_moments(&model, &companion, &spectral, &cfg.moments)?)
        } else {
            None
        };
        let selectors = SelectorSet::new(model.layout());
        Ok(Self {
            model,
            companion,
            spectral,
            moments,
            selectors,
        })
    }

    pub fn model(&self) -> &VarModel<T> {
        &self.model
    }

    pub fn companion(&self) -> &CompanionForm<T> {
        &self.companion
    }

    pub fn spectral(&self) -> &SpectralInfo<T> {
        &self.spectral
    }

    pub fn selectors(&self) -> &SelectorSet<T> {
        &self.selectors
    }

    pub fn m(&self) -> usize {
        self.model.m()
    }

    pub fn moments(&self) -> Result<&MomentSet<T>> {
        self.moments.as_ref().ok_or_else(|| Error::UnstableModel {
            max_modulus: self.spectral.max_modulus.to_f64_lossy(),
        })
    }

    pub fn check_convergence(&self) -> Result<ConvergenceReport<T>> {
        check_convergence(self.moments()?, &self.selectors)
    }

    /// `Φ_0 ..= Φ_q`, served from the moment cache when it is long enough.
    pub(crate) fn phis(&self, q: usize) -> Vec<DMatrix<T>> {
        match &self.moments {
            Some(ms) if ms.phi_cache.len() > q => ms.phi_cache[..=q].to_vec(),
            _ => self.companion.phi_sequence(q),
        }
    }

    pub(crate) fn check_company(&self, i: usize) -> Result<()> {
        if i >= self.m() {
            return Err(Error::InvalidInput(format!(
                "company index {i} out of range (m = {})",
                self.m()
            )));
        }
        Ok(())
    }
}
