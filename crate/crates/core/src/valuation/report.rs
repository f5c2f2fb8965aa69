//! Machine-readable JSON report. Every real is stored as `f64`, and
//! `serde_json` writes the shortest representation that round-trips.

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::compare::{ComparisonRegime, ComparisonReport};
use super::convergence::ConvergenceReport;
use super::engine::PricingEngine;
use super::forecast::{ImpulseResponse, PriceForecast};
use super::price::ValuationResult;
use super::simulate::{SimulationResult, SUMMARY_QUANTILES};
use crate::error::Result;
use crate::scalar::Scalar;
use crate::var::{matrix_rows, GammaMethod};

fn vec64<T: Scalar>(v: &DVector<T>) -> Vec<f64> {
    v.iter().map(|x| x.to_f64_lossy()).collect()
}

fn mat64<T: Scalar>(m: &DMatrix<T>) -> Vec<Vec<f64>> {
    matrix_rows(m)
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    /// Fully resolved run configuration.
    pub config: serde_json::Value,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub companies: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convergence: Option<ConvergenceSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prices: Option<PriceSection>,
    /// `E(P_i P_j | F_t)`; `null` where the pair fails its gate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub second_moments: Option<Vec<Vec<Option<f64>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forecasts: Option<ForecastSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub irf: Option<IrfSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comparison: Option<ComparisonSection>,
}

impl Report {
    pub fn new(command: impl Into<String>, config: serde_json::Value) -> Self {
        Self {
            command: command.into(),
            config,
            ..Self::default()
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        w.write_all(self.to_json()?.as_bytes())?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralSection {
    pub max_modulus: f64,
    pub distinct: bool,
    pub stable: bool,
    pub stability_margin: f64,
    /// `[re, im]` pairs sorted by descending modulus.
    pub eigenvalues: Vec<[f64; 2]>,
}

impl SpectralSection {
    pub fn from_engine<T: Scalar>(engine: &PricingEngine<T>) -> Self {
        let s = engine.spectral();
        Self {
            max_modulus: s.max_modulus.to_f64_lossy(),
            distinct: s.distinct,
            stable: s.stable,
            stability_margin: s.stability_margin.to_f64_lossy(),
            eigenvalues: s
                .eigenvalues
                .iter()
                .map(|z| [z.re.to_f64_lossy(), z.im.to_f64_lossy()])
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceSection {
    pub spectral: SpectralSection,
    pub mu: Vec<f64>,
    pub gamma0: Vec<Vec<f64>>,
    pub gamma: Vec<Vec<f64>>,
    /// `eigen` or `truncated_sum`.
    pub gamma_method: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_terms: Option<usize>,
    pub first_moment_lhs: Vec<f64>,
    pub second_moment_lhs: Vec<Vec<f64>>,
    pub first_ok: Vec<bool>,
    pub second_ok: Vec<Vec<bool>>,
}

impl ConvergenceSection {
    pub fn build<T: Scalar>(engine: &PricingEngine<T>, report: &ConvergenceReport<T>) -> Result<Self> {
        let moments = engine.moments()?;
        let (gamma_method, gamma_terms) = match moments.gamma_method {
            GammaMethod::Eigen => ("eigen".to_string(), None),
            GammaMethod::TruncatedSum { terms } => ("truncated_sum".to_string(), Some(terms)),
        };
        Ok(Self {
            spectral: SpectralSection::from_engine(engine),
            mu: vec64(&moments.mu),
            gamma0: mat64(&moments.gamma0),
            gamma: mat64(&moments.gamma),
            gamma_method,
            gamma_terms,
            first_moment_lhs: vec64(&report.first_moment_lhs),
            second_moment_lhs: mat64(&report.second_moment_lhs),
            first_ok: report.first_ok.clone(),
            second_ok: report.second_ok.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSection {
    pub price: Vec<f64>,
    pub terms_used: Vec<usize>,
    pub truncation_error_bound: Vec<f64>,
}

impl<T: Scalar> From<&ValuationResult<T>> for PriceSection {
    fn from(v: &ValuationResult<T>) -> Self {
        Self {
            price: vec64(&v.price),
            terms_used: v.terms_used.clone(),
            truncation_error_bound: v.truncation_error_bound.iter().map(|x| x.to_f64_lossy()).collect(),
        }
    }
}

/// Converts an optional second-moment matrix for the report.
pub(crate) fn second_moments64<T: Scalar>(sm: &[Vec<Option<T>>]) -> Vec<Vec<Option<f64>>> {
    sm.iter()
        .map(|row| row.iter().map(|v| v.map(|x| x.to_f64_lossy())).collect())
        .collect()
}

impl Report {
    pub fn set_second_moments<T: Scalar>(&mut self, sm: &[Vec<Option<T>>]) {
        self.second_moments = Some(second_moments64(sm));
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastSection {
    pub horizon: usize,
    pub forecast: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl<T: Scalar> From<&PriceForecast<T>> for ForecastSection {
    fn from(f: &PriceForecast<T>) -> Self {
        Self {
            horizon: f.horizon,
            forecast: vec64(&f.forecast),
            a: vec64(&f.coefficients.a),
            b: vec64(&f.coefficients.b),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrfSection {
    pub horizon: usize,
    /// `mean_path` or `realised_path`.
    pub evaluation: String,
    /// `m x n`, row `i` is `∂P_{i,t+r} / ∂ξ_t'`.
    pub matrix: Vec<Vec<f64>>,
}

impl IrfSection {
    pub fn mean_path<T: Scalar>(irf: &ImpulseResponse<T>) -> Self {
        Self {
            horizon: irf.horizon,
            evaluation: "mean_path".into(),
            matrix: mat64(&irf.matrix),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSection {
    pub horizon: usize,
    pub n_paths: usize,
    pub seed: u64,
    pub mean: Vec<f64>,
    pub std_error: Vec<f64>,
    pub quantile_levels: Vec<f64>,
    /// Per company, one value per level.
    pub quantiles: Vec<Vec<f64>>,
    pub negativity_fraction: f64,
}

impl SimulationSection {
    pub fn build<T: Scalar>(sim: &SimulationResult<T>, seed: u64) -> Self {
        Self {
            horizon: sim.horizon,
            n_paths: sim.terminal.nrows(),
            seed,
            mean: vec64(&sim.mean),
            std_error: vec64(&sim.std_error),
            quantile_levels: SUMMARY_QUANTILES.to_vec(),
            quantiles: mat64(&sim.quantiles),
            negativity_fraction: sim.negativity_fraction,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSection {
    pub regime: ComparisonRegime,
    pub horizon: usize,
    pub n_paths: usize,
    pub mse_f: Vec<f64>,
    pub mse_g: Vec<f64>,
    pub mse_diff_se: Vec<f64>,
    pub mean_f: Vec<f64>,
    pub mean_g: Vec<f64>,
    pub mean_f_se: Vec<f64>,
    pub mean_g_se: Vec<f64>,
    pub mean_x: Vec<f64>,
    pub mean_x_se: Vec<f64>,
    pub theoretical_price: Vec<f64>,
    pub series_forecast: Vec<f64>,
    pub anchored_theoretical_forecast: Vec<f64>,
    pub origin_terms: usize,
    pub negativity_fraction: f64,
    /// Means within 3 standard errors and `mse_g ≤ mse_f + 3` standard
    /// errors for every company.
    pub dominance_holds: bool,
}

impl<T: Scalar> From<&ComparisonReport<T>> for ComparisonSection {
    fn from(c: &ComparisonReport<T>) -> Self {
        Self {
            regime: c.regime,
            horizon: c.horizon,
            n_paths: c.n_paths,
            mse_f: vec64(&c.mse_f),
            mse_g: vec64(&c.mse_g),
            mse_diff_se: vec64(&c.mse_diff_se),
            mean_f: vec64(&c.mean_f),
            mean_g: vec64(&c.mean_g),
            mean_f_se: vec64(&c.mean_f_se),
            mean_g_se: vec64(&c.mean_g_se),
            mean_x: vec64(&c.mean_x),
            mean_x_se: vec64(&c.mean_x_se),
            theoretical_price: vec64(&c.theoretical_price),
            series_forecast: vec64(&c.series_forecast),
            anchored_theoretical_forecast: vec64(&c.anchored_theoretical_forecast),
            origin_terms: c.origin_terms,
            negativity_fraction: c.negativity_fraction,
            dominance_holds: c.dominance_holds(3.0),
        }
    }
}
