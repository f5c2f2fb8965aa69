//! Gordon growth valuation driven by a stable VAR(p) process.
//!
//! The crate is organised in three layers:
//!
//! * [`market_data`]: panel ingestion and the observed rate series,
//! * [`var`]: estimation, companion form, spectra and long-run moments,
//! * [`valuation`]: convergence gates, theoretical prices and second
//!   moments, forecasts, impulse responses and Monte Carlo ensembles.
//!
//! All numerical code is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` aliases below fix the common double-precision case.

pub mod error;
pub mod layout;
pub mod market_data;
pub mod scalar;
pub mod stats;
pub mod valuation;
pub mod var;

pub use error::{Error, ErrorClass, Result};
pub use layout::Layout;
pub use scalar::Scalar;

pub type CompanyPanel64 = market_data::CompanyPanel<f64>;
pub type RatePanel64 = market_data::RatePanel<f64>;
pub type VarInput64 = market_data::VarInput<f64>;
pub type VarModel64 = var::VarModel<f64>;
pub type CompanionForm64 = var::CompanionForm<f64>;
pub type SpectralInfo64 = var::SpectralInfo<f64>;
pub type MomentSet64 = var::MomentSet<f64>;
pub type PricingEngine64 = valuation::PricingEngine<f64>;
pub type ForecastContext64 = valuation::ForecastContext<f64>;

pub type VarModel32 = var::VarModel<f32>;
pub type PricingEngine32 = valuation::PricingEngine<f32>;
