//! Dividend-discount valuation on top of a fitted VAR.

mod compare;
mod context;
mod convergence;
mod engine;
mod forecast;
mod price;
mod report;
mod selectors;
mod series;
mod simulate;

pub use compare::{ComparisonConfig, ComparisonRegime, ComparisonReport};
pub use context::{ContextFile, ForecastContext};
pub use convergence::{check_convergence, ConvergenceReport, GATE_TOL};
pub use engine::{EngineConfig, PricingEngine, SeriesConfig};
pub use forecast::{ForecastCoefficients, ImpulseResponse, PriceForecast};
pub use price::{MixedMoment, ValuationResult};
pub use report::{
    ComparisonSection, ConvergenceSection, ForecastSection, IrfSection, PriceSection, Report,
    SimulationSection, SpectralSection,
};
pub use selectors::SelectorSet;
pub use simulate::{SimulationConfig, SimulationResult, SUMMARY_QUANTILES};
