//! Panel ingestion and the observed rate series that feed the VAR.

mod panel;
mod rates;

pub use panel::{load_panel, read_panel, CompanyPanel, Frequency, PanelSchema};
pub use rates::{assemble_var_input, compute_rates, RatePanel, VarInput};
