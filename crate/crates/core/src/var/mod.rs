//! VAR(p) estimation, companion form, spectral analysis and the long-run
//! moments used by the convergence conditions.

mod companion;
mod estimate;
mod io;
pub mod lyapunov;
mod model;
mod moments;
mod spectral;

pub use companion::{companion, CompanionForm};
pub use estimate::{estimate_ols, estimate_ols_detailed, OlsFit};
pub use io::ModelFile;
pub(crate) use io::matrix_rows;
pub use model::{psd_factor, VarModel};
pub use moments::{
    conditional_cov, conditional_mean, gamma0_lyapunov, gamma_eigen, gamma_truncated, limit_moments,
    unconditional_mean, GammaMethod, MomentConfig, MomentSet,
};
pub use spectral::{spectral, SpectralConfig, SpectralInfo, SpectralSummary};
