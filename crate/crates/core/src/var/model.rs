use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::layout::Layout;
use crate::scalar::Scalar;

/// Reduced-form VAR(p): `y_t = ν + A_1 y_{t-1} + ... + A_p y_{t-p} + ξ_t`,
/// `ξ_t ~ N(0, Σ)`.
///
/// `Σ` is required to be symmetric positive semidefinite. A zero covariance
/// is accepted so that the deterministic limit of the model can be valued.
/// A layout with no companies (`m = 0`) describes a plain VAR of covariates;
/// it can be estimated and analysed but not used for valuation.
#[derive(Debug, Clone, PartialEq)]
pub struct VarModel<T: Scalar> {
    nu: DVector<T>,
    lags: Vec<DMatrix<T>>,
    sigma: DMatrix<T>,
    layout: Layout,
}

impl<T: Scalar> VarModel<T> {
    pub fn new(
        nu: DVector<T>,
        lags: Vec<DMatrix<T>>,
        sigma: DMatrix<T>,
        layout: Layout,
    ) -> Result<Self> {
        let n = layout.n();
        if n == 0 {
            return Err(Error::InvalidModel("VAR dimension must be at least 1".into()));
        }
        if lags.is_empty() {
            return Err(Error::InvalidModel("lag order must be at least 1".into()));
        }
        if nu.len() != n {
            return Err(Error::InvalidModel(format!("intercept has length {}, expected {n}", nu.len())));
        }
        for (i, a) in lags.iter().enumerate() {
            if a.shape() != (n, n) {
                return Err(Error::InvalidModel(format!(
                    "lag matrix {} is {:?}, expected ({n}, {n})",
                    i + 1,
                    a.shape()
                )));
            }
        }
        if sigma.shape() != (n, n) {
            return Err(Error::InvalidModel(format!("sigma is {:?}, expected ({n}, {n})", sigma.shape())));
        }
        let all_finite = nu.iter().chain(sigma.iter()).chain(lags.iter().flat_map(|a| a.iter()));
        if !all_finite.copied().all(Scalar::is_finite_value) {
            return Err(Error::InvalidModel("non-finite parameter".into()));
        }

        let scale = sigma.amax().max(T::one());
        let sym_tol = T::lit(1e-12) * scale;
        for r in 0..n {
            for c in (r + 1)..n {
                if (sigma[(r, c)] - sigma[(c, r)]).abs() > sym_tol {
                    return Err(Error::InvalidModel(format!("sigma is not symmetric at ({r}, {c})")));
                }
            }
        }
        let min_eig = sigma.clone().symmetric_eigenvalues().min();
        if min_eig < -T::lit(1e-12) * scale {
            return Err(Error::NonPdSigma {
                min_eigenvalue: min_eig.to_f64_lossy(),
            });
        }
        Ok(Self { nu, lags, sigma, layout })
    }

    pub fn nu(&self) -> &DVector<T> {
        &self.nu
    }

    /// `A_1..A_p`.
    pub fn lags(&self) -> &[DMatrix<T>] {
        &self.lags
    }

    pub fn sigma(&self) -> &DMatrix<T> {
        &self.sigma
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn n(&self) -> usize {
        self.layout.n()
    }

    pub fn p(&self) -> usize {
        self.lags.len()
    }

    pub fn m(&self) -> usize {
        self.layout.m
    }

    /// Same dynamics with a different innovation covariance.
    pub fn with_sigma(&self, sigma: DMatrix<T>) -> Result<Self> {
        Self::new(self.nu.clone(), self.lags.clone(), sigma, self.layout)
    }

    /// A factor `L` with `L L' = Σ`, valid for semidefinite `Σ`.
    pub fn sigma_factor(&self) -> Result<DMatrix<T>> {
        psd_factor(&self.sigma)
    }
}

/// Square-root factor of a symmetric PSD matrix through its eigen
/// decomposition; tiny negative eigenvalues are clipped to zero.
pub fn psd_factor<T: Scalar>(sigma: &DMatrix<T>) -> Result<DMatrix<T>> {
    let n = sigma.nrows();
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    if let Some(ch) = sigma.clone().cholesky() {
        return Ok(ch.unpack());
    }
    let eig = sigma.clone().symmetric_eigen();
    let scale = sigma.amax().max(T::one());
    let mut factor = eig.eigenvectors.clone();
    for (k, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam < -T::lit(1e-10) * scale {
            return Err(Error::NonPdSigma {
                min_eigenvalue: lam.to_f64_lossy(),
            });
        }
        let s = lam.max(T::zero()).sqrt();
        factor.column_mut(k).scale_mut(s);
    }
    Ok(factor)
}
