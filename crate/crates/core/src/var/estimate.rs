use nalgebra::{DMatrix, DVector};

use super::lyapunov::symmetrize;
use super::model::VarModel;
use crate::error::{Error, Result};
use crate::market_data::VarInput;
use crate::scalar::Scalar;

/// Least-squares fit together with coefficient standard errors.
#[derive(Debug, Clone)]
pub struct OlsFit<T: Scalar> {
    pub model: VarModel<T>,
    /// `(1 + np) x n`; row 0 is the intercept, row `1 + (i-1)n + k` the
    /// coefficient on component `k` of `y_{t-i}`; column = equation.
    pub std_errors: DMatrix<T>,
    /// `(T - p) x n` residuals.
    pub residuals: DMatrix<T>,
}

/// Equation-by-equation OLS of `y_t` on `[1, y_{t-1}', ..., y_{t-p}']`.
///
/// The residual covariance uses divisor `T - p - np - 1` and is projected to
/// the nearest symmetric positive definite matrix if rounding pushed an
/// eigenvalue below a small floor.
pub fn estimate_ols<T: Scalar>(input: &VarInput<T>, p: usize) -> Result<VarModel<T>> {
    estimate_ols_detailed(input, p).map(|f| f.model)
}

pub fn estimate_ols_detailed<T: Scalar>(input: &VarInput<T>, p: usize) -> Result<OlsFit<T>> {
    if p == 0 {
        return Err(Error::InvalidInput("lag order must be at least 1".into()));
    }
    let y = &input.observations;
    let n = input.layout.n();
    if y.ncols() != n {
        return Err(Error::LengthMismatch(format!(
            "observations have {} columns, layout says {n}",
            y.ncols()
        )));
    }
    let t_len = y.nrows();
    let k = 1 + n * p;
    // One extra row so the residual covariance divisor is positive.
    let needed = p + k + 1;
    if t_len < needed {
        return Err(Error::InsufficientData { rows: t_len, needed });
    }
    let rows = t_len - p;

    let mut x = DMatrix::<T>::zeros(rows, k);
    let mut target = DMatrix::<T>::zeros(rows, n);
    for r in 0..rows {
        let t = r + p;
        x[(r, 0)] = T::one();
        for lag in 1..=p {
            for c in 0..n {
                x[(r, 1 + (lag - 1) * n + c)] = y[(t - lag, c)];
            }
        }
        target.set_row(r, &y.row(t));
    }

    let qr = x.clone().qr();
    let r_mat = qr.r();
    let diag_max = r_mat.diagonal().amax();
    let tiny = T::default_epsilon() * T::from_usize_lossy(rows.max(k)) * diag_max;
    if !(diag_max > T::zero()) || r_mat.diagonal().iter().any(|d| d.abs() <= tiny) {
        return Err(Error::SingularRegressorMatrix);
    }
    let qty = qr.q().transpose() * &target;
    let coef = r_mat
        .solve_upper_triangular(&qty)
        .ok_or(Error::SingularRegressorMatrix)?;

    let residuals = &target - &x * &coef;
    let dof = T::from_usize_lossy(rows - k);
    let sigma_raw = residuals.transpose() * &residuals / dof;
    let sigma = nearest_pd(&symmetrize(&sigma_raw));

    let r_inv = r_mat
        .clone()
        .try_inverse()
        .ok_or(Error::SingularRegressorMatrix)?;
    let xtx_inv = &r_inv * r_inv.transpose();
    let std_errors = DMatrix::from_fn(k, n, |row, eq| (xtx_inv[(row, row)] * sigma[(eq, eq)]).sqrt());

    let nu = DVector::from_iterator(n, coef.row(0).iter().copied());
    let lags = (0..p)
        .map(|lag| coef.rows(1 + lag * n, n).transpose())
        .collect();
    let model = VarModel::new(nu, lags, sigma, input.layout)?;
    Ok(OlsFit {
        model,
        std_errors,
        residuals,
    })
}

fn nearest_pd<T: Scalar>(s: &DMatrix<T>) -> DMatrix<T> {
    let eig = s.clone().symmetric_eigen();
    let top = eig.eigenvalues.amax();
    let floor = T::default_epsilon() * top.max(T::one());
    if eig.eigenvalues.iter().all(|&l| l >= floor) {
        return s.clone();
    }
    let clamped = eig.eigenvalues.map(|l| l.max(floor));
    let v = &eig.eigenvectors;
    symmetrize(&(v * DMatrix::from_diagonal(&clamped) * v.transpose()))
}
