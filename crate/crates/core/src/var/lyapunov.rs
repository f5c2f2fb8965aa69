//! Discrete Lyapunov equation `V = A V A' + Q` for stable `A`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Above this dimension the Kronecker system gets too large and the
/// doubling iteration is used instead.
const KRONECKER_MAX_DIM: usize = 32;

pub fn solve_discrete_lyapunov<T: Scalar>(a: &DMatrix<T>, q: &DMatrix<T>) -> Result<DMatrix<T>> {
    if a.nrows() <= KRONECKER_MAX_DIM {
        lyapunov_kronecker(a, q)
    } else {
        lyapunov_doubling(a, q)
    }
}

/// Direct solve of `(I - A ⊗ A) vec(V) = vec(Q)`.
pub fn lyapunov_kronecker<T: Scalar>(a: &DMatrix<T>, q: &DMatrix<T>) -> Result<DMatrix<T>> {
    let n = a.nrows();
    check_shapes(a, q)?;
    let kron = a.kronecker(a);
    let system = DMatrix::<T>::identity(n * n, n * n) - kron;
    let rhs = nalgebra::DVector::from_column_slice(q.as_slice());
    let v = system
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("singular Lyapunov system (unit-modulus eigenvalues?)".into()))?;
    let v = DMatrix::from_column_slice(n, n, v.as_slice());
    Ok(symmetrize(&v))
}

/// Smith doubling: `V_{k+1} = V_k + A_k V_k A_k'`, `A_{k+1} = A_k²`.
pub fn lyapunov_doubling<T: Scalar>(a: &DMatrix<T>, q: &DMatrix<T>) -> Result<DMatrix<T>> {
    check_shapes(a, q)?;
    let mut v = q.clone();
    let mut ak = a.clone();
    for _ in 0..128 {
        let incr = &ak * &v * ak.transpose();
        v += &incr;
        if incr.norm() <= T::default_epsilon() * v.norm().max(T::lit(f64::MIN_POSITIVE)) {
            return Ok(symmetrize(&v));
        }
        ak = &ak * &ak;
        if !ak.norm().is_finite_value() {
            break;
        }
    }
    Err(Error::Numerical("Lyapunov doubling did not converge".into()))
}

fn check_shapes<T: Scalar>(a: &DMatrix<T>, q: &DMatrix<T>) -> Result<()> {
    if !a.is_square() || a.shape() != q.shape() {
        return Err(Error::LengthMismatch(format!(
            "Lyapunov shapes {:?} and {:?}",
            a.shape(),
            q.shape()
        )));
    }
    Ok(())
}

pub(crate) fn symmetrize<T: Scalar>(m: &DMatrix<T>) -> DMatrix<T> {
    (m + m.transpose()) * T::lit(0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn scalar_geometric_series() {
        let a = DMatrix::from_element(1, 1, 0.5);
        let q = DMatrix::from_element(1, 1, 1.0);
        assert_relative_eq!(lyapunov_kronecker(&a, &q).unwrap()[(0, 0)], 4.0 / 3.0, epsilon = 1e-14);
        assert_relative_eq!(lyapunov_doubling(&a, &q).unwrap()[(0, 0)], 4.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn routes_agree_and_satisfy_fixed_point() {
        let a = DMatrix::from_row_slice(3, 3, &[0.5, 0.2, 0.0, -0.3, 0.4, 0.1, 0.0, 0.6, -0.2]);
        let q = DMatrix::from_row_slice(3, 3, &[1.0, 0.3, 0.1, 0.3, 2.0, -0.2, 0.1, -0.2, 0.5]);
        let v1 = lyapunov_kronecker(&a, &q).unwrap();
        let v2 = lyapunov_doubling(&a, &q).unwrap();
        assert_relative_eq!(v1, v2, epsilon = 1e-12);
        let resid = &a * &v1 * a.transpose() + &q - &v1;
        assert!(resid.amax() < 1e-12);
    }

    #[test]
    fn unit_root_fails() {
        let a = DMatrix::from_element(1, 1, 1.0);
        let q = DMatrix::from_element(1, 1, 1.0);
        assert!(lyapunov_kronecker(&a, &q).is_err());
        assert!(lyapunov_doubling(&a, &q).is_err());
    }
}
