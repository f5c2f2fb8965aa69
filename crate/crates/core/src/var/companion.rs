use nalgebra::{DMatrix, DVector};

use super::model::VarModel;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// VAR(1) embedding of a VAR(p) on the stacked state
/// `y*_t = (y_t', ..., y_{t-p+1}')'`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompanionForm<T: Scalar> {
    /// `np x np` transition: lag matrices on the top block row, identities
    /// on the block subdiagonal.
    pub a_star: DMatrix<T>,
    /// `J = [I_n : 0 : ... : 0]`, `n x np`.
    pub j_selector: DMatrix<T>,
    /// `(ν', 0, ..., 0)'`.
    pub nu_star: DVector<T>,
    n: usize,
    p: usize,
}

pub fn companion<T: Scalar>(model: &VarModel<T>) -> CompanionForm<T> {
    let n = model.n();
    let p = model.p();
    let np = n * p;
    let mut a_star = DMatrix::zeros(np, np);
    for (i, a) in model.lags().iter().enumerate() {
        a_star.view_mut((0, i * n), (n, n)).copy_from(a);
    }
    for i in 1..p {
        a_star
            .view_mut((i * n, (i - 1) * n), (n, n))
            .fill_with_identity();
    }
    let mut j_selector = DMatrix::zeros(n, np);
    j_selector.view_mut((0, 0), (n, n)).fill_with_identity();
    let mut nu_star = DVector::zeros(np);
    nu_star.rows_mut(0, n).copy_from(model.nu());
    CompanionForm {
        a_star,
        j_selector,
        nu_star,
        n,
        p,
    }
}

impl<T: Scalar> CompanionForm<T> {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// State dimension `np`.
    pub fn dim(&self) -> usize {
        self.n * self.p
    }

    /// `Φ_q = J (A*)^q J'`.
    pub fn phi(&self, q: usize) -> DMatrix<T> {
        let mut w = self.j_selector.transpose();
        for _ in 0..q {
            w = &self.a_star * w;
        }
        w.rows(0, self.n).into_owned()
    }

    /// `Φ_0, ..., Φ_{q_max}`.
    pub fn phi_sequence(&self, q_max: usize) -> Vec<DMatrix<T>> {
        let mut out = Vec::with_capacity(q_max + 1);
        let mut w = self.j_selector.transpose();
        out.push(w.rows(0, self.n).into_owned());
        for _ in 0..q_max {
            w = &self.a_star * w;
            out.push(w.rows(0, self.n).into_owned());
        }
        out
    }

    /// One noiseless step `ν* + A* s` of the stacked state.
    pub fn step(&self, state: &DVector<T>) -> DVector<T> {
        &self.nu_star + &self.a_star * state
    }

    /// Stack the most recent `p` observations (newest first) into `y*_t`.
    pub fn stack_state(&self, newest_first: &[DVector<T>]) -> Result<DVector<T>> {
        if newest_first.len() != self.p || newest_first.iter().any(|y| y.len() != self.n) {
            return Err(Error::LengthMismatch(format!(
                "state needs {} observations of length {}",
                self.p, self.n
            )));
        }
        let mut s = DVector::zeros(self.dim());
        for (i, y) in newest_first.iter().enumerate() {
            s.rows_mut(i * self.n, self.n).copy_from(y);
        }
        Ok(s)
    }

    pub(crate) fn check_state(&self, state: &DVector<T>) -> Result<()> {
        if state.len() != self.dim() {
            return Err(Error::LengthMismatch(format!(
                "state has length {}, companion dimension is {}",
                state.len(),
                self.dim()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::Layout;

    fn scalar_model(lags: &[f64]) -> VarModel<f64> {
        let lags = lags.iter().map(|&a| DMatrix::from_element(1, 1, a)).collect();
        VarModel::new(DVector::zeros(1), lags, DMatrix::identity(1, 1), Layout::new(0, 1)).unwrap()
    }

    #[test]
    fn single_lag_is_identity_embedding() {
        let m = scalar_model(&[0.7]);
        let c = companion(&m);
        assert_eq!(c.a_star, m.lags()[0]);
        assert_eq!(c.j_selector, DMatrix::<f64>::identity(1, 1));
    }

    #[test]
    fn two_lag_block_pattern() {
        let m = scalar_model(&[0.5, 0.3]);
        let c = companion(&m);
        assert_eq!(c.a_star, DMatrix::from_row_slice(2, 2, &[0.5, 0.3, 1.0, 0.0]));
        assert_eq!(c.nu_star.len(), 2);
        let top = &c.j_selector * &c.a_star * c.j_selector.transpose();
        assert_eq!(top, m.lags()[0]);
    }

    #[test]
    fn phi_zero_is_identity() {
        let c = companion(&scalar_model(&[0.5, 0.3]));
        assert_eq!(c.phi(0), DMatrix::<f64>::identity(1, 1));
        let seq = c.phi_sequence(4);
        assert_eq!(seq.len(), 5);
        for (q, m) in seq.iter().enumerate() {
            assert_eq!(*m, c.phi(q));
        }
    }

    #[test]
    fn phi_scalar_power() {
        let c = companion(&scalar_model(&[0.5]));
        assert_eq!(c.phi(3)[(0, 0)], 0.125);
    }
}
