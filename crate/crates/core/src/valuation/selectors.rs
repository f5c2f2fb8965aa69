use nalgebra::{DMatrix, DVector};

use crate::layout::Layout;
use crate::scalar::Scalar;

/// Block selectors `J_k = [I_m : 0 : 0]`, `J_g = [0 : I_m : 0]` and
/// `J_{g,k} = J_g - J_k`, all `m x n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectorSet<T: Scalar> {
    pub j_k: DMatrix<T>,
    pub j_g: DMatrix<T>,
    pub j_gk: DMatrix<T>,
    pub unit_vectors: Vec<DVector<T>>,
}

impl<T: Scalar> SelectorSet<T> {
    pub fn new(layout: Layout) -> Self {
        let (m, n) = (layout.m, layout.n());
        let mut j_k = DMatrix::zeros(m, n);
        let mut j_g = DMatrix::zeros(m, n);
        for i in 0..m {
            j_k[(i, layout.required_col(i))] = T::one();
            j_g[(i, layout.growth_col(i))] = T::one();
        }
        let j_gk = &j_g - &j_k;
        let unit_vectors = (0..m)
            .map(|i| {
                let mut e = DVector::zeros(m);
                e[i] = T::one();
                e
            })
            .collect();
        Self {
            j_k,
            j_g,
            j_gk,
            unit_vectors,
        }
    }

    pub fn m(&self) -> usize {
        self.j_k.nrows()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selectors_extract_blocks() {
        let layout = Layout::new(2, 1);
        let s = SelectorSet::<f64>::new(layout);
        let y = DVector::from_vec(vec![0.1, 0.2, 0.3, 0.4, 9.0]);
        assert_eq!((&s.j_k * &y).as_slice(), &[0.1, 0.2]);
        assert_eq!((&s.j_g * &y).as_slice(), &[0.3, 0.4]);
        let gk = &s.j_gk * &y;
        assert!((gk[0] - 0.2).abs() < 1e-15 && (gk[1] - 0.2).abs() < 1e-15);
        assert_eq!(s.unit_vectors[1].as_slice(), &[0.0, 1.0]);
    }
}
