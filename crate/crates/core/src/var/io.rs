use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::model::VarModel;
use crate::error::{Error, Result};
use crate::layout::Layout;
use crate::scalar::Scalar;

/// On-disk model document. Matrices are row-major nested arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub n: usize,
    pub m: usize,
    pub ell: usize,
    pub p: usize,
    pub nu: Vec<f64>,
    pub lags: Vec<Vec<Vec<f64>>>,
    pub sigma: Vec<Vec<f64>>,
}

pub(crate) fn matrix_rows<T: Scalar>(m: &DMatrix<T>) -> Vec<Vec<f64>> {
    m.row_iter()
        .map(|r| r.iter().map(|x| x.to_f64_lossy()).collect())
        .collect()
}

pub(crate) fn matrix_from_rows<T: Scalar>(rows: &[Vec<f64>], nrows: usize, ncols: usize, what: &str) -> Result<DMatrix<T>> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::InvalidModel(format!("{what} must be {nrows}x{ncols}")));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |r, c| T::lit(rows[r][c])))
}

impl<T: Scalar> From<&VarModel<T>> for ModelFile {
    fn from(model: &VarModel<T>) -> Self {
        let layout = model.layout();
        ModelFile {
            n: model.n(),
            m: layout.m,
            ell: layout.ell,
            p: model.p(),
            nu: model.nu().iter().map(|x| x.to_f64_lossy()).collect(),
            lags: model.lags().iter().map(matrix_rows).collect(),
            sigma: matrix_rows(model.sigma()),
        }
    }
}

impl ModelFile {
    pub fn into_model<T: Scalar>(&self) -> Result<VarModel<T>> {
        let layout = Layout::new(self.m, self.ell);
        let n = layout.n();
        if self.n != n {
            return Err(Error::InvalidModel(format!(
                "n = {} but 2m + ell = {n}",
                self.n
            )));
        }
        if self.lags.len() != self.p {
            return Err(Error::InvalidModel(format!(
                "p = {} but {} lag matrices given",
                self.p,
                self.lags.len()
            )));
        }
        if self.nu.len() != n {
            return Err(Error::InvalidModel(format!("nu must have length {n}")));
        }
        let nu = DVector::from_iterator(n, self.nu.iter().map(|&x| T::lit(x)));
        let lags = self
            .lags
            .iter()
            .enumerate()
            .map(|(i, a)| matrix_from_rows(a, n, n, &format!("lag {}", i + 1)))
            .collect::<Result<Vec<_>>>()?;
        let sigma = matrix_from_rows(&self.sigma, n, n, "sigma")?;
        VarModel::new(nu, lags, sigma, layout)
    }
}

impl<T: Scalar> VarModel<T> {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ModelFile::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str::<ModelFile>(s)?.into_model()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn model_from(vals: &[f64]) -> VarModel<f64> {
        // m = 1, ell = 0, p = 2, n = 2
        let nu = DVector::from_column_slice(&vals[0..2]);
        let a1 = DMatrix::from_row_slice(2, 2, &vals[2..6]);
        let a2 = DMatrix::from_row_slice(2, 2, &vals[6..10]);
        let l = DMatrix::from_row_slice(2, 2, &[vals[10].abs() + 0.1, 0.0, vals[11], vals[12].abs() + 0.1]);
        VarModel::new(nu, vec![a1, a2], &l * l.transpose(), Layout::new(1, 0)).unwrap()
    }

    #[test]
    fn row_major_layout() {
        let m = model_from(&[0.1, 0.2, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 1.0, 0.0, 1.0]);
        let file = ModelFile::from(&m);
        assert_eq!(file.lags[0], vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
        assert_eq!((file.n, file.m, file.ell, file.p), (2, 1, 0, 2));
    }

    #[test]
    fn rejects_inconsistent_dimensions() {
        let m = model_from(&[0.1, 0.2, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 1.0, 0.0, 1.0]);
        let mut file = ModelFile::from(&m);
        file.n = 3;
        assert!(file.into_model::<f64>().is_err());
    }

    proptest! {
        #[test]
        fn json_round_trip_is_bit_identical(vals in proptest::collection::vec(-1e3f64..1e3, 13)) {
            let m = model_from(&vals);
            let back = VarModel::<f64>::from_json(&m.to_json().unwrap()).unwrap();
            prop_assert_eq!(back.nu().as_slice(), m.nu().as_slice());
            for (a, b) in back.lags().iter().zip(m.lags()) {
                prop_assert!(a.iter().zip(b.iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
            }
            prop_assert!(back.sigma().iter().zip(m.sigma().iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }
}
