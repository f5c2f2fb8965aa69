use serde::{Deserialize, Serialize};

/// Block layout of the VAR state vector: `[k̃ (m) | g̃ (m) | macro (ell)]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Layout {
    /// Number of companies.
    pub m: usize,
    /// Number of macro covariates.
    pub ell: usize,
}

impl Layout {
    pub fn new(m: usize, ell: usize) -> Self {
        Self { m, ell }
    }

    /// Dimension of the VAR, `2m + ell`.
    pub fn n(&self) -> usize {
        2 * self.m + self.ell
    }

    /// Column of company `i`'s log required return.
    pub fn required_col(&self, i: usize) -> usize {
        i
    }

    /// Column of company `i`'s log dividend growth.
    pub fn growth_col(&self, i: usize) -> usize {
        self.m + i
    }

    pub fn macro_col(&self, j: usize) -> usize {
        2 * self.m + j
    }
}
