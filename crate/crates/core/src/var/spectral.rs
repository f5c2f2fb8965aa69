use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex;

use super::companion::CompanionForm;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Thresholds for the stability verdict and the distinct-eigenvalue check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralConfig {
    /// `stable` requires `max |λ| < 1 - stability_margin`.
    pub stability_margin: f64,
    /// Eigenvalues closer than this are treated as repeated.
    pub distinctness_tol: f64,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self {
            stability_margin: 1e-8,
            distinctness_tol: 1e-7,
        }
    }
}

/// Eigen decomposition of `A*` and the stability facts derived from it.
#[derive(Debug, Clone)]
pub struct SpectralInfo<T: Scalar> {
    /// Sorted by descending modulus.
    pub eigenvalues: Vec<Complex<T>>,
    /// Column `k` is the unit-norm right eigenvector of `eigenvalues[k]`.
    pub eigenvectors: DMatrix<Complex<T>>,
    pub max_modulus: T,
    pub min_gap: T,
    pub distinct: bool,
    pub stable: bool,
    pub stability_margin: T,
}

/// The subset of [`SpectralInfo`] carried into reports.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralSummary<T: Scalar> {
    pub max_modulus: T,
    pub distinct: bool,
    pub stable: bool,
}

impl<T: Scalar> SpectralInfo<T> {
    pub fn summary(&self) -> SpectralSummary<T> {
        SpectralSummary {
            max_modulus: self.max_modulus,
            distinct: self.distinct,
            stable: self.stable,
        }
    }

    /// Relative Frobenius error of `C Λ C^{-1}` against `a`, or `None` when
    /// the eigenvector matrix is numerically singular.
    pub fn reconstruction_error(&self, a: &DMatrix<T>) -> Option<T> {
        let c = &self.eigenvectors;
        let c_inv = c.clone().try_inverse()?;
        let lambda = DMatrix::from_diagonal(&DVector::from_vec(self.eigenvalues.clone()));
        let rebuilt = c * lambda * c_inv;
        let diff = rebuilt - a.map(|x| Complex::new(x, T::zero()));
        let num = diff.iter().map(|z| z.norm_sqr()).fold(T::zero(), |s, x| s + x).sqrt();
        let den = a.norm().max(T::one());
        Some(num / den)
    }
}

pub fn spectral<T: Scalar>(
    companion: &CompanionForm<T>,
    cfg: &SpectralConfig,
) -> Result<SpectralInfo<T>> {
    let a = &companion.a_star;
    let dim = a.nrows();
    let schur = Schur::try_new(a.clone(), T::default_epsilon(), 10_000)
        .ok_or(Error::EigenSolverFailure)?;
    let mut eigenvalues: Vec<Complex<T>> = schur.complex_eigenvalues().iter().copied().collect();
    eigenvalues.sort_by(|x, y| {
        cabs(*y)
            .partial_cmp(&cabs(*x))
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(y.re.partial_cmp(&x.re).unwrap_or(std::cmp::Ordering::Equal))
            .then(y.im.partial_cmp(&x.im).unwrap_or(std::cmp::Ordering::Equal))
    });
    if eigenvalues.iter().any(|z| !z.re.is_finite_value() || !z.im.is_finite_value()) {
        return Err(Error::EigenSolverFailure);
    }

    let max_modulus = eigenvalues.first().map(|z| cabs(*z)).unwrap_or_else(T::zero);
    let mut min_gap = T::max_value().unwrap_or_else(|| T::lit(f64::MAX));
    for i in 0..dim {
        for j in (i + 1)..dim {
            min_gap = min_gap.min(cabs(eigenvalues[i] - eigenvalues[j]));
        }
    }
    let margin = T::lit(cfg.stability_margin);

    let mut eigenvectors = DMatrix::zeros(dim, dim);
    for (k, &lambda) in eigenvalues.iter().enumerate() {
        let v = eigenvector(a, lambda)?;
        eigenvectors.set_column(k, &v);
    }

    Ok(SpectralInfo {
        eigenvalues,
        eigenvectors,
        max_modulus,
        min_gap,
        distinct: min_gap > T::lit(cfg.distinctness_tol),
        stable: max_modulus < T::one() - margin,
        stability_margin: margin,
    })
}

/// Inverse iteration on `A - (λ + δ) I` in complex arithmetic.
fn eigenvector<T: Scalar>(a: &DMatrix<T>, lambda: Complex<T>) -> Result<DVector<Complex<T>>> {
    let dim = a.nrows();
    let ac: DMatrix<Complex<T>> = a.map(|x| Complex::new(x, T::zero()));
    let scale = a.norm().max(T::one());
    let mut shift = T::lit(1e-2) * T::default_epsilon().sqrt() * scale;
    // Start vector with no special structure so that it has a component
    // along every eigenvector.
    let start = DVector::from_fn(dim, |i, _| {
        let k = T::from_usize_lossy(i + 1);
        Complex::new(T::one() + k * T::lit(0.137), k * T::lit(0.071))
    });
    for _ in 0..6 {
        let shifted = &ac - DMatrix::from_diagonal_element(dim, dim, lambda + Complex::new(shift, T::zero()));
        let lu = shifted.lu();
        let mut x = start.clone();
        let mut ok = true;
        for _ in 0..3 {
            match lu.solve(&x) {
                Some(y) => {
                    let norm = y.iter().map(|z| z.norm_sqr()).fold(T::zero(), |s, v| s + v).sqrt();
                    if !(norm > T::zero()) || !norm.is_finite_value() {
                        ok = false;
                        break;
                    }
                    x = y.map(|z| z / Complex::new(norm, T::zero()));
                }
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            return Ok(normalize_phase(x));
        }
        shift *= T::lit(10.0);
    }
    Err(Error::EigenSolverFailure)
}

/// Rotate so the largest component is real and positive.
fn normalize_phase<T: Scalar>(v: DVector<Complex<T>>) -> DVector<Complex<T>> {
    let (mut best, mut best_norm) = (0, T::zero());
    for (i, z) in v.iter().enumerate() {
        if cabs(*z) > best_norm {
            best = i;
            best_norm = cabs(*z);
        }
    }
    if best_norm == T::zero() {
        return v;
    }
    let phase = v[best].conj() / Complex::new(best_norm, T::zero());
    v.map(|z| z * phase)
}


/// Modulus of a complex number.
pub(crate) fn cabs<T: Scalar>(z: Complex<T>) -> T {
    z.re.hypot(z.im)
}
