use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use super::companion::CompanionForm;
use super::lyapunov::{solve_discrete_lyapunov, symmetrize};
use super::model::VarModel;
use super::spectral::{SpectralInfo, SpectralSummary};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `E(y_{t+j} | F_t) = Σ_{q=1}^j Φ_{j-q} ν + J (A*)^j y*_t`.
pub fn conditional_mean<T: Scalar>(
    model: &VarModel<T>,
    companion: &CompanionForm<T>,
    state: &DVector<T>,
    j: usize,
) -> Result<DVector<T>> {
    if j == 0 {
        return Err(Error::HorizonZero);
    }
    companion.check_state(state)?;
    let n = companion.n();
    let mut phi_sum = DMatrix::<T>::zeros(n, n);
    let mut w = companion.j_selector.transpose();
    let mut s = state.clone();
    for _ in 0..j {
        phi_sum += w.rows(0, n);
        w = &companion.a_star * w;
        s = &companion.a_star * s;
    }
    Ok(phi_sum * model.nu() + s.rows(0, n))
}

/// `Cov(y_{t+j1}, y_{t+j2} | F_t) = Σ_{q=1}^{j1∧j2} Φ_{j1-q} Σ Φ_{j2-q}'`.
pub fn conditional_cov<T: Scalar>(
    model: &VarModel<T>,
    companion: &CompanionForm<T>,
    j1: usize,
    j2: usize,
) -> Result<DMatrix<T>> {
    if j1 == 0 || j2 == 0 {
        return Err(Error::HorizonZero);
    }
    let phis = companion.phi_sequence(j1.max(j2) - 1);
    let sigma = model.sigma();
    let mut out = DMatrix::zeros(companion.n(), companion.n());
    for q in 1..=j1.min(j2) {
        out += &phis[j1 - q] * sigma * phis[j2 - q].transpose();
    }
    Ok(out)
}

/// Route used to evaluate `Γ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GammaMethod {
    /// Eigen closed form (distinct eigenvalues).
    Eigen,
    /// Truncated double sum with a geometric tail bound.
    TruncatedSum { terms: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentConfig {
    /// Number of impulse matrices kept in the cache beyond `Φ_0`.
    pub phi_horizon: usize,
    /// Absolute accuracy of the truncated `Γ` sum.
    pub gamma_tail_tol: f64,
    /// Cap on truncated-sum terms.
    pub max_terms: usize,
    /// Largest acceptable imaginary residue of the eigen route.
    pub imag_tol: f64,
}

impl Default for MomentConfig {
    fn default() -> Self {
        Self {
            phi_horizon: 100,
            gamma_tail_tol: 1e-12,
            max_terms: 100_000,
            imag_tol: 1e-8,
        }
    }
}

/// Long-run moments of a stable VAR.
#[derive(Debug, Clone)]
pub struct MomentSet<T: Scalar> {
    /// `μ = (I - A_1 - ... - A_p)^{-1} ν`.
    pub mu: DVector<T>,
    /// Unconditional covariance `Γ(0) = Σ_i Φ_i Σ Φ_i'`.
    pub gamma0: DMatrix<T>,
    /// `Γ = Σ_{j1≥1} Σ_{j2≥j1} Φ_{j2} Σ Φ_{j1-1}'`.
    pub gamma: DMatrix<T>,
    /// `Φ_0 ..= Φ_Q`.
    pub phi_cache: Vec<DMatrix<T>>,
    pub gamma_method: GammaMethod,
    pub spectral: SpectralSummary<T>,
}

pub fn limit_moments<T: Scalar>(
    model: &VarModel<T>,
    companion: &CompanionForm<T>,
    spectral: &SpectralInfo<T>,
    cfg: &MomentConfig,
) -> Result<MomentSet<T>> {
    if !spectral.stable {
        return Err(Error::UnstableModel {
            max_modulus: spectral.max_modulus.to_f64_lossy(),
        });
    }
    let mu = unconditional_mean(model)?;
    let gamma0 = gamma0_lyapunov(model, companion)?;

    let mut gamma_method = None;
    let mut gamma = None;
    if spectral.distinct {
        let well_conditioned = spectral
            .reconstruction_error(&companion.a_star)
            .is_some_and(|e| e < T::lit(1e-8));
        if well_conditioned {
            if let Some(g) = gamma_eigen(model, companion, spectral, T::lit(cfg.imag_tol)) {
                gamma = Some(g);
                gamma_method = Some(GammaMethod::Eigen);
            }
        }
    }
    let (gamma, gamma_method) = match (gamma, gamma_method) {
        (Some(g), Some(m)) => (g, m),
        _ => {
            let (g, terms) = gamma_truncated(
                model,
                companion,
                spectral.max_modulus,
                T::lit(cfg.gamma_tail_tol),
                cfg.max_terms,
            )?;
            (g, GammaMethod::TruncatedSum { terms })
        }
    };

    Ok(MomentSet {
        mu,
        gamma0,
        gamma,
        phi_cache: companion.phi_sequence(cfg.phi_horizon),
        gamma_method,
        spectral: spectral.summary(),
    })
}

pub fn unconditional_mean<T: Scalar>(model: &VarModel<T>) -> Result<DVector<T>> {
    let n = model.n();
    let mut lhs = DMatrix::<T>::identity(n, n);
    for a in model.lags() {
        lhs -= a;
    }
    lhs.lu()
        .solve(model.nu())
        .ok_or_else(|| Error::Numerical("I - A_1 - ... - A_p is singular".into()))
}

/// `Γ(0) = J V J'` with `V = A* V A*' + J' Σ J`.
pub fn gamma0_lyapunov<T: Scalar>(model: &VarModel<T>, companion: &CompanionForm<T>) -> Result<DMatrix<T>> {
    let j = &companion.j_selector;
    let q = j.transpose() * model.sigma() * j;
    let v = solve_discrete_lyapunov(&companion.a_star, &q)?;
    Ok(symmetrize(&(j * v * j.transpose())))
}

/// Closed form with `M = C^{-1} J'ΣJ C^{-T}` and
/// `G_{αβ} = λ_α / ((1 - λ_α)(1 - λ_α λ_β))`: `Γ = J C (M ⊙ G) C^T J'`.
///
/// Returns `None` if `C` is singular or the assembled matrix has an
/// imaginary residue above `imag_tol` (relative to its magnitude).
pub fn gamma_eigen<T: Scalar>(
    model: &VarModel<T>,
    companion: &CompanionForm<T>,
    spectral: &SpectralInfo<T>,
    imag_tol: T,
) -> Option<DMatrix<T>> {
    let n = companion.n();
    let c = &spectral.eigenvectors;
    let c_inv = c.clone().try_inverse()?;
    let to_c = |x: &DMatrix<T>| x.map(|v| Complex::new(v, T::zero()));
    let j = to_c(&companion.j_selector);
    let q = &j.transpose() * to_c(model.sigma()) * &j;
    let mut mid = &c_inv * q * c_inv.transpose();
    let one = Complex::new(T::one(), T::zero());
    let lam = &spectral.eigenvalues;
    for a in 0..lam.len() {
        for b in 0..lam.len() {
            mid[(a, b)] *= lam[a] / ((one - lam[a]) * (one - lam[a] * lam[b]));
        }
    }
    let full = c * mid * c.transpose();
    let block = full.view((0, 0), (n, n));
    let scale = block.iter().map(|z| z.re.abs()).fold(T::one(), |s, x| s.max(x));
    let residue = block.iter().map(|z| z.im.abs()).fold(T::zero(), |s, x| s.max(x));
    if residue > imag_tol * scale || !residue.is_finite_value() {
        return None;
    }
    Some(block.map(|z| z.re))
}

/// Truncated double sum of `Φ_{j2} Σ Φ_{j1-1}'` over `1 ≤ j1 ≤ j2 ≤ K`.
///
/// `K` is the first horizon at which the geometric tail bound
/// `‖Σ‖ c² ρ̃^{K+1} / (1-ρ̃)²` falls below `tail_tol`, with
/// `ρ̃ = (1 + ρ)/2` and `c = max_k ‖Φ_k‖ / ρ̃^k` over the computed prefix.
pub fn gamma_truncated<T: Scalar>(
    model: &VarModel<T>,
    companion: &CompanionForm<T>,
    max_modulus: T,
    tail_tol: T,
    max_terms: usize,
) -> Result<(DMatrix<T>, usize)> {
    let n = companion.n();
    let one = T::one();
    let rho = (one + max_modulus) * T::lit(0.5);
    if !(rho < one) {
        return Err(Error::UnstableModel {
            max_modulus: max_modulus.to_f64_lossy(),
        });
    }
    let sigma_norm = model.sigma().norm();
    let mut phis = vec![DMatrix::<T>::identity(n, n)];
    let mut w = companion.j_selector.transpose();
    let mut c = T::lit(n as f64).sqrt();
    let mut rho_pow = one;
    let mut k = 0usize;
    loop {
        let bound = sigma_norm * c * c * rho_pow * rho / ((one - rho) * (one - rho));
        if k >= 1 && bound < tail_tol {
            break;
        }
        if k >= max_terms {
            return Err(Error::TailBoundNotReached { terms: k });
        }
        k += 1;
        w = &companion.a_star * w;
        let phi = w.rows(0, n).into_owned();
        rho_pow *= rho;
        if rho_pow > T::zero() {
            c = c.max(phi.norm() / rho_pow);
        }
        phis.push(phi);
    }

    let sigma = model.sigma();
    let mut suffix = DMatrix::<T>::zeros(n, n);
    let mut gamma = DMatrix::<T>::zeros(n, n);
    for j1 in (1..=k).rev() {
        suffix += &phis[j1];
        gamma += &suffix * sigma * phis[j1 - 1].transpose();
    }
    Ok((gamma, k))
}
