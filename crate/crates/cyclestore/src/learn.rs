//! Pseudoinverse learning: `J⁰ = ΣΣ⁺`, `J = ΣPΣ⁺` and the blend `J̃`.

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::admit;
use crate::binmat::CycleMatrix;
use crate::spectra;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LearnError {
    #[error("beta1 must lie in (0, 1), got {0}")]
    Beta1OutOfRange(f64),
    #[error("beta must exceed 1 for a nonzero fixed point, got {0}")]
    BetaTooSmall(f64),
    #[error("C0 must lie in [0, 1], got {0}")]
    C0OutOfRange(f64),
    #[error("lambda must be positive, got {0}")]
    LambdaNotPositive(f64),
    #[error("cycle is not admissible")]
    NotAdmissible,
    #[error("imaginary part {0:e} left in the assembled matrix")]
    ImaginaryResidue(f64),
    #[error(transparent)]
    Admit(#[from] admit::AdmitError),
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, &x| a.max(x.abs()))
}

/// Singular values below `σ_max · max(rows, cols) · ε · 64` are treated as zero.
pub fn singular_value_cutoff(m: &DMatrix<f64>, sigma_max: f64) -> f64 {
    sigma_max * m.nrows().max(m.ncols()) as f64 * f64::EPSILON * 64.0
}

/// Moore–Penrose pseudoinverse via a full-rank factorisation `M = CF`, where `C` holds
/// `rank(M)` pivoted columns of `M`: `M⁺ = Fᵀ(FFᵀ)⁻¹(CᵀC)⁻¹Cᵀ`.
///
/// The rank comes from the singular values; the factors themselves avoid the SVD
/// vectors, which lose accuracy when singular values repeat.
pub fn pinv(m: &DMatrix<f64>) -> DMatrix<f64> {
    let r = if m.is_empty() { 0 } else { numerical_rank(m) };
    if r == 0 {
        return DMatrix::zeros(m.ncols(), m.nrows());
    }
    let c = m.select_columns(&pivot_columns(m, r));
    let gc = (c.transpose() * &c).cholesky().expect("pivot columns are independent");
    let f = gc.solve(&(c.transpose() * m));
    let gf = (&f * f.transpose()).cholesky().expect("factor has full row rank");
    let ct = c.transpose();
    f.transpose() * gf.solve(&gc.solve(&ct))
}

/// `r` column indices chosen greedily by largest residual norm (modified Gram–Schmidt).
fn pivot_columns(m: &DMatrix<f64>, r: usize) -> Vec<usize> {
    let mut resid: Vec<DVector<f64>> = (0..m.ncols()).map(|j| m.column(j).into_owned()).collect();
    let mut chosen = Vec::with_capacity(r);
    for _ in 0..r {
        let (best, _) = resid
            .iter()
            .enumerate()
            .filter(|(j, _)| !chosen.contains(j))
            .map(|(j, v)| (j, v.norm()))
            .fold((usize::MAX, -1.0), |a, b| if b.1 > a.1 { b } else { a });
        chosen.push(best);
        let q = &resid[best] / resid[best].norm();
        for v in resid.iter_mut() {
            let d = q.dot(v);
            v.axpy(-d, &q, 1.0);
        }
    }
    chosen.sort_unstable();
    chosen
}

/// Number of singular values above the pinv cutoff.
pub fn numerical_rank(m: &DMatrix<f64>) -> usize {
    let sv = m.clone().singular_values();
    let smax = sv.iter().fold(0.0f64, |a, &s| a.max(s));
    let cutoff = singular_value_cutoff(m, smax);
    sv.iter().filter(|&&s| s > cutoff && s > 0.0).count()
}

/// The `p×p` cyclic permutation with `P[0][p−1] = 1` and `P[i+1][i] = 1`.
pub fn transition_matrix(p: usize) -> DMatrix<f64> {
    DMatrix::from_fn(p, p, |i, j| if (j + 1) % p == i { 1.0 } else { 0.0 })
}

pub fn learn_j0(sigma: &CycleMatrix) -> DMatrix<f64> {
    let s = sigma.to_dmatrix();
    &s * pinv(&s)
}

pub fn learn_j(sigma: &CycleMatrix) -> DMatrix<f64> {
    let s = sigma.to_dmatrix();
    sigma.shifted(1).to_dmatrix() * pinv(&s)
}

/// `β_K = arctanh(β₁)/(λβ₁)` and `J̃ = β_K(C0·J⁰ + (1−C0)·J)`.
pub fn combine(
    j0: &DMatrix<f64>,
    j: &DMatrix<f64>,
    c0: f64,
    lambda: f64,
    beta1: f64,
) -> Result<(DMatrix<f64>, f64), LearnError> {
    if !(beta1 > 0.0 && beta1 < 1.0) {
        return Err(LearnError::Beta1OutOfRange(beta1));
    }
    if !(lambda > 0.0) {
        return Err(LearnError::LambdaNotPositive(lambda));
    }
    let beta_k = beta1.atanh() / (lambda * beta1);
    Ok((blend(j0, j, c0, beta_k)?, beta_k))
}

/// `J̃` for a given `β_K` directly.
pub fn blend(j0: &DMatrix<f64>, j: &DMatrix<f64>, c0: f64, beta_k: f64) -> Result<DMatrix<f64>, LearnError> {
    if !(0.0..=1.0).contains(&c0) {
        return Err(LearnError::C0OutOfRange(c0));
    }
    Ok((j0 * c0 + j * (1.0 - c0)) * beta_k)
}

/// Solves `arctanh(β₁)/β₁ = β` for `β₁ ∈ (0,1)` by bisection.
pub fn beta1_from_beta(beta: f64) -> Result<f64, LearnError> {
    if !(beta > 1.0) {
        return Err(LearnError::BetaTooSmall(beta));
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid.atanh() / mid < beta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectivitySet {
    pub j0: DMatrix<f64>,
    pub j: DMatrix<f64>,
    pub jt: DMatrix<f64>,
    pub beta_k: f64,
    pub c0: f64,
    /// `‖J⁰Σ − Σ‖_max`
    pub residual_fp: f64,
    /// `‖JΣ − ΣP‖_max`
    pub residual_tr: f64,
}

/// Learns `J⁰`, `J` and `J̃` with `β_K = β/λ`.
pub fn connectivity_set(sigma: &CycleMatrix, c0: f64, lambda: f64, beta: f64) -> Result<ConnectivitySet, LearnError> {
    if !(lambda > 0.0) {
        return Err(LearnError::LambdaNotPositive(lambda));
    }
    let j0 = learn_j0(sigma);
    let j = learn_j(sigma);
    let beta_k = beta / lambda;
    let jt = blend(&j0, &j, c0, beta_k)?;
    let s = sigma.to_dmatrix();
    let residual_fp = max_abs(&(&j0 * &s - &s));
    let residual_tr = max_abs(&(&j * &s - sigma.shifted(1).to_dmatrix()));
    Ok(ConnectivitySet { j0, j, jt, beta_k, c0, residual_fp, residual_tr })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStructureReport {
    /// `max_k ‖J^k − ΣP^kΣ⁺‖` over `1 ≤ k < p` (k = 0 is the projector itself).
    pub power_error: f64,
    /// `max_k ‖J^kΣ − ΣP^k‖` over `0 ≤ k < p`.
    pub action_error: f64,
    /// `‖J^p − J⁰‖`.
    pub period_error: f64,
    /// `max_k ‖J⁰J^k − J^k‖, ‖J^kJ⁰ − J^k‖`, including `J⁰J⁰ = J⁰`.
    pub projector_error: f64,
    pub ok: bool,
}

/// Checks `J^k = ΣP^kΣ⁺`, `J^p = J⁰` and `J⁰J^k = J^kJ⁰ = J^k` within `1e−7`.
pub fn verify_group_structure(sigma: &CycleMatrix, j: &DMatrix<f64>, j0: &DMatrix<f64>) -> GroupStructureReport {
    let p = sigma.period();
    let s = sigma.to_dmatrix();
    let sp = pinv(&s);
    let mut power = j0.clone();
    let (mut power_error, mut action_error, mut projector_error) = (0.0f64, 0.0f64, 0.0f64);
    for k in 0..p {
        if k > 0 {
            power = if k == 1 { j.clone() } else { &power * j };
            let expected = sigma.shifted(k as i64).to_dmatrix() * &sp;
            power_error = power_error.max(max_abs(&(&power - expected)));
        }
        action_error = action_error.max(max_abs(&(&power * &s - sigma.shifted(k as i64).to_dmatrix())));
        projector_error = projector_error
            .max(max_abs(&(j0 * &power - &power)))
            .max(max_abs(&(&power * j0 - &power)));
    }
    let jp = if p == 1 { j.clone() } else { &power * j };
    let period_error = max_abs(&(jp - j0));
    let ok = [power_error, action_error, period_error, projector_error].iter().all(|&e| e < 1e-7);
    GroupStructureReport { power_error, action_error, period_error, projector_error, ok }
}

/// The solution `J = Σ̂₀Λ₀(Σ̂₀*Σ̂₀)⁻¹Σ̂₀*` assembled from the nonzero DFT columns, with
/// `Λ₀` holding the eigenvalues `ρ̄^k` of `P`.
pub fn construct_j_dft(sigma: &CycleMatrix) -> Result<DMatrix<f64>, LearnError> {
    let report = admit::is_admissible(sigma)?;
    if !report.admissible {
        return Err(LearnError::NotAdmissible);
    }
    let p = sigma.period();
    let hat = spectra::dft(sigma);
    let cols = &report.dft_nonzero_columns;
    let n = sigma.n_rows();
    let s0 = DMatrix::from_fn(n, cols.len(), |i, c| hat[(i, cols[c])]);
    let lambda = DMatrix::from_fn(cols.len(), cols.len(), |a, b| {
        if a == b {
            spectra::root_of_unity(p, -(cols[a] as i64))
        } else {
            Complex::new(0.0, 0.0)
        }
    });
    let gram = s0.adjoint() * &s0;
    let inv = gram.try_inverse().ok_or(LearnError::NotAdmissible)?;
    let jc = &s0 * lambda * inv * s0.adjoint();
    let imag = jc.iter().fold(0.0f64, |a, c| a.max(c.im.abs()));
    if imag >= 1e-9 {
        return Err(LearnError::ImaginaryResidue(imag));
    }
    Ok(jc.map(|c| c.re))
}
