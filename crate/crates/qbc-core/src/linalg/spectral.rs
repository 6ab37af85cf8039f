use nalgebra::SymmetricEigen;

use super::state::{CMatrix, DensityOp, C64};
use super::tol;
use crate::error::{Error, Result};

/// Hermitian eigendecomposition with eigenvalues in descending order; the
/// eigenvectors are the matching columns. The input is symmetrized first.
pub fn eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let herm = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(herm);
    let n = eig.eigenvalues.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, idx[c])]);
    (vals, vecs)
}

pub fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    m.is_square() && (m - m.adjoint()).norm() <= tol * m.norm().max(1.0)
}

/// Clamps roundoff negatives in `[-1e-10, 0)` to zero and rejects anything
/// below.
pub(crate) fn clamp_spectrum(vals: &[f64]) -> Result<Vec<f64>> {
    vals.iter().map(|&v| if v < -tol::PSD_CLAMP { Err(Error::NotPositive(v)) } else { Ok(v.max(0.0)) }).collect()
}

/// Sum of singular values. Hermitian input goes through the eigensolver,
/// anything else through an SVD.
pub fn trace_norm(m: &CMatrix) -> Result<f64> {
    if !m.is_square() {
        return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    if is_hermitian(m, tol::CONSTRUCT) {
        let (vals, _) = eigh(m);
        Ok(vals.iter().map(|v| v.abs()).sum())
    } else {
        Ok(m.clone().svd(false, false).singular_values.iter().sum())
    }
}

/// `‖ρ0 − ρ1‖₁`.
pub fn trace_distance(rho0: &DensityOp, rho1: &DensityOp) -> Result<f64> {
    same_dims(rho0, rho1)?;
    trace_norm(&(rho0.matrix() - rho1.matrix()))
}

/// Optimal success probability of telling `ρ0` from `ρ1` at equal priors:
/// `1/2 + ‖ρ0 − ρ1‖₁ / 4`.
pub fn helstrom(rho0: &DensityOp, rho1: &DensityOp) -> Result<f64> {
    Ok(0.5 + trace_distance(rho0, rho1)? / 4.0)
}

fn same_dims(a: &DensityOp, b: &DensityOp) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(Error::dims(format!("{:?} vs {:?}", a.dims(), b.dims())));
    }
    Ok(())
}

/// Eigenvalues above `rel_tol · λ_max` with their eigenvectors.
pub(crate) fn support(rho: &CMatrix, rel_tol: f64) -> Result<(Vec<f64>, CMatrix)> {
    let (vals, vecs) = eigh(rho);
    let vals = clamp_spectrum(&vals)?;
    let top = vals.first().copied().unwrap_or(0.0);
    let keep: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] > rel_tol * top).collect();
    let kept_vals = keep.iter().map(|&i| vals[i]).collect();
    let kept_vecs = CMatrix::from_fn(rho.nrows(), keep.len(), |r, c| vecs[(r, keep[c])]);
    Ok((kept_vals, kept_vecs))
}

/// Eigenvalues below this fraction of the largest are treated as zero when
/// forming square roots.
const SUPPORT_REL_TOL: f64 = 1e-13;

/// Uhlmann fidelity `tr √(√ρ σ √ρ)`, computed as the nuclear norm of
/// `√ρ √σ` restricted to the two supports.
pub fn fidelity(rho: &DensityOp, sigma: &DensityOp) -> Result<f64> {
    same_dims(rho, sigma)?;
    let (lr, vr) = support(rho.matrix(), SUPPORT_REL_TOL)?;
    let (ls, vs) = support(sigma.matrix(), SUPPORT_REL_TOL)?;
    if lr.is_empty() || ls.is_empty() {
        return Ok(0.0);
    }
    // diag(√λρ) Vρ† Vσ diag(√λσ)
    let cross = vr.adjoint() * &vs;
    let a = CMatrix::from_fn(lr.len(), ls.len(), |i, j| cross[(i, j)] * C64::new((lr[i] * ls[j]).sqrt(), 0.0));
    let f: f64 = a.svd(false, false).singular_values.iter().sum();
    Ok(f.min(1.0))
}

/// Principal square root of a positive operator.
pub fn psd_sqrt(m: &CMatrix) -> Result<CMatrix> {
    let (vals, vecs) = eigh(m);
    let vals = clamp_spectrum(&vals)?;
    let n = m.nrows();
    let scaled = CMatrix::from_fn(n, n, |r, c| vecs[(r, c)] * C64::new(vals[c].sqrt(), 0.0));
    Ok(&scaled * vecs.adjoint())
}
