//! Subsystem bookkeeping: reordering, partial trace, and embedding local
//! operators into a larger product space. Index convention is row-major
//! with subsystem 0 most significant.

use super::state::{CMatrix, CVector, DensityOp, PureState, UnitaryOp, C64};
use crate::error::{Error, Result};

pub(crate) fn check_targets(targets: &[usize], count: usize) -> Result<()> {
    let mut seen = vec![false; count];
    for &t in targets {
        if t >= count {
            return Err(Error::IndexOutOfRange { index: t, count });
        }
        if seen[t] {
            return Err(Error::param(format!("subsystem {t} listed twice")));
        }
        seen[t] = true;
    }
    Ok(())
}

/// `targets` followed by the remaining subsystems in ascending order.
pub(crate) fn targets_first(targets: &[usize], count: usize) -> Vec<usize> {
    let mut order = targets.to_vec();
    order.extend((0..count).filter(|i| !targets.contains(i)));
    order
}

/// For the reordered space whose subsystem `p` is old subsystem `order[p]`,
/// `map[new_flat] = old_flat`.
pub(crate) fn index_map(dims: &[usize], order: &[usize]) -> Vec<usize> {
    let k = dims.len();
    let mut old_strides = vec![1usize; k];
    for i in (0..k.saturating_sub(1)).rev() {
        old_strides[i] = old_strides[i + 1] * dims[i + 1];
    }
    let new_dims: Vec<usize> = order.iter().map(|&q| dims[q]).collect();
    let total: usize = dims.iter().product();
    let mut map = Vec::with_capacity(total);
    let mut digits = vec![0usize; order.len()];
    for _ in 0..total {
        map.push(digits.iter().zip(order).map(|(&d, &q)| d * old_strides[q]).sum());
        for p in (0..digits.len()).rev() {
            digits[p] += 1;
            if digits[p] < new_dims[p] {
                break;
            }
            digits[p] = 0;
        }
    }
    map
}

pub(crate) fn permute_rows(m: &CMatrix, dims: &[usize], order: &[usize]) -> (CMatrix, Vec<usize>) {
    let map = index_map(dims, order);
    let out = CMatrix::from_fn(m.nrows(), m.ncols(), |r, c| m[(map[r], c)]);
    (out, order.iter().map(|&q| dims[q]).collect())
}

pub fn permute_state(s: &PureState, order: &[usize]) -> Result<PureState> {
    check_targets(order, s.num_subsystems())?;
    if order.len() != s.num_subsystems() {
        return Err(Error::param("permutation must list every subsystem"));
    }
    let map = index_map(s.dims(), order);
    let v = CVector::from_fn(s.dim(), |r, _| s.amplitudes()[map[r]]);
    Ok(PureState::from_raw(v, order.iter().map(|&q| s.dims()[q]).collect()))
}

pub fn permute_density(rho: &DensityOp, order: &[usize]) -> Result<DensityOp> {
    check_targets(order, rho.dims().len())?;
    if order.len() != rho.dims().len() {
        return Err(Error::param("permutation must list every subsystem"));
    }
    let map = index_map(rho.dims(), order);
    let m = rho.matrix();
    let out = CMatrix::from_fn(m.nrows(), m.ncols(), |r, c| m[(map[r], map[c])]);
    Ok(DensityOp::from_raw(out, order.iter().map(|&q| rho.dims()[q]).collect()))
}

/// Reduced density operator of `keep` (in the listed order).
pub fn partial_trace(rho: &DensityOp, keep: &[usize]) -> Result<DensityOp> {
    let dims = rho.dims();
    check_targets(keep, dims.len())?;
    let order = targets_first(keep, dims.len());
    let map = index_map(dims, &order);
    let kd: usize = keep.iter().map(|&k| dims[k]).product();
    let td = rho.dim() / kd;
    let m = rho.matrix();
    let out = CMatrix::from_fn(kd, kd, |a, b| (0..td).map(|t| m[(map[a * td + t], map[b * td + t])]).sum());
    Ok(DensityOp::from_raw(out, keep.iter().map(|&k| dims[k]).collect()))
}

/// `ψ` reshaped to a `dim(keep) × dim(rest)` matrix.
pub(crate) fn bipartite_matrix(s: &PureState, keep: &[usize]) -> Result<CMatrix> {
    check_targets(keep, s.num_subsystems())?;
    let order = targets_first(keep, s.num_subsystems());
    let map = index_map(s.dims(), &order);
    let kd: usize = keep.iter().map(|&k| s.dims()[k]).product();
    let td = s.dim() / kd;
    let v = s.amplitudes();
    Ok(CMatrix::from_fn(kd, td, |a, t| v[map[a * td + t]]))
}

/// Marginal of a pure state on `keep`, computed as `M M†` without forming
/// the full projector.
pub fn reduced_state(s: &PureState, keep: &[usize]) -> Result<DensityOp> {
    let m = bipartite_matrix(s, keep)?;
    let dims = keep.iter().map(|&k| s.dims()[k]).collect();
    Ok(DensityOp::from_raw(&m * m.adjoint(), dims))
}

fn check_local(op_dims: &[usize], targets: &[usize], dims: &[usize]) -> Result<()> {
    check_targets(targets, dims.len())?;
    let target_dims: Vec<usize> = targets.iter().map(|&t| dims[t]).collect();
    if target_dims != op_dims {
        return Err(Error::dims(format!("operator dims {op_dims:?} do not match targeted dims {target_dims:?}")));
    }
    Ok(())
}

/// `op ⊗ I` on the full space, with `op` acting on `targets` in order.
pub fn embed_operator(op: &CMatrix, targets: &[usize], dims: &[usize]) -> Result<CMatrix> {
    check_targets(targets, dims.len())?;
    let kd: usize = targets.iter().map(|&t| dims[t]).product();
    if op.nrows() != kd || op.ncols() != kd {
        return Err(Error::dims("operator size does not match targets"));
    }
    let order = targets_first(targets, dims.len());
    let map = index_map(dims, &order);
    let total: usize = dims.iter().product();
    let td = total / kd;
    let mut out = CMatrix::zeros(total, total);
    for a in 0..kd {
        for b in 0..kd {
            let x = op[(a, b)];
            if x == C64::new(0.0, 0.0) {
                continue;
            }
            for t in 0..td {
                out[(map[a * td + t], map[b * td + t])] = x;
            }
        }
    }
    Ok(out)
}

pub(crate) fn apply_to_amplitudes(op: &CMatrix, targets: &[usize], s: &PureState) -> Result<CVector> {
    let order = targets_first(targets, s.num_subsystems());
    let map = index_map(s.dims(), &order);
    let kd = op.nrows();
    let td = s.dim() / kd;
    let v = s.amplitudes();
    let m = CMatrix::from_fn(kd, td, |a, t| v[map[a * td + t]]);
    let w = op * m;
    let mut out = CVector::zeros(s.dim());
    for a in 0..kd {
        for t in 0..td {
            out[map[a * td + t]] = w[(a, t)];
        }
    }
    Ok(out)
}

/// States a local unitary can act on.
pub trait LocalEvolution: Sized {
    fn apply_local(&self, u: &UnitaryOp, targets: &[usize]) -> Result<Self>;
}

impl LocalEvolution for PureState {
    fn apply_local(&self, u: &UnitaryOp, targets: &[usize]) -> Result<Self> {
        check_local(u.dims(), targets, self.dims())?;
        let out = apply_to_amplitudes(u.matrix(), targets, self)?;
        Ok(PureState::from_raw(out, self.dims().to_vec()))
    }
}

impl LocalEvolution for DensityOp {
    fn apply_local(&self, u: &UnitaryOp, targets: &[usize]) -> Result<Self> {
        check_local(u.dims(), targets, self.dims())?;
        let full = embed_operator(u.matrix(), targets, self.dims())?;
        let m = &full * self.matrix() * full.adjoint();
        Ok(DensityOp::from_raw(m, self.dims().to_vec()))
    }
}

pub fn apply_local<S: LocalEvolution>(u: &UnitaryOp, targets: &[usize], s: &S) -> Result<S> {
    s.apply_local(u, targets)
}
