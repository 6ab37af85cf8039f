use super::spectral::eigh;
use super::state::{CVector, PureState, C64};
use super::subsystems::{bipartite_matrix, permute_state, targets_first};
use crate::error::{Error, Result};

/// `Φ = Σ_j c_j |a_j⟩|b_j⟩` across the cut `A | rest`.
#[derive(Clone, Debug)]
pub struct SchmidtForm {
    /// Descending, nonnegative.
    pub coefficients: Vec<f64>,
    pub basis_a: Vec<CVector>,
    pub basis_b: Vec<CVector>,
    /// Subsystems forming side A, in order.
    pub cut: Vec<usize>,
    /// Remaining subsystems (side B), ascending.
    pub rest: Vec<usize>,
    /// Dims of the original state.
    pub dims: Vec<usize>,
}

impl SchmidtForm {
    pub fn rank(&self, tol: f64) -> usize {
        self.coefficients.iter().filter(|&&c| c > tol).count()
    }

    /// Rebuilds the state in its original subsystem order.
    pub fn reconstruct(&self) -> PureState {
        let da = self.basis_a.first().map_or(1, |v| v.len());
        let db = self.basis_b.first().map_or(1, |v| v.len());
        let mut v = CVector::zeros(da * db);
        for ((c, a), b) in self.coefficients.iter().zip(&self.basis_a).zip(&self.basis_b) {
            v += a.kronecker(b) * C64::new(*c, 0.0);
        }
        let order = targets_first(&self.cut, self.dims.len());
        let permuted_dims = order.iter().map(|&q| self.dims[q]).collect();
        let permuted = PureState::from_raw(v, permuted_dims);
        // inverse of `order`
        let mut inverse = vec![0; order.len()];
        for (p, &q) in order.iter().enumerate() {
            inverse[q] = p;
        }
        permute_state(&permuted, &inverse).expect("inverse of a valid permutation")
    }
}

const DEGENERACY_TOL: f64 = 1e-10;
const ZERO_COEFF: f64 = 1e-12;

/// Schmidt decomposition from the eigenvectors of the side-A marginal.
///
/// Within a degenerate eigenvalue block the A vectors are fixed by
/// Gram–Schmidt over the projected computational basis, and every A vector
/// has its first significant amplitude real and positive. The coefficients
/// are taken as norms of the contracted B vectors, which keeps zero
/// coefficients at roundoff level.
pub fn schmidt(state: &PureState, cut: &[usize]) -> Result<SchmidtForm> {
    let count = state.num_subsystems();
    if cut.is_empty() || cut.len() >= count {
        return Err(Error::InvalidBipartition(format!(
            "cut {cut:?} must be a nonempty proper subset of {count} subsystems"
        )));
    }
    let m = bipartite_matrix(state, cut).map_err(|e| Error::InvalidBipartition(e.to_string()))?;
    let (da, db) = (m.nrows(), m.ncols());
    let (vals, vecs) = eigh(&(&m * m.adjoint()));

    let mut basis_a: Vec<CVector> = Vec::with_capacity(da);
    let mut start = 0;
    while start < da {
        let mut end = start + 1;
        while end < da && (vals[end - 1] - vals[end]).abs() < DEGENERACY_TOL {
            end += 1;
        }
        let block: Vec<CVector> = (start..end).map(|j| vecs.column(j).into_owned()).collect();
        if block.len() == 1 {
            basis_a.push(fix_phase(block.into_iter().next().unwrap()));
        } else {
            basis_a.extend(canonical_block_basis(&block, da));
        }
        start = end;
    }

    let r = da.min(db);
    let mut terms: Vec<(f64, CVector, Option<CVector>)> = basis_a
        .into_iter()
        .take(r)
        .map(|a| {
            let v = m.transpose() * a.conjugate();
            let c = v.norm();
            let b = (c > ZERO_COEFF).then(|| v / C64::new(c, 0.0));
            (c, a, b)
        })
        .collect();
    terms.sort_by(|x, y| y.0.total_cmp(&x.0));

    let known_b: Vec<CVector> = terms.iter().filter_map(|t| t.2.clone()).collect();
    let mut fill = complete_orthonormal(&known_b, db).into_iter().skip(known_b.len());
    let mut coefficients = Vec::with_capacity(r);
    let mut out_a = Vec::with_capacity(r);
    let mut out_b = Vec::with_capacity(r);
    for (c, a, b) in terms {
        coefficients.push(c);
        out_a.push(a);
        out_b.push(b.unwrap_or_else(|| fill.next().expect("enough basis vectors")));
    }
    let mut rest = targets_first(cut, count);
    rest.drain(..cut.len());
    Ok(SchmidtForm {
        coefficients,
        basis_a: out_a,
        basis_b: out_b,
        cut: cut.to_vec(),
        rest,
        dims: state.dims().to_vec(),
    })
}

pub(crate) fn fix_phase(v: CVector) -> CVector {
    match v.iter().find(|a| a.norm() > 1e-8).copied() {
        Some(a) => {
            let phase = a.conj() / C64::new(a.norm(), 0.0);
            v * phase
        }
        None => v,
    }
}

/// Orthonormal basis of span(block) built by projecting e_0, e_1, … in
/// index order.
fn canonical_block_basis(block: &[CVector], dim: usize) -> Vec<CVector> {
    let mut out: Vec<CVector> = Vec::with_capacity(block.len());
    for k in 0..dim {
        if out.len() == block.len() {
            break;
        }
        let mut v = CVector::zeros(dim);
        for q in block {
            v += q * q[k].conj();
        }
        for u in &out {
            let p = u.dotc(&v);
            v -= u * p;
        }
        let n = v.norm();
        if n > 1e-6 {
            out.push(fix_phase(v / C64::new(n, 0.0)));
        }
    }
    out
}

/// Extends an orthonormal list to a full basis with computational basis
/// vectors in index order.
pub(crate) fn complete_orthonormal(known: &[CVector], dim: usize) -> Vec<CVector> {
    let mut out: Vec<CVector> = known.to_vec();
    for k in 0..dim {
        if out.len() == dim {
            break;
        }
        let mut v = CVector::zeros(dim);
        v[k] = C64::new(1.0, 0.0);
        // twice for numerical orthogonality
        for _ in 0..2 {
            for u in &out {
                let p = u.dotc(&v);
                v -= u * p;
            }
        }
        let n = v.norm();
        if n > 1e-6 {
            out.push(v / C64::new(n, 0.0));
        }
    }
    out
}
