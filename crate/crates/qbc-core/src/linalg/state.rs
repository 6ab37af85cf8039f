use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::spectral::{eigh, is_hermitian};
use super::tol;
use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub(crate) fn check_dims(dims: &[usize], len: usize) -> Result<()> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(Error::dims(format!("invalid subsystem dims {dims:?}")));
    }
    let product: usize = dims.iter().product();
    if product != len {
        return Err(Error::dims(format!("product of dims {dims:?} is {product}, representation has {len}")));
    }
    Ok(())
}

/// Unit vector over an ordered list of subsystems; subsystem 0 is the most
/// significant index of the amplitude vector.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    amps: CVector,
    dims: Vec<usize>,
}

impl PureState {
    pub fn new(amps: CVector, dims: Vec<usize>) -> Result<Self> {
        check_dims(&dims, amps.len())?;
        let norm = amps.norm();
        if (norm - 1.0).abs() > tol::CONSTRUCT {
            return Err(Error::InvalidState(format!("norm {norm} differs from 1")));
        }
        Ok(Self { amps, dims })
    }

    /// Rescales `amps` to unit norm. Fails on a zero vector.
    pub fn normalized(amps: CVector, dims: Vec<usize>) -> Result<Self> {
        check_dims(&dims, amps.len())?;
        let norm = amps.norm();
        if norm < 1e-300 {
            return Err(Error::InvalidState("zero vector cannot be normalized".into()));
        }
        Ok(Self { amps: amps / C64::new(norm, 0.0), dims })
    }

    pub fn from_real(amps: &[f64], dims: Vec<usize>) -> Result<Self> {
        let v = CVector::from_iterator(amps.len(), amps.iter().map(|&x| C64::new(x, 0.0)));
        Self::new(v, dims)
    }

    pub fn basis(index: usize, dims: Vec<usize>) -> Result<Self> {
        let dim: usize = dims.iter().product();
        if index >= dim {
            return Err(Error::param(format!("basis index {index} >= dimension {dim}")));
        }
        let mut v = CVector::zeros(dim);
        v[index] = C64::new(1.0, 0.0);
        Self::new(v, dims)
    }

    pub(crate) fn from_raw(amps: CVector, dims: Vec<usize>) -> Self {
        debug_assert_eq!(amps.len(), dims.iter().product::<usize>());
        Self { amps, dims }
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amps
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn num_subsystems(&self) -> usize {
        self.dims.len()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &PureState) -> Result<C64> {
        if self.dims != other.dims {
            return Err(Error::dims(format!("{:?} vs {:?}", self.dims, other.dims)));
        }
        Ok(self.amps.dotc(&other.amps))
    }

    pub fn overlap_sq(&self, other: &PureState) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    pub fn projector(&self) -> CMatrix {
        &self.amps * self.amps.adjoint()
    }

    pub fn to_density(&self) -> DensityOp {
        DensityOp::from_raw(self.projector(), self.dims.clone())
    }

    /// Global phase fixed so the first amplitude with modulus above 1e-12
    /// is real and nonnegative.
    pub fn canonical_phase(&self) -> PureState {
        let lead = self.amps.iter().find(|a| a.norm() > 1e-12).copied();
        match lead {
            Some(a) => {
                let phase = a.conj() / C64::new(a.norm(), 0.0);
                Self::from_raw(&self.amps * phase, self.dims.clone())
            }
            None => self.clone(),
        }
    }

    /// Equality up to global phase.
    pub fn approx_eq_projective(&self, other: &PureState, tol: f64) -> bool {
        self.dims == other.dims && (self.canonical_phase().amps - other.canonical_phase().amps).norm() <= tol
    }
}

/// Positive unit-trace operator over an ordered list of subsystems.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOp {
    matrix: CMatrix,
    dims: Vec<usize>,
}

impl DensityOp {
    /// Validates Hermiticity and unit trace within 1e-12, and the spectrum
    /// against the -1e-10 clamp.
    pub fn new(matrix: CMatrix, dims: Vec<usize>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::NotSquare { rows: matrix.nrows(), cols: matrix.ncols() });
        }
        check_dims(&dims, matrix.nrows())?;
        if !is_hermitian(&matrix, tol::CONSTRUCT) {
            return Err(Error::InvalidState("matrix is not Hermitian".into()));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > tol::CONSTRUCT || tr.im.abs() > tol::CONSTRUCT {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let (vals, _) = eigh(&matrix);
        if let Some(&min) = vals.last() {
            if min < -tol::PSD_CLAMP {
                return Err(Error::NotPositive(min));
            }
        }
        Ok(Self { matrix, dims })
    }

    pub(crate) fn from_raw(matrix: CMatrix, dims: Vec<usize>) -> Self {
        debug_assert_eq!(matrix.nrows(), dims.iter().product::<usize>());
        let herm = (&matrix + matrix.adjoint()) * C64::new(0.5, 0.0);
        Self { matrix: herm, dims }
    }

    /// `Σ_k w_k |ψ_k⟩⟨ψ_k|`; weights must be nonnegative and sum to one.
    pub fn mixture(weights: &[f64], states: &[PureState]) -> Result<Self> {
        check_distribution(weights)?;
        if weights.len() != states.len() || states.is_empty() {
            return Err(Error::param("weights and states differ in length"));
        }
        let dims = states[0].dims().to_vec();
        let dim = states[0].dim();
        let mut m = CMatrix::zeros(dim, dim);
        for (w, s) in weights.iter().zip(states) {
            if s.dims() != dims.as_slice() {
                return Err(Error::dims("mixture components differ in dims"));
            }
            m += s.projector() * C64::new(*w, 0.0);
        }
        Ok(Self::from_raw(m, dims))
    }

    pub fn maximally_mixed(dims: Vec<usize>) -> Result<Self> {
        let dim: usize = dims.iter().product();
        check_dims(&dims, dim)?;
        let m = CMatrix::identity(dim, dim) * C64::new(1.0 / dim as f64, 0.0);
        Ok(Self::from_raw(m, dims))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }
}

pub(crate) fn check_distribution(weights: &[f64]) -> Result<()> {
    if weights.iter().any(|&w| !(w >= 0.0)) {
        return Err(Error::param("probabilities must be nonnegative"));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > tol::CONSTRUCT {
        return Err(Error::param(format!("probabilities sum to {sum}, not 1")));
    }
    Ok(())
}

/// Unitary acting on an ordered list of subsystems.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryOp {
    matrix: CMatrix,
    dims: Vec<usize>,
}

impl UnitaryOp {
    pub fn new(matrix: CMatrix, dims: Vec<usize>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::NotSquare { rows: matrix.nrows(), cols: matrix.ncols() });
        }
        check_dims(&dims, matrix.nrows())?;
        let dev = unitarity_deviation(&matrix);
        if dev > tol::DERIVED {
            return Err(Error::NotUnitary(dev));
        }
        Ok(Self { matrix, dims })
    }

    pub fn identity(dims: Vec<usize>) -> Result<Self> {
        let dim: usize = dims.iter().product();
        check_dims(&dims, dim)?;
        Ok(Self { matrix: CMatrix::identity(dim, dim), dims })
    }

    pub(crate) fn from_raw(matrix: CMatrix, dims: Vec<usize>) -> Self {
        debug_assert_eq!(matrix.nrows(), dims.iter().product::<usize>());
        Self { matrix, dims }
    }

    /// Permutation of subsystems: output subsystem `p` carries input
    /// subsystem `order[p]`. All permuted subsystems must share one dimension.
    pub fn subsystem_permutation(dims: Vec<usize>, order: &[usize]) -> Result<Self> {
        super::subsystems::check_targets(order, dims.len())?;
        if order.len() != dims.len() {
            return Err(Error::param("permutation must list every subsystem"));
        }
        if order.iter().enumerate().any(|(p, &q)| dims[p] != dims[q]) {
            return Err(Error::dims("permutation mixes subsystems of different dimension"));
        }
        let dim: usize = dims.iter().product();
        let id = CMatrix::identity(dim, dim);
        let (m, _) = super::subsystems::permute_rows(&id, &dims, order);
        Ok(Self { matrix: m, dims })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn adjoint(&self) -> UnitaryOp {
        Self::from_raw(self.matrix.adjoint(), self.dims.clone())
    }

    /// `self · other` (other acts first).
    pub fn compose(&self, other: &UnitaryOp) -> Result<UnitaryOp> {
        if self.dims != other.dims {
            return Err(Error::dims(format!("{:?} vs {:?}", self.dims, other.dims)));
        }
        Ok(Self::from_raw(&self.matrix * &other.matrix, self.dims.clone()))
    }

    pub fn apply(&self, s: &PureState) -> Result<PureState> {
        if self.dims != s.dims {
            return Err(Error::dims(format!("{:?} vs {:?}", self.dims, s.dims)));
        }
        Ok(PureState::from_raw(&self.matrix * &s.amps, s.dims.clone()))
    }

    /// `‖U†U − I‖_F`.
    pub fn deviation(&self) -> f64 {
        unitarity_deviation(&self.matrix)
    }
}

fn unitarity_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    (m.adjoint() * m - CMatrix::identity(n, n)).norm()
}

/// Kronecker product; the result's dims are the concatenation.
pub trait Tensor: Sized {
    fn tensor(&self, other: &Self) -> Self;
}

impl Tensor for PureState {
    fn tensor(&self, other: &Self) -> Self {
        let amps = self.amps.kronecker(&other.amps);
        let dims = [self.dims.as_slice(), other.dims.as_slice()].concat();
        Self::from_raw(amps, dims)
    }
}

impl Tensor for DensityOp {
    fn tensor(&self, other: &Self) -> Self {
        let m = self.matrix.kronecker(&other.matrix);
        let dims = [self.dims.as_slice(), other.dims.as_slice()].concat();
        Self { matrix: m, dims }
    }
}

impl Tensor for UnitaryOp {
    fn tensor(&self, other: &Self) -> Self {
        let m = self.matrix.kronecker(&other.matrix);
        let dims = [self.dims.as_slice(), other.dims.as_slice()].concat();
        Self::from_raw(m, dims)
    }
}

pub fn tensor<T: Tensor>(a: &T, b: &T) -> T {
    a.tensor(b)
}

/// Tensor product of a nonempty list.
pub fn tensor_all<T: Tensor + Clone>(items: &[T]) -> Option<T> {
    let (first, rest) = items.split_first()?;
    Some(rest.iter().fold(first.clone(), |acc, x| acc.tensor(x)))
}

/// Complex number serialized as `[re, im]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Amplitude(pub [f64; 2]);

impl From<C64> for Amplitude {
    fn from(c: C64) -> Self {
        Amplitude([c.re, c.im])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn tensor_dims_concatenate() {
        let a = PureState::basis(0, vec![2]).unwrap();
        let b = PureState::basis(1, vec![3]).unwrap();
        let ab = a.tensor(&b);
        assert_eq!(ab.dims(), &[2, 3]);
        assert_eq!(ab.dim(), 6);
        assert_eq!(ab.amplitudes()[1], c(1.0));
    }

    #[test]
    fn tensor_of_zero_kets() {
        let z = PureState::basis(0, vec![2]).unwrap();
        let zz = tensor(&z, &z);
        let expected = [1.0, 0.0, 0.0, 0.0];
        for (a, e) in zz.amplitudes().iter().zip(expected) {
            assert_eq!(*a, c(e));
        }
    }

    #[test]
    fn tensor_of_identities() {
        let i2 = UnitaryOp::identity(vec![2]).unwrap();
        let i4 = i2.tensor(&i2);
        assert_eq!(i4.matrix(), &CMatrix::identity(4, 4));
        assert_eq!(i4.dims(), &[2, 2]);
    }

    #[test]
    fn rejects_unnormalized_state() {
        let v = CVector::from_vec(vec![c(1.0), c(1.0)]);
        assert!(PureState::new(v.clone(), vec![2]).is_err());
        assert!(PureState::normalized(v, vec![2]).is_ok());
    }

    #[test]
    fn rejects_bad_dims() {
        let v = CVector::from_vec(vec![c(1.0), c(0.0), c(0.0)]);
        assert!(matches!(PureState::new(v, vec![2]), Err(Error::DimMismatch(_))));
    }

    #[test]
    fn density_validation() {
        let bad_trace = CMatrix::identity(2, 2);
        assert!(DensityOp::new(bad_trace, vec![2]).is_err());
        let mut neg = CMatrix::zeros(2, 2);
        neg[(0, 0)] = c(1.5);
        neg[(1, 1)] = c(-0.5);
        assert!(matches!(DensityOp::new(neg, vec![2]), Err(Error::NotPositive(_))));
        let mut nonherm = CMatrix::identity(2, 2) * c(0.5);
        nonherm[(0, 1)] = c(0.1);
        assert!(DensityOp::new(nonherm, vec![2]).is_err());
    }

    #[test]
    fn rejects_non_unitary() {
        let m = CMatrix::identity(2, 2) * c(2.0);
        assert!(matches!(UnitaryOp::new(m, vec![2]), Err(Error::NotUnitary(_))));
    }

    #[test]
    fn subsystem_permutation_moves_qubits() {
        // output 0 <- input 1, output 1 <- input 0: a swap
        let swap = UnitaryOp::subsystem_permutation(vec![2, 2], &[1, 0]).unwrap();
        let s01 = PureState::basis(1, vec![2, 2]).unwrap(); // |0>|1>
        let out = swap.apply(&s01).unwrap();
        assert_eq!(out.amplitudes()[2], c(1.0)); // |1>|0>
    }

    #[test]
    fn canonical_phase_fixes_leading_amplitude() {
        let v = CVector::from_vec(vec![C64::new(0.0, 1.0), c(0.0)]);
        let s = PureState::new(v, vec![2]).unwrap();
        let z = PureState::basis(0, vec![2]).unwrap();
        assert!(s.approx_eq_projective(&z, 1e-12));
        assert_ne!(s, z);
    }
}
