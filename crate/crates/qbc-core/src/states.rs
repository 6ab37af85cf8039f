//! Concrete state families: great-circle qubits, BB84 sets, parity
//! codewords, commitment entanglements, purifications, and controlled
//! unitaries.
//!
//! The great circle is the real-amplitude (x–z) circle of the Bloch
//! sphere: angle `θ` is the state `cos(θ/2)|0⟩ + sin(θ/2)|1⟩`, so angles
//! `π` apart are orthogonal.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{
    check_distribution, CMatrix, CVector, DensityOp, PureState, Tensor, UnitaryOp, C64, DENSE_CAP_QUBITS,
};
use crate::numfmt::format_g;

/// Angle on the great circle, reduced to `[0, 2π)`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct GreatCircleAngle(f64);

impl GreatCircleAngle {
    pub fn new(theta: f64) -> Self {
        let r = theta.rem_euclid(TAU);
        // rem_euclid can round up to exactly TAU
        Self(if r >= TAU { 0.0 } else { r })
    }

    pub fn radians(self) -> f64 {
        self.0
    }
}

pub fn great_circle_state(theta: f64) -> PureState {
    let (s, c) = (theta / 2.0).sin_cos();
    PureState::from_real(&[c, s], vec![2]).expect("unit vector")
}

/// Rotation by `delta` along the circle: `R(δ)·state(θ) = state(θ + δ)`.
pub fn rotation(delta: f64) -> UnitaryOp {
    let (s, c) = (delta / 2.0).sin_cos();
    let m = CMatrix::from_row_slice(2, 2, &[C64::new(c, 0.0), C64::new(-s, 0.0), C64::new(s, 0.0), C64::new(c, 0.0)]);
    UnitaryOp::new(m, vec![2]).expect("rotation is unitary")
}

/// Labeled list of single-qubit circle states.
#[derive(Clone, Debug)]
pub struct StateSet {
    pub label: String,
    pub angles: Vec<GreatCircleAngle>,
    pub states: Vec<PureState>,
}

impl StateSet {
    pub fn from_angles(label: impl Into<String>, angles: &[f64]) -> Self {
        let angles: Vec<GreatCircleAngle> = angles.iter().map(|&a| GreatCircleAngle::new(a)).collect();
        let states = angles.iter().map(|a| great_circle_state(a.radians())).collect();
        Self { label: label.into(), angles, states }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// `label = [θ0, θ1, …]`, radians at 15 significant digits.
impl fmt::Display for StateSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let angles: Vec<String> = self.angles.iter().map(|a| format_g(a.radians(), 15)).collect();
        write!(f, "{} = [{}]", self.label, angles.join(", "))
    }
}

impl FromStr for StateSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (label, rest) = s.split_once('=').ok_or_else(|| Error::param(format!("missing '=' in state set {s:?}")))?;
        let body = rest
            .trim()
            .strip_prefix('[')
            .and_then(|r| r.strip_suffix(']'))
            .ok_or_else(|| Error::param("angle list must be bracketed"))?;
        let angles = body
            .split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<f64>().map_err(|e| Error::param(format!("bad angle {t:?}: {e}"))))
            .collect::<Result<Vec<f64>>>()?;
        Ok(Self::from_angles(label.trim(), &angles))
    }
}

impl serde::Serialize for StateSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for StateSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

impl PartialEq for StateSet {
    fn eq(&self, other: &Self) -> bool {
        self.label == other.label && self.angles == other.angles
    }
}

/// The four BB84 states `|1⟩..|4⟩` at angles 0, π/2, π, 3π/2.
pub fn bb84_set() -> StateSet {
    StateSet::from_angles("S0", &[0.0, PI / 2.0, PI, 3.0 * PI / 2.0])
}

/// Presentation sets for parity answers: bit 0 as `{|1⟩, R(θ)|1⟩}`, bit 1
/// as `{|3⟩, R(θ)|3⟩}`.
pub fn presentation_sets(theta: f64) -> (StateSet, StateSet) {
    (StateSet::from_angles("P0", &[0.0, theta]), StateSet::from_angles("P1", &[PI, PI + theta]))
}

/// `|φ⟩ = state(0)`, `|φ′⟩ = state(2 arccos √ε1)`, so `|⟨φ|φ′⟩|² = ε1`.
pub fn overlap_pair(epsilon1: f64) -> Result<(PureState, PureState)> {
    if !(0.0..1.0).contains(&epsilon1) {
        return Err(Error::param(format!("epsilon1 = {epsilon1} outside [0, 1)")));
    }
    Ok((great_circle_state(0.0), great_circle_state(2.0 * epsilon1.sqrt().acos())))
}

/// Qubit pair `|φ⟩, |φ′⟩` whose count parity encodes the committed bit.
#[derive(Clone, Debug)]
pub struct ParityEncoding {
    pub n: usize,
    pub epsilon1: f64,
    pub phi: PureState,
    pub phi_prime: PureState,
}

impl ParityEncoding {
    pub fn new(n: usize, epsilon1: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("parity encoding needs at least one qubit"));
        }
        let (phi, phi_prime) = overlap_pair(epsilon1)?;
        Ok(Self { n, epsilon1, phi, phi_prime })
    }

    pub fn qubit(&self, bit: u8) -> &PureState {
        if bit == 0 {
            &self.phi
        } else {
            &self.phi_prime
        }
    }

    pub fn prime_angle(&self) -> f64 {
        2.0 * self.epsilon1.sqrt().acos()
    }
}

impl fmt::Display for ParityEncoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "parity n={} epsilon1={} = [0, {}]",
            self.n,
            format_g(self.epsilon1, 15),
            format_g(self.prime_angle(), 15)
        )
    }
}

/// `⊗_l (bits_l == 0 ? |φ⟩ : |φ′⟩)`.
pub fn parity_codeword(bits: &[u8], enc: &ParityEncoding) -> Result<PureState> {
    if bits.len() != enc.n {
        return Err(Error::dims(format!("{} bits for an n = {} encoding", bits.len(), enc.n)));
    }
    let mut out = enc.qubit(bits[0]).clone();
    for &b in &bits[1..] {
        out = out.tensor(enc.qubit(b));
    }
    Ok(out)
}

pub fn parity(bits: &[u8]) -> u8 {
    bits.iter().fold(0, |acc, &b| acc ^ (b & 1))
}

/// Bits of `x` as an `n`-bit string, most significant first.
pub fn bits_of(x: usize, n: usize) -> Vec<u8> {
    (0..n).map(|l| ((x >> (n - 1 - l)) & 1) as u8).collect()
}

/// All `n`-bit strings of the given parity, in increasing numeric order.
pub fn parity_class(b: u8, n: usize) -> Vec<Vec<u8>> {
    (0..1usize << n).map(|x| bits_of(x, n)).filter(|bits| parity(bits) == b).collect()
}

/// Uniform mixture of the codewords of parity `b`, each with weight
/// `1/2^(n−1)`.
pub fn parity_mixture(b: u8, enc: &ParityEncoding) -> Result<DensityOp> {
    if enc.n > DENSE_CAP_QUBITS {
        return Err(Error::CapExceeded { qubits: enc.n, cap: DENSE_CAP_QUBITS });
    }
    let words = parity_class(b & 1, enc.n);
    let dim = 1usize << enc.n;
    let mut cols = CMatrix::zeros(dim, words.len());
    for (j, w) in words.iter().enumerate() {
        cols.set_column(j, parity_codeword(w, enc)?.amplitudes());
    }
    let weight = C64::new(1.0 / words.len() as f64, 0.0);
    let m = &cols * cols.adjoint() * weight;
    Ok(DensityOp::from_raw(m, vec![2; enc.n]))
}

/// `Σ_i √p_i |e_i⟩|φ_i⟩` with the ancilla (dimension M) as subsystem 0.
pub fn commit_entanglement(probs: &[f64], states: &[PureState]) -> Result<PureState> {
    let dims = check_ensemble(probs, states)?;
    let m = states.len();
    let mut v = CVector::zeros(m * states[0].dim());
    for (i, (p, s)) in probs.iter().zip(states).enumerate() {
        let e = PureState::basis(i, vec![m])?;
        v += e.tensor(s).amplitudes() * C64::new(p.sqrt(), 0.0);
    }
    PureState::normalized(v, [vec![m], dims].concat())
}

/// `Σ_k √λ_k |ψ_k⟩|f_k⟩` with the ancilla (dimension K) as the last
/// subsystem.
pub fn purification(weights: &[f64], states: &[PureState]) -> Result<PureState> {
    let dims = check_ensemble(weights, states)?;
    let k = states.len();
    let mut v = CVector::zeros(k * states[0].dim());
    for (i, (w, s)) in weights.iter().zip(states).enumerate() {
        let f = PureState::basis(i, vec![k])?;
        v += s.tensor(&f).amplitudes() * C64::new(w.sqrt(), 0.0);
    }
    PureState::normalized(v, [dims, vec![k]].concat())
}

fn check_ensemble(probs: &[f64], states: &[PureState]) -> Result<Vec<usize>> {
    if probs.len() != states.len() || states.is_empty() {
        return Err(Error::param("probabilities and states differ in length"));
    }
    check_distribution(probs)?;
    let dims = states[0].dims().to_vec();
    if states.iter().any(|s| s.dims() != dims.as_slice()) {
        return Err(Error::dims("ensemble states differ in dims"));
    }
    Ok(dims)
}

/// `Σ_l |g_l⟩⟨g_l| ⊗ U_l`: measuring `{g_l}` and then applying `U_l`,
/// written as one unitary.
pub fn controlled_unitary(basis: &[PureState], ops: &[UnitaryOp]) -> Result<UnitaryOp> {
    let Some(first) = basis.first() else {
        return Err(Error::param("empty control basis"));
    };
    if basis.len() != first.dim() {
        return Err(Error::param(format!("control basis has {} vectors for dimension {}", basis.len(), first.dim())));
    }
    if ops.len() != basis.len() {
        return Err(Error::param("one operator per control basis vector required"));
    }
    for (i, a) in basis.iter().enumerate() {
        for (j, b) in basis.iter().enumerate() {
            let expected = if i == j { 1.0 } else { 0.0 };
            if (a.inner(b)? - C64::new(expected, 0.0)).norm() > crate::linalg::tol::DERIVED {
                return Err(Error::param("control basis is not orthonormal"));
            }
        }
    }
    let target_dims = ops[0].dims().to_vec();
    if ops.iter().any(|u| u.dims() != target_dims.as_slice()) {
        return Err(Error::dims("controlled operators differ in dims"));
    }
    let d = first.dim() * ops[0].dim();
    let mut m = CMatrix::zeros(d, d);
    for (g, u) in basis.iter().zip(ops) {
        m += g.projector().kronecker(u.matrix());
    }
    UnitaryOp::new(m, [first.dims().to_vec(), target_dims].concat())
}
