//! Fidelity of the parity commitment, before and after the answers are
//! presented.

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector, C64, DENSE_CAP_QUBITS};
use crate::states::{bits_of, parity, ParityEncoding, StateSet};

/// `F(ρ0, ρ1)` for the two parity mixtures.
///
/// In the eigenbasis of `|φ⟩⟨φ| + |φ′⟩⟨φ′|` each `ρ_b` splits into rank-one
/// blocks over `{s, s̄}`, which gives
/// `F = ½ Σ_k C(n,k) |α^{2(n−k)} β^{2k} − α^{2k} β^{2(n−k)}|`
/// with `α² = (1 + √ε1)/2`, `β² = (1 − √ε1)/2`.
pub fn parity_fidelity_closed_form(n: usize, epsilon1: f64) -> f64 {
    let a2 = (1.0 + epsilon1.sqrt()) / 2.0;
    let b2 = (1.0 - epsilon1.sqrt()) / 2.0;
    let mut binom = 1.0;
    let mut total = 0.0;
    for k in 0..=n {
        let (k_, nk) = (k as i32, (n - k) as i32);
        total += binom * (a2.powi(nk) * b2.powi(k_) - a2.powi(k_) * b2.powi(nk)).abs();
        binom = binom * (n - k) as f64 / (k + 1) as f64;
    }
    0.5 * total
}

/// Fidelity of `V0 V0†` and `V1 V1†` as the trace norm of `V0† V1`.
fn gram_fidelity(v0: &CMatrix, v1: &CMatrix) -> f64 {
    let cross = v0.adjoint() * v1;
    cross.svd(false, false).singular_values.iter().sum::<f64>().min(1.0)
}

/// Columns `√w ⊗_l |φ_{j_l}⟩ ⊗ |p_{j_l r_l}⟩` over every `j` of parity `b`
/// and every randomization `r`. Without a presentation the columns are the
/// codewords alone.
fn ensemble_columns(b: u8, enc: &ParityEncoding, presentation: Option<&[StateSet; 2]>) -> CMatrix {
    let n = enc.n;
    let words: Vec<Vec<u8>> = (0..1usize << n).map(|x| bits_of(x, n)).filter(|w| parity(w) == b).collect();
    let mut cols: Vec<CVector> = Vec::new();
    for w in &words {
        let mut branches: Vec<CVector> = vec![CVector::from_element(1, C64::new(1.0, 0.0))];
        for &x in w {
            let committed = enc.qubit(x).amplitudes();
            let locals: Vec<CVector> = match presentation {
                None => vec![committed.clone()],
                Some(sets) => sets[x as usize].states.iter().map(|p| committed.kronecker(p.amplitudes())).collect(),
            };
            branches = branches.iter().flat_map(|v| locals.iter().map(move |l| v.kronecker(l))).collect();
        }
        cols.extend(branches);
    }
    let weight = C64::new((1.0 / cols.len() as f64).sqrt(), 0.0);
    CMatrix::from_fn(cols[0].len(), cols.len(), |r, c| cols[c][r] * weight)
}

/// `(F, F′)`: fidelity of Babe's commitment states alone, and with every
/// position's answer also presented from `presentation[bit]`, each state
/// of a set equally likely.
pub fn qbc4_fidelity_gap(n: usize, epsilon1: f64, presentation: &[StateSet; 2]) -> Result<(f64, f64)> {
    if presentation.iter().any(|s| s.is_empty() || s.states[0].dim() != 2) {
        return Err(Error::param("presentation sets must hold qubit states"));
    }
    let qubits = 2 * n;
    if qubits > DENSE_CAP_QUBITS {
        return Err(Error::CapExceeded { qubits, cap: DENSE_CAP_QUBITS });
    }
    let enc = ParityEncoding::new(n, epsilon1)?;
    let f = gram_fidelity(&ensemble_columns(0, &enc, None), &ensemble_columns(1, &enc, None));
    let fp =
        gram_fidelity(&ensemble_columns(0, &enc, Some(presentation)), &ensemble_columns(1, &enc, Some(presentation)));
    Ok((f, fp))
}

/// Dense reference for the presented states, as explicit density operators.
#[cfg(test)]
pub(crate) fn presented_mixture(b: u8, enc: &ParityEncoding, presentation: &[StateSet; 2]) -> crate::linalg::DensityOp {
    let v = ensemble_columns(b, enc, Some(presentation));
    let m = &v * v.adjoint();
    crate::linalg::DensityOp::new(m, vec![2; 2 * enc.n]).expect("mixture of states")
}
