//! QBC4: parity-encoded commitment with open questioning.
//!
//! Babe asks for answers about the positions in `S`, each presented in one
//! fresh qubit drawn from a per-answer presentation set. She then asks how a
//! random half of those presentations were randomized and checks them, and
//! finally verifies everything once Adam opens.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{
    check_applicable, names, AdamStrategy, BabeStrategy, MessageKind::*, Observer, Party::*, Protocol, ProtocolConfig,
    RunOutcome, Session,
};
use crate::adversary::CheatKind;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, DensityOp, ProjectiveMeasurement, PureState, DENSE_CAP_QUBITS};
use crate::states::{
    commit_entanglement, parity, parity_class, parity_codeword, presentation_sets, ParityEncoding, StateSet,
};

/// How each answered slot is computed from the committed bits `j`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase", deny_unknown_fields)]
pub enum EncodingFn {
    /// `a_k = j_{S_k}`
    Identity,
    /// `a_k = ⊕_{l ∈ masks_k} j_l`
    SubsetParity { masks: Vec<Vec<usize>> },
    /// `a_k = tables_k[j_{S_k}]`, each table a permutation of {0, 1}
    Table { tables: Vec<[u8; 2]> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuestionSpec {
    pub subset: Vec<usize>,
    /// Presentation set for answer 0 and for answer 1.
    pub presentation: [StateSet; 2],
    pub encoding: EncodingFn,
}

impl QuestionSpec {
    pub fn new(subset: Vec<usize>, theta: f64, encoding: EncodingFn) -> Self {
        let (p0, p1) = presentation_sets(theta);
        Self { subset, presentation: [p0, p1], encoding }
    }

    /// Babe's question: a uniformly random `S` of size `n − n0` and an
    /// encoding drawn from the three families with equal probability.
    /// Subset-parity masks stay inside `S`.
    pub fn random<R: Rng + ?Sized>(n: usize, n0: usize, theta: f64, rng: &mut R) -> Self {
        let mut subset = sample(rng, n, n - n0).into_vec();
        subset.sort_unstable();
        let encoding = match rng.random_range(0..3) {
            0 => EncodingFn::Identity,
            1 => EncodingFn::Table {
                tables: subset.iter().map(|_| if rng.random() { [1, 0] } else { [0, 1] }).collect(),
            },
            _ => EncodingFn::SubsetParity {
                masks: subset
                    .iter()
                    .map(|&own| subset.iter().copied().filter(|&l| l == own || rng.random::<bool>()).collect())
                    .collect(),
            },
        };
        Self::new(subset, theta, encoding)
    }

    /// Single-slot question "parity of `j` over `mask`".
    pub fn parity(mask: Vec<usize>, theta: f64) -> Self {
        Self::new(vec![0], theta, EncodingFn::SubsetParity { masks: vec![mask] })
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::Spec(format!("question: {msg}")));
        if self.subset.windows(2).any(|w| w[0] >= w[1]) || self.subset.iter().any(|&l| l >= n) {
            return bad(format!("subset {:?} must be strictly increasing within 0..{n}", self.subset));
        }
        if self.presentation.iter().any(|s| s.is_empty()) {
            return bad("empty presentation set".into());
        }
        match &self.encoding {
            EncodingFn::Identity => Ok(()),
            EncodingFn::SubsetParity { masks } => {
                if masks.len() != self.subset.len() {
                    return bad("one mask per slot required".into());
                }
                if masks.iter().flatten().any(|&l| l >= n) {
                    return bad("mask position out of range".into());
                }
                Ok(())
            }
            EncodingFn::Table { tables } => {
                if tables.len() != self.subset.len() {
                    return bad("one table per slot required".into());
                }
                if tables.iter().any(|t| !(t == &[0, 1] || t == &[1, 0])) {
                    return bad("tables must permute {0, 1}".into());
                }
                Ok(())
            }
        }
    }

    pub fn answer(&self, slot: usize, bits: &[u8]) -> u8 {
        let own = bits[self.subset[slot]];
        match &self.encoding {
            EncodingFn::Identity => own,
            EncodingFn::Table { tables } => tables[slot][own as usize],
            EncodingFn::SubsetParity { masks } => masks[slot].iter().fold(0, |acc, &l| acc ^ bits[l]),
        }
    }

    /// The committed bit at `subset[slot]` implied by answer `a`, when the
    /// encoding determines it.
    pub fn invert(&self, slot: usize, a: u8) -> Option<u8> {
        match &self.encoding {
            EncodingFn::Identity => Some(a),
            EncodingFn::Table { tables } => tables[slot].iter().position(|&x| x == a).map(|i| i as u8),
            EncodingFn::SubsetParity { masks } => (masks[slot] == [self.subset[slot]]).then_some(a),
        }
    }

    pub fn presentation_state(&self, answer: u8, randomization: usize) -> &PureState {
        let set = &self.presentation[answer as usize & 1];
        &set.states[randomization % set.len()]
    }
}

/// `|C_01|` for a qubit state written as `ρ = Σ C_xy |x⟩⟨y|` over the
/// non-orthogonal pair `|φ⟩, |φ′⟩`, i.e. `C = G⁻¹ ρ G⁻†` with `G = [φ φ′]`.
pub fn interference_term(rho: &DensityOp, enc: &ParityEncoding) -> Result<f64> {
    let mut g = CMatrix::zeros(2, 2);
    g.set_column(0, enc.phi.amplitudes());
    g.set_column(1, enc.phi_prime.amplitudes());
    let inv = g.try_inverse().ok_or_else(|| Error::param("phi and phi' coincide"))?;
    let c = &inv * rho.matrix() * inv.adjoint();
    Ok(c[(0, 1)].norm())
}

pub fn run_qbc4(config: &ProtocolConfig, adam: &AdamStrategy, babe: &BabeStrategy) -> Result<RunOutcome> {
    run_qbc4_observed(config, adam, babe, &mut ())
}

pub fn run_qbc4_observed(
    config: &ProtocolConfig,
    adam: &AdamStrategy,
    babe: &BabeStrategy,
    observer: &mut dyn Observer,
) -> Result<RunOutcome> {
    config.expect(Protocol::Qbc4)?;
    check_applicable(Protocol::Qbc4, Adam, &adam.play, &[CheatKind::EPRCommit])?;
    check_applicable(Protocol::Qbc4, Babe, &babe.play, &[])?;
    let n = config.n;
    let enc = ParityEncoding::new(n, config.epsilon1)?;
    let b = adam.bit;
    let mut ses = Session::new(config, observer);

    // (i) n parity-encoded qubits; an entangled Adam keeps the codeword index
    let epr = adam.play.kind() == Some(CheatKind::EPRCommit);
    let (ids, register, mut bits) = if epr {
        let qubits = 2 * n - 1;
        if qubits > DENSE_CAP_QUBITS {
            return Err(Error::CapExceeded { qubits, cap: DENSE_CAP_QUBITS });
        }
        let words = parity_class(b, n);
        let states = words.iter().map(|w| parity_codeword(w, &enc)).collect::<Result<Vec<_>>>()?;
        let probs = vec![1.0 / words.len() as f64; words.len()];
        let all = ses.arena.prepare(Adam, commit_entanglement(&probs, &states)?);
        (all[1..].to_vec(), Some((all[0], words)), None)
    } else {
        let mut j: Vec<u8> = (0..n - 1).map(|_| ses.rng_adam.random_range(0..2)).collect();
        j.push(b ^ parity(&j));
        let ids = j.iter().map(|&x| ses.arena.prepare(Adam, enc.qubit(x).clone())[0]).collect();
        (ids, None, Some(j))
    };
    let qnames = names("t", 0..n);
    for (&id, name) in ids.iter().zip(&qnames) {
        ses.arena.owners.set_name(id, name.clone())?;
    }
    ses.arena.transfer(Adam, Babe, &ids)?;
    ses.post(Adam, SendQubits, &json!({ "count": n, "names": qnames, "encoding": enc.to_string() }))?;

    // (ii) question and presented answers
    let q = QuestionSpec::random(n, config.n0, config.theta, &mut ses.rng_babe);
    ses.post(Babe, RevealRequest, &json!({ "question": q }))?;
    if let Some((reg, words)) = &register {
        // not pre-entangled for this question: the index must be measured
        let basis = (0..words.len()).map(|i| PureState::basis(i, vec![words.len()])).collect::<Result<Vec<_>>>()?;
        let m = ProjectiveMeasurement::from_basis(vec![*reg], &basis)?;
        let i = ses.arena.measure(Adam, &m, &mut ses.rng_adam)?;
        bits = Some(words[i].clone());
    }
    let j = bits.expect("codeword fixed before answering");
    let slots = q.subset.len();
    let answers: Vec<u8> = (0..slots).map(|k| q.answer(k, &j)).collect();
    let rs: Vec<usize> = (0..slots).map(|_| ses.rng_adam.random_range(0..2)).collect();
    let pres: Vec<usize> =
        (0..slots).map(|k| ses.arena.prepare(Adam, q.presentation_state(answers[k], rs[k]).clone())[0]).collect();
    let pnames = names("p", q.subset.iter().copied());
    for (&id, name) in pres.iter().zip(&pnames) {
        ses.arena.owners.set_name(id, name.clone())?;
    }
    ses.arena.transfer(Adam, Babe, &pres)?;
    ses.post(Adam, SendQubits, &json!({ "count": slots, "names": pnames }))?;

    // (iii) randomization challenge on a random half of S
    let mut challenged = sample(&mut ses.rng_babe, slots, slots.div_ceil(2)).into_vec();
    challenged.sort_unstable();
    ses.post(Babe, RevealRequest, &json!({ "names": challenged.iter().map(|&k| &pnames[k]).collect::<Vec<_>>() }))?;
    let reveal: Vec<_> = challenged
        .iter()
        .map(|&k| json!({ "name": pnames[k], "answer": answers[k], "randomization": rs[k] }))
        .collect();
    ses.post(Adam, ClassicalReveal, &json!({ "answers": reveal }))?;
    for &k in &challenged {
        let expected = q.presentation_state(answers[k], rs[k]).clone();
        if !ses.arena.check(Babe, pres[k], &expected, &mut ses.rng_babe)? {
            ses.detect();
        }
        if let Some(x) = q.invert(k, answers[k]) {
            if !ses.arena.check(Babe, ids[q.subset[k]], enc.qubit(x), &mut ses.rng_babe)? {
                ses.detect();
            }
        }
    }
    if ses.over_budget() {
        return ses.abort(Babe, "presented answers failed verification");
    }

    // (iv) open every committed bit and every randomization
    let open_bit = adam.open_bit();
    let mut claim = j.clone();
    if open_bit != parity(&j) {
        let outside: Vec<usize> = (0..n).filter(|l| !q.subset.contains(l)).collect();
        let l = outside[ses.rng_adam.random_range(0..outside.len())];
        claim[l] ^= 1;
    }
    ses.post(Adam, Open, &json!({ "bit": open_bit, "bits": claim, "randomization": rs }))?;

    let mut accepted = parity(&claim) == open_bit;
    for k in 0..slots {
        let implied = q.answer(k, &claim);
        if challenged.contains(&k) {
            accepted &= implied == answers[k];
        } else {
            let expected = q.presentation_state(implied, rs[k]).clone();
            accepted &= ses.arena.check(Babe, pres[k], &expected, &mut ses.rng_babe)?;
        }
    }
    for l in 0..n {
        accepted &= ses.arena.check(Babe, ids[l], enc.qubit(claim[l]), &mut ses.rng_babe)?;
    }
    ses.finish(accepted, open_bit)
}
