//! Adam against open questioning: pre-entangled answers help only when
//! Babe happens to ask one of the questions he prepared for.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::cheat::{adam_cheat_success, epr_cheat_unitary, Verification};
use super::report::Estimate;
use crate::error::{Error, Result};
use crate::linalg::{CVector, PureState, C64, DENSE_CAP_QUBITS};
use crate::protocol::QuestionSpec;
use crate::states::{bits_of, parity, ParityEncoding};

/// Where the attacked run stands when the question arrives.
#[derive(Clone, Debug)]
pub struct AttackInstance {
    pub phi: PureState,
    pub phi_prime: PureState,
    /// Codeword Adam holds after measuring his register.
    pub committed: Vec<u8>,
    /// Slots whose answers and randomizations Babe has had revealed.
    pub challenged: Vec<usize>,
}

impl AttackInstance {
    pub fn new(enc: &ParityEncoding, committed: Vec<u8>, challenged: Vec<usize>) -> Self {
        Self { phi: enc.phi.clone(), phi_prime: enc.phi_prime.clone(), committed, challenged }
    }

    fn n(&self) -> usize {
        self.committed.len()
    }

    fn qubit(&self, x: u8) -> &PureState {
        if x == 0 {
            &self.phi
        } else {
            &self.phi_prime
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AttackPath {
    PreEntangled,
    ForcedMeasurement,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackResult {
    pub path: AttackPath,
    pub success: f64,
}

/// Probability that Adam opens the bit he did not commit.
///
/// If `actual` was prepared for, his state carries the answers coherently and
/// the optimal local rotation on his registers succeeds with
/// `|⟨Φ′1|U|Φ′0⟩|²`. Otherwise he had to measure his register to answer, and
/// the best he can do is claim the most plausible codeword of the other
/// parity, knowing his randomizations.
pub fn pre_entanglement_attack(
    pre_entangled: &[QuestionSpec],
    actual: &QuestionSpec,
    instance: &AttackInstance,
) -> Result<AttackResult> {
    let n = instance.n();
    actual.validate(n)?;
    if instance.challenged.iter().any(|&k| k >= actual.subset.len()) {
        return Err(Error::param("challenged slot outside the question"));
    }
    if pre_entangled.contains(actual) {
        Ok(AttackResult { path: AttackPath::PreEntangled, success: coherent_success(actual, instance)? })
    } else {
        Ok(AttackResult { path: AttackPath::ForcedMeasurement, success: forced_success(actual, instance)? })
    }
}

fn coherent_success(q: &QuestionSpec, inst: &AttackInstance) -> Result<f64> {
    let n = inst.n();
    let slots = q.subset.len();
    let l = q.presentation[0].len();
    if q.presentation[1].len() != l {
        return Err(Error::param("coherent answers need presentation sets of equal size"));
    }
    let words = 1usize << (n - 1);
    let rands = l.pow(slots as u32);
    let babe_dim = 1usize << (n + slots);
    let qubits = ((words * rands * babe_dim) as f64).log2().ceil() as usize;
    if qubits > DENSE_CAP_QUBITS {
        return Err(Error::CapExceeded { qubits, cap: DENSE_CAP_QUBITS });
    }
    let dims: Vec<usize> = [vec![words, rands], vec![2; n + slots]].concat();
    let extended = |b: u8| -> Result<PureState> {
        let mut v = CVector::zeros(words * rands * babe_dim);
        let class: Vec<Vec<u8>> = (0..1usize << n).map(|x| bits_of(x, n)).filter(|w| parity(w) == b).collect();
        for (i, j) in class.iter().enumerate() {
            for r in 0..rands {
                let mut amp = CVector::from_element(1, C64::new(1.0, 0.0));
                for &x in j {
                    amp = amp.kronecker(inst.qubit(x).amplitudes());
                }
                let mut rr = r;
                let mut rs = vec![0; slots];
                for k in (0..slots).rev() {
                    rs[k] = rr % l;
                    rr /= l;
                }
                for k in 0..slots {
                    amp = amp.kronecker(q.presentation_state(q.answer(k, j), rs[k]).amplitudes());
                }
                let offset = (i * rands + r) * babe_dim;
                v.rows_mut(offset, babe_dim).copy_from(&amp);
            }
        }
        PureState::normalized(v, dims.clone())
    };
    let (phi0, phi1) = (extended(0)?, extended(1)?);
    let cut = [0, 1];
    let u = epr_cheat_unitary(&phi0, &phi1, &cut)?;
    adam_cheat_success(&phi0, &phi1, &u, &cut, &Verification::Joint)
}

fn forced_success(q: &QuestionSpec, inst: &AttackInstance) -> Result<f64> {
    let n = inst.n();
    if n > 20 {
        return Err(Error::param("forced-measurement search is limited to 20 positions"));
    }
    let j = &inst.committed;
    let committed_overlap = inst.phi.overlap_sq(&inst.phi_prime)?;
    let answers: Vec<u8> = (0..q.subset.len()).map(|k| q.answer(k, j)).collect();
    let open: Vec<usize> = (0..q.subset.len()).filter(|k| !inst.challenged.contains(k)).collect();
    // best overlap of a re-presented answer, per slot and randomization
    let mut best_switch: Vec<Vec<f64>> = Vec::new();
    for &k in &open {
        let a = answers[k];
        let set = &q.presentation[a as usize];
        let other = &q.presentation[1 - a as usize];
        let mut row = Vec::with_capacity(set.len());
        for s in &set.states {
            let mut m: f64 = 0.0;
            for t in &other.states {
                m = m.max(s.overlap_sq(t)?);
            }
            row.push(m);
        }
        best_switch.push(row);
    }
    // candidate claims: every codeword of the other parity that keeps the
    // revealed answers
    let mut claims: Vec<(f64, Vec<bool>)> = Vec::new();
    for flips in 0..1usize << n {
        if flips.count_ones() % 2 == 0 {
            continue;
        }
        let claim: Vec<u8> = (0..n).map(|l| j[l] ^ ((flips >> (n - 1 - l)) & 1) as u8).collect();
        if inst.challenged.iter().any(|&k| q.answer(k, &claim) != answers[k]) {
            continue;
        }
        let weight = committed_overlap.powi(flips.count_ones() as i32);
        let changed = open.iter().map(|&k| q.answer(k, &claim) != answers[k]).collect();
        claims.push((weight, changed));
    }
    if claims.is_empty() {
        return Ok(0.0);
    }
    // average over Adam's randomizations, each followed by his best claim
    let sizes: Vec<usize> = best_switch.iter().map(Vec::len).collect();
    let total: usize = sizes.iter().product();
    let mut expected = 0.0;
    for mut idx in 0..total {
        let mut rs = vec![0; sizes.len()];
        for s in (0..sizes.len()).rev() {
            rs[s] = idx % sizes[s];
            idx /= sizes[s];
        }
        let best = claims
            .iter()
            .map(|(w, changed)| {
                changed.iter().enumerate().filter(|(_, &c)| c).fold(*w, |acc, (s, _)| acc * best_switch[s][rs[s]])
            })
            .fold(0.0, f64::max);
        expected += best;
    }
    Ok(expected / total as f64)
}

/// Babe asks a uniformly random subset-parity question on `n` positions;
/// fraction of trials that land in `pre_entangled`.
pub fn pre_entangled_hit_rate<R: Rng + ?Sized>(
    n: usize,
    theta: f64,
    pre_entangled: &[QuestionSpec],
    trials: u64,
    rng: &mut R,
) -> Result<Estimate> {
    if trials == 0 || n == 0 || n >= 64 {
        return Err(Error::param("need trials ≥ 1 and 1 ≤ n < 64"));
    }
    let mut hits = 0u64;
    for _ in 0..trials {
        let x: u64 = rng.random_range(0..1u64 << n);
        let mask: Vec<usize> = (0..n).filter(|&l| (x >> (n - 1 - l)) & 1 == 1).collect();
        if pre_entangled.contains(&QuestionSpec::parity(mask, theta)) {
            hits += 1;
        }
    }
    Ok(Estimate::proportion(hits, trials))
}

/// The question for subset mask `x` in the space sampled above.
pub fn parity_question(n: usize, x: u64, theta: f64) -> QuestionSpec {
    QuestionSpec::parity((0..n).filter(|&l| (x >> (n - 1 - l)) & 1 == 1).collect(), theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{choose_theta, EncodingFn};
    use crate::states::great_circle_state;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn identity_question(subset: Vec<usize>, eps: f64) -> QuestionSpec {
        QuestionSpec::new(subset, choose_theta(eps), EncodingFn::Identity)
    }

    #[test]
    fn prepared_question_on_concealing_instance_is_certain() {
        // φ = φ′ and answers on a strict subset: both extended states give Babe
        // the same marginal
        let s = great_circle_state(0.4);
        let inst = AttackInstance { phi: s.clone(), phi_prime: s, committed: vec![0, 1, 1], challenged: vec![] };
        let q = identity_question(vec![0, 2], 0.05);
        let r = pre_entanglement_attack(std::slice::from_ref(&q), &q, &inst).unwrap();
        assert_eq!(r.path, AttackPath::PreEntangled);
        assert!((r.success - 1.0).abs() < 1e-9);
    }

    #[test]
    fn prepared_question_success_is_squared_fidelity() {
        let enc = ParityEncoding::new(2, 0.25).unwrap();
        let q = identity_question(vec![0], 0.1);
        let inst = AttackInstance::new(&enc, vec![0, 0], vec![]);
        let r = pre_entanglement_attack(std::slice::from_ref(&q), &q, &inst).unwrap();
        assert!(r.success > 0.0 && r.success < 1.0);
    }

    #[test]
    fn unprepared_question_forces_a_flip() {
        let eps = 0.05;
        let enc = ParityEncoding::new(4, eps).unwrap();
        let q = identity_question(vec![0, 1], eps);
        let other = identity_question(vec![2, 3], eps);
        let inst = AttackInstance::new(&enc, vec![1, 0, 1, 0], vec![0]);
        let r = pre_entanglement_attack(&[other], &q, &inst).unwrap();
        assert_eq!(r.path, AttackPath::ForcedMeasurement);
        // flipping an unasked position costs ε1 = ε
        assert!((r.success - eps).abs() < 1e-12);
    }

    #[test]
    fn every_position_asked_costs_both_overlaps() {
        let eps = 0.05;
        let enc = ParityEncoding::new(3, 0.25).unwrap();
        let q = identity_question(vec![0, 1, 2], eps);
        let inst = AttackInstance::new(&enc, vec![0, 1, 1], vec![1]);
        let r = pre_entanglement_attack(&[], &q, &inst).unwrap();
        assert!((r.success - 0.25 * eps).abs() < 1e-12, "{}", r.success);
    }

    #[test]
    fn all_answers_revealed_leaves_nothing() {
        let enc = ParityEncoding::new(2, 0.25).unwrap();
        let q = identity_question(vec![0, 1], 0.05);
        let inst = AttackInstance::new(&enc, vec![0, 1], vec![0, 1]);
        assert_eq!(pre_entanglement_attack(&[], &q, &inst).unwrap().success, 0.0);
    }

    #[test]
    fn hit_rate_tracks_prepared_fraction() {
        let theta = choose_theta(0.05);
        let pre: Vec<QuestionSpec> = (0..8).map(|x| parity_question(5, x, theta)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let est = pre_entangled_hit_rate(5, theta, &pre, 20_000, &mut rng).unwrap();
        assert!((est.mean - 0.25).abs() < 4.0 * est.stderr);
    }

    #[test]
    fn malformed_question_is_rejected() {
        let enc = ParityEncoding::new(2, 0.25).unwrap();
        let q = identity_question(vec![0, 5], 0.05);
        let inst = AttackInstance::new(&enc, vec![0, 1], vec![]);
        assert!(pre_entanglement_attack(&[], &q, &inst).is_err());
    }
}
