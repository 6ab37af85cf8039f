//! QBCp2: Babe sends one of four cyclic shifts of the BB84 labels; Adam
//! shifts the qubits cyclically by a secret `m` and rotates the first one by
//! `bπ/2` before returning it.

use rand::Rng;
use serde_json::json;
use std::f64::consts::PI;

use super::{
    check_applicable, AdamStrategy, BabeStrategy, MessageKind::*, Observer, Party::*, Protocol, ProtocolConfig,
    RunOutcome, Session,
};
use crate::adversary::{AdamChannel, CheatKind};
use crate::error::{Error, Result};
use crate::linalg::{tensor_all, ProjectiveMeasurement, PureState, Tensor, UnitaryOp};
use crate::states::{bb84_set, purification, rotation};

/// `ψ_k`: position `p` holds BB84 label `(p − k) mod 4`.
pub fn qbcp2_codewords() -> Vec<PureState> {
    let s0 = bb84_set();
    (0..4)
        .map(|k| {
            let qubits: Vec<PureState> = (0..4).map(|p| s0.states[(p + 4 - k) % 4].clone()).collect();
            tensor_all(&qubits).expect("four qubits")
        })
        .collect()
}

/// `P_m`: output position `p` carries input position `(p + m) mod 4`.
pub fn qbcp2_permutation(m: usize) -> Result<UnitaryOp> {
    if m >= 4 {
        return Err(Error::param(format!("shift {m} outside 0..4")));
    }
    let order: Vec<usize> = (0..4).map(|p| (p + m) % 4).collect();
    UnitaryOp::subsystem_permutation(vec![2; 4], &order)
}

/// Adam's commitment as a channel on Babe's four qubits: a uniform `P_m`,
/// then `R(bπ/2)` on the first qubit, which is the one returned.
pub fn qbcp2_channel() -> Result<AdamChannel> {
    let rest = UnitaryOp::identity(vec![2; 3])?;
    let branch = |b: u8| -> Result<Vec<(f64, UnitaryOp)>> {
        (0..4)
            .map(|m| Ok((0.25, rotation(b as f64 * PI / 2.0).tensor(&rest).compose(&qbcp2_permutation(m)?)?)))
            .collect()
    };
    AdamChannel::new(vec![2; 4], [branch(0)?, branch(1)?], vec![0])
}

/// `(U_b ⊗ I) P_m ψ_k` with `U_b = R(bπ/2)` on the first qubit.
pub(crate) fn qbcp2_expected(k: usize, m: usize, b: u8) -> PureState {
    let s0 = bb84_set();
    let qubits: Vec<PureState> = (0..4)
        .map(|p| {
            let label = (p + m + 4 - k) % 4 + if p == 0 { b as usize } else { 0 };
            s0.states[label % 4].clone()
        })
        .collect();
    tensor_all(&qubits).expect("four qubits")
}

pub fn run_qbcp2(config: &ProtocolConfig, adam: &AdamStrategy, babe: &BabeStrategy) -> Result<RunOutcome> {
    run_qbcp2_observed(config, adam, babe, &mut ())
}

pub fn run_qbcp2_observed(
    config: &ProtocolConfig,
    adam: &AdamStrategy,
    babe: &BabeStrategy,
    observer: &mut dyn Observer,
) -> Result<RunOutcome> {
    config.expect(Protocol::Qbcp2)?;
    check_applicable(Protocol::Qbcp2, Adam, &adam.play, &[])?;
    check_applicable(Protocol::Qbcp2, Babe, &babe.play, &[CheatKind::EntangledInput])?;
    let codewords = qbcp2_codewords();
    let mut ses = Session::new(config, observer);

    // Babe's codeword, or its purification with a label register kept at home
    let (ids, register, mut label) = if babe.play.kind() == Some(CheatKind::EntangledInput) {
        let all = ses.arena.prepare(Babe, purification(&[0.25; 4], &codewords)?);
        (all[..4].to_vec(), Some(all[4]), None)
    } else {
        let k = ses.rng_babe.random_range(0..4);
        (ses.arena.prepare(Babe, codewords[k].clone()), None, Some(k))
    };
    for (p, &id) in ids.iter().enumerate() {
        ses.arena.owners.set_name(id, format!("B1{}", p + 1))?;
    }
    ses.arena.transfer(Babe, Adam, &ids)?;
    ses.post(Babe, SendQubits, &json!({ "count": 4 }))?;

    // commit: P_m, then U_b on the first qubit, which goes back
    let b = adam.bit;
    let m = ses.rng_adam.random_range(0..4);
    ses.arena.apply(Adam, &qbcp2_permutation(m)?, &ids)?;
    ses.arena.apply(Adam, &rotation(b as f64 * PI / 2.0), &ids[..1])?;
    ses.arena.transfer(Adam, Babe, &ids[..1])?;
    ses.post(Adam, ReturnQubits, &json!({ "names": ["B11"] }))?;

    // open: the other three qubits, b and m
    ses.arena.transfer(Adam, Babe, &ids[1..])?;
    ses.post(Adam, ReturnQubits, &json!({ "names": ["B12", "B13", "B14"] }))?;
    let open_bit = adam.open_bit();
    ses.post(Adam, Open, &json!({ "bit": open_bit, "shift": m }))?;

    if let Some(r) = register {
        let basis = (0..4).map(|i| PureState::basis(i, vec![4])).collect::<Result<Vec<_>>>()?;
        let meas = ProjectiveMeasurement::from_basis(vec![r], &basis)?;
        label = Some(ses.arena.measure(Babe, &meas, &mut ses.rng_babe)?);
    }
    let k = label.expect("label known at verification");
    let check = ProjectiveMeasurement::accept_reject(ids.clone(), &qbcp2_expected(k, m, open_bit))?;
    let accepted = ses.arena.measure(Babe, &check, &mut ses.rng_babe)? == 0;
    ses.finish(accepted, open_bit)
}
