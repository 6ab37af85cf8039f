//! QBC1: Adam sends BB84 qubits, Babe tests most of them, then hands one of
//! the rest back for Adam to modulate by `R(bπ)`.
//!
//! The check game before modulation is played as `mCheck` name-challenge
//! rounds: Babe sends a withheld qubit, Adam asks its name and measures the
//! projector onto the state he originally sent under that name.

use rand::seq::index::sample;
use rand::Rng;
use serde_json::json;
use std::f64::consts::PI;

use super::params::distribution_ok;
use super::{
    check_applicable, names, AdamStrategy, BabeStrategy, MessageKind::*, Observer, Party::*, Protocol, ProtocolConfig,
    RunOutcome, Session,
};
use crate::adversary::CheatKind;
use crate::error::Result;
use crate::states::{bb84_set, great_circle_state, rotation};

pub fn run_qbc1(config: &ProtocolConfig, adam: &AdamStrategy, babe: &BabeStrategy) -> Result<RunOutcome> {
    run_qbc1_observed(config, adam, babe, &mut ())
}

pub fn run_qbc1_observed(
    config: &ProtocolConfig,
    adam: &AdamStrategy,
    babe: &BabeStrategy,
    observer: &mut dyn Observer,
) -> Result<RunOutcome> {
    config.expect(Protocol::Qbc1)?;
    check_applicable(Protocol::Qbc1, Adam, &adam.play, &[CheatKind::NameSwitch])?;
    check_applicable(Protocol::Qbc1, Babe, &babe.play, &[CheatKind::StateSubstitution])?;
    let (n, n0) = (config.n, config.n0);
    let s0 = bb84_set();
    let mut ses = Session::new(config, observer);

    // (i) n independent BB84 qubits, named by position
    let labels: Vec<usize> = (0..n).map(|_| ses.rng_adam.random_range(0..4)).collect();
    let ids: Vec<usize> = labels.iter().map(|&k| ses.arena.prepare(Adam, s0.states[k].clone())[0]).collect();
    let qnames = names("t", 0..n);
    for (&id, name) in ids.iter().zip(&qnames) {
        ses.arena.owners.set_name(id, name.clone())?;
    }
    ses.arena.transfer(Adam, Babe, &ids)?;
    ses.post(Adam, SendQubits, &json!({ "count": n, "names": qnames }))?;

    // (ii) Babe keeps n0 aside and tests the rest
    let mut withheld: Vec<usize> = sample(&mut ses.rng_babe, n, n0).into_vec();
    withheld.sort_unstable();
    let tested: Vec<usize> = (0..n).filter(|p| !withheld.contains(p)).collect();
    ses.post(Babe, RevealRequest, &json!({ "names": names("t", tested.iter().copied()) }))?;
    let claims: Vec<_> = tested.iter().map(|&p| json!({ "name": qnames[p], "label": labels[p] })).collect();
    ses.post(Adam, ClassicalReveal, &json!({ "claims": claims }))?;
    let mut counts = [0usize; 4];
    for &p in &tested {
        counts[labels[p]] += 1;
        if !ses.arena.check(Babe, ids[p], &s0.states[labels[p]], &mut ses.rng_babe)? {
            ses.detect();
        }
    }
    if !distribution_ok(&counts) {
        ses.detect();
    }
    if ses.over_budget() {
        return ses.abort(Babe, "opened qubits failed verification");
    }

    // (iii) check rounds, then the modulated qubit
    let substitute = babe.play.cheat().and_then(|c| c.parameters.angle).map(great_circle_state);
    let mut candidates = withheld.clone();
    for _ in 0..config.m_check {
        let p = candidates.remove(ses.rng_babe.random_range(0..candidates.len()));
        let sent = match &substitute {
            Some(s) => ses.arena.prepare(Babe, s.clone())[0],
            None => ids[p],
        };
        ses.arena.transfer(Babe, Adam, &[sent])?;
        ses.post(Babe, SendQubits, &json!({ "count": 1 }))?;
        ses.post(Adam, RevealRequest, &json!({ "ask": "name" }))?;
        ses.post(Babe, ClassicalReveal, &json!({ "name": qnames[p] }))?;
        let passed = ses.arena.check(Adam, sent, &s0.states[labels[p]], &mut ses.rng_adam)?;
        if !passed {
            ses.detect();
        }
        ses.arena.transfer(Adam, Babe, &[sent])?;
        if ses.over_budget() {
            return ses.abort(Adam, "returned qubit failed its check");
        }
        ses.post(Adam, ReturnQubits, &json!({ "count": 1, "passed": passed }))?;
    }
    let chosen = candidates[ses.rng_babe.random_range(0..candidates.len())];
    ses.arena.transfer(Babe, Adam, &[ids[chosen]])?;
    ses.post(Babe, SendQubits, &json!({ "count": 1 }))?;
    let b = adam.bit;
    ses.arena.apply(Adam, &rotation(b as f64 * PI), &[ids[chosen]])?;
    ses.arena.transfer(Adam, Babe, &[ids[chosen]])?;
    ses.post(Adam, ReturnQubits, &json!({ "count": 1 }))?;

    // (iv) open: b and the labels of every withheld qubit
    let open_bit = adam.open_bit();
    let mut claimed: Vec<usize> = withheld.iter().map(|&p| labels[p]).collect();
    if open_bit != b {
        // name switch: guess which unchecked qubit came back and relabel it
        let guess = candidates[ses.rng_adam.random_range(0..candidates.len())];
        let slot = withheld.iter().position(|&p| p == guess).expect("guess is withheld");
        claimed[slot] = (claimed[slot] + 2) % 4;
    }
    let opened: Vec<_> =
        withheld.iter().zip(&claimed).map(|(&p, &k)| json!({ "name": qnames[p], "label": k })).collect();
    ses.post(Adam, Open, &json!({ "bit": open_bit, "claims": opened }))?;

    let mut accepted = true;
    for (&p, &k) in withheld.iter().zip(&claimed) {
        let expected =
            if p == chosen { rotation(open_bit as f64 * PI).apply(&s0.states[k])? } else { s0.states[k].clone() };
        accepted &= ses.arena.check(Babe, ids[p], &expected, &mut ses.rng_babe)?;
    }
    ses.finish(accepted, open_bit)
}
