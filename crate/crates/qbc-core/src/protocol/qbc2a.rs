//! QBC2A: Babe supplies the BB84 sequence; Adam tests part of it, modulates
//! `m` of the withheld qubits by the same `R(bπ)` and returns them unnamed.

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
use crate::linalg::{ProjectiveMeasurement, PureState};
use crate::states::{bb84_set, purification, rotation};

pub fn run_qbc2a(config: &ProtocolConfig, adam: &AdamStrategy, babe: &BabeStrategy) -> Result<RunOutcome> {
    run_qbc2a_observed(config, adam, babe, &mut ())
}

pub fn run_qbc2a_observed(
    config: &ProtocolConfig,
    adam: &AdamStrategy,
    babe: &BabeStrategy,
    observer: &mut dyn Observer,
) -> Result<RunOutcome> {
    config.expect(Protocol::Qbc2a)?;
    check_applicable(Protocol::Qbc2a, Adam, &adam.play, &[CheatKind::StateSubstitution])?;
    check_applicable(Protocol::Qbc2a, Babe, &babe.play, &[CheatKind::BiasedDistribution, CheatKind::EntangledInput])?;
    let (n, n0, m) = (config.n, config.n0, config.m);
    let s0 = bb84_set();
    let mut ses = Session::new(config, observer);

    // (i) Babe's sequence; an entangled Babe keeps one label register per qubit
    let absent = babe.play.cheat().and_then(|c| c.parameters.absent);
    let entangled = babe.play.kind() == Some(CheatKind::EntangledInput);
    let mut labels: Vec<Option<usize>> = vec![None; n];
    let mut registers: Vec<Option<usize>> = vec![None; n];
    let mut ids = Vec::with_capacity(n);
    for p in 0..n {
        if entangled {
            let pair = ses.arena.prepare(Babe, purification(&[0.25; 4], &s0.states)?);
            ids.push(pair[0]);
            registers[p] = Some(pair[1]);
        } else {
            let k = match absent {
                Some(a) => (a + 1 + ses.rng_babe.random_range(0..3)) % 4,
                None => ses.rng_babe.random_range(0..4),
            };
            labels[p] = Some(k);
            ids.push(ses.arena.prepare(Babe, s0.states[k].clone())[0]);
        }
    }
    let qnames = names("t", 0..n);
    for (&id, name) in ids.iter().zip(&qnames) {
        ses.arena.owners.set_name(id, name.clone())?;
    }
    ses.arena.transfer(Babe, Adam, &ids)?;
    ses.post(Babe, SendQubits, &json!({ "count": n, "names": qnames }))?;

    // (ii) Adam withholds n0 and tests the rest
    let mut withheld: Vec<usize> = sample(&mut ses.rng_adam, n, n0).into_vec();
    withheld.sort_unstable();
    let tested: Vec<usize> = (0..n).filter(|p| !withheld.contains(p)).collect();
    ses.post(Adam, RevealRequest, &json!({ "names": names("t", tested.iter().copied()) }))?;
    let register_basis: Vec<PureState> = (0..4).map(|k| PureState::basis(k, vec![4])).collect::<Result<_>>()?;
    let mut learn = |ses: &mut Session, p: usize| -> Result<usize> {
        if let Some(k) = labels[p] {
            return Ok(k);
        }
        let r = registers[p].expect("entangled position has a register");
        let meas = ProjectiveMeasurement::from_basis(vec![r], &register_basis)?;
        let k = ses.arena.measure(Babe, &meas, &mut ses.rng_babe)?;
        labels[p] = Some(k);
        Ok(k)
    };
    let mut revealed = Vec::with_capacity(tested.len());
    for &p in &tested {
        revealed.push(learn(&mut ses, p)?);
    }
    let claims: Vec<_> =
        tested.iter().zip(&revealed).map(|(&p, &k)| json!({ "name": qnames[p], "label": k })).collect();
    ses.post(Babe, ClassicalReveal, &json!({ "claims": claims }))?;
    let mut counts = [0usize; 4];
    for (&p, &k) in tested.iter().zip(&revealed) {
        counts[k] += 1;
        if !ses.arena.check(Adam, ids[p], &s0.states[k], &mut ses.rng_adam)? {
            ses.detect();
        }
    }
    if !distribution_ok(&counts) {
        ses.detect();
    }
    if ses.over_budget() {
        return ses.abort(Adam, "opened qubits failed verification");
    }

    // (iii) m withheld qubits modulated by the same U_b, returned without names
    let b = adam.bit;
    let picks = sample(&mut ses.rng_adam, n0, m).into_vec();
    let mut modulated: Vec<usize> = picks.iter().map(|&i| withheld[i]).collect();
    modulated.sort_unstable();
    let rest: Vec<usize> = withheld.iter().copied().filter(|p| !modulated.contains(p)).collect();
    let u = rotation(b as f64 * PI);
    for &p in &modulated {
        ses.arena.apply(Adam, &u, &[ids[p]])?;
    }
    // shuffled return order hides the names
    let mut order = modulated.clone();
    for i in (1..order.len()).rev() {
        order.swap(i, ses.rng_adam.random_range(0..=i));
    }
    let returned: Vec<usize> = order.iter().map(|&p| ids[p]).collect();
    ses.arena.transfer(Adam, Babe, &returned)?;
    ses.post(Adam, ReturnQubits, &json!({ "count": m }))?;

    // (iv) open: the remaining qubits come back named, then b
    if !rest.is_empty() {
        if let Some(delta) = adam.play.cheat().and_then(|c| c.parameters.delta) {
            ses.arena.apply(Adam, &rotation(delta), &[ids[rest[0]]])?;
        }
        let back: Vec<usize> = rest.iter().map(|&p| ids[p]).collect();
        ses.arena.transfer(Adam, Babe, &back)?;
        ses.post(Adam, ReturnQubits, &json!({ "names": names("t", rest.iter().copied()) }))?;
    }
    let open_bit = adam.open_bit();
    ses.post(Adam, Open, &json!({ "bit": open_bit, "modulated": names("t", modulated.iter().copied()) }))?;

    let v = rotation(open_bit as f64 * PI);
    let mut accepted = true;
    for &p in &withheld {
        let k = learn(&mut ses, p)?;
        let expected = if modulated.contains(&p) { v.apply(&s0.states[k])? } else { s0.states[k].clone() };
        accepted &= ses.arena.check(Babe, ids[p], &expected, &mut ses.rng_babe)?;
    }
    ses.finish(accepted, open_bit)
}
