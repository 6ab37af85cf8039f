//! A fast invariant suite over small seeded instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{accept_oracle, seed_split};
use crate::adversary::{
    adam_cheat_success, babe_optimal_cheat, cheat_bounds, epr_cheat_unitary, parity_concealing_closed_form,
    pre_entanglement_attack, AttackInstance, CheatKind, CheatStrategy, Estimate, Verification,
};
use crate::error::Result;
use crate::linalg::{apply_local, random, reduced_state, trace_distance, trace_norm, DensityOp, Tensor};
use crate::protocol::{
    choose_theta, qbcp2_channel, qbcp2_codewords, run_protocol, solve_n0, AdamStrategy, BabeStrategy, EncodingFn,
    Party, Play, Protocol, ProtocolConfig, QuestionSpec, Status,
};
use crate::states::{parity_mixture, ParityEncoding};

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, worst: f64, tol: f64) -> Check {
    Check { name, passed: worst <= tol, detail: format!("worst {worst:.3e}, tolerance {tol:.0e}") }
}

fn concealing_closed_form() -> Result<Check> {
    let mut worst: f64 = 0.0;
    for n in 1..=6 {
        for e1 in [0.1, 0.25, 0.5, 0.75] {
            let enc = ParityEncoding::new(n, e1)?;
            let dense = babe_optimal_cheat(&parity_mixture(0, &enc)?, &parity_mixture(1, &enc)?)?;
            worst = worst.max((dense - parity_concealing_closed_form(n, e1)).abs());
        }
    }
    Ok(check("concealing closed form", worst, 1e-9))
}

fn fidelity_bracket(rng: &mut ChaCha8Rng) -> Result<Check> {
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let dims = vec![rng.random_range(2..=4), rng.random_range(2..=4)];
        let phi0 = random::state(dims.clone(), rng);
        let phi1 = random::state(dims, rng);
        let (r0, r1) = (reduced_state(&phi0, &[1])?, reduced_state(&phi1, &[1])?);
        let (lo, hi) = cheat_bounds(&r0, &r1)?;
        let u = epr_cheat_unitary(&phi0, &phi1, &[0])?;
        let p = adam_cheat_success(&phi0, &phi1, &u, &[0], &Verification::Joint)?;
        worst = worst.max(lo - p).max(p - hi);
    }
    Ok(check("fidelity bracket", worst, 1e-9))
}

fn local_invariance(rng: &mut ChaCha8Rng) -> Result<Check> {
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let dims = vec![rng.random_range(2..=4), rng.random_range(2..=4)];
        let psi = random::state(dims.clone(), rng);
        let u = random::unitary(vec![dims[0]], rng);
        let moved = apply_local(&u, &[0], &psi)?;
        worst = worst.max(trace_distance(&reduced_state(&psi, &[1])?, &reduced_state(&moved, &[1])?)?);
    }
    Ok(check("local state invariance", worst, 1e-10))
}

fn tensor_trace_norm(rng: &mut ChaCha8Rng) -> Result<Check> {
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (d, e) = (rng.random_range(2..=4), rng.random_range(2..=4));
        let rho = random::density(vec![d], rng);
        let rho2 = random::density(vec![d], rng);
        let sigma = random::density(vec![e], rng);
        let diff = DensityOp::from_raw(rho.matrix() - rho2.matrix(), vec![d]);
        let lhs = trace_norm(diff.tensor(&sigma).matrix())?;
        worst = worst.max((lhs - trace_norm(diff.matrix())?).abs());
    }
    Ok(check("tensor trace-norm identity", worst, 1e-10))
}

fn qbcp2_codewords_concealed() -> Result<Check> {
    let ch = qbcp2_channel()?;
    let mut worst: f64 = 0.0;
    for psi in qbcp2_codewords() {
        worst = worst.max(trace_distance(&ch.output(0, &psi)?, &ch.output(1, &psi)?)?);
    }
    Ok(check("QBCp2 per-codeword concealment", worst, 1e-12))
}

fn n0_minimal() -> Result<Check> {
    let mut bad = 0;
    for eps in [0.01, 0.05, 0.1, 0.2, 0.3] {
        for e1 in [0.05, 0.1, 0.3, 0.6] {
            let n0 = solve_n0(eps, e1)?;
            let holds = |k: u64| (1.0 - e1).powi(k as i32) <= 4.0 * eps * eps;
            if !holds(n0) || (n0 > 0 && holds(n0 - 1)) {
                bad += 1;
            }
        }
    }
    Ok(Check { name: "n0 minimality", passed: bad == 0, detail: format!("{bad} of 20 grid points wrong") })
}

fn forced_measurement_bound() -> Result<Check> {
    let mut worst = f64::NEG_INFINITY;
    for eps in [0.01, 0.05, 0.1] {
        let enc = ParityEncoding::new(4, eps)?;
        let q = QuestionSpec::new(vec![0, 1], choose_theta(eps), EncodingFn::Identity);
        let inst = AttackInstance::new(&enc, vec![1, 0, 0, 1], vec![0]);
        let r = pre_entanglement_attack(&[], &q, &inst)?;
        worst = worst.max(r.success - eps);
    }
    Ok(check("forced-measurement bound", worst.max(0.0), 1e-9))
}

fn small_config(p: Protocol) -> ProtocolConfig {
    let mut c = match p {
        Protocol::Qbc1 => ProtocolConfig::new(p, 20, 6),
        Protocol::Qbc2a => ProtocolConfig::new(p, 30, 8),
        Protocol::Qbc4 => ProtocolConfig::new(p, 6, 4),
        Protocol::Qbcp2 => ProtocolConfig::new(p, 4, 1),
    };
    c.m_check = 2;
    c.m = 2;
    c
}

fn completeness(seed: u64) -> Result<Check> {
    let mut failures = 0;
    for p in [Protocol::Qbc1, Protocol::Qbc2a, Protocol::Qbc4, Protocol::Qbcp2] {
        for t in 0..10u64 {
            for b in 0..2u8 {
                let c = small_config(p).with_seeds(seed_split(seed, 2 * t), seed_split(seed, 2 * t + 1));
                let out = run_protocol(&c, &AdamStrategy::honest(b), &BabeStrategy::honest())?;
                if out.status != Status::VerifiedAccept || out.revealed_bit != Some(b) || out.detection_count != 0 {
                    failures += 1;
                }
            }
        }
    }
    Ok(Check { name: "honest completeness", passed: failures == 0, detail: format!("{failures} of 80 runs failed") })
}

fn oracle_coherence(seed: u64, trials: u64) -> Result<Check> {
    let mut qbc1 = small_config(Protocol::Qbc1);
    qbc1.nc = 1;
    let mut qbc4 = ProtocolConfig::new(Protocol::Qbc4, 4, 2);
    qbc4.epsilon1 = 0.25;
    let cases = [
        (qbc1.clone(), Play::Honest, Play::Cheat(CheatStrategy::substitution_angle(0.7))),
        (qbc1, Play::Cheat(CheatStrategy::new(Party::Adam, CheatKind::NameSwitch)), Play::Honest),
        (small_config(Protocol::Qbc2a), Play::Cheat(CheatStrategy::disturbance(1.2)), Play::Honest),
        (qbc4, Play::Cheat(CheatStrategy::new(Party::Adam, CheatKind::EPRCommit)), Play::Honest),
    ];
    let mut worst: f64 = 0.0;
    for (i, (c, adam, babe)) in cases.iter().enumerate() {
        let exact = accept_oracle(c, adam, babe, 0)?.expect("oracle exists for the listed pairs");
        let case_seed = seed_split(seed, 1000 + i as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(case_seed);
        let (a, b) = (AdamStrategy { bit: 0, play: adam.clone() }, BabeStrategy { play: babe.clone() });
        let mut hits = 0;
        for _ in 0..trials {
            let run = c.clone().with_seeds(rng.random(), rng.random());
            if run_protocol(&run, &a, &b)?.status == Status::VerifiedAccept {
                hits += 1;
            }
        }
        worst = worst.max(Estimate::proportion(hits, trials).z_score(exact).abs());
    }
    Ok(Check {
        name: "Monte Carlo vs exact acceptance",
        passed: worst <= 4.0,
        detail: format!("largest |z| {worst:.2} over {trials} trials, limit 4"),
    })
}

/// Every check, in a fixed order.
pub fn verify_suite(seed: u64, trials: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(vec![
        concealing_closed_form()?,
        fidelity_bracket(&mut rng)?,
        local_invariance(&mut rng)?,
        tensor_trace_norm(&mut rng)?,
        qbcp2_codewords_concealed()?,
        n0_minimal()?,
        forced_measurement_bound()?,
        completeness(seed)?,
        oracle_coherence(seed, trials.max(1))?,
    ])
}
