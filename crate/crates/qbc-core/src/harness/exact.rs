//! Exact security values of each protocol's commitment, and exact
//! acceptance probabilities for the strategies the engine can play.

use rayon::prelude::*;
use std::f64::consts::PI;

use crate::adversary::{
    parity_concealing_closed_form, parity_fidelity_closed_form, qbc4_fidelity_gap, AdamSuccess, CheatKind,
};
use crate::error::{Error, Result};
use crate::linalg::{fidelity, helstrom, tensor_all, tol, DensityOp, PureState, DENSE_CAP_QUBITS};
use crate::numfmt::Real17;
use crate::protocol::{
    distribution_window, qbcp2_channel, qbcp2_codewords, AdamStrategy, Play, Protocol, ProtocolConfig,
};
use crate::states::{bb84_set, parity_mixture, presentation_sets, purification, rotation, ParityEncoding};

/// Largest `(count vectors) × 4^m` enumerated for QBC2A.
const QBC2A_BUDGET: u64 = 4_000_000;

/// Largest `n` at which the parity closed forms are recomputed densely.
const DENSE_CHECK_N: usize = 6;

/// Largest `n` at which `F′` is computed in a sweep; the Gram matrices grow
/// as `4^n`.
const FPRIME_MAX_N: usize = 5;

#[derive(Clone, Debug, PartialEq)]
pub struct CommitmentExact {
    pub p_bc: f64,
    /// Lower end of Adam's bracket, `F²` (or its average).
    pub fidelity_sq: f64,
    pub fidelity: f64,
    pub fidelity_prime: Option<f64>,
    pub budget: [f64; 3],
}

impl CommitmentExact {
    pub fn bracket(&self) -> AdamSuccess {
        AdamSuccess::Interval { lower: Real17(self.fidelity_sq), upper: Real17(self.fidelity) }
    }
}

/// Babe's state after the commit phase for each bit, given what she knows
/// classically, and the derived `(P̄^B_c, F², F)`.
///
/// The budget holds three terms that add up to Babe's advantage, per
/// protocol:
/// - QBC1: `(0, w/N, P̄^B_c − ½)`
/// - QBC2A: `(n0/n, w/N, P̄^B_c − ½)`
/// - QBC4: `(ε1, sin²(θ/2), P̄^B_c − ½)`
/// - QBCp2: `(0, 0, P̄^B_c − ½)`
///
/// where `N = n − n0` and `w` is the half-width of the sample-count window.
pub fn commitment_exact(config: &ProtocolConfig) -> Result<CommitmentExact> {
    config.validate()?;
    let tested = (config.n - config.n0) as f64;
    let slack = |n: usize| distribution_window(n, 4) / n as f64;
    match config.protocol {
        Protocol::Qbc1 => {
            // the modulated qubit, label unknown to Babe
            let s0 = bb84_set();
            let rho = |b: u8| -> Result<DensityOp> {
                let u = rotation(b as f64 * PI);
                let states = s0.states.iter().map(|s| u.apply(s)).collect::<Result<Vec<_>>>()?;
                DensityOp::mixture(&[0.25; 4], &states)
            };
            let (r0, r1) = (rho(0)?, rho(1)?);
            let (p, f) = (helstrom(&r0, &r1)?, fidelity(&r0, &r1)?);
            let eps2 = if tested > 0.0 { slack(config.n - config.n0) } else { 0.0 };
            Ok(CommitmentExact {
                p_bc: p,
                fidelity_sq: f * f,
                fidelity: f,
                fidelity_prime: None,
                budget: [0.0, eps2, p - 0.5],
            })
        }
        Protocol::Qbc2a => {
            let (p, f2, f) = qbc2a_concealing(config.n0, config.m)?;
            let eps2 = if tested > 0.0 { slack(config.n - config.n0) } else { 0.0 };
            Ok(CommitmentExact {
                p_bc: p,
                fidelity_sq: f2,
                fidelity: f,
                fidelity_prime: None,
                budget: [config.n0 as f64 / config.n as f64, eps2, p - 0.5],
            })
        }
        Protocol::Qbc4 => {
            let (n, e1) = (config.n, config.epsilon1);
            let p = parity_concealing_closed_form(n, e1);
            let f = parity_fidelity_closed_form(n, e1);
            if n <= DENSE_CHECK_N {
                let enc = ParityEncoding::new(n, e1)?;
                let (r0, r1) = (parity_mixture(0, &enc)?, parity_mixture(1, &enc)?);
                let (dp, df) = (helstrom(&r0, &r1)?, fidelity(&r0, &r1)?);
                if (dp - p).abs() > tol::CROSS || (df - f).abs() > tol::CROSS {
                    return Err(Error::Oracle(format!(
                        "parity closed forms ({p}, {f}) disagree with dense ({dp}, {df}) at n = {n}"
                    )));
                }
            }
            let fp = if n <= FPRIME_MAX_N {
                let (p0, p1) = presentation_sets(config.theta);
                Some(qbc4_fidelity_gap(n, e1, &[p0, p1])?.1)
            } else {
                None
            };
            let overlap = (config.theta / 2.0).sin().powi(2);
            Ok(CommitmentExact {
                p_bc: p,
                fidelity_sq: f * f,
                fidelity: f,
                fidelity_prime: fp,
                budget: [e1, overlap, p - 0.5],
            })
        }
        Protocol::Qbcp2 => {
            let ch = qbcp2_channel()?;
            let psi = purification(&[0.25; 4], &qbcp2_codewords())?;
            let (r0, r1) = (ch.output(0, &psi)?, ch.output(1, &psi)?);
            let (p, f) = (helstrom(&r0, &r1)?, fidelity(&r0, &r1)?);
            Ok(CommitmentExact {
                p_bc: p,
                fidelity_sq: f * f,
                fidelity: f,
                fidelity_prime: None,
                budget: [0.0, 0.0, p - 0.5],
            })
        }
    }
}

/// QBC2A concealment: Babe knows every label she sent but not which `m` of
/// the `n0` withheld qubits came back, nor their order. Averaged over the
/// uniform labels, returns `(E[P̄^B_c], E[F²], E[F])`.
pub fn qbc2a_concealing(n0: usize, m: usize) -> Result<(f64, f64, f64)> {
    if m == 0 || m > n0 {
        return Err(Error::param(format!("need 1 <= m <= n0, got m = {m}, n0 = {n0}")));
    }
    if m > DENSE_CAP_QUBITS {
        return Err(Error::CapExceeded { qubits: m, cap: DENSE_CAP_QUBITS });
    }
    let vectors = (n0 as u64 + 1) * (n0 as u64 + 2) * (n0 as u64 + 3) / 6;
    let work = vectors.saturating_mul(4u64.saturating_pow(m as u32));
    if work > QBC2A_BUDGET {
        return Err(Error::CapExceeded { qubits: m + (work as f64).log2().ceil() as usize, cap: DENSE_CAP_QUBITS });
    }
    let mut counts = Vec::new();
    for a in 0..=n0 {
        for b in 0..=n0 - a {
            for c in 0..=n0 - a - b {
                counts.push([a, b, c, n0 - a - b - c]);
            }
        }
    }
    let ln_fact: Vec<f64> = std::iter::once(0.0)
        .chain((1..=n0).scan(0.0, |acc, k| {
            *acc += (k as f64).ln();
            Some(*acc)
        }))
        .collect();
    let s0 = bb84_set();
    let flipped: Vec<PureState> = s0.states.iter().map(|s| rotation(PI).apply(s)).collect::<Result<_>>()?;
    let per = counts
        .par_iter()
        .map(|c| -> Result<[f64; 4]> {
            let ln_w = ln_fact[n0] - c.iter().map(|&k| ln_fact[k]).sum::<f64>() - n0 as f64 * 4f64.ln();
            let weight = ln_w.exp();
            // ordered draws of m distinct positions, by label
            let mut tuples: Vec<(f64, Vec<usize>)> = vec![(1.0, vec![])];
            for step in 0..m {
                let mut next = Vec::new();
                for (w, labels) in &tuples {
                    for k in 0..4 {
                        let left = c[k] - labels.iter().filter(|&&l| l == k).count();
                        if left > 0 {
                            let mut l = labels.clone();
                            l.push(k);
                            next.push((w * left as f64 / (n0 - step) as f64, l));
                        }
                    }
                }
                tuples = next;
            }
            let weights: Vec<f64> = tuples.iter().map(|(w, _)| *w).collect();
            let rho = |set: &[PureState]| -> Result<DensityOp> {
                let states = tuples
                    .iter()
                    .map(|(_, l)| {
                        let qs: Vec<PureState> = l.iter().map(|&k| set[k].clone()).collect();
                        tensor_all(&qs).ok_or_else(|| Error::param("empty tuple"))
                    })
                    .collect::<Result<Vec<_>>>()?;
                DensityOp::mixture(&weights, &states)
            };
            let (r0, r1) = (rho(&s0.states)?, rho(&flipped)?);
            let f = fidelity(&r0, &r1)?;
            Ok([weight, weight * helstrom(&r0, &r1)?, weight * f * f, weight * f])
        })
        .collect::<Result<Vec<_>>>()?;
    let total: f64 = per.iter().map(|x| x[0]).sum();
    let sum = |i: usize| per.iter().map(|x| x[i]).sum::<f64>() / total;
    Ok((sum(1), sum(2), sum(3)))
}

/// `P(Binomial(trials, q) ≤ k)`.
fn binomial_cdf(trials: usize, q: f64, k: usize) -> f64 {
    let mut term = (1.0 - q).powi(trials as i32);
    let mut total = 0.0;
    for i in 0..=k.min(trials) {
        total += term;
        if i < trials {
            term *= (trials - i) as f64 / (i + 1) as f64 * q / (1.0 - q);
        }
    }
    total.min(1.0)
}

/// Exact probability that a run ends in `VerifiedAccept`, for the strategy
/// pairs whose acceptance has a closed form; `None` otherwise.
///
/// Honest sample-count tests fail with probability at most
/// `DISTRIBUTION_DELTA`, which is ignored.
pub fn accept_oracle(config: &ProtocolConfig, adam: &Play, babe: &Play, bit: u8) -> Result<Option<f64>> {
    config.validate()?;
    let a = AdamStrategy { bit, play: adam.clone() };
    let switches = a.open_bit() != bit;
    let (ak, bk) = (adam.cheat().map(|c| c.kind), babe.cheat().map(|c| c.kind));
    let p = match (config.protocol, ak, bk) {
        (_, None, None) => Some(1.0),
        (Protocol::Qbc1, None, Some(CheatKind::StateSubstitution)) => {
            let angle = babe.cheat().and_then(|c| c.parameters.angle);
            angle.map(|alpha| {
                let sub = crate::states::great_circle_state(alpha);
                let pass: f64 = bb84_set().states.iter().map(|s| s.overlap_sq(&sub).unwrap_or(0.0)).sum::<f64>() / 4.0;
                binomial_cdf(config.m_check, 1.0 - pass, config.nc as usize)
            })
        }
        (Protocol::Qbc1, Some(CheatKind::NameSwitch), None) => {
            Some(if switches { 1.0 / (config.n0 - config.m_check) as f64 } else { 1.0 })
        }
        (Protocol::Qbc2a, Some(CheatKind::StateSubstitution), None | Some(CheatKind::EntangledInput)) => {
            if switches {
                Some(0.0)
            } else {
                let delta = adam.cheat().and_then(|c| c.parameters.delta).unwrap_or(0.0);
                Some(if config.n0 > config.m { (delta / 2.0).cos().powi(2) } else { 1.0 })
            }
        }
        (Protocol::Qbc2a, None, Some(CheatKind::EntangledInput)) => Some(1.0),
        (Protocol::Qbc2a, None, Some(CheatKind::BiasedDistribution)) => {
            let tested = config.n - config.n0;
            let certain = tested > 0 && tested as f64 / 4.0 > distribution_window(tested, 4);
            certain.then_some(if config.nc >= 1 { 1.0 } else { 0.0 })
        }
        (Protocol::Qbc4, Some(CheatKind::EPRCommit), None) => Some(if switches { config.epsilon1 } else { 1.0 }),
        (Protocol::Qbcp2, None, Some(CheatKind::EntangledInput)) => Some(1.0),
        _ => None,
    };
    Ok(p)
}
