//! The three concealing conditions for a commitment built from Babe's own
//! input states.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    eigh, embed_operator, partial_trace, random, trace_distance, CMatrix, DensityOp, PureState, UnitaryOp, C64,
    DENSE_CAP_QUBITS,
};

/// What Adam does to Babe's input `B1` for each bit: a mixture of unitaries,
/// after which the `returned` subsystems of `B1` go back to her.
#[derive(Clone, Debug)]
pub struct AdamChannel {
    pub input_dims: Vec<usize>,
    pub branches: [Vec<(f64, UnitaryOp)>; 2],
    pub returned: Vec<usize>,
}

impl AdamChannel {
    pub fn new(input_dims: Vec<usize>, branches: [Vec<(f64, UnitaryOp)>; 2], returned: Vec<usize>) -> Result<Self> {
        for branch in &branches {
            if branch.is_empty() {
                return Err(Error::param("each bit needs at least one unitary"));
            }
            let weights: Vec<f64> = branch.iter().map(|(w, _)| *w).collect();
            crate::linalg::check_distribution(&weights)?;
            if branch.iter().any(|(_, u)| u.dims() != input_dims.as_slice()) {
                return Err(Error::dims("branch unitary does not act on the input space"));
            }
        }
        crate::linalg::check_targets(&returned, input_dims.len())?;
        Ok(Self { input_dims, branches, returned })
    }

    /// `ρ^B_b`: returned part of `B1` together with whatever Babe kept
    /// (subsystems of `input` past `B1`).
    pub fn output(&self, b: u8, input: &PureState) -> Result<DensityOp> {
        let k = self.input_dims.len();
        if input.num_subsystems() < k || input.dims()[..k] != self.input_dims[..] {
            return Err(Error::dims(format!("input dims {:?} do not start with {:?}", input.dims(), self.input_dims)));
        }
        let all = input.dims().to_vec();
        let targets: Vec<usize> = (0..k).collect();
        let rho = input.projector();
        let mut out = CMatrix::zeros(rho.nrows(), rho.ncols());
        for (w, u) in &self.branches[b as usize & 1] {
            let full = embed_operator(u.matrix(), &targets, &all)?;
            out += (&full * &rho * full.adjoint()) * C64::new(*w, 0.0);
        }
        let keep = self.kept(all.len());
        partial_trace(&DensityOp::from_raw(out, all), &keep)
    }

    fn kept(&self, count: usize) -> Vec<usize> {
        let mut keep = self.returned.clone();
        keep.extend(self.input_dims.len()..count);
        keep
    }

    fn distance(&self, input: &PureState) -> Result<f64> {
        trace_distance(&self.output(0, input)?, &self.output(1, input)?)
    }

    /// `Σ_b (−1)^b E_b†(S)` on the full input space.
    fn heisenberg(&self, sign: &CMatrix, dims: &[usize]) -> Result<CMatrix> {
        let targets: Vec<usize> = (0..self.input_dims.len()).collect();
        let keep = self.kept(dims.len());
        let s_full = embed_operator(sign, &keep, dims)?;
        let d = s_full.nrows();
        let mut m = CMatrix::zeros(d, d);
        for (b, branch) in self.branches.iter().enumerate() {
            let sgn = if b == 0 { 1.0 } else { -1.0 };
            for (w, u) in branch {
                let full = embed_operator(u.matrix(), &targets, dims)?;
                m += (full.adjoint() * &s_full * &full) * C64::new(sgn * w, 0.0);
            }
        }
        Ok(m)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Condition {
    /// The one declared input `Ψ`.
    Con1,
    /// Every input, entangled with Babe's ancilla or not.
    Con2,
    /// Every listed unentangled input `ψ_k`.
    Con3,
}

#[derive(Clone, Debug)]
pub enum InputSpec {
    Declared(PureState),
    Listed(Vec<PureState>),
    /// Search over pure inputs on `B1 ⊗ ancilla`.
    Search {
        ancilla_dim: usize,
        restarts: usize,
        iterations: usize,
        seed: u64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ConcealingReport {
    pub condition: Condition,
    pub epsilon: f64,
    /// `‖ρ0 − ρ1‖₁` for each input examined (one per restart in a search).
    pub distances: Vec<f64>,
    pub max_distance: f64,
    pub passed: bool,
    /// The maximum is the best found, not a certified worst case.
    pub lower_bound: bool,
}

pub fn concealing_check(
    channel: &AdamChannel,
    condition: Condition,
    epsilon: f64,
    input: &InputSpec,
) -> Result<ConcealingReport> {
    let distances = match (condition, input) {
        (Condition::Con1, InputSpec::Declared(psi)) => vec![channel.distance(psi)?],
        (Condition::Con3, InputSpec::Listed(states)) => {
            states.iter().map(|s| channel.distance(s)).collect::<Result<Vec<_>>>()?
        }
        (Condition::Con2, InputSpec::Search { ancilla_dim, restarts, iterations, seed }) => {
            search(channel, *ancilla_dim, *restarts, *iterations, *seed)?
        }
        _ => return Err(Error::Spec(format!("{condition:?} does not take {input:?}"))),
    };
    let max_distance = distances.iter().copied().fold(0.0, f64::max);
    Ok(ConcealingReport {
        condition,
        epsilon,
        max_distance,
        passed: max_distance <= 2.0 * epsilon,
        lower_bound: condition == Condition::Con2,
        distances,
    })
}

/// Alternating ascent: for fixed `Ψ` the best test is the sign operator of
/// `ρ0 − ρ1`; for a fixed test the best `Ψ` is the top eigenvector of its
/// Heisenberg image. Each step can only raise the distance.
fn search(
    channel: &AdamChannel,
    ancilla_dim: usize,
    restarts: usize,
    iterations: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if restarts == 0 || ancilla_dim == 0 {
        return Err(Error::param("search needs restarts and an ancilla"));
    }
    let mut dims = channel.input_dims.clone();
    dims.push(ancilla_dim);
    let total: usize = dims.iter().product();
    let qubits = (total as f64).log2().ceil() as usize;
    if qubits > DENSE_CAP_QUBITS {
        return Err(Error::CapExceeded { qubits, cap: DENSE_CAP_QUBITS });
    }
    (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(r as u64));
            let mut psi = random::state(dims.clone(), &mut rng);
            let mut best = channel.distance(&psi)?;
            for _ in 0..iterations {
                let delta = channel.output(0, &psi)?.matrix() - channel.output(1, &psi)?.matrix();
                let (vals, vecs) = eigh(&delta);
                let d = delta.nrows();
                let sign = CMatrix::from_fn(d, d, |i, j| {
                    (0..d).map(|k| vecs[(i, k)] * vecs[(j, k)].conj() * C64::new(vals[k].signum(), 0.0)).sum()
                });
                let m = channel.heisenberg(&sign, &dims)?;
                let (mv, mvecs) = eigh(&m);
                let top = (0..mv.len()).max_by(|&a, &b| mv[a].total_cmp(&mv[b])).expect("nonempty");
                let next = PureState::normalized(mvecs.column(top).into_owned(), dims.clone())?;
                let dist = channel.distance(&next)?;
                let stalled = dist <= best + 1e-13;
                best = best.max(dist);
                if stalled {
                    break;
                }
                psi = next;
            }
            Ok(best)
        })
        .collect()
}
