//! The shared physical world of a run: one global pure state, stored as a
//! product of dense blocks, plus who holds each subsystem.
//!
//! Sending a qubit only changes its holder. Blocks merge when an operation
//! spans several of them and split again once a subsystem is left in a
//! product state, so long runs of independent qubits stay cheap.

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    bipartite_matrix, eigh, measure_projective, outcome_probabilities, permute_density, reduced_state, DensityOp,
    LocalEvolution, ProjectiveMeasurement, PureState, Tensor, UnitaryOp, C64, DENSE_CAP_QUBITS,
};

use super::Party;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Holder {
    Adam,
    Babe,
    InTransit,
}

impl From<Party> for Holder {
    fn from(p: Party) -> Self {
        match p {
            Party::Adam => Holder::Adam,
            Party::Babe => Holder::Babe,
        }
    }
}

/// Subsystem index → holder, plus the temporal-position names given to
/// subsystems when they are sent.
#[derive(Clone, Debug, Default)]
pub struct OwnershipRegistry {
    holders: Vec<Holder>,
    names: Vec<Option<String>>,
    by_name: HashMap<String, usize>,
}

impl OwnershipRegistry {
    pub fn len(&self) -> usize {
        self.holders.len()
    }

    pub fn is_empty(&self) -> bool {
        self.holders.is_empty()
    }

    fn register(&mut self, holder: Holder) -> usize {
        self.holders.push(holder);
        self.names.push(None);
        self.holders.len() - 1
    }

    pub fn holder(&self, id: usize) -> Result<Holder> {
        self.holders.get(id).copied().ok_or(Error::IndexOutOfRange { index: id, count: self.holders.len() })
    }

    pub fn held_by(&self, holder: Holder) -> Vec<usize> {
        (0..self.holders.len()).filter(|&i| self.holders[i] == holder).collect()
    }

    pub fn require(&self, party: Party, ids: &[usize]) -> Result<()> {
        for &id in ids {
            let h = self.holder(id)?;
            if h != Holder::from(party) {
                return Err(Error::Protocol(format!("{party:?} acted on subsystem {id} held by {h:?}")));
            }
        }
        Ok(())
    }

    fn set(&mut self, id: usize, holder: Holder) {
        self.holders[id] = holder;
    }

    pub fn name(&self, id: usize) -> Option<&str> {
        self.names.get(id).and_then(|n| n.as_deref())
    }

    pub fn lookup(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    pub fn set_name(&mut self, id: usize, name: impl Into<String>) -> Result<()> {
        let name = name.into();
        if id >= self.holders.len() {
            return Err(Error::IndexOutOfRange { index: id, count: self.holders.len() });
        }
        if let Some(&other) = self.by_name.get(&name) {
            if other != id {
                return Err(Error::Protocol(format!("name {name:?} already used")));
            }
        }
        if let Some(old) = self.names[id].take() {
            self.by_name.remove(&old);
        }
        self.by_name.insert(name.clone(), id);
        self.names[id] = Some(name);
        Ok(())
    }
}

#[derive(Clone, Debug)]
struct Block {
    members: Vec<usize>,
    state: PureState,
}

/// Global pure state as a product of blocks over subsystem ids `0..len`.
#[derive(Clone, Debug, Default)]
pub struct GlobalState {
    blocks: Vec<Option<Block>>,
    /// id → (block, position inside block)
    location: Vec<(usize, usize)>,
    dims: Vec<usize>,
}

const SPLIT_PURITY: f64 = 1.0 - 1e-12;

fn qubit_equivalents(dim: usize) -> usize {
    (usize::BITS - (dim.max(1) - 1).leading_zeros()) as usize
}

impl GlobalState {
    pub fn num_subsystems(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.iter().filter(|b| b.is_some()).count()
    }

    /// Adds `state` as a new block; its subsystems get consecutive ids.
    pub fn add(&mut self, state: PureState) -> Vec<usize> {
        let first = self.dims.len();
        let ids: Vec<usize> = (first..first + state.num_subsystems()).collect();
        let b = self.blocks.len();
        for (pos, &d) in state.dims().iter().enumerate() {
            self.dims.push(d);
            self.location.push((b, pos));
        }
        self.blocks.push(Some(Block { members: ids.clone(), state }));
        ids
    }

    fn check_ids(&self, ids: &[usize]) -> Result<()> {
        crate::linalg::check_targets(ids, self.dims.len())
    }

    /// Merges every block touching `ids` into one and returns its index.
    fn merge(&mut self, ids: &[usize]) -> Result<usize> {
        let mut touched: Vec<usize> = ids.iter().map(|&i| self.location[i].0).collect();
        touched.sort_unstable();
        touched.dedup();
        if touched.len() == 1 {
            return Ok(touched[0]);
        }
        let total: usize = touched.iter().map(|&b| self.blocks[b].as_ref().expect("live block").state.dim()).product();
        let qubits = qubit_equivalents(total);
        if qubits > DENSE_CAP_QUBITS {
            return Err(Error::CapExceeded { qubits, cap: DENSE_CAP_QUBITS });
        }
        let target = touched[0];
        let mut acc = self.blocks[target].take().expect("live block");
        for &b in &touched[1..] {
            let next = self.blocks[b].take().expect("live block");
            acc = Block { state: acc.state.tensor(&next.state), members: [acc.members, next.members].concat() };
        }
        for (pos, &id) in acc.members.iter().enumerate() {
            self.location[id] = (target, pos);
        }
        self.blocks[target] = Some(acc);
        Ok(target)
    }

    fn local_positions(&self, block: usize, ids: &[usize]) -> Vec<usize> {
        ids.iter()
            .map(|&i| {
                debug_assert_eq!(self.location[i].0, block);
                self.location[i].1
            })
            .collect()
    }

    pub fn apply(&mut self, u: &UnitaryOp, ids: &[usize]) -> Result<()> {
        self.check_ids(ids)?;
        let b = self.merge(ids)?;
        let pos = self.local_positions(b, ids);
        let block = self.blocks[b].as_mut().expect("live block");
        block.state = block.state.apply_local(u, &pos)?;
        Ok(())
    }

    pub fn probabilities(&mut self, m: &ProjectiveMeasurement) -> Result<Vec<f64>> {
        self.check_ids(&m.targets)?;
        let b = self.merge(&m.targets)?;
        let local =
            ProjectiveMeasurement { targets: self.local_positions(b, &m.targets), projectors: m.projectors.clone() };
        outcome_probabilities(&self.blocks[b].as_ref().expect("live block").state, &local)
    }

    /// Projective measurement with `m.targets` given as global ids.
    pub fn measure<R: Rng + ?Sized>(&mut self, m: &ProjectiveMeasurement, rng: &mut R) -> Result<usize> {
        self.check_ids(&m.targets)?;
        let b = self.merge(&m.targets)?;
        let local =
            ProjectiveMeasurement { targets: self.local_positions(b, &m.targets), projectors: m.projectors.clone() };
        let block = self.blocks[b].as_mut().expect("live block");
        let (k, post) = measure_projective(&block.state, &local, rng)?;
        block.state = post;
        self.split(b)?;
        Ok(k)
    }

    /// Peels off every member left in a pure marginal state.
    fn split(&mut self, b: usize) -> Result<()> {
        loop {
            let block = self.blocks[b].as_ref().expect("live block");
            if block.members.len() < 2 {
                return Ok(());
            }
            let mut peeled = None;
            for pos in 0..block.members.len() {
                let m = bipartite_matrix(&block.state, &[pos])?;
                let (vals, vecs) = eigh(&(&m * m.adjoint()));
                if vals[0] > SPLIT_PURITY {
                    let v = vecs.column(0).into_owned();
                    let rest = m.transpose() * v.conjugate();
                    peeled = Some((pos, v, rest));
                    break;
                }
            }
            let Some((pos, v, rest)) = peeled else {
                return Ok(());
            };
            let mut block = self.blocks[b].take().expect("live block");
            let id = block.members.remove(pos);
            let rest_dims: Vec<usize> = block.members.iter().map(|&i| self.dims[i]).collect();
            let norm = rest.norm();
            block.state = PureState::from_raw(rest / C64::new(norm, 0.0), rest_dims);
            for (p, &i) in block.members.iter().enumerate() {
                self.location[i] = (b, p);
            }
            self.blocks[b] = Some(block);
            let single = PureState::from_raw(v, vec![self.dims[id]]);
            let nb = self.blocks.len();
            self.blocks.push(Some(Block { members: vec![id], state: single }));
            self.location[id] = (nb, 0);
        }
    }

    /// Exact marginal on `ids`, in the listed order.
    pub fn marginal(&self, ids: &[usize]) -> Result<DensityOp> {
        self.check_ids(ids)?;
        let qubits: usize = ids.iter().map(|&i| qubit_equivalents(self.dims[i])).sum();
        if qubits > DENSE_CAP_QUBITS {
            return Err(Error::CapExceeded { qubits, cap: DENSE_CAP_QUBITS });
        }
        let mut order: Vec<usize> = Vec::with_capacity(ids.len());
        let mut acc: Option<DensityOp> = None;
        let mut seen = Vec::new();
        for &i in ids {
            let b = self.location[i].0;
            if seen.contains(&b) {
                continue;
            }
            seen.push(b);
            let in_block: Vec<usize> = ids.iter().copied().filter(|&j| self.location[j].0 == b).collect();
            let block = self.blocks[b].as_ref().expect("live block");
            let part = reduced_state(&block.state, &self.local_positions(b, &in_block))?;
            order.extend(in_block);
            acc = Some(match acc {
                None => part,
                Some(a) => a.tensor(&part),
            });
        }
        let rho = acc.expect("ids nonempty");
        let perm: Vec<usize> = ids.iter().map(|i| order.iter().position(|o| o == i).unwrap()).collect();
        permute_density(&rho, &perm)
    }

    /// The block holding `id` as (member ids, state).
    pub fn block_of(&self, id: usize) -> (&[usize], &PureState) {
        let block = self.blocks[self.location[id].0].as_ref().expect("live block");
        (&block.members, &block.state)
    }
}

/// Global state together with its ownership record. Every mutation checks
/// that the acting party holds what it touches.
#[derive(Clone, Debug, Default)]
pub struct Arena {
    pub state: GlobalState,
    pub owners: OwnershipRegistry,
}

impl Arena {
    pub fn new() -> Self {
        Self::default()
    }

    /// A party prepares `state` in its own lab.
    pub fn prepare(&mut self, party: Party, state: PureState) -> Vec<usize> {
        let ids = self.state.add(state);
        for _ in &ids {
            self.owners.register(party.into());
        }
        ids
    }

    pub fn apply(&mut self, party: Party, u: &UnitaryOp, ids: &[usize]) -> Result<()> {
        self.owners.require(party, ids)?;
        self.state.apply(u, ids)
    }

    pub fn measure<R: Rng + ?Sized>(&mut self, party: Party, m: &ProjectiveMeasurement, rng: &mut R) -> Result<usize> {
        self.owners.require(party, &m.targets)?;
        self.state.measure(m, rng)
    }

    /// Measures `|v⟩⟨v|` against its complement; true when the outcome is `v`.
    pub fn check<R: Rng + ?Sized>(&mut self, party: Party, id: usize, v: &PureState, rng: &mut R) -> Result<bool> {
        let m = ProjectiveMeasurement::accept_reject(vec![id], v)?;
        Ok(self.measure(party, &m, rng)? == 0)
    }

    pub fn send(&mut self, from: Party, ids: &[usize]) -> Result<()> {
        self.owners.require(from, ids)?;
        for &id in ids {
            self.owners.set(id, Holder::InTransit);
        }
        Ok(())
    }

    pub fn deliver(&mut self, to: Party, ids: &[usize]) -> Result<()> {
        for &id in ids {
            if self.owners.holder(id)? != Holder::InTransit {
                return Err(Error::Protocol(format!("subsystem {id} is not in transit")));
            }
            self.owners.set(id, to.into());
        }
        Ok(())
    }

    /// `send` followed by `deliver`.
    pub fn transfer(&mut self, from: Party, to: Party, ids: &[usize]) -> Result<()> {
        self.send(from, ids)?;
        self.deliver(to, ids)
    }

    /// Every subsystem has exactly one holder and the registry covers the
    /// whole state.
    pub fn check_conservation(&self) -> Result<()> {
        if self.owners.len() != self.state.num_subsystems() {
            return Err(Error::Oracle(format!(
                "{} holders for {} subsystems",
                self.owners.len(),
                self.state.num_subsystems()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::trace_norm;
    use crate::states::{bb84_set, great_circle_state, rotation};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bell() -> PureState {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        PureState::from_real(&[h, 0.0, 0.0, h], vec![2, 2]).unwrap()
    }

    #[test]
    fn transfer_changes_holder_only() {
        let mut a = Arena::new();
        let ids = a.prepare(Party::Adam, great_circle_state(0.3));
        let before = a.state.marginal(&ids).unwrap();
        a.send(Party::Adam, &ids).unwrap();
        assert_eq!(a.owners.holder(ids[0]).unwrap(), Holder::InTransit);
        a.deliver(Party::Babe, &ids).unwrap();
        assert_eq!(a.owners.holder(ids[0]).unwrap(), Holder::Babe);
        let after = a.state.marginal(&ids).unwrap();
        assert_eq!(before.matrix(), after.matrix());
    }

    #[test]
    fn acting_on_foreign_subsystem_is_protocol_error() {
        let mut a = Arena::new();
        let ids = a.prepare(Party::Adam, great_circle_state(0.0));
        let err = a.apply(Party::Babe, &rotation(1.0), &ids).unwrap_err();
        assert!(matches!(err, Error::Protocol(_)));
        a.send(Party::Adam, &ids).unwrap();
        assert!(a.apply(Party::Adam, &rotation(1.0), &ids).is_err());
        assert!(a.deliver(Party::Babe, &[7]).is_err());
    }

    #[test]
    fn names_are_unique() {
        let mut a = Arena::new();
        let x = a.prepare(Party::Adam, great_circle_state(0.0))[0];
        let y = a.prepare(Party::Adam, great_circle_state(0.0))[0];
        a.owners.set_name(x, "t0").unwrap();
        assert!(a.owners.set_name(y, "t0").is_err());
        a.owners.set_name(x, "t1").unwrap();
        a.owners.set_name(y, "t0").unwrap();
        assert_eq!(a.owners.lookup("t0"), Some(y));
        assert_eq!(a.owners.name(x), Some("t1"));
    }

    #[test]
    fn entangling_merges_and_measurement_splits() {
        let mut a = Arena::new();
        let ids = a.prepare(Party::Adam, bell());
        let other = a.prepare(Party::Adam, great_circle_state(0.7));
        assert_eq!(a.state.num_blocks(), 2);
        // touching both blocks merges them
        let swap = UnitaryOp::subsystem_permutation(vec![2, 2], &[1, 0]).unwrap();
        a.apply(Party::Adam, &swap, &[ids[1], other[0]]).unwrap();
        assert_eq!(a.state.num_blocks(), 1);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let zero = PureState::basis(0, vec![2]).unwrap();
        a.check(Party::Adam, ids[0], &zero, &mut rng).unwrap();
        assert_eq!(a.state.num_blocks(), 3);
    }

    #[test]
    fn marginal_order_and_content() {
        let mut a = Arena::new();
        let p = a.prepare(Party::Babe, great_circle_state(0.4))[0];
        let q = a.prepare(Party::Babe, bell());
        let rho = a.state.marginal(&[q[1], p]).unwrap();
        let expected = DensityOp::maximally_mixed(vec![2]).unwrap().tensor(&great_circle_state(0.4).to_density());
        assert!(trace_norm(&(rho.matrix() - expected.matrix())).unwrap() < 1e-12);
    }

    #[test]
    fn cap_is_enforced_on_merge() {
        let mut a = Arena::new();
        let big = PureState::basis(0, vec![2; 12]).unwrap();
        let x = a.prepare(Party::Adam, big.clone());
        let y = a.prepare(Party::Adam, great_circle_state(0.0));
        let cnot_like = UnitaryOp::identity(vec![2, 2]).unwrap();
        let err = a.apply(Party::Adam, &cnot_like, &[x[0], y[0]]).unwrap_err();
        assert!(matches!(err, Error::CapExceeded { .. }));
    }

    #[test]
    fn honest_checks_always_pass() {
        let mut a = Arena::new();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for s in bb84_set().states {
            let id = a.prepare(Party::Babe, s.clone())[0];
            assert!(a.check(Party::Babe, id, &s, &mut rng).unwrap());
        }
        a.check_conservation().unwrap();
    }
}
