//! Executable two-party commitment protocols.
//!
//! A run is single-threaded and fully determined by the configuration and
//! the two party seeds. Each party draws from its own generator, and every
//! message is checked against the protocol grammar before it is recorded.

mod arena;
mod params;
mod phase;
mod qbc1;
mod qbc2a;
mod qbc4;
mod qbcp2;
mod transcript;

pub use arena::{Arena, GlobalState, Holder, OwnershipRegistry};
pub use params::{choose_theta, distribution_ok, distribution_window, solve_n0, DISTRIBUTION_DELTA};
pub use phase::{Phase, PhaseMachine};
pub use qbc1::{run_qbc1, run_qbc1_observed};
pub use qbc2a::{run_qbc2a, run_qbc2a_observed};
pub use qbc4::{interference_term, run_qbc4, run_qbc4_observed, EncodingFn, QuestionSpec};
pub use qbcp2::{qbcp2_channel, qbcp2_codewords, qbcp2_permutation, run_qbcp2, run_qbcp2_observed};
pub use transcript::{amplitudes, payload, Message, MessageKind, Transcript};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::adversary::{CheatKind, CheatStrategy};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Party {
    Adam,
    Babe,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Protocol {
    #[serde(rename = "QBC1")]
    Qbc1,
    #[serde(rename = "QBC2A")]
    Qbc2a,
    #[serde(rename = "QBC4")]
    Qbc4,
    #[serde(rename = "QBCp2")]
    Qbcp2,
}

fn default_m() -> usize {
    1
}
fn default_epsilon1() -> f64 {
    0.25
}
fn default_theta() -> f64 {
    choose_theta(0.1)
}
fn default_m_check() -> usize {
    1
}
fn default_seed_adam() -> u64 {
    1
}
fn default_seed_babe() -> u64 {
    2
}

/// Design parameters of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    pub protocol: Protocol,
    pub n: usize,
    pub n0: usize,
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default = "default_epsilon1")]
    pub epsilon1: f64,
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(rename = "mCheck", default = "default_m_check")]
    pub m_check: usize,
    #[serde(rename = "Nc", default)]
    pub nc: u32,
    #[serde(rename = "seedAdam", default = "default_seed_adam")]
    pub seed_adam: u64,
    #[serde(rename = "seedBabe", default = "default_seed_babe")]
    pub seed_babe: u64,
}

impl ProtocolConfig {
    /// Defaults for everything except the protocol and sizes.
    pub fn new(protocol: Protocol, n: usize, n0: usize) -> Self {
        Self {
            protocol,
            n,
            n0,
            m: default_m(),
            epsilon1: default_epsilon1(),
            theta: default_theta(),
            m_check: default_m_check(),
            nc: 0,
            seed_adam: default_seed_adam(),
            seed_babe: default_seed_babe(),
        }
    }

    pub fn with_seeds(mut self, adam: u64, babe: u64) -> Self {
        self.seed_adam = adam;
        self.seed_babe = babe;
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text).map_err(|e| Error::Spec(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Spec(msg));
        if self.n0 == 0 || self.n0 > self.n {
            return bad(format!("need 0 < n0 <= n, got n = {}, n0 = {}", self.n, self.n0));
        }
        match self.protocol {
            Protocol::Qbc1 => {
                if self.m_check >= self.n0 {
                    return bad(format!("QBC1 needs mCheck < n0, got {} and {}", self.m_check, self.n0));
                }
            }
            Protocol::Qbc2a => {
                if self.m == 0 || self.m > self.n0 {
                    return bad(format!("QBC2A needs 1 <= m <= n0, got m = {}", self.m));
                }
            }
            Protocol::Qbc4 => {
                if self.n0 >= self.n {
                    return bad("QBC4 needs n0 < n so that a question is asked".into());
                }
                if !(0.0..1.0).contains(&self.epsilon1) {
                    return bad(format!("epsilon1 = {} outside [0, 1)", self.epsilon1));
                }
                if !self.theta.is_finite() {
                    return bad("theta must be finite".into());
                }
            }
            Protocol::Qbcp2 => {
                if self.n != 4 {
                    return bad(format!("QBCp2 is defined on 4 qubits, got n = {}", self.n));
                }
            }
        }
        Ok(())
    }

    fn expect(&self, protocol: Protocol) -> Result<()> {
        if self.protocol != protocol {
            return Err(Error::Spec(format!("config is for {:?}, not {protocol:?}", self.protocol)));
        }
        self.validate()
    }
}

/// Honest play or a declared deviation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "PlayRepr", into = "PlayRepr")]
pub enum Play {
    Honest,
    Cheat(CheatStrategy),
}

#[derive(Clone, Serialize, Deserialize)]
enum HonestTag {
    Honest,
}

#[derive(Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum PlayRepr {
    Tag(HonestTag),
    Cheat(CheatStrategy),
}

impl From<PlayRepr> for Play {
    fn from(r: PlayRepr) -> Self {
        match r {
            PlayRepr::Tag(_) => Play::Honest,
            PlayRepr::Cheat(c) => Play::Cheat(c),
        }
    }
}

impl From<Play> for PlayRepr {
    fn from(p: Play) -> Self {
        match p {
            Play::Honest => PlayRepr::Tag(HonestTag::Honest),
            Play::Cheat(c) => PlayRepr::Cheat(c),
        }
    }
}

impl Play {
    pub(crate) fn cheat(&self) -> Option<&CheatStrategy> {
        match self {
            Play::Honest => None,
            Play::Cheat(c) => Some(c),
        }
    }

    pub(crate) fn kind(&self) -> Option<CheatKind> {
        self.cheat().map(|c| c.kind)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdamStrategy {
    pub bit: u8,
    pub play: Play,
}

impl AdamStrategy {
    pub fn honest(bit: u8) -> Self {
        Self { bit: bit & 1, play: Play::Honest }
    }

    pub fn cheat(bit: u8, c: CheatStrategy) -> Self {
        Self { bit: bit & 1, play: Play::Cheat(c) }
    }

    /// The bit Adam will try to open.
    pub(crate) fn open_bit(&self) -> u8 {
        self.play.cheat().and_then(|c| c.parameters.open_bit).map_or_else(
            || match self.play.kind() {
                Some(CheatKind::NameSwitch) | Some(CheatKind::EPRCommit) => self.bit ^ 1,
                _ => self.bit,
            },
            |b| b & 1,
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BabeStrategy {
    pub play: Play,
}

impl BabeStrategy {
    pub fn honest() -> Self {
        Self { play: Play::Honest }
    }

    pub fn cheat(c: CheatStrategy) -> Self {
        Self { play: Play::Cheat(c) }
    }
}

fn check_applicable(protocol: Protocol, party: Party, play: &Play, allowed: &[CheatKind]) -> Result<()> {
    if let Some(c) = play.cheat() {
        c.validate()?;
        if c.party != party {
            return Err(Error::Spec(format!("{:?} strategy given for {party:?}", c.party)));
        }
        if !allowed.contains(&c.kind) {
            return Err(Error::Spec(format!("{:?} by {party:?} is not modeled in {protocol:?}", c.kind)));
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    VerifiedAccept,
    VerifiedReject,
    Aborted,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RunOutcome {
    pub status: Status,
    pub revealed_bit: Option<u8>,
    pub detection_count: u32,
    pub transcript: Transcript,
}

/// Called after every recorded message with the phase just entered.
pub trait Observer {
    fn observe(&mut self, phase: Phase, arena: &Arena);
}

impl Observer for () {
    fn observe(&mut self, _: Phase, _: &Arena) {}
}

impl<F: FnMut(Phase, &Arena)> Observer for F {
    fn observe(&mut self, phase: Phase, arena: &Arena) {
        self(phase, arena)
    }
}

pub(crate) struct Session<'a> {
    pub nc: u32,
    pub arena: Arena,
    pub transcript: Transcript,
    pub machine: PhaseMachine,
    pub rng_adam: ChaCha8Rng,
    pub rng_babe: ChaCha8Rng,
    pub detections: u32,
    observer: &'a mut dyn Observer,
}

impl<'a> Session<'a> {
    pub fn new(config: &ProtocolConfig, observer: &'a mut dyn Observer) -> Self {
        Self {
            nc: config.nc,
            arena: Arena::new(),
            transcript: Transcript::new(),
            machine: PhaseMachine::new(config.protocol),
            rng_adam: ChaCha8Rng::seed_from_u64(config.seed_adam),
            rng_babe: ChaCha8Rng::seed_from_u64(config.seed_babe),
            detections: 0,
            observer,
        }
    }

    pub fn post<T: Serialize>(&mut self, sender: Party, kind: MessageKind, body: &T) -> Result<Phase> {
        let phase = self.machine.advance(sender, kind)?;
        self.transcript.push(Message { round: self.transcript.next_round(), sender, kind, payload: payload(body)? })?;
        self.arena.check_conservation()?;
        self.observer.observe(phase, &self.arena);
        Ok(phase)
    }

    pub fn detect(&mut self) {
        self.detections += 1;
    }

    pub fn over_budget(&self) -> bool {
        self.detections > self.nc
    }

    pub fn abort(mut self, by: Party, reason: &str) -> Result<RunOutcome> {
        self.post(by, MessageKind::Abort, &serde_json::json!({ "reason": reason, "detections": self.detections }))?;
        Ok(RunOutcome {
            status: Status::Aborted,
            revealed_bit: None,
            detection_count: self.detections,
            transcript: self.transcript,
        })
    }

    /// Babe's final verdict on an opening of `bit`.
    pub fn finish(mut self, accepted: bool, bit: u8) -> Result<RunOutcome> {
        self.post(Party::Babe, MessageKind::VerifyResult, &serde_json::json!({ "accepted": accepted, "bit": bit }))?;
        Ok(RunOutcome {
            status: if accepted { Status::VerifiedAccept } else { Status::VerifiedReject },
            revealed_bit: accepted.then_some(bit),
            detection_count: self.detections,
            transcript: self.transcript,
        })
    }
}

pub(crate) fn names(prefix: &str, positions: impl IntoIterator<Item = usize>) -> Vec<String> {
    positions.into_iter().map(|p| format!("{prefix}{p}")).collect()
}

/// Dispatches on `config.protocol`.
pub fn run_protocol(config: &ProtocolConfig, adam: &AdamStrategy, babe: &BabeStrategy) -> Result<RunOutcome> {
    match config.protocol {
        Protocol::Qbc1 => run_qbc1(config, adam, babe),
        Protocol::Qbc2a => run_qbc2a(config, adam, babe),
        Protocol::Qbc4 => run_qbc4(config, adam, babe),
        Protocol::Qbcp2 => run_qbcp2(config, adam, babe),
    }
}
