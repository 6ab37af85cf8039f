//! Per-protocol message grammar.

use serde::{Deserialize, Serialize};

use super::transcript::MessageKind::{self, *};
use super::{Party, Protocol};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Start,
    Sent,
    Requested,
    Tested,
    CheckSent,
    NameAsked,
    NameGiven,
    Asked,
    Answered,
    Challenged,
    Committed,
    Returned,
    Opened,
    Done,
    Aborted,
}

use Party::{Adam, Babe};
use Phase::*;

type Edge = (Phase, Party, MessageKind, Phase);

const QBC1: &[Edge] = &[
    (Start, Adam, SendQubits, Sent),
    (Sent, Babe, RevealRequest, Requested),
    (Requested, Adam, ClassicalReveal, Tested),
    (Tested, Babe, SendQubits, CheckSent),
    (CheckSent, Adam, RevealRequest, NameAsked),
    (NameAsked, Babe, ClassicalReveal, NameGiven),
    (NameGiven, Adam, ReturnQubits, Tested),
    (CheckSent, Adam, ReturnQubits, Committed),
    (Committed, Adam, Open, Opened),
    (Opened, Babe, VerifyResult, Done),
];

const QBC2A: &[Edge] = &[
    (Start, Babe, SendQubits, Sent),
    (Sent, Adam, RevealRequest, Requested),
    (Requested, Babe, ClassicalReveal, Tested),
    (Tested, Adam, ReturnQubits, Committed),
    (Committed, Adam, ReturnQubits, Returned),
    (Committed, Adam, Open, Opened),
    (Returned, Adam, Open, Opened),
    (Opened, Babe, VerifyResult, Done),
];

const QBC4: &[Edge] = &[
    (Start, Adam, SendQubits, Sent),
    (Sent, Babe, RevealRequest, Asked),
    (Asked, Adam, SendQubits, Answered),
    (Answered, Babe, RevealRequest, Challenged),
    (Challenged, Adam, ClassicalReveal, Committed),
    (Committed, Adam, Open, Opened),
    (Opened, Babe, VerifyResult, Done),
];

const QBCP2: &[Edge] = &[
    (Start, Babe, SendQubits, Sent),
    (Sent, Adam, ReturnQubits, Committed),
    (Committed, Adam, ReturnQubits, Returned),
    (Returned, Adam, Open, Opened),
    (Opened, Babe, VerifyResult, Done),
];

/// Tracks the current phase and rejects any message the grammar does not
/// allow from it. `Abort` is legal from every non-terminal phase.
#[derive(Clone, Debug)]
pub struct PhaseMachine {
    protocol: Protocol,
    phase: Phase,
}

impl PhaseMachine {
    pub fn new(protocol: Protocol) -> Self {
        Self { protocol, phase: Start }
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    fn edges(&self) -> &'static [Edge] {
        match self.protocol {
            Protocol::Qbc1 => QBC1,
            Protocol::Qbc2a => QBC2A,
            Protocol::Qbc4 => QBC4,
            Protocol::Qbcp2 => QBCP2,
        }
    }

    pub fn is_terminal(&self) -> bool {
        matches!(self.phase, Done | Aborted)
    }

    pub fn advance(&mut self, sender: Party, kind: MessageKind) -> Result<Phase> {
        if self.is_terminal() {
            return Err(Error::Protocol(format!("{kind:?} from {sender:?} after the run ended")));
        }
        if kind == Abort {
            self.phase = Aborted;
            return Ok(Aborted);
        }
        let next = self
            .edges()
            .iter()
            .find(|(from, s, k, _)| *from == self.phase && *s == sender && *k == kind)
            .map(|e| e.3)
            .ok_or_else(|| {
                Error::Protocol(format!(
                    "{kind:?} from {sender:?} is not allowed in phase {:?} of {:?}",
                    self.phase, self.protocol
                ))
            })?;
        self.phase = next;
        Ok(next)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(protocol: Protocol, steps: &[(Party, MessageKind)]) -> Result<Phase> {
        let mut m = PhaseMachine::new(protocol);
        let mut last = Start;
        for &(p, k) in steps {
            last = m.advance(p, k)?;
        }
        Ok(last)
    }

    #[test]
    fn qbc1_with_two_checks() {
        let steps = [
            (Adam, SendQubits),
            (Babe, RevealRequest),
            (Adam, ClassicalReveal),
            (Babe, SendQubits),
            (Adam, RevealRequest),
            (Babe, ClassicalReveal),
            (Adam, ReturnQubits),
            (Babe, SendQubits),
            (Adam, RevealRequest),
            (Babe, ClassicalReveal),
            (Adam, ReturnQubits),
            (Babe, SendQubits),
            (Adam, ReturnQubits),
            (Adam, Open),
            (Babe, VerifyResult),
        ];
        assert_eq!(run(Protocol::Qbc1, &steps).unwrap(), Done);
    }

    #[test]
    fn out_of_order_rejected() {
        assert!(run(Protocol::Qbc1, &[(Adam, Open)]).is_err());
        assert!(run(Protocol::Qbc1, &[(Babe, SendQubits)]).is_err());
        assert!(run(Protocol::Qbc2a, &[(Babe, SendQubits), (Babe, RevealRequest)]).is_err());
        assert!(run(Protocol::Qbcp2, &[(Babe, SendQubits), (Adam, Open)]).is_err());
        let done = [(Babe, SendQubits), (Adam, ReturnQubits), (Adam, ReturnQubits), (Adam, Open), (Babe, VerifyResult)];
        assert_eq!(run(Protocol::Qbcp2, &done).unwrap(), Done);
        let mut after = done.to_vec();
        after.push((Babe, Abort));
        assert!(run(Protocol::Qbcp2, &after).is_err());
    }

    #[test]
    fn rejection_is_deterministic() {
        let a = run(Protocol::Qbc4, &[(Adam, SendQubits), (Adam, SendQubits)]).unwrap_err();
        let b = run(Protocol::Qbc4, &[(Adam, SendQubits), (Adam, SendQubits)]).unwrap_err();
        assert_eq!(a.to_string(), b.to_string());
    }

    #[test]
    fn abort_from_any_live_phase() {
        assert_eq!(run(Protocol::Qbc2a, &[(Babe, SendQubits), (Adam, Abort)]).unwrap(), Aborted);
        assert_eq!(run(Protocol::Qbc4, &[(Babe, Abort)]).unwrap(), Aborted);
    }

    #[test]
    fn qbc2a_without_remaining_qubits() {
        let steps = [
            (Babe, SendQubits),
            (Adam, RevealRequest),
            (Babe, ClassicalReveal),
            (Adam, ReturnQubits),
            (Adam, Open),
            (Babe, VerifyResult),
        ];
        assert_eq!(run(Protocol::Qbc2a, &steps).unwrap(), Done);
    }
}
