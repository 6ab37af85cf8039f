use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use super::Party;
use crate::error::{Error, Result};
use crate::linalg::{Amplitude, PureState};
use crate::numfmt::Real17;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MessageKind {
    SendQubits,
    RevealRequest,
    ClassicalReveal,
    ReturnQubits,
    Open,
    VerifyResult,
    Abort,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Message {
    pub round: u64,
    pub sender: Party,
    pub kind: MessageKind,
    pub payload: Box<RawValue>,
}

impl Message {
    pub fn payload<'de, T: Deserialize<'de>>(&'de self) -> Result<T> {
        Ok(serde_json::from_str(self.payload.get())?)
    }
}

/// Serializes `value` once, keeping its exact text (17-digit reals
/// included) for later emission.
pub fn payload<T: Serialize>(value: &T) -> Result<Box<RawValue>> {
    Ok(RawValue::from_string(serde_json::to_string(value)?)?)
}

/// Amplitude pairs `[re, im]` at 17 significant digits.
pub fn amplitudes(s: &PureState) -> Vec<[Real17; 2]> {
    s.amplitudes()
        .iter()
        .map(|&z| {
            let Amplitude([re, im]) = z.into();
            [Real17(re), Real17(im)]
        })
        .collect()
}

#[derive(Clone, Debug, Default)]
pub struct Transcript {
    messages: Vec<Message>,
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn messages(&self) -> &[Message] {
        &self.messages
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    pub fn last(&self) -> Option<&Message> {
        self.messages.last()
    }

    pub fn push(&mut self, m: Message) -> Result<()> {
        if let Some(prev) = self.messages.last() {
            if m.round <= prev.round {
                return Err(Error::Protocol(format!("round {} does not follow round {}", m.round, prev.round)));
            }
        }
        self.messages.push(m);
        Ok(())
    }

    pub fn next_round(&self) -> u64 {
        self.messages.last().map_or(1, |m| m.round + 1)
    }

    /// One JSON object per line.
    pub fn to_json_lines(&self) -> Result<String> {
        let mut out = String::new();
        for m in &self.messages {
            out.push_str(&serde_json::to_string(m)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_json_lines(text: &str) -> Result<Self> {
        let mut t = Transcript::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            t.push(serde_json::from_str(line)?)?;
        }
        Ok(t)
    }

    /// True when the last message is a verification result or an abort.
    pub fn is_terminated(&self) -> bool {
        matches!(self.messages.last().map(|m| m.kind), Some(MessageKind::VerifyResult | MessageKind::Abort))
    }
}

impl Serialize for Transcript {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.messages.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Transcript {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let messages = Vec::<Message>::deserialize(d)?;
        let mut t = Transcript::new();
        for m in messages {
            t.push(m).map_err(serde::de::Error::custom)?;
        }
        Ok(t)
    }
}
