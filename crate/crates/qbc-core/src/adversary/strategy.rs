use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::{Party, QuestionSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CheatKind {
    EPRCommit,
    StateSubstitution,
    NameSwitch,
    BiasedDistribution,
    EntangledInput,
    PreEntangledAnswers,
}

/// Kind-specific parameters; unused fields stay absent.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct CheatParams {
    /// Circle angle of a state substituted by Babe.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle: Option<f64>,
    /// Rotation Adam applies to a qubit he should return untouched.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// Label Babe leaves out of her sequence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub absent: Option<usize>,
    /// Bit Adam tries to open, when it differs from the committed one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub open_bit: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub questions: Option<Vec<QuestionSpec>>,
}

/// Declarative deviation, interpreted by the protocol engine.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheatStrategy {
    pub party: Party,
    pub kind: CheatKind,
    #[serde(default)]
    pub parameters: CheatParams,
}

impl CheatStrategy {
    pub fn new(party: Party, kind: CheatKind) -> Self {
        Self { party, kind, parameters: CheatParams::default() }
    }

    pub fn with(mut self, parameters: CheatParams) -> Self {
        self.parameters = parameters;
        self
    }

    pub fn substitution_angle(angle: f64) -> Self {
        Self::new(Party::Babe, CheatKind::StateSubstitution)
            .with(CheatParams { angle: Some(angle), ..Default::default() })
    }

    pub fn disturbance(delta: f64) -> Self {
        Self::new(Party::Adam, CheatKind::StateSubstitution)
            .with(CheatParams { delta: Some(delta), ..Default::default() })
    }

    pub fn biased(absent: usize) -> Self {
        Self::new(Party::Babe, CheatKind::BiasedDistribution)
            .with(CheatParams { absent: Some(absent), ..Default::default() })
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.parameters;
        let fail = |msg: &str| Err(Error::Spec(format!("{:?}: {msg}", self.kind)));
        let adam_only =
            matches!(self.kind, CheatKind::EPRCommit | CheatKind::NameSwitch | CheatKind::PreEntangledAnswers);
        let babe_only = matches!(self.kind, CheatKind::BiasedDistribution | CheatKind::EntangledInput);
        if adam_only && self.party != Party::Adam {
            return fail("only Adam can play this");
        }
        if babe_only && self.party != Party::Babe {
            return fail("only Babe can play this");
        }
        if let Some(b) = p.open_bit {
            if b > 1 {
                return fail("openBit must be 0 or 1");
            }
        }
        match self.kind {
            CheatKind::StateSubstitution => match self.party {
                Party::Babe if p.angle.is_none_or(|a| !a.is_finite()) => {
                    fail("Babe's substitution needs a finite angle")
                }
                Party::Adam if p.delta.is_none_or(|d| !d.is_finite()) => {
                    fail("Adam's substitution needs a finite delta")
                }
                _ => Ok(()),
            },
            CheatKind::BiasedDistribution => match p.absent {
                Some(a) if a < 4 => Ok(()),
                _ => fail("absent must be a label in 0..4"),
            },
            CheatKind::PreEntangledAnswers => match &p.questions {
                Some(q) if !q.is_empty() => Ok(()),
                _ => fail("needs a nonempty question list"),
            },
            _ => Ok(()),
        }
    }
}
