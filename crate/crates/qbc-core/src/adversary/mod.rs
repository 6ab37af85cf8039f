//! Attacks and security functionals: what each party can get out of a
//! commitment when cheating optimally.

mod attack;
mod cheat;
mod concealing;
mod gap;
mod report;
mod steering;
mod strategy;

pub use attack::{
    parity_question, pre_entangled_hit_rate, pre_entanglement_attack, AttackInstance, AttackPath, AttackResult,
};
pub use cheat::{
    adam_cheat_success, babe_optimal_cheat, cheat_bounds, epr_cheat_unitary, parity_concealing_closed_form,
    parity_error_probability, Verification,
};
pub use concealing::{concealing_check, AdamChannel, ConcealingReport, Condition, InputSpec};
pub use gap::{parity_fidelity_closed_form, qbc4_fidelity_gap};
pub use report::{AdamSuccess, Estimate, Method, SecurityReport};
pub use steering::{steering_demo, EnsembleReport, SteeringReport};
pub use strategy::{CheatKind, CheatParams, CheatStrategy};
