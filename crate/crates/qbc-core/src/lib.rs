pub mod adversary;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod numfmt;
pub mod protocol;
pub mod states;

pub use error::{Error, Result};
