//! Four-qubit Bell nonlocality and teleportation-resource analysis.
//!
//! * [`qstate`]: dense states, Pauli observables, partial transpose.
//! * [`states`]: the named states and white-noise mixtures.
//! * [`bell`]: Bell expressions, LHV bounds, quantum values.
//! * [`optimize`]: maximal violation over measurement directions.
//! * [`teleport`]: singlet fraction, output negativity, CHSH criterion.

pub mod bell;
pub mod error;
pub mod linalg;
pub mod optimize;
pub mod qstate;
pub mod report;
pub mod states;
pub mod teleport;

pub use error::{Error, Result};
