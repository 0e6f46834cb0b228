//! Three-party orchestration of an MDI-QSDC session and its variants.
//!
//! Alice, Bob and Charlie exchange qubits through a shared [`Lab`] and talk
//! only through [`Transcript`] events. [`run_qsdc`] runs the block protocol
//! (full Bell analyzer or linear optics); [`run_det_qkd`] runs the block-size-1
//! deterministic key distribution.
//!
//! [`Lab`]: crate::lab::Lab

mod config;
mod detqkd;
mod parties;
mod qsdc;
mod report;
mod transcript;

pub use config::{ConfigError, ProtocolConfig, Variant, DEFAULT_THRESHOLD};
pub use detqkd::run_det_qkd;
pub use parties::{
    alice_prepare, bob_prepare, charlie_bell_round, charlie_final_round, integrity_check,
    security_check, AliceState, BobState, CheckStats, SecurityClearance,
};
pub use qsdc::{run_qsdc, Checked, Decoded, Encoded, Measured, Prepared, Step};
pub use report::SessionReport;
pub use transcript::{BellAnnouncement, Event, OrderingError, Party, Stage, Transcript};

use thiserror::Error;

use crate::qstate::QStateError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("message has {got} bits, session needs {need}")]
    MessageLength { got: usize, need: usize },
    #[error("check reveals do not cover the check positions (position {0})")]
    RevealMismatch(usize),
    #[error("no Bell announcement for position {0}")]
    MissingBellAnnouncement(usize),
    #[error("no basis announcement for position {0}")]
    MissingBasis(usize),
    #[error("no Z announcement for position {0}")]
    MissingZ(usize),
    #[error("integrity reveal names position {0}, which was not decoded")]
    PositionMismatch(usize),
    #[error("variant {0:?} is not run by this entry point")]
    WrongVariant(Variant),
    #[error(transparent)]
    State(#[from] QStateError),
}

/// Runs whichever protocol `cfg.variant` selects.
///
/// `message` is ignored for the key-distribution variant and, when `None`,
/// a uniform message is drawn from the session seed.
pub fn run_session(
    cfg: &ProtocolConfig,
    message: Option<&[u8]>,
) -> Result<(SessionReport, Transcript), ProtocolError> {
    match cfg.variant {
        Variant::DetQkd => run_det_qkd(cfg),
        _ => match message {
            Some(m) => run_qsdc(cfg, m),
            None => run_qsdc(cfg, &random_message(cfg.seed, cfg.n_message)),
        },
    }
}

/// Uniform bits from the session's message stream.
pub fn random_message(seed: u64, len: usize) -> Vec<u8> {
    use rand::Rng;
    let mut rng = crate::rng::stream(seed, crate::rng::roles::MESSAGE);
    (0..len).map(|_| u8::from(rng.random_bool(0.5))).collect()
}
