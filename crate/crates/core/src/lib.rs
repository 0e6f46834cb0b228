//! Seedable simulator of measurement-device-independent quantum secure
//! direct communication (MDI-QSDC).
//!
//! Layers, bottom up:
//! - [`qstate`]: dense state vectors for 1–4 qubits, gates, Z and Bell measurement.
//! - [`bellcode`]: teleportation algebra for the `|ψ⁻⟩` resource as finite tables.
//! - [`lab`]: pool of qubit registers addressed by handles.
//! - [`adversary`]: channel noise, Eve, and dishonest Charlie behaviors.
//! - [`protocol`]: the three-party sessions and their transcripts.
//! - [`analysis`]: sweeps, emission tomography and the threshold rule.
//! - [`cli`]: the `mdi-qsdc` command-line front end.

pub mod adversary;
pub mod analysis;
pub mod bellcode;
pub mod bits;
pub mod cli;
pub mod lab;
pub mod protocol;
pub mod qstate;
pub mod rng;
pub mod selftest;

pub use bits::Bits;
pub use protocol::{
    run_det_qkd, run_qsdc, run_session, ProtocolConfig, SessionReport, Transcript, Variant,
};
