use serde::{Deserialize, Serialize};

use super::config::Variant;
use super::transcript::Stage;
use crate::bits::Bits;

/// Outcome of one session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionReport {
    pub variant: Variant,
    /// Total Bell rounds, N + t₀ + t₁.
    pub block_len: usize,
    pub security_error_rate: f64,
    /// Same-basis conclusive check pairs behind `security_error_rate`.
    pub security_samples: usize,
    /// `None` when the session stopped before the integrity check.
    pub integrity_error_rate: Option<f64>,
    pub integrity_samples: usize,
    pub aborted_at: Option<Stage>,
    /// Bob's decoded message (QSDC) or raw key (deterministic QKD); absent
    /// after an abort.
    pub decoded_message: Option<Bits>,
    /// Message bits that were actually encoded. Smaller than N under linear
    /// optics, where inconclusive pairs are dropped.
    pub message_bits_carried: usize,
    /// Fraction of Bell rounds with a detector click (linear optics only).
    pub conclusive_fraction: Option<f64>,
    pub key_alice: Option<Bits>,
    pub key_bob: Option<Bits>,
    /// Message or key bits the adversary read.
    pub leaked_bits: usize,
    /// Of those, how many matched what Alice sent.
    pub leaked_bits_correct: usize,
}

impl SessionReport {
    pub fn aborted(&self) -> bool {
        self.aborted_at.is_some()
    }
}
