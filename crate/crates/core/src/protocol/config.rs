use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::{AdversaryError, AdversaryModel};

/// Default security and integrity threshold.
pub const DEFAULT_THRESHOLD: f64 = 0.11;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Charlie resolves all four Bell states.
    #[serde(rename = "full")]
    FullBell,
    /// Charlie resolves only ψ±; φ± give no click.
    LinearOptics,
    /// Block size 1: deterministic key distribution.
    DetQkd,
}

impl std::str::FromStr for Variant {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(Variant::FullBell),
            "linear-optics" => Ok(Variant::LinearOptics),
            "det-qkd" => Ok(Variant::DetQkd),
            other => Err(ConfigError::UnknownVariant(other.to_string())),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("n_message must be at least 1")]
    EmptyMessage,
    #[error("t1 must be at least 1, otherwise no security check is possible")]
    NoSecurityCheck,
    #[error("{name} = {value} must lie strictly between 0 and 0.5")]
    Threshold { name: &'static str, value: f64 },
    #[error("unknown variant `{0}` (expected full, linear-optics or det-qkd)")]
    UnknownVariant(String),
    #[error(transparent)]
    Adversary(#[from] AdversaryError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    /// Message length N.
    pub n_message: usize,
    /// Integrity-check positions t₀.
    pub t0: usize,
    /// Security-check singles t₁.
    pub t1: usize,
    pub security_threshold: f64,
    pub integrity_threshold: f64,
    pub variant: Variant,
    pub adversary: AdversaryModel,
    pub seed: u64,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            n_message: 128,
            t0: 16,
            t1: 64,
            security_threshold: DEFAULT_THRESHOLD,
            integrity_threshold: DEFAULT_THRESHOLD,
            variant: Variant::FullBell,
            adversary: AdversaryModel::Honest,
            seed: 0,
        }
    }
}

impl ProtocolConfig {
    pub fn new(n_message: usize, t0: usize, t1: usize) -> Self {
        Self {
            n_message,
            t0,
            t1,
            ..Self::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn with_adversary(mut self, adversary: AdversaryModel) -> Self {
        self.adversary = adversary;
        self
    }

    /// Total block length N + t₀ + t₁.
    pub fn block_len(&self) -> usize {
        self.n_message + self.t0 + self.t1
    }

    /// Number of EPR pairs N + t₀.
    pub fn epr_count(&self) -> usize {
        self.n_message + self.t0
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n_message == 0 {
            return Err(ConfigError::EmptyMessage);
        }
        if self.t1 == 0 {
            return Err(ConfigError::NoSecurityCheck);
        }
        for (name, value) in [
            ("security_threshold", self.security_threshold),
            ("integrity_threshold", self.integrity_threshold),
        ] {
            if !(value > 0.0 && value < 0.5) {
                return Err(ConfigError::Threshold { name, value });
            }
        }
        self.adversary.validate()?;
        Ok(())
    }
}
