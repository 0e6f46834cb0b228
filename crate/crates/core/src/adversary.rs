//! Adversaries and channel noise.
//!
//! An [`AdversaryModel`] can act on qubits in transit (Eve, noise) and can
//! replace Charlie's honest behavior. Whatever message or key bits an
//! adversary learns are written to its [`LeakLedger`].

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bellcode::{basis_rotation, pauli_frame, teleport_correction};
use crate::lab::{Lab, QubitId};
use crate::qstate::{BellOutcome, Gate, MeasBasis, QStateError};

/// Quantum transfers between a party and Charlie.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    /// Alice's first sequence (EPR halves and check singles).
    PA,
    /// Bob's single qubits.
    PB,
    /// Alice's encoded EPR partners.
    Encoded,
}

impl Channel {
    pub const ALL: [Channel; 3] = [Channel::PA, Channel::PB, Channel::Encoded];

    fn as_str(self) -> &'static str {
        match self {
            Channel::PA => "pa",
            Channel::PB => "pb",
            Channel::Encoded => "encoded",
        }
    }
}

impl FromStr for Channel {
    type Err = AdversaryParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pa" => Ok(Channel::PA),
            "pb" => Ok(Channel::PB),
            "encoded" => Ok(Channel::Encoded),
            other => Err(AdversaryParseError::Channel(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelTarget {
    All,
    Only(Channel),
}

impl ChannelTarget {
    pub fn covers(self, c: Channel) -> bool {
        match self {
            ChannelTarget::All => true,
            ChannelTarget::Only(t) => t == c,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AdversaryParseError {
    #[error("unknown adversary `{0}`")]
    Unknown(String),
    #[error("unknown channel `{0}` (expected pa, pb, encoded or all)")]
    Channel(String),
    #[error("bad probability `{0}`")]
    Probability(String),
    #[error("`{0}` needs an argument")]
    MissingArgument(&'static str),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AdversaryError {
    #[error("depolarizing probability {0} outside [0, 1]")]
    Probability(f64),
    #[error("more than one model replaces Charlie's Bell measurement")]
    ConflictingCharlie,
}

/// Adversary and noise models.
///
/// Textual form (used by the CLI and config files): `honest`,
/// `random-charlie`, `intercept-resend:<pa|pb|encoded>`,
/// `store-delay-charlie`, `tamper-final`, `depolarizing:<p>[@<channel|all>]`,
/// and composites joined with `+`, applied left to right.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum AdversaryModel {
    #[default]
    Honest,
    /// Charlie skips the Bell measurement and announces a uniform outcome.
    RandomAnnounceCharlie,
    /// Eve measures each qubit on `target` in a uniform Z/X basis and resends
    /// the eigenstate she found.
    InterceptResendEve {
        target: Channel,
    },
    /// Charlie keeps Alice's `P_A` qubit, fabricates a uniform announcement and
    /// later Bell-measures it together with the encoded partner.
    StoreAndDelayCharlie,
    /// Charlie flips every announced Z bit.
    TamperFinal,
    /// With probability `p` per transfer, a uniformly random Pauli X, Y or Z.
    DepolarizingNoise {
        p: f64,
        target: ChannelTarget,
    },
    Composite(Vec<AdversaryModel>),
}

impl AdversaryModel {
    pub fn validate(&self) -> Result<(), AdversaryError> {
        for m in self.flatten() {
            if let AdversaryModel::DepolarizingNoise { p, .. } = m {
                if !(0.0..=1.0).contains(p) {
                    return Err(AdversaryError::Probability(*p));
                }
            }
        }
        let replacing = self
            .flatten()
            .iter()
            .filter(|m| {
                matches!(
                    m,
                    AdversaryModel::RandomAnnounceCharlie | AdversaryModel::StoreAndDelayCharlie
                )
            })
            .count();
        if replacing > 1 {
            return Err(AdversaryError::ConflictingCharlie);
        }
        Ok(())
    }

    /// Leaf models in application order.
    pub fn flatten(&self) -> Vec<&AdversaryModel> {
        match self {
            AdversaryModel::Composite(parts) => parts.iter().flat_map(|m| m.flatten()).collect(),
            other => vec![other],
        }
    }

    /// Whether this model only acts at or after the encoded transfer.
    pub fn acts_only_after_encoding(&self) -> bool {
        self.flatten().iter().all(|m| match m {
            AdversaryModel::Honest | AdversaryModel::TamperFinal => true,
            AdversaryModel::InterceptResendEve { target } => *target == Channel::Encoded,
            AdversaryModel::DepolarizingNoise { target, .. } => {
                *target == ChannelTarget::Only(Channel::Encoded)
            }
            _ => false,
        })
    }
}

impl fmt::Display for AdversaryModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AdversaryModel::Honest => f.write_str("honest"),
            AdversaryModel::RandomAnnounceCharlie => f.write_str("random-charlie"),
            AdversaryModel::InterceptResendEve { target } => {
                write!(f, "intercept-resend:{}", target.as_str())
            }
            AdversaryModel::StoreAndDelayCharlie => f.write_str("store-delay-charlie"),
            AdversaryModel::TamperFinal => f.write_str("tamper-final"),
            AdversaryModel::DepolarizingNoise { p, target } => match target {
                ChannelTarget::All => write!(f, "depolarizing:{p}"),
                ChannelTarget::Only(c) => write!(f, "depolarizing:{p}@{}", c.as_str()),
            },
            AdversaryModel::Composite(parts) => {
                let parts: Vec<String> = parts.iter().map(|p| p.to_string()).collect();
                f.write_str(&parts.join("+"))
            }
        }
    }
}

impl FromStr for AdversaryModel {
    type Err = AdversaryParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.contains('+') {
            let parts = s
                .split('+')
                .map(str::parse)
                .collect::<Result<Vec<_>, _>>()?;
            return Ok(AdversaryModel::Composite(parts));
        }
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        match name {
            "honest" => Ok(AdversaryModel::Honest),
            "random-charlie" => Ok(AdversaryModel::RandomAnnounceCharlie),
            "store-delay-charlie" => Ok(AdversaryModel::StoreAndDelayCharlie),
            "tamper-final" => Ok(AdversaryModel::TamperFinal),
            "intercept-resend" => {
                let target = arg.ok_or(AdversaryParseError::MissingArgument("intercept-resend"))?;
                Ok(AdversaryModel::InterceptResendEve {
                    target: target.parse()?,
                })
            }
            "depolarizing" => {
                let arg = arg.ok_or(AdversaryParseError::MissingArgument("depolarizing"))?;
                let (p, target) = match arg.split_once('@') {
                    Some((p, "all")) => (p, ChannelTarget::All),
                    Some((p, c)) => (p, ChannelTarget::Only(c.parse()?)),
                    None => (arg, ChannelTarget::All),
                };
                let p: f64 = p
                    .parse()
                    .map_err(|_| AdversaryParseError::Probability(p.to_string()))?;
                Ok(AdversaryModel::DepolarizingNoise { p, target })
            }
            other => Err(AdversaryParseError::Unknown(other.to_string())),
        }
    }
}

impl TryFrom<String> for AdversaryModel {
    type Error = AdversaryParseError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<AdversaryModel> for String {
    fn from(m: AdversaryModel) -> Self {
        m.to_string()
    }
}

/// Payload bits an adversary has read, keyed by sequence position.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LeakLedger {
    reads: BTreeMap<usize, u8>,
}

impl LeakLedger {
    pub fn bits_read(&self) -> usize {
        self.reads.len()
    }

    pub fn positions(&self) -> impl Iterator<Item = usize> + '_ {
        self.reads.keys().copied()
    }

    pub fn read(&self, position: usize) -> Option<u8> {
        self.reads.get(&position).copied()
    }

    fn record(&mut self, position: usize, bit: u8) {
        self.reads.insert(position, bit);
    }
}

/// One intercept-resend measurement by Eve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Interception {
    pub channel: Channel,
    pub position: usize,
    pub basis: MeasBasis,
    pub bit: u8,
}

/// Session-owned adversary memory.
#[derive(Debug, Clone, Default)]
pub struct AdversaryState {
    pub ledger: LeakLedger,
    pub interceptions: Vec<Interception>,
    stored: BTreeMap<usize, QubitId>,
}

impl AdversaryState {
    pub fn new() -> Self {
        Self::default()
    }
}

/// How Charlie treats a Bell-measurement round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BellBehavior {
    Honest,
    RandomAnnounce,
    StoreAndDelay,
}

/// How Charlie treats a final Z-measurement round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FinalBehavior {
    Honest,
    Tamper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CharlieStrategy {
    pub bell: BellBehavior,
    pub final_round: FinalBehavior,
}

pub fn charlie_strategy(model: &AdversaryModel) -> CharlieStrategy {
    let mut strategy = CharlieStrategy {
        bell: BellBehavior::Honest,
        final_round: FinalBehavior::Honest,
    };
    for m in model.flatten() {
        match m {
            AdversaryModel::RandomAnnounceCharlie => strategy.bell = BellBehavior::RandomAnnounce,
            AdversaryModel::StoreAndDelayCharlie => strategy.bell = BellBehavior::StoreAndDelay,
            AdversaryModel::TamperFinal => strategy.final_round = FinalBehavior::Tamper,
            _ => {}
        }
    }
    strategy
}

/// Acts on qubit `q` while it travels over `channel`.
pub fn channel_transform<R: Rng + ?Sized>(
    lab: &mut Lab,
    q: QubitId,
    channel: Channel,
    position: usize,
    model: &AdversaryModel,
    rng: &mut R,
    state: &mut AdversaryState,
) -> Result<(), QStateError> {
    for m in model.flatten() {
        match m {
            AdversaryModel::DepolarizingNoise { p, target } if target.covers(channel) => {
                // Both draws happen on every transfer so that runs with
                // different `p` share their random numbers.
                let u: f64 = rng.random();
                let which = rng.random_range(0..3);
                if u < *p {
                    lab.apply(q, [Gate::PauliX, Gate::IY, Gate::PauliZ][which])?;
                }
            }
            AdversaryModel::InterceptResendEve { target } if *target == channel => {
                let basis = if rng.random_bool(0.5) {
                    MeasBasis::X
                } else {
                    MeasBasis::Z
                };
                let rot = basis_rotation(basis);
                lab.apply(q, rot)?;
                let bit = lab.measure_z(q, rng)?;
                lab.apply(q, rot)?;
                state.interceptions.push(Interception {
                    channel,
                    position,
                    basis,
                    bit,
                });
            }
            _ => {}
        }
    }
    Ok(())
}

/// Store-and-delay Charlie keeps Alice's qubit for position `position`.
pub(crate) fn store_qubit(state: &mut AdversaryState, position: usize, q: QubitId) {
    state.stored.insert(position, q);
}

/// Pauli class modulo phase as (x, z) bits: I, X, Z, iσ_Y.
fn pauli_class(g: Gate) -> Option<(bool, bool)> {
    match g {
        Gate::PauliI => Some((false, false)),
        Gate::PauliX => Some((true, false)),
        Gate::PauliZ => Some((false, true)),
        Gate::IY => Some((true, true)),
        Gate::Hadamard => None,
    }
}

/// Store-and-delay read-out: Bell-measure the encoded qubit with the stored
/// `P_A` partner, infer Alice's Pauli, strip the known correction and record
/// the message bit. Returns the bit read, if the pair was stored and the
/// inferred operation is one Alice could have applied.
pub(crate) fn store_and_delay_read<R: Rng + ?Sized>(
    lab: &mut Lab,
    encoded: QubitId,
    position: usize,
    announced: BellOutcome,
    bob_basis: MeasBasis,
    rng: &mut R,
    state: &mut AdversaryState,
) -> Result<Option<u8>, QStateError> {
    let Some(stored) = state.stored.remove(&position) else {
        return Ok(None);
    };
    let seen = lab.bell_measure(encoded, stored, rng)?;
    // (P ⊗ I)|ψ⁻⟩ is the Bell state whose frame is P.
    let applied = pauli_class(pauli_frame(seen)).expect("frames are Paulis");
    let correction =
        pauli_class(teleport_correction(announced, bob_basis)).expect("corrections are Paulis");
    let message = (applied.0 ^ correction.0, applied.1 ^ correction.1);
    let bit = match message {
        (false, false) => 0,
        (true, true) => 1,
        _ => return Ok(None),
    };
    state.ledger.record(position, bit);
    Ok(Some(bit))
}
