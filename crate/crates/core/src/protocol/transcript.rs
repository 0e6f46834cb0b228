use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::Channel;
use crate::qstate::{BellOutcome, MeasBasis, QubitLabel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Party {
    Alice,
    Bob,
}

/// What Charlie publishes after a Bell round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BellAnnouncement {
    Click(BellOutcome),
    /// Linear-optics analyzer saw a φ± pair and no detector fired.
    NoClick,
}

impl BellAnnouncement {
    pub fn outcome(self) -> Option<BellOutcome> {
        match self {
            BellAnnouncement::Click(o) => Some(o),
            BellAnnouncement::NoClick => None,
        }
    }
}

/// Point at which a session was terminated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    /// Step 3: check singles reveal too many forbidden Bell outcomes.
    SecurityCheck,
    /// Step 6: revealed random bits disagree with Bob's decoding.
    IntegrityCheck,
}

impl Stage {
    pub fn step(self) -> u8 {
        match self {
            Stage::SecurityCheck => 3,
            Stage::IntegrityCheck => 6,
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stage::SecurityCheck => write!(f, "step 3 (security check)"),
            Stage::IntegrityCheck => write!(f, "step 6 (integrity check)"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    QubitSent {
        channel: Channel,
        position: usize,
    },
    BellAnnounced {
        position: usize,
        result: BellAnnouncement,
    },
    BasisAnnounced {
        position: usize,
        basis: MeasBasis,
    },
    CheckReveal {
        party: Party,
        position: usize,
        label: QubitLabel,
    },
    ZAnnounced {
        position: usize,
        bit: u8,
    },
    RandomBitsReveal {
        positions: Vec<usize>,
        bits: Vec<u8>,
    },
    Abort {
        stage: Stage,
        error_rate: f64,
    },
}

/// Ordered record of every classical announcement and qubit transfer.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Transcript {
    events: Vec<Event>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OrderingError {
    #[error("event {index}: Bell announcement for position {position} before both qubits arrived")]
    BellBeforeTransfer { index: usize, position: usize },
    #[error("event {index}: basis for position {position} announced before its Bell result")]
    BasisBeforeBell { index: usize, position: usize },
    #[error("event {index}: encoded qubit {position} sent before the security check finished")]
    EncodingBeforeCheck { index: usize, position: usize },
    #[error("event {index}: Z result for position {position} before the encoded qubit was sent")]
    ZBeforeEncoded { index: usize, position: usize },
    #[error("event {index}: check reveal after encoding started")]
    RevealAfterEncoding { index: usize },
    #[error("event {index}: events follow an abort")]
    EventAfterAbort { index: usize },
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    pub(crate) fn push(&mut self, e: Event) {
        self.events.push(e);
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Charlie's announcement for `position`, if any.
    pub fn bell_announcement(&self, position: usize) -> Option<BellAnnouncement> {
        self.events.iter().find_map(|e| match e {
            Event::BellAnnounced {
                position: p,
                result,
            } if *p == position => Some(*result),
            _ => None,
        })
    }

    pub fn abort(&self) -> Option<(Stage, f64)> {
        self.events.iter().find_map(|e| match e {
            Event::Abort { stage, error_rate } => Some((*stage, *error_rate)),
            _ => None,
        })
    }

    /// Checks causal ordering. With `block`, every check reveal must also
    /// precede the first encoded transfer.
    pub fn check_ordering(&self, block: bool) -> Result<(), OrderingError> {
        let mut sent_a = HashSet::new();
        let mut sent_b = HashSet::new();
        let mut bell = HashSet::new();
        let mut encoded = HashSet::new();
        let mut encoding_started = false;
        let mut aborted = false;
        let last_reveal = self
            .events
            .iter()
            .rposition(|e| matches!(e, Event::CheckReveal { .. }));
        for (index, e) in self.events.iter().enumerate() {
            if aborted {
                return Err(OrderingError::EventAfterAbort { index });
            }
            match e {
                Event::QubitSent { channel, position } => match channel {
                    Channel::PA => {
                        sent_a.insert(*position);
                    }
                    Channel::PB => {
                        sent_b.insert(*position);
                    }
                    Channel::Encoded => {
                        if block && last_reveal.is_none_or(|r| r > index) {
                            return Err(OrderingError::EncodingBeforeCheck {
                                index,
                                position: *position,
                            });
                        }
                        encoding_started = true;
                        encoded.insert(*position);
                    }
                },
                Event::BellAnnounced { position, .. } => {
                    if !(sent_a.contains(position) && sent_b.contains(position)) {
                        return Err(OrderingError::BellBeforeTransfer {
                            index,
                            position: *position,
                        });
                    }
                    bell.insert(*position);
                }
                Event::BasisAnnounced { position, .. } => {
                    if !bell.contains(position) {
                        return Err(OrderingError::BasisBeforeBell {
                            index,
                            position: *position,
                        });
                    }
                }
                Event::CheckReveal { .. } => {
                    if block && encoding_started {
                        return Err(OrderingError::RevealAfterEncoding { index });
                    }
                }
                Event::ZAnnounced { position, .. } => {
                    if !encoded.contains(position) {
                        return Err(OrderingError::ZBeforeEncoded {
                            index,
                            position: *position,
                        });
                    }
                }
                Event::RandomBitsReveal { .. } => {}
                Event::Abort { .. } => aborted = true,
            }
        }
        Ok(())
    }
}
