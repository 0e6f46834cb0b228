//! Block MDI-QSDC session as a chain of typed steps.
//!
//! Each step consumes the previous one, so encoding can only be reached
//! through a passed security check.

use std::collections::BTreeMap;

use super::config::{ProtocolConfig, Variant};
use super::parties::{
    alice_prepare, bob_prepare, charlie_bell_round, charlie_final_round, integrity_check,
    security_check, AliceState, BobState, CheckStats, SecurityClearance,
};
use super::report::SessionReport;
use super::transcript::{BellAnnouncement, Event, Party, Stage, Transcript};
use super::ProtocolError;
use crate::adversary::{
    channel_transform, charlie_strategy, AdversaryState, Channel, CharlieStrategy,
};
use crate::analysis::{threshold_verdict, Verdict};
use crate::bits::Bits;
use crate::lab::{Lab, QubitId};
use crate::qstate::MeasBasis;
use crate::rng::{roles, stream, RandomStream};

pub(super) struct Streams {
    pub alice: RandomStream,
    pub bob: RandomStream,
    pub charlie: RandomStream,
    pub adversary: RandomStream,
}

impl Streams {
    pub fn new(seed: u64) -> Self {
        Self {
            alice: stream(seed, roles::ALICE),
            bob: stream(seed, roles::BOB),
            charlie: stream(seed, roles::CHARLIE),
            adversary: stream(seed, roles::ADVERSARY),
        }
    }
}

struct Core {
    cfg: ProtocolConfig,
    lab: Lab,
    transcript: Transcript,
    rng: Streams,
    adversary: AdversaryState,
    strategy: CharlieStrategy,
    alice: AliceState,
    bob: BobState,
    message: Vec<u8>,
    security: CheckStats,
}

impl Core {
    fn send(&mut self, q: QubitId, channel: Channel, position: usize) -> Result<(), ProtocolError> {
        self.transcript.push(Event::QubitSent { channel, position });
        channel_transform(
            &mut self.lab,
            q,
            channel,
            position,
            &self.cfg.adversary,
            &mut self.rng.adversary,
            &mut self.adversary,
        )?;
        Ok(())
    }

    fn conclusive_fraction(&self) -> Option<f64> {
        if self.cfg.variant != Variant::LinearOptics {
            return None;
        }
        let clicks = self
            .transcript
            .events()
            .iter()
            .filter(|e| {
                matches!(
                    e,
                    Event::BellAnnounced {
                        result: BellAnnouncement::Click(_),
                        ..
                    }
                )
            })
            .count();
        Some(clicks as f64 / self.cfg.block_len() as f64)
    }

    fn leaks(&self) -> (usize, usize) {
        let mut read = 0;
        let mut correct = 0;
        for p in self.alice.message_positions() {
            if let Some(bit) = self.adversary.ledger.read(p) {
                read += 1;
                correct += usize::from(Some(bit) == self.alice.payload_bit(p));
            }
        }
        (read, correct)
    }

    fn report(&self) -> SessionReport {
        let (leaked_bits, leaked_bits_correct) = self.leaks();
        SessionReport {
            variant: self.cfg.variant,
            block_len: self.cfg.block_len(),
            security_error_rate: self.security.rate(),
            security_samples: self.security.samples,
            integrity_error_rate: None,
            integrity_samples: 0,
            aborted_at: None,
            decoded_message: None,
            message_bits_carried: self.alice.message_positions().count(),
            conclusive_fraction: self.conclusive_fraction(),
            key_alice: None,
            key_bob: None,
            leaked_bits,
            leaked_bits_correct,
        }
    }

    fn abort(mut self, stage: Stage, stats: CheckStats) -> Step<()> {
        self.transcript.push(Event::Abort {
            stage,
            error_rate: stats.rate(),
        });
        let mut report = self.report();
        report.aborted_at = Some(stage);
        if stage == Stage::IntegrityCheck {
            report.integrity_error_rate = Some(stats.rate());
            report.integrity_samples = stats.samples;
        }
        Step::Done(report, self.transcript)
    }
}

/// Result of a step that may terminate the session.
pub enum Step<T> {
    Continue(T),
    Done(SessionReport, Transcript),
}

impl<T> Step<T> {
    fn cast<U>(self) -> Step<U> {
        match self {
            Step::Continue(_) => unreachable!("cast is only used on finished sessions"),
            Step::Done(r, t) => Step::Done(r, t),
        }
    }
}

/// Step 1 done: both sequences prepared.
pub struct Prepared {
    core: Core,
    p_a: Vec<QubitId>,
    p_b: Vec<QubitId>,
}

/// Step 2 done: every pair Bell-measured and announced.
pub struct Measured {
    core: Core,
}

/// Step 3 passed.
pub struct Checked {
    core: Core,
    clearance: SecurityClearance,
    check_positions: Vec<usize>,
}

/// Step 4 done: encoded `S_Ah` qubits are with Charlie.
pub struct Encoded {
    core: Core,
    encoded: Vec<(usize, QubitId)>,
}

/// Step 5 done: Charlie announced Z bits and Bob decoded them.
pub struct Decoded {
    core: Core,
    decoded: BTreeMap<usize, u8>,
}

impl Prepared {
    pub fn new(cfg: &ProtocolConfig, message: &[u8]) -> Result<Self, ProtocolError> {
        cfg.validate()?;
        if cfg.variant == Variant::DetQkd {
            return Err(ProtocolError::WrongVariant(cfg.variant));
        }
        if message.len() < cfg.n_message {
            return Err(ProtocolError::MessageLength {
                got: message.len(),
                need: cfg.n_message,
            });
        }
        let mut rng = Streams::new(cfg.seed);
        let mut lab = Lab::new();
        let (p_a, alice) = alice_prepare(cfg, &mut lab, &mut rng.alice);
        let (p_b, bob) = bob_prepare(cfg.block_len(), &mut lab, &mut rng.bob);
        let core = Core {
            strategy: charlie_strategy(&cfg.adversary),
            cfg: cfg.clone(),
            lab,
            transcript: Transcript::new(),
            rng,
            adversary: AdversaryState::new(),
            alice,
            bob,
            message: message[..cfg.n_message].iter().map(|b| b & 1).collect(),
            security: CheckStats::default(),
        };
        Ok(Self { core, p_a, p_b })
    }

    pub fn transmit(self) -> Result<Measured, ProtocolError> {
        let Prepared { mut core, p_a, p_b } = self;
        for (position, (&qa, &qb)) in p_a.iter().zip(&p_b).enumerate() {
            core.send(qa, Channel::PA, position)?;
            core.send(qb, Channel::PB, position)?;
        }
        for (position, (&qa, &qb)) in p_a.iter().zip(&p_b).enumerate() {
            let result = charlie_bell_round(
                &mut core.lab,
                qa,
                qb,
                position,
                core.cfg.variant,
                core.strategy,
                &mut core.adversary,
                &mut core.rng.charlie,
            )?;
            core.transcript
                .push(Event::BellAnnounced { position, result });
        }
        Ok(Measured { core })
    }
}

impl Measured {
    pub fn security_check(self) -> Result<Step<Checked>, ProtocolError> {
        let mut core = self.core;
        let alice_reveals = core.alice.check_reveals();
        let positions: Vec<usize> = alice_reveals.iter().map(|r| r.0).collect();
        for &(position, label) in &alice_reveals {
            core.transcript.push(Event::CheckReveal {
                party: Party::Alice,
                position,
                label,
            });
        }
        let bob_reveals = core.bob.reveal(&positions);
        for &(position, label) in &bob_reveals {
            core.transcript.push(Event::CheckReveal {
                party: Party::Bob,
                position,
                label,
            });
        }
        let stats = security_check(&core.transcript, &alice_reveals, &bob_reveals)?;
        core.security = stats;
        match threshold_verdict(stats.rate(), core.cfg.security_threshold) {
            Verdict::Abort => Ok(core.abort(Stage::SecurityCheck, stats).cast()),
            Verdict::Pass => Ok(Step::Continue(Checked {
                core,
                clearance: SecurityClearance::grant(),
                check_positions: positions,
            })),
        }
    }
}

impl Checked {
    pub fn encode(self) -> Result<Encoded, ProtocolError> {
        let Checked {
            mut core,
            clearance,
            check_positions,
        } = self;
        // Bob announces bases of his remaining qubits: not a check position
        // and with a conclusive Bell result.
        let remaining: Vec<usize> = (0..core.cfg.block_len())
            .filter(|p| check_positions.binary_search(p).is_err())
            .filter(|&p| {
                core.transcript
                    .bell_announcement(p)
                    .and_then(BellAnnouncement::outcome)
                    .is_some()
            })
            .collect();
        for position in remaining {
            let basis = core
                .bob
                .basis(position)
                .ok_or(ProtocolError::MissingBasis(position))?;
            core.transcript
                .push(Event::BasisAnnounced { position, basis });
        }
        let encoded = core.alice.encode_block(
            &mut core.lab,
            &clearance,
            &core.transcript,
            &core.message,
            core.cfg.t0,
            &mut core.rng.alice,
        )?;
        for &(position, q) in &encoded {
            core.send(q, Channel::Encoded, position)?;
        }
        Ok(Encoded { core, encoded })
    }
}

impl Encoded {
    pub fn measure(self) -> Result<Decoded, ProtocolError> {
        let Encoded { mut core, encoded } = self;
        let bases: BTreeMap<usize, MeasBasis> = core
            .transcript
            .events()
            .iter()
            .filter_map(|e| match e {
                Event::BasisAnnounced { position, basis } => Some((*position, *basis)),
                _ => None,
            })
            .collect();
        for &(position, q) in &encoded {
            let basis = *bases
                .get(&position)
                .ok_or(ProtocolError::MissingBasis(position))?;
            let announced = core
                .transcript
                .bell_announcement(position)
                .and_then(BellAnnouncement::outcome)
                .ok_or(ProtocolError::MissingBellAnnouncement(position))?;
            let bit = charlie_final_round(
                &mut core.lab,
                q,
                position,
                basis,
                announced,
                core.strategy,
                &mut core.adversary,
                &mut core.rng.charlie,
            )?;
            core.transcript.push(Event::ZAnnounced { position, bit });
        }
        let positions: Vec<usize> = encoded.iter().map(|e| e.0).collect();
        let decoded = core.bob.decode(&core.transcript, &positions)?;
        Ok(Decoded { core, decoded })
    }
}

impl Decoded {
    pub fn integrity_check(self) -> Result<(SessionReport, Transcript), ProtocolError> {
        let Decoded { mut core, decoded } = self;
        let (positions, bits) = core.alice.integrity_reveal();
        core.transcript.push(Event::RandomBitsReveal {
            positions: positions.clone(),
            bits: bits.clone(),
        });
        let stats = integrity_check(&decoded, &positions, &bits)?;
        if threshold_verdict(stats.rate(), core.cfg.integrity_threshold) == Verdict::Abort {
            return match core.abort(Stage::IntegrityCheck, stats) {
                Step::Done(r, t) => Ok((r, t)),
                Step::Continue(()) => unreachable!(),
            };
        }
        let message: Vec<u8> = core
            .alice
            .message_positions()
            .map(|p| decoded[&p])
            .collect();
        let mut report = core.report();
        report.integrity_error_rate = Some(stats.rate());
        report.integrity_samples = stats.samples;
        report.decoded_message = Some(Bits(message));
        Ok((report, core.transcript))
    }
}

/// Runs steps 1–6 of the block protocol with the full or linear-optics
/// Bell analyzer.
pub fn run_qsdc(
    cfg: &ProtocolConfig,
    message: &[u8],
) -> Result<(SessionReport, Transcript), ProtocolError> {
    let measured = Prepared::new(cfg, message)?.transmit()?;
    let checked = match measured.security_check()? {
        Step::Continue(c) => c,
        Step::Done(report, transcript) => return Ok((report, transcript)),
    };
    checked.encode()?.measure()?.integrity_check()
}
