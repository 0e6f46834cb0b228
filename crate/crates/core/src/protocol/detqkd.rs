//! Deterministic MDI-QKD: the block protocol with block size 1.
//!
//! Every round runs to Charlie's final Z announcement before the next one
//! starts, so checks can only be evaluated once the whole session is over.

use rand::Rng;

use super::config::{ProtocolConfig, Variant};
use super::parties::{
    charlie_bell_round, charlie_final_round, integrity_check, security_check, AliceState, BobState,
    CheckStats,
};
use super::qsdc::Streams;
use super::report::SessionReport;
use super::transcript::{BellAnnouncement, Event, Party, Stage, Transcript};
use super::ProtocolError;
use crate::adversary::{channel_transform, charlie_strategy, AdversaryState, Channel};
use crate::analysis::{threshold_verdict, Verdict};
use crate::bits::Bits;
use crate::lab::Lab;
use crate::qstate::{BellOutcome, QubitLabel};

pub fn run_det_qkd(cfg: &ProtocolConfig) -> Result<(SessionReport, Transcript), ProtocolError> {
    cfg.validate()?;
    if cfg.variant != Variant::DetQkd {
        return Err(ProtocolError::WrongVariant(cfg.variant));
    }
    let strategy = charlie_strategy(&cfg.adversary);
    let mut rng = Streams::new(cfg.seed);
    let mut lab = Lab::new();
    let mut transcript = Transcript::new();
    let mut adversary = AdversaryState::new();
    let mut alice = AliceState::default();
    let mut bob = BobState::default();

    let rounds = cfg.block_len();
    let mut epr_left = cfg.epr_count();
    for position in 0..rounds {
        // EPR with probability (EPR pairs left)/(rounds left); the first
        // round uses p_k = (N + t₀)/(N + t₀ + t₁) and the totals come out exact.
        let epr = rng.alice.random_range(0..rounds - position) < epr_left;
        let q_a = if epr {
            epr_left -= 1;
            let (s_ah, s_at) = lab.alloc_bell(BellOutcome::PsiMinus);
            alice.add_epr(position, s_ah);
            s_at
        } else {
            let label = QubitLabel::ALL[rng.alice.random_range(0..4)];
            alice.add_check(position, label);
            lab.alloc_single(label)
        };
        let q_b = bob.prepare_one(&mut lab, &mut rng.bob);

        for (q, channel) in [(q_a, Channel::PA), (q_b, Channel::PB)] {
            transcript.push(Event::QubitSent { channel, position });
            channel_transform(
                &mut lab,
                q,
                channel,
                position,
                &cfg.adversary,
                &mut rng.adversary,
                &mut adversary,
            )?;
        }
        let result = charlie_bell_round(
            &mut lab,
            q_a,
            q_b,
            position,
            cfg.variant,
            strategy,
            &mut adversary,
            &mut rng.charlie,
        )?;
        transcript.push(Event::BellAnnounced { position, result });
        let basis = bob
            .basis(position)
            .ok_or(ProtocolError::MissingBasis(position))?;
        transcript.push(Event::BasisAnnounced { position, basis });

        let (true, BellAnnouncement::Click(outcome)) = (epr, result) else {
            continue;
        };
        let bit = u8::from(rng.alice.random_bool(0.5));
        let q = alice.encode_one(&mut lab, position, bit, outcome, basis)?;
        transcript.push(Event::QubitSent {
            channel: Channel::Encoded,
            position,
        });
        channel_transform(
            &mut lab,
            q,
            Channel::Encoded,
            position,
            &cfg.adversary,
            &mut rng.adversary,
            &mut adversary,
        )?;
        let z = charlie_final_round(
            &mut lab,
            q,
            position,
            basis,
            outcome,
            strategy,
            &mut adversary,
            &mut rng.charlie,
        )?;
        transcript.push(Event::ZAnnounced { position, bit: z });
    }

    // Alice fixes her integrity subset privately; it is published only if
    // the security check passes.
    let encoded: Vec<usize> = alice
        .epr_positions()
        .filter(|p| alice.payload_bit(*p).is_some())
        .collect();
    alice.choose_integrity(&encoded, cfg.t0, &mut rng.alice);

    let alice_reveals = alice.check_reveals();
    let check_positions: Vec<usize> = alice_reveals.iter().map(|r| r.0).collect();
    for &(position, label) in &alice_reveals {
        transcript.push(Event::CheckReveal {
            party: Party::Alice,
            position,
            label,
        });
    }
    let bob_reveals = bob.reveal(&check_positions);
    for &(position, label) in &bob_reveals {
        transcript.push(Event::CheckReveal {
            party: Party::Bob,
            position,
            label,
        });
    }
    let security = security_check(&transcript, &alice_reveals, &bob_reveals)?;

    let (leaked_bits, leaked_bits_correct) = alice
        .message_positions()
        .filter_map(|p| adversary.ledger.read(p).map(|b| (p, b)))
        .fold((0, 0), |(n, ok), (p, b)| {
            (n + 1, ok + usize::from(alice.payload_bit(p) == Some(b)))
        });
    let mut report = SessionReport {
        variant: cfg.variant,
        block_len: rounds,
        security_error_rate: security.rate(),
        security_samples: security.samples,
        integrity_error_rate: None,
        integrity_samples: 0,
        aborted_at: None,
        decoded_message: None,
        message_bits_carried: alice.message_positions().count(),
        conclusive_fraction: None,
        key_alice: None,
        key_bob: None,
        leaked_bits,
        leaked_bits_correct,
    };
    let abort =
        |stage: Stage, stats: CheckStats, mut report: SessionReport, mut transcript: Transcript| {
            transcript.push(Event::Abort {
                stage,
                error_rate: stats.rate(),
            });
            report.aborted_at = Some(stage);
            (report, transcript)
        };
    if threshold_verdict(security.rate(), cfg.security_threshold) == Verdict::Abort {
        return Ok(abort(Stage::SecurityCheck, security, report, transcript));
    }

    let (positions, bits) = alice.integrity_reveal();
    transcript.push(Event::RandomBitsReveal {
        positions: positions.clone(),
        bits: bits.clone(),
    });
    let decoded = bob.decode(&transcript, &encoded)?;
    let integrity = integrity_check(&decoded, &positions, &bits)?;
    report.integrity_error_rate = Some(integrity.rate());
    report.integrity_samples = integrity.samples;
    if threshold_verdict(integrity.rate(), cfg.integrity_threshold) == Verdict::Abort {
        return Ok(abort(Stage::IntegrityCheck, integrity, report, transcript));
    }

    let key_alice: Vec<u8> = alice
        .message_positions()
        .map(|p| alice.payload_bit(p).expect("encoded position"))
        .collect();
    let key_bob: Vec<u8> = alice.message_positions().map(|p| decoded[&p]).collect();
    report.decoded_message = Some(Bits(key_bob.clone()));
    report.key_alice = Some(Bits(key_alice));
    report.key_bob = Some(Bits(key_bob));
    Ok((report, transcript))
}
