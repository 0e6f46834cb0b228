use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index::sample;
use rand::Rng;

use super::config::{ProtocolConfig, Variant};
use super::transcript::{BellAnnouncement, Event, Transcript};
use super::ProtocolError;
use crate::adversary::{self, AdversaryState, BellBehavior, CharlieStrategy, FinalBehavior};
use crate::bellcode::{
    allowed_outcomes, basis_rotation, decode_bit, encode_op, teleport_correction,
};
use crate::lab::{Lab, QubitId};
use crate::qstate::{BellOutcome, MeasBasis, QubitLabel};

fn random_label<R: Rng + ?Sized>(rng: &mut R) -> QubitLabel {
    QubitLabel::ALL[rng.random_range(0..4)]
}

/// Alice's private bookkeeping.
#[derive(Debug, Clone, Default)]
pub struct AliceState {
    /// `P_A` position → retained `S_Ah` partner.
    s_ah: BTreeMap<usize, QubitId>,
    /// `P_A` position → label of an inserted check single.
    checks: BTreeMap<usize, QubitLabel>,
    /// Position → bit Alice encoded (message and random integrity bits).
    payload: BTreeMap<usize, u8>,
    integrity: BTreeSet<usize>,
}

impl AliceState {
    pub fn s_ah_len(&self) -> usize {
        self.s_ah.len()
    }

    pub fn epr_positions(&self) -> impl Iterator<Item = usize> + '_ {
        self.s_ah.keys().copied()
    }

    pub fn check_positions(&self) -> impl Iterator<Item = usize> + '_ {
        self.checks.keys().copied()
    }

    pub fn is_check(&self, position: usize) -> bool {
        self.checks.contains_key(&position)
    }

    /// Step-3 publication: positions and states of the check singles.
    pub fn check_reveals(&self) -> Vec<(usize, QubitLabel)> {
        self.checks.iter().map(|(&p, &l)| (p, l)).collect()
    }

    pub fn integrity_positions(&self) -> impl Iterator<Item = usize> + '_ {
        self.integrity.iter().copied()
    }

    /// Step-6 publication: integrity positions and their random bits.
    pub fn integrity_reveal(&self) -> (Vec<usize>, Vec<u8>) {
        self.integrity.iter().map(|p| (*p, self.payload[p])).unzip()
    }

    /// Encoded positions that carry message (or key) bits, in order.
    pub fn message_positions(&self) -> impl Iterator<Item = usize> + '_ {
        self.payload
            .keys()
            .copied()
            .filter(|p| !self.integrity.contains(p))
    }

    pub fn payload_bit(&self, position: usize) -> Option<u8> {
        self.payload.get(&position).copied()
    }

    pub(crate) fn add_epr(&mut self, position: usize, s_ah: QubitId) {
        self.s_ah.insert(position, s_ah);
    }

    pub(crate) fn add_check(&mut self, position: usize, label: QubitLabel) {
        self.checks.insert(position, label);
    }

    pub(crate) fn s_ah(&self, position: usize) -> Option<QubitId> {
        self.s_ah.get(&position).copied()
    }

    /// Picks `t0` integrity positions uniformly among `positions`.
    pub(crate) fn choose_integrity<R: Rng + ?Sized>(
        &mut self,
        positions: &[usize],
        t0: usize,
        rng: &mut R,
    ) {
        let k = t0.min(positions.len());
        self.integrity = sample(rng, positions.len(), k)
            .into_iter()
            .map(|i| positions[i])
            .collect();
    }

    /// Applies `U_m·U_T` for `bit` to the partner at `position`.
    pub(crate) fn encode_one(
        &mut self,
        lab: &mut Lab,
        position: usize,
        bit: u8,
        outcome: BellOutcome,
        basis: MeasBasis,
    ) -> Result<QubitId, ProtocolError> {
        let q = self
            .s_ah(position)
            .ok_or(ProtocolError::MissingBellAnnouncement(position))?;
        let seq = encode_op(bit, teleport_correction(outcome, basis));
        lab.apply_all(q, seq.gates())?;
        self.payload.insert(position, bit & 1);
        Ok(q)
    }

    /// Step-4 encoding of a whole block.
    ///
    /// Surviving positions are those Bob announced a basis for. Alice picks
    /// `t0` of them for random integrity bits and fills the rest with
    /// `message` in order. Returns the encoded `S_Ah` qubits by position.
    pub fn encode_block<R: Rng + ?Sized>(
        &mut self,
        lab: &mut Lab,
        _clearance: &SecurityClearance,
        transcript: &Transcript,
        message: &[u8],
        t0: usize,
        rng: &mut R,
    ) -> Result<Vec<(usize, QubitId)>, ProtocolError> {
        let bases: BTreeMap<usize, MeasBasis> = transcript
            .events()
            .iter()
            .filter_map(|e| match e {
                Event::BasisAnnounced { position, basis } => Some((*position, *basis)),
                _ => None,
            })
            .collect();
        let survivors: Vec<usize> = bases.keys().copied().collect();
        self.choose_integrity(&survivors, t0, rng);
        let carried = survivors.len() - self.integrity.len();
        if message.len() < carried {
            return Err(ProtocolError::MessageLength {
                got: message.len(),
                need: carried,
            });
        }
        let mut next_message = message.iter();
        let mut out = Vec::with_capacity(survivors.len());
        for (&position, &basis) in &bases {
            let outcome = transcript
                .bell_announcement(position)
                .and_then(BellAnnouncement::outcome)
                .ok_or(ProtocolError::MissingBellAnnouncement(position))?;
            let bit = if self.integrity.contains(&position) {
                u8::from(rng.random_bool(0.5))
            } else {
                *next_message.next().expect("length checked above")
            };
            out.push((
                position,
                self.encode_one(lab, position, bit, outcome, basis)?,
            ));
        }
        Ok(out)
    }
}

/// Proof that a block passed its security check. Only the session
/// orchestration can mint one, so encoding after an abort cannot be written.
#[derive(Debug)]
pub struct SecurityClearance {
    _private: (),
}

impl SecurityClearance {
    pub(crate) fn grant() -> Self {
        Self { _private: () }
    }
}

/// Step 1 for Alice: `N + t₀` EPR pairs in `|ψ⁻⟩` and `t₁` random singles
/// at uniformly random positions of `P_A`.
pub fn alice_prepare<R: Rng + ?Sized>(
    cfg: &ProtocolConfig,
    lab: &mut Lab,
    rng: &mut R,
) -> (Vec<QubitId>, AliceState) {
    let len = cfg.block_len();
    let check_slots: BTreeSet<usize> = sample(rng, len, cfg.t1.min(len)).into_iter().collect();
    let mut alice = AliceState::default();
    let p_a = (0..len)
        .map(|position| {
            if check_slots.contains(&position) {
                let label = random_label(rng);
                alice.add_check(position, label);
                lab.alloc_single(label)
            } else {
                let (s_ah, s_at) = lab.alloc_bell(BellOutcome::PsiMinus);
                alice.add_epr(position, s_ah);
                s_at
            }
        })
        .collect();
    (p_a, alice)
}

/// Bob's private label record for `P_B`.
#[derive(Debug, Clone, Default)]
pub struct BobState {
    labels: Vec<QubitLabel>,
}

impl BobState {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Prepares one more qubit at the next position.
    pub(crate) fn prepare_one<R: Rng + ?Sized>(&mut self, lab: &mut Lab, rng: &mut R) -> QubitId {
        let label = random_label(rng);
        self.labels.push(label);
        lab.alloc_single(label)
    }

    /// Step-3 publication of Bob's states at Alice's check positions.
    pub fn reveal(&self, positions: &[usize]) -> Vec<(usize, QubitLabel)> {
        positions
            .iter()
            .filter_map(|&p| self.labels.get(p).map(|&l| (p, l)))
            .collect()
    }

    pub fn basis(&self, position: usize) -> Option<MeasBasis> {
        self.labels.get(position).map(|l| l.basis())
    }

    /// Bob's derivation of Alice's bits from Charlie's Z announcements at
    /// `positions`.
    pub fn decode(
        &self,
        transcript: &Transcript,
        positions: &[usize],
    ) -> Result<BTreeMap<usize, u8>, ProtocolError> {
        let z: BTreeMap<usize, u8> = transcript
            .events()
            .iter()
            .filter_map(|e| match e {
                Event::ZAnnounced { position, bit } => Some((*position, *bit)),
                _ => None,
            })
            .collect();
        positions
            .iter()
            .map(|&p| {
                let bit = z.get(&p).ok_or(ProtocolError::MissingZ(p))?;
                let label = self.labels.get(p).ok_or(ProtocolError::MissingZ(p))?;
                Ok((p, decode_bit(*label, *bit)))
            })
            .collect()
    }

    #[cfg(test)]
    pub(crate) fn labels(&self) -> &[QubitLabel] {
        &self.labels
    }
}

/// Step 1 for Bob: `length` singles with uniform labels.
pub fn bob_prepare<R: Rng + ?Sized>(
    length: usize,
    lab: &mut Lab,
    rng: &mut R,
) -> (Vec<QubitId>, BobState) {
    let mut bob = BobState::default();
    let p_b = (0..length).map(|_| bob.prepare_one(lab, rng)).collect();
    (p_b, bob)
}

/// Charlie's Bell round on one `(P_A, P_B)` pair.
#[allow(clippy::too_many_arguments)]
pub fn charlie_bell_round<R: Rng + ?Sized>(
    lab: &mut Lab,
    q_a: QubitId,
    q_b: QubitId,
    position: usize,
    variant: Variant,
    strategy: CharlieStrategy,
    adversary: &mut AdversaryState,
    rng: &mut R,
) -> Result<BellAnnouncement, ProtocolError> {
    let outcome = match strategy.bell {
        BellBehavior::Honest => lab.bell_measure(q_a, q_b, rng)?,
        BellBehavior::RandomAnnounce => BellOutcome::ALL[rng.random_range(0..4)],
        BellBehavior::StoreAndDelay => {
            adversary::store_qubit(adversary, position, q_a);
            BellOutcome::ALL[rng.random_range(0..4)]
        }
    };
    Ok(match variant {
        Variant::LinearOptics if !outcome.is_psi() => BellAnnouncement::NoClick,
        _ => BellAnnouncement::Click(outcome),
    })
}

/// Charlie's final round: rotate by `U_B`, measure σ_Z, announce.
#[allow(clippy::too_many_arguments)]
pub fn charlie_final_round<R: Rng + ?Sized>(
    lab: &mut Lab,
    encoded: QubitId,
    position: usize,
    basis: MeasBasis,
    announced: BellOutcome,
    strategy: CharlieStrategy,
    adversary: &mut AdversaryState,
    rng: &mut R,
) -> Result<u8, ProtocolError> {
    if strategy.bell == BellBehavior::StoreAndDelay {
        let read = adversary::store_and_delay_read(
            lab, encoded, position, announced, basis, rng, adversary,
        )?;
        if read.is_some() {
            // The encoded qubit was consumed; the public bit is a guess.
            return Ok(u8::from(rng.random_bool(0.5)));
        }
    }
    lab.apply(encoded, basis_rotation(basis))?;
    let bit = lab.measure_z(encoded, rng)?;
    Ok(match strategy.final_round {
        FinalBehavior::Honest => bit,
        FinalBehavior::Tamper => bit ^ 1,
    })
}

/// Errors over samples for a check.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct CheckStats {
    pub errors: usize,
    pub samples: usize,
}

impl CheckStats {
    /// `errors / samples`, or 0 when there were no usable samples.
    pub fn rate(&self) -> f64 {
        if self.samples == 0 {
            0.0
        } else {
            self.errors as f64 / self.samples as f64
        }
    }
}

/// Step-3 statistic. Only same-basis check pairs with a conclusive
/// announcement count; an announcement outside the pair's allowed Bell
/// outcomes is an error.
pub fn security_check(
    transcript: &Transcript,
    alice_reveals: &[(usize, QubitLabel)],
    bob_reveals: &[(usize, QubitLabel)],
) -> Result<CheckStats, ProtocolError> {
    if alice_reveals.len() != bob_reveals.len() {
        let p = alice_reveals
            .iter()
            .chain(bob_reveals)
            .map(|r| r.0)
            .find(|p| {
                !alice_reveals.iter().any(|a| a.0 == *p) || !bob_reveals.iter().any(|b| b.0 == *p)
            })
            .unwrap_or(0);
        return Err(ProtocolError::RevealMismatch(p));
    }
    let mut stats = CheckStats::default();
    for (&(pa, a), &(pb, b)) in alice_reveals.iter().zip(bob_reveals) {
        if pa != pb {
            return Err(ProtocolError::RevealMismatch(pa.min(pb)));
        }
        let ann = transcript
            .bell_announcement(pa)
            .ok_or(ProtocolError::MissingBellAnnouncement(pa))?;
        if a.basis() != b.basis() {
            continue;
        }
        let Some(outcome) = ann.outcome() else {
            continue;
        };
        stats.samples += 1;
        if !allowed_outcomes(a, b).contains(outcome) {
            stats.errors += 1;
        }
    }
    Ok(stats)
}

/// Step-6 statistic: revealed random bits against Bob's decoding.
pub fn integrity_check(
    decoded: &BTreeMap<usize, u8>,
    positions: &[usize],
    bits: &[u8],
) -> Result<CheckStats, ProtocolError> {
    if positions.len() != bits.len() {
        return Err(ProtocolError::PositionMismatch(
            positions.get(bits.len()).copied().unwrap_or(0),
        ));
    }
    let mut stats = CheckStats::default();
    for (&p, &bit) in positions.iter().zip(bits) {
        let got = decoded.get(&p).ok_or(ProtocolError::PositionMismatch(p))?;
        stats.samples += 1;
        if *got != bit {
            stats.errors += 1;
        }
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::AdversaryModel;
    use crate::protocol::transcript::Party;
    use crate::rng::stream;

    #[test]
    fn minimal_block() {
        let mut lab = Lab::new();
        let (p_a, alice) =
            alice_prepare(&ProtocolConfig::new(1, 0, 0), &mut lab, &mut stream(0, 1));
        assert_eq!(p_a.len(), 1);
        assert_eq!(alice.s_ah_len(), 1);
    }

    #[test]
    fn block_arithmetic() {
        let mut lab = Lab::new();
        let (p_a, alice) =
            alice_prepare(&ProtocolConfig::new(8, 2, 6), &mut lab, &mut stream(0, 1));
        assert_eq!(p_a.len(), 16);
        assert_eq!(alice.s_ah_len(), 10);
        assert_eq!(alice.check_positions().count(), 6);
    }

    #[test]
    fn check_positions_are_uniform() {
        let cfg = ProtocolConfig::new(6, 2, 8);
        let mut rng = stream(77, 1);
        let mut counts = [0usize; 16];
        for _ in 0..1000 {
            let mut lab = Lab::new();
            let (_, alice) = alice_prepare(&cfg, &mut lab, &mut rng);
            for p in alice.check_positions() {
                counts[p] += 1;
            }
        }
        for (slot, c) in counts.iter().enumerate() {
            let f = *c as f64 / 1000.0;
            assert!((f - 0.5).abs() <= 0.05, "slot {slot}: {f}");
        }
    }

    #[test]
    fn bob_labels_reproducible_and_uniform() {
        let mut lab = Lab::new();
        let (_, a) = bob_prepare(4, &mut lab, &mut stream(3, 2));
        let (_, b) = bob_prepare(4, &mut lab, &mut stream(3, 2));
        assert_eq!(a.labels(), b.labels());

        let (p_b, bob) = bob_prepare(10_000, &mut lab, &mut stream(4, 2));
        for l in QubitLabel::ALL {
            let f = bob.labels().iter().filter(|&&x| x == l).count() as f64 / 1e4;
            assert!((f - 0.25).abs() <= 0.02, "{l:?}: {f}");
        }
        let mut acc = crate::qstate::BlochAccumulator::new();
        for q in p_b {
            acc.add(lab.reduced_bloch(q).unwrap());
        }
        assert!(acc.mean().unwrap().norm() < 0.05);
    }

    fn strategy(m: &str) -> CharlieStrategy {
        adversary::charlie_strategy(&m.parse::<AdversaryModel>().unwrap())
    }

    #[test]
    fn honest_full_bell_on_zero_zero() {
        let mut rng = stream(8, 3);
        let mut adv = AdversaryState::new();
        for _ in 0..100 {
            let mut lab = Lab::new();
            let a = lab.alloc_single(QubitLabel::Z0);
            let b = lab.alloc_single(QubitLabel::Z0);
            let ann = charlie_bell_round(
                &mut lab,
                a,
                b,
                0,
                Variant::FullBell,
                strategy("honest"),
                &mut adv,
                &mut rng,
            )
            .unwrap();
            assert!(matches!(
                ann,
                BellAnnouncement::Click(BellOutcome::PhiPlus | BellOutcome::PhiMinus)
            ));
        }
    }

    #[test]
    fn linear_optics_no_click_rate() {
        let mut rng = stream(9, 3);
        let mut bob_rng = stream(9, 2);
        let mut adv = AdversaryState::new();
        let mut none = 0;
        for i in 0..10_000 {
            let mut lab = Lab::new();
            let (_, s_at) = lab.alloc_bell(BellOutcome::PsiMinus);
            let b = lab.alloc_single(random_label(&mut bob_rng));
            let ann = charlie_bell_round(
                &mut lab,
                s_at,
                b,
                i,
                Variant::LinearOptics,
                strategy("honest"),
                &mut adv,
                &mut rng,
            )
            .unwrap();
            none += usize::from(ann == BellAnnouncement::NoClick);
        }
        let f = none as f64 / 1e4;
        assert!((f - 0.5).abs() <= 0.02, "{f}");
    }

    #[test]
    fn random_charlie_is_uniform_and_blind() {
        let mut rng = stream(10, 3);
        let mut adv = AdversaryState::new();
        let mut counts = [0usize; 4];
        for i in 0..8000 {
            let mut lab = Lab::new();
            let a = lab.alloc_single(QubitLabel::Z0);
            let b = lab.alloc_single(QubitLabel::Z0);
            let ann = charlie_bell_round(
                &mut lab,
                a,
                b,
                i,
                Variant::FullBell,
                strategy("random-charlie"),
                &mut adv,
                &mut rng,
            )
            .unwrap();
            counts[ann.outcome().unwrap().index()] += 1;
        }
        for c in counts {
            assert!((c as f64 / 8000.0 - 0.25).abs() < 0.02);
        }
        assert_eq!(adv.ledger.bits_read(), 0);
    }

    #[test]
    fn final_round_examples() {
        let mut rng = stream(12, 3);
        let mut adv = AdversaryState::new();
        // bit 0 on |+⟩ and bit 1 on |0⟩ after a ψ⁻ collapse (identity frame)
        for (label, bit, want) in [(QubitLabel::XPlus, 0u8, 0u8), (QubitLabel::Z0, 1, 1)] {
            let mut lab = Lab::new();
            let q = lab.alloc_single(label);
            lab.apply_all(q, encode_op(bit, crate::qstate::Gate::PauliI).gates())
                .unwrap();
            let z = charlie_final_round(
                &mut lab,
                q,
                0,
                label.basis(),
                BellOutcome::PsiMinus,
                strategy("honest"),
                &mut adv,
                &mut rng,
            )
            .unwrap();
            assert_eq!(z, want);
            assert_eq!(decode_bit(label, z), bit);
        }
    }

    #[test]
    fn security_check_counts_only_same_basis_conclusive() {
        let mut t = Transcript::new();
        let anns = [
            BellAnnouncement::Click(BellOutcome::PsiPlus), // Z0,Z0: forbidden
            BellAnnouncement::Click(BellOutcome::PhiPlus), // Z0,Z0: allowed
            BellAnnouncement::Click(BellOutcome::PsiPlus), // mixed: ignored
            BellAnnouncement::NoClick,                     // inconclusive
        ];
        for (p, r) in anns.into_iter().enumerate() {
            t.push(Event::BellAnnounced {
                position: p,
                result: r,
            });
        }
        let a = [
            (0, QubitLabel::Z0),
            (1, QubitLabel::Z0),
            (2, QubitLabel::XPlus),
            (3, QubitLabel::Z1),
        ];
        let b = [
            (0, QubitLabel::Z0),
            (1, QubitLabel::Z0),
            (2, QubitLabel::Z1),
            (3, QubitLabel::Z1),
        ];
        let s = security_check(&t, &a, &b).unwrap();
        assert_eq!(
            s,
            CheckStats {
                errors: 1,
                samples: 2
            }
        );
        assert_eq!(s.rate(), 0.5);

        assert_eq!(
            security_check(&t, &a, &b[..3]).unwrap_err(),
            ProtocolError::RevealMismatch(3)
        );
        let shifted = [
            (0, QubitLabel::Z0),
            (1, QubitLabel::Z0),
            (2, QubitLabel::Z1),
            (5, QubitLabel::Z1),
        ];
        assert_eq!(
            security_check(&t, &a, &shifted).unwrap_err(),
            ProtocolError::RevealMismatch(3)
        );
        let _ = Party::Alice;
    }

    #[test]
    fn integrity_check_cases() {
        let decoded: BTreeMap<usize, u8> = [(1, 0), (4, 1), (7, 1)].into_iter().collect();
        let s = integrity_check(&decoded, &[1, 7], &[0, 1]).unwrap();
        assert_eq!(s.rate(), 0.0);
        let s = integrity_check(&decoded, &[1, 4, 7], &[1, 0, 0]).unwrap();
        assert_eq!(s.rate(), 1.0);
        assert_eq!(
            integrity_check(&decoded, &[2], &[0]).unwrap_err(),
            ProtocolError::PositionMismatch(2)
        );
        assert_eq!(CheckStats::default().rate(), 0.0);
    }

    #[test]
    fn decode_reports_missing_announcements() {
        let mut lab = Lab::new();
        let (_, bob) = bob_prepare(3, &mut lab, &mut stream(1, 2));
        let mut t = Transcript::new();
        t.push(Event::ZAnnounced {
            position: 0,
            bit: 1,
        });
        assert_eq!(
            bob.decode(&t, &[0, 2]).unwrap_err(),
            ProtocolError::MissingZ(2)
        );
        let d = bob.decode(&t, &[0]).unwrap();
        assert_eq!(d[&0], 1 ^ bob.labels()[0].bit());
    }
}
