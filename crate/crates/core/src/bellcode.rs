//! Closed-form teleportation algebra for the `|ψ⁻⟩` resource.
//!
//! Everything here is a finite table. The tests check each table against the
//! state engine in [`crate::qstate`].

use std::fmt;

use serde::{Deserialize, Serialize};

pub use crate::qstate::MeasBasis;
use crate::qstate::{BellOutcome, Gate, QubitLabel};

/// One cell of the collapse table: Bob's qubit 3 was `bob_label`, Charlie saw
/// `outcome` on qubits (2, 3), and Alice's qubit 1 is left in `alice_label`
/// up to a global phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CollapseEntry {
    pub bob_label: QubitLabel,
    pub outcome: BellOutcome,
    pub alice_label: QubitLabel,
}

const fn entry(
    bob_label: QubitLabel,
    outcome: BellOutcome,
    alice_label: QubitLabel,
) -> CollapseEntry {
    CollapseEntry {
        bob_label,
        outcome,
        alice_label,
    }
}

use BellOutcome::{PhiMinus, PhiPlus, PsiMinus, PsiPlus};
use QubitLabel::{XMinus, XPlus, Z0, Z1};

/// Collapse of `|ψ⁻⟩₁₂|q⟩₃` after a Bell measurement of qubits 2 and 3.
pub const COLLAPSE_TABLE: [CollapseEntry; 16] = [
    entry(Z0, PhiPlus, Z1),
    entry(Z0, PhiMinus, Z1),
    entry(Z0, PsiPlus, Z0),
    entry(Z0, PsiMinus, Z0),
    entry(Z1, PhiPlus, Z0),
    entry(Z1, PhiMinus, Z0),
    entry(Z1, PsiPlus, Z1),
    entry(Z1, PsiMinus, Z1),
    entry(XPlus, PhiPlus, XMinus),
    entry(XPlus, PhiMinus, XPlus),
    entry(XPlus, PsiPlus, XMinus),
    entry(XPlus, PsiMinus, XPlus),
    entry(XMinus, PhiPlus, XPlus),
    entry(XMinus, PhiMinus, XMinus),
    entry(XMinus, PsiPlus, XPlus),
    entry(XMinus, PsiMinus, XMinus),
];

pub fn collapse_lookup(bob: QubitLabel, outcome: BellOutcome) -> QubitLabel {
    COLLAPSE_TABLE[bob as usize * 4 + outcome.index()].alice_label
}

/// Pauli `P` with collapsed qubit 1 `∝ P|q₃⟩` for every `q₃`.
pub fn pauli_frame(outcome: BellOutcome) -> Gate {
    match outcome {
        PsiMinus => Gate::PauliI,
        PsiPlus => Gate::PauliZ,
        PhiMinus => Gate::PauliX,
        PhiPlus => Gate::IY,
    }
}

/// Whether `g` fixes both labels of `basis` up to phase.
fn trivial_on(g: Gate, basis: MeasBasis) -> bool {
    matches!(
        (g, basis),
        (Gate::PauliI, _) | (Gate::PauliZ, MeasBasis::Z) | (Gate::PauliX, MeasBasis::X)
    )
}

/// Gate that undoes the teleportation frame for labels of `bob_basis`.
///
/// Paulis are self-inverse up to phase, so this is the frame itself, reduced
/// to `PauliI` when it only contributes a phase on that basis.
pub fn teleport_correction(outcome: BellOutcome, bob_basis: MeasBasis) -> Gate {
    let frame = pauli_frame(outcome);
    if trivial_on(frame, bob_basis) {
        Gate::PauliI
    } else {
        frame
    }
}

/// Message encoding `U_m`: identity for 0, `iσ_Y` for 1.
pub fn message_gate(bit: u8) -> Gate {
    if bit & 1 == 0 {
        Gate::PauliI
    } else {
        Gate::IY
    }
}

/// Gates in application order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateSequence(Vec<Gate>);

impl GateSequence {
    /// Drops identities; an all-identity sequence becomes `[PauliI]`.
    pub fn new(gates: impl IntoIterator<Item = Gate>) -> Self {
        let mut gates: Vec<Gate> = gates.into_iter().filter(|g| *g != Gate::PauliI).collect();
        if gates.is_empty() {
            gates.push(Gate::PauliI);
        }
        Self(gates)
    }

    pub fn gates(&self) -> &[Gate] {
        &self.0
    }
}

impl fmt::Display for GateSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self.0.iter().map(|g| format!("{g:?}")).collect();
        write!(f, "[{}]", names.join(", "))
    }
}

/// `U = U_m·U_T`: the correction is applied first, then the message gate.
pub fn encode_op(message_bit: u8, u_t: Gate) -> GateSequence {
    GateSequence::new([u_t, message_gate(message_bit)])
}

/// Rotation that brings `bob_basis` onto the Z basis.
pub fn basis_rotation(bob_basis: MeasBasis) -> Gate {
    match bob_basis {
        MeasBasis::Z => Gate::PauliI,
        MeasBasis::X => Gate::Hadamard,
    }
}

pub fn decode_bit(bob: QubitLabel, announced_z: u8) -> u8 {
    (announced_z ^ bob.bit()) & 1
}

/// Small set of Bell outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct OutcomeSet(u8);

impl OutcomeSet {
    pub const EMPTY: OutcomeSet = OutcomeSet(0);
    pub const ALL: OutcomeSet = OutcomeSet(0b1111);

    pub fn of(outcomes: &[BellOutcome]) -> Self {
        Self(outcomes.iter().fold(0, |m, o| m | (1 << o.index())))
    }

    pub fn contains(self, o: BellOutcome) -> bool {
        self.0 & (1 << o.index()) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = BellOutcome> {
        BellOutcome::ALL
            .into_iter()
            .filter(move |o| self.contains(*o))
    }
}

/// Outcomes a faithful Bell measurement can return for the product `|a⟩|b⟩`.
///
/// Same-basis pairs have a two-element support; mixed-basis pairs reach all
/// four outcomes.
pub fn allowed_outcomes(a: QubitLabel, b: QubitLabel) -> OutcomeSet {
    if a.basis() != b.basis() {
        return OutcomeSet::ALL;
    }
    let equal = a.bit() == b.bit();
    match (a.basis(), equal) {
        (MeasBasis::Z, true) => OutcomeSet::of(&[PhiPlus, PhiMinus]),
        (MeasBasis::Z, false) => OutcomeSet::of(&[PsiPlus, PsiMinus]),
        (MeasBasis::X, true) => OutcomeSet::of(&[PhiPlus, PsiPlus]),
        (MeasBasis::X, false) => OutcomeSet::of(&[PhiMinus, PsiMinus]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{
        apply_gate, apply_gates, bell_probabilities, equal_up_to_global_phase, make_bell,
        make_single, prob_one, project_bell, tensor, StateVector,
    };

    const TOL: f64 = 1e-9;

    /// Engine collapse of `|ψ⁻⟩₁₂|q⟩₃` onto `outcome` on (2, 3).
    fn engine_collapse(q: QubitLabel, outcome: BellOutcome) -> StateVector {
        let s = tensor(&make_bell(PsiMinus), &make_single(q)).unwrap();
        project_bell(&s, 1, 2, outcome).unwrap()
    }

    /// Is `post` equal to `|χ⟩₁|outcome⟩₂₃` up to phase?
    fn qubit1_is(post: &StateVector, chi: &StateVector, outcome: BellOutcome) -> bool {
        let want = tensor(chi, &make_bell(outcome)).unwrap();
        equal_up_to_global_phase(post, &want, TOL).unwrap()
    }

    #[test]
    fn table_is_complete_and_keyed() {
        for (i, e) in COLLAPSE_TABLE.iter().enumerate() {
            assert_eq!(e.bob_label as usize, i / 4);
            assert_eq!(e.outcome.index(), i % 4);
        }
    }

    #[test]
    fn collapse_examples() {
        assert_eq!(collapse_lookup(Z0, PhiPlus), Z1);
        assert_eq!(collapse_lookup(XPlus, PsiMinus), XPlus);
        assert_eq!(collapse_lookup(Z1, PhiPlus), Z0);
    }

    #[test]
    fn table_matches_engine() {
        for e in COLLAPSE_TABLE {
            let post = engine_collapse(e.bob_label, e.outcome);
            assert!(
                qubit1_is(&post, &make_single(e.alice_label), e.outcome),
                "{e:?}"
            );
        }
    }

    #[test]
    fn frame_examples() {
        assert_eq!(pauli_frame(PsiMinus), Gate::PauliI);
        assert_eq!(pauli_frame(PhiPlus), Gate::IY);
        assert_eq!(pauli_frame(PsiPlus), Gate::PauliZ);
        assert_eq!(pauli_frame(PhiMinus), Gate::PauliX);
    }

    #[test]
    fn frame_soundness() {
        for outcome in BellOutcome::ALL {
            for q in QubitLabel::ALL {
                let framed = apply_gate(&make_single(q), pauli_frame(outcome), 0).unwrap();
                assert!(qubit1_is(&engine_collapse(q, outcome), &framed, outcome));
            }
        }
    }

    #[test]
    fn frame_is_forced_by_engine() {
        // Exhaustive: exactly one Pauli reproduces the collapse for all four labels.
        let paulis = [Gate::PauliI, Gate::PauliX, Gate::PauliZ, Gate::IY];
        for outcome in BellOutcome::ALL {
            let fits: Vec<Gate> = paulis
                .into_iter()
                .filter(|&g| {
                    QubitLabel::ALL.iter().all(|&q| {
                        let framed = apply_gate(&make_single(q), g, 0).unwrap();
                        qubit1_is(&engine_collapse(q, outcome), &framed, outcome)
                    })
                })
                .collect();
            assert_eq!(fits, vec![pauli_frame(outcome)]);
        }
    }

    #[test]
    fn correction_examples() {
        assert_eq!(teleport_correction(PsiPlus, MeasBasis::Z), Gate::PauliI);
        assert_eq!(teleport_correction(PhiPlus, MeasBasis::Z), Gate::IY);
        assert_eq!(teleport_correction(PhiMinus, MeasBasis::X), Gate::PauliI);
        assert_eq!(teleport_correction(PsiPlus, MeasBasis::X), Gate::PauliZ);
        assert_eq!(teleport_correction(PhiMinus, MeasBasis::Z), Gate::PauliX);
        // Z-basis corrections for |0⟩₃: I for ψ±, iσ_Y for φ+.
        assert_eq!(teleport_correction(PsiMinus, MeasBasis::Z), Gate::PauliI);
    }

    #[test]
    fn correction_soundness() {
        for basis in MeasBasis::ALL {
            for q in basis.labels() {
                for outcome in BellOutcome::ALL {
                    let post = engine_collapse(q, outcome);
                    let fixed = apply_gate(&post, teleport_correction(outcome, basis), 0).unwrap();
                    assert!(
                        qubit1_is(&fixed, &make_single(q), outcome),
                        "{q:?} {outcome:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn iy_flips_within_basis() {
        for q in QubitLabel::ALL {
            let s = apply_gate(&make_single(q), Gate::IY, 0).unwrap();
            assert!(equal_up_to_global_phase(&s, &make_single(q.flipped()), TOL).unwrap());
        }
    }

    #[test]
    fn encode_examples() {
        assert_eq!(encode_op(0, Gate::PauliI).gates(), &[Gate::PauliI]);

        let collapsed = make_single(Z0);
        let s = apply_gates(&collapsed, encode_op(1, Gate::PauliI).gates(), 0).unwrap();
        assert!(equal_up_to_global_phase(&s, &make_single(Z1), TOL).unwrap());

        // |+⟩₃ with φ+ collapses to |−⟩₁; correction iσ_Y then message iσ_Y.
        let collapsed = make_single(collapse_lookup(XPlus, PhiPlus));
        let seq = encode_op(1, Gate::IY);
        assert_eq!(seq.gates(), &[Gate::IY, Gate::IY]);
        let s = apply_gates(&collapsed, seq.gates(), 0).unwrap();
        assert!(equal_up_to_global_phase(&s, &make_single(XMinus), TOL).unwrap());
    }

    #[test]
    fn rotation_examples() {
        assert_eq!(basis_rotation(MeasBasis::Z), Gate::PauliI);
        assert_eq!(basis_rotation(MeasBasis::X), Gate::Hadamard);
        let s = apply_gate(&make_single(XPlus), basis_rotation(MeasBasis::X), 0).unwrap();
        assert!(equal_up_to_global_phase(&s, &make_single(Z0), TOL).unwrap());
    }

    #[test]
    fn decode_examples() {
        assert_eq!(decode_bit(Z0, 0), 0);
        assert_eq!(decode_bit(Z1, 0), 1);
        assert_eq!(decode_bit(XMinus, 1), 0);
    }

    #[test]
    fn allowed_examples() {
        assert_eq!(
            allowed_outcomes(Z0, Z0),
            OutcomeSet::of(&[PhiPlus, PhiMinus])
        );
        assert_eq!(
            allowed_outcomes(XPlus, XMinus),
            OutcomeSet::of(&[PhiMinus, PsiMinus])
        );
        assert_eq!(allowed_outcomes(XPlus, Z0), OutcomeSet::ALL);
    }

    #[test]
    fn allowed_matches_engine_support() {
        for a in QubitLabel::ALL {
            for b in QubitLabel::ALL {
                let s = tensor(&make_single(a), &make_single(b)).unwrap();
                let support = OutcomeSet::of(&bell_probabilities(&s, 0, 1).unwrap().support(TOL));
                assert_eq!(support, allowed_outcomes(a, b), "{a:?} {b:?}");
            }
        }
    }

    #[test]
    fn honest_round_trip_is_exhaustive() {
        let mut cases = 0;
        for q in QubitLabel::ALL {
            for bit in 0..2u8 {
                for outcome in BellOutcome::ALL {
                    let post = engine_collapse(q, outcome);
                    let seq = encode_op(bit, teleport_correction(outcome, q.basis()));
                    let enc = apply_gates(&post, seq.gates(), 0).unwrap();
                    let rot = apply_gate(&enc, basis_rotation(q.basis()), 0).unwrap();
                    let p1 = prob_one(&rot, 0).unwrap();
                    assert!(!(TOL..=1.0 - TOL).contains(&p1), "not deterministic: {p1}");
                    let z = u8::from(p1 > 0.5);
                    assert_eq!(decode_bit(q, z), bit);
                    cases += 1;
                }
            }
        }
        assert_eq!(cases, 32);
    }
}
