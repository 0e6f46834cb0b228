//! Exhaustive algebra checks exposed by `mdi-qsdc selftest`.
//!
//! Every check enumerates all cases and compares the closed-form tables in
//! [`crate::bellcode`] with direct state-vector computation.

use serde::Serialize;

use crate::bellcode::{
    allowed_outcomes, basis_rotation, collapse_lookup, decode_bit, encode_op, pauli_frame,
    teleport_correction, COLLAPSE_TABLE,
};
use crate::qstate::{
    apply_gate, apply_gates, bell_probabilities, equal_up_to_global_phase, make_bell, make_single,
    prob_one, project_bell, tensor, BellOutcome, QStateError, QubitLabel, StateVector, ALGEBRA_TOL,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckCount {
    pub name: &'static str,
    pub passed: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SelftestReport {
    pub checks: Vec<CheckCount>,
}

impl SelftestReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed == c.total)
    }
}

/// `|ψ⁻⟩₁₂|q⟩₃` projected onto `outcome` on qubits (2, 3).
pub fn collapse(q: QubitLabel, outcome: BellOutcome) -> Result<StateVector, QStateError> {
    let s = tensor(&make_bell(BellOutcome::PsiMinus), &make_single(q))?;
    project_bell(&s, 1, 2, outcome)
}

/// Does `post` factor as `|chi⟩₁|outcome⟩₂₃` up to phase?
fn qubit1_is(
    post: &StateVector,
    chi: &StateVector,
    outcome: BellOutcome,
) -> Result<bool, QStateError> {
    let want = tensor(chi, &make_bell(outcome))?;
    equal_up_to_global_phase(post, &want, ALGEBRA_TOL)
}

fn count(name: &'static str, results: Vec<Result<bool, QStateError>>) -> CheckCount {
    CheckCount {
        name,
        total: results.len(),
        passed: results
            .into_iter()
            .filter(|r| matches!(r, Ok(true)))
            .count(),
    }
}

pub fn collapse_table_check() -> CheckCount {
    let results = COLLAPSE_TABLE
        .iter()
        .map(|e| {
            let post = collapse(e.bob_label, e.outcome)?;
            let p = bell_probabilities(
                &tensor(&make_bell(BellOutcome::PsiMinus), &make_single(e.bob_label))?,
                1,
                2,
            )?
            .get(e.outcome);
            Ok((p - 0.25).abs() < ALGEBRA_TOL
                && e.alice_label == collapse_lookup(e.bob_label, e.outcome)
                && qubit1_is(&post, &make_single(e.alice_label), e.outcome)?)
        })
        .collect();
    count("collapse table", results)
}

pub fn frame_check() -> CheckCount {
    let mut results = Vec::new();
    for outcome in BellOutcome::ALL {
        for q in QubitLabel::ALL {
            results.push((|| {
                let post = collapse(q, outcome)?;
                let framed = apply_gate(&make_single(q), pauli_frame(outcome), 0)?;
                let fixed = apply_gate(&post, teleport_correction(outcome, q.basis()), 0)?;
                Ok(qubit1_is(&post, &framed, outcome)?
                    && qubit1_is(&fixed, &make_single(q), outcome)?)
            })());
        }
    }
    count("teleportation frames", results)
}

pub fn round_trip_check() -> CheckCount {
    let mut results = Vec::new();
    for q in QubitLabel::ALL {
        for bit in 0..2u8 {
            for outcome in BellOutcome::ALL {
                results.push((|| {
                    let post = collapse(q, outcome)?;
                    let seq = encode_op(bit, teleport_correction(outcome, q.basis()));
                    let enc = apply_gates(&post, seq.gates(), 0)?;
                    let rot = apply_gate(&enc, basis_rotation(q.basis()), 0)?;
                    let p1 = prob_one(&rot, 0)?;
                    let deterministic = !(ALGEBRA_TOL..=1.0 - ALGEBRA_TOL).contains(&p1);
                    Ok(deterministic && decode_bit(q, u8::from(p1 > 0.5)) == bit)
                })());
            }
        }
    }
    count("encode/decode round trip", results)
}

/// Same-basis pairs: 1/2 on each allowed outcome; mixed pairs: 1/4 each.
pub fn support_check() -> CheckCount {
    let mut results = Vec::new();
    for a in QubitLabel::ALL {
        for b in QubitLabel::ALL {
            results.push((|| {
                let s = tensor(&make_single(a), &make_single(b))?;
                let d = bell_probabilities(&s, 0, 1)?;
                let allowed = allowed_outcomes(a, b);
                let expect = |o: BellOutcome| {
                    if !allowed.contains(o) {
                        0.0
                    } else if a.basis() == b.basis() {
                        0.5
                    } else {
                        0.25
                    }
                };
                let ok = d.iter().all(|(o, p)| (p - expect(o)).abs() < ALGEBRA_TOL);
                Ok(ok)
            })());
        }
    }
    count("Bell-basis supports", results)
}

pub fn run() -> SelftestReport {
    SelftestReport {
        checks: vec![
            collapse_table_check(),
            frame_check(),
            round_trip_check(),
            support_check(),
        ],
    }
}
