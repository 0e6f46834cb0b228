//! Shared pool of qubit registers.
//!
//! Parties hold [`QubitId`] handles; the pool owns the amplitudes. Qubits
//! that become entangled by a joint measurement are merged into one register.

use rand::Rng;

use crate::qstate::{
    self, BellDistribution, BellOutcome, BlochVector, Gate, QStateError, QubitLabel, StateVector,
};

/// Handle to one physical qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QubitId(usize);

#[derive(Debug, Clone)]
struct Register {
    state: StateVector,
    members: Vec<QubitId>,
}

#[derive(Debug, Clone, Default)]
pub struct Lab {
    registers: Vec<Option<Register>>,
    // qubit -> (register, index within register)
    location: Vec<(usize, usize)>,
}

impl Lab {
    pub fn new() -> Self {
        Self::default()
    }

    /// Places `state` in a fresh register; ids follow the state's qubit order.
    pub fn alloc(&mut self, state: StateVector) -> Vec<QubitId> {
        let reg = self.registers.len();
        let members: Vec<QubitId> = (0..state.num_qubits())
            .map(|i| {
                let id = QubitId(self.location.len());
                self.location.push((reg, i));
                id
            })
            .collect();
        self.registers.push(Some(Register {
            state,
            members: members.clone(),
        }));
        members
    }

    pub fn alloc_single(&mut self, label: QubitLabel) -> QubitId {
        self.alloc(qstate::make_single(label))[0]
    }

    pub fn alloc_bell(&mut self, which: BellOutcome) -> (QubitId, QubitId) {
        let ids = self.alloc(qstate::make_bell(which));
        (ids[0], ids[1])
    }

    fn register(&self, q: QubitId) -> (&Register, usize) {
        let (reg, idx) = self.location[q.0];
        let r = self.registers[reg]
            .as_ref()
            .expect("qubit points at a merged-away register");
        (r, idx)
    }

    fn register_mut(&mut self, q: QubitId) -> (&mut Register, usize) {
        let (reg, idx) = self.location[q.0];
        let r = self.registers[reg]
            .as_mut()
            .expect("qubit points at a merged-away register");
        (r, idx)
    }

    /// The register holding `q` and the qubit's index in it.
    pub fn state_of(&self, q: QubitId) -> (&StateVector, usize) {
        let (r, idx) = self.register(q);
        (&r.state, idx)
    }

    /// Moves `b`'s register behind `a`'s so both share one state vector.
    fn join(&mut self, a: QubitId, b: QubitId) -> Result<(), QStateError> {
        let (ra, _) = self.location[a.0];
        let (rb, _) = self.location[b.0];
        if ra == rb {
            return Ok(());
        }
        let right = self.registers[rb].take().expect("live register");
        let left = self.registers[ra].as_mut().expect("live register");
        let offset = left.state.num_qubits();
        let merged = match qstate::tensor(&left.state, &right.state) {
            Ok(s) => s,
            Err(e) => {
                self.registers[rb] = Some(right);
                return Err(e);
            }
        };
        left.state = merged;
        for (i, id) in right.members.iter().enumerate() {
            self.location[id.0] = (ra, offset + i);
        }
        left.members.extend(right.members);
        Ok(())
    }

    pub fn apply(&mut self, q: QubitId, gate: Gate) -> Result<(), QStateError> {
        let (r, idx) = self.register_mut(q);
        r.state = qstate::apply_gate(&r.state, gate, idx)?;
        Ok(())
    }

    pub fn apply_all(&mut self, q: QubitId, gates: &[Gate]) -> Result<(), QStateError> {
        gates.iter().try_for_each(|&g| self.apply(q, g))
    }

    pub fn measure_z<R: Rng + ?Sized>(
        &mut self,
        q: QubitId,
        rng: &mut R,
    ) -> Result<u8, QStateError> {
        let (r, idx) = self.register_mut(q);
        let (bit, post) = qstate::measure_z(&r.state, idx, rng)?;
        r.state = post;
        Ok(bit)
    }

    pub fn bell_probabilities(
        &mut self,
        q1: QubitId,
        q2: QubitId,
    ) -> Result<BellDistribution, QStateError> {
        self.join(q1, q2)?;
        let i1 = self.location[q1.0].1;
        let i2 = self.location[q2.0].1;
        let (r, _) = self.register(q1);
        qstate::bell_probabilities(&r.state, i1, i2)
    }

    pub fn bell_measure<R: Rng + ?Sized>(
        &mut self,
        q1: QubitId,
        q2: QubitId,
        rng: &mut R,
    ) -> Result<BellOutcome, QStateError> {
        self.join(q1, q2)?;
        let i1 = self.location[q1.0].1;
        let i2 = self.location[q2.0].1;
        let (r, _) = self.register_mut(q1);
        let (outcome, post) = qstate::bell_measure(&r.state, i1, i2, rng)?;
        r.state = post;
        Ok(outcome)
    }

    pub fn reduced_bloch(&self, q: QubitId) -> Result<BlochVector, QStateError> {
        let (s, idx) = self.state_of(q);
        qstate::reduced_bloch(s, idx)
    }

    pub fn num_qubits(&self) -> usize {
        self.location.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{equal_up_to_global_phase, make_bell, make_single, tensor};
    use crate::rng::stream;

    #[test]
    fn join_keeps_order_and_handles() {
        let mut lab = Lab::new();
        let (a1, a2) = lab.alloc_bell(BellOutcome::PsiMinus);
        let b = lab.alloc_single(QubitLabel::Z0);
        lab.join(a2, b).unwrap();
        let (s, idx) = lab.state_of(b);
        assert_eq!(idx, 2);
        let want = tensor(
            &make_bell(BellOutcome::PsiMinus),
            &make_single(QubitLabel::Z0),
        )
        .unwrap();
        assert!(equal_up_to_global_phase(s, &want, 1e-12).unwrap());
        assert_eq!(lab.state_of(a1).1, 0);
    }

    #[test]
    fn bell_measure_teleports_frame() {
        let mut rng = stream(4, 0);
        for _ in 0..20 {
            let mut lab = Lab::new();
            let (keep, send) = lab.alloc_bell(BellOutcome::PsiMinus);
            let bob = lab.alloc_single(QubitLabel::XPlus);
            let o = lab.bell_measure(send, bob, &mut rng).unwrap();
            lab.apply(keep, crate::bellcode::pauli_frame(o)).unwrap();
            // qubit `keep` now carries |+⟩ up to phase
            let b = lab.reduced_bloch(keep).unwrap();
            assert!((b.x - 1.0).abs() < 1e-9, "{o:?} {b:?}");
        }
    }

    #[test]
    fn capacity_is_enforced_on_join() {
        let mut lab = Lab::new();
        let (a, _) = lab.alloc_bell(BellOutcome::PhiPlus);
        let (b, _) = lab.alloc_bell(BellOutcome::PhiPlus);
        let c = lab.alloc_single(QubitLabel::Z0);
        lab.join(a, b).unwrap();
        assert_eq!(
            lab.join(a, c).unwrap_err(),
            QStateError::CapacityExceeded(5)
        );
        // failed join leaves both registers usable
        assert_eq!(lab.state_of(c).0.num_qubits(), 1);
    }
}
