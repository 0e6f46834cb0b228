//! Dense state-vector engine for registers of one to four qubits.
//!
//! Amplitude index `i` is read as a binary string of qubit values with
//! qubit 0 as the most significant bit, so `|q0 q1 q2⟩` matches ket notation
//! left to right.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A single complex amplitude.
pub type Amplitude = Complex64;

/// Largest register the engine accepts.
pub const MAX_QUBITS: usize = 4;

/// Tolerance for algebraic identities.
pub const ALGEBRA_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QStateError {
    #[error("register of {0} qubits exceeds the {MAX_QUBITS}-qubit capacity")]
    CapacityExceeded(usize),
    #[error("register must hold at least one qubit")]
    EmptyRegister,
    #[error("amplitude count {0} is not 2^n for n in 1..=4")]
    BadLength(usize),
    #[error("amplitudes contain a non-finite value")]
    NonFinite,
    #[error("state norm {0} differs from 1")]
    NotNormalized(f64),
    #[error("qubit index {index} out of range for a {num_qubits}-qubit register")]
    QubitOutOfRange { index: usize, num_qubits: usize },
    #[error("Bell measurement needs two distinct qubits, got {0} twice")]
    SameQubit(usize),
    #[error("dimension mismatch: {0} vs {1} qubits")]
    DimensionMismatch(usize, usize),
    #[error("expected a single-qubit state, got {0} qubits")]
    NotSingleQubit(usize),
    #[error("no samples to accumulate")]
    EmptySamples,
    #[error("projection has zero probability")]
    ZeroProbability,
}

pub type Result<T> = std::result::Result<T, QStateError>;

/// Single-qubit measurement basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MeasBasis {
    Z,
    X,
}

impl MeasBasis {
    pub const ALL: [MeasBasis; 2] = [MeasBasis::Z, MeasBasis::X];

    /// The two labels of this basis, bit 0 first.
    pub fn labels(self) -> [QubitLabel; 2] {
        match self {
            MeasBasis::Z => [QubitLabel::Z0, QubitLabel::Z1],
            MeasBasis::X => [QubitLabel::XPlus, QubitLabel::XMinus],
        }
    }
}

/// The four preparation states `|0⟩, |1⟩, |+⟩, |−⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum QubitLabel {
    Z0,
    Z1,
    XPlus,
    XMinus,
}

impl QubitLabel {
    pub const ALL: [QubitLabel; 4] = [
        QubitLabel::Z0,
        QubitLabel::Z1,
        QubitLabel::XPlus,
        QubitLabel::XMinus,
    ];

    pub fn basis(self) -> MeasBasis {
        match self {
            QubitLabel::Z0 | QubitLabel::Z1 => MeasBasis::Z,
            QubitLabel::XPlus | QubitLabel::XMinus => MeasBasis::X,
        }
    }

    /// Bit carried by the label: `Z0`/`XPlus` are 0, `Z1`/`XMinus` are 1.
    pub fn bit(self) -> u8 {
        match self {
            QubitLabel::Z0 | QubitLabel::XPlus => 0,
            QubitLabel::Z1 | QubitLabel::XMinus => 1,
        }
    }

    pub fn from_basis_bit(basis: MeasBasis, bit: u8) -> Self {
        basis.labels()[usize::from(bit & 1)]
    }

    /// The other label of the same basis.
    pub fn flipped(self) -> Self {
        Self::from_basis_bit(self.basis(), self.bit() ^ 1)
    }
}

impl fmt::Display for QubitLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QubitLabel::Z0 => "|0>",
            QubitLabel::Z1 => "|1>",
            QubitLabel::XPlus => "|+>",
            QubitLabel::XMinus => "|->",
        })
    }
}

/// The four Bell states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BellOutcome {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellOutcome {
    pub const ALL: [BellOutcome; 4] = [
        BellOutcome::PhiPlus,
        BellOutcome::PhiMinus,
        BellOutcome::PsiPlus,
        BellOutcome::PsiMinus,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_psi(self) -> bool {
        matches!(self, BellOutcome::PsiPlus | BellOutcome::PsiMinus)
    }

    /// Amplitudes over `|00⟩, |01⟩, |10⟩, |11⟩`.
    fn amplitudes(self) -> [Amplitude; 4] {
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let z = Complex64::new(0.0, 0.0);
        match self {
            BellOutcome::PhiPlus => [h, z, z, h],
            BellOutcome::PhiMinus => [h, z, z, -h],
            BellOutcome::PsiPlus => [z, h, h, z],
            BellOutcome::PsiMinus => [z, h, -h, z],
        }
    }
}

impl fmt::Display for BellOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BellOutcome::PhiPlus => "phi+",
            BellOutcome::PhiMinus => "phi-",
            BellOutcome::PsiPlus => "psi+",
            BellOutcome::PsiMinus => "psi-",
        })
    }
}

/// Single-qubit gates used by the protocol.
///
/// `IY` is `iσ_Y`, the real matrix `((0, 1), (−1, 0))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gate {
    PauliI,
    PauliX,
    PauliZ,
    IY,
    Hadamard,
}

impl Gate {
    pub const ALL: [Gate; 5] = [
        Gate::PauliI,
        Gate::PauliX,
        Gate::PauliZ,
        Gate::IY,
        Gate::Hadamard,
    ];

    pub fn matrix(self) -> [[Amplitude; 2]; 2] {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        match self {
            Gate::PauliI => [[one, zero], [zero, one]],
            Gate::PauliX => [[zero, one], [one, zero]],
            Gate::PauliZ => [[one, zero], [zero, -one]],
            Gate::IY => [[zero, one], [-one, zero]],
            Gate::Hadamard => [[h, h], [h, -h]],
        }
    }
}

/// Normalized amplitude vector over 1–4 qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<Amplitude>,
}

impl StateVector {
    /// Builds a state from amplitudes that must already be normalized.
    pub fn new(amps: Vec<Amplitude>) -> Result<Self> {
        let num_qubits = qubits_for_len(amps.len())?;
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(QStateError::NonFinite);
        }
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > ALGEBRA_TOL {
            return Err(QStateError::NotNormalized(norm));
        }
        Ok(Self { num_qubits, amps })
    }

    /// Builds a state from arbitrary nonzero amplitudes, rescaling to unit norm.
    pub fn normalized(mut amps: Vec<Amplitude>) -> Result<Self> {
        let num_qubits = qubits_for_len(amps.len())?;
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(QStateError::NonFinite);
        }
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(QStateError::ZeroProbability);
        }
        amps.iter_mut().for_each(|a| *a /= norm);
        Ok(Self { num_qubits, amps })
    }

    /// `|0…0⟩` on `n` qubits.
    pub fn zeros(n: usize) -> Result<Self> {
        check_capacity(n)?;
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(Self {
            num_qubits: n,
            amps,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amps(&self) -> &[Amplitude] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<Amplitude> {
        if self.num_qubits != other.num_qubits {
            return Err(QStateError::DimensionMismatch(
                self.num_qubits,
                other.num_qubits,
            ));
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Multiplies every amplitude by `phase`, which must have unit modulus.
    pub fn scaled(&self, phase: Amplitude) -> Self {
        Self {
            num_qubits: self.num_qubits,
            amps: self.amps.iter().map(|a| a * phase).collect(),
        }
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.num_qubits {
            return Err(QStateError::QubitOutOfRange {
                index: qubit,
                num_qubits: self.num_qubits,
            });
        }
        Ok(())
    }

    fn shift(&self, qubit: usize) -> usize {
        self.num_qubits - 1 - qubit
    }
}

fn check_capacity(n: usize) -> Result<()> {
    match n {
        0 => Err(QStateError::EmptyRegister),
        n if n > MAX_QUBITS => Err(QStateError::CapacityExceeded(n)),
        _ => Ok(()),
    }
}

fn qubits_for_len(len: usize) -> Result<usize> {
    if !len.is_power_of_two() || len < 2 {
        return Err(QStateError::BadLength(len));
    }
    let n = len.trailing_zeros() as usize;
    if n > MAX_QUBITS {
        return Err(QStateError::CapacityExceeded(n));
    }
    Ok(n)
}

pub fn make_single(label: QubitLabel) -> StateVector {
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let amps = match label {
        QubitLabel::Z0 => vec![one, zero],
        QubitLabel::Z1 => vec![zero, one],
        QubitLabel::XPlus => vec![h, h],
        QubitLabel::XMinus => vec![h, -h],
    };
    StateVector {
        num_qubits: 1,
        amps,
    }
}

pub fn make_bell(which: BellOutcome) -> StateVector {
    StateVector {
        num_qubits: 2,
        amps: which.amplitudes().to_vec(),
    }
}

/// Kronecker product with `a`'s qubits first.
pub fn tensor(a: &StateVector, b: &StateVector) -> Result<StateVector> {
    let n = a.num_qubits + b.num_qubits;
    if n > MAX_QUBITS {
        return Err(QStateError::CapacityExceeded(n));
    }
    let amps = a
        .amps
        .iter()
        .flat_map(|x| b.amps.iter().map(move |y| x * y))
        .collect();
    Ok(StateVector {
        num_qubits: n,
        amps,
    })
}

pub fn apply_gate(s: &StateVector, g: Gate, qubit: usize) -> Result<StateVector> {
    s.check_qubit(qubit)?;
    if g == Gate::PauliI {
        return Ok(s.clone());
    }
    let m = g.matrix();
    let mask = 1usize << s.shift(qubit);
    let mut amps = s.amps.clone();
    for i in (0..amps.len()).filter(|i| i & mask == 0) {
        let a0 = s.amps[i];
        let a1 = s.amps[i | mask];
        amps[i] = m[0][0] * a0 + m[0][1] * a1;
        amps[i | mask] = m[1][0] * a0 + m[1][1] * a1;
    }
    Ok(StateVector {
        num_qubits: s.num_qubits,
        amps,
    })
}

/// Applies gates in sequence order.
pub fn apply_gates(s: &StateVector, gates: &[Gate], qubit: usize) -> Result<StateVector> {
    gates
        .iter()
        .try_fold(s.clone(), |acc, &g| apply_gate(&acc, g, qubit))
}

/// Probability that measuring `qubit` in the Z basis yields 1.
pub fn prob_one(s: &StateVector, qubit: usize) -> Result<f64> {
    s.check_qubit(qubit)?;
    let mask = 1usize << s.shift(qubit);
    Ok(s.amps
        .iter()
        .enumerate()
        .filter(|(i, _)| i & mask != 0)
        .map(|(_, a)| a.norm_sqr())
        .sum())
}

/// Post-measurement state for a forced Z outcome on `qubit`.
pub fn project_z(s: &StateVector, qubit: usize, bit: u8) -> Result<StateVector> {
    s.check_qubit(qubit)?;
    let mask = 1usize << s.shift(qubit);
    let want = if bit & 1 == 1 { mask } else { 0 };
    let amps: Vec<_> = s
        .amps
        .iter()
        .enumerate()
        .map(|(i, a)| {
            if i & mask == want {
                *a
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>();
    if norm <= f64::EPSILON {
        return Err(QStateError::ZeroProbability);
    }
    StateVector::normalized(amps)
}

pub fn measure_z<R: Rng + ?Sized>(
    s: &StateVector,
    qubit: usize,
    rng: &mut R,
) -> Result<(u8, StateVector)> {
    let p1 = prob_one(s, qubit)?;
    let u: f64 = rng.random();
    let bit = if u < p1 { 1 } else { 0 };
    let post = project_z(s, qubit, bit)?;
    Ok((bit, post))
}

/// Born probabilities of the four Bell outcomes on `(q1, q2)`, in
/// [`BellOutcome::ALL`] order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BellDistribution(pub [f64; 4]);

impl BellDistribution {
    pub fn get(&self, outcome: BellOutcome) -> f64 {
        self.0[outcome.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = (BellOutcome, f64)> + '_ {
        BellOutcome::ALL.iter().map(move |&o| (o, self.get(o)))
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    /// Outcomes with probability above `tol`.
    pub fn support(&self, tol: f64) -> Vec<BellOutcome> {
        self.iter()
            .filter(|(_, p)| *p > tol)
            .map(|(o, _)| o)
            .collect()
    }
}

struct PairLayout {
    m1: usize,
    m2: usize,
}

impl PairLayout {
    fn new(s: &StateVector, q1: usize, q2: usize) -> Result<Self> {
        s.check_qubit(q1)?;
        s.check_qubit(q2)?;
        if q1 == q2 {
            return Err(QStateError::SameQubit(q1));
        }
        Ok(Self {
            m1: 1 << s.shift(q1),
            m2: 1 << s.shift(q2),
        })
    }

    /// Index with the pair bits set to `ab` (first qubit is the high bit).
    fn with_pair(&self, rest: usize, ab: usize) -> usize {
        let mut i = rest;
        if ab & 0b10 != 0 {
            i |= self.m1;
        }
        if ab & 0b01 != 0 {
            i |= self.m2;
        }
        i
    }

    fn rests(&self, len: usize) -> impl Iterator<Item = usize> + '_ {
        (0..len).filter(move |i| i & (self.m1 | self.m2) == 0)
    }
}

/// Projection amplitudes `c(r) = Σ_ab conj(B_ab)·amp(r, a, b)` for every
/// assignment `r` of the other qubits.
fn bell_components(
    s: &StateVector,
    layout: &PairLayout,
    outcome: BellOutcome,
) -> Vec<(usize, Amplitude)> {
    let bell = outcome.amplitudes();
    layout
        .rests(s.amps.len())
        .map(|r| {
            let c = (0..4)
                .map(|ab| bell[ab].conj() * s.amps[layout.with_pair(r, ab)])
                .sum();
            (r, c)
        })
        .collect()
}

pub fn bell_probabilities(s: &StateVector, q1: usize, q2: usize) -> Result<BellDistribution> {
    let layout = PairLayout::new(s, q1, q2)?;
    let mut probs = [0.0; 4];
    for outcome in BellOutcome::ALL {
        probs[outcome.index()] = bell_components(s, &layout, outcome)
            .iter()
            .map(|(_, c)| c.norm_sqr())
            .sum();
    }
    Ok(BellDistribution(probs))
}

/// Post-measurement state for a forced Bell outcome on `(q1, q2)`.
pub fn project_bell(
    s: &StateVector,
    q1: usize,
    q2: usize,
    outcome: BellOutcome,
) -> Result<StateVector> {
    let layout = PairLayout::new(s, q1, q2)?;
    let comps = bell_components(s, &layout, outcome);
    let weight: f64 = comps.iter().map(|(_, c)| c.norm_sqr()).sum();
    if weight <= f64::EPSILON {
        return Err(QStateError::ZeroProbability);
    }
    let bell = outcome.amplitudes();
    let mut amps = vec![Complex64::new(0.0, 0.0); s.amps.len()];
    for (r, c) in comps {
        for (ab, b) in bell.iter().enumerate() {
            amps[layout.with_pair(r, ab)] = b * c;
        }
    }
    StateVector::normalized(amps)
}

pub fn bell_measure<R: Rng + ?Sized>(
    s: &StateVector,
    q1: usize,
    q2: usize,
    rng: &mut R,
) -> Result<(BellOutcome, StateVector)> {
    let dist = bell_probabilities(s, q1, q2)?;
    let outcome = sample_index(&dist.0, rng).map(|i| BellOutcome::ALL[i]);
    // The four projectors resolve the identity, so some outcome always has weight.
    let outcome = outcome.ok_or(QStateError::ZeroProbability)?;
    let post = project_bell(s, q1, q2, outcome)?;
    Ok((outcome, post))
}

/// Draws an index from a discrete distribution; `None` only if every weight is zero.
pub(crate) fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Option<usize> {
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return None;
    }
    let u: f64 = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = None;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last = Some(i);
        if u < acc {
            return Some(i);
        }
    }
    last
}

pub fn equal_up_to_global_phase(a: &StateVector, b: &StateVector, tol: f64) -> Result<bool> {
    Ok(a.inner(b)?.norm() >= 1.0 - tol)
}

/// Bloch vector `(⟨σ_X⟩, ⟨σ_Y⟩, ⟨σ_Z⟩)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }
}

/// Bloch vector of the reduced state of `qubit`, valid for entangled registers.
pub fn reduced_bloch(s: &StateVector, qubit: usize) -> Result<BlochVector> {
    s.check_qubit(qubit)?;
    let mask = 1usize << s.shift(qubit);
    // ρ01 = Σ_r amp(r,0)·conj(amp(r,1)); ⟨X⟩ = 2 Re ρ01, ⟨Y⟩ = −2 Im ρ01.
    let mut rho01 = Complex64::new(0.0, 0.0);
    let mut p0 = 0.0;
    let mut p1 = 0.0;
    for i in (0..s.amps.len()).filter(|i| i & mask == 0) {
        let a0 = s.amps[i];
        let a1 = s.amps[i | mask];
        rho01 += a0 * a1.conj();
        p0 += a0.norm_sqr();
        p1 += a1.norm_sqr();
    }
    Ok(BlochVector {
        x: 2.0 * rho01.re,
        y: -2.0 * rho01.im,
        z: p0 - p1,
    })
}

/// Running mean of Bloch vectors.
#[derive(Debug, Clone, Default)]
pub struct BlochAccumulator {
    sum: BlochVector,
    count: usize,
}

impl BlochAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, v: BlochVector) {
        self.sum.x += v.x;
        self.sum.y += v.y;
        self.sum.z += v.z;
        self.count += 1;
    }

    /// Adds a pure single-qubit sample.
    pub fn add_state(&mut self, s: &StateVector) -> Result<()> {
        if s.num_qubits != 1 {
            return Err(QStateError::NotSingleQubit(s.num_qubits));
        }
        self.add(reduced_bloch(s, 0)?);
        Ok(())
    }

    /// Adds the reduced state of one qubit inside a larger register.
    pub fn add_reduced(&mut self, s: &StateVector, qubit: usize) -> Result<()> {
        self.add(reduced_bloch(s, qubit)?);
        Ok(())
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn mean(&self) -> Result<BlochVector> {
        if self.count == 0 {
            return Err(QStateError::EmptySamples);
        }
        let n = self.count as f64;
        Ok(BlochVector {
            x: self.sum.x / n,
            y: self.sum.y / n,
            z: self.sum.z / n,
        })
    }
}

pub fn bloch_accumulate<'a, I>(samples: I) -> Result<BlochVector>
where
    I: IntoIterator<Item = &'a StateVector>,
{
    let mut acc = BlochAccumulator::new();
    for s in samples {
        acc.add_state(s)?;
    }
    acc.mean()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use proptest::prelude::*;
    use rand::Rng;

    const H: f64 = FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> Amplitude {
        Complex64::new(re, im)
    }

    fn approx_amps(s: &StateVector, want: &[(f64, f64)]) {
        assert_eq!(s.amps().len(), want.len());
        for (a, &(re, im)) in s.amps().iter().zip(want) {
            assert!(
                (a.re - re).abs() < 1e-12 && (a.im - im).abs() < 1e-12,
                "{s:?} vs {want:?}"
            );
        }
    }

    #[test]
    fn singles() {
        approx_amps(&make_single(QubitLabel::Z0), &[(1.0, 0.0), (0.0, 0.0)]);
        approx_amps(&make_single(QubitLabel::XPlus), &[(H, 0.0), (H, 0.0)]);
        approx_amps(&make_single(QubitLabel::XMinus), &[(H, 0.0), (-H, 0.0)]);
    }

    #[test]
    fn label_conventions() {
        for l in QubitLabel::ALL {
            assert_eq!(QubitLabel::from_basis_bit(l.basis(), l.bit()), l);
            assert_eq!(l.flipped().basis(), l.basis());
            assert_ne!(l.flipped(), l);
        }
        assert_eq!(QubitLabel::XPlus.bit(), 0);
        assert_eq!(QubitLabel::XMinus.bit(), 1);
    }

    #[test]
    fn bell_states() {
        let z = (0.0, 0.0);
        approx_amps(
            &make_bell(BellOutcome::PsiMinus),
            &[z, (H, 0.0), (-H, 0.0), z],
        );
        approx_amps(
            &make_bell(BellOutcome::PhiPlus),
            &[(H, 0.0), z, z, (H, 0.0)],
        );
        for a in BellOutcome::ALL {
            for b in BellOutcome::ALL {
                let ip = make_bell(a).inner(&make_bell(b)).unwrap().norm();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((ip - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn tensor_examples() {
        let zero = make_single(QubitLabel::Z0);
        let t = tensor(&zero, &zero).unwrap();
        approx_amps(&t, &[(1.0, 0.0), (0.0, 0.0), (0.0, 0.0), (0.0, 0.0)]);

        // |ψ⁻⟩⊗|0⟩ = (|010⟩ − |100⟩)/√2: indices 2 and 4.
        let t = tensor(&make_bell(BellOutcome::PsiMinus), &zero).unwrap();
        let z = (0.0, 0.0);
        approx_amps(&t, &[z, z, (H, 0.0), z, (-H, 0.0), z, z, z]);

        let three = tensor(&t, &zero).unwrap();
        assert_eq!(three.num_qubits(), 4);
        assert_eq!(
            tensor(&three, &zero).unwrap_err(),
            QStateError::CapacityExceeded(5)
        );
    }

    #[test]
    fn gate_examples() {
        let s = apply_gate(&make_single(QubitLabel::Z0), Gate::IY, 0).unwrap();
        approx_amps(&s, &[(0.0, 0.0), (-1.0, 0.0)]);
        let s = apply_gate(&make_single(QubitLabel::XPlus), Gate::Hadamard, 0).unwrap();
        assert!(equal_up_to_global_phase(&s, &make_single(QubitLabel::Z0), 1e-12).unwrap());
        let bell = make_bell(BellOutcome::PsiPlus);
        assert_eq!(apply_gate(&bell, Gate::PauliI, 1).unwrap(), bell);
        assert!(matches!(
            apply_gate(&bell, Gate::PauliX, 2),
            Err(QStateError::QubitOutOfRange {
                index: 2,
                num_qubits: 2
            })
        ));
    }

    #[test]
    fn gates_are_unitary() {
        for g in Gate::ALL {
            let m = g.matrix();
            for i in 0..2 {
                for j in 0..2 {
                    let v: Amplitude = (0..2).map(|k| m[k][i].conj() * m[k][j]).sum();
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((v - c(want, 0.0)).norm() < 1e-12, "{g:?}");
                }
            }
        }
    }

    #[test]
    fn construction_rejects_bad_input() {
        assert_eq!(
            StateVector::new(vec![c(1.0, 0.0); 3]).unwrap_err(),
            QStateError::BadLength(3)
        );
        assert!(matches!(
            StateVector::new(vec![c(1.0, 0.0), c(1.0, 0.0)]),
            Err(QStateError::NotNormalized(_))
        ));
        assert_eq!(
            StateVector::new(vec![c(f64::NAN, 0.0), c(0.0, 0.0)]).unwrap_err(),
            QStateError::NonFinite
        );
        assert_eq!(
            StateVector::new(vec![c(1.0, 0.0); 32]).unwrap_err(),
            QStateError::CapacityExceeded(5)
        );
    }

    #[test]
    fn measure_z_eigenstate_and_idempotence() {
        let mut rng = stream(1, 0);
        let one = make_single(QubitLabel::Z1);
        for _ in 0..100 {
            let (b, post) = measure_z(&one, 0, &mut rng).unwrap();
            assert_eq!(b, 1);
            assert_eq!(post, one);
        }
        let plus = make_single(QubitLabel::XPlus);
        for _ in 0..100 {
            let (b, post) = measure_z(&plus, 0, &mut rng).unwrap();
            assert_eq!(prob_one(&post, 0).unwrap(), f64::from(b));
            let (b2, _) = measure_z(&post, 0, &mut rng).unwrap();
            assert_eq!(b, b2);
        }
    }

    #[test]
    fn measure_z_plus_frequency() {
        let mut rng = stream(7, 0);
        let plus = make_single(QubitLabel::XPlus);
        let zeros = (0..10_000)
            .filter(|_| measure_z(&plus, 0, &mut rng).unwrap().0 == 0)
            .count();
        let f = zeros as f64 / 1e4;
        assert!((f - 0.5).abs() <= 0.02, "{f}");
    }

    #[test]
    fn bell_measure_examples() {
        let mut rng = stream(3, 0);
        let zz = tensor(&make_single(QubitLabel::Z0), &make_single(QubitLabel::Z0)).unwrap();
        for _ in 0..200 {
            let (o, post) = bell_measure(&zz, 0, 1, &mut rng).unwrap();
            assert!(!o.is_psi());
            assert!(equal_up_to_global_phase(&post, &make_bell(o), 1e-12).unwrap());
        }
        let d = bell_probabilities(&zz, 0, 1).unwrap();
        assert!((d.get(BellOutcome::PhiPlus) - 0.5).abs() < 1e-12);
        assert!((d.get(BellOutcome::PhiMinus) - 0.5).abs() < 1e-12);

        let psi0 = tensor(
            &make_bell(BellOutcome::PsiMinus),
            &make_single(QubitLabel::Z0),
        )
        .unwrap();
        let d = bell_probabilities(&psi0, 1, 2).unwrap();
        for (_, p) in d.iter() {
            assert!((p - 0.25).abs() < 1e-12);
        }
        let pz = tensor(
            &make_single(QubitLabel::XPlus),
            &make_single(QubitLabel::Z0),
        )
        .unwrap();
        for (_, p) in bell_probabilities(&pz, 0, 1).unwrap().iter() {
            assert!((p - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn bell_probability_examples() {
        let pm = tensor(
            &make_single(QubitLabel::XPlus),
            &make_single(QubitLabel::XMinus),
        )
        .unwrap();
        let d = bell_probabilities(&pm, 0, 1).unwrap();
        assert!((d.get(BellOutcome::PhiMinus) - 0.5).abs() < 1e-12);
        assert!((d.get(BellOutcome::PsiMinus) - 0.5).abs() < 1e-12);
        assert!(d.get(BellOutcome::PhiPlus).abs() < 1e-12);
        assert!(d.get(BellOutcome::PsiPlus).abs() < 1e-12);

        let m1 = tensor(
            &make_single(QubitLabel::XMinus),
            &make_single(QubitLabel::Z1),
        )
        .unwrap();
        for (_, p) in bell_probabilities(&m1, 0, 1).unwrap().iter() {
            assert!((p - 0.25).abs() < 1e-12);
        }
        let d = bell_probabilities(&make_bell(BellOutcome::PsiMinus), 0, 1).unwrap();
        assert!((d.get(BellOutcome::PsiMinus) - 1.0).abs() < 1e-12);
        // reversed pair order picks up a sign on ψ⁻ but not its probability
        let d = bell_probabilities(&make_bell(BellOutcome::PsiMinus), 1, 0).unwrap();
        assert!((d.get(BellOutcome::PsiMinus) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bell_measure_index_errors() {
        let mut rng = stream(0, 0);
        let s = make_bell(BellOutcome::PhiPlus);
        assert_eq!(
            bell_measure(&s, 1, 1, &mut rng).unwrap_err(),
            QStateError::SameQubit(1)
        );
        assert!(matches!(
            bell_probabilities(&s, 0, 3),
            Err(QStateError::QubitOutOfRange { index: 3, .. })
        ));
    }

    #[test]
    fn phase_comparison() {
        let one = make_single(QubitLabel::Z1);
        assert!(equal_up_to_global_phase(&one, &one.scaled(c(-1.0, 0.0)), 1e-9).unwrap());
        assert!(!equal_up_to_global_phase(&make_single(QubitLabel::Z0), &one, 1e-9).unwrap());
        let plus = make_single(QubitLabel::XPlus);
        assert!(equal_up_to_global_phase(&plus, &plus.scaled(c(0.0, 1.0)), 1e-9).unwrap());
        assert_eq!(
            equal_up_to_global_phase(&plus, &make_bell(BellOutcome::PhiPlus), 1e-9).unwrap_err(),
            QStateError::DimensionMismatch(1, 2)
        );
    }

    #[test]
    fn bloch_examples() {
        let zeros = vec![make_single(QubitLabel::Z0); 5];
        let v = bloch_accumulate(&zeros).unwrap();
        assert_eq!((v.x, v.y, v.z), (0.0, 0.0, 1.0));

        let mix: Vec<_> = QubitLabel::ALL.iter().map(|&l| make_single(l)).collect();
        assert!(bloch_accumulate(&mix).unwrap().norm() < 1e-12);

        assert_eq!(
            bloch_accumulate(std::iter::empty()).unwrap_err(),
            QStateError::EmptySamples
        );
        assert_eq!(
            bloch_accumulate(&[make_bell(BellOutcome::PhiPlus)]).unwrap_err(),
            QStateError::NotSingleQubit(2)
        );

        let mut rng = stream(11, 0);
        let drawn: Vec<_> = (0..10_000)
            .map(|_| make_single(QubitLabel::ALL[rng.random_range(0..4)]))
            .collect();
        assert!(bloch_accumulate(&drawn).unwrap().norm() < 0.05);
    }

    #[test]
    fn reduced_bloch_of_bell_half_is_zero() {
        let s = make_bell(BellOutcome::PsiMinus);
        assert!(reduced_bloch(&s, 0).unwrap().norm() < 1e-12);
        assert!(reduced_bloch(&s, 1).unwrap().norm() < 1e-12);
        let y = StateVector::new(vec![c(H, 0.0), c(0.0, H)]).unwrap();
        let b = reduced_bloch(&y, 0).unwrap();
        assert!((b.y - 1.0).abs() < 1e-12);
    }

    fn arb_state() -> impl Strategy<Value = StateVector> {
        (1usize..=4).prop_flat_map(|n| {
            prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1 << n)
                .prop_filter_map("nonzero", |v| {
                    StateVector::normalized(v.into_iter().map(|(r, i)| c(r, i)).collect()).ok()
                })
        })
    }

    fn label() -> impl Strategy<Value = QubitLabel> {
        prop::sample::select(QubitLabel::ALL.to_vec())
    }

    proptest! {
        #[test]
        fn gates_preserve_norm(s in arb_state(), g in prop::sample::select(Gate::ALL.to_vec()), q in 0usize..4) {
            let q = q % s.num_qubits();
            let out = apply_gate(&s, g, q).unwrap();
            prop_assert!((out.norm_sqr() - 1.0).abs() < 1e-9);
        }

        #[test]
        fn tensor_preserves_norm(a in arb_state(), b in arb_state()) {
            if let Ok(t) = tensor(&a, &b) {
                prop_assert!((t.norm_sqr() - 1.0).abs() < 1e-9);
            } else {
                prop_assert!(a.num_qubits() + b.num_qubits() > MAX_QUBITS);
            }
        }

        #[test]
        fn bell_probabilities_complete(s in arb_state(), q1 in 0usize..4, q2 in 0usize..4) {
            let n = s.num_qubits();
            prop_assume!(n >= 2);
            let (q1, q2) = (q1 % n, q2 % n);
            prop_assume!(q1 != q2);
            let d = bell_probabilities(&s, q1, q2).unwrap();
            prop_assert!(d.0.iter().all(|&p| p >= 0.0));
            prop_assert!((d.total() - 1.0).abs() < 1e-9);
        }

        #[test]
        fn label_pairs_complete(a in label(), b in label()) {
            let s = tensor(&make_single(a), &make_single(b)).unwrap();
            let d = bell_probabilities(&s, 0, 1).unwrap();
            prop_assert!((d.total() - 1.0).abs() < 1e-9);
        }

        #[test]
        fn measurement_is_deterministic(s in arb_state(), seed in any::<u64>()) {
            let run = |seed| {
                let mut rng = stream(seed, 9);
                (0..s.num_qubits()).map(|q| measure_z(&s, q, &mut rng).unwrap().0).collect::<Vec<_>>()
            };
            prop_assert_eq!(run(seed), run(seed));
        }
    }

    #[test]
    fn bell_sampling_matches_probabilities() {
        // Deterministic schedule: a fixed non-trivial 3-qubit state.
        let s = StateVector::normalized(vec![
            c(0.3, 0.1),
            c(-0.2, 0.4),
            c(0.5, 0.0),
            c(0.1, -0.3),
            c(0.0, 0.2),
            c(0.25, 0.25),
            c(-0.4, 0.1),
            c(0.2, 0.0),
        ])
        .unwrap();
        let exact = bell_probabilities(&s, 0, 2).unwrap();
        let mut rng = stream(2024, 0);
        let mut counts = [0usize; 4];
        for _ in 0..10_000 {
            counts[bell_measure(&s, 0, 2, &mut rng).unwrap().0.index()] += 1;
        }
        for o in BellOutcome::ALL {
            let f = counts[o.index()] as f64 / 1e4;
            assert!(
                (f - exact.get(o)).abs() <= 0.02,
                "{o}: {f} vs {}",
                exact.get(o)
            );
        }
    }
}
