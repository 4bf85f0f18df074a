//! Statevector simulation of a gate-model circuit built from Pauli-string
//! rotations `U(θ) = exp(-iθP)`.
//!
//! Qubit `q` is bit `q` of a basis index `z` (qubit 0 is the least
//! significant bit). The same convention is used by [`crate::pathway`].

use std::fmt;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::{self, Deserializer};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pathway::ObjectiveSpec;
use crate::scalar::{lit, Real};

/// Simulations above this width are refused.
pub const MAX_QUBITS: usize = 24;

const NORM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn from_char(c: char) -> Option<Self> {
        match c {
            'I' | 'i' => Some(Pauli::I),
            'X' | 'x' => Some(Pauli::X),
            'Y' | 'y' => Some(Pauli::Y),
            'Z' | 'z' => Some(Pauli::Z),
            _ => None,
        }
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        };
        write!(f, "{c}")
    }
}

/// Tensor product of single-qubit Paulis; `ops[q]` acts on qubit `q`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    ops: Vec<Pauli>,
    x_mask: usize,
    z_mask: usize,
    y_count: u32,
}

impl PauliString {
    pub fn new(ops: Vec<Pauli>) -> Result<Self> {
        if ops.is_empty() {
            return Err(Error::InvalidInput("Pauli string needs at least one qubit".into()));
        }
        if ops.len() > MAX_QUBITS {
            return Err(Error::InvalidInput(format!(
                "Pauli string on {} qubits exceeds the {MAX_QUBITS}-qubit limit",
                ops.len()
            )));
        }
        let mut x_mask = 0;
        let mut z_mask = 0;
        let mut y_count = 0;
        for (q, op) in ops.iter().enumerate() {
            match op {
                Pauli::I => {}
                Pauli::X => x_mask |= 1 << q,
                Pauli::Z => z_mask |= 1 << q,
                Pauli::Y => {
                    x_mask |= 1 << q;
                    z_mask |= 1 << q;
                    y_count += 1;
                }
            }
        }
        Ok(PauliString {
            ops,
            x_mask,
            z_mask,
            y_count,
        })
    }

    /// Parses a label such as `"XZI"`; character `q` acts on qubit `q`.
    pub fn parse(label: &str) -> Result<Self> {
        let ops = label
            .chars()
            .map(|c| {
                Pauli::from_char(c)
                    .ok_or_else(|| Error::InvalidInput(format!("bad Pauli character {c:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(ops)
    }

    /// A single non-identity factor on `qubit`.
    pub fn single(qubit_count: usize, qubit: usize, op: Pauli) -> Result<Self> {
        Self::sparse(qubit_count, &[(qubit, op)])
    }

    /// Identity everywhere except the listed `(qubit, op)` factors.
    pub fn sparse(qubit_count: usize, factors: &[(usize, Pauli)]) -> Result<Self> {
        let mut ops = vec![Pauli::I; qubit_count];
        for &(q, op) in factors {
            if q >= qubit_count {
                return Err(Error::InvalidInput(format!(
                    "qubit {q} out of range for {qubit_count} qubits"
                )));
            }
            ops[q] = op;
        }
        Self::new(ops)
    }

    pub fn qubit_count(&self) -> usize {
        self.ops.len()
    }

    pub fn ops(&self) -> &[Pauli] {
        &self.ops
    }

    /// A pure-identity generator only contributes a global phase.
    pub fn is_identity(&self) -> bool {
        self.x_mask == 0 && self.z_mask == 0
    }

    /// Computes `P·state`.
    pub fn apply<T: Real>(&self, state: &StateVector<T>) -> Result<StateVector<T>> {
        self.check_width(state)?;
        let mut out = vec![Complex::new(T::zero(), T::zero()); state.dim()];
        for (z, &amp) in state.amplitudes.iter().enumerate() {
            out[z ^ self.x_mask] = amp * self.phase::<T>(z);
        }
        Ok(StateVector { amplitudes: out })
    }

    /// Phase picked up by basis state `|z⟩`: `P|z⟩ = phase(z)·|z ⊕ x_mask⟩`.
    fn phase<T: Real>(&self, z: usize) -> Complex<T> {
        // Y = iXZ, so each Y contributes a factor i on top of the Z sign.
        let negative = (z & self.z_mask).count_ones() % 2 == 1;
        let (re, im) = match self.y_count % 4 {
            0 => (T::one(), T::zero()),
            1 => (T::zero(), T::one()),
            2 => (-T::one(), T::zero()),
            _ => (T::zero(), -T::one()),
        };
        let p = Complex::new(re, im);
        if negative {
            -p
        } else {
            p
        }
    }

    fn check_width<T: Real>(&self, state: &StateVector<T>) -> Result<()> {
        if state.qubit_count() != self.qubit_count() {
            return Err(Error::dim(
                "Pauli generator width",
                state.qubit_count(),
                self.qubit_count(),
            ));
        }
        Ok(())
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for op in &self.ops {
            write!(f, "{op}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GateSpec {
    pub generator: PauliString,
    pub parameter_index: usize,
}

/// Ordered gates `U_1 … U_L`; `gates[0]` is applied first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GateSequence {
    qubit_count: usize,
    parameter_count: usize,
    gates: Vec<GateSpec>,
}

impl GateSequence {
    pub fn new(qubit_count: usize, parameter_count: usize, gates: Vec<GateSpec>) -> Result<Self> {
        if qubit_count == 0 || qubit_count > MAX_QUBITS {
            return Err(Error::InvalidInput(format!(
                "qubit count {qubit_count} outside 1..={MAX_QUBITS}"
            )));
        }
        for (k, gate) in gates.iter().enumerate() {
            if gate.generator.qubit_count() != qubit_count {
                return Err(Error::dim(
                    "gate generator width",
                    qubit_count,
                    gate.generator.qubit_count(),
                ));
            }
            if gate.parameter_index >= parameter_count {
                return Err(Error::InvalidInput(format!(
                    "gate {k} uses parameter {} but only {parameter_count} exist",
                    gate.parameter_index
                )));
            }
        }
        Ok(GateSequence {
            qubit_count,
            parameter_count,
            gates,
        })
    }

    /// One parameter per gate, in order.
    pub fn per_gate(qubit_count: usize, generators: Vec<PauliString>) -> Result<Self> {
        let n = generators.len();
        let gates = generators
            .into_iter()
            .enumerate()
            .map(|(k, generator)| GateSpec {
                generator,
                parameter_index: k,
            })
            .collect();
        Self::new(qubit_count, n, gates)
    }

    pub fn qubit_count(&self) -> usize {
        self.qubit_count
    }

    /// Length `L` of the parameter vector this sequence consumes.
    pub fn parameter_count(&self) -> usize {
        self.parameter_count
    }

    pub fn gates(&self) -> &[GateSpec] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// Indices of gates whose generator is the identity (global phase only).
    pub fn identity_gates(&self) -> Vec<usize> {
        self.gates
            .iter()
            .enumerate()
            .filter(|(_, g)| g.generator.is_identity())
            .map(|(k, _)| k)
            .collect()
    }
}

/// Gate parameter vector `θ`, in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GateParameterVector<T>(Vec<T>);

impl<T: Real> GateParameterVector<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput("gate parameters must be finite".into()));
        }
        Ok(GateParameterVector(values))
    }

    pub fn zeros(len: usize) -> Self {
        GateParameterVector(vec![T::zero(); len])
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Normalized amplitude vector over `2^n` basis states.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector<T> {
    amplitudes: Vec<Complex<T>>,
}

impl<T: Real> StateVector<T> {
    /// Checks length is a power of two and the norm is 1 within `1e-10`.
    pub fn from_amplitudes(amplitudes: Vec<Complex<T>>) -> Result<Self> {
        let dim = amplitudes.len();
        if dim < 2 || !dim.is_power_of_two() {
            return Err(Error::InvalidInput(format!(
                "amplitude count {dim} is not a power of two >= 2"
            )));
        }
        if dim.trailing_zeros() as usize > MAX_QUBITS {
            return Err(Error::InvalidInput("state too wide".into()));
        }
        let state = StateVector { amplitudes };
        let err = (state.norm() - T::one()).abs();
        if !(err <= lit(NORM_TOL)) {
            return Err(Error::InvalidInput(format!(
                "state norm deviates from 1 by {:e}",
                err.to_f64().unwrap_or(f64::NAN)
            )));
        }
        Ok(state)
    }

    /// Rescales arbitrary nonzero amplitudes to unit norm.
    pub fn normalized(amplitudes: Vec<Complex<T>>) -> Result<Self> {
        let n = amplitudes
            .iter()
            .fold(T::zero(), |acc, a| acc + a.norm_sqr())
            .sqrt();
        if !(n > T::zero()) || !n.is_finite() {
            return Err(Error::InvalidInput("cannot normalize a zero vector".into()));
        }
        Self::from_amplitudes(amplitudes.into_iter().map(|a| a / n).collect())
    }

    /// Computational basis state `|z⟩`.
    pub fn basis(qubit_count: usize, z: usize) -> Result<Self> {
        if qubit_count == 0 || qubit_count > MAX_QUBITS {
            return Err(Error::InvalidInput(format!(
                "qubit count {qubit_count} outside 1..={MAX_QUBITS}"
            )));
        }
        let dim = 1usize << qubit_count;
        if z >= dim {
            return Err(Error::InvalidInput(format!("basis index {z} >= {dim}")));
        }
        let mut amplitudes = vec![Complex::new(T::zero(), T::zero()); dim];
        amplitudes[z] = Complex::new(T::one(), T::zero());
        Ok(StateVector { amplitudes })
    }

    /// `|0…0⟩`.
    pub fn zero_state(qubit_count: usize) -> Result<Self> {
        Self::basis(qubit_count, 0)
    }

    /// Equal superposition of all basis states.
    pub fn uniform(qubit_count: usize) -> Result<Self> {
        let mut s = Self::basis(qubit_count, 0)?;
        let a = T::one() / crate::scalar::from_usize::<T>(s.dim()).sqrt();
        s.amplitudes.iter_mut().for_each(|x| *x = Complex::new(a, T::zero()));
        Ok(s)
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn qubit_count(&self) -> usize {
        self.amplitudes.len().trailing_zeros() as usize
    }

    pub fn norm(&self) -> T {
        self.amplitudes
            .iter()
            .fold(T::zero(), |acc, a| acc + a.norm_sqr())
            .sqrt()
    }

    /// Born probabilities `|amplitude(z)|²`.
    pub fn probabilities(&self) -> Vec<T> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Multiplies every amplitude by `e^{iφ}`.
    pub fn with_global_phase(&self, phi: T) -> Self {
        let p = Complex::new(phi.cos(), phi.sin());
        StateVector {
            amplitudes: self.amplitudes.iter().map(|&a| a * p).collect(),
        }
    }

    /// Largest per-amplitude modulus of the difference.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .fold(T::zero(), |m, (a, b)| { let d = *a - *b; m.max((d.re * d.re + d.im * d.im).sqrt()) })
    }
}

impl<T: Real + Serialize> Serialize for StateVector<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.amplitudes.len()))?;
        for a in &self.amplitudes {
            seq.serialize_element(&[a.re, a.im])?;
        }
        seq.end()
    }
}

impl<'de, T: Real + Deserialize<'de>> Deserialize<'de> for StateVector<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let pairs: Vec<[T; 2]> = Vec::deserialize(deserializer)?;
        let amplitudes = pairs.into_iter().map(|[re, im]| Complex::new(re, im)).collect();
        StateVector::from_amplitudes(amplitudes).map_err(de::Error::custom)
    }
}

/// `exp(-i·angle·P)·state = cos(angle)·state − i·sin(angle)·P·state`.
pub fn apply_pauli_rotation<T: Real>(
    state: &StateVector<T>,
    generator: &PauliString,
    angle: T,
) -> Result<StateVector<T>> {
    generator.check_width(state)?;
    let mut out = state.clone();
    rotate_in_place(&mut out.amplitudes, generator, angle);
    Ok(out)
}

fn rotate_in_place<T: Real>(amps: &mut [Complex<T>], generator: &PauliString, angle: T) {
    let c = angle.cos();
    let s = angle.sin();
    let minus_i_sin = Complex::new(T::zero(), -s);
    let flip = generator.x_mask;
    if flip == 0 {
        // Diagonal generator: each amplitude only picks up a phase.
        for (z, a) in amps.iter_mut().enumerate() {
            *a = *a * c + minus_i_sin * generator.phase::<T>(z) * *a;
        }
        return;
    }
    // Off-diagonal: amplitudes mix in pairs (z, z ⊕ flip). Visit each pair once.
    let top = 1usize << (usize::BITS - 1 - flip.leading_zeros());
    for z in 0..amps.len() {
        if z & top != 0 {
            continue;
        }
        let w = z ^ flip;
        let (az, aw) = (amps[z], amps[w]);
        // (P·a)[w] = phase(z)·a[z], (P·a)[z] = phase(w)·a[w]
        amps[z] = az * c + minus_i_sin * generator.phase::<T>(w) * aw;
        amps[w] = aw * c + minus_i_sin * generator.phase::<T>(z) * az;
    }
}

/// Applies `U_L(θ_L)…U_1(θ_1)` to `input`.
pub fn build_state<T: Real>(
    seq: &GateSequence,
    theta: &GateParameterVector<T>,
    input: &StateVector<T>,
) -> Result<StateVector<T>> {
    if theta.len() != seq.parameter_count() {
        return Err(Error::dim("parameter vector length", seq.parameter_count(), theta.len()));
    }
    if input.qubit_count() != seq.qubit_count() {
        return Err(Error::dim("input state width", seq.qubit_count(), input.qubit_count()));
    }
    let mut amps = input.amplitudes.clone();
    for gate in &seq.gates {
        rotate_in_place(&mut amps, &gate.generator, theta.as_slice()[gate.parameter_index]);
    }
    Ok(StateVector { amplitudes: amps })
}

/// [`build_state`] on the default input `|0…0⟩`.
pub fn build_state_from_zero<T: Real>(
    seq: &GateSequence,
    theta: &GateParameterVector<T>,
) -> Result<StateVector<T>> {
    build_state(seq, theta, &StateVector::zero_state(seq.qubit_count())?)
}

/// Exact expectation `Σ_z |amplitude(z)|²·C(z)`.
pub fn objective_value<T: Real>(state: &StateVector<T>, objective: &ObjectiveSpec<T>) -> Result<T> {
    check_objective_width(state, objective)?;
    Ok(state
        .amplitudes
        .iter()
        .enumerate()
        .fold(T::zero(), |acc, (z, a)| acc + a.norm_sqr() * objective.value(z)))
}

pub(crate) fn check_objective_width<T: Real>(
    state: &StateVector<T>,
    objective: &ObjectiveSpec<T>,
) -> Result<()> {
    if state.qubit_count() != objective.qubit_count() {
        return Err(Error::dim("objective width", objective.qubit_count(), state.qubit_count()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementSample {
    pub bitstring: usize,
    pub count: u64,
}

/// Draws `shots` computational-basis outcomes; samples are sorted by bitstring
/// and only outcomes with nonzero count are listed.
pub fn measure<T: Real>(state: &StateVector<T>, shots: u64, seed: u64) -> Result<Vec<MeasurementSample>> {
    if shots == 0 {
        return Err(Error::InvalidInput("shots must be >= 1".into()));
    }
    let mut cumulative = Vec::with_capacity(state.dim());
    let mut acc = 0.0f64;
    for p in state.probabilities() {
        acc += p.to_f64().unwrap_or(0.0);
        cumulative.push(acc);
    }
    let total = acc;
    let mut counts = vec![0u64; state.dim()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..shots {
        let u: f64 = rng.random::<f64>() * total;
        let z = cumulative.partition_point(|&c| c <= u).min(state.dim() - 1);
        counts[z] += 1;
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .filter(|&(_, c)| c > 0)
        .map(|(bitstring, count)| MeasurementSample { bitstring, count })
        .collect())
}

/// Empirical mean of `C(z)` over a shot batch.
pub fn sampled_objective<T: Real>(samples: &[MeasurementSample], objective: &ObjectiveSpec<T>) -> T {
    let shots: u64 = samples.iter().map(|s| s.count).sum();
    if shots == 0 {
        return T::zero();
    }
    let sum = samples.iter().fold(T::zero(), |acc, s| {
        acc + objective.value(s.bitstring) * crate::scalar::lit::<T>(s.count as f64)
    });
    sum / lit::<T>(shots as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pathway::{ConnectivityGraph, ObjectiveSpec};
    use std::f64::consts::{FRAC_PI_2, PI};

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn single_edge() -> ObjectiveSpec<f64> {
        ObjectiveSpec::maxcut(ConnectivityGraph::new(2, vec![(0, 1)]).unwrap())
    }

    #[test]
    fn z_rotation_of_zero_is_a_phase() {
        let s = StateVector::<f64>::zero_state(1).unwrap();
        let out = apply_pauli_rotation(&s, &PauliString::parse("Z").unwrap(), FRAC_PI_2).unwrap();
        assert!((out.amplitudes()[0] - c(0.0, -1.0)).norm() < 1e-15);
        assert!(out.amplitudes()[1].norm() < 1e-15);
    }

    #[test]
    fn x_rotation_flips() {
        let s = StateVector::<f64>::zero_state(1).unwrap();
        let out = apply_pauli_rotation(&s, &PauliString::parse("X").unwrap(), FRAC_PI_2).unwrap();
        assert!(out.amplitudes()[0].norm() < 1e-15);
        assert!((out.amplitudes()[1] - c(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn zero_angle_is_identity() {
        let s = StateVector::normalized(vec![c(0.3, 0.1), c(-0.2, 0.5), c(0.7, 0.0), c(0.0, -0.4)]).unwrap();
        for label in ["XZ", "YY", "IZ", "XI"] {
            let out = apply_pauli_rotation(&s, &PauliString::parse(label).unwrap(), 0.0).unwrap();
            assert!(out.max_abs_diff(&s) < 1e-15);
        }
    }

    #[test]
    fn y_action_matches_definition() {
        // Y|0⟩ = i|1⟩, Y|1⟩ = −i|0⟩
        let y = PauliString::parse("Y").unwrap();
        let a = y.apply(&StateVector::<f64>::basis(1, 0).unwrap()).unwrap();
        assert!((a.amplitudes()[1] - c(0.0, 1.0)).norm() < 1e-15);
        let b = y.apply(&StateVector::<f64>::basis(1, 1).unwrap()).unwrap();
        assert!((b.amplitudes()[0] - c(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn width_mismatch_is_rejected() {
        let s = StateVector::<f64>::zero_state(2).unwrap();
        let err = apply_pauli_rotation(&s, &PauliString::parse("X").unwrap(), 0.1).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn empty_sequence_returns_input() {
        let seq = GateSequence::new(2, 0, vec![]).unwrap();
        let s = StateVector::<f64>::zero_state(2).unwrap();
        let out = build_state(&seq, &GateParameterVector::zeros(0), &s).unwrap();
        assert_eq!(out, s);
    }

    #[test]
    fn single_z_rotation_by_pi() {
        let seq = GateSequence::per_gate(1, vec![PauliString::parse("Z").unwrap()]).unwrap();
        let theta = GateParameterVector::new(vec![PI]).unwrap();
        let out = build_state_from_zero(&seq, &theta).unwrap();
        // e^{-iπ} = -1
        assert!((out.amplitudes()[0] - c(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn parameter_length_mismatch() {
        let seq = GateSequence::per_gate(1, vec![PauliString::parse("Z").unwrap()]).unwrap();
        let theta = GateParameterVector::new(vec![0.1, 0.2]).unwrap();
        assert!(matches!(
            build_state_from_zero(&seq, &theta),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn gate_parameter_index_out_of_range() {
        let gate = GateSpec {
            generator: PauliString::parse("X").unwrap(),
            parameter_index: 3,
        };
        assert!(GateSequence::new(1, 2, vec![gate]).is_err());
    }

    #[test]
    fn identity_generators_are_flagged() {
        let seq = GateSequence::per_gate(
            2,
            vec![PauliString::parse("XI").unwrap(), PauliString::parse("II").unwrap()],
        )
        .unwrap();
        assert_eq!(seq.identity_gates(), vec![1]);
    }

    #[test]
    fn maxcut_single_edge_values() {
        let obj = single_edge();
        // |01⟩: qubit 0 set, qubit 1 clear
        let s01 = StateVector::<f64>::basis(2, 0b01).unwrap();
        assert_eq!(objective_value(&s01, &obj).unwrap(), 1.0);
        let s00 = StateVector::<f64>::zero_state(2).unwrap();
        assert_eq!(objective_value(&s00, &obj).unwrap(), 0.0);
        let u = StateVector::<f64>::uniform(2).unwrap();
        assert!((objective_value(&u, &obj).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn measurement_of_basis_state_is_deterministic() {
        let s = StateVector::<f64>::basis(1, 1).unwrap();
        let m = measure(&s, 100, 9).unwrap();
        assert_eq!(m, vec![MeasurementSample { bitstring: 1, count: 100 }]);
    }

    #[test]
    fn measurement_frequencies_concentrate() {
        // 5σ for p = 1/2, n = 1e5 is 5·sqrt(0.25/1e5) ≈ 0.0079 < 0.01
        let s = StateVector::<f64>::uniform(1).unwrap();
        let m = measure(&s, 100_000, 42).unwrap();
        assert_eq!(m.iter().map(|x| x.count).sum::<u64>(), 100_000);
        for sample in &m {
            assert!((sample.count as f64 / 1e5 - 0.5).abs() < 0.01);
        }
        assert_eq!(m, measure(&s, 100_000, 42).unwrap());
    }

    #[test]
    fn zero_shots_rejected() {
        let s = StateVector::<f64>::uniform(1).unwrap();
        assert!(measure(&s, 0, 1).is_err());
    }

    #[test]
    fn sampled_objective_tracks_exact() {
        let obj = single_edge();
        let s = StateVector::<f64>::uniform(2).unwrap();
        let m = measure(&s, 200_000, 3).unwrap();
        assert!((sampled_objective(&m, &obj) - 0.5).abs() < 0.01);
    }

    #[test]
    fn state_json_is_pairs() {
        let s = StateVector::<f64>::basis(1, 1).unwrap();
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, "[[0.0,0.0],[1.0,0.0]]");
        let back: StateVector<f64> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
        assert!(serde_json::from_str::<StateVector<f64>>("[[1.0,0.0],[1.0,0.0]]").is_err());
    }

    #[test]
    fn unnormalized_amplitudes_rejected() {
        assert!(StateVector::from_amplitudes(vec![c(1.0, 0.0), c(1.0, 0.0)]).is_err());
        assert!(StateVector::from_amplitudes(vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).is_err());
    }

    #[test]
    fn f32_rotation_works() {
        let s = StateVector::<f32>::zero_state(1).unwrap();
        let out = apply_pauli_rotation(&s, &PauliString::parse("X").unwrap(), std::f32::consts::FRAC_PI_2).unwrap();
        assert!((out.norm() - 1.0).abs() < 1e-6);
    }
}
