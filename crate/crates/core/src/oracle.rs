//! Dense-matrix reference simulator for small circuits.
//!
//! Builds every gate as an explicit `2ⁿ × 2ⁿ` matrix
//! `cos θ·I − i sin θ·(σ_{n−1} ⊗ … ⊗ σ_0)` and multiplies. Exponential in
//! width, meant for cross-checking [`crate::circuit::build_state`] at
//! three qubits or fewer.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::circuit::{GateParameterVector, GateSequence, Pauli, PauliString, StateVector};
use crate::error::{Error, Result};

/// Widest circuit the dense oracle accepts.
pub const MAX_DENSE_QUBITS: usize = 10;

fn single(op: Pauli) -> DMatrix<Complex64> {
    let o = Complex64::new(0.0, 0.0);
    let l = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let m = match op {
        Pauli::I => [l, o, o, l],
        Pauli::X => [o, l, l, o],
        Pauli::Y => [o, -i, i, o],
        Pauli::Z => [l, o, o, -l],
    };
    DMatrix::from_row_slice(2, 2, &m)
}

/// Matrix of `P` in the basis where qubit 0 is the least significant bit,
/// i.e. `ops[n−1] ⊗ … ⊗ ops[0]`.
pub fn pauli_matrix(p: &PauliString) -> DMatrix<Complex64> {
    p.ops()
        .iter()
        .fold(DMatrix::identity(1, 1), |acc, &op| single(op).kronecker(&acc))
}

/// `exp(−iθP)` as `cos θ·I − i sin θ·P`.
pub fn rotation_matrix(p: &PauliString, theta: f64) -> DMatrix<Complex64> {
    let dim = 1usize << p.qubit_count();
    let id = DMatrix::<Complex64>::identity(dim, dim);
    id * Complex64::new(theta.cos(), 0.0) + pauli_matrix(p) * Complex64::new(0.0, -theta.sin())
}

/// Product `U_L(θ_L) … U_1(θ_1)`.
pub fn circuit_matrix(seq: &GateSequence, theta: &GateParameterVector<f64>) -> Result<DMatrix<Complex64>> {
    if seq.qubit_count() > MAX_DENSE_QUBITS {
        return Err(Error::InvalidInput(format!(
            "dense oracle limited to {MAX_DENSE_QUBITS} qubits"
        )));
    }
    if theta.len() != seq.parameter_count() {
        return Err(Error::dim("parameter vector length", seq.parameter_count(), theta.len()));
    }
    let dim = 1usize << seq.qubit_count();
    Ok(seq.gates().iter().fold(DMatrix::identity(dim, dim), |acc, g| {
        rotation_matrix(&g.generator, theta.as_slice()[g.parameter_index]) * acc
    }))
}

/// Dense counterpart of [`crate::circuit::build_state`].
pub fn dense_build_state(
    seq: &GateSequence,
    theta: &GateParameterVector<f64>,
    input: &StateVector<f64>,
) -> Result<Vec<Complex64>> {
    if input.qubit_count() != seq.qubit_count() {
        return Err(Error::dim("input state width", seq.qubit_count(), input.qubit_count()));
    }
    let u = circuit_matrix(seq, theta)?;
    let v = DVector::from_column_slice(input.amplitudes());
    Ok((u * v).iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> bool {
        (a - b).iter().all(|v| v.norm() < 1e-14)
    }

    #[test]
    fn pauli_squares_to_identity() {
        for label in ["X", "Y", "Z", "XY", "ZZ", "YXZ", "IYI"] {
            let m = pauli_matrix(&PauliString::parse(label).unwrap());
            let d = m.nrows();
            assert!(close(&(&m * &m), &DMatrix::identity(d, d)), "{label}");
        }
    }

    #[test]
    fn qubit_zero_is_low_bit() {
        // X on qubit 0 of two qubits maps |00⟩ (index 0) to |01⟩ (index 1).
        let m = pauli_matrix(&PauliString::parse("XI").unwrap());
        assert_eq!(m[(1, 0)], Complex64::new(1.0, 0.0));
        assert_eq!(m[(2, 0)], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn rotation_is_unitary() {
        let r = rotation_matrix(&PauliString::parse("XY").unwrap(), 0.37);
        let d = r.nrows();
        assert!(close(&(r.adjoint() * &r), &DMatrix::identity(d, d)));
    }
}
