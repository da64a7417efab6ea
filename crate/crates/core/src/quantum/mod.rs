//! Dense statevector simulation, observables and spectral bookkeeping.
//!
//! Qubit 0 is the most significant bit of a basis index: on three qubits the
//! basis state `|q0 q1 q2> = |1 0 0>` has index 4.

mod circuit;
mod observable;
mod spectral;
mod state;

pub use circuit::{run_circuit, Binding, Circuit, GateKind, GateOp};
pub use observable::{
    expectation, pauli_basis, pauli_coefficients, pauli_strings, Observable, ObservableRepr, Pauli,
    PauliString,
};
pub use spectral::{eigensystem, spectral_summary, Eigensystem, SpectralSummary};
pub use state::StateVector;

pub use num_complex::Complex64 as C64;

/// Largest register the statevector simulator accepts.
pub const MAX_STATE_QUBITS: usize = 12;
/// Largest register for which dense observables (and the Pauli basis) are built.
pub const MAX_DENSE_QUBITS: usize = 7;

/// Bit mask selecting `qubit` in a basis index of an `n_qubits` register.
#[inline]
pub(crate) fn qubit_mask(n_qubits: usize, qubit: usize) -> usize {
    1 << (n_qubits - 1 - qubit)
}
