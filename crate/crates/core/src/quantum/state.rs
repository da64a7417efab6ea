use serde::{Deserialize, Serialize};

use super::{qubit_mask, C64, MAX_STATE_QUBITS};
use crate::error::{ensure, Result};

const NORM_TOL: f64 = 1e-9;

/// A normalized pure state over `n_qubits` qubits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<C64>,
}

impl StateVector {
    /// `|0...0>` on `n_qubits` qubits.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        Self::basis(n_qubits, 0)
    }

    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        ensure!(
            (1..=MAX_STATE_QUBITS).contains(&n_qubits),
            "qubit count {n_qubits} outside supported range 1..={MAX_STATE_QUBITS}"
        );
        let dim = 1usize << n_qubits;
        ensure!(index < dim, "basis index {index} out of range for dimension {dim}");
        let mut amplitudes = vec![C64::new(0.0, 0.0); dim];
        amplitudes[index] = C64::new(1.0, 0.0);
        Ok(StateVector {
            n_qubits,
            amplitudes,
        })
    }

    /// Build a state from explicit amplitudes.
    ///
    /// The length must be a power of two and the norm must be 1 within 1e-9;
    /// the vector is then renormalized so the stored norm is 1 to rounding.
    pub fn from_amplitudes(amplitudes: Vec<C64>) -> Result<Self> {
        let dim = amplitudes.len();
        ensure!(
            dim >= 2 && dim.is_power_of_two(),
            "amplitude vector length {dim} is not a power of two >= 2"
        );
        let n_qubits = dim.trailing_zeros() as usize;
        ensure!(
            n_qubits <= MAX_STATE_QUBITS,
            "{n_qubits} qubits exceeds the supported maximum {MAX_STATE_QUBITS}"
        );
        ensure!(
            amplitudes.iter().all(|a| a.re.is_finite() && a.im.is_finite()),
            "amplitudes must be finite"
        );
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        ensure!(
            (norm - 1.0).abs() <= NORM_TOL,
            "amplitude vector has norm {norm}, expected 1"
        );
        let mut state = StateVector {
            n_qubits,
            amplitudes,
        };
        state.renormalize();
        Ok(state)
    }

    /// Real nonnegative amplitudes, zero padded to the next power of two.
    pub fn from_real_amplitudes(amplitudes: &[f64]) -> Result<Self> {
        let dim = amplitudes.len().max(2).next_power_of_two();
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        for (dst, &a) in amps.iter_mut().zip(amplitudes) {
            *dst = C64::new(a, 0.0);
        }
        Self::from_amplitudes(amps)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, index: usize) -> C64 {
        self.amplitudes[index]
    }

    /// Born probabilities of the computational basis states.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `|<self|other>|^2`.
    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.inner(other).norm_sqr()
    }

    fn renormalize(&mut self) {
        let norm = self.norm();
        for a in &mut self.amplitudes {
            *a /= norm;
        }
    }

    pub(crate) fn apply_1q(&mut self, qubit: usize, m: &[[C64; 2]; 2]) {
        let mask = qubit_mask(self.n_qubits, qubit);
        for i in 0..self.amplitudes.len() {
            if i & mask == 0 {
                let j = i | mask;
                let a0 = self.amplitudes[i];
                let a1 = self.amplitudes[j];
                self.amplitudes[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amplitudes[j] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }

    pub(crate) fn apply_cnot(&mut self, control: usize, target: usize) {
        let cmask = qubit_mask(self.n_qubits, control);
        let tmask = qubit_mask(self.n_qubits, target);
        for i in 0..self.amplitudes.len() {
            if i & cmask != 0 && i & tmask == 0 {
                self.amplitudes.swap(i, i | tmask);
            }
        }
    }
}
