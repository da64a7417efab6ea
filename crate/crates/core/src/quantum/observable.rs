use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{qubit_mask, StateVector, C64, MAX_DENSE_QUBITS};
use crate::error::{ensure, Error, Result};

const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    fn symbol(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// A tensor product of single-qubit Paulis; position 0 acts on qubit 0.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PauliString(Vec<Pauli>);

/// Bit masks describing how a Pauli string acts on basis states:
/// `P|b> = i^y_count (-1)^popcount(b & phase_mask) |b ^ flip_mask>`.
#[derive(Clone, Copy, Debug)]
struct PauliAction {
    flip_mask: usize,
    phase_mask: usize,
    y_count: u32,
}

impl PauliAction {
    #[inline]
    fn phase(&self, b: usize) -> C64 {
        let sign = if (b & self.phase_mask).count_ones().is_multiple_of(2) {
            1.0
        } else {
            -1.0
        };
        match self.y_count % 4 {
            0 => C64::new(sign, 0.0),
            1 => C64::new(0.0, sign),
            2 => C64::new(-sign, 0.0),
            _ => C64::new(0.0, -sign),
        }
    }
}

impl PauliString {
    pub fn new(paulis: Vec<Pauli>) -> Self {
        PauliString(paulis)
    }

    /// The `index`-th string of length `n` in lexicographic order over
    /// `{I, X, Y, Z}`, qubit 0 being the most significant digit.
    pub fn from_index(index: usize, n: usize) -> Self {
        let paulis = (0..n)
            .map(|q| Pauli::ALL[(index >> (2 * (n - 1 - q))) & 3])
            .collect();
        PauliString(paulis)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn paulis(&self) -> &[Pauli] {
        &self.0
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().all(|&p| p == Pauli::I)
    }

    fn action(&self) -> PauliAction {
        let n = self.0.len();
        let mut act = PauliAction {
            flip_mask: 0,
            phase_mask: 0,
            y_count: 0,
        };
        for (q, &p) in self.0.iter().enumerate() {
            let m = qubit_mask(n, q);
            match p {
                Pauli::I => {}
                Pauli::X => act.flip_mask |= m,
                Pauli::Y => {
                    act.flip_mask |= m;
                    act.phase_mask |= m;
                    act.y_count += 1;
                }
                Pauli::Z => act.phase_mask |= m,
            }
        }
        act
    }

    /// `<psi|P|psi>`, computed without forming the matrix.
    pub fn expectation(&self, state: &StateVector) -> f64 {
        let act = self.action();
        let amps = state.amplitudes();
        let total: C64 = amps
            .iter()
            .enumerate()
            .map(|(b, &a)| amps[b ^ act.flip_mask].conj() * act.phase(b) * a)
            .sum();
        total.re
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let dim = 1usize << self.0.len();
        let act = self.action();
        let mut m = DMatrix::zeros(dim, dim);
        for b in 0..dim {
            m[(b ^ act.flip_mask, b)] = act.phase(b);
        }
        m
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.0 {
            write!(f, "{}", p.symbol())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let paulis = s
            .chars()
            .map(|ch| match ch.to_ascii_uppercase() {
                'I' => Ok(Pauli::I),
                'X' => Ok(Pauli::X),
                'Y' => Ok(Pauli::Y),
                'Z' => Ok(Pauli::Z),
                other => Err(Error::validation(format!(
                    "invalid Pauli symbol '{other}' in \"{s}\""
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        ensure!(!paulis.is_empty(), "empty Pauli string");
        Ok(PauliString(paulis))
    }
}

impl Serialize for PauliString {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for PauliString {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObservableRepr {
    /// Row-major Hermitian matrix of dimension `2^n`.
    Dense { matrix: Vec<C64> },
    /// `sum_k coeff_k * P_k`.
    Pauli { terms: Vec<(f64, PauliString)> },
}

/// A Hermitian operator on `n_qubits` qubits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observable {
    n_qubits: usize,
    repr: ObservableRepr,
}

impl Observable {
    /// Wrap a dense matrix, checking shape and Hermiticity.
    pub fn dense(matrix: DMatrix<C64>) -> Result<Self> {
        let dim = matrix.nrows();
        ensure!(
            matrix.is_square() && dim >= 2 && dim.is_power_of_two(),
            "observable must be a square matrix of power-of-two dimension, got {}x{}",
            matrix.nrows(),
            matrix.ncols()
        );
        let n_qubits = dim.trailing_zeros() as usize;
        ensure!(
            n_qubits <= MAX_DENSE_QUBITS,
            "dense observables are limited to {MAX_DENSE_QUBITS} qubits"
        );
        ensure!(
            matrix.iter().all(|z| z.re.is_finite() && z.im.is_finite()),
            "observable entries must be finite"
        );
        let dev = hermitian_deviation(&matrix);
        ensure!(
            dev <= HERMITIAN_TOL,
            "observable is not Hermitian (max |O - O^dag| = {dev:e})"
        );
        // Row-major storage.
        let data = (0..dim)
            .flat_map(|i| (0..dim).map(move |j| (i, j)))
            .map(|(i, j)| matrix[(i, j)])
            .collect();
        Ok(Observable {
            n_qubits,
            repr: ObservableRepr::Dense { matrix: data },
        })
    }

    /// A real diagonal observable.
    pub fn diagonal(values: &[f64]) -> Result<Self> {
        let dim = values.len();
        let mut m = DMatrix::zeros(dim, dim);
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = C64::new(v, 0.0);
        }
        Self::dense(m)
    }

    pub fn pauli_sum(n_qubits: usize, terms: Vec<(f64, PauliString)>) -> Result<Self> {
        ensure!(n_qubits >= 1, "observable needs at least one qubit");
        ensure!(!terms.is_empty(), "Pauli sum needs at least one term");
        for (c, p) in &terms {
            ensure!(
                p.len() == n_qubits,
                "Pauli string {p} has length {}, expected {n_qubits}",
                p.len()
            );
            ensure!(c.is_finite(), "Pauli coefficient must be finite");
        }
        Ok(Observable {
            n_qubits,
            repr: ObservableRepr::Pauli { terms },
        })
    }

    /// A single Pauli string with unit coefficient, e.g. `"ZI"`.
    pub fn pauli(s: &str) -> Result<Self> {
        let p: PauliString = s.parse()?;
        Self::pauli_sum(p.len(), vec![(1.0, p)])
    }

    /// Pauli Z on `qubit` of an `n_qubits` register.
    pub fn z(n_qubits: usize, qubit: usize) -> Result<Self> {
        Self::single_qubit(n_qubits, qubit, Pauli::Z, 1.0)
    }

    /// `coeff * P` on `qubit`, identity elsewhere.
    pub fn single_qubit(n_qubits: usize, qubit: usize, pauli: Pauli, coeff: f64) -> Result<Self> {
        ensure!(qubit < n_qubits, "qubit {qubit} out of range for {n_qubits} qubits");
        let mut ps = vec![Pauli::I; n_qubits];
        ps[qubit] = pauli;
        Self::pauli_sum(n_qubits, vec![(coeff, PauliString::new(ps))])
    }

    /// `|index><index|`.
    pub fn basis_projector(n_qubits: usize, index: usize) -> Result<Self> {
        let dim = 1usize << n_qubits;
        ensure!(index < dim, "basis index {index} out of range for dimension {dim}");
        let mut diag = vec![0.0; dim];
        diag[index] = 1.0;
        Self::diagonal(&diag)
    }

    /// `2M |index><index| - I`: an amplified basis-state probability.
    pub fn amplified_projector(n_qubits: usize, index: usize, m: usize) -> Result<Self> {
        let dim = 1usize << n_qubits;
        ensure!(index < dim, "basis index {index} out of range for dimension {dim}");
        let mut diag = vec![-1.0; dim];
        diag[index] = 2.0 * m as f64 - 1.0;
        Self::diagonal(&diag)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn repr(&self) -> &ObservableRepr {
        &self.repr
    }

    /// Re-validate after deserialization.
    pub fn validate(&self) -> Result<()> {
        match &self.repr {
            ObservableRepr::Dense { matrix } => {
                ensure!(
                    matrix.len() == self.dim() * self.dim(),
                    "dense observable has {} entries, expected {}",
                    matrix.len(),
                    self.dim() * self.dim()
                );
                Observable::dense(self.to_dense()).map(|_| ())
            }
            ObservableRepr::Pauli { terms } => {
                Observable::pauli_sum(self.n_qubits, terms.clone()).map(|_| ())
            }
        }
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let dim = self.dim();
        match &self.repr {
            ObservableRepr::Dense { matrix } => DMatrix::from_row_slice(dim, dim, matrix),
            ObservableRepr::Pauli { terms } => {
                let mut m = DMatrix::zeros(dim, dim);
                for (c, p) in terms {
                    m += p.to_dense() * C64::new(*c, 0.0);
                }
                m
            }
        }
    }

    /// `<psi|O|psi>`.
    pub fn expectation(&self, state: &StateVector) -> Result<f64> {
        ensure!(
            state.n_qubits() == self.n_qubits,
            "state has {} qubits but observable acts on {}",
            state.n_qubits(),
            self.n_qubits
        );
        Ok(match &self.repr {
            ObservableRepr::Dense { matrix } => {
                let dim = self.dim();
                let amps = state.amplitudes();
                let mut acc = C64::new(0.0, 0.0);
                for i in 0..dim {
                    let row = &matrix[i * dim..(i + 1) * dim];
                    let o_psi: C64 = row.iter().zip(amps).map(|(o, a)| o * a).sum();
                    acc += amps[i].conj() * o_psi;
                }
                acc.re
            }
            ObservableRepr::Pauli { terms } => terms
                .iter()
                .map(|(c, p)| c * p.expectation(state))
                .sum(),
        })
    }
}

fn hermitian_deviation(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// `<psi|O|psi>`.
pub fn expectation(state: &StateVector, obs: &Observable) -> Result<f64> {
    obs.expectation(state)
}

fn check_basis_size(n: usize) -> Result<()> {
    ensure!(
        (1..=MAX_DENSE_QUBITS).contains(&n),
        "Pauli basis size n={n} outside supported range 1..={MAX_DENSE_QUBITS}"
    );
    Ok(())
}

/// All `4^n` Pauli strings in lexicographic order; element 0 is the identity.
pub fn pauli_strings(n: usize) -> Result<Vec<PauliString>> {
    check_basis_size(n)?;
    Ok((0..1usize << (2 * n))
        .map(|k| PauliString::from_index(k, n))
        .collect())
}

/// The Pauli basis as observables, same order as [`pauli_strings`].
pub fn pauli_basis(n: usize) -> Result<Vec<Observable>> {
    pauli_strings(n)?
        .into_iter()
        .map(|p| Observable::pauli_sum(n, vec![(1.0, p)]))
        .collect()
}

/// Coefficients `c_k = Tr(O P_k) / 2^n`, so that `O = sum_k c_k P_k`.
pub fn pauli_coefficients(obs: &Observable) -> Result<Vec<f64>> {
    let n = obs.n_qubits();
    let strings = pauli_strings(n)?;
    let dense = obs.to_dense();
    let dim = 1usize << n;
    Ok(strings
        .iter()
        .map(|p| {
            // P|b> = phase(b) |b ^ flip>, so Tr(O P) = sum_b O[b, b ^ flip] * phase(b).
            let act = p.action();
            let tr: C64 = (0..dim)
                .map(|b| dense[(b, b ^ act.flip_mask)] * act.phase(b))
                .sum();
            tr.re / dim as f64
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{Binding, Circuit, GateOp};
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn z_expectations() {
        let zero = StateVector::zero(1).unwrap();
        let z = Observable::pauli("Z").unwrap();
        assert_eq!(expectation(&zero, &z).unwrap(), 1.0);
        let plus = StateVector::from_real_amplitudes(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap();
        assert!(expectation(&plus, &z).unwrap().abs() < 1e-15);
    }

    #[test]
    fn amplified_projector_on_basis_state() {
        // 2M|m><m| - I with M = 3 on |m> gives 2*3 - 1 = 5.
        let s = StateVector::basis(2, 1).unwrap();
        let p = Observable::amplified_projector(2, 1, 3).unwrap();
        assert!((expectation(&s, &p).unwrap() - 5.0).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let s = StateVector::zero(2).unwrap();
        let z = Observable::pauli("Z").unwrap();
        assert!(expectation(&s, &z).is_err());
    }

    #[test]
    fn pauli_basis_order() {
        let b1 = pauli_strings(1).unwrap();
        let names: Vec<String> = b1.iter().map(|p| p.to_string()).collect();
        assert_eq!(names, ["I", "X", "Y", "Z"]);
        let b2 = pauli_strings(2).unwrap();
        assert_eq!(b2.len(), 16);
        assert_eq!(b2[0].to_string(), "II");
        assert_eq!(b2[1].to_string(), "IX");
        assert_eq!(b2[4].to_string(), "XI");
        assert_eq!(b2[15].to_string(), "ZZ");
        assert!(pauli_basis(0).is_err());
        assert!(pauli_basis(MAX_DENSE_QUBITS + 1).is_err());
    }

    #[test]
    fn identity_element_has_unit_expectation() {
        let circ = Circuit::with_ops(
            2,
            vec![
                GateOp::rx(0, Binding::Constant { angle: 0.7 }),
                GateOp::cnot(0, 1),
                GateOp::ry(1, Binding::Constant { angle: -1.1 }),
            ],
        )
        .unwrap();
        let s = circ.run(&[], &[]).unwrap();
        let basis = pauli_basis(2).unwrap();
        assert!((basis[0].expectation(&s).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn pauli_string_dense_matches_kron() {
        // Y on qubit 0 (MSB) times X on qubit 1.
        let p: PauliString = "YX".parse().unwrap();
        let d = p.to_dense();
        let i = C64::new(0.0, 1.0);
        // Y = [[0,-i],[i,0]], X = [[0,1],[1,0]]; kron(Y, X)[r][c].
        let y = [[C64::new(0.0, 0.0), -i], [i, C64::new(0.0, 0.0)]];
        let x = [[0.0, 1.0], [1.0, 0.0]];
        for r in 0..4 {
            for c in 0..4 {
                let expected = y[r / 2][c / 2] * x[r % 2][c % 2];
                assert_eq!(d[(r, c)], expected, "entry ({r},{c})");
            }
        }
    }

    #[test]
    fn non_hermitian_is_rejected() {
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 1)] = C64::new(1.0, 0.0);
        assert!(Observable::dense(m).is_err());
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!("XQ".parse::<PauliString>().is_err());
        assert!("".parse::<PauliString>().is_err());
    }
}
