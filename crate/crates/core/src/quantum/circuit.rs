use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{StateVector, C64, MAX_STATE_QUBITS};
use crate::error::{ensure, Result};

const UNITARY_TOL: f64 = 1e-12;

/// The operation a gate performs.
///
/// Rotations follow the half-angle convention `R_P(a) = exp(-i a P / 2)`;
/// `Phase(a) = diag(1, e^{i a})`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "gate", rename_all = "snake_case")]
pub enum GateKind {
    Rx,
    Ry,
    Rz,
    Phase,
    Cnot,
    Fixed1q { matrix: [[C64; 2]; 2] },
}

impl GateKind {
    pub fn is_parametric(&self) -> bool {
        matches!(self, GateKind::Rx | GateKind::Ry | GateKind::Rz | GateKind::Phase)
    }

    fn arity(&self) -> usize {
        match self {
            GateKind::Cnot => 2,
            _ => 1,
        }
    }
}

/// Where a parametric gate takes its angle from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Binding {
    /// A fixed angle in radians.
    Constant { angle: f64 },
    /// `weights[weight]`.
    Trainable { weight: usize },
    /// `data[data] * weights[weight]`.
    DataProduct { data: usize, weight: usize },
}

impl Binding {
    pub fn angle(&self, weights: &[f64], data: &[f64]) -> f64 {
        match *self {
            Binding::Constant { angle } => angle,
            Binding::Trainable { weight } => weights[weight],
            Binding::DataProduct { data: d, weight } => data[d] * weights[weight],
        }
    }

    /// Derivative of the angle with respect to `weights[index]`.
    pub fn weight_derivative(&self, index: usize, data: &[f64]) -> f64 {
        match *self {
            Binding::Trainable { weight } if weight == index => 1.0,
            Binding::DataProduct { data: d, weight } if weight == index => data[d],
            _ => 0.0,
        }
    }

    pub fn weight_index(&self) -> Option<usize> {
        match *self {
            Binding::Constant { .. } => None,
            Binding::Trainable { weight } | Binding::DataProduct { weight, .. } => Some(weight),
        }
    }

    pub fn data_index(&self) -> Option<usize> {
        match *self {
            Binding::DataProduct { data, .. } => Some(data),
            _ => None,
        }
    }
}

/// One gate of a circuit. For `Cnot`, `targets = [control, target]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateOp {
    pub kind: GateKind,
    pub targets: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub binding: Option<Binding>,
}

impl GateOp {
    pub fn rx(qubit: usize, binding: Binding) -> Self {
        Self::rotation(GateKind::Rx, qubit, binding)
    }

    pub fn ry(qubit: usize, binding: Binding) -> Self {
        Self::rotation(GateKind::Ry, qubit, binding)
    }

    pub fn rz(qubit: usize, binding: Binding) -> Self {
        Self::rotation(GateKind::Rz, qubit, binding)
    }

    pub fn phase(qubit: usize, binding: Binding) -> Self {
        Self::rotation(GateKind::Phase, qubit, binding)
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        GateOp {
            kind: GateKind::Cnot,
            targets: vec![control, target],
            binding: None,
        }
    }

    pub fn fixed(qubit: usize, matrix: [[C64; 2]; 2]) -> Self {
        GateOp {
            kind: GateKind::Fixed1q { matrix },
            targets: vec![qubit],
            binding: None,
        }
    }

    fn rotation(kind: GateKind, qubit: usize, binding: Binding) -> Self {
        GateOp {
            kind,
            targets: vec![qubit],
            binding: Some(binding),
        }
    }

    /// 2x2 matrix of a single-qubit gate at the given angle.
    fn matrix(&self, angle: f64) -> [[C64; 2]; 2] {
        let z = C64::new(0.0, 0.0);
        let (c, s) = ((angle / 2.0).cos(), (angle / 2.0).sin());
        match &self.kind {
            GateKind::Rx => [
                [C64::new(c, 0.0), C64::new(0.0, -s)],
                [C64::new(0.0, -s), C64::new(c, 0.0)],
            ],
            GateKind::Ry => [
                [C64::new(c, 0.0), C64::new(-s, 0.0)],
                [C64::new(s, 0.0), C64::new(c, 0.0)],
            ],
            GateKind::Rz => [[C64::new(c, -s), z], [z, C64::new(c, s)]],
            GateKind::Phase => [[C64::new(1.0, 0.0), z], [z, C64::from_polar(1.0, angle)]],
            GateKind::Fixed1q { matrix } => *matrix,
            GateKind::Cnot => unreachable!("cnot has no 2x2 matrix"),
        }
    }
}

fn unitarity_deviation(m: &[[C64; 2]; 2]) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let dot: C64 = (0..2).map(|k| m[k][i].conj() * m[k][j]).sum();
            let expected = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((dot - C64::new(expected, 0.0)).norm());
        }
    }
    worst
}

/// A gate sequence acting on `|0...0>`, applied in order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    n_qubits: usize,
    ops: Vec<GateOp>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Result<Self> {
        ensure!(
            (1..=MAX_STATE_QUBITS).contains(&n_qubits),
            "qubit count {n_qubits} outside supported range 1..={MAX_STATE_QUBITS}"
        );
        Ok(Circuit {
            n_qubits,
            ops: Vec::new(),
        })
    }

    pub fn with_ops(n_qubits: usize, ops: Vec<GateOp>) -> Result<Self> {
        let mut c = Self::new(n_qubits)?;
        for op in ops {
            c.push(op)?;
        }
        Ok(c)
    }

    /// Append a gate after checking its qubit indices, binding shape and,
    /// for fixed gates, unitarity.
    pub fn push(&mut self, op: GateOp) -> Result<()> {
        ensure!(
            op.targets.len() == op.kind.arity(),
            "gate {:?} expects {} target(s), got {}",
            op.kind,
            op.kind.arity(),
            op.targets.len()
        );
        for &q in &op.targets {
            ensure!(
                q < self.n_qubits,
                "qubit index {q} out of range for {} qubits",
                self.n_qubits
            );
        }
        if op.kind == GateKind::Cnot {
            ensure!(op.targets[0] != op.targets[1], "cnot control equals target");
        }
        ensure!(
            op.kind.is_parametric() == op.binding.is_some(),
            "gate {:?}: parametric gates need a binding, fixed gates must not have one",
            op.kind
        );
        if let GateKind::Fixed1q { matrix } = &op.kind {
            let dev = unitarity_deviation(matrix);
            ensure!(
                dev <= UNITARY_TOL,
                "fixed gate payload is not unitary (deviation {dev:e})"
            );
        }
        self.ops.push(op);
        Ok(())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn ops(&self) -> &[GateOp] {
        &self.ops
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// One past the largest weight index referenced by any binding.
    pub fn num_weights(&self) -> usize {
        self.ops
            .iter()
            .filter_map(|op| op.binding.and_then(|b| b.weight_index()))
            .map(|i| i + 1)
            .max()
            .unwrap_or(0)
    }

    /// One past the largest data index referenced by any binding.
    pub fn data_dim(&self) -> usize {
        self.ops
            .iter()
            .filter_map(|op| op.binding.and_then(|b| b.data_index()))
            .map(|i| i + 1)
            .max()
            .unwrap_or(0)
    }

    /// True when no gate reads the data vector.
    pub fn is_data_independent(&self) -> bool {
        self.data_dim() == 0
    }

    /// Check that every binding index fits the given weight and data lengths.
    pub fn validate_inputs(&self, weights: &[f64], data: &[f64]) -> Result<()> {
        let nw = self.num_weights();
        let nd = self.data_dim();
        ensure!(
            weights.len() >= nw,
            "circuit references weight index {} but only {} weights were given",
            nw - 1,
            weights.len()
        );
        ensure!(
            data.len() >= nd,
            "circuit references data index {} but only {} data values were given",
            nd - 1,
            data.len()
        );
        Ok(())
    }

    /// Run on `|0...0>`, optionally adding `shift` to the angle of gate `shifted`.
    fn simulate(
        &self,
        weights: &[f64],
        data: &[f64],
        shifted: Option<(usize, f64)>,
        state: &mut StateVector,
    ) {
        for (i, op) in self.ops.iter().enumerate() {
            match op.kind {
                GateKind::Cnot => state.apply_cnot(op.targets[0], op.targets[1]),
                _ => {
                    let mut angle = op.binding.map_or(0.0, |b| b.angle(weights, data));
                    if let Some((g, s)) = shifted {
                        if g == i {
                            angle += s;
                        }
                    }
                    state.apply_1q(op.targets[0], &op.matrix(angle));
                }
            }
        }
    }

    pub fn run(&self, weights: &[f64], data: &[f64]) -> Result<StateVector> {
        self.validate_inputs(weights, data)?;
        Ok(self.run_trusted(weights, data, None))
    }

    /// Run without re-validating the inputs. Callers in hot loops check the
    /// input lengths once up front.
    pub(crate) fn run_trusted(
        &self,
        weights: &[f64],
        data: &[f64],
        shifted: Option<(usize, f64)>,
    ) -> StateVector {
        let mut state = StateVector::zero(self.n_qubits).expect("qubit count checked at build");
        self.simulate(weights, data, shifted, &mut state);
        state
    }

    /// Run with the angle of gate `gate_index` offset by `shift` radians.
    /// Used by parameter-shift differentiation.
    pub fn run_shifted(
        &self,
        weights: &[f64],
        data: &[f64],
        gate_index: usize,
        shift: f64,
    ) -> Result<StateVector> {
        self.validate_inputs(weights, data)?;
        ensure!(
            gate_index < self.ops.len(),
            "gate index {gate_index} out of range"
        );
        let mut state = StateVector::zero(self.n_qubits)?;
        self.simulate(weights, data, Some((gate_index, shift)), &mut state);
        Ok(state)
    }

    /// The full unitary, column `j` being the image of basis state `j`.
    pub fn unitary(&self, weights: &[f64], data: &[f64]) -> Result<DMatrix<C64>> {
        self.validate_inputs(weights, data)?;
        let dim = 1usize << self.n_qubits;
        let mut u = DMatrix::zeros(dim, dim);
        for j in 0..dim {
            let mut state = StateVector::basis(self.n_qubits, j)?;
            self.simulate(weights, data, None, &mut state);
            for (i, a) in state.amplitudes().iter().enumerate() {
                u[(i, j)] = *a;
            }
        }
        Ok(u)
    }
}

/// Prepare `U(weights, data)|0...0>`.
pub fn run_circuit(circuit: &Circuit, weights: &[f64], data: &[f64]) -> Result<StateVector> {
    circuit.run(weights, data)
}
