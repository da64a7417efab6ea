//! Single-qubit data re-uploading circuits and least-squares fitting.
//!
//! A circuit with `M` inputs and `L` layers is
//!
//! ```text
//! U(x) = prod_{l=1..L} RY(w[l,0]) * prod_{m=1..M} RZ(x_m w[l,m]) * RZ(w[l,M+1])
//! ```
//!
//! with `(M + 2) L` weights stored layer-major (`w[l, j]` at `l (M + 2) + j`).
//! As an operator product the rightmost factor acts first, so the gate list
//! runs from layer `L` down to layer 1.
//!
//! Sign convention: a state `sqrt(1 - f^2)|0> + f|1>` has `<Z> = 1 - 2 f^2`
//! with the standard `Z = diag(1, -1)`. Targets here are written as
//! `g = 2 f^2 - 1`, which is the expectation of [`excited_minus_ground`]
//! (`-Z = diag(-1, 1)`). The product encoder measures that observable.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::quantum::{Binding, Circuit, GateKind, GateOp, Observable, Pauli};
use crate::rng::{keyed_rng, TAG_INIT};

/// Central-difference step for finite-difference gradients.
pub const FD_STEP: f64 = 1e-5;

/// `-Z` on `qubit`: expectation `p1 - p0 = 2 f^2 - 1` for amplitude `f` on `|1>`.
pub fn excited_minus_ground(n_qubits: usize, qubit: usize) -> Result<Observable> {
    Observable::single_qubit(n_qubits, qubit, Pauli::Z, -1.0)
}

/// The amplitude `f = sqrt((g + 1) / 2)` that yields expectation `g`.
pub fn amplitude_target_transform(g: f64) -> Result<f64> {
    ensure!(
        (-1.0..=1.0).contains(&g),
        "target value {g} outside [-1, 1]"
    );
    Ok(((g + 1.0) / 2.0).sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReuploadingCircuit {
    data_dim: usize,
    layers: usize,
    circuit: Circuit,
}

/// Build the `(M, L)` re-uploading circuit on a single qubit.
pub fn build_reuploading(data_dim: usize, layers: usize) -> Result<ReuploadingCircuit> {
    ensure!(data_dim >= 1, "data dimension must be positive, got {data_dim}");
    ensure!(layers >= 1, "layer count must be positive, got {layers}");
    let circuit = Circuit::with_ops(1, reuploading_ops(data_dim, layers, 0, 0))?;
    Ok(ReuploadingCircuit {
        data_dim,
        layers,
        circuit,
    })
}

/// Gate list of an `(M, L)` re-uploading block on `qubit`, with weight
/// indices shifted by `weight_offset`. Used to stack blocks on a register.
pub fn reuploading_ops(
    data_dim: usize,
    layers: usize,
    qubit: usize,
    weight_offset: usize,
) -> Vec<GateOp> {
    let per_layer = data_dim + 2;
    let mut ops = Vec::with_capacity(per_layer * layers);
    for l in (0..layers).rev() {
        let base = weight_offset + l * per_layer;
        ops.push(GateOp::rz(
            qubit,
            Binding::Trainable {
                weight: base + data_dim + 1,
            },
        ));
        for m in 0..data_dim {
            ops.push(GateOp::rz(
                qubit,
                Binding::DataProduct {
                    data: m,
                    weight: base + 1 + m,
                },
            ));
        }
        ops.push(GateOp::ry(qubit, Binding::Trainable { weight: base }));
    }
    ops
}

impl ReuploadingCircuit {
    pub fn data_dim(&self) -> usize {
        self.data_dim
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn weight_count(&self) -> usize {
        (self.data_dim + 2) * self.layers
    }

    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    /// Number of gates binding a data coordinate.
    pub fn data_gate_count(&self) -> usize {
        self.circuit
            .ops()
            .iter()
            .filter(|op| matches!(op.binding, Some(Binding::DataProduct { .. })))
            .count()
    }

    fn check_call(&self, weights: &[f64], x: &[f64], obs: &Observable) -> Result<()> {
        ensure!(
            weights.len() == self.weight_count(),
            "expected {} weights, got {}",
            self.weight_count(),
            weights.len()
        );
        ensure!(
            x.len() == self.data_dim,
            "expected input of dimension {}, got {}",
            self.data_dim,
            x.len()
        );
        ensure!(
            obs.n_qubits() == 1,
            "re-uploading circuits act on one qubit; observable has {}",
            obs.n_qubits()
        );
        Ok(())
    }

    fn expectation_trusted(
        &self,
        weights: &[f64],
        x: &[f64],
        obs: &Observable,
        shifted: Option<(usize, f64)>,
    ) -> f64 {
        let state = self.circuit.run_trusted(weights, x, shifted);
        obs.expectation(&state).expect("single-qubit observable checked")
    }

    /// Gradient of `<O>(x)` with respect to the weights.
    pub fn gradient(
        &self,
        weights: &[f64],
        x: &[f64],
        obs: &Observable,
        mode: GradientMode,
    ) -> Result<Vec<f64>> {
        self.check_call(weights, x, obs)?;
        let mut grad = vec![0.0; weights.len()];
        self.gradient_into(weights, x, obs, mode, &mut grad);
        Ok(grad)
    }

    fn gradient_into(
        &self,
        weights: &[f64],
        x: &[f64],
        obs: &Observable,
        mode: GradientMode,
        grad: &mut [f64],
    ) {
        match mode {
            GradientMode::CentralDifference => {
                let mut w = weights.to_vec();
                for i in 0..w.len() {
                    let orig = w[i];
                    w[i] = orig + FD_STEP;
                    let plus = self.expectation_trusted(&w, x, obs, None);
                    w[i] = orig - FD_STEP;
                    let minus = self.expectation_trusted(&w, x, obs, None);
                    w[i] = orig;
                    grad[i] = (plus - minus) / (2.0 * FD_STEP);
                }
            }
            GradientMode::ParameterShift => {
                grad.iter_mut().for_each(|g| *g = 0.0);
                let half_pi = std::f64::consts::FRAC_PI_2;
                for (gi, op) in self.circuit.ops().iter().enumerate() {
                    let Some(binding) = op.binding else { continue };
                    let Some(wi) = binding.weight_index() else { continue };
                    debug_assert!(matches!(op.kind, GateKind::Ry | GateKind::Rz));
                    let scale = binding.weight_derivative(wi, x);
                    if scale == 0.0 {
                        continue;
                    }
                    let plus = self.expectation_trusted(weights, x, obs, Some((gi, half_pi)));
                    let minus = self.expectation_trusted(weights, x, obs, Some((gi, -half_pi)));
                    grad[wi] += scale * (plus - minus) / 2.0;
                }
            }
        }
    }
}

/// `<0|U(x)^dag O U(x)|0>` for a re-uploading circuit.
pub fn evaluate_model(
    circuit: &ReuploadingCircuit,
    weights: &[f64],
    x: &[f64],
    obs: &Observable,
) -> Result<f64> {
    circuit.check_call(weights, x, obs)?;
    ensure!(
        x.iter().all(|v| (0.0..=1.0).contains(v)),
        "inputs must lie in [0, 1], got {x:?}"
    );
    Ok(circuit.expectation_trusted(weights, x, obs, None))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientMode {
    CentralDifference,
    ParameterShift,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub grid_points_per_dim: usize,
    pub max_iters: usize,
    pub step_size: f64,
    pub gradient_mode: GradientMode,
    pub tolerance: f64,
    pub seed: u64,
    pub restarts: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            grid_points_per_dim: 64,
            max_iters: 2000,
            step_size: 0.05,
            gradient_mode: GradientMode::CentralDifference,
            tolerance: 1e-12,
            seed: 0,
            restarts: 4,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        ensure!(
            self.grid_points_per_dim >= 2,
            "grid_points_per_dim must be at least 2"
        );
        ensure!(
            self.step_size > 0.0 && self.step_size.is_finite(),
            "step_size must be positive"
        );
        ensure!(self.restarts >= 1, "restarts must be at least 1");
        ensure!(self.tolerance >= 0.0, "tolerance must be nonnegative");
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub weights: Vec<f64>,
    /// Mean squared error of the returned weights; equals the last history entry.
    pub final_loss: f64,
    /// Per-iteration loss of the winning restart, ending with the loss of the
    /// returned (best seen) weights.
    pub loss_history: Vec<f64>,
    /// Best loss reached by each restart, in restart order.
    pub restart_losses: Vec<f64>,
}

/// A function tabulated on the uniform grid `{0, 1/(G-1), ..., 1}^M`.
///
/// Values are stored row-major with coordinate 0 varying slowest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    dims: usize,
    points_per_dim: usize,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(dims: usize, points_per_dim: usize, values: Vec<f64>) -> Result<Self> {
        ensure!(dims >= 1, "grid function needs at least one dimension");
        ensure!(points_per_dim >= 2, "grid needs at least 2 points per dimension");
        let expected = points_per_dim
            .checked_pow(dims as u32)
            .ok_or_else(|| Error::validation("grid too large"))?;
        ensure!(
            values.len() == expected,
            "grid function has {} values, expected {expected}",
            values.len()
        );
        Ok(GridFunction {
            dims,
            points_per_dim,
            values,
        })
    }

    pub fn from_fn(
        dims: usize,
        points_per_dim: usize,
        mut f: impl FnMut(&[f64]) -> f64,
    ) -> Result<Self> {
        ensure!(dims >= 1 && points_per_dim >= 2, "invalid grid shape");
        let n = points_per_dim.pow(dims as u32);
        let mut x = vec![0.0; dims];
        let values = (0..n)
            .map(|i| {
                grid_node(i, dims, points_per_dim, &mut x);
                f(&x)
            })
            .collect();
        Self::new(dims, points_per_dim, values)
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn points_per_dim(&self) -> usize {
        self.points_per_dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Coordinates of every node, in storage order.
    pub fn nodes(&self) -> Vec<Vec<f64>> {
        let mut x = vec![0.0; self.dims];
        (0..self.values.len())
            .map(|i| {
                grid_node(i, self.dims, self.points_per_dim, &mut x);
                x.clone()
            })
            .collect()
    }
}

fn grid_node(mut index: usize, dims: usize, g: usize, out: &mut [f64]) {
    for d in (0..dims).rev() {
        out[d] = (index % g) as f64 / (g - 1) as f64;
        index /= g;
    }
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;
const STALL_WINDOW: usize = 50;

struct Problem<'a> {
    circuit: &'a ReuploadingCircuit,
    obs: &'a Observable,
    nodes: Vec<Vec<f64>>,
    targets: &'a [f64],
    mode: GradientMode,
}

impl Problem<'_> {
    fn loss(&self, w: &[f64]) -> f64 {
        let residuals: Vec<f64> = self
            .nodes
            .par_iter()
            .zip(self.targets.par_iter())
            .map(|(x, t)| self.circuit.expectation_trusted(w, x, self.obs, None) - t)
            .collect();
        residuals.iter().map(|r| r * r).sum::<f64>() / residuals.len() as f64
    }

    /// Loss and gradient; the reduction runs in node order so results do not
    /// depend on thread scheduling.
    fn loss_and_grad(&self, w: &[f64]) -> (f64, Vec<f64>) {
        let per_node: Vec<(f64, Vec<f64>)> = self
            .nodes
            .par_iter()
            .zip(self.targets.par_iter())
            .map(|(x, t)| {
                let r = self.circuit.expectation_trusted(w, x, self.obs, None) - t;
                let mut g = vec![0.0; w.len()];
                self.circuit.gradient_into(w, x, self.obs, self.mode, &mut g);
                (r, g)
            })
            .collect();
        let n = per_node.len() as f64;
        let mut loss = 0.0;
        let mut grad = vec![0.0; w.len()];
        for (r, g) in &per_node {
            loss += r * r;
            for (acc, gi) in grad.iter_mut().zip(g) {
                *acc += 2.0 * r * gi;
            }
        }
        grad.iter_mut().for_each(|v| *v /= n);
        (loss / n, grad)
    }
}

struct RestartOutcome {
    best_weights: Vec<f64>,
    best_loss: f64,
    history: Vec<f64>,
}

fn run_restart(
    problem: &Problem<'_>,
    init: Vec<f64>,
    cfg: &FitConfig,
) -> Result<RestartOutcome> {
    let mut w = init;
    let mut m = vec![0.0; w.len()];
    let mut v = vec![0.0; w.len()];
    let mut history = Vec::with_capacity(cfg.max_iters + 1);
    let mut best_loss = f64::INFINITY;
    let mut best_weights = w.clone();
    // Best-so-far loss per iteration, for the stall test.
    let mut best_trace = Vec::with_capacity(cfg.max_iters + 1);

    for iter in 0..=cfg.max_iters {
        let (loss, grad) = problem.loss_and_grad(&w);
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::FitDiverged {
                coordinate: None,
                iteration: iter,
            });
        }
        history.push(loss);
        if loss < best_loss {
            best_loss = loss;
            best_weights.copy_from_slice(&w);
        }
        best_trace.push(best_loss);
        if iter == cfg.max_iters {
            break;
        }
        if iter >= STALL_WINDOW && best_trace[iter - STALL_WINDOW] - best_loss < cfg.tolerance {
            break;
        }
        let t = (iter + 1) as i32;
        let bias1 = 1.0 - ADAM_BETA1.powi(t);
        let bias2 = 1.0 - ADAM_BETA2.powi(t);
        for i in 0..w.len() {
            m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * grad[i];
            v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * grad[i] * grad[i];
            let mhat = m[i] / bias1;
            let vhat = v[i] / bias2;
            w[i] -= cfg.step_size * mhat / (vhat.sqrt() + ADAM_EPS);
        }
    }

    let final_loss = problem.loss(&best_weights);
    history.push(final_loss);
    Ok(RestartOutcome {
        best_weights,
        best_loss: final_loss,
        history,
    })
}

/// Fit the weights so that `<O>(x)` matches `target` on its grid in the
/// least-squares sense.
///
/// Each restart draws initial weights uniformly from `[-pi, pi]` with a
/// stream keyed by `(cfg.seed, restart)` and runs Adam on the mean squared
/// error until `max_iters` or until the best loss improves by less than
/// `tolerance` over 50 iterations. The best restart wins.
pub fn fit_to_function(
    circuit: &ReuploadingCircuit,
    target: &GridFunction,
    obs: &Observable,
    cfg: &FitConfig,
) -> Result<FitResult> {
    cfg.validate()?;
    ensure!(
        target.dims() == circuit.data_dim(),
        "target has {} dimensions but the circuit takes {}",
        target.dims(),
        circuit.data_dim()
    );
    ensure!(
        obs.n_qubits() == 1,
        "re-uploading circuits act on one qubit; observable has {}",
        obs.n_qubits()
    );
    ensure!(
        target.values().iter().all(|v| (-1.0..=1.0).contains(v)),
        "target values must lie in [-1, 1]"
    );

    let problem = Problem {
        circuit,
        obs,
        nodes: target.nodes(),
        targets: target.values(),
        mode: cfg.gradient_mode,
    };

    let mut best: Option<RestartOutcome> = None;
    let mut restart_losses = Vec::with_capacity(cfg.restarts);
    for r in 0..cfg.restarts {
        let mut rng = keyed_rng(cfg.seed, &[TAG_INIT, r as u64]);
        let init = (0..circuit.weight_count())
            .map(|_| rng.random_range(-std::f64::consts::PI..=std::f64::consts::PI))
            .collect();
        let outcome = run_restart(&problem, init, cfg)?;
        restart_losses.push(outcome.best_loss);
        if best.as_ref().is_none_or(|b| outcome.best_loss < b.best_loss) {
            best = Some(outcome);
        }
    }
    let best = best.expect("at least one restart");
    Ok(FitResult {
        weights: best.best_weights,
        final_loss: best.best_loss,
        loss_history: best.history,
        restart_losses,
    })
}
