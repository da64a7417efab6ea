//! Expectation value sampler models and the universal encoders.
//!
//! * Product encoder: one qubit per output, each driven by a fitted
//!   re-uploading block and measured with `-Z` (norm 1).
//! * Dense encoder: `ceil(log2(M + 1))` qubits holding amplitudes
//!   `sqrt((y_m + 1) / (2M))` on basis states `0..M-1` and the residual on
//!   basis state `M`, measured with `2M |m><m| - I` (norm `2M - 1`).
//! * Simplex encoder: `log2(M)` qubits holding `sqrt(y_m)`, measured with the
//!   basis projectors, so outputs lie on the probability simplex.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::quantum::{
    eigensystem, spectral_summary, Binding, Circuit, Eigensystem, GateOp, Observable,
    SpectralSummary, StateVector, MAX_DENSE_QUBITS,
};
use crate::reuploading::{
    build_reuploading, excited_minus_ground, fit_to_function, reuploading_ops, FitConfig,
    FitResult, GridFunction,
};
use crate::rng::derive_seed;
use crate::target_maps::{build_grid_density, build_triangular_map, GridDensity, TriangularMap};

/// Version written into model files.
pub const MODEL_FORMAT_VERSION: u32 = 1;
const MODEL_FORMAT_NAME: &str = "evsampler-model";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrepMode {
    /// Write the amplitude vector straight into the simulator.
    ExactInjection,
    /// Build a uniformly controlled RY cascade and simulate it.
    RotationCascade,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmplitudeEncoding {
    Dense,
    Simplex,
}

/// A fixed-gate program preparing a real nonnegative amplitude vector.
#[derive(Clone, Debug, PartialEq)]
pub struct StatePrepProgram {
    mode: PrepMode,
    amplitudes: Vec<f64>,
    cascade: Option<Circuit>,
}

impl StatePrepProgram {
    pub fn mode(&self) -> PrepMode {
        self.mode
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    /// The RY/CNOT cascade, present in `RotationCascade` mode.
    pub fn circuit(&self) -> Option<&Circuit> {
        self.cascade.as_ref()
    }

    pub fn prepare(&self) -> Result<StateVector> {
        match &self.cascade {
            None => StateVector::from_real_amplitudes(&self.amplitudes),
            Some(c) => c.run(&[], &[]),
        }
    }
}

/// Validate `amplitudes` and build a program that prepares them from `|0...0>`.
pub fn amplitude_prep(amplitudes: &[f64], mode: PrepMode) -> Result<StatePrepProgram> {
    ensure!(!amplitudes.is_empty(), "amplitude vector is empty");
    for (i, a) in amplitudes.iter().enumerate() {
        ensure!(
            a.is_finite() && *a >= 0.0,
            "amplitude {i} is {a}; amplitudes must be finite and nonnegative"
        );
    }
    let norm = amplitudes.iter().map(|a| a * a).sum::<f64>().sqrt();
    ensure!(
        (norm - 1.0).abs() <= 1e-9,
        "amplitude vector has norm {norm}, expected 1"
    );
    let dim = amplitudes.len().max(2).next_power_of_two();
    let mut padded = amplitudes.to_vec();
    padded.resize(dim, 0.0);
    let cascade = match mode {
        PrepMode::ExactInjection => None,
        PrepMode::RotationCascade => Some(rotation_cascade(&padded)?),
    };
    Ok(StatePrepProgram {
        mode,
        amplitudes: padded,
        cascade,
    })
}

/// Uniformly controlled RY cascade for real nonnegative amplitudes.
///
/// Qubit `k` is rotated by `2 atan2(|a_{p1}|, |a_{p0}|)` conditioned on the
/// prefix `p` of qubits `0..k`. Each multiplexed rotation is compiled into
/// `2^k` RY gates interleaved with CNOTs along a Gray code.
fn rotation_cascade(amplitudes: &[f64]) -> Result<Circuit> {
    let dim = amplitudes.len();
    let n = dim.trailing_zeros() as usize;
    let mut circuit = Circuit::new(n)?;
    for k in 0..n {
        // Squared norm of each block sharing a (k + 1)-bit prefix.
        let block = dim >> (k + 1);
        let weight = |prefix: usize| -> f64 {
            amplitudes[prefix * block..(prefix + 1) * block]
                .iter()
                .map(|a| a * a)
                .sum::<f64>()
                .sqrt()
        };
        let alphas: Vec<f64> = (0..1usize << k)
            .map(|p| 2.0 * weight(2 * p + 1).atan2(weight(2 * p)))
            .collect();
        if k == 0 {
            circuit.push(GateOp::ry(0, Binding::Constant { angle: alphas[0] }))?;
            continue;
        }
        let count = 1usize << k;
        let gray = |i: usize| i ^ (i >> 1);
        for i in 0..count {
            let theta = alphas
                .iter()
                .enumerate()
                .map(|(p, a)| {
                    if (p & gray(i)).count_ones() % 2 == 0 {
                        *a
                    } else {
                        -*a
                    }
                })
                .sum::<f64>()
                / count as f64;
            circuit.push(GateOp::ry(k, Binding::Constant { angle: theta }))?;
            // Bit that changes between gray(i) and gray(i + 1), cyclically.
            let bit = if i + 1 < count {
                (i + 1).trailing_zeros() as usize
            } else {
                k - 1
            };
            // Prefix bit b belongs to qubit k - 1 - b (qubit 0 most significant).
            circuit.push(GateOp::cnot(k - 1 - bit, k))?;
        }
    }
    Ok(circuit)
}

/// How a model turns an input `x` into a state.
#[derive(Clone, Debug, PartialEq)]
pub enum Program {
    Circuit {
        circuit: Circuit,
        weights: Vec<f64>,
    },
    /// Classical map `x -> y` followed by amplitude encoding of `y`.
    Amplitude {
        encoding: AmplitudeEncoding,
        mode: PrepMode,
        source: GridDensity,
        map: TriangularMap,
    },
}

/// An expectation value sampler: inputs uniform on `[0, 1]^input_dim`, a
/// state preparation program and one observable per output coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct EvsModel {
    id: String,
    n_qubits: usize,
    input_dim: usize,
    program: Program,
    observables: Vec<Observable>,
}

impl EvsModel {
    /// A model from an arbitrary parameterized circuit.
    pub fn from_circuit(
        id: impl Into<String>,
        circuit: Circuit,
        weights: Vec<f64>,
        observables: Vec<Observable>,
        input_dim: usize,
    ) -> Result<Self> {
        circuit.validate_inputs(&weights, &vec![0.0; input_dim])?;
        let n_qubits = circuit.n_qubits();
        let model = EvsModel {
            id: id.into(),
            n_qubits,
            input_dim,
            program: Program::Circuit { circuit, weights },
            observables,
        };
        model.validate()?;
        Ok(model)
    }

    fn validate(&self) -> Result<()> {
        ensure!(!self.observables.is_empty(), "model needs at least one observable");
        for (m, o) in self.observables.iter().enumerate() {
            ensure!(
                o.n_qubits() == self.n_qubits,
                "observable {m} acts on {} qubits, model has {}",
                o.n_qubits(),
                self.n_qubits
            );
            o.validate()?;
        }
        match &self.program {
            Program::Circuit { circuit, weights } => {
                ensure!(
                    circuit.n_qubits() == self.n_qubits,
                    "circuit width does not match model"
                );
                circuit.validate_inputs(weights, &vec![0.0; self.input_dim])?;
            }
            Program::Amplitude {
                encoding, source, ..
            } => {
                let m = self.observables.len();
                let expected_input = match encoding {
                    AmplitudeEncoding::Dense => m,
                    AmplitudeEncoding::Simplex => m - 1,
                };
                ensure!(
                    source.dims() == expected_input && self.input_dim == expected_input,
                    "amplitude model input dimension is inconsistent"
                );
            }
        }
        Ok(())
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn set_id(&mut self, id: impl Into<String>) {
        self.id = id.into();
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.observables.len()
    }

    pub fn observables(&self) -> &[Observable] {
        &self.observables
    }

    pub fn program(&self) -> &Program {
        &self.program
    }

    /// The classical amplitude-encoded vector for input `x`, for amplitude models.
    pub fn encoded_point(&self, x: &[f64]) -> Result<Option<Vec<f64>>> {
        match &self.program {
            Program::Circuit { .. } => Ok(None),
            Program::Amplitude { encoding, map, .. } => {
                let z = map.map_forward(x)?;
                Ok(Some(match encoding {
                    AmplitudeEncoding::Dense => z,
                    AmplitudeEncoding::Simplex => stick_breaking(&z),
                }))
            }
        }
    }

    pub fn prepare_state(&self, x: &[f64]) -> Result<StateVector> {
        ensure!(
            x.len() == self.input_dim,
            "model input has dimension {}, expected {}",
            x.len(),
            self.input_dim
        );
        ensure!(
            x.iter().all(|v| (0.0..=1.0).contains(v)),
            "model input must lie in the unit cube"
        );
        match &self.program {
            Program::Circuit { circuit, weights } => Ok(circuit.run_trusted(weights, x, None)),
            Program::Amplitude { encoding, mode, .. } => {
                let point = self.encoded_point(x)?.expect("amplitude program");
                let amps = match encoding {
                    AmplitudeEncoding::Dense => dense_amplitudes(&point),
                    AmplitudeEncoding::Simplex => point.iter().map(|v| v.max(0.0).sqrt()).collect(),
                };
                let state = match mode {
                    PrepMode::ExactInjection => StateVector::from_real_amplitudes(&amps)?,
                    PrepMode::RotationCascade => amplitude_prep(&amps, *mode)?.prepare()?,
                };
                ensure!(
                    state.n_qubits() == self.n_qubits,
                    "encoded state width does not match model"
                );
                Ok(state)
            }
        }
    }

    /// The output vector `(<O_1>, ..., <O_M>)` at input `x`.
    pub fn expectations(&self, x: &[f64]) -> Result<Vec<f64>> {
        let state = self.prepare_state(x)?;
        self.observables
            .iter()
            .map(|o| o.expectation(&state))
            .collect()
    }

    pub fn spectral_summaries(&self) -> Result<Vec<SpectralSummary>> {
        self.observables.iter().map(spectral_summary).collect()
    }

    pub fn eigensystems(&self) -> Result<Vec<Eigensystem>> {
        self.observables.iter().map(eigensystem).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            format: MODEL_FORMAT_NAME.into(),
            version: MODEL_FORMAT_VERSION,
            id: self.id.clone(),
            n_qubits: self.n_qubits,
            input_dim: self.input_dim,
            observables: self.observables.clone(),
            program: match &self.program {
                Program::Circuit { circuit, weights } => ProgramFile::Circuit {
                    circuit: circuit.clone(),
                    weights: weights.clone(),
                },
                Program::Amplitude {
                    encoding,
                    mode,
                    source,
                    ..
                } => ProgramFile::Amplitude {
                    encoding: *encoding,
                    mode: *mode,
                    source: source.clone(),
                },
            },
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.format != MODEL_FORMAT_NAME {
            return Err(Error::Format(format!(
                "not a model file (format field is {:?})",
                file.format
            )));
        }
        if file.version != MODEL_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported model file version {}",
                file.version
            )));
        }
        let program = match file.program {
            ProgramFile::Circuit { circuit, weights } => {
                // Re-run the gate checks on deserialized data.
                let circuit = Circuit::with_ops(circuit.n_qubits(), circuit.ops().to_vec())?;
                Program::Circuit { circuit, weights }
            }
            ProgramFile::Amplitude {
                encoding,
                mode,
                source,
            } => {
                let source =
                    GridDensity::from_values(source.dims(), source.resolution(), source.values().to_vec())?;
                let map = build_triangular_map(&source);
                Program::Amplitude {
                    encoding,
                    mode,
                    source,
                    map,
                }
            }
        };
        let model = EvsModel {
            id: file.id,
            n_qubits: file.n_qubits,
            input_dim: file.input_dim,
            program,
            observables: file.observables,
        };
        model.validate()?;
        Ok(model)
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    id: String,
    n_qubits: usize,
    input_dim: usize,
    observables: Vec<Observable>,
    program: ProgramFile,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum ProgramFile {
    Circuit {
        circuit: Circuit,
        weights: Vec<f64>,
    },
    Amplitude {
        encoding: AmplitudeEncoding,
        mode: PrepMode,
        source: GridDensity,
    },
}

/// Product encoder together with the per-coordinate fit results.
pub struct ProductEncoder {
    pub model: EvsModel,
    pub fits: Vec<FitResult>,
}

/// Fit one re-uploading block per output coordinate to the triangular map of
/// `density` and stack the blocks on separate qubits.
///
/// Coordinate `m` of the map depends on `x_0..x_m`, so block `m` takes
/// `m + 1` inputs and is fitted on a `G^(m+1)` grid. Block `m` is fitted
/// with seed `derive_seed(cfg.seed, [m])`.
pub fn build_product_encoder(
    density: &GridDensity,
    layers: usize,
    cfg: &FitConfig,
) -> Result<ProductEncoder> {
    let m_out = density.dims();
    ensure!(
        m_out <= crate::quantum::MAX_STATE_QUBITS,
        "product encoder supports at most {} outputs",
        crate::quantum::MAX_STATE_QUBITS
    );
    cfg.validate()?;
    let map = build_triangular_map(density);
    let mut ops = Vec::new();
    let mut weights = Vec::new();
    let mut fits = Vec::with_capacity(m_out);
    for m in 0..m_out {
        let block = build_reuploading(m + 1, layers)?;
        let target = GridFunction::from_fn(m + 1, cfg.grid_points_per_dim, |x| {
            map.coordinate(m, x).expect("grid nodes lie in the unit cube")
        })?;
        let block_cfg = FitConfig {
            seed: derive_seed(cfg.seed, &[m as u64]),
            ..cfg.clone()
        };
        let fit = fit_to_function(&block, &target, &excited_minus_ground(1, 0)?, &block_cfg)
            .map_err(|e| match e {
                Error::FitDiverged { iteration, .. } => Error::FitDiverged {
                    coordinate: Some(m),
                    iteration,
                },
                other => other,
            })?;
        ops.extend(reuploading_ops(m + 1, layers, m, weights.len()));
        weights.extend_from_slice(&fit.weights);
        fits.push(fit);
    }
    let circuit = Circuit::with_ops(m_out, ops)?;
    let observables = (0..m_out)
        .map(|m| excited_minus_ground(m_out, m))
        .collect::<Result<Vec<_>>>()?;
    let model = EvsModel::from_circuit(
        format!("product-m{m_out}-l{layers}"),
        circuit,
        weights,
        observables,
        m_out,
    )?;
    Ok(ProductEncoder { model, fits })
}

/// Qubits needed by the dense encoder: `ceil(log2(M + 1))`.
pub fn dense_qubit_count(m: usize) -> usize {
    (m + 1).next_power_of_two().trailing_zeros() as usize
}

/// Amplitudes `sqrt((y_m + 1) / (2M))` for `m < M`, then the residual.
pub fn dense_amplitudes(y: &[f64]) -> Vec<f64> {
    let m = y.len() as f64;
    let mut amps: Vec<f64> = y
        .iter()
        .map(|v| ((v + 1.0) / (2.0 * m)).max(0.0).sqrt())
        .collect();
    let used: f64 = amps.iter().map(|a| a * a).sum();
    amps.push((1.0 - used).max(0.0).sqrt());
    amps
}

/// Dense encoder with amplitudes written exactly.
pub fn build_dense_encoder(density: &GridDensity) -> Result<EvsModel> {
    build_dense_encoder_with_mode(density, PrepMode::ExactInjection)
}

pub fn build_dense_encoder_with_mode(density: &GridDensity, mode: PrepMode) -> Result<EvsModel> {
    let m = density.dims();
    let n = dense_qubit_count(m);
    ensure!(
        n <= MAX_DENSE_QUBITS,
        "dense encoder supports at most {} outputs",
        (1usize << MAX_DENSE_QUBITS) - 1
    );
    let observables = (0..m)
        .map(|i| Observable::amplified_projector(n, i, m))
        .collect::<Result<Vec<_>>>()?;
    let model = EvsModel {
        id: format!("dense-m{m}"),
        n_qubits: n,
        input_dim: m,
        program: Program::Amplitude {
            encoding: AmplitudeEncoding::Dense,
            mode,
            source: density.clone(),
            map: build_triangular_map(density),
        },
        observables,
    };
    model.validate()?;
    Ok(model)
}

/// Map a point of `[-1, 1]^(M-1)` to the simplex in `R^M` by stick breaking:
/// with `v = (z + 1) / 2`, `y_k = v_k prod_{j<k} (1 - v_j)` and the last
/// coordinate takes the remaining length.
pub fn stick_breaking(z: &[f64]) -> Vec<f64> {
    let mut rest = 1.0;
    let mut y = Vec::with_capacity(z.len() + 1);
    for &zk in z {
        let v = ((zk + 1.0) / 2.0).clamp(0.0, 1.0);
        y.push(v * rest);
        rest *= 1.0 - v;
    }
    y.push(rest);
    y
}

/// Tabulate a density given on the simplex in stick-breaking coordinates,
/// including the Jacobian `prod_j (1 - v_j)^(M - 2 - j)`.
pub fn simplex_grid_density<F>(pdf: F, m: usize, resolution: usize) -> Result<GridDensity>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    ensure!(m >= 2, "simplex dimension must be at least 2");
    build_grid_density(
        |z| {
            let y = stick_breaking(z);
            let jac: f64 = z
                .iter()
                .enumerate()
                .map(|(j, &zj)| (1.0 - (zj + 1.0) / 2.0).powi((m - 2 - j) as i32))
                .product();
            pdf(&y) * jac
        },
        m - 1,
        resolution,
    )
}

/// Simplex encoder for `M = 2^n` outputs. `density` lives on the
/// stick-breaking cube of dimension `M - 1` (see [`simplex_grid_density`]).
pub fn build_simplex_encoder(density: &GridDensity, m: usize) -> Result<EvsModel> {
    ensure!(
        m >= 2 && m.is_power_of_two(),
        "simplex encoder needs M = 2^n with n >= 1, got {m}"
    );
    ensure!(
        density.dims() == m - 1,
        "simplex density must have dimension M - 1 = {}, got {}",
        m - 1,
        density.dims()
    );
    let n = m.trailing_zeros() as usize;
    ensure!(n <= MAX_DENSE_QUBITS, "simplex encoder supports at most 2^{MAX_DENSE_QUBITS} outputs");
    let observables = (0..m)
        .map(|i| Observable::basis_projector(n, i))
        .collect::<Result<Vec<_>>>()?;
    let model = EvsModel {
        id: format!("simplex-m{m}"),
        n_qubits: n,
        input_dim: m - 1,
        program: Program::Amplitude {
            encoding: AmplitudeEncoding::Simplex,
            mode: PrepMode::ExactInjection,
            source: density.clone(),
            map: build_triangular_map(density),
        },
        observables,
    };
    model.validate()?;
    Ok(model)
}
