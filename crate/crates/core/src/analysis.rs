//! Expressivity diagnostics: the Pauli-basis primary map and its covariance
//! rank, Fourier spectra of model outputs, and resource feasibility checks.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::quantum::{
    Binding, Circuit, GateOp, PauliString, SpectralSummary, StateVector, C64, MAX_DENSE_QUBITS,
};
use crate::reuploading::ReuploadingCircuit;
use crate::rng::{keyed_rng, uniform_input};

/// Relative eigenvalue threshold for the numerical rank.
pub const DEFAULT_RANK_THRESHOLD: f64 = 1e-8;
/// Below this absolute level all eigenvalues count as zero.
pub const RANK_FLOOR: f64 = 1e-12;
pub const DEFAULT_COVARIANCE_SAMPLES: usize = 4096;

/// Expectations of all `4^n` Pauli strings, in lexicographic order over
/// `{I, X, Y, Z}` with qubit 0 as the most significant digit.
pub fn primary_map_of_state(state: &StateVector) -> Result<Vec<f64>> {
    let n = state.n_qubits();
    ensure!(
        n <= MAX_DENSE_QUBITS,
        "primary map supports at most {MAX_DENSE_QUBITS} qubits, got {n}"
    );
    let count = 1usize << (2 * n);
    let mut out: Vec<f64> = (0..count)
        .map(|k| PauliString::from_index(k, n).expectation(state))
        .collect();
    out[0] = 1.0;
    Ok(out)
}

/// Primary map of the state `U(x)|0...0>`.
pub fn primary_map_eval(circuit: &Circuit, weights: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    ensure!(
        circuit.n_qubits() <= MAX_DENSE_QUBITS,
        "primary map supports at most {MAX_DENSE_QUBITS} qubits, got {}",
        circuit.n_qubits()
    );
    primary_map_of_state(&circuit.run(weights, x)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrimaryMappingReport {
    pub n_qubits: usize,
    pub samples: usize,
    /// Row-major `4^n x 4^n` sample covariance.
    pub covariance: Vec<f64>,
    /// Eigenvalues in descending order.
    pub eigenvalues: Vec<f64>,
    pub numerical_rank: usize,
    pub threshold: f64,
    pub floor: f64,
}

/// Number of eigenvalues above `threshold * max`, or 0 when every
/// eigenvalue is at most [`RANK_FLOOR`].
pub fn numerical_rank(eigenvalues: &[f64], threshold: f64) -> usize {
    let max = eigenvalues.iter().copied().fold(0.0, f64::max);
    if max <= RANK_FLOOR {
        return 0;
    }
    eigenvalues.iter().filter(|&&e| e > threshold * max).count()
}

/// Sample covariance (normalized by `N - 1`) of the rows, row-major.
pub fn sample_covariance(rows: &[Vec<f64>]) -> Vec<f64> {
    let d = rows[0].len();
    let n = rows.len() as f64;
    let mut mean = vec![0.0; d];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut cov = vec![0.0; d * d];
    for r in rows {
        for i in 0..d {
            let di = r[i] - mean[i];
            if di == 0.0 {
                continue;
            }
            for j in 0..d {
                cov[i * d + j] += di * (r[j] - mean[j]);
            }
        }
    }
    cov.iter_mut().for_each(|c| *c /= n - 1.0);
    cov
}

/// Eigenvalues of a symmetric row-major matrix, descending.
pub fn symmetric_eigenvalues(matrix: &[f64], d: usize) -> Vec<f64> {
    let m = DMatrix::from_row_slice(d, d, matrix);
    let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

/// Covariance of the primary map over `samples` uniform inputs on
/// `[0, 1]^input_dim`, with its spectrum and numerical rank.
pub fn primary_covariance(
    circuit: &Circuit,
    weights: &[f64],
    input_dim: usize,
    samples: usize,
    seed: u64,
    threshold: f64,
) -> Result<PrimaryMappingReport> {
    ensure!(samples >= 2, "covariance needs at least 2 samples");
    ensure!(
        circuit.n_qubits() <= MAX_DENSE_QUBITS,
        "primary map supports at most {MAX_DENSE_QUBITS} qubits"
    );
    ensure!(threshold > 0.0, "rank threshold must be positive");
    circuit.validate_inputs(weights, &vec![0.0; input_dim])?;
    let rows: Vec<Vec<f64>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let x = uniform_input(seed, i as u64, input_dim);
            primary_map_of_state(&circuit.run_trusted(weights, &x, None))
        })
        .collect::<Result<_>>()?;
    let d = rows[0].len();
    let covariance = sample_covariance(&rows);
    let eigenvalues = symmetric_eigenvalues(&covariance, d);
    Ok(PrimaryMappingReport {
        n_qubits: circuit.n_qubits(),
        samples,
        numerical_rank: numerical_rank(&eigenvalues, threshold),
        covariance,
        eigenvalues,
        threshold,
        floor: RANK_FLOOR,
    })
}

/// A random layered encoding: each layer applies a data rotation
/// `R(x_d w)` about a random axis to every qubit (with `d` cycling through
/// the inputs), then trainable RY and RZ, then a CNOT ladder. Weights are
/// uniform in `[-pi, pi]`.
pub fn random_layered_encoding(
    n_qubits: usize,
    input_dim: usize,
    layers: usize,
    seed: u64,
) -> Result<(Circuit, Vec<f64>)> {
    ensure!(input_dim >= 1, "input dimension must be positive");
    let mut rng = keyed_rng(seed, &[]);
    let mut circuit = Circuit::new(n_qubits)?;
    let mut w = 0usize;
    let mut d = 0usize;
    for _ in 0..layers {
        for q in 0..n_qubits {
            let binding = Binding::DataProduct {
                data: d % input_dim,
                weight: w,
            };
            d += 1;
            w += 1;
            let op = match rng.random_range(0..3) {
                0 => GateOp::rx(q, binding),
                1 => GateOp::ry(q, binding),
                _ => GateOp::rz(q, binding),
            };
            circuit.push(op)?;
            circuit.push(GateOp::ry(q, Binding::Trainable { weight: w }))?;
            circuit.push(GateOp::rz(q, Binding::Trainable { weight: w + 1 }))?;
            w += 2;
        }
        for q in 1..n_qubits {
            circuit.push(GateOp::cnot(q - 1, q))?;
        }
    }
    let pi = std::f64::consts::PI;
    let weights = (0..w).map(|_| rng.random_range(-pi..=pi)).collect();
    Ok((circuit, weights))
}

/// Fourier coefficients `c_k`, `k` in `[-K, K]^M`, stored row-major with
/// `k_0` varying slowest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierSpectrum {
    pub dims: usize,
    pub cutoff: usize,
    pub points_per_dim: usize,
    pub coefficients: Vec<C64>,
}

impl FourierSpectrum {
    fn flat_index(&self, k: &[i64]) -> Option<usize> {
        let width = 2 * self.cutoff as i64 + 1;
        let mut idx = 0i64;
        for &kd in k {
            if kd.unsigned_abs() as usize > self.cutoff {
                return None;
            }
            idx = idx * width + kd + self.cutoff as i64;
        }
        Some(idx as usize)
    }

    /// The multi-index of flat position `i`.
    pub fn frequency(&self, mut i: usize) -> Vec<i64> {
        let width = 2 * self.cutoff + 1;
        let mut k = vec![0i64; self.dims];
        for d in (0..self.dims).rev() {
            k[d] = (i % width) as i64 - self.cutoff as i64;
            i /= width;
        }
        k
    }

    pub fn coefficient(&self, k: &[i64]) -> Option<C64> {
        if k.len() != self.dims {
            return None;
        }
        self.flat_index(k).map(|i| self.coefficients[i])
    }

    /// Largest `|c_k|` over frequencies with some `|k_m| > bound`.
    pub fn max_beyond(&self, bound: usize) -> f64 {
        (0..self.coefficients.len())
            .filter(|&i| self.frequency(i).iter().any(|k| k.unsigned_abs() as usize > bound))
            .map(|i| self.coefficients[i].norm())
            .fold(0.0, f64::max)
    }

    /// Largest `|c_k - conj(c_{-k})|`.
    pub fn conjugate_asymmetry(&self) -> f64 {
        (0..self.coefficients.len())
            .map(|i| {
                let neg: Vec<i64> = self.frequency(i).iter().map(|k| -k).collect();
                let j = self.flat_index(&neg).expect("symmetric range");
                (self.coefficients[i] - self.coefficients[j].conj()).norm()
            })
            .fold(0.0, f64::max)
    }

    /// `sum_k c_k exp(i k . x)`, real part.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        (0..self.coefficients.len())
            .map(|i| {
                let phase: f64 = self
                    .frequency(i)
                    .iter()
                    .zip(x)
                    .map(|(&k, &xi)| k as f64 * xi)
                    .sum();
                (self.coefficients[i] * C64::from_polar(1.0, phase)).re
            })
            .sum()
    }
}

/// Fourier coefficients of `f` on `[0, 2 pi)^M` by the rectangle rule on a
/// `Q^M` grid. `Q >= 4K + 4` is required.
pub fn fourier_coefficients<F>(f: F, dims: usize, cutoff: usize, points: usize) -> Result<FourierSpectrum>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    ensure!(dims >= 1, "dimension must be positive");
    ensure!(
        points >= 4 * cutoff + 4,
        "quadrature needs Q >= 4K + 4 = {} points per dimension, got {points}",
        4 * cutoff + 4
    );
    let grid = points
        .checked_pow(dims as u32)
        .filter(|&g| g <= 1 << 24)
        .ok_or_else(|| crate::Error::validation("quadrature grid too large"))?;
    let width = 2 * cutoff + 1;
    width
        .checked_pow(dims as u32)
        .filter(|&c| c <= 1 << 22)
        .ok_or_else(|| crate::Error::validation("too many Fourier coefficients"))?;
    let step = 2.0 * std::f64::consts::PI / points as f64;
    let samples: Vec<C64> = (0..grid)
        .into_par_iter()
        .map(|i| {
            let mut x = vec![0.0; dims];
            let mut rem = i;
            for d in (0..dims).rev() {
                x[d] = (rem % points) as f64 * step;
                rem /= points;
            }
            C64::new(f(&x), 0.0)
        })
        .collect();
    // twiddle[k + K][j] = exp(-i k x_j) / Q
    let twiddle: Vec<Vec<C64>> = (0..width)
        .map(|kk| {
            let k = kk as f64 - cutoff as f64;
            (0..points)
                .map(|j| C64::from_polar(1.0 / points as f64, -k * j as f64 * step))
                .collect()
        })
        .collect();
    // Contract one axis at a time, last axis first. The working array has
    // shape (Q^d, width^(dims-d)) flattened row-major.
    let mut data = samples;
    let mut outer = grid;
    let mut inner = 1usize;
    for _ in 0..dims {
        outer /= points;
        let next: Vec<C64> = (0..outer)
            .into_par_iter()
            .flat_map_iter(|o| {
                let data = &data;
                let twiddle = &twiddle;
                (0..width).flat_map(move |kk| {
                    (0..inner).map(move |r| {
                        (0..points)
                            .map(|j| twiddle[kk][j] * data[(o * points + j) * inner + r])
                            .sum::<C64>()
                    })
                })
            })
            .collect();
        data = next;
        inner *= width;
    }
    Ok(FourierSpectrum {
        dims,
        cutoff,
        points_per_dim: points,
        coefficients: data,
    })
}

/// Copy of `weights` with every data-multiplying weight set to `value`.
/// With `value = 1` each encoding gate contributes integer frequencies.
pub fn fix_data_weights(circuit: &ReuploadingCircuit, weights: &[f64], value: f64) -> Vec<f64> {
    let mut w = weights.to_vec();
    for op in circuit.circuit().ops() {
        if let Some(Binding::DataProduct { weight, .. }) = op.binding {
            w[weight] = value;
        }
    }
    w
}

/// Binary entropy in bits.
pub fn binary_entropy(q: f64) -> f64 {
    let h = |p: f64| if p <= 0.0 { 0.0 } else { -p * p.log2() };
    h(q) + h(1.0 - q)
}

/// `(1 - H(q)) / ln(1 / q)`.
pub fn holevo_chernoff_coefficient(q: f64) -> f64 {
    (1.0 - binary_entropy(q)) / (1.0 / q).ln()
}

/// `q = 0.51, 0.52, ..., 0.99`.
pub fn default_q_grid() -> Vec<f64> {
    (51..=99).map(|i| i as f64 / 100.0).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityCheck {
    pub name: String,
    pub passed: bool,
    /// Threshold the observed value is compared with; infinite bounds are
    /// written as `null`.
    pub bound: f64,
    pub observed: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub n_qubits: usize,
    pub output_dim: usize,
    pub epsilon: f64,
    pub gamma: f64,
    pub q_grid: Vec<f64>,
    pub entropies: Vec<f64>,
    pub spectra: Vec<SpectralSummary>,
    /// `q` at which the Lambda-based requirement is largest.
    pub q_star: f64,
    /// Qubits required by the Lambda-based inequality (max over observables).
    pub n_required: f64,
    /// Qubits required when Lambda is replaced by the squared spectral norm.
    pub n_required_norm: f64,
    pub checks: Vec<FeasibilityCheck>,
    pub feasible: bool,
}

/// Required qubit count `max_q coef(q) * gamma^2 * M / lambda`, with the
/// maximizing `q`. Infinite when `lambda <= 0`.
fn required_qubits(q_grid: &[f64], gamma: f64, m: usize, lambda: f64) -> (f64, f64) {
    let mut best = (f64::NEG_INFINITY, q_grid[0]);
    for &q in q_grid {
        let c = holevo_chernoff_coefficient(q);
        if c > best.0 {
            best = (c, q);
        }
    }
    let n = if lambda > 0.0 {
        best.0 * gamma * gamma * m as f64 / lambda
    } else {
        f64::INFINITY
    };
    (n, best.1)
}

/// Necessary conditions for `n` qubits and `M` observables to reach every
/// target within `epsilon`: the observable-space dimension bound, the
/// spectral range of each observable, and the Holevo/Chernoff inequality.
///
/// `spectra` has one entry per observable, or a single entry shared by all.
pub fn check_feasibility(
    n: usize,
    m: usize,
    epsilon: f64,
    spectra: &[SpectralSummary],
    q_grid: &[f64],
) -> Result<FeasibilityReport> {
    ensure!(
        epsilon > 0.0 && epsilon < 1.0,
        "epsilon must lie in (0, 1), got {epsilon}"
    );
    ensure!(n >= 1 && m >= 1, "qubit and output counts must be positive");
    ensure!(
        spectra.len() == m || spectra.len() == 1,
        "expected 1 or {m} spectral summaries, got {}",
        spectra.len()
    );
    ensure!(!q_grid.is_empty(), "q grid is empty");
    ensure!(
        q_grid.iter().all(|&q| q > 0.5 && q < 1.0),
        "q grid values must lie in (1/2, 1)"
    );
    let gamma = 1.0 - epsilon;
    let spectra: Vec<SpectralSummary> = if spectra.len() == 1 {
        vec![spectra[0]; m]
    } else {
        spectra.to_vec()
    };

    let dim_bound = 4f64.powi(n as i32) - 1.0;
    let worst_min = spectra.iter().map(|s| s.lambda_min).fold(f64::NEG_INFINITY, f64::max);
    let worst_max = spectra.iter().map(|s| s.lambda_max).fold(f64::INFINITY, f64::min);

    let mut n_required = f64::NEG_INFINITY;
    let mut n_required_norm = f64::NEG_INFINITY;
    let mut q_star = q_grid[0];
    for s in &spectra {
        let (req, q) = required_qubits(q_grid, gamma, m, s.capital_lambda);
        if req > n_required {
            n_required = req;
            q_star = q;
        }
        let (req_norm, _) = required_qubits(q_grid, gamma, m, s.spectral_norm * s.spectral_norm);
        n_required_norm = n_required_norm.max(req_norm);
    }

    let checks = vec![
        FeasibilityCheck {
            name: "dimension".into(),
            passed: m as f64 <= dim_bound,
            bound: dim_bound,
            observed: m as f64,
        },
        FeasibilityCheck {
            name: "spectral_min".into(),
            passed: worst_min <= -gamma,
            bound: -gamma,
            observed: worst_min,
        },
        FeasibilityCheck {
            name: "spectral_max".into(),
            passed: worst_max >= gamma,
            bound: gamma,
            observed: worst_max,
        },
        FeasibilityCheck {
            name: "holevo_chernoff".into(),
            passed: n as f64 >= n_required,
            bound: n_required,
            observed: n as f64,
        },
        FeasibilityCheck {
            name: "holevo_chernoff_norm".into(),
            passed: n as f64 >= n_required_norm,
            bound: n_required_norm,
            observed: n as f64,
        },
    ];
    let feasible = checks.iter().all(|c| c.passed);
    Ok(FeasibilityReport {
        n_qubits: n,
        output_dim: m,
        epsilon,
        gamma,
        entropies: q_grid.iter().map(|&q| binary_entropy(q)).collect(),
        q_grid: q_grid.to_vec(),
        spectra,
        q_star,
        n_required,
        n_required_norm,
        checks,
        feasible,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{pauli_coefficients, spectral_summary, Observable};

    fn unit_z() -> SpectralSummary {
        spectral_summary(&Observable::pauli("Z").unwrap()).unwrap()
    }

    #[test]
    fn identity_component_is_one() {
        let (c, w) = random_layered_encoding(2, 2, 2, 4).unwrap();
        let p = primary_map_eval(&c, &w, &[0.3, 0.6]).unwrap();
        assert_eq!(p.len(), 16);
        assert_eq!(p[0], 1.0);
    }

    #[test]
    fn bloch_vector_is_unit() {
        for seed in 0..10 {
            let (c, w) = random_layered_encoding(1, 1, 3, seed).unwrap();
            let p = primary_map_eval(&c, &w, &[0.42]).unwrap();
            let r = (p[1] * p[1] + p[2] * p[2] + p[3] * p[3]).sqrt();
            assert!((r - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn expectation_is_linear_in_primary_map() {
        let (c, w) = random_layered_encoding(2, 1, 2, 9).unwrap();
        let mut rng = keyed_rng(1, &[]);
        let diag: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
        let obs = Observable::diagonal(&diag).unwrap();
        let a = pauli_coefficients(&obs).unwrap();
        let x = [0.77];
        let p = primary_map_eval(&c, &w, &x).unwrap();
        let lin: f64 = a.iter().zip(&p).map(|(ai, pi)| ai * pi).sum();
        let direct = obs.expectation(&c.run(&w, &x).unwrap()).unwrap();
        assert!((lin - direct).abs() < 1e-10);
    }

    #[test]
    fn constant_encoding_has_rank_zero() {
        let mut c = Circuit::new(1).unwrap();
        c.push(GateOp::ry(0, Binding::Trainable { weight: 0 })).unwrap();
        let r = primary_covariance(&c, &[0.7], 1, 64, 0, DEFAULT_RANK_THRESHOLD).unwrap();
        assert_eq!(r.numerical_rank, 0);
    }

    #[test]
    fn cosine_spectrum() {
        let s = fourier_coefficients(|x| x[0].cos(), 1, 3, 16).unwrap();
        for k in -3..=3i64 {
            let c = s.coefficient(&[k]).unwrap();
            let expected = if k.abs() == 1 { 0.5 } else { 0.0 };
            assert!((c.re - expected).abs() < 1e-10 && c.im.abs() < 1e-10);
        }
        assert!(fourier_coefficients(|x| x[0], 1, 3, 15).is_err());
    }

    #[test]
    fn two_dim_spectrum_and_resynthesis() {
        let f = |x: &[f64]| (x[0] + 2.0 * x[1]).sin() + 0.25 * x[1].cos();
        let s = fourier_coefficients(f, 2, 2, 12).unwrap();
        let c = s.coefficient(&[1, 2]).unwrap();
        assert!((c - C64::new(0.0, -0.5)).norm() < 1e-12);
        assert!(s.conjugate_asymmetry() < 1e-12);
        for x in [[0.3, 1.9], [4.0, 5.5]] {
            assert!((s.evaluate(&x) - f(&x)).abs() < 1e-12);
        }
    }

    #[test]
    fn entropy_values() {
        assert_eq!(binary_entropy(0.5), 1.0);
        assert!(binary_entropy(0.99) < 0.1);
        assert_eq!(binary_entropy(1.0), 0.0);
    }

    #[test]
    fn feasibility_examples() {
        let r = check_feasibility(1, 4, 0.1, &[unit_z()], &default_q_grid()).unwrap();
        assert!(!r.checks[0].passed);
        assert!(!r.feasible);
        let r = check_feasibility(1, 3, 0.1, &[unit_z()], &default_q_grid()).unwrap();
        assert!(r.checks[0].passed);
        let r = check_feasibility(1, 1, 0.05, &[unit_z()], &default_q_grid()).unwrap();
        assert!(r.checks[1].passed && r.checks[2].passed);
        assert!(check_feasibility(1, 1, 0.0, &[unit_z()], &default_q_grid()).is_err());
        assert!(check_feasibility(1, 1, 1.0, &[unit_z()], &default_q_grid()).is_err());
        assert!(check_feasibility(1, 2, 0.1, &[unit_z(); 3], &default_q_grid()).is_err());
        assert!(check_feasibility(1, 2, 0.1, &[unit_z()], &[0.5]).is_err());
    }

    #[test]
    fn same_sign_spectrum_is_infeasible() {
        let s = SpectralSummary::from_extremes(0.0, 1.0).unwrap();
        let r = check_feasibility(3, 1, 0.1, &[s], &default_q_grid()).unwrap();
        assert!(r.n_required.is_infinite());
        assert!(!r.feasible);
    }
}
