//! Sample sets and the exact, shot-noise and Gaussian-noise samplers.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rand_distr::{Binomial, Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::generators::EvsModel;
use crate::io::{with_suffix, write_atomic};
use crate::quantum::Eigensystem;
use crate::rng::{keyed_rng, uniform_input, TAG_NOISE, TAG_SHOTS};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SampleMode {
    Exact,
    Shots { t: u64 },
    Gaussian { epsilon: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub seed: u64,
    pub mode: SampleMode,
    pub model_id: String,
    pub n: usize,
    /// SHA-256 of the configuration that produced the set, when written by the CLI.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
}

/// `N` rows of `M` reals, stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    dims: usize,
    values: Vec<f64>,
    pub meta: SampleMeta,
}

impl SampleSet {
    pub fn new(dims: usize, values: Vec<f64>, meta: SampleMeta) -> Result<Self> {
        ensure!(dims >= 1, "sample dimension must be positive");
        ensure!(
            values.len().is_multiple_of(dims),
            "{} values do not form rows of length {dims}",
            values.len()
        );
        ensure!(
            values.iter().all(|v| v.is_finite()),
            "sample values must be finite"
        );
        let n = values.len() / dims;
        Ok(SampleSet {
            dims,
            values,
            meta: SampleMeta { n, ..meta },
        })
    }

    /// Samples without provenance, mostly for tests and loaded reference data.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        ensure!(!rows.is_empty(), "sample set needs at least one row");
        let dims = rows[0].len();
        ensure!(
            rows.iter().all(|r| r.len() == dims),
            "rows have inconsistent lengths"
        );
        Self::new(
            dims,
            rows.concat(),
            SampleMeta {
                seed: 0,
                mode: SampleMode::Exact,
                model_id: "external".into(),
                n: rows.len(),
                config_hash: None,
            },
        )
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dims
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dims..(i + 1) * self.dims]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dims)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dims];
        for r in self.rows() {
            for (a, v) in m.iter_mut().zip(r) {
                *a += v;
            }
        }
        let n = self.len() as f64;
        m.iter_mut().for_each(|a| *a /= n);
        m
    }

    /// Pearson correlation of columns `i` and `j`.
    pub fn correlation(&self, i: usize, j: usize) -> f64 {
        let m = self.mean();
        let (mut sij, mut sii, mut sjj) = (0.0, 0.0, 0.0);
        for r in self.rows() {
            let (a, b) = (r[i] - m[i], r[j] - m[j]);
            sij += a * b;
            sii += a * a;
            sjj += b * b;
        }
        sij / (sii * sjj).sqrt()
    }

    /// CSV text: header `y1,...,yM`, then one row per sample with 17
    /// significant digits so values round-trip exactly.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.values.len() * 25);
        let header: Vec<String> = (1..=self.dims).map(|i| format!("y{i}")).collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for r in self.rows() {
            for (j, v) in r.iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{v:.16e}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str, meta: SampleMeta) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Format("empty sample file".into()))?;
        let dims = header.split(',').count();
        for (j, name) in header.split(',').enumerate() {
            if name.trim() != format!("y{}", j + 1) {
                return Err(Error::Format(format!(
                    "unexpected column name {name:?} at position {}",
                    j + 1
                )));
            }
        }
        let mut values = Vec::new();
        for (i, line) in lines.enumerate() {
            let before = values.len();
            for field in line.split(',') {
                let v: f64 = field.trim().parse().map_err(|_| {
                    Error::Format(format!("row {}: cannot parse {field:?}", i + 1))
                })?;
                values.push(v);
            }
            if values.len() - before != dims {
                return Err(Error::Format(format!(
                    "row {} has {} fields, expected {dims}",
                    i + 1,
                    values.len() - before
                )));
            }
        }
        ensure!(!values.is_empty(), "sample file has no rows");
        Self::new(dims, values, meta)
    }

    /// Write the CSV to `path` and the metadata to `path` + `.meta.json`.
    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_csv().as_bytes())?;
        let meta = serde_json::to_string_pretty(&self.meta)?;
        write_atomic(&with_suffix(path, ".meta.json"), meta.as_bytes())
    }

    /// Read a CSV file, picking up the metadata sidecar when present.
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let sidecar = with_suffix(path, ".meta.json");
        let meta = if sidecar.exists() {
            serde_json::from_str(&std::fs::read_to_string(sidecar)?)?
        } else {
            SampleMeta {
                seed: 0,
                mode: SampleMode::Exact,
                model_id: path.display().to_string(),
                n: 0,
                config_hash: None,
            }
        };
        Self::from_csv(&text, meta)
    }
}

/// Shots per observable per sample; the total budget per sample is `t * M`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotConfig {
    pub t: u64,
}

impl ShotConfig {
    pub fn new(t: u64) -> Result<Self> {
        ensure!(t >= 1, "shots per observable must be at least 1");
        Ok(ShotConfig { t })
    }

    pub fn total(&self, output_dim: usize) -> u64 {
        self.t * output_dim as u64
    }
}

/// Exact expectation values at `n` uniform input draws.
///
/// Row `i` uses the input stream keyed by `(seed, i)`, so any subset of rows
/// can be regenerated independently.
pub fn sample_exact(model: &EvsModel, n: usize, seed: u64) -> Result<SampleSet> {
    ensure!(n >= 1, "sample count must be positive");
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let x = uniform_input(seed, i as u64, model.input_dim());
            model.expectations(&x)
        })
        .collect::<Result<_>>()?;
    SampleSet::new(
        model.output_dim(),
        rows.concat(),
        SampleMeta {
            seed,
            mode: SampleMode::Exact,
            model_id: model.id().to_string(),
            n,
            config_hash: None,
        },
    )
}

/// Average of `t` eigenvalue draws from a Born distribution.
///
/// Counts per outcome are drawn as a multinomial (a chain of conditional
/// binomials), which has the same law as `t` independent single draws.
pub fn shot_average<R: Rng + ?Sized>(outcomes: &[(f64, f64)], t: u64, rng: &mut R) -> f64 {
    let mut remaining = t;
    let mut mass_left = 1.0;
    let mut sum = 0.0;
    for (k, &(value, p)) in outcomes.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        let count = if k + 1 == outcomes.len() || mass_left <= 0.0 {
            remaining
        } else {
            let q = (p / mass_left).clamp(0.0, 1.0);
            Binomial::new(remaining, q)
                .expect("probability clamped to [0, 1]")
                .sample(rng)
        };
        sum += value * count as f64;
        remaining -= count;
        mass_left -= p;
    }
    sum / t as f64
}

/// Finite-shot estimates: each entry averages `cfg.t` measurements of its
/// observable on the state prepared from the row's input.
///
/// Inputs are the same draws as [`sample_exact`] with the same seed, and the
/// shot stream for entry `(i, m)` is keyed by `(seed, i, m)`.
pub fn sample_with_shots(
    model: &EvsModel,
    n: usize,
    cfg: ShotConfig,
    seed: u64,
) -> Result<SampleSet> {
    ensure!(n >= 1, "sample count must be positive");
    ensure!(cfg.t >= 1, "shots per observable must be at least 1");
    let eigs: Vec<Eigensystem> = model.eigensystems()?;
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let x = uniform_input(seed, i as u64, model.input_dim());
            let state = model.prepare_state(&x)?;
            eigs.iter()
                .enumerate()
                .map(|(m, eig)| {
                    let dist = eig.outcome_distribution(&state)?;
                    let mut rng = keyed_rng(seed, &[TAG_SHOTS, i as u64, m as u64]);
                    Ok(shot_average(&dist, cfg.t, &mut rng))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    SampleSet::new(
        model.output_dim(),
        rows.concat(),
        SampleMeta {
            seed,
            mode: SampleMode::Shots { t: cfg.t },
            model_id: model.id().to_string(),
            n,
            config_hash: None,
        },
    )
}

/// Add independent `N(0, epsilon^2)` noise to every entry.
pub fn gaussian_noise_model(samples: &SampleSet, epsilon: f64, seed: u64) -> Result<SampleSet> {
    ensure!(
        epsilon >= 0.0 && epsilon.is_finite(),
        "noise level must be finite and nonnegative, got {epsilon}"
    );
    let mut out = samples.clone();
    out.meta.mode = SampleMode::Gaussian { epsilon };
    out.meta.seed = seed;
    if epsilon == 0.0 {
        return Ok(out);
    }
    let normal = Normal::new(0.0, epsilon).expect("epsilon checked");
    let dims = samples.dims();
    out.values
        .par_chunks_mut(dims)
        .enumerate()
        .for_each(|(i, row)| {
            let mut rng = keyed_rng(seed, &[TAG_NOISE, i as u64]);
            for v in row {
                *v += normal.sample(&mut rng);
            }
        });
    Ok(out)
}

/// Measurement budget `ceil(c * M * norm / epsilon^2)`.
pub fn required_shots(output_dim: usize, spectral_norm: f64, epsilon: f64, c: f64) -> Result<u64> {
    ensure!(
        epsilon > 0.0 && epsilon.is_finite(),
        "epsilon must be positive, got {epsilon}"
    );
    ensure!(output_dim >= 1, "output dimension must be positive");
    ensure!(
        spectral_norm >= 0.0 && spectral_norm.is_finite(),
        "spectral norm must be finite and nonnegative"
    );
    ensure!(c > 0.0 && c.is_finite(), "constant must be positive");
    let raw = c * output_dim as f64 * spectral_norm / (epsilon * epsilon);
    // 1 / 0.1^2 evaluates to 100.00000000000001; snap values within a few
    // ulps of an integer before taking the ceiling.
    let nearest = raw.round();
    let t = if (raw - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest
    } else {
        raw.ceil()
    };
    ensure!(t <= u64::MAX as f64, "required shot count overflows");
    Ok(t as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{eigensystem, Observable, StateVector};

    fn meta() -> SampleMeta {
        SampleMeta {
            seed: 1,
            mode: SampleMode::Exact,
            model_id: "t".into(),
            n: 0,
            config_hash: None,
        }
    }

    #[test]
    fn required_shots_examples() {
        assert_eq!(required_shots(1, 1.0, 0.1, 1.0).unwrap(), 100);
        assert_eq!(required_shots(3, 5.0, 0.1, 1.0).unwrap(), 1500);
        assert_eq!(required_shots(6, 5.0, 0.1, 1.0).unwrap(), 3000);
        assert_eq!(required_shots(1, 1.0, 0.3, 1.0).unwrap(), 12);
        assert!(required_shots(1, 1.0, 0.0, 1.0).is_err());
        assert!(required_shots(1, 1.0, -0.1, 1.0).is_err());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let vals = vec![0.1, -1.0 / 3.0, 1e-300, std::f64::consts::PI, -0.0, 2.5e10];
        let s = SampleSet::new(2, vals.clone(), meta()).unwrap();
        let text = s.to_csv();
        assert!(text.starts_with("y1,y2\n"));
        let back = SampleSet::from_csv(&text, meta()).unwrap();
        assert_eq!(back.values(), &vals[..]);
        assert_eq!(back.meta.n, 3);
    }

    #[test]
    fn csv_rejects_ragged_rows() {
        assert!(SampleSet::from_csv("y1,y2\n1,2\n3\n", meta()).is_err());
        assert!(SampleSet::from_csv("a,b\n1,2\n", meta()).is_err());
        assert!(SampleSet::from_csv("y1\nfoo\n", meta()).is_err());
    }

    #[test]
    fn nonfinite_values_rejected() {
        assert!(SampleSet::new(1, vec![f64::NAN], meta()).is_err());
    }

    #[test]
    fn deterministic_outcome_gives_exact_average() {
        let eig = eigensystem(&Observable::pauli("Z").unwrap()).unwrap();
        let dist = eig.outcome_distribution(&StateVector::zero(1).unwrap()).unwrap();
        let mut rng = keyed_rng(0, &[]);
        for t in [1, 7, 1000] {
            assert_eq!(shot_average(&dist, t, &mut rng), 1.0);
        }
    }

    #[test]
    fn gaussian_zero_is_identity() {
        let s = SampleSet::new(1, vec![0.25, 0.5], meta()).unwrap();
        let out = gaussian_noise_model(&s, 0.0, 9).unwrap();
        assert_eq!(out.values(), s.values());
        assert!(gaussian_noise_model(&s, -0.1, 9).is_err());
    }

    #[test]
    fn write_and_read_with_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        let s = SampleSet::new(1, vec![0.125, 0.75], meta()).unwrap();
        s.write(&p).unwrap();
        assert!(dir.path().join("s.csv.meta.json").exists());
        assert_eq!(SampleSet::read(&p).unwrap(), s);
    }
}
