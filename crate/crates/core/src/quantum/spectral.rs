use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{Observable, StateVector, C64};
use crate::error::{ensure, Result};

/// Extremal spectrum of an observable.
///
/// `capital_lambda = -lambda_min * lambda_max` is the quantity entering the
/// qubit-count necessary condition; it never exceeds `spectral_norm^2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralSummary {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub spectral_norm: f64,
    pub capital_lambda: f64,
}

impl SpectralSummary {
    pub fn from_extremes(lambda_min: f64, lambda_max: f64) -> Result<Self> {
        ensure!(
            lambda_min.is_finite() && lambda_max.is_finite(),
            "eigenvalues must be finite"
        );
        ensure!(
            lambda_min <= lambda_max,
            "lambda_min {lambda_min} exceeds lambda_max {lambda_max}"
        );
        Ok(SpectralSummary {
            lambda_min,
            lambda_max,
            spectral_norm: lambda_min.abs().max(lambda_max.abs()),
            capital_lambda: -lambda_min * lambda_max,
        })
    }
}

/// Eigenvalues (ascending) with the matching orthonormal eigenvectors as columns.
#[derive(Clone, Debug)]
pub struct Eigensystem {
    pub values: Vec<f64>,
    pub vectors: DMatrix<C64>,
}

impl Eigensystem {
    /// Born distribution over the distinct eigenvalues of the observable for
    /// the given state. Eigenvalues closer than `1e-10 * max(1, |lambda|)`
    /// are merged into one outcome.
    pub fn outcome_distribution(&self, state: &StateVector) -> Result<Vec<(f64, f64)>> {
        let dim = self.vectors.nrows();
        ensure!(
            state.dim() == dim,
            "state dimension {} does not match observable dimension {dim}",
            state.dim()
        );
        let amps = state.amplitudes();
        let mut outcomes: Vec<(f64, f64)> = Vec::new();
        for (j, &lambda) in self.values.iter().enumerate() {
            let overlap: C64 = (0..dim).map(|i| self.vectors[(i, j)].conj() * amps[i]).sum();
            let p = overlap.norm_sqr();
            match outcomes.last_mut() {
                Some((v, acc)) if (lambda - *v).abs() <= 1e-10 * v.abs().max(1.0) => *acc += p,
                _ => outcomes.push((lambda, p)),
            }
        }
        let total: f64 = outcomes.iter().map(|(_, p)| p).sum();
        for (_, p) in &mut outcomes {
            *p /= total;
        }
        Ok(outcomes)
    }

    pub fn summary(&self) -> Result<SpectralSummary> {
        SpectralSummary::from_extremes(self.values[0], *self.values.last().unwrap())
    }
}

/// Full Hermitian eigendecomposition.
pub fn eigensystem(obs: &Observable) -> Result<Eigensystem> {
    // Re-checks Hermiticity for deserialized or hand-built instances.
    obs.validate()?;
    let eig = SymmetricEigen::new(obs.to_dense());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    Ok(Eigensystem { values, vectors })
}

pub fn spectral_summary(obs: &Observable) -> Result<SpectralSummary> {
    eigensystem(obs)?.summary()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-10 * b.abs().max(1.0)
    }

    #[test]
    fn pauli_z_spectrum() {
        let s = spectral_summary(&Observable::pauli("Z").unwrap()).unwrap();
        assert!(close(s.lambda_min, -1.0) && close(s.lambda_max, 1.0));
        assert!(close(s.spectral_norm, 1.0) && close(s.capital_lambda, 1.0));
    }

    #[test]
    fn amplified_projector_spectrum() {
        let s = spectral_summary(&Observable::amplified_projector(2, 0, 3).unwrap()).unwrap();
        assert!(close(s.lambda_min, -1.0));
        assert!(close(s.lambda_max, 5.0));
        assert!(close(s.spectral_norm, 5.0));
        assert!(close(s.capital_lambda, 5.0));
    }

    #[test]
    fn identity_spectrum() {
        let s = spectral_summary(&Observable::pauli("II").unwrap()).unwrap();
        assert!(close(s.lambda_min, 1.0) && close(s.lambda_max, 1.0));
        assert!(close(s.spectral_norm, 1.0));
        assert!(close(s.capital_lambda, -1.0));
    }

    #[test]
    fn outcome_distribution_merges_degenerate_values() {
        let obs = Observable::amplified_projector(2, 2, 3).unwrap();
        let eig = eigensystem(&obs).unwrap();
        let state = StateVector::basis(2, 2).unwrap();
        let dist = eig.outcome_distribution(&state).unwrap();
        assert_eq!(dist.len(), 2);
        assert!(close(dist[0].0, -1.0) && dist[0].1.abs() < 1e-15);
        assert!(close(dist[1].0, 5.0) && close(dist[1].1, 1.0));
    }
}
