//! Wasserstein-1 distances and Kolmogorov-Smirnov statistics between samples.

use std::collections::BTreeMap;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::rng::{keyed_rng, TAG_PROJECTION};
use crate::samplers::SampleSet;

/// Largest sample size accepted by [`w1_exact`].
pub const MAX_EXACT_N: usize = 512;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub metric: String,
    pub value: f64,
    pub n_a: usize,
    pub n_b: usize,
    #[serde(default)]
    pub params: BTreeMap<String, serde_json::Value>,
}

impl MetricReport {
    pub fn new(metric: impl Into<String>, value: f64, n_a: usize, n_b: usize) -> Self {
        MetricReport {
            metric: metric.into(),
            value,
            n_a,
            n_b,
            params: BTreeMap::new(),
        }
    }

    pub fn with_param(mut self, key: &str, value: impl Into<serde_json::Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

/// W1 between two empirical measures on the line.
///
/// Equal sizes pair sorted samples. Otherwise the quantile functions are
/// compared on the merged grid of breakpoints `i / N_a` and `j / N_b`.
pub fn w1_1d(a: &[f64], b: &[f64]) -> Result<f64> {
    ensure!(!a.is_empty() && !b.is_empty(), "W1 needs nonempty samples");
    ensure!(
        a.iter().chain(b).all(|v| v.is_finite()),
        "samples must be finite"
    );
    let (sa, sb) = (sorted(a), sorted(b));
    if sa.len() == sb.len() {
        let total: f64 = sa.iter().zip(&sb).map(|(x, y)| (x - y).abs()).sum();
        return Ok(total / sa.len() as f64);
    }
    let (na, nb) = (sa.len(), sb.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut u = 0.0;
    let mut total = 0.0;
    while i < na && j < nb {
        let next_a = (i + 1) as f64 / na as f64;
        let next_b = (j + 1) as f64 / nb as f64;
        let next = next_a.min(next_b);
        total += (next - u) * (sa[i] - sb[j]).abs();
        u = next;
        // Advance using integer comparison to avoid drift: (i+1)/na vs (j+1)/nb.
        let lhs = (i + 1) * nb;
        let rhs = (j + 1) * na;
        if lhs <= rhs {
            i += 1;
        }
        if rhs <= lhs {
            j += 1;
        }
    }
    Ok(total)
}

/// Minimum-cost perfect matching for a square cost matrix (row-major).
///
/// Shortest augmenting paths with dual potentials, `O(n^3)`. Returns the
/// column assigned to each row.
pub fn assignment(cost: &[f64], n: usize) -> Vec<usize> {
    assert_eq!(cost.len(), n * n, "cost matrix must be n x n");
    // 1-based arrays with a sentinel column 0.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            row_to_col[p[j] - 1] = j - 1;
        }
    }
    row_to_col
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

/// Exact W1 between two equal-size empirical measures with Euclidean cost.
pub fn w1_exact(a: &SampleSet, b: &SampleSet) -> Result<f64> {
    ensure!(
        a.dims() == b.dims(),
        "sample dimensions differ ({} vs {})",
        a.dims(),
        b.dims()
    );
    ensure!(
        a.len() == b.len(),
        "exact W1 needs equal sample sizes ({} vs {}); use w1_sliced for unequal sizes",
        a.len(),
        b.len()
    );
    ensure!(
        a.len() <= MAX_EXACT_N,
        "exact W1 is limited to N <= {MAX_EXACT_N} (got {}); use w1_sliced for larger sets",
        a.len()
    );
    // Solve in a canonical argument order so the result is exactly symmetric.
    let (a, b) = if lex_cmp(a.values(), b.values()).is_le() {
        (a, b)
    } else {
        (b, a)
    };
    let n = a.len();
    let cost: Vec<f64> = (0..n * n)
        .map(|k| euclidean(a.row(k / n), b.row(k % n)))
        .collect();
    let matching = assignment(&cost, n);
    let total: f64 = matching
        .iter()
        .enumerate()
        .map(|(i, &j)| cost[i * n + j])
        .sum();
    Ok(total / n as f64)
}

/// Unit direction used for projection `p` of [`w1_sliced`].
pub fn projection_direction(dims: usize, seed: u64, p: usize) -> Vec<f64> {
    let mut rng = keyed_rng(seed, &[TAG_PROJECTION, p as u64]);
    loop {
        let v: Vec<f64> = (0..dims).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Mean of 1D W1 over random unit projections. In one dimension this is
/// exactly [`w1_1d`].
pub fn w1_sliced(a: &SampleSet, b: &SampleSet, n_projections: usize, seed: u64) -> Result<f64> {
    ensure!(
        a.dims() == b.dims(),
        "sample dimensions differ ({} vs {})",
        a.dims(),
        b.dims()
    );
    ensure!(n_projections >= 1, "need at least one projection");
    if a.dims() == 1 {
        return w1_1d(a.values(), b.values());
    }
    let per: Vec<f64> = (0..n_projections)
        .into_par_iter()
        .map(|p| {
            let u = projection_direction(a.dims(), seed, p);
            let proj = |s: &SampleSet| -> Vec<f64> {
                s.rows()
                    .map(|r| r.iter().zip(&u).map(|(x, w)| x * w).sum())
                    .collect()
            };
            w1_1d(&proj(a), &proj(b))
        })
        .collect::<Result<_>>()?;
    Ok(per.iter().sum::<f64>() / n_projections as f64)
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    ensure!(!a.is_empty() && !b.is_empty(), "KS needs nonempty samples");
    let (sa, sb) = (sorted(a), sorted(b));
    let (na, nb) = (sa.len() as f64, sb.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < sa.len() && j < sb.len() {
        let x = sa[i].min(sb[j]);
        while i < sa.len() && sa[i] <= x {
            i += 1;
        }
        while j < sb.len() && sb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d.min(1.0))
}

/// One-sample Kolmogorov-Smirnov statistic against a continuous CDF.
pub fn ks_one_sample(a: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    ensure!(!a.is_empty(), "KS needs a nonempty sample");
    let s = sorted(a);
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in s.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    Ok(d)
}

/// Per-coordinate two-sample KS statistics.
pub fn ks_marginals(a: &SampleSet, b: &SampleSet) -> Result<Vec<f64>> {
    ensure!(
        a.dims() == b.dims(),
        "sample dimensions differ ({} vs {})",
        a.dims(),
        b.dims()
    );
    (0..a.dims())
        .map(|j| ks_two_sample(&a.column(j), &b.column(j)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(rows: &[Vec<f64>]) -> SampleSet {
        SampleSet::from_rows(rows).unwrap()
    }

    #[test]
    fn w1_1d_examples() {
        let a = [0.3, -0.2, 0.9];
        assert_eq!(w1_1d(&a, &a).unwrap(), 0.0);
        let shifted: Vec<f64> = a.iter().map(|v| v + 0.5).collect();
        assert!((w1_1d(&a, &shifted).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(w1_1d(&[0.0, 1.0], &[0.0, 2.0]).unwrap(), 0.5);
        assert!(w1_1d(&[], &[1.0]).is_err());
    }

    #[test]
    fn w1_1d_unequal_sizes() {
        // Quantiles of {0, 1} against {0, 0.5, 1}: pieces of length 1/3, 1/6, 1/6, 1/3.
        let d = w1_1d(&[0.0, 1.0], &[0.0, 0.5, 1.0]).unwrap();
        assert!((d - (0.5 / 6.0 + 0.5 / 6.0)).abs() < 1e-15);
        // Duplicating every point leaves the measure unchanged.
        assert!(w1_1d(&[0.0, 1.0], &[0.0, 0.0, 1.0, 1.0]).unwrap().abs() < 1e-15);
    }

    #[test]
    fn assignment_small() {
        let cost = [4.0, 1.0, 3.0, 2.0, 0.0, 5.0, 3.0, 2.0, 2.0];
        let m = assignment(&cost, 3);
        let total: f64 = m.iter().enumerate().map(|(i, &j)| cost[i * 3 + j]).sum();
        assert_eq!(total, 5.0);
    }

    #[test]
    fn w1_exact_limits() {
        let a = set(&[vec![0.0, 0.0]]);
        let b = set(&[vec![0.0, 0.0], vec![1.0, 1.0]]);
        assert!(w1_exact(&a, &b).is_err());
        let big = SampleSet::from_rows(&vec![vec![0.0]; MAX_EXACT_N + 1]).unwrap();
        let err = w1_exact(&big, &big).unwrap_err().to_string();
        assert!(err.contains("w1_sliced"));
    }

    #[test]
    fn sliced_1d_equals_w1_1d() {
        let a = set(&[vec![0.1], vec![0.7], vec![-0.3]]);
        let b = set(&[vec![0.2], vec![0.0], vec![0.9]]);
        let s = w1_sliced(&a, &b, 7, 3).unwrap();
        assert_eq!(s, w1_1d(a.values(), b.values()).unwrap());
    }

    #[test]
    fn ks_examples() {
        let a = [0.1, 0.2, 0.3];
        assert_eq!(ks_two_sample(&a, &a).unwrap(), 0.0);
        assert_eq!(ks_two_sample(&a, &[1.0, 2.0]).unwrap(), 1.0);
        assert!((ks_two_sample(&[0.0, 1.0], &[0.0, 2.0]).unwrap() - 0.5).abs() < 1e-15);
        let d = ks_one_sample(&[0.5], |x| x).unwrap();
        assert!((d - 0.5).abs() < 1e-15);
    }

    #[test]
    fn report_serializes() {
        let r = MetricReport::new("w1_sliced", 0.25, 10, 12).with_param("projections", 64);
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"projections\":64"));
    }
}
