//! Target densities on `[-1, 1]^M` and triangular transport maps from the
//! uniform distribution on `[0, 1]^M`.
//!
//! Densities are piecewise constant on an `R^M` grid of equal cells, stored
//! row-major with coordinate 0 varying slowest. Coordinate `k` of the map is
//! the inverse of the CDF of `y_k` conditioned on the cells already chosen
//! for `y_0..y_{k-1}`, with coordinates after `k` marginalized out. Within a
//! cell the inverse is linear, so the pushforward of the uniform measure is
//! exactly the piecewise-constant grid density.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::io::{with_suffix, write_atomic};
use crate::rng::uniform_input;
use crate::samplers::{SampleMeta, SampleMode, SampleSet};

/// Upper bound on `R^M` accepted by the grid builders.
pub const MAX_GRID_CELLS: usize = 1 << 24;

/// Grid resolution used when none is given: 256 for `M <= 2`, 64 for
/// `M = 3`, 32 for `M = 4` and 16 beyond.
pub fn default_resolution(dims: usize) -> usize {
    match dims {
        0..=2 => 256,
        3 => 64,
        4 => 32,
        _ => 16,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridDensity {
    dims: usize,
    resolution: usize,
    values: Vec<f64>,
}

fn cell_count(dims: usize, resolution: usize) -> Result<usize> {
    ensure!(dims >= 1, "density dimension must be positive");
    ensure!(resolution >= 1, "grid resolution must be positive");
    let n = resolution
        .checked_pow(dims as u32)
        .filter(|&n| n <= MAX_GRID_CELLS)
        .ok_or_else(|| {
            Error::validation(format!(
                "grid {resolution}^{dims} exceeds {MAX_GRID_CELLS} cells"
            ))
        })?;
    Ok(n)
}

/// Midpoint of cell `i` of `r` equal cells on `[lo, hi]`.
fn midpoint(i: usize, r: usize, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * (i as f64 + 0.5) / r as f64
}

impl GridDensity {
    /// Wrap raw cell values, normalizing them to unit mass.
    pub fn from_values(dims: usize, resolution: usize, values: Vec<f64>) -> Result<Self> {
        let n = cell_count(dims, resolution)?;
        ensure!(
            values.len() == n,
            "density has {} values, expected {n}",
            values.len()
        );
        for (i, v) in values.iter().enumerate() {
            ensure!(
                v.is_finite() && *v >= 0.0,
                "density value at cell {i} is {v}; values must be finite and nonnegative"
            );
        }
        let mut d = GridDensity {
            dims,
            resolution,
            values,
        };
        let mass = d.values.iter().sum::<f64>() * d.cell_volume();
        ensure!(mass > 0.0, "density has zero total mass");
        d.values.iter_mut().for_each(|v| *v /= mass);
        Ok(d)
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn cell_width(&self) -> f64 {
        2.0 / self.resolution as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_width().powi(self.dims as i32)
    }

    /// Total mass; 1 up to rounding after construction.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell_volume()
    }

    /// Per-axis cell indices of flat cell `index`.
    pub fn cell_indices(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims];
        for d in (0..self.dims).rev() {
            out[d] = index % self.resolution;
            index /= self.resolution;
        }
        out
    }

    /// Mass of each cell along coordinate `k`, other coordinates summed out.
    pub fn marginal_masses(&self, k: usize) -> Vec<f64> {
        assert!(k < self.dims, "coordinate out of range");
        let r = self.resolution;
        let inner = r.pow((self.dims - 1 - k) as u32);
        let vol = self.cell_volume();
        let mut out = vec![0.0; r];
        for (i, v) in self.values.iter().enumerate() {
            out[(i / inner) % r] += v * vol;
        }
        out
    }

    /// CDF of coordinate `k` at `y` (piecewise linear between cell edges).
    /// Use [`marginal_cdf_fn`](Self::marginal_cdf_fn) for repeated queries.
    pub fn marginal_cdf(&self, k: usize, y: f64) -> f64 {
        self.marginal_cdf_fn(k)(y)
    }

    /// The CDF of coordinate `k` with its table precomputed.
    pub fn marginal_cdf_fn(&self, k: usize) -> impl Fn(f64) -> f64 + Sync {
        let masses = self.marginal_masses(k);
        let mut edges = vec![0.0; masses.len() + 1];
        cumulative_row(&masses, &mut edges);
        move |y| piecewise_cdf(&edges, y)
    }

    /// Mean vector and covariance matrix of the piecewise-constant density.
    pub fn moments(&self) -> (Vec<f64>, Vec<Vec<f64>>) {
        let m = self.dims;
        let h = self.cell_width();
        let vol = self.cell_volume();
        let mut mean = vec![0.0; m];
        let mut second = vec![vec![0.0; m]; m];
        let mut mid = vec![0.0; m];
        for (i, v) in self.values.iter().enumerate() {
            if *v == 0.0 {
                continue;
            }
            let p = v * vol;
            for (d, c) in self.cell_indices(i).into_iter().enumerate() {
                mid[d] = midpoint(c, self.resolution, -1.0, 1.0);
            }
            for a in 0..m {
                mean[a] += p * mid[a];
                for b in 0..m {
                    second[a][b] += p * mid[a] * mid[b];
                }
                // Uniform spread within the cell adds h^2 / 12 on the diagonal.
                second[a][a] += p * h * h / 12.0;
            }
        }
        let cov = (0..m)
            .map(|a| (0..m).map(|b| second[a][b] - mean[a] * mean[b]).collect())
            .collect();
        (mean, cov)
    }

    /// Header CSV (`dims,resolution,lower,upper`) plus little-endian f64
    /// payload at `path` + `.bin`.
    pub fn write(&self, path: &Path) -> Result<()> {
        let header = format!("dims,resolution,lower,upper\n{},{},-1,1\n", self.dims, self.resolution);
        write_atomic(path, header.as_bytes())?;
        let mut payload = Vec::with_capacity(self.values.len() * 8);
        for v in &self.values {
            payload.extend_from_slice(&v.to_le_bytes());
        }
        write_atomic(&with_suffix(path, ".bin"), &payload)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let header = std::fs::read_to_string(path)?;
        let mut lines = header.lines();
        if lines.next().map(str::trim) != Some("dims,resolution,lower,upper") {
            return Err(Error::Format("unexpected density header".into()));
        }
        let fields: Vec<&str> = lines
            .next()
            .ok_or_else(|| Error::Format("missing density header row".into()))?
            .split(',')
            .map(str::trim)
            .collect();
        if fields.len() != 4 {
            return Err(Error::Format("density header row needs 4 fields".into()));
        }
        let parse = |s: &str| -> Result<usize> {
            s.parse()
                .map_err(|_| Error::Format(format!("cannot parse {s:?} as an integer")))
        };
        let (dims, resolution) = (parse(fields[0])?, parse(fields[1])?);
        let bounds: (f64, f64) = (
            fields[2].parse().map_err(|_| Error::Format("bad lower bound".into()))?,
            fields[3].parse().map_err(|_| Error::Format("bad upper bound".into()))?,
        );
        if bounds != (-1.0, 1.0) {
            return Err(Error::Format("only the [-1, 1] support box is supported".into()));
        }
        let bytes = std::fs::read(with_suffix(path, ".bin"))?;
        if bytes.len() % 8 != 0 {
            return Err(Error::Format("density payload length is not a multiple of 8".into()));
        }
        let values = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        Self::from_values(dims, resolution, values)
    }
}

/// Evaluate a piecewise-linear CDF given its values at the `R + 1` cell
/// edges of `[-1, 1]`.
fn piecewise_cdf(edges: &[f64], y: f64) -> f64 {
    let r = edges.len() - 1;
    let t = ((y + 1.0) / 2.0 * r as f64).clamp(0.0, r as f64);
    let i = (t.floor() as usize).min(r - 1);
    let frac = t - i as f64;
    (edges[i] + (edges[i + 1] - edges[i]) * frac).clamp(0.0, 1.0)
}

/// Tabulate `pdf` at the cell midpoints of an `R^M` grid on `[-1, 1]^M` and
/// normalize with the midpoint rule.
pub fn build_grid_density<F>(pdf: F, dims: usize, resolution: usize) -> Result<GridDensity>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let n = cell_count(dims, resolution)?;
    let values: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut x = vec![0.0; dims];
            let mut rem = i;
            for d in (0..dims).rev() {
                x[d] = midpoint(rem % resolution, resolution, -1.0, 1.0);
                rem /= resolution;
            }
            pdf(&x)
        })
        .collect();
    GridDensity::from_values(dims, resolution, values)
}

/// `y_original = scale * y_unit + offset`, applied per coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub scale: f64,
    pub offset: f64,
}

impl AffineMap {
    pub fn apply(&self, y: f64) -> f64 {
        self.scale * y + self.offset
    }

    pub fn invert(&self, z: f64) -> f64 {
        (z - self.offset) / self.scale
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedDensity {
    pub density: GridDensity,
    /// Maps the unit box back to the truncation box `[-(k+k0), k+k0]^M`.
    pub affine: AffineMap,
    /// Midpoint-rule mass of `pdf` inside the truncation box.
    pub retained_mass: f64,
}

/// Restrict `pdf` to the box `[-(k+k0), k+k0]^M`, renormalize and rescale
/// the box onto `[-1, 1]^M`.
///
/// `pdf` is assumed normalized on `R^M`, so `retained_mass` estimates the
/// probability of the box.
pub fn truncate_density<F>(
    pdf: F,
    dims: usize,
    k: f64,
    k0: f64,
    resolution: usize,
) -> Result<TruncatedDensity>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let half = k + k0;
    ensure!(
        half > 0.0 && half.is_finite(),
        "truncation half-width k + k0 must be positive, got {half}"
    );
    let n = cell_count(dims, resolution)?;
    let raw: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut x = vec![0.0; dims];
            let mut rem = i;
            for d in (0..dims).rev() {
                x[d] = midpoint(rem % resolution, resolution, -half, half);
                rem /= resolution;
            }
            pdf(&x)
        })
        .collect();
    let cell_vol = (2.0 * half / resolution as f64).powi(dims as i32);
    let retained_mass = raw.iter().sum::<f64>() * cell_vol;
    let density = GridDensity::from_values(dims, resolution, raw)
        .map_err(|e| Error::validation(format!("truncated density: {e}")))?;
    Ok(TruncatedDensity {
        density,
        affine: AffineMap {
            scale: half,
            offset: 0.0,
        },
        retained_mass,
    })
}

/// Conditional inverse-CDF tables for every coordinate.
///
/// `cdfs[k]` holds `R^k` rows of `R + 1` cumulative probabilities, one row
/// per cell of `(y_0, ..., y_{k-1})`.
#[derive(Clone, Debug, PartialEq)]
pub struct TriangularMap {
    dims: usize,
    resolution: usize,
    cdfs: Vec<Vec<f64>>,
    /// Rows that had zero conditioning mass and use the unconditional marginal.
    fallback_rows: Vec<usize>,
}

fn cumulative_row(masses: &[f64], out: &mut [f64]) -> bool {
    let total: f64 = masses.iter().sum();
    if total <= 0.0 {
        return false;
    }
    out[0] = 0.0;
    let mut acc = 0.0;
    for (i, m) in masses.iter().enumerate() {
        acc += m;
        out[i + 1] = acc / total;
    }
    out[masses.len()] = 1.0;
    true
}

pub fn build_triangular_map(density: &GridDensity) -> TriangularMap {
    let m = density.dims;
    let r = density.resolution;
    // marginals[k] has shape R^(k+1): coordinates after k summed out.
    let mut marginals: Vec<Vec<f64>> = vec![Vec::new(); m];
    marginals[m - 1] = density.values.clone();
    for k in (0..m - 1).rev() {
        marginals[k] = marginals[k + 1]
            .chunks_exact(r)
            .map(|c| c.iter().sum())
            .collect();
    }
    let mut cdfs = Vec::with_capacity(m);
    let mut fallback_rows = vec![0; m];
    for (k, marg) in marginals.iter().enumerate() {
        let unconditional = density.marginal_masses(k);
        let mut fallback = vec![0.0; r + 1];
        cumulative_row(&unconditional, &mut fallback);
        let rows = r.pow(k as u32);
        let mut table = vec![0.0; rows * (r + 1)];
        for (c, row) in table.chunks_exact_mut(r + 1).enumerate() {
            if !cumulative_row(&marg[c * r..(c + 1) * r], row) {
                row.copy_from_slice(&fallback);
                fallback_rows[k] += 1;
            }
        }
        cdfs.push(table);
    }
    TriangularMap {
        dims: m,
        resolution: r,
        cdfs,
        fallback_rows,
    }
}

impl TriangularMap {
    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    /// Number of conditioning rows per coordinate that fell back to the
    /// unconditional marginal.
    pub fn fallback_rows(&self) -> &[usize] {
        &self.fallback_rows
    }

    /// Invert one CDF row at `u`. Returns the output value and its cell.
    ///
    /// The chosen cell is the first one with positive mass whose upper CDF
    /// value reaches `u`, so flat stretches map to their left edge.
    fn invert_row(&self, row: &[f64], u: f64) -> (f64, usize) {
        let r = self.resolution;
        let h = 2.0 / r as f64;
        // First j with row[j + 1] >= u.
        let mut j = row[1..].partition_point(|&c| c < u).min(r - 1);
        while j + 1 < r && row[j + 1] <= row[j] {
            j += 1;
        }
        let mass = row[j + 1] - row[j];
        let frac = if mass > 0.0 {
            ((u - row[j]) / mass).clamp(0.0, 1.0)
        } else {
            0.0
        };
        ((-1.0 + h * (j as f64 + frac)).clamp(-1.0, 1.0), j)
    }

    /// Push `x` in `[0, 1]^M` through the map. Coordinate `k` of the output
    /// depends on `x_0..x_k` only.
    pub fn map_forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        ensure!(
            x.len() == self.dims,
            "map input has dimension {}, expected {}",
            x.len(),
            self.dims
        );
        ensure!(
            x.iter().all(|v| (0.0..=1.0).contains(v)),
            "map input must lie in the unit cube, got {x:?}"
        );
        Ok(self.forward_trusted(x))
    }

    pub(crate) fn forward_trusted(&self, x: &[f64]) -> Vec<f64> {
        let r = self.resolution;
        let mut out = Vec::with_capacity(self.dims);
        let mut cond = 0usize;
        for (k, &u) in x.iter().enumerate() {
            let row = &self.cdfs[k][cond * (r + 1)..(cond + 1) * (r + 1)];
            let (y, cell) = self.invert_row(row, u);
            out.push(y);
            cond = cond * r + cell;
        }
        out
    }

    /// Coordinate `k` of [`map_forward`](Self::map_forward) as a function of
    /// `x_0..x_k`.
    pub fn coordinate(&self, k: usize, x_prefix: &[f64]) -> Result<f64> {
        ensure!(k < self.dims, "coordinate {k} out of range");
        ensure!(
            x_prefix.len() == k + 1,
            "coordinate {k} needs {} inputs, got {}",
            k + 1,
            x_prefix.len()
        );
        ensure!(
            x_prefix.iter().all(|v| (0.0..=1.0).contains(v)),
            "map input must lie in the unit cube"
        );
        let r = self.resolution;
        let mut cond = 0usize;
        let mut y = 0.0;
        for (j, &u) in x_prefix.iter().enumerate() {
            let row = &self.cdfs[j][cond * (r + 1)..(cond + 1) * (r + 1)];
            let (v, cell) = self.invert_row(row, u);
            y = v;
            cond = cond * r + cell;
        }
        Ok(y)
    }
}

/// `n` pushforward samples; row `i` maps the uniform draw keyed by `(seed, i)`.
pub fn sample_via_map(map: &TriangularMap, n: usize, seed: u64) -> Result<SampleSet> {
    ensure!(n >= 1, "sample count must be positive");
    let values: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| map.forward_trusted(&uniform_input(seed, i as u64, map.dims)))
        .collect();
    SampleSet::new(
        map.dims,
        values,
        SampleMeta {
            seed,
            mode: SampleMode::Exact,
            model_id: "triangular_map".into(),
            n,
            config_hash: None,
        },
    )
}

/// Closed-form test densities on `[-1, 1]^M` (unnormalized is fine).
pub mod families {
    use std::f64::consts::PI;

    pub fn uniform(_y: &[f64]) -> f64 {
        1.0
    }

    fn normal_pdf(x: f64, mu: f64, sigma: f64) -> f64 {
        let z = (x - mu) / sigma;
        (-0.5 * z * z).exp() / (sigma * (2.0 * PI).sqrt())
    }

    /// Equal mixture of `N(-0.45, 0.2^2)` and `N(0.45, 0.2^2)`.
    pub fn bimodal(y: &[f64]) -> f64 {
        0.5 * normal_pdf(y[0], -0.45, 0.2) + 0.5 * normal_pdf(y[0], 0.45, 0.2)
    }

    /// Standard bivariate normal with correlation `rho`, truncated to
    /// `+-3` standard deviations and rescaled onto `[-1, 1]^2`.
    pub fn correlated_gaussian(rho: f64) -> impl Fn(&[f64]) -> f64 + Sync {
        move |y: &[f64]| {
            let (a, b) = (3.0 * y[0], 3.0 * y[1]);
            let q = (a * a - 2.0 * rho * a * b + b * b) / (1.0 - rho * rho);
            (-0.5 * q).exp()
        }
    }

    /// Unnormalized Dirichlet density at a point of the simplex (all `M`
    /// coordinates given).
    pub fn dirichlet(alpha: Vec<f64>) -> impl Fn(&[f64]) -> f64 + Sync {
        move |y: &[f64]| {
            if y.iter().any(|&v| v < 0.0) {
                return 0.0;
            }
            y.iter()
                .zip(&alpha)
                .map(|(&v, &a)| if a == 1.0 { 1.0 } else { v.powf(a - 1.0) })
                .product()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_pdf_is_one_half() {
        let d = build_grid_density(families::uniform, 1, 64).unwrap();
        assert!(d.values().iter().all(|v| (v - 0.5).abs() < 1e-15));
    }

    #[test]
    fn indicator_pdf_puts_mass_on_positive_half() {
        let d = build_grid_density(|y| if y[0] > 0.0 { 1.0 } else { 0.0 }, 1, 64).unwrap();
        let m = d.marginal_masses(0);
        assert!(m[..32].iter().all(|&v| v == 0.0));
        assert!((m[32..].iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn product_pdf_factorizes() {
        let f = |y: &[f64]| (1.0 + y[0]) * (2.0 + y[1].sin());
        let d = build_grid_density(f, 2, 16).unwrap();
        let (a, b) = (d.marginal_masses(0), d.marginal_masses(1));
        let vol = d.cell_volume();
        for i in 0..16 {
            for j in 0..16 {
                assert!((d.values()[i * 16 + j] * vol - a[i] * b[j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn invalid_pdfs_rejected() {
        assert!(build_grid_density(|_| -1.0, 1, 8).is_err());
        assert!(build_grid_density(|_| f64::NAN, 1, 8).is_err());
        assert!(build_grid_density(|_| 0.0, 1, 8).is_err());
        assert!(build_grid_density(families::uniform, 9, 64).is_err());
    }

    #[test]
    fn uniform_map_is_affine() {
        let map = build_triangular_map(&build_grid_density(families::uniform, 1, 64).unwrap());
        for x in [0.0, 0.1, 0.5, 0.77, 1.0] {
            let y = map.map_forward(&[x]).unwrap()[0];
            assert!((y - (2.0 * x - 1.0)).abs() <= 2.0 / 64.0);
        }
        assert_eq!(map.map_forward(&[0.5]).unwrap()[0], 0.0);
        assert!(map.map_forward(&[1.2]).is_err());
        assert!(map.map_forward(&[0.2, 0.3]).is_err());
    }

    #[test]
    fn zero_input_maps_to_left_support_edge() {
        let d = build_grid_density(|y| if y[0] > 0.25 { 1.0 } else { 0.0 }, 1, 64).unwrap();
        let map = build_triangular_map(&d);
        let y = map.map_forward(&[0.0]).unwrap()[0];
        assert!((y - 0.25).abs() <= 2.0 / 64.0);
    }

    #[test]
    fn gaps_map_to_left_edge() {
        // Mass on [-1, -0.5) and [0.5, 1]; CDF is flat at 1/2 across the gap.
        let d = build_grid_density(|y| if y[0].abs() > 0.5 { 1.0 } else { 0.0 }, 1, 8).unwrap();
        let map = build_triangular_map(&d);
        assert_eq!(map.map_forward(&[0.5]).unwrap()[0], -0.5);
    }

    #[test]
    fn product_density_map_ignores_conditioning() {
        let f = |y: &[f64]| (1.2 + y[0]) * (1.5 - y[1] * y[1]);
        let map = build_triangular_map(&build_grid_density(f, 2, 32).unwrap());
        for x1 in [0.05, 0.3, 0.6, 0.95] {
            let base = map.map_forward(&[0.1, x1]).unwrap()[1];
            for x0 in [0.2, 0.5, 0.99] {
                let y = map.map_forward(&[x0, x1]).unwrap()[1];
                assert!((y - base).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn empty_conditioning_slice_uses_marginal() {
        // Nothing in the left half of coordinate 0.
        let d = build_grid_density(|y| if y[0] > 0.0 { 1.0 + y[1] } else { 0.0 }, 2, 8).unwrap();
        let map = build_triangular_map(&d);
        assert_eq!(map.fallback_rows(), &[0, 4]);
    }

    #[test]
    fn moments_of_uniform_square() {
        let d = build_grid_density(families::uniform, 2, 8).unwrap();
        let (mean, cov) = d.moments();
        assert!(mean.iter().all(|m| m.abs() < 1e-15));
        assert!((cov[0][0] - 1.0 / 3.0).abs() < 1e-12);
        assert!(cov[0][1].abs() < 1e-15);
    }

    #[test]
    fn marginal_cdf_endpoints() {
        let d = build_grid_density(families::bimodal, 1, 64).unwrap();
        assert_eq!(d.marginal_cdf(0, -1.0), 0.0);
        assert_eq!(d.marginal_cdf(0, 1.0), 1.0);
        assert!((d.marginal_cdf(0, 0.0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn density_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        let d = build_grid_density(families::correlated_gaussian(0.7), 2, 16).unwrap();
        d.write(&p).unwrap();
        let back = GridDensity::read(&p).unwrap();
        assert_eq!(back.dims(), 2);
        for (a, b) in back.values().iter().zip(d.values()) {
            assert!((a - b).abs() <= 1e-15 * b.abs().max(1.0));
        }
    }

    #[test]
    fn truncating_uniform_keeps_it_uniform() {
        let pdf = |y: &[f64]| if y[0].abs() <= 1.0 { 0.5 } else { 0.0 };
        let t = truncate_density(pdf, 1, 1.0, 1.0, 64).unwrap();
        assert!((t.retained_mass - 1.0).abs() < 1e-12);
        // Back in original coordinates the CDF is that of U[-1, 1].
        for z in [-1.0, -0.5, 0.0, 0.25, 1.0] {
            let cdf = t.density.marginal_cdf(0, t.affine.invert(z));
            assert!((cdf - (z + 1.0) / 2.0).abs() < 1e-12);
        }
    }
}
