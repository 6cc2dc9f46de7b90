//! Uniform Cartesian grids on centered boxes and the sampled objects living on them.
//!
//! A grid of `n` points per axis over [−L, L)ⁿ has nodes x_j = −L + j·h with
//! h = 2L/n. Its frequency partner has nodes ξ_k = (k − n/2)·π/L.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{coarse, PwmError, Result};

/// Values below this modulus count as zero.
pub const ZERO_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dim: usize,
    pub n: usize,
    pub half_width: f64,
}

impl Grid {
    pub fn new(dim: usize, n: usize, half_width: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(PwmError::Invalid(format!("dimension {dim} not in 1..=3")));
        }
        if n < 4 || n % 2 != 0 {
            return Err(coarse(format!("need an even point count ≥ 4 per axis, got {n}")));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(PwmError::Invalid(format!("half width {half_width} must be positive")));
        }
        Ok(Grid { dim, n, half_width })
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn freq_spacing(&self) -> f64 {
        std::f64::consts::PI / self.half_width
    }

    /// Largest frequency magnitude per axis.
    pub fn nyquist(&self) -> f64 {
        std::f64::consts::PI / self.spacing()
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn coord(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.spacing()
    }

    pub fn freq(&self, k: usize) -> f64 {
        (k as f64 - (self.n / 2) as f64) * self.freq_spacing()
    }

    /// Multi-index of a flat (row-major, last axis fastest) index.
    pub fn unflatten(&self, mut flat: usize) -> [usize; 3] {
        let mut idx = [0usize; 3];
        for a in (0..self.dim).rev() {
            idx[a] = flat % self.n;
            flat /= self.n;
        }
        idx
    }

    pub fn flatten(&self, idx: &[usize]) -> usize {
        idx.iter().take(self.dim).fold(0, |acc, &i| acc * self.n + i)
    }

    pub fn point(&self, flat: usize) -> [f64; 3] {
        let idx = self.unflatten(flat);
        let mut p = [0.0; 3];
        for a in 0..self.dim {
            p[a] = self.coord(idx[a]);
        }
        p
    }

    pub fn freq_point(&self, flat: usize) -> [f64; 3] {
        let idx = self.unflatten(flat);
        let mut p = [0.0; 3];
        for a in 0..self.dim {
            p[a] = self.freq(idx[a]);
        }
        p
    }

    /// Volume element hⁿ.
    pub fn cell(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Frequency volume element (π/L)ⁿ.
    pub fn freq_cell(&self) -> f64 {
        self.freq_spacing().powi(self.dim as i32)
    }
}

pub(crate) fn norm(p: &[f64]) -> f64 {
    p.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Anything that can be evaluated at a point of ℝⁿ and vanishes outside a ball.
pub trait Field: Sync {
    fn dim(&self) -> usize;
    fn support_radius(&self) -> f64;
    fn eval(&self, x: &[f64]) -> Complex64;
}

type PointFn = dyn Fn(&[f64]) -> Complex64 + Send + Sync;

/// A field given by a closure; values outside the support ball are forced to zero.
#[derive(Clone)]
pub struct AnalyticField {
    pub dim: usize,
    pub support_radius: f64,
    f: Arc<PointFn>,
}

impl AnalyticField {
    pub fn new(dim: usize, support_radius: f64, f: impl Fn(&[f64]) -> Complex64 + Send + Sync + 'static) -> Self {
        AnalyticField { dim, support_radius, f: Arc::new(f) }
    }

    pub fn sample(&self, grid: Grid) -> Result<SampledFunction> {
        if grid.dim != self.dim {
            return Err(PwmError::Invalid("grid dimension does not match field".into()));
        }
        SampledFunction::from_fn(grid, self.support_radius, |x| (self.f)(x))
    }
}

impl std::fmt::Debug for AnalyticField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AnalyticField")
            .field("dim", &self.dim)
            .field("support_radius", &self.support_radius)
            .finish_non_exhaustive()
    }
}

impl Field for AnalyticField {
    fn dim(&self) -> usize {
        self.dim
    }

    fn support_radius(&self) -> f64 {
        self.support_radius
    }

    fn eval(&self, x: &[f64]) -> Complex64 {
        if norm(&x[..self.dim]) > self.support_radius {
            Complex64::new(0.0, 0.0)
        } else {
            (self.f)(x)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    pub grid: Grid,
    pub values: Vec<Complex64>,
    pub support_radius: f64,
}

impl SampledFunction {
    pub fn new(grid: Grid, values: Vec<Complex64>, support_radius: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(PwmError::Invalid(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if !(support_radius >= 0.0) {
            return Err(PwmError::Invalid("support radius must be non-negative".into()));
        }
        let f = SampledFunction { grid, values, support_radius };
        if let Some(flat) = f.first_outside_support() {
            return Err(PwmError::Invalid(format!(
                "value {} at {:?} lies outside the declared support radius {}",
                f.values[flat],
                &f.grid.point(flat)[..grid.dim],
                support_radius
            )));
        }
        Ok(f)
    }

    pub fn zeros(grid: Grid, support_radius: f64) -> Self {
        SampledFunction { grid, values: vec![Complex64::new(0.0, 0.0); grid.len()], support_radius }
    }

    /// Samples `f` at every node inside the support ball, zero elsewhere.
    pub fn from_fn(grid: Grid, support_radius: f64, f: impl Fn(&[f64]) -> Complex64) -> Result<Self> {
        let values = (0..grid.len())
            .map(|flat| {
                let p = grid.point(flat);
                if norm(&p[..grid.dim]) > support_radius {
                    Complex64::new(0.0, 0.0)
                } else {
                    f(&p[..grid.dim])
                }
            })
            .collect();
        Ok(SampledFunction { grid, values, support_radius })
    }

    fn first_outside_support(&self) -> Option<usize> {
        (0..self.values.len()).find(|&flat| {
            let p = self.grid.point(flat);
            norm(&p[..self.grid.dim]) > self.support_radius && self.values[flat].norm() >= ZERO_TOL
        })
    }

    /// ∫|f|² by the grid rule.
    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        SampledFunction { values: self.values.iter().map(|v| v * c).collect(), ..self.clone() }
    }

    /// Max |f − g| over the grid; grids must agree.
    pub fn max_diff(&self, other: &SampledFunction) -> f64 {
        assert_eq!(self.grid, other.grid, "grids differ");
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// Radius beyond which every sample is below `rel · max|f|`.
    pub fn effective_radius(&self, rel: f64) -> f64 {
        let cut = rel * self.max_abs();
        (0..self.values.len())
            .filter(|&i| self.values[i].norm() > cut)
            .map(|i| norm(&self.grid.point(i)[..self.grid.dim]))
            .fold(0.0, f64::max)
    }
}

impl Field for SampledFunction {
    fn dim(&self) -> usize {
        self.grid.dim
    }

    fn support_radius(&self) -> f64 {
        self.support_radius
    }

    /// Multilinear interpolation; zero outside the box.
    fn eval(&self, x: &[f64]) -> Complex64 {
        let g = &self.grid;
        let h = g.spacing();
        let mut base = [0usize; 3];
        let mut frac = [0.0; 3];
        for a in 0..g.dim {
            let s = (x[a] + g.half_width) / h;
            if !(s >= 0.0 && s <= (g.n - 1) as f64) {
                return Complex64::new(0.0, 0.0);
            }
            let i = (s.floor() as usize).min(g.n - 2);
            base[a] = i;
            frac[a] = s - i as f64;
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for corner in 0..(1usize << g.dim) {
            let mut w = 1.0;
            let mut idx = [0usize; 3];
            for a in 0..g.dim {
                let bit = (corner >> a) & 1;
                idx[a] = base[a] + bit;
                w *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
            }
            if w != 0.0 {
                acc += self.values[g.flatten(&idx[..g.dim])] * w;
            }
        }
        acc
    }
}

/// Convention tag carried by every spectrum.
pub const CONVENTION: &str = "forward exp(-i x.y) unnormalized; inverse (2pi)^-n";

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Spatial grid the spectrum pairs with; frequencies follow from it.
    pub grid: Grid,
    pub values: Vec<Complex64>,
    /// Support radius of the source, used to clean up the inverse transform.
    pub support_radius: f64,
}

impl Spectrum {
    /// (2π)⁻ⁿ∫|F|², i.e. the spatial L² norm by Parseval.
    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.freq_cell()
            / (2.0 * std::f64::consts::PI).powi(self.grid.dim as i32)
    }

    /// Max over frequency pairs of |F(−ξ) − conj F(ξ)|, skipping unpaired edge nodes.
    pub fn hermitian_defect(&self) -> f64 {
        let g = &self.grid;
        let mut worst = 0.0_f64;
        for flat in 0..self.values.len() {
            let idx = g.unflatten(flat);
            if idx[..g.dim].iter().any(|&k| k == 0) {
                continue;
            }
            let mut mirror = [0usize; 3];
            for a in 0..g.dim {
                mirror[a] = g.n - idx[a];
            }
            let m = g.flatten(&mirror[..g.dim]);
            worst = worst.max((self.values[m] - self.values[flat].conj()).norm());
        }
        worst
    }

    /// Smallest radius outside which |F| < rel · max|F|.
    pub fn band_radius(&self, rel: f64) -> f64 {
        let max = self.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let cut = rel * max;
        (0..self.values.len())
            .filter(|&i| self.values[i].norm() > cut)
            .map(|i| norm(&self.grid.freq_point(i)[..self.grid.dim]))
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sinogram {
    pub directions: Vec<Vec<f64>>,
    pub offsets: Vec<f64>,
    /// Row-major: `values[d * offsets.len() + t]`.
    pub values: Vec<Complex64>,
}

impl Sinogram {
    pub fn row(&self, d: usize) -> &[Complex64] {
        let t = self.offsets.len();
        &self.values[d * t..(d + 1) * t]
    }

    /// Max difference between any row and the first one.
    pub fn direction_spread(&self) -> f64 {
        let first = self.row(0);
        (1..self.directions.len())
            .flat_map(|d| self.row(d).iter().zip(first).map(|(a, b)| (a - b).norm()))
            .fold(0.0, f64::max)
    }
}

/// Offsets t_j = −T + j·2T/(count − 1), symmetric about 0.
pub fn symmetric_offsets(t_max: f64, count: usize) -> Vec<f64> {
    (0..count).map(|j| -t_max + 2.0 * t_max * j as f64 / (count - 1) as f64).collect()
}

/// `count` unit directions in the plane at angles π·j/count.
pub fn plane_directions(count: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|j| {
            let a = std::f64::consts::PI * j as f64 / count as f64;
            vec![a.cos(), a.sin()]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_and_frequencies() {
        let g = Grid::new(1, 8, 2.0).unwrap();
        assert_eq!(g.spacing(), 0.5);
        assert_eq!(g.coord(0), -2.0);
        assert_eq!(g.coord(4), 0.0);
        assert_eq!(g.freq(4), 0.0);
        assert!((g.freq(0) + 4.0 * std::f64::consts::FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn flat_index_round_trip() {
        let g = Grid::new(3, 6, 1.0).unwrap();
        for flat in [0, 5, 17, 100, 215] {
            assert_eq!(g.flatten(&g.unflatten(flat)[..3]), flat);
        }
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::new(4, 8, 1.0).is_err());
        assert!(matches!(Grid::new(2, 7, 1.0), Err(PwmError::GridTooCoarse(_))));
        assert!(Grid::new(2, 8, 0.0).is_err());
    }

    #[test]
    fn support_invariant_enforced() {
        let g = Grid::new(1, 8, 2.0).unwrap();
        let vals = vec![Complex64::new(1.0, 0.0); 8];
        assert!(SampledFunction::new(g, vals.clone(), 1.0).is_err());
        assert!(SampledFunction::new(g, vals, 2.5).is_ok());
    }

    #[test]
    fn interpolation_reproduces_linear_functions() {
        let g = Grid::new(2, 16, 2.0).unwrap();
        let f = SampledFunction::from_fn(g, 10.0, |x| Complex64::new(1.0 + 2.0 * x[0] - x[1], x[0])).unwrap();
        let v = f.eval(&[0.3, -0.77]);
        assert!((v - Complex64::new(1.0 + 0.6 + 0.77, 0.3)).norm() < 1e-13);
        assert_eq!(f.eval(&[5.0, 0.0]), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn analytic_field_truncates() {
        let f = AnalyticField::new(2, 1.0, |_| Complex64::new(1.0, 0.0));
        assert_eq!(f.eval(&[0.5, 0.5]).re, 1.0);
        assert_eq!(f.eval(&[0.8, 0.8]).re, 0.0);
    }
}
