//! Functions on M(2) = ℝ² ⋊ SO(2), their operator-valued Fourier transform at the
//! principal series T_r, Hilbert–Schmidt norms and Plancherel bookkeeping.
//!
//! Convention: (T_r(x,β)ψ)(α) = e^{ir(x₁cos α − x₂sin α)} ψ(α + β) on L²(S¹) with
//! basis e_m(α) = e^{imα}. For f(x,β) = Σ_p f_p(x)e^{ipβ} the matrix entries are
//!
//!   f̂(T_r)_{m',m} = (2π)⁻¹∫ e^{i(m−m')α} F_{−m}(r(−cos α, sin α)) dα,
//!
//! F_p being the Euclidean transform of the angular mode f_p.

use std::f64::consts::PI;

use num_complex::Complex64;
use pwm_core::group::BAND_CAP;
use pwm_core::special::bessel_j;
use pwm_core::{CoreError, RepresentationPoint};
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{coarse, PwmError, Result};
use crate::grid::{norm, Grid};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Largest |Im r|·support_radius before e^{|Im r|·|x|} overflows.
pub const OVERFLOW_EXPONENT: f64 = 700.0;

/// Modes with L² mass below this are skipped by the transform.
const SILENT_MODE: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq)]
pub struct MotionGroupFunction {
    /// Position grid (dim 2).
    pub grid: Grid,
    /// Angle count M; angles β_q = 2πq/M.
    pub angles: usize,
    /// `values[q * grid.len() + flat]` = f(x_flat, β_q).
    pub values: Vec<Complex64>,
    pub support_radius: f64,
    /// Angular modes f_m for m = −M/2 … M/2 − 1, stored in that order.
    modes: Vec<Vec<Complex64>>,
}

fn angular_analysis(grid: &Grid, m: usize, values: &[Complex64]) -> Vec<Vec<Complex64>> {
    let npts = grid.len();
    let fft = FftPlanner::new().plan_fft_forward(m);
    let mut modes = vec![vec![ZERO; npts]; m];
    let mut line = vec![ZERO; m];
    for flat in 0..npts {
        for q in 0..m {
            line[q] = values[q * npts + flat];
        }
        fft.process(&mut line);
        for (k, v) in line.iter().enumerate() {
            // DFT bin k carries mode k (k < M/2) or k − M.
            let mode = if k < m / 2 { k + m / 2 } else { k - m / 2 };
            modes[mode][flat] = v / m as f64;
        }
    }
    modes
}

impl MotionGroupFunction {
    pub fn new(grid: Grid, angles: usize, values: Vec<Complex64>, support_radius: f64) -> Result<Self> {
        if grid.dim != 2 {
            return Err(PwmError::Invalid("M(2) functions need a planar position grid".into()));
        }
        if angles < 2 || angles % 2 != 0 {
            return Err(PwmError::Invalid(format!("angle count {angles} must be even and ≥ 2")));
        }
        if values.len() != angles * grid.len() {
            return Err(PwmError::Invalid("value count does not match grid × angles".into()));
        }
        if support_radius > grid.half_width {
            return Err(coarse("support radius exceeds the box"));
        }
        for (i, v) in values.iter().enumerate() {
            let p = grid.point(i % grid.len());
            if norm(&p[..2]) > support_radius && v.norm() >= crate::grid::ZERO_TOL {
                return Err(PwmError::Invalid(format!("non-zero value outside support at {:?}", &p[..2])));
            }
        }
        let modes = angular_analysis(&grid, angles, &values);
        Ok(MotionGroupFunction { grid, angles, values, support_radius, modes })
    }

    pub fn from_fn(
        grid: Grid,
        angles: usize,
        support_radius: f64,
        f: impl Fn([f64; 2], f64) -> Complex64 + Sync,
    ) -> Result<Self> {
        let npts = grid.len();
        let values = (0..angles * npts)
            .into_par_iter()
            .map(|i| {
                let (q, flat) = (i / npts, i % npts);
                let p = grid.point(flat);
                if norm(&p[..2]) > support_radius {
                    ZERO
                } else {
                    f([p[0], p[1]], 2.0 * PI * q as f64 / angles as f64)
                }
            })
            .collect();
        Self::new(grid, angles, values, support_radius)
    }

    /// Builds f from its angular modes, listed for m = −M/2 … M/2 − 1.
    pub fn from_modes(grid: Grid, modes: Vec<Vec<Complex64>>, support_radius: f64) -> Result<Self> {
        let m = modes.len();
        let npts = grid.len();
        if m < 2 || m % 2 != 0 || modes.iter().any(|v| v.len() != npts) {
            return Err(PwmError::Invalid("mode table has the wrong shape".into()));
        }
        let fft = FftPlanner::new().plan_fft_inverse(m);
        let mut values = vec![ZERO; m * npts];
        let mut line = vec![ZERO; m];
        for flat in 0..npts {
            for (k, l) in line.iter_mut().enumerate() {
                let mode = if k < m / 2 { k + m / 2 } else { k - m / 2 };
                *l = modes[mode][flat];
            }
            fft.process(&mut line);
            for q in 0..m {
                values[q * npts + flat] = line[q];
            }
        }
        let mut f = Self::new(grid, m, values, support_radius)?;
        f.modes = modes;
        Ok(f)
    }

    pub fn angle(&self, q: usize) -> f64 {
        2.0 * PI * q as f64 / self.angles as f64
    }

    pub fn mode_range(&self) -> std::ops::Range<i64> {
        let h = (self.angles / 2) as i64;
        -h..h
    }

    /// f_m(x) on the position grid; `None` outside the cached range.
    pub fn mode(&self, m: i64) -> Option<&[Complex64]> {
        let h = (self.angles / 2) as i64;
        if (-h..h).contains(&m) {
            Some(&self.modes[(m + h) as usize])
        } else {
            None
        }
    }

    pub fn modes(&self) -> &[Vec<Complex64>] {
        &self.modes
    }

    pub fn value(&self, q: usize, flat: usize) -> Complex64 {
        self.values[q * self.grid.len() + flat]
    }

    /// Max |f − Σ f_m e^{imβ}| over the grid.
    pub fn resynthesis_error(&self) -> f64 {
        let npts = self.grid.len();
        (0..self.values.len())
            .map(|i| {
                let (q, flat) = (i / npts, i % npts);
                let beta = self.angle(q);
                let s: Complex64 = self
                    .mode_range()
                    .map(|m| self.modes[(m + (self.angles / 2) as i64) as usize][flat] * Complex64::from_polar(1.0, m as f64 * beta))
                    .sum();
                (s - self.values[i]).norm()
            })
            .fold(0.0, f64::max)
    }

    /// ∫∫|f|² dx dβ/2π.
    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell() / self.angles as f64
    }

    pub fn scale(&self, c: Complex64) -> Self {
        MotionGroupFunction {
            values: self.values.iter().map(|v| v * c).collect(),
            modes: self.modes.iter().map(|m| m.iter().map(|v| v * c).collect()).collect(),
            ..self.clone()
        }
    }

    /// Left translation by whole grid cells: f(x − (i,j)h, β).
    pub fn translate_cells(&self, dx: i64, dy: i64) -> Result<Self> {
        let g = self.grid;
        let shift = ((dx * dx + dy * dy) as f64).sqrt() * g.spacing();
        let support = self.support_radius + shift;
        if support > g.half_width {
            return Err(coarse("translated support leaves the box"));
        }
        let npts = g.len();
        let n = g.n as i64;
        let mut values = vec![ZERO; self.values.len()];
        for flat in 0..npts {
            let idx = g.unflatten(flat);
            let (s0, s1) = (idx[0] as i64 - dx, idx[1] as i64 - dy);
            if (0..n).contains(&s0) && (0..n).contains(&s1) {
                let src = g.flatten(&[s0 as usize, s1 as usize]);
                for q in 0..self.angles {
                    values[q * npts + flat] = self.values[q * npts + src];
                }
            }
        }
        Self::new(g, self.angles, values, support)
    }

    fn mode_mass(&self, m: i64) -> f64 {
        self.mode(m).map(|v| v.iter().map(|z| z.norm_sqr()).sum()).unwrap_or(0.0)
    }

    /// Rows of the support ball: (j0, first j1, last j1 + 1).
    fn support_rows(&self) -> Vec<(usize, usize, usize)> {
        let g = &self.grid;
        let r = self.support_radius;
        (0..g.n)
            .filter_map(|j0| {
                let x0 = g.coord(j0);
                let span: Vec<usize> = (0..g.n).filter(|&j1| x0 * x0 + g.coord(j1).powi(2) <= r * r).collect();
                span.first().map(|&a| (j0, a, span[span.len() - 1] + 1))
            })
            .collect()
    }
}

/// F(ξ) = h² Σ f(x) e^{−ix·ξ} for complex ξ, over the support rows only.
fn mode_transform(grid: &Grid, rows: &[(usize, usize, usize)], mode: &[Complex64], xi: [Complex64; 2]) -> Complex64 {
    let n = grid.n;
    let i = Complex64::new(0.0, 1.0);
    let e1: Vec<Complex64> = (0..n).map(|j| (-i * xi[1] * grid.coord(j)).exp()).collect();
    let mut acc = ZERO;
    for &(j0, a, b) in rows {
        let row = &mode[j0 * n..(j0 + 1) * n];
        let inner: Complex64 = (a..b).map(|j1| row[j1] * e1[j1]).sum();
        acc += (-i * xi[0] * grid.coord(j0)).exp() * inner;
    }
    acc * grid.cell()
}

/// B = ⌈r·R⌉ + 16.
pub fn default_band(r: f64, support_radius: f64) -> i64 {
    (r * support_radius).ceil() as i64 + 16
}

fn circle_points(r_abs: f64, support_radius: f64, band: i64) -> usize {
    let z = r_abs * support_radius;
    let q = 2 * band as usize + z.ceil() as usize + (10.0 * z.sqrt()).ceil() as usize + 64;
    q + q % 2
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupFourierMatrix {
    pub rep: RepresentationPoint,
    pub band: i64,
    /// `entries[(m' + B)(2B + 1) + (m + B)]`.
    pub entries: Vec<Complex64>,
    pub hs_norm: f64,
}

impl GroupFourierMatrix {
    pub fn size(&self) -> usize {
        (2 * self.band + 1) as usize
    }

    pub fn entry(&self, m_prime: i64, m: i64) -> Complex64 {
        let s = self.size() as i64;
        self.entries[((m_prime + self.band) * s + m + self.band) as usize]
    }

    /// Entries with modulus above `tol`, as (m', m, value).
    pub fn support(&self, tol: f64) -> Vec<(i64, i64, Complex64)> {
        let b = self.band;
        let mut out = Vec::new();
        for mp in -b..=b {
            for m in -b..=b {
                let v = self.entry(mp, m);
                if v.norm() > tol {
                    out.push((mp, m, v));
                }
            }
        }
        out
    }
}

fn check_band(band: i64) -> Result<()> {
    if band > BAND_CAP {
        return Err(CoreError::BandCapExceeded { requested: band, cap: BAND_CAP }.into());
    }
    if band < 0 {
        return Err(PwmError::Invalid("band must be non-negative".into()));
    }
    Ok(())
}

/// Column family m of f̂(T_r), i.e. entries (m', m) for |m'| ≤ B, for complex r.
fn column(f: &MotionGroupFunction, rows: &[(usize, usize, usize)], r: Complex64, m: i64, band: i64) -> Vec<Complex64> {
    let size = (2 * band + 1) as usize;
    let mode = match f.mode(-m) {
        Some(v) if f.mode_mass(-m) > SILENT_MODE => v,
        _ => return vec![ZERO; size],
    };
    let q = circle_points(r.norm(), f.support_radius, band);
    let samples: Vec<Complex64> = (0..q)
        .into_par_iter()
        .map(|k| {
            let a = 2.0 * PI * k as f64 / q as f64;
            mode_transform(&f.grid, rows, mode, [-r * a.cos(), r * a.sin()])
        })
        .collect();
    (0..size)
        .map(|i| {
            let mp = i as i64 - band;
            let d = (m - mp) as f64;
            samples
                .iter()
                .enumerate()
                .map(|(k, s)| s * Complex64::from_polar(1.0, d * 2.0 * PI * k as f64 / q as f64))
                .sum::<Complex64>()
                / q as f64
        })
        .collect()
}

fn check_transform_grid(f: &MotionGroupFunction, r: f64) -> Result<()> {
    if r > f.grid.nyquist() {
        return Err(coarse(format!("r = {r} beyond the grid Nyquist frequency {}", f.grid.nyquist())));
    }
    Ok(())
}

/// f̂(T_r) truncated to modes |m|, |m'| ≤ B (default ⌈rR⌉ + 16).
pub fn group_fourier(f: &MotionGroupFunction, rep: RepresentationPoint, band: Option<i64>) -> Result<GroupFourierMatrix> {
    let band = band.unwrap_or_else(|| default_band(rep.r, f.support_radius));
    check_band(band)?;
    check_transform_grid(f, rep.r)?;
    let rows = f.support_rows();
    let size = (2 * band + 1) as usize;
    let mut entries = vec![ZERO; size * size];
    for m in -band..=band {
        let col = column(f, &rows, Complex64::new(rep.r, 0.0), m, band);
        for (i, v) in col.into_iter().enumerate() {
            entries[i * size + (m + band) as usize] = v;
        }
    }
    let hs_norm = entries.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    Ok(GroupFourierMatrix { rep, band, entries, hs_norm })
}

/// ‖f̂(T_r)‖_HS for every r in the grid.
pub fn hs_decay_profile(f: &MotionGroupFunction, r_grid: &[f64], band: Option<i64>) -> Result<Vec<(f64, f64)>> {
    r_grid
        .iter()
        .map(|&r| Ok((r, group_fourier(f, RepresentationPoint::new(r)?, band)?.hs_norm)))
        .collect()
}

/// ⟨f̂(T_r)e_m, e_{m'}⟩ continued to complex r.
pub fn complexified_entry(f: &MotionGroupFunction, m: i64, m_prime: i64, r: Complex64) -> Result<Complex64> {
    let exponent = r.im.abs() * f.support_radius;
    if exponent > OVERFLOW_EXPONENT {
        return Err(CoreError::OverflowGuard { exponent }.into());
    }
    let band = m.abs().max(m_prime.abs());
    check_band(band)?;
    if r.re.abs() > f.grid.nyquist() {
        return Err(coarse("Re r beyond the grid Nyquist frequency"));
    }
    let col = column(f, &f.support_rows(), r, m, band);
    Ok(col[(m_prime + band) as usize])
}

/// Direct quadrature of ∫∫ f(x,β)⟨T_r(x,β)e_m, e_{m'}⟩ dx dβ/2π with Bessel
/// matrix coefficients; an independent check of [`group_fourier`] for small grids.
pub fn group_fourier_dense(f: &MotionGroupFunction, rep: RepresentationPoint, band: i64) -> Result<GroupFourierMatrix> {
    check_band(band)?;
    let g = &f.grid;
    let npts = g.len();
    let size = (2 * band + 1) as usize;
    let i = Complex64::new(0.0, 1.0);
    let cell = g.cell() / f.angles as f64;
    let partial: Vec<Vec<Complex64>> = (0..npts)
        .into_par_iter()
        .filter_map(|flat| {
            let p = g.point(flat);
            if (0..f.angles).all(|q| f.value(q, flat) == ZERO) {
                return None;
            }
            let rho = (p[0] * p[0] + p[1] * p[1]).sqrt();
            let phi = p[1].atan2(p[0]);
            let mut acc = vec![ZERO; size * size];
            for mp in -band..=band {
                for m in -band..=band {
                    let d = m - mp;
                    // ⟨T_r(x,0)e_m, e_m'⟩ = i^d e^{−i d arg x} J_d(r|x|).
                    let spatial = i.powi(d as i32) * Complex64::from_polar(1.0, -(d as f64) * phi)
                        * bessel_j(d as i32, rep.r * rho);
                    let mut s = ZERO;
                    for q in 0..f.angles {
                        s += f.value(q, flat) * Complex64::from_polar(1.0, m as f64 * f.angle(q));
                    }
                    acc[((mp + band) as usize) * size + (m + band) as usize] = s * spatial * cell;
                }
            }
            Some(acc)
        })
        .collect();
    let mut entries = vec![ZERO; size * size];
    for acc in partial {
        for (e, a) in entries.iter_mut().zip(acc) {
            *e += a;
        }
    }
    let hs_norm = entries.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    Ok(GroupFourierMatrix { rep, band, entries, hs_norm })
}

#[derive(Debug, Clone, Serialize)]
pub struct PlancherelEntry {
    pub norm_sq: f64,
    pub integral: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PlancherelReport {
    pub entries: Vec<PlancherelEntry>,
    /// (max − min)/mean of the ratios.
    pub spread: f64,
    pub tolerance: f64,
    pub passes: bool,
}

/// P(f) = ∫₀^{r_max} ‖f̂(T_r)‖²_HS r dr by composite Gauss–Legendre.
pub fn plancherel_integral(f: &MotionGroupFunction, r_max: f64, panels: usize, band: Option<i64>) -> Result<f64> {
    let rule = pwm_core::quadrature::gauss_legendre(8, -1.0, 1.0);
    let w = r_max / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let c = (p as f64 + 0.5) * w;
        for &(x, wt) in &rule {
            let r = c + 0.5 * w * x;
            let hs = group_fourier(f, RepresentationPoint::new(r)?, band)?.hs_norm;
            total += 0.5 * w * wt * hs * hs * r;
        }
    }
    Ok(total)
}

/// Checks that ‖f‖²/P(f) is the same constant across `fs` within 0.5 %.
pub fn plancherel_consistency(fs: &[MotionGroupFunction], r_max: f64, panels: usize, band: Option<i64>) -> Result<PlancherelReport> {
    let tolerance = 5e-3;
    let mut entries = Vec::with_capacity(fs.len());
    for f in fs {
        let norm_sq = f.norm_sq();
        let integral = plancherel_integral(f, r_max, panels, band)?;
        entries.push(PlancherelEntry { norm_sq, integral, ratio: norm_sq / integral });
    }
    let ratios: Vec<f64> = entries.iter().map(|e| e.ratio).collect();
    let mean = ratios.iter().sum::<f64>() / ratios.len().max(1) as f64;
    let spread = (ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - ratios.iter().cloned().fold(f64::INFINITY, f64::min))
        / mean;
    let passes = spread.is_finite() && spread <= tolerance;
    Ok(PlancherelReport { entries, spread, tolerance, passes })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disc(grid: Grid, angles: usize) -> MotionGroupFunction {
        MotionGroupFunction::from_fn(grid, angles, 1.0, |_, _| Complex64::new(1.0, 0.0)).unwrap()
    }

    #[test]
    fn mode_cache_round_trip() {
        let g = Grid::new(2, 16, 2.0).unwrap();
        let f = MotionGroupFunction::from_fn(g, 8, 1.5, |x, b| {
            Complex64::new(x[0] + b.cos() * x[1], (2.0 * b).sin() - (3.0 * b).cos() * x[0] * x[1])
        })
        .unwrap();
        assert!(f.resynthesis_error() < 1e-12);
        let back = MotionGroupFunction::from_modes(g, f.modes().to_vec(), 1.5).unwrap();
        let err = back.values.iter().zip(&f.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-12);
    }

    #[test]
    fn cosine_in_angle_has_two_modes() {
        let g = Grid::new(2, 8, 2.0).unwrap();
        let f = MotionGroupFunction::from_fn(g, 8, 2.0, |x, b| Complex64::new(x[0] * b.cos(), 0.0)).unwrap();
        for m in f.mode_range() {
            let mass: f64 = f.mode(m).unwrap().iter().map(|v| v.norm()).sum();
            if m.abs() == 1 {
                let flat = g.flatten(&[6, 3]);
                assert!((f.mode(m).unwrap()[flat].re - 0.5 * g.coord(6)).abs() < 1e-14);
            } else {
                assert!(mass < 1e-13, "mode {m}");
            }
        }
    }

    #[test]
    fn bi_invariant_disc_lattice_structure() {
        let g = Grid::new(2, 64, 1.5).unwrap();
        let f = disc(g, 4);
        let r = 2.3;
        let mat = group_fourier(&f, RepresentationPoint::new(r).unwrap(), None).unwrap();
        // The pixelated disc keeps only the square-lattice symmetry, so mode 0
        // leaks into m' ≡ 0 (mod 4) and nowhere else.
        for (mp, m, _) in mat.support(1e-10 * mat.hs_norm) {
            assert!(m == 0 && mp % 4 == 0, "({mp}, {m})");
        }
        let exact = 2.0 * PI * bessel_j(1, r) / r;
        assert!((mat.entry(0, 0).re - exact).abs() < 5e-3, "{} vs {exact}", mat.entry(0, 0));
    }

    #[test]
    fn bi_invariant_gaussian_single_entry() {
        let g = Grid::new(2, 64, 8.0).unwrap();
        let f = MotionGroupFunction::from_fn(g, 4, 8.0, |x, _| Complex64::new((-(x[0] * x[0] + x[1] * x[1]) / 2.0).exp(), 0.0)).unwrap();
        for r in [0.5, 1.9, 4.0] {
            let mat = group_fourier(&f, RepresentationPoint::new(r).unwrap(), Some(12)).unwrap();
            let support = mat.support(1e-8);
            assert_eq!(support.len(), 1);
            assert_eq!((support[0].0, support[0].1), (0, 0));
            assert!((mat.hs_norm - 2.0 * PI * (-r * r / 2.0).exp()).abs() < 1e-8);
        }
    }

    #[test]
    fn zero_function() {
        let g = Grid::new(2, 16, 1.5).unwrap();
        let f = MotionGroupFunction::from_fn(g, 4, 1.0, |_, _| ZERO).unwrap();
        let mat = group_fourier(&f, RepresentationPoint::new(1.0).unwrap(), Some(4)).unwrap();
        assert_eq!(mat.hs_norm, 0.0);
        assert_eq!(complexified_entry(&f, 0, 0, Complex64::new(0.0, 5.0)).unwrap(), ZERO);
    }

    #[test]
    fn overflow_and_band_guards() {
        let g = Grid::new(2, 16, 1.5).unwrap();
        let f = disc(g, 4);
        assert!(matches!(
            complexified_entry(&f, 0, 0, Complex64::new(0.0, 800.0)),
            Err(PwmError::Core(CoreError::OverflowGuard { .. }))
        ));
        assert!(matches!(
            group_fourier(&f, RepresentationPoint::new(1.0).unwrap(), Some(BAND_CAP + 1)),
            Err(PwmError::Core(CoreError::BandCapExceeded { .. }))
        ));
        assert!(matches!(
            group_fourier(&f, RepresentationPoint::new(100.0).unwrap(), Some(2)),
            Err(PwmError::GridTooCoarse(_))
        ));
    }

    #[test]
    fn real_r_complexified_matches() {
        let g = Grid::new(2, 32, 1.5).unwrap();
        let f = MotionGroupFunction::from_fn(g, 8, 1.0, |x, b| Complex64::new(1.0 - x[0] * x[0], x[1]) * Complex64::from_polar(1.0, b)).unwrap();
        let mat = group_fourier(&f, RepresentationPoint::new(1.7).unwrap(), Some(5)).unwrap();
        for (mp, m) in [(0, -1), (2, -1), (-3, -1), (1, 1)] {
            let c = complexified_entry(&f, m, mp, Complex64::new(1.7, 0.0)).unwrap();
            assert!((c - mat.entry(mp, m)).norm() < 1e-10);
        }
    }
}
