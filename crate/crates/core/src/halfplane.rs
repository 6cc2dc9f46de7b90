//! Poisson integrals of boundary log-modulus data on the upper half-plane,
//! the subharmonic majorant inequality log|g(z)| ≤ P[log|g|](z), and
//! exponential-type estimates along the imaginary axis.
//!
//! Boundary data is integrated against the Poisson kernel exactly for its
//! piecewise-linear interpolant. Isolated zeros (log|g| = −∞ at a node) are
//! handled by subtracting log|t − t₀| in a small window and integrating that
//! piece adaptively.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::error::CoreError;
use crate::quadrature::{integrate, integrate_to_infinity};

/// Beyond the sampled range, log|g(t)| ≈ offset + log_slope · ln max(|t|, 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailModel {
    pub log_slope: f64,
    pub offset: f64,
}

/// Samples of log|g| on a strictly increasing grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryLogData {
    pub t_grid: Vec<f64>,
    pub log_modulus: Vec<f64>,
    pub tail_model: Option<TailModel>,
}

/// Half-width (in nodes) of the singularity-subtraction window around a zero.
/// Windows also stop halfway to the neighbouring zero.
const ZERO_WINDOW: usize = 1 << 16;

/// Allowed uncovered kernel mass without a tail model.
const COVERAGE_TOL: f64 = 1e-8;

impl BoundaryLogData {
    pub fn new(t_grid: Vec<f64>, log_modulus: Vec<f64>, tail_model: Option<TailModel>) -> Result<Self, CoreError> {
        if t_grid.len() < 2 || t_grid.len() != log_modulus.len() {
            return Err(CoreError::InvalidParameter { name: "t_grid", reason: "need at least two samples matching log_modulus" });
        }
        if t_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(CoreError::InvalidParameter { name: "t_grid", reason: "must be strictly increasing" });
        }
        if log_modulus.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
            return Err(CoreError::NonFiniteSample { t: f64::NAN });
        }
        if log_modulus.windows(2).any(|w| w[0] == f64::NEG_INFINITY && w[1] == f64::NEG_INFINITY) {
            return Err(CoreError::InvalidParameter { name: "log_modulus", reason: "zeros must be isolated" });
        }
        Ok(BoundaryLogData { t_grid, log_modulus, tail_model })
    }

    /// Samples ln|g(t)| for a boundary function given as a closure.
    pub fn sample<F: Fn(f64) -> f64>(t_grid: Vec<f64>, log_abs: F, tail_model: Option<TailModel>) -> Result<Self, CoreError> {
        let l = t_grid.iter().map(|&t| log_abs(t)).collect();
        Self::new(t_grid, l, tail_model)
    }
}

/// Uniform grid t_j = j·h for |j| ≤ n.
pub fn symmetric_grid(h: f64, n: usize) -> Vec<f64> {
    (0..=2 * n).map(|j| (j as f64 - n as f64) * h).collect()
}

/// Symmetric grid of multiples of `unit / fine` that coarsens dyadically.
///
/// The spacing is `unit / fine` for |t| < `inner_units`·unit and halves in
/// resolution each time |t| doubles, never dropping below `unit / coarse`. Every
/// multiple of `unit` is a node, so known zeros at k·unit stay on the grid.
pub fn graded_grid(unit: f64, t_max: f64, inner_units: usize, fine: usize, coarse: usize) -> Vec<f64> {
    let inner = (inner_units.max(1) * fine) as u64;
    let limit = libm::ceil(t_max / unit * fine as f64) as u64;
    let mut pos = Vec::new();
    let mut k = 0u64;
    while k <= limit {
        pos.push(k);
        let mut div = fine;
        let mut edge = inner;
        while k >= edge && div > coarse.max(1) {
            div /= 2;
            edge *= 2;
        }
        k += (fine / div.max(1)) as u64;
    }
    let scale = unit / fine as f64;
    let mut out: Vec<f64> = pos.iter().rev().filter(|&&k| k > 0).map(|&k| -(k as f64) * scale).collect();
    out.extend(pos.iter().map(|&k| k as f64 * scale));
    out
}

/// Boundary data of Π_k sinc(c_k t) on a graded grid with the |t|^{−K} tail
/// model of the product. Zeros are grid nodes when every c_max/c_k is an integer.
pub fn sinc_product_boundary(scales: &[f64], half_width: f64) -> Result<BoundaryLogData, CoreError> {
    if scales.is_empty() || scales.iter().any(|c| !(*c > 0.0)) {
        return Err(CoreError::InvalidParameter { name: "scales", reason: "need positive scales" });
    }
    let c_max = scales.iter().cloned().fold(0.0, f64::max);
    let t = graded_grid(PI / c_max, half_width, 16, 4096, 128);
    let k = scales.len() as f64;
    let offset = -(k * core::f64::consts::LN_2) - scales.iter().map(|c| libm::log(*c)).sum::<f64>();
    let tail = TailModel { log_slope: -k, offset };
    BoundaryLogData::sample(
        t,
        |t| {
            let mut s = 0.0;
            for &c in scales {
                let u = c * t;
                let r = libm::round(u / PI);
                if r != 0.0 && libm::fabs(u - r * PI) < 1e-9 {
                    return f64::NEG_INFINITY;
                }
                let v = if u == 0.0 { 1.0 } else { libm::sin(u) / u };
                s += libm::log(libm::fabs(v));
            }
            s
        },
        Some(tail),
    )
}

struct Kernel {
    x: f64,
    y: f64,
}

impl Kernel {
    fn density(&self, t: f64) -> f64 {
        let d = t - self.x;
        self.y / (PI * (self.y * self.y + d * d))
    }

    /// ∫_a^b P dt
    fn mass(&self, a: f64, b: f64) -> f64 {
        let (u, v) = ((a - self.x) / self.y, (b - self.x) / self.y);
        let prod = u * v;
        if prod > -1.0 {
            libm::atan((v - u) / (1.0 + prod)) / PI
        } else {
            (libm::atan(v) - libm::atan(u)) / PI
        }
    }

    /// ∫_a^b P(t)(t − x) dt
    fn first_moment(&self, a: f64, b: f64) -> f64 {
        let (da, db) = (a - self.x, b - self.x);
        let base = self.y * self.y + da * da;
        self.y / (2.0 * PI) * libm::log1p((db * db - da * da) / base)
    }

    /// ∫ P ℓ over [a, b] with ℓ linear through (a, la), (b, lb).
    fn linear_cell(&self, a: f64, b: f64, la: f64, lb: f64) -> f64 {
        let slope = (lb - la) / (b - a);
        let m0 = self.mass(a, b);
        let m1 = self.first_moment(a, b);
        // ℓ(t) = la + slope (t − x) + slope (x − a)
        la * m0 + slope * (m1 + (self.x - a) * m0)
    }
}

fn sum_cells(k: &Kernel, t: &[f64], l: &[f64], range: core::ops::Range<usize>) -> f64 {
    let mut s = 0.0;
    for j in range {
        s += k.linear_cell(t[j], t[j + 1], l[j], l[j + 1]);
    }
    s
}

/// Poisson integral over the sampled range only; zeros are handled, tails ignored.
fn grid_part(b: &BoundaryLogData, k: &Kernel) -> Result<f64, CoreError> {
    let t = &b.t_grid;
    let l = &b.log_modulus;
    let n = t.len();
    let zeros: Vec<usize> = (0..n).filter(|&j| l[j] == f64::NEG_INFINITY).collect();
    if zeros.is_empty() {
        return Ok(sum_cells(k, t, l, 0..n - 1));
    }
    // windows [lo, hi] in node indices, non-overlapping
    let mut windows: Vec<(usize, usize, usize)> = Vec::with_capacity(zeros.len());
    for (i, &z) in zeros.iter().enumerate() {
        let left_limit = if i == 0 { 0 } else { (zeros[i - 1] + z).div_ceil(2) };
        let right_limit = if i + 1 == zeros.len() { n - 1 } else { (z + zeros[i + 1]) / 2 };
        let lo = z.saturating_sub(ZERO_WINDOW).max(left_limit);
        let hi = (z + ZERO_WINDOW).min(right_limit);
        windows.push((lo, z, hi));
    }
    let mut total = 0.0;
    let mut cursor = 0usize;
    for &(lo, z, hi) in &windows {
        if lo > cursor {
            total += sum_cells(k, t, l, cursor..lo);
        }
        if hi == lo {
            cursor = hi;
            continue;
        }
        let tz = t[z];
        let mut r: Vec<f64> = (lo..=hi)
            .map(|j| if j == z { 0.0 } else { l[j] - libm::log((t[j] - tz).abs()) })
            .collect();
        let iz = z - lo;
        r[iz] = match (iz > 0, iz < r.len() - 1) {
            (true, true) => {
                // linear interpolation of R through the neighbours
                let (tl, tr) = (t[z - 1], t[z + 1]);
                let w = (tz - tl) / (tr - tl);
                (1.0 - w) * r[iz - 1] + w * r[iz + 1]
            }
            (true, false) => r[iz - 1],
            (false, true) => r[iz + 1],
            (false, false) => 0.0,
        };
        if r.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::InvalidParameter { name: "log_modulus", reason: "zeros must be isolated" });
        }
        total += sum_cells(k, &t[lo..=hi], &r, 0..hi - lo);
        let log_part = |t: f64| k.density(t) * libm::log((t - tz).abs());
        let tol = 1e-14;
        if z > lo {
            total += integrate(log_part, t[lo], tz, tol, 4000)?.value;
        }
        if hi > z {
            total += integrate(log_part, tz, t[hi], tol, 4000)?.value;
        }
        cursor = hi;
    }
    if cursor < n - 1 {
        total += sum_cells(k, t, l, cursor..n - 1);
    }
    Ok(total)
}

fn tail_part(model: &TailModel, k: &Kernel, t_lo: f64, t_hi: f64) -> Result<f64, CoreError> {
    let mass_out = 1.0 - k.mass(t_lo, t_hi);
    let mut s = model.offset * mass_out;
    if model.log_slope != 0.0 {
        let f = |t: f64| k.density(t) * libm::log(t.abs().max(1.0));
        let right = integrate_to_infinity(f, t_hi, 1e-14, 2000)?.value;
        let left = integrate_to_infinity(|u| f(-u), -t_lo, 1e-14, 2000)?.value;
        s += model.log_slope * (right + left);
    }
    Ok(s)
}

fn check_point(y: f64) -> Result<(), CoreError> {
    if y > 0.0 && y.is_finite() {
        Ok(())
    } else {
        Err(CoreError::InvalidParameter { name: "y", reason: "must be positive" })
    }
}

/// U(x + iy) = (1/π) ∫ y log|g(t)| / (y² + (x − t)²) dt.
pub fn poisson_integral(b: &BoundaryLogData, x: f64, y: f64) -> Result<f64, CoreError> {
    check_point(y)?;
    let k = Kernel { x, y };
    let (t_lo, t_hi) = (b.t_grid[0], *b.t_grid.last().unwrap_or(&0.0));
    let grid = grid_part(b, &k)?;
    match &b.tail_model {
        Some(m) => Ok(grid + tail_part(m, &k, t_lo, t_hi)?),
        None => {
            let missing = 1.0 - k.mass(t_lo, t_hi);
            if missing > COVERAGE_TOL {
                Err(CoreError::InsufficientCoverage { missing_mass: missing })
            } else {
                Ok(grid)
            }
        }
    }
}

/// Poisson integral restricted to the sampled range, with no coverage check.
pub fn truncated_poisson_integral(b: &BoundaryLogData, x: f64, y: f64) -> Result<f64, CoreError> {
    check_point(y)?;
    grid_part(b, &Kernel { x, y })
}

/// ∫ P(x + iy, t) dt as the Poisson machinery sees it: the grid cells applied to
/// ℓ ≡ 1, plus the tails beyond the grid integrated numerically when a tail model
/// is present.
pub fn kernel_mass(b: &BoundaryLogData, x: f64, y: f64) -> Result<f64, CoreError> {
    check_point(y)?;
    let k = Kernel { x, y };
    let t = &b.t_grid;
    let ones = alloc::vec![1.0; t.len()];
    let inner = sum_cells(&k, t, &ones, 0..t.len() - 1);
    match b.tail_model {
        Some(_) => {
            let right = integrate_to_infinity(|s| k.density(s), t[t.len() - 1], 1e-15, 2000)?.value;
            let left = integrate_to_infinity(|u| k.density(-u), -t[0], 1e-15, 2000)?.value;
            Ok(inner + right + left)
        }
        None => Ok(inner),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MajorantPoint {
    pub x: f64,
    pub y: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MajorantReport {
    pub points: Vec<MajorantPoint>,
    pub min_margin: f64,
    pub tolerance: f64,
}

impl MajorantReport {
    pub fn holds(&self) -> bool {
        self.min_margin >= -self.tolerance
    }
}

/// Checks log|g(x+iy)| ≤ P[log|g|](x+iy) at each point.
///
/// `g` must be bounded by one on the closed upper half-plane; this is checked
/// on the boundary samples and on the positive imaginary axis.
pub fn log_majorant_check<G: Fn(Complex64) -> Complex64>(
    g: G,
    boundary: &BoundaryLogData,
    points: &[(f64, f64)],
    tolerance: f64,
) -> Result<MajorantReport, CoreError> {
    let slack = 1e-9;
    for (&t, &l) in boundary.t_grid.iter().zip(&boundary.log_modulus) {
        if l > slack {
            return Err(CoreError::NotBoundedByOne { z_re: t, z_im: 0.0, modulus: libm::exp(l) });
        }
    }
    for i in 1..=200 {
        let y = 0.25 * i as f64;
        let v = g(Complex64::new(0.0, y)).norm();
        if v > 1.0 + slack {
            return Err(CoreError::NotBoundedByOne { z_re: 0.0, z_im: y, modulus: v });
        }
    }
    let mut out = Vec::with_capacity(points.len());
    for &(x, y) in points {
        let v = g(Complex64::new(x, y)).norm();
        let lhs = if v == 0.0 { f64::NEG_INFINITY } else { libm::log(v) };
        let rhs = poisson_integral(boundary, x, y)?;
        let margin = if lhs == f64::NEG_INFINITY { f64::INFINITY } else { rhs - lhs };
        out.push(MajorantPoint { x, y, lhs, rhs, margin });
    }
    let min_margin = out.iter().map(|p| p.margin).fold(f64::INFINITY, f64::min);
    Ok(MajorantReport { points: out, min_margin, tolerance })
}

/// Least-squares growth rate of log|g(ir)| over the top decade of `r_grid`.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeEstimate {
    pub slope: f64,
    pub intercept: f64,
    pub r_used: Vec<f64>,
    /// Root-mean-square deviation of the fit.
    pub residual: f64,
}

pub fn estimate_exponential_type<G: Fn(Complex64) -> Complex64>(g: G, r_grid: &[f64]) -> Result<TypeEstimate, CoreError> {
    let r_max = r_grid.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(r_max > 0.0) {
        return Err(CoreError::InvalidParameter { name: "r_grid", reason: "needs a positive sample" });
    }
    let samples: Vec<(f64, f64)> = r_grid
        .iter()
        .filter(|&&r| r >= 0.1 * r_max)
        .filter_map(|&r| {
            let v = g(Complex64::new(0.0, r)).norm();
            (v > 0.0 && v.is_finite()).then(|| (r, libm::log(v)))
        })
        .collect();
    if samples.is_empty() {
        return Err(CoreError::DegenerateData);
    }
    let n = samples.len() as f64;
    let mx = samples.iter().map(|s| s.0).sum::<f64>() / n;
    let my = samples.iter().map(|s| s.1).sum::<f64>() / n;
    let sxx: f64 = samples.iter().map(|s| (s.0 - mx) * (s.0 - mx)).sum();
    let sxy: f64 = samples.iter().map(|s| (s.0 - mx) * (s.1 - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let residual = libm::sqrt(samples.iter().map(|s| { let d = s.1 - intercept - slope * s.0; d * d }).sum::<f64>() / n);
    Ok(TypeEstimate { slope, intercept, r_used: samples.iter().map(|s| s.0).collect(), residual })
}
