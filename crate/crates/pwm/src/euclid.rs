//! Fourier and Radon transforms on ℝⁿ, n ≤ 3, and the slice-projection identity
//! f̂(λω) = F₁(Rf(ω,·))(λ).

use num_complex::Complex64;
use pwm_core::quadrature::gauss_legendre;
use rayon::prelude::*;

use crate::error::{coarse, PwmError, Result};
use crate::fft;
use crate::grid::{Field, Grid, SampledFunction, Sinogram, Spectrum};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// A line sample differing from its neighbour by more than this fraction of the
/// peak modulus is treated as straddling a jump.
const JUMP_FRACTION: f64 = 0.1;

const PANEL_POINTS: usize = 4;

fn check_support(grid: &Grid, support_radius: f64) -> Result<()> {
    if support_radius > grid.half_width {
        return Err(coarse(format!(
            "support radius {support_radius} exceeds the box half width {}",
            grid.half_width
        )));
    }
    Ok(())
}

pub fn fourier(f: &SampledFunction) -> Result<Spectrum> {
    check_support(&f.grid, f.support_radius)?;
    Ok(Spectrum { grid: f.grid, values: fft::forward(&f.grid, &f.values), support_radius: f.support_radius })
}

/// Inverse transform; samples outside the spectrum's support hint are set to zero.
pub fn inverse_fourier(spectrum: &Spectrum) -> Result<SampledFunction> {
    check_support(&spectrum.grid, spectrum.support_radius)?;
    let mut values = fft::inverse(&spectrum.grid, &spectrum.values);
    let g = spectrum.grid;
    for (flat, v) in values.iter_mut().enumerate() {
        let p = g.point(flat);
        if crate::grid::norm(&p[..g.dim]) > spectrum.support_radius {
            *v = ZERO;
        }
    }
    Ok(SampledFunction { grid: g, values, support_radius: spectrum.support_radius })
}

/// Quadrature nodes `(s, weight, g(s))` for ∫_a^b g(s) ds.
///
/// The integrand is scanned at spacing ≈ h; intervals containing a jump are
/// bisected down to the discontinuity and each smooth piece gets composite
/// Gauss–Legendre panels of length ≤ h.
pub fn line_nodes(g: &dyn Fn(f64) -> Complex64, a: f64, b: f64, h: f64) -> Vec<(f64, f64, Complex64)> {
    if !(b > a) {
        return Vec::new();
    }
    let m = ((b - a) / h).ceil().max(1.0) as usize;
    let step = (b - a) / m as f64;
    let samples: Vec<Complex64> = (0..=m).map(|j| g(a + j as f64 * step)).collect();
    let amp = samples.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut breaks = vec![a];
    if amp > 0.0 {
        for j in 0..m {
            if (samples[j + 1] - samples[j]).norm() > JUMP_FRACTION * amp {
                let (mut lo, mut hi) = (a + j as f64 * step, a + (j + 1) as f64 * step);
                let (mut glo, mut ghi) = (samples[j], samples[j + 1]);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    let gm = g(mid);
                    if (gm - glo).norm() >= (ghi - gm).norm() {
                        hi = mid;
                        ghi = gm;
                    } else {
                        lo = mid;
                        glo = gm;
                    }
                }
                breaks.push(0.5 * (lo + hi));
            }
        }
    }
    breaks.push(b);
    let rule = gauss_legendre(PANEL_POINTS, -1.0, 1.0);
    let mut nodes = Vec::with_capacity(PANEL_POINTS * (m + breaks.len()));
    for w in breaks.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi <= lo {
            continue;
        }
        let panels = ((hi - lo) / h).ceil().max(1.0) as usize;
        let ph = (hi - lo) / panels as f64;
        for p in 0..panels {
            let c = lo + (p as f64 + 0.5) * ph;
            for &(x, wt) in &rule {
                let s = c + 0.5 * ph * x;
                nodes.push((s, 0.5 * ph * wt, g(s)));
            }
        }
    }
    nodes
}

fn line_integral(g: &dyn Fn(f64) -> Complex64, a: f64, b: f64, h: f64) -> Complex64 {
    line_nodes(g, a, b, h).iter().map(|(_, w, v)| v * *w).sum()
}

fn orthonormal_complement(omega: &[f64]) -> Vec<Vec<f64>> {
    match omega.len() {
        2 => vec![vec![-omega[1], omega[0]]],
        3 => {
            let pick = if omega[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
            let d: f64 = (0..3).map(|i| pick[i] * omega[i]).sum();
            let mut e1: Vec<f64> = (0..3).map(|i| pick[i] - d * omega[i]).collect();
            let n1 = crate::grid::norm(&e1);
            e1.iter_mut().for_each(|v| *v /= n1);
            let e2 = vec![
                omega[1] * e1[2] - omega[2] * e1[1],
                omega[2] * e1[0] - omega[0] * e1[2],
                omega[0] * e1[1] - omega[1] * e1[0],
            ];
            vec![e1, e2]
        }
        _ => Vec::new(),
    }
}

fn check_direction(omega: &[f64], dim: usize) -> Result<()> {
    if omega.len() != dim || (crate::grid::norm(omega) - 1.0).abs() > 1e-12 {
        return Err(PwmError::Invalid(format!("direction {omega:?} is not a unit vector in ℝ^{dim}")));
    }
    Ok(())
}

fn hyperplane_integral(f: &dyn Field, omega: &[f64], basis: &[Vec<f64>], t: f64, h: f64) -> Complex64 {
    let r = f.support_radius();
    let rho2 = r * r - t * t;
    if rho2 <= 0.0 {
        return ZERO;
    }
    let rho = rho2.sqrt();
    match omega.len() {
        2 => {
            let line = |s: f64| {
                let p = [t * omega[0] + s * basis[0][0], t * omega[1] + s * basis[0][1]];
                f.eval(&p)
            };
            line_integral(&line, -rho, rho, h)
        }
        _ => {
            let outer = |u: f64| {
                let half = (rho2 - u * u).max(0.0).sqrt();
                let inner = |v: f64| {
                    let mut q = [0.0; 3];
                    for i in 0..3 {
                        q[i] = t * omega[i] + u * basis[0][i] + v * basis[1][i];
                    }
                    f.eval(&q)
                };
                line_integral(&inner, -half, half, h)
            };
            panel_integral(&outer, -rho, rho, h)
        }
    }
}

/// Composite Gauss–Legendre without jump detection, for continuous integrands.
fn panel_integral(g: &dyn Fn(f64) -> Complex64, a: f64, b: f64, h: f64) -> Complex64 {
    panel_nodes(a, b, h).into_iter().map(|(s, w)| g(s) * w).sum()
}

fn panel_nodes(a: f64, b: f64, h: f64) -> Vec<(f64, f64)> {
    if !(b > a) {
        return Vec::new();
    }
    let rule = gauss_legendre(PANEL_POINTS, -1.0, 1.0);
    let panels = ((b - a) / h).ceil().max(1.0) as usize;
    let ph = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * PANEL_POINTS);
    for p in 0..panels {
        let c = a + (p as f64 + 0.5) * ph;
        for &(x, w) in &rule {
            out.push((c + 0.5 * ph * x, 0.5 * ph * w));
        }
    }
    out
}

/// Hyperplane integrals Rf(ω, t) over the support ball.
///
/// `resolution` is the number of quadrature cells across the support diameter.
pub fn radon(f: &dyn Field, directions: &[Vec<f64>], offsets: &[f64], resolution: usize) -> Result<Sinogram> {
    let dim = f.dim();
    if !(2..=3).contains(&dim) {
        return Err(PwmError::Invalid(format!("radon needs n ∈ {{2,3}}, got {dim}")));
    }
    if resolution < 8 {
        return Err(coarse(format!("hyperplane resolution {resolution} < 8")));
    }
    for w in directions {
        check_direction(w, dim)?;
    }
    let h = 2.0 * f.support_radius().max(f64::MIN_POSITIVE) / resolution as f64;
    let bases: Vec<Vec<Vec<f64>>> = directions.iter().map(|w| orthonormal_complement(w)).collect();
    let nt = offsets.len();
    let values = (0..directions.len() * nt)
        .into_par_iter()
        .map(|i| {
            let (d, ti) = (i / nt, i % nt);
            hyperplane_integral(f, &directions[d], &bases[d], offsets[ti], h)
        })
        .collect();
    Ok(Sinogram { directions: directions.to_vec(), offsets: offsets.to_vec(), values })
}

/// Quadrature nodes `(x, weight, f(x))` over the support ball of `f`.
fn ball_nodes(f: &dyn Field, resolution: usize) -> Vec<([f64; 3], f64, Complex64)> {
    let r = f.support_radius();
    let h = 2.0 * r / resolution as f64;
    match f.dim() {
        1 => line_nodes(&|s| f.eval(&[s]), -r, r, h).into_iter().map(|(s, w, v)| ([s, 0.0, 0.0], w, v)).collect(),
        2 => panel_nodes(-r, r, h)
            .into_par_iter()
            .flat_map_iter(|(y, wy)| {
                let half = (r * r - y * y).max(0.0).sqrt();
                line_nodes(&|s| f.eval(&[s, y]), -half, half, h)
                    .into_iter()
                    .map(move |(s, w, v)| ([s, y, 0.0], w * wy, v))
            })
            .collect(),
        _ => {
            let outer: Vec<(f64, f64, f64, f64)> = panel_nodes(-r, r, h)
                .into_iter()
                .flat_map(|(z, wz)| {
                    let rz = (r * r - z * z).max(0.0).sqrt();
                    panel_nodes(-rz, rz, h).into_iter().map(move |(y, wy)| (z, wz, y, wy))
                })
                .collect();
            outer
                .into_par_iter()
                .flat_map_iter(|(z, wz, y, wy)| {
                    let half = (r * r - z * z - y * y).max(0.0).sqrt();
                    line_nodes(&|s| f.eval(&[s, y, z]), -half, half, h)
                        .into_iter()
                        .map(move |(s, w, v)| ([s, y, z], w * wy * wz, v))
                })
                .collect()
        }
    }
}

/// f̂(ξ) at arbitrary frequencies by direct quadrature over the support ball.
pub fn direct_fourier(f: &dyn Field, freqs: &[Vec<f64>], resolution: usize) -> Result<Vec<Complex64>> {
    if resolution < 8 {
        return Err(coarse(format!("quadrature resolution {resolution} < 8")));
    }
    let dim = f.dim();
    if freqs.iter().any(|xi| xi.len() != dim) {
        return Err(PwmError::Invalid("frequency dimension mismatch".into()));
    }
    let nodes: Vec<_> = ball_nodes(f, resolution).into_iter().filter(|(_, _, v)| v.norm() > 0.0).collect();
    Ok(freqs
        .par_iter()
        .map(|xi| {
            nodes
                .iter()
                .map(|(x, w, v)| {
                    let ph: f64 = (0..dim).map(|a| x[a] * xi[a]).sum();
                    v * Complex64::from_polar(*w, -ph)
                })
                .sum()
        })
        .collect())
}

/// F₁ of sampled 1-D data on a uniform grid by the trapezoid rule.
pub fn transform_samples(t: &[f64], values: &[Complex64], lambdas: &[f64]) -> Vec<Complex64> {
    let n = t.len();
    let dt = if n > 1 { t[1] - t[0] } else { 0.0 };
    lambdas
        .iter()
        .map(|&l| {
            values
                .iter()
                .zip(t)
                .enumerate()
                .map(|(j, (v, &tj))| {
                    let w = if j == 0 || j + 1 == n { 0.5 * dt } else { dt };
                    v * Complex64::from_polar(w, -l * tj)
                })
                .sum()
        })
        .collect()
}

/// f̂(λω) for every λ, from precomputed ball nodes.
///
/// Uniformly spaced λ use a phase recurrence instead of one exponential per term.
fn ray_transform(nodes: &[([f64; 3], f64, Complex64)], omega: &[f64], lambdas: &[f64]) -> Vec<Complex64> {
    let uniform = lambdas.len() > 2 && {
        let d = lambdas[1] - lambdas[0];
        lambdas.windows(2).all(|w| ((w[1] - w[0]) - d).abs() <= 1e-12 * d.abs().max(1.0))
    };
    let mut acc = vec![ZERO; lambdas.len()];
    if uniform {
        let d = lambdas[1] - lambdas[0];
        for (x, w, v) in nodes {
            let p: f64 = omega.iter().zip(x).map(|(a, b)| a * b).sum();
            let mut term = v * Complex64::from_polar(*w, -lambdas[0] * p);
            let step = Complex64::from_polar(1.0, -d * p);
            for a in acc.iter_mut() {
                *a += term;
                term *= step;
            }
        }
    } else {
        for (x, w, v) in nodes {
            let p: f64 = omega.iter().zip(x).map(|(a, b)| a * b).sum();
            for (a, l) in acc.iter_mut().zip(lambdas) {
                *a += v * Complex64::from_polar(*w, -l * p);
            }
        }
    }
    acc
}

/// max_λ |f̂(λω) − F₁(Rf(ω,·))(λ)| from two independent pipelines.
pub fn slice_projection_residual(f: &dyn Field, omega: &[f64], lambdas: &[f64], resolution: usize) -> Result<f64> {
    Ok(slice_projection_residuals(f, &[omega.to_vec()], lambdas, resolution)?[0])
}

/// [`slice_projection_residual`] for several directions, sharing the n-D quadrature.
pub fn slice_projection_residuals(
    f: &dyn Field,
    directions: &[Vec<f64>],
    lambdas: &[f64],
    resolution: usize,
) -> Result<Vec<f64>> {
    for w in directions {
        check_direction(w, f.dim())?;
    }
    if resolution < 8 {
        return Err(coarse(format!("quadrature resolution {resolution} < 8")));
    }
    let r = f.support_radius();
    if r == 0.0 {
        return Ok(vec![0.0; directions.len()]);
    }
    let nodes: Vec<_> = ball_nodes(f, resolution).into_iter().filter(|(_, _, v)| v.norm() > 0.0).collect();
    let offsets = crate::grid::symmetric_offsets(r, resolution + 1);
    let sino = radon(f, directions, &offsets, resolution)?;
    Ok(directions
        .par_iter()
        .enumerate()
        .map(|(d, w)| {
            let direct = ray_transform(&nodes, w, lambdas);
            let sliced = transform_samples(&offsets, sino.row(d), lambdas);
            direct.iter().zip(&sliced).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
        })
        .collect())
}

/// Radial f on `out` with f̂(y) = (F₁g)(‖y‖), for an even profile g on ℝ.
pub fn radialize(g: &SampledFunction, out: Grid) -> Result<SampledFunction> {
    if g.grid.dim != 1 {
        return Err(PwmError::Invalid("radialize takes a function on ℝ".into()));
    }
    check_support(&g.grid, g.support_radius)?;
    check_support(&out, g.support_radius)?;
    let n = g.grid.n;
    let scale = g.max_abs().max(f64::MIN_POSITIVE);
    for j in 1..n {
        if (g.values[j] - g.values[n - j]).norm() > 1e-12 * scale {
            return Err(PwmError::Invalid(format!("profile is not even at x = {}", g.grid.coord(j))));
        }
    }
    let half = (out.n / 2) as i64;
    let key = |flat: usize| -> usize {
        let idx = out.unflatten(flat);
        (0..out.dim).map(|a| (idx[a] as i64 - half).pow(2) as usize).sum()
    };
    let max_key = out.dim * (half * half) as usize;
    let mut present = vec![false; max_key + 1];
    (0..out.len()).for_each(|i| present[key(i)] = true);
    let keys: Vec<usize> = (0..=max_key).filter(|&k| present[k]).collect();
    let dxi = out.freq_spacing();
    let nodes: Vec<(f64, Complex64)> =
        (0..n).filter(|&j| g.values[j].norm() > 0.0).map(|j| (g.grid.coord(j), g.values[j])).collect();
    let h = g.grid.spacing();
    let vals: Vec<Complex64> = keys
        .par_iter()
        .map(|&k| {
            let lam = dxi * (k as f64).sqrt();
            nodes.iter().map(|(s, v)| v * Complex64::from_polar(h, -lam * s)).sum()
        })
        .collect();
    let mut lookup = vec![ZERO; max_key + 1];
    for (k, v) in keys.iter().zip(vals) {
        lookup[*k] = v;
    }
    let spectrum = Spectrum {
        grid: out,
        values: (0..out.len()).map(|i| lookup[key(i)]).collect(),
        support_radius: g.support_radius,
    };
    inverse_fourier(&spectrum)
}
