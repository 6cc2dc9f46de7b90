//! Time-domain realization of sinc-product designs and the radial construction
//! pipeline: design → realize → symmetrize → radialize → certify.

use num_complex::Complex64;
use pwm_core::certificate::verify_envelope_with_constant;
use pwm_core::{design_widths, DesignOptions, EnvelopeCertificate, SincProductDesign, ThetaEnvelope};
use serde::Serialize;

use crate::error::{coarse, PwmError, Result};
use crate::euclid::{fourier, inverse_fourier, radialize};
use crate::grid::{Grid, SampledFunction, Spectrum};

/// Largest K evaluated by the closed-form spline formula.
const EXACT_MAX_TERMS: usize = 8;

/// Symmetrizations with L² norm below this count as annihilated.
const ANNIHILATION_TOL: f64 = 1e-12;

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Density of Σ U_k with U_k uniform on [−a_k/2, a_k/2], by inclusion–exclusion.
fn box_spline(widths: &[f64], x: f64) -> f64 {
    let k = widths.len();
    let total: f64 = widths.iter().sum();
    let norm = factorial(k - 1) * widths.iter().product::<f64>();
    let mut acc = 0.0;
    for mask in 0..(1usize << k) {
        let mut shift = 0.0;
        let mut sign = 1.0;
        for (i, a) in widths.iter().enumerate() {
            if mask >> i & 1 == 1 {
                shift += a;
                sign = -sign;
            }
        }
        let u = x + 0.5 * total - shift;
        let p = if k == 1 {
            match u.partial_cmp(&0.0) {
                Some(std::cmp::Ordering::Greater) => 1.0,
                Some(std::cmp::Ordering::Equal) => 0.5,
                _ => 0.0,
            }
        } else if u > 0.0 {
            u.powi(k as i32 - 1)
        } else {
            0.0
        };
        acc += sign * p;
    }
    acc / norm
}

fn spline_is_stable(widths: &[f64]) -> bool {
    let k = widths.len();
    if k > EXACT_MAX_TERMS {
        return false;
    }
    let total: f64 = widths.iter().sum();
    let term = total.powi(k as i32 - 1) / (factorial(k - 1) * widths.iter().product::<f64>());
    term * (1u64 << k) as f64 * f64::EPSILON < 1e-10 / total
}

/// g₁ = a₁⁻¹1[−a₁/2,a₁/2] ⋆ … ⋆ a_K⁻¹1[−a_K/2,a_K/2] on a 1-D grid.
///
/// Small designs use the exact piecewise-polynomial formula; larger ones invert
/// the analytic sinc product on the grid.
pub fn realize_time_domain(design: &SincProductDesign, grid: Grid) -> Result<SampledFunction> {
    if grid.dim != 1 {
        return Err(PwmError::Invalid("designs live on ℝ".into()));
    }
    if design.widths.is_empty() || design.widths.iter().any(|a| !(*a > 0.0)) {
        return Err(PwmError::Invalid("design widths must be positive".into()));
    }
    let total = design.total_support();
    if grid.half_width < total {
        return Err(coarse(format!("grid half width {} below total support {total}", grid.half_width)));
    }
    if grid.spacing() > design.widths.iter().cloned().fold(f64::INFINITY, f64::min) {
        return Err(coarse("grid spacing exceeds the narrowest box"));
    }
    let radius = design.support_radius();
    if spline_is_stable(&design.widths) {
        return SampledFunction::from_fn(grid, radius, |x| Complex64::new(box_spline(&design.widths, x[0]), 0.0));
    }
    let values = (0..grid.n).map(|k| Complex64::new(design.transform(grid.freq(k)), 0.0)).collect();
    let spectrum = Spectrum { grid, values, support_radius: (radius + grid.spacing()).min(grid.half_width) };
    let mut g = inverse_fourier(&spectrum)?;
    for v in g.values.iter_mut() {
        v.im = 0.0;
    }
    Ok(g)
}

/// f(x − s), with s rounded to a whole number of grid cells.
pub fn shift(f: &SampledFunction, s: f64) -> Result<SampledFunction> {
    let g = f.grid;
    let cells = (s / g.spacing()).round() as i64;
    let support = f.support_radius + (cells as f64 * g.spacing()).abs();
    if support > g.half_width {
        return Err(coarse(format!("shifted support {support} leaves the box")));
    }
    let n = g.n as i64;
    let zero = Complex64::new(0.0, 0.0);
    let mut values = vec![zero; g.len()];
    for flat in 0..g.len() {
        let idx = g.unflatten(flat);
        let src = idx[0] as i64 - cells;
        let v = if (0..n).contains(&src) {
            let mut sidx = idx;
            sidx[0] = src as usize;
            f.values[g.flatten(&sidx[..g.dim])]
        } else {
            zero
        };
        values[flat] = v;
    }
    Ok(SampledFunction { grid: g, values, support_radius: support })
}

fn even_part(f: &SampledFunction) -> SampledFunction {
    let n = f.grid.n;
    let zero = Complex64::new(0.0, 0.0);
    let values = (0..n)
        .map(|j| {
            let mirror = if j == 0 { zero } else { f.values[n - j] };
            0.5 * (f.values[j] + mirror)
        })
        .collect();
    SampledFunction { values, ..f.clone() }
}

/// g(x) = (g₁(x − s) + g₁(−x − s))/2; tries 0, s, −s, 2s, −2s until g ≠ 0.
pub fn symmetrize_and_shift(g1: &SampledFunction, s: f64) -> Result<SampledFunction> {
    if g1.grid.dim != 1 {
        return Err(PwmError::Invalid("symmetrization acts on functions on ℝ".into()));
    }
    for m in [0.0, 1.0, -1.0, 2.0, -2.0] {
        if m != 0.0 && s == 0.0 {
            break;
        }
        let shifted = match shift(g1, m * s) {
            Ok(f) => f,
            Err(_) => continue,
        };
        let g = even_part(&shifted);
        if g.norm_sq().sqrt() >= ANNIHILATION_TOL {
            return Ok(g);
        }
    }
    Err(PwmError::AnnihilatedSymmetrization)
}

#[derive(Debug, Clone)]
pub struct ConstructOptions {
    pub k_max: usize,
    /// Points of the 1-D profile grid.
    pub profile_points: usize,
    /// Points per axis of the n-D output grid.
    pub output_points: usize,
}

impl Default for ConstructOptions {
    fn default() -> Self {
        ConstructOptions { k_max: 64, profile_points: 4096, output_points: 128 }
    }
}

#[derive(Debug, Clone)]
pub struct RadialConstruction {
    pub design: SincProductDesign,
    pub profile: SampledFunction,
    pub function: SampledFunction,
    /// |f̂| on the output frequency grid against θ with the design's constant.
    pub certificate: EnvelopeCertificate,
}

#[derive(Debug, Clone, Serialize)]
pub struct DesignReport {
    pub widths: Vec<f64>,
    pub k: usize,
    pub beta: f64,
    pub fitted_c: f64,
    pub max_residual: f64,
    pub support: f64,
    pub support_budget: f64,
}

impl DesignReport {
    pub fn new(d: &SincProductDesign, budget: f64) -> Self {
        DesignReport {
            widths: d.widths.clone(),
            k: d.k(),
            beta: d.beta,
            fitted_c: d.fitted_c,
            max_residual: d.certificate.max_residual,
            support: d.total_support(),
            support_budget: budget,
        }
    }
}

/// Radial n-D certificate: (‖ξ‖, log|f̂(ξ)|) pairs sorted by radius.
pub fn radial_log_modulus(f: &SampledFunction) -> Result<(Vec<f64>, Vec<f64>)> {
    let spectrum = fourier(f)?;
    let g = spectrum.grid;
    let mut pairs: Vec<(f64, f64)> = (0..g.len())
        .map(|i| {
            let p = g.freq_point(i);
            (crate::grid::norm(&p[..g.dim]), spectrum.values[i].norm().ln())
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    Ok(pairs.into_iter().unzip())
}

/// Builds a non-zero radial f ∈ C_c(ℝⁿ) with |f̂(y)| ≤ C e^{−θ(‖y‖)}.
pub fn construct_radial(
    theta: &ThetaEnvelope,
    dim: usize,
    support_budget: f64,
    opts: &ConstructOptions,
) -> Result<RadialConstruction> {
    let design = design_widths(theta, &DesignOptions::new(support_budget, opts.k_max))?;
    let g1 = realize_time_domain(&design, Grid::new(1, opts.profile_points, support_budget)?)?;
    let profile = symmetrize_and_shift(&g1, 0.0)?;
    let out = Grid::new(dim, opts.output_points, support_budget)?;
    let function = radialize(&profile, out)?;
    let (r, l) = radial_log_modulus(&function)?;
    // Round-off floor of the transform relative to its peak.
    let floor = (f64::EPSILON * 64.0 * function.max_abs() * out.half_width.powi(dim as i32)).ln();
    let l: Vec<f64> = l.into_iter().map(|v| if v < floor { f64::NEG_INFINITY } else { v }).collect();
    let certificate = verify_envelope_with_constant(&r, &l, theta, design.fitted_c.ln() + 1e-9);
    Ok(RadialConstruction { design, profile, function, certificate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::euclid::fourier;

    fn grid() -> Grid {
        Grid::new(1, 4096, 4.0).unwrap()
    }

    #[test]
    fn single_box() {
        let g = realize_time_domain(&SincProductDesign::from_widths(vec![2.0]), grid()).unwrap();
        for j in 0..g.grid.n {
            let x = g.grid.coord(j);
            let expect = if x.abs() < 1.0 { 0.5 } else if x.abs() == 1.0 { 0.25 } else { 0.0 };
            assert!((g.values[j].re - expect).abs() < 1e-15, "x={x}");
        }
    }

    #[test]
    fn hat_function() {
        let g = realize_time_domain(&SincProductDesign::from_widths(vec![2.0, 2.0]), grid()).unwrap();
        for j in 0..g.grid.n {
            let x = g.grid.coord(j);
            let expect = (0.5 * (1.0 - x.abs() / 2.0)).max(0.0);
            assert!((g.values[j].re - expect).abs() < 1e-14, "x={x}");
        }
    }

    #[test]
    fn transform_equals_product() {
        let d = SincProductDesign::from_widths(vec![1.3, 0.7, 0.45]);
        let g = realize_time_domain(&d, grid()).unwrap();
        let s = fourier(&g).unwrap();
        for k in 0..g.grid.n {
            let y = g.grid.freq(k);
            if y.abs() <= 200.0 {
                assert!((s.values[k].re - d.transform(y)).abs() < 1e-6, "y={y}");
            }
        }
    }

    #[test]
    fn large_designs_use_the_spectral_route() {
        let widths: Vec<f64> = (0..12).map(|k| 0.6 * 0.8f64.powi(k)).collect();
        let d = SincProductDesign::from_widths(widths);
        assert!(!spline_is_stable(&d.widths));
        let g = realize_time_domain(&d, grid()).unwrap();
        let s = fourier(&g).unwrap();
        let err = (0..g.grid.n).map(|k| (s.values[k].re - d.transform(g.grid.freq(k))).abs()).fold(0.0, f64::max);
        assert!(err < 1e-6, "{err}");
        let mass: f64 = g.values.iter().map(|v| v.re).sum::<f64>() * g.grid.spacing();
        assert!((mass - 1.0).abs() < 1e-10);
    }

    #[test]
    fn rejects_small_boxes() {
        assert!(realize_time_domain(&SincProductDesign::from_widths(vec![5.0]), grid()).is_err());
    }

    #[test]
    fn even_input_unchanged() {
        let g = realize_time_domain(&SincProductDesign::from_widths(vec![1.0, 0.5, 0.5]), grid()).unwrap();
        let s = symmetrize_and_shift(&g, 0.0).unwrap();
        assert!(s.max_diff(&g) < 1e-15);
    }

    #[test]
    fn output_is_even_and_shift_keeps_modulus() {
        let g = grid();
        let f = SampledFunction::from_fn(g, 1.0, |x| Complex64::new(x[0] + 0.3 * x[0] * x[0] + 0.1, 0.0)).unwrap();
        let s = symmetrize_and_shift(&f, 0.5).unwrap();
        for j in 1..g.n {
            assert_eq!(s.values[j], s.values[g.n - j]);
        }
        let boxed = realize_time_domain(&SincProductDesign::from_widths(vec![1.0]), g).unwrap();
        let moved = shift(&boxed, 0.75).unwrap();
        let (a, b) = (fourier(&boxed).unwrap(), fourier(&moved).unwrap());
        for k in 0..g.n {
            assert!((a.values[k].norm() - b.values[k].norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn odd_input_needs_a_shift() {
        let g = grid();
        let odd = SampledFunction::from_fn(g, 1.0, |x| Complex64::new(x[0], 0.0)).unwrap();
        assert!(matches!(symmetrize_and_shift(&odd, 0.0), Err(PwmError::AnnihilatedSymmetrization)));
        let s = symmetrize_and_shift(&odd, 0.5).unwrap();
        assert!(s.norm_sq() > 0.0);
    }

    #[test]
    fn zero_envelope_radial() {
        let opts = ConstructOptions { output_points: 64, ..Default::default() };
        let c = construct_radial(&ThetaEnvelope::zero(), 2, 4.0, &opts).unwrap();
        assert_eq!(c.design.widths, vec![4.0]);
        assert!(c.certificate.passes(), "{}", c.certificate.max_residual);
        assert!(c.function.max_abs() > 0.0);
    }

    #[test]
    fn linear_envelope_refused() {
        let err = construct_radial(&ThetaEnvelope::linear(), 2, 4.0, &ConstructOptions::default()).unwrap_err();
        assert!(matches!(err, PwmError::Core(pwm_core::CoreError::DivergentLogIntegral)));
    }
}
