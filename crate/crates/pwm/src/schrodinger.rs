//! Free Schrödinger evolution u_t = iΔu on ℝⁿ and e^{itΔ_G} on M(2) by angular
//! modes, with the uniqueness experiments built on them.
//!
//! Two independent routes: the spectral multiplier e^{−it‖ξ‖²} on the FFT grid, and
//! direct quadrature of the fundamental solution
//! u(x,t) = (4πit)^{−n/2} e^{i‖x‖²/4t} ĝ(x/2t), g = e^{i‖y‖²/4t} f.

use std::f64::consts::PI;

use num_complex::Complex64;
use pwm_core::certificate::FitRule;
use pwm_core::envelopes::{log_integral_radial, DEFAULT_T_MAX};
use pwm_core::{verify_envelope, ThetaEnvelope, Verdict};
use serde::Serialize;

use crate::error::{coarse, PwmError, Result};
use crate::euclid::{fourier, inverse_fourier};
use crate::grid::{norm, Grid, SampledFunction, Spectrum};
use crate::motion::MotionGroupFunction;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Relative level defining the effective band and spatial extent for padding.
pub const DISPERSION_LEVEL: f64 = 1e-10;

/// Functions with every sample below this are treated as zero.
const NULL_LEVEL: f64 = 1e-300;

/// Angular modes below this fraction of the strongest mode are round-off.
pub const MODE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct EvolvedState {
    pub t: f64,
    pub state: SampledFunction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotionEvolvedState {
    pub t: f64,
    pub state: MotionGroupFunction,
}

fn check_padding(f_radius: f64, band: f64, grid: &Grid, t: f64) -> Result<()> {
    let need = f_radius + 2.0 * t.abs() * band;
    if need > grid.half_width {
        return Err(coarse(format!(
            "dispersion needs half width ≥ {need:.3} (extent {f_radius:.3} + 2|t|·{band:.3}), box has {}",
            grid.half_width
        )));
    }
    Ok(())
}

fn spectrum_peak(spectrum: &Spectrum) -> f64 {
    spectrum.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

fn check_resolved(spectrum: &Spectrum) -> Result<()> {
    let g = spectrum.grid;
    let peak = spectrum_peak(spectrum);
    let edge = 0.9 * g.nyquist();
    let worst = (0..spectrum.values.len())
        .filter(|&i| g.freq_point(i)[..g.dim].iter().any(|v| v.abs() >= edge))
        .map(|i| spectrum.values[i].norm())
        .fold(0.0, f64::max);
    if worst > DISPERSION_LEVEL * peak {
        return Err(coarse(format!("spectrum not resolved: {worst:e} of {peak:e} near the Nyquist edge")));
    }
    Ok(())
}

fn spectral_step(spectrum: &Spectrum, factor: Complex64, t: f64) -> Spectrum {
    let g = spectrum.grid;
    let values = spectrum
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let xi = g.freq_point(i);
            let k2: f64 = xi[..g.dim].iter().map(|a| a * a).sum();
            v * factor * Complex64::from_polar(1.0, -t * k2)
        })
        .collect();
    Spectrum { grid: g, values, support_radius: g.half_width }
}

/// Spectral route: u(t) = F⁻¹[e^{−it‖ξ‖²} f̂].
///
/// The box must hold the dispersed wave: L ≥ extent + 2|t|·band, both measured
/// at [`DISPERSION_LEVEL`].
pub fn free_propagate(f: &SampledFunction, t: f64) -> Result<EvolvedState> {
    if t == 0.0 {
        return Ok(EvolvedState { t, state: f.clone() });
    }
    let spectrum = fourier(f)?;
    check_resolved(&spectrum)?;
    check_padding(f.effective_radius(DISPERSION_LEVEL), spectrum.band_radius(DISPERSION_LEVEL), &f.grid, t)?;
    let state = inverse_fourier(&spectral_step(&spectrum, Complex64::new(1.0, 0.0), t))?;
    Ok(EvolvedState { t, state })
}

/// Index range [lo, hi) per axis of the non-zero samples.
fn bounding_box(f: &SampledFunction) -> Option<[(usize, usize); 3]> {
    let g = f.grid;
    let mut b = [(usize::MAX, 0usize); 3];
    let mut any = false;
    for (flat, v) in f.values.iter().enumerate() {
        if v.norm() > 0.0 {
            any = true;
            let idx = g.unflatten(flat);
            for a in 0..g.dim {
                b[a].0 = b[a].0.min(idx[a]);
                b[a].1 = b[a].1.max(idx[a] + 1);
            }
        }
    }
    any.then_some(b)
}

/// Σ_j v_j e^{−i s x_k y_j} for every output node x_k, by phase recurrence.
fn axis_transform(src: &[(f64, Complex64)], out: &Grid, s: f64) -> Vec<Complex64> {
    const RESYNC: usize = 512;
    let h = out.spacing();
    let mut acc = vec![ZERO; out.n];
    for &(y, v) in src {
        let step = Complex64::from_polar(1.0, -s * h * y);
        let mut k = 0;
        while k < out.n {
            let mut ph = v * Complex64::from_polar(1.0, -s * out.coord(k) * y);
            let end = (k + RESYNC).min(out.n);
            for a in acc[k..end].iter_mut() {
                *a += ph;
                ph *= step;
            }
            k = end;
        }
    }
    acc
}

/// ĝ(x/2t) on every node of `out`, for g = e^{i‖y‖²/4t} f, by direct quadrature.
pub fn chirped_transform(f: &SampledFunction, t: f64, out: Grid) -> Result<Vec<Complex64>> {
    if t == 0.0 {
        return Err(PwmError::Invalid("the chirp route needs t ≠ 0".into()));
    }
    let g = f.grid;
    if out.dim != g.dim {
        return Err(PwmError::Invalid("output grid dimension differs".into()));
    }
    // The integrand phase ‖y‖²/4t − x·y/2t must be resolved by the source grid.
    let rate = (out.half_width * (g.dim as f64).sqrt() + f.support_radius) / (2.0 * t.abs());
    if rate > g.nyquist() {
        return Err(coarse(format!("source spacing {} too coarse for phase rate {rate:.3}", g.spacing())));
    }
    let bb = match bounding_box(f) {
        Some(b) => b,
        None => return Ok(vec![ZERO; out.len()]),
    };
    let chirp = |p: &[f64]| Complex64::from_polar(1.0, p.iter().map(|v| v * v).sum::<f64>() / (4.0 * t));
    let s = 1.0 / (2.0 * t);
    let cell = g.cell();
    let values = match g.dim {
        1 => {
            let src: Vec<(f64, Complex64)> =
                (bb[0].0..bb[0].1).map(|j| { let y = g.coord(j); (y, f.values[j] * chirp(&[y]) * cell) }).collect();
            axis_transform(&src, &out, s)
        }
        2 => {
            // Last axis first: A[j0][k1], then the first axis.
            let rows: Vec<(f64, Vec<Complex64>)> = (bb[0].0..bb[0].1)
                .map(|j0| {
                    let y0 = g.coord(j0);
                    let src: Vec<(f64, Complex64)> = (bb[1].0..bb[1].1)
                        .map(|j1| {
                            let y1 = g.coord(j1);
                            (y1, f.values[g.flatten(&[j0, j1])] * chirp(&[y0, y1]) * cell)
                        })
                        .collect();
                    (y0, axis_transform(&src, &out, s))
                })
                .collect();
            let mut vals = vec![ZERO; out.len()];
            for k1 in 0..out.n {
                let src: Vec<(f64, Complex64)> = rows.iter().map(|(y0, r)| (*y0, r[k1])).collect();
                for (k0, v) in axis_transform(&src, &out, s).into_iter().enumerate() {
                    vals[out.flatten(&[k0, k1])] = v;
                }
            }
            vals
        }
        _ => {
            let mut vals = vec![ZERO; out.len()];
            // Collapse the last axis, then the 2-D problem per output k2.
            let mut planes: Vec<((f64, f64), Vec<Complex64>)> = Vec::new();
            for j0 in bb[0].0..bb[0].1 {
                for j1 in bb[1].0..bb[1].1 {
                    let (y0, y1) = (g.coord(j0), g.coord(j1));
                    let src: Vec<(f64, Complex64)> = (bb[2].0..bb[2].1)
                        .map(|j2| {
                            let y2 = g.coord(j2);
                            (y2, f.values[g.flatten(&[j0, j1, j2])] * chirp(&[y0, y1, y2]) * cell)
                        })
                        .collect();
                    planes.push(((y0, y1), axis_transform(&src, &out, s)));
                }
            }
            let n1 = bb[1].1 - bb[1].0;
            for k2 in 0..out.n {
                let rows: Vec<(f64, Vec<Complex64>)> = (0..bb[0].1 - bb[0].0)
                    .map(|i0| {
                        let src: Vec<(f64, Complex64)> =
                            (0..n1).map(|i1| { let p = &planes[i0 * n1 + i1]; (p.0 .1, p.1[k2]) }).collect();
                        (planes[i0 * n1].0 .0, axis_transform(&src, &out, s))
                    })
                    .collect();
                for k1 in 0..out.n {
                    let src: Vec<(f64, Complex64)> = rows.iter().map(|(y0, r)| (*y0, r[k1])).collect();
                    for (k0, v) in axis_transform(&src, &out, s).into_iter().enumerate() {
                        vals[out.flatten(&[k0, k1, k2])] = v;
                    }
                }
            }
            vals
        }
    };
    Ok(values)
}

/// (4πit)^{−n/2} with the principal branch.
fn kernel_prefactor(t: f64, dim: usize) -> Complex64 {
    let n = dim as f64;
    Complex64::from_polar((4.0 * PI * t.abs()).powf(-n / 2.0), -t.signum() * n * PI / 4.0)
}

/// Quadrature route on an arbitrary output grid; no periodic wrap-around.
pub fn free_propagate_quadrature(f: &SampledFunction, t: f64, out: Grid) -> Result<EvolvedState> {
    let ghat = chirped_transform(f, t, out)?;
    let pre = kernel_prefactor(t, f.grid.dim);
    let values = ghat
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let x = out.point(i);
            let r2: f64 = x[..out.dim].iter().map(|a| a * a).sum();
            v * pre * Complex64::from_polar(1.0, r2 / (4.0 * t))
        })
        .collect();
    let support = out.half_width * (out.dim as f64).sqrt();
    Ok(EvolvedState { t, state: SampledFunction { grid: out, values, support_radius: support } })
}

#[derive(Debug, Clone, Serialize)]
pub struct PhaseIdentityReport {
    pub t0: f64,
    /// max_x | |u(x,t₀)| − (4π|t₀|)^{−n/2}|ĝ(x/2t₀)| |.
    pub max_discrepancy: f64,
    pub max_modulus: f64,
    pub passes: bool,
}

/// Compares the spectral |u(·,t₀)| with the modulus of the transformed chirp.
pub fn quadratic_phase_identity(f: &SampledFunction, t0: f64) -> Result<PhaseIdentityReport> {
    if t0 == 0.0 {
        return Err(PwmError::Invalid("t0 must be non-zero".into()));
    }
    let u = free_propagate(f, t0)?.state;
    let ghat = chirped_transform(f, t0, f.grid)?;
    let scale = (4.0 * PI * t0.abs()).powf(-(f.grid.dim as f64) / 2.0);
    let max_discrepancy = u.values.iter().zip(&ghat).map(|(a, b)| (a.norm() - scale * b.norm()).abs()).fold(0.0, f64::max);
    Ok(PhaseIdentityReport { t0, max_discrepancy, max_modulus: u.max_abs(), passes: max_discrepancy < 1e-6 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExperimentVerdict {
    /// The input vanishes; every envelope holds trivially.
    ConsistentZero,
    /// The envelope holds with the fitted constant.
    EnvelopeHolds,
    /// Non-zero data exceeding C e^{−θ} beyond `radius`.
    EnvelopeViolated { radius: f64 },
    /// Non-zero data obeying a Divergent envelope; would contradict uniqueness.
    Contradiction,
}

#[derive(Debug, Clone, Serialize)]
pub struct UniquenessReport {
    pub theta: String,
    pub theta_verdict: String,
    pub verdict: ExperimentVerdict,
    pub fitted_c: f64,
    pub max_residual: f64,
    pub violation_radius: Option<f64>,
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Convergent => "Convergent",
        Verdict::Divergent => "Divergent",
        Verdict::Inconclusive => "Inconclusive",
    }
}

fn classify(theta: &ThetaEnvelope, dim: usize) -> Result<Verdict> {
    Ok(log_integral_radial(theta, dim, DEFAULT_T_MAX, 4)?.verdict)
}

/// Envelope test of sampled |u| against θ(‖x‖) inside the inscribed ball.
fn envelope_report(values: &[Complex64], grid: &Grid, theta: &ThetaEnvelope, verdict: Verdict) -> UniquenessReport {
    let theta_verdict = verdict_name(verdict).to_string();
    let peak = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if peak <= NULL_LEVEL {
        return UniquenessReport {
            theta: theta.name.clone(),
            theta_verdict,
            verdict: ExperimentVerdict::ConsistentZero,
            fitted_c: 0.0,
            max_residual: f64::NEG_INFINITY,
            violation_radius: None,
        };
    }
    let mut pairs: Vec<(f64, f64)> = (0..grid.len())
        .filter_map(|i| {
            let r = norm(&grid.point(i)[..grid.dim]);
            (r <= grid.half_width).then(|| (r, values[i].norm().ln()))
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let (r, l): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let cert = verify_envelope(&r, &l, theta, FitRule::Fraction(0.5));
    let verdict = match (cert.violation_at, verdict) {
        (Some(radius), _) => ExperimentVerdict::EnvelopeViolated { radius },
        (None, Verdict::Divergent) => ExperimentVerdict::Contradiction,
        (None, _) => ExperimentVerdict::EnvelopeHolds,
    };
    UniquenessReport {
        theta: theta.name.clone(),
        theta_verdict,
        verdict,
        fitted_c: cert.fitted_c(),
        max_residual: cert.max_residual,
        violation_radius: cert.violation_at,
    }
}

/// Evolves f to t₀ on the observation grid and tests |u(x,t₀)| ≤ C e^{−θ(‖x‖)}.
pub fn uniqueness_experiment_rn(f: &SampledFunction, t0: f64, theta: &ThetaEnvelope, observe: Grid) -> Result<UniquenessReport> {
    let verdict = classify(theta, f.grid.dim)?;
    if f.max_abs() <= NULL_LEVEL {
        return Ok(envelope_report(&vec![ZERO; observe.len()], &observe, theta, verdict));
    }
    let u = free_propagate_quadrature(f, t0, observe)?.state;
    Ok(envelope_report(&u.values, &observe, theta, verdict))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeSpectrum {
    pub grid: Grid,
    pub support_radius: f64,
    /// Mode labels −M/2 … M/2 − 1.
    pub modes: Vec<i64>,
    pub spectra: Vec<Spectrum>,
    /// Casimir eigenvalues λ_m = m².
    pub casimir: Vec<f64>,
}

pub fn peter_weyl_decompose(f: &MotionGroupFunction) -> Result<ModeSpectrum> {
    let modes: Vec<i64> = f.mode_range().collect();
    let spectra = modes
        .iter()
        .map(|&m| {
            let coeff = SampledFunction {
                grid: f.grid,
                values: f.mode(m).unwrap_or(&[]).to_vec(),
                support_radius: f.support_radius,
            };
            fourier(&coeff)
        })
        .collect::<Result<Vec<_>>>()?;
    let casimir = modes.iter().map(|&m| (m * m) as f64).collect();
    Ok(ModeSpectrum { grid: f.grid, support_radius: f.support_radius, modes, spectra, casimir })
}

pub fn resynthesize(ms: &ModeSpectrum) -> Result<MotionGroupFunction> {
    let modes = ms.spectra.iter().map(|s| Ok(inverse_fourier(s)?.values)).collect::<Result<Vec<_>>>()?;
    MotionGroupFunction::from_modes(ms.grid, modes, ms.support_radius)
}

/// e^{itΔ_G}f: each mode picks up e^{−itm²} and evolves freely on ℝ².
pub fn motion_propagate(f: &MotionGroupFunction, t: f64) -> Result<MotionEvolvedState> {
    if t == 0.0 {
        return Ok(MotionEvolvedState { t, state: f.clone() });
    }
    let ms = peter_weyl_decompose(f)?;
    let global = ms.spectra.iter().map(spectrum_peak).fold(0.0, f64::max);
    let mut extent = 0.0_f64;
    let mut band = 0.0_f64;
    for (m, spectrum) in ms.modes.iter().zip(&ms.spectra) {
        if spectrum_peak(spectrum) <= MODE_FLOOR * global {
            continue;
        }
        check_resolved(spectrum)?;
        let coeff = SampledFunction { grid: f.grid, values: f.mode(*m).unwrap_or(&[]).to_vec(), support_radius: f.support_radius };
        extent = extent.max(coeff.effective_radius(DISPERSION_LEVEL));
        band = band.max(spectrum.band_radius(DISPERSION_LEVEL));
    }
    check_padding(extent, band, &f.grid, t)?;
    let spectra = ms
        .modes
        .iter()
        .zip(&ms.spectra)
        .map(|(&m, s)| spectral_step(s, Complex64::from_polar(1.0, -t * (m * m) as f64), t))
        .collect();
    let evolved = ModeSpectrum { spectra, support_radius: f.grid.half_width, ..ms };
    Ok(MotionEvolvedState { t, state: resynthesize(&evolved)? })
}

#[derive(Debug, Clone, Serialize)]
pub struct SplitReport {
    pub h: f64,
    /// Σ X_i² f by finite differences along the left-invariant flows.
    pub lhs: Vec<Complex64>,
    /// (Δ_{ℝ²} + ∂²_β) f by coordinate finite differences.
    pub rhs: Vec<Complex64>,
    pub max_residual: f64,
}

/// Compares Σ_i X_i² with Δ_{ℝ²} + ∂²_β at the given points.
///
/// X₁, X₂ flow along (x + sR(β)e_i, β) and X₃ along (x, β + s).
pub fn laplacian_split_check(f: &dyn Fn([f64; 2], f64) -> Complex64, points: &[([f64; 2], f64)], h: f64) -> SplitReport {
    let second = |a: Complex64, c: Complex64, b: Complex64| (a - 2.0 * c + b) / (h * h);
    let mut lhs = Vec::with_capacity(points.len());
    let mut rhs = Vec::with_capacity(points.len());
    for &(x, beta) in points {
        let c = f(x, beta);
        let (sb, cb) = beta.sin_cos();
        let dirs = [[cb, sb], [-sb, cb]];
        let mut l = second(f(x, beta + h), c, f(x, beta - h));
        for d in dirs {
            l += second(f([x[0] + h * d[0], x[1] + h * d[1]], beta), c, f([x[0] - h * d[0], x[1] - h * d[1]], beta));
        }
        let r = second(f([x[0] + h, x[1]], beta), c, f([x[0] - h, x[1]], beta))
            + second(f([x[0], x[1] + h], beta), c, f([x[0], x[1] - h], beta))
            + second(f(x, beta + h), c, f(x, beta - h));
        lhs.push(l);
        rhs.push(r);
    }
    let max_residual = lhs.iter().zip(&rhs).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    SplitReport { h, lhs, rhs, max_residual }
}

#[derive(Debug, Clone, Serialize)]
pub struct MotionUniquenessReport {
    pub verdict: ExperimentVerdict,
    /// |u_m(x,t₀)| ≤ max_β |u(x,β,t₀)| at every observation node.
    pub mode_bound_holds: bool,
    pub modes: Vec<(i64, UniquenessReport)>,
}

/// Mode-wise uniqueness experiment on M(2), aggregated as in the ℝⁿ reduction.
pub fn uniqueness_experiment_mn(
    f: &MotionGroupFunction,
    t0: f64,
    theta: &ThetaEnvelope,
    observe: Grid,
) -> Result<MotionUniquenessReport> {
    let verdict = classify(theta, 2)?;
    let mut per_mode = Vec::new();
    let mut evolved: Vec<(i64, Vec<Complex64>)> = Vec::new();
    let mode_peak = |m: i64| f.mode(m).unwrap_or(&[]).iter().map(|v| v.norm()).fold(0.0, f64::max);
    let global = f.mode_range().map(mode_peak).fold(0.0, f64::max);
    for m in f.mode_range() {
        let coeff = SampledFunction { grid: f.grid, values: f.mode(m).unwrap_or(&[]).to_vec(), support_radius: f.support_radius };
        let values = if coeff.max_abs() <= NULL_LEVEL.max(MODE_FLOOR * global) {
            vec![ZERO; observe.len()]
        } else {
            let phase = Complex64::from_polar(1.0, -t0 * (m * m) as f64);
            free_propagate_quadrature(&coeff, t0, observe)?.state.values.into_iter().map(|v| v * phase).collect()
        };
        per_mode.push((m, envelope_report(&values, &observe, theta, verdict)));
        evolved.push((m, values));
    }
    // Resynthesize on the angle grid and check the averaging bound per node.
    let mut mode_bound_holds = true;
    for i in 0..observe.len() {
        let mut peak = 0.0_f64;
        for q in 0..f.angles {
            let beta = f.angle(q);
            let u: Complex64 = evolved.iter().map(|(m, v)| v[i] * Complex64::from_polar(1.0, *m as f64 * beta)).sum();
            peak = peak.max(u.norm());
        }
        if evolved.iter().any(|(_, v)| v[i].norm() > peak * (1.0 + 1e-12) + 1e-300) {
            mode_bound_holds = false;
        }
    }
    let live: Vec<&UniquenessReport> =
        per_mode.iter().map(|(_, r)| r).filter(|r| r.verdict != ExperimentVerdict::ConsistentZero).collect();
    let verdict = if live.is_empty() {
        ExperimentVerdict::ConsistentZero
    } else if let Some(radius) = live
        .iter()
        .filter_map(|r| match r.verdict {
            ExperimentVerdict::EnvelopeViolated { radius } => Some(radius),
            _ => None,
        })
        .reduce(f64::min)
    {
        ExperimentVerdict::EnvelopeViolated { radius }
    } else if live.iter().any(|r| r.verdict == ExperimentVerdict::Contradiction) {
        ExperimentVerdict::Contradiction
    } else {
        ExperimentVerdict::EnvelopeHolds
    };
    Ok(MotionUniquenessReport { verdict, mode_bound_holds, modes: per_mode })
}
