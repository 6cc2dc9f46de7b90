//! Envelope certificates: does a sampled modulus obey |F(y)| ≤ C e^{-θ(y)}?
//!
//! The constant is fitted on the lower part of the grid and the bound is then
//! checked on every point. A profile whose excess log|F| + θ keeps growing at
//! the top of the grid fails; one whose excess settles below its early maximum
//! passes with that maximum as log C.

use alloc::vec::Vec;

use crate::envelopes::ThetaEnvelope;

/// Floor used in place of log 0.
pub const LOG_FLOOR: f64 = -1e308;

/// Slack on the residual test.
pub const CERTIFICATE_SLACK: f64 = 1e-9;

/// Which samples determine the fitted constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FitRule {
    /// Fit on y ≤ y_max / 10; suited to logarithmically spaced frequency grids.
    LowerDecade,
    /// Fit on y ≤ fraction · y_max; suited to linear spatial grids.
    Fraction(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeCertificate {
    pub y_grid: Vec<f64>,
    /// log|F(y)| + θ(y) − log C per grid point.
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    /// Fitted log C (`LOG_FLOOR` when F vanishes on the fitting range).
    pub log_c: f64,
    /// First grid point with a positive residual.
    pub violation_at: Option<f64>,
}

impl EnvelopeCertificate {
    pub fn passes(&self) -> bool {
        self.max_residual <= CERTIFICATE_SLACK
    }

    pub fn fitted_c(&self) -> f64 {
        if self.log_c <= LOG_FLOOR {
            0.0
        } else {
            libm::exp(self.log_c)
        }
    }
}

/// Logarithmically spaced grid on [0, y_max] starting with y = 0.
pub fn log_grid(y_min: f64, y_max: f64, points: usize) -> Vec<f64> {
    let mut g = Vec::with_capacity(points + 1);
    g.push(0.0);
    let (a, b) = (libm::log(y_min), libm::log(y_max));
    for i in 0..points {
        let s = i as f64 / (points - 1).max(1) as f64;
        g.push(libm::exp(a + s * (b - a)));
    }
    g
}

/// Default certificate grid: y ∈ {0} ∪ [10⁻², 10⁴], 4000 log-spaced points.
pub fn default_frequency_grid() -> Vec<f64> {
    log_grid(1e-2, 1e4, 4000)
}

/// Certifies samples `(y, log|F(y)|)` against θ.
///
/// `log_modulus` may contain −∞ (or anything below [`LOG_FLOOR`]), which is
/// clamped to the floor; isolated nulls pass trivially.
pub fn verify_envelope(
    y_grid: &[f64],
    log_modulus: &[f64],
    theta: &ThetaEnvelope,
    rule: FitRule,
) -> EnvelopeCertificate {
    let y_max = y_grid.iter().cloned().fold(0.0_f64, f64::max);
    let cutoff = match rule {
        FitRule::LowerDecade => y_max / 10.0,
        FitRule::Fraction(f) => y_max * f,
    };
    let excess: Vec<f64> = y_grid.iter().zip(log_modulus).map(|(&y, &l)| excess_at(y, l, theta)).collect();
    let log_c = y_grid
        .iter()
        .zip(&excess)
        .filter(|(y, _)| **y <= cutoff)
        .map(|(_, e)| *e)
        .fold(LOG_FLOOR, f64::max);
    certificate_from_excess(y_grid, &excess, log_c)
}

/// Certificate against a prescribed log C instead of a fitted one.
pub fn verify_envelope_with_constant(
    y_grid: &[f64],
    log_modulus: &[f64],
    theta: &ThetaEnvelope,
    log_c: f64,
) -> EnvelopeCertificate {
    let excess: Vec<f64> = y_grid.iter().zip(log_modulus).map(|(&y, &l)| excess_at(y, l, theta)).collect();
    certificate_from_excess(y_grid, &excess, log_c)
}

fn certificate_from_excess(y_grid: &[f64], excess: &[f64], log_c: f64) -> EnvelopeCertificate {
    let residuals: Vec<f64> = excess
        .iter()
        .map(|&e| {
            if e <= LOG_FLOOR {
                if log_c <= LOG_FLOOR {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            } else if log_c <= LOG_FLOOR {
                f64::INFINITY
            } else {
                e - log_c
            }
        })
        .collect();
    let max_residual = residuals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let violation_at = y_grid
        .iter()
        .zip(&residuals)
        .find(|(_, r)| **r > CERTIFICATE_SLACK)
        .map(|(y, _)| *y);
    EnvelopeCertificate { y_grid: y_grid.to_vec(), residuals, max_residual, log_c, violation_at }
}

fn excess_at(y: f64, l: f64, theta: &ThetaEnvelope) -> f64 {
    let l = if l.is_nan() || l < LOG_FLOOR { LOG_FLOOR } else { l };
    if l <= LOG_FLOOR {
        LOG_FLOOR
    } else {
        l + theta.evaluate(y)
    }
}

/// Checks samples against a prescribed constant: log|F| + θ ≤ log C everywhere.
pub fn holds_with_constant(y_grid: &[f64], log_modulus: &[f64], theta: &ThetaEnvelope, log_c: f64) -> bool {
    y_grid
        .iter()
        .zip(log_modulus)
        .all(|(&y, &l)| l.is_nan() || l <= LOG_FLOOR || l + theta.evaluate(y) <= log_c + CERTIFICATE_SLACK)
}

/// Certifies an analytically evaluable modulus on `y_grid`.
pub fn verify_envelope_fn<F: Fn(f64) -> f64>(
    log_modulus: F,
    y_grid: &[f64],
    theta: &ThetaEnvelope,
    rule: FitRule,
) -> EnvelopeCertificate {
    let l: Vec<f64> = y_grid.iter().map(|&y| log_modulus(y)).collect();
    verify_envelope(y_grid, &l, theta, rule)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::sinc;

    fn log_abs(v: f64) -> f64 {
        if v == 0.0 {
            f64::NEG_INFINITY
        } else {
            libm::log(v.abs())
        }
    }

    #[test]
    fn sinc_against_zero_envelope() {
        let g = default_frequency_grid();
        let c = verify_envelope_fn(|y| log_abs(sinc(y)), &g, &ThetaEnvelope::zero(), FitRule::LowerDecade);
        assert!(c.passes());
        assert!((c.fitted_c() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_beats_sqrt() {
        let g = default_frequency_grid();
        let c = verify_envelope_fn(|y| -0.5 * y * y, &g, &ThetaEnvelope::sqrt(), FitRule::LowerDecade);
        assert!(c.passes());
    }

    #[test]
    fn sinc_fails_linear_envelope() {
        let g = default_frequency_grid();
        let theta = ThetaEnvelope::power_log(0.1, 1.0, 0.0);
        let c = verify_envelope_fn(|y| log_abs(sinc(y)), &g, &theta, FitRule::LowerDecade);
        assert!(!c.passes());
        // residual grows roughly like y/10 − log y
        let top = *c.residuals.last().unwrap();
        assert!(top > 500.0, "{top}");
    }

    #[test]
    fn zero_function_passes_with_zero_constant() {
        let g = log_grid(1e-2, 10.0, 50);
        let c = verify_envelope(&g, &alloc::vec![f64::NEG_INFINITY; g.len()], &ThetaEnvelope::linear(), FitRule::LowerDecade);
        assert!(c.passes());
        assert_eq!(c.fitted_c(), 0.0);
    }

    #[test]
    fn monotone_in_theta() {
        let g = default_frequency_grid();
        let big = ThetaEnvelope::sqrt();
        let small = ThetaEnvelope::power_log(0.5, 0.5, 0.0);
        let lm = |y: f64| -y;
        let c2 = verify_envelope_fn(lm, &g, &big, FitRule::LowerDecade);
        assert!(c2.passes());
        let l: Vec<f64> = g.iter().map(|&y| lm(y)).collect();
        assert!(holds_with_constant(&g, &l, &small, c2.log_c));
    }
}
