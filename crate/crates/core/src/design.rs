//! Sinc-product designs: compactly supported functions with prescribed Fourier decay.
//!
//! A design is a list of widths a₁ ≥ … ≥ a_K. Its time-domain realization is the
//! convolution of the normalized indicators a_k⁻¹·1[−a_k/2, a_k/2], supported in
//! [−Σa_k/2, Σa_k/2], with transform Π_k sin(a_k y/2)/(a_k y/2).
//!
//! Widths follow the dyadic schedule a_k ∝ θ(2^{k+1})/2^k. For non-decreasing θ
//! the sum Σa_k is finite exactly when the log-integral converges; the common
//! scale β is then chosen by bisection against the envelope certificate.

use alloc::vec::Vec;

use crate::certificate::{default_frequency_grid, verify_envelope, EnvelopeCertificate, FitRule, LOG_FLOOR};
use crate::envelopes::{log_integral_1d, ThetaEnvelope, Verdict, DEFAULT_T_MAX};
use crate::error::CoreError;
use crate::special::sinc;

#[derive(Debug, Clone, PartialEq)]
pub struct SincProductDesign {
    pub widths: Vec<f64>,
    /// Common scale applied to the raw dyadic schedule.
    pub beta: f64,
    pub fitted_c: f64,
    pub certificate: EnvelopeCertificate,
}

impl SincProductDesign {
    /// Design with explicit widths; the certificate is left empty.
    pub fn from_widths(widths: Vec<f64>) -> Self {
        SincProductDesign {
            widths,
            beta: 1.0,
            fitted_c: 1.0,
            certificate: EnvelopeCertificate {
                y_grid: Vec::new(),
                residuals: Vec::new(),
                max_residual: f64::NEG_INFINITY,
                log_c: 0.0,
                violation_at: None,
            },
        }
    }

    pub fn k(&self) -> usize {
        self.widths.len()
    }

    /// Σa_k, the length of the support interval.
    pub fn total_support(&self) -> f64 {
        self.widths.iter().sum()
    }

    pub fn support_radius(&self) -> f64 {
        0.5 * self.total_support()
    }

    /// ĝ(y) = Π sin(a_k y/2)/(a_k y/2).
    pub fn transform(&self, y: f64) -> f64 {
        self.widths.iter().map(|&a| sinc(0.5 * a * y)).product()
    }

    /// log|ĝ(y)|, floored at [`LOG_FLOOR`] on exact nulls.
    pub fn log_transform(&self, y: f64) -> f64 {
        let mut s = 0.0;
        for &a in &self.widths {
            let v = sinc(0.5 * a * y);
            if v == 0.0 {
                return LOG_FLOOR;
            }
            s += libm::log(v.abs());
        }
        s
    }

    pub fn certify(&self, theta: &ThetaEnvelope, y_grid: &[f64]) -> EnvelopeCertificate {
        let l: Vec<f64> = y_grid.iter().map(|&y| self.log_transform(y)).collect();
        verify_envelope(y_grid, &l, theta, FitRule::LowerDecade)
    }
}

#[derive(Debug, Clone)]
pub struct DesignOptions {
    pub support_budget: f64,
    pub k_max: usize,
    pub y_grid: Vec<f64>,
    pub bisection_steps: usize,
}

impl DesignOptions {
    pub fn new(support_budget: f64, k_max: usize) -> Self {
        DesignOptions { support_budget, k_max, y_grid: default_frequency_grid(), bisection_steps: 40 }
    }
}

fn scaled(raw: &[f64], beta: f64) -> Vec<f64> {
    raw.iter().map(|a| a * beta).collect()
}

fn finish(widths: Vec<f64>, beta: f64, theta: &ThetaEnvelope, grid: &[f64]) -> SincProductDesign {
    let mut d = SincProductDesign::from_widths(widths);
    d.beta = beta;
    d.certificate = d.certify(theta, grid);
    d.fitted_c = d.certificate.fitted_c();
    d
}

/// Chooses widths with Σa_k ≤ `support_budget` whose sinc product obeys θ.
pub fn design_widths(theta: &ThetaEnvelope, opts: &DesignOptions) -> Result<SincProductDesign, CoreError> {
    if !(opts.support_budget > 0.0) || !opts.support_budget.is_finite() {
        return Err(CoreError::InvalidParameter { name: "support_budget", reason: "must be positive and finite" });
    }
    if opts.k_max == 0 {
        return Err(CoreError::InvalidParameter { name: "k_max", reason: "must be at least 1" });
    }
    let verdict = log_integral_1d(theta, DEFAULT_T_MAX, 4)?;
    match verdict.verdict {
        Verdict::Divergent => return Err(CoreError::DivergentLogIntegral),
        Verdict::Inconclusive => return Err(CoreError::InconclusiveLogIntegral),
        Verdict::Convergent => {}
    }
    if !theta.monotone_nondecreasing {
        return Err(CoreError::NotMonotone);
    }
    let grid = &opts.y_grid;

    // raw dyadic schedule, made non-increasing; leading zeros of θ are skipped
    let mut raw: Vec<f64> = Vec::new();
    let mut k = 0i32;
    while raw.len() < opts.k_max && k < 1000 {
        let t = libm::ldexp(1.0, k + 1);
        let a = theta.evaluate(t) / libm::ldexp(1.0, k);
        k += 1;
        if !(a > 0.0) || !a.is_finite() {
            if raw.is_empty() {
                if t > 1e12 {
                    break;
                }
                continue;
            }
            break;
        }
        let a = raw.last().map_or(a, |&p: &f64| a.min(p));
        raw.push(a);
    }
    if raw.is_empty() {
        // θ vanishes: a single box uses the whole budget
        let d = finish(alloc::vec![opts.support_budget], 1.0, theta, grid);
        return if d.certificate.passes() { Ok(d) } else { Err(CoreError::BudgetExhausted { k_max: opts.k_max }) };
    }

    for kk in 1..=raw.len() {
        let head = &raw[..kk];
        let beta_max = opts.support_budget / head.iter().sum::<f64>();
        let top = finish(scaled(head, beta_max), beta_max, theta, grid);
        if !top.certificate.passes() {
            continue;
        }
        let (mut lo, mut hi) = (0.0, beta_max);
        let mut best = top;
        for _ in 0..opts.bisection_steps {
            let mid = 0.5 * (lo + hi);
            let cand = finish(scaled(head, mid), mid, theta, grid);
            if cand.certificate.passes() {
                hi = mid;
                best = cand;
            } else {
                lo = mid;
            }
        }
        return Ok(best);
    }
    Err(CoreError::BudgetExhausted { k_max: opts.k_max })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_envelope_uses_single_box() {
        let d = design_widths(&ThetaEnvelope::zero(), &DesignOptions::new(4.0, 64)).unwrap();
        assert_eq!(d.widths, alloc::vec![4.0]);
        assert!(d.certificate.passes());
        assert!((d.fitted_c - 1.0).abs() < 1e-12);
    }

    #[test]
    fn linear_envelope_is_refused() {
        let r = design_widths(&ThetaEnvelope::linear(), &DesignOptions::new(4.0, 64));
        assert_eq!(r.unwrap_err(), CoreError::DivergentLogIntegral);
    }

    #[test]
    fn sqrt_envelope_is_certified() {
        let d = design_widths(&ThetaEnvelope::sqrt(), &DesignOptions::new(4.0, 64)).unwrap();
        assert!(d.certificate.passes());
        assert!(d.total_support() <= 4.0 + 1e-12);
        assert!(d.widths.windows(2).all(|w| w[1] <= w[0]));
        assert!(d.widths.iter().all(|&a| a > 0.0));
    }

    #[test]
    fn tiny_budget_with_few_factors_is_exhausted() {
        let r = design_widths(&ThetaEnvelope::sqrt(), &DesignOptions::new(4.0, 2));
        assert_eq!(r.unwrap_err(), CoreError::BudgetExhausted { k_max: 2 });
    }

    #[test]
    fn non_monotone_is_rejected() {
        let theta = ThetaEnvelope::custom(
            alloc::sync::Arc::new(|t: f64| if t < 10.0 { libm::sqrt(t) } else { 0.0 }),
            false,
        );
        let r = design_widths(&theta, &DesignOptions::new(4.0, 8));
        assert!(matches!(r, Err(CoreError::NotMonotone) | Err(CoreError::InconclusiveLogIntegral)));
    }
}
