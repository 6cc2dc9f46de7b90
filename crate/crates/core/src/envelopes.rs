//! Decay envelopes θ and the log-integral criterion ∫ θ(t)/(1+t²) dt.
//!
//! Divergence can never be proven at finite precision. The classifier works on
//! dyadic windows `[2^k, 2^{k+1}]`: the trailing windows all staying above a
//! floor means `Divergent`; a geometric tail bound below tolerance means
//! `Convergent`. Envelopes that carry a [`TailClass`] are decided from their
//! asymptotic form instead, with the tail beyond `t_max` integrated in
//! logarithmic coordinates.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::cell::Cell;
use core::fmt;

use crate::error::CoreError;
use crate::quadrature::{integrate, integrate_to_infinity};
use crate::special::sphere_area;

/// Asymptotic shape θ(t) ≍ t^power / log(e+t)^log_power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailClass {
    pub power: f64,
    pub log_power: f64,
}

impl TailClass {
    /// Whether ∫^∞ t^{power-2} / log^{log_power} t dt converges.
    pub fn is_convergent(&self) -> bool {
        self.power < 1.0 || (self.power == 1.0 && self.log_power > 1.0)
    }
}

/// Evaluation rule of an envelope.
#[derive(Clone)]
pub enum Profile {
    /// coef · t^power / ln(e + t)^log_power
    PowerLog { coef: f64, power: f64, log_power: f64 },
    /// Piecewise-linear table, extended past the last knot with the last slope.
    Table { t: Vec<f64>, theta: Vec<f64> },
    /// Arbitrary user function.
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::PowerLog { coef, power, log_power } => f
                .debug_struct("PowerLog")
                .field("coef", coef)
                .field("power", power)
                .field("log_power", log_power)
                .finish(),
            Profile::Table { t, .. } => f.debug_struct("Table").field("knots", &t.len()).finish(),
            Profile::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// A non-negative, locally integrable decay profile on [0, ∞).
#[derive(Debug, Clone)]
pub struct ThetaEnvelope {
    pub profile: Profile,
    pub monotone_nondecreasing: bool,
    pub tail_class: Option<TailClass>,
    pub name: alloc::string::String,
}

impl ThetaEnvelope {
    /// θ(t) = coef · t^power / ln(e+t)^log_power, tagged with its tail class.
    pub fn power_log(coef: f64, power: f64, log_power: f64) -> Self {
        // d/dt ln θ = power/t − log_power/((e+t)ln(e+t)) ≥ 0 iff
        // power · (e+t)ln(e+t)/t ≥ log_power; that ratio has minimum ≈ 3.1466 on t > 0.
        let monotone = coef == 0.0
            || (coef > 0.0 && power >= 0.0 && (log_power <= 0.0 || power * 3.146 >= log_power));
        let tail_class = if coef == 0.0 {
            Some(TailClass { power: 0.0, log_power: 0.0 })
        } else {
            Some(TailClass { power, log_power })
        };
        ThetaEnvelope {
            profile: Profile::PowerLog { coef, power, log_power },
            monotone_nondecreasing: monotone,
            tail_class,
            name: alloc::format!("{coef}*t^{power}/log(e+t)^{log_power}"),
        }
    }

    pub fn zero() -> Self {
        let mut e = Self::power_log(0.0, 0.0, 0.0);
        e.name = "zero".into();
        e
    }

    pub fn linear() -> Self {
        let mut e = Self::power_log(1.0, 1.0, 0.0);
        e.name = "linear".into();
        e
    }

    pub fn sqrt() -> Self {
        let mut e = Self::power_log(1.0, 0.5, 0.0);
        e.name = "sqrt".into();
        e
    }

    pub fn pow(a: f64) -> Self {
        let mut e = Self::power_log(1.0, a, 0.0);
        e.name = alloc::format!("pow:{a}");
        e
    }

    /// t / ln²(e+t): the borderline convergent case.
    pub fn log2_damped() -> Self {
        let mut e = Self::power_log(1.0, 1.0, 2.0);
        e.name = "log2damped".into();
        e
    }

    /// Piecewise-linear envelope through `(t, θ)` knots (sorted by t).
    pub fn table(t: Vec<f64>, theta: Vec<f64>) -> Result<Self, CoreError> {
        if t.len() < 2 || t.len() != theta.len() {
            return Err(CoreError::InvalidParameter {
                name: "table",
                reason: "need at least two (t, θ) rows of equal length",
            });
        }
        if t.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(CoreError::InvalidParameter { name: "table", reason: "t must be strictly increasing" });
        }
        if let Some((&tt, &v)) = t.iter().zip(&theta).find(|(_, v)| !(**v >= 0.0)) {
            return Err(CoreError::NegativeEnvelope { t: tt, value: v });
        }
        let monotone = theta.windows(2).all(|w| w[1] >= w[0]);
        // Past the last knot the table is linear, so its class is known exactly.
        let n = t.len();
        let slope = (theta[n - 1] - theta[n - 2]) / (t[n - 1] - t[n - 2]);
        let power = if slope > 0.0 { 1.0 } else { 0.0 };
        Ok(ThetaEnvelope {
            profile: Profile::Table { t, theta },
            monotone_nondecreasing: monotone,
            tail_class: Some(TailClass { power, log_power: 0.0 }),
            name: "table".into(),
        })
    }

    pub fn custom(f: Arc<dyn Fn(f64) -> f64 + Send + Sync>, monotone: bool) -> Self {
        ThetaEnvelope { profile: Profile::Custom(f), monotone_nondecreasing: monotone, tail_class: None, name: "custom".into() }
    }

    /// Built-in envelope names of the CLI mini-language (`table:` is handled by callers).
    pub fn builtin(key: &str) -> Option<Self> {
        match key {
            "zero" => Some(Self::zero()),
            "linear" => Some(Self::linear()),
            "sqrt" => Some(Self::sqrt()),
            "log2damped" => Some(Self::log2_damped()),
            s => {
                let a: f64 = s.strip_prefix("pow:")?.parse().ok()?;
                if a.is_finite() {
                    Some(Self::pow(a))
                } else {
                    None
                }
            }
        }
    }

    pub fn evaluate(&self, t: f64) -> f64 {
        match &self.profile {
            Profile::PowerLog { coef, power, log_power } => {
                if *coef == 0.0 {
                    return 0.0;
                }
                let t = t.max(0.0);
                let mut v = coef * libm::pow(t, *power);
                if *log_power != 0.0 {
                    v /= libm::pow(libm::log(core::f64::consts::E + t), *log_power);
                }
                v
            }
            Profile::Table { t: ts, theta } => {
                let n = ts.len();
                if t <= ts[0] {
                    return theta[0];
                }
                let i = match ts.binary_search_by(|x| x.partial_cmp(&t).unwrap_or(core::cmp::Ordering::Less)) {
                    Ok(i) => return theta[i],
                    Err(i) => i,
                };
                let (i0, i1) = if i >= n { (n - 2, n - 1) } else { (i - 1, i) };
                let slope = (theta[i1] - theta[i0]) / (ts[i1] - ts[i0]);
                theta[i0] + slope * (t - ts[i0])
            }
            Profile::Custom(f) => f(t),
        }
    }

    /// ln θ(e^u) for the tail model anchored at `anchor_t`, stable for large u.
    fn tail_log_theta(&self, class: &TailClass, anchor_t: f64, anchor_log: f64, u: f64) -> f64 {
        let lnln = |u: f64| {
            // ln(ln(e + e^u)) without overflow
            let l = if u > 1.0 { u + libm::log1p(libm::exp(1.0 - u)) } else { libm::log(core::f64::consts::E + libm::exp(u)) };
            libm::log(l)
        };
        let ua = libm::log(anchor_t);
        anchor_log + class.power * (u - ua) - class.log_power * (lnln(u) - lnln(ua))
    }

    /// Checks monotonicity on deterministic pseudo-random pairs in [0, t_max].
    pub fn spot_check_monotone(&self, t_max: f64, pairs: usize) -> bool {
        let mut state: u64 = 0x9E37_79B9_7F4A_7C15;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        (0..pairs).all(|_| {
            let a = t_max * next() * next();
            let b = t_max * next() * next();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            self.evaluate(lo) <= self.evaluate(hi) * (1.0 + 1e-12) + 1e-300
        })
    }
}

/// Outcome of the log-integral classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Convergent,
    Divergent,
    Inconclusive,
}

/// Partial integral over one window, with the running total.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowIntegral {
    pub lo: f64,
    pub hi: f64,
    pub value: f64,
    pub cumulative: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogIntegralVerdict {
    pub verdict: Verdict,
    /// Finite estimate when convergent, +∞ when divergent, partial sum otherwise.
    pub value: f64,
    /// Tail estimate beyond t_max that was added to `value`.
    pub tail: f64,
    pub evidence: Vec<WindowIntegral>,
}

/// Thresholds of the finite-precision dichotomy.
#[derive(Debug, Clone, Copy)]
pub struct ClassifierOptions {
    pub abs_tol: f64,
    pub divergence_floor: f64,
    pub convergence_tol: f64,
}

impl Default for ClassifierOptions {
    fn default() -> Self {
        ClassifierOptions { abs_tol: 1e-9, divergence_floor: 1e-3, convergence_tol: 1e-6 }
    }
}

/// Default upper integration limit, 2²⁰.
pub const DEFAULT_T_MAX: f64 = 1_048_576.0;

struct Probe<'a> {
    theta: &'a ThetaEnvelope,
    failure: Cell<Option<CoreError>>,
}

impl Probe<'_> {
    fn eval(&self, t: f64) -> f64 {
        let v = self.theta.evaluate(t);
        if !v.is_finite() {
            self.record(CoreError::NonFiniteSample { t });
            0.0
        } else if v < 0.0 {
            self.record(CoreError::NegativeEnvelope { t, value: v });
            0.0
        } else {
            v
        }
    }

    fn record(&self, e: CoreError) {
        let prev = self.failure.take();
        self.failure.set(Some(prev.unwrap_or(e)));
    }

    fn check(&self) -> Result<(), CoreError> {
        match self.failure.take() {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }
}

#[derive(Clone, Copy)]
enum Weight {
    /// 1/(1+t²) on [0, ∞)
    Line,
    /// 1/t² on [1, ∞)
    Radial,
}

impl Weight {
    fn apply(self, t: f64, theta: f64) -> f64 {
        match self {
            Weight::Line => theta / (1.0 + t * t),
            Weight::Radial => theta / (t * t),
        }
    }

    /// ln of the weight times the Jacobian e^u at t = e^u.
    fn log_weight_jacobian(self, u: f64) -> f64 {
        match self {
            // e^u / (1 + e^{2u}) = e^{-u} / (1 + e^{-2u})
            Weight::Line => -u - libm::log1p(libm::exp(-2.0 * u)),
            Weight::Radial => -u,
        }
    }
}

fn classify(
    theta: &ThetaEnvelope,
    weight: Weight,
    t_max: f64,
    windows: usize,
    opts: &ClassifierOptions,
) -> Result<LogIntegralVerdict, CoreError> {
    if !(t_max >= 1.0) || !t_max.is_finite() {
        return Err(CoreError::InvalidParameter { name: "t_max", reason: "must be finite and at least 1" });
    }
    if windows < 4 {
        return Err(CoreError::InvalidParameter { name: "windows", reason: "at least 4 windows are required" });
    }
    let probe = Probe { theta, failure: Cell::new(None) };
    let mut bounds: Vec<(f64, f64)> = Vec::new();
    if let Weight::Line = weight {
        bounds.push((0.0, 1.0_f64.min(t_max)));
    }
    let mut lo = 1.0;
    while lo < t_max {
        let hi = (2.0 * lo).min(t_max);
        bounds.push((lo, hi));
        lo = hi;
    }

    let mut evidence = Vec::with_capacity(bounds.len());
    let mut cumulative = 0.0;
    for &(a, b) in &bounds {
        let r = integrate(|t| weight.apply(t, probe.eval(t)), a, b, opts.abs_tol, 2000)?;
        probe.check()?;
        // the integrand is non-negative
        let value = r.value.max(0.0);
        cumulative += value;
        evidence.push(WindowIntegral { lo: a, hi: b, value, cumulative });
    }

    let dyadic: Vec<f64> = evidence
        .iter()
        .filter(|w| w.lo >= 1.0 && (w.hi / w.lo - 2.0).abs() < 1e-12)
        .map(|w| w.value)
        .collect();
    let partial = cumulative;

    if let Some(class) = theta.tail_class {
        let anchor = probe.eval(t_max);
        probe.check()?;
        if anchor == 0.0 && class.power == 0.0 && class.log_power == 0.0 {
            return Ok(LogIntegralVerdict { verdict: Verdict::Convergent, value: partial, tail: 0.0, evidence });
        }
        if !class.is_convergent() {
            return Ok(LogIntegralVerdict { verdict: Verdict::Divergent, value: f64::INFINITY, tail: f64::INFINITY, evidence });
        }
        if anchor == 0.0 {
            return Ok(LogIntegralVerdict { verdict: Verdict::Convergent, value: partial, tail: 0.0, evidence });
        }
        let anchor_log = libm::log(anchor);
        let u0 = libm::log(t_max);
        let tail = integrate_to_infinity(
            |u| {
                let l = theta.tail_log_theta(&class, t_max, anchor_log, u) + weight.log_weight_jacobian(u);
                if l < -745.0 {
                    0.0
                } else {
                    libm::exp(l)
                }
            },
            u0,
            opts.abs_tol,
            4000,
        )?;
        return Ok(LogIntegralVerdict { verdict: Verdict::Convergent, value: partial + tail.value, tail: tail.value, evidence });
    }

    if dyadic.len() < windows {
        return Ok(LogIntegralVerdict { verdict: Verdict::Inconclusive, value: partial, tail: f64::NAN, evidence });
    }
    let last = &dyadic[dyadic.len() - windows..];
    if last.iter().all(|&w| w > opts.divergence_floor) {
        return Ok(LogIntegralVerdict { verdict: Verdict::Divergent, value: f64::INFINITY, tail: f64::INFINITY, evidence });
    }
    let w_last = *last.last().unwrap_or(&0.0);
    let tail = if w_last == 0.0 {
        0.0
    } else {
        let ratio = last
            .windows(2)
            .map(|p| if p[0] > 0.0 { p[1] / p[0] } else { f64::INFINITY })
            .fold(0.0_f64, f64::max);
        if ratio < 1.0 {
            w_last * ratio / (1.0 - ratio)
        } else {
            f64::INFINITY
        }
    };
    if tail < opts.convergence_tol {
        Ok(LogIntegralVerdict { verdict: Verdict::Convergent, value: partial + tail, tail, evidence })
    } else {
        Ok(LogIntegralVerdict { verdict: Verdict::Inconclusive, value: partial, tail, evidence })
    }
}

/// Classifies ∫₀^∞ θ(t)/(1+t²) dt.
pub fn log_integral_1d(theta: &ThetaEnvelope, t_max: f64, windows: usize) -> Result<LogIntegralVerdict, CoreError> {
    classify(theta, Weight::Line, t_max, windows, &ClassifierOptions::default())
}

/// Classifies ∫_{‖y‖≥1} θ(‖y‖)/‖y‖^{n+1} dy = |Sⁿ⁻¹| ∫₁^∞ θ(r)/r² dr.
pub fn log_integral_radial(
    theta: &ThetaEnvelope,
    dim: usize,
    t_max: f64,
    windows: usize,
) -> Result<LogIntegralVerdict, CoreError> {
    if dim == 0 {
        return Err(CoreError::InvalidParameter { name: "dim", reason: "dimension must be at least 1" });
    }
    let mut v = classify(theta, Weight::Radial, t_max, windows, &ClassifierOptions::default())?;
    let s = sphere_area(dim);
    v.value *= s;
    v.tail *= s;
    for w in &mut v.evidence {
        w.value *= s;
        w.cumulative *= s;
    }
    Ok(v)
}

/// Same as [`log_integral_1d`] with explicit thresholds.
pub fn log_integral_1d_with(
    theta: &ThetaEnvelope,
    t_max: f64,
    windows: usize,
    opts: &ClassifierOptions,
) -> Result<LogIntegralVerdict, CoreError> {
    classify(theta, Weight::Line, t_max, windows, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn zero_is_convergent_with_value_zero() {
        let v = log_integral_1d(&ThetaEnvelope::zero(), DEFAULT_T_MAX, 4).unwrap();
        assert_eq!(v.verdict, Verdict::Convergent);
        assert_eq!(v.value, 0.0);
    }

    #[test]
    fn linear_diverges() {
        let v = log_integral_1d(&ThetaEnvelope::linear(), DEFAULT_T_MAX, 4).unwrap();
        assert_eq!(v.verdict, Verdict::Divergent);
        assert!(v.value.is_infinite());
    }

    #[test]
    fn sqrt_matches_closed_form() {
        let v = log_integral_1d(&ThetaEnvelope::sqrt(), DEFAULT_T_MAX, 4).unwrap();
        assert_eq!(v.verdict, Verdict::Convergent);
        assert!((v.value - PI / 2f64.sqrt()).abs() < 1e-6, "{}", v.value);
    }

    #[test]
    fn radial_examples() {
        let z = log_integral_radial(&ThetaEnvelope::zero(), 3, DEFAULT_T_MAX, 4).unwrap();
        assert_eq!((z.verdict, z.value), (Verdict::Convergent, 0.0));
        let l = log_integral_radial(&ThetaEnvelope::linear(), 2, DEFAULT_T_MAX, 4).unwrap();
        assert_eq!(l.verdict, Verdict::Divergent);
        let s = log_integral_radial(&ThetaEnvelope::sqrt(), 2, DEFAULT_T_MAX, 4).unwrap();
        assert_eq!(s.verdict, Verdict::Convergent);
        assert!((s.value - 4.0 * PI).abs() < 1e-6, "{}", s.value);
    }

    #[test]
    fn negative_and_nonfinite_envelopes_are_rejected() {
        let neg = ThetaEnvelope::custom(Arc::new(|t| 1.0 - t), false);
        assert!(matches!(log_integral_1d(&neg, 16.0, 4), Err(CoreError::NegativeEnvelope { .. })));
        let nan = ThetaEnvelope::custom(Arc::new(|t| if t > 3.0 { f64::NAN } else { t }), false);
        assert!(matches!(log_integral_1d(&nan, 16.0, 4), Err(CoreError::NonFiniteSample { .. })));
    }

    #[test]
    fn preconditions() {
        assert!(log_integral_1d(&ThetaEnvelope::zero(), 0.5, 4).is_err());
        assert!(log_integral_1d(&ThetaEnvelope::zero(), 16.0, 3).is_err());
    }

    #[test]
    fn untagged_envelopes_use_the_window_tests() {
        let lin = ThetaEnvelope::custom(Arc::new(|t| t), true);
        assert_eq!(log_integral_1d(&lin, DEFAULT_T_MAX, 4).unwrap().verdict, Verdict::Divergent);
        let fast = ThetaEnvelope::custom(Arc::new(|t| libm::pow(t, 0.2)), true);
        let v = log_integral_1d(&fast, DEFAULT_T_MAX, 4).unwrap();
        // t^0.2 has slowly decaying windows: honest middle ground
        assert_eq!(v.verdict, Verdict::Inconclusive);
        let bounded = ThetaEnvelope::custom(Arc::new(|t| if t < 3.0 { t } else { 3.0 }), true);
        let b = log_integral_1d(&bounded, DEFAULT_T_MAX, 4).unwrap();
        assert_ne!(b.verdict, Verdict::Divergent);
    }

    #[test]
    fn table_interpolates_and_extrapolates_last_slope() {
        let e = ThetaEnvelope::table(alloc::vec![0.0, 1.0, 3.0], alloc::vec![0.0, 2.0, 3.0]).unwrap();
        assert_eq!(e.evaluate(0.5), 1.0);
        assert_eq!(e.evaluate(2.0), 2.5);
        assert_eq!(e.evaluate(5.0), 4.0);
        assert!(e.monotone_nondecreasing);
        assert!(ThetaEnvelope::table(alloc::vec![0.0, 1.0], alloc::vec![0.0, -1.0]).is_err());
        assert_eq!(log_integral_1d(&e, DEFAULT_T_MAX, 4).unwrap().verdict, Verdict::Divergent);
        let flat = ThetaEnvelope::table(alloc::vec![0.0, 1.0, 10.0], alloc::vec![0.0, 3.0, 3.0]).unwrap();
        let v = log_integral_1d(&flat, DEFAULT_T_MAX, 4).unwrap();
        assert_eq!(v.verdict, Verdict::Convergent);
        // ∫₀¹ 3t/(1+t²) + ∫₁^∞ 3/(1+t²) = 1.5 ln 2 + 3π/4
        assert!((v.value - (1.5 * core::f64::consts::LN_2 + 0.75 * core::f64::consts::PI)).abs() < 1e-6);
    }

    #[test]
    fn builtin_names() {
        for s in ["zero", "linear", "sqrt", "log2damped", "pow:0.75"] {
            assert!(ThetaEnvelope::builtin(s).is_some(), "{s}");
        }
        assert!(ThetaEnvelope::builtin("pow:x").is_none());
        assert!(ThetaEnvelope::builtin("cubic").is_none());
    }

    #[test]
    fn evidence_is_monotone() {
        for e in [ThetaEnvelope::sqrt(), ThetaEnvelope::linear(), ThetaEnvelope::log2_damped()] {
            let v = log_integral_1d(&e, DEFAULT_T_MAX, 4).unwrap();
            assert!(v.evidence.windows(2).all(|w| w[1].cumulative >= w[0].cumulative));
        }
    }
}
