use core::fmt;

/// Failure modes of the numerical core.
#[derive(Debug, Clone, PartialEq)]
pub enum CoreError {
    /// An envelope returned θ(t) < 0.
    NegativeEnvelope { t: f64, value: f64 },
    /// An envelope or integrand returned NaN or ±∞.
    NonFiniteSample { t: f64 },
    /// A parameter is outside its admissible range.
    InvalidParameter { name: &'static str, reason: &'static str },
    /// Construction requested for an envelope whose log-integral diverges.
    DivergentLogIntegral,
    /// The classifier could not decide convergence.
    InconclusiveLogIntegral,
    /// The width recipe requires a non-decreasing envelope.
    NotMonotone,
    /// No sinc-product design with at most `k_max` factors passed the certificate.
    BudgetExhausted { k_max: usize },
    /// Boundary data does not carry enough kernel mass.
    InsufficientCoverage { missing_mass: f64 },
    /// The sampled function vanishes identically on the fitting grid.
    DegenerateData,
    /// A representation mode index exceeds the supported band.
    BandCapExceeded { requested: i64, cap: i64 },
    /// Evaluation at this complex spectral parameter would overflow.
    OverflowGuard { exponent: f64 },
    /// A function claimed to be bounded by one on the closed upper half-plane is not.
    NotBoundedByOne { z_re: f64, z_im: f64, modulus: f64 },
    /// Adaptive quadrature did not reach the requested tolerance.
    QuadratureFailed { error_estimate: f64 },
}

impl fmt::Display for CoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoreError::NegativeEnvelope { t, value } => {
                write!(f, "envelope is negative at t = {t}: θ(t) = {value}")
            }
            CoreError::NonFiniteSample { t } => write!(f, "non-finite sample at t = {t}"),
            CoreError::InvalidParameter { name, reason } => {
                write!(f, "invalid parameter `{name}`: {reason}")
            }
            CoreError::DivergentLogIntegral => {
                write!(f, "the log-integral of θ diverges; no compactly supported function exists")
            }
            CoreError::InconclusiveLogIntegral => {
                write!(f, "the log-integral of θ could not be classified")
            }
            CoreError::NotMonotone => write!(f, "envelope is not flagged non-decreasing"),
            CoreError::BudgetExhausted { k_max } => {
                write!(f, "no design with at most {k_max} factors satisfies the envelope")
            }
            CoreError::InsufficientCoverage { missing_mass } => {
                write!(f, "boundary data misses Poisson kernel mass {missing_mass:e}")
            }
            CoreError::DegenerateData => write!(f, "function vanishes identically on the grid"),
            CoreError::BandCapExceeded { requested, cap } => {
                write!(f, "mode index {requested} exceeds band cap {cap}")
            }
            CoreError::OverflowGuard { exponent } => {
                write!(f, "exponential growth e^{exponent} would overflow")
            }
            CoreError::NotBoundedByOne { z_re, z_im, modulus } => {
                write!(f, "|g({z_re} + {z_im}i)| = {modulus} > 1 on the closed upper half-plane")
            }
            CoreError::QuadratureFailed { error_estimate } => {
                write!(f, "adaptive quadrature stalled with error estimate {error_estimate:e}")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for CoreError {}
