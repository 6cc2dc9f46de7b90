//! Numerical core for Paley–Wiener type uncertainty experiments on ℝⁿ and
//! on the Euclidean motion group M(2).
//!
//! Everything here is pure computation over borrowed data and `alloc`
//! collections; grids, FFTs, file formats and the command line live in the
//! `pwm` crate.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod certificate;
pub mod design;
pub mod envelopes;
pub mod error;
pub mod group;
pub mod halfplane;
pub mod quadrature;
pub mod special;

pub use certificate::{verify_envelope, verify_envelope_with_constant, EnvelopeCertificate, FitRule};
pub use design::{design_widths, DesignOptions, SincProductDesign};
pub use envelopes::{
    log_integral_1d, log_integral_radial, ClassifierOptions, LogIntegralVerdict, Profile, TailClass,
    ThetaEnvelope, Verdict,
};
pub use error::CoreError;
pub use group::{matrix_coefficient, matrix_coefficient_oracle, MotionElement, RepresentationPoint};
pub use halfplane::{
    estimate_exponential_type, log_majorant_check, poisson_integral, sinc_product_boundary, BoundaryLogData, MajorantReport,
    TailModel, TypeEstimate,
};

pub use num_complex::Complex64;
