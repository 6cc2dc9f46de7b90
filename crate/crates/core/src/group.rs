//! The motion group M(2) = ℝ² ⋊ SO(2) and matrix coefficients of its
//! principal-series representations.
//!
//! T_r acts on L²(S¹) by (T_r(x, β)ψ)(α) = e^{i⟨k_α⁻¹ξ, x⟩} ψ(α + β) with
//! ξ = (r, 0). In the Fourier basis e_m(α) = e^{imα} the coefficients are
//!
//! ⟨T_r(x, β)e_m, e_{m'}⟩ = e^{imβ} · i^{m−m'} · e^{−i(m−m')·arg x} · J_{m−m'}(r‖x‖).

use core::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::CoreError;
use crate::special::bessel_j;

/// Largest |m| accepted by representation routines.
pub const BAND_CAP: i64 = 2048;

/// Group element (x, k_β).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionElement {
    pub x: [f64; 2],
    /// Rotation angle in [0, 2π).
    pub angle: f64,
}

fn normalize_angle(a: f64) -> f64 {
    let r = a - TAU * libm::floor(a / TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

fn rotate(angle: f64, v: [f64; 2]) -> [f64; 2] {
    let (s, c) = libm::sincos(angle);
    [c * v[0] - s * v[1], s * v[0] + c * v[1]]
}

impl MotionElement {
    pub fn new(x: [f64; 2], angle: f64) -> Self {
        MotionElement { x, angle: normalize_angle(angle) }
    }

    pub fn identity() -> Self {
        MotionElement { x: [0.0, 0.0], angle: 0.0 }
    }

    /// (x₁, k₁)(x₂, k₂) = (x₁ + k₁x₂, k₁k₂)
    pub fn multiply(&self, other: &MotionElement) -> MotionElement {
        let r = rotate(self.angle, other.x);
        MotionElement::new([self.x[0] + r[0], self.x[1] + r[1]], self.angle + other.angle)
    }

    /// (x, k)⁻¹ = (−k⁻¹x, k⁻¹)
    pub fn inverse(&self) -> MotionElement {
        let r = rotate(-self.angle, self.x);
        MotionElement::new([-r[0], -r[1]], -self.angle)
    }

    /// Action on a point of the plane.
    pub fn act(&self, p: [f64; 2]) -> [f64; 2] {
        let r = rotate(self.angle, p);
        [self.x[0] + r[0], self.x[1] + r[1]]
    }
}

/// Representation label. For M(2) the stabilizer is trivial, so only r remains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepresentationPoint {
    pub r: f64,
}

impl RepresentationPoint {
    pub fn new(r: f64) -> Result<Self, CoreError> {
        if r > 0.0 && r.is_finite() {
            Ok(RepresentationPoint { r })
        } else {
            Err(CoreError::InvalidParameter { name: "r", reason: "must be positive and finite" })
        }
    }
}

fn check_band(m: i64) -> Result<(), CoreError> {
    if m.abs() > BAND_CAP {
        Err(CoreError::BandCapExceeded { requested: m, cap: BAND_CAP })
    } else {
        Ok(())
    }
}

/// Trapezoid node count that resolves e^{iz cos α} e^{inα} to rounding.
pub fn circle_nodes(z_abs: f64, n: i64) -> usize {
    let q = 2 * (libm::ceil(z_abs) as usize + n.unsigned_abs() as usize + 40);
    q.max(64)
}

/// ⟨T_r(g)e_m, e_{m'}⟩ for complex r by trapezoidal quadrature over the circle.
pub fn matrix_coefficient_complex(r: Complex64, m: i64, m_prime: i64, g: &MotionElement) -> Result<Complex64, CoreError> {
    check_band(m)?;
    check_band(m_prime)?;
    let rho = libm::hypot(g.x[0], g.x[1]);
    let growth = r.im.abs() * rho;
    if growth > 700.0 {
        return Err(CoreError::OverflowGuard { exponent: growth });
    }
    let q = circle_nodes(r.norm() * rho, m - m_prime);
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..q {
        let alpha = TAU * j as f64 / q as f64;
        let (s, c) = libm::sincos(alpha);
        // ⟨k_α⁻¹ξ, x⟩ = r (x₁ cos α − x₂ sin α)
        let phase = r * (g.x[0] * c - g.x[1] * s);
        let angular = (m as f64) * (alpha + g.angle) - (m_prime as f64) * alpha;
        acc += (Complex64::i() * phase).exp() * Complex64::from_polar(1.0, angular);
    }
    Ok(acc / q as f64)
}

/// ⟨T_r(g)e_m, e_{m'}⟩ by quadrature.
pub fn matrix_coefficient(rep: RepresentationPoint, m: i64, m_prime: i64, g: &MotionElement) -> Result<Complex64, CoreError> {
    matrix_coefficient_complex(Complex64::new(rep.r, 0.0), m, m_prime, g)
}

/// Bessel closed form of the same coefficient.
pub fn matrix_coefficient_oracle(rep: RepresentationPoint, m: i64, m_prime: i64, g: &MotionElement) -> Result<Complex64, CoreError> {
    check_band(m)?;
    check_band(m_prime)?;
    let n = m - m_prime;
    let rho = libm::hypot(g.x[0], g.x[1]);
    let phi = libm::atan2(g.x[1], g.x[0]);
    let j = bessel_j(n as i32, rep.r * rho);
    let i_pow = Complex64::from_polar(1.0, 0.5 * PI * (n.rem_euclid(4)) as f64);
    Ok(Complex64::from_polar(1.0, m as f64 * g.angle) * i_pow * Complex64::from_polar(1.0, -(n as f64) * phi) * j)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_inverse() {
        let g = MotionElement::new([0.3, -1.2], 2.0);
        assert_eq!(g.multiply(&MotionElement::identity()), g);
        let e = g.multiply(&g.inverse());
        assert!(e.x[0].abs() < 1e-14 && e.x[1].abs() < 1e-14);
        assert!(e.angle < 1e-14 || (TAU - e.angle) < 1e-14);
    }

    #[test]
    fn angle_is_normalized() {
        let g = MotionElement::new([0.0, 0.0], -0.5);
        assert!((g.angle - (TAU - 0.5)).abs() < 1e-15);
        assert!(MotionElement::new([0.0, 0.0], 7.0 * TAU).angle < 1e-12);
    }

    #[test]
    fn identity_operator_at_origin() {
        let rep = RepresentationPoint::new(3.0).unwrap();
        for m in -3..=3 {
            for mp in -3..=3 {
                let v = matrix_coefficient(rep, m, mp, &MotionElement::identity()).unwrap();
                let expect = if m == mp { 1.0 } else { 0.0 };
                assert!((v - Complex64::new(expect, 0.0)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn rotation_acts_diagonally() {
        let rep = RepresentationPoint::new(1.7).unwrap();
        let g = MotionElement::new([0.0, 0.0], 0.9);
        for m in -4..=4 {
            let v = matrix_coefficient(rep, m, m, &g).unwrap();
            assert!((v - Complex64::from_polar(1.0, 0.9 * m as f64)).norm() < 1e-14);
            let off = matrix_coefficient(rep, m, m + 1, &g).unwrap();
            assert!(off.norm() < 1e-14);
        }
    }

    #[test]
    fn j0_spot_value() {
        let rep = RepresentationPoint::new(1.0).unwrap();
        let g = MotionElement::new([0.6, 0.8], 0.0);
        let v = matrix_coefficient(rep, 0, 0, &g).unwrap();
        assert!((v.re - 0.765_197_686_6).abs() < 1e-10);
        assert!(v.im.abs() < 1e-14);
    }

    #[test]
    fn band_cap_and_overflow() {
        let rep = RepresentationPoint::new(1.0).unwrap();
        let g = MotionElement::identity();
        assert!(matches!(matrix_coefficient(rep, BAND_CAP + 1, 0, &g), Err(CoreError::BandCapExceeded { .. })));
        let far = MotionElement::new([10.0, 0.0], 0.0);
        assert!(matches!(
            matrix_coefficient_complex(Complex64::new(0.0, 100.0), 0, 0, &far),
            Err(CoreError::OverflowGuard { .. })
        ));
        assert!(RepresentationPoint::new(0.0).is_err());
    }
}
