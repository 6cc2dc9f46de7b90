use std::f64::consts::PI;

use num_complex::Complex64;
use pwm_core::halfplane::{graded_grid, kernel_mass, symmetric_grid, truncated_poisson_integral};
use pwm_core::{estimate_exponential_type, log_majorant_check, poisson_integral, BoundaryLogData, TailModel};

fn sinc(z: Complex64) -> Complex64 {
    if z.norm() < 1e-8 {
        Complex64::new(1.0, 0.0)
    } else {
        z.sin() / z
    }
}

/// Boundary data log|Π sinc(c_k t)| on a grid through every zero.
fn boundary(scales: &[f64], half_width: f64) -> BoundaryLogData {
    let c_max = scales.iter().cloned().fold(1.0, f64::max);
    let t = graded_grid(PI / c_max, half_width, 16, 4096, 128);
    let k = scales.len() as f64;
    let offset = -(k * 2f64.ln()) - scales.iter().map(|c| c.ln()).sum::<f64>();
    let tail = TailModel { log_slope: -k, offset };
    BoundaryLogData::sample(
        t,
        |t| {
            let mut s = 0.0;
            for &c in scales {
                let u = c * t;
                let v = if u == 0.0 { 1.0 } else { u.sin() / u };
                // Nodes at multiples of π/c are exact zeros up to rounding.
                let r = (u / PI).round();
                if r != 0.0 && (u - r * PI).abs() < 1e-9 {
                    return f64::NEG_INFINITY;
                }
                s += v.abs().ln();
            }
            s
        },
        Some(tail),
    )
    .unwrap()
}

#[test]
fn sinc_poisson_integral_at_i() {
    let b = boundary(&[1.0], 1000.0);
    let u = poisson_integral(&b, 0.0, 1.0).unwrap();
    // e^{iz} sinc z is its own harmonic majorant: U(i) = log((1 − e^{−2})/2).
    let exact = ((1.0 - (-2.0f64).exp()) / 2.0).ln();
    assert!((u - exact).abs() < 1e-6, "{u} vs {exact}");
}

#[test]
fn majorant_margins_for_admissible_functions() {
    let points: Vec<(f64, f64)> = (0..20).map(|i| (-3.0 + 0.3 * i as f64, 0.3 + 0.15 * i as f64)).collect();
    type Case = (&'static str, Vec<f64>, fn(Complex64) -> Complex64);
    let cases: Vec<Case> = vec![
        ("e^{iz} sinc z", vec![1.0], |z| (Complex64::i() * z).exp() * sinc(z)),
        ("e^{2iz} sinc² z", vec![1.0, 1.0], |z| (Complex64::i() * z * 2.0).exp() * sinc(z) * sinc(z)),
        ("e^{3iz} sinc z sinc 2z", vec![1.0, 2.0], |z| (Complex64::i() * z * 3.0).exp() * sinc(z) * sinc(z * 2.0)),
    ];
    for (name, scales, g) in cases {
        let b = boundary(&scales, 2000.0);
        let rep = log_majorant_check(g, &b, &points, 1e-6).unwrap();
        assert!(rep.holds(), "{name}: {}", rep.min_margin);
    }
    let flat = BoundaryLogData::new(symmetric_grid(0.5, 100), vec![0.0; 201], Some(TailModel { log_slope: 0.0, offset: 0.0 })).unwrap();
    let rep = log_majorant_check(|z| (Complex64::i() * z).exp(), &flat, &points, 1e-6).unwrap();
    assert!(rep.holds());
    for p in &rep.points {
        assert!((p.margin - p.y).abs() < 1e-12);
    }
}

#[test]
fn kernel_mass_is_one() {
    let b = boundary(&[1.0], 100.0);
    for (x, y) in [(0.0, 1.0), (5.0, 0.2), (-30.0, 7.0)] {
        assert!((kernel_mass(&b, x, y).unwrap() - 1.0).abs() < 1e-10);
    }
}

#[test]
fn exponential_type_of_box_transforms() {
    let rs: Vec<f64> = (1..=60).map(|i| 10.0 * i as f64).collect();
    for a in [0.5, 1.0, 2.0] {
        let one = estimate_exponential_type(|z: Complex64| (z * a).sin() * 2.0 / z, &rs).unwrap();
        assert!((one.slope - a).abs() <= 0.01 * a, "a={a}: {}", one.slope);
        let two = estimate_exponential_type(|z: Complex64| ((z * a).sin() * 2.0 / z).powi(2), &rs).unwrap();
        assert!((two.slope - 2.0 * a).abs() <= 0.01 * 2.0 * a);
    }
}

#[test]
fn divergent_boundary_pushes_truncated_integral_down() {
    // log|g(t)| = −|t| has ∫ |t|/(1+t²) = ∞: the truncated integral at i falls like −ln(1+T²)/π.
    let mut last = 0.0;
    for k in [4u32, 8, 12, 16] {
        let t_max = 2f64.powi(k as i32);
        let h = t_max / 4096.0;
        let b = BoundaryLogData::sample(symmetric_grid(h, 4096), |t| -t.abs(), None).unwrap();
        let u = truncated_poisson_integral(&b, 0.0, 1.0).unwrap();
        let exact = -(1.0 + t_max * t_max).ln() / PI;
        assert!((u - exact).abs() < 1e-3 * exact.abs(), "T={t_max}: {u} vs {exact}");
        assert!(u < last);
        last = u;
    }
}
