use num_complex::Complex64;
use proptest::prelude::*;
use pwm::motion::MotionGroupFunction;
use pwm::schrodinger::*;
use pwm::{Grid, SampledFunction};
use pwm_core::ThetaEnvelope;

fn bump(r2: f64) -> f64 {
    if r2 < 1.0 {
        (1.0 - 1.0 / (1.0 - r2)).exp()
    } else {
        0.0
    }
}

fn bump_rn(dim: usize, n: usize, half_width: f64) -> SampledFunction {
    let g = Grid::new(dim, n, half_width).unwrap();
    SampledFunction::from_fn(g, 1.0, |x| Complex64::new(bump(x[..dim].iter().map(|v| v * v).sum()), 0.0)).unwrap()
}

fn gaussian_mode_function(coeffs: &[(i64, Complex64)]) -> MotionGroupFunction {
    let g = Grid::new(2, 128, 16.0).unwrap();
    MotionGroupFunction::from_fn(g, 16, 16.0, |x, beta| {
        let w = (-(x[0] * x[0] + x[1] * x[1]) / 2.0).exp();
        coeffs.iter().map(|&(m, c)| c * w * Complex64::from_polar(1.0, m as f64 * beta) * (1.0 + 0.3 * x[0] * m as f64)).sum()
    })
    .unwrap()
}

#[test]
fn quadratic_phase_identity_on_a_bump() {
    // Spacing 1/160 resolves the bump's band (≈405 at the dispersion level); the boxes hold 1 + 2t·405.
    for (t0, log_n) in [(0.25, 16), (1.0, 18), (4.0, 20)] {
        let n = 1usize << log_n;
        let f = bump_rn(1, n, n as f64 / 320.0);
        let rep = quadratic_phase_identity(&f, t0).unwrap();
        assert!(rep.max_discrepancy < 1e-6, "t0={t0}: {}", rep.max_discrepancy);
        assert!(rep.passes);
    }
}

#[test]
fn gaussian_2d_group_property_and_reversibility() {
    let g = Grid::new(2, 128, 16.0).unwrap();
    let f = SampledFunction::from_fn(g, 16.0, |x| {
        Complex64::new((-(x[0] * x[0] + 2.0 * x[1] * x[1]) / 2.0).exp(), 0.2 * x[0] * (-(x[0] * x[0] + x[1] * x[1])).exp())
    })
    .unwrap();
    let a = free_propagate(&f, 0.2).unwrap().state;
    let ab = free_propagate(&a, 0.15).unwrap().state;
    let direct = free_propagate(&f, 0.35).unwrap().state;
    assert!(ab.max_diff(&direct) < 1e-10);
    let back = free_propagate(&direct, -0.35).unwrap().state;
    assert!(back.max_diff(&f) < 1e-10);
    assert!((direct.norm_sq() - f.norm_sq()).abs() < 1e-10 * f.norm_sq());
}

#[test]
fn rn_experiment_verdicts() {
    let observe = |dim: usize| Grid::new(dim, if dim == 1 { 512 } else { 128 }, 40.0).unwrap();
    let tlog = ThetaEnvelope::power_log(1.0, 1.0, -1.0);
    for dim in [1, 2] {
        let f = bump_rn(dim, 64, 2.0);
        for theta in [ThetaEnvelope::linear(), tlog.clone()] {
            let rep = uniqueness_experiment_rn(&f, 1.0, &theta, observe(dim)).unwrap();
            assert_eq!(rep.theta_verdict, "Divergent");
            assert!(matches!(rep.verdict, ExperimentVerdict::EnvelopeViolated { .. }), "{dim} {}: {:?}", theta.name, rep.verdict);
        }
        let rep = uniqueness_experiment_rn(&f, 1.0, &ThetaEnvelope::zero(), observe(dim)).unwrap();
        assert_eq!(rep.verdict, ExperimentVerdict::EnvelopeHolds);
        assert!(rep.fitted_c > 0.0);
        let zero = SampledFunction::zeros(f.grid, 1.0);
        let rep = uniqueness_experiment_rn(&zero, 1.0, &ThetaEnvelope::linear(), observe(dim)).unwrap();
        assert_eq!(rep.verdict, ExperimentVerdict::ConsistentZero);
    }
}

#[test]
fn motion_propagation_is_unitary_and_mode_diagonal() {
    let f = gaussian_mode_function(&[(1, Complex64::new(1.0, 0.0)), (-2, Complex64::new(0.0, 0.5))]);
    let t = 0.3;
    let u = motion_propagate(&f, t).unwrap().state;
    assert!((u.norm_sq() - f.norm_sq()).abs() < 1e-10 * f.norm_sq());
    let back = motion_propagate(&u, -t).unwrap().state;
    let err = back.values.iter().zip(&f.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    assert!(err < 1e-10, "reversibility {err}");
    let peak = u.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    for m in u.mode_range() {
        let got = u.mode(m).unwrap();
        if m == 1 || m == -2 {
            // Casimir action: the mode evolves freely with the extra phase e^{−itm²}.
            let coeff = SampledFunction { grid: f.grid, values: f.mode(m).unwrap().to_vec(), support_radius: 16.0 };
            let free = free_propagate(&coeff, t).unwrap().state;
            let phase = Complex64::from_polar(1.0, -t * (m * m) as f64);
            let err = got.iter().zip(&free.values).map(|(a, b)| (a - b * phase).norm()).fold(0.0, f64::max);
            assert!(err < 1e-10, "mode {m}: {err}");
        } else {
            let leak = got.iter().map(|v| v.norm()).fold(0.0, f64::max);
            assert!(leak < 1e-12 * peak, "leak into mode {m}: {leak}");
        }
    }
}

#[test]
fn laplacian_split_plane_wave_and_order() {
    let (xi, m) = ([1.3, -0.7], 3.0);
    let wave = move |x: [f64; 2], beta: f64| Complex64::from_polar(1.0, xi[0] * x[0] + xi[1] * x[1] + m * beta);
    let pts = [([0.2, -0.4], 0.7), ([1.0, 0.5], 2.3), ([-0.6, 0.1], 4.1)];
    let lambda = -(xi[0] * xi[0] + xi[1] * xi[1] + m * m);
    let rep = laplacian_split_check(&wave, &pts, 1e-3);
    for ((l, r), p) in rep.lhs.iter().zip(&rep.rhs).zip(&pts) {
        let exact = wave(p.0, p.1) * lambda;
        assert!((l - exact).norm() < 1e-4 && (r - exact).norm() < 1e-4);
    }
    let res: Vec<f64> = [0.04, 0.02, 0.01].iter().map(|&h| laplacian_split_check(&wave, &pts, h).max_residual).collect();
    for w in res.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order >= 1.8, "order {order} from {res:?}");
    }
}

#[test]
fn mn_experiment_verdicts() {
    let g = Grid::new(2, 64, 2.0).unwrap();
    let f = MotionGroupFunction::from_fn(g, 8, 1.0, |x, beta| {
        let b = bump(x[0] * x[0] + x[1] * x[1]);
        Complex64::from_polar(b, beta) + Complex64::from_polar(b * x[0], -2.0 * beta)
    })
    .unwrap();
    let observe = Grid::new(2, 96, 40.0).unwrap();
    let rep = uniqueness_experiment_mn(&f, 1.0, &ThetaEnvelope::linear(), observe).unwrap();
    assert!(matches!(rep.verdict, ExperimentVerdict::EnvelopeViolated { .. }), "{:?}", rep.verdict);
    assert!(rep.mode_bound_holds);
    let live = rep.modes.iter().filter(|(_, r)| r.verdict != ExperimentVerdict::ConsistentZero).count();
    assert_eq!(live, 2);
    let rep = uniqueness_experiment_mn(&f, 1.0, &ThetaEnvelope::sqrt(), observe).unwrap();
    assert_ne!(rep.verdict, ExperimentVerdict::Contradiction);
    assert!(rep.modes.iter().all(|(_, r)| r.fitted_c.is_finite()));
    let zero = MotionGroupFunction::from_fn(g, 8, 1.0, |_, _| Complex64::new(0.0, 0.0)).unwrap();
    let rep = uniqueness_experiment_mn(&zero, 1.0, &ThetaEnvelope::linear(), observe).unwrap();
    assert_eq!(rep.verdict, ExperimentVerdict::ConsistentZero);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn free_evolution_is_unitary(c in proptest::collection::vec((-3.0f64..3.0, 0.5f64..1.5, -1.0f64..1.0), 1..4), t in -0.5f64..0.5) {
        let g = Grid::new(1, 2048, 48.0).unwrap();
        let f = SampledFunction::from_fn(g, 48.0, |x| {
            c.iter().map(|&(mu, w, a)| Complex64::new(a, 1.0 - a.abs()) * (-(x[0] - mu).powi(2) / (2.0 * w * w)).exp()).sum()
        }).unwrap();
        let u = free_propagate(&f, t).unwrap().state;
        prop_assert!((u.norm_sq() - f.norm_sq()).abs() <= 1e-10 * f.norm_sq());
        let back = free_propagate(&u, -t).unwrap().state;
        prop_assert!(back.max_diff(&f) < 1e-10);
    }
}
