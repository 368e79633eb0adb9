use std::f64::consts::PI;

use loggas::lemmacheck::*;

#[test]
fn kernel_values_at_reference_points() {
    for d in [0.3, 1.0, 2.5] {
        let k = KernelA::new(d).unwrap();
        let knot = kernel_a(d, &k).unwrap();
        assert!((knot - (1.0 / d).ln()).abs() < 1e-14);
        let origin = kernel_a(0.0, &k).unwrap();
        assert!((origin - ((1.0 / d).ln() + 13.0 / 12.0)).abs() < 1e-14);
        assert!((kernel_a(2.0 * d, &k).unwrap() - (1.0 / (2.0 * d)).ln()).abs() < 1e-14);
    }
    assert!(kernel_a(-0.1, &KernelA::new(1.0).unwrap()).is_err());
    assert!(KernelA::new(0.0).is_err());
}

#[test]
fn knot_smoothness() {
    for d in [0.5, 1.0, 2.0] {
        let k = KernelA::new(d).unwrap();
        let jumps = k.knot_jumps();
        for m in 0..4 {
            assert!(jumps[m].abs() < 1e-12, "d={d} order {m}: {}", jumps[m]);
        }
        // the fourth derivative of the quartic does not match the logarithm
        assert!((jumps[4] - 24.0 / d.powi(4)).abs() < 1e-10);
        for (m, j) in k.knot_jumps_fd(1e-4).iter().enumerate() {
            assert!(j.abs() < 1e-6, "order {m}: {j}");
        }
    }
}

#[test]
fn fourier_forms_agree_and_match_direct_transform() {
    for x in [1.0, 2.0, 7.5, 30.0, 49.9, 50.1, 120.0] {
        let a = k_times_fourier_a(x);
        let b = k_times_fourier_a_by_parts(x);
        assert!((a - b).abs() < 1e-12 * a.abs().max(1e-6), "x={x}: {a} {b}");
    }
    // k int_0^inf a(l) cos(kl) dl = -int_0^inf a'(l) sin(kl) dl, split at the knot
    let d = 1.5;
    let ka = KernelA::new(d).unwrap();
    let gl = gauss_quad::legendre::GaussLegendre::new(80).unwrap();
    let a0p = |x: f64| 3.0 * x.powi(3) - 8.0 * x * x + 6.0 * x;
    for k in [0.05, 0.7, 2.0, 5.0] {
        let inner = gl.integrate(0.0, d, |l| a0p(l / d) / d * (k * l).sin());
        let si = gl.integrate(0.0, k * d, |t| if t == 0.0 { 1.0 } else { t.sin() / t });
        let direct = inner + (0.5 * PI - si);
        let closed = k * fourier_a(k, &ka).unwrap();
        assert!((direct - closed).abs() < 1e-12, "k={k}: {direct} vs {closed}");
    }
}

#[test]
fn fourier_positive_with_quartic_tail() {
    let ka = KernelA::new(1.0).unwrap();
    let mut prev = f64::INFINITY;
    for i in 0..=600 {
        let k = 1e-3 * 1e6f64.powf(i as f64 / 600.0);
        let a = fourier_a(k, &ka).unwrap();
        assert!(a > 0.0 && a < PI / k, "k={k}");
        let r = k * a;
        assert!(r <= prev * (1.0 + 1e-12), "ratio should decrease, k={k}");
        prev = r;
    }
    for k in [1e2f64, 1e3, 1e4] {
        let t = k.powi(4) * fourier_a(k, &ka).unwrap();
        assert!((t - 16.0).abs() < 30.0 / k, "{t}");
    }
}

#[test]
fn gap_report_is_stable() {
    let ka = KernelA::new(1.0).unwrap();
    let g = fourier_gap(&ka, 1e-3, 1e3, 10_000).unwrap();
    assert!(g.delta1 > 0.0);
    assert!(g.sup_at_grid_edge);
    assert!((g.delta1 * 100.0).round() == (g.delta1_coarse * 100.0).round());
    assert!(g.min_fourier > 0.0);
}

#[test]
fn closed_form_modes_match_quadrature() {
    let c = cross_check((-1.0, -0.01), (0.01, 1.0), 0.0, 30).unwrap();
    assert!(c.max_relative < 1e-8, "{c:?}");
    assert!(c.max_absolute_below_floor < 1e-12, "{c:?}");
    assert!(c.compared > 200);
    // the quarter-prefactor expression is a constant multiple
    for k in 1..6 {
        let (lam, cc, d) = (1.7, 0.0, 1.0);
        let ratio = log_mode_with_quarter_prefactor(lam, cc, d, k) / log_mode(lam, cc, d, k).unwrap();
        assert!((ratio + d / (2.0 * PI)).abs() < 1e-12);
    }
}

#[test]
fn cross_coefficients_decay_and_symmetry() {
    let (r2, r6) = (2f64.sqrt(), 6f64.sqrt());
    let fit = decay_fit((-r6, -r2), (r2, r6), 0.1, 6, 1e-13).unwrap();
    assert!(fit.slope < 0.0 && fit.r_squared > 0.99, "{fit:?}");
    let ab = cross_coeff((-r6, -r2), (r2, r6), 3, 5, 0.1).unwrap();
    let ba = cross_coeff((r2, r6), (-r6, -r2), 5, 3, 0.1).unwrap();
    assert!((ab - ba).abs() < 1e-15);
    assert!(matches!(cross_coeff((-1.0, 0.1), (0.0, 1.0), 1, 1, 0.0), Err(loggas::Error::Domain(_))));
    assert!(matches!(cross_coeff((-1.0, -0.05), (0.05, 1.0), 1, 1, 0.06), Err(loggas::Error::Domain(_))));
}

#[test]
fn certificate_defaults() {
    let cert = certificate(&LemmaOptions::default()).unwrap();
    assert!(cert.delta1 > 0.0 && cert.positive_on_grid);
    assert!(cert.decay_slope < 0.0);
    assert_eq!(cert.knot_jumps.len(), 5);
}
