use std::f64::consts::PI;

use loggas::equilibrium::{self, EquilibriumMeasure, Support};
use loggas::potential::Potential;
use loggas::Error;
use num_complex::Complex64;

fn quartic() -> Potential {
    Potential::polynomial(vec![0.0, 0.0, -2.0, 0.0, 0.25]).unwrap()
}

fn two_cut() -> EquilibriumMeasure {
    EquilibriumMeasure::solve(&quartic(), &Support::new(vec![(-2.6, -1.3), (1.3, 2.6)]).unwrap()).unwrap()
}

#[test]
fn gaussian_support_and_density() {
    let eq = EquilibriumMeasure::gaussian();
    let (a, b) = eq.support.intervals()[0];
    assert!((a + 2.0).abs() < 1e-8 && (b - 2.0).abs() < 1e-8);
    assert!((eq.p.coeffs()[0] - 1.0).abs() < 1e-12 && eq.p.degree() == 0);
    assert!((eq.density(0.0) - 1.0 / PI).abs() < 1e-12);
    assert_eq!(eq.density(b), 0.0);
    assert_eq!(eq.density(3.0), 0.0);
    assert!((eq.masses()[0] - 1.0).abs() < 1e-10);
}

#[test]
fn gaussian_translate_family() {
    let (c, d) = (0.3, 0.7);
    // 2 (x - c)^2 / d^2
    let k = 2.0 / (d * d);
    let v = Potential::polynomial(vec![k * c * c, -2.0 * k * c, k]).unwrap();
    let eq = EquilibriumMeasure::solve(&v, &Support::new(vec![(-0.5, 1.2)]).unwrap()).unwrap();
    let (a, b) = eq.support.intervals()[0];
    assert!((a - (c - d)).abs() < 1e-9 && (b - (c + d)).abs() < 1e-9);
    assert!((eq.p.coeffs()[0] - 4.0 / (d * d)).abs() < 1e-9);
    // density 2 sqrt|X| / (pi d^2)
    for x in [0.0, 0.3, 0.9] {
        let expect = 2.0 * ((x - a) * (b - x)).sqrt() / (PI * d * d);
        assert!((eq.density(x) - expect).abs() < 1e-9);
    }
    assert!((eq.energy() - (-0.75 + (d / 2.0).ln())).abs() < 1e-10);
}

#[test]
fn two_cut_quartic_support() {
    let eq = two_cut();
    let iv = eq.support.intervals();
    let (s2, s6) = (2f64.sqrt(), 6f64.sqrt());
    assert!((iv[0].0 + s6).abs() < 1e-8 && (iv[0].1 + s2).abs() < 1e-8);
    assert!((iv[1].0 - s2).abs() < 1e-8 && (iv[1].1 - s6).abs() < 1e-8);
    // P(z) = z
    let c = eq.p.coeffs();
    assert!(c[0].abs() < 1e-9 && (c[1] - 1.0).abs() < 1e-9 && eq.p.degree() == 1);
    let m = equilibrium::masses(&eq).unwrap();
    assert!((m[0] - 0.5).abs() < 1e-10 && (m[1] - 0.5).abs() < 1e-10);
    assert!(eq.density(-2.0) > 0.0 && eq.density(2.0) > 0.0);
}

#[test]
fn effective_potential_flat_on_support_and_lower_outside() {
    for eq in [EquilibriumMeasure::gaussian(), two_cut()] {
        assert!(eq.residuals.v_spread_on_support < 1e-8);
        for &(a, b) in eq.support.intervals() {
            for i in 0..=20 {
                let x = a + (b - a) * i as f64 / 20.0;
                assert!(eq.effective_potential(x).abs() < 1e-8);
            }
        }
        assert!(eq.residuals.v_max_outside < 0.0);
    }
    let g = EquilibriumMeasure::gaussian();
    assert!(g.effective_potential(1.0).abs() < 1e-8);
    assert!(g.effective_potential(3.0) < 0.0);
    assert!(two_cut().effective_potential(0.0) < 0.0);
}

#[test]
fn effective_potential_matches_brute_force_log_potential() {
    // independent oracle: semicircle log potential outside [-2,2]
    // int log|x-m| rho_sc(m) dm = x^2/4 - x sqrt(x^2-4)/4 + log((x + sqrt(x^2-4))/2) - 1/2 for x > 2
    let eq = EquilibriumMeasure::gaussian();
    for x in [2.5, 3.0, 5.0] {
        let s = (x * x - 4.0f64).sqrt();
        let exact = x * x / 4.0 - x * s / 4.0 + ((x + s) / 2.0).ln() - 0.5;
        assert!((eq.log_potential(x) - exact).abs() < 1e-12, "x={x}");
    }
}

#[test]
fn energies() {
    let g = EquilibriumMeasure::gaussian();
    assert!((g.energy() + 0.75).abs() < 1e-12);
    assert!((g.entropy() - (0.5 - (2.0 * PI).ln())).abs() < 1e-12);
    // energy identity E = (v* - int V rho)/2 on every model
    for eq in [g, two_cut()] {
        let ev = eq.integrate(|x| eq.potential().value(x));
        assert!((eq.energy() - 0.5 * (eq.v_star - ev)).abs() < 1e-10);
    }
}

#[test]
fn stieltjes_far_field_and_closed_form() {
    for eq in [EquilibriumMeasure::gaussian(), two_cut()] {
        assert!(eq.residuals.stieltjes_far_field < 1e-6);
        let z = Complex64::new(0.4, 1.5);
        let v = eq.potential();
        let closed = (v.derivative_poly().eval_complex(z) - eq.p.eval_complex(z) * eq.support.sqrt_x(z)) * 0.5;
        assert!((eq.stieltjes(z) - closed).norm() < 1e-10);
    }
}

#[test]
fn critical_potential_rejected() {
    let v = Potential::polynomial(vec![0.0, 0.0, -1.0, 0.0, 0.25]).unwrap();
    let r = EquilibriumMeasure::solve(&v, &Support::new(vec![(-2.2, 2.2)]).unwrap());
    assert!(matches!(r, Err(Error::Assumption(_))), "{r:?}");
}

#[test]
fn wrong_cut_count_rejected() {
    // the double well forced into one cut has negative density near 0
    let r = EquilibriumMeasure::solve(&quartic(), &Support::new(vec![(-2.7, 2.7)]).unwrap());
    assert!(matches!(r, Err(Error::Assumption(_))), "{r:?}");
}

#[test]
fn rescale_examples() {
    let g = EquilibriumMeasure::gaussian();
    let (e, map) = g.rescale();
    assert!((map.scale - 0.475).abs() < 1e-9 && map.shift.abs() < 1e-9);
    assert!((e.energy() - (g.energy() + 0.475f64.ln())).abs() < 1e-12);
    let t = two_cut();
    let (_, map) = t.rescale();
    assert!((map.scale - 0.95 / 6f64.sqrt()).abs() < 1e-9);
    let (_, again) = e.rescale();
    assert!(again.is_identity());
}

#[test]
fn rescaled_measure_matches_fresh_solve() {
    let t = two_cut();
    let (e, map) = t.rescale();
    let init = Support::new(e.support.intervals().iter().map(|&(a, b)| (a * 1.02, b * 0.98)).collect()).unwrap();
    let fresh = EquilibriumMeasure::solve(e.potential(), &init).unwrap();
    for (x, y) in fresh.support.endpoints().iter().zip(e.support.endpoints()) {
        assert!((x - y).abs() < 1e-9);
    }
    for (x, y) in fresh.p.coeffs().iter().zip(e.p.coeffs()) {
        assert!((x - y).abs() < 1e-8);
    }
    assert!((fresh.energy() - e.energy()).abs() < 1e-9);
    assert!((fresh.entropy() - e.entropy()).abs() < 1e-9);
    assert!((fresh.v_star - e.v_star).abs() < 1e-9);
    assert!(map.scale > 0.0);
}

#[test]
fn asymmetric_two_cut_solves() {
    // tilted double well keeps two cuts with unequal masses
    let v = Potential::polynomial(vec![0.0, 0.3, -2.0, 0.0, 0.25]).unwrap();
    let eq = EquilibriumMeasure::solve(&v, &Support::new(vec![(-2.6, -1.3), (1.3, 2.6)]).unwrap()).unwrap();
    let m = eq.masses();
    assert!((m[0] + m[1] - 1.0).abs() < 1e-10);
    assert!(m[0] > m[1]);
    assert!(eq.residuals.v_spread_on_support < 1e-8);
}
