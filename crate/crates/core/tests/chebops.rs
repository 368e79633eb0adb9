use std::f64::consts::PI;

use loggas::chebops::*;
use loggas::equilibrium::{EquilibriumMeasure, Support};
use loggas::potential::{chebyshev_derivative, clenshaw, pv_integral, tanh_sinh, Potential, TestFunction};

fn two_cut() -> EquilibriumMeasure {
    let v = Potential::polynomial(vec![0.0, 0.0, -2.0, 0.0, 0.25]).unwrap();
    EquilibriumMeasure::solve(&v, &Support::new(vec![(-2.6, -1.3), (1.3, 2.6)]).unwrap()).unwrap()
}

/// `int_0^pi log|x0 - c - d cos(phi)| s(phi) dphi` with the log singularity split off.
fn log_kernel_direct(x0: f64, c: f64, d: f64, s: impl Fn(f64) -> f64) -> f64 {
    let z = (x0 - c) / d;
    if z.abs() > 1.0 + 1e-12 {
        return tanh_sinh(|phi: f64| (x0 - c - d * phi.cos()).abs().ln() * s(phi), 0.0, PI, 1e-13).unwrap();
    }
    let th = z.clamp(-1.0, 1.0).acos();
    let g = |phi: f64| {
        let k = (2.0 * d).ln() + (0.5 * (phi + th)).sin().abs().ln() + (0.5 * (phi - th)).sin().abs().ln();
        k * s(phi)
    };
    let mut total = 0.0;
    if th > 0.0 {
        total += tanh_sinh(g, 0.0, th, 1e-13).unwrap();
    }
    if th < PI {
        total += tanh_sinh(g, th, PI, 1e-13).unwrap();
    }
    total
}

/// `D h` at an interior point, via the principal-value definition.
fn d_direct(h: &[f64], c: f64, d: f64, x0: f64) -> f64 {
    let dh = chebyshev_derivative(h);
    let sq = |m: f64| {
        let t = (m - c) / d;
        d * (1.0 - t * t).max(0.0).sqrt()
    };
    let pv = pv_integral(|m| clenshaw(&dh, (m - c) / d) / d * sq(m), c - d, c + d, x0, 160).unwrap();
    pv / (PI * PI * sq(x0))
}

fn intervals_under_test() -> Vec<(f64, f64)> {
    let r2 = 2f64.sqrt();
    let r6 = 6f64.sqrt();
    vec![(-2.0, 2.0), (-r6, -r2), (r2, r6)]
}

#[test]
fn d_after_lhat_is_minus_identity_plus_rank_one() {
    for (a, b) in intervals_under_test() {
        let (c, d) = (0.5 * (a + b), 0.5 * (b - a));
        for k in 0..=20usize {
            // L v for v = T_k/|X|^{1/2}, sampled and expanded
            let nodes = 48;
            let samples: Vec<f64> = (0..=nodes)
                .map(|j| {
                    let x = c + d * (PI * j as f64 / nodes as f64).cos();
                    log_kernel_direct(x, c, d, |phi| (k as f64 * phi).cos())
                })
                .collect();
            let f = loggas::spectral::dct_lobatto(&samples);
            let mut worst = 0.0f64;
            for i in 1..40 {
                let th = PI * i as f64 / 40.0;
                let x0 = c + d * th.cos();
                let sq = d * th.sin();
                let lhs = d_direct(&f, c, d, x0) * sq;
                let rhs = -(k as f64 * th).cos() + if k == 0 { 1.0 } else { 0.0 };
                worst = worst.max((lhs - rhs).abs());
            }
            assert!(worst < 1e-8, "[{a},{b}] k={k}: {worst:e}");
        }
    }
}

#[test]
fn lhat_after_d_is_minus_identity_plus_rank_one() {
    for (a, b) in intervals_under_test() {
        let (c, d) = (0.5 * (a + b), 0.5 * (b - a));
        for k in 0..=20usize {
            let mut h = vec![0.0; k + 1];
            h[k] = 1.0;
            // smooth part of D h at Chebyshev-Gauss points, then interpolate
            let n = 48;
            let angles: Vec<f64> = (0..n).map(|j| PI * (j as f64 + 0.5) / n as f64).collect();
            let vals: Vec<f64> =
                angles.iter().map(|&t| if k == 0 { 0.0 } else { d_direct(&h, c, d, c + d * t.cos()) * d * t.sin() }).collect();
            let coef: Vec<f64> = (0..n)
                .map(|m| {
                    let s: f64 = vals.iter().zip(&angles).map(|(v, t)| v * (m as f64 * t).cos()).sum();
                    s * if m == 0 { 1.0 } else { 2.0 } / n as f64
                })
                .collect();
            let mut worst = 0.0f64;
            for i in 0..=40 {
                let th = PI * i as f64 / 40.0;
                let x0 = c + d * th.cos();
                let lhs = log_kernel_direct(x0, c, d, |phi| clenshaw(&coef, phi.cos()));
                let rhs = -(k as f64 * th).cos() + if k == 0 { 1.0 } else { 0.0 };
                worst = worst.max((lhs - rhs).abs());
            }
            assert!(worst < 1e-8, "[{a},{b}] k={k}: {worst:e}");
        }
    }
}

#[test]
fn model_matrices_match_direct_log_kernel() {
    let s = Support::new(vec![(-0.9, -0.35), (0.2, 0.95)]).unwrap();
    let m = 24;
    let lt = ltilde(&s, m);
    // column (1, l) evaluated on interval 0 against direct quadrature
    for l in [0usize, 1, 5] {
        let mut v = ChebSeries::zeros(SeriesKind::Density, s.intervals(), m);
        v.coeffs[1][l] = 1.0;
        let f = ChebSeries::from_vector(SeriesKind::Function, s.intervals(), &lt.apply(&v.to_vector()));
        for x in [-0.88, -0.6, -0.36] {
            let direct = log_kernel_direct(x, s.center(1), s.half_width(1), |phi| (l as f64 * phi).cos());
            assert!((f.eval_on(0, x) - direct).abs() < 1e-12, "l={l} x={x}");
        }
    }
}

#[test]
fn gaussian_nu_moments() {
    let eq = EquilibriumMeasure::gaussian();
    let nu = NuFunctional::from_equilibrium(&eq, 32).unwrap();
    assert!(nu.moment(0, 0).abs() < 1e-14);
    assert!((nu.moment(0, 2) - 0.5).abs() < 1e-13);
    assert!(nu.moment(0, 3).abs() < 1e-13);
    let s = Support::new(vec![(-2.0, 2.0)]).unwrap();
    let h = cheb_transform(|x| x * x, &s, 32);
    assert!((nu.pair(&h) - 1.0).abs() < 1e-13);
    // density representation gives the same pairing
    assert!((nu.density_series(32).pair(&h) - 1.0).abs() < 1e-13);
}

#[test]
fn one_cut_model_has_identity_resolvent() {
    let model = MultiCutModel::build(&EquilibriumMeasure::gaussian(), ModelOptions::default()).unwrap();
    assert_eq!(model.q(), 1);
    assert_eq!(model.g.matrix, nalgebra::DMatrix::identity(65, 65));
    assert_eq!(model.log_det().unwrap(), 0.0);
    // the model lives on the rescaled support
    let (a, b) = model.support().intervals()[0];
    assert!((a + 0.95).abs() < 1e-12 && (b - 0.95).abs() < 1e-12);
}

#[test]
fn two_cut_period_matrix_and_charges() {
    let model = MultiCutModel::build(&two_cut(), ModelOptions::default()).unwrap();
    let d = &model.diagnostics;
    assert!(d.psi_residual < 1e-8, "psi residual {:e}", d.psi_residual);
    assert!(d.q_min_eigenvalue > 0.0);
    assert!((model.q_matrix[(0, 1)] - model.q_matrix[(1, 0)]).abs() < 1e-10);
    assert!(d.truncation_drift < 1e-8);

    // Q_{ab} is the mass of psi_b on interval a, checked by Gauss-Chebyshev quadrature
    let s = model.support().clone();
    for alpha in 0..2 {
        for b in 0..2 {
            let (c, hw) = (s.center(alpha), s.half_width(alpha));
            let n = 400;
            let mass: f64 = (0..n)
                .map(|j| {
                    let t = PI * (j as f64 + 0.5) / n as f64;
                    let x = c + hw * t.cos();
                    model.psi_poly[b].eval(x) * s.branch_sign(alpha) / s.abs_sqrt_x_others(alpha, x)
                })
                .sum::<f64>()
                * PI
                / n as f64;
            assert!((mass - model.q_matrix[(alpha, b)]).abs() < 1e-10, "{alpha}{b}");
        }
    }

    // L psi_a is the constant -delta on each interval, by direct quadrature
    for a in 0..2 {
        for (beta, x) in [(0usize, -0.9), (0, -0.6), (1, 0.6), (1, 0.85)] {
            let mut total = 0.0;
            for g in 0..2 {
                let (c, hw) = (s.center(g), s.half_width(g));
                let psi = &model.psi[a];
                total += log_kernel_direct(x, c, hw, |phi| clenshaw(&psi.coeffs[g], phi.cos()));
            }
            let target = if a == beta { -1.0 } else { 0.0 };
            assert!((total - target).abs() < 1e-8, "a={a} x={x}: {total}");
        }
    }

    // indicator of an interval maps to a unit vector
    let mut ind = ChebSeries::zeros(SeriesKind::Function, s.intervals(), model.m);
    ind.coeffs[1][0] = 1.0;
    let i = model.i_of_series(&ind);
    assert!(i[0].abs() < 1e-10 && (i[1] - 1.0).abs() < 1e-10);
}

#[test]
fn resolvent_stable_under_refinement() {
    let eq = two_cut();
    let (scaled, map) = eq.rescale();
    let coarse = MultiCutModel::build_at(&scaled, map, 32).unwrap();
    let fine = MultiCutModel::build_at(&scaled, map, 64).unwrap();
    let mut drift = 0.0f64;
    for a in 0..2 {
        for k in 0..=32 {
            for b in 0..2 {
                for l in 0..=32 {
                    drift = drift.max((coarse.g.entry(a, k, b, l) - fine.g.entry(a, k, b, l)).abs());
                }
            }
        }
    }
    assert!(drift < 1e-8, "{drift:e}");
    assert!((coarse.log_det().unwrap() - fine.log_det().unwrap()).abs() < 1e-10);
}

#[test]
fn symmetric_two_cut_symmetries() {
    let model = MultiCutModel::build(&two_cut(), ModelOptions::default()).unwrap();
    assert!((model.q_matrix[(0, 0)] - model.q_matrix[(1, 1)]).abs() < 1e-10);
    // odd test function: I is antisymmetric
    let i = model.i_functional(&TestFunction::polynomial(vec![0.0, 1.0]));
    assert!((i[0] + i[1]).abs() < 1e-10);
    // the tilt of a symmetric measure is symmetric
    assert!((model.tilt[0] - model.tilt[1]).abs() < 1e-10);
    // nu pairs to zero with constants on every interval
    assert!(model.diagnostics.nu_mass.abs() < 1e-12);
    assert!(model.g_dbar_form(&model.series_of(&TestFunction::polynomial(vec![0.0, 1.0]))) > 0.0);
}
