use loggas::chebops::{ModelOptions, MultiCutModel};
use loggas::equilibrium::{EquilibriumMeasure, Support};
use loggas::fluctuation::*;
use loggas::potential::{Potential, TestFunction};

fn two_cut_model() -> MultiCutModel {
    let v = Potential::polynomial(vec![0.0, 0.0, -2.0, 0.0, 0.25]).unwrap();
    let eq = EquilibriumMeasure::solve(&v, &Support::new(vec![(-2.6, -1.3), (1.3, 2.6)]).unwrap()).unwrap();
    MultiCutModel::build(&eq, ModelOptions::default()).unwrap()
}

fn gaussian_model() -> MultiCutModel {
    MultiCutModel::build(&EquilibriumMeasure::gaussian(), ModelOptions::default()).unwrap()
}

fn lambda() -> TestFunction {
    TestFunction::polynomial(vec![0.0, 1.0])
}

#[test]
fn gaussian_one_cut_examples() {
    let m = gaussian_model();
    let p = onecut_predict(&m, &lambda(), 2.0).unwrap();
    assert!(p.mean_shift.abs() < 1e-14);
    assert!((p.variance() - 1.0).abs() < 1e-12);
    let sq = TestFunction::polynomial(vec![0.0, 0.0, 1.0]);
    let p1 = onecut_predict(&m, &sq, 1.0).unwrap();
    assert!((p1.mean_shift - 1.0).abs() < 1e-12);
    let p4 = onecut_predict(&m, &sq, 4.0).unwrap();
    assert!((p4.mean_shift + 0.5).abs() < 1e-12);
    // var(sum lambda^2) -> 4/beta
    assert!((p4.var_smooth - 1.0).abs() < 1e-12);
    // log Z[t h] from the derivative formulas
    let z = |t: f64| p1.log_z(t).unwrap();
    let h = 1e-3;
    let d1 = (z(h) - z(-h)) / (2.0 * h);
    let d2 = (z(h) - 2.0 * z(0.0) + z(-h)) / (h * h);
    assert!((d1 * 2.0 / 1.0 - p1.mean()).abs() < 1e-9);
    assert!((d2 * 4.0 - p1.variance()).abs() < 1e-6);
}

#[test]
fn one_cut_rejects_multi_cut_model() {
    assert!(matches!(onecut_predict(&two_cut_model(), &lambda(), 2.0), Err(loggas::Error::Usage(_))));
}

#[test]
fn multicut_reduces_to_one_cut() {
    let m = gaussian_model();
    let h = TestFunction::polynomial(vec![0.1, -0.3, 0.5, 0.2]);
    let a = onecut_predict(&m, &h, 1.5).unwrap();
    let b = multicut_mean_var(&m, &h, 77, 1.5).unwrap();
    assert_eq!(a.mean_shift, b.mean_shift);
    assert_eq!(a.var_smooth, b.var_smooth);
    assert_eq!(multicut_log_z(&m, &h, 77, 1.5).unwrap(), a.log_z(1.0).unwrap());
}

#[test]
fn zero_test_function_has_unit_functional() {
    let m = two_cut_model();
    let z = multicut_log_z(&m, &TestFunction::polynomial(vec![0.0]), 100, 2.0).unwrap();
    assert!(z.abs() < 1e-14);
}

#[test]
fn theta_cutoff_and_periodicity() {
    let m = two_cut_model();
    let i = m.i_functional(&lambda());
    let p = ThetaParams::for_model(&m, 101, 2.0, i.clone()).unwrap();
    let a = theta_eval_at(&p, 8).unwrap();
    let b = theta_eval_at(&p, 12).unwrap();
    assert!((a - b).abs() < 1e-12);
    // equal masses: n and n + 2 share the offsets exactly
    let p100 = multicut_mean_var(&m, &lambda(), 100, 2.0).unwrap();
    let p102 = multicut_mean_var(&m, &lambda(), 102, 2.0).unwrap();
    assert_eq!(p100.var_theta, p102.var_theta);
    assert_eq!(p100.mean_theta, p102.mean_theta);
    assert_eq!(p100.log_z(0.7).unwrap(), p102.log_z(0.7).unwrap());
}

#[test]
fn gaussianity_dichotomy() {
    let m = two_cut_model();
    let vars: Vec<f64> = (100..=140).map(|n| multicut_mean_var(&m, &lambda(), n, 2.0).unwrap().var_theta).collect();
    assert!(vars.iter().all(|v| *v > 0.0));
    let spread = vars.iter().cloned().fold(f64::MIN, f64::max) - vars.iter().cloned().fold(f64::MAX, f64::min);
    assert!(spread > 1e-3, "{spread}");

    let h = psi_orthogonal_polynomial(&m, &[0.0, 1.0]).unwrap();
    let i = m.i_functional(&h);
    assert!(i.iter().all(|v| v.abs() < 1e-9), "{i:?}");
    for n in [100, 101, 117] {
        let p = multicut_mean_var(&m, &h, n, 2.0).unwrap();
        assert!(p.gaussian && p.var_theta == 0.0 && p.mean_theta == 0.0);
    }
}

#[test]
fn log_z_consistent_with_moments() {
    let m = two_cut_model();
    let p = multicut_mean_var(&m, &lambda(), 100, 2.0).unwrap();
    let z = |t: f64| p.log_z(t).unwrap();
    let h = 1e-3;
    let d1 = (z(h) - z(-h)) / (2.0 * h);
    let d2 = (z(h) - 2.0 * z(0.0) + z(-h)) / (h * h);
    assert!((d1 - p.mean()).abs() < 1e-8, "{d1} {}", p.mean());
    assert!((d2 - p.variance()).abs() < 1e-5, "{d2} {}", p.variance());
    assert!(p.var_smooth > 0.0 && p.var_theta > 0.0);
    // beta = 2 leaves no smooth mean shift
    assert_eq!(p.mean_shift, 0.0);
}

#[test]
fn asymmetric_two_cut_prediction_is_finite() {
    let v = Potential::polynomial(vec![0.0, 0.3, -2.0, 0.0, 0.25]).unwrap();
    let eq = EquilibriumMeasure::solve(&v, &Support::new(vec![(-2.6, -1.3), (1.3, 2.6)]).unwrap()).unwrap();
    let m = MultiCutModel::build(&eq, ModelOptions::default()).unwrap();
    let sq = TestFunction::polynomial(vec![0.0, 0.0, 1.0]);
    for beta in [1.0, 4.0] {
        let p = multicut_mean_var(&m, &sq, 120, beta).unwrap();
        assert!(p.mean().is_finite() && p.variance() > 0.0);
    }
}
