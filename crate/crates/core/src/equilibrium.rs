//! Equilibrium measures of polynomial potentials on a union of `q` intervals.
//!
//! The endpoints solve the moment conditions of `V'/X^{1/2}` (evaluated exactly
//! from Laurent expansions at infinity) together with equal-level conditions
//! across each gap. Density, masses, energy and entropy are then evaluated
//! spectrally in the angle variable of each interval.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::potential::{ChebyshevRule, Potential};
use crate::spectral;

/// Ordered disjoint intervals `a_1 < b_1 < ... < a_q < b_q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Support {
    intervals: Vec<(f64, f64)>,
}

impl Support {
    pub fn new(intervals: Vec<(f64, f64)>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::Invalid("support needs at least one interval".into()));
        }
        let mut prev = f64::NEG_INFINITY;
        for &(a, b) in &intervals {
            if !(a.is_finite() && b.is_finite() && prev < a && a < b) {
                return Err(Error::Invalid(format!(
                    "support intervals must be finite, ordered and disjoint: {intervals:?}"
                )));
            }
            prev = b;
        }
        Ok(Support { intervals })
    }

    fn from_endpoints(e: &[f64]) -> Result<Self> {
        Support::new(e.chunks(2).map(|c| (c[0], c[1])).collect())
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn q(&self) -> usize {
        self.intervals.len()
    }

    pub fn endpoints(&self) -> Vec<f64> {
        self.intervals.iter().flat_map(|&(a, b)| [a, b]).collect()
    }

    pub fn center(&self, alpha: usize) -> f64 {
        let (a, b) = self.intervals[alpha];
        0.5 * (a + b)
    }

    pub fn half_width(&self, alpha: usize) -> f64 {
        let (a, b) = self.intervals[alpha];
        0.5 * (b - a)
    }

    pub fn lower(&self) -> f64 {
        self.intervals[0].0
    }

    pub fn upper(&self) -> f64 {
        self.intervals[self.q() - 1].1
    }

    /// Index of the interval containing `x`, endpoints included.
    pub fn locate(&self, x: f64) -> Option<usize> {
        self.intervals.iter().position(|&(a, b)| a <= x && x <= b)
    }

    /// Analytic branch of `prod sqrt((z-a)(z-b))` behaving like `z^q` at infinity.
    pub fn sqrt_x(&self, z: Complex64) -> Complex64 {
        self.intervals
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, &(a, b)| acc * (z - a).sqrt() * (z - b).sqrt())
    }

    /// `|X(x)|^{1/2}` for real `x`.
    pub fn abs_sqrt_x(&self, x: f64) -> f64 {
        self.intervals.iter().map(|&(a, b)| ((x - a) * (x - b)).abs().sqrt()).product()
    }

    /// `|X(x)|^{1/2}` with the factor of interval `alpha` left out.
    pub fn abs_sqrt_x_others(&self, alpha: usize, x: f64) -> f64 {
        self.intervals
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != alpha)
            .map(|(_, &(a, b))| ((x - a) * (x - b)).abs().sqrt())
            .product()
    }

    /// Sign of `Im X^{1/2}(x + i0)` on interval `alpha`.
    pub fn branch_sign(&self, alpha: usize) -> f64 {
        if (self.q() - 1 - alpha).is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }

    /// Apply `x -> scale*x + shift` (scale > 0).
    pub fn mapped(&self, map: ScaleMap) -> Support {
        Support {
            intervals: self.intervals.iter().map(|&(a, b)| (map.apply(a), map.apply(b))).collect(),
        }
    }
}

/// Affine change of variables `y = scale*x + shift`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleMap {
    pub scale: f64,
    pub shift: f64,
}

impl ScaleMap {
    pub fn identity() -> Self {
        ScaleMap { scale: 1.0, shift: 0.0 }
    }

    pub fn apply(&self, x: f64) -> f64 {
        self.scale * x + self.shift
    }

    pub fn invert(&self, y: f64) -> f64 {
        (y - self.shift) / self.scale
    }

    pub fn compose(&self, inner: ScaleMap) -> ScaleMap {
        ScaleMap { scale: self.scale * inner.scale, shift: self.scale * inner.shift + self.shift }
    }

    pub fn is_identity(&self) -> bool {
        self.scale == 1.0 && self.shift == 0.0
    }
}

/// Diagnostics recorded while solving.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub endpoint_equations: f64,
    pub newton_iterations: usize,
    pub normalization: f64,
    pub v_spread_on_support: f64,
    pub v_max_outside: f64,
    pub stieltjes_far_field: f64,
    pub min_abs_p_ratio: f64,
}

/// Solved equilibrium problem.
#[derive(Debug, Clone)]
pub struct EquilibriumMeasure {
    pub support: Support,
    pub p: Polynomial,
    pub masses: Vec<f64>,
    pub v_star: f64,
    pub energy: f64,
    pub entropy: f64,
    pub scale: ScaleMap,
    pub residuals: Residuals,
    potential: Potential,
    /// Cosine coefficients of `rho_alpha(x(phi)) * |dx/dphi|` per interval.
    flux: Vec<Vec<f64>>,
}

/// Cosine-series degree used for the density in angle variables.
const FLUX_DEGREE: usize = 256;
const NEWTON_TOL: f64 = 1e-10;

/// Coefficients of `prod_e (1 - e/z)^{-1/2}` in powers of `1/z`, up to `order`.
fn inverse_sqrt_series(endpoints: &[f64], order: usize) -> Vec<f64> {
    let mut w = vec![0.0; order + 1];
    w[0] = 1.0;
    for &e in endpoints {
        let mut b = vec![0.0; order + 1];
        b[0] = 1.0;
        for m in 1..=order {
            b[m] = b[m - 1] * (2.0 * m as f64 - 1.0) / (2.0 * m as f64) * e;
        }
        let mut next = vec![0.0; order + 1];
        for i in 0..=order {
            for j in 0..=order - i {
                next[i + j] += w[i] * b[j];
            }
        }
        w = next;
    }
    w
}

/// `(1/2 pi i) ∮ z^k V'(z) / X^{1/2}(z) dz` for `k = 0..=q`, exactly.
fn moments(vp: &Polynomial, endpoints: &[f64]) -> Vec<f64> {
    let q = endpoints.len() / 2;
    let deg = vp.degree();
    let w = inverse_sqrt_series(endpoints, deg + 2);
    (0..=q)
        .map(|k| {
            vp.coeffs()
                .iter()
                .enumerate()
                .filter_map(|(j, &v)| {
                    let m = j as i64 + k as i64 - q as i64 + 1;
                    (m >= 0).then(|| v * w[m as usize])
                })
                .sum()
        })
        .collect()
}

/// Polynomial part of `V'(z)/X^{1/2}(z)` at infinity.
fn polynomial_part(vp: &Polynomial, endpoints: &[f64]) -> Polynomial {
    let q = endpoints.len() / 2;
    let deg = vp.degree();
    if deg < q {
        return Polynomial::constant(0.0);
    }
    let w = inverse_sqrt_series(endpoints, deg);
    Polynomial::new(
        (0..=deg - q)
            .map(|p| {
                vp.coeffs()
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j >= q + p)
                    .map(|(j, &v)| v * w[j - q - p])
                    .sum()
            })
            .collect(),
    )
}

fn gap_integral(p: &Polynomial, s: &Support, gap: usize) -> f64 {
    let (lo, hi) = (s.intervals[gap].1, s.intervals[gap + 1].0);
    ChebyshevRule::new(200).integrate_sqrt(lo, hi, |x| {
        let mut f = p.eval(x);
        for (i, &(a, b)) in s.intervals.iter().enumerate() {
            if i != gap && i != gap + 1 {
                f *= ((x - a) * (x - b)).abs().sqrt();
            }
        }
        f * (x - s.intervals[gap].0).abs().sqrt() * (s.intervals[gap + 1].1 - x).abs().sqrt()
    })
}

fn endpoint_residual(v: &Potential, e: &[f64]) -> Option<Vec<f64>> {
    let s = Support::from_endpoints(e).ok()?;
    let q = s.q();
    let mut f = moments(v.derivative_poly(), e);
    f[q] -= 2.0;
    if q > 1 {
        let p = polynomial_part(v.derivative_poly(), e);
        for g in 0..q - 1 {
            f.push(gap_integral(&p, &s, g));
        }
    }
    Some(f)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

/// Newton iteration on the `2q` endpoint equations from the caller's guess.
pub fn solve_support(v: &Potential, init: &Support) -> Result<(Support, f64, usize)> {
    let mut e = init.endpoints();
    let n = e.len();
    let mut f = endpoint_residual(v, &e).ok_or_else(|| Error::Invalid("bad initial support".into()))?;
    let mut res = max_abs(&f);
    let mut iterations = 0;
    for it in 0..200 {
        iterations = it;
        if res < 1e-14 {
            break;
        }
        let mut jac = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            let h = 1e-7 * e[j].abs().max(1.0);
            let mut ep = e.clone();
            let mut em = e.clone();
            ep[j] += h;
            em[j] -= h;
            let (fp, fm) = match (endpoint_residual(v, &ep), endpoint_residual(v, &em)) {
                (Some(a), Some(b)) => (a, b),
                _ => return Err(Error::NoConvergence { what: "endpoint Newton left the admissible region".into(), residual: res }),
            };
            for i in 0..n {
                jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        let rhs = DVector::from_vec(f.iter().map(|x| -x).collect());
        let step = match jac.lu().solve(&rhs) {
            Some(s) => s,
            None => return Err(Error::NoConvergence { what: "singular endpoint Jacobian".into(), residual: res }),
        };
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial: Vec<f64> = e.iter().zip(step.iter()).map(|(x, d)| x + lambda * d).collect();
            if let Some(ft) = endpoint_residual(v, &trial) {
                let rt = max_abs(&ft);
                if rt < res || (rt <= res * 1.0001 && res < 1e-12) {
                    e = trial;
                    f = ft;
                    res = rt;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if !(res < NEWTON_TOL) {
        return Err(Error::NoConvergence { what: "endpoint equations".into(), residual: res });
    }
    Ok((Support::from_endpoints(&e)?, res, iterations))
}

/// `P` of the density `rho = P Im X^{1/2}(x+i0) / (2 pi)` from residues at infinity.
pub fn compute_p(v: &Potential, s: &Support) -> Polynomial {
    polynomial_part(v.derivative_poly(), &s.endpoints())
}

impl EquilibriumMeasure {
    /// Solve for the support near `init` and assemble the measure.
    pub fn solve(v: &Potential, init: &Support) -> Result<Self> {
        let (support, endpoint_res, iterations) = solve_support(v, init)?;
        let p = compute_p(v, &support);
        Self::assemble(v.clone(), support, p, endpoint_res, iterations)
    }

    /// Gaussian case `x^2/2` on `[-2, 2]`.
    pub fn gaussian() -> Self {
        Self::solve(&Potential::gaussian(), &Support::new(vec![(-2.1, 2.1)]).unwrap()).unwrap()
    }

    fn assemble(
        potential: Potential,
        support: Support,
        p: Polynomial,
        endpoint_res: f64,
        iterations: usize,
    ) -> Result<Self> {
        let q = support.q();
        // genericity and positivity of the density
        let mut pmax = 0.0f64;
        let mut pmin = f64::INFINITY;
        for alpha in 0..q {
            let (a, b) = support.intervals[alpha];
            let sign = support.branch_sign(alpha);
            for i in 0..=2000 {
                let x = a + (b - a) * i as f64 / 2000.0;
                let val = sign * p.eval(x);
                pmax = pmax.max(val.abs());
                if val < 0.0 {
                    pmin = pmin.min(-val.abs());
                } else {
                    pmin = pmin.min(val);
                }
            }
        }
        let ratio = pmin / pmax;
        if !(ratio >= 1e-8) {
            return Err(Error::Assumption(format!(
                "density factor P is not bounded away from zero with the right sign on the support (min/max = {ratio:.3e}); critical or non-generic potential"
            )));
        }
        let flux = Self::flux_coefficients(&support, &p);
        let mut eq = EquilibriumMeasure {
            support,
            p,
            masses: Vec::new(),
            v_star: 0.0,
            energy: 0.0,
            entropy: 0.0,
            scale: ScaleMap::identity(),
            residuals: Residuals {
                endpoint_equations: endpoint_res,
                newton_iterations: iterations,
                normalization: 0.0,
                v_spread_on_support: 0.0,
                v_max_outside: 0.0,
                stieltjes_far_field: 0.0,
                min_abs_p_ratio: ratio,
            },
            potential,
            flux,
        };
        eq.masses = eq.flux.iter().map(|f| PI * f[0]).collect();
        let total: f64 = eq.masses.iter().sum();
        eq.residuals.normalization = (total - 1.0).abs();
        if eq.residuals.normalization > 1e-8 {
            return Err(Error::Consistency(format!("equilibrium density has mass {total}")));
        }
        eq.v_star = eq.raw_effective_potential(eq.support.center(0));
        let mut spread = 0.0f64;
        for alpha in 0..q {
            for i in 0..=50 {
                let th = PI * i as f64 / 50.0;
                let x = eq.support.center(alpha) + eq.support.half_width(alpha) * th.cos();
                spread = spread.max((eq.raw_effective_potential(x) - eq.v_star).abs());
            }
        }
        eq.residuals.v_spread_on_support = spread;
        eq.residuals.v_max_outside = eq.max_outside_excess(1000);
        if eq.residuals.v_max_outside > 1e-8 {
            return Err(Error::Assumption(format!(
                "effective potential exceeds its support value outside the support by {:.3e}; wrong number of cuts?",
                eq.residuals.v_max_outside
            )));
        }
        let z = Complex64::new(1e3, 0.0);
        eq.residuals.stieltjes_far_field = (eq.stieltjes(z) - 1.0 / z).norm();
        eq.energy = eq.compute_energy();
        eq.entropy = eq.compute_entropy();
        Ok(eq)
    }

    fn flux_coefficients(s: &Support, p: &Polynomial) -> Vec<Vec<f64>> {
        (0..s.q())
            .map(|alpha| {
                let (c, d) = (s.center(alpha), s.half_width(alpha));
                spectral::cosine_series(FLUX_DEGREE, |phi| {
                    let x = c + d * phi.cos();
                    p.eval(x).abs() * s.abs_sqrt_x_others(alpha, x) * d * d * phi.sin().powi(2) / (2.0 * PI)
                })
            })
            .collect()
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn q(&self) -> usize {
        self.support.q()
    }

    /// Cosine coefficients of `rho(x(phi)) |dx/dphi|` on interval `alpha`.
    pub fn flux(&self, alpha: usize) -> &[f64] {
        &self.flux[alpha]
    }

    /// `(1/2pi) P(x) Im X^{1/2}(x+i0)`, zero off the support.
    pub fn density(&self, x: f64) -> f64 {
        match self.support.locate(x) {
            Some(alpha) => {
                let (a, b) = self.support.intervals[alpha];
                if x == a || x == b {
                    return 0.0;
                }
                self.support.branch_sign(alpha) * self.p.eval(x) * self.support.abs_sqrt_x(x) / (2.0 * PI)
            }
            None => 0.0,
        }
    }

    /// `int log|x - m| rho(m) dm`.
    pub fn log_potential(&self, x: f64) -> f64 {
        let mut total = 0.0;
        for alpha in 0..self.q() {
            let (c, d) = (self.support.center(alpha), self.support.half_width(alpha));
            let f = &self.flux[alpha];
            let mom = spectral::log_moments(f.len() - 1, x, c, d);
            total += f.iter().zip(&mom).map(|(a, b)| a * b).sum::<f64>();
        }
        total
    }

    fn raw_effective_potential(&self, x: f64) -> f64 {
        2.0 * self.log_potential(x) - self.potential.value(x)
    }

    /// `v(x) - v*`, zero on the support and negative off it.
    pub fn effective_potential(&self, x: f64) -> f64 {
        self.raw_effective_potential(x) - self.v_star
    }

    fn max_outside_excess(&self, n: usize) -> f64 {
        let (lo, hi) = (self.support.lower(), self.support.upper());
        let w = hi - lo;
        let eps = 1e-3 * w;
        let mut worst = f64::NEG_INFINITY;
        for i in 0..n {
            let x = lo - 0.5 * w + 2.0 * w * i as f64 / (n - 1) as f64;
            let near = self.support.intervals.iter().any(|&(a, b)| x > a - eps && x < b + eps);
            if !near {
                worst = worst.max(self.effective_potential(x));
            }
        }
        worst
    }

    /// Stieltjes transform `int rho(m)/(z - m) dm` by quadrature.
    pub fn stieltjes(&self, z: Complex64) -> Complex64 {
        let rule = ChebyshevRule::new(400);
        let mut g = Complex64::new(0.0, 0.0);
        for (alpha, &(a, b)) in self.support.intervals.iter().enumerate() {
            let sign = self.support.branch_sign(alpha);
            let re = rule.integrate_sqrt(a, b, |x| {
                let w = sign * self.p.eval(x) * self.support.abs_sqrt_x_others(alpha, x) / (2.0 * PI);
                (w / (z - x)).re
            });
            let im = rule.integrate_sqrt(a, b, |x| {
                let w = sign * self.p.eval(x) * self.support.abs_sqrt_x_others(alpha, x) / (2.0 * PI);
                (w / (z - x)).im
            });
            g += Complex64::new(re, im);
        }
        g
    }

    /// `int f(x) rho(x) dx` by Gauss-Legendre in the angle variables.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        let gl = gauss_quad::legendre::GaussLegendre::new(256).unwrap();
        (0..self.q())
            .map(|alpha| {
                let (c, d) = (self.support.center(alpha), self.support.half_width(alpha));
                let fl = &self.flux[alpha];
                gl.integrate(0.0, PI, |phi| {
                    let w: f64 = fl.iter().enumerate().map(|(k, v)| v * (k as f64 * phi).cos()).sum();
                    w * f(c + d * phi.cos())
                })
            })
            .sum()
    }

    fn compute_energy(&self) -> f64 {
        let interaction = self.integrate(|x| self.log_potential(x));
        let external = self.integrate(|x| self.potential.value(x));
        interaction - external
    }

    /// `int rho log rho` with the edge singularity `log sin(phi)` done exactly.
    fn compute_entropy(&self) -> f64 {
        let mut total = 0.0;
        for alpha in 0..self.q() {
            let (c, d) = (self.support.center(alpha), self.support.half_width(alpha));
            let fl = &self.flux[alpha];
            let smooth = spectral::cosine_series(FLUX_DEGREE, |phi| {
                let x = c + d * phi.cos();
                let g = self.p.eval(x).abs() * self.support.abs_sqrt_x_others(alpha, x) * d / (2.0 * PI);
                let w: f64 = fl.iter().enumerate().map(|(k, v)| v * (k as f64 * phi).cos()).sum();
                w * g.ln()
            });
            total += PI * smooth[0];
            let ls = spectral::log_sin_coeffs(fl.len() - 1);
            total += PI * fl[0] * ls[0] + fl.iter().zip(&ls).skip(1).map(|(a, b)| 0.5 * PI * a * b).sum::<f64>();
        }
        total
    }

    /// Energy functional value `L[rho, rho] - int V rho`.
    pub fn energy(&self) -> f64 {
        self.energy
    }

    /// `int rho log rho`.
    pub fn entropy(&self) -> f64 {
        self.entropy
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    /// Map the support into `[-0.95, 0.95]`.
    ///
    /// Returns the transformed measure (for the transformed potential) and
    /// the map `y = scale*x + shift`; identity when already inside.
    pub fn rescale(&self) -> (EquilibriumMeasure, ScaleMap) {
        let (lo, hi) = (self.support.lower(), self.support.upper());
        let map = if lo >= -0.95 && hi <= 0.95 {
            ScaleMap::identity()
        } else {
            let s = 0.95 * 2.0 / (hi - lo);
            ScaleMap { scale: s, shift: -s * 0.5 * (lo + hi) }
        };
        (self.mapped(map), map)
    }

    /// The same measure expressed in the variable `y = map(x)`.
    pub fn mapped(&self, map: ScaleMap) -> EquilibriumMeasure {
        if map.is_identity() {
            return self.clone();
        }
        let s = map.scale;
        let q = self.q() as i32;
        let support = self.support.mapped(map);
        let p = self.p.compose_affine(1.0 / s, -map.shift / s).scale(s.powi(-(q + 1)));
        let ls = s.ln();
        EquilibriumMeasure {
            support,
            p,
            masses: self.masses.clone(),
            v_star: self.v_star + 2.0 * ls,
            energy: self.energy + ls,
            entropy: self.entropy - ls,
            scale: map.compose(self.scale),
            residuals: self.residuals.clone(),
            potential: self.potential.affine_image(s, map.shift),
            flux: self.flux.clone(),
        }
    }

    /// JSON-friendly summary.
    pub fn report(&self) -> EquilibriumReport {
        EquilibriumReport {
            support: self.support.intervals.clone(),
            p: self.p.coeffs().to_vec(),
            masses: self.masses.clone(),
            energy: self.energy,
            entropy: self.entropy,
            v_star: self.v_star,
            scale: self.scale,
            residuals: self.residuals.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub support: Vec<(f64, f64)>,
    #[serde(rename = "P")]
    pub p: Vec<f64>,
    pub masses: Vec<f64>,
    pub energy: f64,
    pub entropy: f64,
    pub v_star: f64,
    pub scale: ScaleMap,
    pub residuals: Residuals,
}

/// Free-function form of [`EquilibriumMeasure::density`].
pub fn density(eq: &EquilibriumMeasure, x: f64) -> f64 {
    eq.density(x)
}

/// Interval masses by Gauss-Chebyshev quadrature (independent of the stored values).
pub fn masses(eq: &EquilibriumMeasure) -> Result<Vec<f64>> {
    let rule = ChebyshevRule::new(200);
    let m: Vec<f64> = (0..eq.q())
        .map(|alpha| {
            let (a, b) = eq.support.intervals[alpha];
            let sign = eq.support.branch_sign(alpha);
            rule.integrate_sqrt(a, b, |x| sign * eq.p.eval(x) * eq.support.abs_sqrt_x_others(alpha, x) / (2.0 * PI))
        })
        .collect();
    let total: f64 = m.iter().sum();
    if (total - 1.0).abs() > 1e-8 {
        return Err(Error::Consistency(format!("masses sum to {total}")));
    }
    Ok(m)
}

pub fn effective_potential(eq: &EquilibriumMeasure, x: f64) -> f64 {
    eq.effective_potential(x)
}

pub fn energy(eq: &EquilibriumMeasure) -> f64 {
    eq.energy()
}

pub fn rescale(eq: &EquilibriumMeasure) -> (EquilibriumMeasure, Potential, ScaleMap) {
    let (e, map) = eq.rescale();
    let v = e.potential().clone();
    (e, v, map)
}
