//! Asymptotic expansion of `log(Q_n / n!)` for the log-gas partition function
//! `Q_n = int exp(-(n beta/2) sum V(x_i)) prod_{i<j} |x_i - x_j|^beta dx`.
//!
//! One cut:
//! `log(Q_n/n!) = (beta/2) n^2 E + F_beta(n) + n(beta/2 - 1)((log rho, rho) - 1 - log 2pi) + r_beta + o(1)`.
//! Several cuts add per-interval logarithmic and constant terms, a Fredholm
//! determinant, a quadratic form in the mean-correction measure and `log Theta`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Mutex, OnceLock};

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::chebops::MultiCutModel;
use crate::equilibrium::EquilibriumMeasure;
use crate::error::{Error, Result};
use crate::fluctuation::{theta_eval, ThetaParams};
use crate::poly::Polynomial;
use crate::potential::{Contour, Potential};

type C = Complex64;

/// `zeta'(-1)`, the constant term of the GUE expansion.
pub const ZETA_PRIME_MINUS_ONE: f64 = -0.165_421_143_700_451;

/// Coefficient of `log n`: `beta/24 - 1/4 + 1/(6 beta)`.
pub fn c_beta(beta: f64) -> f64 {
    beta / 24.0 - 0.25 + 1.0 / (6.0 * beta)
}

fn lgamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// The `n`-dependent universal part without its constant:
/// `n(beta/2-1)(log(n beta/2) + 2 log 2pi) + n log(2pi/Gamma(beta/2)) + c_beta log n`.
pub fn f_beta(n: f64, beta: f64) -> f64 {
    n * (0.5 * beta - 1.0) * ((0.5 * n * beta).ln() + 2.0 * (2.0 * PI).ln())
        + n * ((2.0 * PI).ln() - lgamma(0.5 * beta))
        + c_beta(beta) * n.ln()
}

/// The variant with `-1/2`, `sqrt(2 pi)` and `-c_beta log n`; it does not
/// reproduce the Gaussian ensemble and is kept for comparison only.
pub fn f_beta_printed(n: f64, beta: f64) -> f64 {
    n * (0.5 * beta - 1.0) * ((0.5 * n * beta).ln() - 0.5) + n * (0.5 * (2.0 * PI).ln() - lgamma(0.5 * beta))
        - c_beta(beta) * n.ln()
}

/// Exact `log(Q_n/n!)` for `V = x^2/2` from the Mehta-Selberg product.
pub fn log_gaussian_partition(n: u64, beta: f64) -> f64 {
    let nf = n as f64;
    let pairs = nf + beta * nf * (nf - 1.0) / 2.0;
    let g1 = lgamma(1.0 + 0.5 * beta);
    let prod: f64 = (1..=n).map(|j| lgamma(1.0 + j as f64 * beta / 2.0) - g1).sum();
    pairs * 0.5 * (2.0 / (nf * beta)).ln() + 0.5 * nf * (2.0 * PI).ln() + prod - lgamma(nf + 1.0)
}

/// Gaussian energy and entropy (`-3/4`, `1/2 - log 2pi`).
const GAUSS_ENERGY: f64 = -0.75;
fn gauss_entropy() -> f64 {
    0.5 - (2.0 * PI).ln()
}

/// Which universal part to subtract.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FVariant {
    Corrected,
    Printed,
}

/// `log(Q_n/n!) - [(beta/2) n^2 E + F + n(beta/2-1)((log rho, rho) - 1 - log 2pi)]` for the Gaussian.
pub fn gaussian_residual(n: u64, beta: f64, variant: FVariant) -> f64 {
    let nf = n as f64;
    let f = match variant {
        FVariant::Corrected => f_beta(nf, beta),
        FVariant::Printed => f_beta_printed(nf, beta),
    };
    log_gaussian_partition(n, beta)
        - (0.5 * beta * nf * nf * GAUSS_ENERGY + f + nf * (0.5 * beta - 1.0) * (gauss_entropy() - 1.0 - (2.0 * PI).ln()))
}

/// Constant term of the universal part, fitted from the Gaussian residuals at
/// `n = 64, 128, 256` by two Richardson steps (the residual expands in `1/n`;
/// larger `n` loses digits to cancellation against the `n^2` term);
/// cached per beta.
pub fn c1_beta(beta: f64) -> f64 {
    static CACHE: OnceLock<Mutex<HashMap<u64, f64>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = beta.to_bits();
    if let Some(v) = cache.lock().expect("cache lock").get(&key) {
        return *v;
    }
    let r = |n| gaussian_residual(n, beta, FVariant::Corrected);
    let (a, b, c) = (r(64), r(128), r(256));
    let v = (4.0 * (2.0 * c - b) - (2.0 * b - a)) / 3.0;
    cache.lock().expect("cache lock").insert(key, v);
    v
}

/// `log(Q_n/n!)` at `beta = 2` as `sum_k log h_k`, the squared norms of the
/// monic orthogonal polynomials for `exp(-n V)` on `[lo, hi]`, computed by
/// Lanczos with full reorthogonalization on a Gauss-Legendre discretization.
pub fn hankel_log_partition_beta2(v: &Potential, n: usize, lo: f64, hi: f64, nodes: usize) -> Result<f64> {
    if nodes < 2 * n {
        return Err(Error::Domain("the discretization needs at least 2n nodes".into()));
    }
    let gl = GaussLegendre::new(nodes).map_err(|e| Error::Domain(e.to_string()))?;
    let (xs, lw): (Vec<f64>, Vec<f64>) = gl
        .as_node_weight_pairs()
        .iter()
        .map(|&(t, w)| {
            let x = 0.5 * (lo + hi) + 0.5 * (hi - lo) * t;
            (x, (0.5 * (hi - lo) * w).ln() - n as f64 * v.value(x))
        })
        .unzip();
    let shift = lw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sw: Vec<f64> = lw.iter().map(|l| (0.5 * (l - shift)).exp()).collect();
    let norm0 = sw.iter().map(|s| s * s).sum::<f64>();
    let mut basis: Vec<Vec<f64>> = vec![sw.iter().map(|s| s / norm0.sqrt()).collect()];
    let mut log_h = norm0.ln() + shift;
    let mut total = log_h;
    let mut prev_beta = 0.0;
    for k in 0..n - 1 {
        let qk = &basis[k];
        let alpha: f64 = qk.iter().zip(&xs).map(|(q, x)| x * q * q).sum();
        let mut r: Vec<f64> = (0..xs.len())
            .map(|i| (xs[i] - alpha) * qk[i] - if k > 0 { prev_beta * basis[k - 1][i] } else { 0.0 })
            .collect();
        for _ in 0..2 {
            for q in &basis {
                let c: f64 = q.iter().zip(&r).map(|(a, b)| a * b).sum();
                for (ri, qi) in r.iter_mut().zip(q) {
                    *ri -= c * qi;
                }
            }
        }
        let b = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(b > 0.0) {
            return Err(Error::Degenerate("orthogonal polynomial recurrence broke down".into()));
        }
        log_h += 2.0 * b.ln();
        total += log_h;
        basis.push(r.iter().map(|v| v / b).collect());
        prev_beta = b;
    }
    Ok(total)
}

/// Form of the inhomogeneous term in the first-order correction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeTerm {
    /// `(2/beta) (b-a)^2 / (16 X^2)`: consistent with the Gaussian normalization.
    Normalized,
    /// `1/X^2` as printed; differs by the factor `16/(b-a)^2` at beta = 2.
    Literal,
}

/// The one-cut problem for `rho_alpha / mu_alpha` on a single interval,
/// interpolated to the Gaussian with the same support.
#[derive(Debug, Clone)]
pub struct CutProblem {
    pub a: f64,
    pub b: f64,
    mu: f64,
    p: Polynomial,
    dp: Polynomial,
    v: Polynomial,
    others: Vec<(f64, f64)>,
    /// `(x, rho(x) dx)` quadrature of each other interval.
    other_mass: Vec<Vec<(f64, f64)>>,
}

fn pair_sqrt(z: C, a: f64, b: f64) -> C {
    (z - a).sqrt() * (z - b).sqrt()
}

impl CutProblem {
    pub fn new(eq: &EquilibriumMeasure, alpha: usize) -> Self {
        let s = &eq.support;
        let (a, b) = s.intervals()[alpha];
        let gl = GaussLegendre::new(160).expect("nodes");
        let others: Vec<(f64, f64)> =
            s.intervals().iter().enumerate().filter(|(i, _)| *i != alpha).map(|(_, &iv)| iv).collect();
        let other_mass = others
            .iter()
            .map(|&(oa, ob)| {
                let (c, d) = (0.5 * (oa + ob), 0.5 * (ob - oa));
                gl.as_node_weight_pairs()
                    .iter()
                    .map(|&(t, w)| {
                        let phi = 0.5 * PI * (t + 1.0);
                        let x = c + d * phi.cos();
                        (x, 0.5 * PI * w * eq.density(x) * d * phi.sin())
                    })
                    .collect()
            })
            .collect();
        CutProblem {
            a,
            b,
            mu: eq.masses()[alpha],
            p: eq.p.clone(),
            dp: eq.p.derivative(),
            v: eq.potential().poly().clone(),
            others,
            other_mass,
        }
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.a + self.b)
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.b - self.a)
    }

    /// Density factor of the Gaussian with the same support.
    pub fn p0(&self) -> f64 {
        4.0 / self.half_width().powi(2)
    }

    /// Density factor of the normalized interval measure, continued off the real line.
    /// The principal square roots of the other intervals already carry the sign
    /// that makes it positive on this interval.
    pub fn p_eff(&self, z: C) -> C {
        let others: C = self.others.iter().map(|&(a, b)| pair_sqrt(z, a, b)).product();
        self.p.eval_complex(z) * others / self.mu
    }

    pub fn p_eff_deriv(&self, z: C) -> C {
        let others: C = self.others.iter().map(|&(a, b)| pair_sqrt(z, a, b)).product();
        let log_d: C = self.others.iter().map(|&(a, b)| (z - 0.5 * (a + b)) / ((z - a) * (z - b))).sum();
        (self.dp.eval_complex(z) + self.p.eval_complex(z) * log_d) * others / self.mu
    }

    fn p_t(&self, z: C, t: f64) -> C {
        self.p0() + (self.p_eff(z) - self.p0()) * t
    }

    fn p_t_deriv(&self, z: C, t: f64) -> C {
        self.p_eff_deriv(z) * t
    }

    /// Difference between the effective potential of the normalized interval
    /// problem and the Gaussian with the same support.
    pub fn delta_v(&self, z: C) -> C {
        let mut veff = self.v.eval_complex(z);
        for (iv, quad) in self.others.iter().zip(&self.other_mass) {
            let right = iv.0 > self.b;
            let lp: C = quad
                .iter()
                .map(|&(x, w)| {
                    // branch cut pointing away from this interval
                    let arg = if right { C::new(x, 0.0) - z } else { z - x };
                    arg.ln() * w
                })
                .sum();
            veff -= lp * 2.0;
        }
        let c = self.center();
        veff / self.mu - (z - c) * (z - c) * (2.0 / self.half_width().powi(2))
    }

    /// Joukowski radius of `z` relative to the interval (1 on the interval).
    pub fn joukowski_radius(&self, z: C) -> f64 {
        let w = (z - self.center()) / self.half_width();
        let s = (w - 1.0).sqrt() * (w + 1.0).sqrt();
        (w + s).norm().max((w - s).norm())
    }

    /// Largest Bernstein parameter free of singularities of the interpolated problem.
    fn singularity_radius(&self, t_nodes: &[f64]) -> f64 {
        let mut rho = 16.0f64;
        for &(a, b) in &self.others {
            rho = rho.min(self.joukowski_radius(C::new(a, 0.0))).min(self.joukowski_radius(C::new(b, 0.0)));
        }
        if self.others.is_empty() {
            for &t in t_nodes {
                let pt = Polynomial::constant(self.p0() * (1.0 - t)).add(&self.p.scale(t));
                for r in pt.roots() {
                    rho = rho.min(self.joukowski_radius(r));
                }
            }
        } else {
            for r in self.p.roots() {
                rho = rho.min(self.joukowski_radius(r));
            }
        }
        rho
    }
}

/// Samples of `(log P_t)'` on the interval for the Cauchy-type integral in `u0`.
struct TSlice {
    t: f64,
    lam: Vec<f64>,
    wg: Vec<f64>,
}

impl TSlice {
    fn new(cp: &CutProblem, t: f64, nodes: usize) -> Self {
        let (c, d) = (cp.center(), cp.half_width());
        let mut lam = Vec::with_capacity(nodes);
        let mut wg = Vec::with_capacity(nodes);
        for j in 0..nodes {
            let th = PI * (j as f64 + 0.5) / nodes as f64;
            let x = c + d * th.cos();
            let z = C::new(x, 0.0);
            let g = (cp.p_t_deriv(z, t) / cp.p_t(z, t)).re;
            lam.push(x);
            wg.push(PI / nodes as f64 * g * d * d * th.sin().powi(2));
        }
        TSlice { t, lam, wg }
    }
}

fn interval_sqrt(cp: &CutProblem, z: C) -> C {
    pair_sqrt(z, cp.a, cp.b)
}

/// `u0` and its derivative at `z` off the interval.
fn u0_pair(cp: &CutProblem, sl: &TSlice, z: C, beta: f64) -> (C, C) {
    let kappa = 2.0 / beta - 1.0;
    if kappa == 0.0 {
        return (C::new(0.0, 0.0), C::new(0.0, 0.0));
    }
    let c = cp.center();
    let s = interval_sqrt(cp, z);
    let x = s * s;
    let mut j = C::new(0.0, 0.0);
    let mut dj = C::new(0.0, 0.0);
    for (&l, &w) in sl.lam.iter().zip(&sl.wg) {
        let inv = 1.0 / (z - l);
        j += inv * w;
        dj -= inv * inv * w;
    }
    let ds = (z - c) / s;
    let u = -j / (2.0 * PI * s) - 0.5 / s + (z - c) / (2.0 * x);
    let du = -dj / (2.0 * PI * s) + j * ds / (2.0 * PI * s * s) + ds / (2.0 * s * s) + 0.5 / x
        - (z - c) * (z - c) / (x * x);
    (u * kappa, du * kappa)
}

fn check_outside(cp: &CutProblem, z: C) -> Result<()> {
    if cp.joukowski_radius(z) < 1.0 + 1e-6 {
        return Err(Error::Domain(format!("point {z} lies on or next to the interval")));
    }
    Ok(())
}

/// `u0(z, t)` for the interpolated problem (identically zero at beta = 2).
pub fn u0(cp: &CutProblem, z: C, t: f64, beta: f64, nodes: usize) -> Result<C> {
    check_outside(cp, z)?;
    Ok(u0_pair(cp, &TSlice::new(cp, t, nodes), z, beta).0)
}

fn edge_term(cp: &CutProblem, z: C, beta: f64, edge: EdgeTerm) -> C {
    let x = (z - cp.a) * (z - cp.b);
    match edge {
        EdgeTerm::Normalized => (2.0 / beta) * (cp.b - cp.a).powi(2) / 16.0 / (x * x),
        EdgeTerm::Literal => 1.0 / (x * x),
    }
}

/// Weights `F(zeta) dzeta / P_t(zeta)` of the inner contour for the operator `K_t`.
fn inner_weights(cp: &CutProblem, sl: &TSlice, inner: &Contour, beta: f64, edge: EdgeTerm) -> Vec<(C, C)> {
    let kappa = 2.0 / beta - 1.0;
    inner
        .points()
        .into_iter()
        .map(|(zeta, dz)| {
            let (u, du) = u0_pair(cp, sl, zeta, beta);
            let f = u * u - du * kappa + edge_term(cp, zeta, beta, edge);
            (zeta, f * dz / cp.p_t(zeta, sl.t))
        })
        .collect()
}

fn apply_k(cp: &CutProblem, weights: &[(C, C)], z: C) -> C {
    let s: C = weights.iter().map(|&(zeta, w)| w / (z - zeta)).sum();
    s / (C::new(0.0, 2.0 * PI) * interval_sqrt(cp, z))
}

/// `u1(z, t)`, with `z` outside the inner contour.
pub fn u1(cp: &CutProblem, z: C, t: f64, beta: f64, edge: EdgeTerm, inner: &Contour) -> Result<C> {
    check_outside(cp, z)?;
    let sl = TSlice::new(cp, t, inner.nodes);
    Ok(apply_k(cp, &inner_weights(cp, &sl, inner, beta, edge), z))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ROptions {
    pub nodes: usize,
    pub max_nodes: usize,
    /// Number of trapezoid intervals in `t` (a power of two, at least 8).
    pub t_intervals: usize,
    pub contour_tol: f64,
    pub t_tol: f64,
}

impl Default for ROptions {
    fn default() -> Self {
        ROptions { nodes: 200, max_nodes: 3200, t_intervals: 32, contour_tol: 1e-9, t_tol: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RValue {
    pub value: f64,
    pub contour_nodes: usize,
    pub contour_drift: f64,
    pub t_error: f64,
    pub rho_inner: f64,
    pub rho_outer: f64,
}

fn winding(cp: &CutProblem, t: f64, contour: &Contour) -> f64 {
    let pts = contour.points();
    let mut wind = 0.0;
    for k in 0..pts.len() {
        let p0 = cp.p_t(pts[k].0, t);
        let p1 = cp.p_t(pts[(k + 1) % pts.len()].0, t);
        wind += (p1 / p0).arg();
    }
    (wind / (2.0 * PI)).round()
}

/// Largest Bernstein parameter whose ellipse encloses no zero of `P_t` for any
/// `t` node, found by shrinking from the nearest singularity.
fn zero_free_radius(cp: &CutProblem, t_nodes: &[f64]) -> Result<f64> {
    let lim = cp.singularity_radius(t_nodes);
    if !(lim > 1.0 + 1e-6) {
        return Err(Error::Contour(format!("singularity on the interval (Bernstein radius {lim})")));
    }
    let (c, d) = (cp.center(), cp.half_width());
    let mut rho = 1.0 + 0.9 * (lim - 1.0);
    loop {
        let probe = Contour::bernstein(c, d, rho, 512);
        match t_nodes.iter().find(|&&t| winding(cp, t, &probe) != 0.0) {
            None => return Ok(rho),
            Some(&t) => {
                if rho < 1.0 + 1e-3 {
                    return Err(Error::Contour(format!(
                        "zeros of the interpolated density factor approach the interval at t = {t}"
                    )));
                }
                rho = 1.0 + 0.8 * (rho - 1.0);
            }
        }
    }
}

/// Inner and outer contours between the interval and the nearest zero of `P_t`.
fn contours(cp: &CutProblem, t_nodes: &[f64], nodes: usize) -> Result<(Contour, Contour, f64, f64)> {
    let rho = zero_free_radius(cp, t_nodes)?;
    let (r1, r2) = (rho.powf(1.0 / 3.0), rho.powf(2.0 / 3.0));
    let (c, d) = (cp.center(), cp.half_width());
    Ok((Contour::bernstein(c, d, r1, nodes), Contour::bernstein(c, d, r2, nodes), r1, r2))
}

/// `-(1/2 pi i) ∮_L dV u1 dz` at one `t`.
fn r_integrand(cp: &CutProblem, t: f64, beta: f64, edge: EdgeTerm, inner: &Contour, outer_pts: &[(C, C, C)]) -> f64 {
    let sl = TSlice::new(cp, t, inner.nodes);
    let w = inner_weights(cp, &sl, inner, beta, edge);
    let s: C = outer_pts.iter().map(|&(z, dz, dv)| dv * apply_k(cp, &w, z) * dz).sum();
    (-s / C::new(0.0, 2.0 * PI)).re
}

fn r_at_nodes(cp: &CutProblem, beta: f64, edge: EdgeTerm, opts: &ROptions, nodes: usize) -> Result<(f64, f64, f64, f64)> {
    let m = opts.t_intervals;
    if m < 8 || !m.is_power_of_two() {
        return Err(Error::Usage("t grid must have a power-of-two number (>= 8) of intervals".into()));
    }
    let ts: Vec<f64> = (0..=m).map(|j| j as f64 / m as f64).collect();
    let (inner, outer, r1, r2) = contours(cp, &ts, nodes)?;
    let outer_pts: Vec<(C, C, C)> = outer.points().into_iter().map(|(z, dz)| (z, dz, cp.delta_v(z))).collect();
    let vals: Vec<f64> = ts.iter().map(|&t| r_integrand(cp, t, beta, edge, &inner, &outer_pts)).collect();
    let trap = |step: usize| {
        let h = step as f64 / m as f64;
        let mut s = 0.5 * (vals[0] + vals[m]);
        let mut j = step;
        while j < m {
            s += vals[j];
            j += step;
        }
        s * h
    };
    let (t1, t2, t3) = (trap(1), trap(2), trap(4));
    let r1_ = (4.0 * t1 - t2) / 3.0;
    let r2_ = (4.0 * t2 - t3) / 3.0;
    let best = (16.0 * r1_ - r2_) / 15.0;
    Ok((0.5 * beta * best, 0.5 * beta * (best - r1_).abs(), r1, r2))
}

/// Constant `r_beta` of the normalized interval problem `alpha`.
///
/// Double contour quadrature on Bernstein ellipses with the `t`-integral by
/// trapezoid plus Richardson; node counts double until stable.
pub fn r_beta(eq: &EquilibriumMeasure, alpha: usize, beta: f64, edge: EdgeTerm, opts: ROptions) -> Result<RValue> {
    if !(beta > 0.0) {
        return Err(Error::Domain(format!("beta must be positive, got {beta}")));
    }
    let cp = CutProblem::new(eq, alpha);
    let mut nodes = opts.nodes;
    let mut prev = r_at_nodes(&cp, beta, edge, &opts, nodes)?;
    loop {
        if 2 * nodes > opts.max_nodes {
            return Err(Error::accuracy("contour quadrature for the constant term did not settle", f64::NAN));
        }
        let next = r_at_nodes(&cp, beta, edge, &opts, 2 * nodes)?;
        let drift = (next.0 - prev.0).abs();
        if drift <= opts.contour_tol * next.0.abs().max(1e-2) {
            if next.1 > opts.t_tol {
                return Err(Error::accuracy("t-integration of the constant term", next.1));
            }
            return Ok(RValue {
                value: next.0,
                contour_nodes: 2 * nodes,
                contour_drift: drift,
                t_error: next.1,
                rho_inner: next.2,
                rho_outer: next.3,
            });
        }
        prev = next;
        nodes *= 2;
    }
}

/// Closed forms of the constant term at beta = 2 for one interval:
/// `-(1/24) log(P(a)P(b)/P0^2)` and the printed `-(2/(3(b-a)^2)) log(...)`.
pub fn r_beta2_closed_forms(eq: &EquilibriumMeasure, alpha: usize) -> (f64, f64) {
    let cp = CutProblem::new(eq, alpha);
    let pa = cp.p_eff(C::new(cp.a, 0.0)).re;
    let pb = cp.p_eff(C::new(cp.b, 0.0)).re;
    let l = (pa * pb / cp.p0().powi(2)).ln();
    (-l / 24.0, -2.0 / (3.0 * (cp.b - cp.a).powi(2)) * l)
}

/// All terms of the expansion at one `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionReport {
    pub n: u64,
    pub beta: f64,
    pub q: usize,
    pub terms: Vec<Term>,
    pub total: f64,
    pub c_beta: f64,
    pub c1_beta: f64,
    pub log_det_truncation_drift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub term: String,
    pub value: f64,
}

impl ExpansionReport {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.terms.iter().find(|t| t.term == name).map(|t| t.value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionOptions {
    pub edge: EdgeTerm,
    pub r: ROptions,
}

impl Default for PartitionOptions {
    fn default() -> Self {
        PartitionOptions { edge: EdgeTerm::Normalized, r: ROptions::default() }
    }
}

/// Expansion of `log(Q_n/n!)` for the potential of `model`, in the original variable.
///
/// Energy and entropy are mapped back from the rescaled model; the remaining
/// terms are invariant under the affine change of variable.
pub fn log_partition(model: &MultiCutModel, n: u64, beta: f64, opts: PartitionOptions) -> Result<ExpansionReport> {
    if n < 10 {
        return Err(Error::Domain(format!("expansion needs n >= 10, got {n}")));
    }
    if !(beta > 0.0) {
        return Err(Error::Domain(format!("beta must be positive, got {beta}")));
    }
    let nf = n as f64;
    let q = model.q();
    let ls = model.map.scale.ln();
    let energy = model.eq.energy - ls;
    let entropy = model.eq.entropy + ls;
    let cb = c_beta(beta);
    let c1 = c1_beta(beta);
    let masses = model.eq.masses();

    let mut terms = Vec::new();
    let mut push = |name: &str, v: f64| terms.push(Term { term: name.to_string(), value: v });
    push("energy.n2", 0.5 * beta * nf * nf * energy);
    push("universal.f_beta", f_beta(nf, beta) + c1);
    push("entropy.n", nf * (0.5 * beta - 1.0) * (entropy - 1.0 - (2.0 * PI).ln()));
    push("cuts.log_n", cb * (q as f64 - 1.0) * nf.ln());
    push("cuts.constant", (q as f64 - 1.0) * c1);
    let mut r_total = 0.0;
    for alpha in 0..q {
        r_total += r_beta(&model.eq, alpha, beta, opts.edge, opts.r)?.value;
    }
    push("cuts.r_beta", r_total + cb * masses.iter().map(|m| m.ln()).sum::<f64>());
    let log_det = model.log_det()?;
    push("resolvent.log_det", -0.5 * log_det);
    push("resolvent.nu_form", 2.0 / beta * (0.5 * beta - 1.0).powi(2) * model.ltilde_g_nu_nu());
    let theta = if q == 1 {
        0.0
    } else {
        theta_eval(&ThetaParams::for_model(model, n, beta, vec![0.0; q])?)?.0
    };
    push("theta.log_theta0", theta);
    let total = terms.iter().map(|t| t.value).sum();
    Ok(ExpansionReport {
        n,
        beta,
        q,
        terms,
        total,
        c_beta: cb,
        c1_beta: c1,
        log_det_truncation_drift: model.diagnostics.truncation_drift,
    })
}
