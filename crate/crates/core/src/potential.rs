//! Potentials, test functions and the quadrature primitives shared by the
//! rest of the crate.

use std::f64::consts::PI;

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::Polynomial;

/// Structured description of a potential or a polynomial test function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum PotentialSpec {
    Polynomial { coeffs: Vec<f64> },
}

/// Confining polynomial potential.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    poly: Polynomial,
    derivative: Polynomial,
    analyticity_margin: f64,
}

impl Potential {
    /// Even degree at least two with a positive leading coefficient.
    pub fn polynomial(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Invalid("potential coefficients must be finite".into()));
        }
        let poly = Polynomial::new(coeffs);
        let deg = poly.degree();
        if deg < 2 || deg % 2 == 1 || poly.leading() <= 0.0 {
            return Err(Error::Invalid(format!(
                "potential must have even degree >= 2 and positive leading coefficient (degree {deg}, leading {})",
                poly.leading()
            )));
        }
        let derivative = poly.derivative();
        Ok(Potential { poly, derivative, analyticity_margin: f64::INFINITY })
    }

    pub fn from_spec(spec: &PotentialSpec) -> Result<Self> {
        match spec {
            PotentialSpec::Polynomial { coeffs } => Potential::polynomial(coeffs.clone()),
        }
    }

    pub fn spec(&self) -> PotentialSpec {
        PotentialSpec::Polynomial { coeffs: self.poly.coeffs().to_vec() }
    }

    /// The standard Gaussian potential `x^2/2`.
    pub fn gaussian() -> Self {
        Potential::polynomial(vec![0.0, 0.0, 0.5]).unwrap()
    }

    /// Restrict trusted evaluation to the strip `|Im z| <= margin`.
    pub fn with_margin(mut self, margin: f64) -> Self {
        self.analyticity_margin = margin;
        self
    }

    pub fn analyticity_margin(&self) -> f64 {
        self.analyticity_margin
    }

    pub fn poly(&self) -> &Polynomial {
        &self.poly
    }

    pub fn derivative_poly(&self) -> &Polynomial {
        &self.derivative
    }

    pub fn value(&self, x: f64) -> f64 {
        self.poly.eval(x)
    }

    pub fn deriv(&self, x: f64) -> f64 {
        self.derivative.eval(x)
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        if z.im.abs() > self.analyticity_margin {
            return Err(Error::Domain(format!(
                "evaluation at {z} outside analyticity strip of half-width {}",
                self.analyticity_margin
            )));
        }
        Ok(self.poly.eval_complex(z))
    }

    /// The potential seen after the substitution `x = (y - shift)/scale`.
    pub fn affine_image(&self, scale: f64, shift: f64) -> Potential {
        let poly = self.poly.compose_affine(1.0 / scale, -shift / scale);
        let derivative = poly.derivative();
        Potential { poly, derivative, analyticity_margin: self.analyticity_margin * scale }
    }

    /// Growth condition check on `|x| <= 10*scale`.
    ///
    /// Additive constants cancel in the particle density, so the check asks
    /// that `V(x) - 2(1+eps)log(1+|x|)` be non-decreasing in `|x|` on the
    /// outer half of the sampled range, which makes `V + const` dominate the
    /// logarithm from there on.
    pub fn growth_check(&self, scale: f64) -> bool {
        let eps = 0.1;
        let g = |x: f64| self.value(x) - 2.0 * (1.0 + eps) * (1.0 + x.abs()).ln();
        let n = 2000;
        for sign in [-1.0, 1.0] {
            let mut prev = f64::NEG_INFINITY;
            for i in 0..=n {
                let r = scale * (5.0 + 5.0 * i as f64 / n as f64);
                let v = g(sign * r);
                if v < prev {
                    return false;
                }
                prev = v;
            }
        }
        true
    }
}

/// Test function for linear statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum TestFunction {
    Polynomial { coeffs: Vec<f64> },
    /// Per-interval Chebyshev expansions in `x = (y - c)/d`.
    Chebyshev { intervals: Vec<(f64, f64)>, coeffs: Vec<Vec<f64>> },
}

impl TestFunction {
    pub fn polynomial(coeffs: Vec<f64>) -> Self {
        TestFunction::Polynomial { coeffs }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            TestFunction::Polynomial { coeffs } => {
                if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
                    return Err(Error::Invalid("test function coefficients must be finite and non-empty".into()));
                }
            }
            TestFunction::Chebyshev { intervals, coeffs } => {
                if intervals.is_empty() || intervals.len() != coeffs.len() {
                    return Err(Error::Invalid("chebyshev test function needs one coefficient list per interval".into()));
                }
                for (a, b) in intervals {
                    if !(a < b) {
                        return Err(Error::Invalid(format!("bad interval [{a}, {b}]")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            TestFunction::Polynomial { coeffs } => {
                coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
            }
            TestFunction::Chebyshev { intervals, coeffs } => {
                let i = nearest_interval(intervals, x);
                let (a, b) = intervals[i];
                clenshaw(&coeffs[i], (2.0 * x - a - b) / (b - a))
            }
        }
    }

    /// `j`-th derivative at `x`.
    pub fn derivative_at(&self, j: usize, x: f64) -> f64 {
        match self {
            TestFunction::Polynomial { coeffs } => {
                let mut p = Polynomial::new(coeffs.clone());
                for _ in 0..j {
                    p = p.derivative();
                }
                p.eval(x)
            }
            TestFunction::Chebyshev { intervals, coeffs } => {
                let i = nearest_interval(intervals, x);
                let (a, b) = intervals[i];
                let half = 0.5 * (b - a);
                let mut c = coeffs[i].clone();
                for _ in 0..j {
                    c = chebyshev_derivative(&c);
                }
                clenshaw(&c, (2.0 * x - a - b) / (b - a)) / half.powi(j as i32)
            }
        }
    }

    /// Sup norms of derivatives of orders 0..=6 over the enlarged intervals.
    pub fn smoothness_norms(&self, intervals: &[(f64, f64)], eps: f64) -> [f64; 7] {
        let mut out = [0.0; 7];
        for (j, slot) in out.iter_mut().enumerate() {
            for &(a, b) in intervals {
                let n = 400;
                for i in 0..=n {
                    let x = a - eps + (b - a + 2.0 * eps) * i as f64 / n as f64;
                    *slot = f64::max(*slot, self.derivative_at(j, x).abs());
                }
            }
        }
        out
    }

    /// The function `y -> h((y - shift)/scale)`.
    pub fn affine_image(&self, scale: f64, shift: f64) -> TestFunction {
        match self {
            TestFunction::Polynomial { coeffs } => TestFunction::Polynomial {
                coeffs: Polynomial::new(coeffs.clone())
                    .compose_affine(1.0 / scale, -shift / scale)
                    .coeffs()
                    .to_vec(),
            },
            TestFunction::Chebyshev { intervals, coeffs } => {
                let mut iv = Vec::new();
                let mut cs = Vec::new();
                for ((a, b), c) in intervals.iter().zip(coeffs) {
                    let (x, y) = (scale * a + shift, scale * b + shift);
                    if x < y {
                        iv.push((x, y));
                        cs.push(c.clone());
                    } else {
                        // orientation flips: T_k(-x) = (-1)^k T_k(x)
                        iv.push((y, x));
                        cs.push(c.iter().enumerate().map(|(k, v)| if k % 2 == 0 { *v } else { -v }).collect());
                    }
                }
                TestFunction::Chebyshev { intervals: iv, coeffs: cs }
            }
        }
    }
}

fn nearest_interval(intervals: &[(f64, f64)], x: f64) -> usize {
    let dist = |&(a, b): &(f64, f64)| if x < a { a - x } else if x > b { x - b } else { 0.0 };
    let mut best = 0;
    for i in 1..intervals.len() {
        if dist(&intervals[i]) < dist(&intervals[best]) {
            best = i;
        }
    }
    best
}

/// Evaluate `sum c_k T_k(x)`.
pub fn clenshaw(c: &[f64], x: f64) -> f64 {
    let (mut b1, mut b2) = (0.0, 0.0);
    for &ck in c.iter().skip(1).rev() {
        let b0 = 2.0 * x * b1 - b2 + ck;
        b2 = b1;
        b1 = b0;
    }
    c.first().copied().unwrap_or(0.0) + x * b1 - b2
}

/// Coefficients of the derivative (in `x`) of a Chebyshev series.
pub fn chebyshev_derivative(c: &[f64]) -> Vec<f64> {
    let n = c.len();
    if n <= 1 {
        return vec![0.0];
    }
    let mut d = vec![0.0; n + 1];
    for k in (0..n - 1).rev() {
        d[k] = d[k + 2] + 2.0 * (k + 1) as f64 * c[k + 1];
    }
    d[0] *= 0.5;
    d.truncate(n - 1);
    d
}

/// Gauss-Chebyshev rules on one interval `[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChebyshevRule {
    pub nodes: usize,
}

impl ChebyshevRule {
    pub fn new(nodes: usize) -> Self {
        ChebyshevRule { nodes: nodes.max(1) }
    }

    /// `int_a^b f(x) / sqrt((x-a)(b-x)) dx`.
    pub fn integrate_arcsine(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let (c, d) = (0.5 * (a + b), 0.5 * (b - a));
        let n = self.nodes;
        let s: f64 = (0..n)
            .map(|j| f(c + d * (PI * (j as f64 + 0.5) / n as f64).cos()))
            .sum();
        PI * s / n as f64
    }

    /// `int_a^b f(x) sqrt((x-a)(b-x)) dx`.
    pub fn integrate_sqrt(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let (c, d) = (0.5 * (a + b), 0.5 * (b - a));
        let n = self.nodes;
        let s: f64 = (1..=n)
            .map(|j| {
                let th = PI * j as f64 / (n + 1) as f64;
                th.sin().powi(2) * f(c + d * th.cos())
            })
            .sum();
        PI * d * d * s / (n + 1) as f64
    }
}

/// Closed contour descriptor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ContourShape {
    Ellipse { center: Complex64, semi_x: f64, semi_y: f64 },
    Rectangle { x0: f64, x1: f64, y0: f64, y1: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Contour {
    pub shape: ContourShape,
    pub nodes: usize,
}

impl Contour {
    pub fn ellipse(center: f64, semi_x: f64, semi_y: f64, nodes: usize) -> Self {
        Contour {
            shape: ContourShape::Ellipse { center: Complex64::new(center, 0.0), semi_x, semi_y },
            nodes,
        }
    }

    pub fn circle(center: Complex64, radius: f64, nodes: usize) -> Self {
        Contour { shape: ContourShape::Ellipse { center, semi_x: radius, semi_y: radius }, nodes }
    }

    /// Ellipse with semi-axes 1.5x the half-length of `[a, b]`, 512 nodes.
    pub fn default_for(a: f64, b: f64) -> Self {
        let d = 0.5 * (b - a);
        Contour::ellipse(0.5 * (a + b), 1.5 * d, 1.5 * d, 512)
    }

    /// Bernstein ellipse `c + d (w + 1/w)/2`, `|w| = rho`, around `[c-d, c+d]`.
    pub fn bernstein(c: f64, d: f64, rho: f64, nodes: usize) -> Self {
        Contour::ellipse(c, 0.5 * d * (rho + 1.0 / rho), 0.5 * d * (rho - 1.0 / rho), nodes)
    }

    pub fn with_nodes(&self, nodes: usize) -> Self {
        Contour { shape: self.shape, nodes }
    }

    /// Nodes and the weights `dz` of the positively oriented rule.
    pub fn points(&self) -> Vec<(Complex64, Complex64)> {
        match self.shape {
            ContourShape::Ellipse { center, semi_x, semi_y } => {
                let n = self.nodes;
                let h = 2.0 * PI / n as f64;
                (0..n)
                    .map(|j| {
                        let (s, c) = (j as f64 * h).sin_cos();
                        let z = center + Complex64::new(semi_x * c, semi_y * s);
                        let dz = Complex64::new(-semi_x * s, semi_y * c) * h;
                        (z, dz)
                    })
                    .collect()
            }
            ContourShape::Rectangle { x0, x1, y0, y1 } => {
                let per = (self.nodes / 4).max(2);
                let gl = GaussLegendre::new(per).expect("at least two nodes");
                let corners = [
                    Complex64::new(x0, y0),
                    Complex64::new(x1, y0),
                    Complex64::new(x1, y1),
                    Complex64::new(x0, y1),
                ];
                let mut out = Vec::with_capacity(4 * per);
                for i in 0..4 {
                    let (p, q) = (corners[i], corners[(i + 1) % 4]);
                    for &(x, w) in gl.as_node_weight_pairs() {
                        let t = 0.5 * (x + 1.0);
                        out.push((p + (q - p) * t, (q - p) * (0.5 * w)));
                    }
                }
                out
            }
        }
    }
}

/// Trapezoid (ellipse) or Gauss-Legendre (rectangle) approximation of `∮ g dz`.
pub fn contour_sum(g: impl Fn(Complex64) -> Complex64, contour: &Contour) -> Complex64 {
    contour.points().into_iter().map(|(z, dz)| g(z) * dz).sum()
}

/// `∮ g dz`, checked against the rule with half as many nodes.
pub fn contour_integral(g: impl Fn(Complex64) -> Complex64, contour: &Contour) -> Result<Complex64> {
    let fine = contour_sum(&g, contour);
    let coarse = contour_sum(&g, &contour.with_nodes(contour.nodes / 2));
    let drift = (fine - coarse).norm() / fine.norm().max(1.0);
    if !drift.is_finite() || drift > 1e-10 {
        return Err(Error::accuracy("contour integral not converged under node doubling", drift));
    }
    Ok(fine)
}

/// Principal value `PV int_a^b f(m)/(x0 - m) dm`.
///
/// Works in the angle variable `m = c + d cos(phi)`: the smooth difference
/// quotient is integrated by Gauss-Legendre in `phi` (which also absorbs
/// square-root endpoint behavior of `f`) and the subtracted singular part
/// is integrated exactly.
pub fn pv_integral(f: impl Fn(f64) -> f64, a: f64, b: f64, x0: f64, nodes: usize) -> Result<f64> {
    if !(x0 > a && x0 < b) {
        return Err(Error::Domain(format!("principal value point {x0} not strictly inside [{a}, {b}]")));
    }
    let (c, d) = (0.5 * (a + b), 0.5 * (b - a));
    let f0 = f(x0);
    let gl = GaussLegendre::new(nodes.max(2)).expect("at least two nodes");
    let mut s = 0.0;
    for &(t, w) in gl.as_node_weight_pairs() {
        let phi = 0.5 * PI * (t + 1.0);
        let m = c + d * phi.cos();
        let diff = x0 - m;
        if diff != 0.0 {
            s += w * (f(m) - f0) / diff * d * phi.sin();
        }
    }
    s *= 0.5 * PI;
    Ok(s + f0 * ((x0 - a) / (b - x0)).ln())
}

/// `int_a^b f` by double-exponential (tanh-sinh) quadrature, for integrands
/// with integrable endpoint singularities. Refines the step until successive
/// estimates agree to `tol` (relative to `max(1, |I|)`).
pub fn tanh_sinh(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    let width = b - a;
    let node = |t: f64| -> Option<(f64, f64)> {
        let u = 0.5 * PI * t.sinh();
        let w = 0.5 * PI * t.cosh() / u.cosh().powi(2) * 0.5 * width;
        // endpoint offsets computed without cancellation
        let x = if u < 0.0 { a + width / (1.0 + (-2.0 * u).exp()) } else { b - width / (1.0 + (2.0 * u).exp()) };
        (x > a && x < b && w > 0.0).then_some((x, w))
    };
    let t_max = 4.5;
    let mut h = 1.0;
    let mut sum = 0.0;
    let mut t = -t_max;
    while t <= t_max + 1e-12 {
        if let Some((x, w)) = node(t) {
            sum += w * f(x);
        }
        t += h;
    }
    let mut estimate = sum * h;
    for _ in 0..12 {
        // add the midpoints of the current grid
        let mut t = -t_max + 0.5 * h;
        while t < t_max {
            if let Some((x, w)) = node(t) {
                sum += w * f(x);
            }
            t += h;
        }
        h *= 0.5;
        let next = sum * h;
        if (next - estimate).abs() <= tol * next.abs().max(1.0) {
            return Ok(next);
        }
        estimate = next;
    }
    Err(Error::NoConvergence { what: "tanh-sinh quadrature".into(), residual: f64::NAN })
}
