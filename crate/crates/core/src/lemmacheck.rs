//! Numerical certificates for the smoothed log kernel (positivity and gap of
//! its Fourier transform) and for the decay of cross-interval Chebyshev
//! coefficients of the log kernel.

use std::f64::consts::PI;

use gauss_quad::legendre::GaussLegendre;
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficients of the quartic smoothing polynomial (x^4, x^3, x^2).
pub const A0_COEFFS: [f64; 3] = [0.75, -8.0 / 3.0, 3.0];

/// Switch point for the asymptotic tail of the Fourier integral.
const ASYMPTOTIC_FROM: f64 = 50.0;

fn a0(x: f64) -> f64 {
    let [c4, c3, c2] = A0_COEFFS;
    x * x * (c2 + x * (c3 + x * c4))
}

/// m-th derivative of the smoothing polynomial.
fn a0_deriv(x: f64, m: usize) -> f64 {
    let [c4, c3, c2] = A0_COEFFS;
    match m {
        0 => a0(x),
        1 => 4.0 * c4 * x.powi(3) + 3.0 * c3 * x * x + 2.0 * c2 * x,
        2 => 12.0 * c4 * x * x + 6.0 * c3 * x + 2.0 * c2,
        3 => 24.0 * c4 * x + 6.0 * c3,
        4 => 24.0 * c4,
        _ => 0.0,
    }
}

/// Log kernel with its singularity at the origin replaced, below the knot
/// `d`, by a quartic matching the value and the first three derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelA {
    pub d: f64,
}

impl KernelA {
    pub fn new(d: f64) -> Result<Self> {
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::Invalid(format!("knot d must be positive, got {d}")));
        }
        Ok(KernelA { d })
    }

    /// Inner branch, valid as an analytic function near the knot.
    fn inner(&self, lambda: f64, m: usize) -> f64 {
        let x = lambda / self.d;
        if m == 0 {
            -self.d.ln() - a0(x) + a0(1.0)
        } else {
            -a0_deriv(x, m) / self.d.powi(m as i32)
        }
    }

    /// Outer branch `-log lambda` and its derivatives.
    fn outer(&self, lambda: f64, m: usize) -> f64 {
        if m == 0 {
            -lambda.ln()
        } else {
            let fact: f64 = (1..m).map(|j| j as f64).product();
            let sign = if m % 2 == 1 { -1.0 } else { 1.0 };
            sign * fact / lambda.powi(m as i32)
        }
    }

    /// Jumps (outer minus inner) of the value and derivatives 1..=4 at the knot.
    pub fn knot_jumps(&self) -> Vec<f64> {
        (0..=4).map(|m| self.outer(self.d, m) - self.inner(self.d, m)).collect()
    }

    /// Jumps of orders 0..=2 from central differences of each branch.
    pub fn knot_jumps_fd(&self, step: f64) -> Vec<f64> {
        let d = self.d;
        let fd = |f: &dyn Fn(f64) -> f64, m: usize| match m {
            0 => f(d),
            1 => (f(d + step) - f(d - step)) / (2.0 * step),
            _ => (f(d + step) - 2.0 * f(d) + f(d - step)) / (step * step),
        };
        (0..=2).map(|m| fd(&|x| self.outer(x, 0), m) - fd(&|x| self.inner(x, 0), m)).collect()
    }
}

/// The smoothed kernel at `lambda >= 0`.
pub fn kernel_a(lambda: f64, k: &KernelA) -> Result<f64> {
    if !(lambda >= 0.0) {
        return Err(Error::Domain(format!("kernel argument must be non-negative, got {lambda}")));
    }
    Ok(if lambda <= k.d { k.inner(lambda, 0) } else { k.outer(lambda, 0) })
}

/// `int_x^inf e^{it} t^{-m} dt` by its asymptotic series (large `x`).
fn oscillatory_tail(x: f64, m: i32) -> Complex64 {
    let i = Complex64::i();
    let mut term = Complex64::new(1.0, 0.0) / x.powi(m);
    let mut sum = term;
    let mut prev = term.norm();
    for j in 0..60 {
        term *= -i * (m + j) as f64 / x;
        let size = term.norm();
        if size > prev {
            break;
        }
        sum += term;
        prev = size;
        if size < 1e-22 * sum.norm() {
            break;
        }
    }
    i * Complex64::from_polar(1.0, x) * sum
}

/// `(2t + t cos t - 3 sin t)/t^5`, by its Taylor series near the origin.
fn positive_integrand(t: f64) -> f64 {
    if t < 0.5 {
        let t2 = t * t;
        let mut sum = 0.0;
        let mut pow = 1.0;
        let mut fact = 120.0;
        for j in 2..14 {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign * (2 * j - 2) as f64 / fact * pow;
            pow *= t2;
            fact *= ((2 * j + 2) * (2 * j + 3)) as f64;
        }
        sum
    } else {
        (2.0 * t + t * t.cos() - 3.0 * t.sin()) / t.powi(5)
    }
}

fn panel_integral(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let gl = GaussLegendre::new(24).expect("24-point rule");
    let panels = ((b - a) / 0.5).ceil().max(1.0) as usize;
    let h = (b - a) / panels as f64;
    (0..panels).map(|p| gl.integrate(a + p as f64 * h, a + (p + 1) as f64 * h, &f)).sum()
}

/// `k a^(k) = 24 int_{kd}^inf (2t + t cos t - 3 sin t)/t^5 dt`, the
/// half-line sine transform of the smoothed kernel.
pub fn k_times_fourier_a(kd: f64) -> f64 {
    let x = kd.max(0.0);
    let far = x.max(ASYMPTOTIC_FROM);
    let tail = 2.0 / (3.0 * far.powi(3)) + oscillatory_tail(far, 4).re - 3.0 * oscillatory_tail(far, 5).im;
    let near = if x < ASYMPTOTIC_FROM { panel_integral(positive_integrand, x, ASYMPTOTIC_FROM) } else { 0.0 };
    24.0 * (near + tail)
}

/// The same quantity in the form `16/x^3 - 24 sin x/x^4 + 24 int_x^inf sin t/t^5`
/// (cancels badly for small `x`; used as a cross-check).
pub fn k_times_fourier_a_by_parts(kd: f64) -> f64 {
    let x = kd;
    let far = x.max(ASYMPTOTIC_FROM);
    let mut s5 = oscillatory_tail(far, 5).im;
    if x < ASYMPTOTIC_FROM {
        s5 += panel_integral(|t| t.sin() / t.powi(5), x, ASYMPTOTIC_FROM);
    }
    16.0 / x.powi(3) - 24.0 * x.sin() / x.powi(4) + 24.0 * s5
}

/// Fourier transform of the smoothed kernel at frequency `k > 0`.
pub fn fourier_a(k: f64, ka: &KernelA) -> Result<f64> {
    if !(k > 0.0) {
        return Err(Error::Domain(format!("frequency must be positive, got {k}")));
    }
    Ok(k_times_fourier_a(k * ka.d) / k)
}

/// Positivity and gap of the transform relative to the log kernel's `pi/k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub d: f64,
    pub k_min: f64,
    pub k_max: f64,
    pub grid_points: usize,
    pub min_fourier: f64,
    /// `1 - sup_k a^(k)/(pi/k)` on the refined grid.
    pub delta1: f64,
    /// The same on a grid ten times coarser.
    pub delta1_coarse: f64,
    pub k_at_sup: f64,
    /// Whether the supremum sits at an end of the grid.
    pub sup_at_grid_edge: bool,
    /// `k^4 a^(k)` at the largest grid frequency (bounded tail).
    pub tail_constant: f64,
}

fn gap_on_grid(ka: &KernelA, k_min: f64, k_max: f64, points: usize) -> (f64, f64, bool, f64) {
    let ratio = |k: f64| k_times_fourier_a(k * ka.d) / PI;
    let ks: Vec<f64> =
        (0..points).map(|i| k_min * (k_max / k_min).powf(i as f64 / (points - 1) as f64)).collect();
    let vals: Vec<f64> = ks.iter().map(|&k| ratio(k)).collect();
    let (imax, _) = vals.iter().enumerate().fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    let min_fourier = ks.iter().zip(&vals).map(|(k, r)| r * PI / k).fold(f64::INFINITY, f64::min);
    let edge = imax == 0 || imax == points - 1;
    if edge {
        return (vals[imax], ks[imax], true, min_fourier);
    }
    // golden-section search in log k around the grid maximum
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (ks[imax - 1].ln(), ks[imax + 1].ln());
    let f = |u: f64| ratio(u.exp());
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..100 {
        if f1 > f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    let u = 0.5 * (lo + hi);
    (f(u).max(vals[imax]), u.exp(), false, min_fourier)
}

/// Scan `k` on a log grid, refine the supremum, and report the gap.
pub fn fourier_gap(ka: &KernelA, k_min: f64, k_max: f64, points: usize) -> Result<GapReport> {
    if !(k_min > 0.0 && k_max > k_min) || points < 3 {
        return Err(Error::Invalid("need 0 < k_min < k_max and at least 3 grid points".into()));
    }
    let (sup, k_at_sup, edge, min_fourier) = gap_on_grid(ka, k_min, k_max, points);
    let (sup_coarse, ..) = gap_on_grid(ka, k_min, k_max, (points / 10).max(3));
    Ok(GapReport {
        d: ka.d,
        k_min,
        k_max,
        grid_points: points,
        min_fourier,
        delta1: 1.0 - sup,
        delta1_coarse: 1.0 - sup_coarse,
        k_at_sup,
        sup_at_grid_edge: edge,
        tail_constant: k_max.powi(4) * fourier_a(k_max, ka)?,
    })
}

/// Centre and half-width of `[a - eps, b + eps]`.
fn enlarged(iv: (f64, f64), eps: f64) -> (f64, f64) {
    (0.5 * (iv.0 + iv.1), 0.5 * (iv.1 - iv.0) + eps)
}

fn check_disjoint(a: (f64, f64), b: (f64, f64), eps: f64) -> Result<()> {
    if !(a.0 < a.1 && b.0 < b.1 && eps >= 0.0) {
        return Err(Error::Invalid("intervals must be ordered and eps non-negative".into()));
    }
    if a.1 + eps >= b.0 - eps && b.1 + eps >= a.0 - eps {
        return Err(Error::Domain(format!("enlarged intervals {a:?} and {b:?} (eps {eps}) overlap")));
    }
    Ok(())
}

/// Joukowski inverse `z - sgn(z) sqrt(z^2 - 1)`, of modulus below one.
pub fn zeta(z: f64) -> f64 {
    z - z.signum() * (z * z - 1.0).sqrt()
}

/// `int_0^pi log|lambda - c - d cos x| cos(kx) dx` for `lambda` off the
/// interval, in closed form: `pi log(d/(2|zeta|))` at `k = 0` and
/// `-pi zeta^k / k` otherwise, with `z = (lambda - c)/d`.
pub fn log_mode(lambda: f64, c: f64, d: f64, k: usize) -> Result<f64> {
    let z = (lambda - c) / d;
    if z.abs() <= 1.0 {
        return Err(Error::Domain(format!("point {lambda} lies on the interval")));
    }
    let w = zeta(z);
    Ok(if k == 0 { PI * (0.5 * d / w.abs()).ln() } else { -PI * w.powi(k as i32) / k as f64 })
}

/// The single-integral expression with prefactor `d/(4k)`; differs from
/// [`log_mode`] by the constant factor `-d/(2 pi)`.
pub fn log_mode_with_quarter_prefactor(lambda: f64, c: f64, d: f64, k: usize) -> f64 {
    let z = (lambda - c) / d;
    let w = zeta(z);
    let root = z.signum() * (z * z - 1.0).sqrt();
    d * (w.powi(k as i32 - 1) - w.powi(k as i32 + 1)) / (4.0 * k as f64 * root)
}

/// [`log_mode`] by the midpoint rule in the angle.
pub fn log_mode_quadrature(lambda: f64, c: f64, d: f64, k: usize, nodes: usize) -> f64 {
    let h = PI / nodes as f64;
    (0..nodes)
        .map(|i| {
            let x = (i as f64 + 0.5) * h;
            (lambda - c - d * x.cos()).abs().ln() * (k as f64 * x).cos()
        })
        .sum::<f64>()
        * h
}

/// Cross-interval coefficients `L[k][k'] = int int log|lambda - mu| T_k T_k'`
/// against the Chebyshev weights of the two enlarged intervals, for
/// `k, k' <= kmax`, by a tensor midpoint rule.
pub fn cross_coeff_matrix(a: (f64, f64), b: (f64, f64), kmax: usize, eps: f64, nodes: usize) -> Result<DMatrix<f64>> {
    check_disjoint(a, b, eps)?;
    let (ca, da) = enlarged(a, eps);
    let (cb, db) = enlarged(b, eps);
    let h = PI / nodes as f64;
    let ang: Vec<f64> = (0..nodes).map(|i| (i as f64 + 0.5) * h).collect();
    let kernel = DMatrix::from_fn(nodes, nodes, |i, j| (cb + db * ang[j].cos() - ca - da * ang[i].cos()).abs().ln());
    let basis = DMatrix::from_fn(kmax + 1, nodes, |k, i| (k as f64 * ang[i]).cos() * h);
    Ok(&basis * kernel * basis.transpose())
}

/// The same coefficients with the inner integral in closed form.
pub fn cross_coeff_semi_analytic(a: (f64, f64), b: (f64, f64), kmax: usize, eps: f64, nodes: usize) -> Result<DMatrix<f64>> {
    check_disjoint(a, b, eps)?;
    let (ca, da) = enlarged(a, eps);
    let (cb, db) = enlarged(b, eps);
    let h = PI / nodes as f64;
    let mut out = DMatrix::zeros(kmax + 1, kmax + 1);
    for j in 0..nodes {
        let y = (j as f64 + 0.5) * h;
        let lambda = cb + db * y.cos();
        for k in 0..=kmax {
            let inner = log_mode(lambda, ca, da, k)?;
            for kp in 0..=kmax {
                out[(k, kp)] += inner * (kp as f64 * y).cos() * h;
            }
        }
    }
    Ok(out)
}

/// Single coefficient, by the tensor rule.
pub fn cross_coeff(a: (f64, f64), b: (f64, f64), k: usize, kp: usize, eps: f64) -> Result<f64> {
    let m = cross_coeff_matrix(a, b, k.max(kp), eps, 256)?;
    Ok(m[(k, kp)])
}

/// Least-squares line through `(s, log max_{k + k' = s} |L[k][k']|)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
    /// `2 log|zeta|` at the nearest point of the opposite interval, the
    /// bound on the rate.
    pub bound_slope: f64,
}

pub fn decay_fit(a: (f64, f64), b: (f64, f64), eps: f64, kmax: usize, floor: f64) -> Result<DecayFit> {
    let m = cross_coeff_semi_analytic(a, b, kmax, eps, 256)?;
    // envelope: the largest coefficient for each total degree k + k'
    let mut pts = Vec::new();
    for total in 2..=2 * kmax {
        let v = (1..=kmax)
            .filter(|&k| total > k && total - k <= kmax)
            .map(|k| m[(k, total - k)].abs())
            .fold(0.0, f64::max);
        if v > floor {
            pts.push((total as f64, v.ln()));
        }
    }
    if pts.len() < 3 {
        return Err(Error::InsufficientData(format!("{} coefficients above {floor:e}", pts.len())));
    }
    let np = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / np;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / np;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let (ca, da) = enlarged(a, eps);
    let (cb, db) = enlarged(b, eps);
    let near_a = if cb > ca { cb - db } else { cb + db };
    let near_b = if ca > cb { ca - da } else { ca + da };
    let bound = zeta((near_a - ca) / da).abs().ln().max(zeta((near_b - cb) / db).abs().ln());
    Ok(DecayFit {
        slope,
        intercept: my - slope * mx,
        r_squared: sxy * sxy / (sxx * syy),
        points: pts.len(),
        bound_slope: bound,
    })
}

/// Worst disagreement between closed forms and quadrature: relative where
/// the reference exceeds `floor`, absolute elsewhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossCheck {
    pub kmax: usize,
    pub max_relative: f64,
    pub max_absolute_below_floor: f64,
    pub compared: usize,
    pub floor: f64,
}

fn accumulate(check: &mut CrossCheck, reference: f64, other: f64) {
    let diff = (reference - other).abs();
    if reference.abs() > check.floor {
        check.max_relative = check.max_relative.max(diff / reference.abs());
        check.compared += 1;
    } else {
        check.max_absolute_below_floor = check.max_absolute_below_floor.max(diff);
    }
}

/// Closed-form modes against the midpoint rule at points of the opposite
/// interval, and the semi-analytic matrix against the tensor rule.
pub fn cross_check(a: (f64, f64), b: (f64, f64), eps: f64, kmax: usize) -> Result<CrossCheck> {
    check_disjoint(a, b, eps)?;
    let floor = 1e-6;
    let mut check = CrossCheck { kmax, max_relative: 0.0, max_absolute_below_floor: 0.0, compared: 0, floor };
    let (ca, da) = enlarged(a, eps);
    let (cb, db) = enlarged(b, eps);
    for j in 0..=16 {
        let lambda = cb + db * (PI * j as f64 / 16.0).cos();
        for k in 0..=kmax {
            let exact = log_mode(lambda, ca, da, k)?;
            accumulate(&mut check, exact, log_mode_quadrature(lambda, ca, da, k, 2048));
        }
    }
    let semi = cross_coeff_semi_analytic(a, b, kmax, eps, 512)?;
    let full = cross_coeff_matrix(a, b, kmax, eps, 512)?;
    for (s, f) in semi.iter().zip(full.iter()) {
        accumulate(&mut check, *s, *f);
    }
    Ok(check)
}

/// Everything the lemma checks report, in one record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaCertificate {
    pub delta1: f64,
    pub min_fourier: f64,
    pub decay_slope: f64,
    pub knot_jumps: Vec<f64>,
    pub gap: GapReport,
    pub decay: DecayFit,
    pub cross_check: CrossCheck,
    pub positive_on_grid: bool,
}

/// Inputs of [`certificate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LemmaOptions {
    pub d: f64,
    pub k_min: f64,
    pub k_max: f64,
    pub grid_points: usize,
    pub intervals: [(f64, f64); 2],
    pub eps: f64,
    pub decay_kmax: usize,
    /// Closely spaced pair used for the closed-form cross-check, where the
    /// coefficients stay well above rounding up to `check_kmax`.
    pub check_intervals: [(f64, f64); 2],
    pub check_kmax: usize,
}

impl Default for LemmaOptions {
    fn default() -> Self {
        let (r2, r6) = (2f64.sqrt(), 6f64.sqrt());
        LemmaOptions {
            d: 1.0,
            k_min: 1e-3,
            k_max: 1e3,
            grid_points: 10_000,
            intervals: [(-r6, -r2), (r2, r6)],
            eps: 0.1,
            decay_kmax: 6,
            check_intervals: [(-1.0, -0.01), (0.01, 1.0)],
            check_kmax: 30,
        }
    }
}

pub fn certificate(opts: &LemmaOptions) -> Result<LemmaCertificate> {
    let ka = KernelA::new(opts.d)?;
    let gap = fourier_gap(&ka, opts.k_min, opts.k_max, opts.grid_points)?;
    let decay = decay_fit(opts.intervals[0], opts.intervals[1], opts.eps, opts.decay_kmax, 1e-13)?;
    let cross = cross_check(opts.check_intervals[0], opts.check_intervals[1], 0.0, opts.check_kmax)?;
    Ok(LemmaCertificate {
        delta1: gap.delta1,
        min_fourier: gap.min_fourier,
        decay_slope: decay.slope,
        knot_jumps: ka.knot_jumps(),
        positive_on_grid: gap.min_fourier > 0.0,
        gap,
        decay,
        cross_check: cross,
    })
}
