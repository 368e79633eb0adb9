//! Chebyshev-spectral realization of the logarithmic-kernel operator algebra.
//!
//! On each interval `[c-d, c+d]` with `x = c + d cos(phi)`:
//! * functions are expanded as `sum f_k T_k`,
//! * densities as `sum v_k T_k / |X_alpha|^{1/2}`, `|X_alpha|^{1/2} = d sin(phi)`,
//! * the pairing is `int v f = pi v_0 f_0 + (pi/2) sum_{k>=1} v_k f_k`.
//!
//! In this basis the diagonal log-kernel blocks and the finite-Hilbert-type
//! operator `D` are diagonal; the cross-interval blocks are dense but decay
//! geometrically in both indices.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::equilibrium::{EquilibriumMeasure, ScaleMap, Support};
use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::potential::{clenshaw, TestFunction};
use crate::spectral;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SeriesKind {
    Function,
    Density,
}

/// Per-interval Chebyshev coefficient vectors of common length `m + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChebSeries {
    pub kind: SeriesKind,
    pub intervals: Vec<(f64, f64)>,
    pub coeffs: Vec<Vec<f64>>,
    /// Set when the input did not show spectral decay.
    pub tail_flag: bool,
}

const TAIL_TOL: f64 = 1e-10;

impl ChebSeries {
    pub fn zeros(kind: SeriesKind, intervals: &[(f64, f64)], m: usize) -> Self {
        ChebSeries { kind, intervals: intervals.to_vec(), coeffs: vec![vec![0.0; m + 1]; intervals.len()], tail_flag: false }
    }

    pub fn m(&self) -> usize {
        self.coeffs[0].len() - 1
    }

    pub fn q(&self) -> usize {
        self.intervals.len()
    }

    fn geometry(&self, alpha: usize) -> (f64, f64) {
        let (a, b) = self.intervals[alpha];
        (0.5 * (a + b), 0.5 * (b - a))
    }

    /// Value at `x` inside interval `alpha` (densities need `x` interior).
    pub fn eval_on(&self, alpha: usize, x: f64) -> f64 {
        let (c, d) = self.geometry(alpha);
        let t = (x - c) / d;
        let s = clenshaw(&self.coeffs[alpha], t);
        match self.kind {
            SeriesKind::Function => s,
            SeriesKind::Density => s / (d * (1.0 - t * t).sqrt()),
        }
    }

    /// Value at `x`, zero off the intervals.
    pub fn eval(&self, x: f64) -> f64 {
        match self.intervals.iter().position(|&(a, b)| a <= x && x <= b) {
            Some(alpha) => self.eval_on(alpha, x),
            None => 0.0,
        }
    }

    pub fn to_vector(&self) -> DVector<f64> {
        DVector::from_iterator(self.q() * (self.m() + 1), self.coeffs.iter().flatten().copied())
    }

    pub fn from_vector(kind: SeriesKind, intervals: &[(f64, f64)], v: &DVector<f64>) -> Self {
        let q = intervals.len();
        let len = v.len() / q;
        ChebSeries {
            kind,
            intervals: intervals.to_vec(),
            coeffs: (0..q).map(|a| v.rows(a * len, len).iter().copied().collect()).collect(),
            tail_flag: false,
        }
    }

    /// Truncate or zero-pad to degree `m`.
    pub fn resized(&self, m: usize) -> Self {
        let mut out = self.clone();
        for c in &mut out.coeffs {
            c.resize(m + 1, 0.0);
        }
        out
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        for c in out.coeffs.iter_mut().flatten() {
            *c *= s;
        }
        out
    }

    pub fn plus(&self, other: &ChebSeries) -> Self {
        assert_eq!(self.kind, other.kind);
        let mut out = self.clone();
        for (a, b) in out.coeffs.iter_mut().zip(&other.coeffs) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        out
    }

    /// `int v f` between a density and a function on the same intervals.
    pub fn pair(&self, other: &ChebSeries) -> f64 {
        assert_ne!(self.kind, other.kind, "pairing needs one density and one function");
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| {
                a.iter()
                    .zip(b)
                    .enumerate()
                    .map(|(k, (x, y))| if k == 0 { PI * x * y } else { 0.5 * PI * x * y })
                    .sum::<f64>()
            })
            .sum()
    }

    /// Integral of a density over interval `alpha`.
    pub fn mass(&self, alpha: usize) -> f64 {
        assert_eq!(self.kind, SeriesKind::Density);
        PI * self.coeffs[alpha][0]
    }
}

/// Function coefficients of `f` on every interval of `support`.
pub fn cheb_transform(f: impl Fn(f64) -> f64, support: &Support, m: usize) -> ChebSeries {
    let intervals = support.intervals().to_vec();
    let mut tail_flag = false;
    let coeffs = (0..support.q())
        .map(|alpha| {
            let c = spectral::chebyshev_coeffs(support.center(alpha), support.half_width(alpha), m, &f);
            if m >= 8 && spectral::tail_ratio(&c, 2) > TAIL_TOL {
                tail_flag = true;
            }
            c
        })
        .collect();
    ChebSeries { kind: SeriesKind::Function, intervals, coeffs, tail_flag }
}

/// Density coefficients from the smooth part `(alpha, x) -> v(x) |X_alpha(x)|^{1/2}`.
pub fn density_transform(smooth: impl Fn(usize, f64) -> f64, support: &Support, m: usize) -> ChebSeries {
    let mut s = cheb_transform(|_| 0.0, support, m);
    s.kind = SeriesKind::Density;
    for alpha in 0..support.q() {
        let c = spectral::chebyshev_coeffs(support.center(alpha), support.half_width(alpha), m, |x| smooth(alpha, x));
        if m >= 8 && spectral::tail_ratio(&c, 2) > TAIL_TOL {
            s.tail_flag = true;
        }
        s.coeffs[alpha] = c;
    }
    s
}

/// Function series of a test function on the support.
pub fn test_function_series(h: &TestFunction, support: &Support, m: usize) -> ChebSeries {
    cheb_transform(|x| h.eval(x), support, m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OperatorRole {
    LHat,
    LTilde,
    DBar,
    G,
}

/// Dense block matrix indexed by `(alpha, k; alpha', k')`, row-major blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    pub role: OperatorRole,
    pub q: usize,
    pub m: usize,
    pub matrix: DMatrix<f64>,
}

impl OperatorMatrix {
    pub fn index(&self, alpha: usize, k: usize) -> usize {
        alpha * (self.m + 1) + k
    }

    pub fn entry(&self, alpha: usize, k: usize, beta: usize, l: usize) -> f64 {
        self.matrix[(self.index(alpha, k), self.index(beta, l))]
    }

    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.matrix * v
    }
}

fn block_dim(support: &Support, m: usize) -> usize {
    support.q() * (m + 1)
}

/// Diagonal blocks of the log kernel: densities to functions.
pub fn lhat(support: &Support, m: usize) -> OperatorMatrix {
    let n = block_dim(support, m);
    let mut mat = DMatrix::zeros(n, n);
    for alpha in 0..support.q() {
        let base = alpha * (m + 1);
        mat[(base, base)] = PI * (0.5 * support.half_width(alpha)).ln();
        for k in 1..=m {
            mat[(base + k, base + k)] = -PI / k as f64;
        }
    }
    OperatorMatrix { role: OperatorRole::LHat, q: support.q(), m, matrix: mat }
}

/// Cross-interval blocks of the log kernel.
///
/// Column `(beta, l)` is the function `x -> int_0^pi log|x - c_beta - d_beta cos phi| cos(l phi) dphi`
/// on interval `alpha`, expanded on a grid twice as fine and truncated.
pub fn ltilde(support: &Support, m: usize) -> OperatorMatrix {
    let q = support.q();
    let n = block_dim(support, m);
    let mut mat = DMatrix::zeros(n, n);
    let fine = 2 * m;
    let angles = spectral::lobatto_angles(fine);
    for alpha in 0..q {
        let (c, d) = (support.center(alpha), support.half_width(alpha));
        for beta in 0..q {
            if beta == alpha {
                continue;
            }
            let (cb, db) = (support.center(beta), support.half_width(beta));
            let samples: Vec<Vec<f64>> =
                angles.iter().map(|phi| spectral::log_moments(m, c + d * phi.cos(), cb, db)).collect();
            for l in 0..=m {
                let column: Vec<f64> = samples.iter().map(|s| s[l]).collect();
                let coeffs = spectral::dct_lobatto(&column);
                for k in 0..=m {
                    mat[(alpha * (m + 1) + k, beta * (m + 1) + l)] = coeffs[k];
                }
            }
        }
    }
    OperatorMatrix { role: OperatorRole::LTilde, q, m, matrix: mat }
}

/// `D` on each interval, functions to densities: `T_k -> (k/pi) T_k/|X|^{1/2}`.
///
/// Its pairing form is symmetric, so the symmetrized operator coincides with it.
pub fn dbar(support: &Support, m: usize) -> OperatorMatrix {
    let n = block_dim(support, m);
    let mut mat = DMatrix::zeros(n, n);
    for alpha in 0..support.q() {
        for k in 1..=m {
            let i = alpha * (m + 1) + k;
            mat[(i, i)] = k as f64 / PI;
        }
    }
    OperatorMatrix { role: OperatorRole::DBar, q: support.q(), m, matrix: mat }
}

/// Which blocks of `L` to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LBlocks {
    Diagonal,
    OffDiagonal,
    Full,
}

/// `L v` for a density series `v`.
pub fn apply_l(v: &ChebSeries, blocks: LBlocks) -> Result<ChebSeries> {
    if v.kind != SeriesKind::Density {
        return Err(Error::Usage("the log kernel acts on densities".into()));
    }
    let support = Support::new(v.intervals.clone())?;
    let m = v.m();
    let x = v.to_vector();
    let y = match blocks {
        LBlocks::Diagonal => lhat(&support, m).apply(&x),
        LBlocks::OffDiagonal => ltilde(&support, m).apply(&x),
        LBlocks::Full => lhat(&support, m).apply(&x) + ltilde(&support, m).apply(&x),
    };
    Ok(ChebSeries::from_vector(SeriesKind::Function, &v.intervals, &y))
}

/// `D_alpha h` on interval `alpha` only (zero elsewhere).
pub fn apply_d(h: &ChebSeries, alpha: usize) -> Result<ChebSeries> {
    if h.kind != SeriesKind::Function {
        return Err(Error::Usage("D acts on functions".into()));
    }
    let mut out = ChebSeries::zeros(SeriesKind::Density, &h.intervals, h.m());
    for (k, c) in h.coeffs[alpha].iter().enumerate() {
        out.coeffs[alpha][k] = k as f64 / PI * c;
    }
    Ok(out)
}

/// `D_sigma h` on all intervals.
pub fn apply_d_all(h: &ChebSeries) -> Result<ChebSeries> {
    let mut out = ChebSeries::zeros(SeriesKind::Density, &h.intervals, h.m());
    for alpha in 0..h.q() {
        out = out.plus(&apply_d(h, alpha)?);
    }
    Ok(out)
}

/// `(D h, h) = sum_alpha (1/2) sum_k k h_k^2`.
pub fn quad_form_bard(h: &ChebSeries) -> f64 {
    h.coeffs
        .iter()
        .map(|c| 0.5 * c.iter().enumerate().map(|(k, v)| k as f64 * v * v).sum::<f64>())
        .sum()
}

/// The signed mean-zero measure giving the `O(1)` mean correction, one block per interval.
///
/// On interval `alpha` with effective factor `P_alpha > 0` it acts as
/// `h -> sum_j h_j [1/2 (j even, j >= 2) - j lp_j / 4]`, where `lp` are the
/// Chebyshev coefficients of `log P_alpha`. This is the endpoint average minus
/// the arcsine average minus half of `(D log P_alpha, h)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NuFunctional {
    pub intervals: Vec<(f64, f64)>,
    pub log_p: Vec<Vec<f64>>,
}

impl NuFunctional {
    pub fn from_equilibrium(eq: &EquilibriumMeasure, m: usize) -> Result<Self> {
        let s = &eq.support;
        let mut log_p = Vec::new();
        for alpha in 0..s.q() {
            let (c, d) = (s.center(alpha), s.half_width(alpha));
            let mu = eq.masses()[alpha];
            let sign = s.branch_sign(alpha);
            let bad = std::cell::Cell::new(false);
            let lp = spectral::chebyshev_coeffs(c, d, 2 * m, |x| {
                let v = sign * eq.p.eval(x) * s.abs_sqrt_x_others(alpha, x) / mu;
                if v <= 0.0 {
                    bad.set(true);
                }
                v.ln()
            });
            if bad.get() {
                return Err(Error::accuracy("effective density factor vanishes on the support", 0.0));
            }
            let tail = spectral::tail_ratio(&lp, 4);
            if tail > 1e-9 {
                return Err(Error::accuracy("log of the density factor is not resolved; zeros too close to the support", tail));
            }
            log_p.push(lp[..=m].to_vec());
        }
        Ok(NuFunctional { intervals: s.intervals().to_vec(), log_p })
    }

    /// `(nu_alpha, T_j)` on interval `alpha`.
    pub fn moment(&self, alpha: usize, j: usize) -> f64 {
        let endpoint = if j >= 2 && j.is_multiple_of(2) { 0.5 } else { 0.0 };
        endpoint - j as f64 * self.log_p[alpha].get(j).copied().unwrap_or(0.0) / 4.0
    }

    /// `(nu, h)` for a function series.
    pub fn pair(&self, h: &ChebSeries) -> f64 {
        h.coeffs
            .iter()
            .enumerate()
            .map(|(alpha, c)| c.iter().enumerate().map(|(j, v)| v * self.moment(alpha, j)).sum::<f64>())
            .sum()
    }

    /// Density coefficients of `nu` truncated at degree `m`.
    pub fn density_series(&self, m: usize) -> ChebSeries {
        let mut s = ChebSeries::zeros(SeriesKind::Density, &self.intervals, m);
        for alpha in 0..self.intervals.len() {
            for j in 1..=m {
                s.coeffs[alpha][j] = self.moment(alpha, j) / (0.5 * PI);
            }
        }
        s
    }
}

/// Function series of `log rho` per interval with the edge singularity expanded exactly.
pub fn log_density_series(eq: &EquilibriumMeasure, m: usize) -> ChebSeries {
    let s = &eq.support;
    let mut out = ChebSeries::zeros(SeriesKind::Function, s.intervals(), m);
    let ls = spectral::log_sin_coeffs(m);
    for alpha in 0..s.q() {
        let (c, d) = (s.center(alpha), s.half_width(alpha));
        let sign = s.branch_sign(alpha);
        let smooth = spectral::chebyshev_coeffs(c, d, m, |x| {
            (sign * eq.p.eval(x) * s.abs_sqrt_x_others(alpha, x) * d / (2.0 * PI)).ln()
        });
        for k in 0..=m {
            out.coeffs[alpha][k] = smooth[k] + ls[k];
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelOptions {
    pub m: usize,
    pub max_m: usize,
    pub drift_tol: f64,
}

impl Default for ModelOptions {
    fn default() -> Self {
        ModelOptions { m: 64, max_m: 512, drift_tol: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDiagnostics {
    /// `max |(L psi_a)_b + delta_ab|` including non-constant modes.
    pub psi_residual: f64,
    /// Largest change of `G` and `Q` entries under `M -> 2M`.
    pub truncation_drift: f64,
    pub nu_mass: f64,
    pub q_min_eigenvalue: f64,
    pub gram_condition: f64,
}

/// Truncated operator model of a solved equilibrium problem.
///
/// Built on the rescaled measure (support inside `[-0.95, 0.95]`); test
/// functions given in the original variable are mapped through `map`.
#[derive(Debug, Clone)]
pub struct MultiCutModel {
    pub eq: EquilibriumMeasure,
    pub map: ScaleMap,
    pub m: usize,
    pub lhat: OperatorMatrix,
    pub ltilde: OperatorMatrix,
    pub dbar: OperatorMatrix,
    pub g: OperatorMatrix,
    pub psi: Vec<ChebSeries>,
    pub psi_poly: Vec<Polynomial>,
    pub q_matrix: DMatrix<f64>,
    pub q_inv: DMatrix<f64>,
    pub nu: NuFunctional,
    pub log_rho: ChebSeries,
    /// `log(rho_alpha / mu_alpha)` per interval.
    pub log_rho_normalized: ChebSeries,
    /// `I[log rho]`.
    pub tilt: Vec<f64>,
    pub diagnostics: ModelDiagnostics,
}

impl MultiCutModel {
    /// Rescale, build at the default truncation and double until stable.
    pub fn build(eq: &EquilibriumMeasure, opts: ModelOptions) -> Result<Self> {
        let (scaled, map) = eq.rescale();
        let mut m = opts.m;
        let mut model = Self::build_at(&scaled, map, m)?;
        if scaled.q() == 1 {
            return Ok(model);
        }
        loop {
            if 2 * m > opts.max_m {
                return Err(Error::accuracy("operator truncation did not stabilize", model.diagnostics.truncation_drift));
            }
            let finer = Self::build_at(&scaled, map, 2 * m)?;
            let drift = model.drift_against(&finer);
            model.diagnostics.truncation_drift = drift;
            if drift < opts.drift_tol {
                return Ok(model);
            }
            model = finer;
            m *= 2;
        }
    }

    fn drift_against(&self, finer: &MultiCutModel) -> f64 {
        let mut drift = 0.0f64;
        let q = self.eq.q();
        for a in 0..q {
            for k in 0..=self.m {
                for b in 0..q {
                    for l in 0..=self.m {
                        drift = drift.max((self.g.entry(a, k, b, l) - finer.g.entry(a, k, b, l)).abs());
                    }
                }
            }
        }
        let dq = (&self.q_matrix - &finer.q_matrix).abs().max();
        drift.max(dq)
    }

    /// Build at a fixed truncation on an already rescaled measure.
    pub fn build_at(eq: &EquilibriumMeasure, map: ScaleMap, m: usize) -> Result<Self> {
        let s = &eq.support;
        let q = s.q();
        let n = block_dim(s, m);
        let lh = lhat(s, m);
        let lt = ltilde(s, m);
        let db = dbar(s, m);
        let nu = NuFunctional::from_equilibrium(eq, m)?;
        let log_rho = log_density_series(eq, m);
        let mut log_rho_normalized = log_rho.clone();
        for alpha in 0..q {
            log_rho_normalized.coeffs[alpha][0] -= eq.masses()[alpha].ln();
        }
        let nu_mass: f64 = (0..q).map(|a| nu.moment(a, 0)).sum();
        let mut diagnostics = ModelDiagnostics {
            psi_residual: 0.0,
            truncation_drift: 0.0,
            nu_mass,
            q_min_eigenvalue: f64::NAN,
            gram_condition: f64::NAN,
        };
        if q == 1 {
            let id = OperatorMatrix { role: OperatorRole::G, q, m, matrix: DMatrix::identity(n, n) };
            return Ok(MultiCutModel {
                eq: eq.clone(),
                map,
                m,
                lhat: lh,
                ltilde: lt,
                dbar: db,
                g: id,
                psi: Vec::new(),
                psi_poly: Vec::new(),
                q_matrix: DMatrix::zeros(0, 0),
                q_inv: DMatrix::zeros(0, 0),
                nu,
                log_rho,
                log_rho_normalized,
                tilt: vec![0.0],
                diagnostics,
            });
        }

        let full_l = &lh.matrix + &lt.matrix;
        // densities x^j / X^{1/2}(x + i0) restricted to the cuts
        let basis: Vec<ChebSeries> = (0..q)
            .map(|j| {
                density_transform(
                    |alpha, x| x.powi(j as i32) * s.branch_sign(alpha) / s.abs_sqrt_x_others(alpha, x),
                    s,
                    m,
                )
            })
            .collect();
        let images: Vec<DVector<f64>> = basis.iter().map(|b| &full_l * b.to_vector()).collect();
        let mut c = DMatrix::zeros(q, q);
        for (j, img) in images.iter().enumerate() {
            for beta in 0..q {
                c[(beta, j)] = img[beta * (m + 1)];
            }
        }
        let sv = c.clone().svd(false, false).singular_values;
        diagnostics.gram_condition = sv.max() / sv.min();
        if !(sv.min() > 1e-12 * sv.max()) {
            return Err(Error::Degenerate("charge-redistribution system is singular".into()));
        }
        let lu = c.clone().lu();
        let mut psi = Vec::with_capacity(q);
        let mut psi_poly = Vec::with_capacity(q);
        let mut psi_images = Vec::with_capacity(q);
        for alpha in 0..q {
            let mut rhs = DVector::zeros(q);
            rhs[alpha] = -1.0;
            let p = lu.solve(&rhs).ok_or_else(|| Error::Degenerate("singular charge system".into()))?;
            let mut v = DVector::zeros(n);
            let mut img = DVector::zeros(n);
            for j in 0..q {
                v += basis[j].to_vector() * p[j];
                img += &images[j] * p[j];
            }
            let mut res = 0.0f64;
            for beta in 0..q {
                let base = beta * (m + 1);
                let target = if beta == alpha { -1.0 } else { 0.0 };
                let mut r = (img[base] - target).abs();
                for k in 1..=m {
                    r += img[base + k].abs();
                }
                res = res.max(r);
            }
            diagnostics.psi_residual = diagnostics.psi_residual.max(res);
            psi.push(ChebSeries::from_vector(SeriesKind::Density, s.intervals(), &v));
            psi_poly.push(Polynomial::new(p.iter().copied().collect()));
            psi_images.push(ChebSeries::from_vector(SeriesKind::Function, s.intervals(), &img));
        }
        let mut qm = DMatrix::zeros(q, q);
        for a in 0..q {
            for b in 0..q {
                qm[(a, b)] = -psi[b].pair(&psi_images[a]);
            }
        }
        let qs = (&qm + qm.transpose()) * 0.5;
        let eig = qs.clone().symmetric_eigen();
        diagnostics.q_min_eigenvalue = eig.eigenvalues.min();
        if !(diagnostics.q_min_eigenvalue > 0.0) {
            return Err(Error::Degenerate(format!(
                "period matrix is not positive definite (min eigenvalue {:.3e})",
                diagnostics.q_min_eigenvalue
            )));
        }
        let q_inv = qs.clone().try_inverse().ok_or_else(|| Error::Degenerate("period matrix not invertible".into()))?;

        let a = DMatrix::identity(n, n) - &db.matrix * &lt.matrix;
        let g = a.try_inverse().ok_or_else(|| Error::Degenerate("truncated resolvent is singular".into()))?;
        let g = OperatorMatrix { role: OperatorRole::G, q, m, matrix: g };

        let mut model = MultiCutModel {
            eq: eq.clone(),
            map,
            m,
            lhat: lh,
            ltilde: lt,
            dbar: db,
            g,
            psi,
            psi_poly,
            q_matrix: qs,
            q_inv,
            nu,
            log_rho,
            log_rho_normalized,
            tilt: Vec::new(),
            diagnostics,
        };
        model.tilt = model.i_of_series(&model.log_rho.clone());
        Ok(model)
    }

    pub fn q(&self) -> usize {
        self.eq.q()
    }

    pub fn support(&self) -> &Support {
        &self.eq.support
    }

    /// Function series (on the model support) of a test function given in the original variable.
    pub fn series_of(&self, h: &TestFunction) -> ChebSeries {
        let mapped = h.affine_image(self.map.scale, self.map.shift);
        test_function_series(&mapped, &self.eq.support, self.m)
    }

    /// `(h, psi_alpha)` for each alpha.
    pub fn psi_moments(&self, h: &ChebSeries) -> Vec<f64> {
        self.psi.iter().map(|p| p.pair(h)).collect()
    }

    /// `I[h] = Q^{-1} (h, psi)` for a function series on the model support.
    pub fn i_of_series(&self, h: &ChebSeries) -> Vec<f64> {
        if self.q() == 1 {
            return vec![0.0];
        }
        let v = DVector::from_vec(self.psi_moments(h));
        (&self.q_inv * v).iter().copied().collect()
    }

    pub fn i_functional(&self, h: &TestFunction) -> Vec<f64> {
        self.i_of_series(&self.series_of(h))
    }

    /// `(G D h, h)`.
    pub fn g_dbar_form(&self, h: &ChebSeries) -> f64 {
        let dh = self.dbar.apply(&h.to_vector());
        let gdh = self.g.apply(&dh);
        let dens = ChebSeries::from_vector(SeriesKind::Density, &h.intervals, &gdh);
        dens.pair(h)
    }

    /// `(G nu, h)`.
    pub fn g_nu_pair(&self, h: &ChebSeries) -> f64 {
        if self.q() == 1 {
            return self.nu.pair(h);
        }
        let nu = self.nu.density_series(self.m).to_vector();
        let gnu = self.g.apply(&nu);
        ChebSeries::from_vector(SeriesKind::Density, &h.intervals, &gnu).pair(h)
    }

    /// `(L~ G nu, nu)`.
    pub fn ltilde_g_nu_nu(&self) -> f64 {
        if self.q() == 1 {
            return 0.0;
        }
        let nu = self.nu.density_series(self.m);
        let gnu = self.g.apply(&nu.to_vector());
        let lgnu = self.ltilde.apply(&gnu);
        nu.pair(&ChebSeries::from_vector(SeriesKind::Function, &nu.intervals, &lgnu))
    }

    /// `log det(1 - D L~)` of the truncated matrix.
    pub fn log_det(&self) -> Result<f64> {
        if self.q() == 1 {
            return Ok(0.0);
        }
        let n = self.lhat.matrix.nrows();
        let a = DMatrix::identity(n, n) - &self.dbar.matrix * &self.ltilde.matrix;
        let det = a.lu().determinant();
        if !(det > 0.0) {
            return Err(Error::Degenerate(format!("Fredholm determinant is not positive ({det})")));
        }
        Ok(det.ln())
    }

    /// JSON-friendly summary of the model.
    pub fn report(&self) -> ModelReport {
        let n = self.g.matrix.nrows();
        ModelReport {
            support: self.eq.support.intervals().to_vec(),
            scale: self.map,
            m: self.m,
            q_matrix: (0..self.q_matrix.nrows())
                .map(|i| (0..self.q_matrix.ncols()).map(|j| self.q_matrix[(i, j)]).collect())
                .collect(),
            psi_polynomials: self.psi_poly.iter().map(|p| p.coeffs().to_vec()).collect(),
            tilt: self.tilt.clone(),
            g_row_major: self.g.matrix.transpose().iter().copied().collect(),
            g_dim: n,
            diagnostics: self.diagnostics.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub support: Vec<(f64, f64)>,
    pub scale: ScaleMap,
    pub m: usize,
    pub q_matrix: Vec<Vec<f64>>,
    pub psi_polynomials: Vec<Vec<f64>>,
    pub tilt: Vec<f64>,
    pub g_dim: usize,
    pub g_row_major: Vec<f64>,
    pub diagnostics: ModelDiagnostics,
}
