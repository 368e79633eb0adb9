//! Central-limit predictions for linear statistics `sum_i h(lambda_i)`.
//!
//! One cut: Gaussian fluctuations with an `O(1)` mean shift. Several cuts: the
//! smooth Gaussian part is corrected by a discrete Gaussian (theta) sum over
//! the numbers of eigenvalues per interval, which makes the law depend on `n`
//! through the fractional parts of `n * mu_alpha`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::chebops::{ChebSeries, MultiCutModel};
use crate::error::{Error, Result};
use crate::potential::TestFunction;

/// Offsets within this distance of 1 are treated as integers.
const OFFSET_SNAP: f64 = 1e-9;
const THETA_DRIFT_TOL: f64 = 1e-10;
const MAX_RADIUS: usize = 256;
/// Tolerance of the Gaussianity test on `I[h]`.
pub const GAUSSIAN_TOL: f64 = 1e-9;

/// Data of one theta sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaParams {
    pub q_matrix: Vec<Vec<f64>>,
    pub beta: f64,
    /// Fractional parts of `n * mu_alpha`.
    pub e: Vec<f64>,
    /// `sum_alpha e_alpha`, an integer.
    pub s: i64,
    /// Linear term, `I[h]`.
    pub x: Vec<f64>,
    /// Tilt, `I[log rho]`.
    pub t: Vec<f64>,
    /// Initial lattice cutoff; raised automatically.
    pub radius: usize,
}

/// Fractional parts of `n * mu` and their (integer) sum.
pub fn offsets(masses: &[f64], n: u64) -> Result<(Vec<f64>, i64)> {
    let e: Vec<f64> = masses
        .iter()
        .map(|&m| {
            let v = n as f64 * m;
            let f = v - v.floor();
            if f > 1.0 - OFFSET_SNAP {
                0.0
            } else {
                f
            }
        })
        .collect();
    let sum: f64 = e.iter().sum();
    let s = sum.round();
    if (sum - s).abs() > 1e-6 {
        return Err(Error::Consistency(format!("offsets sum to {sum}, not an integer; masses do not add up to one")));
    }
    Ok((e, s as i64))
}

impl ThetaParams {
    /// Theta data of a model at `n`, with linear term `x` (zeros for `Theta(0)`).
    pub fn for_model(model: &MultiCutModel, n: u64, beta: f64, x: Vec<f64>) -> Result<Self> {
        let (e, s) = offsets(model.eq.masses(), n)?;
        let q = model.q();
        let q_matrix = (0..q).map(|i| (0..q).map(|j| model.q_matrix.get((i, j)).copied().unwrap_or(0.0)).collect()).collect();
        Ok(ThetaParams { q_matrix, beta, e, s, x, t: model.tilt.clone(), radius: 8 })
    }

    pub fn q(&self) -> usize {
        self.e.len()
    }

    fn validate(&self) -> Result<DMatrix<f64>> {
        let q = self.q();
        if !(self.beta > 0.0) {
            return Err(Error::Domain(format!("beta must be positive, got {}", self.beta)));
        }
        if self.radius < 1 {
            return Err(Error::Domain("lattice cutoff must be at least 1".into()));
        }
        if self.x.len() != q || self.t.len() != q {
            return Err(Error::Invalid("theta vectors have inconsistent lengths".into()));
        }
        if q == 1 {
            return Ok(DMatrix::zeros(1, 1));
        }
        let m = DMatrix::from_fn(q, q, |i, j| self.q_matrix[i][j]);
        let eig = m.clone().symmetric_eigen();
        if !(eig.eigenvalues.min() > 0.0) {
            return Err(Error::Degenerate("theta matrix is not positive definite".into()));
        }
        m.try_inverse().ok_or_else(|| Error::Degenerate("theta matrix not invertible".into()))
    }
}

/// Exponents of all lattice terms with `|k_alpha| <= radius`, in a fixed order,
/// together with `Delta = k - e`.
fn lattice_terms(p: &ThetaParams, q_inv: &DMatrix<f64>, radius: usize) -> Vec<(f64, Vec<f64>)> {
    let q = p.q();
    let r = radius as i64;
    let mut out = Vec::new();
    let mut k = vec![-r; q.saturating_sub(1)];
    loop {
        let last = p.s - k.iter().sum::<i64>();
        if last.abs() <= r {
            let delta: Vec<f64> =
                k.iter().chain(std::iter::once(&last)).zip(&p.e).map(|(&ki, &ei)| ki as f64 - ei).collect();
            let dv = DVector::from_column_slice(&delta);
            let quad = (q_inv * &dv).dot(&dv);
            let lin: f64 = delta.iter().zip(&p.x).map(|(d, x)| d * x).sum();
            let tilt: f64 = delta.iter().zip(&p.t).map(|(d, t)| d * t).sum();
            let expo = -0.5 * p.beta * quad + 0.5 * p.beta * lin + (0.5 * p.beta - 1.0) * tilt;
            out.push((expo, delta));
        }
        // odometer over the free coordinates
        let mut i = 0;
        loop {
            if i == k.len() {
                return out;
            }
            if k[i] < r {
                k[i] += 1;
                break;
            }
            k[i] = -r;
            i += 1;
        }
    }
}

fn log_sum_exp(expos: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = expos.clone().fold(f64::NEG_INFINITY, f64::max);
    max + expos.map(|e| (e - max).exp()).sum::<f64>().ln()
}

/// Lattice terms at a cutoff for which `log Theta` is stable under `R -> R + 4`.
fn converged_terms(p: &ThetaParams) -> Result<(Vec<(f64, Vec<f64>)>, usize)> {
    let q_inv = p.validate()?;
    if p.q() == 1 {
        return Ok((vec![(0.0, vec![0.0])], 0));
    }
    let mut r = p.radius;
    let mut value = log_sum_exp(lattice_terms(p, &q_inv, r).iter().map(|t| t.0));
    loop {
        let next_terms = lattice_terms(p, &q_inv, r + 4);
        let next = log_sum_exp(next_terms.iter().map(|t| t.0));
        let drift = (next - value).abs();
        if drift < THETA_DRIFT_TOL {
            return Ok((next_terms, r + 4));
        }
        r += 4;
        if r > MAX_RADIUS {
            return Err(Error::accuracy("theta lattice sum does not settle", drift));
        }
        value = next;
    }
}

/// `log Theta` and its phase (zero: the sum is positive for real data).
pub fn theta_eval(p: &ThetaParams) -> Result<(f64, f64)> {
    let (terms, _) = converged_terms(p)?;
    Ok((log_sum_exp(terms.iter().map(|t| t.0)), 0.0))
}

/// `log Theta` at a fixed cutoff, without the stability loop.
pub fn theta_eval_at(p: &ThetaParams, radius: usize) -> Result<f64> {
    let q_inv = p.validate()?;
    if p.q() == 1 {
        return Ok(0.0);
    }
    Ok(log_sum_exp(lattice_terms(p, &q_inv, radius).iter().map(|t| t.0)))
}

/// Mean and variance of `(Delta, v)` under the normalized lattice weights.
pub fn theta_moments(p: &ThetaParams, v: &[f64]) -> Result<(f64, f64)> {
    if v.len() != p.q() {
        return Err(Error::Invalid("direction has the wrong length".into()));
    }
    let (terms, _) = converged_terms(p)?;
    let max = terms.iter().fold(f64::NEG_INFINITY, |a, t| a.max(t.0));
    let weights: Vec<f64> = terms.iter().map(|t| (t.0 - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    let proj: Vec<f64> = terms.iter().map(|t| t.1.iter().zip(v).map(|(d, x)| d * x).sum()).collect();
    let mean = weights.iter().zip(&proj).map(|(w, y)| w * y).sum::<f64>() / total;
    let var = weights.iter().zip(&proj).map(|(w, y)| w * (y - mean).powi(2)).sum::<f64>() / total;
    Ok((mean, var))
}

/// Predicted law of a linear statistic at one `(n, beta)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltPrediction {
    pub n: u64,
    pub beta: f64,
    /// Smooth `O(1)` mean correction (excluding the theta part).
    pub mean_shift: f64,
    pub mean_theta: f64,
    pub var_smooth: f64,
    pub var_theta: f64,
    pub gaussian: bool,
    /// `I[h]`, zero for one cut.
    pub i_h: Vec<f64>,
    /// `log Z[t h] = linear t + quadratic t^2 + log Theta(t I[h]) - log Theta(0)`.
    pub linear: f64,
    pub quadratic: f64,
    pub theta: Option<ThetaParams>,
}

impl CltPrediction {
    pub fn mean(&self) -> f64 {
        self.mean_shift + self.mean_theta
    }

    pub fn variance(&self) -> f64 {
        self.var_smooth + self.var_theta
    }

    /// `log Z[t h]`.
    pub fn log_z(&self, t: f64) -> Result<f64> {
        let mut v = self.linear * t + self.quadratic * t * t;
        if let Some(p) = &self.theta {
            let mut shifted = p.clone();
            shifted.x = p.x.iter().map(|x| x * t).collect();
            let mut zero = p.clone();
            zero.x = vec![0.0; p.q()];
            v += theta_eval(&shifted)?.0 - theta_eval(&zero)?.0;
        }
        Ok(v)
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("beta must be positive, got {beta}")))
    }
}

fn resolved_series(model: &MultiCutModel, h: &TestFunction) -> Result<ChebSeries> {
    h.validate()?;
    let s = model.series_of(h);
    if s.tail_flag {
        return Err(Error::accuracy("test function is not resolved by the truncation", f64::NAN));
    }
    Ok(s)
}

/// One-cut prediction: `log Z[h] = (beta/2)[(2/beta - 1)(h, nu) + (D h, h)/4]`.
pub fn onecut_predict(model: &MultiCutModel, h: &TestFunction, beta: f64) -> Result<CltPrediction> {
    check_beta(beta)?;
    if model.q() != 1 {
        return Err(Error::Usage(format!("one-cut prediction requested for a {}-cut model", model.q())));
    }
    let hs = resolved_series(model, h)?;
    let nu_h = model.nu.pair(&hs);
    let dhh = crate::chebops::quad_form_bard(&hs);
    let kappa = 2.0 / beta - 1.0;
    Ok(CltPrediction {
        n: 0,
        beta,
        mean_shift: kappa * nu_h,
        mean_theta: 0.0,
        var_smooth: dhh / beta,
        var_theta: 0.0,
        gaussian: true,
        i_h: vec![0.0],
        linear: 0.5 * beta * kappa * nu_h,
        quadratic: beta * dhh / 8.0,
        theta: None,
    })
}

/// Full prediction for any number of cuts at a given `n`.
pub fn multicut_mean_var(model: &MultiCutModel, h: &TestFunction, n: u64, beta: f64) -> Result<CltPrediction> {
    check_beta(beta)?;
    if model.q() == 1 {
        let mut p = onecut_predict(model, h, beta)?;
        p.n = n;
        return Ok(p);
    }
    let hs = resolved_series(model, h)?;
    let gdhh = model.g_dbar_form(&hs);
    let gnu_h = model.g_nu_pair(&hs);
    let i_h = model.i_of_series(&hs);
    let spread = i_h.iter().fold(f64::NEG_INFINITY, |a, &v| a.max(v)) - i_h.iter().fold(f64::INFINITY, |a, &v| a.min(v));
    let gaussian = spread.abs() <= GAUSSIAN_TOL;
    let theta = ThetaParams::for_model(model, n, beta, i_h.clone())?;
    let (mean_theta, var_theta) = if gaussian {
        (0.0, 0.0)
    } else {
        let mut base = theta.clone();
        base.x = vec![0.0; model.q()];
        theta_moments(&base, &i_h)?
    };
    let kappa = 2.0 / beta - 1.0;
    Ok(CltPrediction {
        n,
        beta,
        mean_shift: kappa * gnu_h,
        mean_theta,
        var_smooth: gdhh / beta,
        var_theta,
        gaussian,
        i_h,
        linear: 0.5 * beta * kappa * gnu_h,
        quadratic: beta * gdhh / 8.0,
        theta: Some(theta),
    })
}

/// `log Z[h]` at `n`.
pub fn multicut_log_z(model: &MultiCutModel, h: &TestFunction, n: u64, beta: f64) -> Result<f64> {
    multicut_mean_var(model, h, n, beta)?.log_z(1.0)
}

/// Polynomial `base + sum_j c_j x^{deg+1+j}` with `(h, psi_alpha) = 0` for every alpha,
/// so that its fluctuations carry no theta correction.
pub fn psi_orthogonal_polynomial(model: &MultiCutModel, base: &[f64]) -> Result<TestFunction> {
    let q = model.q();
    let start = base.len();
    let moments = |coeffs: Vec<f64>| model.psi_moments(&model.series_of(&TestFunction::polynomial(coeffs)));
    let target = moments(base.to_vec());
    let mut a = DMatrix::zeros(q, q);
    for j in 0..q {
        let mut c = vec![0.0; start + j + 1];
        c[start + j] = 1.0;
        for (i, v) in moments(c).into_iter().enumerate() {
            a[(i, j)] = v;
        }
    }
    let rhs = -DVector::from_vec(target);
    let sol = a.lu().solve(&rhs).ok_or_else(|| Error::Degenerate("cannot cancel the charge moments".into()))?;
    let mut coeffs = base.to_vec();
    coeffs.extend(sol.iter());
    Ok(TestFunction::polynomial(coeffs))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(e: Vec<f64>, s: i64) -> ThetaParams {
        ThetaParams {
            q_matrix: vec![vec![0.8, 0.1], vec![0.1, 0.8]],
            beta: 2.0,
            e,
            s,
            x: vec![0.0, 0.0],
            t: vec![0.0, 0.0],
            radius: 8,
        }
    }

    #[test]
    fn single_cut_theta_is_one() {
        let p = ThetaParams {
            q_matrix: vec![vec![1.0]],
            beta: 2.0,
            e: vec![0.0],
            s: 0,
            x: vec![0.3],
            t: vec![0.0],
            radius: 8,
        };
        assert_eq!(theta_eval(&p).unwrap().0, 0.0);
    }

    #[test]
    fn symmetric_theta_exceeds_one_and_has_zero_mean() {
        let p = params(vec![0.0, 0.0], 0);
        assert!(theta_eval(&p).unwrap().0 > 0.0);
        let (m, v) = theta_moments(&p, &[1.0, -1.0]).unwrap();
        assert!(m.abs() < 1e-15 && v > 0.0);
    }

    #[test]
    fn derivative_matches_moments() {
        let mut p = params(vec![0.3, 0.7], 1);
        p.x = vec![0.2, -0.4];
        p.t = vec![0.1, 0.05];
        let v = [1.0, 0.5];
        let (mean, _) = theta_moments(&p, &v).unwrap();
        let h = 1e-5;
        let at = |s: f64| {
            let mut q = p.clone();
            q.x = p.x.iter().zip(&v).map(|(x, d)| x + s * d).collect();
            theta_eval(&q).unwrap().0
        };
        let fd = (at(h) - at(-h)) / (2.0 * h);
        assert!((fd - mean * p.beta / 2.0).abs() < 1e-8);
    }

    #[test]
    fn offsets_sum_to_integer() {
        let (e, s) = offsets(&[0.3, 0.7], 5).unwrap();
        assert_eq!(s, 1);
        assert!((e[0] - 0.5).abs() < 1e-12 && (e[1] - 0.5).abs() < 1e-12);
        assert!(offsets(&[0.3, 0.6], 5).is_err());
        let (e, s) = offsets(&[0.5, 0.5], 4).unwrap();
        assert_eq!((e, s), (vec![0.0, 0.0], 0));
    }
}
