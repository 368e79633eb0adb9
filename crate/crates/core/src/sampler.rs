//! Samplers for the particle density `exp{(beta/2) H}` with
//! `H = -n sum V(x_i) + sum_{i != j} log|x_i - x_j|`, and estimators for
//! linear statistics.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::{Potential, PotentialSpec};

/// Minimum effective sample size accepted by [`empirical_stats`].
pub const MIN_ESS: f64 = 100.0;

/// Metropolis run description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    pub n: usize,
    pub beta: f64,
    pub potential: PotentialSpec,
    /// Total sweeps, burn-in included.
    pub steps: usize,
    pub burn_in: usize,
    pub proposal_scale: f64,
    pub seed: u64,
    pub chains: usize,
    /// Sweeps between retained configurations; defaults to `n`.
    #[serde(default)]
    pub thin: Option<usize>,
    /// Starting configuration; defaults to evenly spaced points on [-2, 2].
    #[serde(default)]
    pub initial: Option<Vec<f64>>,
    /// Points that particles may not cross (pins interval occupations).
    #[serde(default)]
    pub pin_gaps: Vec<f64>,
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.chains == 0 {
            return Err(Error::Invalid("n and chains must be positive".into()));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::Invalid(format!("beta must be positive, got {}", self.beta)));
        }
        if self.burn_in >= self.steps {
            return Err(Error::Invalid(format!("burn_in {} must be below steps {}", self.burn_in, self.steps)));
        }
        if !(self.proposal_scale > 0.0 && self.proposal_scale.is_finite()) {
            return Err(Error::Invalid("proposal_scale must be positive".into()));
        }
        if self.thin == Some(0) {
            return Err(Error::Invalid("thin must be positive".into()));
        }
        if let Some(init) = &self.initial {
            if init.len() != self.n || init.iter().any(|x| !x.is_finite()) {
                return Err(Error::Invalid("initial configuration must hold n finite points".into()));
            }
        }
        Potential::from_spec(&self.potential)?;
        Ok(())
    }

    pub fn thin(&self) -> usize {
        self.thin.unwrap_or(self.n)
    }
}

/// Which sampler produced a batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleSource {
    Metropolis,
    Tridiagonal,
}

/// Retained configurations, grouped by chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleBatch {
    pub source: SampleSource,
    pub n: usize,
    pub beta: f64,
    pub seed: u64,
    pub chains: Vec<Vec<Vec<f64>>>,
    /// Post burn-in acceptance over all chains (1 for exact draws).
    pub acceptance_rate: f64,
    pub chain_acceptance: Vec<f64>,
    /// Proposal scales frozen at the end of burn-in.
    pub proposal_scales: Vec<f64>,
    /// Proposals rejected because they hit another particle exactly.
    pub coincident_rejections: u64,
    /// Proposals rejected because they crossed a pinned gap.
    pub pinned_rejections: u64,
}

impl SampleBatch {
    pub fn len(&self) -> usize {
        self.chains.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Configurations in chain order.
    pub fn configurations(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.chains.iter().flatten()
    }

    /// `sum_i h(x_i)` for every retained configuration, per chain.
    pub fn linear_statistic(&self, h: impl Fn(f64) -> f64 + Sync) -> Vec<Vec<f64>> {
        self.chains.iter().map(|c| c.iter().map(|x| compensated_sum(x.iter().map(|&v| h(v)))).collect()).collect()
    }
}

/// Neumaier summation.
fn compensated_sum(xs: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for x in xs {
        let t = sum + x;
        comp += if sum.abs() >= x.abs() { (sum - t) + x } else { (x - t) + sum };
        sum = t;
    }
    sum + comp
}

struct ChainOutcome {
    samples: Vec<Vec<f64>>,
    accepted: u64,
    proposed: u64,
    scale: f64,
    coincident: u64,
    pinned: u64,
}

fn crosses(gaps: &[f64], x: f64, y: f64) -> bool {
    let (lo, hi) = if x < y { (x, y) } else { (y, x) };
    gaps.iter().any(|&g| lo < g && g < hi)
}

fn run_chain(cfg: &ChainConfig, v: &Potential, chain: usize) -> ChainOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(chain as u64 + 1);
    let n = cfg.n;
    let nf = n as f64;
    let half_beta = 0.5 * cfg.beta;
    let mut x: Vec<f64> = match &cfg.initial {
        Some(init) => init.clone(),
        None if n == 1 => vec![0.0],
        None => (0..n).map(|i| -2.0 + 4.0 * i as f64 / (n - 1) as f64).collect(),
    };
    let thin = cfg.thin();
    let mut scale = cfg.proposal_scale;
    let window = 100usize.div_ceil(n).max(1);
    let (mut win_acc, mut win_prop) = (0u64, 0u64);
    let mut out = ChainOutcome { samples: Vec::new(), accepted: 0, proposed: 0, scale, coincident: 0, pinned: 0 };
    for sweep in 0..cfg.steps {
        let burning = sweep < cfg.burn_in;
        let mut acc = 0u64;
        for i in 0..n {
            let z: f64 = rng.sample(StandardNormal);
            let old = x[i];
            let new = old + scale * z;
            let u: f64 = rng.gen();
            if crosses(&cfg.pin_gaps, old, new) {
                out.pinned += 1;
                continue;
            }
            let mut dlog = 0.0;
            let mut hit = false;
            for (j, &xj) in x.iter().enumerate() {
                if j == i {
                    continue;
                }
                let dn = (new - xj).abs();
                if dn == 0.0 {
                    hit = true;
                    break;
                }
                dlog += dn.ln() - (old - xj).abs().ln();
            }
            if hit {
                out.coincident += 1;
                continue;
            }
            let dh = -nf * (v.value(new) - v.value(old)) + 2.0 * dlog;
            let log_ratio = half_beta * dh;
            if log_ratio >= 0.0 || u.ln() < log_ratio {
                x[i] = new;
                acc += 1;
            }
        }
        if burning {
            win_acc += acc;
            win_prop += n as u64;
            if (sweep + 1) % window == 0 {
                let rate = win_acc as f64 / win_prop as f64;
                if rate < 0.3 {
                    scale *= 0.8;
                } else if rate > 0.5 {
                    scale *= 1.25;
                }
                win_acc = 0;
                win_prop = 0;
            }
        } else {
            out.accepted += acc;
            out.proposed += n as u64;
            if (sweep - cfg.burn_in + 1).is_multiple_of(thin) {
                out.samples.push(x.clone());
            }
        }
    }
    out.scale = scale;
    out
}

/// Single-site Metropolis with Gaussian proposals; the proposal scale adapts
/// during burn-in towards 30-50% acceptance and is frozen afterwards.
pub fn mcmc_sample(cfg: &ChainConfig) -> Result<SampleBatch> {
    cfg.validate()?;
    let v = Potential::from_spec(&cfg.potential)?;
    let outcomes: Vec<ChainOutcome> = (0..cfg.chains).into_par_iter().map(|c| run_chain(cfg, &v, c)).collect();
    let accepted: u64 = outcomes.iter().map(|o| o.accepted).sum();
    let proposed: u64 = outcomes.iter().map(|o| o.proposed).sum();
    Ok(SampleBatch {
        source: SampleSource::Metropolis,
        n: cfg.n,
        beta: cfg.beta,
        seed: cfg.seed,
        acceptance_rate: accepted as f64 / proposed.max(1) as f64,
        chain_acceptance: outcomes.iter().map(|o| o.accepted as f64 / o.proposed.max(1) as f64).collect(),
        proposal_scales: outcomes.iter().map(|o| o.scale).collect(),
        coincident_rejections: outcomes.iter().map(|o| o.coincident).sum(),
        pinned_rejections: outcomes.iter().map(|o| o.pinned).sum(),
        chains: outcomes.into_iter().map(|o| o.samples).collect(),
    })
}

/// `sqrt(a^2 + b^2)`, falling back to `hypot` only where squaring could overflow.
fn pythag(a: f64, b: f64) -> f64 {
    if a.abs().max(b.abs()) < 1e150 {
        (a * a + b * b).sqrt()
    } else {
        a.hypot(b)
    }
}

/// Eigenvalues of the symmetric tridiagonal matrix with diagonal `diag` and
/// off-diagonal `off` (implicit QL with Wilkinson shifts), sorted ascending.
pub fn tridiagonal_eigenvalues(diag: &[f64], off: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    if off.len() + 1 != n {
        return Err(Error::Invalid("off-diagonal must have length n-1".into()));
    }
    let mut d = diag.to_vec();
    let mut e = off.to_vec();
    e.push(0.0);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::NoConvergence { what: "tridiagonal QL iteration".into(), residual: e[l].abs() });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = pythag(g, 1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = pythag(f, g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    d.sort_by(f64::total_cmp);
    Ok(d)
}

fn gbe_draw(n: usize, beta: f64, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    // diagonal N(0, 2/beta), off-diagonal chi_{beta k}/sqrt(beta), then 1/sqrt(n)
    let s = 1.0 / (beta * n as f64).sqrt();
    let diag: Vec<f64> = (0..n)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            z * std::f64::consts::SQRT_2 * s
        })
        .collect();
    let off = (1..n)
        .rev()
        .map(|k| {
            let chi = ChiSquared::new(beta * k as f64).map_err(|e| Error::Invalid(e.to_string()))?;
            Ok(chi.sample(rng).sqrt() * s)
        })
        .collect::<Result<Vec<f64>>>()?;
    tridiagonal_eigenvalues(&diag, &off)
}

/// Exact draw from the Gaussian ensemble with `V = x^2/2`; sorted spectrum.
pub fn gbe_tridiag(n: usize, beta: f64, seed: u64) -> Result<Vec<f64>> {
    if !(beta > 0.0) || n == 0 {
        return Err(Error::Invalid("need beta > 0 and n >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    gbe_draw(n, beta, &mut rng)
}

/// `draws` independent exact draws; draw `k` uses stream `k` of the seed.
pub fn gbe_batch(n: usize, beta: f64, draws: usize, seed: u64) -> Result<SampleBatch> {
    if !(beta > 0.0) || n == 0 {
        return Err(Error::Invalid("need beta > 0 and n >= 1".into()));
    }
    let samples = (0..draws)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            gbe_draw(n, beta, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SampleBatch {
        source: SampleSource::Tridiagonal,
        n,
        beta,
        seed,
        chains: vec![samples],
        acceptance_rate: 1.0,
        chain_acceptance: vec![1.0],
        proposal_scales: vec![],
        coincident_rejections: 0,
        pinned_rejections: 0,
    })
}

/// Moments and generating-function estimates of one linear statistic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalStats {
    pub samples: usize,
    pub mean: f64,
    pub variance: f64,
    pub se_mean: f64,
    pub se_variance: f64,
    pub effective_samples: f64,
    /// Lag-one autocorrelation averaged over chains.
    pub lag1_autocorrelation: f64,
    pub t_grid: Vec<f64>,
    /// `mean_k exp{t beta (N_k - mean)/2}` on the grid.
    pub z_hat: Vec<f64>,
}

/// Default grid `t = -1, -0.9, ..., 1`.
pub fn default_t_grid() -> Vec<f64> {
    (-10..=10).map(|k| k as f64 / 10.0).collect()
}

/// Mean that is exact when all values coincide.
fn stable_mean(xs: &[f64]) -> f64 {
    let x0 = xs[0];
    x0 + xs.iter().map(|x| x - x0).sum::<f64>() / xs.len() as f64
}

/// Batch-means standard error of the mean of `series` (chains kept apart).
fn batch_means_se(series: &[Vec<f64>]) -> f64 {
    let total: usize = series.iter().map(Vec::len).sum();
    let size = ((total as f64).sqrt().floor() as usize).max(1);
    let means: Vec<f64> = series.iter().flat_map(|c| c.chunks_exact(size).map(stable_mean)).collect();
    if means.len() < 2 {
        return f64::INFINITY;
    }
    let m = stable_mean(&means);
    let var = means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (means.len() - 1) as f64;
    (var / means.len() as f64).sqrt()
}

/// Mean, variance and batch-means errors of `sum_i h(x_i)`, plus the
/// empirical generating function on `t_grid`.
pub fn empirical_stats(
    batch: &SampleBatch,
    h: impl Fn(f64) -> f64 + Sync,
    beta: f64,
    t_grid: &[f64],
) -> Result<EmpiricalStats> {
    let series = batch.linear_statistic(h);
    let all: Vec<f64> = series.iter().flatten().copied().collect();
    if all.len() < 2 {
        return Err(Error::InsufficientData(format!("{} retained samples", all.len())));
    }
    let count = all.len() as f64;
    let mean = stable_mean(&all);
    let variance = all.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (count - 1.0);
    let (se_mean, se_variance, ess) = if variance == 0.0 {
        (0.0, 0.0, count)
    } else {
        let se = batch_means_se(&series);
        let sq: Vec<Vec<f64>> = series.iter().map(|c| c.iter().map(|x| (x - mean).powi(2)).collect()).collect();
        (se, batch_means_se(&sq), (variance / (se * se)).min(count))
    };
    if ess < MIN_ESS {
        return Err(Error::InsufficientData(format!("effective sample size {ess:.1} below {MIN_ESS}")));
    }
    let mut lag = Vec::new();
    for c in &series {
        if c.len() > 2 && variance > 0.0 {
            let cov = c.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum::<f64>() / (c.len() - 1) as f64;
            lag.push(cov / variance);
        }
    }
    let lag1 = if lag.is_empty() { 0.0 } else { lag.iter().sum::<f64>() / lag.len() as f64 };
    let z_hat = t_grid
        .iter()
        .map(|&t| all.iter().map(|x| (0.5 * t * beta * (x - mean)).exp()).sum::<f64>() / count)
        .collect();
    Ok(EmpiricalStats {
        samples: all.len(),
        mean,
        variance,
        se_mean,
        se_variance,
        effective_samples: ess,
        lag1_autocorrelation: lag1,
        t_grid: t_grid.to_vec(),
        z_hat,
    })
}

/// Least-squares quadratic `a + b t + c t^2` through `(t, log z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticFit {
    pub constant: f64,
    pub linear: f64,
    pub quadratic: f64,
    /// Largest absolute residual over the grid.
    pub max_residual: f64,
}

pub fn fit_log_z(t: &[f64], z: &[f64]) -> Result<QuadraticFit> {
    if t.len() != z.len() || t.len() < 3 || z.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::Invalid("need at least three positive generating-function values".into()));
    }
    let y: Vec<f64> = z.iter().map(|v| v.ln()).collect();
    let a = nalgebra::DMatrix::from_fn(t.len(), 3, |i, j| t[i].powi(j as i32));
    let rhs = nalgebra::DVector::from_column_slice(&y);
    let sol = a.clone().svd(true, true).solve(&rhs, 1e-14).map_err(|e| Error::Degenerate(e.to_string()))?;
    let max_residual = (a * &sol - rhs).amax();
    Ok(QuadraticFit { constant: sol[0], linear: sol[1], quadratic: sol[2], max_residual })
}

/// Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n1, n2) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n1 - j as f64 / n2).abs());
    }
    let ne = (n1 * n2 / (n1 + n2)).sqrt();
    (d, kolmogorov_q((ne + 0.12 + 0.11 / ne) * d))
}

/// Tail of the Kolmogorov distribution.
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=200 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Largest deviation between a histogram of `values` on `bins` equal bins of
/// `[lo, hi]` and the bin averages of a reference density, given as the mass
/// function `mass(a, b)`.
pub fn histogram_sup_distance(values: &[f64], lo: f64, hi: f64, bins: usize, mass: impl Fn(f64, f64) -> f64) -> f64 {
    let w = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in values {
        if v >= lo && v < hi {
            counts[(((v - lo) / w) as usize).min(bins - 1)] += 1;
        }
    }
    let total = values.len() as f64;
    counts
        .iter()
        .enumerate()
        .map(|(k, &c)| {
            let a = lo + k as f64 * w;
            (c as f64 / (total * w) - mass(a, a + w) / w).abs()
        })
        .fold(0.0, f64::max)
}
