//! One function per mode; each returns the artifacts it wrote.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use loggas::chebops::{ModelOptions, MultiCutModel};
use loggas::equilibrium::{EquilibriumMeasure, Support};
use loggas::fluctuation::{multicut_mean_var, theta_eval, theta_moments, CltPrediction, ThetaParams};
use loggas::lemmacheck::certificate;
use loggas::partition::{log_partition, PartitionOptions, ROptions};
use loggas::potential::{Potential, PotentialSpec, TestFunction};
use loggas::sampler::{
    default_t_grid, empirical_stats, fit_log_z, gbe_batch, mcmc_sample, ChainConfig, EmpiricalStats, SampleBatch,
};
use serde::Serialize;
use serde_json::json;

use crate::config::{Mode, NSpec, RunConfig, SamplerKind};
use crate::json;

#[derive(Debug)]
pub enum CmdError {
    Core { context: String, error: loggas::Error },
    Config(String),
    Io(String),
}

impl std::fmt::Display for CmdError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CmdError::Core { context, error } => write!(f, "{context}: {error}"),
            CmdError::Config(m) => write!(f, "configuration: {m}"),
            CmdError::Io(m) => write!(f, "output: {m}"),
        }
    }
}

impl CmdError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CmdError::Core { error, .. } => error.exit_code(),
            CmdError::Config(_) | CmdError::Io(_) => 1,
        }
    }
}

type Result<T> = std::result::Result<T, CmdError>;

fn ctx<T>(context: &str, r: loggas::Result<T>) -> Result<T> {
    r.map_err(|error| CmdError::Core { context: context.to_string(), error })
}

const DEFAULT_BETA: f64 = 2.0;
const DEFAULT_N: u64 = 100;

struct Run<'a> {
    cfg: &'a RunConfig,
    out: PathBuf,
    written: Vec<PathBuf>,
}

impl Run<'_> {
    fn beta(&self) -> f64 {
        self.cfg.beta.unwrap_or(DEFAULT_BETA)
    }

    fn ns(&self) -> Vec<u64> {
        self.cfg.n.unwrap_or(NSpec::One(DEFAULT_N)).values()
    }

    fn seed(&self) -> u64 {
        self.cfg.seed.unwrap_or(0)
    }

    fn potential_spec(&self) -> Result<&PotentialSpec> {
        self.cfg.potential.as_ref().ok_or_else(|| CmdError::Config("field `potential` is required for this mode".into()))
    }

    fn h(&self) -> Result<TestFunction> {
        let h = match &self.cfg.h {
            Some(PotentialSpec::Polynomial { coeffs }) => TestFunction::polynomial(coeffs.clone()),
            None => TestFunction::polynomial(vec![0.0, 1.0]),
        };
        ctx("test function", h.validate())?;
        Ok(h)
    }

    fn equilibrium(&self) -> Result<EquilibriumMeasure> {
        let v = ctx("potential", Potential::from_spec(self.potential_spec()?))?;
        let init = self.cfg.support.clone().unwrap_or_else(|| vec![(-2.0, 2.0)]);
        let s = ctx("initial support", Support::new(init))?;
        ctx("equilibrium step failed", EquilibriumMeasure::solve(&v, &s))
    }

    fn model(&self, eq: &EquilibriumMeasure) -> Result<MultiCutModel> {
        let mut opts = ModelOptions::default();
        if let Some(t) = self.cfg.tol {
            opts.drift_tol = t;
        }
        ctx("operator model", MultiCutModel::build(eq, opts))
    }

    fn write(&mut self, name: &str, text: &str) -> Result<()> {
        std::fs::create_dir_all(&self.out).map_err(|e| CmdError::Io(format!("{}: {e}", self.out.display())))?;
        let path = self.out.join(name);
        std::fs::write(&path, text).map_err(|e| CmdError::Io(format!("{}: {e}", path.display())))?;
        self.written.push(path);
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let text = json::to_string(value).map_err(|e| CmdError::Io(e.to_string()))?;
        self.write(name, &text)
    }
}

/// Fixed-width CSV float formatting, matching the JSON precision.
fn f(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn run(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let out = cfg.out.clone().unwrap_or_else(|| Path::new("out").to_path_buf());
    let mut r = Run { cfg, out, written: Vec::new() };
    match cfg.mode.unwrap_or(Mode::Equilibrium) {
        Mode::Equilibrium => equilibrium(&mut r)?,
        Mode::Predict => predict(&mut r)?,
        Mode::Theta => theta(&mut r)?,
        Mode::Partition => partition(&mut r)?,
        Mode::Sample => sample(&mut r)?,
        Mode::Verify => verify(&mut r)?,
        Mode::Lemmas => lemmas(&mut r)?,
    }
    Ok(r.written)
}

fn equilibrium(r: &mut Run) -> Result<()> {
    let eq = r.equilibrium()?;
    r.write_json("equilibrium.json", &eq.report())?;
    let (lo, hi) = (eq.support.lower(), eq.support.upper());
    let pad = 0.1 * (hi - lo);
    let mut csv = String::from("x,density,effective_potential\n");
    for i in 0..=400 {
        let x = lo - pad + (hi - lo + 2.0 * pad) * i as f64 / 400.0;
        let _ = writeln!(csv, "{},{},{}", f(x), f(eq.density(x)), f(eq.effective_potential(x)));
    }
    r.write("density.csv", &csv)
}

#[derive(Serialize)]
struct PredictOutput {
    n: u64,
    beta: f64,
    q: usize,
    mean_shift: f64,
    mean_theta: f64,
    var_smooth: f64,
    var_theta: f64,
    variance: f64,
    gaussian: bool,
    /// `(h, rho)`: the leading mean is `n` times this.
    h_rho: f64,
    i_h: Vec<f64>,
    log_z_linear: f64,
    log_z_quadratic: f64,
}

fn predict_one(model: &MultiCutModel, h: &TestFunction, n: u64, beta: f64) -> Result<(CltPrediction, PredictOutput)> {
    let p = ctx("prediction", multicut_mean_var(model, h, n, beta))?;
    let h_rho = model.eq.integrate(|y| h.eval(model.map.invert(y)));
    let out = PredictOutput {
        n,
        beta,
        q: model.q(),
        mean_shift: p.mean_shift,
        mean_theta: p.mean_theta,
        var_smooth: p.var_smooth,
        var_theta: p.var_theta,
        variance: p.variance(),
        gaussian: p.gaussian,
        h_rho,
        i_h: p.i_h.clone(),
        log_z_linear: p.linear,
        log_z_quadratic: p.quadratic,
    };
    Ok((p, out))
}

fn predict(r: &mut Run) -> Result<()> {
    let eq = r.equilibrium()?;
    let model = r.model(&eq)?;
    let h = r.h()?;
    let beta = r.beta();
    let mut rows = Vec::new();
    for n in r.ns() {
        rows.push(predict_one(&model, &h, n, beta)?.1);
    }
    r.write_json("predict.json", &rows[0])?;
    let mut csv = String::from("n,mean_shift,mean_theta,var_smooth,var_theta,variance\n");
    for p in &rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            p.n,
            f(p.mean_shift),
            f(p.mean_theta),
            f(p.var_smooth),
            f(p.var_theta),
            f(p.variance)
        );
    }
    r.write("predict_sweep.csv", &csv)
}

#[derive(Serialize)]
struct ThetaOutput {
    n: u64,
    beta: f64,
    q: usize,
    offsets: Vec<f64>,
    offset_sum: i64,
    tilt: Vec<f64>,
    direction: Vec<f64>,
    log_theta0: f64,
    mean_theta: f64,
    var_theta: f64,
}

fn theta_one(model: &MultiCutModel, h: &TestFunction, n: u64, beta: f64) -> Result<ThetaOutput> {
    let q = model.q();
    if q == 1 {
        return Ok(ThetaOutput {
            n,
            beta,
            q,
            offsets: vec![0.0],
            offset_sum: 0,
            tilt: vec![0.0],
            direction: vec![0.0],
            log_theta0: 0.0,
            mean_theta: 0.0,
            var_theta: 0.0,
        });
    }
    let direction = model.i_functional(h);
    let p = ctx("theta data", ThetaParams::for_model(model, n, beta, vec![0.0; q]))?;
    let (log_theta0, _) = ctx("theta sum", theta_eval(&p))?;
    let (mean, var) = ctx("theta moments", theta_moments(&p, &direction))?;
    Ok(ThetaOutput {
        n,
        beta,
        q,
        offsets: p.e.clone(),
        offset_sum: p.s,
        tilt: p.t.clone(),
        direction,
        log_theta0,
        mean_theta: mean,
        var_theta: var,
    })
}

fn theta(r: &mut Run) -> Result<()> {
    let eq = r.equilibrium()?;
    let model = r.model(&eq)?;
    let h = r.h()?;
    let beta = r.beta();
    let rows = r.ns().into_iter().map(|n| theta_one(&model, &h, n, beta)).collect::<Result<Vec<_>>>()?;
    r.write_json("theta.json", &rows[0])?;
    let q = model.q();
    let mut csv = String::from("n");
    for a in 0..q {
        let _ = write!(csv, ",offset_{a}");
    }
    csv.push_str(",log_theta0,mean_theta,var_theta\n");
    for t in &rows {
        let _ = write!(csv, "{}", t.n);
        for e in &t.offsets {
            let _ = write!(csv, ",{}", f(*e));
        }
        let _ = writeln!(csv, ",{},{},{}", f(t.log_theta0), f(t.mean_theta), f(t.var_theta));
    }
    r.write("theta_sweep.csv", &csv)
}

fn partition(r: &mut Run) -> Result<()> {
    let eq = r.equilibrium()?;
    let model = r.model(&eq)?;
    let beta = r.beta();
    let mut ropts = ROptions::default();
    if let Some(t) = r.cfg.tol {
        ropts.contour_tol = t;
    }
    let opts = PartitionOptions { edge: r.cfg.partition.edge, r: ropts };
    let reports = r
        .ns()
        .into_iter()
        .map(|n| ctx("partition expansion", log_partition(&model, n, beta, opts)))
        .collect::<Result<Vec<_>>>()?;
    r.write_json("partition.json", &reports[0])?;
    let mut csv = String::from("n,total");
    for t in &reports[0].terms {
        let _ = write!(csv, ",{}", t.term);
    }
    csv.push('\n');
    for rep in &reports {
        let _ = write!(csv, "{},{}", rep.n, f(rep.total));
        for t in &rep.terms {
            let _ = write!(csv, ",{}", f(t.value));
        }
        csv.push('\n');
    }
    r.write("partition_sweep.csv", &csv)
}

fn is_gaussian(spec: &PotentialSpec) -> bool {
    let PotentialSpec::Polynomial { coeffs } = spec;
    let mut c = coeffs.clone();
    while c.last() == Some(&0.0) {
        c.pop();
    }
    c == [0.0, 0.0, 0.5]
}

/// Particles spread over the intervals in proportion to their masses.
fn initial_configuration(eq: &EquilibriumMeasure, n: usize) -> Vec<f64> {
    let masses = eq.masses();
    let mut counts: Vec<usize> = masses.iter().map(|m| (m * n as f64).floor() as usize).collect();
    let mut left = n - counts.iter().sum::<usize>();
    let mut a = 0;
    while left > 0 {
        let k = a % counts.len();
        counts[k] += 1;
        left -= 1;
        a += 1;
    }
    let mut out = Vec::with_capacity(n);
    for (alpha, &(lo, hi)) in eq.support.intervals().iter().enumerate() {
        let c = counts[alpha];
        for i in 0..c {
            let th = std::f64::consts::PI * (i as f64 + 0.5) / c as f64;
            out.push(0.5 * (lo + hi) - 0.5 * (hi - lo) * th.cos());
        }
    }
    out
}

fn draw(r: &Run, n: u64) -> Result<SampleBatch> {
    let spec = r.potential_spec()?.clone();
    let s = &r.cfg.sampler;
    let beta = r.beta();
    let tridiagonal = match s.kind {
        SamplerKind::Tridiagonal => {
            if !is_gaussian(&spec) {
                return Err(CmdError::Config("the tridiagonal sampler needs the potential x^2/2".into()));
            }
            true
        }
        SamplerKind::Metropolis => false,
        SamplerKind::Auto => is_gaussian(&spec),
    };
    if tridiagonal {
        return ctx("tridiagonal sampler", gbe_batch(n as usize, beta, s.draws, r.seed()));
    }
    let eq = r.equilibrium()?;
    let n_us = n as usize;
    let thin = s.thin.unwrap_or(n_us).max(1);
    let per_chain = s.draws.div_ceil(s.chains.max(1));
    let cfg = ChainConfig {
        n: n_us,
        beta,
        potential: spec,
        steps: s.burn_in + thin * per_chain,
        burn_in: s.burn_in,
        proposal_scale: s.proposal_scale,
        seed: r.seed(),
        chains: s.chains,
        thin: Some(thin),
        initial: Some(initial_configuration(&eq, n_us)),
        pin_gaps: s.pin_gaps.clone(),
    };
    ctx("metropolis sampler", mcmc_sample(&cfg))
}

#[derive(Serialize)]
struct SampleOutput {
    n: u64,
    beta: f64,
    seed: u64,
    source: loggas::sampler::SampleSource,
    retained: usize,
    acceptance_rate: f64,
    chain_acceptance: Vec<f64>,
    proposal_scales: Vec<f64>,
    coincident_rejections: u64,
    pinned_rejections: u64,
    stats: EmpiricalStats,
    log_z_fit: Option<loggas::sampler::QuadraticFit>,
}

fn sample_stats(r: &Run, batch: &SampleBatch, h: &TestFunction) -> Result<SampleOutput> {
    let beta = r.beta();
    let stats = ctx("empirical statistics", empirical_stats(batch, |x| h.eval(x), beta, &default_t_grid()))?;
    let log_z_fit = fit_log_z(&stats.t_grid, &stats.z_hat).ok();
    Ok(SampleOutput {
        n: batch.n as u64,
        beta,
        seed: batch.seed,
        source: batch.source,
        retained: batch.len(),
        acceptance_rate: batch.acceptance_rate,
        chain_acceptance: batch.chain_acceptance.clone(),
        proposal_scales: batch.proposal_scales.clone(),
        coincident_rejections: batch.coincident_rejections,
        pinned_rejections: batch.pinned_rejections,
        stats,
        log_z_fit,
    })
}

fn sample(r: &mut Run) -> Result<()> {
    let n = r.ns()[0];
    let h = r.h()?;
    let batch = draw(r, n)?;
    let out = sample_stats(r, &batch, &h)?;
    let mut csv = String::new();
    for x in batch.configurations() {
        let row: Vec<String> = x.iter().map(|v| f(*v)).collect();
        csv.push_str(&row.join(","));
        csv.push('\n');
    }
    r.write("samples.csv", &csv)?;
    let mut trace = String::from("chain,index,statistic\n");
    for (c, series) in batch.linear_statistic(|x| h.eval(x)).iter().enumerate() {
        for (i, v) in series.iter().enumerate() {
            let _ = writeln!(trace, "{c},{i},{}", f(*v));
        }
    }
    r.write("trace.csv", &trace)?;
    r.write_json("stats.json", &out)
}

#[derive(Serialize)]
struct Check {
    statistic: String,
    predicted: f64,
    empirical: f64,
    standard_error: f64,
    allowance: f64,
    z: f64,
    pass: bool,
}

fn check(name: &str, predicted: f64, empirical: f64, se: f64, allowance: f64) -> Check {
    let excess = ((empirical - predicted).abs() - allowance).max(0.0);
    let z = if se > 0.0 { (empirical - predicted).signum() * excess / se } else if excess == 0.0 { 0.0 } else { f64::INFINITY };
    Check { statistic: name.into(), predicted, empirical, standard_error: se, allowance, z, pass: z.abs() < 3.0 }
}

fn verify(r: &mut Run) -> Result<()> {
    let n = r.ns()[0];
    let beta = r.beta();
    let eq = r.equilibrium()?;
    let model = r.model(&eq)?;
    let h = r.h()?;
    if model.q() > 1 && n > 64 && r.cfg.sampler.kind != SamplerKind::Tridiagonal {
        return Err(CmdError::Config(format!(
            "Monte Carlo checks across gaps are limited to n <= 64 (got {n}); theta terms are checked analytically"
        )));
    }
    let (_, pred) = predict_one(&model, &h, n, beta)?;
    let batch = draw(r, n)?;
    let emp = sample_stats(r, &batch, &h)?;
    let nf = n as f64;
    let mean_pred = nf * pred.h_rho + pred.mean_shift + pred.mean_theta;
    let var_pred = pred.variance * r.cfg.verify.variance_scale;
    let checks = vec![
        check("mean", mean_pred, emp.stats.mean, emp.stats.se_mean, r.cfg.verify.mean_drift / nf),
        check("variance", var_pred, emp.stats.variance, emp.stats.se_variance, 0.0),
    ];
    let pass = checks.iter().all(|c| c.pass);
    let report = json!({
        "n": n,
        "beta": beta,
        "q": model.q(),
        "source": batch.source,
        "effective_samples": emp.stats.effective_samples,
        "checks": checks,
        "pass": pass,
    });
    r.write_json("verify.json", &report)
}

fn lemmas(r: &mut Run) -> Result<()> {
    let cert = ctx("lemma certificate", certificate(&r.cfg.lemmas))?;
    r.write_json("lemmas.json", &cert)
}
