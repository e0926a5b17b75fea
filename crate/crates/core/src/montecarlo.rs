//! Seeded Monte Carlo campaigns for the weighted estimator `E[f rho]` and the
//! probabilistic bounds behind it.
//!
//! Samples are evaluated in parallel and collected in sample order; every
//! reduction runs sequentially with compensated summation, so results do not
//! depend on the number of workers.

use rayon::prelude::*;

use crate::density::{DensityContext, EvalOptions};
use crate::development;
use crate::error::{Error, Result};
use crate::manifold::{CurvatureModel, ModelKind};
use crate::paths::{self, IncrementSampler, IncrementVector, Partition};
use crate::spectral;

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "PATHWEIGHT_THREADS";

/// Largest tolerated fraction of failed samples.
pub const MAX_FAILURE_RATE: f64 = 1e-3;

/// Bounded test functionals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Functional {
    ConstantOne,
    /// `r / (1 + r)` with `r` the distance of the end point from the base point.
    EndpointRadius,
    /// `exp(-sum |db_i|^2 / scale)`.
    EnergyWindow { scale: f64 },
}

impl Functional {
    pub fn name(&self) -> &'static str {
        match self {
            Functional::ConstantOne => "constant-one",
            Functional::EndpointRadius => "endpoint-radius",
            Functional::EnergyWindow { .. } => "energy-window",
        }
    }

    /// Parses `constant-one`, `endpoint-radius` or `energy-window[:scale]`;
    /// the energy window defaults to `scale = d`.
    pub fn parse(s: &str, d: usize) -> Result<Self> {
        let mut parts = s.splitn(2, ':');
        match (parts.next().unwrap_or(""), parts.next()) {
            ("constant-one", None) => Ok(Functional::ConstantOne),
            ("endpoint-radius", None) => Ok(Functional::EndpointRadius),
            ("energy-window", None) => Ok(Functional::EnergyWindow { scale: d as f64 }),
            ("energy-window", Some(v)) => match v.parse::<f64>() {
                Ok(scale) if scale > 0.0 => Ok(Functional::EnergyWindow { scale }),
                _ => Err(Error::InvalidArgument(format!("bad energy-window scale {v:?}"))),
            },
            _ => Err(Error::InvalidArgument(format!("unknown functional {s:?}"))),
        }
    }

    fn eval(&self, model: &CurvatureModel<f64>, inc: &IncrementVector<f64>) -> Result<f64> {
        match self {
            Functional::ConstantOne => Ok(1.0),
            Functional::EndpointRadius => {
                let r = development::develop(inc, model)?.endpoint_radius()?;
                Ok(r / (1.0 + r))
            }
            Functional::EnergyWindow { scale } => {
                let q: f64 = inc.deltas().iter().map(|v| v.norm_squared()).sum();
                Ok((-q / scale).exp())
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Campaign {
    pub model: CurvatureModel<f64>,
    pub n_values: Vec<usize>,
    pub samples: usize,
    pub seed: u64,
    /// Paths with an increment longer than `eps` contribute zero; `0` disables.
    pub eps: f64,
    pub functional: Functional,
    /// Extra per-sample quantities to compute.
    pub eval: EvalOptions,
}

impl Campaign {
    pub fn new(model: CurvatureModel<f64>, n_values: Vec<usize>, samples: usize, seed: u64) -> Self {
        Self {
            model,
            n_values,
            samples,
            seed,
            eps: 0.0,
            functional: Functional::ConstantOne,
            eval: EvalOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::InvalidArgument("at least one sample is required".into()));
        }
        if self.n_values.is_empty() || self.n_values.contains(&0) {
            return Err(Error::InvalidArgument("mesh sizes must be a nonempty list of positive integers".into()));
        }
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return Err(Error::InvalidArgument("eps must be a finite nonnegative number".into()));
        }
        Ok(())
    }

    /// `exp(-tau_G Scal)` when `f = 1`, no cutoff and constant scalar curvature.
    pub fn target(&self) -> Option<f64> {
        let constant_scal = !matches!(self.model.kind(), ModelKind::Custom(_));
        (self.functional == Functional::ConstantOne && self.eps == 0.0 && constant_scal)
            .then(|| (-spectral::tau_g::<f64>() * self.model.scal()).exp())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub sample_id: u64,
    pub n: usize,
    pub rho: f64,
    pub log_rho: f64,
    pub x_p: f64,
    pub y_p: f64,
    pub fancy_r: f64,
    pub fancy_s: f64,
    pub decomposition_ok: Option<bool>,
    /// `f` at the developed path, times the `H^eps` indicator.
    pub f_value: f64,
}

impl SampleRecord {
    pub fn weighted(&self) -> f64 {
        self.f_value * self.rho
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateRow {
    pub n: usize,
    pub mean: f64,
    pub stderr: f64,
    /// Samples that evaluated successfully.
    pub n_effective: usize,
    pub target: Option<f64>,
    pub z_score: Option<f64>,
    pub failures: usize,
}

#[derive(Debug, Clone)]
pub struct CampaignOutput {
    pub rows: Vec<EstimateRow>,
    /// Successful samples per mesh size, in sample order.
    pub records: Vec<Vec<SampleRecord>>,
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut k = KahanSum::default();
        iter.into_iter().for_each(|x| k.add(x));
        k
    }
}

/// `(mean, sample standard deviation / sqrt(N))`, two-pass and compensated.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().copied().collect::<KahanSum>().value() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let ss = xs.iter().map(|x| (x - mean) * (x - mean)).collect::<KahanSum>().value();
    (mean, (ss / (n - 1.0) / n).sqrt())
}

/// Worker count from [`THREADS_ENV`], if set to a positive integer.
pub fn configured_threads() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&k| k > 0)
}

/// Runs `f` on a pool of `threads` workers, or on the current pool for `None`.
pub fn with_workers<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    match threads.and_then(|k| rayon::ThreadPoolBuilder::new().num_threads(k).build().ok()) {
        Some(pool) => pool.install(f),
        None => f(),
    }
}

/// Maps `f` over `0..count` in parallel and returns the results in index order.
pub fn par_map<R, F>(count: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(u64) -> R + Sync + Send,
{
    with_workers(configured_threads(), || (0..count as u64).into_par_iter().map(&f).collect())
}

fn check_failures(failed: usize, total: usize) -> Result<()> {
    if failed as f64 > MAX_FAILURE_RATE * total as f64 {
        return Err(Error::TooManyFailures { failed, total });
    }
    Ok(())
}

fn sample_one(
    c: &Campaign,
    ctx: &DensityContext<f64>,
    partition: &Partition<f64>,
    sampler: &IncrementSampler,
    j: u64,
) -> Result<SampleRecord> {
    let inc = sampler.sample(partition, c.model.d(), j)?;
    let s = ctx.evaluate(&inc, c.eval)?;
    let inside = c.eps == 0.0 || paths::in_h_epsilon(&inc, c.eps)?;
    let f_value = if inside { c.functional.eval(&c.model, &inc)? } else { 0.0 };
    if !(s.rho.is_finite() && f_value.is_finite()) {
        return Err(Error::NonConvergence(format!("non-finite sample {j}")));
    }
    Ok(SampleRecord {
        sample_id: j,
        n: ctx.n,
        rho: s.rho,
        log_rho: s.log_rho,
        x_p: s.x_p,
        y_p: s.y_p,
        fancy_r: s.fancy_r,
        fancy_s: s.fancy_s,
        decomposition_ok: s.decomposition_ok,
        f_value,
    })
}

/// Runs the campaign and keeps every per-sample record.
pub fn run_campaign_detailed(c: &Campaign) -> Result<CampaignOutput> {
    c.validate()?;
    let sampler = IncrementSampler::new(c.seed);
    let target = c.target();
    let mut rows = Vec::with_capacity(c.n_values.len());
    let mut records = Vec::with_capacity(c.n_values.len());
    for &n in &c.n_values {
        let ctx = DensityContext::new(&c.model, n)?;
        let partition = Partition::uniform(n)?;
        let results = par_map(c.samples, |j| sample_one(c, &ctx, &partition, &sampler, j));
        let total = results.len();
        let ok: Vec<SampleRecord> = results.into_iter().filter_map(|r| r.ok()).collect();
        let failures = total - ok.len();
        check_failures(failures, total)?;
        let values: Vec<f64> = ok.iter().map(SampleRecord::weighted).collect();
        let (mean, stderr) = mean_stderr(&values);
        let z_score = target.map(|t| (mean - t) / stderr);
        rows.push(EstimateRow { n, mean, stderr, n_effective: ok.len(), target, z_score, failures });
        records.push(ok);
    }
    Ok(CampaignOutput { rows, records })
}

/// One [`EstimateRow`] per mesh size.
pub fn run_campaign(c: &Campaign) -> Result<Vec<EstimateRow>> {
    Ok(run_campaign_detailed(c)?.rows)
}

/// Empirical mean against an exact or bounding value.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
    /// Exact expectation, when known.
    pub exact: Option<f64>,
    pub lower: f64,
    pub upper: f64,
    pub z_score: Option<f64>,
    pub pass: bool,
}

fn squared_norms(sampler: &IncrementSampler, partition: &Partition<f64>, d: usize, j: u64) -> Result<Vec<f64>> {
    Ok(sampler.sample(partition, d, j)?.deltas().iter().map(|v| v.norm_squared()).collect())
}

/// `E[exp(pC/2 sum |db_i|^2)] = prod (1 - pC ds_i)^{-d/2}` on the uniform
/// partition; passes when `|z| <= 4`.
pub fn check_energy_mgf(d: usize, n: usize, p: f64, c: f64, samples: usize, seed: u64) -> Result<CheckReport> {
    let pc = p * c;
    let partition = Partition::<f64>::uniform(n)?;
    if d == 0 || samples == 0 {
        return Err(Error::InvalidArgument("dimension and sample count must be positive".into()));
    }
    if !(1..=n).all(|i| pc * partition.step(i) < 1.0) {
        return Err(Error::InvalidArgument("pC ds_i must be below one".into()));
    }
    let exact = (1..=n)
        .map(|i| -(d as f64) / 2.0 * (-pc * partition.step(i)).ln_1p())
        .collect::<KahanSum>()
        .value()
        .exp();
    let sampler = IncrementSampler::new(seed);
    let values = par_map(samples, |j| {
        squared_norms(&sampler, &partition, d, j).map(|q| (pc / 2.0 * q.iter().sum::<f64>()).exp())
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let (mean, stderr) = mean_stderr(&values);
    let z = if stderr > 0.0 { (mean - exact) / stderr } else { if mean == exact { 0.0 } else { f64::INFINITY } };
    Ok(CheckReport {
        mean,
        stderr,
        samples,
        exact: Some(exact),
        lower: exact,
        upper: exact,
        z_score: Some(z),
        pass: z.abs() <= 4.0,
    })
}

/// Explicit constant `C` with `E[e^{k|Z|}; |Z| >= a] <= C a^{-2} e^{-a^2/4}`
/// for `Z ~ N(0, I_d)`.
pub fn gauss_tail_constant(k: f64, d: usize) -> f64 {
    let df = d as f64;
    let r = 2.0 * k + (4.0 * k * k + 4.0 * (df - 1.0)).sqrt();
    let log_peak = if r > 0.0 { (df - 1.0) * r.ln() + k * r - r * r / 8.0 } else { 0.0 };
    let sphere = 2.0 * std::f64::consts::PI.powf(df / 2.0) / gamma(df / 2.0);
    log_peak.exp() * sphere * (2.0 * std::f64::consts::PI).powf(-df / 2.0) * (8.0 / 3.0) * (-0.5f64).exp()
}

/// Gamma function on positive half-integers and integers.
fn gamma(x: f64) -> f64 {
    let twice = (2.0 * x).round() as i64;
    let (mut acc, mut y) = if twice % 2 == 0 { (1.0, 1.0) } else { (std::f64::consts::PI.sqrt(), 0.5) };
    while y < x - 0.25 {
        acc *= y;
        y += 1.0;
    }
    acc
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussTailReport {
    pub a: f64,
    pub mean: f64,
    pub stderr: f64,
    pub constant: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Empirical `E[e^{k|Z|}; |Z| >= a]` against the explicit bound.
pub fn check_gauss_tail(a: f64, k: f64, d: usize, samples: usize, seed: u64) -> Result<GaussTailReport> {
    if !(a > 0.0 && k >= 0.0) || d == 0 || samples == 0 {
        return Err(Error::InvalidArgument("need a > 0, k >= 0, d >= 1 and samples >= 1".into()));
    }
    let sampler = IncrementSampler::new(seed);
    let values = par_map(samples, |j| {
        let r = sampler.standard_normal(j, 0, d).iter().map(|z| z * z).sum::<f64>().sqrt();
        if r >= a {
            (k * r).exp()
        } else {
            0.0
        }
    });
    let (mean, stderr) = mean_stderr(&values);
    let constant = gauss_tail_constant(k, d);
    let bound = constant / (a * a) * (-a * a / 4.0).exp();
    Ok(GaussTailReport { a, mean, stderr, constant, bound, pass: mean <= bound })
}

fn curvature_bound(model: &CurvatureModel<f64>) -> f64 {
    model.ricci_bound()
}

fn band_report(values: &[f64], upper: f64) -> CheckReport {
    let (mean, stderr) = mean_stderr(values);
    let lower = 1.0 - 3.0 * stderr;
    CheckReport {
        mean,
        stderr,
        samples: values.len(),
        exact: None,
        lower,
        upper: upper + 3.0 * stderr,
        z_score: None,
        pass: mean >= lower && mean <= upper + 3.0 * stderr,
    }
}

/// `E[exp{p sum (<Ric db_i, db_i> - tr(Ric) ds_i)}]` against
/// `[1, exp(2 d p^2 K^2 |P|)]` widened by three standard errors.
pub fn check_ito_trace(model: &CurvatureModel<f64>, n: usize, p: f64, samples: usize, seed: u64) -> Result<CheckReport> {
    let partition = Partition::<f64>::uniform(n)?;
    let ric = model.ricci_matrix();
    let tr = ric.trace();
    let d = model.d();
    let sampler = IncrementSampler::new(seed);
    let values = par_map(samples, |j| -> Result<f64> {
        let inc = sampler.sample(&partition, d, j)?;
        let mut acc = KahanSum::default();
        for i in 1..=n {
            let db = inc.delta(i);
            acc.add(db.dot(&(&ric * db)) - tr * partition.step(i));
        }
        Ok((p * acc.value()).exp())
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let k = curvature_bound(model);
    let upper = (2.0 * d as f64 * p * p * k * k * partition.mesh()).exp();
    Ok(band_report(&values, upper))
}

/// `C` in the band `E[e^{R_P - S_P}] <= e^{C Delta}`.
pub fn fancy_band_constant(model: &CurvatureModel<f64>) -> f64 {
    let k = curvature_bound(model);
    2.0 * model.d() as f64 * k * k
}

/// Mean of `exp(R_P - S_P)` from the density statistics against
/// `[1 - 3 stderr, e^{C Delta}]`.
pub fn check_fancy_band(model: &CurvatureModel<f64>, n: usize, samples: usize, seed: u64) -> Result<CheckReport> {
    let partition = Partition::<f64>::uniform(n)?;
    let sampler = IncrementSampler::new(seed);
    let d = model.d();
    let values = par_map(samples, |j| -> Result<f64> {
        let inc = sampler.sample(&partition, d, j)?;
        let (r, s) = crate::density::fancy_statistics(model, &inc, None)?;
        Ok((r - s).exp())
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let upper = (fancy_band_constant(model) * partition.mesh()).exp();
    let (mean, stderr) = mean_stderr(&values);
    let lower = 1.0 - 3.0 * stderr;
    Ok(CheckReport {
        mean,
        stderr,
        samples,
        exact: None,
        lower,
        upper,
        z_score: None,
        pass: mean >= lower && mean <= upper,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MassRow {
    pub eps: f64,
    pub mass: f64,
    pub stderr: f64,
    /// `eps^2 n`.
    pub x: f64,
    /// Closed-form shape `e^{-eps^2 / (8 Delta)} / (sqrt(Delta) eps)`.
    pub shape: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MassReport {
    pub rows: Vec<MassRow>,
    /// Weighted least-squares slope of `ln mass` against `eps^2 n`.
    pub slope: f64,
    pub slope_stderr: f64,
    pub decreasing: bool,
    /// Decreasing masses and `slope + 2 slope_stderr <= -1/8`.
    pub pass: bool,
}

/// `E[rho 1{path leaves H^eps}]` for each cutoff, sharing the samples.
pub fn check_hpe_mass(model: &CurvatureModel<f64>, n: usize, eps: &[f64], samples: usize, seed: u64) -> Result<MassReport> {
    if eps.is_empty() || eps.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::InvalidArgument("cutoffs must be positive".into()));
    }
    let ctx = DensityContext::new(model, n)?;
    let partition = Partition::<f64>::uniform(n)?;
    let sampler = IncrementSampler::new(seed);
    let results = par_map(samples, |j| -> Result<(f64, f64)> {
        let inc = sampler.sample(&partition, model.d(), j)?;
        let rho = ctx.evaluate(&inc, EvalOptions::default())?.rho;
        Ok((rho, inc.max_norm()))
    });
    let total = results.len();
    let ok: Vec<(f64, f64)> = results.into_iter().filter_map(|r| r.ok()).collect();
    check_failures(total - ok.len(), total)?;
    let delta = 1.0 / n as f64;
    let rows: Vec<MassRow> = eps
        .iter()
        .map(|&e| {
            let v: Vec<f64> = ok.iter().map(|&(rho, m)| if m > e { rho } else { 0.0 }).collect();
            let (mass, stderr) = mean_stderr(&v);
            MassRow {
                eps: e,
                mass,
                stderr,
                x: e * e * n as f64,
                shape: (-e * e / (8.0 * delta)).exp() / (delta.sqrt() * e),
            }
        })
        .collect();
    let decreasing = rows.windows(2).all(|w| w[1].mass < w[0].mass);
    let usable: Vec<&MassRow> = rows.iter().filter(|r| r.mass > 0.0).collect();
    let (slope, slope_stderr) = if usable.len() >= 2 {
        let pts: Vec<(f64, f64, f64)> = usable
            .iter()
            .map(|r| {
                let rel = if r.stderr > 0.0 { r.stderr / r.mass } else { f64::EPSILON };
                (r.x, r.mass.ln(), 1.0 / (rel * rel))
            })
            .collect();
        weighted_slope(&pts)
    } else {
        (f64::NAN, f64::NAN)
    };
    let pass = decreasing && slope + 2.0 * slope_stderr <= -0.125;
    Ok(MassReport { rows, slope, slope_stderr, decreasing, pass })
}

/// Slope and its standard error for points `(x, y, weight)`.
pub fn weighted_slope(pts: &[(f64, f64, f64)]) -> (f64, f64) {
    let sw: f64 = pts.iter().map(|p| p.2).sum();
    let mx = pts.iter().map(|p| p.2 * p.0).sum::<f64>() / sw;
    let my = pts.iter().map(|p| p.2 * p.1).sum::<f64>() / sw;
    let sxx: f64 = pts.iter().map(|p| p.2 * (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| p.2 * (p.0 - mx) * (p.1 - my)).sum();
    (sxy / sxx, (1.0 / sxx).sqrt())
}

/// Unweighted `E_mu[f]` on the developed piecewise-geodesic paths.
pub fn unweighted_mean(
    model: &CurvatureModel<f64>,
    functional: Functional,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let partition = Partition::<f64>::uniform(n)?;
    let sampler = IncrementSampler::new(seed);
    let values = par_map(samples, |j| -> Result<f64> {
        let inc = sampler.sample(&partition, model.d(), j)?;
        functional.eval(model, &inc)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(mean_stderr(&values))
}

/// `(n, E[rho^2], stderr)` for each mesh size.
pub fn second_moments(model: &CurvatureModel<f64>, n_values: &[usize], samples: usize, seed: u64) -> Result<Vec<(usize, f64, f64)>> {
    let mut c = Campaign::new(model.clone(), n_values.to_vec(), samples, seed);
    c.functional = Functional::ConstantOne;
    let out = run_campaign_detailed(&c)?;
    Ok(out
        .records
        .iter()
        .zip(n_values)
        .map(|(recs, &n)| {
            let sq: Vec<f64> = recs.iter().map(|r| r.rho * r.rho).collect();
            let (m, s) = mean_stderr(&sq);
            (n, m, s)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kahan_recovers_lost_bits() {
        let mut k = KahanSum::default();
        k.add(1.0);
        for _ in 0..10 {
            k.add(1e-16);
        }
        assert!((k.value() - (1.0 + 1e-15)).abs() < 1e-18);
    }

    #[test]
    fn mean_stderr_of_constant() {
        assert_eq!(mean_stderr(&[2.0, 2.0, 2.0]), (2.0, 0.0));
        let (m, s) = mean_stderr(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gamma_half_integers() {
        assert!((gamma(0.5) - std::f64::consts::PI.sqrt()).abs() < 1e-15);
        assert_eq!(gamma(1.0), 1.0);
        assert_eq!(gamma(3.0), 2.0);
        assert!((gamma(2.5) - 0.75 * std::f64::consts::PI.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn functional_parsing() {
        assert_eq!(Functional::parse("constant-one", 2).unwrap(), Functional::ConstantOne);
        assert_eq!(Functional::parse("energy-window", 3).unwrap(), Functional::EnergyWindow { scale: 3.0 });
        assert_eq!(Functional::parse("energy-window:0.5", 3).unwrap(), Functional::EnergyWindow { scale: 0.5 });
        assert!(Functional::parse("energy-window:-1", 3).is_err());
        assert!(Functional::parse("unbounded", 3).is_err());
    }

    #[test]
    fn target_only_for_constant_one() {
        let h2 = CurvatureModel::hyperbolic(2, -1.0).unwrap();
        let mut c = Campaign::new(h2, vec![4], 1, 0);
        assert!((c.target().unwrap() - 1.2404448358048137).abs() < 1e-14);
        c.functional = Functional::EndpointRadius;
        assert!(c.target().is_none());
    }

    #[test]
    fn failure_threshold() {
        assert!(check_failures(1, 1000).is_ok());
        assert!(check_failures(2, 1000).is_err());
    }

    #[test]
    fn energy_mgf_zero_constant_is_one() {
        let r = check_energy_mgf(2, 10, 1.0, 0.0, 50, 3).unwrap();
        assert_eq!(r.mean, 1.0);
        assert_eq!(r.exact, Some(1.0));
        assert!(r.pass);
    }

    #[test]
    fn energy_mgf_rejects_large_constant() {
        assert!(check_energy_mgf(2, 10, 1.0, 10.0, 5, 0).is_err());
    }

    #[test]
    fn weighted_slope_of_line() {
        let pts = [(0.0, 1.0, 1.0), (1.0, 3.0, 2.0), (2.0, 5.0, 1.0)];
        let (s, _) = weighted_slope(&pts);
        assert!((s - 2.0).abs() < 1e-14);
    }
}
