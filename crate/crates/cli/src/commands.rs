use std::time::Instant;

use pathweight::density::{DensityContext, EvalOptions};
use pathweight::montecarlo::{self, Campaign, Functional};
use pathweight::paths::{IncrementSampler, Partition};
use pathweight::{jacobi, spectral};

use crate::config::{CommandKind, RunConfig};
use crate::output::{self, Cell, Table};
use crate::CliError;

/// Flat-model tolerance on `|rho - 1|`.
pub const FLAT_TOLERANCE: f64 = 1e-10;

const HPE_N: usize = 16;
const HPE_EPS: [f64; 3] = [0.5, 0.75, 1.0];
const GAUSS_TAIL_K: f64 = 1.0;

/// Result of a command: the table to emit and whether every numeric check passed.
pub struct Outcome {
    pub table: Table,
    pub pass: bool,
}

fn passed(table: Table) -> Outcome {
    Outcome { table, pass: true }
}

pub fn run(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let outcome = match cfg.command {
        CommandKind::SpectralTable => spectral_table(cfg),
        CommandKind::TauConvergence => tau_convergence(cfg),
        CommandKind::DensityMc => density_mc(cfg),
        CommandKind::FlatSanity => flat_sanity(cfg),
        CommandKind::JacobiVerify => jacobi_verify(cfg),
        CommandKind::AppendixChecks => appendix_checks(cfg),
    }?;
    output::emit(cfg, &outcome.table)?;
    Ok(outcome)
}

/// One row per interior angle plus a final `k = n` row carrying `gamma_n`
/// in the angle column.
fn spectral_table(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let n = cfg.n_values[0];
    let delta = 1.0 / n as f64;
    let spec = spectral::assemble_spectrum::<f64>(n, delta)?;
    let d3 = delta.powi(3);
    let mut t = Table::new(&["k", "theta_k", "r_k", "beta_k_sq", "lambda_k_over_delta3"]);
    for k in 1..n {
        t.push(vec![
            Cell::Int(k as u64),
            Cell::Float(spec.theta(k)),
            Cell::Float(spec.r(k)),
            Cell::Float(spec.beta_sq(k)),
            Cell::Float(spec.lambda(k) / d3),
        ]);
    }
    t.push(vec![
        Cell::Int(n as u64),
        Cell::Float(spec.gamma),
        Cell::Na,
        Cell::Float(spec.beta_sq(n)),
        Cell::Float(spec.lambda(n) / d3),
    ]);
    Ok(passed(t))
}

fn tau_convergence(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let tg = spectral::tau_g::<f64>();
    let mut t = Table::new(&["n", "tau_p", "tau_g", "abs_err"]);
    for &n in &cfg.n_values {
        let tp = spectral::tau_p::<f64>(n)?;
        t.push(vec![Cell::Int(n as u64), Cell::Float(tp), Cell::Float(tg), Cell::Float((tp - tg).abs())]);
    }
    Ok(passed(t))
}

fn density_mc(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let functional = Functional::parse(&cfg.functional, cfg.model.model.d()).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut t = Table::new(&["experiment", "model", "n", "N", "mean", "stderr", "target", "z_score", "wall_time_s"]);
    let mut per_sample = Table::new(&["sample_id", "n", "rho", "log_rho", "x_p", "y_p", "fancy_r", "fancy_s", "decomposition_ok"]);
    let experiment = format!("density-mc/{}", functional.name());
    for &n in &cfg.n_values {
        let mut c = Campaign::new(cfg.model.model.clone(), vec![n], cfg.samples, cfg.seed);
        c.eps = cfg.eps;
        c.functional = functional;
        c.eval = EvalOptions { x_p: cfg.per_sample.is_some(), decomposition: cfg.decomposition };
        let start = Instant::now();
        let out = montecarlo::run_campaign_detailed(&c)?;
        let wall = start.elapsed().as_secs_f64();
        let row = &out.rows[0];
        t.push(vec![
            Cell::Text(experiment.clone()),
            Cell::Text(cfg.model.descriptor.clone()),
            Cell::Int(n as u64),
            Cell::Int(row.n_effective as u64),
            Cell::Float(row.mean),
            Cell::Float(row.stderr),
            Cell::opt(row.target),
            Cell::opt(row.z_score),
            Cell::Float(wall),
        ]);
        if cfg.per_sample.is_some() {
            for r in &out.records[0] {
                per_sample.push(vec![
                    Cell::Int(r.sample_id),
                    Cell::Int(r.n as u64),
                    Cell::Float(r.rho),
                    Cell::Float(r.log_rho),
                    Cell::Float(r.x_p),
                    Cell::Float(r.y_p),
                    Cell::Float(r.fancy_r),
                    Cell::Float(r.fancy_s),
                    r.decomposition_ok.map_or(Cell::Na, Cell::Bool),
                ]);
            }
        }
    }
    if let Some(p) = &cfg.per_sample {
        output::emit_to(p, cfg.format, &per_sample)?;
    }
    Ok(passed(t))
}

fn flat_sanity(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let sampler = IncrementSampler::new(cfg.seed);
    let d = cfg.model.model.d();
    let mut worst = 0.0f64;
    for &n in &cfg.n_values {
        let ctx = DensityContext::new(&cfg.model.model, n)?;
        let partition = Partition::<f64>::uniform(n)?;
        let errs = montecarlo::par_map(cfg.samples, |j| -> pathweight::Result<f64> {
            let inc = sampler.sample(&partition, d, j)?;
            Ok((ctx.evaluate(&inc, EvalOptions::default())?.rho - 1.0).abs())
        });
        for e in errs {
            let e = e?;
            worst = if e.is_nan() { f64::NAN } else { worst.max(e) };
        }
    }
    let pass = worst <= FLAT_TOLERANCE;
    let mesh: Vec<String> = cfg.n_values.iter().map(usize::to_string).collect();
    let mut t = Table::new(&["model", "n_values", "N", "rho_max_abs_err", "tolerance", "pass"]);
    t.push(vec![
        Cell::Text(cfg.model.descriptor.clone()),
        Cell::Text(mesh.join(";")),
        Cell::Int((cfg.samples * cfg.n_values.len()) as u64),
        Cell::Float(worst),
        Cell::Float(FLAT_TOLERANCE),
        Cell::Bool(pass),
    ]);
    Ok(Outcome { table: t, pass })
}

fn jacobi_verify(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let checks = jacobi::solver_checks(cfg.samples, cfg.seed)?;
    let mut t = Table::new(&["check", "instances", "max_error", "tolerance", "pass"]);
    for c in &checks {
        t.push(vec![
            Cell::Text(c.name.into()),
            Cell::Int(c.instances as u64),
            Cell::Float(c.max_error),
            Cell::Float(c.tolerance),
            Cell::Bool(c.pass()),
        ]);
    }
    Ok(Outcome { table: t, pass: checks.iter().all(|c| c.pass()) })
}

#[allow(clippy::too_many_arguments)]
fn check_row(
    check: String,
    model: &str,
    n: Option<usize>,
    samples: usize,
    mean: f64,
    stderr: f64,
    lower: Option<f64>,
    upper: Option<f64>,
    z: Option<f64>,
    pass: bool,
) -> Vec<Cell> {
    vec![
        Cell::Text(check),
        Cell::Text(model.into()),
        n.map_or(Cell::Na, |n| Cell::Int(n as u64)),
        Cell::Int(samples as u64),
        Cell::Float(mean),
        Cell::Float(stderr),
        Cell::opt(lower),
        Cell::opt(upper),
        Cell::opt(z),
        Cell::Bool(pass),
    ]
}

fn appendix_checks(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let model = &cfg.model.model;
    let name = cfg.model.descriptor.as_str();
    let (seed, samples, d) = (cfg.seed, cfg.samples, model.d());
    let mut t = Table::new(&["check", "model", "n", "N", "mean", "stderr", "lower", "upper", "z_score", "pass"]);
    let mut all = true;

    let r = montecarlo::check_energy_mgf(2, 10, 1.0, 1.0, samples, seed)?;
    all &= r.pass;
    t.push(check_row("energy-mgf:d=2:pC=1".into(), "euclidean:2", Some(10), samples, r.mean, r.stderr, Some(r.lower), Some(r.upper), r.z_score, r.pass));

    for a in [1.0, 2.0, 3.0] {
        let r = montecarlo::check_gauss_tail(a, GAUSS_TAIL_K, d, samples, seed)?;
        all &= r.pass;
        let label = format!("gauss-tail:a={a}:k={GAUSS_TAIL_K}:d={d}");
        t.push(check_row(label, name, None, samples, r.mean, r.stderr, Some(0.0), Some(r.bound), None, r.pass));
    }

    for &n in &cfg.n_values {
        let r = montecarlo::check_ito_trace(model, n, 1.0, samples, seed)?;
        all &= r.pass;
        t.push(check_row("ito-trace:p=1".into(), name, Some(n), samples, r.mean, r.stderr, Some(r.lower), Some(r.upper), None, r.pass));
    }

    for &n in &cfg.n_values {
        let r = montecarlo::check_fancy_band(model, n, samples, seed)?;
        all &= r.pass;
        let label = format!("exp-fancy-band:C={}", montecarlo::fancy_band_constant(model));
        t.push(check_row(label, name, Some(n), samples, r.mean, r.stderr, Some(r.lower), Some(r.upper), None, r.pass));
    }

    let m = montecarlo::check_hpe_mass(model, HPE_N, &HPE_EPS, samples, seed)?;
    for row in &m.rows {
        t.push(check_row(
            format!("hpe-mass:eps={}", row.eps),
            name,
            Some(HPE_N),
            samples,
            row.mass,
            row.stderr,
            Some(0.0),
            None,
            None,
            m.decreasing,
        ));
    }
    all &= m.pass;
    t.push(check_row(
        "hpe-mass-slope".into(),
        name,
        Some(HPE_N),
        samples,
        m.slope,
        m.slope_stderr,
        None,
        Some(-0.125),
        None,
        m.pass,
    ));
    Ok(Outcome { table: t, pass: all })
}
