use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use pathweight::manifold::{CurvatureModel, Factor};
use serde::Deserialize;

use crate::CliError;

/// Seed used when neither the command line nor the config file sets one.
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    SpectralTable,
    TauConvergence,
    DensityMc,
    FlatSanity,
    JacobiVerify,
    AppendixChecks,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::SpectralTable => "spectral-table",
            CommandKind::TauConvergence => "tau-convergence",
            CommandKind::DensityMc => "density-mc",
            CommandKind::FlatSanity => "flat-sanity",
            CommandKind::JacobiVerify => "jacobi-verify",
            CommandKind::AppendixChecks => "appendix-checks",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        [
            CommandKind::SpectralTable,
            CommandKind::TauConvergence,
            CommandKind::DensityMc,
            CommandKind::FlatSanity,
            CommandKind::JacobiVerify,
            CommandKind::AppendixChecks,
        ]
        .into_iter()
        .find(|c| c.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Model factors `kind:dim:K` joined by `+`; kinds are euclidean,
    /// hyperbolic and constant.
    #[arg(long)]
    pub model: Option<String>,
    /// Mesh size or comma-separated list of mesh sizes.
    #[arg(long)]
    pub n: Option<String>,
    /// Samples per mesh size.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Master seed [default: 1].
    #[arg(long)]
    pub seed: Option<u64>,
    /// H^eps cutoff on increment norms; 0 disables.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Output file; stdout when absent. Metadata goes to `<out>.meta.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Test functional: constant-one, endpoint-radius or energy-window[:scale].
    #[arg(long)]
    pub functional: Option<String>,
    /// Per-sample CSV written by density-mc.
    #[arg(long)]
    pub per_sample: Option<PathBuf>,
    /// Compute the exponential decomposition for every sample.
    #[arg(long)]
    pub decomposition: bool,
    /// JSON file with the same keys as the flags; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum MeshField {
    One(usize),
    Many(Vec<usize>),
    Text(String),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct FileConfig {
    command: Option<String>,
    model: Option<String>,
    n: Option<MeshField>,
    samples: Option<usize>,
    seed: Option<u64>,
    eps: Option<f64>,
    out: Option<PathBuf>,
    format: Option<Format>,
    functional: Option<String>,
    per_sample: Option<PathBuf>,
    decomposition: Option<bool>,
}

/// A parsed model together with its canonical descriptor.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub descriptor: String,
    pub model: CurvatureModel<f64>,
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.descriptor)
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: CommandKind,
    pub model: ModelSpec,
    pub n_values: Vec<usize>,
    pub samples: usize,
    pub seed: u64,
    pub eps: f64,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub functional: String,
    pub per_sample: Option<PathBuf>,
    pub decomposition: bool,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub fn parse_mesh(s: &str) -> Result<Vec<usize>, CliError> {
    s.split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|_| usage(format!("invalid mesh size {t:?}"))))
        .collect()
}

pub fn parse_model(s: &str) -> Result<ModelSpec, CliError> {
    let mut factors = Vec::new();
    let mut parts = Vec::new();
    for item in s.split('+') {
        let fields: Vec<&str> = item.trim().split(':').collect();
        let kind = fields[0];
        let dim: usize = fields
            .get(1)
            .and_then(|v| v.parse().ok())
            .filter(|&d| d > 0)
            .ok_or_else(|| usage(format!("model factor {item:?} needs a positive dimension")))?;
        let k = match fields.get(2) {
            Some(v) => Some(v.parse::<f64>().map_err(|_| usage(format!("invalid curvature in {item:?}")))?),
            None => None,
        };
        if fields.len() > 3 {
            return Err(usage(format!("model factor {item:?} has too many fields")));
        }
        if let Some(k) = k {
            if !k.is_finite() {
                return Err(usage(format!("invalid curvature in {item:?}")));
            }
            if k > 0.0 {
                return Err(CliError::Model(format!(
                    "factor {item:?} has positive curvature; only non-positively curved models are supported"
                )));
            }
        }
        let k = match (kind, k) {
            ("euclidean" | "flat", None | Some(0.0)) => 0.0,
            ("euclidean" | "flat", Some(_)) => return Err(usage(format!("euclidean factor {item:?} must have K = 0"))),
            ("hyperbolic", Some(k)) if k < 0.0 => k,
            ("hyperbolic", _) => return Err(usage(format!("hyperbolic factor {item:?} needs K < 0"))),
            ("constant", Some(k)) => k,
            ("constant", None) => return Err(usage(format!("constant-curvature factor {item:?} needs K"))),
            _ => return Err(usage(format!("unknown model kind {kind:?}"))),
        };
        parts.push(match kind {
            "euclidean" | "flat" => format!("euclidean:{dim}"),
            _ => format!("{kind}:{dim}:{k}"),
        });
        factors.push(Factor { dim, k: k + 0.0 });
    }
    let model = if factors.len() == 1 {
        let f = &factors[0];
        if f.k == 0.0 {
            CurvatureModel::euclidean(f.dim)
        } else {
            CurvatureModel::constant_curvature(f.dim, f.k)
        }
    } else {
        CurvatureModel::product(factors)
    }
    .map_err(|e| match e {
        pathweight::Error::PositiveCurvature(_) => CliError::Model(e.to_string()),
        _ => usage(e.to_string()),
    })?;
    Ok(ModelSpec { descriptor: parts.join("+"), model })
}

fn read_file(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

/// Merges the flags over the optional config file and applies the
/// per-command defaults and requirements.
pub fn resolve(command: CommandKind, flags: Flags) -> Result<RunConfig, CliError> {
    let file = match &flags.config {
        Some(p) => read_file(p)?,
        None => FileConfig::default(),
    };
    if let Some(c) = &file.command {
        match CommandKind::parse(c) {
            Some(k) if k == command => {}
            Some(_) => return Err(usage(format!("config file is for command {c:?}, not {:?}", command.name()))),
            None => return Err(usage(format!("unknown command {c:?} in config file"))),
        }
    }
    let model_text = flags.model.or(file.model);
    let n_values = match (flags.n, file.n) {
        (Some(s), _) => Some(parse_mesh(&s)?),
        (None, Some(MeshField::One(n))) => Some(vec![n]),
        (None, Some(MeshField::Many(v))) => Some(v),
        (None, Some(MeshField::Text(s))) => Some(parse_mesh(&s)?),
        (None, None) => None,
    };
    let samples = flags.samples.or(file.samples);
    let model_text = model_text.or_else(|| match command {
        CommandKind::FlatSanity => Some("euclidean:2".into()),
        CommandKind::AppendixChecks => Some("hyperbolic:2:-1".into()),
        _ => None,
    });
    let model = match (&model_text, command) {
        (Some(t), _) => parse_model(t)?,
        (None, CommandKind::DensityMc) => return Err(usage("density-mc requires --model")),
        (None, _) => parse_model("euclidean:2")?,
    };
    let n_values = match (n_values, command) {
        (Some(v), _) => v,
        (None, CommandKind::FlatSanity) => vec![1, 8, 64],
        (None, CommandKind::AppendixChecks) => vec![16, 64],
        (None, CommandKind::JacobiVerify) => vec![],
        (None, c) => return Err(usage(format!("{} requires --n", c.name()))),
    };
    let samples = match (samples, command) {
        (Some(s), _) => s,
        (None, CommandKind::FlatSanity) => 10_000,
        (None, CommandKind::JacobiVerify) => 1000,
        (None, CommandKind::AppendixChecks) => 100_000,
        (None, CommandKind::DensityMc) => return Err(usage("density-mc requires --samples")),
        (None, _) => 0,
    };
    let cfg = RunConfig {
        command,
        model,
        n_values,
        samples,
        seed: flags.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
        eps: flags.eps.or(file.eps).unwrap_or(0.0),
        out: flags.out.or(file.out),
        format: flags.format.or(file.format).unwrap_or(Format::Csv),
        functional: flags.functional.or(file.functional).unwrap_or_else(|| "constant-one".into()),
        per_sample: flags.per_sample.or(file.per_sample),
        decomposition: flags.decomposition || file.decomposition.unwrap_or(false),
    };
    validate(&cfg)?;
    Ok(cfg)
}

fn validate(c: &RunConfig) -> Result<(), CliError> {
    if c.n_values.contains(&0) {
        return Err(usage("mesh sizes must be positive"));
    }
    if !(c.eps >= 0.0 && c.eps.is_finite()) {
        return Err(usage("--eps must be a finite nonnegative number"));
    }
    match c.command {
        CommandKind::SpectralTable if c.n_values.len() != 1 || c.n_values[0] < 2 => {
            Err(usage("spectral-table takes a single --n >= 2"))
        }
        CommandKind::TauConvergence if c.n_values.iter().any(|&n| n < 2) => Err(usage("tau-convergence needs n >= 2")),
        CommandKind::DensityMc | CommandKind::FlatSanity | CommandKind::AppendixChecks if c.samples == 0 => {
            Err(usage("--samples must be positive"))
        }
        CommandKind::FlatSanity if !c.model.model.is_flat() => Err(usage("flat-sanity needs a flat model")),
        CommandKind::AppendixChecks if c.n_values.iter().any(|&n| n < 2) => Err(usage("appendix-checks needs n >= 2")),
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags() -> Flags {
        Flags::default()
    }

    #[test]
    fn mesh_lists() {
        let c = resolve(CommandKind::TauConvergence, Flags { n: Some("64,256,1024".into()), ..flags() }).unwrap();
        assert_eq!(c.n_values, vec![64, 256, 1024]);
        assert!(matches!(resolve(CommandKind::TauConvergence, flags()), Err(CliError::Usage(_))));
    }

    #[test]
    fn density_mc_fully_populated() {
        let c = resolve(
            CommandKind::DensityMc,
            Flags {
                model: Some("hyperbolic:2:-1".into()),
                n: Some("32".into()),
                samples: Some(200_000),
                seed: Some(7),
                ..flags()
            },
        )
        .unwrap();
        assert_eq!(c.model.descriptor, "hyperbolic:2:-1");
        assert_eq!((c.n_values.clone(), c.samples, c.seed, c.eps), (vec![32], 200_000, 7, 0.0));
        assert_eq!(c.format, Format::Csv);
        assert!(matches!(
            resolve(CommandKind::DensityMc, Flags { n: Some("8".into()), samples: Some(5), ..flags() }),
            Err(CliError::Usage(_))
        ));
    }

    #[test]
    fn positive_curvature_is_a_model_error() {
        assert!(matches!(parse_model("hyperbolic:2:1"), Err(CliError::Model(_))));
        assert!(matches!(parse_model("constant:3:0.5+euclidean:1"), Err(CliError::Model(_))));
        assert!(matches!(parse_model("hyperbolic:2:0"), Err(CliError::Usage(_))));
        assert!(matches!(parse_model("sphere:2:-1"), Err(CliError::Usage(_))));
    }

    #[test]
    fn products_and_canonical_names() {
        let m = parse_model("hyperbolic:2:-1+hyperbolic:2:-2").unwrap();
        assert_eq!(m.descriptor, "hyperbolic:2:-1+hyperbolic:2:-2");
        assert_eq!(m.model.d(), 4);
        assert_eq!(parse_model("euclidean:3:0").unwrap().descriptor, "euclidean:3");
    }

    #[test]
    fn file_values_and_overrides() {
        let dir = std::env::temp_dir().join(format!("pathweight-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("c.json");
        std::fs::write(&p, r#"{"model": "hyperbolic:2:-1", "n": [8, 16], "samples": 10, "seed": 3}"#).unwrap();
        let c = resolve(CommandKind::DensityMc, Flags { config: Some(p.clone()), seed: Some(9), ..flags() }).unwrap();
        assert_eq!((c.n_values.clone(), c.samples, c.seed), (vec![8, 16], 10, 9));
        std::fs::write(&p, r#"{"model": "hyperbolic:2:-1", "bogus": 1}"#).unwrap();
        assert!(matches!(resolve(CommandKind::DensityMc, Flags { config: Some(p.clone()), ..flags() }), Err(CliError::Usage(_))));
        std::fs::write(&p, r#"{"model": "constant:2:1", "n": 4, "samples": 3}"#).unwrap();
        assert!(matches!(resolve(CommandKind::DensityMc, Flags { config: Some(p.clone()), ..flags() }), Err(CliError::Model(_))));
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
