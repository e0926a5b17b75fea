use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{Format, RunConfig};
use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    Float(f64),
    Text(String),
    Bool(bool),
    Na,
}

impl Cell {
    pub fn opt(x: Option<f64>) -> Cell {
        x.map_or(Cell::Na, Cell::Float)
    }

    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(x) if x.is_finite() => format!("{x:.16e}"),
            Cell::Float(x) if x.is_nan() => "nan".into(),
            Cell::Float(x) => if *x > 0.0 { "inf" } else { "-inf" }.into(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Na => "na".into(),
        }
    }

    fn json(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(x) if x.is_finite() => format!("{x:.16e}"),
            Cell::Float(_) | Cell::Na => "null".into(),
            Cell::Text(s) => serde_json::to_string(s).expect("string serializes"),
            Cell::Bool(b) => b.to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: Format) -> Result<String, CliError> {
        match format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                let io = |e: csv::Error| CliError::Io(e.to_string());
                w.write_record(&self.header).map_err(io)?;
                for r in &self.rows {
                    w.write_record(r.iter().map(Cell::csv)).map_err(io)?;
                }
                let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
                String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
            }
            Format::Json => {
                let keys: Vec<String> =
                    self.header.iter().map(|h| serde_json::to_string(h).expect("string serializes")).collect();
                let rows: Vec<String> = self
                    .rows
                    .iter()
                    .map(|r| {
                        let fields: Vec<String> = keys.iter().zip(r).map(|(k, c)| format!("{k}: {}", c.json())).collect();
                        format!("  {{{}}}", fields.join(", "))
                    })
                    .collect();
                if rows.is_empty() {
                    Ok("[]\n".into())
                } else {
                    Ok(format!("[\n{}\n]\n", rows.join(",\n")))
                }
            }
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Metadata<'a> {
    pub command: &'a str,
    pub version: &'a str,
    pub seed: u64,
    pub rng_kind: &'a str,
    pub quadrature_order: usize,
    pub ode_steps: usize,
    pub model: &'a str,
    pub n_values: &'a [usize],
    pub samples: usize,
    pub eps: f64,
    pub functional: &'a str,
    pub decomposition: bool,
    pub format: &'a str,
    pub per_sample: Option<String>,
}

impl<'a> Metadata<'a> {
    pub fn for_config(cfg: &'a RunConfig) -> Self {
        Self {
            command: cfg.command.name(),
            version: env!("CARGO_PKG_VERSION"),
            seed: cfg.seed,
            rng_kind: pathweight::paths::RNG_KIND,
            quadrature_order: pathweight::quadrature::DEFAULT_ORDER,
            ode_steps: pathweight::jacobi::DEFAULT_ODE_STEPS,
            model: &cfg.model.descriptor,
            n_values: &cfg.n_values,
            samples: cfg.samples,
            eps: cfg.eps,
            functional: &cfg.functional,
            decomposition: cfg.decomposition,
            format: match cfg.format {
                Format::Csv => "csv",
                Format::Json => "json",
            },
            per_sample: cfg.per_sample.as_ref().map(|p| p.display().to_string()),
        }
    }
}

pub fn meta_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Writes the table to `--out` (or stdout) and the metadata next to it (or to stderr).
pub fn emit(cfg: &RunConfig, table: &Table) -> Result<(), CliError> {
    let body = table.render(cfg.format)?;
    let meta = serde_json::to_string_pretty(&Metadata::for_config(cfg)).map_err(|e| CliError::Io(e.to_string()))? + "\n";
    match &cfg.out {
        Some(p) => {
            write_file(p, &body)?;
            write_file(&meta_path(p), &meta)
        }
        None => {
            std::io::stdout().write_all(body.as_bytes()).map_err(|e| CliError::Io(e.to_string()))?;
            std::io::stderr().write_all(meta.as_bytes()).map_err(|e| CliError::Io(e.to_string()))
        }
    }
}

pub fn emit_to(path: &Path, format: Format, table: &Table) -> Result<(), CliError> {
    write_file(path, &table.render(format)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Table {
        let mut t = Table::new(&["k", "x", "note", "ok"]);
        t.push(vec![Cell::Int(1), Cell::Float(0.1), Cell::Text("a,b".into()), Cell::Bool(true)]);
        t.push(vec![Cell::Int(2), Cell::Na, Cell::Text("c".into()), Cell::Bool(false)]);
        t
    }

    #[test]
    fn csv_round_trips_seventeen_digits() {
        let s = sample().render(Format::Csv).unwrap();
        let mut lines = s.lines();
        assert_eq!(lines.next(), Some("k,x,note,ok"));
        assert_eq!(lines.next(), Some("1,1.0000000000000001e-1,\"a,b\",true"));
        assert_eq!(lines.next(), Some("2,na,c,false"));
        assert_eq!("1.0000000000000001e-1".parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn json_keeps_column_order() {
        let s = sample().render(Format::Json).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v[0]["x"].as_f64(), Some(0.1));
        assert!(v[1]["x"].is_null());
        let first = s.lines().nth(1).unwrap();
        assert!(first.find("\"k\"").unwrap() < first.find("\"ok\"").unwrap());
    }

    #[test]
    fn meta_sits_next_to_output() {
        assert_eq!(meta_path(Path::new("/tmp/r.csv")), PathBuf::from("/tmp/r.csv.meta.json"));
    }
}
