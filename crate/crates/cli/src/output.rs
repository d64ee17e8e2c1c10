use std::fmt::Write as _;

use serde_json::{Map, Value};
use thiserror::Error;

use crate::args::Format;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] freewords::Error),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use freewords::Error as E;
        match self {
            CliError::Usage(_) | CliError::Io(_) => 2,
            CliError::Core(e) => match e {
                E::Hypothesis { .. } => 3,
                E::BudgetExceeded { .. } => 4,
                E::Internal(_) => 5,
                _ => 2,
            },
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub enum Body {
    Csv(String),
    Json(Value),
    Dot(String),
}

/// A finished command: the artifact, its provenance and a summary.
pub struct Output {
    pub command: &'static str,
    pub config: Vec<(String, String)>,
    pub seed: Option<u64>,
    pub body: Body,
    pub summary: String,
    /// Reported after the artifact is written.
    pub failure: Option<CliError>,
}

/// Builds the config echo in argument order.
#[derive(Default)]
pub struct Echo(Vec<(String, String)>);

impl Echo {
    pub fn new() -> Echo {
        Echo::default()
    }

    pub fn add(mut self, key: &str, value: impl ToString) -> Echo {
        self.0.push((key.to_string(), value.to_string()));
        self
    }

    pub fn add_all(mut self, key: &str, values: &[String]) -> Echo {
        for v in values {
            self.0.push((key.to_string(), v.clone()));
        }
        self
    }

    pub fn into_vec(self) -> Vec<(String, String)> {
        self.0
    }
}

pub fn version() -> &'static str {
    env!("CARGO_PKG_VERSION")
}

impl Output {
    pub fn format(&self) -> Format {
        match self.body {
            Body::Csv(_) => Format::Csv,
            Body::Json(_) => Format::Json,
            Body::Dot(_) => Format::Dot,
        }
    }

    fn header_lines(&self) -> Vec<String> {
        let mut lines = vec![format!("freewords {}", version()), format!("command: {}", self.command)];
        for (k, v) in &self.config {
            lines.push(format!("{k}: {v}"));
        }
        lines.push(format!("format: {}", self.format().name()));
        lines.push(match self.seed {
            Some(s) => format!("seed: {s}"),
            None => "seed: none".to_string(),
        });
        lines
    }

    /// The artifact with its header; identical inputs give identical bytes.
    pub fn render(&self) -> String {
        match &self.body {
            Body::Csv(text) | Body::Dot(text) => {
                let marker = if matches!(self.body, Body::Csv(_)) { "#" } else { "//" };
                let mut out = String::new();
                for line in self.header_lines() {
                    let _ = writeln!(out, "{marker} {line}");
                }
                out.push_str(text);
                out
            }
            Body::Json(value) => {
                let mut config = Map::new();
                for (k, v) in &self.config {
                    match config.get_mut(k) {
                        Some(Value::Array(items)) => items.push(Value::String(v.clone())),
                        Some(existing) => {
                            let first = existing.take();
                            *existing = Value::Array(vec![first, Value::String(v.clone())]);
                        }
                        None => {
                            config.insert(k.clone(), Value::String(v.clone()));
                        }
                    }
                }
                let meta = serde_json::json!({
                    "version": version(),
                    "command": self.command,
                    "config": config,
                    "seed": self.seed,
                });
                let mut obj = match value {
                    Value::Object(m) => m.clone(),
                    other => {
                        let mut m = Map::new();
                        m.insert("result".into(), other.clone());
                        m
                    }
                };
                obj.insert("_meta".into(), meta);
                let mut text = serde_json::to_string_pretty(&Value::Object(obj)).expect("JSON values serialize");
                text.push('\n');
                text
            }
        }
    }
}

/// Picks the requested format if the command supports it.
pub fn choose(requested: Option<Format>, allowed: &[Format]) -> CliResult<Format> {
    match requested {
        None => Ok(allowed[0]),
        Some(f) if allowed.contains(&f) => Ok(f),
        Some(f) => {
            let names: Vec<&str> = allowed.iter().map(|a| a.name()).collect();
            Err(usage(format!("format {} is not available here (use {})", f.name(), names.join(" or "))))
        }
    }
}
