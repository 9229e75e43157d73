//! `key=value` settings from a config file and trailing command-line pairs.
//!
//! Files hold one pair per line; `#` starts a comment. Command-line pairs
//! override the file, which overrides built-in defaults. Every key is checked
//! against [`KEYS`] and its value parsed when loaded, so a bad line fails
//! before anything runs.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use afge::neural::TrainConfig;
use afge::{validate_config, IntegratorConfig};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Float,
    Count,
    Flag,
    List,
}

/// Every accepted key and its value type.
const KEYS: &[(&str, Kind)] = &[
    ("t0", Kind::Float),
    ("t1", Kind::Float),
    ("h0", Kind::Float),
    ("eps", Kind::Float),
    ("safety", Kind::Float),
    ("shrink_clamp", Kind::Float),
    ("grow_clamp", Kind::Float),
    ("h_min", Kind::Float),
    ("h_max", Kind::Float),
    ("max_rejects", Kind::Count),
    ("fixed_step", Kind::Flag),
    ("error_norm_includes_sensitivity", Kind::Flag),
    ("params", Kind::List),
    ("y0", Kind::List),
    ("target", Kind::Float),
    ("delta", Kind::Float),
    ("d", Kind::Count),
    ("hidden", Kind::Count),
    ("learning_rate", Kind::Float),
    ("epochs", Kind::Count),
    ("batch_size", Kind::Count),
    ("n", Kind::Count),
    ("noise", Kind::Float),
    ("record_wall_time", Kind::Flag),
];

/// Integrator keys, shared by every subcommand.
pub const INTEGRATOR_KEYS: &[&str] = &[
    "t0",
    "t1",
    "h0",
    "eps",
    "safety",
    "shrink_clamp",
    "grow_clamp",
    "h_min",
    "h_max",
    "max_rejects",
    "fixed_step",
    "error_norm_includes_sensitivity",
];

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Float(f64),
    Count(usize),
    Flag(bool),
    List(Vec<f64>),
}

/// Where a setting came from, for error messages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    File(usize),
    Flag,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::File(line) => write!(f, "line {line}"),
            Origin::Flag => write!(f, "command line"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("parse error at {origin}: {message}")]
    Parse { origin: Origin, message: String },
    #[error("cannot read config file {path}: {message}")]
    Io { path: String, message: String },
    #[error("key `{key}` does not apply to `{subcommand}`")]
    NotApplicable { key: String, subcommand: &'static str },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

impl ConfigError {
    /// Line number for file parse errors.
    pub fn line(&self) -> Option<usize> {
        match self {
            ConfigError::Parse {
                origin: Origin::File(line),
                ..
            } => Some(*line),
            _ => None,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Usage(e.to_string())
    }
}

/// Merged settings, file first then flags.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    values: BTreeMap<&'static str, (Value, Origin)>,
}

pub fn load_config(path: Option<&Path>, flags: &[String]) -> Result<Settings, ConfigError> {
    let mut settings = Settings::default();
    if let Some(path) = path {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        settings.merge_text(&text)?;
    }
    for pair in flags {
        settings.insert_pair(pair, Origin::Flag)?;
    }
    Ok(settings)
}

impl Settings {
    /// Parses config-file text into the settings, later lines winning.
    pub fn merge_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            self.insert_pair(line, Origin::File(i + 1))?;
        }
        Ok(())
    }

    fn insert_pair(&mut self, pair: &str, origin: Origin) -> Result<(), ConfigError> {
        let parse_err = |message: String| ConfigError::Parse { origin, message };
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| parse_err(format!("expected key=value, got `{pair}`")))?;
        let key = key.trim();
        let value = value.trim();
        let &(name, kind) = KEYS
            .iter()
            .find(|(k, _)| *k == key)
            .ok_or_else(|| parse_err(format!("unknown key `{key}`")))?;
        let parsed = parse_value(kind, value)
            .ok_or_else(|| parse_err(format!("bad value `{value}` for `{key}`")))?;
        self.values.insert(name, (parsed, origin));
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.values.get(key).map(|(v, _)| v)
    }

    pub fn float(&self, key: &str) -> Option<f64> {
        match self.get(key) {
            Some(Value::Float(x)) => Some(*x),
            _ => None,
        }
    }

    pub fn count(&self, key: &str) -> Option<usize> {
        match self.get(key) {
            Some(Value::Count(x)) => Some(*x),
            _ => None,
        }
    }

    pub fn flag(&self, key: &str) -> Option<bool> {
        match self.get(key) {
            Some(Value::Flag(x)) => Some(*x),
            _ => None,
        }
    }

    pub fn list(&self, key: &str) -> Option<&[f64]> {
        match self.get(key) {
            Some(Value::List(x)) => Some(x),
            _ => None,
        }
    }

    /// Rejects any key outside the integrator keys and `extra`.
    pub fn restrict(&self, subcommand: &'static str, extra: &[&str]) -> Result<(), ConfigError> {
        for key in self.values.keys() {
            if !INTEGRATOR_KEYS.contains(key) && !extra.contains(key) {
                return Err(ConfigError::NotApplicable {
                    key: (*key).to_string(),
                    subcommand,
                });
            }
        }
        Ok(())
    }

    /// Applies integrator keys on top of `base`. Changing the horizon resets
    /// `h_min`/`h_max` to their span-relative defaults unless those are set too.
    pub fn integrator(&self, base: IntegratorConfig) -> Result<IntegratorConfig, ConfigError> {
        let t0 = self.float("t0").unwrap_or(base.t0);
        let t1 = self.float("t1").unwrap_or(base.t1);
        let mut cfg = if (t0, t1) != (base.t0, base.t1) {
            base.with_horizon(t0, t1)
        } else {
            base
        };
        let fields: [(&str, &mut f64); 7] = [
            ("h0", &mut cfg.h0),
            ("eps", &mut cfg.eps),
            ("safety", &mut cfg.safety),
            ("shrink_clamp", &mut cfg.shrink_clamp),
            ("grow_clamp", &mut cfg.grow_clamp),
            ("h_min", &mut cfg.h_min),
            ("h_max", &mut cfg.h_max),
        ];
        for (key, slot) in fields {
            if let Some(x) = self.float(key) {
                *slot = x;
            }
        }
        if let Some(n) = self.count("max_rejects") {
            cfg.max_rejects_per_step = n;
        }
        if let Some(b) = self.flag("fixed_step") {
            cfg.fixed_step = b;
        }
        if let Some(b) = self.flag("error_norm_includes_sensitivity") {
            cfg.error_norm_includes_sensitivity = b;
        }
        validate_config(&cfg).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(cfg)
    }

    /// Applies training keys on top of `base`. A `batch_size` of 0 means one
    /// update per epoch.
    pub fn train(&self, base: TrainConfig) -> Result<TrainConfig, ConfigError> {
        let mut cfg = base;
        if let Some(x) = self.float("learning_rate") {
            cfg.learning_rate = x;
        }
        if let Some(n) = self.count("epochs") {
            cfg.epochs = n;
        }
        if let Some(n) = self.count("batch_size") {
            cfg.batch_size = (n > 0).then_some(n);
        }
        if let Some(b) = self.flag("record_wall_time") {
            cfg.record_wall_time = b;
        }
        cfg.integrator = self.integrator(cfg.integrator)?;
        cfg.validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(cfg)
    }
}

fn parse_value(kind: Kind, s: &str) -> Option<Value> {
    match kind {
        Kind::Float => s.parse().ok().filter(|x: &f64| !x.is_nan()).map(Value::Float),
        Kind::Count => s.parse().ok().map(Value::Count),
        Kind::Flag => match s {
            "true" | "1" | "yes" => Some(Value::Flag(true)),
            "false" | "0" | "no" => Some(Value::Flag(false)),
            _ => None,
        },
        Kind::List => s
            .split(',')
            .map(|x| x.trim().parse::<f64>().ok().filter(|v| !v.is_nan()))
            .collect::<Option<Vec<_>>>()
            .map(Value::List),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let mut s = Settings::default();
        s.merge_text("# header\n\neps = 1e-4   # tighter\n").unwrap();
        assert_eq!(s.float("eps"), Some(1e-4));
    }

    #[test]
    fn list_values_split_on_commas() {
        let s = load_config(None, &["params=10, 28,2.5".into()]).unwrap();
        assert_eq!(s.list("params"), Some(&[10.0, 28.0, 2.5][..]));
    }

    #[test]
    fn missing_equals_is_a_parse_error() {
        let mut s = Settings::default();
        let e = s.merge_text("eps 1e-3\n").unwrap_err();
        assert_eq!(e.line(), Some(1));
    }

    #[test]
    fn restrict_rejects_foreign_keys() {
        let s = load_config(None, &["epochs=3".into()]).unwrap();
        assert!(s.restrict("integrate", &[]).is_err());
        assert!(s.restrict("train", &["epochs"]).is_ok());
    }

    #[test]
    fn horizon_override_rescales_bounds() {
        let s = load_config(None, &["t1=2".into()]).unwrap();
        let cfg = s.integrator(IntegratorConfig::new(0.0, 10.0)).unwrap();
        assert_eq!(cfg.h_max, 2.0);
        assert_eq!(cfg.h0, 0.1);
    }

    #[test]
    fn batch_size_zero_means_full_batch() {
        let s = load_config(None, &["batch_size=0".into()]).unwrap();
        assert_eq!(s.train(TrainConfig::default()).unwrap().batch_size, None);
    }
}
