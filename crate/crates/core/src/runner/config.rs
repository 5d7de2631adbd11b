//! Run configuration from a flat `key = value` file and command-line flags.
//!
//! ```text
//! # comment
//! entry.name = ads_gudermann_tube
//! entry.k = 2
//! n = 3
//! seed = 7
//! sample_count = 200
//! tolerances.fd_eq = 1e-5
//! suites = frames, shape, cartan
//! output.format = json
//! output.path = report.json
//! rollup.include_controls = false
//! execution = parallel
//! ```
//!
//! Flags `--entry`, `--n`, `--seed`, `--suites`, `--format` and `--out` are
//! shorthands; any key can also be given as `--key value`. Flags override the
//! file named by `--config`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

use crate::catalog::{catalog_get, CatalogGraph, EntryParams};
use crate::numkernel::Tolerances;
use crate::parallel::Execution;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),
    #[error("invalid value `{value}` for `{key}`: {reason}")]
    InvalidValue { key: String, value: String, reason: String },
    #[error("unknown flag `{0}`")]
    UnknownFlag(String),
    #[error("flag `{0}` needs a value")]
    MissingValue(String),
    #[error("cannot read {path}: {msg}")]
    Io { path: String, msg: String },
    #[error("{0}")]
    Entry(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Suite {
    Frames,
    Shape,
    Cartan,
    Corollary,
    Chart,
    Isometry,
    Dtau,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::Frames,
        Suite::Shape,
        Suite::Cartan,
        Suite::Corollary,
        Suite::Chart,
        Suite::Isometry,
        Suite::Dtau,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Frames => "frames",
            Suite::Shape => "shape",
            Suite::Cartan => "cartan",
            Suite::Corollary => "corollary",
            Suite::Chart => "chart",
            Suite::Isometry => "isometry",
            Suite::Dtau => "dtau",
        }
    }

    pub fn parse(s: &str) -> Option<Suite> {
        Suite::ALL.into_iter().find(|x| x.name() == s)
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Text,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub entry: String,
    pub entry_params: EntryParams,
    pub n: usize,
    pub seed: u64,
    pub sample_count: usize,
    pub tolerances: Tolerances,
    pub suites: Vec<Suite>,
    pub format: OutputFormat,
    pub output_path: Option<PathBuf>,
    pub include_controls: bool,
    pub execution: Execution,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            entry: "mink_cone".into(),
            entry_params: EntryParams::new(),
            n: 2,
            seed: 0,
            sample_count: 200,
            tolerances: Tolerances::default(),
            suites: Suite::ALL.to_vec(),
            format: OutputFormat::Text,
            output_path: None,
            include_controls: false,
            execution: Execution::default(),
        }
    }
}

fn invalid(key: &str, value: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::InvalidValue {
        key: key.into(),
        value: value.into(),
        reason: reason.into(),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    value.parse::<T>().map_err(|e| invalid(key, value, e.to_string()))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(invalid(key, value, "expected true or false")),
    }
}

pub fn parse_suites(value: &str) -> Result<Vec<Suite>, ConfigError> {
    let value = value.trim();
    if value == "all" {
        return Ok(Suite::ALL.to_vec());
    }
    let mut out = Vec::new();
    for part in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let s = Suite::parse(part).ok_or_else(|| invalid("suites", part, "unknown suite"))?;
        if !out.contains(&s) {
            out.push(s);
        }
    }
    out.sort();
    Ok(out)
}

impl RunConfig {
    /// Sets one dotted key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let value = value.trim();
        match key {
            "entry.name" => self.entry = value.to_string(),
            "n" => self.n = parse_num(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "sample_count" => self.sample_count = parse_num(key, value)?,
            "tolerances.abs_eq" => self.tolerances.abs_eq = parse_num(key, value)?,
            "tolerances.fd_eq" => self.tolerances.fd_eq = parse_num(key, value)?,
            "tolerances.cluster_rel" => self.tolerances.cluster_rel = parse_num(key, value)?,
            "suites" => self.suites = parse_suites(value)?,
            "output.format" => {
                self.format = match value {
                    "text" => OutputFormat::Text,
                    "json" => OutputFormat::Json,
                    _ => return Err(invalid(key, value, "expected text or json")),
                }
            }
            "output.path" => self.output_path = if value.is_empty() { None } else { Some(value.into()) },
            "rollup.include_controls" => self.include_controls = parse_bool(key, value)?,
            "execution" => {
                self.execution =
                    Execution::parse(value).ok_or_else(|| invalid(key, value, "expected sequential or parallel"))?
            }
            _ => match key.strip_prefix("entry.") {
                Some(param) if !param.is_empty() => {
                    let v: f64 = parse_num(key, value)?;
                    self.entry_params.insert(param.to_string(), v);
                }
                _ => return Err(ConfigError::UnknownKey(key.to_string())),
            },
        }
        Ok(())
    }

    /// Applies the lines of a configuration file.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: i + 1,
                msg: format!("expected `key = value`, got `{line}`"),
            })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(ConfigError::Syntax {
                    line: i + 1,
                    msg: "empty key".into(),
                });
            }
            self.set(key, value)?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        let mut c = Self::default();
        c.apply_text(text)?;
        c.validate()?;
        Ok(c)
    }

    /// Builds a configuration from command-line arguments (program name
    /// excluded).
    pub fn from_args<S: AsRef<str>>(args: &[S]) -> Result<Self, ConfigError> {
        let mut pairs: Vec<(String, String)> = Vec::new();
        let mut config_path: Option<String> = None;
        let mut it = args.iter().map(AsRef::as_ref);
        while let Some(flag) = it.next() {
            let name = flag
                .strip_prefix("--")
                .filter(|s| !s.is_empty())
                .ok_or_else(|| ConfigError::UnknownFlag(flag.to_string()))?;
            let (name, inline) = match name.split_once('=') {
                Some((n, v)) => (n, Some(v.to_string())),
                None => (name, None),
            };
            let value = match inline {
                Some(v) => v,
                None => it.next().ok_or_else(|| ConfigError::MissingValue(flag.to_string()))?.to_string(),
            };
            let key = match name {
                "config" => {
                    config_path = Some(value);
                    continue;
                }
                "entry" => "entry.name",
                "format" => "output.format",
                "out" => "output.path",
                other if is_known_key(other) => other,
                _ => return Err(ConfigError::UnknownFlag(flag.to_string())),
            };
            pairs.push((key.to_string(), value));
        }
        let mut c = Self::default();
        if let Some(path) = config_path {
            let text = std::fs::read_to_string(&path).map_err(|e| ConfigError::Io {
                path: path.clone(),
                msg: e.to_string(),
            })?;
            c.apply_text(&text)?;
        }
        for (k, v) in pairs {
            c.set(&k, &v)?;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n == 0 {
            return Err(invalid("n", "0", "must be at least 1"));
        }
        if self.sample_count == 0 {
            return Err(invalid("sample_count", "0", "must be at least 1"));
        }
        self.tolerances
            .validate()
            .map_err(|e| invalid("tolerances", "", e.to_string()))?;
        self.build_entry().map(|_| ())
    }

    pub fn build_entry(&self) -> Result<CatalogGraph, ConfigError> {
        catalog_get(&self.entry, self.n, &self.entry_params).map_err(|e| ConfigError::Entry(e.to_string()))
    }

    /// Canonical key/value echo of every setting that affects results.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        m.insert("entry.name".into(), self.entry.clone());
        for (k, v) in &self.entry_params {
            m.insert(format!("entry.{k}"), format!("{v:e}"));
        }
        m.insert("n".into(), self.n.to_string());
        m.insert("seed".into(), self.seed.to_string());
        m.insert("sample_count".into(), self.sample_count.to_string());
        m.insert("tolerances.abs_eq".into(), format!("{:e}", self.tolerances.abs_eq));
        m.insert("tolerances.fd_eq".into(), format!("{:e}", self.tolerances.fd_eq));
        m.insert("tolerances.cluster_rel".into(), format!("{:e}", self.tolerances.cluster_rel));
        m.insert(
            "suites".into(),
            self.suites.iter().map(|s| s.name()).collect::<Vec<_>>().join(","),
        );
        m.insert("rollup.include_controls".into(), self.include_controls.to_string());
        m
    }
}

fn is_known_key(k: &str) -> bool {
    matches!(
        k,
        "entry.name"
            | "n"
            | "seed"
            | "sample_count"
            | "tolerances.abs_eq"
            | "tolerances.fd_eq"
            | "tolerances.cluster_rel"
            | "suites"
            | "output.format"
            | "output.path"
            | "rollup.include_controls"
            | "execution"
    ) || k.strip_prefix("entry.").is_some_and(|p| !p.is_empty())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_and_flags() {
        let text = "# run\nentry.name = ads_gudermann_tube\nentry.k = 2\nn = 3\nsuites = shape, cartan\n";
        let c = RunConfig::from_text(text).unwrap();
        assert_eq!(c.entry, "ads_gudermann_tube");
        assert_eq!(c.entry_params["k"], 2.0);
        assert_eq!(c.suites, vec![Suite::Shape, Suite::Cartan]);

        let c = RunConfig::from_args(&["--entry", "mink_cylinder", "--n=3", "--tolerances.fd_eq", "2e-5"]).unwrap();
        assert_eq!(c.entry, "mink_cylinder");
        assert_eq!(c.n, 3);
        assert_eq!(c.tolerances.fd_eq, 2e-5);
    }

    #[test]
    fn errors() {
        assert!(matches!(RunConfig::from_args(&["--bogus", "1"]), Err(ConfigError::UnknownFlag(_))));
        assert!(matches!(RunConfig::from_args(&["--seed"]), Err(ConfigError::MissingValue(_))));
        assert!(matches!(RunConfig::from_args(&["positional"]), Err(ConfigError::UnknownFlag(_))));
        assert!(matches!(RunConfig::from_text("colour = red"), Err(ConfigError::UnknownKey(_))));
        assert!(matches!(RunConfig::from_text("n 3"), Err(ConfigError::Syntax { line: 1, .. })));
        assert!(matches!(RunConfig::from_text("n = three"), Err(ConfigError::InvalidValue { .. })));
        assert!(matches!(RunConfig::from_text("suites = frames, vibes"), Err(ConfigError::InvalidValue { .. })));
        assert!(matches!(RunConfig::from_text("entry.name = mink_torus"), Err(ConfigError::Entry(_))));
        assert!(matches!(RunConfig::from_text("tolerances.fd_eq = -1"), Err(ConfigError::InvalidValue { .. })));
    }

    #[test]
    fn empty_suite_list() {
        let c = RunConfig::from_text("suites =").unwrap();
        assert!(c.suites.is_empty());
    }

    #[test]
    fn echo_is_canonical() {
        let a = RunConfig::from_text("seed = 3\nn = 2").unwrap();
        let b = RunConfig::from_text("n = 2\nseed = 3\nexecution = sequential").unwrap();
        assert_eq!(a.echo(), b.echo());
        assert_eq!(a.echo()["tolerances.fd_eq"], "1e-5");
    }
}
