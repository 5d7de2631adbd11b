//! Run reports and their text and JSON renderings.
//!
//! The JSON writer is hand-rolled so that key order and number formatting
//! (`{:.16e}`, `null` for non-finite values) are fixed; reports round-trip
//! through `serde_json`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Deserializer};

use crate::numkernel::Cluster;

/// One named check: the largest residual over its samples against a threshold.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct CheckRow {
    pub name: String,
    #[serde(deserialize_with = "de_num")]
    pub max_residual: f64,
    #[serde(deserialize_with = "de_num")]
    pub threshold: f64,
    pub pass: bool,
    pub samples: usize,
}

impl CheckRow {
    /// Passes when `max_residual < threshold`; NaN fails.
    pub fn numeric(name: impl Into<String>, max_residual: f64, threshold: f64, samples: usize) -> Self {
        Self {
            name: name.into(),
            max_residual,
            threshold,
            pass: max_residual < threshold,
            samples,
        }
    }

    /// Passes when no sample failed; the residual is the failure count.
    pub fn count(name: impl Into<String>, failures: usize, samples: usize) -> Self {
        Self {
            name: name.into(),
            max_residual: failures as f64,
            threshold: 0.0,
            pass: failures == 0,
            samples,
        }
    }

    pub fn suite(&self) -> &str {
        self.name.split('/').next().unwrap_or(&self.name)
    }
}

/// Spectrum of `A_ξ*` at one sampled point.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct SpectrumSummary {
    #[serde(deserialize_with = "de_num")]
    pub t: f64,
    pub lambdas: Vec<Cluster>,
    #[serde(deserialize_with = "de_num")]
    pub psi: f64,
    #[serde(deserialize_with = "de_nums")]
    pub cartan_residuals: Vec<f64>,
    pub corollary: bool,
}

/// Residual of a check under one of two competing normalisations.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ConventionRow {
    pub check: String,
    pub convention: String,
    #[serde(deserialize_with = "de_num")]
    pub max_residual: f64,
    pub selected: bool,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct RunReport {
    pub version: String,
    pub entry: String,
    pub control: bool,
    pub config: BTreeMap<String, String>,
    pub suites: Vec<CheckRow>,
    pub spectra: Vec<SpectrumSummary>,
    pub conventions: Vec<ConventionRow>,
    /// Roll-up over all rows; negative controls count only when included.
    pub pass: bool,
}

fn de_num<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

fn de_nums<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
    Ok(Vec::<Option<f64>>::deserialize(d)?
        .into_iter()
        .map(|v| v.unwrap_or(f64::NAN))
        .collect())
}

fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".into()
    }
}

fn string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn list<T>(items: &[T], indent: &str, f: impl Fn(&T) -> String) -> String {
    if items.is_empty() {
        return "[]".into();
    }
    let body: Vec<String> = items.iter().map(|x| format!("{indent}  {}", f(x))).collect();
    format!("[\n{}\n{indent}]", body.join(",\n"))
}

impl RunReport {
    pub fn to_json(&self) -> String {
        let config = if self.config.is_empty() {
            "{}".to_string()
        } else {
            let body: Vec<String> = self
                .config
                .iter()
                .map(|(k, v)| format!("    {}: {}", string(k), string(v)))
                .collect();
            format!("{{\n{}\n  }}", body.join(",\n"))
        };
        let suites = list(&self.suites, "  ", |r| {
            format!(
                "{{\"name\": {}, \"max_residual\": {}, \"threshold\": {}, \"pass\": {}, \"samples\": {}}}",
                string(&r.name),
                num(r.max_residual),
                num(r.threshold),
                r.pass,
                r.samples
            )
        });
        let spectra = list(&self.spectra, "  ", |s| {
            let lambdas: Vec<String> = s
                .lambdas
                .iter()
                .map(|c| format!("{{\"value\": {}, \"multiplicity\": {}}}", num(c.value), c.multiplicity))
                .collect();
            let cartan: Vec<String> = s.cartan_residuals.iter().map(|v| num(*v)).collect();
            format!(
                "{{\"t\": {}, \"lambdas\": [{}], \"psi\": {}, \"cartan_residuals\": [{}], \"corollary\": {}}}",
                num(s.t),
                lambdas.join(", "),
                num(s.psi),
                cartan.join(", "),
                s.corollary
            )
        });
        let conventions = list(&self.conventions, "  ", |c| {
            format!(
                "{{\"check\": {}, \"convention\": {}, \"max_residual\": {}, \"selected\": {}}}",
                string(&c.check),
                string(&c.convention),
                num(c.max_residual),
                c.selected
            )
        });
        format!(
            "{{\n  \"version\": {},\n  \"entry\": {},\n  \"control\": {},\n  \"config\": {config},\n  \"suites\": {suites},\n  \"spectra\": {spectra},\n  \"conventions\": {conventions},\n  \"pass\": {}\n}}\n",
            string(&self.version),
            string(&self.entry),
            self.control,
            self.pass
        )
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "nullscreen {}", self.version);
        let _ = writeln!(
            out,
            "entry {}{}",
            self.entry,
            if self.control { " (negative control)" } else { "" }
        );
        for (k, v) in &self.config {
            let _ = writeln!(out, "  {k} = {v}");
        }
        if !self.suites.is_empty() {
            let _ = writeln!(out);
            let _ = writeln!(
                out,
                "{:<36} {:>12} {:>12} {:>8}  result",
                "check", "residual", "threshold", "samples"
            );
            for r in &self.suites {
                let _ = writeln!(
                    out,
                    "{:<36} {:>12.3e} {:>12.3e} {:>8}  {}",
                    r.name,
                    r.max_residual,
                    r.threshold,
                    r.samples,
                    if r.pass { "PASS" } else { "FAIL" }
                );
            }
        }
        if !self.spectra.is_empty() {
            let _ = writeln!(out, "\nspectra");
            for s in &self.spectra {
                let ls: Vec<String> = s
                    .lambdas
                    .iter()
                    .map(|c| format!("{:.6e} (x{})", c.value, c.multiplicity))
                    .collect();
                let cartan = s.cartan_residuals.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
                let _ = writeln!(
                    out,
                    "  t = {:>10.6}  psi = {:>10.6}  lambda = [{}]  cartan = {:.2e}  corollary {}",
                    s.t,
                    s.psi,
                    ls.join(", "),
                    cartan,
                    if s.corollary { "PASS" } else { "FAIL" }
                );
            }
        }
        if !self.conventions.is_empty() {
            let _ = writeln!(out, "\nconventions");
            for c in &self.conventions {
                let _ = writeln!(
                    out,
                    "  {:<28} {:<12} {:>12.3e}{}",
                    c.check,
                    c.convention,
                    c.max_residual,
                    if c.selected { "  selected" } else { "" }
                );
            }
        }
        let _ = writeln!(out, "\nresult: {}", if self.pass { "PASS" } else { "FAIL" });
        out
    }

    /// Rows that failed.
    pub fn failures(&self) -> impl Iterator<Item = &CheckRow> {
        self.suites.iter().filter(|r| !r.pass)
    }

    pub fn row(&self, name: &str) -> Option<&CheckRow> {
        self.suites.iter().find(|r| r.name == name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> RunReport {
        RunReport {
            version: "0.1.0".into(),
            entry: "mink_cone".into(),
            control: false,
            config: [("n".to_string(), "2".to_string()), ("entry.name".into(), "mink \"cone\"".into())]
                .into_iter()
                .collect(),
            suites: vec![
                CheckRow::numeric("frames/pairings", 1.5e-16, 1e-9, 200),
                CheckRow::numeric("shape/tau_xi", f64::NAN, 1e-5, 10),
                CheckRow::count("corollary/verdict", 0, 20),
            ],
            spectra: vec![SpectrumSummary {
                t: 1.25,
                lambdas: vec![Cluster {
                    value: -0.5,
                    multiplicity: 2,
                }],
                psi: 0.0,
                cartan_residuals: vec![],
                corollary: true,
            }],
            conventions: vec![ConventionRow {
                check: "chart/spatial".into(),
                convention: "fiber_unit".into(),
                max_residual: 3e-9,
                selected: true,
            }],
            pass: false,
        }
    }

    #[test]
    fn json_round_trip() {
        let r = sample();
        let back: RunReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back.suites[0], r.suites[0]);
        assert!(back.suites[1].max_residual.is_nan() && !back.suites[1].pass);
        assert_eq!(back.spectra, r.spectra);
        assert_eq!(back.conventions, r.conventions);
        assert_eq!(back.config, r.config);
        assert_eq!(back.to_json(), r.to_json());
    }

    #[test]
    fn number_format() {
        assert_eq!(num(1.0), "1.0000000000000000e0");
        assert_eq!(num(-0.25), "-2.5000000000000000e-1");
        assert_eq!(num(1e-9), "1.0000000000000001e-9");
        assert_eq!(num(f64::INFINITY), "null");
    }

    #[test]
    fn nan_fails() {
        assert!(!CheckRow::numeric("x", f64::NAN, 1.0, 1).pass);
    }

    #[test]
    fn empty_report() {
        let mut r = sample();
        r.suites.clear();
        r.spectra.clear();
        r.conventions.clear();
        let j = r.to_json();
        assert!(j.contains("\"suites\": []"));
        let back: RunReport = serde_json::from_str(&j).unwrap();
        assert!(back.suites.is_empty());
    }

    #[test]
    fn text_lists_every_row() {
        let t = sample().to_text();
        assert!(t.contains("frames/pairings") && t.contains("FAIL") && t.contains("result: FAIL"));
    }
}
