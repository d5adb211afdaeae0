//! Run configuration: flat `key = value` text with dotted keys, or the same
//! keys as (possibly nested) JSON. Omitted keys keep their defaults.
//!
//! ```text
//! # population
//! n = 100
//! horizon = 300
//! groups.low.gamma = 0.98
//! seeds = 0..29
//! scenarios = 1, 2, 3, 4, 5a, 5b
//! ```

use crate::model::{GroupId, ModelParams, ScenarioConfig};
use std::collections::BTreeSet;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Emit {
    RawCsv,
    NormalizedCsv,
    TransitionsJson,
    Summary,
}

impl Emit {
    pub const ALL: [Emit; 4] = [
        Emit::RawCsv,
        Emit::NormalizedCsv,
        Emit::TransitionsJson,
        Emit::Summary,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Emit::RawCsv => "raw_csv",
            Emit::NormalizedCsv => "normalized_csv",
            Emit::TransitionsJson => "transitions_json",
            Emit::Summary => "summary",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub params: ModelParams,
    pub scenarios: Vec<ScenarioConfig>,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    pub emit: BTreeSet<Emit>,
}

impl Default for RunManifest {
    fn default() -> Self {
        RunManifest {
            params: ModelParams::default(),
            scenarios: ScenarioConfig::presets().to_vec(),
            seeds: (0..30).collect(),
            output_dir: PathBuf::from("results"),
            emit: Emit::ALL.into_iter().collect(),
        }
    }
}

/// Parses `a..b` (inclusive), `a`, or a comma-separated mix of both.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>, String> {
    let mut seeds = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let b = b.strip_prefix('=').unwrap_or(b);
            let a: u64 = a.trim().parse().map_err(|_| format!("bad seed `{a}`"))?;
            let b: u64 = b.trim().parse().map_err(|_| format!("bad seed `{b}`"))?;
            if b < a {
                return Err(format!("empty seed range `{part}`"));
            }
            seeds.extend(a..=b);
        } else {
            seeds.push(part.parse().map_err(|_| format!("bad seed `{part}`"))?);
        }
    }
    if seeds.is_empty() {
        return Err("no seeds given".into());
    }
    Ok(seeds)
}

pub fn parse_scenarios(text: &str) -> Result<Vec<ScenarioConfig>, String> {
    let out: Result<Vec<_>, _> = text
        .split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|label| {
            ScenarioConfig::from_label(label).ok_or_else(|| format!("unknown scenario `{label}`"))
        })
        .collect();
    let out = out?;
    if out.is_empty() {
        return Err("no scenarios given".into());
    }
    Ok(out)
}

fn parse_emit(text: &str) -> Result<BTreeSet<Emit>, String> {
    text.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|name| {
            Emit::ALL
                .into_iter()
                .find(|e| e.name() == name)
                .ok_or_else(|| format!("unknown output kind `{name}`"))
        })
        .collect()
}

fn num(value: &str) -> Result<f64, String> {
    let v: f64 = value
        .trim()
        .parse()
        .map_err(|_| format!("expected a number, found `{value}`"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("expected a finite number, found `{value}`"))
    }
}

fn count<T: std::str::FromStr>(value: &str) -> Result<T, String> {
    value
        .trim()
        .parse()
        .map_err(|_| format!("expected a non-negative integer, found `{value}`"))
}

impl RunManifest {
    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let p = &mut self.params;
        let key = key.trim();
        match key {
            "n" | "agents" => p.agents = count(value)?,
            "horizon" | "t" => p.horizon = count(value)?,
            "amplitude" | "a" => p.env_amplitude = num(value)?,
            "mu_crd" => p.credit_multiple = num(value)?,
            "eta_rpy" => p.repayment_rate = num(value)?,
            "rho_inv" => p.invest_fraction = num(value)?,
            "rho_roi" => p.roi_rate = num(value)?,
            "alpha.exp" => p.control.expense = num(value)?,
            "alpha.env" => p.control.environment = num(value)?,
            "alpha.tax" => p.control.tax = num(value)?,
            "alpha.inc" => p.control.income = num(value)?,
            "alpha.wlf" => p.control.welfare = num(value)?,
            "seeds" => self.seeds = parse_seeds(value)?,
            "scenarios" => self.scenarios = parse_scenarios(value)?,
            "out" | "output_dir" => self.output_dir = PathBuf::from(value.trim()),
            "emit" => self.emit = parse_emit(value)?,
            _ => return self.set_group(key, value),
        }
        Ok(())
    }

    fn set_group(&mut self, key: &str, value: &str) -> Result<(), String> {
        let unknown = || format!("unknown key `{key}`");
        let rest = key.strip_prefix("groups.").ok_or_else(unknown)?;
        let (name, field) = rest.split_once('.').ok_or_else(unknown)?;
        let id =
            GroupId::from_name(name).ok_or_else(|| format!("unknown income group `{name}`"))?;
        let groups = &mut self.params.groups;
        let g = match groups.iter_mut().position(|g| g.id == id) {
            Some(k) => &mut groups[k],
            None => return Err(format!("income group `{name}` is not configured")),
        };
        let v = num(value)?;
        match field {
            "fraction" => g.fraction = v,
            "delta" | "tax_rate" => g.tax_rate = v,
            "gamma" | "expense_rate" => g.expense_rate = v,
            "income_min" => g.income.min = v,
            "income_max" => g.income.max = v,
            "inherited_min" => g.inherited.min = v,
            "inherited_max" => g.inherited.max = v,
            "welfare_min" => g.welfare.min = v,
            "welfare_max" => g.welfare.max = v,
            _ => return Err(unknown()),
        }
        Ok(())
    }

    /// Parses a config document on top of the defaults. Validates the result.
    pub fn parse(text: &str) -> Result<RunManifest, ConfigError> {
        let mut manifest = RunManifest::default();
        manifest.apply_text(text)?;
        manifest.validate()?;
        Ok(manifest)
    }

    /// Applies a config document without validating.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        if text.trim_start().starts_with('{') {
            return self.apply_json(text);
        }
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Line {
                line,
                message: format!("expected `key = value`, found `{content}`"),
            })?;
            self.set(key, value)
                .map_err(|message| ConfigError::Line { line, message })?;
        }
        Ok(())
    }

    fn apply_json(&mut self, text: &str) -> Result<(), ConfigError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| ConfigError::Line {
                line: e.line(),
                message: e.to_string(),
            })?;
        let mut flat = Vec::new();
        flatten_json("", &value, &mut flat).map_err(ConfigError::Invalid)?;
        for (key, v) in flat {
            self.set(&key, &v).map_err(ConfigError::Invalid)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.params
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.seeds.is_empty() {
            return Err(ConfigError::Invalid("no seeds given".into()));
        }
        if self.scenarios.is_empty() {
            return Err(ConfigError::Invalid("no scenarios given".into()));
        }
        Ok(())
    }

    /// Every parameter as `key = value` lines, readable by [`RunManifest::parse`].
    pub fn to_config_text(&self) -> String {
        let p = &self.params;
        let mut lines = vec![
            format!("n = {}", p.agents),
            format!("horizon = {}", p.horizon),
            format!("amplitude = {}", p.env_amplitude),
            format!("mu_crd = {}", p.credit_multiple),
            format!("eta_rpy = {}", p.repayment_rate),
            format!("rho_inv = {}", p.invest_fraction),
            format!("rho_roi = {}", p.roi_rate),
            format!("alpha.exp = {}", p.control.expense),
            format!("alpha.env = {}", p.control.environment),
            format!("alpha.tax = {}", p.control.tax),
            format!("alpha.inc = {}", p.control.income),
            format!("alpha.wlf = {}", p.control.welfare),
        ];
        for g in &p.groups {
            let n = g.id.name();
            lines.push(format!("groups.{n}.fraction = {}", g.fraction));
            lines.push(format!("groups.{n}.delta = {}", g.tax_rate));
            lines.push(format!("groups.{n}.gamma = {}", g.expense_rate));
            lines.push(format!("groups.{n}.income_min = {}", g.income.min));
            lines.push(format!("groups.{n}.income_max = {}", g.income.max));
            lines.push(format!("groups.{n}.inherited_min = {}", g.inherited.min));
            lines.push(format!("groups.{n}.inherited_max = {}", g.inherited.max));
            lines.push(format!("groups.{n}.welfare_min = {}", g.welfare.min));
            lines.push(format!("groups.{n}.welfare_max = {}", g.welfare.max));
        }
        let scenarios: Vec<&str> = self.scenarios.iter().map(|s| s.label()).collect();
        let seeds: Vec<String> = self.seeds.iter().map(u64::to_string).collect();
        lines.push(format!("scenarios = {}", scenarios.join(", ")));
        lines.push(format!("seeds = {}", seeds.join(", ")));
        let mut text = lines.join("\n");
        text.push('\n');
        text
    }
}

fn flatten_json(
    prefix: &str,
    value: &serde_json::Value,
    out: &mut Vec<(String, String)>,
) -> Result<(), String> {
    use serde_json::Value;
    let join = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                flatten_json(&join(k), v, out)?;
            }
        }
        Value::Array(items) => {
            let parts: Result<Vec<String>, String> = items
                .iter()
                .map(|v| match v {
                    Value::Number(n) => Ok(n.to_string()),
                    Value::String(s) => Ok(s.clone()),
                    _ => Err(format!(
                        "`{prefix}`: lists may hold only numbers and strings"
                    )),
                })
                .collect();
            out.push((prefix.to_string(), parts?.join(",")));
        }
        Value::Number(n) => out.push((prefix.to_string(), n.to_string())),
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        Value::Bool(_) | Value::Null => {
            return Err(format!("`{prefix}`: unsupported value `{value}`"))
        }
    }
    Ok(())
}
