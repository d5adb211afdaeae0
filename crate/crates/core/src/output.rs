//! Result files: per-run CSVs, normalised CSVs, summaries, the transitions
//! report and the comparison against reference windows.
//!
//! Layout under the output directory:
//!
//! ```text
//! run.conf                          resolved configuration
//! transitions.json
//! scenario_<label>/seed_<s>.csv
//! scenario_<label>/seed_<s>.normalized.csv
//! scenario_<label>/summary.csv      median / q1 / q3 per metric
//! ```

use crate::analysis::{summarize_series, ScenarioSummary, TransitionWindow};
use crate::config::{ConfigError, Emit, RunManifest};
use crate::engine::RunResult;
use crate::metrics::{normalize_series, Metric, MetricsRecord};
use crate::model::ScenarioConfig;
use serde::Serialize;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const CONFIG_FILE: &str = "run.conf";
pub const TRANSITIONS_FILE: &str = "transitions.json";

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("scenario {scenario}, seed {seed}: {metric} is not finite at t = {t}")]
    NonFinite {
        scenario: String,
        seed: u64,
        metric: Metric,
        t: u32,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{0}: no results found")]
    Missing(PathBuf),
    #[error("results are incomplete: {0} is missing")]
    Partial(PathBuf),
    #[error("{path}: {source}")]
    Config {
        path: PathBuf,
        #[source]
        source: ConfigError,
    },
    #[error(transparent)]
    Analysis(#[from] crate::analysis::AnalysisError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> OutputError + '_ {
    move |source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Decimal rendering with nine significant digits, trailing zeros trimmed.
pub fn format_value(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    // Rust's exponent formatting does the rounding; rebuild it positionally.
    let sci = format!("{:.8e}", v.abs());
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    let mut s = if exp >= 8 {
        format!("{digits}{}", "0".repeat((exp - 8) as usize))
    } else if exp >= 0 {
        let (int, frac) = digits.split_at(exp as usize + 1);
        format!("{int}.{frac}")
    } else {
        format!("0.{}{digits}", "0".repeat((-exp - 1) as usize))
    };
    if s.contains('.') {
        let trimmed = s.trim_end_matches('0').trim_end_matches('.').len();
        s.truncate(trimmed);
    }
    if v < 0.0 {
        s.insert(0, '-');
    }
    s
}

pub fn csv_header() -> String {
    let mut h = String::from("t");
    for m in Metric::ALL {
        h.push(',');
        h.push_str(m.column());
    }
    h
}

pub fn render_run_csv(series: &[MetricsRecord]) -> String {
    let mut out = csv_header();
    out.push('\n');
    for r in series {
        write!(out, "{}", r.t).unwrap();
        for m in Metric::ALL {
            out.push(',');
            if m.is_count() {
                write!(out, "{}", m.value(r) as u64).unwrap();
            } else {
                out.push_str(&format_value(m.value(r)));
            }
        }
        out.push('\n');
    }
    out
}

/// Each metric column mapped onto `[0, ceiling]` over the whole run.
pub fn render_normalized_csv(series: &[MetricsRecord]) -> String {
    let columns: Vec<Vec<f64>> = Metric::ALL
        .iter()
        .map(|m| normalize_series(&m.series(series), 0.0, m.display_ceiling()))
        .collect();
    let mut out = csv_header();
    out.push('\n');
    for (k, r) in series.iter().enumerate() {
        write!(out, "{}", r.t).unwrap();
        for col in &columns {
            out.push(',');
            out.push_str(&format_value(col[k]));
        }
        out.push('\n');
    }
    out
}

pub fn render_summary_csv(summary: &ScenarioSummary) -> String {
    let mut out = String::from("t");
    for m in Metric::ALL {
        for stat in ["median", "q1", "q3"] {
            write!(out, ",{}_{}", m.column(), stat).unwrap();
        }
    }
    out.push('\n');
    let len = summary.median(Metric::Nba).len();
    for k in 0..len {
        write!(out, "{}", k + 1).unwrap();
        for m in Metric::ALL {
            let s = &summary.metrics[&m];
            for v in [s.median[k], s.q1[k], s.q3[k]] {
                out.push(',');
                out.push_str(&format_value(v));
            }
        }
        out.push('\n');
    }
    out
}

pub fn parse_run_csv(path: &Path, text: &str) -> Result<Vec<MetricsRecord>, OutputError> {
    let bad = |line: usize, message: String| OutputError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad(1, "empty file".into()))?;
    if header != csv_header() {
        return Err(bad(1, format!("unexpected header `{header}`")));
    }
    let mut out = Vec::new();
    for (k, line) in lines.enumerate() {
        let lineno = k + 2;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != Metric::ALL.len() + 1 {
            return Err(bad(
                lineno,
                format!("expected {} fields", Metric::ALL.len() + 1),
            ));
        }
        let mut r = MetricsRecord {
            t: fields[0]
                .parse()
                .map_err(|_| bad(lineno, format!("bad step `{}`", fields[0])))?,
            ..Default::default()
        };
        for (m, field) in Metric::ALL.into_iter().zip(&fields[1..]) {
            let v: f64 = field
                .parse()
                .map_err(|_| bad(lineno, format!("bad {} value `{field}`", m.column())))?;
            match m {
                Metric::Nba => r.nba = v,
                Metric::Rsl => r.rsl = v,
                Metric::Nsa => r.nsa = v as usize,
                Metric::Roi => r.roi = v,
                Metric::Rcl => r.rcl = v,
                Metric::Ria => r.ria = v,
                Metric::Tsc => r.tsc = v,
                Metric::Sae => r.sae = v,
                Metric::NsaHigh => r.nsa_by_group[0] = v as usize,
                Metric::NsaMid => r.nsa_by_group[1] = v as usize,
                Metric::NsaLow => r.nsa_by_group[2] = v as usize,
            }
        }
        out.push(r);
    }
    Ok(out)
}

pub fn scenario_dir(root: &Path, scenario: &ScenarioConfig) -> PathBuf {
    root.join(format!("scenario_{}", scenario.label()))
}

pub fn run_csv_path(root: &Path, scenario: &ScenarioConfig, seed: u64) -> PathBuf {
    scenario_dir(root, scenario).join(format!("seed_{seed}.csv"))
}

fn write_file(path: &Path, contents: &str) -> Result<(), OutputError> {
    fs::write(path, contents).map_err(io_err(path))
}

pub fn check_finite(result: &RunResult) -> Result<(), OutputError> {
    for r in &result.series {
        for m in Metric::ALL {
            if !m.value(r).is_finite() {
                return Err(OutputError::NonFinite {
                    scenario: result.scenario.label().to_string(),
                    seed: result.seed,
                    metric: m,
                    t: r.t,
                });
            }
        }
    }
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct TransitionsEntry {
    pub scenario: String,
    pub metric: String,
    pub seeds: usize,
    /// Windows on the seed-median series.
    pub windows: Vec<TransitionWindow>,
    /// Windows found between plateaus of the seed-median series.
    pub plateau_separated: Vec<TransitionWindow>,
}

pub fn transitions_report(summaries: &[ScenarioSummary]) -> Vec<TransitionsEntry> {
    summaries
        .iter()
        .flat_map(|s| {
            s.metrics.iter().map(move |(m, ms)| TransitionsEntry {
                scenario: s.scenario.label().to_string(),
                metric: m.column().to_string(),
                seeds: s.seeds.len(),
                windows: ms.transitions.clone(),
                plateau_separated: ms.sharp_transitions.clone(),
            })
        })
        .collect()
}

/// Writes every requested artifact for a finished suite.
pub fn write_suite(
    manifest: &RunManifest,
    results: &[RunResult],
    summaries: &[ScenarioSummary],
) -> Result<(), OutputError> {
    for r in results {
        check_finite(r)?;
    }
    let root = &manifest.output_dir;
    fs::create_dir_all(root).map_err(io_err(root))?;
    write_file(&root.join(CONFIG_FILE), &manifest.to_config_text())?;
    for s in &manifest.scenarios {
        let dir = scenario_dir(root, s);
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    }
    for r in results {
        if manifest.emit.contains(&Emit::RawCsv) {
            write_file(
                &run_csv_path(root, &r.scenario, r.seed),
                &render_run_csv(&r.series),
            )?;
        }
        if manifest.emit.contains(&Emit::NormalizedCsv) {
            let path =
                scenario_dir(root, &r.scenario).join(format!("seed_{}.normalized.csv", r.seed));
            write_file(&path, &render_normalized_csv(&r.series))?;
        }
    }
    if manifest.emit.contains(&Emit::Summary) {
        for s in summaries {
            write_file(
                &scenario_dir(root, &s.scenario).join("summary.csv"),
                &render_summary_csv(s),
            )?;
        }
    }
    if manifest.emit.contains(&Emit::TransitionsJson) {
        let json = serde_json::to_string_pretty(&transitions_report(summaries))
            .expect("plain data serialises");
        write_file(&root.join(TRANSITIONS_FILE), &(json + "\n"))?;
    }
    Ok(())
}

/// Published collapse windows per preset scenario, read as onset/end steps
/// of the stressed-agent count. 5b has a single drawn-out decline.
pub const REFERENCE_WINDOWS: [(&str, &[(u32, u32)]); 6] = [
    ("1", &[(100, 122), (145, 150)]),
    ("2", &[(67, 90), (108, 112)]),
    ("3", &[(66, 89), (99, 105)]),
    ("4", &[(62, 84), (99, 105)]),
    ("5a", &[(73, 98), (123, 137)]),
    ("5b", &[(47, 123)]),
];

/// Steps by which a detected onset or end may miss its reference.
pub const REPORT_TOLERANCE: u32 = 7;

pub fn reference_windows(label: &str) -> Option<&'static [(u32, u32)]> {
    REFERENCE_WINDOWS
        .iter()
        .find(|(l, _)| *l == label)
        .map(|(_, w)| *w)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub scenario: String,
    pub seeds: usize,
    pub detected: Vec<TransitionWindow>,
    pub reference: Option<&'static [(u32, u32)]>,
    pub pass: Option<bool>,
}

fn windows_match(detected: &[TransitionWindow], reference: &[(u32, u32)]) -> bool {
    detected.len() == reference.len()
        && detected.iter().zip(reference).all(|(d, &(on, end))| {
            d.onset_t.abs_diff(on) <= REPORT_TOLERANCE && d.end_t.abs_diff(end) <= REPORT_TOLERANCE
        })
}

pub fn report_rows(summaries: &[ScenarioSummary]) -> Vec<ReportRow> {
    summaries
        .iter()
        .map(|s| {
            let label = s.scenario.label();
            let detected = s.metrics[&Metric::Nsa].sharp_transitions.clone();
            let reference = reference_windows(label);
            ReportRow {
                scenario: label.to_string(),
                seeds: s.seeds.len(),
                pass: reference.map(|r| windows_match(&detected, r)),
                detected,
                reference,
            }
        })
        .collect()
}

pub fn render_report(rows: &[ReportRow]) -> String {
    let fmt_windows = |w: &mut dyn Iterator<Item = (u32, u32)>| {
        let parts: Vec<String> = w.map(|(a, b)| format!("{a}-{b}")).collect();
        if parts.is_empty() {
            "none".to_string()
        } else {
            parts.join(", ")
        }
    };
    let mut out = String::new();
    writeln!(
        out,
        "Collapse windows of the seed-median stressed-agent count (tolerance +/-{REPORT_TOLERANCE} steps)"
    )
    .unwrap();
    writeln!(
        out,
        "{:<9} {:<13} {:<22} {:<22} result",
        "scenario", "seeds", "detected", "reference"
    )
    .unwrap();
    for row in rows {
        let seeds = if row.seeds == 1 {
            "1 (single)".to_string()
        } else {
            row.seeds.to_string()
        };
        let detected = fmt_windows(&mut row.detected.iter().map(|w| (w.onset_t, w.end_t)));
        let reference = match row.reference {
            Some(r) => fmt_windows(&mut r.iter().copied()),
            None => "-".to_string(),
        };
        let result = match row.pass {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None => "n/a",
        };
        writeln!(
            out,
            "{:<9} {:<13} {:<22} {:<22} {}",
            row.scenario, seeds, detected, reference, result
        )
        .unwrap();
    }
    if rows.iter().any(|r| r.seeds == 1) {
        writeln!(
            out,
            "note: single-seed statistics; medians equal the one run"
        )
        .unwrap();
    }
    out
}

/// Reloads a results directory and summarises it per scenario.
pub fn load_suite(root: &Path) -> Result<Vec<ScenarioSummary>, OutputError> {
    let conf = root.join(CONFIG_FILE);
    if !conf.is_file() {
        return Err(OutputError::Missing(root.to_path_buf()));
    }
    let text = fs::read_to_string(&conf).map_err(io_err(&conf))?;
    let manifest = RunManifest::parse(&text).map_err(|source| OutputError::Config {
        path: conf.clone(),
        source,
    })?;
    manifest
        .scenarios
        .iter()
        .map(|scenario| {
            let runs = manifest
                .seeds
                .iter()
                .map(|&seed| {
                    let path = run_csv_path(root, scenario, seed);
                    if !path.is_file() {
                        return Err(OutputError::Partial(path));
                    }
                    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
                    let series = parse_run_csv(&path, &text)?;
                    if series.len() != manifest.params.horizon as usize {
                        return Err(OutputError::Partial(path));
                    }
                    Ok(series)
                })
                .collect::<Result<Vec<_>, _>>()?;
            let refs: Vec<&[MetricsRecord]> = runs.iter().map(Vec::as_slice).collect();
            Ok(summarize_series(*scenario, manifest.seeds.clone(), &refs)?)
        })
        .collect()
}
