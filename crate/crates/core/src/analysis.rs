//! Transition detection on metric series and cross-seed summaries.
//!
//! Series positions map to time as `t = index + 1`, matching the engine's
//! output which starts at step 1.

use crate::engine::RunResult;
use crate::metrics::{normalize_series, Metric, MetricsRecord};
use crate::model::ScenarioConfig;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

pub const LOW_FRAC: f64 = 0.1;
pub const HIGH_FRAC: f64 = 0.9;
pub const MIN_PLATEAU: usize = 20;
/// A step belongs to a plateau when it moves by at most this share of the
/// series range.
pub const PLATEAU_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Rising,
    Falling,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionWindow {
    #[serde(rename = "onset")]
    pub onset_t: u32,
    #[serde(rename = "end")]
    pub end_t: u32,
    pub direction: Direction,
}

fn to_t(index: usize) -> u32 {
    index as u32 + 1
}

fn scan_windows(normalized: &[f64], low: f64, high: f64) -> Vec<TransitionWindow> {
    let mut windows = Vec::new();
    let mut armed_rise = false;
    let mut armed_fall = false;
    let mut pending: Option<(usize, Direction)> = None;
    for (k, &x) in normalized.iter().enumerate() {
        if x < low {
            armed_rise = true;
            if matches!(pending, Some((_, Direction::Rising))) {
                pending = None;
            }
        }
        if x > high {
            armed_fall = true;
            if matches!(pending, Some((_, Direction::Falling))) {
                pending = None;
            }
        }
        if pending.is_none() {
            if armed_rise && x >= low {
                pending = Some((k, Direction::Rising));
                armed_rise = false;
            } else if armed_fall && x <= high {
                pending = Some((k, Direction::Falling));
                armed_fall = false;
            }
        }
        match pending {
            Some((onset, Direction::Rising)) if x >= high => {
                windows.push(TransitionWindow {
                    onset_t: to_t(onset),
                    end_t: to_t(k),
                    direction: Direction::Rising,
                });
                pending = None;
            }
            Some((onset, Direction::Falling)) if x <= low => {
                windows.push(TransitionWindow {
                    onset_t: to_t(onset),
                    end_t: to_t(k),
                    direction: Direction::Falling,
                });
                pending = None;
            }
            _ => {}
        }
    }
    windows
}

/// Windows over which the min-max normalised series travels between
/// `low_frac` and `high_frac` of its range.
///
/// A rising window opens at the first step at or above `low_frac` after the
/// series was below it and closes at the first step at or above `high_frac`;
/// falling windows mirror this. A window that falls back across its opening
/// threshold is abandoned. Constant series have no windows.
pub fn detect_transitions(series: &[f64], low_frac: f64, high_frac: f64) -> Vec<TransitionWindow> {
    if series.len() < 2 {
        return Vec::new();
    }
    let normalized = normalize_series(series, 0.0, 1.0);
    if normalized.iter().all(|&x| x == 0.0) {
        return Vec::new();
    }
    scan_windows(&normalized, low_frac, high_frac)
}

/// Index ranges `[start, end)` of flat runs lasting at least `min_plateau` steps.
fn plateaus(series: &[f64], min_plateau: usize) -> Vec<(usize, usize)> {
    let min = series.iter().copied().fold(f64::INFINITY, f64::min);
    let max = series.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tol = PLATEAU_TOLERANCE * (max - min);
    let mut out = Vec::new();
    let mut start = 0;
    for k in 1..=series.len() {
        let flat = k < series.len() && (series[k] - series[k - 1]).abs() <= tol;
        if !flat {
            // run of points start..k (k - start - 1 flat steps)
            if k - start > min_plateau {
                out.push((start, k));
            }
            start = k;
        }
    }
    out
}

/// Transition windows found separately in each stretch between plateaus of
/// at least `min_plateau` steps. Each stretch is normalised on its own, so a
/// small second collapse after a long flat phase still registers.
pub fn plateau_separated_transitions(
    series: &[f64],
    low_frac: f64,
    high_frac: f64,
    min_plateau: usize,
) -> Vec<TransitionWindow> {
    if series.len() < 2 {
        return Vec::new();
    }
    let flats = plateaus(series, min_plateau);
    let mut cuts = vec![0usize];
    for &(start, end) in &flats {
        cuts.push(start);
        cuts.push(end - 1);
    }
    cuts.push(series.len() - 1);
    let mut windows = Vec::new();
    for pair in cuts.chunks(2) {
        let (a, b) = (pair[0], pair[1]);
        if b <= a {
            continue;
        }
        for w in detect_transitions(&series[a..=b], low_frac, high_frac) {
            windows.push(TransitionWindow {
                onset_t: w.onset_t + a as u32,
                end_t: w.end_t + a as u32,
                direction: w.direction,
            });
        }
    }
    windows
}

/// Number of sharp transitions separated by plateaus of at least `min_plateau` steps.
pub fn count_sharp_transitions(
    series: &[f64],
    low_frac: f64,
    high_frac: f64,
    min_plateau: usize,
) -> usize {
    plateau_separated_transitions(series, low_frac, high_frac, min_plateau).len()
}

/// First step whose value reaches `level`.
pub fn first_reaching(series: &[f64], level: f64) -> Option<u32> {
    series.iter().position(|&x| x >= level).map(to_t)
}

/// First step at which the series attains its maximum.
pub fn peak_time(series: &[f64]) -> Option<u32> {
    let max = series.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    series.iter().position(|&x| x == max).map(to_t)
}

/// Median of a non-empty slice; mean of the middle pair for even lengths.
pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

/// Linear-interpolation quantile of a non-empty slice.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    let pos = q * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("no runs to summarise")]
    Empty,
    #[error("runs have different horizons ({0} and {1} steps)")]
    MixedHorizon(usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricSummary {
    pub median: Vec<f64>,
    pub q1: Vec<f64>,
    pub q3: Vec<f64>,
    /// Windows on the median series.
    pub transitions: Vec<TransitionWindow>,
    /// Plateau-separated windows on the median series.
    pub sharp_transitions: Vec<TransitionWindow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSummary {
    pub scenario: ScenarioConfig,
    pub seeds: Vec<u64>,
    pub metrics: BTreeMap<Metric, MetricSummary>,
}

impl ScenarioSummary {
    pub fn median(&self, metric: Metric) -> &[f64] {
        &self.metrics[&metric].median
    }
}

fn summarize_metric(series: &[Vec<f64>]) -> MetricSummary {
    let len = series[0].len();
    let mut median_s = Vec::with_capacity(len);
    let mut q1 = Vec::with_capacity(len);
    let mut q3 = Vec::with_capacity(len);
    let mut column = Vec::with_capacity(series.len());
    for k in 0..len {
        column.clear();
        column.extend(series.iter().map(|s| s[k]));
        median_s.push(median(&column));
        q1.push(quantile(&column, 0.25));
        q3.push(quantile(&column, 0.75));
    }
    MetricSummary {
        transitions: detect_transitions(&median_s, LOW_FRAC, HIGH_FRAC),
        sharp_transitions: plateau_separated_transitions(
            &median_s,
            LOW_FRAC,
            HIGH_FRAC,
            MIN_PLATEAU,
        ),
        median: median_s,
        q1,
        q3,
    }
}

/// Summarises a series set (one metrics series per seed) for one scenario.
pub fn summarize_series(
    scenario: ScenarioConfig,
    seeds: Vec<u64>,
    runs: &[&[MetricsRecord]],
) -> Result<ScenarioSummary, AnalysisError> {
    let first = runs.first().ok_or(AnalysisError::Empty)?.len();
    if let Some(bad) = runs.iter().find(|r| r.len() != first) {
        return Err(AnalysisError::MixedHorizon(first, bad.len()));
    }
    let metrics = Metric::ALL
        .iter()
        .map(|&m| {
            let per_seed: Vec<Vec<f64>> = runs.iter().map(|r| m.series(r)).collect();
            (m, summarize_metric(&per_seed))
        })
        .collect();
    Ok(ScenarioSummary {
        scenario,
        seeds,
        metrics,
    })
}

/// Groups results by scenario (first-appearance order) and summarises each.
pub fn summarize_runs(results: &[RunResult]) -> Result<Vec<ScenarioSummary>, AnalysisError> {
    let first = results.first().ok_or(AnalysisError::Empty)?;
    if let Some(bad) = results
        .iter()
        .find(|r| r.series.len() != first.series.len())
    {
        return Err(AnalysisError::MixedHorizon(
            first.series.len(),
            bad.series.len(),
        ));
    }
    let mut order: Vec<ScenarioConfig> = Vec::new();
    for r in results {
        if !order.contains(&r.scenario) {
            order.push(r.scenario);
        }
    }
    order
        .into_iter()
        .map(|scenario| {
            let group: Vec<&RunResult> =
                results.iter().filter(|r| r.scenario == scenario).collect();
            let seeds = group.iter().map(|r| r.seed).collect();
            let series: Vec<&[MetricsRecord]> = group.iter().map(|r| r.series.as_slice()).collect();
            summarize_series(scenario, seeds, &series)
        })
        .collect()
}
