//! Per-flow relative slowdown error and comparison reports.
//!
//! Percentiles interpolate linearly between order statistics: the `q`
//! quantile of sorted `x[0..n]` sits at position `q·(n−1)`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{io_err, Error, Result};
use crate::record::RunRecord;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    /// `(id, (est − truth)/truth)` in ascending id order.
    pub per_flow: Vec<(u32, f64)>,
    pub mean_abs: f64,
    pub p90_abs: f64,
    pub p99_truth: f64,
    pub p99_est: f64,
    /// Relative error of the 99th-percentile slowdown.
    pub p99_slowdown_err: f64,
}

pub fn relative_error(est: f64, truth: f64) -> f64 {
    (est - truth) / truth
}

/// Linear-interpolation percentile; `q` in `[0, 1]`. NaN for no data.
pub fn percentile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Per-flow slowdown errors of `est` against `truth`. Both records must
/// hold the same flow ids.
pub fn relative_error_stats(est: &RunRecord, truth: &RunRecord) -> Result<ErrorStats> {
    let truth_by_id: BTreeMap<u32, f64> = truth.flows.iter().map(|f| (f.id, f.slowdown)).collect();
    let est_by_id: BTreeMap<u32, f64> = est.flows.iter().map(|f| (f.id, f.slowdown)).collect();
    if truth_by_id.len() != truth.flows.len() || est_by_id.len() != est.flows.len() {
        return Err(Error::FlowSetMismatch("duplicate flow ids".into()));
    }
    if truth_by_id.keys().ne(est_by_id.keys()) {
        let only_truth = truth_by_id.keys().filter(|k| !est_by_id.contains_key(k)).count();
        let only_est = est_by_id.keys().filter(|k| !truth_by_id.contains_key(k)).count();
        return Err(Error::FlowSetMismatch(format!(
            "{only_truth} flows only in truth, {only_est} only in estimate"
        )));
    }
    if truth_by_id.is_empty() {
        return Err(Error::FlowSetMismatch("no flows".into()));
    }
    let per_flow: Vec<(u32, f64)> = truth_by_id
        .iter()
        .map(|(&id, &t)| (id, relative_error(est_by_id[&id], t)))
        .collect();
    let abs: Vec<f64> = per_flow.iter().map(|&(_, e)| e.abs()).collect();
    let t: Vec<f64> = truth_by_id.values().copied().collect();
    let e: Vec<f64> = est_by_id.values().copied().collect();
    let (p99_truth, p99_est) = (percentile(&t, 0.99), percentile(&e, 0.99));
    Ok(ErrorStats {
        mean_abs: mean(&abs),
        p90_abs: percentile(&abs, 0.9),
        p99_truth,
        p99_est,
        p99_slowdown_err: relative_error(p99_est, p99_truth),
        per_flow,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RowStatus {
    Ok,
    Missing,
    Mismatch,
}

/// One line of `report.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub scenario: String,
    pub backend: String,
    pub status: RowStatus,
    pub n_flows: Option<usize>,
    pub mean_abs_err: Option<f64>,
    pub p90_abs_err: Option<f64>,
    pub p99_slowdown_err: Option<f64>,
    /// Reference wall time divided by this backend's wall time.
    pub speedup: Option<f64>,
    pub detail: Option<String>,
}

impl ReportRow {
    fn gap(scenario: &str, backend: &str, status: RowStatus, detail: String) -> Self {
        ReportRow {
            scenario: scenario.to_string(),
            backend: backend.to_string(),
            status,
            n_flows: None,
            mean_abs_err: None,
            p90_abs_err: None,
            p99_slowdown_err: None,
            speedup: None,
            detail: Some(detail),
        }
    }
}

/// A scenario's reference run and one estimate, either possibly absent.
#[derive(Debug, Clone)]
pub struct ComparePair {
    pub scenario: String,
    pub label: String,
    pub truth: Option<RunRecord>,
    pub est: Option<RunRecord>,
}

pub fn compare_row(pair: &ComparePair) -> ReportRow {
    let (truth, est) = match (&pair.truth, &pair.est) {
        (Some(t), Some(e)) => (t, e),
        (None, _) => {
            return ReportRow::gap(&pair.scenario, &pair.label, RowStatus::Missing, "reference run missing".into())
        }
        (_, None) => {
            return ReportRow::gap(&pair.scenario, &pair.label, RowStatus::Missing, "estimate run missing".into())
        }
    };
    let backend = est.meta.backend.to_string();
    match relative_error_stats(est, truth) {
        Ok(s) => ReportRow {
            scenario: pair.scenario.clone(),
            backend,
            status: RowStatus::Ok,
            n_flows: Some(s.per_flow.len()),
            mean_abs_err: Some(s.mean_abs),
            p90_abs_err: Some(s.p90_abs),
            p99_slowdown_err: Some(s.p99_slowdown_err),
            speedup: Some(truth.meta.wall_s / est.meta.wall_s),
            detail: None,
        },
        Err(e) => ReportRow::gap(&pair.scenario, &backend, RowStatus::Mismatch, e.to_string()),
    }
}

pub fn compare_report(pairs: &[ComparePair]) -> Vec<ReportRow> {
    pairs.iter().map(compare_row).collect()
}

fn fmt_opt(v: Option<f64>, prec: usize) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.prec$}"))
}

pub fn render_text(rows: &[ReportRow]) -> String {
    let mut s = format!(
        "{:<24} {:<8} {:>7} {:>9} {:>9} {:>13} {:>10}\n",
        "scenario", "backend", "flows", "mean|e|", "p90|e|", "p99-sldn-err", "speedup"
    );
    for r in rows {
        if r.status != RowStatus::Ok {
            let tag = match r.status {
                RowStatus::Missing => "MISSING",
                _ => "MISMATCH",
            };
            let detail = r.detail.as_deref().unwrap_or("");
            let _ = writeln!(s, "{:<24} {:<8} {tag}: {detail}", r.scenario, r.backend);
            continue;
        }
        let _ = writeln!(
            s,
            "{:<24} {:<8} {:>7} {:>9} {:>9} {:>13} {:>10}",
            r.scenario,
            r.backend,
            r.n_flows.unwrap_or(0),
            fmt_opt(r.mean_abs_err, 4),
            fmt_opt(r.p90_abs_err, 4),
            fmt_opt(r.p99_slowdown_err, 4),
            r.speedup.map_or_else(|| "-".into(), |x| format!("{x:.2}x")),
        );
    }
    s
}

pub fn render_jsonl(rows: &[ReportRow]) -> String {
    rows.iter()
        .map(|r| serde_json::to_string(r).expect("rows serialize") + "\n")
        .collect()
}

fn scenario_dirs(root: &Path) -> Result<BTreeMap<String, PathBuf>> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(root).map_err(io_err(root))? {
        let p = entry.map_err(io_err(root))?.path();
        if p.is_dir() {
            let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            out.insert(name, p);
        }
    }
    Ok(out)
}

fn load_opt(dir: Option<&PathBuf>) -> Result<Option<RunRecord>> {
    match dir {
        Some(d) if RunRecord::is_run_dir(d) => RunRecord::read_dir(d).map(Some),
        _ => Ok(None),
    }
}

/// Pairs a reference directory with estimate directories. Each directory is
/// either a single run or a set of per-scenario run subdirectories.
pub fn load_compare_set(truth: &Path, ests: &[PathBuf]) -> Result<Vec<ComparePair>> {
    let mut pairs = Vec::new();
    if RunRecord::is_run_dir(truth) {
        let t = RunRecord::read_dir(truth)?;
        for e in ests {
            pairs.push(ComparePair {
                scenario: t.meta.scenario.clone(),
                label: label_of(e),
                truth: Some(t.clone()),
                est: load_opt(Some(e))?,
            });
        }
        return Ok(pairs);
    }
    let truth_set = scenario_dirs(truth)?;
    for e in ests {
        let est_set = if e.is_dir() { scenario_dirs(e)? } else { BTreeMap::new() };
        let names: std::collections::BTreeSet<&String> = truth_set.keys().chain(est_set.keys()).collect();
        for name in names {
            pairs.push(ComparePair {
                scenario: name.clone(),
                label: label_of(e),
                truth: load_opt(truth_set.get(name))?,
                est: load_opt(est_set.get(name))?,
            });
        }
    }
    Ok(pairs)
}

fn label_of(p: &Path) -> String {
    p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| p.display().to_string())
}
