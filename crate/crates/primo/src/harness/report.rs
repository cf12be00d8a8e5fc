//! Trace extraction and relative-rank reports over a results directory.
//!
//! Hypervolume is computed at every whole equivalent evaluation from the
//! maximum-fidelity observations seen so far (last value carried forward).
//! Ranks are assigned per (condition, benchmark, seed, step) — higher
//! hypervolume ranks better, ties get mean ranks — then averaged; for
//! one-objective runs the trace is the reference-bounded interval, so
//! ranking by it equals ranking by normalized regret.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{PrimoError, Result};
use crate::harness::runlog::{RunLog, TrialStatus};
use crate::pareto::{hypervolume, ObjectiveVector, ReferencePoint};

/// Hypervolume of the run's max-fidelity observations at each whole
/// equivalent evaluation `k = 1..floor(total)`. Non-decreasing by
/// construction; reproducible from the log alone.
pub fn hv_trace(log: &RunLog) -> Result<Vec<(usize, f64)>> {
    let reference = ReferencePoint::new(log.header.reference_point.clone())?;
    let total = log.total_evaluations();
    let steps = (total + 1e-9).floor() as usize;
    let mut trace = Vec::with_capacity(steps);
    let mut points: Vec<ObjectiveVector> = Vec::new();
    let mut next = 0usize;
    for k in 1..=steps {
        while next < log.trials.len() && log.trials[next].cumulative <= k as f64 + 1e-9 {
            let t = &log.trials[next];
            if t.status == TrialStatus::Ok && t.fidelity == log.header.z_max {
                if let Some(y) = &t.objectives {
                    points.push(ObjectiveVector::new(y.clone())?);
                }
            }
            next += 1;
        }
        trace.push((k, hypervolume(&points, &reference)?));
    }
    Ok(trace)
}

/// Best (lowest) first-objective value seen so far at each whole equivalent
/// evaluation; for single-objective runs this is the best-value trace.
pub fn best_value_trace(log: &RunLog) -> Vec<(usize, f64)> {
    let total = log.total_evaluations();
    let steps = (total + 1e-9).floor() as usize;
    let mut best = f64::INFINITY;
    let mut next = 0usize;
    let mut trace = Vec::with_capacity(steps);
    for k in 1..=steps {
        while next < log.trials.len() && log.trials[next].cumulative <= k as f64 + 1e-9 {
            let t = &log.trials[next];
            if t.status == TrialStatus::Ok && t.fidelity == log.header.z_max {
                if let Some(y) = &t.objectives {
                    best = best.min(y[0]);
                }
            }
            next += 1;
        }
        trace.push((k, best));
    }
    trace
}

/// How cells are aggregated in the rank report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Grouping {
    /// One table per prior condition.
    PerCondition,
    /// Ranks averaged over every condition present.
    Overall,
}

/// Mean relative rank with its standard error over the aggregated cells.
#[derive(Debug, Clone, PartialEq)]
pub struct RankRow {
    pub condition: String,
    pub step: usize,
    pub optimizer: String,
    pub mean_rank: f64,
    pub std_error: f64,
    pub cells: usize,
}

#[derive(Debug, Clone)]
pub struct RankReport {
    pub rows: Vec<RankRow>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct CellKey {
    condition: String,
    benchmark: String,
    seed: u64,
}

/// Builds mean relative ranks per optimizer per step from a results
/// directory laid out as `<condition>/<benchmark>/<optimizer>/seed_<s>.log`.
///
/// Every optimizer must be present for every (condition, benchmark, seed)
/// cell; holes in the product are an error listing the missing cells.
pub fn rank_report(results_dir: &Path, grouping: Grouping) -> Result<RankReport> {
    let logs = collect_logs(results_dir)?;
    if logs.is_empty() {
        return Err(PrimoError::Missing(format!(
            "no complete run logs under {}",
            results_dir.display()
        )));
    }

    let mut optimizers: Vec<String> = logs.iter().map(|(o, _, _)| o.clone()).collect();
    optimizers.sort();
    optimizers.dedup();
    let mut cells: Vec<CellKey> = logs.iter().map(|(_, c, _)| c.clone()).collect();
    cells.sort();
    cells.dedup();

    // Index traces and check for holes.
    let mut traces: BTreeMap<(String, CellKey), Vec<(usize, f64)>> = BTreeMap::new();
    for (optimizer, cell, log) in &logs {
        traces.insert((optimizer.clone(), cell.clone()), hv_trace(log)?);
    }
    let mut missing = Vec::new();
    for cell in &cells {
        for optimizer in &optimizers {
            if !traces.contains_key(&(optimizer.clone(), cell.clone())) {
                missing.push(format!(
                    "{}/{}/{}/seed_{}",
                    cell.condition, cell.benchmark, optimizer, cell.seed
                ));
            }
        }
    }
    if !missing.is_empty() {
        return Err(PrimoError::Missing(format!(
            "incomplete grid, missing cells: {}",
            missing.join(", ")
        )));
    }

    let steps = traces.values().map(|t| t.len()).min().unwrap_or(0);
    if steps == 0 {
        return Err(PrimoError::Missing("runs too short to rank (no whole evaluation)".into()));
    }

    // rank-then-mean: rank within each cell and step, then average.
    let mut acc: BTreeMap<(String, usize, String), Vec<f64>> = BTreeMap::new();
    for cell in &cells {
        let group_label = match grouping {
            Grouping::PerCondition => cell.condition.clone(),
            Grouping::Overall => "overall".to_string(),
        };
        for k in 1..=steps {
            let hvs: Vec<f64> = optimizers
                .iter()
                .map(|o| traces[&(o.clone(), cell.clone())][k - 1].1)
                .collect();
            let ranks = mean_ranks_descending(&hvs);
            for (o, r) in optimizers.iter().zip(ranks) {
                acc.entry((group_label.clone(), k, o.clone())).or_default().push(r);
            }
        }
    }

    let rows = acc
        .into_iter()
        .map(|((condition, step, optimizer), ranks)| {
            let n = ranks.len() as f64;
            let mean = ranks.iter().sum::<f64>() / n;
            let std_error = if ranks.len() > 1 {
                let var = ranks.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0);
                (var / n).sqrt()
            } else {
                0.0
            };
            RankRow { condition, step, optimizer, mean_rank: mean, std_error, cells: ranks.len() }
        })
        .collect();
    Ok(RankReport { rows })
}

/// Fractional ranks, best = 1; higher value ranks better; ties share the
/// mean of their positions.
fn mean_ranks_descending(values: &[f64]) -> Vec<f64> {
    let m = values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).expect("finite values"));
    let mut ranks = vec![0.0; m];
    let mut i = 0;
    while i < m {
        let mut j = i;
        while j + 1 < m && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let mean_rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = mean_rank;
        }
        i = j + 1;
    }
    ranks
}

type LoadedLog = (String, CellKey, RunLog);

fn collect_logs(results_dir: &Path) -> Result<Vec<LoadedLog>> {
    let mut logs = Vec::new();
    if !results_dir.is_dir() {
        return Err(PrimoError::Missing(format!("{} is not a directory", results_dir.display())));
    }
    for condition in sorted_dirs(results_dir)? {
        if condition.file_name().and_then(|n| n.to_str()) == Some("priors") {
            continue;
        }
        for benchmark in sorted_dirs(&condition)? {
            for optimizer in sorted_dirs(&benchmark)? {
                for entry in sorted_files(&optimizer, "log")? {
                    let stem = entry.file_stem().and_then(|s| s.to_str()).unwrap_or("");
                    let seed: u64 = stem
                        .strip_prefix("seed_")
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| {
                            PrimoError::parse(format!("unexpected log name {}", entry.display()))
                        })?;
                    let log = RunLog::read_from(&entry)?;
                    logs.push((
                        name_of(&optimizer),
                        CellKey {
                            condition: name_of(&condition),
                            benchmark: name_of(&benchmark),
                            seed,
                        },
                        log,
                    ));
                }
            }
        }
    }
    Ok(logs)
}

fn name_of(path: &Path) -> String {
    path.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string()
}

fn sorted_dirs(path: &Path) -> Result<Vec<PathBuf>> {
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(path)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    Ok(dirs)
}

fn sorted_files(path: &Path, extension: &str) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(path)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().and_then(|x| x.to_str()) == Some(extension))
        .collect();
    files.sort();
    Ok(files)
}

impl RankReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("condition,step,optimizer,mean_rank,std_error,cells\n");
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.condition, r.step, r.optimizer, r.mean_rank, r.std_error, r.cells
            )
            .expect("string write");
        }
        out
    }

    /// Minimal static line chart of mean rank against budget, one polyline
    /// per optimizer, one panel per condition group.
    pub fn to_svg(&self) -> String {
        let mut conditions: Vec<String> = self.rows.iter().map(|r| r.condition.clone()).collect();
        conditions.sort();
        conditions.dedup();
        let mut optimizers: Vec<String> = self.rows.iter().map(|r| r.optimizer.clone()).collect();
        optimizers.sort();
        optimizers.dedup();
        let steps = self.rows.iter().map(|r| r.step).max().unwrap_or(1);
        let max_rank = optimizers.len() as f64;

        const W: f64 = 460.0;
        const H: f64 = 300.0;
        const MARGIN: f64 = 45.0;
        let colors =
            ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"];
        let mut svg = String::new();
        let total_w = W * conditions.len() as f64;
        write!(
            svg,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{total_w}\" height=\"{}\">",
            H + 20.0 * optimizers.len() as f64
        )
        .unwrap();
        for (ci, condition) in conditions.iter().enumerate() {
            let x0 = ci as f64 * W + MARGIN;
            let y0 = H - MARGIN;
            let plot_w = W - 2.0 * MARGIN;
            let plot_h = H - 2.0 * MARGIN;
            write!(
                svg,
                "<text x=\"{}\" y=\"20\" font-size=\"13\" text-anchor=\"middle\">{condition}</text>",
                x0 + plot_w / 2.0
            )
            .unwrap();
            write!(
                svg,
                "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{}\" y2=\"{y0}\" stroke=\"black\"/>",
                x0 + plot_w
            )
            .unwrap();
            write!(
                svg,
                "<line x1=\"{x0}\" y1=\"{}\" x2=\"{x0}\" y2=\"{y0}\" stroke=\"black\"/>",
                y0 - plot_h
            )
            .unwrap();
            for (oi, optimizer) in optimizers.iter().enumerate() {
                let mut pts = String::new();
                for r in self.rows.iter().filter(|r| &r.condition == condition && &r.optimizer == optimizer) {
                    let x = x0 + (r.step as f64 - 1.0) / ((steps.max(2) - 1) as f64) * plot_w;
                    let y = y0 - (max_rank - r.mean_rank) / (max_rank - 1.0).max(1.0) * plot_h;
                    write!(pts, "{x:.1},{y:.1} ").unwrap();
                }
                write!(
                    svg,
                    "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>",
                    colors[oi % colors.len()],
                    pts.trim_end()
                )
                .unwrap();
            }
        }
        for (oi, optimizer) in optimizers.iter().enumerate() {
            let y = H + 15.0 * (oi as f64 + 1.0);
            write!(
                svg,
                "<rect x=\"{MARGIN}\" y=\"{}\" width=\"12\" height=\"4\" fill=\"{}\"/>\
                 <text x=\"{}\" y=\"{}\" font-size=\"11\">{optimizer}</text>",
                y - 4.0,
                colors[oi % colors.len()],
                MARGIN + 18.0,
                y
            )
            .unwrap();
        }
        svg.push_str("</svg>");
        svg
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::runlog::{DefaultsSnapshot, RunHeader, Trial, RUNLOG_FORMAT_VERSION};

    fn header(budget: f64) -> RunHeader {
        RunHeader {
            version: RUNLOG_FORMAT_VERSION,
            optimizer: "rs".into(),
            benchmark: "b".into(),
            param_names: vec!["x0".into()],
            n_objectives: 2,
            z_max: 27,
            reference_point: vec![3.0, 3.0],
            seed: 0,
            prior_condition: "none".into(),
            budget,
            defaults: DefaultsSnapshot {
                eta: 3,
                n_init: 5.0,
                epsilon: 0.25,
                candidate_budget: 512,
                prior_sigma: 0.25,
            },
        }
    }

    fn trial(index: usize, fidelity: u32, objectives: Option<Vec<f64>>, delta: f64, cumulative: f64) -> Trial {
        Trial {
            index,
            config: vec![0.5],
            fidelity,
            is_continuation: false,
            objectives,
            scalarized: None,
            delta,
            cumulative,
            wall_ms: 0,
            status: TrialStatus::Ok,
        }
    }

    #[test]
    fn blackbox_trace_has_one_point_per_trial() {
        let log = RunLog {
            header: header(3.0),
            trials: vec![
                trial(0, 27, Some(vec![2.0, 2.0]), 1.0, 1.0),
                trial(1, 27, Some(vec![1.0, 2.5]), 1.0, 2.0),
                trial(2, 27, Some(vec![2.5, 2.5]), 1.0, 3.0),
            ],
        };
        let trace = hv_trace(&log).unwrap();
        assert_eq!(trace.len(), 3, "floor of the final budget");
        assert_eq!(trace[0], (1, 1.0));
        // Union of [(2,2),(3,3)] and [(1,2.5),(3,3)] is 1 + 1 - 0.5.
        assert!((trace[1].1 - 1.5).abs() < 1e-12, "new non-dominated point grows HV");
        assert_eq!(trace[1].1, trace[2].1, "dominated late trial leaves the trace flat");
        assert!(trace.windows(2).all(|w| w[1].1 >= w[0].1), "non-decreasing");
    }

    #[test]
    fn low_fidelity_trials_carry_no_hv() {
        // A low-fidelity trial then its continuation to z_max, then a fresh
        // full evaluation; only max-fidelity observations enter the trace.
        let log = RunLog {
            header: header(2.0),
            trials: vec![
                trial(0, 1, Some(vec![0.1, 0.1]), 1.0 / 27.0, 1.0 / 27.0),
                trial(1, 27, Some(vec![2.0, 2.0]), 26.0 / 27.0, 1.0),
                trial(2, 27, Some(vec![1.0, 1.0]), 1.0, 2.0),
            ],
        };
        let trace = hv_trace(&log).unwrap();
        assert_eq!(trace.len(), 2);
        assert_eq!(trace[0].1, 1.0, "the strong low-fidelity value is ignored");
        assert!((trace[1].1 - 4.0).abs() < 1e-12);
    }

    #[test]
    fn mean_rank_tie_rule() {
        assert_eq!(mean_ranks_descending(&[3.0, 1.0, 2.0]), vec![1.0, 3.0, 2.0]);
        assert_eq!(mean_ranks_descending(&[2.0, 2.0]), vec![1.5, 1.5]);
        assert_eq!(mean_ranks_descending(&[1.0, 1.0, 1.0]), vec![2.0, 2.0, 2.0]);
    }
}
