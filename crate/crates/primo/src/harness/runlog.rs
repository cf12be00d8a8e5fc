//! Append-only run logs: one header record, one line per trial, one end
//! record. Line-delimited JSON keeps the files diffable and crash-safe.
//!
//! Logs are byte-deterministic: re-running the same cell reproduces the file
//! exactly. The `wall_ms` field is reserved in format v1 and always written
//! as 0 so that determinism holds at file level.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{PrimoError, Result};

pub const RUNLOG_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrialStatus {
    Ok,
    Failed,
}

/// One evaluation: configuration, fidelity, outcome, and budget accounting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub index: usize,
    /// Raw-scale parameter values, in search-space order.
    pub config: Vec<f64>,
    pub fidelity: u32,
    pub is_continuation: bool,
    /// Minimized objective values; absent for failed evaluations.
    pub objectives: Option<Vec<f64>>,
    /// Scalarized target fed to the surrogate, when one was produced
    /// (includes imputed values of failed BO trials).
    pub scalarized: Option<f64>,
    /// Equivalent-evaluation cost of this trial (fidelity delta / z_max).
    pub delta: f64,
    /// Running sum of deltas.
    pub cumulative: f64,
    /// Reserved in format v1; always 0.
    pub wall_ms: u64,
    pub status: TrialStatus,
}

/// Snapshot of the tunable defaults a run was produced with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefaultsSnapshot {
    pub eta: u32,
    pub n_init: f64,
    pub epsilon: f64,
    pub candidate_budget: usize,
    pub prior_sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunHeader {
    pub version: u32,
    pub optimizer: String,
    pub benchmark: String,
    pub param_names: Vec<String>,
    pub n_objectives: usize,
    pub z_max: u32,
    pub reference_point: Vec<f64>,
    pub seed: u64,
    pub prior_condition: String,
    pub budget: f64,
    pub defaults: DefaultsSnapshot,
}

/// A completed run: immutable header plus the ordered trial sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    pub header: RunHeader,
    pub trials: Vec<Trial>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum Record {
    Header(RunHeader),
    Trial(Trial),
    End { trials: usize, total: f64 },
}

impl RunLog {
    pub fn total_evaluations(&self) -> f64 {
        self.trials.last().map(|t| t.cumulative).unwrap_or(0.0)
    }

    /// Serializes header, trials and the end record as JSON lines.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let mut push = |r: &Record| {
            out.push_str(&serde_json::to_string(r).expect("log records serialize"));
            out.push('\n');
        };
        push(&Record::Header(self.header.clone()));
        for t in &self.trials {
            push(&Record::Trial(t.clone()));
        }
        push(&Record::End { trials: self.trials.len(), total: self.total_evaluations() });
        out
    }

    pub fn write_to(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        // Write-and-rename so partially written cells never look complete.
        let tmp = path.with_extension("tmp");
        {
            let mut f = std::fs::File::create(&tmp)?;
            f.write_all(self.to_jsonl().as_bytes())?;
        }
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn from_jsonl(text: &str) -> Result<RunLog> {
        let mut header: Option<RunHeader> = None;
        let mut trials = Vec::new();
        let mut end: Option<(usize, f64)> = None;
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let record: Record = serde_json::from_str(line)
                .map_err(|e| PrimoError::parse(format!("log line {}: {e}", i + 1)))?;
            match record {
                Record::Header(h) => {
                    if header.is_some() {
                        return Err(PrimoError::parse("duplicate header record"));
                    }
                    header = Some(h);
                }
                Record::Trial(t) => trials.push(t),
                Record::End { trials, total } => end = Some((trials, total)),
            }
        }
        let header = header.ok_or_else(|| PrimoError::parse("missing header record"))?;
        let (count, _) = end.ok_or_else(|| PrimoError::parse("missing end record (incomplete log)"))?;
        if count != trials.len() {
            return Err(PrimoError::parse(format!(
                "end record says {count} trials, found {}",
                trials.len()
            )));
        }
        let log = RunLog { header, trials };
        log.check_accounting()?;
        Ok(log)
    }

    pub fn read_from(path: &Path) -> Result<RunLog> {
        let file = std::fs::File::open(path)?;
        let mut text = String::new();
        for line in BufReader::new(file).lines() {
            text.push_str(&line?);
            text.push('\n');
        }
        RunLog::from_jsonl(&text)
            .map_err(|e| PrimoError::parse(format!("{}: {e}", path.display())))
    }

    /// True when the file exists and carries a matching end record.
    pub fn is_complete(path: &Path) -> bool {
        RunLog::read_from(path).is_ok()
    }

    /// The cumulative column must be the exact running sum of deltas.
    pub fn check_accounting(&self) -> Result<()> {
        let mut sum = 0.0;
        for t in &self.trials {
            sum += t.delta;
            if (t.cumulative - sum).abs() > 1e-9 {
                return Err(PrimoError::Numeric(format!(
                    "trial {}: cumulative {} diverges from running sum {sum}",
                    t.index, t.cumulative
                )));
            }
            if !(t.delta > 0.0 && t.delta <= 1.0 + 1e-12) {
                return Err(PrimoError::Numeric(format!(
                    "trial {}: delta {} outside (0, 1]",
                    t.index, t.delta
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_log() -> RunLog {
        RunLog {
            header: RunHeader {
                version: RUNLOG_FORMAT_VERSION,
                optimizer: "rs".into(),
                benchmark: "bisphere-2d".into(),
                param_names: vec!["x0".into(), "x1".into()],
                n_objectives: 2,
                z_max: 27,
                reference_point: vec![1.6, 1.6],
                seed: 3,
                prior_condition: "none".into(),
                budget: 2.0,
                defaults: DefaultsSnapshot {
                    eta: 3,
                    n_init: 5.0,
                    epsilon: 0.25,
                    candidate_budget: 512,
                    prior_sigma: 0.25,
                },
            },
            trials: vec![
                Trial {
                    index: 0,
                    config: vec![0.3, 0.4],
                    fidelity: 27,
                    is_continuation: false,
                    objectives: Some(vec![0.1, 0.5]),
                    scalarized: None,
                    delta: 1.0,
                    cumulative: 1.0,
                    wall_ms: 0,
                    status: TrialStatus::Ok,
                },
                Trial {
                    index: 1,
                    config: vec![0.6, 0.1],
                    fidelity: 27,
                    is_continuation: false,
                    objectives: None,
                    scalarized: None,
                    delta: 1.0,
                    cumulative: 2.0,
                    wall_ms: 0,
                    status: TrialStatus::Failed,
                },
            ],
        }
    }

    #[test]
    fn jsonl_round_trip() {
        let log = sample_log();
        let text = log.to_jsonl();
        assert_eq!(text.lines().count(), 4, "header + 2 trials + end");
        let back = RunLog::from_jsonl(&text).unwrap();
        assert_eq!(back, log);
        // Determinism at byte level.
        assert_eq!(text, back.to_jsonl());
    }

    #[test]
    fn incomplete_or_corrupt_logs_are_rejected() {
        let log = sample_log();
        let text = log.to_jsonl();
        let without_end: String =
            text.lines().take(3).map(|l| format!("{l}\n")).collect();
        assert!(RunLog::from_jsonl(&without_end).is_err());

        let mut bad = log.clone();
        bad.trials[1].cumulative = 5.0;
        assert!(RunLog::from_jsonl(&bad.to_jsonl()).is_err(), "accounting drift detected");
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("seed_3.log");
        let log = sample_log();
        log.write_to(&path).unwrap();
        assert!(RunLog::is_complete(&path));
        assert_eq!(RunLog::read_from(&path).unwrap(), log);
    }
}
