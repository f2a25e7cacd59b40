//! Rolling health reports over a directory of recorded frames.

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::Context;
use boost_esr::diagnostics::{HealthBaseline, HealthMonitor, HealthReport, Thresholds};
use boost_esr::estimator::{EstimateResult, EstimateStats, Estimator};
use boost_esr::{read_frame, AcquisitionFrame};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchReport {
    pub batch: usize,
    pub frames: Vec<String>,
    /// True when this batch established the baseline.
    pub baseline: bool,
    pub report: HealthReport,
}

/// A frame left out of the reports, with the reason.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Skipped {
    pub frame: String,
    pub reason: String,
    pub kind: SkipKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SkipKind {
    /// File could not be read or parsed as a frame.
    Unreadable,
    Estimation,
    /// Single estimate left over after the last full batch.
    Leftover,
}

#[derive(Debug, Clone, Default)]
pub struct MonitorOutcome {
    pub reports: Vec<BatchReport>,
    pub skipped: Vec<Skipped>,
}

/// Regular files of `dir` sorted by name.
pub fn frame_files(dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in
        fs::read_dir(dir).with_context(|| format!("reading directory {}", dir.display()))?
    {
        let entry = entry?;
        if entry.file_type()?.is_file() {
            files.push(entry.path());
        }
    }
    files.sort();
    Ok(files)
}

fn load(path: &Path) -> boost_esr::Result<AcquisitionFrame> {
    read_frame(BufReader::new(fs::File::open(path)?))
}

fn name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn flush(
    pending: &mut Vec<(String, EstimateResult)>,
    monitor: &mut HealthMonitor,
    out: &mut MonitorOutcome,
) -> anyhow::Result<()> {
    let results: Vec<EstimateResult> = pending.iter().map(|(_, r)| *r).collect();
    let stats = EstimateStats::from_results(&results)?;
    let established = monitor.baseline().is_none();
    if established {
        monitor.set_baseline(HealthBaseline::from_stats(&stats)?)?;
    }
    out.reports.push(BatchReport {
        batch: out.reports.len(),
        frames: pending.drain(..).map(|(n, _)| n).collect(),
        baseline: established,
        report: monitor.assess(&stats)?,
    });
    Ok(())
}

/// Estimates frames in name order and assesses every `batch_size` estimates.
///
/// Frames that fail to parse or estimate are skipped. Without a `baseline`
/// the first complete batch establishes it. A trailing batch shorter than
/// `batch_size` is assessed if it holds at least two estimates.
pub fn run_monitor(
    dir: &Path,
    batch_size: usize,
    estimator: &Estimator,
    baseline: Option<HealthBaseline>,
    thresholds: Thresholds,
) -> anyhow::Result<MonitorOutcome> {
    anyhow::ensure!(
        batch_size >= 2,
        "batch size must be at least 2, got {batch_size}"
    );
    let mut monitor = HealthMonitor::new(thresholds)?;
    if let Some(b) = baseline {
        monitor.set_baseline(b)?;
    }
    let mut out = MonitorOutcome::default();
    let mut pending: Vec<(String, EstimateResult)> = Vec::new();

    for path in frame_files(dir)? {
        let frame_name = name(&path);
        let frame = match load(&path) {
            Ok(f) => f,
            Err(e) => {
                out.skipped.push(Skipped {
                    frame: frame_name,
                    reason: e.to_string(),
                    kind: SkipKind::Unreadable,
                });
                continue;
            }
        };
        match estimator.estimate(&frame) {
            Ok(r) => pending.push((frame_name, r)),
            Err(e) => out.skipped.push(Skipped {
                frame: frame_name,
                reason: e.to_string(),
                kind: SkipKind::Estimation,
            }),
        }
        if pending.len() == batch_size {
            flush(&mut pending, &mut monitor, &mut out)?;
        }
    }
    if pending.len() >= 2 {
        flush(&mut pending, &mut monitor, &mut out)?;
    } else {
        for (frame, _) in pending {
            out.skipped.push(Skipped {
                frame,
                reason: "trailing batch too short to assess".into(),
                kind: SkipKind::Leftover,
            });
        }
    }
    Ok(out)
}
