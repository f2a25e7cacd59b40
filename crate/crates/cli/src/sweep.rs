//! Degradation sweeps: batches of noisy acquisitions per jumper setting,
//! reduced to mean/stddev rows and estimated-vs-entered regression lines.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context};
use boost_esr::config::Config;
use boost_esr::estimator::{CalibrationOffset, EstimateResult, EstimateStats, Estimator};
use boost_esr::regression::{linear_regression, RegressionResult};
use boost_esr::{apply_degradation, simulate, ConverterParams, DegradationState, NoiseProfile};
use rayon::prelude::*;
use serde::Serialize;

/// Which jumper is stepped across the sweep.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    /// ESR network steps `ks` (200 mΩ / k added), repeated for each bank size in `caps`.
    Esr { ks: Vec<u8>, caps: Vec<u8> },
    /// Bank sizes `caps` at a fixed ESR network setting `k`.
    Capacitance { caps: Vec<u8>, k: u8 },
}

impl SweepAxis {
    pub fn esr() -> Self {
        Self::Esr {
            ks: vec![5, 4, 3, 2, 1],
            caps: vec![3],
        }
    }

    pub fn capacitance() -> Self {
        Self::Capacitance {
            caps: vec![1, 2, 3, 4, 5],
            k: 5,
        }
    }

    /// Jumper settings, one inner vector per calibration group.
    fn groups(&self) -> Vec<Vec<DegradationState>> {
        let state = |k, n| DegradationState {
            n_parallel_esr_resistors: k,
            n_parallel_caps: n,
        };
        match self {
            Self::Esr { ks, caps } => caps
                .iter()
                .map(|&n| ks.iter().map(|&k| state(k, n)).collect())
                .collect(),
            Self::Capacitance { caps, k } => vec![caps.iter().map(|&n| state(*k, n)).collect()],
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub base: Config,
    pub axis: SweepAxis,
    pub n_acquisitions: usize,
    /// Overrides the noise profile of `base` when set.
    pub noise: Option<NoiseProfile>,
    pub seed: u64,
}

impl ExperimentSpec {
    pub fn new(base: Config, axis: SweepAxis) -> Self {
        Self {
            base,
            axis,
            n_acquisitions: 20,
            noise: Some(NoiseProfile::Hardware),
            seed: 0,
        }
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        let groups = self.axis.groups();
        if groups.is_empty() || groups.iter().any(Vec::is_empty) {
            bail!("sweep axis is empty");
        }
        for deg in groups.iter().flatten() {
            deg.validate()?;
        }
        // sample variance needs two acquisitions
        if self.n_acquisitions < 2 {
            bail!(
                "n_acquisitions must be at least 2, got {}",
                self.n_acquisitions
            );
        }
        self.base.params.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub group: usize,
    pub index: usize,
    pub degradation: DegradationState,
    pub params: ConverterParams,
}

impl SweepPoint {
    pub fn esr_entered(&self) -> f64 {
        self.params.esr
    }

    pub fn c_entered(&self) -> f64 {
        self.params.c
    }
}

#[derive(Debug, Clone)]
pub struct PointOutcome {
    pub point: SweepPoint,
    pub results: Result<(Vec<EstimateResult>, EstimateStats), String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupCalibration {
    pub group: usize,
    pub n_parallel_caps: u8,
    pub offset: Option<CalibrationOffset>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupRegression {
    pub group: usize,
    pub n_parallel_caps: Option<u8>,
    pub quantity: &'static str,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    #[serde(flatten)]
    pub fit: RegressionResult,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub axis: SweepAxis,
    pub calibrations: Vec<GroupCalibration>,
    pub points: Vec<PointOutcome>,
    pub regressions: Vec<GroupRegression>,
}

impl SweepReport {
    pub fn failures(&self) -> Vec<(SweepPoint, &str)> {
        self.points
            .iter()
            .filter_map(|p| p.results.as_ref().err().map(|e| (p.point, e.as_str())))
            .collect()
    }

    pub fn stats(&self) -> impl Iterator<Item = (&SweepPoint, &EstimateStats)> {
        self.points
            .iter()
            .filter_map(|p| p.results.as_ref().ok().map(|(_, s)| (&p.point, s)))
    }

    pub fn regression(&self, group: usize, quantity: &str) -> Option<&GroupRegression> {
        self.regressions
            .iter()
            .find(|r| r.group == group && r.quantity == quantity)
    }
}

/// Seed for one acquisition, distinct per (group, point, acquisition).
fn frame_seed(seed: u64, group: usize, point: u64, acq: usize) -> u64 {
    let mut z = seed
        ^ (group as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ point.wrapping_mul(0xC2B2_AE3D_27D4_EB4F)
        ^ (acq as u64).wrapping_mul(0x1656_67B1_9E37_79F9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const BASELINE_POINT: u64 = u64::MAX;

fn acquire(
    spec: &ExperimentSpec,
    params: &ConverterParams,
    group: usize,
    point: u64,
) -> boost_esr::Result<Vec<boost_esr::AcquisitionFrame>> {
    let mut cfg = spec.base.sim_config();
    if let Some(profile) = spec.noise {
        profile.apply(&mut cfg);
    }
    (0..spec.n_acquisitions)
        .map(|a| {
            cfg.seed = frame_seed(spec.seed, group, point, a);
            simulate(params, &cfg)
        })
        .collect()
}

/// Runs every sweep point. Each group is calibrated from a separate baseline
/// batch taken at its first point, with the entered ESR there as the known value.
pub fn run_sweep(spec: &ExperimentSpec) -> anyhow::Result<SweepReport> {
    spec.validate()?;
    let base_est = Estimator::new(spec.base.params.v_in).with_config(spec.base.estimator);
    let groups = spec.axis.groups();

    let mut points = Vec::new();
    for (g, states) in groups.iter().enumerate() {
        for (i, deg) in states.iter().enumerate() {
            points.push(SweepPoint {
                group: g,
                index: i,
                degradation: *deg,
                params: apply_degradation(&spec.base.params, deg)?,
            });
        }
    }

    let calibrations: Vec<GroupCalibration> = groups
        .par_iter()
        .enumerate()
        .map(|(g, states)| {
            let first = points
                .iter()
                .find(|p| p.group == g)
                .expect("group has points");
            let offset = acquire(spec, &first.params, g, BASELINE_POINT)
                .and_then(|frames| base_est.calibrate(&frames, first.esr_entered()));
            GroupCalibration {
                group: g,
                n_parallel_caps: states[0].n_parallel_caps,
                error: offset.as_ref().err().map(|e| format!("calibration: {e}")),
                offset: offset.ok(),
            }
        })
        .collect();

    let outcomes: Vec<PointOutcome> = points
        .par_iter()
        .map(|p| {
            let cal = &calibrations[p.group];
            let results = match (&cal.offset, &cal.error) {
                (Some(offset), _) => acquire(spec, &p.params, p.group, p.index as u64)
                    .and_then(|frames| {
                        base_est
                            .clone()
                            .with_calibration(*offset)
                            .run_batch(&frames)
                    })
                    .map_err(|e| e.to_string()),
                (None, e) => Err(e.clone().unwrap_or_default()),
            };
            PointOutcome { point: *p, results }
        })
        .collect();

    let mut report = SweepReport {
        axis: spec.axis.clone(),
        calibrations,
        points: outcomes,
        regressions: Vec::new(),
    };
    report.regressions = regressions(&report);
    Ok(report)
}

/// Entered and estimated values of one regression line, in output units.
type Pick = fn(&SweepPoint, &EstimateStats) -> (f64, f64);

/// Regression lines over the values exactly as they are written to `summary.csv`.
fn regressions(report: &SweepReport) -> Vec<GroupRegression> {
    let mut out = Vec::new();
    let n_groups = report.calibrations.len();
    for g in 0..n_groups {
        let rows: Vec<_> = report.stats().filter(|(p, _)| p.group == g).collect();
        let caps = rows.first().map(|(p, _)| p.degradation.n_parallel_caps);
        let lines: Vec<(&'static str, Pick)> = match report.axis {
            SweepAxis::Esr { .. } => vec![
                ("esr_mohm", |p, s| (p.esr_entered() * 1e3, s.esr.mean * 1e3)),
                ("esr_raw_mohm", |p, s| {
                    (p.esr_entered() * 1e3, s.esr_raw.mean * 1e3)
                }),
            ],
            SweepAxis::Capacitance { .. } => {
                vec![("c_uf", |p, s| (p.c_entered() * 1e6, s.c.mean * 1e6))]
            }
        };
        for (quantity, f) in lines {
            let (x, y): (Vec<f64>, Vec<f64>) = rows.iter().map(|(p, s)| f(p, s)).unzip();
            if let Ok(fit) = linear_regression(&x, &y) {
                out.push(GroupRegression {
                    group: g,
                    n_parallel_caps: match report.axis {
                        SweepAxis::Esr { .. } => caps,
                        SweepAxis::Capacitance { .. } => None,
                    },
                    quantity,
                    x,
                    y,
                    fit,
                });
            }
        }
    }
    out
}

pub const ESTIMATES_HEADER: &str = "run_id,esr_entered_mohm,esr_est_mohm,r_load_ohm,c_uf,l_uh";

pub const SUMMARY_HEADER: &str = "group,n_parallel_caps,n_parallel_esr_resistors,esr_entered_mohm,\
c_entered_uf,n_acquisitions,r_load_mean_ohm,r_load_std_ohm,esr_raw_mean_mohm,esr_raw_std_mohm,\
esr_mean_mohm,esr_std_mohm,c_mean_uf,c_std_uf,l_mean_uh,l_std_uh";

/// Per-acquisition table with `mean` and `stddev` footer rows.
pub fn estimates_csv(
    point: &SweepPoint,
    results: &[EstimateResult],
    stats: &EstimateStats,
) -> String {
    let mut s = String::new();
    writeln!(s, "{ESTIMATES_HEADER}").unwrap();
    let entered = point.esr_entered() * 1e3;
    for (i, r) in results.iter().enumerate() {
        writeln!(
            s,
            "{i},{entered},{},{},{},{}",
            r.esr_est * 1e3,
            r.r_load_est,
            r.c_est * 1e6,
            r.l_est * 1e6
        )
        .unwrap();
    }
    writeln!(
        s,
        "mean,{entered},{},{},{},{}",
        stats.esr.mean * 1e3,
        stats.r_load.mean,
        stats.c.mean * 1e6,
        stats.l.mean * 1e6
    )
    .unwrap();
    writeln!(
        s,
        "stddev,{entered},{},{},{},{}",
        stats.esr.std_dev() * 1e3,
        stats.r_load.std_dev(),
        stats.c.std_dev() * 1e6,
        stats.l.std_dev() * 1e6
    )
    .unwrap();
    s
}

pub fn summary_csv(report: &SweepReport) -> String {
    let mut s = String::new();
    writeln!(s, "{SUMMARY_HEADER}").unwrap();
    for (p, st) in report.stats() {
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            p.group,
            p.degradation.n_parallel_caps,
            p.degradation.n_parallel_esr_resistors,
            p.esr_entered() * 1e3,
            p.c_entered() * 1e6,
            st.n_acquisitions,
            st.r_load.mean,
            st.r_load.std_dev(),
            st.esr_raw.mean * 1e3,
            st.esr_raw.std_dev() * 1e3,
            st.esr.mean * 1e3,
            st.esr.std_dev() * 1e3,
            st.c.mean * 1e6,
            st.c.std_dev() * 1e6,
            st.l.mean * 1e6,
            st.l.std_dev() * 1e6,
        )
        .unwrap();
    }
    s
}

#[derive(Serialize)]
struct RegressionFile<'a> {
    axis: &'a SweepAxis,
    calibrations: &'a [GroupCalibration],
    regressions: &'a [GroupRegression],
    failures: Vec<FailureEntry<'a>>,
}

#[derive(Serialize)]
struct FailureEntry<'a> {
    group: usize,
    n_parallel_caps: u8,
    n_parallel_esr_resistors: u8,
    error: &'a str,
}

pub fn regression_json(report: &SweepReport) -> String {
    let file = RegressionFile {
        axis: &report.axis,
        calibrations: &report.calibrations,
        regressions: &report.regressions,
        failures: report
            .failures()
            .into_iter()
            .map(|(p, error)| FailureEntry {
                group: p.group,
                n_parallel_caps: p.degradation.n_parallel_caps,
                n_parallel_esr_resistors: p.degradation.n_parallel_esr_resistors,
                error,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("regression summary serializes") + "\n"
}

/// Writes `summary.csv`, `regression.json` and `estimates/caps<n>_k<k>.csv`
/// per successful point.
pub fn write_sweep(report: &SweepReport, dir: &Path) -> anyhow::Result<()> {
    let est_dir = dir.join("estimates");
    fs::create_dir_all(&est_dir).with_context(|| format!("creating {}", est_dir.display()))?;
    for outcome in &report.points {
        if let Ok((results, stats)) = &outcome.results {
            let d = outcome.point.degradation;
            let path = est_dir.join(format!(
                "caps{}_k{}.csv",
                d.n_parallel_caps, d.n_parallel_esr_resistors
            ));
            fs::write(&path, estimates_csv(&outcome.point, results, stats))
                .with_context(|| format!("writing {}", path.display()))?;
        }
    }
    for (name, text) in [
        ("summary.csv", summary_csv(report)),
        ("regression.json", regression_json(report)),
    ] {
        let path = dir.join(name);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}
