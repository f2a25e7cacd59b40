//! Capacitor health assessment against a baseline.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::EstimateStats;
use crate::regression::{linear_regression, RegressionResult};

/// Batch results kept for trend regression.
pub const DEFAULT_HISTORY: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HealthBaseline {
    /// Calibrated ESR of the healthy part. May be near zero.
    pub esr_0: f64,
    pub c_0: f64,
    /// Acquisitions averaged to establish the baseline.
    pub established_from: usize,
}

impl HealthBaseline {
    pub fn from_stats(stats: &EstimateStats) -> Result<Self> {
        let b = Self {
            esr_0: stats.esr.mean,
            c_0: stats.c.mean,
            established_from: stats.n_acquisitions,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c_0.is_finite() && self.c_0 > 0.0) || !self.esr_0.is_finite() {
            return Err(Error::InvalidThresholds(format!(
                "baseline needs finite esr_0 and c_0 > 0, got {} / {}",
                self.esr_0, self.c_0
            )));
        }
        Ok(())
    }
}

/// Ratio limits. ESR rises and capacitance falls as the part ages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    pub esr_warn: f64,
    pub esr_alarm: f64,
    pub c_warn: f64,
    pub c_alarm: f64,
    /// Floor applied to the ESR baseline before taking ratios, in ohms.
    pub esr_floor: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            esr_warn: 1.5,
            esr_alarm: 2.0,
            c_warn: 0.9,
            c_alarm: 0.8,
            esr_floor: 1e-3,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<()> {
        if !(self.esr_warn < self.esr_alarm) {
            return Err(Error::InvalidThresholds(
                "esr_warn must be < esr_alarm".into(),
            ));
        }
        if !(self.c_warn > self.c_alarm) {
            return Err(Error::InvalidThresholds("c_warn must be > c_alarm".into()));
        }
        if !(self.esr_floor > 0.0) {
            return Err(Error::InvalidThresholds("esr_floor must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum HealthStatus {
    Healthy,
    Degrading,
    EndOfLife,
}

pub fn classify(esr_ratio: f64, c_ratio: f64, th: &Thresholds) -> HealthStatus {
    if esr_ratio >= th.esr_alarm || c_ratio <= th.c_alarm {
        HealthStatus::EndOfLife
    } else if esr_ratio >= th.esr_warn || c_ratio <= th.c_warn {
        HealthStatus::Degrading
    } else {
        HealthStatus::Healthy
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HealthReport {
    pub esr: f64,
    pub c: f64,
    pub esr_ratio: f64,
    pub c_ratio: f64,
    pub status: HealthStatus,
    /// ESR (ohms) against batch index over the retained history; absent until two batches.
    pub trend: Option<RegressionResult>,
    pub n_acquisitions: usize,
}

/// Rolling assessor fed one batch at a time.
#[derive(Debug, Clone)]
pub struct HealthMonitor {
    baseline: Option<HealthBaseline>,
    thresholds: Thresholds,
    window: usize,
    history: VecDeque<(f64, f64)>,
    batches_seen: usize,
}

impl HealthMonitor {
    pub fn new(thresholds: Thresholds) -> Result<Self> {
        thresholds.validate()?;
        Ok(Self {
            baseline: None,
            thresholds,
            window: DEFAULT_HISTORY,
            history: VecDeque::new(),
            batches_seen: 0,
        })
    }

    pub fn with_window(mut self, window: usize) -> Self {
        self.window = window.max(2);
        self
    }

    pub fn set_baseline(&mut self, baseline: HealthBaseline) -> Result<()> {
        baseline.validate()?;
        self.baseline = Some(baseline);
        Ok(())
    }

    pub fn baseline(&self) -> Option<&HealthBaseline> {
        self.baseline.as_ref()
    }

    pub fn assess(&mut self, stats: &EstimateStats) -> Result<HealthReport> {
        let baseline = self.baseline.ok_or(Error::NotCalibrated)?;
        let esr = stats.esr.mean;
        let c = stats.c.mean;
        let esr_ratio = esr / baseline.esr_0.max(self.thresholds.esr_floor);
        let c_ratio = c / baseline.c_0;

        if self.history.len() == self.window {
            self.history.pop_front();
        }
        self.history.push_back((self.batches_seen as f64, esr));
        self.batches_seen += 1;

        let trend = if self.history.len() >= 2 {
            let (x, y): (Vec<f64>, Vec<f64>) = self.history.iter().copied().unzip();
            Some(linear_regression(&x, &y)?)
        } else {
            None
        };
        Ok(HealthReport {
            esr,
            c,
            esr_ratio,
            c_ratio,
            status: classify(esr_ratio, c_ratio, &self.thresholds),
            trend,
            n_acquisitions: stats.n_acquisitions,
        })
    }
}

/// One-shot assessment with an empty history.
pub fn assess(
    stats: &EstimateStats,
    baseline: Option<&HealthBaseline>,
    thresholds: &Thresholds,
) -> Result<HealthReport> {
    let mut m = HealthMonitor::new(*thresholds)?;
    m.set_baseline(*baseline.ok_or(Error::NotCalibrated)?)?;
    m.assess(stats)
}
