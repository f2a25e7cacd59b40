//! Parameter estimation from one segmented switching period.
//!
//! Load resistance and ESR come from channel means and the output voltage at
//! the middle of T_on. Inductance and capacitance come from least-squares
//! slopes of the inductor current and capacitor voltage during T_on.

use serde::{Deserialize, Serialize};

use crate::acquisition::{compute_means, segment_states, FrameMeans, SegmentedFrame};
use crate::error::{Error, Result};
use crate::frame::AcquisitionFrame;
use crate::regression;

/// Mean inductor current below which the converter is considered unloaded.
pub const NO_LOAD_CURRENT: f64 = 1e-9;

/// Current that the mid-T_on output-voltage dip is divided by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EsrDenominator {
    /// `I_L,mean * (1 - D_on)`, the average load current. Recovers the true ESR.
    #[default]
    LoadCurrent,
    /// `I_L,mean` alone. Underestimates the ESR by the factor `1 - D_on`.
    InductorCurrent,
}

/// Reference level the mid-T_on output voltage is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VMediaBasis {
    #[default]
    FullPeriod,
    OnSegment,
}

/// How the average load current behind `R_load` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RloadMethod {
    /// Charge delivered through the diode: trapezoidal integral of `i_l`
    /// over T_off, divided by the period. Exact at any ripple amplitude.
    #[default]
    DiodeCharge,
    /// `I_L,mean * (1 - D_on)`. Reads high when the capacitor ripple bends
    /// the T_off current ramp (about 0.6 % at 33 uF).
    InductorMean,
}

/// How the load current feeding the capacitor during T_on is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LoadCurrentBasis {
    /// Mean output voltage over the slope-fit window divided by `R_load`.
    #[default]
    OnSegment,
    /// Mean output voltage over the whole period divided by `R_load`.
    PeriodMean,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimatorConfig {
    pub rload_method: RloadMethod,
    pub esr_denominator: EsrDenominator,
    pub v_media_basis: VMediaBasis,
    pub load_current: LoadCurrentBasis,
    /// Samples averaged around the middle of T_on.
    pub mid_window: usize,
    /// Samples dropped at each end of a segment before slope fitting.
    pub guard_band: usize,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            rload_method: RloadMethod::default(),
            esr_denominator: EsrDenominator::default(),
            v_media_basis: VMediaBasis::default(),
            load_current: LoadCurrentBasis::default(),
            mid_window: 5,
            guard_band: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intermediates {
    pub v_media: f64,
    pub i_l_media: f64,
    pub v_out_mid_on: f64,
    /// Inductor-current slope during T_on, A/s.
    pub m_on_il: f64,
    /// Inductor-current slope during T_off, A/s.
    pub m_off_il: f64,
    /// Capacitor-voltage slope during T_on, V/s.
    pub m_on_vc: f64,
    /// Load current used for the capacitance estimate.
    pub i_load_on: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub r_load_est: f64,
    pub esr_raw: f64,
    pub esr_est: f64,
    pub c_est: f64,
    pub l_est: f64,
    /// Inductance from the on/off slope difference; needs no input-voltage reading.
    pub l_est_two_slope: Option<f64>,
    pub d_on: f64,
    pub intermediates: Intermediates,
}

pub fn estimate_rload(means: &FrameMeans, d_on: f64) -> Result<f64> {
    let i_l = means.i_l_media();
    if !(i_l > NO_LOAD_CURRENT) {
        return Err(Error::NoLoad(i_l));
    }
    if !(0.0..1.0).contains(&d_on) {
        return Err(Error::Estimation(format!(
            "duty ratio {d_on} outside [0, 1)"
        )));
    }
    Ok(means.v_media() / (i_l * (1.0 - d_on)))
}

/// Average diode current over the period, taking the segment boundaries at
/// the first sample of each segment.
pub fn diode_current(seg: &SegmentedFrame) -> f64 {
    let i = &seg.frame.i_l;
    let sum: f64 = i[seg.off.clone()].iter().sum();
    // trapezoid closes on the first T_on sample of the next period
    (sum - 0.5 * (i[seg.off.start] - i[seg.on.start])) / seg.frame.len() as f64
}

/// `R_load` from the mean output voltage and the diode charge per period.
pub fn estimate_rload_diode_charge(seg: &SegmentedFrame, means: &FrameMeans) -> Result<f64> {
    let i_d = diode_current(seg);
    if !(i_d > NO_LOAD_CURRENT) {
        return Err(Error::NoLoad(i_d));
    }
    Ok(means.v_media() / i_d)
}

/// Mean of `v_out` over the configured window centred on sample `|T_on| / 2`.
pub fn v_out_mid_on(seg: &SegmentedFrame, cfg: &EstimatorConfig) -> f64 {
    let mid = seg.on.start + seg.n_on() / 2;
    let half = cfg.mid_window / 2;
    let lo = mid.saturating_sub(half).max(seg.on.start);
    let hi = (mid + half + 1).min(seg.on.end);
    let w = &seg.frame.v_out[lo..hi];
    w.iter().sum::<f64>() / w.len() as f64
}

/// Raw ESR estimate, before offset calibration.
pub fn estimate_esr(
    seg: &SegmentedFrame,
    means: &FrameMeans,
    cfg: &EstimatorConfig,
) -> Result<f64> {
    let v_mid = v_out_mid_on(seg, cfg);
    let v_ref = match cfg.v_media_basis {
        VMediaBasis::FullPeriod => means.v_media(),
        VMediaBasis::OnSegment => means.on.v_out,
    };
    let denom = match cfg.esr_denominator {
        EsrDenominator::InductorCurrent => means.i_l_media(),
        EsrDenominator::LoadCurrent => means.i_l_media() * (1.0 - seg.d_on),
    };
    if !(denom > 0.0) {
        return Err(Error::Estimation(format!(
            "non-positive ESR denominator {denom:e} A"
        )));
    }
    Ok(-(v_mid - v_ref) / denom)
}

fn fit_window(range: &std::ops::Range<usize>, guard: usize) -> std::ops::Range<usize> {
    let lo = range.start + guard;
    let hi = range.end.saturating_sub(guard);
    if hi >= lo + 2 {
        lo..hi
    } else {
        range.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InductanceEstimate {
    pub l: f64,
    pub l_two_slope: Option<f64>,
    pub m_on: f64,
    pub m_off: f64,
}

pub fn estimate_l(
    seg: &SegmentedFrame,
    v_in: f64,
    cfg: &EstimatorConfig,
) -> Result<InductanceEstimate> {
    if !(v_in > 0.0) {
        return Err(Error::Estimation(format!(
            "input voltage must be > 0, got {v_in}"
        )));
    }
    let f = &seg.frame;
    let on = fit_window(&seg.on, cfg.guard_band);
    let off = fit_window(&seg.off, cfg.guard_band);
    let m_on = regression::slope(&f.t[on.clone()], &f.i_l[on])?;
    let m_off = regression::slope(&f.t[off.clone()], &f.i_l[off])?;
    if !(m_on > 0.0) {
        return Err(Error::Estimation(format!(
            "inductor current slope during T_on is {m_on:e} A/s"
        )));
    }
    let v_media = f.v_out.iter().sum::<f64>() / f.len() as f64;
    let diff = m_on - m_off;
    Ok(InductanceEstimate {
        l: v_in / m_on,
        l_two_slope: (diff > 0.0).then(|| v_media / diff),
        m_on,
        m_off,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacitanceEstimate {
    pub c: f64,
    pub m_on_vc: f64,
    pub i_load_on: f64,
}

/// During T_on the capacitor alone feeds the load, so `dV_C/dt = -I_load / C`.
pub fn estimate_c(
    seg: &SegmentedFrame,
    means: &FrameMeans,
    r_load_est: f64,
    cfg: &EstimatorConfig,
) -> Result<CapacitanceEstimate> {
    if !(r_load_est > 0.0) {
        return Err(Error::Estimation(format!(
            "load resistance must be > 0, got {r_load_est}"
        )));
    }
    let f = &seg.frame;
    let on = fit_window(&seg.on, cfg.guard_band);
    let m = regression::slope(&f.t[on.clone()], &f.v_c[on.clone()])?;
    if !(m < 0.0) {
        return Err(Error::Estimation(format!(
            "capacitor voltage slope during T_on is {m:e} V/s"
        )));
    }
    let v_load = match cfg.load_current {
        LoadCurrentBasis::OnSegment => f.v_out[on.clone()].iter().sum::<f64>() / on.len() as f64,
        LoadCurrentBasis::PeriodMean => means.v_media(),
    };
    let i_load_on = v_load / r_load_est;
    Ok(CapacitanceEstimate {
        c: i_load_on / -m,
        m_on_vc: m,
        i_load_on,
    })
}

/// Constant subtracted from raw ESR estimates to remove fixed board parasitics
/// and the ripple-shape bias of the mid-T_on reading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationOffset {
    pub esr_offset: f64,
    /// Number of baseline acquisitions the offset was averaged over.
    pub derived_from: usize,
    /// Added ESR known to be present during the baseline.
    pub true_added_esr: f64,
}

impl CalibrationOffset {
    pub fn apply(&self, esr_raw: f64) -> f64 {
        esr_raw - self.esr_offset
    }
}

pub fn calibrate_offset(
    baseline: &[SegmentedFrame],
    true_added_esr: f64,
    cfg: &EstimatorConfig,
) -> Result<CalibrationOffset> {
    if baseline.len() < 2 {
        return Err(Error::Calibration(format!(
            "need at least 2 baseline frames, got {}",
            baseline.len()
        )));
    }
    if !true_added_esr.is_finite() {
        return Err(Error::Calibration("true added ESR must be finite".into()));
    }
    let mut sum = 0.0;
    for seg in baseline {
        sum += estimate_esr(seg, &compute_means(seg), cfg)?;
    }
    let esr_offset = sum / baseline.len() as f64 - true_added_esr;
    Ok(CalibrationOffset {
        esr_offset,
        derived_from: baseline.len(),
        true_added_esr,
    })
}

/// Sample mean and unbiased sample variance of one parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamStats {
    pub mean: f64,
    pub variance: f64,
}

impl ParamStats {
    pub fn from_samples(xs: &[f64]) -> Result<Self> {
        if xs.len() < 2 {
            return Err(Error::Estimation(format!(
                "variance needs at least 2 samples, got {}",
                xs.len()
            )));
        }
        let n = xs.len() as f64;
        // shifted by the first sample so identical inputs give exactly zero variance
        let shift = xs[0];
        let mean_dev = xs.iter().map(|x| x - shift).sum::<f64>() / n;
        let mean = shift + mean_dev;
        let variance = xs
            .iter()
            .map(|x| (x - shift - mean_dev) * (x - shift - mean_dev))
            .sum::<f64>()
            / (n - 1.0);
        Ok(Self { mean, variance })
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateStats {
    pub r_load: ParamStats,
    pub esr_raw: ParamStats,
    pub esr: ParamStats,
    pub c: ParamStats,
    pub l: ParamStats,
    pub n_acquisitions: usize,
}

impl EstimateStats {
    pub fn from_results(results: &[EstimateResult]) -> Result<Self> {
        let collect = |f: fn(&EstimateResult) -> f64| -> Result<ParamStats> {
            ParamStats::from_samples(&results.iter().map(f).collect::<Vec<_>>())
        };
        Ok(Self {
            r_load: collect(|r| r.r_load_est)?,
            esr_raw: collect(|r| r.esr_raw)?,
            esr: collect(|r| r.esr_est)?,
            c: collect(|r| r.c_est)?,
            l: collect(|r| r.l_est)?,
            n_acquisitions: results.len(),
        })
    }
}

/// Full single-frame pipeline with a fixed configuration and optional calibration.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimator {
    pub v_in: f64,
    pub config: EstimatorConfig,
    pub calibration: Option<CalibrationOffset>,
}

impl Estimator {
    pub fn new(v_in: f64) -> Self {
        Self {
            v_in,
            config: EstimatorConfig::default(),
            calibration: None,
        }
    }

    pub fn with_config(mut self, config: EstimatorConfig) -> Self {
        self.config = config;
        self
    }

    pub fn with_calibration(mut self, calibration: CalibrationOffset) -> Self {
        self.calibration = Some(calibration);
        self
    }

    pub fn estimate(&self, frame: &AcquisitionFrame) -> Result<EstimateResult> {
        self.estimate_segmented(&segment_states(frame)?)
    }

    pub fn estimate_segmented(&self, seg: &SegmentedFrame) -> Result<EstimateResult> {
        let f = &seg.frame;
        if let Some(k) = seg.off.clone().find(|&k| f.i_l[k] <= 0.0) {
            return Err(Error::DiscontinuousConduction { time_s: f.t[k] });
        }
        let means = compute_means(seg);
        let r_load_est = match self.config.rload_method {
            RloadMethod::DiodeCharge => estimate_rload_diode_charge(seg, &means)?,
            RloadMethod::InductorMean => estimate_rload(&means, seg.d_on)?,
        };
        let esr_raw = estimate_esr(seg, &means, &self.config)?;
        let esr_est = self.calibration.map_or(esr_raw, |c| c.apply(esr_raw));
        let ind = estimate_l(seg, self.v_in, &self.config)?;
        let cap = estimate_c(seg, &means, r_load_est, &self.config)?;
        Ok(EstimateResult {
            r_load_est,
            esr_raw,
            esr_est,
            c_est: cap.c,
            l_est: ind.l,
            l_est_two_slope: ind.l_two_slope,
            d_on: seg.d_on,
            intermediates: Intermediates {
                v_media: means.v_media(),
                i_l_media: means.i_l_media(),
                v_out_mid_on: v_out_mid_on(seg, &self.config),
                m_on_il: ind.m_on,
                m_off_il: ind.m_off,
                m_on_vc: cap.m_on_vc,
                i_load_on: cap.i_load_on,
            },
        })
    }

    /// Calibrates against baseline frames taken with a known added ESR.
    pub fn calibrate(
        &self,
        frames: &[AcquisitionFrame],
        true_added_esr: f64,
    ) -> Result<CalibrationOffset> {
        let segs = frames
            .iter()
            .map(segment_states)
            .collect::<Result<Vec<_>>>()?;
        calibrate_offset(&segs, true_added_esr, &self.config)
    }

    /// Estimates every frame and reduces to per-parameter mean and variance.
    pub fn run_batch(
        &self,
        frames: &[AcquisitionFrame],
    ) -> Result<(Vec<EstimateResult>, EstimateStats)> {
        if frames.len() < 2 {
            return Err(Error::Batch {
                indices: Vec::new(),
                first: format!("need at least 2 frames, got {}", frames.len()),
            });
        }
        let mut results = Vec::with_capacity(frames.len());
        let mut failed = Vec::new();
        let mut first = None;
        for (i, frame) in frames.iter().enumerate() {
            match self.estimate(frame) {
                Ok(r) => results.push(r),
                Err(e) => {
                    failed.push(i);
                    first.get_or_insert_with(|| e.to_string());
                }
            }
        }
        if !failed.is_empty() {
            return Err(Error::Batch {
                indices: failed,
                first: first.unwrap_or_default(),
            });
        }
        let stats = EstimateStats::from_results(&results)?;
        Ok((results, stats))
    }
}
