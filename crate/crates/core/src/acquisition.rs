//! Splitting a frame into its switch-on and switch-off intervals, and channel means.

use std::ops::Range;

use crate::adc::Channels;
use crate::error::{Error, Result};
use crate::frame::AcquisitionFrame;

/// Minimum samples required in each of T_on and T_off.
pub const MIN_SEGMENT_SAMPLES: usize = 10;

/// A frame rotated so that it reads `[T_on | T_off]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentedFrame {
    pub frame: AcquisitionFrame,
    pub on: Range<usize>,
    pub off: Range<usize>,
    /// Measured duty ratio, `|on| / len`.
    pub d_on: f64,
    pub t_on: f64,
    /// Index of the original frame that became sample 0.
    pub rotation: usize,
}

impl SegmentedFrame {
    pub fn n_on(&self) -> usize {
        self.on.len()
    }

    pub fn n_off(&self) -> usize {
        self.off.len()
    }
}

/// Labels each sample on/off by thresholding `v_mos` at its min/max midpoint.
///
/// A state change needs two consecutive samples across the threshold, so
/// isolated noise spikes are ignored. The frame is rotated so the on-run
/// comes first; the time axis is kept as is.
pub fn segment_states(frame: &AcquisitionFrame) -> Result<SegmentedFrame> {
    let n = frame.len();
    let (lo, hi) = frame
        .v_mos
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let span = hi - lo;
    if !(span > 1e-12 * hi.abs().max(lo.abs()).max(1e-300)) {
        return Err(Error::MalformedFrame("v_mos has a single level".into()));
    }
    let threshold = 0.5 * (lo + hi);
    let raw: Vec<bool> = frame.v_mos.iter().map(|&v| v < threshold).collect();

    let start = (0..n)
        .find(|&i| raw[i] == raw[(i + 1) % n])
        .ok_or_else(|| Error::MalformedFrame("v_mos alternates every sample".into()))?;

    let mut labels = vec![false; n];
    let mut state = raw[start];
    for step in 0..n {
        let j = (start + step) % n;
        if raw[j] != state && raw[(j + 1) % n] != state {
            state = raw[j];
        }
        labels[j] = state;
    }

    let edges: Vec<usize> = (0..n)
        .filter(|&j| labels[j] != labels[(j + n - 1) % n])
        .collect();
    if edges.len() != 2 {
        return Err(Error::MalformedFrame(format!(
            "expected 2 switching transitions, found {}",
            edges.len()
        )));
    }
    let rotation = edges
        .iter()
        .copied()
        .find(|&j| labels[j])
        .expect("one of two edges starts the on-run");
    let n_on = labels.iter().filter(|&&on| on).count();
    let n_off = n - n_on;
    if n_on < MIN_SEGMENT_SAMPLES || n_off < MIN_SEGMENT_SAMPLES {
        return Err(Error::InsufficientResolution {
            on: n_on,
            off: n_off,
            min: MIN_SEGMENT_SAMPLES,
        });
    }

    let rotate = |ch: &[f64]| -> Vec<f64> {
        ch[rotation..]
            .iter()
            .chain(&ch[..rotation])
            .copied()
            .collect()
    };
    let rotated = AcquisitionFrame {
        sample_rate: frame.sample_rate,
        t: frame.t.clone(),
        i_l: rotate(&frame.i_l),
        v_out: rotate(&frame.v_out),
        v_c: rotate(&frame.v_c),
        v_mos: rotate(&frame.v_mos),
        f_sw: frame.f_sw,
    };
    Ok(SegmentedFrame {
        frame: rotated,
        on: 0..n_on,
        off: n_on..n,
        d_on: n_on as f64 / n as f64,
        t_on: n_on as f64 / frame.sample_rate,
        rotation,
    })
}

/// Arithmetic means of every channel over the full period and each segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameMeans {
    pub full: Channels<f64>,
    pub on: Channels<f64>,
    pub off: Channels<f64>,
}

impl FrameMeans {
    /// Mean output voltage over the period.
    pub fn v_media(&self) -> f64 {
        self.full.v_out
    }

    /// Mean inductor current over the period.
    pub fn i_l_media(&self) -> f64 {
        self.full.i_l
    }

    pub fn v_c_media(&self) -> f64 {
        self.full.v_c
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn channel_means(f: &AcquisitionFrame, r: Range<usize>) -> Channels<f64> {
    Channels {
        i_l: mean(&f.i_l[r.clone()]),
        v_out: mean(&f.v_out[r.clone()]),
        v_c: mean(&f.v_c[r.clone()]),
        v_mos: mean(&f.v_mos[r]),
    }
}

pub fn compute_means(seg: &SegmentedFrame) -> FrameMeans {
    let f = &seg.frame;
    FrameMeans {
        full: channel_means(f, 0..f.len()),
        on: channel_means(f, seg.on.clone()),
        off: channel_means(f, seg.off.clone()),
    }
}
