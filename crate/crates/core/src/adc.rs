//! Measurement front end: additive Gaussian noise followed by a uniform quantizer.

use serde::{Deserialize, Serialize};

/// One value per measured channel.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Channels<T> {
    pub i_l: T,
    pub v_out: T,
    pub v_c: T,
    pub v_mos: T,
}

impl<T: Copy> Channels<T> {
    pub fn splat(v: T) -> Self {
        Self {
            i_l: v,
            v_out: v,
            v_c: v,
            v_mos: v,
        }
    }
}

/// Subtract a known DC level and amplify the remainder before conversion,
/// so the ripple uses more of the converter's codes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcSeparation {
    pub dc: f64,
    pub gain: f64,
}

/// Mid-tread uniform quantizer over `[-fullscale, +fullscale)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantizer {
    step: f64,
    min_code: f64,
    max_code: f64,
}

impl Quantizer {
    pub fn new(bits: u32, fullscale: f64) -> Self {
        let levels = 2f64.powi(bits as i32);
        Self {
            step: 2.0 * fullscale / levels,
            min_code: -levels / 2.0,
            max_code: levels / 2.0 - 1.0,
        }
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn quantize(&self, x: f64) -> f64 {
        let code = (x / self.step).round().clamp(self.min_code, self.max_code);
        code * self.step
    }

    /// Quantizes through an optional AC-separation stage.
    pub fn convert(&self, x: f64, ac: Option<AcSeparation>) -> f64 {
        match ac {
            Some(AcSeparation { dc, gain }) => self.quantize((x - dc) * gain) / gain + dc,
            None => self.quantize(x),
        }
    }
}
