//! Converter plant parameters and the bench degradation network.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Resistance of one resistor in the ESR injection network.
pub const ESR_NETWORK_RESISTOR: f64 = 0.200;
/// Capacitance of one unit in the output capacitor bank.
pub const BANK_UNIT_CAPACITANCE: f64 = 33e-6;
/// Number of resistors in the ESR network and of units in the capacitor bank.
pub const BANK_SIZE: u8 = 5;

/// Physical boost converter. SI units throughout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConverterParams {
    pub v_in: f64,
    pub l: f64,
    /// Inductor series resistance.
    #[serde(default)]
    pub r_l: f64,
    pub c: f64,
    pub esr: f64,
    /// Board, track and jumper resistance in series with the capacitor branch.
    #[serde(default)]
    pub r_track: f64,
    pub r_load: f64,
    pub f_sw: f64,
    pub duty: f64,
    /// Diode forward drop.
    #[serde(default)]
    pub v_diode: f64,
    /// Switch on-resistance.
    #[serde(default)]
    pub r_dson: f64,
}

impl ConverterParams {
    /// The converter as designed: 12 V in, D = 0.4, 10 kHz, 20 Ω, 240 µH, 160 µF.
    pub fn design_point() -> Self {
        Self {
            v_in: 12.0,
            l: 240e-6,
            r_l: 0.0,
            c: 160e-6,
            esr: 0.0,
            r_track: 0.0,
            r_load: 20.0,
            f_sw: 10e3,
            duty: 0.4,
            v_diode: 0.0,
            r_dson: 0.0,
        }
    }

    pub fn period(&self) -> f64 {
        1.0 / self.f_sw
    }

    /// Total resistance in series with the ideal capacitance.
    pub fn branch_resistance(&self) -> f64 {
        self.esr + self.r_track
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("v_in", self.v_in),
            ("l", self.l),
            ("c", self.c),
            ("r_load", self.r_load),
            ("f_sw", self.f_sw),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParams(format!("{name} must be > 0, got {v}")));
            }
        }
        let non_negative = [
            ("esr", self.esr),
            ("r_l", self.r_l),
            ("r_track", self.r_track),
            ("r_dson", self.r_dson),
            ("v_diode", self.v_diode),
        ];
        for (name, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParams(format!(
                    "{name} must be >= 0, got {v}"
                )));
            }
        }
        if !(self.duty > 0.0 && self.duty < 1.0) {
            return Err(Error::InvalidParams(format!(
                "duty must lie in (0, 1), got {}",
                self.duty
            )));
        }
        Ok(())
    }
}

/// Jumper settings of the bench ESR network and capacitor bank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegradationState {
    /// How many 200 mΩ resistors are paralleled into the capacitor branch (0 = network bypassed).
    pub n_parallel_esr_resistors: u8,
    /// How many 33 µF units are paralleled to form C.
    pub n_parallel_caps: u8,
}

impl DegradationState {
    pub fn new(n_parallel_esr_resistors: u8, n_parallel_caps: u8) -> Result<Self> {
        let state = Self {
            n_parallel_esr_resistors,
            n_parallel_caps,
        };
        state.validate()?;
        Ok(state)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_parallel_esr_resistors > BANK_SIZE {
            return Err(Error::InvalidDegradation(format!(
                "n_parallel_esr_resistors must be 0..={BANK_SIZE}, got {}",
                self.n_parallel_esr_resistors
            )));
        }
        if !(1..=BANK_SIZE).contains(&self.n_parallel_caps) {
            return Err(Error::InvalidDegradation(format!(
                "n_parallel_caps must be 1..={BANK_SIZE}, got {}",
                self.n_parallel_caps
            )));
        }
        Ok(())
    }

    /// Resistance the network adds to the capacitor branch.
    pub fn added_esr(&self) -> f64 {
        match self.n_parallel_esr_resistors {
            0 => 0.0,
            k => ESR_NETWORK_RESISTOR / f64::from(k),
        }
    }

    pub fn capacitance(&self) -> f64 {
        f64::from(self.n_parallel_caps) * BANK_UNIT_CAPACITANCE
    }
}

/// Applies a jumper setting to a base plant.
///
/// `base.r_track` is interpreted as the single-capacitor parasitic and is
/// divided by the number of paralleled capacitors.
pub fn apply_degradation(
    base: &ConverterParams,
    deg: &DegradationState,
) -> Result<ConverterParams> {
    base.validate()?;
    deg.validate()?;
    let n = f64::from(deg.n_parallel_caps);
    Ok(ConverterParams {
        esr: base.esr + deg.added_esr(),
        c: deg.capacitance(),
        r_track: base.r_track / n,
        ..*base
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn network_values() {
        let base = ConverterParams::design_point();
        let p = apply_degradation(&base, &DegradationState::new(5, 3).unwrap()).unwrap();
        assert!((p.esr - 0.040).abs() < 1e-15);
        let p = apply_degradation(&base, &DegradationState::new(1, 3).unwrap()).unwrap();
        assert!((p.esr - 0.200).abs() < 1e-15);
        let p = apply_degradation(&base, &DegradationState::new(0, 3).unwrap()).unwrap();
        assert_eq!(p.esr, base.esr);
        assert!((p.c - 99e-6).abs() < 1e-18);
    }

    #[test]
    fn track_resistance_parallels_with_caps() {
        let base = ConverterParams {
            r_track: 0.030,
            ..ConverterParams::design_point()
        };
        let p = apply_degradation(&base, &DegradationState::new(0, 3).unwrap()).unwrap();
        assert!((p.r_track - 0.010).abs() < 1e-15);
    }

    #[test]
    fn out_of_range_settings() {
        assert!(matches!(
            DegradationState::new(6, 3),
            Err(Error::InvalidDegradation(_))
        ));
        assert!(matches!(
            DegradationState::new(1, 0),
            Err(Error::InvalidDegradation(_))
        ));
        let bad = DegradationState {
            n_parallel_esr_resistors: 2,
            n_parallel_caps: 6,
        };
        assert!(apply_degradation(&ConverterParams::design_point(), &bad).is_err());
    }

    #[test]
    fn param_validation() {
        let mut p = ConverterParams::design_point();
        assert!(p.validate().is_ok());
        p.duty = 1.0;
        assert!(p.validate().is_err());
        p = ConverterParams::design_point();
        p.esr = -0.1;
        assert!(p.validate().is_err());
        p = ConverterParams::design_point();
        p.c = 0.0;
        assert!(p.validate().is_err());
    }
}
