//! Side-by-side check of the two ESR denominators against simulator ground truth.

use std::fmt::Write as _;

use boost_esr::estimator::{EsrDenominator, Estimator, EstimatorConfig};
use boost_esr::{simulate, ConverterParams, SimConfig};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VariantRow {
    pub denominator: EsrDenominator,
    pub esr_true: f64,
    pub esr_est: f64,
    pub rel_error: f64,
}

/// For each denominator: calibrate on a noiseless frame at `base.esr` with
/// that value as the known ESR, then estimate noiseless frames at each of
/// `esr_values`.
pub fn variant_report(
    base: &ConverterParams,
    esr_values: &[f64],
) -> boost_esr::Result<Vec<VariantRow>> {
    let cfg = SimConfig::default();
    let f0 = simulate(base, &cfg)?;
    let mut rows = Vec::new();
    for denominator in [EsrDenominator::LoadCurrent, EsrDenominator::InductorCurrent] {
        let est = Estimator::new(base.v_in).with_config(EstimatorConfig {
            esr_denominator: denominator,
            ..EstimatorConfig::default()
        });
        let cal = est.calibrate(&[f0.clone(), f0.clone()], base.esr)?;
        let est = est.with_calibration(cal);
        for &esr in esr_values {
            let frame = simulate(&ConverterParams { esr, ..*base }, &cfg)?;
            let esr_est = est.estimate(&frame)?.esr_est;
            rows.push(VariantRow {
                denominator,
                esr_true: esr,
                esr_est,
                rel_error: (esr_est - esr) / esr,
            });
        }
    }
    Ok(rows)
}

/// Largest absolute relative error of one denominator.
pub fn worst_error(rows: &[VariantRow], denominator: EsrDenominator) -> f64 {
    rows.iter()
        .filter(|r| r.denominator == denominator)
        .map(|r| r.rel_error.abs())
        .fold(0.0, f64::max)
}

pub fn render(rows: &[VariantRow]) -> String {
    let mut s = String::from("denominator        true_mohm  est_mohm   error\n");
    for r in rows {
        let label = match r.denominator {
            EsrDenominator::LoadCurrent => "I_L*(1-D) default",
            EsrDenominator::InductorCurrent => "I_L mean",
        };
        writeln!(
            s,
            "{label:<18} {:>9.1} {:>9.1} {:>+7.1}%",
            r.esr_true * 1e3,
            r.esr_est * 1e3,
            r.rel_error * 100.0
        )
        .unwrap();
    }
    s
}
