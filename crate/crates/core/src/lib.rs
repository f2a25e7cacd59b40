//! Online estimation of output-capacitor health in a boost converter.
//!
//! The crate has two halves. [`sim`] produces realistic sampled waveforms of
//! one switching period (inductor current, output voltage, capacitor voltage
//! and switch voltage) from a piecewise-linear model of the converter, with an
//! optional noise and ADC model. [`acquisition`] and [`estimator`] recover the
//! load resistance, capacitor ESR, capacitance and inductance from a single
//! such frame, and [`diagnostics`] turns batches of estimates into a health
//! status.
//!
//! ```no_run
//! use boost_esr::{estimator::Estimator, sim, ConverterParams, SimConfig};
//!
//! let params = ConverterParams::design_point();
//! let frame = sim::simulate(&params, &SimConfig::default())?;
//! let est = Estimator::new(params.v_in).estimate(&frame)?;
//! println!("R = {:.3} ohm, ESR = {:.1} mohm", est.r_load_est, est.esr_raw * 1e3);
//! # Ok::<(), boost_esr::Error>(())
//! ```

// `!(x > 0.0)` is used deliberately so NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acquisition;
pub mod adc;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod estimator;
pub mod frame;
pub mod params;
pub mod regression;
pub mod sim;

pub use error::{Error, Result};
pub use frame::{read_frame, write_frame, AcquisitionFrame};
pub use params::{apply_degradation, ConverterParams, DegradationState};
pub use sim::{simulate, NoiseProfile, SimConfig};
