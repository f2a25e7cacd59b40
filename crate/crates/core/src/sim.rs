//! Switching-resolved simulation of the boost converter.
//!
//! The plant is piecewise linear in the state `(i_l, v_c)`: one affine system
//! while the switch conducts, another while the diode conducts. Each period is
//! integrated with fixed-step RK4; the substep that straddles the turn-off
//! instant is split there. Periodic steady state is found by Newton iteration
//! on the period map (a shooting method), which is exact up to round-off
//! because the map is affine, and is then confirmed by stepping whole periods.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::adc::{AcSeparation, Channels, Quantizer};
use crate::error::{Error, Result};
use crate::frame::AcquisitionFrame;
use crate::params::ConverterParams;

/// Relative start-of-period change below which the converter is in steady state.
pub const STEADY_STATE_TOL: f64 = 1e-9;
/// Minimum ratio of sample rate to switching frequency.
pub const MIN_SAMPLES_PER_PERIOD: f64 = 100.0;
pub const MIN_SUBSTEPS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub sample_rate: f64,
    /// Whole periods stepped (and checked) at steady state before the captured one.
    pub n_periods: usize,
    pub integrator_substeps: usize,
    pub noise_sigma: Channels<f64>,
    /// 0 disables quantization.
    pub adc_bits: u32,
    pub adc_fullscale: Channels<f64>,
    pub ac_separation: Channels<Option<AcSeparation>>,
    pub seed: u64,
}

fn default_fullscale() -> Channels<f64> {
    Channels {
        i_l: 5.0,
        v_out: 32.0,
        v_c: 32.0,
        v_mos: 32.0,
    }
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            sample_rate: 2e6,
            n_periods: 2,
            integrator_substeps: 10,
            noise_sigma: Channels::default(),
            adc_bits: 0,
            adc_fullscale: default_fullscale(),
            ac_separation: Channels::default(),
            seed: 0,
        }
    }
}

/// Named measurement-chain presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseProfile {
    /// Ideal sensors, no quantization.
    None,
    /// Sensor noise and 12-bit conversion comparable to a low-cost MCU board.
    Hardware,
}

impl NoiseProfile {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "none" | "ideal" => Some(Self::None),
            "hardware" => Some(Self::Hardware),
            _ => None,
        }
    }

    pub fn apply(self, cfg: &mut SimConfig) {
        match self {
            Self::None => {
                cfg.noise_sigma = Channels::default();
                cfg.adc_bits = 0;
            }
            Self::Hardware => {
                cfg.noise_sigma = Channels {
                    i_l: 0.025,
                    v_out: 0.020,
                    v_c: 0.045,
                    v_mos: 0.050,
                };
                cfg.adc_bits = 12;
                cfg.adc_fullscale = default_fullscale();
            }
        }
    }
}

impl SimConfig {
    pub fn with_profile(mut self, profile: NoiseProfile) -> Self {
        profile.apply(&mut self);
        self
    }

    pub fn validate_for(&self, params: &ConverterParams) -> Result<()> {
        if !(self.sample_rate.is_finite() && self.sample_rate > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "sample_rate must be > 0, got {}",
                self.sample_rate
            )));
        }
        if self.sample_rate < MIN_SAMPLES_PER_PERIOD * params.f_sw * (1.0 - 1e-12) {
            return Err(Error::InvalidConfig(format!(
                "sample_rate {} Hz is below {MIN_SAMPLES_PER_PERIOD} x f_sw ({} Hz)",
                self.sample_rate, params.f_sw
            )));
        }
        if self.n_periods == 0 {
            return Err(Error::InvalidConfig("n_periods must be >= 1".into()));
        }
        if self.integrator_substeps < MIN_SUBSTEPS {
            return Err(Error::InvalidConfig(format!(
                "integrator_substeps must be >= {MIN_SUBSTEPS}, got {}",
                self.integrator_substeps
            )));
        }
        let ch = [
            self.noise_sigma.i_l,
            self.noise_sigma.v_out,
            self.noise_sigma.v_c,
            self.noise_sigma.v_mos,
        ];
        if ch.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(Error::InvalidConfig(
                "noise_sigma must be finite and >= 0".into(),
            ));
        }
        if self.adc_bits > 0 {
            if self.adc_bits > 32 {
                return Err(Error::InvalidConfig("adc_bits must be <= 32".into()));
            }
            let fs = [
                self.adc_fullscale.i_l,
                self.adc_fullscale.v_out,
                self.adc_fullscale.v_c,
                self.adc_fullscale.v_mos,
            ];
            if fs.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(Error::InvalidConfig("adc_fullscale must be > 0".into()));
            }
            let ac = [
                self.ac_separation.i_l,
                self.ac_separation.v_out,
                self.ac_separation.v_c,
                self.ac_separation.v_mos,
            ];
            if ac
                .iter()
                .flatten()
                .any(|a| !(a.gain.is_finite() && a.gain > 0.0))
            {
                return Err(Error::InvalidConfig(
                    "ac_separation gain must be > 0".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Converter state: inductor current and ideal-capacitor voltage.
pub type State = [f64; 2];

/// Output voltage and switch voltage for a state and switch position.
pub fn outputs(p: &ConverterParams, on: bool, x: &State) -> (f64, f64) {
    let [i_l, v_c] = *x;
    let rc = p.branch_resistance();
    let r = p.r_load;
    if on {
        let v_out = v_c * r / (r + rc);
        (v_out, p.r_dson * i_l)
    } else {
        let v_out = r * (rc * i_l + v_c) / (r + rc);
        (v_out, v_out + p.v_diode)
    }
}

fn derivative(p: &ConverterParams, on: bool, x: &State) -> State {
    let [i_l, _] = *x;
    let (v_out, _) = outputs(p, on, x);
    let di = if on {
        (p.v_in - (p.r_l + p.r_dson) * i_l) / p.l
    } else {
        (p.v_in - p.r_l * i_l - p.v_diode - v_out) / p.l
    };
    let i_c = if on { 0.0 } else { i_l } - v_out / p.r_load;
    [di, i_c / p.c]
}

fn rk4(p: &ConverterParams, on: bool, x: &State, h: f64) -> State {
    let add = |a: &State, k: &State, s: f64| [a[0] + s * k[0], a[1] + s * k[1]];
    let k1 = derivative(p, on, x);
    let k2 = derivative(p, on, &add(x, &k1, h / 2.0));
    let k3 = derivative(p, on, &add(x, &k2, h / 2.0));
    let k4 = derivative(p, on, &add(x, &k3, h));
    [
        x[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        x[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

/// Number of samples captured per switching period.
pub fn samples_per_period(sample_rate: f64, f_sw: f64) -> usize {
    let ratio = sample_rate / f_sw;
    let rounded = ratio.round();
    if (ratio - rounded).abs() < 1e-6 {
        rounded as usize
    } else {
        ratio.ceil() as usize
    }
}

/// Integration knots over one period.
struct PeriodGrid {
    /// Knot times, starting at 0 and ending at the period.
    knots: Vec<f64>,
    /// Knot index of each sample.
    sample_knots: Vec<usize>,
    t_on: f64,
}

impl PeriodGrid {
    fn new(p: &ConverterParams, cfg: &SimConfig) -> Self {
        let period = p.period();
        let n_samples = samples_per_period(cfg.sample_rate, p.f_sw);
        let h = 1.0 / (cfg.sample_rate * cfg.integrator_substeps as f64);
        let snap = 1e-6 * h;

        let mut knots = Vec::new();
        let mut sample_knots = Vec::with_capacity(n_samples);
        let mut j = 0usize;
        loop {
            let t = j as f64 * h;
            if t > period - snap {
                break;
            }
            if j.is_multiple_of(cfg.integrator_substeps) && sample_knots.len() < n_samples {
                sample_knots.push(knots.len());
            }
            knots.push(t);
            j += 1;
        }
        knots.push(period);

        let mut t_on = p.duty * period;
        match knots.iter().position(|&t| (t - t_on).abs() <= snap) {
            Some(idx) => t_on = knots[idx],
            None => {
                let idx = knots.partition_point(|&t| t < t_on);
                knots.insert(idx, t_on);
                for s in sample_knots.iter_mut().filter(|s| **s >= idx) {
                    *s += 1;
                }
            }
        }
        Self {
            knots,
            sample_knots,
            t_on,
        }
    }

    fn is_on(&self, t: f64) -> bool {
        t < self.t_on
    }
}

/// Samples of the noiseless state over one period.
struct Capture {
    states: Vec<State>,
    times: Vec<f64>,
}

/// Advances one period from `x0`. With `check_dcm`, fails if the inductor
/// current reaches zero while the diode conducts.
fn run_period(
    p: &ConverterParams,
    grid: &PeriodGrid,
    x0: State,
    check_dcm: bool,
    mut capture: Option<&mut Capture>,
) -> Result<State> {
    let mut x = x0;
    let mut next_sample = 0;
    for (k, w) in grid.knots.windows(2).enumerate() {
        if let Some(cap) = capture.as_deref_mut() {
            if next_sample < grid.sample_knots.len() && grid.sample_knots[next_sample] == k {
                cap.states.push(x);
                cap.times.push(w[0]);
                next_sample += 1;
            }
        }
        let on = grid.is_on(0.5 * (w[0] + w[1]));
        x = rk4(p, on, &x, w[1] - w[0]);
        if check_dcm && !on && x[0] <= 0.0 {
            return Err(Error::DiscontinuousConduction { time_s: w[1] });
        }
    }
    Ok(x)
}

fn rel_change(a: &State, b: &State) -> f64 {
    let diff = (a[0] - b[0]).abs().max((a[1] - b[1]).abs());
    let scale = a[0].abs().max(a[1].abs()).max(f64::MIN_POSITIVE);
    diff / scale
}

/// Start-of-period state of the periodic steady state.
pub fn steady_state(p: &ConverterParams, cfg: &SimConfig) -> Result<State> {
    p.validate()?;
    cfg.validate_for(p)?;
    let grid = PeriodGrid::new(p, cfg);
    find_fixed_point(p, cfg, &grid)
}

fn find_fixed_point(p: &ConverterParams, cfg: &SimConfig, grid: &PeriodGrid) -> Result<State> {
    let tau = p.r_load * p.c;
    let budget = ((10.0 * tau * p.f_sw).ceil() as usize).max(8);

    // Ideal averaged operating point as the initial guess.
    let v_guess = p.v_in / (1.0 - p.duty);
    let mut x = [v_guess / (p.r_load * (1.0 - p.duty)), v_guess];
    let mut evals = 0usize;
    let mut residual = f64::INFINITY;

    while evals + 4 <= budget {
        let px = run_period(p, grid, x, false, None)?;
        evals += 1;
        residual = rel_change(&px, &x);
        if residual < STEADY_STATE_TOL {
            break;
        }
        let f = [px[0] - x[0], px[1] - x[1]];
        let mut jac = [[0.0; 2]; 2];
        for i in 0..2 {
            let delta = 1e-3 * x[i].abs().max(1.0);
            let mut xp = x;
            xp[i] += delta;
            let pxp = run_period(p, grid, xp, false, None)?;
            evals += 1;
            for r in 0..2 {
                jac[r][i] = (pxp[r] - px[r]) / delta - if r == i { 1.0 } else { 0.0 };
            }
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if !(det.is_finite() && det.abs() > 0.0) {
            return Err(Error::NoConvergence {
                periods: evals,
                residual,
            });
        }
        let dx0 = (jac[1][1] * f[0] - jac[0][1] * f[1]) / det;
        let dx1 = (-jac[1][0] * f[0] + jac[0][0] * f[1]) / det;
        x = [x[0] - dx0, x[1] - dx1];
    }
    if residual >= STEADY_STATE_TOL {
        return Err(Error::NoConvergence {
            periods: evals,
            residual,
        });
    }

    for _ in 0..cfg.n_periods {
        let next = run_period(p, grid, x, true, None)?;
        let change = rel_change(&next, &x);
        if change >= STEADY_STATE_TOL {
            return Err(Error::NoConvergence {
                periods: evals,
                residual: change,
            });
        }
        x = next;
    }
    Ok(x)
}

/// Simulates to periodic steady state and captures one switching period,
/// starting at switch turn-on, then applies the configured measurement chain.
pub fn simulate(params: &ConverterParams, cfg: &SimConfig) -> Result<AcquisitionFrame> {
    params.validate()?;
    cfg.validate_for(params)?;
    let grid = PeriodGrid::new(params, cfg);
    let x0 = find_fixed_point(params, cfg, &grid)?;

    let n = grid.sample_knots.len();
    let mut cap = Capture {
        states: Vec::with_capacity(n),
        times: Vec::with_capacity(n),
    };
    run_period(params, &grid, x0, true, Some(&mut cap))?;

    let mut ch: Channels<Vec<f64>> = Channels {
        i_l: Vec::with_capacity(n),
        v_out: Vec::with_capacity(n),
        v_c: Vec::with_capacity(n),
        v_mos: Vec::with_capacity(n),
    };
    for (x, &t) in cap.states.iter().zip(&cap.times) {
        let (v_out, v_mos) = outputs(params, grid.is_on(t), x);
        ch.i_l.push(x[0]);
        ch.v_c.push(x[1]);
        ch.v_out.push(v_out);
        ch.v_mos.push(v_mos);
    }
    apply_measurement(&mut ch, cfg);

    let t = (0..n).map(|k| k as f64 / cfg.sample_rate).collect();
    let mut frame = AcquisitionFrame::new(cfg.sample_rate, t, ch.i_l, ch.v_out, ch.v_c, ch.v_mos)?;
    frame.f_sw = Some(params.f_sw);
    Ok(frame)
}

fn apply_measurement(ch: &mut Channels<Vec<f64>>, cfg: &SimConfig) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let chain = [
        (
            &mut ch.i_l,
            cfg.noise_sigma.i_l,
            cfg.adc_fullscale.i_l,
            cfg.ac_separation.i_l,
        ),
        (
            &mut ch.v_out,
            cfg.noise_sigma.v_out,
            cfg.adc_fullscale.v_out,
            cfg.ac_separation.v_out,
        ),
        (
            &mut ch.v_c,
            cfg.noise_sigma.v_c,
            cfg.adc_fullscale.v_c,
            cfg.ac_separation.v_c,
        ),
        (
            &mut ch.v_mos,
            cfg.noise_sigma.v_mos,
            cfg.adc_fullscale.v_mos,
            cfg.ac_separation.v_mos,
        ),
    ];
    for (samples, sigma, fullscale, ac) in chain {
        if sigma > 0.0 {
            let normal = Normal::new(0.0, sigma).expect("sigma validated");
            for v in samples.iter_mut() {
                *v += normal.sample(&mut rng);
            }
        }
        if cfg.adc_bits > 0 {
            let q = Quantizer::new(cfg.adc_bits, fullscale);
            for v in samples.iter_mut() {
                *v = q.convert(*v, ac);
            }
        }
    }
}
