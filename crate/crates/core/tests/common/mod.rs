//! Closed-form reference for the converter: exact discretization of each
//! affine interval by the matrix exponential, and the periodic steady state
//! solved directly as a linear fixed point. Shares no code with the crate's
//! integrator.

#![allow(dead_code)]

use boost_esr::ConverterParams;
use nalgebra::{Matrix2, Matrix3, Vector2};

pub struct Affine {
    a: Matrix2<f64>,
    b: Vector2<f64>,
}

impl Affine {
    /// `exp` of the augmented system over `dt`: returns `(Phi, psi)` with
    /// `x(dt) = Phi x(0) + psi`.
    fn flow(&self, dt: f64) -> (Matrix2<f64>, Vector2<f64>) {
        let mut m = Matrix3::zeros();
        m.fixed_view_mut::<2, 2>(0, 0).copy_from(&self.a);
        m.fixed_view_mut::<2, 1>(0, 2).copy_from(&self.b);
        let e = (m * dt).exp();
        (
            e.fixed_view::<2, 2>(0, 0).into_owned(),
            e.fixed_view::<2, 1>(0, 2).into_owned(),
        )
    }
}

fn on_system(p: &ConverterParams) -> Affine {
    let rc = p.esr + p.r_track;
    Affine {
        a: Matrix2::new(
            -(p.r_l + p.r_dson) / p.l,
            0.0,
            0.0,
            -1.0 / ((p.r_load + rc) * p.c),
        ),
        b: Vector2::new(p.v_in / p.l, 0.0),
    }
}

fn off_system(p: &ConverterParams) -> Affine {
    let rc = p.esr + p.r_track;
    let r = p.r_load;
    // v_out = r (rc i + v_c) / (r + rc)
    let k_i = r * rc / (r + rc);
    let k_v = r / (r + rc);
    Affine {
        a: Matrix2::new(
            -(p.r_l + k_i) / p.l,
            -k_v / p.l,
            r / ((r + rc) * p.c),
            -1.0 / ((r + rc) * p.c),
        ),
        b: Vector2::new((p.v_in - p.v_diode) / p.l, 0.0),
    }
}

pub fn v_out(p: &ConverterParams, on: bool, i_l: f64, v_c: f64) -> f64 {
    let rc = p.esr + p.r_track;
    if on {
        v_c * p.r_load / (p.r_load + rc)
    } else {
        p.r_load * (rc * i_l + v_c) / (p.r_load + rc)
    }
}

pub struct Reference {
    pub t: Vec<f64>,
    pub i_l: Vec<f64>,
    pub v_c: Vec<f64>,
    pub v_out: Vec<f64>,
    pub on: Vec<bool>,
    /// Steady-state start-of-period state.
    pub x0: [f64; 2],
}

/// Exact steady-state samples at `t_k = k / fs`, `k < n`.
pub fn reference(p: &ConverterParams, fs: f64, n: usize) -> Reference {
    let period = 1.0 / p.f_sw;
    let t_on = p.duty * period;
    let on = on_system(p);
    let off = off_system(p);
    let (phi_on, psi_on) = on.flow(t_on);
    let (phi_off, psi_off) = off.flow(period - t_on);
    let phi = phi_off * phi_on;
    let psi = phi_off * psi_on + psi_off;
    let x0 = (Matrix2::identity() - phi)
        .lu()
        .solve(&psi)
        .expect("period map has no unit eigenvalue");
    let x_on_end = phi_on * x0 + psi_on;

    let mut r = Reference {
        t: Vec::new(),
        i_l: Vec::new(),
        v_c: Vec::new(),
        v_out: Vec::new(),
        on: Vec::new(),
        x0: [x0[0], x0[1]],
    };
    for k in 0..n {
        let t = k as f64 / fs;
        let is_on = t < t_on * (1.0 - 1e-12);
        let x = if is_on {
            let (ph, ps) = on.flow(t);
            ph * x0 + ps
        } else {
            let (ph, ps) = off.flow(t - t_on);
            ph * x_on_end + ps
        };
        r.t.push(t);
        r.i_l.push(x[0]);
        r.v_c.push(x[1]);
        r.v_out.push(v_out(p, is_on, x[0], x[1]));
        r.on.push(is_on);
    }
    r
}

/// Ripple-shape bias of the mid-T_on ESR reading for ideal components:
/// mean capacitor voltage minus its mid-T_on value, over the load current.
/// Straight-line ripple approximation.
pub fn ripple_bias(p: &ConverterParams) -> f64 {
    let period = 1.0 / p.f_sw;
    let v_out = p.v_in / (1.0 - p.duty);
    let i_load = v_out / p.r_load;
    let delta_i = p.v_in * p.duty * period / p.l;
    delta_i * (1.0 - p.duty).powi(2) * period / (12.0 * p.c * i_load)
}

pub fn max_rel_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / y.abs().max(1e-12))
        .fold(0.0, f64::max)
}
