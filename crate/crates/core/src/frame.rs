//! One sampled switching period of the four measured signals, and its CSV form.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Minimum number of samples in a frame.
pub const MIN_FRAME_SAMPLES: usize = 100;

pub const CSV_HEADER: [&str; 5] = ["t_s", "i_l_a", "v_out_v", "v_c_v", "v_mos_v"];

/// One switching period of samples.
#[derive(Debug, Clone, PartialEq)]
pub struct AcquisitionFrame {
    pub sample_rate: f64,
    pub t: Vec<f64>,
    pub i_l: Vec<f64>,
    pub v_out: Vec<f64>,
    /// Voltage across the ideal capacitance, before the ESR drop.
    pub v_c: Vec<f64>,
    pub v_mos: Vec<f64>,
    /// Switching frequency, when known. Carried as metadata only.
    pub f_sw: Option<f64>,
}

impl AcquisitionFrame {
    pub fn new(
        sample_rate: f64,
        t: Vec<f64>,
        i_l: Vec<f64>,
        v_out: Vec<f64>,
        v_c: Vec<f64>,
        v_mos: Vec<f64>,
    ) -> Result<Self> {
        let frame = Self {
            sample_rate,
            t,
            i_l,
            v_out,
            v_c,
            v_mos,
            f_sw: None,
        };
        frame.validate()?;
        Ok(frame)
    }

    /// Builds a frame with `t[k] = t0 + k / sample_rate`.
    pub fn from_channels(
        sample_rate: f64,
        t0: f64,
        i_l: Vec<f64>,
        v_out: Vec<f64>,
        v_c: Vec<f64>,
        v_mos: Vec<f64>,
    ) -> Result<Self> {
        let t = (0..i_l.len())
            .map(|k| t0 + k as f64 / sample_rate)
            .collect();
        Self::new(sample_rate, t, i_l, v_out, v_c, v_mos)
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate.is_finite() && self.sample_rate > 0.0) {
            return Err(Error::InvalidFrame(format!(
                "sample rate must be > 0, got {}",
                self.sample_rate
            )));
        }
        let n = self.t.len();
        for (name, len) in [
            ("i_l", self.i_l.len()),
            ("v_out", self.v_out.len()),
            ("v_c", self.v_c.len()),
            ("v_mos", self.v_mos.len()),
        ] {
            if len != n {
                return Err(Error::InvalidFrame(format!(
                    "channel {name} has {len} samples, t has {n}"
                )));
            }
        }
        if n < MIN_FRAME_SAMPLES {
            return Err(Error::InvalidFrame(format!(
                "{n} samples, need at least {MIN_FRAME_SAMPLES}"
            )));
        }
        let dt = 1.0 / self.sample_rate;
        for (k, w) in self.t.windows(2).enumerate() {
            let step = w[1] - w[0];
            if !(step > 0.0) || ((step - dt) / dt).abs() > 1e-6 {
                return Err(Error::InvalidFrame(format!(
                    "non-uniform time step {step:e} s at sample {}, expected {dt:e} s",
                    k + 1
                )));
            }
        }
        let finite = [&self.t, &self.i_l, &self.v_out, &self.v_c, &self.v_mos]
            .iter()
            .all(|ch| ch.iter().all(|v| v.is_finite()));
        if !finite {
            return Err(Error::InvalidFrame("non-finite sample".into()));
        }
        Ok(())
    }
}

/// Writes `frame` as waveform CSV. Values use the shortest representation
/// that parses back to the same `f64`.
pub fn write_frame<W: Write>(frame: &AcquisitionFrame, mut out: W) -> Result<()> {
    writeln!(out, "# sample_rate_hz={}", frame.sample_rate)?;
    if let Some(f_sw) = frame.f_sw {
        writeln!(out, "# f_sw_hz={f_sw}")?;
    }
    writeln!(out, "{}", CSV_HEADER.join(","))?;
    for k in 0..frame.len() {
        writeln!(
            out,
            "{},{},{},{},{}",
            frame.t[k], frame.i_l[k], frame.v_out[k], frame.v_c[k], frame.v_mos[k]
        )?;
    }
    out.flush()?;
    Ok(())
}

/// Parses waveform CSV. Columns are matched by header name; surrounding
/// whitespace and blank lines are ignored.
pub fn read_frame<R: BufRead>(input: R) -> Result<AcquisitionFrame> {
    let mut sample_rate = None;
    let mut f_sw = None;
    let mut columns: Option<[usize; 5]> = None;
    let mut width = 0;
    let mut data: [Vec<f64>; 5] = Default::default();

    for (idx, line) in input.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((key, value)) = comment.trim().split_once('=') {
                let parse = |v: &str| {
                    v.trim().parse::<f64>().map_err(|e| Error::Parse {
                        line: lineno,
                        msg: format!("bad value for {}: {e}", key.trim()),
                    })
                };
                match key.trim() {
                    "sample_rate_hz" => sample_rate = Some(parse(value)?),
                    "f_sw_hz" => f_sw = Some(parse(value)?),
                    _ => {}
                }
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        match columns {
            None => {
                let mut map = [0usize; 5];
                for (slot, name) in map.iter_mut().zip(CSV_HEADER) {
                    *slot = fields
                        .iter()
                        .position(|f| *f == name)
                        .ok_or_else(|| Error::MissingColumn(name.to_string()))?;
                }
                width = fields.len();
                columns = Some(map);
            }
            Some(map) => {
                if fields.len() != width {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: format!("expected {width} fields, found {}", fields.len()),
                    });
                }
                for ((ch, &col), name) in data.iter_mut().zip(map.iter()).zip(CSV_HEADER) {
                    let v = fields[col].parse::<f64>().map_err(|e| Error::Parse {
                        line: lineno,
                        msg: format!("column {name}: {e}"),
                    })?;
                    ch.push(v);
                }
            }
        }
    }

    if columns.is_none() {
        return Err(Error::Parse {
            line: 0,
            msg: "no header line".into(),
        });
    }
    let [t, i_l, v_out, v_c, v_mos] = data;
    let sample_rate = match sample_rate {
        Some(fs) => fs,
        None if t.len() >= 2 => (t.len() - 1) as f64 / (t[t.len() - 1] - t[0]),
        None => {
            return Err(Error::InvalidFrame(
                "no sample_rate_hz metadata and too few rows to infer it".into(),
            ))
        }
    };
    let mut frame = AcquisitionFrame::new(sample_rate, t, i_l, v_out, v_c, v_mos)?;
    frame.f_sw = f_sw;
    Ok(frame)
}
