use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use boost_esr::config::Config;
use boost_esr::diagnostics::HealthBaseline;
use boost_esr::estimator::{CalibrationOffset, Estimator};
use boost_esr::{
    apply_degradation, read_frame, simulate, write_frame, AcquisitionFrame, DegradationState,
    NoiseProfile,
};
use clap::{Parser, Subcommand, ValueEnum};
use esr_cli::monitor::{run_monitor, SkipKind};
use esr_cli::{exit_code, run_sweep, write_sweep, ExperimentSpec, PartialFailure, SweepAxis};

/// Boost-converter output-capacitor diagnostics: simulate, estimate, calibrate, sweep, monitor.
#[derive(Parser, Debug)]
#[command(author, version, about)]
struct Cli {
    /// JSON config (plant, sampling, estimator, thresholds). Defaults to the design point.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output file or directory; standard output when omitted where that makes sense.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Noise {
    None,
    Hardware,
}

impl From<Noise> for NoiseProfile {
    fn from(n: Noise) -> Self {
        match n {
            Noise::None => NoiseProfile::None,
            Noise::Hardware => NoiseProfile::Hardware,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Axis {
    Esr,
    Capacitance,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write one steady-state frame.
    Simulate {
        #[arg(long)]
        noise: Option<Noise>,
        /// ESR network resistors in parallel (0 bypasses the network).
        #[arg(long, requires = "caps")]
        k: Option<u8>,
        /// Capacitors in parallel.
        #[arg(long, requires = "k")]
        caps: Option<u8>,
    },
    /// Estimate R_load, ESR, C and L from one frame and print a CSV row.
    Estimate {
        frame: PathBuf,
        /// Offset JSON from `calibrate`.
        #[arg(long)]
        calibration: Option<PathBuf>,
    },
    /// Derive the ESR offset from baseline frames with a known ESR.
    Calibrate {
        /// Baseline frames; when empty, `--count` frames are simulated from the config.
        frames: Vec<PathBuf>,
        /// ESR present during the baseline, in ohms.
        #[arg(long)]
        true_esr: f64,
        #[arg(long, default_value_t = 20)]
        count: usize,
        #[arg(long)]
        noise: Option<Noise>,
    },
    /// Batches of acquisitions over a degradation axis; writes CSV and regression summaries.
    Sweep {
        #[arg(long, value_enum, default_value = "esr")]
        axis: Axis,
        /// ESR network steps (esr axis).
        #[arg(long, value_delimiter = ',', default_value = "5,4,3,2,1")]
        ks: Vec<u8>,
        /// Bank sizes; one ESR sweep per entry on the esr axis.
        #[arg(long, value_delimiter = ',')]
        caps: Option<Vec<u8>>,
        /// Fixed ESR network step on the capacitance axis.
        #[arg(long, default_value_t = 5)]
        k: u8,
        #[arg(long, default_value_t = 20)]
        n: usize,
        #[arg(long, value_enum, default_value = "hardware")]
        noise: Noise,
    },
    /// Health reports (JSON lines) over a directory of frames, in name order.
    Monitor {
        dir: PathBuf,
        #[arg(long, default_value_t = 20)]
        batch: usize,
        /// HealthBaseline JSON; otherwise the first batch sets the baseline.
        #[arg(long)]
        baseline: Option<PathBuf>,
        #[arg(long)]
        calibration: Option<PathBuf>,
    },
}

fn load_config(cli: &Cli) -> Result<Config> {
    let mut cfg = match &cli.config {
        Some(path) => {
            Config::load(path).with_context(|| format!("loading config {}", path.display()))?
        }
        None => Config::design_point(),
    };
    if let Some(seed) = cli.seed {
        cfg.sim.seed = seed;
    }
    Ok(cfg)
}

fn load_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {what} {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {what} {}", path.display()))
}

fn load_frame(path: &Path) -> Result<AcquisitionFrame> {
    let file = fs::File::open(path).with_context(|| format!("opening frame {}", path.display()))?;
    read_frame(BufReader::new(file)).with_context(|| format!("reading frame {}", path.display()))
}

/// Writes to `--out` when given, else standard output.
fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn estimator(cfg: &Config, calibration: Option<&Path>) -> Result<Estimator> {
    let est = Estimator::new(cfg.params.v_in).with_config(cfg.estimator);
    Ok(match calibration {
        Some(p) => est.with_calibration(load_json::<CalibrationOffset>(p, "calibration")?),
        None => est,
    })
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(&cli)?;
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Simulate { noise, k, caps } => {
            let mut params = cfg.plant()?;
            if let (Some(k), Some(caps)) = (k, caps) {
                params = apply_degradation(&cfg.params, &DegradationState::new(*k, *caps)?)?;
            }
            let mut sim = cfg.sim_config();
            if let Some(n) = noise {
                NoiseProfile::from(*n).apply(&mut sim);
            }
            let frame = simulate(&params, &sim)?;
            let mut buf = Vec::new();
            write_frame(&frame, &mut buf)?;
            emit(out, std::str::from_utf8(&buf)?)
        }
        Command::Estimate { frame, calibration } => {
            let est = estimator(&cfg, calibration.as_deref())?;
            let f = load_frame(frame)?;
            let r = est
                .estimate(&f)
                .with_context(|| format!("estimating {}", frame.display()))?;
            let text = format!(
                "r_load_ohm,esr_raw_mohm,esr_est_mohm,c_uf,l_uh,l_two_slope_uh,d_on\n{},{},{},{},{},{},{}\n",
                r.r_load_est,
                r.esr_raw * 1e3,
                r.esr_est * 1e3,
                r.c_est * 1e6,
                r.l_est * 1e6,
                r.l_est_two_slope.map_or(String::new(), |l| (l * 1e6).to_string()),
                r.d_on
            );
            emit(out, &text)
        }
        Command::Calibrate {
            frames,
            true_esr,
            count,
            noise,
        } => {
            let est = estimator(&cfg, None)?;
            let baseline: Vec<AcquisitionFrame> = if frames.is_empty() {
                let params = cfg.plant()?;
                let mut sim = cfg.sim_config();
                if let Some(n) = noise {
                    NoiseProfile::from(*n).apply(&mut sim);
                }
                let seed0 = sim.seed;
                (0..*count as u64)
                    .map(|i| {
                        sim.seed = seed0.wrapping_add(i);
                        simulate(&params, &sim)
                    })
                    .collect::<boost_esr::Result<_>>()?
            } else {
                frames
                    .iter()
                    .map(|p| load_frame(p))
                    .collect::<Result<_>>()?
            };
            let cal = est.calibrate(&baseline, *true_esr)?;
            emit(out, &(serde_json::to_string_pretty(&cal)? + "\n"))
        }
        Command::Sweep {
            axis,
            ks,
            caps,
            k,
            n,
            noise,
        } => {
            let axis = match axis {
                Axis::Esr => SweepAxis::Esr {
                    ks: ks.clone(),
                    caps: caps.clone().unwrap_or_else(|| vec![3]),
                },
                Axis::Capacitance => SweepAxis::Capacitance {
                    caps: caps.clone().unwrap_or_else(|| vec![1, 2, 3, 4, 5]),
                    k: *k,
                },
            };
            let seed = cfg.sim.seed;
            let spec = ExperimentSpec {
                base: cfg,
                axis,
                n_acquisitions: *n,
                noise: Some((*noise).into()),
                seed,
            };
            let dir = out.unwrap_or(Path::new("sweep_out"));
            let report = run_sweep(&spec)?;
            write_sweep(&report, dir)?;
            for r in &report.regressions {
                eprintln!(
                    "group {} {}: slope {:.4} intercept {:.4} r2 {:.4}",
                    r.group, r.quantity, r.fit.slope, r.fit.intercept, r.fit.r_squared
                );
            }
            let failures = report.failures();
            if let Some((_, first)) = failures.first() {
                return Err(PartialFailure {
                    failed: failures.len(),
                    total: report.points.len(),
                    first: first.to_string(),
                }
                .into());
            }
            Ok(())
        }
        Command::Monitor {
            dir,
            batch,
            baseline,
            calibration,
        } => {
            let est = estimator(&cfg, calibration.as_deref())?;
            let baseline = match baseline {
                Some(p) => Some(load_json::<HealthBaseline>(p, "baseline")?),
                None => None,
            };
            let outcome = run_monitor(dir, *batch, &est, baseline, cfg.thresholds)?;
            let mut text = String::new();
            for r in &outcome.reports {
                text += &serde_json::to_string(r)?;
                text.push('\n');
            }
            emit(out, &text)?;
            for s in &outcome.skipped {
                eprintln!("warning: skipped {}: {}", s.frame, s.reason);
            }
            let count = |k| outcome.skipped.iter().filter(|s| s.kind == k).count();
            let unreadable = count(SkipKind::Unreadable);
            let failed = count(SkipKind::Estimation);
            if unreadable > 0 {
                bail!(boost_esr::Error::InvalidFrame(format!(
                    "{unreadable} unreadable frame(s) skipped"
                )));
            }
            if failed > 0 {
                bail!(boost_esr::Error::Estimation(format!(
                    "{failed} frame(s) could not be estimated"
                )));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
