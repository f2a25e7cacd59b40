mod common;

use boost_esr::acquisition::{compute_means, segment_states};
use boost_esr::estimator::{
    calibrate_offset, estimate_c, estimate_esr, estimate_l, estimate_rload, EsrDenominator,
    Estimator, EstimatorConfig, RloadMethod,
};
use boost_esr::regression::linear_regression;
use boost_esr::sim::{simulate, NoiseProfile, SimConfig};
use boost_esr::{apply_degradation, AcquisitionFrame, ConverterParams, DegradationState, Error};
use common::ripple_bias;

fn noiseless(p: &ConverterParams) -> AcquisitionFrame {
    simulate(p, &SimConfig::default()).unwrap()
}

fn noisy_batch(p: &ConverterParams, seed0: u64, n: u64) -> Vec<AcquisitionFrame> {
    (seed0..seed0 + n)
        .map(|seed| {
            let cfg = SimConfig {
                seed,
                ..SimConfig::default()
            }
            .with_profile(NoiseProfile::Hardware);
            simulate(p, &cfg).unwrap()
        })
        .collect()
}

fn at(c: f64, esr: f64) -> ConverterParams {
    ConverterParams {
        c,
        esr,
        ..ConverterParams::design_point()
    }
}

#[test]
fn duty_ratio_measured_within_one_sample() {
    let f = noiseless(&ConverterParams::design_point());
    let seg = segment_states(&f).unwrap();
    assert!((seg.d_on - 0.4).abs() <= 0.005);
    assert_eq!(seg.rotation, 0);

    let mut p = ConverterParams::design_point();
    p.duty = 0.4123;
    let seg = segment_states(&noiseless(&p)).unwrap();
    assert!((seg.d_on - p.duty).abs() <= 0.005);
}

#[test]
fn millivolt_noise_does_not_move_segmentation() {
    let f = noiseless(&ConverterParams::design_point());
    let cfg = SimConfig {
        noise_sigma: boost_esr::adc::Channels {
            v_mos: 1e-3,
            ..Default::default()
        },
        seed: 3,
        ..SimConfig::default()
    };
    let g = simulate(&ConverterParams::design_point(), &cfg).unwrap();
    assert_ne!(f.v_mos, g.v_mos);
    let a = segment_states(&f).unwrap();
    let b = segment_states(&g).unwrap();
    assert_eq!((a.on, a.off, a.rotation), (b.on, b.off, b.rotation));
}

#[test]
fn design_point_means() {
    let seg = segment_states(&noiseless(&ConverterParams::design_point())).unwrap();
    let m = compute_means(&seg);
    assert!((m.v_media() - 20.0).abs() / 20.0 < 0.005);
    assert!((m.i_l_media() - 5.0 / 3.0).abs() / (5.0 / 3.0) < 0.01);
    assert!((m.i_l_media() - 1.667).abs() / 1.667 < 0.01);
}

#[test]
fn output_offset_shifts_mean_exactly() {
    let f = noiseless(&ConverterParams::design_point());
    let mut g = f.clone();
    let delta = 0.37;
    g.v_out.iter_mut().for_each(|v| *v += delta);
    let a = compute_means(&segment_states(&f).unwrap());
    let b = compute_means(&segment_states(&g).unwrap());
    assert!((b.v_media() - a.v_media() - delta).abs() < 1e-12);
    assert_eq!(a.i_l_media(), b.i_l_media());
}

#[test]
fn load_resistance_noiseless() {
    let f = noiseless(&ConverterParams::design_point());
    let seg = segment_states(&f).unwrap();
    let m = compute_means(&seg);
    let r_simple = estimate_rload(&m, seg.d_on).unwrap();
    assert!((r_simple - 20.0).abs() / 20.0 < 0.005, "{r_simple}");
    let est = Estimator::new(12.0).estimate(&f).unwrap();
    assert!(
        (est.r_load_est - 20.0).abs() / 20.0 < 1e-4,
        "{}",
        est.r_load_est
    );
}

#[test]
fn inductor_mean_load_formula_reads_high_with_parasitics() {
    // C = 99 uF, 40 mOhm network, board parasitics
    let base = ConverterParams {
        r_track: 0.03,
        ..ConverterParams::design_point()
    };
    let p = apply_degradation(&base, &DegradationState::new(5, 3).unwrap()).unwrap();
    let frames = noisy_batch(&p, 0, 20);
    let mean_il = Estimator::new(12.0).with_config(EstimatorConfig {
        rload_method: RloadMethod::InductorMean,
        ..EstimatorConfig::default()
    });
    let (_, s) = mean_il.run_batch(&frames).unwrap();
    assert!((s.r_load.mean - 20.03).abs() < 0.03, "{}", s.r_load.mean);
    assert!(s.r_load.std_dev() < 0.03);

    let (_, s) = Estimator::new(12.0).run_batch(&frames).unwrap();
    assert!((s.r_load.mean - 20.0).abs() < 0.02, "{}", s.r_load.mean);
}

#[test]
fn zero_esr_raw_reading_is_ripple_bias() {
    for n in 1..=5 {
        let p = at(n as f64 * 33e-6, 0.0);
        let est = Estimator::new(12.0).estimate(&noiseless(&p)).unwrap();
        let bias = ripple_bias(&p);
        assert!(
            (est.esr_raw - bias).abs() < 0.10 * bias,
            "C = {} uF: raw {} bias {}",
            n * 33,
            est.esr_raw,
            bias
        );
    }
}

#[test]
fn noiseless_esr_sweep_is_tracked() {
    let c = 99e-6;
    let truth = [0.040, 0.050, 0.070, 0.100, 0.200];
    let frames: Vec<_> = truth.iter().map(|&e| noiseless(&at(c, e))).collect();
    let est = Estimator::new(12.0);
    let cal = est
        .calibrate(&[frames[0].clone(), frames[0].clone()], truth[0])
        .unwrap();
    let est = est.with_calibration(cal);
    let values: Vec<f64> = frames
        .iter()
        .map(|f| est.estimate(f).unwrap().esr_est)
        .collect();
    for (v, t) in values.iter().zip(truth) {
        assert!((v - t).abs() < 0.05 * t, "estimated {v} for {t}");
    }
    assert!(values.windows(2).all(|w| w[1] > w[0]));
    let r = linear_regression(&truth, &values).unwrap();
    assert!((0.9..=1.1).contains(&r.slope));
    assert!(r.r_squared > 0.99);
}

#[test]
fn inductance_from_on_slope() {
    let seg = segment_states(&noiseless(&ConverterParams::design_point())).unwrap();
    let l = estimate_l(&seg, 12.0, &EstimatorConfig::default()).unwrap();
    assert!((l.l - 240e-6).abs() / 240e-6 < 0.01);
    let two = l.l_two_slope.unwrap();
    assert!((two - l.l).abs() / l.l < 0.02, "{two} vs {}", l.l);
}

#[test]
fn capacitance_from_on_slope() {
    let p = at(99e-6, 0.0);
    let seg = segment_states(&noiseless(&p)).unwrap();
    let m = compute_means(&seg);
    let c = estimate_c(&seg, &m, 20.0, &EstimatorConfig::default()).unwrap();
    assert!((c.c - 99e-6).abs() / 99e-6 < 0.02);
    assert!(c.m_on_vc < 0.0);
}

#[test]
fn capacitance_spread_grows_with_capacitance() {
    let stats = |c: f64| {
        let frames = noisy_batch(&at(c, 0.04), 100, 20);
        Estimator::new(12.0).run_batch(&frames).unwrap().1
    };
    let big = stats(165e-6);
    let small = stats(33e-6);
    let big_sd = big.c.std_dev() * 1e6;
    let small_sd = small.c.std_dev() * 1e6;
    assert!((5.0..=20.0).contains(&big_sd), "165 uF spread {big_sd} uF");
    assert!(small_sd < 3.0, "33 uF spread {small_sd} uF");
    assert!(small_sd < big_sd);
}

#[test]
fn inductance_spread_is_small_under_noise() {
    let frames = noisy_batch(&ConverterParams::design_point(), 7, 20);
    let (_, s) = Estimator::new(12.0).run_batch(&frames).unwrap();
    assert!((s.l.mean - 240e-6).abs() / 240e-6 < 0.01);
    assert!(s.l.std_dev() < 5e-6);
}

#[test]
fn offset_absorbs_track_resistance() {
    let cfg = EstimatorConfig::default();
    let offset = |r_track: f64| {
        let p = ConverterParams {
            r_track,
            ..at(99e-6, 0.040)
        };
        let seg = segment_states(&noiseless(&p)).unwrap();
        calibrate_offset(&[seg.clone(), seg], 0.040, &cfg).unwrap()
    };
    let bare = offset(0.0);
    let with_track = offset(0.030);
    assert_eq!(with_track.derived_from, 2);
    // the offset also holds the ripple-shape bias of the mid-T_on reading
    let bias = ripple_bias(&at(99e-6, 0.0));
    assert!(
        (bare.esr_offset - bias).abs() < 0.1 * bias,
        "{}",
        bare.esr_offset
    );
    let diff = with_track.esr_offset - bare.esr_offset;
    assert!((diff - 0.030).abs() < 1e-3, "{diff}");
}

#[test]
fn calibrated_200_mohm_after_40_mohm_baseline() {
    let base = ConverterParams {
        r_track: 0.03,
        ..ConverterParams::design_point()
    };
    let baseline = apply_degradation(&base, &DegradationState::new(5, 3).unwrap()).unwrap();
    let degraded = apply_degradation(&base, &DegradationState::new(1, 3).unwrap()).unwrap();
    let est = Estimator::new(12.0);
    let cal = est
        .calibrate(&noisy_batch(&baseline, 500, 20), 0.040)
        .unwrap();
    let (_, s) = est
        .with_calibration(cal)
        .run_batch(&noisy_batch(&degraded, 600, 20))
        .unwrap();
    assert!((s.esr.mean - 0.200).abs() <= 0.010, "{}", s.esr.mean);
    assert!(
        (0.005..=0.020).contains(&s.esr.std_dev()),
        "{}",
        s.esr.std_dev()
    );
}

#[test]
fn inductor_esr_denominator_loses_one_minus_d() {
    let base = at(160e-6, 0.0);
    let degraded = at(160e-6, 0.2);
    for (denominator, expect) in [
        (EsrDenominator::LoadCurrent, 0.2),
        (EsrDenominator::InductorCurrent, 0.2 * 0.6),
    ] {
        let cfg = EstimatorConfig {
            esr_denominator: denominator,
            ..EstimatorConfig::default()
        };
        let est = Estimator::new(12.0).with_config(cfg);
        let f0 = noiseless(&base);
        let cal = est.calibrate(&[f0.clone(), f0], 0.0).unwrap();
        let v = est
            .with_calibration(cal)
            .estimate(&noiseless(&degraded))
            .unwrap()
            .esr_est;
        assert!((v - expect).abs() < 0.05 * expect, "{denominator:?}: {v}");
    }
}

#[test]
fn esr_denominator_must_be_positive() {
    let seg = segment_states(&noiseless(&ConverterParams::design_point())).unwrap();
    let mut m = compute_means(&seg);
    m.full.i_l = 0.0;
    assert!(matches!(
        estimate_esr(&seg, &m, &EstimatorConfig::default()),
        Err(Error::Estimation(_))
    ));
}

#[test]
fn identical_frames_have_zero_variance() {
    let f = noiseless(&at(99e-6, 0.1));
    let frames = vec![f; 20];
    let (_, s) = Estimator::new(12.0).run_batch(&frames).unwrap();
    for p in [s.r_load, s.esr_raw, s.esr, s.c, s.l] {
        assert_eq!(p.variance, 0.0);
    }
    assert_eq!(s.n_acquisitions, 20);
}

#[test]
fn batch_errors() {
    let f = noiseless(&ConverterParams::design_point());
    assert!(matches!(
        Estimator::new(12.0).run_batch(std::slice::from_ref(&f)),
        Err(Error::Batch { .. })
    ));
    let mut bad = f.clone();
    bad.v_mos = vec![1.0; bad.len()];
    match Estimator::new(12.0).run_batch(&[f.clone(), bad.clone(), f, bad]) {
        Err(Error::Batch { indices, .. }) => assert_eq!(indices, vec![1, 3]),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn crafted_dcm_frame_is_rejected() {
    let mut f = noiseless(&ConverterParams::design_point());
    for k in 150..200 {
        f.i_l[k] = 0.0;
    }
    assert!(matches!(
        Estimator::new(12.0).estimate(&f),
        Err(Error::DiscontinuousConduction { .. })
    ));
}

/// Noiseless grid against simulator ground truth; calibration per
/// (duty, C) at zero ESR.
#[test]
fn noiseless_grid_equivalence() {
    for duty in [0.3, 0.4, 0.5] {
        for c in [33e-6, 99e-6, 165e-6] {
            let p0 = ConverterParams { duty, ..at(c, 0.0) };
            let est = Estimator::new(12.0);
            let f0 = noiseless(&p0);
            let est = est
                .clone()
                .with_calibration(est.calibrate(&[f0.clone(), f0], 0.0).unwrap());
            for esr in [0.0, 0.1, 0.2] {
                let p = ConverterParams { esr, ..p0 };
                let e = est.estimate(&noiseless(&p)).unwrap();
                let tag = format!("D={duty} C={c:e} ESR={esr}");
                assert!(
                    (e.r_load_est - 20.0).abs() / 20.0 < 0.005,
                    "{tag} R {}",
                    e.r_load_est
                );
                assert!(
                    (e.l_est - 240e-6).abs() / 240e-6 < 0.01,
                    "{tag} L {}",
                    e.l_est
                );
                assert!((e.c_est - c).abs() / c < 0.02, "{tag} C {}", e.c_est);
                if esr == 0.0 {
                    assert!(e.esr_est.abs() < 1e-12, "{tag} ESR {}", e.esr_est);
                } else {
                    assert!(
                        (e.esr_est - esr).abs() / esr < 0.05,
                        "{tag} ESR {}",
                        e.esr_est
                    );
                }
            }
        }
    }
}

#[test]
fn capacitance_variance_rises_across_bank() {
    let mut last = 0.0;
    for n in 1..=5 {
        let p = at(n as f64 * 33e-6, 0.04);
        let (_, s) = Estimator::new(12.0)
            .run_batch(&noisy_batch(&p, 1000 * n, 20))
            .unwrap();
        assert!(s.c.variance >= last, "C = {} uF", n * 33);
        last = s.c.variance;
    }
}
