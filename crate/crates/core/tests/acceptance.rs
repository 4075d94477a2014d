//! Acceptance gate. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails. Tolerances are fixed constants below.

use std::f64::consts::TAU;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use swi_core::eval::scenes::{feature_mask, feature_scene, flat_scene, subsurface_scene};
use swi_core::eval::{
    calibrate_synthetic_wavelength, depth_tracking_experiment, scan_comparison, scanning_equivalent_factor,
    wrapped_rmse, TrackingProtocol,
};
use swi_core::filter::{gaussian_filter, joint_bilateral, joint_bilateral_upsample, subsample, FilterSpec};
use swi_core::forward::{acquire_stack, envelope_squared, path_correlation, AcquisitionSettings};
use swi_core::optics::wrap_signed;
use swi_core::retrieve::{envelope_estimate, interference_free, phase_from_envelopes, reconstruct};
use swi_core::{derive_synthetic, DepthMap, Image, OpticalConfig, ShiftSchedule};

const ROUND_TRIP_REL: f64 = 1e-6;
const ROUND_TRIP_BUDGET: Duration = Duration::from_secs(10);
const ESTIMATOR_REL: f64 = 1e-12;
const PHASE_TOL: f64 = 1e-9;
const CORRELATION_TOL: f64 = 1e-9;
const TREND_BUDGET: Duration = Duration::from_secs(120);
const TREND_SEEDS: u64 = 10;
const KERNEL_WIDTHS: [f64; 4] = [7.0, 15.0, 21.0, 30.0];
const PIXEL_PITCH: f64 = 3.7;
const TRACK_NOISE: f64 = 0.05;
const SWEPT_REJECTION: f64 = 0.1;
const SWEPT_REALIZATIONS: usize = 16;
const SCAN_FACTOR: usize = 35;
const CAL_NOISELESS_REL: f64 = 1e-3;
const CAL_NOISY_REL: f64 = 1e-2;
const CAL_NOISE: f64 = 0.01;
const CAL_SEEDS: u64 = 100;
const AMBIENT_SBR: f64 = 0.1;
const AMBIENT_MAX_RATIO: f64 = 2.0;
const MACRO_LAMBDA_S: f64 = 16_000.0;
const MACRO_RATIO_RANGE: (f64, f64) = (0.5, 2.0);
const FILTER_TOL: f64 = 1e-9;

type Outcome = Result<String, String>;

fn micro() -> OpticalConfig {
    derive_synthetic(780.0, 781.0).unwrap()
}

fn macroscopic() -> OpticalConfig {
    OpticalConfig::for_synthetic_wavelength(780.0, MACRO_LAMBDA_S).unwrap()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Max wrapped error over 20 flat scenes at random depths for each schedule.
fn round_trip(config: &OpticalConfig, seed: u64) -> (f64, Duration) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let range = config.unambiguous_range();
    let mut worst: f64 = 0.0;
    for (m, n) in [(3, 3), (4, 4), (5, 5)] {
        let schedule = ShiftSchedule::new(config, m, n, 0.0).unwrap();
        for _ in 0..20 {
            let d = rng.random_range(0.0..range);
            let scene = flat_scene(128, 128, d, 0.8);
            let stack = acquire_stack(&scene, &schedule, &AcquisitionSettings::default(), config).unwrap();
            let est = reconstruct(&stack, &FilterSpec::none(), None).unwrap();
            assert_eq!(est.valid_count(), 128 * 128, "pixels masked at d = {d}");
            for &e in &est.depth {
                worst = worst.max(wrap_signed(e - d, range).abs());
            }
        }
    }
    (worst, start.elapsed())
}

fn criterion_1() -> Outcome {
    let c = micro();
    let (worst, t) = round_trip(&c, 1);
    let tol = ROUND_TRIP_REL * c.lambda_s;
    check(
        worst < tol && t < ROUND_TRIP_BUDGET,
        format!("max error {worst:.3e} um (limit {tol:.3e}), {:.2} s", t.as_secs_f64()),
    )
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for m in 3..=8 {
        for _ in 0..100 {
            let theta = rng.random_range(0.0..TAU);
            let b = rng.random_range(0.5..5.0);
            let a = rng.random_range(0.1..2.0);
            let frames: Vec<Image> = (0..m)
                .map(|i| Image::filled(2, 2, b + a * (TAU * i as f64 / m as f64 + theta).sin()))
                .collect();
            let bi = interference_free(&frames).unwrap();
            let e = envelope_estimate(&frames, &bi).unwrap();
            // Σ sin² = M/2, so (1/2M)·Σ (a sin)² = a²/4
            let want_e = a * a / 4.0;
            for (&bv, &ev) in bi.data.iter().zip(&e.data) {
                worst = worst.max(((bv - b) / b).abs()).max(((ev - want_e) / want_e).abs());
            }
        }
    }
    check(worst <= ESTIMATOR_REL, format!("max relative error {worst:.3e} over M = 3..8"))
}

fn criterion_3() -> Outcome {
    let c = micro();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let phis: Vec<f64> = (0..1000).map(|_| rng.random_range(0.0..TAU)).collect();
    let l0 = 12.5;
    let mut worst: f64 = 0.0;
    for n in [3, 4, 5, 8] {
        let envelopes: Vec<Image> = (0..n)
            .map(|i| {
                let l = l0 + i as f64 * c.lambda_s / (2.0 * n as f64);
                let data = phis.iter().map(|phi| envelope_squared(l0 + phi / (2.0 * c.k_s), l, &c)).collect();
                Image::new(phis.len(), 1, data).unwrap()
            })
            .collect();
        let p = phase_from_envelopes(&envelopes, 0.0).unwrap();
        for ((est, ok), phi) in p.phase.iter().zip(&p.mask).zip(&phis) {
            assert!(*ok);
            worst = worst.max(wrap_signed(est - phi, TAU).abs());
        }
    }
    check(worst < PHASE_TOL, format!("max phase error {worst:.3e} rad, N in {{3,4,5,8}}"))
}

fn criterion_4() -> Outcome {
    let c = micro();
    let mut worst: f64 = 0.0;
    for i in 0..10_000 {
        let x = -c.lambda_s + 2.0 * c.lambda_s * i as f64 / 9_999.0;
        let l = 3.0;
        let got = path_correlation(l + x, l, &c).norm();
        worst = worst.max((got - 2.0 * (c.k_s * x).cos().abs()).abs());
    }
    let null = path_correlation(c.lambda_s / 4.0, 0.0, &c).norm();
    check(
        worst < CORRELATION_TOL && null < CORRELATION_TOL,
        format!("max |c| deviation {worst:.3e}, |c(lambda_s/4)| = {null:.3e}"),
    )
}

struct TrendMedians {
    swept: Vec<f64>,
    coherent: Vec<f64>,
}

/// Median tracking RMSE per kernel width over `TREND_SEEDS` seeds.
fn tracking_medians(config: &OpticalConfig, size: usize, offsets: Vec<f64>) -> TrendMedians {
    let mut swept = vec![Vec::new(); KERNEL_WIDTHS.len()];
    let mut coherent = vec![Vec::new(); KERNEL_WIDTHS.len()];
    for seed in 0..TREND_SEEDS {
        let scene = subsurface_scene(size, size, config, seed);
        let base = AcquisitionSettings {
            noise_sigma: TRACK_NOISE,
            seed,
            ..AcquisitionSettings::default()
        };
        let protocol = TrackingProtocol {
            config: *config,
            m: 4,
            n: 4,
            l0: 0.0,
            offsets: offsets.clone(),
            swept: AcquisitionSettings {
                indirect_rejection: SWEPT_REJECTION,
                speckle_realizations: SWEPT_REALIZATIONS,
                ..base
            },
            coherent: AcquisitionSettings {
                mode: swi_core::IlluminationMode::FullFieldCoherent,
                indirect_rejection: 1.0,
                ..base
            },
            kernel_widths: KERNEL_WIDTHS.to_vec(),
            pixel_pitch: PIXEL_PITCH,
        };
        let report = depth_tracking_experiment(&scene, &protocol).unwrap();
        for (i, r) in report.rows.iter().enumerate() {
            swept[i].push(r.rmse_swept);
            coherent[i].push(r.rmse_coherent);
        }
    }
    TrendMedians {
        swept: swept.into_iter().map(median).collect(),
        coherent: coherent.into_iter().map(median).collect(),
    }
}

fn trend_holds(t: &TrendMedians) -> bool {
    let monotone = t.swept.windows(2).all(|w| w[1] <= w[0]);
    let ordered = t.swept.iter().zip(&t.coherent).all(|(s, c)| s < c);
    monotone && ordered
}

fn fmt(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join("/")
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let t = tracking_medians(&micro(), 256, (0..5).map(f64::from).collect());
    let elapsed = start.elapsed();
    check(
        trend_holds(&t) && elapsed < TREND_BUDGET,
        format!(
            "median RMSE um at widths 7/15/21/30: swept {} coherent {}, {:.1} s",
            fmt(&t.swept),
            fmt(&t.coherent),
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_6() -> Outcome {
    let factor = scanning_equivalent_factor(30000.0, 16, 1.0, 1600).unwrap();
    let c = micro();
    let scene = feature_scene(256, 256, &c);
    let schedule = ShiftSchedule::new(&c, 4, 4, 0.0).unwrap();
    let settings = AcquisitionSettings {
        noise_sigma: TRACK_NOISE,
        speckle_realizations: SWEPT_REALIZATIONS,
        seed: 6,
        ..AcquisitionSettings::default()
    };
    let stack = acquire_stack(&scene, &schedule, &settings, &c).unwrap();
    let full = reconstruct(&stack, &FilterSpec::none(), None).unwrap();
    let spec = FilterSpec::joint_bilateral(PIXEL_PITCH, 0.1, PIXEL_PITCH);
    let region = feature_mask(256, 256);
    let cmp = scan_comparison(&full, &scene.depth, &scene.guide, SCAN_FACTOR, &spec, &c, Some(&region)).unwrap();
    check(
        factor == 35 && cmp.rmse_scanned > cmp.rmse_full,
        format!(
            "factor {factor} (expected 35; 1600/floor(sqrt(1875)) = 1600/43 rounds to 37); feature RMSE full {:.3} um vs scanned x{SCAN_FACTOR} {:.3} um",
            cmp.rmse_full, cmp.rmse_scanned
        ),
    )
}

fn sweep(c: &OpticalConfig, noise: f64, seed: u64) -> Vec<(f64, f64)> {
    let normal = Normal::new(0.0, noise).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = 0.3 * c.lambda_s;
    (0..400)
        .map(|i| {
            let l = 2.0 * c.lambda_s * i as f64 / 399.0;
            (l, envelope_squared(d, l, c) + normal.sample(&mut rng))
        })
        .collect()
}

fn criterion_7() -> Outcome {
    let c = micro();
    let noiseless = calibrate_synthetic_wavelength(&sweep(&c, 0.0, 0), c.lambda_s).unwrap();
    let rel0 = ((noiseless - c.lambda_s) / c.lambda_s).abs();
    let noisy: Vec<f64> = (0..CAL_SEEDS)
        .map(|s| {
            let est = calibrate_synthetic_wavelength(&sweep(&c, CAL_NOISE, s), c.lambda_s).unwrap();
            ((est - c.lambda_s) / c.lambda_s).abs()
        })
        .collect();
    let rel1 = median(noisy);
    check(
        rel0 < CAL_NOISELESS_REL && rel1 < CAL_NOISY_REL,
        format!("noiseless relative error {rel0:.2e}, 1% noise median relative error {rel1:.2e}"),
    )
}

fn criterion_8() -> Outcome {
    let c = micro();
    let schedule = ShiftSchedule::new(&c, 4, 4, 0.0).unwrap();
    let filter = FilterSpec::gaussian_width(15.0, PIXEL_PITCH);
    let run = |sbr: Option<f64>| -> f64 {
        median(
            (0..TREND_SEEDS)
                .map(|seed| {
                    let scene = subsurface_scene(128, 128, &c, seed);
                    let settings = AcquisitionSettings {
                        sbr,
                        noise_sigma: TRACK_NOISE,
                        seed,
                        ..AcquisitionSettings::swept(SWEPT_REJECTION, SWEPT_REALIZATIONS)
                    };
                    let stack = acquire_stack(&scene, &schedule, &settings, &c).unwrap();
                    let est = reconstruct(&stack, &filter, None).unwrap();
                    wrapped_rmse(&est, &scene.depth, &c).unwrap()
                })
                .collect(),
        )
    };
    let clean = run(None);
    let ambient = run(Some(AMBIENT_SBR));
    let ratio = ambient / clean;
    check(
        ratio < AMBIENT_MAX_RATIO,
        format!("median RMSE {clean:.3} um without ambient, {ambient:.3} um at SBR 0.1, ratio {ratio:.3}"),
    )
}

fn criterion_9() -> Outcome {
    let (mc, uc) = (macroscopic(), micro());
    let (worst, _) = round_trip(&mc, 9);
    let tol = ROUND_TRIP_REL * mc.lambda_s;
    let scale = mc.lambda_s / uc.lambda_s;
    let offsets: Vec<f64> = (0..5).map(f64::from).collect();
    let small = tracking_medians(&uc, 128, offsets.clone());
    let large = tracking_medians(&mc, 128, offsets.iter().map(|o| o * scale).collect());
    let ratios: Vec<f64> = large
        .swept
        .iter()
        .chain(&large.coherent)
        .zip(small.swept.iter().chain(&small.coherent))
        .map(|(l, s)| (l / mc.lambda_s) / (s / uc.lambda_s))
        .collect();
    let in_range = ratios.iter().all(|r| (MACRO_RATIO_RANGE.0..=MACRO_RATIO_RANGE.1).contains(r));
    check(
        worst < tol && trend_holds(&large) && in_range,
        format!(
            "round-trip max error {worst:.3e} um (limit {tol:.3e}); macro median RMSE um swept {} coherent {}; normalized macro/micro ratios {}",
            fmt(&large.swept),
            fmt(&large.coherent),
            fmt(&ratios)
        ),
    )
}

fn criterion_10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let img = Image::from_fn(48, 40, |_, _| rng.random_range(0.0..1.0));
    let guide = Image::filled(48, 40, 0.4);
    let mut worst_const_guide: f64 = 0.0;
    let mut worst_factor1: f64 = 0.0;
    let mut worst_constant: f64 = 0.0;
    let varied_guide = Image::from_fn(48, 40, |x, y| ((x * 7 + y * 3) % 11) as f64 / 10.0);
    let depth = DepthMap::new(48, 40, img.data.clone()).unwrap();
    let constant = Image::filled(48, 40, 2.5);
    let const_depth = DepthMap::filled(48, 40, 2.5);
    for sigma in [0.5, 1.0, 2.0, 4.5] {
        let g = gaussian_filter(&img, sigma);
        let jb = joint_bilateral(&img, &guide, sigma, 0.1).unwrap();
        for (a, b) in g.data.iter().zip(&jb.data) {
            worst_const_guide = worst_const_guide.max((a - b).abs());
        }
        let up = joint_bilateral_upsample(&subsample(&depth, 1).unwrap(), &varied_guide, 1, sigma, 0.2).unwrap();
        let jb = joint_bilateral(&img, &varied_guide, sigma, 0.2).unwrap();
        for (a, b) in up.depth.iter().zip(&jb.data) {
            worst_factor1 = worst_factor1.max((a - b).abs());
        }
        let outputs = [
            gaussian_filter(&constant, sigma),
            joint_bilateral(&constant, &varied_guide, sigma, 0.2).unwrap(),
        ];
        for o in &outputs {
            for v in &o.data {
                worst_constant = worst_constant.max((v - 2.5).abs());
            }
        }
        for factor in [1, 3, 8] {
            let up = joint_bilateral_upsample(&subsample(&const_depth, factor).unwrap(), &varied_guide, factor, sigma, 0.2)
                .unwrap();
            for v in &up.depth {
                worst_constant = worst_constant.max((v - 2.5).abs());
            }
        }
    }
    check(
        worst_const_guide <= FILTER_TOL && worst_factor1 <= FILTER_TOL && worst_constant <= FILTER_TOL,
        format!(
            "constant guide {worst_const_guide:.2e}, factor-1 upsample {worst_factor1:.2e}, constant input {worst_constant:.2e}"
        ),
    )
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 10] = [
        ("round-trip exactness", criterion_1),
        ("estimator closed forms", criterion_2),
        ("phase retrieval oracle", criterion_3),
        ("correlation structure", criterion_4),
        ("accuracy table trend", criterion_5),
        ("scanning equivalence", criterion_6),
        ("calibration", criterion_7),
        ("ambient robustness", criterion_8),
        ("macroscopic mode", criterion_9),
        ("filter properties", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} {name}: PASS ({detail}) [{secs:.1} s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} {name}: FAIL ({detail}) [{secs:.1} s]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
