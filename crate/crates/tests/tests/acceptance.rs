//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use rand::Rng;
use stair_radar::chirp_sim::{synthesize_frame, NoiseConfig, Scatterer};
use stair_radar::dimension::{correct_coordinates, estimate_initial, StairStandards};
use stair_radar::dsp::*;
use stair_radar::enhancer::{gradient_check, Activation, EnhancerModel, SweepConfig};
use stair_radar::experiment::{run_experiment, ExperimentConfig, ExperimentOutcome};
use stair_radar::numerics::{seeded_rng, Window};
use stair_radar::scene::{corners_of, Point2, StaircaseSpec};
use stair_radar::{derive_attributes, DerivedAttributes, RadarConfig};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn attrs() -> DerivedAttributes {
    derive_attributes(&RadarConfig::default()).unwrap()
}

fn parametrization() -> Verdict {
    let start = Instant::now();
    let a = attrs();
    let elapsed = start.elapsed();
    let ok = (a.range_resolution_m * 100.0 - 4.1638).abs() <= 0.01
        && (a.max_range_m - 5.996).abs() <= 0.01
        && (a.velocity_resolution_mps - 3.804).abs() <= 0.01
        && elapsed < Duration::from_millis(1);
    verdict(
        ok,
        format!(
            "r_res {:.4} cm, r_max {:.4} m, v_res {:.4} m/s in {elapsed:?}",
            a.range_resolution_m * 100.0,
            a.max_range_m,
            a.velocity_resolution_mps
        ),
    )
}

fn dsp_oracle() -> Verdict {
    let cfg = RadarConfig::default();
    let mut rng = seeded_rng(2024);
    let (mut worst, mut mismatches) = (0.0f64, 0);
    for _ in 0..50 {
        let cube = random_cube(&mut rng, &cfg);
        let rd = range_doppler_transform(&cube, Window::Hann, Window::Rectangular).unwrap();
        worst = worst.max(max_rel_err(rd.data(), &naive_range_doppler(&cube, 256, 8)));

        let slice = extract_stationary_slice(&rd);
        for r in (0..slice.range_bins).step_by(37) {
            let ours: Vec<_> = aoa_profile(&slice, r, 64).unwrap();
            let oracle: Vec<f64> = naive_dft(&slice.channel_vector(r), 64)
                .iter()
                .map(|c| c.norm())
                .collect();
            let scale = oracle.iter().cloned().fold(0.0, f64::max);
            let err = ours
                .iter()
                .zip(&oracle)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            worst = worst.max(err / scale);
        }

        let sel = process_frame(&cube, &ProcessingConfig::default()).unwrap();
        let exh = process_frame(
            &cube,
            &ProcessingConfig {
                exhaustive_aoa: true,
                ..Default::default()
            },
        )
        .unwrap();
        mismatches += usize::from(sel != exh);
    }
    verdict(
        worst < 1e-9 && mismatches == 0,
        format!("max relative error {worst:.2e}, selective/exhaustive mismatches {mismatches}/50"),
    )
}

fn cfar_rate() -> Verdict {
    let mut rng = seeded_rng(77);
    let mut details = Vec::new();
    let mut ok = true;
    for (name, cfg) in [
        ("8/2", CfarConfig::range_default()),
        ("4/2", CfarConfig::range_profile_default()),
    ] {
        let (mut cells, mut alarms) = (0usize, 0usize);
        while cells < 200_000 {
            let profile: Vec<f64> = (0..1000)
                .map(|_| -(1.0 - rng.random::<f64>()).ln())
                .collect();
            alarms += cfar_detect(&profile, &cfg).unwrap().len();
            cells += profile.len();
        }
        let rate = alarms as f64 / cells as f64;
        ok &= (5e-4..=2e-3).contains(&rate);
        details.push(format!("{name} rate {rate:.2e} over {cells} cells"));
    }
    verdict(ok, details.join("; "))
}

fn localization() -> Verdict {
    let cfg = RadarConfig::default();
    let a = attrs();
    let mut rng = seeded_rng(4);
    let mut hits = 0;
    for _ in 0..20 {
        let r = rng.random_range(0.3..5.5);
        let theta = rng.random_range(-1.0..1.0);
        let cube = synthesize_frame(
            &cfg,
            &level_frame(),
            &[stationary_at(r, theta)],
            &NoiseConfig::Noiseless,
            0,
        )
        .unwrap();
        let list = process_frame(&cube, &ProcessingConfig::default()).unwrap();
        let found = list.entries.iter().any(|e| {
            (e.range_m - r).abs() <= a.range_resolution_m / 2.0
                && e.angles_rad
                    .iter()
                    .any(|t| (t - theta).abs() <= a.angular_resolution_rad / 2.0)
        });
        hits += usize::from(found);
    }
    verdict(hits >= 19, format!("{hits}/20 corners localized"))
}

fn geometry() -> Verdict {
    let mut rng = seeded_rng(55);
    let mut worst_dim = 0.0f64;
    let mut missing = 0;
    for (d, h) in SweepConfig::default().combinations() {
        let spec = StaircaseSpec {
            depth_m: d,
            height_m: h,
            step_count: 4,
            foot_x_m: rng.random_range(0.5..3.0),
        };
        let h_r = rng.random_range(0.3..0.5);
        let gamma = rng.random_range(-0.5..0.2);
        let entries = corners_of(&spec)
            .unwrap()
            .points()
            .iter()
            .map(|c| {
                let (dx, dy) = (c.x, c.y - h_r);
                TargetEntry {
                    range_m: dx.hypot(dy),
                    angles_rad: vec![dy.atan2(dx) - gamma],
                    magnitude: 1.0,
                }
            })
            .collect();
        let list = TargetList {
            timestamp_s: 0.0,
            inclination_rad: gamma,
            entries,
        };
        match estimate_initial(&list, gamma, &StairStandards::default()) {
            Some(e) => worst_dim = worst_dim.max((e.depth_m - d).abs().max((e.height_m - h).abs())),
            None => missing += 1,
        }
    }

    // distances between corrected points equal distances between the raw
    // polar detections, and ranges are kept
    let mut worst_iso = 0.0f64;
    for _ in 0..10_000 {
        let gamma = rng.random_range(-1.0..1.0);
        let (r1, t1) = (rng.random_range(0.1..6.0), rng.random_range(-1.5..1.5));
        let (r2, t2) = (rng.random_range(0.1..6.0), rng.random_range(-1.5..1.5));
        let list = TargetList {
            timestamp_s: 0.0,
            inclination_rad: gamma,
            entries: vec![
                TargetEntry {
                    range_m: r1,
                    angles_rad: vec![t1],
                    magnitude: 1.0,
                },
                TargetEntry {
                    range_m: r2,
                    angles_rad: vec![t2],
                    magnitude: 1.0,
                },
            ],
        };
        let c = correct_coordinates(&list, gamma);
        let raw = (Point2::new(r1 * t1.cos(), r1 * t1.sin()))
            .distance(&Point2::new(r2 * t2.cos(), r2 * t2.sin()));
        let moved = Point2::new(c[0].x_m, c[0].y_m).distance(&Point2::new(c[1].x_m, c[1].y_m));
        worst_iso = worst_iso.max((moved - raw).abs() / raw.max(1e-12));
        worst_iso = worst_iso.max((c[0].x_m.hypot(c[0].y_m) - r1).abs() / r1);
    }
    verdict(
        missing == 0 && worst_dim <= 1e-6 && worst_iso <= 1e-9,
        format!(
            "35 combinations: {missing} missed, worst error {worst_dim:.1e} m; isometry worst relative {worst_iso:.1e}"
        ),
    )
}

fn stationarity() -> Verdict {
    let cfg = RadarConfig::default();
    let a = attrs();
    let mut rng = seeded_rng(66);
    let mut good = 0;
    for trial in 0..100u64 {
        let (r_c, t_c) = (rng.random_range(0.5..2.5), rng.random_range(-0.8..0.8));
        let (r_m, t_m) = (rng.random_range(3.0..5.5), rng.random_range(-0.8..0.8));
        let k = rng.random_range(1..=3) as f64;
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        let mover = Scatterer {
            radial_velocity_mps: sign * k * a.velocity_resolution_mps,
            ..stationary_at(r_m, t_m)
        };
        let cube = synthesize_frame(
            &cfg,
            &level_frame(),
            &[stationary_at(r_c, t_c), mover],
            &NoiseConfig::default(),
            trial,
        )
        .unwrap();
        let list = process_frame(&cube, &ProcessingConfig::default()).unwrap();
        let has_corner = list.entries.iter().any(|e| {
            (e.range_m - r_c).abs() <= a.range_resolution_m
                && e.angles_rad
                    .iter()
                    .any(|t| (t - t_c).abs() <= a.angular_resolution_rad)
        });
        let has_mover = list
            .entries
            .iter()
            .any(|e| (e.range_m - r_m).abs() <= 2.0 * a.range_resolution_m);
        good += usize::from(has_corner && !has_mover);
    }
    verdict(
        good >= 95,
        format!("{good}/100 trials keep the corner and drop the mover"),
    )
}

fn gradients() -> Verdict {
    let mut rng = seeded_rng(7);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let model = EnhancerModel::random(&[6, 16, 8, 2], Activation::Relu, rng.random());
        let x: [f64; 6] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let y = [rng.random_range(0.2..0.4), rng.random_range(0.1..0.2)];
        worst = worst.max(gradient_check(&model, &x, &y));
    }
    verdict(
        worst < 1e-5,
        format!("worst relative error {worst:.2e} over 100 draws"),
    )
}

fn end_to_end(out: &ExperimentOutcome, elapsed: Duration) -> Verdict {
    let r = &out.report;
    let imp = &out.improvement;
    let (ini, enh) = (&r.initial, &r.enhanced);
    let a = enh.depth.mae_cm < ini.depth.mae_cm && enh.height.mae_cm < ini.height.mae_cm;
    let b = imp.overall_mae.is_some_and(|v| v >= 0.5);
    let c = enh.depth.mae_cm <= 1.5 && enh.height.mae_cm <= 2.0;
    let d = r.max_consistency_residual() <= 1e-9;
    let flag = |ok: bool| if ok { "ok" } else { "fail" };
    verdict(
        a && b && c && d,
        format!(
            "{} train / {} test frames in {:.0?}; MAE depth {:.3} -> {:.3} cm, height {:.3} -> {:.3} cm; \
             improvement {:.1}%; (a) {} (b) {} (c) {} (d) {}",
            out.train_set.len(),
            out.test_set.len(),
            elapsed,
            ini.depth.mae_cm,
            enh.depth.mae_cm,
            ini.height.mae_cm,
            enh.height.mae_cm,
            imp.overall_mae.unwrap_or(f64::NAN) * 100.0,
            flag(a),
            flag(b),
            flag(c),
            flag(d),
        ),
    )
}

fn reproducibility(first: &ExperimentOutcome, cfg: &ExperimentConfig) -> Verdict {
    let second = run_experiment(cfg).unwrap();
    let same_model =
        first.training.model.to_json().unwrap() == second.training.model.to_json().unwrap();
    let same_report = first.report.to_json().unwrap() == second.report.to_json().unwrap();
    verdict(
        same_model && same_report,
        format!("model identical: {same_model}, report identical: {same_report}"),
    )
}

fn main() -> ExitCode {
    let mut verdicts: Vec<(usize, &str, Verdict)> = Vec::new();
    let mut record = |n: usize, name: &'static str, v: Verdict| {
        println!(
            "criterion {n} ({name}): {} | {}",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
        verdicts.push((n, name, v));
    };

    record(1, "parametrization", parametrization());
    record(2, "dsp oracle", dsp_oracle());
    record(3, "cfar false alarms", cfar_rate());
    record(4, "localization", localization());
    record(5, "geometry", geometry());
    record(6, "stationarity filter", stationarity());
    record(7, "gradients", gradients());

    let cfg = ExperimentConfig::default();
    let start = Instant::now();
    let outcome = run_experiment(&cfg).expect("default experiment runs");
    let elapsed = start.elapsed();
    record(8, "end-to-end", end_to_end(&outcome, elapsed));
    record(9, "reproducibility", reproducibility(&outcome, &cfg));

    let failed: Vec<usize> = verdicts.iter().filter(|v| !v.2.pass).map(|v| v.0).collect();
    if failed.is_empty() {
        println!("acceptance: all criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failing criteria {failed:?}");
        ExitCode::FAILURE
    }
}
