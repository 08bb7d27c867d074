mod common;

use common::*;
use num_complex::Complex64;
use rand::Rng;
use stair_radar::chirp_sim::{synthesize_frame, ChirpCube, FrameMeta, NoiseConfig, Scatterer};
use stair_radar::dsp::*;
use stair_radar::numerics::{seeded_rng, Window};
use stair_radar::rf_params::{derive_attributes, RadarConfig};

fn rd(cube: &ChirpCube) -> RangeDopplerCube {
    range_doppler_transform(cube, Window::Hann, Window::Rectangular).unwrap()
}

fn synth(cfg: &RadarConfig, scatterers: &[Scatterer], noise: NoiseConfig, seed: u64) -> ChirpCube {
    synthesize_frame(cfg, &level_frame(), scatterers, &noise, seed).unwrap()
}

fn argmax_range_doppler(rd: &RangeDopplerCube, a: usize) -> (usize, usize) {
    let mut best = (0, 0, -1.0);
    for r in 0..rd.range_bins {
        for p in 0..rd.doppler_bins {
            let m = rd.get(r, p, a).norm();
            if m > best.2 {
                best = (r, p, m);
            }
        }
    }
    (best.0, best.1)
}

#[test]
fn range_doppler_matches_naive_dft() {
    let cfg = RadarConfig::default();
    let mut rng = seeded_rng(21);
    for _ in 0..5 {
        let cube = random_cube(&mut rng, &cfg);
        let ours = rd(&cube);
        assert_eq!(
            (ours.range_bins, ours.doppler_bins, ours.channels),
            (256, 8, 8)
        );
        let err = max_rel_err(ours.data(), &naive_range_doppler(&cube, 256, 8));
        assert!(err < 1e-9, "{err}");
    }
}

#[test]
fn all_zero_cube_gives_all_zero_output() {
    let cube = ChirpCube::zeros(RadarConfig::default(), FrameMeta::default());
    let out = rd(&cube);
    assert!(out.data().iter().all(|c| c.norm() == 0.0));
    let slice = extract_stationary_slice(&out);
    assert!(accumulate_range_profile(&slice).iter().all(|&v| v == 0.0));
}

#[test]
fn scatterer_at_fifty_cells_peaks_at_bin_fifty_without_padding() {
    // 128 samples per chirp needs no padding, so bins are exactly r_res apart
    let cfg = RadarConfig {
        samples_per_chirp: 128,
        ..RadarConfig::default()
    };
    let r_res = derive_attributes(&cfg).unwrap().range_resolution_m;
    let out = rd(&synth(
        &cfg,
        &[stationary_at(50.0 * r_res, 0.0)],
        NoiseConfig::Noiseless,
        0,
    ));
    for a in 0..8 {
        assert_eq!(argmax_range_doppler(&out, a), (50, 0));
    }
}

#[test]
fn padded_range_axis_scales_bins() {
    let cfg = RadarConfig::default();
    let r_res = derive_attributes(&cfg).unwrap().range_resolution_m;
    let out = rd(&synth(
        &cfg,
        &[stationary_at(50.0 * r_res, 0.0)],
        NoiseConfig::Noiseless,
        0,
    ));
    assert!((out.range_bin_m - r_res * 144.0 / 256.0).abs() < 1e-15);
    // 50 * 256 / 144 = 88.9
    for a in 0..8 {
        assert_eq!(argmax_range_doppler(&out, a), (89, 0));
    }
}

#[test]
fn one_velocity_cell_moves_to_doppler_bin_one() {
    let cfg = RadarConfig::default();
    let v_res = derive_attributes(&cfg).unwrap().velocity_resolution_mps;
    let mover = Scatterer {
        radial_velocity_mps: v_res,
        ..stationary_at(2.0, 0.1)
    };
    let out = rd(&synth(&cfg, &[mover], NoiseConfig::Noiseless, 0));
    let (r, p) = argmax_range_doppler(&out, 0);
    assert_eq!(p, 1);
    let peak = out.get(r, 1, 0).norm();
    assert!(out.get(r, 0, 0).norm() < 1e-9 * peak);
    assert!((out.bin_velocity(1) - v_res).abs() < 1e-12);
    assert!((out.bin_velocity(7) + v_res).abs() < 1e-12);
}

#[test]
fn fast_mover_leaves_the_stationary_slice() {
    let cfg = RadarConfig::default();
    let v_res = derive_attributes(&cfg).unwrap().velocity_resolution_mps;
    let mover = Scatterer {
        radial_velocity_mps: 2.0 * v_res,
        ..stationary_at(1.5, -0.2)
    };
    let out = rd(&synth(&cfg, &[mover], NoiseConfig::Noiseless, 0));
    let peak = out.data().iter().map(|c| c.norm()).fold(0.0, f64::max);
    let slice = extract_stationary_slice(&out);
    let residue = accumulate_range_profile(&slice)
        .into_iter()
        .fold(0.0, f64::max);
    assert!(residue < 1e-9 * peak, "{residue} vs {peak}");
}

#[test]
fn stationary_corner_stands_above_the_noise_floor() {
    let cfg = RadarConfig::default();
    let cube = synth(&cfg, &[stationary_at(2.0, 0.0)], NoiseConfig::default(), 4);
    let out = rd(&cube);
    let slice = extract_stationary_slice(&out);
    let bin = (2.0 / slice.range_bin_m).round() as usize;
    let mut floor: Vec<f64> = (0..slice.range_bins)
        .filter(|r| r.abs_diff(bin) > 10)
        .flat_map(|r| (0..8).map(move |a| (r, a)))
        .map(|(r, a)| slice.get(r, a).norm())
        .collect();
    floor.sort_by(f64::total_cmp);
    let median_floor = floor[floor.len() / 2];
    for a in 0..8 {
        assert!(slice.get(bin, a).norm() > 10.0 * median_floor);
    }
}

#[test]
fn accumulation_is_a_plain_sum_of_magnitudes() {
    let mut rng = seeded_rng(3);
    let data = random_complex(&mut rng, 256 * 8);
    let slice =
        StationarySlice::from_data(256, 8, 0.02, FrameMeta::default(), data.clone()).unwrap();
    let profile = accumulate_range_profile(&slice);
    for r in 0..256 {
        let direct: f64 = (0..8).map(|a| data[r + 256 * a].norm()).sum();
        assert!((profile[r] - direct).abs() <= 1e-12 * direct);
    }
    let same = StationarySlice::from_data(
        4,
        8,
        0.02,
        FrameMeta::default(),
        vec![Complex64::new(0.0, 2.0); 32],
    )
    .unwrap();
    assert!(accumulate_range_profile(&same)
        .iter()
        .all(|&v| (v - 16.0).abs() < 1e-12));
}

#[test]
fn aoa_spectrum_matches_naive_dft() {
    let mut rng = seeded_rng(8);
    let data = random_complex(&mut rng, 256 * 8);
    let slice = StationarySlice::from_data(256, 8, 0.02, FrameMeta::default(), data).unwrap();
    for r in [0, 17, 200] {
        let ours = aoa_profile(&slice, r, 64).unwrap();
        let oracle: Vec<f64> = naive_dft(&slice.channel_vector(r), 64)
            .iter()
            .map(|c| c.norm())
            .collect();
        for (a, b) in ours.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-9 * b.max(1.0));
        }
    }
}

fn single_target_angles(theta: f64) -> Vec<TargetEntry> {
    let cfg = RadarConfig::default();
    let cube = synth(
        &cfg,
        &[stationary_at(2.0, theta)],
        NoiseConfig::Noiseless,
        0,
    );
    process_frame(&cube, &ProcessingConfig::default())
        .unwrap()
        .entries
}

#[test]
fn boresight_and_oblique_angles_are_recovered() {
    let alpha = derive_attributes(&RadarConfig::default())
        .unwrap()
        .angular_resolution_rad;
    for theta in [0.0f64, (-20f64).to_radians()] {
        let entries = single_target_angles(theta);
        assert_eq!(entries.len(), 1, "theta {theta}: {entries:?}");
        assert_eq!(entries[0].angles_rad.len(), 1);
        assert!((entries[0].angles_rad[0] - theta).abs() < alpha / 2.0);
    }
}

#[test]
fn two_targets_two_resolution_cells_apart_are_separated() {
    let cfg = RadarConfig::default();
    let alpha = derive_attributes(&cfg).unwrap().angular_resolution_rad;
    let scene = [stationary_at(2.0, -alpha), stationary_at(2.0, alpha)];
    let cube = synth(&cfg, &scene, NoiseConfig::Noiseless, 0);
    let list = process_frame(&cube, &ProcessingConfig::default()).unwrap();
    let best = list
        .entries
        .iter()
        .max_by(|a, b| a.magnitude.total_cmp(&b.magnitude))
        .unwrap();
    assert_eq!(best.angles_rad.len(), 2, "{list:?}");
    assert!((best.angles_rad[0] + alpha).abs() < alpha / 2.0);
    assert!((best.angles_rad[1] - alpha).abs() < alpha / 2.0);
}

#[test]
fn three_corner_scene_is_localized() {
    let cfg = RadarConfig::default();
    let attrs = derive_attributes(&cfg).unwrap();
    // radar 0.45 m above the floor, level, 2 m from the first riser
    let corners = [(2.0, 0.15), (2.3, 0.30), (2.6, 0.45)];
    let frame = stair_radar::scene::GaitFrame {
        radar_origin: stair_radar::scene::Point2::new(0.0, 0.45),
        ..level_frame()
    };
    let scene: Vec<Scatterer> = corners
        .iter()
        .map(|&(x, y)| Scatterer::stationary(stair_radar::scene::Point2::new(x, y), 1.0))
        .collect();
    let cube = synthesize_frame(&cfg, &frame, &scene, &NoiseConfig::Noiseless, 0).unwrap();
    let list = process_frame(&cube, &ProcessingConfig::default()).unwrap();
    list.check(attrs.max_range_m).unwrap();
    let matched = corners
        .iter()
        .filter(|&&(x, y)| {
            let (r, t) = ((x).hypot(y - 0.45), (y - 0.45f64).atan2(x));
            list.entries.iter().any(|e| {
                (e.range_m - r).abs() < attrs.range_resolution_m
                    && e.angles_rad
                        .iter()
                        .any(|a| (a - t).abs() < attrs.angular_resolution_rad)
            })
        })
        .count();
    assert!(matched >= 2, "{list:?}");
}

#[test]
fn noise_only_frames_rarely_detect() {
    let cfg = RadarConfig::default();
    let pcfg = ProcessingConfig::default();
    let mut total = 0;
    for seed in 0..100 {
        let cube = synth(&cfg, &[], NoiseConfig::FixedPower { power: 1.0 }, seed);
        total += process_frame(&cube, &pcfg).unwrap().detection_count();
    }
    let mean = total as f64 / 100.0;
    assert!(mean <= 2.0 * 1e-3 * 144.0, "{mean}");
}

#[test]
fn moving_only_scene_gives_empty_list() {
    let cfg = RadarConfig::default();
    let v_res = derive_attributes(&cfg).unwrap().velocity_resolution_mps;
    for seed in 0..20 {
        let mover = Scatterer {
            radial_velocity_mps: -2.0 * v_res,
            ..stationary_at(2.5, 0.3)
        };
        let cube = synth(&cfg, &[mover], NoiseConfig::default(), seed);
        let list = process_frame(&cube, &ProcessingConfig::default()).unwrap();
        assert!(list.is_empty(), "seed {seed}: {list:?}");
    }
}

#[test]
fn selective_and_exhaustive_aoa_agree() {
    let cfg = RadarConfig::default();
    let mut rng = seeded_rng(77);
    for _ in 0..10 {
        let scene: Vec<Scatterer> = (0..4)
            .map(|_| stationary_at(rng.random_range(0.3..5.5), rng.random_range(-1.2..1.2)))
            .collect();
        let cube = synth(&cfg, &scene, NoiseConfig::default(), rng.random());
        let sel = process_frame(&cube, &ProcessingConfig::default()).unwrap();
        let exh = process_frame(
            &cube,
            &ProcessingConfig {
                exhaustive_aoa: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(sel, exh);
    }
}

#[test]
fn empty_range_selection_is_an_empty_list() {
    let slice = StationarySlice::from_data(
        256,
        8,
        0.02,
        FrameMeta::default(),
        vec![Complex64::new(1.0, 0.0); 2048],
    )
    .unwrap();
    let list = aoa_on_targets(&slice, &[], &AoaConfig::from(&ProcessingConfig::default())).unwrap();
    assert!(list.is_empty());
}

#[test]
fn ca_cfar_false_alarm_rate_on_exponential_noise() {
    let mut rng = seeded_rng(1234);
    let cfg = CfarConfig::range_default();
    let (mut cells, mut alarms) = (0usize, 0usize);
    for _ in 0..200 {
        let profile: Vec<f64> = (0..1000)
            .map(|_| -(1.0 - rng.random::<f64>()).ln())
            .collect();
        alarms += cfar_detect(&profile, &cfg).unwrap().len();
        cells += profile.len();
    }
    let rate = alarms as f64 / cells as f64;
    assert!((5e-4..=2e-3).contains(&rate), "{rate}");
}

#[test]
fn peak_interpolation_refines_off_grid_ranges() {
    let cfg = RadarConfig::default();
    let r_true = 2.0123;
    let cube = synth(
        &cfg,
        &[stationary_at(r_true, 0.05)],
        NoiseConfig::Noiseless,
        0,
    );
    let coarse = process_frame(&cube, &ProcessingConfig::default()).unwrap();
    let fine = process_frame(
        &cube,
        &ProcessingConfig {
            peak_interp: true,
            ..Default::default()
        },
    )
    .unwrap();
    let err = |l: &TargetList| (l.entries[0].range_m - r_true).abs();
    assert!(err(&fine) <= err(&coarse));
    assert!(
        (fine.entries[0].angles_rad[0] - 0.05).abs()
            < (coarse.entries[0].angles_rad[0] - 0.05).abs() + 1e-12
    );
}
