//! Independent reference implementations and scene helpers shared by the
//! integration tests. Nothing here calls into the FFT code under test.
#![allow(dead_code)]

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;
use stair_radar::chirp_sim::{ChirpCube, FrameMeta, Scatterer};
use stair_radar::rf_params::RadarConfig;
use stair_radar::scene::{GaitFrame, Point2};

/// O(n^2) forward DFT of `x` zero-padded to `len`.
pub fn naive_dft(x: &[Complex64], len: usize) -> Vec<Complex64> {
    (0..len)
        .map(|k| {
            x.iter()
                .enumerate()
                .map(|(n, v)| {
                    v * Complex64::from_polar(1.0, -TAU * (k * n % len) as f64 / len as f64)
                })
                .sum()
        })
        .collect()
}

/// Symmetric Hann coefficients written out from the textbook formula.
pub fn hann(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|i| 0.5 - 0.5 * (TAU * i as f64 / (n - 1) as f64).cos())
        .collect()
}

pub fn max_rel_err(a: &[Complex64], b: &[Complex64]) -> f64 {
    let scale = b.iter().map(|c| c.norm()).fold(0.0, f64::max).max(1e-300);
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
        / scale
}

pub fn random_complex<R: Rng>(rng: &mut R, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect()
}

pub fn random_cube<R: Rng>(rng: &mut R, cfg: &RadarConfig) -> ChirpCube {
    let n = cfg.samples_per_chirp * cfg.chirps_per_frame * cfg.virtual_antennas();
    ChirpCube::from_samples(*cfg, FrameMeta::default(), random_complex(rng, n)).unwrap()
}

/// Radar at the world origin with a level boresight.
pub fn level_frame() -> GaitFrame {
    GaitFrame {
        timestamp_s: 0.0,
        radar_origin: Point2::new(0.0, 0.0),
        inclination_rad: 0.0,
        true_inclination_rad: 0.0,
        host_velocity_mps: 0.0,
    }
}

pub fn at_polar(r: f64, theta: f64) -> Point2 {
    Point2::new(r * theta.cos(), r * theta.sin())
}

pub fn stationary_at(r: f64, theta: f64) -> Scatterer {
    Scatterer::stationary(at_polar(r, theta), 1.0)
}

/// Signed angle-FFT bin nearest to `theta` for an FFT of length `len`.
pub fn angle_bin(theta: f64, len: usize) -> f64 {
    theta.sin() * len as f64 / 2.0
}

/// Range-Doppler cube by direct DFTs: Hann on fast time (padded to `lr`),
/// rectangular on slow time (padded to `ld`). Layout `r + lr (p + ld a)`.
pub fn naive_range_doppler(cube: &ChirpCube, lr: usize, ld: usize) -> Vec<Complex64> {
    let (ns, np, na) = cube.shape();
    let w = hann(ns);
    let mut out = vec![Complex64::new(0.0, 0.0); lr * ld * na];
    for a in 0..na {
        let ranged: Vec<Vec<Complex64>> = (0..np)
            .map(|p| {
                let x: Vec<Complex64> = cube
                    .chirp(p, a)
                    .iter()
                    .zip(&w)
                    .map(|(v, w)| v * w)
                    .collect();
                naive_dft(&x, lr)
            })
            .collect();
        for r in 0..lr {
            let slow: Vec<Complex64> = ranged.iter().map(|row| row[r]).collect();
            for (p, v) in naive_dft(&slow, ld).into_iter().enumerate() {
                out[r + lr * (p + ld * a)] = v;
            }
        }
    }
    out
}
