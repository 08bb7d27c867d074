//! Shared numerical kernels: FFT, windows, and seeded random streams.
//!
//! FFTs are unnormalized in the forward direction; the inverse applies `1/len`.
//! Only power-of-two lengths are accepted. Shorter inputs are zero-padded up to
//! the requested length, and [`padded_len`] gives the padding policy used by the
//! processing chain (next power of two, so the 144-sample chirp becomes 256).

use std::cell::RefCell;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Zero-padding policy: the smallest power of two `>= n`.
pub fn padded_len(n: usize) -> usize {
    n.max(1).next_power_of_two()
}

fn check_len(len: usize, input: usize) -> Result<()> {
    if len == 0 || !len.is_power_of_two() || len < input {
        return Err(Error::FftLength { len, input });
    }
    Ok(())
}

/// In-place forward FFT of a buffer whose length is a power of two.
pub fn fft_in_place(buf: &mut [Complex64]) -> Result<()> {
    check_len(buf.len(), buf.len())?;
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len()).process(buf));
    Ok(())
}

/// Forward FFT of `input` zero-padded to `len`.
pub fn fft(input: &[Complex64], len: usize) -> Result<Vec<Complex64>> {
    check_len(len, input.len())?;
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    buf[..input.len()].copy_from_slice(input);
    fft_in_place(&mut buf)?;
    Ok(buf)
}

/// Inverse FFT with `1/len` scaling.
pub fn ifft(input: &[Complex64], len: usize) -> Result<Vec<Complex64>> {
    check_len(len, input.len())?;
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    buf[..input.len()].copy_from_slice(input);
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(len).process(&mut buf));
    let scale = 1.0 / len as f64;
    for v in &mut buf {
        *v *= scale;
    }
    Ok(buf)
}

/// Taper applied before an FFT stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    Rectangular,
    /// Symmetric Hann, `0.5 - 0.5 cos(2 pi n / (N - 1))`.
    #[default]
    Hann,
}

impl Window {
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; n],
            Window::Hann if n <= 1 => vec![1.0; n],
            Window::Hann => {
                let denom = (n - 1) as f64;
                (0..n)
                    .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / denom).cos())
                    .collect()
            }
        }
    }
}

/// Derives an independent child seed from a base seed and a stream index
/// (splitmix64 finalizer over the combined words).
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15).rotate_left(17);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Circular complex Gaussian sample with total power `power` (E|z|^2).
pub fn complex_gaussian<R: rand::Rng + ?Sized>(rng: &mut R, power: f64) -> Complex64 {
    let sigma = (power / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * sigma, im * sigma)
}
