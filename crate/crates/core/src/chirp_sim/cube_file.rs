//! Binary cube files.
//!
//! Layout (little-endian): 8-byte magic `DIMRADC1`, `u32` N_S, N_P, N_A,
//! `f64` timestamp (s), inclination (rad), host velocity (m/s), zero padding to
//! 64 bytes, then `N_S * N_P * N_A` interleaved `f32` (re, im) pairs with `s`
//! fastest, then `p`, then `a`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use super::{ChirpCube, FrameMeta};
use crate::error::{Error, Result};
use crate::rf_params::RadarConfig;

pub const CUBE_MAGIC: &[u8; 8] = b"DIMRADC1";
pub const CUBE_HEADER_LEN: usize = 64;

pub fn write_cube<W: Write>(mut w: W, cube: &ChirpCube) -> Result<()> {
    let (ns, np, na) = cube.shape();
    let mut header = [0u8; CUBE_HEADER_LEN];
    header[..8].copy_from_slice(CUBE_MAGIC);
    for (i, n) in [ns, np, na].into_iter().enumerate() {
        let n = u32::try_from(n)
            .map_err(|_| Error::Shape(format!("dimension {n} does not fit in u32")))?;
        header[8 + 4 * i..12 + 4 * i].copy_from_slice(&n.to_le_bytes());
    }
    let meta = cube.meta;
    for (i, v) in [
        meta.timestamp_s,
        meta.inclination_rad,
        meta.host_velocity_mps,
    ]
    .into_iter()
    .enumerate()
    {
        header[20 + 8 * i..28 + 8 * i].copy_from_slice(&v.to_le_bytes());
    }
    w.write_all(&header)?;

    let mut body = Vec::with_capacity(cube.samples().len() * 8);
    for c in cube.samples() {
        body.extend_from_slice(&(c.re as f32).to_le_bytes());
        body.extend_from_slice(&(c.im as f32).to_le_bytes());
    }
    w.write_all(&body)?;
    w.flush()?;
    Ok(())
}

/// Reads a cube and checks its dimensions against `config`.
pub fn read_cube<R: Read>(mut r: R, config: &RadarConfig) -> Result<ChirpCube> {
    let mut header = [0u8; CUBE_HEADER_LEN];
    r.read_exact(&mut header)?;
    if &header[..8] != CUBE_MAGIC {
        return Err(Error::CubeFormat("bad magic".into()));
    }
    let dim =
        |i: usize| u32::from_le_bytes(header[8 + 4 * i..12 + 4 * i].try_into().unwrap()) as usize;
    let (ns, np, na) = (dim(0), dim(1), dim(2));
    if (ns, np, na)
        != (
            config.samples_per_chirp,
            config.chirps_per_frame,
            config.virtual_antennas(),
        )
    {
        return Err(Error::Shape(format!(
            "cube is {ns}x{np}x{na} but the radar config expects {}x{}x{}",
            config.samples_per_chirp,
            config.chirps_per_frame,
            config.virtual_antennas()
        )));
    }
    let f = |i: usize| f64::from_le_bytes(header[20 + 8 * i..28 + 8 * i].try_into().unwrap());
    let meta = FrameMeta {
        timestamp_s: f(0),
        inclination_rad: f(1),
        host_velocity_mps: f(2),
    };

    let n = ns * np * na;
    let mut body = vec![0u8; n * 8];
    r.read_exact(&mut body)?;
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(Error::CubeFormat(
            "trailing bytes after sample block".into(),
        ));
    }
    let samples = body
        .chunks_exact(8)
        .map(|b| {
            let re = f32::from_le_bytes(b[..4].try_into().unwrap());
            let im = f32::from_le_bytes(b[4..].try_into().unwrap());
            Complex64::new(re as f64, im as f64)
        })
        .collect();
    ChirpCube::from_samples(*config, meta, samples)
}

pub fn write_cube_file(path: &Path, cube: &ChirpCube) -> Result<()> {
    write_cube(BufWriter::new(File::create(path)?), cube)
}

pub fn read_cube_file(path: &Path, config: &RadarConfig) -> Result<ChirpCube> {
    read_cube(BufReader::new(File::open(path)?), config)
}
