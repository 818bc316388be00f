//! Two-photon interference at a feed-forward beam-splitter.
//!
//! One photon enters each of ports 1 and 2. Both leave on the far side either
//! through one port each (coincidence) or bunched together. Only the
//! coincidence amplitude is modelled, for fully indistinguishable photons.

use num_complex::Complex64;

use crate::catalog::BeamSplitterParams;
use crate::error::{Error, Result};

/// Amplitude of one photon in each output: `r1 r2 + t1 t2`.
pub fn coincidence_amplitude(splitter: BeamSplitterParams) -> Result<Complex64> {
    splitter.validate()?;
    let (r1, r2, t1, t2) = splitter.amplitudes();
    Ok(r1 * r2 + t1 * t2)
}

/// Coincidence probability for each reflection magnitude in `grid`, in order.
pub fn coincidence_probability_scan(grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    grid.iter()
        .map(|&r_mag| {
            let amp = coincidence_amplitude(BeamSplitterParams {
                r_mag,
                arg_r1: 0.0,
                arg_r2: 0.0,
                arg_t1: 0.0,
            })?;
            Ok((r_mag, amp.norm_sqr()))
        })
        .collect()
}

/// `points` evenly spaced reflection magnitudes covering `[0, 1]`.
pub fn r_mag_grid(points: usize) -> Result<Vec<f64>> {
    match points {
        0 => Err(Error::InvalidParameter(
            "need at least one grid point".into(),
        )),
        1 => Ok(vec![0.0]),
        n => Ok((0..n).map(|i| i as f64 / (n - 1) as f64).collect()),
    }
}
