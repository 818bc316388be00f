//! Wavelength sweeps of the two-coupler resonator with dispersion-free arms.

use std::f64::consts::PI;
use std::io::{self, Write};

use rayon::prelude::*;

use crate::catalog::symmetric_y;
use crate::error::{Error, Result};
use crate::format::{sig, SIG_DIGITS};
use crate::gallery::{resonator_rt, ResonatorPhases};
use crate::network::{solve_steady_state, Device, Link, Netlist, PortRef};

/// One resonator arm: refractive index `n` and physical length in metres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralArm {
    pub n: f64,
    pub length: f64,
}

impl SpectralArm {
    pub fn new(n: f64, length: f64) -> Result<Self> {
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "refractive index must be positive, got {n}"
            )));
        }
        if !(length.is_finite() && length >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "arm length must be nonnegative, got {length}"
            )));
        }
        Ok(Self { n, length })
    }

    /// Phase accumulated at free-space wavenumber `k` (rad/m).
    pub fn phase(&self, k: f64) -> f64 {
        k * self.n * self.length
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRecord {
    pub k: f64,
    /// Free-space wavelength `2 pi / k`.
    pub lambda: f64,
    pub r: f64,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub arm1: SpectralArm,
    pub arm2: SpectralArm,
    pub records: Vec<SweepRecord>,
}

/// How each point of a sweep is evaluated.
#[derive(Debug, Clone, Copy)]
pub enum SweepMethod<'a> {
    ClosedForm,
    /// Solve the given two-external netlist, adding the arm phases to its
    /// first and second links.
    Solver(&'a Netlist),
}

/// `points` evenly spaced wavenumbers from `kmin` to `kmax` inclusive.
pub fn linear_grid(kmin: f64, kmax: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 {
        return Err(Error::InvalidParameter(
            "a sweep needs at least 2 points".into(),
        ));
    }
    if !(kmin.is_finite() && kmax.is_finite() && kmin > 0.0 && kmax > kmin) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < kmin < kmax, got kmin={kmin}, kmax={kmax}"
        )));
    }
    let step = (kmax - kmin) / (points - 1) as f64;
    Ok((0..points)
        .map(|i| {
            if i == points - 1 {
                kmax
            } else {
                kmin + step * i as f64
            }
        })
        .collect())
}

pub fn sweep_resonator(
    arm1: SpectralArm,
    arm2: SpectralArm,
    k_grid: &[f64],
    method: SweepMethod<'_>,
) -> Result<SweepResult> {
    if k_grid.is_empty() {
        return Err(Error::InvalidParameter("empty wavenumber grid".into()));
    }
    if k_grid.iter().any(|k| !(k.is_finite() && *k > 0.0)) {
        return Err(Error::InvalidParameter(
            "wavenumbers must be positive and finite".into(),
        ));
    }
    if k_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(
            "wavenumber grid must be strictly increasing".into(),
        ));
    }
    if let SweepMethod::Solver(net) = method {
        if net.externals().len() != 2 || net.links().len() < 2 {
            return Err(Error::InvalidParameter(
                "solver sweeps need a netlist with 2 externals and at least 2 links".into(),
            ));
        }
    }
    let records = k_grid
        .par_iter()
        .map(|&k| {
            let (phi1, phi2) = (arm1.phase(k), arm2.phase(k));
            let (r, t) = match method {
                SweepMethod::ClosedForm => {
                    let (r, t) = resonator_rt(ResonatorPhases::new(phi1, phi2));
                    (r.norm_sqr(), t.norm_sqr())
                }
                SweepMethod::Solver(net) => {
                    let base = net.links();
                    let net = net
                        .with_link_phase(0, base[0].phase + phi1)?
                        .with_link_phase(1, base[1].phase + phi2)?;
                    let s = solve_steady_state(&net, crate::DEFAULT_TOL)?.effective;
                    (s.get(0, 0).norm_sqr(), s.get(1, 0).norm_sqr())
                }
            };
            Ok(SweepRecord {
                k,
                lambda: 2.0 * PI / k,
                r,
                t,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        arm1,
        arm2,
        records,
    })
}

/// Two symmetric Y-couplers joined 2-2 and 3-3 with the given arm phases;
/// externals are the two port-1s.
pub fn resonator_netlist(phi1: f64, phi2: f64) -> Result<Netlist> {
    let y = |id: &str| Device {
        id: id.into(),
        matrix: symmetric_y(),
    };
    let p = |device, port| PortRef { device, port };
    Netlist::new(
        vec![y("Y1"), y("Y2")],
        vec![
            Link {
                a: p(0, 1),
                b: p(1, 1),
                phase: phi1,
            },
            Link {
                a: p(0, 2),
                b: p(1, 2),
                phase: phi2,
            },
        ],
        vec![p(0, 0), p(1, 0)],
    )
}

/// A contiguous run of sweep points with transmission below threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Notch {
    /// Wavenumber of the lowest sampled transmission in the run.
    pub center_k: f64,
    /// Distance between the interpolated threshold crossings, or the run's
    /// sampled extent where it touches the end of the sweep.
    pub width_k: f64,
    pub min_t: f64,
}

pub fn notch_metrics(sweep: &SweepResult, threshold: f64) -> Result<Vec<Notch>> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "notch threshold must lie in (0, 1), got {threshold}"
        )));
    }
    let rec = &sweep.records;
    let crossing = |i: usize, j: usize| {
        // Linear interpolation of T between samples i and j.
        let (a, b) = (&rec[i], &rec[j]);
        if (b.t - a.t).abs() < f64::EPSILON {
            return a.k;
        }
        a.k + (threshold - a.t) * (b.k - a.k) / (b.t - a.t)
    };
    let mut notches = Vec::new();
    let mut i = 0;
    while i < rec.len() {
        if rec[i].t >= threshold {
            i += 1;
            continue;
        }
        let start = i;
        while i < rec.len() && rec[i].t < threshold {
            i += 1;
        }
        let end = i - 1;
        let lowest = (start..=end)
            .min_by(|&a, &b| rec[a].t.total_cmp(&rec[b].t))
            .expect("nonempty run");
        let left = if start > 0 {
            crossing(start - 1, start)
        } else {
            rec[start].k
        };
        let right = if end + 1 < rec.len() {
            crossing(end, end + 1)
        } else {
            rec[end].k
        };
        notches.push(Notch {
            center_k: rec[lowest].k,
            width_k: right - left,
            min_t: rec[lowest].t,
        });
    }
    Ok(notches)
}

pub fn write_csv<W: Write>(sweep: &SweepResult, mut out: W) -> io::Result<()> {
    writeln!(out, "k,lambda,R,T")?;
    for r in &sweep.records {
        writeln!(
            out,
            "{},{},{},{}",
            sig(r.k, SIG_DIGITS),
            sig(r.lambda, SIG_DIGITS),
            sig(r.r, SIG_DIGITS),
            sig(r.t, SIG_DIGITS)
        )?;
    }
    Ok(())
}
