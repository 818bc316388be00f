//! Self-check battery behind `ycoupler verify`.
//!
//! Random draws come from a fixed-seed generator so that two runs print the
//! same report.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::catalog::{self, AsymmetricParams, BeamSplitterParams, CirculantParams, UnbiasedParams};
use crate::gallery::{self, ResonatorPhases};
use crate::network::{iterate_roundtrips, solve_steady_state, Device, Link, Netlist, PortRef};
use crate::quantum::coincidence_amplitude;
use crate::scattering::ScatteringMatrix;
use crate::spectral::resonator_netlist;

pub const SEED: u64 = 0x5943_4f55_504c_4552;

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub name: &'static str,
    pub passed: bool,
    /// Worst deviation seen, or a count of failures.
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub outcomes: Vec<Outcome>,
}

impl Report {
    pub fn passed(&self) -> usize {
        self.outcomes.iter().filter(|o| o.passed).count()
    }

    pub fn failed(&self) -> usize {
        self.outcomes.len() - self.passed()
    }
}

struct Worst {
    dev: f64,
    errors: usize,
}

impl Worst {
    fn new() -> Self {
        Self {
            dev: 0.0,
            errors: 0,
        }
    }

    fn see(&mut self, dev: crate::Result<f64>) {
        match dev {
            Ok(d) if d.is_finite() => self.dev = self.dev.max(d),
            _ => self.errors += 1,
        }
    }

    fn outcome(self, name: &'static str, tol: f64) -> Outcome {
        Outcome {
            name,
            passed: self.errors == 0 && self.dev <= tol,
            detail: if self.errors > 0 {
                format!("{} evaluation errors", self.errors)
            } else {
                format!("max deviation {:.3e} (tol {tol:.0e})", self.dev)
            },
        }
    }
}

fn unitary_and_reciprocal(m: crate::Result<ScatteringMatrix>, tol: f64) -> crate::Result<f64> {
    let m = m?;
    Ok(m.check_unitary(tol)
        .deviation
        .max(m.check_reciprocal(tol).deviation))
}

pub fn run(tol: f64) -> Report {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut outcomes = Vec::new();

    let mut w = Worst::new();
    w.see(unitary_and_reciprocal(Ok(catalog::symmetric_y()), tol));
    for d in 3..=12 {
        w.see(unitary_and_reciprocal(catalog::grover(d), tol));
        for _ in 0..10 {
            let x = rng.random_range(-1.0..=0.0);
            w.see(unitary_and_reciprocal(
                catalog::circulant_family(CirculantParams { d, x }),
                tol,
            ));
        }
    }
    outcomes.push(w.outcome(
        "catalog: symmetric, Grover and circulant devices unitary and reciprocal",
        tol,
    ));

    let mut w = Worst::new();
    for n in 3..=6 {
        for j in 1..n {
            w.see(catalog::circulator(n, j).map(|m| m.check_unitary(tol).deviation));
        }
    }
    for _ in 0..50 {
        let p = BeamSplitterParams {
            r_mag: rng.random_range(0.0..=1.0),
            arg_r1: rng.random_range(-PI..PI),
            arg_r2: rng.random_range(-PI..PI),
            arg_t1: rng.random_range(-PI..PI),
        };
        w.see(catalog::beam_splitter(p).map(|m| m.check_unitary(tol).deviation));
    }
    outcomes.push(w.outcome("catalog: circulators and beam-splitters unitary", tol));

    let mut w = Worst::new();
    for _ in 0..100 {
        let t = rng.random_range(0.01..0.99);
        let delta = rng.random_range(-PI..PI);
        w.see(unitary_and_reciprocal(
            catalog::asymmetric_y(AsymmetricParams { t, delta }),
            tol,
        ));
        let a_mag = rng.random_range(0.0..1.0);
        let x = rng.random_range(-1.0..=0.0);
        match catalog::unbiased_y(UnbiasedParams { a_mag, x }) {
            Err(crate::Error::DegenerateDevice(_)) => {}
            m => w.see(unitary_and_reciprocal(m, tol)),
        }
        w.see(unitary_and_reciprocal(
            catalog::y_pm(rng.random_range(-0.99..0.99)),
            tol,
        ));
    }
    outcomes.push(w.outcome(
        "catalog: symmetry-broken Y-couplers unitary and reciprocal",
        tol,
    ));

    let mut w = Worst::new();
    for _ in 0..20 {
        let phi = rng.random_range(-PI..PI);
        let net = grover_bridge(phi);
        w.see((|| {
            let s = solve_steady_state(&net, tol)?.effective;
            s.max_abs_diff(&gallery::generalized_grover(phi)?)
        })());
    }
    outcomes.push(w.outcome(
        "network: bridged couplers reproduce generalized Grover",
        1e-12,
    ));

    let mut w = Worst::new();
    for _ in 0..50 {
        let p = ResonatorPhases::new(
            rng.random_range(0.0..2.0 * PI),
            rng.random_range(0.0..2.0 * PI),
        );
        w.see((|| {
            let s = solve_steady_state(&resonator_netlist(p.phi1, p.phi2)?, tol)?.effective;
            let (r, t) = gallery::resonator_rt(p);
            Ok((s.get(0, 0) - r).norm().max((s.get(1, 0) - t).norm()))
        })());
    }
    outcomes.push(w.outcome("network: two-coupler resonator matches closed form", 1e-10));

    let mut w = Worst::new();
    for _ in 0..20 {
        let p = ResonatorPhases::new(
            rng.random_range(0.0..2.0 * PI),
            rng.random_range(0.0..2.0 * PI),
        );
        w.see((|| {
            let net = resonator_netlist(p.phi1, p.phi2)?;
            let direct = solve_steady_state(&net, tol)?.effective;
            let run = iterate_roundtrips(&net, 0, 100_000, 1e-13)?;
            Ok((0..2)
                .map(|i| (run.amplitudes[i] - direct.get(i, 0)).norm() - run.tail_bound)
                .fold(0.0, f64::max))
        })());
    }
    outcomes.push(w.outcome("network: round-trip iteration within its tail bound", 1e-10));

    let mut w = Worst::new();
    for _ in 0..50 {
        let phi = rng.random_range(-PI..PI);
        w.see((|| {
            let net = loop_mirror(phi);
            let s = solve_steady_state(&net, tol)?.effective;
            Ok((s.get(0, 0).norm() - 1.0).abs())
        })());
        let (a, b) = gallery::michelson_outputs(phi);
        w.see(Ok((a.norm_sqr() - (phi / 2.0).sin().powi(2)).abs()));
        w.see(Ok((b.norm_sqr() - (phi / 2.0).cos().powi(2)).abs()));
    }
    outcomes.push(w.outcome("gallery: loop mirror and Michelson outputs", 1e-12));

    let mut w = Worst::new();
    for _ in 0..100 {
        let p = BeamSplitterParams {
            r_mag: FRAC_1_SQRT_2,
            arg_r1: rng.random_range(-PI..PI),
            arg_r2: rng.random_range(-PI..PI),
            arg_t1: rng.random_range(-PI..PI),
        };
        w.see(coincidence_amplitude(p).map(|a| a.norm()));
    }
    outcomes.push(w.outcome("quantum: balanced splitter cancels coincidences", 1e-12));

    Report { outcomes }
}

fn port(device: usize, port: usize) -> PortRef {
    PortRef { device, port }
}

fn y(id: &str) -> Device {
    Device {
        id: id.into(),
        matrix: catalog::symmetric_y(),
    }
}

fn grover_bridge(phi: f64) -> Netlist {
    Netlist::new(
        vec![y("A"), y("B")],
        vec![Link {
            a: port(0, 0),
            b: port(1, 0),
            phase: phi,
        }],
        vec![port(0, 1), port(0, 2), port(1, 1), port(1, 2)],
    )
    .expect("static netlist")
}

fn loop_mirror(phi: f64) -> Netlist {
    Netlist::new(
        vec![y("Y")],
        vec![Link {
            a: port(0, 1),
            b: port(0, 2),
            phase: phi,
        }],
        vec![port(0, 0)],
    )
    .expect("static netlist")
}
