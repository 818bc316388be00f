//! Closed-form results for the composite devices built from symmetric
//! Y-couplers. These are the references the network solver is tested against,
//! so none of them call into [`crate::network`].

use std::f64::consts::SQRT_2;

use num_complex::Complex64;

use crate::catalog::symmetric_y;
use crate::error::{Error, Result};
use crate::scattering::ScatteringMatrix;

/// Two symmetric Y-couplers bridged port 1 to port 1 through phase `phi`.
/// Ports 1,2 belong to the first coupler and 3,4 to the second.
pub fn generalized_grover(phi: f64) -> Result<ScatteringMatrix> {
    if !phi.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "phi must be finite, got {phi}"
        )));
    }
    let d = Complex64::new(-0.5, 0.0);
    let s = Complex64::new(0.5, 0.0);
    let x = Complex64::cis(phi) * 0.5;
    ScatteringMatrix::from_rows(&[
        vec![d, s, x, x],
        vec![s, d, x, x],
        vec![x, x, d, s],
        vec![x, x, s, d],
    ])
}

/// Reflection amplitude of a symmetric Y-coupler whose ports 2 and 3 are
/// joined by a loop of phase `phi_l`.
pub fn loop_mirror_reflection(phi_l: f64) -> Complex64 {
    loop_mirror_reflection_with(&symmetric_y(), phi_l)
}

/// Loop-mirror reflection for any three-port `y`, found by following the
/// light around the loop until nothing is left inside.
///
/// For couplers whose lower block is not nilpotent around the loop this is a
/// truncated series; 4096 passes is far beyond what any lossless coupler with
/// a contracting loop needs at double precision.
pub fn loop_mirror_reflection_with(y: &ScatteringMatrix, phi_l: f64) -> Complex64 {
    let e = Complex64::cis(phi_l);
    let mut out = y.get(0, 0);
    let (mut v2, mut v3) = (y.get(1, 0), y.get(2, 0));
    for _ in 0..4096 {
        if v2.norm() + v3.norm() < 1e-17 {
            break;
        }
        // Whatever leaves port 2 comes back in at port 3, and vice versa.
        let (w2, w3) = (e * v3, e * v2);
        out += y.get(0, 1) * w2 + y.get(0, 2) * w3;
        let next2 = y.get(1, 1) * w2 + y.get(1, 2) * w3;
        let next3 = y.get(2, 1) * w2 + y.get(2, 2) * w3;
        v2 = next2;
        v3 = next3;
    }
    out
}

/// Light entering port 2 of a symmetric Y-coupler whose port 1 is closed by a
/// mirror with total round-trip phase `phi`. Returns the amplitudes leaving
/// ports 2 and 3.
pub fn michelson_outputs(phi: f64) -> (Complex64, Complex64) {
    let e = Complex64::cis(phi);
    ((e - 1.0) / 2.0, (e + 1.0) / 2.0)
}

/// Arm phases of two symmetric Y-couplers joined port 2 to port 2 (`phi1`)
/// and port 3 to port 3 (`phi2`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonatorPhases {
    pub phi1: f64,
    pub phi2: f64,
}

impl ResonatorPhases {
    pub fn new(phi1: f64, phi2: f64) -> Self {
        Self { phi1, phi2 }
    }

    /// Mean of the two arm factors.
    pub fn b(&self) -> Complex64 {
        (Complex64::cis(self.phi1) + Complex64::cis(self.phi2)) / 2.0
    }

    /// Half-difference of the two arm factors.
    pub fn c(&self) -> Complex64 {
        (Complex64::cis(self.phi1) - Complex64::cis(self.phi2)) / 2.0
    }
}

/// Below this both `|C|` and `|1 - B^2|` must fall for the limit rule to apply.
pub const RESONATOR_LIMIT_TOL: f64 = 1e-12;

/// Reflection and transmission of the two-coupler resonator.
pub fn resonator_rt(p: ResonatorPhases) -> (Complex64, Complex64) {
    let b = p.b();
    let c = p.c();
    let denom = Complex64::new(1.0, 0.0) - b * b;
    if c.norm() < RESONATOR_LIMIT_TOL && denom.norm() < RESONATOR_LIMIT_TOL {
        return (Complex64::new(0.0, 0.0), b);
    }
    let r = -c * c / denom;
    (r, b * (1.0 - r))
}

/// Per-round-trip coefficients of the antisymmetric internal supermode:
/// `(feedback, leak_a, leak_b) = (B^2, sqrt2 C, -sqrt2 B C)`.
pub fn supermode_roundtrip_coeffs(p: ResonatorPhases) -> (Complex64, Complex64, Complex64) {
    let b = p.b();
    let c = p.c();
    (b * b, c * SQRT_2, -b * c * SQRT_2)
}

/// Amplitude released into the two external modes after `terms` round trips,
/// as coefficients of `(a, b)`.
pub fn supermode_series(p: ResonatorPhases, terms: usize) -> (Complex64, Complex64) {
    let (feedback, leak_a, leak_b) = supermode_roundtrip_coeffs(p);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut power = Complex64::new(1.0, 0.0);
    for _ in 0..terms {
        sum += power;
        power *= feedback;
    }
    (leak_a * sum, leak_b * sum)
}

/// Limit of [`supermode_series`]: `sqrt2 (C a - B C b) / (1 - B^2)`.
/// `None` when the supermode has unit feedback.
pub fn supermode_limit(p: ResonatorPhases) -> Option<(Complex64, Complex64)> {
    let (feedback, leak_a, leak_b) = supermode_roundtrip_coeffs(p);
    let denom = Complex64::new(1.0, 0.0) - feedback;
    if denom.norm() < RESONATOR_LIMIT_TOL {
        return None;
    }
    Some((leak_a / denom, leak_b / denom))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_PI_2, PI};

    use super::*;
    use crate::catalog::{grover, symmetric_y_phase};

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn generalized_grover_reduces_to_grover() {
        let g = generalized_grover(0.0).unwrap();
        assert!(g.max_abs_diff(&grover(4).unwrap()).unwrap() < 1e-15);
        let g = generalized_grover(PI).unwrap();
        assert!(close(g.get(0, 2), Complex64::new(-0.5, 0.0), 1e-15));
        assert!(g.check_unitary(1e-12).holds);
        assert!(generalized_grover(f64::NAN).is_err());
    }

    #[test]
    fn loop_mirror_is_phase_independent() {
        for phi in [0.0, 0.3, 1.3, PI, -2.0] {
            let r = loop_mirror_reflection(phi);
            assert!((r.norm() - 1.0).abs() < 1e-14);
            assert!(close(r, Complex64::cis(phi), 1e-14));
        }
        // The other phase convention changes the constant, not the magnitude.
        let y = symmetric_y_phase(0.8).unwrap();
        for phi in [0.0, 1.0, 2.5] {
            assert!((loop_mirror_reflection_with(&y, phi).norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn michelson_limits() {
        let (a, b) = michelson_outputs(0.0);
        assert!(close(a, 0.0.into(), 1e-15) && close(b, 1.0.into(), 1e-15));
        let (a, b) = michelson_outputs(PI);
        assert!(close(a, (-1.0).into(), 1e-15) && close(b, 0.0.into(), 1e-15));
        let (a, b) = michelson_outputs(FRAC_PI_2);
        assert!((a.norm_sqr() - 0.5).abs() < 1e-15 && (b.norm_sqr() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn resonator_examples() {
        let (r, t) = resonator_rt(ResonatorPhases::new(FRAC_PI_2, FRAC_PI_2));
        assert!(close(r, 0.0.into(), 1e-15));
        assert!(close(t, Complex64::i(), 1e-15));
        let (r, t) = resonator_rt(ResonatorPhases::new(0.0, PI));
        assert!(close(r, (-1.0).into(), 1e-15));
        assert!(close(t, 0.0.into(), 1e-15));
    }

    #[test]
    fn resonator_is_lossless_and_arm_symmetric() {
        let n = 200;
        let step = 2.0 * PI / n as f64;
        for i in 0..n {
            for j in 0..n {
                let p = ResonatorPhases::new(i as f64 * step, j as f64 * step);
                let (r, t) = resonator_rt(p);
                assert!((r.norm_sqr() + t.norm_sqr() - 1.0).abs() < 1e-12, "{p:?}");
                let (r2, t2) = resonator_rt(ResonatorPhases::new(p.phi2, p.phi1));
                assert!(close(r, r2, 1e-12) && close(t, t2, 1e-12));
            }
        }
    }

    #[test]
    fn supermode_coefficients() {
        let (f, la, _) = supermode_roundtrip_coeffs(ResonatorPhases::new(0.4, 0.4));
        assert!(close(f, Complex64::cis(0.8), 1e-15));
        assert_eq!(la, Complex64::new(0.0, 0.0));
        let (f, _, _) = supermode_roundtrip_coeffs(ResonatorPhases::new(0.0, PI));
        assert!(f.norm() < 1e-15);
        assert!(supermode_limit(ResonatorPhases::new(PI, PI)).is_none());
    }

    #[test]
    fn supermode_series_tail_bound() {
        let p = ResonatorPhases::new(0.7, 2.1);
        let (lim_a, lim_b) = supermode_limit(p).unwrap();
        let b2 = p.b().norm_sqr();
        let (_, leak_a, leak_b) = supermode_roundtrip_coeffs(p);
        for terms in [1, 2, 5, 10, 40] {
            let (sa, sb) = supermode_series(p, terms);
            let tail = b2.powi(terms as i32) / (1.0 - b2);
            assert!((sa - lim_a).norm() <= tail * leak_a.norm() + 1e-15);
            assert!((sb - lim_b).norm() <= tail * leak_b.norm() + 1e-15);
        }
    }
}
