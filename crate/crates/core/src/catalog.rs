//! Closed-form scattering matrices for the device families: the symmetric
//! Y-coupler and its phase conventions, the reciprocal circulant family with
//! the Grover coin as its minimum-reflectivity member, circulators, feed-forward
//! beam-splitters, mirrors, and the two symmetry-broken Y-coupler families.
//!
//! Every constructor fixes one canonical external-phase gauge; other
//! conventions are reachable with [`ScatteringMatrix::dress_phases`].

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::scattering::ScatteringMatrix;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn finite(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be finite, got {v}"
        )))
    }
}

/// The feed-forward, reflection-symmetric Y-coupler. Port 1 (index 0) splits
/// evenly into ports 2 and 3; those two ports back-reflect with amplitude -1/2.
pub fn symmetric_y() -> ScatteringMatrix {
    let h = FRAC_1_SQRT_2;
    ScatteringMatrix::from_real_rows(&[&[0.0, h, h], &[h, -0.5, 0.5], &[h, 0.5, -0.5]])
        .expect("static matrix")
}

/// Symmetric Y-coupler in the convention where the lower 2x2 block carries
/// `e^{i phi}`.
pub fn symmetric_y_phase(phi: f64) -> Result<ScatteringMatrix> {
    let phi = finite("phi", phi)?;
    let h = re(FRAC_1_SQRT_2);
    let e = Complex64::cis(phi) * 0.5;
    ScatteringMatrix::from_rows(&[vec![ZERO, h, h], vec![h, -e, e], vec![h, e, -e]])
}

/// The d-port Grover coin: diagonal `2/d - 1`, off-diagonal `2/d`.
pub fn grover(d: usize) -> Result<ScatteringMatrix> {
    if d < 3 {
        return Err(Error::InvalidParameter(format!(
            "Grover coin needs d >= 3, got {d}"
        )));
    }
    let t = 2.0 / d as f64;
    let rows: Vec<Vec<Complex64>> = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| re(if i == j { t - 1.0 } else { t }))
                .collect()
        })
        .collect();
    ScatteringMatrix::from_rows(&rows)
}

/// Member of the reciprocal, unitary, circulant d-port family with a single
/// reflection amplitude `r` on the diagonal and a common transmission `t`
/// elsewhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CirculantParams {
    pub d: usize,
    /// `cos(arg r - arg t)`, restricted to `[-1, 0]`.
    pub x: f64,
}

impl CirculantParams {
    pub fn c0(&self) -> f64 {
        let d = self.d as f64;
        (2.0 - d) / (2.0 * (d - 1.0).sqrt())
    }

    /// `|r|^2 = c0^2 / (c0^2 + x^2)`.
    pub fn reflectivity(&self) -> f64 {
        let c0sq = self.c0().powi(2);
        c0sq / (c0sq + self.x * self.x)
    }

    fn validate(&self) -> Result<()> {
        if self.d < 3 {
            return Err(Error::InvalidParameter(format!(
                "circulant family needs d >= 3, got {}",
                self.d
            )));
        }
        if !(-1.0..=0.0).contains(&self.x) {
            return Err(Error::InvalidParameter(format!(
                "x = cos(arg r - arg t) must lie in [-1, 0], got {}",
                self.x
            )));
        }
        Ok(())
    }
}

/// Gauge: `arg t = 0`, `arg r = arccos(x)`. At `x = -1` this is exactly
/// [`grover`]; at `x = 0` it is a set of decoupled mirrors.
pub fn circulant_family(p: CirculantParams) -> Result<ScatteringMatrix> {
    p.validate()?;
    let r_sq = p.reflectivity();
    let r = Complex64::from_polar(r_sq.sqrt(), p.x.acos());
    let t = re(((1.0 - r_sq) / (p.d as f64 - 1.0)).max(0.0).sqrt());
    let rows: Vec<Vec<Complex64>> = (0..p.d)
        .map(|i| (0..p.d).map(|j| if i == j { r } else { t }).collect())
        .collect();
    ScatteringMatrix::from_rows(&rows)
}

/// Smallest reflectivity in the reciprocal circulant family, `(d-2)^2 / d^2`.
/// Attained by the Grover coin.
pub fn min_reflectivity(d: usize) -> f64 {
    let d = d as f64;
    (d - 2.0).powi(2) / (d * d)
}

/// Circulator routing port `m` to port `(m + j) mod n`.
pub fn circulator(n: usize, j: usize) -> Result<ScatteringMatrix> {
    if n < 3 {
        return Err(Error::InvalidParameter(format!(
            "circulator needs at least 3 ports, got {n}"
        )));
    }
    if j.is_multiple_of(n) {
        return Err(Error::InvalidParameter(format!(
            "shift {j} is a multiple of {n}: identity, not a circulator"
        )));
    }
    let rows: Vec<Vec<Complex64>> = (0..n)
        .map(|out| {
            (0..n)
                .map(|inp| if (inp + j) % n == out { re(1.0) } else { ZERO })
                .collect()
        })
        .collect();
    ScatteringMatrix::from_rows(&rows)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamSplitterParams {
    /// `|r1| = |r2|`.
    pub r_mag: f64,
    pub arg_r1: f64,
    pub arg_r2: f64,
    pub arg_t1: f64,
}

impl BeamSplitterParams {
    /// The phase forced by unitarity: `arg r1 + arg r2 = arg t1 + arg t2 + pi`.
    pub fn arg_t2(&self) -> f64 {
        self.arg_r1 + self.arg_r2 - self.arg_t1 - PI
    }

    pub fn t_mag(&self) -> f64 {
        (1.0 - self.r_mag * self.r_mag).max(0.0).sqrt()
    }

    /// `(r1, r2, t1, t2)`.
    pub fn amplitudes(&self) -> (Complex64, Complex64, Complex64, Complex64) {
        let t = self.t_mag();
        (
            Complex64::from_polar(self.r_mag, self.arg_r1),
            Complex64::from_polar(self.r_mag, self.arg_r2),
            Complex64::from_polar(t, self.arg_t1),
            Complex64::from_polar(t, self.arg_t2()),
        )
    }

    pub(crate) fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("r_mag", self.r_mag),
            ("arg_r1", self.arg_r1),
            ("arg_r2", self.arg_r2),
            ("arg_t1", self.arg_t1),
        ] {
            finite(name, v)?;
        }
        if !(0.0..=1.0).contains(&self.r_mag) {
            return Err(Error::InvalidParameter(format!(
                "beam-splitter |r| must lie in [0, 1], got {}",
                self.r_mag
            )));
        }
        Ok(())
    }
}

/// Four-port feed-forward beam-splitter. Ports 1,2 (indices 0,1) face ports
/// 3,4; no amplitude couples two ports on the same side. Reciprocal only
/// when `arg t1 = arg t2`.
pub fn beam_splitter(p: BeamSplitterParams) -> Result<ScatteringMatrix> {
    p.validate()?;
    let (r1, r2, t1, t2) = p.amplitudes();
    ScatteringMatrix::from_rows(&[
        vec![ZERO, ZERO, r1, t2],
        vec![ZERO, ZERO, t1, r2],
        vec![r1, t2, ZERO, ZERO],
        vec![t1, r2, ZERO, ZERO],
    ])
}

/// One-port mirror with reflection `e^{i phase}`.
pub fn mirror(phase: f64) -> Result<ScatteringMatrix> {
    let phase = finite("phase", phase)?;
    ScatteringMatrix::from_rows(&[vec![Complex64::cis(phase)]])
}

/// Feed-forward Y-coupler with an unequal split: amplitude `t` from port 1 to
/// port 2, `sqrt(1 - t^2)` to port 3 with relative phase `delta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymmetricParams {
    pub t: f64,
    pub delta: f64,
}

pub fn asymmetric_y(p: AsymmetricParams) -> Result<ScatteringMatrix> {
    finite("t", p.t)?;
    finite("delta", p.delta)?;
    if p.t <= 0.0 || p.t >= 1.0 {
        return Err(Error::DegenerateDevice(format!(
            "asymmetric Y-coupler needs t in (0, 1), got {} (the boundary is a mirror plus a pass-through)",
            p.t
        )));
    }
    let t = p.t;
    let s = (1.0 - t * t).sqrt();
    let e = Complex64::cis(p.delta);
    let ts = re(t * s);
    ScatteringMatrix::from_rows(&[
        vec![ZERO, re(t), e * s],
        vec![re(t), -e.conj() * (s * s), ts],
        vec![e * s, ts, -e * (t * t)],
    ])
}

/// Reflection-symmetric Y-coupler whose port 1 back-reflects. Parametrized by
/// the back-reflection magnitude `|a|` at ports 2/3 and `x = cos(arg a - arg b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnbiasedParams {
    pub a_mag: f64,
    pub x: f64,
}

impl UnbiasedParams {
    fn root(&self) -> f64 {
        (self.a_mag * self.a_mag * (self.x * self.x - 1.0) + 1.0)
            .max(0.0)
            .sqrt()
    }

    /// Positive root of the ellipse `|a|^2 - 2|a||b|x + |b|^2 = 1`.
    pub fn b_mag(&self) -> f64 {
        self.a_mag * self.x + self.root()
    }

    /// `|t|^2 = 1 - |a|^2 - |b|^2`.
    pub fn t_mag_sq(&self) -> f64 {
        1.0 - self.a_mag * self.a_mag - self.b_mag().powi(2)
    }

    /// `|r|^2`, evaluated as `(2|a|x + root)^2 + |a|^2 (1 - x^2)`, a sum of
    /// squares equal to `1 - 2|t|^2`.
    pub fn r_mag_sq(&self) -> f64 {
        (2.0 * self.a_mag * self.x + self.root()).powi(2)
            + self.a_mag * self.a_mag * (1.0 - self.x * self.x)
    }

    fn validate(&self) -> Result<()> {
        finite("a_mag", self.a_mag)?;
        finite("x", self.x)?;
        if !(0.0..=1.0).contains(&self.a_mag) {
            return Err(Error::InvalidParameter(format!(
                "|a| must lie in [0, 1], got {}",
                self.a_mag
            )));
        }
        if !(-1.0..=0.0).contains(&self.x) {
            return Err(Error::InvalidParameter(format!(
                "x = cos(arg a - arg b) must lie in [-1, 0], got {}",
                self.x
            )));
        }
        Ok(())
    }
}

/// Below this magnitude a port-1 reflection is treated as absent.
const ZERO_REFLECTION: f64 = 1e-12;
/// Residual accepted when choosing the sign of `cos(delta)`.
const SIGN_RESIDUAL: f64 = 1e-9;

/// Gauge: `arg b = 0`, `arg r = 0`, `sin(arg a) >= 0`. The transmission phase
/// `delta / 2` comes from the port-1 orthogonality condition
/// `|r| e^{i delta} + a + b = 0`.
pub fn unbiased_y(p: UnbiasedParams) -> Result<ScatteringMatrix> {
    p.validate()?;
    let b_mag = p.b_mag();
    let t_sq = p.t_mag_sq();
    if b_mag < 0.0 || t_sq < -1e-12 {
        return Err(Error::InvalidParameter(format!(
            "no valid transmission for |a| = {}, x = {} (|a|^2 + |b|^2 > 1)",
            p.a_mag, p.x
        )));
    }
    let t_mag = t_sq.max(0.0).sqrt();
    if t_mag <= ZERO_REFLECTION {
        return Err(Error::DegenerateDevice(format!(
            "|t| = 0 for |a| = {}, x = {}: the device is a set of mirrors",
            p.a_mag, p.x
        )));
    }
    let r_mag = p.r_mag_sq().sqrt();
    if r_mag <= ZERO_REFLECTION {
        // Without a port-1 reflection the transmission phase is pure gauge.
        return Ok(symmetric_y());
    }

    let sin_phi_a = (1.0 - p.x * p.x).max(0.0).sqrt();
    let sin_delta = (-(p.a_mag / r_mag) * sin_phi_a).clamp(-1.0, 1.0);
    // Real-part condition: |r| cos(delta) + |a| x + |b| = 0.
    let real_part = p.a_mag * p.x + b_mag;
    let cos_mag = (real_part.abs() / r_mag).min(1.0);
    let cos_delta = [cos_mag, -cos_mag]
        .into_iter()
        .map(|c| (c, (r_mag * c + real_part).abs()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .filter(|(_, residual)| *residual < SIGN_RESIDUAL)
        .map(|(c, _)| c)
        .ok_or_else(|| {
            Error::InvalidParameter(format!(
                "no sign of cos(delta) satisfies the orthogonality condition for |a| = {}, x = {}",
                p.a_mag, p.x
            ))
        })?;
    let delta = sin_delta.atan2(cos_delta);

    let r = re(r_mag);
    let t = Complex64::from_polar(t_mag, delta / 2.0);
    let a = Complex64::from_polar(p.a_mag, p.x.acos());
    let b = re(b_mag);
    ScatteringMatrix::from_rows(&[vec![r, t, t], vec![t, a, b], vec![t, b, a]])
}

/// The two `x = -1` classes of the back-reflecting symmetric Y-coupler.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum YClass {
    /// Ports 2 and 3 reflect more than they exchange.
    Plus,
    /// Ports 2 and 3 exchange more than they reflect.
    Minus,
}

/// The explicit real `x = -1` family, with both classes folded into the sign
/// of `r`: diagonal `r`, transmission `sqrt((1 - r^2)/2)`, and lower block
/// `a = -(1 + r)/2`, `b = (1 - r)/2`. `r = 0` is the symmetric Y-coupler and
/// `r = -1/3` is the three-port Grover coin.
pub fn y_pm(r: f64) -> Result<ScatteringMatrix> {
    finite("r", r)?;
    if r.abs() >= 1.0 {
        return Err(Error::DegenerateDevice(format!(
            "|r| must be below 1, got {r}"
        )));
    }
    let t = ((1.0 - r * r) / 2.0).sqrt();
    let a = -(1.0 + r) / 2.0;
    let b = (1.0 - r) / 2.0;
    ScatteringMatrix::from_real_rows(&[&[r, t, t], &[t, a, b], &[t, b, a]])
}

/// [`y_pm`] addressed by reflection magnitude and class.
pub fn y_class(r_mag: f64, class: YClass) -> Result<ScatteringMatrix> {
    finite("r_mag", r_mag)?;
    if r_mag < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "reflection magnitude must be nonnegative, got {r_mag}"
        )));
    }
    match class {
        YClass::Plus => y_pm(r_mag),
        YClass::Minus => y_pm(-r_mag),
    }
}
