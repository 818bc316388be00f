//! Dense scattering matrices over the ports of a lossless linear-optical
//! device, with symmetry predicates and port relabelling.
//!
//! Entry `(i, j)` is the amplitude carried from input port `j` to output
//! port `i`. Ports are 0-based in this API; the netlist and CLI layers use
//! the 1-based labels that appear on device drawings.

use std::fmt::Write as _;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default tolerance for symmetry checks.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Largest port count accepted by the text decoder.
pub const MAX_TEXT_DIM: usize = 4096;

/// Outcome of a single symmetry predicate: the raw deviation and whether it
/// falls within the tolerance used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Check {
    pub holds: bool,
    pub deviation: f64,
}

impl Check {
    fn new(deviation: f64, tol: f64) -> Self {
        Self {
            holds: deviation <= tol,
            deviation,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryReport {
    pub unitary: Check,
    pub reciprocal: Check,
    pub circulant: Check,
    /// Per port: no back-reflection into the port it was launched from.
    pub feed_forward: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringMatrix {
    data: DMatrix<Complex64>,
}

impl ScatteringMatrix {
    pub fn from_matrix(data: DMatrix<Complex64>) -> Result<Self> {
        if data.nrows() != data.ncols() {
            return Err(Error::DimensionMismatch {
                expected: data.nrows(),
                actual: data.ncols(),
            });
        }
        if data.nrows() == 0 {
            return Err(Error::InvalidParameter(
                "scattering matrix needs at least one port".into(),
            ));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidParameter(
                "scattering matrix entries must be finite".into(),
            ));
        }
        Ok(Self { data })
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let n = rows.len();
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: row.len(),
                });
            }
        }
        Self::from_matrix(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    /// Real-valued rows, a convenience for the many closed forms with real entries.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let rows: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            data: DMatrix::identity(n.max(1), n.max(1)),
        }
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    /// Amplitude from input port `j` to output port `i` (0-based).
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<Complex64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.data
    }

    pub fn check_unitary(&self, tol: f64) -> Check {
        let n = self.dim();
        let gram = self.data.adjoint() * &self.data;
        let dev = max_abs(&(gram - DMatrix::<Complex64>::identity(n, n)));
        Check::new(dev, tol)
    }

    pub fn check_reciprocal(&self, tol: f64) -> Check {
        let dev = max_abs(&(&self.data - self.data.transpose()));
        Check::new(dev, tol)
    }

    /// Entry `(i, j)` must depend only on `(i - j) mod N`.
    pub fn check_circulant(&self, tol: f64) -> Check {
        let n = self.dim();
        let mut dev: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let k = (i + n - j) % n;
                dev = dev.max((self.data[(i, j)] - self.data[(k, 0)]).norm());
            }
        }
        Check::new(dev, tol)
    }

    /// Per port, whether the back-reflection amplitude vanishes.
    pub fn feed_forward_ports(&self, tol: f64) -> Vec<bool> {
        (0..self.dim())
            .map(|p| self.data[(p, p)].norm() <= tol)
            .collect()
    }

    /// Feed-forward in the beam-splitter sense: no amplitude couples any two
    /// ports of `side` (including a port to itself), so light entering that
    /// side can only leave from the other one.
    pub fn check_feed_forward_side(&self, side: &[usize], tol: f64) -> Result<Check> {
        let mut dev: f64 = 0.0;
        for &i in side {
            self.check_port(i)?;
            for &j in side {
                dev = dev.max(self.data[(i, j)].norm());
            }
        }
        Ok(Check::new(dev, tol))
    }

    pub fn symmetry_report(&self, tol: f64) -> SymmetryReport {
        SymmetryReport {
            unitary: self.check_unitary(tol),
            reciprocal: self.check_reciprocal(tol),
            circulant: self.check_circulant(tol),
            feed_forward: self.feed_forward_ports(tol),
        }
    }

    /// Places an external phase shifter `e^{i phases[k]}` on every port, so
    /// entry `(i, j)` picks up `e^{i(phases[i] + phases[j])}`.
    pub fn dress_phases(&self, phases: &[f64]) -> Result<Self> {
        self.check_len(phases.len())?;
        let d: Vec<Complex64> = phases.iter().map(|&p| Complex64::cis(p)).collect();
        let data = DMatrix::from_fn(self.dim(), self.dim(), |i, j| {
            d[i] * self.data[(i, j)] * d[j]
        });
        Ok(Self { data })
    }

    /// Relabels ports: old port `k` becomes port `perm[k]`. Equivalent to
    /// `P S Pᵀ` for the permutation matrix `P`.
    pub fn permute_ports(&self, perm: &[usize]) -> Result<Self> {
        self.check_len(perm.len())?;
        let n = self.dim();
        let mut seen = vec![false; n];
        for &p in perm {
            if p >= n {
                return Err(Error::InvalidPermutation(format!(
                    "target {p} out of range for {n} ports"
                )));
            }
            if std::mem::replace(&mut seen[p], true) {
                return Err(Error::InvalidPermutation(format!("target {p} repeated")));
            }
        }
        let mut data = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                data[(perm[i], perm[j])] = self.data[(i, j)];
            }
        }
        Ok(Self { data })
    }

    /// Output amplitudes for the given input amplitudes.
    pub fn apply(&self, input: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_len(input.len())?;
        let n = self.dim();
        Ok((0..n)
            .map(|i| (0..n).map(|j| self.data[(i, j)] * input[j]).sum())
            .collect())
    }

    /// Largest entrywise difference.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_len(other.dim())?;
        Ok(max_abs(&(&self.data - &other.data)))
    }

    /// Largest entrywise difference after rotating `self` by the global phase
    /// that aligns its largest-magnitude entry with the same entry of `other`.
    pub fn max_abs_diff_up_to_phase(&self, other: &Self) -> Result<f64> {
        self.check_len(other.dim())?;
        let (idx, _) = self
            .data
            .iter()
            .enumerate()
            .fold((0, -1.0), |best, (k, z)| {
                if z.norm() > best.1 {
                    (k, z.norm())
                } else {
                    best
                }
            });
        let a = self.data.as_slice()[idx];
        let b = other.data.as_slice()[idx];
        let rot = if a.norm() == 0.0 || b.norm() == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::cis(b.arg() - a.arg())
        };
        Ok(max_abs(&(self.data.map(|z| z * rot) - &other.data)))
    }

    /// Text form: the port count, then one line per row of `re,im` tokens.
    /// Values carry 17 significant digits and decode to the same bits.
    pub fn to_text(&self) -> String {
        let n = self.dim();
        let mut out = format!("{n}\n");
        for i in 0..n {
            for j in 0..n {
                if j > 0 {
                    out.push(' ');
                }
                let z = self.data[(i, j)];
                let _ = write!(out, "{:.16e},{:.16e}", z.re, z.im);
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut tokens = text.split_whitespace();
        let n: usize = tokens
            .next()
            .ok_or_else(|| Error::Parse("empty matrix text".into()))?
            .parse()
            .map_err(|e| Error::Parse(format!("bad port count: {e}")))?;
        if n == 0 || n > MAX_TEXT_DIM {
            return Err(Error::Parse(format!(
                "port count {n} outside 1..={MAX_TEXT_DIM}"
            )));
        }
        let entries: Vec<&str> = tokens.collect();
        if entries.len() != n * n {
            return Err(Error::Parse(format!(
                "expected {} entries for {n} ports, found {}",
                n * n,
                entries.len()
            )));
        }
        let values = entries
            .iter()
            .map(|tok| parse_complex_token(tok))
            .collect::<Result<Vec<_>>>()?;
        Self::from_matrix(DMatrix::from_row_slice(n, n, &values))
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: len,
            });
        }
        Ok(())
    }

    fn check_port(&self, p: usize) -> Result<()> {
        if p >= self.dim() {
            return Err(Error::InvalidParameter(format!(
                "port {p} out of range for {} ports",
                self.dim()
            )));
        }
        Ok(())
    }
}

impl FromStr for ScatteringMatrix {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::from_text(s)
    }
}

fn parse_complex_token(tok: &str) -> Result<Complex64> {
    let (re, im) = tok
        .split_once(',')
        .ok_or_else(|| Error::Parse(format!("entry {tok:?} is not a re,im pair")))?;
    let parse = |s: &str| -> Result<f64> {
        let v: f64 = s
            .parse()
            .map_err(|e| Error::Parse(format!("bad number {s:?}: {e}")))?;
        if !v.is_finite() {
            return Err(Error::Parse(format!("non-finite number {s:?}")));
        }
        Ok(v)
    };
    Ok(Complex64::new(parse(re)?, parse(im)?))
}

pub(crate) fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}
