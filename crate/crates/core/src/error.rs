use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

use crate::network::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid port permutation: {0}")]
    InvalidPermutation(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Parameters sit on a boundary where the device degenerates into a mirror
    /// or a pass-through.
    #[error("degenerate device: {0}")]
    DegenerateDevice(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid netlist:{}", ViolationList(.0))]
    InvalidNetlist(Vec<Violation>),

    /// The feedback system is singular and the input drives the singular
    /// direction, so no steady state exists. Needs a lossy or gain device:
    /// in a lossless network a unit-eigenvalue mode is never driven.
    #[error("dark state excited: feedback system singular (residual {residual:.3e}); {supermode}")]
    DarkStateSingular { residual: f64, supermode: Supermode },

    #[error("ill-conditioned feedback system (condition estimate {condition:.3e}); {supermode}")]
    IllConditioned {
        condition: f64,
        supermode: Supermode,
    },

    #[error(
        "round-trip iteration did not converge after {t_max} bounces (residual internal amplitude {residual:.3e})"
    )]
    NotConverged { t_max: usize, residual: f64 },
}

impl Error {
    /// True for errors caused by malformed requests rather than by the
    /// computation itself.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_)
                | Error::InvalidPermutation(_)
                | Error::DegenerateDevice(_)
                | Error::Parse(_)
                | Error::InvalidNetlist(_)
                | Error::DimensionMismatch { .. }
        )
    }
}

/// Internal supermode of a feedback map, labelled by internal port.
#[derive(Debug, Clone, PartialEq)]
pub struct Supermode {
    pub eigenvalue: Complex64,
    pub components: Vec<(String, Complex64)>,
}

impl fmt::Display for Supermode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "resonant supermode with round-trip eigenvalue {:.6}{:+.6}i over [",
            self.eigenvalue.re, self.eigenvalue.im
        )?;
        for (i, (label, amp)) in self.components.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{label}: {:.4}{:+.4}i", amp.re, amp.im)?;
        }
        write!(f, "]")
    }
}

struct ViolationList<'a>(&'a [Violation]);

impl fmt::Display for ViolationList<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in self.0 {
            write!(f, "\n  - {v}")?;
        }
        Ok(())
    }
}
