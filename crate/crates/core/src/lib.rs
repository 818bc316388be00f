//! Unitary scattering matrices for Y-couplers and other directionally-unbiased
//! multiports, composition of devices into networks, and the analytic
//! reference results those networks are checked against.
//!
//! Ports are 0-based throughout the library API. Netlist files and the
//! command-line interface number ports from 1.

pub mod catalog;
pub mod cli;
pub mod error;
pub mod format;
pub mod gallery;
pub mod network;
pub mod quantum;
pub mod scattering;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result, Supermode};
pub use network::{iterate_roundtrips, solve_steady_state, Netlist, NetlistSpec};
pub use scattering::{Check, ScatteringMatrix, SymmetryReport, DEFAULT_TOL};
