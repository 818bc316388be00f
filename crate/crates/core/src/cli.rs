//! Argument parsing and dispatch for the `ycoupler` binary.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::format::{self, sig};
use crate::network::{solve_steady_state, DeviceKind, Netlist};
use crate::quantum::{coincidence_probability_scan, r_mag_grid};
use crate::spectral::{self, linear_grid, sweep_resonator, SpectralArm, SweepMethod};
use crate::verify;

pub const EXIT_OK: i32 = 0;
pub const EXIT_COMPUTE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "ycoupler",
    version,
    about = "Scattering matrices for Y-couplers and multiport networks"
)]
pub struct Cli {
    /// Tolerance for symmetry checks and steady-state residuals.
    #[arg(long, global = true, env = "YCOUPLER_TOL", default_value_t = crate::DEFAULT_TOL)]
    pub tol: f64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build one catalog device and report its symmetries.
    Device(DeviceArgs),
    /// Solve a netlist for its effective scattering matrix.
    Compose {
        #[arg(long)]
        netlist: PathBuf,
    },
    /// Sweep the two-coupler resonator over wavenumber and write CSV.
    Sweep(SweepArgs),
    /// Two-photon coincidence probability against splitter reflectivity, as CSV.
    Hom {
        #[arg(long, default_value_t = 101)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the built-in invariant battery.
    Verify,
}

#[derive(Debug, Args)]
pub struct DeviceArgs {
    /// One of the netlist device types, e.g. symmetric_y, grover, y_pm.
    #[arg(long = "type", value_name = "TYPE")]
    pub kind: String,
    #[arg(long, allow_hyphen_values = true)]
    pub phi: Option<f64>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub x: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub j: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub r_mag: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub arg_r1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub arg_r2: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub arg_t1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub phase: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub t: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub delta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub a_mag: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub r: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Resonator netlist to solve at each point; the arm phases are added to
    /// its first two links. Implies --solver.
    #[arg(long)]
    pub netlist: Option<PathBuf>,
    /// Evaluate with the network solver instead of the closed form.
    #[arg(long)]
    pub solver: bool,
    /// First arm as `n,length` (length in metres).
    #[arg(long, value_parser = parse_arm)]
    pub arm1: SpectralArm,
    #[arg(long, value_parser = parse_arm)]
    pub arm2: SpectralArm,
    /// Smallest wavenumber, rad/m.
    #[arg(long)]
    pub kmin: f64,
    #[arg(long)]
    pub kmax: f64,
    #[arg(long, default_value_t = 1001)]
    pub points: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_arm(s: &str) -> std::result::Result<SpectralArm, String> {
    let (n, l) = s.split_once(',').ok_or("expected n,length")?;
    let n: f64 = n.trim().parse().map_err(|e| format!("index: {e}"))?;
    let l: f64 = l.trim().parse().map_err(|e| format!("length: {e}"))?;
    SpectralArm::new(n, l).map_err(|e| e.to_string())
}

impl DeviceArgs {
    fn to_kind(&self) -> Result<DeviceKind> {
        let mut map = Map::new();
        map.insert("type".into(), Value::String(self.kind.clone()));
        let mut put = |name: &str, v: Option<Value>| {
            if let Some(v) = v {
                map.insert(name.into(), v);
            }
        };
        let num = |v: Option<f64>| v.map(Value::from);
        let int = |v: Option<usize>| v.map(Value::from);
        put("phi", num(self.phi));
        put("d", int(self.d));
        put("x", num(self.x));
        put("n", int(self.n));
        put("j", int(self.j));
        put("r_mag", num(self.r_mag));
        put("arg_r1", num(self.arg_r1));
        put("arg_r2", num(self.arg_r2));
        put("arg_t1", num(self.arg_t1));
        put("phase", num(self.phase));
        put("t", num(self.t));
        put("delta", num(self.delta));
        put("a_mag", num(self.a_mag));
        put("r", num(self.r));
        DeviceKind::from_value(Value::Object(map))
            .map_err(|e| Error::InvalidParameter(format!("device --type {}: {e}", self.kind)))
    }
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                EXIT_USAGE
            } else {
                let _ = write!(out, "{text}");
                EXIT_OK
            };
        }
    };
    match dispatch(&cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_usage() {
                EXIT_USAGE
            } else {
                EXIT_COMPUTE
            }
        }
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<i32> {
    let tol = cli.tol;
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "--tol must be positive, got {tol}"
        )));
    }
    match &cli.command {
        Command::Device(args) => {
            let m = args.to_kind()?.build()?;
            let rep = m.symmetry_report(tol);
            let mut text = format!("matrix {0}x{0}\n", m.dim());
            text += &format::matrix(&m);
            for (name, c) in [
                ("unitary", rep.unitary),
                ("reciprocal", rep.reciprocal),
                ("circulant", rep.circulant),
            ] {
                text += &format!("{name}: {} (deviation {})\n", c.holds, sig(c.deviation, 3));
            }
            let ff: Vec<String> = rep
                .feed_forward
                .iter()
                .enumerate()
                .filter(|(_, &f)| f)
                .map(|(p, _)| (p + 1).to_string())
                .collect();
            text += &format!("feed_forward_ports: [{}]\n", ff.join(", "));
            emit(out, None, &text)?;
        }
        Command::Compose { netlist } => {
            let net = read_netlist(netlist)?;
            let rep = solve_steady_state(&net, tol)?;
            let labels: Vec<String> = net.externals().iter().map(|&p| net.port_label(p)).collect();
            let mut text = format!("externals: {}\n", labels.join(" "));
            text += &format::matrix(&rep.effective);
            text += &format!("condition_estimate: {}\n", sig(rep.condition_estimate, 6));
            text += &format!(
                "roundtrip_spectral_radius: {}\n",
                sig(rep.roundtrip_spectral_radius, 6)
            );
            text += &format!("dark_state_unexcited: {}\n", rep.dark_state_unexcited);
            text += &format!("unitary: {}\n", rep.effective.check_unitary(tol).holds);
            emit(out, None, &text)?;
        }
        Command::Sweep(args) => {
            let grid = linear_grid(args.kmin, args.kmax, args.points)?;
            let net = match &args.netlist {
                Some(path) => Some(read_netlist(path)?),
                None if args.solver => Some(spectral::resonator_netlist(0.0, 0.0)?),
                None => None,
            };
            let method = match &net {
                Some(net) => SweepMethod::Solver(net),
                None => SweepMethod::ClosedForm,
            };
            let sweep = sweep_resonator(args.arm1, args.arm2, &grid, method)?;
            let mut buf = Vec::new();
            spectral::write_csv(&sweep, &mut buf).map_err(io_error)?;
            emit(
                out,
                args.out.as_deref(),
                &String::from_utf8(buf).expect("ascii"),
            )?;
        }
        Command::Hom { points, out: path } => {
            let scan = coincidence_probability_scan(&r_mag_grid(*points)?)?;
            let mut text = String::from("r_mag,probability\n");
            for (r, p) in scan {
                text += &format!(
                    "{},{}\n",
                    sig(r, format::SIG_DIGITS),
                    sig(p, format::SIG_DIGITS)
                );
            }
            emit(out, path.as_deref(), &text)?;
        }
        Command::Verify => {
            let report = verify::run(tol);
            let mut text = String::new();
            for o in &report.outcomes {
                let tag = if o.passed { "PASS" } else { "FAIL" };
                text += &format!("{tag} {}: {}\n", o.name, o.detail);
            }
            text += &format!("{} passed, {} failed\n", report.passed(), report.failed());
            emit(out, None, &text)?;
            if report.failed() > 0 {
                return Ok(EXIT_COMPUTE);
            }
        }
    }
    Ok(EXIT_OK)
}

fn io_error(e: std::io::Error) -> Error {
    Error::InvalidParameter(format!("I/O: {e}"))
}

fn read_netlist(path: &Path) -> Result<Netlist> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::InvalidParameter(format!("cannot read {}: {e}", path.display())))?;
    Netlist::from_json(&text)
}

fn emit(out: &mut dyn Write, path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text)
            .map_err(|e| Error::InvalidParameter(format!("cannot write {}: {e}", p.display()))),
        None => out.write_all(text.as_bytes()).map_err(io_error),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let mut full = vec!["ycoupler"];
        full.extend_from_slice(args);
        let code = run(full, &mut out, &mut err);
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn every_device_type_is_reachable() {
        let params: &[(&str, &[&str])] = &[
            ("symmetric_y", &[]),
            ("symmetric_y_phase", &["--phi", "0.3"]),
            ("grover", &["--d", "5"]),
            ("generalized_grover", &["--phi", "-1"]),
            ("circulant", &["--d", "4", "--x", "-0.5"]),
            ("circulator", &["--n", "4", "--j", "1"]),
            ("beam_splitter", &["--r-mag", "0.6"]),
            ("mirror", &["--phase", "1"]),
            ("asymmetric_y", &["--t", "0.6", "--delta", "0.2"]),
            ("unbiased_y", &["--a-mag", "0.3", "--x", "-0.2"]),
            ("y_pm", &["--r", "-0.333"]),
        ];
        assert_eq!(params.len(), DeviceKind::TYPE_TAGS.len());
        for (kind, extra) in params {
            let mut args = vec!["device", "--type", kind];
            args.extend_from_slice(extra);
            let (code, out, err) = call(&args);
            assert_eq!(code, 0, "{kind}: {err}");
            assert!(out.contains("unitary: true"), "{kind}: {out}");
        }
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(call(&["bogus"]).0, 2);
        assert_eq!(call(&["device", "--type", "laser"]).0, 2);
        assert_eq!(call(&["device", "--type", "mirror", "--d", "3"]).0, 2);
        assert_eq!(call(&["device", "--type", "grover", "--d", "2"]).0, 2);
        assert_eq!(call(&["--tol", "-1", "verify"]).0, 2);
        assert_eq!(call(&["hom", "--points", "0"]).0, 2);
        assert_eq!(call(&["compose", "--netlist", "/nonexistent.json"]).0, 2);
    }

    #[test]
    fn help_goes_to_stdout() {
        let (code, out, _) = call(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("Usage"));
    }

    #[test]
    fn hom_csv() {
        let (code, out, _) = call(&["hom", "--points", "3"]);
        assert_eq!(code, 0);
        assert_eq!(out, "r_mag,probability\n0,1\n0.5,0.25\n1,1\n");
    }
}
