//! Networks of scattering devices joined by reciprocal, phase-carrying links.
//!
//! Every device port carries an incoming and an outgoing mode. Ports listed as
//! externals stay open; every other port must be joined to exactly one other
//! port by a link, which delivers the outgoing amplitude of one end into the
//! incoming mode of the other with factor `e^{i phase}`, the same in both
//! directions.
//!
//! With all device matrices stacked into a block-diagonal `S`, partitioned into
//! external (`e`) and internal (`i`) ports, and the link map `C` over internal
//! ports, the steady state is
//!
//! ```text
//! S_eff = S_ee + S_ei C (I - S_ii C)^{-1} S_ie
//! ```
//!
//! [`solve_steady_state`] evaluates this with a linear solve.
//! [`iterate_roundtrips`] reaches the same result by propagating amplitude
//! bounce by bounce and summing what leaks out, and serves as its oracle.

use std::collections::HashMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::catalog::{self, AsymmetricParams, BeamSplitterParams, CirculantParams, UnbiasedParams};
use crate::error::{Error, Result, Supermode};
use crate::gallery;
use crate::scattering::{max_abs, ScatteringMatrix};

/// Condition estimates above this are treated as numerically singular.
pub const MAX_CONDITION: f64 = 1e12;
/// Relative singular-value cutoff for the least-squares fallback.
const SVD_CUTOFF: f64 = 1e-12;
/// Below this relative singular value the feedback system counts as exactly
/// singular rather than merely ill-conditioned.
const SINGULAR_RTOL: f64 = 1e-14;

/// Device descriptor as it appears in a netlist file, e.g.
/// `{"id": "Y1", "type": "y_pm", "r": 0.3}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DeviceKind {
    SymmetricY {},
    SymmetricYPhase {
        phi: f64,
    },
    Grover {
        d: usize,
    },
    GeneralizedGrover {
        phi: f64,
    },
    Circulant {
        d: usize,
        x: f64,
    },
    Circulator {
        n: usize,
        j: usize,
    },
    BeamSplitter {
        r_mag: f64,
        #[serde(default)]
        arg_r1: f64,
        #[serde(default)]
        arg_r2: f64,
        #[serde(default)]
        arg_t1: f64,
    },
    Mirror {
        #[serde(default)]
        phase: f64,
    },
    AsymmetricY {
        t: f64,
        #[serde(default)]
        delta: f64,
    },
    UnbiasedY {
        a_mag: f64,
        x: f64,
    },
    YPm {
        r: f64,
    },
}

impl DeviceKind {
    pub fn build(&self) -> Result<ScatteringMatrix> {
        match *self {
            DeviceKind::SymmetricY {} => Ok(catalog::symmetric_y()),
            DeviceKind::SymmetricYPhase { phi } => catalog::symmetric_y_phase(phi),
            DeviceKind::Grover { d } => catalog::grover(d),
            DeviceKind::GeneralizedGrover { phi } => gallery::generalized_grover(phi),
            DeviceKind::Circulant { d, x } => catalog::circulant_family(CirculantParams { d, x }),
            DeviceKind::Circulator { n, j } => catalog::circulator(n, j),
            DeviceKind::BeamSplitter {
                r_mag,
                arg_r1,
                arg_r2,
                arg_t1,
            } => catalog::beam_splitter(BeamSplitterParams {
                r_mag,
                arg_r1,
                arg_r2,
                arg_t1,
            }),
            DeviceKind::Mirror { phase } => catalog::mirror(phase),
            DeviceKind::AsymmetricY { t, delta } => {
                catalog::asymmetric_y(AsymmetricParams { t, delta })
            }
            DeviceKind::UnbiasedY { a_mag, x } => catalog::unbiased_y(UnbiasedParams { a_mag, x }),
            DeviceKind::YPm { r } => catalog::y_pm(r),
        }
    }

    /// Type tags accepted in netlists and by `device --type`.
    pub const TYPE_TAGS: &'static [&'static str] = &[
        "symmetric_y",
        "symmetric_y_phase",
        "grover",
        "generalized_grover",
        "circulant",
        "circulator",
        "beam_splitter",
        "mirror",
        "asymmetric_y",
        "unbiased_y",
        "y_pm",
    ];
}

impl DeviceKind {
    /// Strict decoding: besides the usual type checks, any key the chosen
    /// device type does not use is an error.
    pub fn from_value(value: Value) -> std::result::Result<Self, String> {
        let Value::Object(given) = &value else {
            return Err("device must be a JSON object".into());
        };
        let given_keys: Vec<String> = given.keys().cloned().collect();
        let kind: DeviceKind = serde_json::from_value(value).map_err(|e| e.to_string())?;
        let Value::Object(known) = serde_json::to_value(&kind).map_err(|e| e.to_string())? else {
            unreachable!("struct variants serialize to objects");
        };
        match given_keys.iter().find(|k| !known.contains_key(k.as_str())) {
            Some(k) => Err(format!(
                "unknown field `{k}` for device type `{}`",
                known["type"].as_str().unwrap_or("?")
            )),
            None => Ok(kind),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviceSpec {
    pub id: String,
    pub kind: DeviceKind,
}

impl Serialize for DeviceSpec {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        let mut v = serde_json::to_value(&self.kind).map_err(serde::ser::Error::custom)?;
        if let Value::Object(map) = &mut v {
            map.insert("id".into(), Value::String(self.id.clone()));
        }
        v.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DeviceSpec {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let mut v = Value::deserialize(deserializer)?;
        let id = match v.as_object_mut().and_then(|m| m.remove("id")) {
            Some(Value::String(id)) => id,
            Some(_) => return Err(D::Error::custom("device `id` must be a string")),
            None => return Err(D::Error::missing_field("id")),
        };
        let kind = DeviceKind::from_value(v)
            .map_err(|e| D::Error::custom(format!("device {id:?}: {e}")))?;
        Ok(DeviceSpec { id, kind })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    /// Two `"id.port"` endpoints, ports numbered from 1.
    pub endpoints: [String; 2],
    #[serde(default)]
    pub phase: f64,
}

/// Netlist file contents before resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetlistSpec {
    pub devices: Vec<DeviceSpec>,
    #[serde(default)]
    pub links: Vec<LinkSpec>,
    pub externals: Vec<String>,
}

/// A 0-based port of a device in a resolved netlist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PortRef {
    pub device: usize,
    pub port: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub a: PortRef,
    pub b: PortRef,
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Device {
    pub id: String,
    pub matrix: ScatteringMatrix,
}

/// One structural problem found while checking a netlist.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    DuplicateDevice(String),
    BadDevice { id: String, reason: String },
    BadEndpoint { endpoint: String, reason: String },
    UnknownDevice { endpoint: String },
    PortOutOfRange { endpoint: String, ports: usize },
    PortReused { endpoint: String },
    PortUnaccounted { endpoint: String },
    SelfLink { endpoint: String },
    NonFinitePhase { link: usize },
    NoExternals,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateDevice(id) => write!(f, "device id {id:?} declared more than once"),
            Violation::BadDevice { id, reason } => write!(f, "device {id:?}: {reason}"),
            Violation::BadEndpoint { endpoint, reason } => {
                write!(f, "endpoint {endpoint:?}: {reason}")
            }
            Violation::UnknownDevice { endpoint } => {
                write!(f, "endpoint {endpoint:?} names an unknown device")
            }
            Violation::PortOutOfRange { endpoint, ports } => {
                write!(
                    f,
                    "endpoint {endpoint:?} out of range (device has {ports} ports)"
                )
            }
            Violation::PortReused { endpoint } => write!(f, "port {endpoint} used more than once"),
            Violation::PortUnaccounted { endpoint } => {
                write!(f, "port {endpoint} is neither linked nor external")
            }
            Violation::SelfLink { endpoint } => write!(f, "port {endpoint} linked to itself"),
            Violation::NonFinitePhase { link } => {
                write!(f, "link {} has a non-finite phase", link + 1)
            }
            Violation::NoExternals => write!(f, "netlist has no external ports"),
        }
    }
}

/// Splits `"id.port"` at the last dot; ports are 1-based.
pub fn parse_endpoint(s: &str) -> std::result::Result<(&str, usize), String> {
    let (id, port) = s
        .rsplit_once('.')
        .ok_or_else(|| "expected <device>.<port>".to_string())?;
    if id.is_empty() {
        return Err("empty device id".into());
    }
    let port: usize = port.parse().map_err(|e| format!("bad port number: {e}"))?;
    if port == 0 {
        return Err("ports are numbered from 1".into());
    }
    Ok((id, port))
}

impl NetlistSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("netlist: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("netlist serializes")
    }

    /// Every structural problem in the netlist; empty when it can be built.
    pub fn validate(&self) -> Vec<Violation> {
        self.resolve().err().unwrap_or_default()
    }

    pub fn build(&self) -> Result<Netlist> {
        let (devices, links, externals) = self.resolve().map_err(Error::InvalidNetlist)?;
        Netlist::new(devices, links, externals)
    }

    #[allow(clippy::type_complexity)]
    fn resolve(
        &self,
    ) -> std::result::Result<(Vec<Device>, Vec<Link>, Vec<PortRef>), Vec<Violation>> {
        let mut violations = Vec::new();
        let mut index: HashMap<&str, usize> = HashMap::new();
        let mut devices = Vec::with_capacity(self.devices.len());
        let mut port_counts = Vec::with_capacity(self.devices.len());
        for spec in &self.devices {
            if index.contains_key(spec.id.as_str()) {
                violations.push(Violation::DuplicateDevice(spec.id.clone()));
                continue;
            }
            index.insert(spec.id.as_str(), devices.len());
            match spec.kind.build() {
                Ok(matrix) => port_counts.push(matrix.dim()),
                Err(e) => {
                    violations.push(Violation::BadDevice {
                        id: spec.id.clone(),
                        reason: e.to_string(),
                    });
                    port_counts.push(0);
                }
            }
            devices.push(spec);
        }

        let resolve_endpoint =
            |endpoint: &str, violations: &mut Vec<Violation>| -> Option<PortRef> {
                let (id, port) = match parse_endpoint(endpoint) {
                    Ok(v) => v,
                    Err(reason) => {
                        violations.push(Violation::BadEndpoint {
                            endpoint: endpoint.to_string(),
                            reason,
                        });
                        return None;
                    }
                };
                let Some(&device) = index.get(id) else {
                    violations.push(Violation::UnknownDevice {
                        endpoint: endpoint.to_string(),
                    });
                    return None;
                };
                let ports = port_counts[device];
                if ports == 0 {
                    // Device already reported as bad.
                    return None;
                }
                if port > ports {
                    violations.push(Violation::PortOutOfRange {
                        endpoint: endpoint.to_string(),
                        ports,
                    });
                    return None;
                }
                Some(PortRef {
                    device,
                    port: port - 1,
                })
            };

        let mut links = Vec::with_capacity(self.links.len());
        for link in &self.links {
            let a = resolve_endpoint(&link.endpoints[0], &mut violations);
            let b = resolve_endpoint(&link.endpoints[1], &mut violations);
            if let (Some(a), Some(b)) = (a, b) {
                links.push(Link {
                    a,
                    b,
                    phase: link.phase,
                });
            }
        }
        let mut externals = Vec::with_capacity(self.externals.len());
        for e in &self.externals {
            if let Some(p) = resolve_endpoint(e, &mut violations) {
                externals.push(p);
            }
        }
        if !violations.is_empty() {
            return Err(violations);
        }
        let devices: Vec<Device> = devices
            .into_iter()
            .map(|spec| Device {
                id: spec.id.clone(),
                matrix: spec.kind.build().expect("validated above"),
            })
            .collect();
        let structural = structural_violations(&devices, &links, &externals);
        if structural.is_empty() {
            Ok((devices, links, externals))
        } else {
            Err(structural)
        }
    }
}

fn label(devices: &[Device], p: PortRef) -> String {
    format!("{}.{}", devices[p.device].id, p.port + 1)
}

fn structural_violations(
    devices: &[Device],
    links: &[Link],
    externals: &[PortRef],
) -> Vec<Violation> {
    let mut violations = Vec::new();
    let mut seen_ids = HashMap::new();
    for d in devices {
        if seen_ids.insert(d.id.as_str(), ()).is_some() {
            violations.push(Violation::DuplicateDevice(d.id.clone()));
        }
    }
    let in_range =
        |p: &PortRef| p.device < devices.len() && p.port < devices[p.device].matrix.dim();
    let mut uses: HashMap<PortRef, usize> = HashMap::new();
    for (k, link) in links.iter().enumerate() {
        if !link.phase.is_finite() {
            violations.push(Violation::NonFinitePhase { link: k });
        }
        if link.a == link.b && in_range(&link.a) {
            violations.push(Violation::SelfLink {
                endpoint: label(devices, link.a),
            });
        }
        for p in [link.a, link.b] {
            *uses.entry(p).or_default() += 1;
        }
    }
    for p in externals {
        *uses.entry(*p).or_default() += 1;
    }
    let mut reported: Vec<PortRef> = Vec::new();
    for p in uses.keys() {
        if !in_range(p) {
            let ports = devices.get(p.device).map_or(0, |d| d.matrix.dim());
            violations.push(Violation::PortOutOfRange {
                endpoint: format!("#{}.{}", p.device, p.port + 1),
                ports,
            });
        }
    }
    for (device_idx, d) in devices.iter().enumerate() {
        for port in 0..d.matrix.dim() {
            let p = PortRef {
                device: device_idx,
                port,
            };
            match uses.get(&p).copied().unwrap_or(0) {
                0 => violations.push(Violation::PortUnaccounted {
                    endpoint: label(devices, p),
                }),
                1 => {}
                _ => reported.push(p),
            }
        }
    }
    reported.sort();
    for p in reported {
        violations.push(Violation::PortReused {
            endpoint: label(devices, p),
        });
    }
    if externals.is_empty() {
        violations.push(Violation::NoExternals);
    }
    violations
}

/// A validated network. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Netlist {
    devices: Vec<Device>,
    links: Vec<Link>,
    externals: Vec<PortRef>,
    offsets: Vec<usize>,
}

impl Netlist {
    pub fn new(devices: Vec<Device>, links: Vec<Link>, externals: Vec<PortRef>) -> Result<Self> {
        let violations = structural_violations(&devices, &links, &externals);
        if !violations.is_empty() {
            return Err(Error::InvalidNetlist(violations));
        }
        let mut offsets = Vec::with_capacity(devices.len());
        let mut total = 0;
        for d in &devices {
            offsets.push(total);
            total += d.matrix.dim();
        }
        Ok(Self {
            devices,
            links,
            externals,
            offsets,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        NetlistSpec::from_json(text)?.build()
    }

    pub fn devices(&self) -> &[Device] {
        &self.devices
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn externals(&self) -> &[PortRef] {
        &self.externals
    }

    pub fn port_label(&self, p: PortRef) -> String {
        label(&self.devices, p)
    }

    /// Copy of this netlist with the phase of link `index` replaced.
    pub fn with_link_phase(&self, index: usize, phase: f64) -> Result<Self> {
        if index >= self.links.len() {
            return Err(Error::InvalidParameter(format!(
                "link {} does not exist ({} links)",
                index + 1,
                self.links.len()
            )));
        }
        if !phase.is_finite() {
            return Err(Error::InvalidParameter("link phase must be finite".into()));
        }
        let mut out = self.clone();
        out.links[index].phase = phase;
        Ok(out)
    }

    fn global(&self, p: PortRef) -> usize {
        self.offsets[p.device] + p.port
    }

    fn partition(&self) -> Partition {
        let total: usize = self.devices.iter().map(|d| d.matrix.dim()).sum();
        let mut s = DMatrix::<Complex64>::zeros(total, total);
        for (d, off) in self.devices.iter().zip(&self.offsets) {
            let n = d.matrix.dim();
            s.view_mut((*off, *off), (n, n))
                .copy_from(d.matrix.as_matrix());
        }
        let ext: Vec<usize> = self.externals.iter().map(|&p| self.global(p)).collect();
        let mut is_ext = vec![false; total];
        for &g in &ext {
            is_ext[g] = true;
        }
        let int: Vec<usize> = (0..total).filter(|g| !is_ext[*g]).collect();
        let mut int_pos = vec![usize::MAX; total];
        for (k, &g) in int.iter().enumerate() {
            int_pos[g] = k;
        }
        let mut c = DMatrix::<Complex64>::zeros(int.len(), int.len());
        for link in &self.links {
            let (a, b) = (int_pos[self.global(link.a)], int_pos[self.global(link.b)]);
            let f = Complex64::cis(link.phase);
            c[(a, b)] = f;
            c[(b, a)] = f;
        }
        let pick = |rows: &[usize], cols: &[usize]| {
            DMatrix::from_fn(rows.len(), cols.len(), |i, j| s[(rows[i], cols[j])])
        };
        let int_ports = int
            .iter()
            .map(|&g| {
                let device = self.offsets.partition_point(|&o| o <= g) - 1;
                PortRef {
                    device,
                    port: g - self.offsets[device],
                }
            })
            .collect();
        Partition {
            s_ee: pick(&ext, &ext),
            s_ei: pick(&ext, &int),
            s_ie: pick(&int, &ext),
            s_ii: pick(&int, &int),
            c,
            int_ports,
        }
    }

    /// Largest eigenvalue magnitude of the internal round-trip map `S_ii C`.
    pub fn roundtrip_spectral_radius(&self) -> f64 {
        let part = self.partition();
        spectral_radius(&(&part.s_ii * &part.c))
    }
}

struct Partition {
    s_ee: DMatrix<Complex64>,
    s_ei: DMatrix<Complex64>,
    s_ie: DMatrix<Complex64>,
    s_ii: DMatrix<Complex64>,
    c: DMatrix<Complex64>,
    int_ports: Vec<PortRef>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    /// Scattering matrix over the externals, in declared order.
    pub effective: ScatteringMatrix,
    /// 1-norm condition estimate of `I - S_ii C`; infinite when singular.
    pub condition_estimate: f64,
    pub roundtrip_spectral_radius: f64,
    /// The feedback system was singular but the input never reaches the
    /// singular supermode, so the least-squares steady state was accepted.
    pub dark_state_unexcited: bool,
}

pub fn solve_steady_state(net: &Netlist, tol: f64) -> Result<SolveReport> {
    let part = net.partition();
    let n_int = part.int_ports.len();
    if n_int == 0 {
        return Ok(SolveReport {
            effective: ScatteringMatrix::from_matrix(part.s_ee)?,
            condition_estimate: 1.0,
            roundtrip_spectral_radius: 0.0,
            dark_state_unexcited: false,
        });
    }
    let feedback = &part.s_ii * &part.c;
    let radius = spectral_radius(&feedback);
    let system = DMatrix::<Complex64>::identity(n_int, n_int) - &feedback;
    let rhs = &part.s_ie;

    let lu = system.clone().lu();
    let condition = if lu.is_invertible() {
        match system.adjoint().lu() {
            adj if adj.is_invertible() => norm1(&system) * inverse_norm1_estimate(&lu, &adj),
            _ => f64::INFINITY,
        }
    } else {
        f64::INFINITY
    };

    let (internal, dark_state_unexcited) = if condition <= MAX_CONDITION {
        let x = lu.solve(rhs).ok_or_else(|| Error::IllConditioned {
            condition,
            supermode: resonant_supermode(&feedback, &part.int_ports, net),
        })?;
        (x, false)
    } else {
        let svd = system.clone().svd(true, true);
        let sigma_max = svd.singular_values.max();
        let sigma_min = svd.singular_values.min();
        let x = svd
            .solve(rhs, SVD_CUTOFF * sigma_max)
            .map_err(|e| Error::IllConditioned {
                condition,
                supermode: Supermode {
                    eigenvalue: Complex64::new(f64::NAN, f64::NAN),
                    components: vec![(e.to_string(), Complex64::new(0.0, 0.0))],
                },
            })?;
        let residual = max_abs(&(&system * &x - rhs));
        if residual > tol {
            let supermode = resonant_supermode(&feedback, &part.int_ports, net);
            return Err(if sigma_min <= SINGULAR_RTOL * sigma_max {
                Error::DarkStateSingular {
                    residual,
                    supermode,
                }
            } else {
                Error::IllConditioned {
                    condition,
                    supermode,
                }
            });
        }
        (x, true)
    };

    let effective = &part.s_ee + &part.s_ei * &part.c * internal;
    Ok(SolveReport {
        effective: ScatteringMatrix::from_matrix(effective)?,
        condition_estimate: condition,
        roundtrip_spectral_radius: radius,
        dark_state_unexcited,
    })
}

/// Partial sums of the bounce-by-bounce propagation.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundTrips {
    /// Accumulated output amplitude at each external port.
    pub amplitudes: Vec<Complex64>,
    /// Number of feedback passes applied after the initial scattering.
    pub bounces: usize,
    pub converged: bool,
    /// Euclidean norm of the amplitude still inside the network.
    pub residual: f64,
    /// Upper bound on the Euclidean distance from `amplitudes` to the steady
    /// state: `||S_ei C|| residual / sigma_min(I - S_ii C)`. Infinite when the
    /// feedback system is singular.
    pub tail_bound: f64,
}

/// Launches unit amplitude into external port `input` (0-based, in declared
/// order) and follows it through up to `t_max` feedback passes. Stops once the
/// amplitude left inside the network drops below `tol`.
pub fn iterate_roundtrips(
    net: &Netlist,
    input: usize,
    t_max: usize,
    tol: f64,
) -> Result<RoundTrips> {
    if input >= net.externals.len() {
        return Err(Error::InvalidParameter(format!(
            "input port {} out of range ({} externals)",
            input + 1,
            net.externals.len()
        )));
    }
    if t_max == 0 {
        return Err(Error::InvalidParameter("t_max must be at least 1".into()));
    }
    let part = net.partition();
    propagate(&part, input, t_max, tol, || {
        spectral_radius(&(&part.s_ii * &part.c))
    })
}

/// Column-by-column [`iterate_roundtrips`], assembled into a matrix.
pub fn iterate_matrix(
    net: &Netlist,
    t_max: usize,
    tol: f64,
) -> Result<(ScatteringMatrix, Vec<RoundTrips>)> {
    let part = net.partition();
    let n = net.externals.len();
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    let mut runs = Vec::with_capacity(n);
    for j in 0..n {
        let run = propagate(&part, j, t_max.max(1), tol, || {
            spectral_radius(&(&part.s_ii * &part.c))
        })?;
        for i in 0..n {
            m[(i, j)] = run.amplitudes[i];
        }
        runs.push(run);
    }
    Ok((ScatteringMatrix::from_matrix(m)?, runs))
}

fn propagate(
    part: &Partition,
    input: usize,
    t_max: usize,
    tol: f64,
    radius: impl Fn() -> f64,
) -> Result<RoundTrips> {
    let mut out: DVector<Complex64> = part.s_ee.column(input).into_owned();
    let mut inside: DVector<Complex64> = part.s_ie.column(input).into_owned();
    let mut bounces = 0;
    let mut residual = inside.norm();
    while residual >= tol && bounces < t_max {
        let arriving = &part.c * &inside;
        out += &part.s_ei * &arriving;
        inside = &part.s_ii * &arriving;
        residual = inside.norm();
        bounces += 1;
    }
    let converged = residual < tol;
    if !converged && radius() >= 1.0 - 1e-9 {
        return Err(Error::NotConverged { t_max, residual });
    }
    // The leaks of later passes add coherently, so the amplitude left inside
    // is scaled by the resolvent rather than bounding the tail by itself.
    let tail_bound = if residual == 0.0 {
        0.0
    } else {
        let n = part.s_ii.nrows();
        let leak = &part.s_ei * &part.c;
        let system = DMatrix::<Complex64>::identity(n, n) - &part.s_ii * &part.c;
        let sigma_min = system.singular_values().min();
        let leak_norm = leak.singular_values().max();
        if sigma_min > 0.0 {
            leak_norm * residual / sigma_min
        } else {
            f64::INFINITY
        }
    };
    Ok(RoundTrips {
        amplitudes: out.iter().copied().collect(),
        bounces,
        converged,
        residual,
        tail_bound,
    })
}

fn norm1(m: &DMatrix<Complex64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Hager's estimate of `||A^{-1}||_1` from solves with `A` and `A^H`.
fn inverse_norm1_estimate(
    lu: &nalgebra::LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>,
    adj: &nalgebra::LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>,
) -> f64 {
    let n = lu.l().nrows();
    let mut x = DVector::from_element(n, Complex64::new(1.0 / n as f64, 0.0));
    let mut estimate = 0.0;
    for _ in 0..5 {
        let Some(y) = lu.solve(&x) else {
            return f64::INFINITY;
        };
        estimate = y.iter().map(|z| z.norm()).sum::<f64>();
        let xi = y.map(|z| {
            if z.norm() == 0.0 {
                Complex64::new(1.0, 0.0)
            } else {
                z / z.norm()
            }
        });
        let Some(z) = adj.solve(&xi) else {
            return f64::INFINITY;
        };
        let (j, zmax) = z.iter().enumerate().fold((0, 0.0), |best, (k, v)| {
            if v.norm() > best.1 {
                (k, v.norm())
            } else {
                best
            }
        });
        let zx = z.dotc(&x).re;
        if zmax <= zx {
            break;
        }
        x = DVector::zeros(n);
        x[j] = Complex64::new(1.0, 0.0);
    }
    estimate
}

fn eigenvalues(m: &DMatrix<Complex64>) -> Vec<Complex64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let t = m.clone().schur().unpack().1;
    (0..t.nrows()).map(|k| t[(k, k)]).collect()
}

fn spectral_radius(m: &DMatrix<Complex64>) -> f64 {
    eigenvalues(m).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Eigenvector of the round-trip map whose eigenvalue lies closest to 1.
fn resonant_supermode(
    feedback: &DMatrix<Complex64>,
    ports: &[PortRef],
    net: &Netlist,
) -> Supermode {
    let one = Complex64::new(1.0, 0.0);
    let eigenvalue = eigenvalues(feedback)
        .into_iter()
        .min_by(|a, b| (a - one).norm().total_cmp(&(b - one).norm()))
        .unwrap_or(one);
    let n = feedback.nrows();
    let shifted = feedback - DMatrix::<Complex64>::identity(n, n) * eigenvalue;
    let svd = shifted.svd(false, true);
    let k = svd.singular_values.imin();
    let v_t = svd.v_t.expect("requested");
    let mut v: Vec<Complex64> = v_t.row(k).iter().map(|z| z.conj()).collect();
    // Fix the free phase: largest component real and positive.
    if let Some(big) = v
        .iter()
        .copied()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
    {
        if big.norm() > 0.0 {
            let rot = big.conj() / big.norm();
            v.iter_mut().for_each(|z| *z *= rot);
        }
    }
    Supermode {
        eigenvalue,
        components: ports.iter().map(|&p| net.port_label(p)).zip(v).collect(),
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::catalog::symmetric_y;

    fn y(id: &str) -> Device {
        Device {
            id: id.into(),
            matrix: symmetric_y(),
        }
    }

    fn p(device: usize, port: usize) -> PortRef {
        PortRef {
            device,
            port: port - 1,
        }
    }

    fn loop_mirror(phase: f64) -> Netlist {
        Netlist::new(
            vec![y("Y")],
            vec![Link {
                a: p(0, 2),
                b: p(0, 3),
                phase,
            }],
            vec![p(0, 1)],
        )
        .unwrap()
    }

    fn michelson(mirror_phase: f64, link_phase: f64) -> Netlist {
        let m = Device {
            id: "M".into(),
            matrix: catalog::mirror(mirror_phase).unwrap(),
        };
        Netlist::new(
            vec![y("Y"), m],
            vec![Link {
                a: p(0, 1),
                b: p(1, 1),
                phase: link_phase,
            }],
            vec![p(0, 2), p(0, 3)],
        )
        .unwrap()
    }

    const FIG_2A: &str = r#"{
        "devices": [{"id": "A", "type": "symmetric_y"}, {"id": "B", "type": "symmetric_y"}],
        "links": [{"endpoints": ["A.1", "B.1"], "phase": 0.0}],
        "externals": ["A.2", "A.3", "B.2", "B.3"]
    }"#;

    #[test]
    fn endpoint_parsing() {
        assert_eq!(parse_endpoint("Y1.3"), Ok(("Y1", 3)));
        assert_eq!(parse_endpoint("a.b.2"), Ok(("a.b", 2)));
        assert!(parse_endpoint("Y1").is_err());
        assert!(parse_endpoint(".1").is_err());
        assert!(parse_endpoint("Y.0").is_err());
        assert!(parse_endpoint("Y.-1").is_err());
        assert!(parse_endpoint("Y.x").is_err());
    }

    #[test]
    fn well_formed_netlist_validates_clean() {
        let spec = NetlistSpec::from_json(FIG_2A).unwrap();
        assert!(spec.validate().is_empty());
    }

    #[test]
    fn port_linked_twice_is_reported() {
        let mut spec = NetlistSpec::from_json(FIG_2A).unwrap();
        spec.links.push(LinkSpec {
            endpoints: ["A.1".into(), "B.2".into()],
            phase: 0.0,
        });
        let v = spec.validate();
        assert!(
            v.contains(&Violation::PortReused {
                endpoint: "A.1".into()
            }),
            "{v:?}"
        );
        assert!(
            v.contains(&Violation::PortReused {
                endpoint: "B.2".into()
            }),
            "{v:?}"
        );
    }

    #[test]
    fn unknown_device_is_reported() {
        let mut spec = NetlistSpec::from_json(FIG_2A).unwrap();
        spec.links[0].endpoints[1] = "C.1".into();
        let v = spec.validate();
        assert!(
            v.contains(&Violation::UnknownDevice {
                endpoint: "C.1".into()
            }),
            "{v:?}"
        );
    }

    #[test]
    fn other_structural_problems() {
        let mut spec = NetlistSpec::from_json(FIG_2A).unwrap();
        spec.externals.pop();
        assert!(spec.validate().contains(&Violation::PortUnaccounted {
            endpoint: "B.3".into()
        }));

        let mut spec = NetlistSpec::from_json(FIG_2A).unwrap();
        spec.externals[0] = "A.4".into();
        assert!(matches!(
            spec.validate()[0],
            Violation::PortOutOfRange { ports: 3, .. }
        ));

        let mut spec = NetlistSpec::from_json(FIG_2A).unwrap();
        spec.devices[1].id = "A".into();
        assert!(spec
            .validate()
            .contains(&Violation::DuplicateDevice("A".into())));

        let spec = NetlistSpec::from_json(
            r#"{"devices":[{"id":"M","type":"mirror"}],"links":[{"endpoints":["M.1","M.1"]}],"externals":[]}"#,
        )
        .unwrap();
        let v = spec.validate();
        assert!(v.contains(&Violation::SelfLink {
            endpoint: "M.1".into()
        }));
        assert!(v.contains(&Violation::NoExternals));

        let spec = NetlistSpec::from_json(
            r#"{"devices":[{"id":"G","type":"grover","d":2}],"externals":["G.1"]}"#,
        )
        .unwrap();
        assert!(matches!(spec.validate()[0], Violation::BadDevice { .. }));
    }

    #[test]
    fn unknown_fields_and_types_rejected() {
        for bad in [
            r#"{"devices":[{"id":"M","type":"mirror","phse":1}],"externals":["M.1"]}"#,
            r#"{"devices":[{"id":"M","type":"laser"}],"externals":["M.1"]}"#,
            r#"{"devices":[{"id":"M","type":"mirror"}],"externals":["M.1"],"extra":1}"#,
            r#"{"devices":[{"id":"M","type":"mirror"}],"links":[{"endpoints":["M.1"]}],"externals":["M.1"]}"#,
            r#"{"devices":[{"id":"M","type":"grover","d":-3}],"externals":["M.1"]}"#,
        ] {
            assert!(NetlistSpec::from_json(bad).is_err(), "{bad}");
        }
        let ok =
            r#"{"devices":[{"id":"Y","type":"y_pm","r":0.3}],"externals":["Y.1","Y.2","Y.3"]}"#;
        assert!(Netlist::from_json(ok).is_ok());
    }

    #[test]
    fn json_round_trip() {
        let spec = NetlistSpec::from_json(FIG_2A).unwrap();
        assert_eq!(NetlistSpec::from_json(&spec.to_json()).unwrap(), spec);
    }

    #[test]
    fn bridged_y_couplers_make_grover_four_port() {
        let net = Netlist::from_json(FIG_2A).unwrap();
        let rep = solve_steady_state(&net, 1e-10).unwrap();
        let g = catalog::grover(4).unwrap();
        assert!(rep.effective.max_abs_diff(&g).unwrap() < 1e-12);
        assert_eq!(rep.roundtrip_spectral_radius, 0.0);
    }

    #[test]
    fn loop_mirror_reflects_everything() {
        for phase in [0.0, 0.4, 1.3, PI, 5.0] {
            let rep = solve_steady_state(&loop_mirror(phase), 1e-10).unwrap();
            assert_eq!(rep.effective.dim(), 1);
            assert!(
                (rep.effective.get(0, 0).norm() - 1.0).abs() < 1e-12,
                "{phase}"
            );
        }
        // Zero loop phase puts a unit eigenvalue on the unexcited supermode.
        assert!(
            solve_steady_state(&loop_mirror(0.0), 1e-10)
                .unwrap()
                .dark_state_unexcited
        );
    }

    #[test]
    fn michelson_single_pass() {
        for phi in [0.0, 0.5, PI / 2.0, PI, 4.0] {
            let net = michelson(phi, 0.0);
            let run = iterate_roundtrips(&net, 0, 10, 1e-14).unwrap();
            assert!(run.converged);
            assert_eq!(run.bounces, 2);
            let e = Complex64::cis(phi);
            assert!((run.amplitudes[0] - (e - 1.0) / 2.0).norm() < 1e-15);
            assert!((run.amplitudes[1] - (e + 1.0) / 2.0).norm() < 1e-15);
        }
        // Round-trip phase = mirror phase + twice the one-way link phase.
        let a = solve_steady_state(&michelson(0.4, 0.3), 1e-10).unwrap();
        let b = solve_steady_state(&michelson(1.0, 0.0), 1e-10).unwrap();
        assert!(a.effective.max_abs_diff(&b.effective).unwrap() < 1e-14);
    }

    #[test]
    fn loop_mirror_iteration_needs_one_bounce() {
        let run = iterate_roundtrips(&loop_mirror(0.9), 0, 10, 1e-14).unwrap();
        assert_eq!(run.bounces, 1);
        assert!((run.amplitudes[0] - Complex64::cis(0.9)).norm() < 1e-15);
    }

    #[test]
    fn lossless_resonance_stays_dark() {
        // Both mirrors at pi: the antisymmetric mode of ports 2,3 returns to
        // itself with eigenvalue 1, but port 1 only feeds the symmetric mode.
        let net = Netlist::new(
            vec![
                y("Y"),
                Device {
                    id: "M2".into(),
                    matrix: catalog::mirror(PI).unwrap(),
                },
                Device {
                    id: "M3".into(),
                    matrix: catalog::mirror(PI).unwrap(),
                },
            ],
            vec![
                Link {
                    a: p(0, 2),
                    b: p(1, 1),
                    phase: 0.0,
                },
                Link {
                    a: p(0, 3),
                    b: p(2, 1),
                    phase: 0.0,
                },
            ],
            vec![p(0, 1)],
        )
        .unwrap();
        let rep = solve_steady_state(&net, 1e-10).unwrap();
        assert!(rep.dark_state_unexcited);
        assert!((rep.roundtrip_spectral_radius - 1.0).abs() < 1e-12);
        assert!((rep.effective.get(0, 0) - Complex64::new(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn excited_dark_state_is_singular() {
        // A lossy splitter that sends port 1 only into port 2 drives the
        // same resonant mode, which a unitary coupler never can.
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let lossy =
            ScatteringMatrix::from_real_rows(&[&[0.0, h, h], &[1.0, -0.5, 0.5], &[0.0, 0.5, -0.5]])
                .unwrap();
        let net = Netlist::new(
            vec![
                Device {
                    id: "Y".into(),
                    matrix: lossy,
                },
                Device {
                    id: "M2".into(),
                    matrix: catalog::mirror(PI).unwrap(),
                },
                Device {
                    id: "M3".into(),
                    matrix: catalog::mirror(PI).unwrap(),
                },
            ],
            vec![
                Link {
                    a: p(0, 2),
                    b: p(1, 1),
                    phase: 0.0,
                },
                Link {
                    a: p(0, 3),
                    b: p(2, 1),
                    phase: 0.0,
                },
            ],
            vec![p(0, 1)],
        )
        .unwrap();
        match solve_steady_state(&net, 1e-10) {
            Err(Error::DarkStateSingular { supermode, .. }) => {
                assert!((supermode.eigenvalue - Complex64::new(1.0, 0.0)).norm() < 1e-9);
                assert_eq!(supermode.components.len(), 4);
                let labels: Vec<&str> = supermode
                    .components
                    .iter()
                    .map(|(l, _)| l.as_str())
                    .collect();
                assert_eq!(labels, ["Y.2", "Y.3", "M2.1", "M3.1"]);
            }
            other => panic!("expected dark-state error, got {other:?}"),
        }
        assert!(matches!(
            iterate_roundtrips(&net, 0, 50, 1e-12),
            Err(Error::NotConverged { t_max: 50, .. })
        ));
    }

    #[test]
    fn link_phase_override() {
        let net = loop_mirror(0.2);
        assert!(net.with_link_phase(0, 1.0).is_ok());
        assert!(net.with_link_phase(1, 1.0).is_err());
        assert!(net.with_link_phase(0, f64::NAN).is_err());
        assert!(iterate_roundtrips(&net, 1, 5, 1e-12).is_err());
        assert!(iterate_roundtrips(&net, 0, 0, 1e-12).is_err());
    }

    #[test]
    fn no_internal_ports() {
        let net = Netlist::new(vec![y("Y")], vec![], vec![p(0, 3), p(0, 1), p(0, 2)]).unwrap();
        let rep = solve_steady_state(&net, 1e-10).unwrap();
        let want = symmetric_y().permute_ports(&[1, 2, 0]).unwrap();
        assert!(rep.effective.max_abs_diff(&want).unwrap() < 1e-15);
    }
}
