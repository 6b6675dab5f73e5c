//! Trace files, run averaging and Beer–Lambert optical depth.
//!
//! Trace CSV layout. Every trace starts with a comment header naming the
//! abscissa unit, the role and a run id, followed by `x,value` rows:
//!
//! ```text
//! # Hz,I,run-01
//! -50000,0.8123
//! -49900,0.8120
//! # Hz,I,run-02
//! ...
//! ```
//!
//! Units are `Hz` or `s`; roles are `I` (signal), `I0` (off-resonant
//! reference) and `B` (background). Blank lines are ignored.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par_map;
use crate::units::K_B;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    I,
    I0,
    B,
}

impl std::str::FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "I" => Ok(Role::I),
            "I0" => Ok(Role::I0),
            "B" => Ok(Role::B),
            other => Err(format!("unknown role `{other}` (expected I, I0 or B)")),
        }
    }
}

impl std::fmt::Display for Role {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Role::I => "I",
            Role::I0 => "I0",
            Role::B => "B",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum XUnit {
    Hz,
    S,
}

impl std::str::FromStr for XUnit {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "Hz" => Ok(XUnit::Hz),
            "s" => Ok(XUnit::S),
            other => Err(format!("unknown x unit `{other}` (expected Hz or s)")),
        }
    }
}

impl std::fmt::Display for XUnit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            XUnit::Hz => "Hz",
            XUnit::S => "s",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub x_unit: XUnit,
    pub role: Role,
    pub run_id: String,
    pub x: Vec<f64>,
    pub value: Vec<f64>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

fn same_grid(a: &Trace, b: &Trace) -> bool {
    a.x_unit == b.x_unit
        && a.x.len() == b.x.len()
        && a.x.iter().zip(&b.x).all(|(p, q)| {
            let scale = p.abs().max(q.abs());
            (p - q).abs() <= 1e-9 * scale
        })
}

/// N ≥ 1 traces of one role on a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSet {
    role: Role,
    traces: Vec<Trace>,
}

impl TraceSet {
    /// Checks that every trace has the role and the grid of the first one.
    pub fn new(role: Role, traces: Vec<Trace>) -> Result<Self> {
        let Some(first) = traces.first() else {
            return Err(Error::Invalid(format!("no `{role}` traces")));
        };
        if let Some(t) = traces.iter().find(|t| t.role != role) {
            return Err(Error::Invalid(format!(
                "trace `{}` has role {} in a {role} set",
                t.run_id, t.role
            )));
        }
        let bad: Vec<usize> = traces
            .iter()
            .enumerate()
            .skip(1)
            .filter(|(_, t)| !same_grid(first, t))
            .map(|(i, _)| i)
            .collect();
        if !bad.is_empty() {
            return Err(Error::GridMismatch(bad));
        }
        Ok(TraceSet { role, traces })
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn traces(&self) -> &[Trace] {
        &self.traces
    }

    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }
}

/// Parses every trace in `text`; `path` only labels errors.
pub fn parse_traces(text: &str, path: &str) -> Result<Vec<Trace>> {
    let err = |line: usize, msg: String| Error::Parse {
        path: path.to_string(),
        line,
        msg,
    };
    let mut out: Vec<Trace> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('#') {
            let fields: Vec<&str> = header.split(',').map(str::trim).collect();
            let [unit, role, run_id] = fields[..] else {
                return Err(err(line_no, format!("expected `# x_unit,role,run_id`, got `{line}`")));
            };
            out.push(Trace {
                x_unit: unit.parse().map_err(|e| err(line_no, e))?,
                role: role.parse().map_err(|e| err(line_no, e))?,
                run_id: run_id.to_string(),
                x: Vec::new(),
                value: Vec::new(),
            });
            continue;
        }
        let Some(trace) = out.last_mut() else {
            return Err(err(line_no, "data row before the first trace header".into()));
        };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let [xs, vs] = fields[..] else {
            return Err(err(line_no, format!("expected `x,value`, got `{line}`")));
        };
        let x: f64 = xs.parse().map_err(|_| err(line_no, format!("bad x `{xs}`")))?;
        let v: f64 = vs.parse().map_err(|_| err(line_no, format!("bad value `{vs}`")))?;
        if !x.is_finite() || !v.is_finite() {
            return Err(err(line_no, "non-finite number".into()));
        }
        trace.x.push(x);
        trace.value.push(v);
    }
    if let Some(t) = out.iter().find(|t| t.is_empty()) {
        return Err(Error::Parse {
            path: path.to_string(),
            line: 0,
            msg: format!("trace `{}` has no rows", t.run_id),
        });
    }
    Ok(out)
}

/// Loads the traces of `role` from one file.
pub fn load_traces(path: &Path, role: Role) -> Result<TraceSet> {
    load_trace_files(&[path], role)
}

/// Loads the traces of `role` from several files (parsed in parallel),
/// keeping file order.
pub fn load_trace_files<P: AsRef<Path> + Sync>(paths: &[P], role: Role) -> Result<TraceSet> {
    let parsed = par_map(paths, |p| {
        let p = p.as_ref();
        let text = std::fs::read_to_string(p)?;
        parse_traces(&text, &p.display().to_string())
    });
    let mut traces = Vec::new();
    for file in parsed {
        traces.extend(file?.into_iter().filter(|t| t.role == role));
    }
    TraceSet::new(role, traces)
}

pub fn write_traces<W: Write>(mut w: W, traces: &[Trace]) -> Result<()> {
    for t in traces {
        writeln!(w, "# {},{},{}", t.x_unit, t.role, t.run_id)?;
        for (x, v) in t.x.iter().zip(&t.value) {
            writeln!(w, "{x:e},{v:e}")?;
        }
    }
    Ok(())
}

/// Pointwise mean over the set.
pub fn average_traces(ts: &TraceSet) -> Trace {
    let first = &ts.traces[0];
    let n = ts.traces.len() as f64;
    let mut value = vec![0.0; first.len()];
    for t in &ts.traces {
        for (acc, v) in value.iter_mut().zip(&t.value) {
            *acc += v;
        }
    }
    for v in &mut value {
        *v /= n;
    }
    Trace {
        x_unit: first.x_unit,
        role: first.role,
        run_id: "mean".into(),
        x: first.x.clone(),
        value,
    }
}

/// `OD = −ln[(I − B)/(I₀ − B)]` pointwise.
pub fn beer_lambert_od(i: &Trace, i0: &Trace, b: &Trace) -> Result<Vec<f64>> {
    let mismatched: Vec<usize> = [i0, b]
        .iter()
        .enumerate()
        .filter(|(_, t)| !same_grid(i, t))
        .map(|(k, _)| k + 1)
        .collect();
    if !mismatched.is_empty() {
        return Err(Error::GridMismatch(mismatched));
    }
    (0..i.len())
        .map(|k| {
            let den = i0.value[k] - b.value[k];
            if !(den > 0.0) {
                return Err(Error::BeerLambert {
                    index: k,
                    x: i.x[k],
                    reason: "I0 - B <= 0",
                });
            }
            let num = i.value[k] - b.value[k];
            if !(num > 0.0) {
                return Err(Error::BeerLambert {
                    index: k,
                    x: i.x[k],
                    reason: "I - B <= 0 (background exceeds signal)",
                });
            }
            Ok(-(num / den).ln())
        })
        .collect()
}

pub fn write_od_csv<W: Write>(mut w: W, x: &[f64], od: &[f64]) -> Result<()> {
    writeln!(w, "delta_p_hz,od")?;
    for (x, o) in x.iter().zip(od) {
        writeln!(w, "{x:e},{o:e}")?;
    }
    Ok(())
}

/// Two-branch log-linear Rb vapor-pressure correlation,
/// `log₁₀(P/torr) = a − c/T`, switching at the melting point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VaporPressureModel {
    pub solid_a: f64,
    pub solid_c: f64,
    pub liquid_a: f64,
    pub liquid_c: f64,
    /// K
    pub melting_point: f64,
}

pub const RB_VAPOR_PRESSURE: VaporPressureModel = VaporPressureModel {
    solid_a: 2.881 + 4.857,
    solid_c: 4215.0,
    liquid_a: 2.881 + 4.312,
    liquid_c: 4040.0,
    melting_point: 312.45,
};

const TORR: f64 = 101_325.0 / 760.0;

/// Calibration anchor: OD 0.75 at 295 K in a 75 mm cell.
pub const OD_ANCHOR: (f64, f64, f64) = (295.0, 75e-3, 0.75);

impl VaporPressureModel {
    /// Pa
    pub fn pressure(&self, temperature: f64) -> f64 {
        let (a, c) = if temperature < self.melting_point {
            (self.solid_a, self.solid_c)
        } else {
            (self.liquid_a, self.liquid_c)
        };
        10f64.powf(a - c / temperature) * TORR
    }

    /// Atoms per m³.
    pub fn number_density(&self, temperature: f64) -> f64 {
        self.pressure(temperature) / (K_B * temperature)
    }
}

/// Optical-depth scale of a cell of `length` (m) at `temperature` (K):
/// vapor density × length, calibrated to the anchor point.
pub fn od_estimate(temperature: f64, length: f64) -> Result<f64> {
    if !(273.0..=350.0).contains(&temperature) {
        return Err(Error::domain("temperature (273–350 K)", temperature));
    }
    if !(length > 0.0) {
        return Err(Error::domain("cell length", length));
    }
    let (t0, l0, od0) = OD_ANCHOR;
    let m = RB_VAPOR_PRESSURE;
    Ok(od0 * (m.number_density(temperature) * length) / (m.number_density(t0) * l0))
}
