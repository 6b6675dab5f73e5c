use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context as _, Result};
use eitsim::atom::field_of_intensity;
use eitsim::broadening::broadening_budget;
use eitsim::config::CellDoc;
use eitsim::fits::{bootstrap_uncertainty, fit_curve, r_squared, FitReport, ModelShape};
use eitsim::labio::{
    average_traces, beer_lambert_od, load_trace_files, od_estimate, write_od_csv, write_traces, Role,
};
use eitsim::spectra::{
    asymmetry, detuning_series, eit_spectrum, feature_order, find_dip, linewidth_vs_intensity,
    net_feature_area, ProbeGrid, Spectrum,
};
use eitsim::storage::{default_storage_times, lifetime_scan, predicted_lifetime, PulseSequence, StorageSimulator};
use eitsim::units::{angular_to_hz, hz_to_angular};
use eitsim::{AtomSpec, CellSpec, FieldSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::args::*;

/// Error in what the user supplied, as opposed to a numerical failure.
#[derive(Debug)]
pub struct InputError(pub String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

pub fn input_error(msg: impl Into<String>) -> anyhow::Error {
    InputError(msg.into()).into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub struct Outcome {
    pub artifacts: Vec<(String, Vec<u8>)>,
    pub inputs: Vec<FileDigest>,
    pub summary: String,
}

/// Everything a command needs beyond its flags.
pub struct Context {
    pub atom: AtomSpec,
    pub cell: Option<(CellSpec, CellDoc)>,
}

impl Context {
    fn cell(&self) -> &CellSpec {
        &self.cell.as_ref().expect("cell resolved before dispatch").0
    }
}

fn parse_range(flag: &str, s: &str) -> Result<ProbeGrid> {
    s.parse::<ProbeGrid>().map_err(|e| input_error(format!("--{flag}: {e}")))
}

fn atom_for(ctx: &Context, m: &ModelArgs) -> AtomSpec {
    m.model.atom(&ctx.atom)
}

fn coupling(intensity: f64, delta_c_hz: f64) -> Result<FieldSpec> {
    let amp = field_of_intensity(intensity).map_err(|_| input_error(format!("--coupling-intensity {intensity} must be ≥ 0")))?;
    Ok(FieldSpec::coupling(amp, hz_to_angular(delta_c_hz)))
}

fn csv(s: &Spectrum) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    s.write_csv(&mut out)?;
    Ok(out)
}

fn json<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut s = serde_json::to_vec_pretty(v)?;
    s.push(b'\n');
    Ok(s)
}

#[derive(Serialize)]
struct DipSummary {
    center_hz: f64,
    fwhm_hz: f64,
    depth: f64,
}

#[derive(Serialize)]
struct SpectrumSummary {
    dip: Option<DipSummary>,
    asymmetry: f64,
    feature_order: i8,
    net_feature_area: f64,
}

fn summarize(s: &Spectrum) -> SpectrumSummary {
    SpectrumSummary {
        dip: find_dip(s).ok().map(|d| DipSummary {
            center_hz: angular_to_hz(d.center),
            fwhm_hz: angular_to_hz(d.fwhm),
            depth: d.depth,
        }),
        asymmetry: asymmetry(s),
        feature_order: feature_order(s),
        net_feature_area: net_feature_area(s),
    }
}

pub fn spectrum(ctx: &Context, a: &SpectrumArgs) -> Result<Outcome> {
    let grid = parse_range("probe-grid", &a.probe_grid)?;
    let c = coupling(a.coupling_intensity, a.delta_c)?;
    let offsets: Vec<f64> = grid.angular();
    let dp: Vec<f64> = offsets.iter().map(|o| c.detuning + o).collect();
    let s = eit_spectrum(&atom_for(ctx, &a.model), ctx.cell(), &c, &FieldSpec::probe(a.model.probe_field, 0.0), &dp)?;
    let summary = summarize(&s);
    #[derive(Serialize)]
    struct Doc<'a> {
        summary: &'a SpectrumSummary,
        spectrum: serde_json::Value,
    }
    let doc = Doc {
        summary: &summary,
        spectrum: serde_json::from_str(&s.sidecar_json()?)?,
    };
    let text = match &summary.dip {
        Some(d) => format!(
            "dip center {:.3} Hz, FWHM {:.3} Hz, depth {:.6e}\n",
            d.center_hz, d.fwhm_hz, d.depth
        ),
        None => "no transparency dip in the window\n".to_string(),
    };
    Ok(Outcome {
        artifacts: vec![("spectrum.csv".into(), csv(&s)?), ("spectrum.json".into(), json(&doc)?)],
        inputs: vec![],
        summary: text,
    })
}

pub fn series(ctx: &Context, a: &SeriesArgs) -> Result<Outcome> {
    let dc = parse_range("delta-c", &a.delta_c)?;
    let grid = parse_range("probe-grid", &a.probe_grid)?;
    let c = coupling(a.coupling_intensity, 0.0)?;
    let spectra = detuning_series(
        &atom_for(ctx, &a.model),
        ctx.cell(),
        &c,
        &FieldSpec::probe(a.model.probe_field, 0.0),
        &dc.angular(),
        &grid.angular(),
    )?;
    let mut tidy = String::from("delta_c_hz,delta_p_hz,alpha_p\n");
    let mut table = String::from("delta_c_hz,asymmetry,feature_order,net_feature_area,fwhm_hz\n");
    let mut text = String::new();
    for (d, s) in dc.hz().iter().zip(&spectra) {
        for (x, y) in s.delta_p_hz().zip(s.alpha()) {
            writeln!(tidy, "{d:e},{x:e},{y:e}")?;
        }
        let sm = summarize(s);
        let fwhm = sm.dip.as_ref().map(|x| format!("{:e}", x.fwhm_hz)).unwrap_or_default();
        writeln!(
            table,
            "{d:e},{:e},{},{:e},{fwhm}",
            sm.asymmetry, sm.feature_order, sm.net_feature_area
        )?;
        writeln!(
            text,
            "Δc = {:>8.1} MHz  asymmetry {:+.3}  order {:+}  net area {:+.3e}",
            d / 1e6,
            sm.asymmetry,
            sm.feature_order,
            sm.net_feature_area
        )?;
    }
    Ok(Outcome {
        artifacts: vec![
            ("series.csv".into(), tidy.into_bytes()),
            ("series_summary.csv".into(), table.into_bytes()),
        ],
        inputs: vec![],
        summary: text,
    })
}

#[derive(Serialize)]
struct LinearFitDoc {
    slope_hz_per_w_m2: f64,
    intercept_hz: f64,
    r_squared: f64,
    configured_b_hz: f64,
    fit: FitReport,
}

pub fn linewidth_scan(ctx: &Context, a: &LinewidthArgs) -> Result<Outcome> {
    let range = parse_range("intensities", &a.intensities)?;
    let intensities = range.hz();
    if intensities[0] < 0.0 {
        bail!(input_error("--intensities must be non-negative"));
    }
    let pts = linewidth_vs_intensity(
        &atom_for(ctx, &a.model),
        ctx.cell(),
        &FieldSpec::coupling(0.0, hz_to_angular(a.delta_c)),
        &intensities,
        &FieldSpec::probe(a.model.probe_field, 0.0),
    )?;
    let mut table = String::from("intensity_w_per_m2,fwhm_hz,center_hz\n");
    for p in &pts {
        writeln!(table, "{:e},{:e},{:e}", p.intensity, p.fwhm_hz, p.center_hz)?;
    }
    let x: Vec<f64> = pts.iter().map(|p| p.intensity).collect();
    let y: Vec<f64> = pts.iter().map(|p| p.fwhm_hz).collect();
    let fit = fit_curve(ModelShape::Linear, &x, &y, None)?;
    let model: Vec<f64> = x.iter().map(|&v| fit.predict(v)).collect();
    let doc = LinearFitDoc {
        slope_hz_per_w_m2: fit.params[0],
        intercept_hz: fit.params[1],
        r_squared: r_squared(&y, &model),
        configured_b_hz: ctx.cell().intercept_b,
        fit: fit.report(),
    };
    let text = format!(
        "intercept {:.1} Hz (configured b {:.1} Hz), slope {:.3} Hz per W/m², R² {:.6}\n",
        doc.intercept_hz, doc.configured_b_hz, doc.slope_hz_per_w_m2, doc.r_squared
    );
    Ok(Outcome {
        artifacts: vec![
            ("linewidth.csv".into(), table.into_bytes()),
            ("linewidth_fit.json".into(), json(&doc)?),
        ],
        inputs: vec![],
        summary: text,
    })
}

pub fn broadening(ctx: &Context, a: &BroadeningArgs) -> Result<Outcome> {
    if !(0.0..=0.1).contains(&a.angle) {
        bail!(input_error(format!("--angle {} outside [0, 0.1] rad", a.angle)));
    }
    let budget = broadening_budget(&ctx.atom, ctx.cell(), a.angle)?;
    let mut table = String::from("mechanism,hz\n");
    let mut text = String::new();
    for e in &budget {
        writeln!(table, "{},{:e}", e.mechanism, e.hz)?;
        writeln!(text, "{:<28} {:>12.1} Hz", e.mechanism, e.hz)?;
    }
    Ok(Outcome {
        artifacts: vec![("broadening.csv".into(), table.into_bytes())],
        inputs: vec![],
        summary: text,
    })
}

#[derive(Serialize)]
struct StorageDoc {
    tau_s: f64,
    predicted_tau_s: f64,
    fit: FitReport,
    sequence: PulseSequence,
}

pub fn storage(ctx: &Context, a: &StorageArgs) -> Result<Outcome> {
    let cell = ctx.cell();
    let times = match &a.storage_times {
        Some(s) => parse_range("storage-times", s)?.hz(),
        None => default_storage_times(cell)
            .map_err(|_| input_error("the cell has b = 0; pass --storage-times"))?,
    };
    let atom = atom_for(ctx, &a.model);
    let c = coupling(a.coupling_intensity, a.delta_c)?;
    let probe = FieldSpec::probe(a.model.probe_field, 0.0);
    let seq = PulseSequence::default();
    let scan = lifetime_scan(&atom, cell, &c, &probe, seq, &times)?;
    let mut table = Vec::new();
    scan.write_csv(&mut table)?;
    let trace = StorageSimulator::new(&atom, cell, &c, &probe, seq)?.retrieve(times[0])?;
    let mut retrieval = Vec::new();
    trace.write_csv(&mut retrieval)?;
    let predicted = predicted_lifetime(cell).unwrap_or(f64::INFINITY);
    let doc = StorageDoc {
        tau_s: scan.tau(),
        predicted_tau_s: predicted,
        fit: scan.fit.report(),
        sequence: seq,
    };
    let text = format!(
        "lifetime {:.3} µs (predicted {:.3} µs)\n",
        doc.tau_s * 1e6,
        predicted * 1e6
    );
    Ok(Outcome {
        artifacts: vec![
            ("storage.csv".into(), table),
            ("retrieval.csv".into(), retrieval),
            ("storage_fit.json".into(), json(&doc)?),
        ],
        inputs: vec![],
        summary: text,
    })
}

fn read_input(path: &Path) -> Result<(Vec<u8>, FileDigest)> {
    let bytes = std::fs::read(path).map_err(|e| input_error(format!("{}: {e}", path.display())))?;
    let digest = FileDigest {
        path: path.display().to_string(),
        sha256: sha256_hex(&bytes),
    };
    Ok((bytes, digest))
}

fn parse_xy(text: &str, path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let (mut x, mut y) = (Vec::new(), Vec::new());
    let mut header = true;
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed = match cols[..] {
            [a, b] => a.parse::<f64>().ok().zip(b.parse::<f64>().ok()),
            _ => None,
        };
        match parsed {
            Some((a, b)) if a.is_finite() && b.is_finite() => {
                x.push(a);
                y.push(b);
            }
            None if header => {}
            _ => bail!(input_error(format!("{}:{}: expected `x,y`, got `{line}`", path.display(), k + 1))),
        }
        header = false;
    }
    if x.is_empty() {
        bail!(input_error(format!("{}: no data rows", path.display())));
    }
    Ok((x, y))
}

#[derive(Serialize)]
struct FitDoc {
    fit: FitReport,
    bootstrap_sigmas: Option<Vec<(String, f64)>>,
    r_squared: f64,
    n: usize,
}

pub fn fit(a: &FitArgs) -> Result<Outcome> {
    let (bytes, digest) = read_input(&a.input)?;
    let text = String::from_utf8(bytes).map_err(|_| input_error(format!("{}: not UTF-8", a.input.display())))?;
    let (x, y) = parse_xy(&text, &a.input)?;
    let init = match &a.init {
        Some(s) => Some(
            s.split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|e| input_error(format!("--init: {e}")))?,
        ),
        None => None,
    };
    let result = fit_curve(a.shape, &x, &y, init.as_deref())?;
    let model: Vec<f64> = x.iter().map(|&v| result.predict(v)).collect();
    let bootstrap = if a.bootstrap > 0 {
        let s = bootstrap_uncertainty(&result, &x, &y, a.bootstrap, a.seed)?;
        Some(a.shape.param_names().iter().map(|n| n.to_string()).zip(s).collect())
    } else {
        None
    };
    let doc = FitDoc {
        fit: result.report(),
        bootstrap_sigmas: bootstrap,
        r_squared: r_squared(&y, &model),
        n: x.len(),
    };
    let mut curve = String::from("x,y,model\n");
    for ((xv, yv), m) in x.iter().zip(&y).zip(&model) {
        writeln!(curve, "{xv:e},{yv:e},{m:e}")?;
    }
    let mut summary = String::new();
    for ((name, v), (_, s)) in doc.fit.params.iter().zip(&doc.fit.sigmas) {
        writeln!(summary, "{name:<10} {v:.6e} ± {s:.2e}")?;
    }
    Ok(Outcome {
        artifacts: vec![("fit.json".into(), json(&doc)?), ("fit_curve.csv".into(), curve.into_bytes())],
        inputs: vec![digest],
        summary,
    })
}

#[derive(Serialize)]
struct AnalyzeDoc {
    traces: [(String, usize); 3],
    od_max: f64,
    od_estimate: Option<f64>,
}

pub fn analyze(a: &AnalyzeArgs) -> Result<Outcome> {
    let inputs = a
        .traces
        .iter()
        .map(|p| read_input(p).map(|(_, d)| d))
        .collect::<Result<Vec<_>>>()?;
    let load = |role: Role| load_trace_files(&a.traces, role);
    let (i, i0, b) = (load(Role::I)?, load(Role::I0)?, load(Role::B)?);
    let means = [average_traces(&i), average_traces(&i0), average_traces(&b)];
    let od = beer_lambert_od(&means[0], &means[1], &means[2])?;
    let mut od_csv = Vec::new();
    write_od_csv(&mut od_csv, &means[0].x, &od)?;
    let mut mean_csv = Vec::new();
    write_traces(&mut mean_csv, &means)?;
    let estimate = match a.temperature {
        Some(t) => Some(od_estimate(t, a.cell_length)?),
        None => None,
    };
    let doc = AnalyzeDoc {
        traces: [("I".into(), i.len()), ("I0".into(), i0.len()), ("B".into(), b.len())],
        od_max: od.iter().cloned().fold(f64::MIN, f64::max),
        od_estimate: estimate,
    };
    let mut summary = format!(
        "averaged {} I, {} I0, {} B traces; peak OD {:.4}\n",
        i.len(),
        i0.len(),
        b.len(),
        doc.od_max
    );
    if let Some(e) = estimate {
        writeln!(summary, "vapor OD estimate {e:.3}")?;
    }
    Ok(Outcome {
        artifacts: vec![
            ("od.csv".into(), od_csv),
            ("traces_mean.csv".into(), mean_csv),
            ("analyze.json".into(), json(&doc)?),
        ],
        inputs,
        summary,
    })
}

pub fn execute(ctx: &Context, cmd: &Command) -> Result<Outcome> {
    match cmd {
        Command::Spectrum(a) => spectrum(ctx, a),
        Command::Series(a) => series(ctx, a),
        Command::LinewidthScan(a) => linewidth_scan(ctx, a),
        Command::Broadening(a) => broadening(ctx, a),
        Command::Storage(a) => storage(ctx, a),
        Command::Fit(a) => fit(a),
        Command::Analyze(a) => analyze(a),
        Command::Run(_) => Err(anyhow!("`run` cannot be nested")),
    }
}

/// Writes every artifact into `dir`, creating it if needed.
pub fn write_artifacts(dir: &Path, artifacts: &[(String, Vec<u8>)]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut paths = Vec::new();
    for (name, bytes) in artifacts {
        let p = dir.join(name);
        let mut f = std::fs::File::create(&p).with_context(|| format!("writing {}", p.display()))?;
        f.write_all(bytes)?;
        paths.push(p);
    }
    Ok(paths)
}
