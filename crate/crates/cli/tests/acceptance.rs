//! Acceptance suite. Runs every criterion at its stated tolerance and prints
//! one PASS/FAIL line per criterion; exits non-zero if any fails.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use eitsim::atom::{field_of_intensity, intensity_of_field};
use eitsim::bloch::{build_generator, probe_absorption, steady_state, steady_state_with_report};
use eitsim::broadening::{
    cusp_fwhm_from_transit, residual_doppler, transit_broadening_diffusion, transit_from_cusp_fwhm,
    BroadeningInput, Regime,
};
use eitsim::fits::{eval_model, fit_curve, r_squared, ModelShape};
use eitsim::labio::{beer_lambert_od, Role, Trace, XUnit};
use eitsim::spectra::{
    asymmetry, detuning_series, feature_order, linewidth_vs_intensity, linspace, measure_dip, net_feature_area,
};
use eitsim::storage::{default_storage_times, lifetime_scan, predicted_lifetime, PulseSequence};
use eitsim::units::{angular_to_hz, two_pi, C, K_B};
use eitsim::{AtomSpec, CellSpec, FieldSpec, Level};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn four() -> AtomSpec {
    AtomSpec::default_rb85_d1()
}

fn three() -> AtomSpec {
    four().three_level()
}

fn probe() -> FieldSpec {
    FieldSpec::probe(3.0, 0.0)
}

fn field_intensity() -> Outcome {
    let lo = intensity_of_field(23.0).unwrap();
    let hi = intensity_of_field(64.0).unwrap();
    ensure!((lo - 2.81).abs() < 0.01 && (hi - 21.75).abs() < 0.01, "{lo} {hi}");
    ensure!(rel(lo, 2.9) < 0.04 && rel(hi, 21.8) < 0.04, "{lo} {hi} vs 2.9 21.8");
    ensure!(rel(field_of_intensity(hi).unwrap(), 64.0) < 1e-12, "inverse");
    Ok(format!("23 V/m → {lo:.3} W/m², 64 V/m → {hi:.3} W/m²"))
}

fn residual_doppler_collinear() -> Outcome {
    let atom = four();
    let mut cell = CellSpec::ne_5torr();
    cell.temperature = atom.mass * 170.0 * 170.0 / K_B;
    let hz = residual_doppler(&BroadeningInput::new(&atom, &cell, 0.0), Regime::Ballistic).unwrap();
    let oracle = 3.0357e9 * 170.0 / C;
    ensure!(rel(hz, 1.7e3) < 0.05, "{hz} Hz");
    ensure!(rel(hz, oracle) < 1e-3, "{hz} vs {oracle}");
    Ok(format!("{hz:.0} Hz"))
}

fn transit() -> Outcome {
    let hz = transit_broadening_diffusion(30e-4, 2.8e-3).unwrap();
    ensure!(rel(hz, 354.0) < 0.02, "{hz} Hz");
    Ok(format!("{hz:.1} Hz"))
}

fn cusp() -> Outcome {
    let fwhm = cusp_fwhm_from_transit(7.2e-6).unwrap();
    ensure!(rel(fwhm, 192.5e3) < 1e-3, "{fwhm}");
    ensure!(rel(fwhm, 190e3) < 0.03, "{fwhm} vs 190 kHz");
    let back = transit_from_cusp_fwhm(fwhm).unwrap();
    ensure!(rel(back, 7.2e-6) < 1e-12, "{back}");
    Ok(format!("7.2 µs ↔ {:.1} kHz", fwhm / 1e3))
}

fn dark_state() -> Outcome {
    let mut cell = CellSpec::paraffin();
    cell.intercept_b = 0.0;
    let mut worst = 0.0f64;
    for ec in [23.0, 64.0] {
        let g = build_generator(&three(), &cell, &FieldSpec::coupling(ec, 0.0), &probe()).unwrap();
        let a = probe_absorption(&steady_state(&g).unwrap());
        worst = worst.max(a.abs());
    }
    ensure!(worst < 1e-10, "|α| = {worst:e}");
    Ok(format!("|α| ≤ {worst:.1e}"))
}

fn two_level() -> Outcome {
    let mut atom = four();
    atom.dipoles.d13 = 0.0;
    atom.dipoles.d23 = 0.0;
    atom.dipoles.d24 = 0.0;
    let mut worst = 0.0f64;
    for (cell, field) in [(CellSpec::paraffin(), 3.0), (CellSpec::ne_5torr(), 3000.0)] {
        let base = build_generator(&atom, &cell, &FieldSpec::coupling(0.0, 0.0), &FieldSpec::probe(field, 0.0))
            .unwrap();
        let rabi = atom.rabi(Level::G1, Level::E4, field);
        let gamma = 0.5 * atom.decay[3] + cell.optical_collisional();
        let decay = atom.decay[3];
        for k in 0..50 {
            let delta = two_pi(-2e9 + 4e9 * k as f64 / 49.0);
            let s = rabi * rabi * gamma / (decay * (gamma * gamma + delta * delta));
            let pe = 0.5 * s / (1.0 + s);
            let alpha = 0.5 * rabi * gamma * (1.0 - 2.0 * pe) / (gamma * gamma + delta * delta);
            let mut d = base.drive;
            d.probe_detuning = delta;
            let rho = steady_state(&base.with_drive(d)).unwrap();
            worst = worst
                .max(rel(rho.population(Level::E4), pe))
                .max(rel(probe_absorption(&rho), alpha));
        }
    }
    ensure!(worst < 1e-8, "relative error {worst:e}");
    Ok(format!("100 detunings, worst relative error {worst:.1e}"))
}

fn linewidth_law() -> Outcome {
    let intensities = linspace(1.5, 25.0, 8);
    let mut parts = Vec::new();
    for cell in [CellSpec::ne_5torr(), CellSpec::alkene(), CellSpec::paraffin()] {
        let pts = linewidth_vs_intensity(&three(), &cell, &FieldSpec::coupling(0.0, 0.0), &intensities, &probe())
            .unwrap();
        let y: Vec<f64> = pts.iter().map(|p| p.fwhm_hz).collect();
        let fit = fit_curve(ModelShape::Linear, &intensities, &y, None).unwrap();
        let model: Vec<f64> = intensities.iter().map(|&v| fit.predict(v)).collect();
        let r2 = r_squared(&y, &model);
        let b = fit.param("intercept").unwrap();
        ensure!(r2 > 0.999, "{:?}: R² {r2}", cell.kind);
        ensure!(rel(b, cell.intercept_b) < 0.15, "{:?}: b {b} vs {}", cell.kind, cell.intercept_b);
        parts.push(format!("b {b:.0}/{:.0} Hz", cell.intercept_b));
    }
    Ok(parts.join(", "))
}

fn four_vs_three() -> Outcome {
    let cell = CellSpec::ne_5torr();
    let c = FieldSpec::coupling(64.0, 0.0);
    let (d3, _) = measure_dip(&three(), &cell, &c, &probe()).unwrap();
    let (d4, _) = measure_dip(&four(), &cell, &c, &probe()).unwrap();
    let ratio = d4.fwhm / d3.fwhm;
    ensure!(ratio > 1.1, "FWHM ratio {ratio}");
    ensure!(d4.center > 0.0, "center {} Hz", angular_to_hz(d4.center));
    Ok(format!("FWHM ratio {ratio:.3}, center +{:.0} Hz", angular_to_hz(d4.center)))
}

fn detuning_phenomenology() -> Outcome {
    let dc: Vec<f64> = (-8..=8).map(|k| two_pi(100e6 * k as f64)).collect();
    let offsets = linspace(two_pi(-250e3), two_pi(250e3), 1001);
    let series = detuning_series(
        &four(),
        &CellSpec::ne_5torr(),
        &FieldSpec::coupling(64.0, 0.0),
        &probe(),
        &dc,
        &offsets,
    )
    .unwrap();
    for (d, s) in dc.iter().zip(&series) {
        let order = feature_order(s);
        ensure!(*d == 0.0 || order as f64 == d.signum(), "feature order {order} at Δc = {} MHz", d / two_pi(1e6));
        if d.abs() >= two_pi(200e6) {
            let a = asymmetry(s);
            ensure!(a.signum() == d.signum(), "asymmetry {a} at Δc = {} MHz", d / two_pi(1e6));
        }
    }
    let area: Vec<f64> = series.iter().map(net_feature_area).collect();
    ensure!(area[8] < 0.0, "resonant feature is not transparent");
    let blue = (8..17).find(|&k| area[k] > 0.0).map(|k| dc[k] / two_pi(1e6));
    let red = (0..8).rev().find(|&k| area[k] > 0.0).map(|k| dc[k] / two_pi(1e6));
    let Some(blue) = blue else {
        return Err("no conversion on the blue side".into());
    };
    ensure!(red.is_none_or(|r| blue < r.abs()), "blue {blue} MHz, red {red:?} MHz");
    Ok(format!("converts at +{blue:.0} MHz, red side {}", red.map_or("never".into(), |r| format!("{r:.0} MHz"))))
}

fn memory_lifetimes() -> Outcome {
    let mut parts = Vec::new();
    for (cell, measured, tol) in [
        (CellSpec::ne_5torr(), None, 0.0),
        (CellSpec::alkene(), Some(14.9e-6), 0.4),
        (CellSpec::paraffin(), Some(10.3e-6), 0.2),
    ] {
        let times = default_storage_times(&cell).unwrap();
        let scan = lifetime_scan(
            &four(),
            &cell,
            &FieldSpec::coupling(64.0, 0.0),
            &probe(),
            PulseSequence::default(),
            &times,
        )
        .unwrap();
        let tau = scan.tau();
        let want = 1.0 / (two_pi(cell.intercept_b / 2.0));
        ensure!(rel(predicted_lifetime(&cell).unwrap(), want) < 1e-12, "predicted lifetime");
        ensure!(rel(tau, want) < 0.1, "{:?}: τ {tau} vs {want}", cell.kind);
        if let Some(m) = measured {
            ensure!(rel(tau, m) < tol, "{:?}: τ {tau} vs measured {m}", cell.kind);
        }
        parts.push(format!("{:.1} µs", tau * 1e6));
    }
    Ok(format!("τ Ne/alkene/paraffin = {} (Ne 95 µs not reproduced)", parts.join(" / ")))
}

fn fit_truth(shape: ModelShape) -> (Vec<f64>, Vec<f64>) {
    match shape {
        ModelShape::LorentzianDip => (vec![1.0, 0.4, 120.0, 1500.0], linspace(-6000.0, 6000.0, 81)),
        ModelShape::Cusp => (vec![0.8, 1.0 / 7.2e-6, 5e3], linspace(-1e6, 1e6, 101)),
        ModelShape::Linear => (vec![95.0, 33.3e3], linspace(1.5, 25.0, 12)),
        ModelShape::Saturation => (vec![0.7, 4.0], linspace(0.5, 25.7, 15)),
        ModelShape::ExpDecay => (vec![1.0, 95e-6], linspace(0.0, 220e-6, 12)),
    }
}

fn fit_engine() -> Outcome {
    for shape in ModelShape::ALL {
        let (p, x) = fit_truth(shape);
        let y: Vec<f64> = x.iter().map(|&v| eval_model(shape, &p, v).unwrap()).collect();
        for init in [None, Some(p.iter().map(|v| v * 1.4).collect::<Vec<_>>())] {
            let fit = fit_curve(shape, &x, &y, init.as_deref()).unwrap();
            for (got, want) in fit.params.iter().zip(&p) {
                ensure!(rel(*got, *want) < 1e-6, "{shape:?}: {got} vs {want}");
            }
        }
    }
    let (_, x_cusp) = fit_truth(ModelShape::Cusp);
    let tau = 95e-6;
    let x_decay = linspace(0.0, 2.0 * tau, 12);
    let mut worst_cusp = 0.0f64;
    let mut worst_tau = 0.0f64;
    let mut sigma = [0.0; 2];
    let n1 = Normal::new(0.0, 0.01).unwrap();
    let n5 = Normal::new(0.0, 0.05).unwrap();
    let x = linspace(0.0, 2.9, 30);
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y: Vec<f64> = x_cusp.iter().map(|v| (-v.abs() * 7.2e-6).exp() + n1.sample(&mut rng)).collect();
        let t_tt = 1.0 / fit_curve(ModelShape::Cusp, &x_cusp, &y, None).unwrap().param("width").unwrap();
        worst_cusp = worst_cusp.max(rel(t_tt, 7.2e-6));

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y: Vec<f64> = x_decay.iter().map(|t| (-t / tau).exp() * (1.0 + n5.sample(&mut rng))).collect();
        let fit = fit_curve(ModelShape::ExpDecay, &x_decay, &y, None).unwrap();
        worst_tau = worst_tau.max(rel(fit.param("tau").unwrap(), tau));

        for (k, amp) in [0.1, 0.2].into_iter().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let noise = Normal::new(0.0, amp).unwrap();
            let y: Vec<f64> = x.iter().map(|v| 3.0 * v + 1.0 + noise.sample(&mut rng)).collect();
            sigma[k] += fit_curve(ModelShape::Linear, &x, &y, None).unwrap().sigmas[0];
        }
    }
    ensure!(worst_cusp < 0.03, "cusp t_TT off by {worst_cusp}");
    ensure!(worst_tau < 0.10, "τ off by {worst_tau}");
    let ratio = sigma[1] / sigma[0];
    ensure!(rel(ratio, 2.0) < 0.2, "σ ratio {ratio}");
    Ok(format!(
        "noisy worst: t_TT {:.2}%, τ {:.2}%, σ ratio {ratio:.3}",
        100.0 * worst_cusp,
        100.0 * worst_tau
    ))
}

fn beer_lambert() -> Outcome {
    let x = linspace(-200e3, 200e3, 501);
    let od: Vec<f64> = x.iter().map(|d| 1.2 - 0.8 / (1.0 + (d / 15e3).powi(2))).collect();
    let trace = |role: Role, value: Vec<f64>| Trace {
        x_unit: XUnit::Hz,
        role,
        run_id: "synthetic".into(),
        x: x.clone(),
        value,
    };
    let (i0, b) = (2.0, 0.15);
    let i = trace(Role::I, od.iter().map(|o| b + (i0 - b) * (-o).exp()).collect());
    let i0 = trace(Role::I0, vec![i0; x.len()]);
    let b = trace(Role::B, vec![b; x.len()]);
    let got = beer_lambert_od(&i, &i0, &b).unwrap();
    let err = got.iter().zip(&od).map(|(g, w)| (g - w).abs()).fold(0.0, f64::max);
    ensure!(err < 1e-12, "round trip error {err:e}");
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..100 {
        let gain = 10f64.powf(rng.random_range(-3.0..3.0));
        let scale = |t: &Trace| Trace {
            value: t.value.iter().map(|v| v * gain).collect(),
            ..t.clone()
        };
        let scaled = beer_lambert_od(&scale(&i), &scale(&i0), &scale(&b)).unwrap();
        let d = scaled.iter().zip(&got).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        ensure!(d < 1e-12, "gain {gain}: {d:e}");
    }
    Ok(format!("round trip error {err:.1e}, 100 gains invariant"))
}

fn solver_hygiene() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = [0.0f64; 3];
    let mut min_eig = f64::INFINITY;
    for n in 0..1000 {
        let mut cell = CellSpec::preset(CellSpec::PRESET_NAMES[rng.random_range(0..4)]).unwrap();
        cell.intercept_b = rng.random_range(0.0..2e5);
        cell.optical_dephasing *= rng.random_range(0.2..3.0);
        let dc = rng.random_range(-1e9..1e9);
        let coupling = FieldSpec::coupling(rng.random_range(0.0..200.0), two_pi(dc));
        let probe = FieldSpec::probe(rng.random_range(0.01..20.0), two_pi(dc + rng.random_range(-1e6..1e6)));
        let atom = if rng.random_bool(0.5) { three() } else { four() };
        let g = build_generator(&atom, &cell, &coupling, &probe).unwrap();
        let (_, r) = steady_state_with_report(&g).map_err(|e| format!("set {n}: {e}"))?;
        worst[0] = worst[0].max(r.trace_error);
        worst[1] = worst[1].max(r.hermiticity_error);
        worst[2] = worst[2].max(r.relative_residual);
        min_eig = min_eig.min(r.min_eigenvalue);
    }
    ensure!(worst[0] <= 1e-9, "trace error {:e}", worst[0]);
    ensure!(worst[1] <= 1e-10, "hermiticity error {:e}", worst[1]);
    ensure!(min_eig >= -1e-8, "min eigenvalue {min_eig:e}");
    ensure!(worst[2] <= 1e-10, "residual {:e}", worst[2]);
    Ok(format!(
        "1000 sets: trace {:.0e}, hermiticity {:.0e}, residual {:.0e}, min eig {min_eig:.0e}",
        worst[0], worst[1], worst[2]
    ))
}

fn run_cli(args: &[&str], threads: Option<&str>) -> Result<(), String> {
    let mut c = Command::new(env!("CARGO_BIN_EXE_eitsim"));
    c.args(args);
    match threads {
        Some(n) => c.env("EITSIM_THREADS", n),
        None => c.env_remove("EITSIM_THREADS"),
    };
    let out = c.output().map_err(|e| e.to_string())?;
    ensure!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    Ok(())
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let line = dir.path().join("line.csv");
    std::fs::write(&line, "x,y\n0,1.1\n1,2.9\n2,5.2\n3,6.8\n4,9.1\n").unwrap();
    let line = line.to_str().unwrap();
    let cases: [&[&str]; 6] = [
        &["spectrum"],
        &["series", "--delta-c", "-800e6:800e6:9", "--probe-grid", "-250e3:250e3:201"],
        &["linewidth-scan"],
        &["broadening", "--cell", "paraffin"],
        &["storage", "--cell", "paraffin"],
        &["fit", "--input", line, "--shape", "linear", "--bootstrap", "200"],
    ];
    let mut count = 0;
    for (k, args) in cases.iter().enumerate() {
        let first = dir.path().join(format!("a{k}"));
        let again = dir.path().join(format!("b{k}"));
        let mut a = args.to_vec();
        a.extend(["--out", first.to_str().unwrap()]);
        run_cli(&a, Some("1"))?;
        let m = first.join("manifest.json");
        run_cli(&["run", "--from-manifest", m.to_str().unwrap(), "--out", again.to_str().unwrap()], None)?;
        let (x, y) = (files(&first), files(&again));
        ensure!(x == y, "{}: replay differs", args[0]);
        count += x.len();
    }
    Ok(format!("{count} artifacts byte-identical after replay at full parallelism"))
}

fn main() {
    let criteria: [Criterion; 14] = [
        ("field/intensity convention", field_intensity),
        ("residual Doppler at θ = 0", residual_doppler_collinear),
        ("transit broadening", transit),
        ("cusp transit time ↔ FWHM", cusp),
        ("dark-state exactness", dark_state),
        ("two-level oracle", two_level),
        ("three-level linewidth law", linewidth_law),
        ("four-level vs three-level", four_vs_three),
        ("coupling-detuning phenomenology", detuning_phenomenology),
        ("memory lifetimes", memory_lifetimes),
        ("fit engine", fit_engine),
        ("Beer–Lambert round trip", beer_lambert),
        ("solver hygiene", solver_hygiene),
        ("manifest replay determinism", determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|s| name.contains(s.as_str())) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{secs:.2} s]", k + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why} [{secs:.2} s]", k + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
