//! Probe-detuning sweeps of the stationary absorption and the feature
//! measurements made on them.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::atom::{coherence_dephasing, field_of_intensity, AtomSpec, CellSpec, FieldSpec, Level};
use crate::bloch::{build_generator, probe_absorption, steady_state, ModelVariant};
use crate::config::{AtomDoc, CellDoc, FieldDoc};
use crate::error::{Error, Result};
use crate::par_map;
use crate::units::{angular_to_hz, hz_to_angular};

pub const MIN_SAMPLES: usize = 11;

/// Parameters a simulated spectrum was computed from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumMeta {
    pub variant: ModelVariant,
    pub atom: AtomDoc,
    pub cell: CellDoc,
    pub coupling: FieldDoc,
    pub probe: FieldDoc,
}

/// α_p sampled on a strictly increasing probe-detuning grid (rad/s).
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    delta_p: Vec<f64>,
    alpha: Vec<f64>,
    pub meta: Option<SpectrumMeta>,
}

impl Spectrum {
    pub fn new(delta_p: Vec<f64>, alpha: Vec<f64>) -> Result<Self> {
        if delta_p.len() != alpha.len() {
            return Err(Error::Invalid(format!(
                "{} detunings but {} absorption samples",
                delta_p.len(),
                alpha.len()
            )));
        }
        if delta_p.len() < MIN_SAMPLES {
            return Err(Error::Invalid(format!(
                "a spectrum needs at least {MIN_SAMPLES} samples, got {}",
                delta_p.len()
            )));
        }
        check_grid(&delta_p)?;
        if let Some(i) = alpha.iter().position(|a| !a.is_finite()) {
            return Err(Error::Invalid(format!("non-finite absorption at sample {i}")));
        }
        Ok(Spectrum {
            delta_p,
            alpha,
            meta: None,
        })
    }

    pub fn with_meta(mut self, meta: SpectrumMeta) -> Self {
        self.meta = Some(meta);
        self
    }

    /// Probe detunings, rad/s.
    pub fn delta_p(&self) -> &[f64] {
        &self.delta_p
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn len(&self) -> usize {
        self.delta_p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delta_p.is_empty()
    }

    pub fn delta_p_hz(&self) -> impl Iterator<Item = f64> + '_ {
        self.delta_p.iter().map(|&d| angular_to_hz(d))
    }

    /// Tidy CSV: `delta_p_hz,alpha_p`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "delta_p_hz,alpha_p")?;
        for (d, a) in self.delta_p_hz().zip(&self.alpha) {
            writeln!(w, "{d:e},{a:e}")?;
        }
        Ok(())
    }

    /// JSON sidecar: the full parameter set plus the grid extent.
    pub fn sidecar_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Sidecar<'a> {
            samples: usize,
            delta_p_start_hz: f64,
            delta_p_stop_hz: f64,
            meta: &'a Option<SpectrumMeta>,
        }
        Ok(serde_json::to_string_pretty(&Sidecar {
            samples: self.len(),
            delta_p_start_hz: angular_to_hz(self.delta_p[0]),
            delta_p_stop_hz: angular_to_hz(*self.delta_p.last().unwrap()),
            meta: &self.meta,
        })?)
    }

    /// α minus the straight line through the two end samples.
    pub fn feature(&self) -> Vec<f64> {
        let n = self.len();
        let (x0, x1) = (self.delta_p[0], self.delta_p[n - 1]);
        let (y0, y1) = (self.alpha[0], self.alpha[n - 1]);
        let slope = (y1 - y0) / (x1 - x0);
        self.delta_p
            .iter()
            .zip(&self.alpha)
            .map(|(&x, &y)| y - (y0 + slope * (x - x0)))
            .collect()
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if let Some(i) = grid.iter().position(|d| !d.is_finite()) {
        return Err(Error::Invalid(format!("non-finite detuning at sample {i}")));
    }
    if let Some(i) = grid.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::Invalid(format!(
            "detuning grid not strictly increasing at sample {}",
            i + 1
        )));
    }
    Ok(())
}

/// `n` evenly spaced points from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![start],
        _ => {
            let step = (stop - start) / (n - 1) as f64;
            (0..n)
                .map(|k| if k == n - 1 { stop } else { start + step * k as f64 })
                .collect()
        }
    }
}

/// `start:stop:n` range in ordinary Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeGrid {
    pub start_hz: f64,
    pub stop_hz: f64,
    pub n: usize,
}

impl ProbeGrid {
    pub fn hz(&self) -> Vec<f64> {
        linspace(self.start_hz, self.stop_hz, self.n)
    }

    pub fn angular(&self) -> Vec<f64> {
        self.hz().into_iter().map(hz_to_angular).collect()
    }
}

impl std::str::FromStr for ProbeGrid {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, n] = parts[..] else {
            return Err(format!("expected start:stop:n, got `{s}`"));
        };
        let start_hz: f64 = a.trim().parse().map_err(|e| format!("bad start `{a}`: {e}"))?;
        let stop_hz: f64 = b.trim().parse().map_err(|e| format!("bad stop `{b}`: {e}"))?;
        let n: usize = n.trim().parse().map_err(|e| format!("bad count `{n}`: {e}"))?;
        if !start_hz.is_finite() || !stop_hz.is_finite() {
            return Err("grid bounds must be finite".into());
        }
        if n < 2 || !(stop_hz > start_hz) {
            return Err(format!("`{s}` needs stop > start and n ≥ 2"));
        }
        Ok(ProbeGrid { start_hz, stop_hz, n })
    }
}

impl std::fmt::Display for ProbeGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}:{}", self.start_hz, self.stop_hz, self.n)
    }
}

fn meta(atom: &AtomSpec, cell: &CellSpec, coupling: &FieldSpec, probe: &FieldSpec) -> SpectrumMeta {
    SpectrumMeta {
        variant: if atom.is_three_level() {
            ModelVariant::ThreeLevel
        } else {
            ModelVariant::FourLevel
        },
        atom: AtomDoc::from_spec(atom),
        cell: CellDoc::from_spec(cell),
        coupling: FieldDoc::from_spec(coupling),
        probe: FieldDoc::from_spec(probe),
    }
}

/// Stationary α_p at every probe detuning of `grid` (rad/s). The probe's
/// own detuning is ignored.
pub fn eit_spectrum(
    atom: &AtomSpec,
    cell: &CellSpec,
    coupling: &FieldSpec,
    probe: &FieldSpec,
    grid: &[f64],
) -> Result<Spectrum> {
    if grid.len() < MIN_SAMPLES {
        return Err(Error::Invalid(format!(
            "a spectrum needs at least {MIN_SAMPLES} samples, got {}",
            grid.len()
        )));
    }
    check_grid(grid)?;
    let base = build_generator(atom, cell, coupling, probe)?;
    let alpha = par_map(grid, |&dp| {
        let mut drive = base.drive;
        drive.probe_detuning = dp;
        steady_state(&base.with_drive(drive))
            .map(|rho| probe_absorption(&rho))
            .map_err(|e| Error::AtDetuning {
                delta_p_hz: angular_to_hz(dp),
                source: Box::new(e),
            })
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    Ok(Spectrum::new(grid.to_vec(), alpha)?.with_meta(meta(atom, cell, coupling, probe)))
}

/// One spectrum per coupling detuning, each on the grid `Δp = Δc + offset`
/// so every spectrum is centered on its own two-photon resonance. Results
/// are in the order of `delta_c`.
pub fn detuning_series(
    atom: &AtomSpec,
    cell: &CellSpec,
    coupling: &FieldSpec,
    probe: &FieldSpec,
    delta_c: &[f64],
    offsets: &[f64],
) -> Result<Vec<Spectrum>> {
    par_map(delta_c, |&dc| {
        let grid: Vec<f64> = offsets.iter().map(|o| dc + o).collect();
        eit_spectrum(atom, cell, &coupling.with_detuning(dc), probe, &grid)
    })
    .into_iter()
    .collect()
}

fn argmin(v: &[f64]) -> usize {
    (0..v.len()).min_by(|&a, &b| v[a].total_cmp(&v[b])).unwrap_or(0)
}

fn argmax(v: &[f64]) -> usize {
    (0..v.len()).max_by(|&a, &b| v[a].total_cmp(&v[b])).unwrap_or(0)
}

/// Location and width of the transparency dip, both in rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dip {
    /// Position of the transparency minimum (parabolic vertex through the
    /// lowest sample and its neighbours).
    pub center: f64,
    pub fwhm: f64,
    /// Depth below the endpoint baseline, in units of α.
    pub depth: f64,
}

/// Finds the dominant dip of α below the straight line through the end
/// samples and measures its full width at half depth by linear
/// interpolation.
pub fn find_dip(s: &Spectrum) -> Result<Dip> {
    let d = s.feature();
    let x = s.delta_p();
    let n = d.len();
    let i0 = argmin(&d);
    let depth = -d[i0];
    let scale = s.alpha().iter().fold(0.0f64, |m, a| m.max(a.abs()));
    if i0 == 0 || i0 == n - 1 || !(depth > 1e-12 * scale) || depth <= 0.0 {
        return Err(Error::NoTransparencyFeature);
    }
    let half = -0.5 * depth;
    let crossing = |i: usize, j: usize| x[i] + (half - d[i]) * (x[j] - x[i]) / (d[j] - d[i]);
    let left = (0..i0).rev().find(|&i| d[i] >= half).map(|i| crossing(i, i + 1));
    let right = (i0 + 1..n).find(|&i| d[i] >= half).map(|i| crossing(i - 1, i));
    // vertex of the parabola through the minimum and its neighbours
    let (xa, xb, xc) = (x[i0 - 1], x[i0], x[i0 + 1]);
    let (ya, yb, yc) = (d[i0 - 1], d[i0], d[i0 + 1]);
    let num = (xb - xa).powi(2) * (yb - yc) - (xb - xc).powi(2) * (yb - ya);
    let den = (xb - xa) * (yb - yc) - (xb - xc) * (yb - ya);
    let center = if den != 0.0 {
        (xb - 0.5 * num / den).clamp(xa, xc)
    } else {
        xb
    };
    match (left, right) {
        (Some(l), Some(r)) => Ok(Dip {
            center,
            fwhm: r - l,
            depth,
        }),
        _ => Err(Error::NoTransparencyFeature),
    }
}

/// FWHM of the transparency dip in ordinary Hz, measured from the local
/// absorption background (the line through the end samples).
pub fn extract_fwhm(s: &Spectrum) -> Result<f64> {
    find_dip(s).map(|d| angular_to_hz(d.fwhm))
}

/// `(α_ref − α)/α_ref` at the dip center, where `reference` is the same
/// sweep without coupling. The dip center is the largest drop of α below
/// the reference. Clamped to [0, 1].
pub fn extract_contrast(s: &Spectrum, reference: &Spectrum) -> Result<f64> {
    if s.delta_p() != reference.delta_p() {
        return Err(Error::Invalid("spectrum and reference grids differ".into()));
    }
    let drop: Vec<f64> = s
        .alpha()
        .iter()
        .zip(reference.alpha())
        .map(|(a, r)| a - r)
        .collect();
    let i0 = argmin(&drop);
    let base = reference.alpha()[i0];
    let scale = s.alpha().iter().fold(0.0f64, |m, a| m.max(a.abs()));
    if !(base > 1e-300) || base <= 1e-9 * scale {
        return Err(Error::ZeroBaseline);
    }
    Ok(((base - s.alpha()[i0]) / base).clamp(0.0, 1.0))
}

/// The absorption background of `s` (the line through its end samples) as
/// a spectrum on the same grid. The closed model pumps the no-coupling
/// steady state dark, so this serves as the contrast reference; the grid
/// should extend many FWHM past the dip.
pub fn background_reference(s: &Spectrum) -> Spectrum {
    let alpha = s.alpha().iter().zip(s.feature()).map(|(a, f)| a - f).collect();
    Spectrum::new(s.delta_p().to_vec(), alpha).expect("same grid")
}

fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xw, yw)| 0.5 * (xw[1] - xw[0]) * (yw[0] + yw[1]))
        .sum()
}

/// Left/right imbalance of the feature around its extremum:
/// `(A_R − A_L)/(|A_L| + |A_R|)`, where A are the areas of α − baseline on
/// either side of the point of largest |α − baseline|, over the widest
/// window symmetric about that point. Zero for an even feature. Only
/// meaningful for ordering spectra against each other.
pub fn asymmetry(s: &Spectrum) -> f64 {
    let d = s.feature();
    let x = s.delta_p();
    let n = d.len();
    let i0 = (0..n)
        .max_by(|&a, &b| d[a].abs().total_cmp(&d[b].abs()))
        .unwrap_or(0);
    let half = (x[i0] - x[0]).min(x[n - 1] - x[i0]);
    if !(half > 0.0) {
        return 0.0;
    }
    let interp = |t: f64| -> f64 {
        let k = x.partition_point(|&v| v < t).clamp(1, n - 1);
        let (xa, xb) = (x[k - 1], x[k]);
        d[k - 1] + (d[k] - d[k - 1]) * (t - xa) / (xb - xa)
    };
    // areas sampled on the mirror-image grid so an even feature cancels exactly
    let m = 2 * (i0.max(n - 1 - i0)).max(8);
    let h = half / m as f64;
    let side = |sign: f64| -> f64 {
        (0..m)
            .map(|k| {
                let a = interp(x[i0] + sign * h * k as f64);
                let b = interp(x[i0] + sign * h * (k + 1) as f64);
                0.5 * h * (a + b)
            })
            .sum()
    };
    let (left, right) = (side(-1.0), side(1.0));
    let norm = left.abs() + right.abs();
    if norm == 0.0 {
        0.0
    } else {
        (right - left) / norm
    }
}

/// ∫(α − baseline) dΔp in α·rad/s. Negative when transparency dominates,
/// positive when the feature is net absorptive.
pub fn net_feature_area(s: &Spectrum) -> f64 {
    trapezoid(s.delta_p(), &s.feature())
}

/// +1 when the absorptive lobe sits at larger Δp than the transparency
/// lobe, −1 when it sits at smaller Δp, 0 when either lobe is missing.
pub fn feature_order(s: &Spectrum) -> i8 {
    let d = s.feature();
    let (imin, imax) = (argmin(&d), argmax(&d));
    if d[imin] >= 0.0 || d[imax] <= 0.0 {
        return 0;
    }
    let x = s.delta_p();
    if x[imax] > x[imin] {
        1
    } else {
        -1
    }
}

/// Three-level weak-probe estimate of the dip half width (rad/s):
/// `γ₁₂ + Ω_c²/(4γ₁₄)`.
pub fn estimated_half_width(atom: &AtomSpec, cell: &CellSpec, coupling: &FieldSpec) -> f64 {
    let g = coherence_dephasing(atom, cell);
    let gamma12 = g.get(Level::G1, Level::G2);
    let gamma14 = g.get(Level::G1, Level::E4);
    let omega_c = atom.rabi(Level::G2, Level::E4, coupling.amplitude);
    gamma12 + omega_c * omega_c / (4.0 * gamma14)
}

/// Resonant dip measured in two passes: a coarse sweep of ±30 estimated
/// half widths around the two-photon resonance, then 2001 points over ±20
/// measured FWHM around the coarse center.
pub fn measure_dip(
    atom: &AtomSpec,
    cell: &CellSpec,
    coupling: &FieldSpec,
    probe: &FieldSpec,
) -> Result<(Dip, Spectrum)> {
    let hw = estimated_half_width(atom, cell, coupling);
    let center = coupling.detuning;
    let coarse = eit_spectrum(
        atom,
        cell,
        coupling,
        probe,
        &linspace(center - 30.0 * hw, center + 30.0 * hw, 801),
    )?;
    let dip = find_dip(&coarse)?;
    let span = 20.0 * dip.fwhm;
    let fine = eit_spectrum(
        atom,
        cell,
        coupling,
        probe,
        &linspace(dip.center - span, dip.center + span, 2001),
    )?;
    Ok((find_dip(&fine)?, fine))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinewidthPoint {
    /// Coupling intensity, W/m².
    pub intensity: f64,
    pub fwhm_hz: f64,
    /// Dip center, Hz.
    pub center_hz: f64,
}

/// Resonant dip FWHM at each coupling intensity (W/m²). `coupling`
/// supplies detuning and geometry; its amplitude is replaced.
pub fn linewidth_vs_intensity(
    atom: &AtomSpec,
    cell: &CellSpec,
    coupling: &FieldSpec,
    intensities: &[f64],
    probe: &FieldSpec,
) -> Result<Vec<LinewidthPoint>> {
    par_map(intensities, |&i| {
        let c = coupling.with_amplitude(field_of_intensity(i)?);
        let (dip, _) = measure_dip(atom, cell, &c, probe)?;
        Ok(LinewidthPoint {
            intensity: i,
            fwhm_hz: angular_to_hz(dip.fwhm),
            center_hz: angular_to_hz(dip.center),
        })
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::two_pi;

    fn lorentz_dip(gamma: f64, span: f64, n: usize) -> Spectrum {
        let x = linspace(-span, span, n);
        let y = x.iter().map(|d| 1.0 - 0.5 * gamma * gamma / (d * d + gamma * gamma)).collect();
        Spectrum::new(x, y).unwrap()
    }

    #[test]
    fn linspace_endpoints() {
        let v = linspace(-1.0, 1.0, 5);
        assert_eq!(v, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(linspace(3.0, 4.0, 1), vec![3.0]);
    }

    #[test]
    fn spectrum_invariants() {
        assert!(Spectrum::new(linspace(0.0, 1.0, 10), vec![0.0; 10]).is_err());
        let mut x = linspace(0.0, 1.0, 11);
        x[5] = x[4];
        assert!(Spectrum::new(x, vec![0.0; 11]).is_err());
        let mut y = vec![0.0; 11];
        y[3] = f64::NAN;
        assert!(Spectrum::new(linspace(0.0, 1.0, 11), y).is_err());
    }

    #[test]
    fn grid_parsing() {
        let g: ProbeGrid = "-50e3:50e3:201".parse().unwrap();
        assert_eq!(g.n, 201);
        assert_eq!(g.hz()[100], 0.0);
        assert!("1:2".parse::<ProbeGrid>().is_err());
        assert!("2:1:10".parse::<ProbeGrid>().is_err());
        assert!("0:1:x".parse::<ProbeGrid>().is_err());
    }

    #[test]
    fn lorentzian_fwhm() {
        let gamma = two_pi(1.0e3);
        let s = lorentz_dip(gamma, 50.0 * gamma, 2001);
        let f = extract_fwhm(&s).unwrap();
        let want = 2.0 * gamma / (2.0 * std::f64::consts::PI);
        assert!((f - want).abs() / want < 1e-3, "{f} vs {want}");
    }

    #[test]
    fn cusp_fwhm() {
        // δ in Hz, w in Hz
        let w = 3.0e3;
        let x_hz = linspace(-100e3, 100e3, 4001);
        let y: Vec<f64> = x_hz.iter().map(|d| 1.0 - (-(d.abs()) / w).exp()).collect();
        let s = Spectrum::new(x_hz.iter().map(|&d| hz_to_angular(d)).collect(), y).unwrap();
        let f = extract_fwhm(&s).unwrap();
        let want = 2.0 * std::f64::consts::LN_2 * w;
        assert!((f - want).abs() / want < 2e-3, "{f} vs {want}");
    }

    #[test]
    fn flat_and_absorptive_spectra_have_no_dip() {
        let flat = Spectrum::new(linspace(-1.0, 1.0, 21), vec![0.3; 21]).unwrap();
        assert!(matches!(extract_fwhm(&flat), Err(Error::NoTransparencyFeature)));
        let x = linspace(-5.0, 5.0, 101);
        let y = x.iter().map(|d| 1.0 / (1.0 + d * d)).collect();
        let peak = Spectrum::new(x, y).unwrap();
        assert!(matches!(extract_fwhm(&peak), Err(Error::NoTransparencyFeature)));
    }

    #[test]
    fn contrast_limits() {
        let x = linspace(-5.0, 5.0, 101);
        let reference = Spectrum::new(x.clone(), vec![1.0; 101]).unwrap();
        let y: Vec<f64> = x.iter().map(|d| 1.0 - 1.0 / (1.0 + d * d)).collect();
        let full = Spectrum::new(x.clone(), y).unwrap();
        assert!((extract_contrast(&full, &reference).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(extract_contrast(&reference, &reference).unwrap(), 0.0);
        let zero = Spectrum::new(x, vec![0.0; 101]).unwrap();
        assert!(matches!(extract_contrast(&zero, &zero), Err(Error::ZeroBaseline)));
    }

    #[test]
    fn symmetric_feature_has_zero_asymmetry() {
        let s = lorentz_dip(1.0, 20.0, 401);
        assert!(asymmetry(&s).abs() < 1e-12);
        assert_eq!(feature_order(&s), 0);
        assert!(net_feature_area(&s) < 0.0);
    }

    #[test]
    fn dispersive_feature_order() {
        let x = linspace(-10.0, 10.0, 401);
        let y: Vec<f64> = x.iter().map(|d| d / (1.0 + d * d)).collect();
        let s = Spectrum::new(x.clone(), y.clone()).unwrap();
        assert_eq!(feature_order(&s), 1);
        let neg = Spectrum::new(x, y.iter().map(|v| -v).collect()).unwrap();
        assert_eq!(feature_order(&neg), -1);
    }

    #[test]
    fn csv_header_and_rows() {
        let s = lorentz_dip(1.0, 5.0, 11);
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("delta_p_hz,alpha_p\n"));
        assert_eq!(text.lines().count(), 12);
    }
}
