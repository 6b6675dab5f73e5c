//! Browser bindings for the eitsim demo page (`www/index.html`).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use eitsim::atom::field_of_intensity;
use eitsim::broadening::broadening_budget;
use eitsim::fits::{fit_curve, r_squared, ModelShape};
use eitsim::spectra::{eit_spectrum, find_dip, linewidth_vs_intensity, linspace};
use eitsim::units::{angular_to_hz, hz_to_angular};
use eitsim::{AtomSpec, CellSpec, FieldSpec, ModelVariant};
use wasm_bindgen::prelude::*;

type Result<T> = std::result::Result<T, String>;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn js(e: String) -> JsError {
    JsError::new(&e)
}

fn atom(model: &str) -> Result<AtomSpec> {
    let variant: ModelVariant = model.parse()?;
    Ok(variant.atom(&AtomSpec::default_rb85_d1()))
}

fn cell(name: &str) -> Result<CellSpec> {
    CellSpec::preset(name).ok_or_else(|| format!("unknown cell `{name}`"))
}

#[wasm_bindgen]
pub fn cell_presets() -> Vec<String> {
    CellSpec::PRESET_NAMES.iter().map(|s| s.to_string()).collect()
}

#[wasm_bindgen]
pub struct SpectrumView {
    delta_p_hz: Vec<f64>,
    alpha: Vec<f64>,
    center_hz: f64,
    fwhm_hz: f64,
}

#[wasm_bindgen]
impl SpectrumView {
    /// Probe detuning relative to the coupling detuning, Hz.
    #[wasm_bindgen(getter)]
    pub fn delta_p_hz(&self) -> Vec<f64> {
        self.delta_p_hz.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn alpha(&self) -> Vec<f64> {
        self.alpha.clone()
    }

    /// NaN when the spectrum has no resolvable dip.
    #[wasm_bindgen(getter)]
    pub fn center_hz(&self) -> f64 {
        self.center_hz
    }

    #[wasm_bindgen(getter)]
    pub fn fwhm_hz(&self) -> f64 {
        self.fwhm_hz
    }
}

/// Probe absorption around two-photon resonance.
#[wasm_bindgen]
pub fn spectrum(
    model: &str,
    cell_name: &str,
    coupling_intensity: f64,
    delta_c_hz: f64,
    span_hz: f64,
    points: usize,
) -> std::result::Result<SpectrumView, JsError> {
    compute_spectrum(model, cell_name, coupling_intensity, delta_c_hz, span_hz, points).map_err(js)
}

fn compute_spectrum(
    model: &str,
    cell_name: &str,
    coupling_intensity: f64,
    delta_c_hz: f64,
    span_hz: f64,
    points: usize,
) -> Result<SpectrumView> {
    if !(span_hz > 0.0) || points < 3 {
        return Err("span must be positive and points at least 3".into());
    }
    let dc = hz_to_angular(delta_c_hz);
    let coupling = FieldSpec::coupling(field_of_intensity(coupling_intensity).map_err(err)?, dc);
    let grid = linspace(dc - hz_to_angular(span_hz), dc + hz_to_angular(span_hz), points);
    let s = eit_spectrum(&atom(model)?, &cell(cell_name)?, &coupling, &FieldSpec::probe(3.0, 0.0), &grid)
        .map_err(err)?;
    let (center_hz, fwhm_hz) = match find_dip(&s) {
        Ok(d) => (angular_to_hz(d.center - dc), angular_to_hz(d.fwhm)),
        Err(_) => (f64::NAN, f64::NAN),
    };
    Ok(SpectrumView {
        delta_p_hz: s.delta_p().iter().map(|&d| angular_to_hz(d - dc)).collect(),
        alpha: s.alpha().to_vec(),
        center_hz,
        fwhm_hz,
    })
}

#[wasm_bindgen]
pub struct LinewidthView {
    intensities: Vec<f64>,
    fwhm_hz: Vec<f64>,
    slope: f64,
    intercept_hz: f64,
    r_squared: f64,
    configured_b_hz: f64,
}

#[wasm_bindgen]
impl LinewidthView {
    #[wasm_bindgen(getter)]
    pub fn intensities(&self) -> Vec<f64> {
        self.intensities.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn fwhm_hz(&self) -> Vec<f64> {
        self.fwhm_hz.clone()
    }

    /// Hz per W/m².
    #[wasm_bindgen(getter)]
    pub fn slope(&self) -> f64 {
        self.slope
    }

    #[wasm_bindgen(getter)]
    pub fn intercept_hz(&self) -> f64 {
        self.intercept_hz
    }

    #[wasm_bindgen(getter)]
    pub fn r_squared(&self) -> f64 {
        self.r_squared
    }

    #[wasm_bindgen(getter)]
    pub fn configured_b_hz(&self) -> f64 {
        self.configured_b_hz
    }
}

/// Resonant EIT linewidth over a range of coupling intensities (W/m²) with
/// a straight-line fit.
#[wasm_bindgen]
pub fn linewidth_scan(
    model: &str,
    cell_name: &str,
    i_min: f64,
    i_max: f64,
    n: usize,
) -> std::result::Result<LinewidthView, JsError> {
    compute_linewidths(model, cell_name, i_min, i_max, n).map_err(js)
}

fn compute_linewidths(model: &str, cell_name: &str, i_min: f64, i_max: f64, n: usize) -> Result<LinewidthView> {
    if n < 4 || !(i_min >= 0.0 && i_max > i_min) {
        return Err("need 0 ≤ min < max and at least 4 intensities".into());
    }
    let cell = cell(cell_name)?;
    let intensities = linspace(i_min, i_max, n);
    let pts = linewidth_vs_intensity(
        &atom(model)?,
        &cell,
        &FieldSpec::coupling(0.0, 0.0),
        &intensities,
        &FieldSpec::probe(3.0, 0.0),
    )
    .map_err(err)?;
    let fwhm_hz: Vec<f64> = pts.iter().map(|p| p.fwhm_hz).collect();
    let fit = fit_curve(ModelShape::Linear, &intensities, &fwhm_hz, None).map_err(err)?;
    let model: Vec<f64> = intensities.iter().map(|&v| fit.predict(v)).collect();
    Ok(LinewidthView {
        r_squared: r_squared(&fwhm_hz, &model),
        slope: fit.params[0],
        intercept_hz: fit.params[1],
        configured_b_hz: cell.intercept_b,
        intensities,
        fwhm_hz,
    })
}

/// Broadening budget as `[mechanism, Hz]` pairs flattened into strings,
/// e.g. `["residual-doppler-ballistic", "1721.3", ...]`.
#[wasm_bindgen]
pub fn broadening(cell_name: &str, angle: f64) -> std::result::Result<Vec<String>, JsError> {
    budget(cell_name, angle).map_err(js)
}

fn budget(cell_name: &str, angle: f64) -> Result<Vec<String>> {
    if !(0.0..=0.1).contains(&angle) {
        return Err("angle must be within [0, 0.1] rad".into());
    }
    let budget = broadening_budget(&AtomSpec::default_rb85_d1(), &cell(cell_name)?, angle).map_err(err)?;
    Ok(budget
        .into_iter()
        .flat_map(|e| [e.mechanism, format!("{:.1}", e.hz)])
        .collect())
}
