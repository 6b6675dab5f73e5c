//! Closed-form estimates of the non-power broadening mechanisms of the EIT
//! line: residual Doppler broadening in the ballistic and Dicke-narrowed
//! regimes, and diffusion-limited transit broadening.
//!
//! All functions return ordinary Hz.

use serde::Serialize;

use crate::atom::{AtomSpec, CellKind, CellSpec};
use crate::error::{Error, Result};
use crate::units::{angular_to_hz, C, K_B};

/// First zero of J₀; sets the lowest diffusion mode of a cylinder.
pub const BESSEL_J0_FIRST_ZERO: f64 = 2.404_825_557_695_773;

/// RMS one-dimensional thermal velocity √(k_B T / m), m/s.
pub fn thermal_velocity(temperature: f64, mass: f64) -> Result<f64> {
    if !(temperature > 0.0) {
        return Err(Error::domain("temperature", temperature));
    }
    if !(mass > 0.0) {
        return Err(Error::domain("mass", mass));
    }
    Ok((K_B * temperature / mass).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// Free flight through the beams (evacuated cells).
    Ballistic,
    /// Diffusive motion in a buffer gas (Dicke regime).
    Diffusive,
}

impl Regime {
    pub fn for_cell(kind: CellKind) -> Self {
        match kind {
            CellKind::BufferGas => Regime::Diffusive,
            _ => Regime::Ballistic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BroadeningInput {
    /// K
    pub temperature: f64,
    /// kg
    pub mass: f64,
    /// Optical wavevector magnitude, rad/m.
    pub wavenumber: f64,
    /// Collinear wavevector mismatch 2π·ν_hf/c, rad/m.
    pub collinear_mismatch: f64,
    /// Angle between probe and coupling beams, rad. Small-angle domain,
    /// [0, 0.1].
    pub angle: f64,
    /// m²/s
    pub diffusion: f64,
    /// m
    pub beam_radius: f64,
}

impl BroadeningInput {
    pub fn new(atom: &AtomSpec, cell: &CellSpec, angle: f64) -> Self {
        BroadeningInput {
            temperature: cell.temperature,
            mass: atom.mass,
            wavenumber: atom.wavenumber(),
            collinear_mismatch: atom.ground_splitting / C,
            angle,
            diffusion: cell.diffusion,
            beam_radius: cell.beam_radius,
        }
    }

    /// |k_c − k_p| for beams at small angle θ: √(Δk∥² + (kθ)²).
    pub fn wavevector_mismatch(&self) -> f64 {
        self.collinear_mismatch.hypot(self.wavenumber * self.angle)
    }
}

/// Residual two-photon Doppler width Γ_D,res in Hz.
///
/// Ballistic: `|Δk|·v_th / 2π` (linear in θ once kθ ≫ Δk∥).
/// Diffusive: `|Δk|²·D / 2π` (quadratic in θ). The diffusive prefactor is
/// the standard Dicke-regime decay rate of a spin grating with wavevector
/// Δk and is a model choice.
pub fn residual_doppler(input: &BroadeningInput, regime: Regime) -> Result<f64> {
    let dk = input.wavevector_mismatch();
    match regime {
        Regime::Ballistic => {
            let v = thermal_velocity(input.temperature, input.mass)?;
            Ok(angular_to_hz(dk * v))
        }
        Regime::Diffusive => {
            if !(input.diffusion > 0.0) {
                return Err(Error::domain("diffusion", input.diffusion));
            }
            Ok(angular_to_hz(dk * dk * input.diffusion))
        }
    }
}

/// Decay rate of the lowest diffusion mode across a beam of radius R,
/// `D·(2.405/R)²`, returned in Hz.
pub fn transit_broadening_diffusion(diffusion: f64, beam_radius: f64) -> Result<f64> {
    if !(diffusion > 0.0) {
        return Err(Error::domain("diffusion", diffusion));
    }
    if !(beam_radius > 0.0) {
        return Err(Error::domain("beam radius", beam_radius));
    }
    let k = BESSEL_J0_FIRST_ZERO / beam_radius;
    Ok(angular_to_hz(diffusion * k * k))
}

/// FWHM (Hz) of the cusp `exp(−|Δ|·t_TT)` with Δ in ordinary Hz:
/// `2·ln2 / t_TT`.
pub fn cusp_fwhm_from_transit(transit_time: f64) -> Result<f64> {
    if !(transit_time > 0.0) {
        return Err(Error::domain("transit time", transit_time));
    }
    Ok(2.0 * std::f64::consts::LN_2 / transit_time)
}

pub fn transit_from_cusp_fwhm(fwhm: f64) -> Result<f64> {
    if !(fwhm > 0.0) {
        return Err(Error::domain("cusp FWHM", fwhm));
    }
    Ok(2.0 * std::f64::consts::LN_2 / fwhm)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BudgetEntry {
    pub mechanism: String,
    pub hz: f64,
}

/// Broadening budget for a cell: residual Doppler in the cell's regime,
/// diffusion transit broadening for buffer-gas cells, and the measured
/// zero-intensity intercept for comparison.
pub fn broadening_budget(atom: &AtomSpec, cell: &CellSpec, angle: f64) -> Result<Vec<BudgetEntry>> {
    let input = BroadeningInput::new(atom, cell, angle);
    let regime = Regime::for_cell(cell.kind);
    let mut out = vec![BudgetEntry {
        mechanism: format!(
            "residual-doppler-{}",
            match regime {
                Regime::Ballistic => "ballistic",
                Regime::Diffusive => "diffusive",
            }
        ),
        hz: residual_doppler(&input, regime)?,
    }];
    if cell.kind == CellKind::BufferGas {
        out.push(BudgetEntry {
            mechanism: "transit-diffusion".into(),
            hz: transit_broadening_diffusion(cell.diffusion, cell.beam_radius)?,
        });
    }
    out.push(BudgetEntry {
        mechanism: "intercept-b".into(),
        hz: cell.intercept_b,
    });
    Ok(out)
}
