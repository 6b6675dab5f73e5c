//! JSON documents for atoms, cells and fields.
//!
//! Rates and detunings are written in ordinary Hz and converted to rad/s on
//! load. A document may name a preset and override any subset of its
//! fields:
//!
//! ```json
//! { "preset": "paraffin", "intercept_b_hz": 20000 }
//! ```

use serde::{Deserialize, Serialize};

use crate::atom::{AtomSpec, CellKind, CellSpec, DipoleMoments, FieldRole, FieldSpec};
use crate::error::{Error, Result};
use crate::units::{angular_to_hz, hz_to_angular};

pub const ATOM_PRESETS: [&str; 1] = ["rb85-d1"];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_splitting_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub excited_splitting_hz: Option<f64>,
    /// Γ₁..Γ₄ in Hz.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay_hz: Option<[f64; 4]>,
    /// C·m
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dipoles: Option<DipoleMoments>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass_kg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wavelength_m: Option<f64>,
}

impl AtomDoc {
    pub fn preset(name: &str) -> Self {
        AtomDoc {
            preset: Some(name.to_string()),
            ..Default::default()
        }
    }

    /// Fully resolved document (no preset reference).
    pub fn from_spec(a: &AtomSpec) -> Self {
        AtomDoc {
            preset: None,
            ground_splitting_hz: Some(angular_to_hz(a.ground_splitting)),
            excited_splitting_hz: Some(angular_to_hz(a.excited_splitting)),
            decay_hz: Some(a.decay.map(angular_to_hz)),
            dipoles: Some(a.dipoles),
            mass_kg: Some(a.mass),
            wavelength_m: Some(a.wavelength),
        }
    }

    pub fn to_spec(&self) -> Result<AtomSpec> {
        let mut a = match self.preset.as_deref() {
            None | Some("rb85-d1") => AtomSpec::default_rb85_d1(),
            Some(other) => return Err(Error::Invalid(format!("unknown atom preset `{other}`"))),
        };
        if let Some(v) = self.ground_splitting_hz {
            a.ground_splitting = hz_to_angular(v);
        }
        if let Some(v) = self.excited_splitting_hz {
            a.excited_splitting = hz_to_angular(v);
        }
        if let Some(v) = self.decay_hz {
            a.decay = v.map(hz_to_angular);
        }
        if let Some(v) = self.dipoles {
            a.dipoles = v;
        }
        if let Some(v) = self.mass_kg {
            a.mass = v;
        }
        if let Some(v) = self.wavelength_m {
            a.wavelength = v;
        }
        a.validate()?;
        Ok(a)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    /// Without a preset, the kind selects its canonical preset as the base.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<CellKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optical_dephasing_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pressure_dephasing_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intercept_b_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub excited_dephasing_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pressure_torr: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diffusion_m2_per_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beam_radius_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cell_radius_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cell_length_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature_k: Option<f64>,
}

fn canonical_cell(kind: CellKind) -> CellSpec {
    match kind {
        CellKind::BufferGas => CellSpec::ne_5torr(),
        CellKind::CoatedAlkene => CellSpec::alkene(),
        CellKind::CoatedParaffin => CellSpec::paraffin(),
        CellKind::Reference => CellSpec::reference(),
    }
}

impl CellDoc {
    pub fn preset(name: &str) -> Self {
        CellDoc {
            preset: Some(name.to_string()),
            ..Default::default()
        }
    }

    pub fn from_spec(c: &CellSpec) -> Self {
        CellDoc {
            preset: None,
            kind: Some(c.kind),
            optical_dephasing_hz: Some(angular_to_hz(c.optical_dephasing)),
            pressure_dephasing_hz: Some(angular_to_hz(c.pressure_dephasing)),
            intercept_b_hz: Some(c.intercept_b),
            excited_dephasing_hz: c.excited_dephasing.map(angular_to_hz),
            pressure_torr: Some(c.pressure_torr),
            diffusion_m2_per_s: Some(c.diffusion),
            beam_radius_m: Some(c.beam_radius),
            cell_radius_m: Some(c.cell_radius),
            cell_length_m: Some(c.cell_length),
            temperature_k: Some(c.temperature),
        }
    }

    pub fn to_spec(&self) -> Result<CellSpec> {
        let mut c = match (&self.preset, self.kind) {
            (Some(name), _) => CellSpec::preset(name).ok_or_else(|| {
                Error::Invalid(format!(
                    "unknown cell preset `{name}` (expected one of {})",
                    CellSpec::PRESET_NAMES.join(", ")
                ))
            })?,
            (None, Some(kind)) => canonical_cell(kind),
            (None, None) => {
                return Err(Error::Invalid("cell document needs `preset` or `kind`".into()))
            }
        };
        if let Some(k) = self.kind {
            c.kind = k;
        }
        if let Some(v) = self.optical_dephasing_hz {
            c.optical_dephasing = hz_to_angular(v);
        }
        if let Some(v) = self.pressure_dephasing_hz {
            c.pressure_dephasing = hz_to_angular(v);
        }
        if let Some(v) = self.intercept_b_hz {
            c.intercept_b = v;
        }
        if let Some(v) = self.excited_dephasing_hz {
            c.excited_dephasing = Some(hz_to_angular(v));
        }
        if let Some(v) = self.pressure_torr {
            c.pressure_torr = v;
        }
        if let Some(v) = self.diffusion_m2_per_s {
            c.diffusion = v;
        }
        if let Some(v) = self.beam_radius_m {
            c.beam_radius = v;
        }
        if let Some(v) = self.cell_radius_m {
            c.cell_radius = v;
        }
        if let Some(v) = self.cell_length_m {
            c.cell_length = v;
        }
        if let Some(v) = self.temperature_k {
            c.temperature = v;
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldDoc {
    pub role: FieldRole,
    /// Half-amplitude, V/m.
    pub amplitude_v_per_m: f64,
    pub detuning_hz: f64,
    #[serde(default)]
    pub angle_rad: f64,
}

impl FieldDoc {
    pub fn from_spec(f: &FieldSpec) -> Self {
        FieldDoc {
            role: f.role,
            amplitude_v_per_m: f.amplitude,
            detuning_hz: angular_to_hz(f.detuning),
            angle_rad: f.angle,
        }
    }

    pub fn to_spec(&self) -> Result<FieldSpec> {
        let f = FieldSpec {
            role: self.role,
            amplitude: self.amplitude_v_per_m,
            detuning: hz_to_angular(self.detuning_hz),
            angle: self.angle_rad,
        };
        f.validate()?;
        Ok(f)
    }
}

/// Resolves a `--cell` style argument: a preset name or a path to a
/// [`CellDoc`] JSON file.
pub fn resolve_cell(arg: &str) -> Result<(CellSpec, CellDoc)> {
    if let Some(c) = CellSpec::preset(arg) {
        return Ok((c, CellDoc::preset(arg)));
    }
    let path = std::path::Path::new(arg);
    if !path.exists() {
        return Err(Error::Invalid(format!(
            "`{arg}` is neither a cell preset ({}) nor an existing file",
            CellSpec::PRESET_NAMES.join(", ")
        )));
    }
    let text = std::fs::read_to_string(path)?;
    let doc: CellDoc = serde_json::from_str(&text)?;
    Ok((doc.to_spec()?, doc))
}
