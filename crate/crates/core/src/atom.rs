//! Level structure, rate tables and field conventions for the ⁸⁵Rb D1
//! Λ system.
//!
//! Levels are numbered from the lowest energy up:
//!
//! | level | state               |
//! |-------|---------------------|
//! | 1     | 5S₁/₂, F = 2        |
//! | 2     | 5S₁/₂, F = 3        |
//! | 3     | 5P₁/₂, F′ = 2       |
//! | 4     | 5P₁/₂, F′ = 3       |
//!
//! The probe drives 1–3 and 1–4, the coupling drives 2–3 and 2–4.
//!
//! Field amplitudes are half-amplitudes: a field is written
//! `ℰ(t) = E·e^(−iωt) + c.c.`, the Rabi frequency is `Ω = 2μE/ħ`, and the
//! intensity is `I = 2·c·n·ε₀·E²`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{two_pi, AMU, C, EPS0, HBAR};

/// One of the four hyperfine levels, in energy order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Level {
    /// 5S₁/₂ F = 2
    G1,
    /// 5S₁/₂ F = 3
    G2,
    /// 5P₁/₂ F′ = 2
    E3,
    /// 5P₁/₂ F′ = 3
    E4,
}

impl Level {
    pub const ALL: [Level; 4] = [Level::G1, Level::G2, Level::E3, Level::E4];

    /// Zero-based matrix index.
    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_excited(self) -> bool {
        matches!(self, Level::E3 | Level::E4)
    }
}

/// Transition dipole moments in C·m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DipoleMoments {
    pub d13: f64,
    pub d14: f64,
    pub d23: f64,
    pub d24: f64,
}

impl DipoleMoments {
    /// Moment between a ground level (1 or 2) and an excited level (3 or 4).
    pub fn between(&self, ground: Level, excited: Level) -> f64 {
        match (ground, excited) {
            (Level::G1, Level::E3) => self.d13,
            (Level::G1, Level::E4) => self.d14,
            (Level::G2, Level::E3) => self.d23,
            (Level::G2, Level::E4) => self.d24,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomSpec {
    /// ω₂₁, rad/s.
    pub ground_splitting: f64,
    /// ω₄₃, rad/s.
    pub excited_splitting: f64,
    /// Total population decay rates Γ₁..Γ₄, rad/s.
    pub decay: [f64; 4],
    pub dipoles: DipoleMoments,
    /// kg
    pub mass: f64,
    /// D1 vacuum wavelength, m.
    pub wavelength: f64,
}

/// Probe calibration point: 2.8 µW/cm² gives a probe Rabi frequency of
/// 2π·50.6 kHz.
pub const PROBE_CALIBRATION_INTENSITY: f64 = 0.028;
pub const PROBE_CALIBRATION_RABI_HZ: f64 = 50.6e3;

/// Natural linewidth of the Rb D1 excited levels, Hz.
pub const RB_D1_LINEWIDTH_HZ: f64 = 5.75e6;
/// Ground hyperfine splitting of ⁸⁵Rb, Hz.
pub const RB85_GROUND_SPLITTING_HZ: f64 = 3.035_732_439e9;
/// 5P₁/₂ F′=3 – F′=2 splitting of ⁸⁵Rb, Hz.
pub const RB85_EXCITED_SPLITTING_HZ: f64 = 362e6;
/// ⁸⁵Rb atomic mass, u.
pub const RB85_MASS_U: f64 = 84.911_789_738;
/// Rb D1 vacuum wavelength, m.
pub const RB_D1_WAVELENGTH: f64 = 794.979e-9;

impl AtomSpec {
    /// The default ⁸⁵Rb D1 atom. All four dipole moments are set to the
    /// value calibrated against the probe calibration point.
    pub fn default_rb85_d1() -> Self {
        let mu = calibrate_dipole(
            PROBE_CALIBRATION_INTENSITY,
            two_pi(PROBE_CALIBRATION_RABI_HZ),
        )
        .expect("calibration point is valid");
        let gamma = two_pi(RB_D1_LINEWIDTH_HZ);
        AtomSpec {
            ground_splitting: two_pi(RB85_GROUND_SPLITTING_HZ),
            excited_splitting: two_pi(RB85_EXCITED_SPLITTING_HZ),
            decay: [0.0, 0.0, gamma, gamma],
            dipoles: DipoleMoments {
                d13: mu,
                d14: mu,
                d23: mu,
                d24: mu,
            },
            mass: RB85_MASS_U * AMU,
            wavelength: RB_D1_WAVELENGTH,
        }
    }

    /// Same atom with level 3 decoupled from both fields (μ₁₃ = μ₂₃ = 0).
    pub fn three_level(&self) -> Self {
        let mut out = *self;
        out.dipoles.d13 = 0.0;
        out.dipoles.d23 = 0.0;
        out
    }

    pub fn is_three_level(&self) -> bool {
        self.dipoles.d13 == 0.0 && self.dipoles.d23 == 0.0
    }

    /// D1 wavevector magnitude, rad/m.
    pub fn wavenumber(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.wavelength
    }

    /// Rabi frequency `2μE/ħ` (rad/s) for half-amplitude `field` (V/m).
    pub fn rabi(&self, ground: Level, excited: Level, field: f64) -> f64 {
        rabi_frequency(self.dipoles.between(ground, excited), field)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ground_splitting > 0.0) {
            return Err(Error::domain("ground_splitting", self.ground_splitting));
        }
        if !(self.excited_splitting > 0.0) {
            return Err(Error::domain("excited_splitting", self.excited_splitting));
        }
        if self.decay[0] != 0.0 || self.decay[1] != 0.0 {
            return Err(Error::Invalid("ground levels must not decay".into()));
        }
        if !(self.decay[2] > 0.0 && self.decay[3] > 0.0) {
            return Err(Error::Invalid("excited decay rates must be positive".into()));
        }
        let d = self.dipoles;
        for (name, v) in [("d13", d.d13), ("d14", d.d14), ("d23", d.d23), ("d24", d.d24)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::domain(name, v));
            }
        }
        if !(self.mass > 0.0) {
            return Err(Error::domain("mass", self.mass));
        }
        if !(self.wavelength > 0.0) {
            return Err(Error::domain("wavelength", self.wavelength));
        }
        Ok(())
    }
}

#[inline]
pub fn rabi_frequency(dipole: f64, field: f64) -> f64 {
    2.0 * dipole * field / HBAR
}

/// Intensity (W/m²) of a field with half-amplitude `field` (V/m) in vacuum.
pub fn intensity_of_field(field: f64) -> Result<f64> {
    intensity_of_field_in(field, 1.0)
}

pub fn intensity_of_field_in(field: f64, refractive_index: f64) -> Result<f64> {
    if !(field >= 0.0) {
        return Err(Error::domain("field amplitude", field));
    }
    Ok(2.0 * C * refractive_index * EPS0 * field * field)
}

/// Half-amplitude (V/m) of a field with intensity `intensity` (W/m²).
pub fn field_of_intensity(intensity: f64) -> Result<f64> {
    field_of_intensity_in(intensity, 1.0)
}

pub fn field_of_intensity_in(intensity: f64, refractive_index: f64) -> Result<f64> {
    if !(intensity >= 0.0) {
        return Err(Error::domain("intensity", intensity));
    }
    Ok((intensity / (2.0 * C * refractive_index * EPS0)).sqrt())
}

/// Dipole moment that produces Rabi frequency `rabi_ref` (rad/s) at
/// intensity `intensity_ref` (W/m²). A zero Rabi frequency yields zero.
pub fn calibrate_dipole(intensity_ref: f64, rabi_ref: f64) -> Result<f64> {
    if !(intensity_ref > 0.0) {
        return Err(Error::domain("reference intensity", intensity_ref));
    }
    if !(rabi_ref >= 0.0) {
        return Err(Error::domain("reference Rabi frequency", rabi_ref));
    }
    let field = field_of_intensity(intensity_ref)?;
    Ok(HBAR * rabi_ref / (2.0 * field))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellKind {
    CoatedParaffin,
    CoatedAlkene,
    BufferGas,
    Reference,
}

/// Per-cell decoherence and geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSpec {
    pub kind: CellKind,
    /// Collisional dephasing of the optical coherences from the folded
    /// Doppler width, rad/s.
    pub optical_dephasing: f64,
    /// Extra optical dephasing from buffer-gas collisions, rad/s.
    pub pressure_dephasing: f64,
    /// Zero-intensity EIT linewidth b, Hz. The ground-coherence dephasing
    /// is `γ₁₂ᶜᵒˡˡ = 2π·b/2`.
    pub intercept_b: f64,
    /// γ₃₄ᶜᵒˡˡ, rad/s. `None` means "same as γ₁₂ᶜᵒˡˡ".
    pub excited_dephasing: Option<f64>,
    pub pressure_torr: f64,
    /// m²/s
    pub diffusion: f64,
    /// m
    pub beam_radius: f64,
    pub cell_radius: f64,
    pub cell_length: f64,
    /// K
    pub temperature: f64,
}

const CELL_LENGTH: f64 = 75e-3;
const CELL_RADIUS: f64 = 12.5e-3;
const BEAM_RADIUS: f64 = 2.8e-3;
const ROOM_TEMPERATURE: f64 = 295.0;
const DOPPLER_DEPHASING_HZ: f64 = 500e6;

impl CellSpec {
    fn coated(kind: CellKind, intercept_b: f64) -> Self {
        CellSpec {
            kind,
            optical_dephasing: two_pi(DOPPLER_DEPHASING_HZ),
            pressure_dephasing: 0.0,
            intercept_b,
            excited_dephasing: None,
            pressure_torr: 0.0,
            diffusion: 0.0,
            beam_radius: BEAM_RADIUS,
            cell_radius: CELL_RADIUS,
            cell_length: CELL_LENGTH,
            temperature: ROOM_TEMPERATURE,
        }
    }

    /// Paraffin-coated cell filled with 5 Torr of Ne.
    pub fn ne_5torr() -> Self {
        CellSpec {
            pressure_dephasing: two_pi(25e6),
            pressure_torr: 5.0,
            diffusion: 30e-4,
            ..Self::coated(CellKind::BufferGas, 1.5e3)
        }
    }

    pub fn alkene() -> Self {
        Self::coated(CellKind::CoatedAlkene, 16e3)
    }

    pub fn paraffin() -> Self {
        Self::coated(CellKind::CoatedParaffin, 33.3e3)
    }

    /// Uncoated evacuated cell. Its intercept is the transit-limited cusp
    /// width `2·ln2/t_TT` for t_TT = 7.2 µs.
    pub fn reference() -> Self {
        Self::coated(CellKind::Reference, 2.0 * std::f64::consts::LN_2 / 7.2e-6)
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "ne-5torr" => Some(Self::ne_5torr()),
            "alkene" => Some(Self::alkene()),
            "paraffin" => Some(Self::paraffin()),
            "reference" => Some(Self::reference()),
            _ => None,
        }
    }

    pub const PRESET_NAMES: [&'static str; 4] = ["ne-5torr", "alkene", "paraffin", "reference"];

    /// γ₁₂ᶜᵒˡˡ in rad/s.
    pub fn ground_dephasing(&self) -> f64 {
        two_pi(self.intercept_b / 2.0)
    }

    /// γ₃₄ᶜᵒˡˡ in rad/s.
    pub fn excited_dephasing(&self) -> f64 {
        self.excited_dephasing.unwrap_or_else(|| self.ground_dephasing())
    }

    /// Total collisional dephasing shared by the four optical coherences.
    pub fn optical_collisional(&self) -> f64 {
        self.optical_dephasing + self.pressure_dephasing
    }

    pub fn validate(&self) -> Result<()> {
        let rates = [
            ("optical_dephasing", self.optical_dephasing),
            ("pressure_dephasing", self.pressure_dephasing),
            ("intercept_b", self.intercept_b),
            ("excited_dephasing", self.excited_dephasing()),
            ("pressure_torr", self.pressure_torr),
            ("diffusion", self.diffusion),
        ];
        for (what, v) in rates {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::domain(what, v));
            }
        }
        if self.kind == CellKind::BufferGas && !(self.diffusion > 0.0) {
            return Err(Error::domain("diffusion", self.diffusion));
        }
        for (what, v) in [
            ("beam_radius", self.beam_radius),
            ("cell_radius", self.cell_radius),
            ("cell_length", self.cell_length),
            ("temperature", self.temperature),
        ] {
            if !(v > 0.0) {
                return Err(Error::domain(what, v));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldRole {
    Probe,
    Coupling,
}

/// A cw laser field. The detuning is measured from the transition to level
/// 4 (1–4 for the probe, 2–4 for the coupling).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSpec {
    pub role: FieldRole,
    /// Half-amplitude, V/m.
    pub amplitude: f64,
    /// rad/s
    pub detuning: f64,
    /// Angle to the coupling beam, rad.
    pub angle: f64,
}

impl FieldSpec {
    pub fn probe(amplitude: f64, detuning: f64) -> Self {
        FieldSpec {
            role: FieldRole::Probe,
            amplitude,
            detuning,
            angle: 0.0,
        }
    }

    pub fn coupling(amplitude: f64, detuning: f64) -> Self {
        FieldSpec {
            role: FieldRole::Coupling,
            amplitude,
            detuning,
            angle: 0.0,
        }
    }

    pub fn with_detuning(self, detuning: f64) -> Self {
        FieldSpec { detuning, ..self }
    }

    pub fn with_amplitude(self, amplitude: f64) -> Self {
        FieldSpec { amplitude, ..self }
    }

    /// Ground level this field drives out of.
    pub fn ground(&self) -> Level {
        match self.role {
            FieldRole::Probe => Level::G1,
            FieldRole::Coupling => Level::G2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude >= 0.0) || !self.amplitude.is_finite() {
            return Err(Error::domain("field amplitude", self.amplitude));
        }
        if !self.detuning.is_finite() {
            return Err(Error::domain("detuning", self.detuning));
        }
        Ok(())
    }
}

/// Symmetric table of coherence damping rates γₙₘ (rad/s). Diagonal is
/// unused and zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DephasingTable(pub [[f64; 4]; 4]);

impl DephasingTable {
    pub fn get(&self, n: Level, m: Level) -> f64 {
        self.0[n.index()][m.index()]
    }
}

/// γₙₘ = ½(Γₙ + Γₘ) + γₙₘᶜᵒˡˡ.
pub fn coherence_dephasing(atom: &AtomSpec, cell: &CellSpec) -> DephasingTable {
    let mut table = [[0.0; 4]; 4];
    for n in Level::ALL {
        for m in Level::ALL {
            if n == m {
                continue;
            }
            let collisional = match (n.is_excited(), m.is_excited()) {
                (false, false) => cell.ground_dephasing(),
                (true, true) => cell.excited_dephasing(),
                _ => cell.optical_collisional(),
            };
            table[n.index()][m.index()] =
                0.5 * (atom.decay[n.index()] + atom.decay[m.index()]) + collisional;
        }
    }
    DephasingTable(table)
}

/// Spontaneous-decay table: entry `[m][n]` is the rate Γₘₙ from level n to
/// level m (rad/s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchingTable(pub [[f64; 4]; 4]);

impl BranchingTable {
    /// Γ_{to,from}
    pub fn rate(&self, to: Level, from: Level) -> f64 {
        self.0[to.index()][from.index()]
    }
}

/// Splits each excited level's total decay between the two ground levels in
/// proportion to μ₁ₙ² : μ₂ₙ². When both moments to a level vanish the split
/// is equal.
pub fn branching_rates(atom: &AtomSpec) -> BranchingTable {
    let mut table = [[0.0; 4]; 4];
    for excited in [Level::E3, Level::E4] {
        let total = atom.decay[excited.index()];
        let w1 = atom.dipoles.between(Level::G1, excited).powi(2);
        let w2 = atom.dipoles.between(Level::G2, excited).powi(2);
        let (f1, f2) = if w1 + w2 > 0.0 {
            (w1 / (w1 + w2), w2 / (w1 + w2))
        } else {
            (0.5, 0.5)
        };
        table[Level::G1.index()][excited.index()] = total * f1;
        table[Level::G2.index()][excited.index()] = total - total * f1;
        debug_assert!((table[Level::G2.index()][excited.index()] - total * f2).abs() <= 1e-12 * total);
    }
    BranchingTable(table)
}
