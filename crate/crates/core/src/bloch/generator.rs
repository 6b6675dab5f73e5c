use nalgebra::{SMatrix, SVector};

use super::{DensityMatrix, C64};
use crate::atom::{
    branching_rates, coherence_dephasing, AtomSpec, BranchingTable, CellSpec, DephasingTable,
    FieldSpec, Level,
};
use crate::error::Result;

pub type CMat16 = SMatrix<C64, 16, 16>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelVariant {
    ThreeLevel,
    FourLevel,
}

impl ModelVariant {
    pub fn atom(self, four_level: &AtomSpec) -> AtomSpec {
        match self {
            ModelVariant::ThreeLevel => four_level.three_level(),
            ModelVariant::FourLevel => *four_level,
        }
    }
}

impl std::fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelVariant::ThreeLevel => "three-level",
            ModelVariant::FourLevel => "four-level",
        })
    }
}

impl std::str::FromStr for ModelVariant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "three-level" => Ok(ModelVariant::ThreeLevel),
            "four-level" => Ok(ModelVariant::FourLevel),
            other => Err(format!("unknown model `{other}` (expected three-level or four-level)")),
        }
    }
}

/// Field-dependent inputs of the rotating-frame Hamiltonian, all in rad/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveParams {
    /// Probe Rabi frequencies on 1–3 and 1–4.
    pub probe_rabi: [f64; 2],
    /// Coupling Rabi frequencies on 2–3 and 2–4.
    pub coupling_rabi: [f64; 2],
    /// Δ_p, from the 1–4 transition.
    pub probe_detuning: f64,
    /// Δ_c, from the 2–4 transition.
    pub coupling_detuning: f64,
    /// Energy of level 4 above level 3 (ω₄₃). Only the sign-flipped value
    /// used by symmetry checks ever differs from the atom's splitting.
    pub level3_offset: f64,
}

impl DriveParams {
    pub fn from_fields(atom: &AtomSpec, coupling: &FieldSpec, probe: &FieldSpec) -> Self {
        DriveParams {
            probe_rabi: [
                atom.rabi(Level::G1, Level::E3, probe.amplitude),
                atom.rabi(Level::G1, Level::E4, probe.amplitude),
            ],
            coupling_rabi: [
                atom.rabi(Level::G2, Level::E3, coupling.amplitude),
                atom.rabi(Level::G2, Level::E4, coupling.amplitude),
            ],
            probe_detuning: probe.detuning,
            coupling_detuning: coupling.detuning,
            level3_offset: atom.excited_splitting,
        }
    }

    /// Copy with both probe Rabi frequencies scaled by `probe` and both
    /// coupling Rabi frequencies scaled by `coupling`.
    pub fn scaled(&self, probe: f64, coupling: f64) -> Self {
        DriveParams {
            probe_rabi: self.probe_rabi.map(|w| w * probe),
            coupling_rabi: self.coupling_rabi.map(|w| w * coupling),
            ..*self
        }
    }

    /// Rotating-frame Hamiltonian in units of ħ (rad/s). It is real.
    ///
    /// The frame rotates level 4 and level 3 at ω_p relative to level 1 and
    /// level 2 at ω_p − ω_c, which removes the optical carrier from every
    /// driven coherence:
    ///
    ///   H₁₁ = 0
    ///   H₂₂ = −(Δ_p − Δ_c)            two-photon detuning
    ///   H₃₃ = −(Δ_p + ω₄₃)            probe detuning from 1–3
    ///   H₄₄ = −Δ_p
    ///   H₁₃ = −Ω_p,13/2, H₁₄ = −Ω_p,14/2
    ///   H₂₃ = −Ω_c,23/2, H₂₄ = −Ω_c,24/2
    ///
    /// H₃₃ − H₂₂ = −(Δ_c + ω₄₃) is the coupling detuning from 2–3.
    pub fn hamiltonian(&self) -> [[f64; 4]; 4] {
        let mut h = [[0.0; 4]; 4];
        let two_photon = self.probe_detuning - self.coupling_detuning;
        h[1][1] = -two_photon;
        h[2][2] = -(self.probe_detuning + self.level3_offset);
        h[3][3] = -self.probe_detuning;
        let couple = |h: &mut [[f64; 4]; 4], a: usize, b: usize, rabi: f64| {
            h[a][b] = -0.5 * rabi;
            h[b][a] = -0.5 * rabi;
        };
        couple(&mut h, 0, 2, self.probe_rabi[0]);
        couple(&mut h, 0, 3, self.probe_rabi[1]);
        couple(&mut h, 1, 2, self.coupling_rabi[0]);
        couple(&mut h, 1, 3, self.coupling_rabi[1]);
        h
    }
}

/// Linear evolution operator of the density matrix, acting on the
/// row-major vectorization (`4n + m` ↔ ρₙₘ).
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub(crate) matrix: CMat16,
    pub(crate) hamiltonian: [[f64; 4]; 4],
    pub(crate) branching: BranchingTable,
    pub(crate) dephasing: DephasingTable,
    pub drive: DriveParams,
    pub variant: ModelVariant,
}

/// Assembles the generator for cw fields.
pub fn build_generator(
    atom: &AtomSpec,
    cell: &CellSpec,
    coupling: &FieldSpec,
    probe: &FieldSpec,
) -> Result<Generator> {
    atom.validate()?;
    cell.validate()?;
    coupling.validate()?;
    probe.validate()?;
    let drive = DriveParams::from_fields(atom, coupling, probe);
    Ok(Generator::from_parts(
        drive,
        branching_rates(atom),
        coherence_dephasing(atom, cell),
        if atom.is_three_level() {
            ModelVariant::ThreeLevel
        } else {
            ModelVariant::FourLevel
        },
    ))
}

impl Generator {
    /// Lowest-level constructor; no validation.
    pub fn from_parts(
        drive: DriveParams,
        branching: BranchingTable,
        dephasing: DephasingTable,
        variant: ModelVariant,
    ) -> Self {
        let h = drive.hamiltonian();
        let mut l = CMat16::zeros();
        let idx = |n: usize, m: usize| 4 * n + m;
        let minus_i = C64::new(0.0, -1.0);
        for n in 0..4 {
            for m in 0..4 {
                let row = idx(n, m);
                // −i[H, ρ]ₙₘ = −i Σₖ Hₙₖ ρₖₘ + i Σₖ ρₙₖ Hₖₘ
                for k in 0..4 {
                    if h[n][k] != 0.0 {
                        l[(row, idx(k, m))] += minus_i * h[n][k];
                    }
                    if h[k][m] != 0.0 {
                        l[(row, idx(n, k))] -= minus_i * h[k][m];
                    }
                }
                if n != m {
                    // −γₙₘ ρₙₘ
                    l[(row, row)] -= C64::new(dephasing.0[n][m], 0.0);
                } else {
                    // −Σₘ Γₘₙ ρₙₙ (loss to lower levels) + Σₘ Γₙₘ ρₘₘ (feed from upper levels)
                    for k in 0..4 {
                        let out = branching.0[k][n];
                        if out != 0.0 {
                            l[(row, row)] -= C64::new(out, 0.0);
                        }
                        let feed = branching.0[n][k];
                        if feed != 0.0 {
                            l[(row, idx(k, k))] += C64::new(feed, 0.0);
                        }
                    }
                }
            }
        }
        Generator {
            matrix: l,
            hamiltonian: h,
            branching,
            dephasing,
            drive,
            variant,
        }
    }

    /// Same dissipation, different drive.
    pub fn with_drive(&self, drive: DriveParams) -> Self {
        Generator::from_parts(drive, self.branching, self.dephasing, self.variant)
    }

    pub fn matrix(&self) -> &CMat16 {
        &self.matrix
    }

    pub fn hamiltonian(&self) -> &[[f64; 4]; 4] {
        &self.hamiltonian
    }

    pub fn branching(&self) -> &BranchingTable {
        &self.branching
    }

    pub fn dephasing(&self) -> &DephasingTable {
        &self.dephasing
    }

    /// dρ/dt for the given state.
    pub fn apply(&self, rho: &DensityMatrix) -> DensityMatrix {
        DensityMatrix::from_vec(&(self.matrix * rho.to_vec()))
    }

    /// The row functional giving d(Tr ρ)/dt; identically zero for a
    /// probability-conserving generator.
    pub fn trace_functional(&self) -> SVector<C64, 16> {
        let mut out = SVector::zeros();
        for n in 0..4 {
            out += self.matrix.row(5 * n).transpose();
        }
        out
    }

    /// Whether levels `a` and `b` share a non-zero coherent coupling.
    pub(crate) fn coupled(&self, a: usize, b: usize) -> bool {
        a != b && self.hamiltonian[a][b] != 0.0
    }
}
