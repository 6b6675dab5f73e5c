//! Rotating-frame density-matrix equations of motion for the four-level
//! system, their stationary solution and their time integration.

mod evolve;
mod generator;
mod steady;

pub use evolve::{
    max_trace_drift, propagate_constant, real_matrix, time_evolve, DrivenGenerator, Envelope,
    EvolveOptions, RealGenerator, RealMatrix, TimeDependentGenerator,
};
pub use generator::{build_generator, DriveParams, Generator, ModelVariant};
pub use steady::{steady_state, steady_state_with_report, SteadyStateReport};

use nalgebra::{Complex, Matrix4, SVector};

use crate::atom::Level;

pub type C64 = Complex<f64>;
pub type RealState = SVector<f64, 16>;

/// Upper-triangle index pairs in the order used by the real parametrization.
pub(crate) const PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// 4×4 density matrix in the rotating frame. Off-diagonal elements between a
/// ground and an excited level are the slowly varying coherences σ₁ₙ, σ₂ₙ;
/// ρ₁₂ is stored in the frame rotating at the two-photon detuning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix(pub Matrix4<C64>);

impl DensityMatrix {
    pub fn from_matrix(m: Matrix4<C64>) -> Self {
        DensityMatrix(m)
    }

    /// All population in one level.
    pub fn pure_level(level: Level) -> Self {
        let mut m = Matrix4::zeros();
        m[(level.index(), level.index())] = C64::new(1.0, 0.0);
        DensityMatrix(m)
    }

    /// Equal incoherent mixture of the two ground levels.
    pub fn ground_mixture() -> Self {
        let mut m = Matrix4::zeros();
        m[(0, 0)] = C64::new(0.5, 0.0);
        m[(1, 1)] = C64::new(0.5, 0.0);
        DensityMatrix(m)
    }

    #[inline]
    pub fn get(&self, n: Level, m: Level) -> C64 {
        self.0[(n.index(), m.index())]
    }

    pub fn population(&self, level: Level) -> f64 {
        self.get(level, level).re
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    /// max |ρ − ρ†|
    pub fn hermiticity_error(&self) -> f64 {
        let adj = self.0.adjoint();
        (self.0 - adj).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (self.0 + self.0.adjoint()) * C64::new(0.5, 0.0);
        herm.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Real parametrization: four populations followed by (Re, Im) of the
    /// six upper-triangle coherences.
    pub fn to_real(&self) -> RealState {
        let mut x = RealState::zeros();
        for n in 0..4 {
            x[n] = self.0[(n, n)].re;
        }
        for (p, &(n, m)) in PAIRS.iter().enumerate() {
            x[4 + 2 * p] = self.0[(n, m)].re;
            x[5 + 2 * p] = self.0[(n, m)].im;
        }
        x
    }

    /// Inverse of [`to_real`](Self::to_real); the result is Hermitian by
    /// construction.
    pub fn from_real(x: &RealState) -> Self {
        let mut m = Matrix4::zeros();
        for n in 0..4 {
            m[(n, n)] = C64::new(x[n], 0.0);
        }
        for (p, &(n, k)) in PAIRS.iter().enumerate() {
            let z = C64::new(x[4 + 2 * p], x[5 + 2 * p]);
            m[(n, k)] = z;
            m[(k, n)] = z.conj();
        }
        DensityMatrix(m)
    }

    /// Row-major vectorization, index `4n + m` holds ρₙₘ.
    pub fn to_vec(&self) -> SVector<C64, 16> {
        SVector::from_fn(|k, _| self.0[(k / 4, k % 4)])
    }

    pub fn from_vec(v: &SVector<C64, 16>) -> Self {
        DensityMatrix(Matrix4::from_fn(|n, m| v[4 * n + m]))
    }
}

/// Probe absorption `α_p = −Im(σ₁₄)`; positive means absorption.
pub fn probe_absorption(rho: &DensityMatrix) -> f64 {
    -rho.get(Level::G1, Level::E4).im
}
