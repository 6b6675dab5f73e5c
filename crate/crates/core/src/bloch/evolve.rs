//! Fixed-step RK4 integration of the equations of motion, and exact
//! propagation over intervals where the generator is constant.
//!
//! Both work on the real Hermitian parametrization of ρ (four populations
//! plus real and imaginary parts of the six upper coherences), so every
//! propagated state is Hermitian by construction.

use std::sync::Arc;

use nalgebra::SMatrix;

use super::{DensityMatrix, Generator, RealState, C64};
use crate::error::{Error, Result};

pub type RealMatrix = SMatrix<f64, 16, 16>;

/// Time envelope multiplying a field amplitude; values must lie in [0, 1].
pub type Envelope = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Generator in the real parametrization, stored as a sparse triplet list.
#[derive(Debug, Clone, PartialEq)]
pub struct RealGenerator {
    entries: Vec<(u8, u8, f64)>,
    norm_inf: f64,
}

impl RealGenerator {
    pub fn from_generator(g: &Generator) -> Self {
        Self::from_dense(&real_matrix(g))
    }

    fn from_dense(m: &RealMatrix) -> Self {
        let mut entries = Vec::new();
        for i in 0..16 {
            for j in 0..16 {
                let v = m[(i, j)];
                if v != 0.0 {
                    entries.push((i as u8, j as u8, v));
                }
            }
        }
        let norm_inf = (0..16)
            .map(|i| m.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        RealGenerator { entries, norm_inf }
    }

    pub fn dense(&self) -> RealMatrix {
        let mut m = RealMatrix::zeros();
        for &(i, j, v) in &self.entries {
            m[(i as usize, j as usize)] = v;
        }
        m
    }

    #[inline]
    pub fn apply(&self, x: &RealState) -> RealState {
        let mut out = RealState::zeros();
        self.accumulate(x, 1.0, &mut out);
        out
    }

    #[inline]
    fn accumulate(&self, x: &RealState, weight: f64, out: &mut RealState) {
        for &(i, j, v) in &self.entries {
            out[i as usize] += weight * v * x[j as usize];
        }
    }

    /// Max absolute row sum; bounds every eigenvalue's modulus.
    pub fn norm_inf(&self) -> f64 {
        self.norm_inf
    }
}

/// Dense real-parametrization matrix: column j is L applied to the j-th
/// Hermitian basis matrix.
pub fn real_matrix(g: &Generator) -> RealMatrix {
    let mut out = RealMatrix::zeros();
    for j in 0..16 {
        let mut e = RealState::zeros();
        e[j] = 1.0;
        let basis = DensityMatrix::from_real(&e);
        let d = g.apply(&basis);
        out.set_column(j, &d.to_real());
    }
    out
}

/// A generator that may depend on time.
pub trait TimeDependentGenerator {
    fn derivative(&self, t: f64, x: &RealState) -> RealState;
    /// Upper bound on the modulus of any eigenvalue over the integration.
    fn max_rate(&self) -> f64;
}

impl TimeDependentGenerator for RealGenerator {
    fn derivative(&self, _t: f64, x: &RealState) -> RealState {
        self.apply(x)
    }

    fn max_rate(&self) -> f64 {
        self.norm_inf
    }
}

/// `L(t) = L₀ + p(t)·L_probe + c(t)·L_coupling`, exact because the
/// generator is affine in the two Rabi frequencies.
#[derive(Clone)]
pub struct DrivenGenerator {
    base: RealGenerator,
    probe: RealGenerator,
    coupling: RealGenerator,
    probe_envelope: Envelope,
    coupling_envelope: Envelope,
}

impl std::fmt::Debug for DrivenGenerator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DrivenGenerator")
            .field("base", &self.base)
            .field("probe", &self.probe)
            .field("coupling", &self.coupling)
            .finish_non_exhaustive()
    }
}

impl DrivenGenerator {
    /// `full` carries the peak field amplitudes; the envelopes scale them.
    pub fn new(full: &Generator, probe_envelope: Envelope, coupling_envelope: Envelope) -> Self {
        let at = |p: f64, c: f64| real_matrix(&full.with_drive(full.drive.scaled(p, c)));
        let base = at(0.0, 0.0);
        DrivenGenerator {
            base: RealGenerator::from_dense(&base),
            probe: RealGenerator::from_dense(&(at(1.0, 0.0) - base)),
            coupling: RealGenerator::from_dense(&(at(0.0, 1.0) - base)),
            probe_envelope,
            coupling_envelope,
        }
    }
}

impl TimeDependentGenerator for DrivenGenerator {
    fn derivative(&self, t: f64, x: &RealState) -> RealState {
        let mut out = RealState::zeros();
        self.base.accumulate(x, 1.0, &mut out);
        let p = (self.probe_envelope)(t);
        if p != 0.0 {
            self.probe.accumulate(x, p, &mut out);
        }
        let c = (self.coupling_envelope)(t);
        if c != 0.0 {
            self.coupling.accumulate(x, c, &mut out);
        }
        out
    }

    fn max_rate(&self) -> f64 {
        self.base.norm_inf + self.probe.norm_inf + self.coupling.norm_inf
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    /// Substeps satisfy `h ≤ 1/(rate_safety · max_rate)`.
    pub rate_safety: f64,
    /// Refuse to start if the grid needs more RK4 steps than this.
    pub max_steps: u64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            rate_safety: 50.0,
            max_steps: 200_000_000,
        }
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Invalid("empty time grid".into()));
    }
    if grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::Invalid("non-finite time in grid".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Invalid("time grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Classical fourth-order Runge–Kutta on a fixed substep grid. Returns the
/// state at every time in `grid`, starting with `rho0` at `grid[0]`.
pub fn time_evolve<G: TimeDependentGenerator + ?Sized>(
    g: &G,
    rho0: &DensityMatrix,
    grid: &[f64],
    opts: EvolveOptions,
) -> Result<Vec<DensityMatrix>> {
    check_grid(grid)?;
    let rate = g.max_rate();
    let h_max = if rate > 0.0 {
        1.0 / (opts.rate_safety * rate)
    } else {
        f64::INFINITY
    };
    let substeps: Vec<u64> = grid
        .windows(2)
        .map(|w| ((w[1] - w[0]) / h_max).ceil().max(1.0) as u64)
        .collect();
    let total: u64 = substeps.iter().sum();
    if total > opts.max_steps {
        return Err(Error::Stiffness {
            required_steps: total,
            budget: opts.max_steps,
            suggested_step: h_max,
        });
    }

    let mut x = rho0.to_real();
    let mut out = Vec::with_capacity(grid.len());
    out.push(DensityMatrix::from_real(&x));
    for (w, &n) in grid.windows(2).zip(&substeps) {
        let h = (w[1] - w[0]) / n as f64;
        for k in 0..n {
            let t = w[0] + k as f64 * h;
            let k1 = g.derivative(t, &x);
            let k2 = g.derivative(t + 0.5 * h, &(x + k1 * (0.5 * h)));
            let k3 = g.derivative(t + 0.5 * h, &(x + k2 * (0.5 * h)));
            let k4 = g.derivative(t + h, &(x + k3 * h));
            x += (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0);
        }
        out.push(DensityMatrix::from_real(&x));
    }
    Ok(out)
}

/// Exact propagation `ρ(t) = exp(L (t − t₀)) ρ₀` for a constant generator.
pub fn propagate_constant(
    g: &Generator,
    rho0: &DensityMatrix,
    grid: &[f64],
) -> Result<Vec<DensityMatrix>> {
    check_grid(grid)?;
    let r = real_matrix(g);
    let mut x = rho0.to_real();
    let mut out = Vec::with_capacity(grid.len());
    out.push(DensityMatrix::from_real(&x));
    let mut cached: Option<(f64, RealMatrix)> = None;
    for w in grid.windows(2) {
        let dt = w[1] - w[0];
        let prop = match &cached {
            Some((d, p)) if (d - dt).abs() <= 1e-12 * dt => *p,
            _ => {
                let p = (r * dt).exp();
                cached = Some((dt, p));
                p
            }
        };
        x = prop * x;
        out.push(DensityMatrix::from_real(&x));
    }
    Ok(out)
}

/// `|Tr ρ − 1|` for a trajectory, worst case.
pub fn max_trace_drift(traj: &[DensityMatrix]) -> f64 {
    traj.iter()
        .map(|r| (r.trace() - C64::new(1.0, 0.0)).norm())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atom::{AtomSpec, CellSpec, FieldSpec, Level};
    use crate::bloch::build_generator;
    use crate::units::two_pi;

    fn fast_atom() -> AtomSpec {
        let mut a = AtomSpec::default_rb85_d1();
        a.excited_splitting = two_pi(20e6);
        a
    }

    fn fast_cell() -> CellSpec {
        let mut c = CellSpec::paraffin();
        c.optical_dephasing = two_pi(2e6);
        c.intercept_b = 100e3;
        c
    }

    #[test]
    fn null_generator_keeps_state() {
        let zero = RealGenerator::from_dense(&RealMatrix::zeros());
        let rho0 = DensityMatrix::ground_mixture();
        let grid: Vec<f64> = (0..10).map(|k| k as f64 * 1e-6).collect();
        let traj = time_evolve(&zero, &rho0, &grid, EvolveOptions::default()).unwrap();
        assert!(traj.iter().all(|r| *r == rho0));
    }

    #[test]
    fn rk4_matches_exact_propagator() {
        let g = build_generator(
            &fast_atom(),
            &fast_cell(),
            &FieldSpec::coupling(2000.0, two_pi(1e6)),
            &FieldSpec::probe(500.0, two_pi(1.2e6)),
        )
        .unwrap();
        let rho0 = DensityMatrix::ground_mixture();
        let grid: Vec<f64> = (0..21).map(|k| k as f64 * 50e-9).collect();
        let rk = time_evolve(&RealGenerator::from_generator(&g), &rho0, &grid, EvolveOptions::default())
            .unwrap();
        let ex = propagate_constant(&g, &rho0, &grid).unwrap();
        for (a, b) in rk.iter().zip(&ex) {
            let err = (a.0 - b.0).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(err < 1e-9, "{err:e}");
        }
        assert!(max_trace_drift(&rk) < 1e-12);
    }

    #[test]
    fn stiffness_is_reported() {
        let g = build_generator(
            &AtomSpec::default_rb85_d1(),
            &CellSpec::ne_5torr(),
            &FieldSpec::coupling(64.0, 0.0),
            &FieldSpec::probe(3.0, 0.0),
        )
        .unwrap();
        let opts = EvolveOptions {
            max_steps: 1000,
            ..Default::default()
        };
        let err = time_evolve(
            &RealGenerator::from_generator(&g),
            &DensityMatrix::ground_mixture(),
            &[0.0, 1e-3],
            opts,
        )
        .unwrap_err();
        match err {
            Error::Stiffness { suggested_step, .. } => assert!(suggested_step > 0.0 && suggested_step < 1e-10),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_grids() {
        let zero = RealGenerator::from_dense(&RealMatrix::zeros());
        let rho0 = DensityMatrix::pure_level(Level::G1);
        assert!(time_evolve(&zero, &rho0, &[0.0, 0.0], EvolveOptions::default()).is_err());
        assert!(time_evolve(&zero, &rho0, &[1.0, 0.5], EvolveOptions::default()).is_err());
        assert!(time_evolve(&zero, &rho0, &[], EvolveOptions::default()).is_err());
    }
}
