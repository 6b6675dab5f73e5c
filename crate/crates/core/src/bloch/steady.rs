use nalgebra::{DMatrix, DVector, Matrix4};

use super::{DensityMatrix, Generator, C64};
use crate::error::{Error, Result};

/// Tolerances enforced on every stationary solution.
pub const HERMITICITY_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-9;
pub const POSITIVITY_TOL: f64 = -1e-8;
pub const RESIDUAL_TOL: f64 = 1e-10;

/// Diagnostics of a stationary solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyStateReport {
    /// ‖Lρ‖∞ / (‖L‖∞ ‖ρ‖∞)
    pub relative_residual: f64,
    pub trace_error: f64,
    pub hermiticity_error: f64,
    pub min_eigenvalue: f64,
    /// Levels that take part in the solve.
    pub active_levels: [bool; 4],
}

/// Levels reachable by the dynamics: a level is active when a field couples
/// it to another level, or when it is fed by spontaneous decay from an
/// active level. Inactive levels have no drive and no inflow; their
/// population is a separate conserved quantity, so they are held at zero.
fn active_levels(g: &Generator) -> [bool; 4] {
    let mut active: [bool; 4] = std::array::from_fn(|a| (0..4).any(|b| g.coupled(a, b)));
    loop {
        let mut changed = false;
        for to in 0..4 {
            if active[to] {
                continue;
            }
            if (0..4).any(|from| active[from] && g.branching.0[to][from] > 0.0) {
                active[to] = true;
                changed = true;
            }
        }
        if !changed {
            return active;
        }
    }
}

/// Stationary state `Lρ = 0, Tr ρ = 1`.
///
/// The linear system is restricted to the active levels, rescaled to unit
/// max-norm, and one population equation is replaced by the trace
/// condition before a dense LU solve with one step of iterative refinement.
pub fn steady_state(g: &Generator) -> Result<DensityMatrix> {
    steady_state_with_report(g).map(|(rho, _)| rho)
}

pub fn steady_state_with_report(g: &Generator) -> Result<(DensityMatrix, SteadyStateReport)> {
    let active = active_levels(g);
    let levels: Vec<usize> = (0..4).filter(|&n| active[n]).collect();
    if levels.len() < 2 {
        return Err(Error::NonUniqueSteadyState(
            "no field drives any transition".into(),
        ));
    }
    let s = levels.len();
    let dim = s * s;
    let full_index = |a: usize, b: usize| 4 * levels[a] + levels[b];

    let mut a = DMatrix::<C64>::zeros(dim, dim);
    for r in 0..dim {
        for c in 0..dim {
            a[(r, c)] = g.matrix[(full_index(r / s, r % s), full_index(c / s, c % s))];
        }
    }
    let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(Error::NonUniqueSteadyState("generator is zero".into()));
    }
    a /= C64::new(scale, 0.0);

    // trace row replaces the first population equation
    let trace_row = 0;
    for c in 0..dim {
        a[(trace_row, c)] = if c / s == c % s {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        };
    }
    let mut rhs = DVector::<C64>::zeros(dim);
    rhs[trace_row] = C64::new(1.0, 0.0);

    let lu = a.clone().lu();
    let pivots: Vec<f64> = lu.u().diagonal().iter().map(|z| z.norm()).collect();
    let max_pivot = pivots.iter().cloned().fold(0.0, f64::max);
    let min_pivot = pivots.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min_pivot > 1e-14 * max_pivot) {
        return Err(Error::NonUniqueSteadyState(format!(
            "stationary set is degenerate (pivot ratio {:.1e}) on levels {:?}",
            min_pivot / max_pivot,
            levels.iter().map(|l| l + 1).collect::<Vec<_>>()
        )));
    }
    let mut x = lu
        .solve(&rhs)
        .ok_or_else(|| Error::NonUniqueSteadyState("singular constrained system".into()))?;
    let r = &rhs - &a * &x;
    if let Some(dx) = lu.solve(&r) {
        x += dx;
    }

    let mut m = Matrix4::<C64>::zeros();
    for k in 0..dim {
        m[(levels[k / s], levels[k % s])] = x[k];
    }
    let rho = DensityMatrix(m);
    let report = check(g, &rho, active)?;
    Ok((rho, report))
}

fn check(g: &Generator, rho: &DensityMatrix, active: [bool; 4]) -> Result<SteadyStateReport> {
    let l_norm = g
        .matrix
        .row_iter()
        .map(|row| row.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let v = rho.to_vec();
    let rho_norm = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let res = (g.matrix * v).iter().map(|z| z.norm()).fold(0.0, f64::max);
    let report = SteadyStateReport {
        relative_residual: res / (l_norm * rho_norm),
        trace_error: (rho.trace() - C64::new(1.0, 0.0)).norm(),
        hermiticity_error: rho.hermiticity_error(),
        min_eigenvalue: rho.min_eigenvalue(),
        active_levels: active,
    };
    if !(report.relative_residual <= RESIDUAL_TOL) {
        return Err(Error::SteadyStateCheck {
            check: "residual",
            detail: format!("relative residual {:e}", report.relative_residual),
        });
    }
    if !(report.trace_error <= TRACE_TOL) {
        return Err(Error::SteadyStateCheck {
            check: "trace",
            detail: format!("|Tr ρ − 1| = {:e}", report.trace_error),
        });
    }
    if !(report.hermiticity_error <= HERMITICITY_TOL) {
        return Err(Error::SteadyStateCheck {
            check: "hermiticity",
            detail: format!("max |ρ − ρ†| = {:e}", report.hermiticity_error),
        });
    }
    if !(report.min_eigenvalue >= POSITIVITY_TOL) {
        return Err(Error::SteadyStateCheck {
            check: "positivity",
            detail: format!(
                "min eigenvalue {:e}, populations {:?}",
                report.min_eigenvalue,
                (0..4).map(|n| rho.0[(n, n)].re).collect::<Vec<_>>()
            ),
        });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atom::{AtomSpec, CellSpec, FieldSpec, Level};
    use crate::bloch::{build_generator, probe_absorption};
    use crate::units::two_pi;

    #[test]
    fn fields_off_is_degenerate() {
        let g = build_generator(
            &AtomSpec::default_rb85_d1(),
            &CellSpec::ne_5torr(),
            &FieldSpec::coupling(0.0, 0.0),
            &FieldSpec::probe(0.0, 0.0),
        )
        .unwrap();
        assert!(matches!(steady_state(&g), Err(Error::NonUniqueSteadyState(_))));
    }

    #[test]
    fn separate_lambda_halves_are_degenerate() {
        // probe only on 1–3, coupling only on 2–4, each excited level decays
        // back to its own ground level: two disjoint closed subsystems
        let mut atom = AtomSpec::default_rb85_d1();
        atom.dipoles.d14 = 0.0;
        atom.dipoles.d23 = 0.0;
        let g = build_generator(
            &atom,
            &CellSpec::paraffin(),
            &FieldSpec::coupling(20.0, 0.0),
            &FieldSpec::probe(3.0, 0.0),
        )
        .unwrap();
        assert!(matches!(steady_state(&g), Err(Error::NonUniqueSteadyState(_))));
    }

    #[test]
    fn coupling_only_pumps_into_level_one() {
        let g = build_generator(
            &AtomSpec::default_rb85_d1(),
            &CellSpec::ne_5torr(),
            &FieldSpec::coupling(64.0, 0.0),
            &FieldSpec::probe(0.0, 0.0),
        )
        .unwrap();
        let rho = steady_state(&g).unwrap();
        assert!((rho.population(Level::G1) - 1.0).abs() < 1e-9);
        assert_eq!(probe_absorption(&rho), 0.0);
    }

    #[test]
    fn report_is_within_tolerances() {
        let g = build_generator(
            &AtomSpec::default_rb85_d1(),
            &CellSpec::alkene(),
            &FieldSpec::coupling(40.0, two_pi(5e6)),
            &FieldSpec::probe(3.0, two_pi(5e6 + 2e3)),
        )
        .unwrap();
        let (_, report) = steady_state_with_report(&g).unwrap();
        assert!(report.relative_residual <= RESIDUAL_TOL);
        assert_eq!(report.active_levels, [true; 4]);
    }
}
