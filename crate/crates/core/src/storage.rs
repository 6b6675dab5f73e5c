//! Write–store–retrieve light-storage protocol on the density-matrix model.
//!
//! Phases, all starting from the equal ground-level mixture:
//!
//! 1. preparation: coupling only, for `preparation` seconds;
//! 2. write: coupling on, probe pulse rising exponentially and cut at its
//!    peak, where both fields switch off together;
//! 3. dark: no fields for the storage time;
//! 4. retrieval: coupling only; the readout is |Im σ₁₄(t)|.
//!
//! Phases with constant fields are propagated exactly with the matrix
//! exponential; the write pulse is integrated with RK4.

use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::atom::{AtomSpec, CellSpec, FieldSpec, Level};
use crate::bloch::{
    build_generator, propagate_constant, time_evolve, DensityMatrix, DrivenGenerator,
    EvolveOptions, Generator,
};
use crate::error::{Error, Result};
use crate::fits::{fit_curve, FitResult, ModelShape};
use crate::par_map;
use crate::spectra::{estimated_half_width, linspace};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSequence {
    /// Coupling-only optical pumping before the probe pulse, s.
    pub preparation: f64,
    /// Probe pulse length, s.
    pub probe_duration: f64,
    /// Time constant of the exponential probe rise, s.
    pub probe_rise: f64,
    /// Dark time between switch-off and retrieval, s.
    pub storage_time: f64,
    /// Retrieval readout length, s. `None` picks six coupling-induced
    /// decay times of the stored coherence.
    pub retrieval_window: Option<f64>,
    /// Number of readout samples.
    pub retrieval_samples: usize,
}

impl Default for PulseSequence {
    fn default() -> Self {
        PulseSequence {
            preparation: 50e-6,
            probe_duration: 10e-6,
            probe_rise: 10e-6 / 3.0,
            storage_time: 0.0,
            retrieval_window: None,
            retrieval_samples: 2001,
        }
    }
}

impl PulseSequence {
    pub fn validate(&self) -> Result<()> {
        for (what, v) in [
            ("preparation", self.preparation),
            ("storage_time", self.storage_time),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::domain(what, v));
            }
        }
        for (what, v) in [
            ("probe_duration", self.probe_duration),
            ("probe_rise", self.probe_rise),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::domain(what, v));
            }
        }
        if let Some(w) = self.retrieval_window {
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::domain("retrieval_window", w));
            }
        }
        if self.retrieval_samples < 3 {
            return Err(Error::Invalid("retrieval needs at least 3 samples".into()));
        }
        Ok(())
    }

    /// Probe envelope in [0, 1] over the write phase `[0, probe_duration]`.
    pub fn probe_envelope(&self, t: f64) -> f64 {
        if (0.0..=self.probe_duration).contains(&t) {
            ((t - self.probe_duration) / self.probe_rise).exp()
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalResult {
    pub storage_time: f64,
    /// Readout times measured from the start of retrieval, s.
    pub times: Vec<f64>,
    /// |Im σ₁₄(t)|
    pub signal: Vec<f64>,
    /// |σ₁₂| when the coupling turns back on.
    pub stored_coherence: f64,
    pub area: f64,
    /// Retrieved area over the area at zero storage time.
    pub efficiency: f64,
}

impl RetrievalResult {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t_s,signal")?;
        for (t, s) in self.times.iter().zip(&self.signal) {
            writeln!(w, "{t:e},{s:e}")?;
        }
        Ok(())
    }
}

/// Everything that does not depend on the storage time.
#[derive(Debug, Clone)]
pub struct StorageSimulator {
    seq: PulseSequence,
    written: DensityMatrix,
    dark: Generator,
    read: Generator,
    window: f64,
    reference_area: f64,
}

struct Readout {
    times: Vec<f64>,
    signal: Vec<f64>,
    stored_coherence: f64,
    area: f64,
}

impl StorageSimulator {
    /// Runs preparation and write once. The probe is set to two-photon
    /// resonance with the coupling.
    pub fn new(
        atom: &AtomSpec,
        cell: &CellSpec,
        coupling: &FieldSpec,
        probe: &FieldSpec,
        seq: PulseSequence,
    ) -> Result<Self> {
        seq.validate()?;
        let probe = probe.with_detuning(coupling.detuning);
        let full = build_generator(atom, cell, coupling, &probe)?;
        let with = |p: f64, c: f64| full.with_drive(full.drive.scaled(p, c));
        let pump = with(0.0, 1.0);
        let dark = with(0.0, 0.0);

        let mut rho = DensityMatrix::ground_mixture();
        if seq.preparation > 0.0 {
            rho = *propagate_constant(&pump, &rho, &[0.0, seq.preparation])?
                .last()
                .unwrap();
        }
        let envelope_seq = seq;
        let driven = DrivenGenerator::new(
            &full,
            Arc::new(move |t| envelope_seq.probe_envelope(t)),
            Arc::new(|_| 1.0),
        );
        let written = *time_evolve(
            &driven,
            &rho,
            &[0.0, seq.probe_duration],
            EvolveOptions::default(),
        )?
        .last()
        .unwrap();

        let window = seq.retrieval_window.unwrap_or_else(|| {
            let rate = estimated_half_width(atom, cell, coupling);
            6.0 / rate
        });
        let mut sim = StorageSimulator {
            seq,
            written,
            dark,
            read: pump,
            window,
            reference_area: 1.0,
        };
        sim.reference_area = sim.readout(0.0)?.area;
        Ok(sim)
    }

    pub fn written_state(&self) -> &DensityMatrix {
        &self.written
    }

    pub fn retrieval_window(&self) -> f64 {
        self.window
    }

    fn readout(&self, storage_time: f64) -> Result<Readout> {
        if !(storage_time >= 0.0) || !storage_time.is_finite() {
            return Err(Error::domain("storage_time", storage_time));
        }
        let stored = if storage_time > 0.0 {
            *propagate_constant(&self.dark, &self.written, &[0.0, storage_time])?
                .last()
                .unwrap()
        } else {
            self.written
        };
        let times = linspace(0.0, self.window, self.seq.retrieval_samples);
        let traj = propagate_constant(&self.read, &stored, &times)?;
        let signal: Vec<f64> = traj
            .iter()
            .map(|r| r.get(Level::G1, Level::E4).im.abs())
            .collect();
        let area = times
            .windows(2)
            .zip(signal.windows(2))
            .map(|(t, s)| 0.5 * (t[1] - t[0]) * (s[0] + s[1]))
            .sum();
        Ok(Readout {
            times,
            signal,
            stored_coherence: stored.get(Level::G1, Level::G2).norm(),
            area,
        })
    }

    pub fn retrieve(&self, storage_time: f64) -> Result<RetrievalResult> {
        let r = self.readout(storage_time)?;
        Ok(RetrievalResult {
            storage_time,
            efficiency: if self.reference_area > 0.0 {
                r.area / self.reference_area
            } else {
                0.0
            },
            times: r.times,
            signal: r.signal,
            stored_coherence: r.stored_coherence,
            area: r.area,
        })
    }
}

/// One storage run at `seq.storage_time`, normalized to the same run at
/// zero storage time.
pub fn simulate_storage(
    atom: &AtomSpec,
    cell: &CellSpec,
    coupling: &FieldSpec,
    probe: &FieldSpec,
    seq: PulseSequence,
) -> Result<RetrievalResult> {
    StorageSimulator::new(atom, cell, coupling, probe, seq)?.retrieve(seq.storage_time)
}

/// `1/(2π·γ₁₂ᶜᵒˡˡ) = 1/(π·b)`, s.
pub fn predicted_lifetime(cell: &CellSpec) -> Result<f64> {
    if !(cell.intercept_b > 0.0) {
        return Err(Error::domain("intercept b", cell.intercept_b));
    }
    Ok(1.0 / (std::f64::consts::PI * cell.intercept_b))
}

/// Eight storage times from 0 to three predicted lifetimes.
pub fn default_storage_times(cell: &CellSpec) -> Result<Vec<f64>> {
    Ok(linspace(0.0, 3.0 * predicted_lifetime(cell)?, 8))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LifetimeScan {
    pub storage_times: Vec<f64>,
    pub efficiencies: Vec<f64>,
    pub fit: FitResult,
}

impl LifetimeScan {
    pub fn tau(&self) -> f64 {
        self.fit.params[1]
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "storage_time_s,efficiency")?;
        for (t, e) in self.storage_times.iter().zip(&self.efficiencies) {
            writeln!(w, "{t:e},{e:e}")?;
        }
        Ok(())
    }
}

/// Normalized efficiency at each storage time and an exp-decay fit.
pub fn lifetime_scan(
    atom: &AtomSpec,
    cell: &CellSpec,
    coupling: &FieldSpec,
    probe: &FieldSpec,
    seq: PulseSequence,
    storage_times: &[f64],
) -> Result<LifetimeScan> {
    if storage_times.len() < ModelShape::ExpDecay.n_params() * 2 {
        return Err(Error::Invalid(format!(
            "a lifetime scan needs at least 4 storage times, got {}",
            storage_times.len()
        )));
    }
    let sim = StorageSimulator::new(atom, cell, coupling, probe, seq)?;
    let efficiencies = par_map(storage_times, |&t| sim.retrieve(t).map(|r| r.efficiency))
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
    let fit = fit_curve(ModelShape::ExpDecay, storage_times, &efficiencies, None)?;
    Ok(LifetimeScan {
        storage_times: storage_times.to_vec(),
        efficiencies,
        fit,
    })
}
