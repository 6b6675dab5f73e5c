//! Density-matrix simulation and analysis toolkit for EIT-based optical
//! memory in warm alkali vapor.
//!
//! The physical model is a four-level ⁸⁵Rb D1 system (two ground hyperfine
//! levels, two excited hyperfine levels) driven by a probe and a coupling
//! field in the rotating-wave approximation. On top of it the crate provides
//! spectrum synthesis, closed-form broadening budgets, a small nonlinear
//! least-squares engine, a light-storage protocol simulation and the trace
//! processing used to turn detector records into optical-depth spectra.
//!
//! Unit conventions: every rate or detuning held in a domain type is in
//! angular units (rad/s); every width reported to the user (FWHM, broadening
//! budgets) is in ordinary Hz. Conversions go through [`units`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod atom;
pub mod bloch;
pub mod broadening;
pub mod config;
pub mod error;
pub mod fits;
pub mod labio;
pub mod spectra;
pub mod storage;
pub mod units;

pub use atom::{AtomSpec, CellKind, CellSpec, DipoleMoments, FieldRole, FieldSpec, Level};
pub use bloch::{DensityMatrix, Generator, ModelVariant};
pub use error::{Error, Result};
pub use spectra::Spectrum;

/// Ordered parallel map; falls back to a sequential map without the
/// `parallel` feature. Output order always matches input order.
#[cfg(feature = "parallel")]
pub(crate) fn par_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn par_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}
