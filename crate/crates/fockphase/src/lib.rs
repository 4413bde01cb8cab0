//! Phase emergence between number-state condensates under sequential
//! detection.
//!
//! Two (or three) Bose-Einstein condensates prepared with exactly known
//! populations carry no relative phase at all. Yet as soon as particles are
//! detected one by one in the overlap region, interference fringes build up as
//! if a definite phase had been there from the start. This crate simulates
//! that emergence and checks it against exact ground truth:
//!
//! - [`model`] — condensate specifications, detection events, regions,
//!   measurement records.
//! - [`prior`] — phase distributions G(Φ) from initial states: uniform for a
//!   pure double Fock state, structured for number superpositions and
//!   coherent amplitude profiles.
//! - [`engine`] — the large-N phase-integral representation: per-event fringe
//!   factors, sequence probabilities by exact trigonometric quadrature,
//!   sequential Bayesian posteriors, predictive densities, record sampling.
//! - [`oracle`] — approximation-free sequence probabilities on the full Fock
//!   space via a transfer dynamic program (falling-factorial weights), plus a
//!   power-weight mode that matches the phase integral as an algebraic
//!   identity and independent cross-check oracles.
//! - [`spin`] — spin-measurement machinery: Wallis reference values, adaptive
//!   measurement-angle policies, region experiments, and remote
//!   transverse-orientation predictions.
//! - [`config`] — TOML experiment configuration shared with the CLI.
//!
//! Probabilities are densities (no detection-cell volume); every reported
//! comparison is ratio- or normalization-based so the convention cancels.
//! The one global sign convention is `cos(u + θ − Φ)` in all two-mode fringe
//! factors.

pub mod config;
pub mod engine;
pub mod error;
pub mod model;
pub mod numeric;
pub mod oracle;
pub mod prior;
pub mod spin;
pub mod stats;

pub use error::{Error, Result};
pub use model::{
    contrast_ratio, reduce_position, CondensateSpec, DetectionEvent, EventKind, EventPlace,
    GeneralModePair, MeasurementRecord, ModeGeometry, Region, RegionLayout, RegionRole, Sign,
    Snapshot, Vec3,
};
pub use prior::{
    coefficients_from_csv, coherent_coefficients, g_from_coefficients, g_general, CoherentSpec,
    NumberSuperposition, PhaseDistribution,
};
pub use stats::{rayleigh_test, sample_circular_stats, CircularStats, RayleighTest};
