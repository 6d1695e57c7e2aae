//! Truncated-Wigner simulation of polarisation squeezing in a photonic
//! crystal fibre Sagnac loop.
//!
//! Each trajectory integrates a stochastic nonlinear Schrödinger equation
//! (dispersion to third order, Kerr plus Raman response with its quantum and
//! thermal noise, GAWBS phase noise and self-steepening) for both
//! counter-propagating pulses. The pulses are recombined into a circularly
//! polarised state and the ensemble of Stokes samples gives the squeezing of
//! the dark plane.

// `!(x >= 0.0)` style checks are there to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiments;
pub mod grid;
pub mod measurement;
pub mod parameters;
pub mod propagator;
pub mod report;
pub mod response;
pub mod stochastic;

pub use error::{Error, Result};
pub use experiments::{Layer, RunRecord, Setup, Simulation};
pub use grid::{make_grid, Dispersion, Grid};
pub use measurement::{Normalisation, SqueezingResult, StokesEnsemble, StokesSample};
pub use parameters::{arm_amplitude, derive_scales, FibreParams, PulseParams, PulseShape, Scales};
pub use propagator::{Propagator, StepConfig, Toggles, TrajectoryField};
pub use report::{RunManifest, Study, StudyOutput};
pub use response::{RamanKind, RamanModel};
pub use stochastic::{GawbsCorrelation, GawbsModel, InterArm};
