//! Multi-level modified Galerkin solver for the two-dimensional periodic
//! Navier-Stokes equations.
//!
//! Each level `k` integrates a small ODE system for the large-scale part
//! `p_k` of the velocity (modes with `j1, j2 <= m`) and rebuilds the
//! small-scale part `q_k` algebraically from the stored trajectories of the
//! previous levels. A resolved pseudo-spectral run of the full equation
//! serves as the reference for error measurements.

pub mod basis;
pub mod error;
pub mod harness;
pub mod integrate;
pub mod ladder;
pub mod nonlinear;
pub mod persist;
pub mod problem;
pub mod reference;
pub mod selftest;
pub mod transform;

pub use basis::{
    canonical_modes, dof_count, eigenvalue, project, random_field, spectral_params, ModeIndex, NormKind, Projection,
    SpectralField, SpectralParams, Variant,
};
pub use error::{Error, Result};
pub use nonlinear::{bilinear_b, bilinear_b_oracle, trilinear_b, BilinearWorkspace};
pub use transform::{evaluate_physical, from_physical, VelocitySamples};
pub use integrate::{integrate, IntegratorConfig, Provenance, Scheme, Trajectory};
pub use ladder::{run_ladder, run_ladder_with, LadderOps, LadderOptions, LadderResult, LevelRecord};
pub use problem::{band_forcing, ProblemSpec};
pub use reference::{run_reference, SpecialKind, SpecialSolution};
