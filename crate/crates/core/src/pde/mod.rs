//! The continuous diffusion-coagulation system on a geometric (or uniform)
//! mass grid times a periodic spatial mesh.

pub mod coag;
pub mod grid;
pub mod solver;
pub mod weak;

pub use coag::{coagulation_rhs, CoagulationOperator, Flux, PivotKernel};
pub use grid::{DensityField, MassGrid, SpatialMesh};
pub use solver::{
    diffusion_step, exact_constant_kernel, exponential_initial, mass_weighted_l1, run, step, Diffuser, MomentRow,
    PdeState, PdeTrajectory, CLIP_TOLERANCE, STABILITY_LIMIT,
};
pub use weak::{entropy, entropy_reference_field, weak_residual, SpatialFactor, TimeFactor, WeakReport, WeakTestFunction};
