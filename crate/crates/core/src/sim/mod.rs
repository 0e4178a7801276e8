//! The microscopic particle system: Brownian motion with mass-dependent
//! diffusivity and eps-range pairwise coagulation, advanced by fixed-step
//! tau-leaping, plus the empirical functionals built on it.

pub mod cells;
pub mod config;
pub mod correlation;
pub mod dynamics;
pub mod functionals;
pub mod gap;

pub use cells::{brute_force_pairs, min_image, pairs_within, CellGrid};
pub use config::SimConfig;
pub use correlation::{correlation_check, free_motion_oracle, CorrelationReport, ProductTest, SpatialBump};
pub use dynamics::{pair_rates, simulate, step, step_with, EventRecord, PairRate, Side, StepReport, Trajectory};
pub use functionals::{
    collision_functional, empirical_measure, mass_bin, mass_moments, mollified_density, mollified_grid,
    CollisionEstimate, EmpiricalSnapshot, Estimate, MassMoments, MollifiedDensity,
};
pub use gap::{multiple_edges, pair_sum_gap, GapConfig, GapReport, GapSample, MassWeight, TestFunction};
