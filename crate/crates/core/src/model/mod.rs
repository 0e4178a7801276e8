//! Model inputs, hypothesis checks, the phi construction and initial
//! sampling.

pub mod density;
pub mod hypotheses;
pub mod particles;
pub mod params;
pub mod phi;
pub mod presets;

pub use density::{InitialDensity, InitialPreset, MassProfile, SpatialProfile};
pub use hypotheses::{check_hypotheses, ConditionReport, HypothesisGrid, HypothesisReport};
pub use params::{epsilon_for_count, k_epsilon, rho_of_n, ModelConfig, ModelParams, PhiConfig};
pub use particles::{sample_initial, ParticleSystem, SamplingMode};
pub use phi::{construct_phi, PhiFunction, PhiRule, PhiSegment};
pub use presets::{CoagulationPropensity, DiffusionCoefficient, EntropyReference, InteractionPreset, InteractionProfile};
