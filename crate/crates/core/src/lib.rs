//! Coagulating Brownian particles and their kinetic limit.
//!
//! The crate covers four computations that share one model description:
//!
//! - [`kernel`]: the effective coagulation kernel beta(n, m) obtained from
//!   the correction problem on the support of the interaction profile;
//! - [`sim`]: the microscopic particle system (Brownian motion plus
//!   eps-range coagulation) and its empirical functionals;
//! - [`pde`]: the continuous Smoluchowski diffusion-coagulation system;
//! - [`scaling`]: the self-similar scaling exponents.
//!
//! [`harness`] ties them together for the command line.

pub mod convolution;
pub mod error;
pub mod fft;
pub mod harness;
pub mod kernel;
pub mod model;
pub mod pde;
pub mod quadrature;
pub mod rng;
pub mod scaling;
pub mod sim;

pub use error::{Error, Result};
