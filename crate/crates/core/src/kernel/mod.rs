//! The effective coagulation kernel.
//!
//! For a coupling a = alpha/(d(n)+d(m)) the correction w^a solves
//! `(id + a F) w = -a Gamma` on the support of V, and
//! `beta(n, m) = alpha(n, m) I(a)` with `I(a) = int V (1 + w^a)`.

pub mod grid;
pub mod solve;
pub mod table;

pub use grid::{SupportGrid, DEFAULT_CELLS};
pub use solve::{dw_da, gamma_nodes, gamma_potential, solve_w, u_epsilon, PotentialSolution, SOLVER_TOLERANCE};
pub use table::{build_kernel_table, build_kernel_table_on, coupling_range, AGridSpec, EffectiveKernelTable};
