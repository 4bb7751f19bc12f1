//! Discrete optimal transport: exact and entropic solvers, an exhaustive
//! vertex oracle, the energy distance, and the two-point restoration toy
//! problem used to contrast ℓ2 and ℓq transport costs.

mod energy;
mod example1;
mod measure;
mod oracle;
mod simplex;
mod sinkhorn;

pub use energy::{energy_distance, energy_distance_grad};
pub use example1::{build_example1, map_distortion, Example1Conditions, Example1Instance, Example1Variant};
pub use measure::{CostMatrix, DiscreteMeasure, TransportPlan, MASS_TOL};
pub use oracle::{enumerate_oracle, enumerate_oracle_weights, ORACLE_MAX_ATOMS};
pub use simplex::{solve_exact, solve_exact_weights};
pub use sinkhorn::{sinkhorn, SinkhornParams, SinkhornResult};
