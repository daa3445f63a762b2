//! Hylomorphic solitary waves of the nonlinear beam equation
//!
//! ```text
//! u_tt + u_xxxx + W'(u) = 0
//! ```
//!
//! on a large periodic box. Profiles are found by minimizing
//! `J_δ = E/|C| + δE` (energy over momentum, penalized by energy) and are then
//! checked independently: the traveling-wave equation residual, transport
//! under the full time evolution, conservation of `E` and `C`, and orbital
//! stability under small perturbations.

pub mod evolution;
pub mod functionals;
pub mod grid;
pub mod minimizer;
pub mod potential;

pub use evolution::{EvolutionRecord, EvolveConfig};
pub use functionals::{BumpSpec, FieldState, InvariantSet, RatioScanResult};
pub use grid::{Field, Grid};
pub use minimizer::{MinimizeConfig, SolitonProfile};
pub use potential::{PotentialKind, PotentialModel};
