//! Solver and verification toolkit for one-dimensional conservation laws
//! with super-critical fractional diffusion,
//!
//! ```text
//!   ∂ₜρ + ∂ₓF(ρ) + ν (−Δ)^{α/2} B(ρ) − ε ∂ₓₓρ = A(ρ),   α ∈ (0, 1).
//! ```

pub mod config;
pub mod error;
pub mod fractional;
pub mod grid;
pub mod harness;
pub mod kinetic;
pub mod output;
pub mod physics;
mod preset;
pub mod quad;
pub mod solver;

pub use config::RunConfig;
pub use error::{Error, Result};
pub use fractional::{FractionalOperator, SplitParts};
pub use grid::{Boundary, Field, Grid1D, Norms, Profile};
