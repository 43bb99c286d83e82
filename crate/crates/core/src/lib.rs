//! Simulation and control of a chain of spherical pendula on a planar cart.
//!
//! The configuration is a cart position `x ∈ ℝ²` and `n` link directions
//! `qᵢ ∈ S²`, with `e₃` pointing along gravity. Modules build up from dense
//! linear algebra ([`numerics`]) through the physical model, the equations of
//! motion, the `2ⁿ` vertical equilibria, and LQR-based geometric feedback, to
//! a scenario-driven command line front end ([`cli`]).

pub mod cli;
pub mod control;
pub mod dynamics;
pub mod equilibria;
pub mod error;
pub mod model;
pub mod numerics;

pub use error::{Error, Result};
pub use model::{ChainParams, InertiaModel, State};
