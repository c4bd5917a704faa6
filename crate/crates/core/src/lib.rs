//! Radially symmetric steady states of the van der Waals thin-film equation
//!
//! ```text
//! Δh = h^(-alpha)/alpha - p   in B_R,   ∂h/∂ν = 0 on ∂B_R
//! ```
//!
//! Smooth profiles are computed by shooting from `h(0) = eta`; the rupture
//! profile (`h(0) = 0`) is built from the rescaled near-origin problem and
//! then continued outward. Every critical radius `r_k` of a radial profile is
//! a Neumann radius, so a single trajectory yields a whole family of
//! boundary-value solutions; the scaling group maps them between pressures.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod integrator;
pub mod model;
mod ode;
pub mod quadrature;
pub mod rupture;
pub mod scaling;
pub mod verify;

pub use error::{Error, Result};
pub use integrator::{
    integrate, shoot_smooth, taylor_start_smooth, SolveConfig, State, TaylorOrder, Trajectory, TrajectoryKind,
};
pub use model::{derive_constants, DerivedConstants, ExponentPair, Params};
