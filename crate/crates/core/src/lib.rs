//! Steady states, linear stability and hysteresis of a two-mode
//! optomechanical system: two driven optical cavities sharing one mechanical
//! resonator through radiation pressure.
//!
//! The crate is organized bottom-up:
//!
//! - [`params`]: device rates, pump drive, unit conversion.
//! - [`poly`]: dense real polynomials and an Aberth–Ehrlich root finder.
//! - [`steady`]: steady-state algebra and the fixed-point polynomial.
//! - [`stability`]: mean-field vector field, Jacobian verdicts, ODE check.
//! - [`continuation`]: sweeps, fold location, hysteresis traces.
//! - [`io`]: configuration documents, presets and record emission.
//! - [`study`]: convention sensitivity of the fold power and the search for
//!   bistability below one photon.

pub mod continuation;
pub mod error;
pub mod io;
pub mod params;
pub mod poly;
pub mod solver;
pub mod stability;
pub mod steady;
pub mod study;

pub use error::{Error, Result};
pub use params::{DrivePoint, SystemParams};
pub use solver::{solve_branches, SolveOptions, StabilityRule};
pub use steady::{Stability, SteadyBranch};
