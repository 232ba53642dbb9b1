use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::params::{DrivePoint, SystemParams};
use crate::poly::DEFAULT_IMAG_TOL;
use crate::stability::{classify_in_place, DEFAULT_MARGINAL_BAND};
use crate::steady::{steady_branches, Stability, SteadyBranch};

/// Which verdict decides whether a branch can be occupied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StabilityRule {
    /// Jacobian eigenvalues.
    #[default]
    Jacobian,
    /// Outer roots stable, middle roots unstable (sign of `df/dq`).
    Ordering,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub imag_tol: f64,
    /// In units of `omega_m`.
    pub marginal_band: f64,
    pub ode_rel_tol: f64,
    pub rule: StabilityRule,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            imag_tol: DEFAULT_IMAG_TOL,
            marginal_band: DEFAULT_MARGINAL_BAND,
            ode_rel_tol: 1e-8,
            rule: StabilityRule::Jacobian,
        }
    }
}

impl SolveOptions {
    pub fn verdict(&self, b: &SteadyBranch) -> Stability {
        match self.rule {
            StabilityRule::Jacobian => b.stability.unwrap_or(b.ordering),
            StabilityRule::Ordering => b.ordering,
        }
    }
}

/// Solves and classifies every steady branch at one drive point.
pub fn solve_branches(params: &SystemParams, drive: &DrivePoint, opts: &SolveOptions) -> Result<Vec<SteadyBranch>> {
    let mut branches = steady_branches(params, drive, opts.imag_tol)?;
    for b in &mut branches {
        classify_in_place(b, params, drive, opts.marginal_band)?;
    }
    Ok(branches)
}
