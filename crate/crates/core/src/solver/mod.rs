//! Exact branch-and-bound for 0-1 constraint systems.
//!
//! Nodes are explored depth first. At each node the fixed variables are
//! propagated through the rows, the linear relaxation of what is left is
//! solved in floating point, and the duals are turned into a lower bound by
//! evaluating the Lagrangian exactly in integer arithmetic. A bound obtained
//! this way is valid for any multipliers, so rounding error in the simplex
//! can weaken it but never make it wrong. Incumbents are accepted only after
//! an exact check of every row.

mod bb;
mod extract;
mod intsys;
mod simplex;

use std::time::Duration;

use crate::rational::Rational;

pub use bb::solve;
pub use extract::{extract_solution, ExtractError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveLimits {
    pub time_limit: Option<Duration>,
    pub node_limit: Option<u64>,
    /// Stop once the incumbent is within this of the bound.
    pub absolute_gap: Rational,
    /// Nodes evaluated concurrently per batch; 1 is the reference mode.
    pub threads: usize,
}

impl Default for SolveLimits {
    fn default() -> Self {
        SolveLimits { time_limit: None, node_limit: None, absolute_gap: Rational::default(), threads: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    LimitReached,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SolveStats {
    pub nodes: u64,
    pub lp_solves: u64,
    /// Nodes where the relaxation gave no usable bound and the trivial bound
    /// was used instead.
    pub lp_fallbacks: u64,
    pub wall_time: Duration,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub incumbent: Option<Vec<bool>>,
    /// Objective of the incumbent, including the constant term.
    pub objective: Option<Rational>,
    /// Best proven lower bound; `None` when infeasibility was proven.
    pub bound: Option<Rational>,
    pub stats: SolveStats,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SolveError {
    #[error("malformed system: {0}")]
    Malformed(String),
    #[error("row `{0}` has coefficients too large for the integer kernel")]
    CoefficientRange(String),
}
