//! Exact solvers for timetable-based railway network design.
//!
//! Given a network whose arcs may be upgraded at a fixed cost, and a set of
//! train requests with time windows, pick the cheapest set of upgrades under
//! which every request can be routed through the time-expanded network.
//!
//! The pipeline is: [`model::Instance`] → [`milp::build`] →
//! [`solver::solve`] → [`solver::extract_solution`] → [`verify::verify`].
//! [`solve_instance`] runs it end to end and dispatches to the polynomial
//! special cases in [`polycases`] when they apply.
//!
//! ```
//! use raildesign::model::{Arc, HeadwayTable, Instance, Network, Node, TrainRequest};
//! use raildesign::rational::int;
//! use raildesign::{solve_instance, Mode};
//!
//! let instance = Instance {
//!     network: Network {
//!         nodes: vec![Node::new("A"), Node::new("B")],
//!         arcs: vec![Arc::new("A", "B", 1, 1, 1, int(7))],
//!         headways: HeadwayTable::default(),
//!     },
//!     horizon: 1,
//!     trains: vec![TrainRequest::new("T1", "A", "B", 0, 1), TrainRequest::new("T2", "A", "B", 0, 1)],
//!     connections: vec![],
//!     scenarios: vec![],
//!     capacity_window: 1,
//!     dwell: false,
//! };
//! let outcome = solve_instance(&instance, Mode::Milp, &Default::default()).unwrap();
//! assert_eq!(outcome.solution.unwrap().objective_value, int(7));
//! ```

pub mod bench;
pub mod generate;
pub mod milp;
pub mod model;
pub mod polycases;
pub mod rational;
pub mod reduction;
pub mod solver;
pub mod timegraph;
pub mod verify;

use std::fmt;
use std::str::FromStr;

use milp::BuildError;
use model::{Instance, Solution};
use polycases::{is_arborescence, solve_arborescence, solve_series_parallel, PolyError, PolyOutcome};
use rational::Rational;
use solver::{extract_solution, ExtractError, SolveError, SolveLimits, SolveStats, SolveStatus};

/// Which solver to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Mode {
    /// The first special case that accepts the instance, else the MILP.
    #[default]
    Auto,
    Milp,
    Arborescence,
    SeriesParallel,
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "auto" => Ok(Mode::Auto),
            "milp" => Ok(Mode::Milp),
            "arborescence" => Ok(Mode::Arborescence),
            "sp" => Ok(Mode::SeriesParallel),
            _ => Err(format!("unknown mode `{s}`; expected auto, milp, arborescence or sp")),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Auto => "auto",
            Mode::Milp => "milp",
            Mode::Arborescence => "arborescence",
            Mode::SeriesParallel => "sp",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub status: SolveStatus,
    /// Present when optimal; also the incumbent when a limit was hit.
    pub solution: Option<Solution>,
    /// Proven lower bound, from the MILP only.
    pub bound: Option<Rational>,
    /// The solver that produced the answer.
    pub method: Mode,
    pub stats: Option<SolveStats>,
    /// Why a special case was skipped in auto mode.
    pub notes: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum SolveInstanceError {
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Special(#[from] PolyError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Extract(#[from] ExtractError),
}

fn from_poly(outcome: PolyOutcome, method: Mode, notes: Vec<String>) -> Outcome {
    let (status, solution) = match outcome {
        PolyOutcome::Optimal(s) => (SolveStatus::Optimal, Some(s)),
        PolyOutcome::Infeasible { reason } => {
            let mut notes = notes;
            notes.push(reason);
            return Outcome { status: SolveStatus::Infeasible, solution: None, bound: None, method, stats: None, notes };
        }
    };
    Outcome { status, solution, bound: None, method, stats: None, notes }
}

/// Solves `instance` with the chosen method.
///
/// In [`Mode::Auto`] a special case that declines the instance is skipped
/// and noted; an explicitly requested special case that declines is an
/// error.
pub fn solve_instance(instance: &Instance, mode: Mode, limits: &SolveLimits) -> Result<Outcome, SolveInstanceError> {
    let mut notes = Vec::new();
    match mode {
        Mode::Arborescence => return Ok(from_poly(solve_arborescence(instance)?, mode, notes)),
        Mode::SeriesParallel => return Ok(from_poly(solve_series_parallel(instance)?, mode, notes)),
        Mode::Auto => {
            if is_arborescence(&instance.network).is_some() {
                match solve_arborescence(instance) {
                    Ok(out) => return Ok(from_poly(out, Mode::Arborescence, notes)),
                    Err(PolyError::Invalid(r)) => return Err(BuildError::Invalid(r).into()),
                    Err(e) => notes.push(format!("arborescence: {e}")),
                }
            }
            if polycases::sp_decompose(&instance.network).is_some() {
                match solve_series_parallel(instance) {
                    Ok(out) => return Ok(from_poly(out, Mode::SeriesParallel, notes)),
                    Err(PolyError::Invalid(r)) => return Err(BuildError::Invalid(r).into()),
                    Err(e) => notes.push(format!("series-parallel: {e}")),
                }
            }
        }
        Mode::Milp => {}
    }
    let system = milp::build(instance)?;
    let result = solver::solve(&system, limits)?;
    let solution = match result.incumbent {
        Some(_) => Some(extract_solution(instance, &system, &result)?),
        None => None,
    };
    Ok(Outcome {
        status: result.status,
        solution,
        bound: result.bound,
        method: Mode::Milp,
        stats: Some(result.stats),
        notes,
    })
}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/model.md")]
    struct Model;
    #[doc = include_str!("../../../book/src/milp.md")]
    struct Milp;
    #[doc = include_str!("../../../book/src/solver.md")]
    struct Solver;
    #[doc = include_str!("../../../book/src/special-cases.md")]
    struct SpecialCases;
    #[doc = include_str!("../../../book/src/reduction.md")]
    struct Reduction;
    #[doc = include_str!("../../../book/src/verify.md")]
    struct Verify;
    #[doc = include_str!("../../../README.md")]
    struct Readme;
}
