//! Polynomial special cases: arborescences with fixed departures, and
//! series-parallel networks with interchangeable trains.

mod arborescence;
mod series_parallel;

pub use arborescence::{is_arborescence, solve_arborescence};
pub use series_parallel::{
    recompose, solve_series_parallel, sp_cost_base, sp_cost_table, sp_decompose, CostTable, ExtCost, SpKind,
    SpTree,
};

use crate::model::{Solution, ValidationReport};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PolyOutcome {
    Optimal(Solution),
    Infeasible { reason: String },
}

impl PolyOutcome {
    pub fn solution(&self) -> Option<&Solution> {
        match self {
            PolyOutcome::Optimal(s) => Some(s),
            PolyOutcome::Infeasible { .. } => None,
        }
    }
}

/// Why a special-case solver declined an instance.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PolyError {
    #[error("invalid instance:\n{0}")]
    Invalid(ValidationReport),
    #[error("network is not an arborescence")]
    NotArborescence,
    #[error("network is not two-terminal series-parallel")]
    NotSeriesParallel,
    #[error("nontrivial minimum headways are not supported by this solver")]
    Headways,
    #[error("optional trains are not supported by this solver")]
    OptionalTrains,
    #[error("connections are not supported by this solver")]
    Connections,
    #[error("VIA nodes are not supported by this solver")]
    ViaNodes,
    #[error("train `{0}` has slack between departure and arrival; departures must be fixed")]
    NotFixedDeparture(String),
    #[error("trains must share origin, destination, departure and arrival: {0}")]
    NotUniform(String),
    #[error("capacity window must cover the horizon")]
    WindowTooShort,
    #[error("exactly one scenario is supported")]
    Scenarios,
    #[error("the series recurrence may miss the optimum here: {0}")]
    NotExact(String),
}
