//! The 0-1 linear model of the network design problem.
//!
//! [`build`] turns an [`Instance`](crate::model::Instance) into a
//! [`ConstraintSystem`]: one binary per line expansion, one per (train,
//! movement) pair of the time-expanded network, and one per (train, dwell)
//! pair when waiting is allowed. Rows come in families (capacity,
//! departure, arrival, headway, flow, connection, VIA) and carry names that
//! say which arc, trains and times they constrain.

mod build;
pub mod counts;
pub mod lp;

use std::fmt;

use num_traits::Zero;

use crate::model::Time;
use crate::rational::Rational;

pub use build::{build, headway_row, BuildError};
pub(crate) use build::{window_len, window_starts};
pub use counts::{expected_counts, Counts};
pub use lp::{export_lp, parse_lp, LpModel, LpParseError, LpRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarMeaning {
    /// `b_ij`: arc `arc` is expanded.
    Expand { arc: usize },
    /// `x_{i,j,t,v}`: train `train` leaves along `arc` at `depart`.
    Route { train: usize, arc: usize, depart: Time },
    /// Train `train` waits at `node` from `t` to `t + 1`.
    Dwell { train: usize, node: usize, t: Time },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    pub meaning: VarMeaning,
    pub name: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl Sense {
    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        }
    }

    pub fn holds(self, lhs: &Rational, rhs: &Rational) -> bool {
        match self {
            Sense::Le => lhs <= rhs,
            Sense::Eq => lhs == rhs,
            Sense::Ge => lhs >= rhs,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    Capacity,
    Departure,
    Arrival,
    Headway,
    Flow,
    Connection,
    Via,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Capacity => "capacity",
            Family::Departure => "departure",
            Family::Arrival => "arrival",
            Family::Headway => "headway",
            Family::Flow => "flow",
            Family::Connection => "connection",
            Family::Via => "via",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearRow {
    /// LP row name; encodes arc, trains, times and scenario.
    pub name: String,
    pub family: Family,
    pub terms: Vec<(usize, Rational)>,
    pub sense: Sense,
    pub rhs: Rational,
}

impl LinearRow {
    pub fn activity(&self, assignment: &[bool]) -> Rational {
        self.terms
            .iter()
            .filter(|(v, _)| assignment[*v])
            .map(|(_, c)| c.clone())
            .sum()
    }

    pub fn is_satisfied(&self, assignment: &[bool]) -> bool {
        self.sense.holds(&self.activity(assignment), &self.rhs)
    }
}

/// Variables, rows and a minimization objective over binaries.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ConstraintSystem {
    pub variables: Vec<Variable>,
    pub rows: Vec<LinearRow>,
    pub objective: Vec<(usize, Rational)>,
    /// Constant added to the objective (penalties of optional trains).
    pub objective_constant: Rational,
}

impl ConstraintSystem {
    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn objective_value(&self, assignment: &[bool]) -> Rational {
        let mut value = self.objective_constant.clone();
        for (v, c) in &self.objective {
            if assignment[*v] {
                value += c;
            }
        }
        value
    }

    /// Indices of rows violated by `assignment`.
    pub fn violated_rows(&self, assignment: &[bool]) -> Vec<usize> {
        self.rows
            .iter()
            .enumerate()
            .filter(|(_, r)| !r.is_satisfied(assignment))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn is_feasible(&self, assignment: &[bool]) -> bool {
        assignment.len() == self.variables.len() && self.rows.iter().all(|r| r.is_satisfied(assignment))
    }

    pub fn rows_of(&self, family: Family) -> impl Iterator<Item = &LinearRow> {
        self.rows.iter().filter(move |r| r.family == family)
    }

    pub fn count(&self, family: Family) -> usize {
        self.rows_of(family).count()
    }

    pub fn var_by_name(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    /// Checks the structural invariants: term ids in range and unique per
    /// row, objective only on expansion or departure variables.
    pub fn check_well_formed(&self) -> Result<(), String> {
        let n = self.variables.len();
        for row in &self.rows {
            let mut seen = std::collections::HashSet::new();
            for (v, c) in &row.terms {
                if *v >= n {
                    return Err(format!("row {} references undeclared variable {v}", row.name));
                }
                if !seen.insert(*v) {
                    return Err(format!("row {} repeats variable {v}", row.name));
                }
                if c.is_zero() {
                    return Err(format!("row {} has a zero coefficient", row.name));
                }
            }
        }
        for (v, _) in &self.objective {
            if *v >= n {
                return Err(format!("objective references undeclared variable {v}"));
            }
            if matches!(self.variables[*v].meaning, VarMeaning::Dwell { .. }) {
                return Err(format!("objective references dwell variable {}", self.variables[*v].name));
            }
        }
        Ok(())
    }
}
