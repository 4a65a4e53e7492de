//! Instance and solution data model.
//!
//! An [`Instance`] bundles the railway network, the requested trains, their
//! connections and the scenario partition. It is plain data; call
//! [`validate_instance`] (or [`InstanceIndex::new`], which validates first)
//! before handing it to a solver.

mod index;
mod io;
mod validate;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::rational::{self, Rational};

pub use index::{InstanceIndex, ScenarioIdx};
pub use validate::{codes, validate_instance, Diagnostic, ValidationReport};

/// Discrete time step. The grid runs from 0 to the instance horizon inclusive.
pub type Time = u32;

/// Id of the scenario synthesized for deterministic instances.
pub const IMPLICIT_SCENARIO: &str = "all";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Node {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub display_name: Option<String>,
}

impl Node {
    pub fn new(id: impl Into<String>) -> Self {
        Node { id: id.into(), display_name: None }
    }
}

/// A line between two stations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Arc {
    pub from: String,
    pub to: String,
    /// Time steps a train needs to traverse the line.
    pub travel_time: Time,
    /// Departures allowed per capacity window without expansion.
    pub capacity: u32,
    /// Additional departures per window once the line is expanded.
    pub expandable_capacity: u32,
    #[serde(with = "rational::serde_rational")]
    pub expansion_cost: Rational,
}

impl Arc {
    pub fn new(
        from: impl Into<String>,
        to: impl Into<String>,
        travel_time: Time,
        capacity: u32,
        expandable_capacity: u32,
        expansion_cost: Rational,
    ) -> Self {
        Arc {
            from: from.into(),
            to: to.into(),
            travel_time,
            capacity,
            expandable_capacity,
            expansion_cost,
        }
    }

    /// Key used in row and variable names: `<from>.<to>`.
    pub fn key(&self) -> String {
        format!("{}.{}", self.from, self.to)
    }
}

/// Minimum separation, on one arc, between the departure of a leading train
/// `v1` and a following train `v2`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeadwayEntry {
    pub from: String,
    pub to: String,
    pub v1: String,
    pub v2: String,
    pub minimum_headway: Time,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HeadwayTable {
    pub entries: Vec<HeadwayEntry>,
    /// Applies to every (arc, leader, follower) triple without an entry.
    pub default: Time,
}

impl HeadwayTable {
    /// Whether some pair of trains could ever be forced apart. A headway of
    /// at most one step never binds, since distinct departure times already
    /// differ by at least one.
    pub fn is_trivial(&self) -> bool {
        self.default <= 1 && self.entries.iter().all(|e| e.minimum_headway <= 1)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Network {
    pub nodes: Vec<Node>,
    pub arcs: Vec<Arc>,
    pub headways: HeadwayTable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainRequest {
    pub id: String,
    pub origin: String,
    pub destination: String,
    pub earliest_departure: Time,
    pub latest_arrival: Time,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub optional: bool,
    #[serde(
        default,
        with = "rational::serde_opt_rational",
        skip_serializing_if = "Option::is_none"
    )]
    pub penalty: Option<Rational>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub via_nodes: Vec<String>,
}

impl TrainRequest {
    pub fn new(
        id: impl Into<String>,
        origin: impl Into<String>,
        destination: impl Into<String>,
        earliest_departure: Time,
        latest_arrival: Time,
    ) -> Self {
        TrainRequest {
            id: id.into(),
            origin: origin.into(),
            destination: destination.into(),
            earliest_departure,
            latest_arrival,
            optional: false,
            penalty: None,
            via_nodes: Vec::new(),
        }
    }

    pub fn optional_with_penalty(mut self, penalty: Rational) -> Self {
        self.optional = true;
        self.penalty = Some(penalty);
        self
    }
}

/// The feeder must reach `station` no later than the connecting train
/// leaves it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConnectionRequirement {
    pub station: String,
    pub feeder: String,
    pub connecting: String,
}

/// One candidate timetable. Capacity and headway are enforced per scenario.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub id: String,
    pub train_ids: Vec<String>,
}

/// The single input artifact: network, timetable, scenarios and the time grid.
///
/// Serialized as one JSON object with keys `nodes`, `arcs`, `trains`,
/// `connections`, `scenarios`, `horizon`, `capacity_window`,
/// `headway_default`, `headways` and, when waiting at intermediate stations
/// is forbidden, `"dwell": false`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "io::InstanceFile", into = "io::InstanceFile")]
pub struct Instance {
    pub network: Network,
    /// Last time step; the grid is `0..=horizon`.
    pub horizon: Time,
    pub trains: Vec<TrainRequest>,
    pub connections: Vec<ConnectionRequirement>,
    /// Empty means deterministic: one implicit scenario holding every train.
    pub scenarios: Vec<Scenario>,
    /// Length of the sliding window over which departures are counted.
    pub capacity_window: Time,
    /// Whether trains may wait at intermediate stations.
    pub dwell: bool,
}

impl Instance {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serialization cannot fail")
    }

    pub fn train(&self, id: &str) -> Option<&TrainRequest> {
        self.trains.iter().find(|t| t.id == id)
    }

    pub fn arc(&self, from: &str, to: &str) -> Option<&Arc> {
        self.network.arcs.iter().find(|a| a.from == from && a.to == to)
    }
}

/// Declared scenarios, or a single scenario with every train when none are
/// declared.
pub fn effective_scenarios(instance: &Instance) -> Vec<Scenario> {
    if instance.scenarios.is_empty() {
        vec![Scenario {
            id: IMPLICIT_SCENARIO.to_string(),
            train_ids: instance.trains.iter().map(|t| t.id.clone()).collect(),
        }]
    } else {
        instance.scenarios.clone()
    }
}

/// One movement of a train along an arc.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoutedStep {
    pub train: String,
    pub from: String,
    pub to: String,
    pub depart: Time,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostBreakdown {
    #[serde(with = "rational::serde_rational")]
    pub expansion_cost_total: Rational,
    #[serde(with = "rational::serde_rational")]
    pub penalty_total: Rational,
}

/// Expansion decisions plus a timed route for every routed train.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Solution {
    pub expanded_arcs: BTreeSet<(String, String)>,
    /// Dropped optional trains have no entry.
    pub routes: BTreeMap<String, Vec<RoutedStep>>,
    #[serde(with = "rational::serde_rational")]
    pub objective_value: Rational,
    pub cost_breakdown: CostBreakdown,
}

impl Solution {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("solution serialization cannot fail")
    }

    /// Recomputes the cost breakdown and objective from the expansion set and
    /// the set of routed trains.
    pub fn recompute_costs(&mut self, instance: &Instance) {
        let expansion: Rational = instance
            .network
            .arcs
            .iter()
            .filter(|a| self.expanded_arcs.contains(&(a.from.clone(), a.to.clone())))
            .map(|a| a.expansion_cost.clone())
            .sum();
        let penalty: Rational = instance
            .trains
            .iter()
            .filter(|t| t.optional && !self.routes.contains_key(&t.id))
            .filter_map(|t| t.penalty.clone())
            .sum();
        self.objective_value = &expansion + &penalty;
        self.cost_breakdown = CostBreakdown { expansion_cost_total: expansion, penalty_total: penalty };
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    fn two_trains() -> Instance {
        Instance {
            network: Network {
                nodes: vec![Node::new("A"), Node::new("B")],
                arcs: vec![Arc::new("A", "B", 1, 1, 1, int(5))],
                headways: HeadwayTable::default(),
            },
            horizon: 3,
            trains: vec![TrainRequest::new("A1", "A", "B", 0, 3), TrainRequest::new("B1", "A", "B", 0, 3)],
            connections: vec![],
            scenarios: vec![],
            capacity_window: 1,
            dwell: true,
        }
    }

    #[test]
    fn deterministic_instance_has_one_implicit_scenario() {
        let scenarios = effective_scenarios(&two_trains());
        assert_eq!(scenarios.len(), 1);
        assert_eq!(scenarios[0].id, "all");
        assert_eq!(scenarios[0].train_ids, vec!["A1", "B1"]);
    }

    #[test]
    fn declared_scenarios_are_returned_unchanged() {
        let mut inst = two_trains();
        inst.scenarios = vec![
            Scenario { id: "S1".into(), train_ids: vec!["A1".into()] },
            Scenario { id: "S2".into(), train_ids: vec!["A1".into(), "B1".into()] },
        ];
        assert_eq!(effective_scenarios(&inst), inst.scenarios);
    }

    #[test]
    fn four_scenarios_of_seven() {
        let mut inst = two_trains();
        inst.trains = (0..28).map(|i| TrainRequest::new(format!("T{i}"), "A", "B", 0, 3)).collect();
        inst.scenarios = (0..4)
            .map(|s| Scenario {
                id: format!("S{s}"),
                train_ids: (0..7).map(|i| format!("T{}", s * 7 + i)).collect(),
            })
            .collect();
        let eff = effective_scenarios(&inst);
        assert_eq!(eff.len(), 4);
        assert!(eff.iter().all(|s| s.train_ids.len() == 7));
    }

    #[test]
    fn recompute_costs_counts_dropped_optional_trains() {
        let mut inst = two_trains();
        inst.trains[1] = inst.trains[1].clone().optional_with_penalty(int(4));
        let mut sol = Solution {
            expanded_arcs: [("A".to_string(), "B".to_string())].into_iter().collect(),
            routes: BTreeMap::new(),
            objective_value: int(0),
            cost_breakdown: CostBreakdown { expansion_cost_total: int(0), penalty_total: int(0) },
        };
        sol.recompute_costs(&inst);
        assert_eq!(sol.cost_breakdown.expansion_cost_total, int(5));
        assert_eq!(sol.cost_breakdown.penalty_total, int(4));
        assert_eq!(sol.objective_value, int(9));
    }
}
