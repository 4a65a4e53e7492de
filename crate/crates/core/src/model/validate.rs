use std::collections::{HashMap, HashSet};
use std::fmt;

use num_traits::Signed;

use super::{effective_scenarios, Instance};

/// Machine-readable diagnostic codes.
pub mod codes {
    pub const HORIZON: &str = "HORIZON";
    pub const CAPACITY_WINDOW: &str = "CAPACITY_WINDOW";
    pub const CAPACITY_WINDOW_EXCEEDS_HORIZON: &str = "CAPACITY_WINDOW_EXCEEDS_HORIZON";
    pub const BAD_ID: &str = "BAD_ID";
    pub const DUPLICATE_NODE: &str = "DUPLICATE_NODE";
    pub const ARC_UNKNOWN_NODE: &str = "ARC_UNKNOWN_NODE";
    pub const ARC_SELF_LOOP: &str = "ARC_SELF_LOOP";
    pub const DUPLICATE_ARC: &str = "DUPLICATE_ARC";
    pub const ARC_TRAVEL_TIME: &str = "ARC_TRAVEL_TIME";
    pub const NEGATIVE_COST: &str = "NEGATIVE_COST";
    pub const HEADWAY_UNKNOWN_ARC: &str = "HEADWAY_UNKNOWN_ARC";
    pub const HEADWAY_UNKNOWN_TRAIN: &str = "HEADWAY_UNKNOWN_TRAIN";
    pub const HEADWAY_SAME_TRAIN: &str = "HEADWAY_SAME_TRAIN";
    pub const DUPLICATE_HEADWAY: &str = "DUPLICATE_HEADWAY";
    pub const DUPLICATE_TRAIN: &str = "DUPLICATE_TRAIN";
    pub const TRAIN_UNKNOWN_NODE: &str = "TRAIN_UNKNOWN_NODE";
    pub const TRAIN_SAME_ENDPOINTS: &str = "TRAIN_SAME_ENDPOINTS";
    pub const TRAIN_TIME_ORDER: &str = "TRAIN_TIME_ORDER";
    pub const TRAIN_BEYOND_HORIZON: &str = "TRAIN_BEYOND_HORIZON";
    pub const PENALTY_MISMATCH: &str = "PENALTY_MISMATCH";
    pub const NEGATIVE_PENALTY: &str = "NEGATIVE_PENALTY";
    pub const VIA_UNKNOWN_NODE: &str = "VIA_UNKNOWN_NODE";
    pub const VIA_AT_TERMINUS: &str = "VIA_AT_TERMINUS";
    pub const VIA_OPTIONAL: &str = "VIA_OPTIONAL";
    pub const DUPLICATE_VIA: &str = "DUPLICATE_VIA";
    pub const CONNECTION_UNKNOWN_NODE: &str = "CONNECTION_UNKNOWN_NODE";
    pub const CONNECTION_UNKNOWN_TRAIN: &str = "CONNECTION_UNKNOWN_TRAIN";
    pub const CONNECTION_SAME_TRAIN: &str = "CONNECTION_SAME_TRAIN";
    pub const CONNECTION_OPTIONAL: &str = "CONNECTION_OPTIONAL";
    pub const CONNECTION_STATION: &str = "CONNECTION_STATION";
    pub const DUPLICATE_SCENARIO: &str = "DUPLICATE_SCENARIO";
    pub const SCENARIO_EMPTY: &str = "SCENARIO_EMPTY";
    pub const SCENARIO_UNKNOWN_TRAIN: &str = "SCENARIO_UNKNOWN_TRAIN";
    pub const SCENARIO_DUPLICATE_TRAIN: &str = "SCENARIO_DUPLICATE_TRAIN";
    pub const TRAIN_NOT_IN_SCENARIO: &str = "TRAIN_NOT_IN_SCENARIO";
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub code: &'static str,
    pub message: String,
    pub location: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}: {}", self.code, self.location, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub errors: Vec<Diagnostic>,
    pub warnings: Vec<Diagnostic>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }

    pub fn has_error(&self, code: &str) -> bool {
        self.errors.iter().any(|d| d.code == code)
    }

    fn error(&mut self, code: &'static str, location: impl Into<String>, message: impl Into<String>) {
        self.errors.push(Diagnostic { code, message: message.into(), location: location.into() });
    }

    fn warn(&mut self, code: &'static str, location: impl Into<String>, message: impl Into<String>) {
        self.warnings.push(Diagnostic { code, message: message.into(), location: location.into() });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.errors {
            writeln!(f, "error: {d}")?;
        }
        for d in &self.warnings {
            writeln!(f, "warning: {d}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ValidationReport {}

/// Ids end up inside LP row and column names, so they are restricted to
/// ASCII letters and digits.
fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.chars().all(|c| c.is_ascii_alphanumeric())
}

/// Checks every structural rule of the instance model. Problems are reported
/// as data; an instance is usable iff the report has no errors.
pub fn validate_instance(inst: &Instance) -> ValidationReport {
    let mut r = ValidationReport::default();
    let net = &inst.network;

    if inst.horizon == 0 {
        r.error(codes::HORIZON, "horizon", "horizon must be at least 1");
    }
    if inst.capacity_window == 0 {
        r.error(codes::CAPACITY_WINDOW, "capacity_window", "capacity window must be at least 1");
    } else if inst.capacity_window > inst.horizon {
        r.warn(
            codes::CAPACITY_WINDOW_EXCEEDS_HORIZON,
            "capacity_window",
            format!(
                "window {} exceeds horizon {}; a single window covers the whole grid",
                inst.capacity_window, inst.horizon
            ),
        );
    }

    let mut nodes = HashSet::new();
    for (i, n) in net.nodes.iter().enumerate() {
        let loc = format!("nodes[{i}]");
        if !valid_id(&n.id) {
            r.error(codes::BAD_ID, &loc, format!("node id `{}` must be non-empty ASCII alphanumeric", n.id));
        }
        if !nodes.insert(n.id.as_str()) {
            r.error(codes::DUPLICATE_NODE, &loc, format!("node `{}` declared twice", n.id));
        }
    }

    let mut arcs = HashSet::new();
    for (i, a) in net.arcs.iter().enumerate() {
        let loc = format!("arcs[{i}]");
        for end in [&a.from, &a.to] {
            if !nodes.contains(end.as_str()) {
                r.error(codes::ARC_UNKNOWN_NODE, &loc, format!("arc endpoint `{end}` is not a node"));
            }
        }
        if a.from == a.to {
            r.error(codes::ARC_SELF_LOOP, &loc, format!("arc `{}` starts and ends at the same node", a.key()));
        }
        if !arcs.insert((a.from.as_str(), a.to.as_str())) {
            r.error(codes::DUPLICATE_ARC, &loc, format!("arc `{}` declared twice", a.key()));
        }
        if a.travel_time < 1 {
            r.error(codes::ARC_TRAVEL_TIME, &loc, format!("arc `{}` has travel time 0", a.key()));
        }
        if a.expansion_cost.is_negative() {
            r.error(codes::NEGATIVE_COST, &loc, format!("arc `{}` has a negative expansion cost", a.key()));
        }
    }

    let mut trains: HashMap<&str, usize> = HashMap::new();
    for (i, t) in inst.trains.iter().enumerate() {
        let loc = format!("trains[{i}]");
        if !valid_id(&t.id) {
            r.error(codes::BAD_ID, &loc, format!("train id `{}` must be non-empty ASCII alphanumeric", t.id));
        }
        if trains.insert(t.id.as_str(), i).is_some() {
            r.error(codes::DUPLICATE_TRAIN, &loc, format!("train `{}` declared twice", t.id));
        }
        for end in [&t.origin, &t.destination] {
            if !nodes.contains(end.as_str()) {
                r.error(codes::TRAIN_UNKNOWN_NODE, &loc, format!("train `{}` references unknown node `{end}`", t.id));
            }
        }
        if t.origin == t.destination {
            r.error(codes::TRAIN_SAME_ENDPOINTS, &loc, format!("train `{}` has origin equal to destination", t.id));
        }
        if t.earliest_departure > t.latest_arrival {
            r.error(
                codes::TRAIN_TIME_ORDER,
                &loc,
                format!("train `{}` must depart by its latest arrival", t.id),
            );
        }
        if t.latest_arrival > inst.horizon {
            r.warn(
                codes::TRAIN_BEYOND_HORIZON,
                &loc,
                format!("train `{}` latest arrival {} lies beyond the horizon", t.id, t.latest_arrival),
            );
        }
        match (&t.optional, &t.penalty) {
            (true, None) | (false, Some(_)) => r.error(
                codes::PENALTY_MISMATCH,
                &loc,
                format!("train `{}`: a penalty is required exactly for optional trains", t.id),
            ),
            (true, Some(p)) if p.is_negative() => {
                r.error(codes::NEGATIVE_PENALTY, &loc, format!("train `{}` has a negative penalty", t.id))
            }
            _ => {}
        }
        let mut seen = HashSet::new();
        for via in &t.via_nodes {
            if !nodes.contains(via.as_str()) {
                r.error(codes::VIA_UNKNOWN_NODE, &loc, format!("train `{}` VIA node `{via}` is unknown", t.id));
            }
            if *via == t.origin || *via == t.destination {
                r.error(
                    codes::VIA_AT_TERMINUS,
                    &loc,
                    format!("train `{}` VIA node `{via}` is its origin or destination", t.id),
                );
            }
            if !seen.insert(via.as_str()) {
                r.warn(codes::DUPLICATE_VIA, &loc, format!("train `{}` lists VIA node `{via}` twice", t.id));
            }
        }
        if t.optional && !t.via_nodes.is_empty() {
            r.error(codes::VIA_OPTIONAL, &loc, format!("optional train `{}` cannot carry VIA nodes", t.id));
        }
    }

    let mut headway_keys = HashSet::new();
    for (i, h) in net.headways.entries.iter().enumerate() {
        let loc = format!("headways[{i}]");
        if !arcs.contains(&(h.from.as_str(), h.to.as_str())) {
            r.error(codes::HEADWAY_UNKNOWN_ARC, &loc, format!("no arc `{}.{}`", h.from, h.to));
        }
        for v in [&h.v1, &h.v2] {
            if !trains.contains_key(v.as_str()) {
                r.error(codes::HEADWAY_UNKNOWN_TRAIN, &loc, format!("unknown train `{v}`"));
            }
        }
        if h.v1 == h.v2 {
            r.error(codes::HEADWAY_SAME_TRAIN, &loc, "headway needs two distinct trains");
        }
        if !headway_keys.insert((&h.from, &h.to, &h.v1, &h.v2)) {
            r.error(codes::DUPLICATE_HEADWAY, &loc, "headway triple listed twice");
        }
    }

    for (i, c) in inst.connections.iter().enumerate() {
        let loc = format!("connections[{i}]");
        if !nodes.contains(c.station.as_str()) {
            r.error(codes::CONNECTION_UNKNOWN_NODE, &loc, format!("unknown station `{}`", c.station));
        }
        let feeder = trains.get(c.feeder.as_str()).map(|&k| &inst.trains[k]);
        let connecting = trains.get(c.connecting.as_str()).map(|&k| &inst.trains[k]);
        for (id, t) in [(&c.feeder, feeder), (&c.connecting, connecting)] {
            match t {
                None => r.error(codes::CONNECTION_UNKNOWN_TRAIN, &loc, format!("unknown train `{id}`")),
                Some(t) if t.optional => r.error(
                    codes::CONNECTION_OPTIONAL,
                    &loc,
                    format!("optional train `{id}` cannot take part in a connection"),
                ),
                _ => {}
            }
        }
        if c.feeder == c.connecting {
            r.error(codes::CONNECTION_SAME_TRAIN, &loc, "feeder and connecting train coincide");
        }
        if feeder.is_some_and(|f| f.origin == c.station) {
            r.error(codes::CONNECTION_STATION, &loc, "station is the feeder's origin");
        }
        if connecting.is_some_and(|t| t.destination == c.station) {
            r.error(codes::CONNECTION_STATION, &loc, "station is the connecting train's destination");
        }
    }

    let mut scenario_ids = HashSet::new();
    for (i, s) in inst.scenarios.iter().enumerate() {
        let loc = format!("scenarios[{i}]");
        if !valid_id(&s.id) {
            r.error(codes::BAD_ID, &loc, format!("scenario id `{}` must be non-empty ASCII alphanumeric", s.id));
        }
        if !scenario_ids.insert(s.id.as_str()) {
            r.error(codes::DUPLICATE_SCENARIO, &loc, format!("scenario `{}` declared twice", s.id));
        }
        if s.train_ids.is_empty() {
            r.error(codes::SCENARIO_EMPTY, &loc, format!("scenario `{}` has no trains", s.id));
        }
        let mut seen = HashSet::new();
        for id in &s.train_ids {
            if !trains.contains_key(id.as_str()) {
                r.error(codes::SCENARIO_UNKNOWN_TRAIN, &loc, format!("unknown train `{id}`"));
            }
            if !seen.insert(id.as_str()) {
                r.warn(codes::SCENARIO_DUPLICATE_TRAIN, &loc, format!("train `{id}` listed twice"));
            }
        }
    }
    if !inst.scenarios.is_empty() {
        let covered: HashSet<&str> =
            inst.scenarios.iter().flat_map(|s| s.train_ids.iter().map(String::as_str)).collect();
        for (i, t) in inst.trains.iter().enumerate() {
            if !covered.contains(t.id.as_str()) {
                r.error(
                    codes::TRAIN_NOT_IN_SCENARIO,
                    format!("trains[{i}]"),
                    format!("train `{}` belongs to no scenario", t.id),
                );
            }
        }
    }
    debug_assert!(!effective_scenarios(inst).is_empty());
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::*;
    use crate::rational::int;

    fn minimal() -> Instance {
        Instance {
            network: Network {
                nodes: vec![Node::new("A"), Node::new("B")],
                arcs: vec![Arc::new("A", "B", 1, 1, 0, int(0))],
                headways: HeadwayTable::default(),
            },
            horizon: 2,
            trains: vec![TrainRequest::new("T1", "A", "B", 0, 2)],
            connections: vec![],
            scenarios: vec![],
            capacity_window: 1,
            dwell: true,
        }
    }

    #[test]
    fn minimal_instance_is_clean() {
        let report = validate_instance(&minimal());
        assert!(report.errors.is_empty() && report.warnings.is_empty(), "{report}");
    }

    #[test]
    fn zero_travel_time() {
        let mut inst = minimal();
        inst.network.arcs[0].travel_time = 0;
        assert!(validate_instance(&inst).has_error(codes::ARC_TRAVEL_TIME));
    }

    #[test]
    fn via_at_destination() {
        let mut inst = minimal();
        inst.trains[0].via_nodes = vec!["B".into()];
        assert!(validate_instance(&inst).has_error(codes::VIA_AT_TERMINUS));
    }

    #[test]
    fn structural_errors_are_all_reported() {
        let mut inst = minimal();
        inst.network.nodes.push(Node::new("A"));
        inst.network.arcs.push(Arc::new("A", "B", 1, 1, 0, int(-1)));
        inst.network.arcs.push(Arc::new("A", "Z", 1, 1, 0, int(0)));
        inst.trains.push(TrainRequest::new("T1", "B", "B", 3, 1));
        let report = validate_instance(&inst);
        for code in [
            codes::DUPLICATE_NODE,
            codes::DUPLICATE_ARC,
            codes::NEGATIVE_COST,
            codes::ARC_UNKNOWN_NODE,
            codes::DUPLICATE_TRAIN,
            codes::TRAIN_SAME_ENDPOINTS,
            codes::TRAIN_TIME_ORDER,
        ] {
            assert!(report.has_error(code), "missing {code}: {report}");
        }
    }

    #[test]
    fn penalty_must_match_optional_flag() {
        let mut inst = minimal();
        inst.trains[0].optional = true;
        assert!(validate_instance(&inst).has_error(codes::PENALTY_MISMATCH));
        inst.trains[0].penalty = Some(int(2));
        assert!(validate_instance(&inst).is_ok());
        inst.trains[0].optional = false;
        assert!(validate_instance(&inst).has_error(codes::PENALTY_MISMATCH));
    }

    #[test]
    fn connections_exclude_optional_trains_and_bad_stations() {
        let mut inst = minimal();
        inst.network.nodes.push(Node::new("C"));
        inst.network.arcs.push(Arc::new("B", "C", 1, 1, 0, int(0)));
        inst.trains.push(TrainRequest::new("T2", "B", "C", 0, 2).optional_with_penalty(int(1)));
        inst.connections.push(ConnectionRequirement { station: "B".into(), feeder: "T1".into(), connecting: "T2".into() });
        assert!(validate_instance(&inst).has_error(codes::CONNECTION_OPTIONAL));

        inst.trains[1] = TrainRequest::new("T2", "B", "C", 0, 2);
        assert!(validate_instance(&inst).is_ok());

        inst.connections[0].station = "A".into();
        assert!(validate_instance(&inst).has_error(codes::CONNECTION_STATION));
    }

    #[test]
    fn scenarios_must_cover_every_train() {
        let mut inst = minimal();
        inst.trains.push(TrainRequest::new("T2", "A", "B", 0, 2));
        inst.scenarios = vec![Scenario { id: "S1".into(), train_ids: vec!["T1".into()] }];
        assert!(validate_instance(&inst).has_error(codes::TRAIN_NOT_IN_SCENARIO));
        inst.scenarios.push(Scenario { id: "S2".into(), train_ids: vec![] });
        assert!(validate_instance(&inst).has_error(codes::SCENARIO_EMPTY));
        inst.scenarios[1].train_ids.push("T9".into());
        assert!(validate_instance(&inst).has_error(codes::SCENARIO_UNKNOWN_TRAIN));
    }

    #[test]
    fn ids_are_restricted() {
        let mut inst = minimal();
        inst.trains[0].id = "T_1".into();
        assert!(validate_instance(&inst).has_error(codes::BAD_ID));
    }

    #[test]
    fn oversized_window_is_only_a_warning() {
        let mut inst = minimal();
        inst.capacity_window = 9;
        let report = validate_instance(&inst);
        assert!(report.is_ok());
        assert_eq!(report.warnings[0].code, codes::CAPACITY_WINDOW_EXCEEDS_HORIZON);
    }

    #[test]
    fn validation_is_idempotent() {
        let mut inst = minimal();
        inst.network.arcs[0].travel_time = 0;
        assert_eq!(validate_instance(&inst), validate_instance(&inst));
    }
}
