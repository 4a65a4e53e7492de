//! Closed-form row and variable counts, computed from the instance alone.
//!
//! These formulas never look at a built [`ConstraintSystem`]; the tests and
//! the benchmark compare them against what [`build`](super::build) emits.

use std::collections::{BTreeSet, HashMap};

use super::{ConstraintSystem, Family, VarMeaning};
use crate::model::{effective_scenarios, Instance, Time};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counts {
    pub variables: usize,
    pub expansion_variables: usize,
    pub capacity: usize,
    pub departure: usize,
    pub arrival: usize,
    pub headway: usize,
    pub flow: usize,
    pub connection: usize,
    pub via: usize,
}

impl Counts {
    pub fn rows(&self) -> usize {
        self.capacity + self.departure + self.arrival + self.headway + self.flow + self.connection + self.via
    }

    /// Tallies an already built system in the same shape.
    pub fn of_system(sys: &ConstraintSystem) -> Counts {
        Counts {
            variables: sys.num_vars(),
            expansion_variables: sys
                .variables
                .iter()
                .filter(|v| matches!(v.meaning, VarMeaning::Expand { .. }))
                .count(),
            capacity: sys.count(Family::Capacity),
            departure: sys.count(Family::Departure),
            arrival: sys.count(Family::Arrival),
            headway: sys.count(Family::Headway),
            flow: sys.count(Family::Flow),
            connection: sys.count(Family::Connection),
            via: sys.count(Family::Via),
        }
    }
}

/// Number of departure times `t` with `t + tt <= h`.
fn slots(h: Time, tt: Time) -> usize {
    if tt > h {
        0
    } else {
        (h - tt + 1) as usize
    }
}

/// Expected counts for a valid instance.
pub fn expected_counts(inst: &Instance) -> Counts {
    let net = &inst.network;
    let h = inst.horizon;
    let n_nodes = net.nodes.len();
    let train_pos: HashMap<&str, usize> = inst.trains.iter().enumerate().map(|(i, t)| (t.id.as_str(), i)).collect();
    let min_out = |node: &str| net.arcs.iter().filter(|a| a.from == node).map(|a| a.travel_time).min();
    let min_in = |node: &str| net.arcs.iter().filter(|a| a.to == node).map(|a| a.travel_time).min();
    let fits = |tt: Option<Time>| tt.is_some_and(|tt| tt <= h);
    let mut c = Counts { expansion_variables: net.arcs.len(), ..Counts::default() };

    let movement_slots: usize = net.arcs.iter().map(|a| slots(h, a.travel_time)).sum();
    let dwell_per_train = if inst.dwell { n_nodes.saturating_sub(2) * h as usize } else { 0 };
    c.variables = net.arcs.len() + inst.trains.len() * (movement_slots + dwell_per_train);

    let scenarios: Vec<Vec<usize>> = effective_scenarios(inst)
        .iter()
        .map(|s| {
            let set: BTreeSet<usize> = s.train_ids.iter().map(|id| train_pos[id.as_str()]).collect();
            set.into_iter().collect()
        })
        .filter(|s: &Vec<usize>| !s.is_empty())
        .collect();

    // Capacity: windows whose departure range meets [0, h - tt].
    for a in &net.arcs {
        let s = slots(h, a.travel_time);
        if s == 0 {
            continue;
        }
        let windows = if inst.capacity_window > h { 1 } else { ((h + 2 - inst.capacity_window) as usize).min(s) };
        c.capacity += windows * scenarios.len();
    }

    for t in &inst.trains {
        let out = fits(min_out(&t.origin));
        if t.earliest_departure >= 1 && out {
            c.departure += 1;
        }
        if !t.optional || out {
            c.departure += 1;
        }
        if t.latest_arrival < h && fits(min_in(&t.destination)) {
            c.arrival += 1;
        }
        if !t.optional {
            c.arrival += 1;
        }
    }

    // Headway: pairs t1 < t2 <= D with gap d < M number D + 1 - d for each d.
    let lookup = |a: &crate::model::Arc, v1: usize, v2: usize| {
        net.headways
            .entries
            .iter()
            .find(|e| e.from == a.from && e.to == a.to && e.v1 == inst.trains[v1].id && e.v2 == inst.trains[v2].id)
            .map_or(net.headways.default, |e| e.minimum_headway)
    };
    for a in &net.arcs {
        if a.travel_time > h {
            continue;
        }
        let d_max = (h - a.travel_time) as usize;
        for s in &scenarios {
            for &v1 in s {
                for &v2 in s {
                    if v1 == v2 {
                        continue;
                    }
                    let m = lookup(a, v1, v2) as usize;
                    c.headway += (1..m.min(d_max + 1)).map(|d| d_max + 1 - d).sum::<usize>();
                }
            }
        }
    }

    // Flow: a row exists wherever some variable touches the time node.
    for t in &inst.trains {
        for node in &net.nodes {
            let n = node.id.as_str();
            let first_in = min_in(n);
            let last_out = min_out(n).filter(|&tt| tt <= h).map(|tt| h - tt);
            let has_in = |time: Time| first_in.is_some_and(|tt| tt <= time);
            let has_out = |time: Time| last_out.is_some_and(|last| time <= last);
            c.flow += if n == t.origin {
                first_in.map_or(0, |tt| slots(h, tt))
            } else if n == t.destination {
                last_out.map_or(0, |last| last as usize + 1)
            } else if inst.dwell && h >= 1 {
                h as usize + 1
            } else {
                (0..=h).filter(|&time| has_in(time) || has_out(time)).count()
            };
        }
    }

    for conn in &inst.connections {
        if fits(min_out(&conn.station)) {
            c.connection += h as usize + 1;
        }
        c.connection += 1;
    }

    for t in &inst.trains {
        let distinct: BTreeSet<&String> = t.via_nodes.iter().collect();
        c.via += distinct.len();
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::build;
    use crate::model::*;
    use crate::rational::int;

    fn network() -> Network {
        let arcs = [("A", "B", 1), ("B", "C", 2), ("A", "C", 4), ("C", "D", 1), ("B", "D", 3)];
        Network {
            nodes: ["A", "B", "C", "D"].into_iter().map(Node::new).collect(),
            arcs: arcs.iter().map(|&(f, t, tt)| Arc::new(f, t, tt, 1, 1, int(2))).collect(),
            headways: HeadwayTable { entries: vec![], default: 2 },
        }
    }

    #[test]
    fn counts_with_every_family() {
        for dwell in [true, false] {
            for h in 1..=6 {
                for window in [1, 2, 3, 9] {
                    let mut trains = vec![
                        TrainRequest::new("T1", "A", "D", 1, 5),
                        TrainRequest::new("T2", "B", "D", 0, 6),
                        TrainRequest::new("T3", "A", "C", 0, 3).optional_with_penalty(int(3)),
                    ];
                    trains[0].via_nodes = vec!["B".into()];
                    let inst = Instance {
                        network: network(),
                        horizon: h,
                        trains,
                        connections: vec![ConnectionRequirement {
                            station: "B".into(),
                            feeder: "T1".into(),
                            connecting: "T2".into(),
                        }],
                        scenarios: vec![
                            Scenario { id: "S1".into(), train_ids: vec!["T1".into(), "T2".into()] },
                            Scenario { id: "S2".into(), train_ids: vec!["T2".into(), "T3".into(), "T1".into()] },
                        ],
                        capacity_window: window,
                        dwell,
                    };
                    let sys = build(&inst).unwrap();
                    let expect = expected_counts(&inst);
                    assert_eq!(Counts::of_system(&sys), expect, "dwell={dwell} h={h} window={window}");
                }
            }
        }
    }
}
