//! Semantic re-check of a [`Solution`] against its [`Instance`].
//!
//! Nothing here looks at the constraint system. Window counts, headway gaps
//! and walks are recomputed from the routes directly.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::milp::{window_len, window_starts};
use crate::model::{effective_scenarios, Instance, InstanceIndex, Solution, Time};
use crate::rational::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ViolationFamily {
    Capacity,
    Departure,
    Arrival,
    Headway,
    Flow,
    Connection,
    Via,
    Objective,
    Structure,
}

impl ViolationFamily {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationFamily::Capacity => "capacity",
            ViolationFamily::Departure => "departure",
            ViolationFamily::Arrival => "arrival",
            ViolationFamily::Headway => "headway",
            ViolationFamily::Flow => "flow",
            ViolationFamily::Connection => "connection",
            ViolationFamily::Via => "via",
            ViolationFamily::Objective => "objective",
            ViolationFamily::Structure => "structure",
        }
    }
}

impl fmt::Display for ViolationFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Violation {
    pub family: ViolationFamily,
    pub detail: String,
}

impl fmt::Display for Violation {
    /// `family<TAB>detail`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}", self.family, self.detail)
    }
}

/// A leg resolved against the network: arc index, departure, arrival.
#[derive(Debug, Clone, Copy)]
struct Leg {
    arc: usize,
    depart: Time,
    arrive: Time,
}

struct Checker {
    out: Vec<Violation>,
}

impl Checker {
    fn push(&mut self, family: ViolationFamily, detail: String) {
        self.out.push(Violation { family, detail });
    }
}

/// Every rule `solution` breaks, sorted by family and detail. Empty means the
/// solution is operable and its reported costs are right.
///
/// The instance is expected to be valid; if it is not, the validation errors
/// come back as structure violations.
pub fn verify(instance: &Instance, solution: &Solution) -> Vec<Violation> {
    use ViolationFamily::*;
    let idx = match InstanceIndex::new(instance) {
        Ok(idx) => idx,
        Err(report) => {
            let mut out: Vec<Violation> = report
                .errors
                .iter()
                .map(|d| Violation { family: Structure, detail: format!("invalid instance: {}", d.message) })
                .collect();
            out.sort();
            return out;
        }
    };
    let net = &instance.network;
    let h = instance.horizon;
    let mut ck = Checker { out: Vec::new() };

    for (from, to) in &solution.expanded_arcs {
        if idx.arc(from, to).is_none() {
            ck.push(Structure, format!("expanded arc {from}.{to} is not in the network"));
        }
    }

    // Resolve legs; a broken leg leaves the route unusable for timing checks.
    let mut legs: HashMap<usize, Vec<Leg>> = HashMap::new();
    for (id, steps) in &solution.routes {
        let Some(v) = idx.train(id) else {
            ck.push(Structure, format!("route for unknown train {id}"));
            continue;
        };
        if steps.is_empty() {
            ck.push(Structure, format!("train {id} has an empty route; dropped trains must be omitted"));
            continue;
        }
        let mut resolved = Vec::with_capacity(steps.len());
        for (k, s) in steps.iter().enumerate() {
            if s.train != *id {
                ck.push(Structure, format!("train {id} leg {k} is labelled {}", s.train));
            }
            match idx.arc(&s.from, &s.to) {
                Some(a) => resolved.push(Leg { arc: a, depart: s.depart, arrive: s.depart + net.arcs[a].travel_time }),
                None => ck.push(Structure, format!("train {id} leg {k} uses {}.{} which is not an arc", s.from, s.to)),
            }
        }
        if resolved.len() == steps.len() {
            legs.insert(v, resolved);
        }
    }

    for (v, train) in instance.trains.iter().enumerate() {
        let id = &train.id;
        if !solution.routes.contains_key(id) {
            if !train.optional {
                ck.push(Departure, format!("train {id} is not optional but has no route"));
            }
            continue;
        }
        let Some(route) = legs.get(&v) else { continue };
        let (origin, dest) = idx.train_ends[v];
        let node = |n: usize| &net.nodes[n].id;

        let first = route[0];
        if idx.arc_ends[first.arc].0 != origin {
            ck.push(Flow, format!("train {id} starts at {}, not at its origin {}", node(idx.arc_ends[first.arc].0), train.origin));
        }
        if first.depart < train.earliest_departure {
            ck.push(
                Departure,
                format!("train {id} departs at {} before its earliest departure {}", first.depart, train.earliest_departure),
            );
        }
        for (k, pair) in route.windows(2).enumerate() {
            let (prev, next) = (pair[0], pair[1]);
            let at = idx.arc_ends[prev.arc].1;
            if idx.arc_ends[next.arc].0 != at {
                ck.push(Flow, format!("train {id} leg {} leaves {} but arrived at {}", k + 1, node(idx.arc_ends[next.arc].0), node(at)));
            } else if next.depart < prev.arrive {
                ck.push(Flow, format!("train {id} leg {} leaves {} at {} before arriving at {}", k + 1, node(at), next.depart, prev.arrive));
            } else if next.depart > prev.arrive && !instance.dwell {
                ck.push(Flow, format!("train {id} waits at {} from {} to {} but dwelling is disabled", node(at), prev.arrive, next.depart));
            }
            if at == dest {
                ck.push(Flow, format!("train {id} leg {} continues past its destination {}", k + 1, train.destination));
            }
        }
        for (k, leg) in route.iter().enumerate() {
            if idx.arc_ends[leg.arc].1 == origin {
                ck.push(Flow, format!("train {id} leg {k} returns to its origin {}", train.origin));
            }
        }
        let last = route[route.len() - 1];
        if idx.arc_ends[last.arc].1 != dest {
            ck.push(Flow, format!("train {id} ends at {}, not at its destination {}", node(idx.arc_ends[last.arc].1), train.destination));
        }
        if last.arrive > train.latest_arrival {
            ck.push(Arrival, format!("train {id} arrives at {} after its latest arrival {}", last.arrive, train.latest_arrival));
        }
        if last.arrive > h {
            ck.push(Arrival, format!("train {id} arrives at {} after the horizon {h}", last.arrive));
        }
        let departed: BTreeSet<usize> = route.iter().map(|l| idx.arc_ends[l.arc].0).collect();
        for via in train.via_nodes.iter().collect::<BTreeSet<_>>() {
            if !departed.contains(&idx.node(via).expect("validated")) {
                ck.push(Via, format!("train {id} never departs from VIA node {via}"));
            }
        }
    }

    // Capacity and headways per scenario, over every departure on each arc.
    let expanded: Vec<bool> = net
        .arcs
        .iter()
        .map(|a| solution.expanded_arcs.contains(&(a.from.clone(), a.to.clone())))
        .collect();
    let mut on_arc: Vec<Vec<(usize, Time)>> = vec![Vec::new(); net.arcs.len()];
    for (&v, route) in &legs {
        for l in route {
            on_arc[l.arc].push((v, l.depart));
        }
    }
    let starts = window_starts(h, instance.capacity_window);
    let wlen = window_len(h, instance.capacity_window);
    let scenarios = effective_scenarios(instance);
    for (s, scenario) in idx.scenarios.iter().enumerate() {
        let suffix = if instance.scenarios.is_empty() { String::new() } else { format!(" in scenario {}", scenarios[s].id) };
        let member: BTreeSet<usize> = scenario.trains.iter().copied().collect();
        for (a, arc) in net.arcs.iter().enumerate() {
            let mut deps: Vec<(Time, usize)> =
                on_arc[a].iter().filter(|(v, _)| member.contains(v)).map(|&(v, t)| (t, v)).collect();
            if deps.is_empty() {
                continue;
            }
            deps.sort_unstable();
            let limit = u64::from(arc.capacity) + if expanded[a] { u64::from(arc.expandable_capacity) } else { 0 };
            for &t0 in &starts {
                let count = deps.iter().filter(|(t, _)| *t >= t0 && *t < t0 + wlen).count() as u64;
                if count > limit {
                    ck.push(
                        Capacity,
                        format!("arc {} has {count} departures in [{t0}, {}) against capacity {limit}{suffix}", arc.key(), t0 + wlen),
                    );
                }
            }
            for (i, &(t1, v1)) in deps.iter().enumerate() {
                for &(t2, v2) in &deps[i + 1..] {
                    if v1 == v2 || t2 == t1 {
                        continue;
                    }
                    let m = idx.headway(a, v1, v2);
                    if t2 - t1 < m {
                        ck.push(
                            Headway,
                            format!(
                                "arc {}: {} at {t1} then {} at {t2}, gap {} below headway {m}{suffix}",
                                arc.key(),
                                instance.trains[v1].id,
                                instance.trains[v2].id,
                                t2 - t1
                            ),
                        );
                    }
                }
            }
        }
    }

    // Connections, cumulatively: by every time, the feeder has arrived at the
    // station at least as often as the connecting train has left it.
    for c in &instance.connections {
        let n = idx.node(&c.station).expect("validated");
        let (v1, v2) = (idx.train(&c.feeder).expect("validated"), idx.train(&c.connecting).expect("validated"));
        let arrivals: Vec<Time> =
            legs.get(&v1).into_iter().flatten().filter(|l| idx.arc_ends[l.arc].1 == n).map(|l| l.arrive).collect();
        let mut departures: Vec<Time> =
            legs.get(&v2).into_iter().flatten().filter(|l| idx.arc_ends[l.arc].0 == n).map(|l| l.depart).collect();
        departures.sort_unstable();
        let label = format!("{} at {} for {}", c.feeder, c.station, c.connecting);
        if departures.is_empty() {
            ck.push(Connection, format!("{label}: {} never departs from {}", c.connecting, c.station));
            continue;
        }
        for (k, &d) in departures.iter().enumerate() {
            let arrived = arrivals.iter().filter(|&&a| a <= d).count();
            if arrived <= k {
                ck.push(Connection, format!("{label}: {} departs at {d} before {} has arrived", c.connecting, c.feeder));
            }
        }
    }

    // Objective, exactly.
    let expansion: Rational = net.arcs.iter().zip(&expanded).filter(|(_, &e)| e).map(|(a, _)| a.expansion_cost.clone()).sum();
    let penalty: Rational = instance
        .trains
        .iter()
        .filter(|t| t.optional && !solution.routes.contains_key(&t.id))
        .filter_map(|t| t.penalty.clone())
        .sum();
    let total = &expansion + &penalty;
    let cb = &solution.cost_breakdown;
    if solution.objective_value != total {
        ck.push(Objective, format!("objective_value is {} but the costs sum to {total}", solution.objective_value));
    }
    if cb.expansion_cost_total != expansion {
        ck.push(Objective, format!("expansion_cost_total is {} but the expanded arcs cost {expansion}", cb.expansion_cost_total));
    }
    if cb.penalty_total != penalty {
        ck.push(Objective, format!("penalty_total is {} but the dropped trains cost {penalty}", cb.penalty_total));
    }

    let mut out = ck.out;
    out.sort();
    out.dedup();
    out
}

/// Violation counts per family, for reporting.
pub fn summarize(violations: &[Violation]) -> BTreeMap<ViolationFamily, usize> {
    let mut m = BTreeMap::new();
    for v in violations {
        *m.entry(v.family).or_insert(0) += 1;
    }
    m
}
