use std::collections::{BTreeMap, BTreeSet};

use super::{PolyError, PolyOutcome};
use crate::milp::{window_len, window_starts};
use crate::model::{CostBreakdown, Instance, InstanceIndex, Network, RoutedStep, Solution, Time};
use crate::rational::Rational;

/// The root, if every arc points away from it along a spanning tree.
pub fn is_arborescence(network: &Network) -> Option<String> {
    let n = network.nodes.len();
    let pos = |id: &str| network.nodes.iter().position(|x| x.id == id);
    let mut indeg = vec![0usize; n];
    let mut children = vec![Vec::new(); n];
    for a in &network.arcs {
        let (f, t) = (pos(&a.from)?, pos(&a.to)?);
        indeg[t] += 1;
        children[f].push(t);
    }
    let mut roots = (0..n).filter(|&i| indeg[i] == 0);
    let root = roots.next()?;
    if roots.next().is_some() || indeg.iter().any(|&d| d > 1) {
        return None;
    }
    // n - 1 arcs with in-degree one everywhere else; reachability from the
    // root rules out detached cycles.
    let mut seen = vec![false; n];
    let mut stack = vec![root];
    seen[root] = true;
    while let Some(u) = stack.pop() {
        for &w in &children[u] {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    seen.iter().all(|&s| s).then(|| network.nodes[root].id.clone())
}

/// Solves an instance on an arborescence with fixed departures.
///
/// Every train runs the unique path from its origin to its destination,
/// leaving at its earliest departure, so arc entry times are determined and
/// the only decision left is which arcs to expand: exactly those whose
/// departure count exceeds the base capacity in some scenario and window.
/// The latest arrival must equal the departure plus the path's travel time.
pub fn solve_arborescence(instance: &Instance) -> Result<PolyOutcome, PolyError> {
    let idx = InstanceIndex::new(instance).map_err(PolyError::Invalid)?;
    if is_arborescence(&instance.network).is_none() {
        return Err(PolyError::NotArborescence);
    }
    if !instance.network.headways.is_trivial() {
        return Err(PolyError::Headways);
    }
    if instance.trains.iter().any(|t| t.optional) {
        return Err(PolyError::OptionalTrains);
    }
    if !instance.connections.is_empty() {
        return Err(PolyError::Connections);
    }
    let net = &instance.network;
    let h = instance.horizon;
    let parent_arc: Vec<Option<usize>> =
        (0..net.nodes.len()).map(|n| idx.in_arcs[n].first().copied()).collect();

    let mut routes = BTreeMap::new();
    let mut departures: Vec<Vec<(usize, Time)>> = Vec::with_capacity(instance.trains.len());
    let mut infeasible: Option<String> = None;
    for (v, train) in instance.trains.iter().enumerate() {
        let (origin, dest) = idx.train_ends[v];
        // Climb from the destination to the origin.
        let mut path = Vec::new();
        let mut at = dest;
        while at != origin {
            match parent_arc[at] {
                Some(a) => {
                    path.push(a);
                    at = idx.arc_ends[a].0;
                }
                None => break,
            }
        }
        if at != origin {
            infeasible.get_or_insert(format!("no path from {} to {}", train.origin, train.destination));
            departures.push(Vec::new());
            continue;
        }
        path.reverse();
        let length: Time = path.iter().map(|&a| net.arcs[a].travel_time).sum();
        let arrival = train.earliest_departure + length;
        if arrival < train.latest_arrival {
            return Err(PolyError::NotFixedDeparture(train.id.clone()));
        }
        if arrival > train.latest_arrival || arrival > h {
            infeasible.get_or_insert(format!("train {} cannot arrive by {}", train.id, train.latest_arrival.min(h)));
        }
        let on_path: BTreeSet<usize> = path.iter().map(|&a| idx.arc_ends[a].0).collect();
        for via in &train.via_nodes {
            if !on_path.contains(&idx.node(via).expect("validated")) {
                infeasible.get_or_insert(format!("train {} does not pass {via}", train.id));
            }
        }
        let mut t = train.earliest_departure;
        let mut legs = Vec::with_capacity(path.len());
        let mut steps = Vec::with_capacity(path.len());
        for &a in &path {
            legs.push((a, t));
            let arc = &net.arcs[a];
            steps.push(RoutedStep { train: train.id.clone(), from: arc.from.clone(), to: arc.to.clone(), depart: t });
            t += arc.travel_time;
        }
        departures.push(legs);
        routes.insert(train.id.clone(), steps);
    }
    if let Some(reason) = infeasible {
        return Ok(PolyOutcome::Infeasible { reason });
    }

    // Departure counts per arc, scenario and window.
    let starts = window_starts(h, instance.capacity_window);
    let wlen = window_len(h, instance.capacity_window);
    let mut expanded = BTreeSet::new();
    for (a, arc) in net.arcs.iter().enumerate() {
        for scenario in &idx.scenarios {
            let times: Vec<Time> = scenario
                .trains
                .iter()
                .flat_map(|&v| departures[v].iter().filter(|(b, _)| *b == a).map(|(_, t)| *t))
                .collect();
            for &t0 in &starts {
                let count = times.iter().filter(|&&t| t >= t0 && t < t0 + wlen).count() as u64;
                if count > u64::from(arc.capacity) + u64::from(arc.expandable_capacity) {
                    return Ok(PolyOutcome::Infeasible {
                        reason: format!("{count} departures on {} in scenario {} from {t0}", arc.key(), scenario.id),
                    });
                }
                if count > u64::from(arc.capacity) {
                    expanded.insert((arc.from.clone(), arc.to.clone()));
                }
            }
        }
    }
    let mut solution = Solution {
        expanded_arcs: expanded,
        routes,
        objective_value: Rational::default(),
        cost_breakdown: CostBreakdown { expansion_cost_total: Rational::default(), penalty_total: Rational::default() },
    };
    solution.recompute_costs(instance);
    Ok(PolyOutcome::Optimal(solution))
}
