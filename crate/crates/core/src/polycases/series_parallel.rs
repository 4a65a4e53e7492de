use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::ops::Add;

use num_traits::Zero;

use super::{PolyError, PolyOutcome};
use crate::model::{
    effective_scenarios, Arc, CostBreakdown, Instance, InstanceIndex, Network, RoutedStep, Solution, Time,
};
use crate::rational::Rational;

/// A cost or `+inf`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExtCost {
    Finite(Rational),
    Infinite,
}

impl ExtCost {
    pub fn zero() -> Self {
        ExtCost::Finite(Rational::zero())
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, ExtCost::Finite(_))
    }
}

impl Add for &ExtCost {
    type Output = ExtCost;

    fn add(self, rhs: &ExtCost) -> ExtCost {
        match (self, rhs) {
            (ExtCost::Finite(a), ExtCost::Finite(b)) => ExtCost::Finite(a + b),
            _ => ExtCost::Infinite,
        }
    }
}

impl fmt::Display for ExtCost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtCost::Finite(c) => write!(f, "{c}"),
            ExtCost::Infinite => f.write_str("inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SpKind {
    /// Index into `Network::arcs`.
    Leaf(usize),
    Series(Box<SpTree>, Box<SpTree>),
    Parallel(Box<SpTree>, Box<SpTree>),
}

/// Decomposition tree of a two-terminal series-parallel network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpTree {
    pub source: String,
    pub sink: String,
    pub kind: SpKind,
}

impl SpTree {
    pub fn leaves(&self) -> Vec<usize> {
        match &self.kind {
            SpKind::Leaf(a) => vec![*a],
            SpKind::Series(l, r) | SpKind::Parallel(l, r) => {
                let mut out = l.leaves();
                out.extend(r.leaves());
                out
            }
        }
    }
}

/// Decomposes `network` into series and parallel compositions between its
/// unique source and unique sink, or returns `None`.
///
/// Works by reduction: repeatedly merge two edges with equal endpoints, or
/// splice out an inner node with one edge in and one edge out. The network
/// is series-parallel exactly when a single source-sink edge remains.
pub fn sp_decompose(network: &Network) -> Option<SpTree> {
    let n = network.nodes.len();
    let pos: HashMap<&str, usize> = network.nodes.iter().enumerate().map(|(i, x)| (x.id.as_str(), i)).collect();
    let mut indeg = vec![0usize; n];
    let mut outdeg = vec![0usize; n];
    for a in &network.arcs {
        outdeg[*pos.get(a.from.as_str())?] += 1;
        indeg[*pos.get(a.to.as_str())?] += 1;
    }
    let sources: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
    let sinks: Vec<usize> = (0..n).filter(|&i| outdeg[i] == 0).collect();
    if sources.len() != 1 || sinks.len() != 1 || sources[0] == sinks[0] {
        return None;
    }
    let (s, t) = (sources[0], sinks[0]);
    let name = |i: usize| network.nodes[i].id.clone();

    let mut edges: Vec<Option<(usize, usize, SpTree)>> = network
        .arcs
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let (f, to) = (pos[a.from.as_str()], pos[a.to.as_str()]);
            Some((f, to, SpTree { source: a.from.clone(), sink: a.to.clone(), kind: SpKind::Leaf(i) }))
        })
        .collect();
    loop {
        let live: Vec<usize> = (0..edges.len()).filter(|&i| edges[i].is_some()).collect();
        if live.len() == 1 {
            let (f, to, tree) = edges[live[0]].take().expect("live");
            return (f == s && to == t).then_some(tree);
        }
        let mut changed = false;
        // Parallel reduction.
        let mut by_ends: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for &i in &live {
            let (f, to, _) = edges[i].as_ref().expect("live");
            let key = (*f, *to);
            if let Some(&j) = by_ends.get(&key) {
                let (_, _, b) = edges[i].take().expect("live");
                let (f, to, a) = edges[j].take().expect("live");
                let tree = SpTree { source: name(f), sink: name(to), kind: SpKind::Parallel(Box::new(a), Box::new(b)) };
                edges[j] = Some((f, to, tree));
                changed = true;
                break;
            }
            by_ends.insert(key, i);
        }
        if changed {
            continue;
        }
        // Series reduction at the first inner node of degree (1, 1).
        let mut ins = vec![Vec::new(); n];
        let mut outs = vec![Vec::new(); n];
        for &i in &live {
            let (f, to, _) = edges[i].as_ref().expect("live");
            outs[*f].push(i);
            ins[*to].push(i);
        }
        for w in 0..n {
            if w == s || w == t || ins[w].len() != 1 || outs[w].len() != 1 {
                continue;
            }
            let (i, j) = (ins[w][0], outs[w][0]);
            let (f, _, a) = edges[i].take().expect("live");
            let (_, to, b) = edges[j].take().expect("live");
            let tree = SpTree { source: name(f), sink: name(to), kind: SpKind::Series(Box::new(a), Box::new(b)) };
            edges[i.min(j)] = Some((f, to, tree));
            changed = true;
            break;
        }
        if !changed {
            return None;
        }
    }
}

/// The arcs of the network the tree evaluates to, as `(from, to, arc)`.
pub fn recompose(tree: &SpTree, network: &Network) -> Vec<(String, String, usize)> {
    match &tree.kind {
        SpKind::Leaf(a) => vec![(network.arcs[*a].from.clone(), network.arcs[*a].to.clone(), *a)],
        SpKind::Series(l, r) => {
            assert_eq!(l.sink, r.source, "series children must meet");
            assert_eq!((l.source.as_str(), r.sink.as_str()), (tree.source.as_str(), tree.sink.as_str()));
            let mut out = recompose(l, network);
            out.extend(recompose(r, network));
            out
        }
        SpKind::Parallel(l, r) => {
            assert_eq!((l.source.as_str(), l.sink.as_str()), (r.source.as_str(), r.sink.as_str()));
            let mut out = recompose(l, network);
            out.extend(recompose(r, network));
            out
        }
    }
}

/// Cost of routing `v` trains over a single arc: free up to the capacity,
/// the expansion cost up to capacity plus expansion, infeasible beyond.
pub fn sp_cost_base(arc: &Arc, v: u32) -> ExtCost {
    let (c, extra) = (u64::from(arc.capacity), u64::from(arc.expandable_capacity));
    if u64::from(v) <= c {
        ExtCost::zero()
    } else if u64::from(v) <= c + extra {
        ExtCost::Finite(arc.expansion_cost.clone())
    } else {
        ExtCost::Infinite
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct TableNode {
    kind: TableKind,
    /// `cost[v][tt]`.
    cost: Vec<Vec<ExtCost>>,
    /// Split `tt1` for series nodes, `v1` for parallel nodes.
    witness: Vec<Vec<Option<u32>>>,
    /// Path lengths through the subnetwork, capped at the budget.
    lengths: BTreeSet<Time>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TableKind {
    Leaf(usize),
    Series(usize, usize),
    Parallel(usize, usize),
}

/// Tables `K(v, tt)` for every node of a decomposition tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostTable {
    nodes: Vec<TableNode>,
    root: usize,
    pub trains: u32,
    pub budget: Time,
    /// Cell evaluations performed, for complexity checks.
    pub operations: u64,
}

impl CostTable {
    pub fn root_cost(&self) -> &ExtCost {
        &self.nodes[self.root].cost[self.trains as usize][self.budget as usize]
    }

    /// `K(v, tt)` at every tree node, in post-order.
    pub fn node_tables(&self) -> impl Iterator<Item = &Vec<Vec<ExtCost>>> {
        self.nodes.iter().map(|n| &n.cost)
    }

    /// Whether the series recurrence is guaranteed to match the true
    /// optimum at the root. A series node with budget `tt` is safe when all
    /// feasible combinations of a left and a right path fit under a single
    /// split: with `a*` the longest left path that still leaves room for the
    /// shortest right one and `b*` symmetrically, that needs
    /// `a* + b* <= tt`.
    pub fn is_exact(&self) -> Result<(), String> {
        self.exact_at(self.root, self.budget)
    }

    fn exact_at(&self, node: usize, tt: Time) -> Result<(), String> {
        match self.nodes[node].kind {
            TableKind::Leaf(_) => Ok(()),
            TableKind::Parallel(l, r) => {
                self.exact_at(l, tt)?;
                self.exact_at(r, tt)
            }
            TableKind::Series(l, r) => {
                let (l1, l2) = (&self.nodes[l].lengths, &self.nodes[r].lengths);
                let (Some(&min1), Some(&min2)) = (l1.first(), l2.first()) else {
                    return Ok(());
                };
                if min1 + min2 > tt {
                    return Ok(());
                }
                let a = *l1.range(..=tt - min2).next_back().expect("min1 fits");
                let b = *l2.range(..=tt - min1).next_back().expect("min2 fits");
                if a + b > tt {
                    return Err(format!(
                        "series split at budget {tt}: left paths up to {a} and right paths up to {b} cannot share one split"
                    ));
                }
                self.exact_at(l, a)?;
                self.exact_at(r, tt - a)
            }
        }
    }

    /// Loads per leaf arc and paths per train for `v` trains at budget `tt`,
    /// following the witnesses.
    fn paths(&self, node: usize, v: u32, tt: Time, out: &mut Vec<Vec<usize>>) {
        if v == 0 {
            return;
        }
        let w = self.nodes[node].witness[v as usize][tt as usize];
        match self.nodes[node].kind {
            TableKind::Leaf(a) => out.extend((0..v).map(|_| vec![a])),
            TableKind::Series(l, r) => {
                let tt1 = w.expect("finite series cell has a split");
                let (mut left, mut right) = (Vec::new(), Vec::new());
                self.paths(l, v, tt1, &mut left);
                self.paths(r, v, tt - tt1, &mut right);
                out.extend(left.into_iter().zip(right).map(|(mut p, q)| {
                    p.extend(q);
                    p
                }));
            }
            TableKind::Parallel(l, r) => {
                let v1 = w.expect("finite parallel cell has a split");
                self.paths(l, v1, tt, out);
                self.paths(r, v - v1, tt, out);
            }
        }
    }
}

/// Bottom-up tables for `trains` interchangeable trains and travel budgets
/// `0..=budget`.
pub fn sp_cost_table(tree: &SpTree, network: &Network, trains: u32, budget: Time) -> CostTable {
    let mut table = CostTable { nodes: Vec::new(), root: 0, trains, budget, operations: 0 };
    table.root = fill(tree, network, &mut table);
    table
}

fn fill(tree: &SpTree, network: &Network, table: &mut CostTable) -> usize {
    let (vmax, tmax) = (table.trains as usize, table.budget as usize);
    let mut cost = vec![vec![ExtCost::Infinite; tmax + 1]; vmax + 1];
    let mut witness = vec![vec![None; tmax + 1]; vmax + 1];
    let cap = |set: BTreeSet<Time>| set.into_iter().filter(|&l| l as usize <= tmax).collect::<BTreeSet<_>>();
    let (kind, lengths) = match &tree.kind {
        SpKind::Leaf(a) => {
            let arc = &network.arcs[*a];
            for v in 0..=vmax {
                for tt in 0..=tmax {
                    table.operations += 1;
                    cost[v][tt] = if v == 0 {
                        ExtCost::zero()
                    } else if (tt as Time) < arc.travel_time {
                        ExtCost::Infinite
                    } else {
                        sp_cost_base(arc, v as u32)
                    };
                }
            }
            (TableKind::Leaf(*a), cap([arc.travel_time].into_iter().collect()))
        }
        SpKind::Series(l, r) => {
            let (li, ri) = (fill(l, network, table), fill(r, network, table));
            for v in 0..=vmax {
                for tt in 0..=tmax {
                    if v == 0 {
                        cost[v][tt] = ExtCost::zero();
                        continue;
                    }
                    for tt1 in 1..tt {
                        table.operations += 1;
                        let c = &table.nodes[li].cost[v][tt1] + &table.nodes[ri].cost[v][tt - tt1];
                        if c < cost[v][tt] {
                            cost[v][tt] = c;
                            witness[v][tt] = Some(tt1 as u32);
                        }
                    }
                }
            }
            let (a, b) = (&table.nodes[li].lengths, &table.nodes[ri].lengths);
            let sums = a.iter().flat_map(|x| b.iter().map(move |y| x + y)).collect();
            (TableKind::Series(li, ri), cap(sums))
        }
        SpKind::Parallel(l, r) => {
            let (li, ri) = (fill(l, network, table), fill(r, network, table));
            for v in 0..=vmax {
                for tt in 0..=tmax {
                    for v1 in 0..=v {
                        table.operations += 1;
                        let c = &table.nodes[li].cost[v1][tt] + &table.nodes[ri].cost[v - v1][tt];
                        if c < cost[v][tt] {
                            cost[v][tt] = c;
                            witness[v][tt] = Some(v1 as u32);
                        }
                    }
                }
            }
            let union = table.nodes[li].lengths.union(&table.nodes[ri].lengths).copied().collect();
            (TableKind::Parallel(li, ri), union)
        }
    };
    table.nodes.push(TableNode { kind, cost, witness, lengths });
    table.nodes.len() - 1
}

/// Solves an instance whose trains all run from the network's source to its
/// sink with one common departure and arrival, under aggregate capacity.
pub fn solve_series_parallel(instance: &Instance) -> Result<PolyOutcome, PolyError> {
    let idx = InstanceIndex::new(instance).map_err(PolyError::Invalid)?;
    let net = &instance.network;
    let tree = sp_decompose(net).ok_or(PolyError::NotSeriesParallel)?;
    if !net.headways.is_trivial() {
        return Err(PolyError::Headways);
    }
    if instance.trains.iter().any(|t| t.optional) {
        return Err(PolyError::OptionalTrains);
    }
    if !instance.connections.is_empty() {
        return Err(PolyError::Connections);
    }
    if instance.trains.iter().any(|t| !t.via_nodes.is_empty()) {
        return Err(PolyError::ViaNodes);
    }
    if instance.capacity_window < instance.horizon {
        return Err(PolyError::WindowTooShort);
    }
    let scenarios = effective_scenarios(instance);
    if scenarios.len() != 1 || idx.scenarios[0].trains.len() != instance.trains.len() {
        return Err(PolyError::Scenarios);
    }
    let Some(first) = instance.trains.first() else {
        let mut empty = Solution {
            expanded_arcs: BTreeSet::new(),
            routes: BTreeMap::new(),
            objective_value: Rational::zero(),
            cost_breakdown: CostBreakdown { expansion_cost_total: Rational::zero(), penalty_total: Rational::zero() },
        };
        empty.recompute_costs(instance);
        return Ok(PolyOutcome::Optimal(empty));
    };
    for t in &instance.trains {
        if t.origin != tree.source || t.destination != tree.sink {
            return Err(PolyError::NotUniform(format!("train {} does not run {} to {}", t.id, tree.source, tree.sink)));
        }
        if (t.earliest_departure, t.latest_arrival) != (first.earliest_departure, first.latest_arrival) {
            return Err(PolyError::NotUniform(format!("train {} has a different time window", t.id)));
        }
    }
    let depart = first.earliest_departure;
    let end = first.latest_arrival.min(instance.horizon);
    if end < depart {
        return Ok(PolyOutcome::Infeasible { reason: "no time between departure and arrival".into() });
    }
    let budget = end - depart;
    let trains = instance.trains.len() as u32;
    let table = sp_cost_table(&tree, net, trains, budget);
    table.is_exact().map_err(PolyError::NotExact)?;
    let ExtCost::Finite(_) = table.root_cost() else {
        return Ok(PolyOutcome::Infeasible { reason: "no expansion carries every train in time".into() });
    };

    let mut paths = Vec::new();
    table.paths(table.root, trains, budget, &mut paths);
    let mut load = vec![0u32; net.arcs.len()];
    for p in &paths {
        for &a in p {
            load[a] += 1;
        }
    }
    let expanded_arcs = net
        .arcs
        .iter()
        .zip(&load)
        .filter(|(a, &l)| l > a.capacity)
        .map(|(a, _)| (a.from.clone(), a.to.clone()))
        .collect();
    let mut ids: Vec<&String> = instance.trains.iter().map(|t| &t.id).collect();
    ids.sort();
    let mut routes = BTreeMap::new();
    for (id, path) in ids.into_iter().zip(paths) {
        let mut t = depart;
        let steps = path
            .iter()
            .map(|&a| {
                let arc = &net.arcs[a];
                let step = RoutedStep { train: id.clone(), from: arc.from.clone(), to: arc.to.clone(), depart: t };
                t += arc.travel_time;
                step
            })
            .collect();
        routes.insert(id.clone(), steps);
    }
    let mut solution = Solution {
        expanded_arcs,
        routes,
        objective_value: Rational::zero(),
        cost_breakdown: CostBreakdown { expansion_cost_total: Rational::zero(), penalty_total: Rational::zero() },
    };
    solution.recompute_costs(instance);
    debug_assert_eq!(&ExtCost::Finite(solution.objective_value.clone()), table.root_cost());
    Ok(PolyOutcome::Optimal(solution))
}
