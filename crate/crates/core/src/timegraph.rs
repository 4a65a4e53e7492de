//! Time-expanded network.
//!
//! Every station gets one copy per time step `0..=horizon`. A line with
//! travel time `tt` becomes one movement arc `i_t -> j_{t+tt}` for each
//! departure time that arrives within the horizon, and every station gets a
//! dwell arc `i_t -> i_{t+1}` per step so that trains can wait.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::model::{Network, Time};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TimeNode {
    /// Index into `Network::nodes`.
    pub node: usize,
    pub t: Time,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TimeArcKind {
    /// Travel along `Network::arcs[arc]`.
    Movement { arc: usize },
    Dwell,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TimeArc {
    pub from: TimeNode,
    pub to: TimeNode,
    pub kind: TimeArcKind,
}

impl TimeArc {
    pub fn is_movement(&self) -> bool {
        matches!(self.kind, TimeArcKind::Movement { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimeExpandedGraph {
    pub horizon: Time,
    node_ids: Vec<String>,
    node_of: HashMap<String, usize>,
    /// Node-major: index `node * (horizon + 1) + t`.
    pub time_nodes: Vec<TimeNode>,
    /// Movement arcs first (by arc, then departure), then dwell arcs (by
    /// node, then time).
    pub time_arcs: Vec<TimeArc>,
    out_adj: Vec<Vec<usize>>,
    in_adj: Vec<Vec<usize>>,
}

impl TimeExpandedGraph {
    pub fn time_node_index(&self, tn: TimeNode) -> usize {
        tn.node * (self.horizon as usize + 1) + tn.t as usize
    }

    /// Time arcs leaving `tn`, as indices into `time_arcs`.
    pub fn out_arcs(&self, tn: TimeNode) -> &[usize] {
        &self.out_adj[self.time_node_index(tn)]
    }

    pub fn in_arcs(&self, tn: TimeNode) -> &[usize] {
        &self.in_adj[self.time_node_index(tn)]
    }

    pub fn movement_count(&self) -> usize {
        self.time_arcs.iter().filter(|a| a.is_movement()).count()
    }

    pub fn dwell_count(&self) -> usize {
        self.time_arcs.len() - self.movement_count()
    }

    /// Line-oriented dump, one `i t -> j t'` line per time arc.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for a in &self.time_arcs {
            let _ = writeln!(
                out,
                "{} {} -> {} {}",
                self.node_ids[a.from.node], a.from.t, self.node_ids[a.to.node], a.to.t
            );
        }
        out
    }
}

/// Builds the time expansion of `network` over `0..=horizon`.
///
/// Lines whose travel time exceeds the horizon simply contribute no movement
/// arcs.
pub fn expand(network: &Network, horizon: Time) -> TimeExpandedGraph {
    let node_ids: Vec<String> = network.nodes.iter().map(|n| n.id.clone()).collect();
    let node_of: HashMap<String, usize> =
        node_ids.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect();
    let steps = horizon as usize + 1;
    let time_nodes: Vec<TimeNode> = (0..node_ids.len())
        .flat_map(|node| (0..=horizon).map(move |t| TimeNode { node, t }))
        .collect();

    let mut time_arcs = Vec::new();
    for (arc, a) in network.arcs.iter().enumerate() {
        let (from, to) = (node_of[&a.from], node_of[&a.to]);
        if a.travel_time > horizon {
            continue;
        }
        for t in 0..=horizon - a.travel_time {
            time_arcs.push(TimeArc {
                from: TimeNode { node: from, t },
                to: TimeNode { node: to, t: t + a.travel_time },
                kind: TimeArcKind::Movement { arc },
            });
        }
    }
    for node in 0..node_ids.len() {
        for t in 0..horizon {
            time_arcs.push(TimeArc {
                from: TimeNode { node, t },
                to: TimeNode { node, t: t + 1 },
                kind: TimeArcKind::Dwell,
            });
        }
    }

    let mut out_adj = vec![Vec::new(); time_nodes.len()];
    let mut in_adj = vec![Vec::new(); time_nodes.len()];
    for (i, a) in time_arcs.iter().enumerate() {
        out_adj[a.from.node * steps + a.from.t as usize].push(i);
        in_adj[a.to.node * steps + a.to.t as usize].push(i);
    }
    TimeExpandedGraph { horizon, node_ids, node_of, time_nodes, time_arcs, out_adj, in_adj }
}

/// Whether a movement arc leaves station `i` at time `t` toward `j`.
pub fn adjacency(graph: &TimeExpandedGraph, i: &str, t: Time, j: &str) -> bool {
    let (Some(&i), Some(&j)) = (graph.node_of.get(i), graph.node_of.get(j)) else {
        return false;
    };
    if t > graph.horizon {
        return false;
    }
    graph
        .out_arcs(TimeNode { node: i, t })
        .iter()
        .any(|&k| graph.time_arcs[k].is_movement() && graph.time_arcs[k].to.node == j)
}
