use std::collections::HashMap;

use super::{effective_scenarios, validate_instance, Instance, Time, ValidationReport};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioIdx {
    pub id: String,
    /// Train indices in declaration order, duplicates removed.
    pub trains: Vec<usize>,
}

/// Dense integer lookups over a validated instance.
#[derive(Debug, Clone)]
pub struct InstanceIndex {
    node_of: HashMap<String, usize>,
    arc_of: HashMap<(usize, usize), usize>,
    train_of: HashMap<String, usize>,
    headway: HashMap<(usize, usize, usize), Time>,
    headway_default: Time,
    /// `(from, to)` node indices per arc.
    pub arc_ends: Vec<(usize, usize)>,
    /// `(origin, destination)` node indices per train.
    pub train_ends: Vec<(usize, usize)>,
    pub out_arcs: Vec<Vec<usize>>,
    pub in_arcs: Vec<Vec<usize>>,
    pub scenarios: Vec<ScenarioIdx>,
}

impl InstanceIndex {
    pub fn new(inst: &Instance) -> Result<Self, ValidationReport> {
        let report = validate_instance(inst);
        if !report.is_ok() {
            return Err(report);
        }
        let net = &inst.network;
        let node_of: HashMap<String, usize> =
            net.nodes.iter().enumerate().map(|(i, n)| (n.id.clone(), i)).collect();
        let train_of: HashMap<String, usize> =
            inst.trains.iter().enumerate().map(|(i, t)| (t.id.clone(), i)).collect();
        let arc_ends: Vec<(usize, usize)> =
            net.arcs.iter().map(|a| (node_of[&a.from], node_of[&a.to])).collect();
        let arc_of = arc_ends.iter().enumerate().map(|(i, &e)| (e, i)).collect();
        let mut out_arcs = vec![Vec::new(); net.nodes.len()];
        let mut in_arcs = vec![Vec::new(); net.nodes.len()];
        for (i, &(f, t)) in arc_ends.iter().enumerate() {
            out_arcs[f].push(i);
            in_arcs[t].push(i);
        }
        let train_ends = inst
            .trains
            .iter()
            .map(|t| (node_of[&t.origin], node_of[&t.destination]))
            .collect();
        let mut index = InstanceIndex {
            node_of,
            arc_of,
            train_of,
            headway: HashMap::new(),
            headway_default: net.headways.default,
            arc_ends,
            train_ends,
            out_arcs,
            in_arcs,
            scenarios: Vec::new(),
        };
        for h in &net.headways.entries {
            let arc = index.arc(&h.from, &h.to).expect("validated");
            let key = (arc, index.train_of[&h.v1], index.train_of[&h.v2]);
            index.headway.insert(key, h.minimum_headway);
        }
        index.scenarios = effective_scenarios(inst)
            .into_iter()
            .map(|s| {
                let mut trains: Vec<usize> = Vec::new();
                for id in &s.train_ids {
                    let t = index.train_of[id];
                    if !trains.contains(&t) {
                        trains.push(t);
                    }
                }
                ScenarioIdx { id: s.id, trains }
            })
            .collect();
        Ok(index)
    }

    pub fn node(&self, id: &str) -> Option<usize> {
        self.node_of.get(id).copied()
    }

    pub fn train(&self, id: &str) -> Option<usize> {
        self.train_of.get(id).copied()
    }

    pub fn arc(&self, from: &str, to: &str) -> Option<usize> {
        let f = self.node(from)?;
        let t = self.node(to)?;
        self.arc_of.get(&(f, t)).copied()
    }

    pub fn arc_between(&self, from: usize, to: usize) -> Option<usize> {
        self.arc_of.get(&(from, to)).copied()
    }

    /// Minimum headway on `arc` for `leader` followed by `follower`.
    pub fn headway(&self, arc: usize, leader: usize, follower: usize) -> Time {
        self.headway.get(&(arc, leader, follower)).copied().unwrap_or(self.headway_default)
    }
}
