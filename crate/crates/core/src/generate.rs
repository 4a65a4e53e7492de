//! Seeded random instance families for differential testing.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::model::{
    Arc, HeadwayEntry, HeadwayTable, Instance, Network, Node, Scenario, Time, TrainRequest,
};
use crate::rational::{int, ratio, Rational};

fn cost(rng: &mut ChaCha8Rng) -> Rational {
    match rng.gen_range(0..6) {
        0 => int(0),
        1 => ratio(rng.gen_range(1..6), 2),
        2 => ratio(rng.gen_range(1..10), 3),
        _ => int(rng.gen_range(1..6)),
    }
}

fn arc(rng: &mut ChaCha8Rng, from: &str, to: &str, max_tt: Time) -> Arc {
    Arc::new(from, to, rng.gen_range(1..=max_tt), rng.gen_range(0..=2), rng.gen_range(0..=2), cost(rng))
}

/// Splits trains over two or three scenarios, every train in at least one.
fn scenarios(rng: &mut ChaCha8Rng, trains: &[TrainRequest]) -> Vec<Scenario> {
    let k = rng.gen_range(2..=3usize);
    let mut out: Vec<Scenario> = (0..k).map(|i| Scenario { id: format!("S{}", i + 1), train_ids: vec![] }).collect();
    for t in trains {
        let home = rng.gen_range(0..k);
        for (i, s) in out.iter_mut().enumerate() {
            if i == home || rng.gen_bool(0.3) {
                s.train_ids.push(t.id.clone());
            }
        }
    }
    out.retain(|s| !s.train_ids.is_empty());
    out
}

/// A random out-tree on at most 10 nodes with up to 6 trains whose latest
/// arrival equals their departure plus the tree path length. Some trains
/// have VIA nodes, a few ask for impossible trips, and some instances split
/// trains over scenarios.
pub fn gen_arborescence(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=10usize);
    let names: Vec<String> = (0..n).map(|i| format!("n{i}")).collect();
    let mut parent = vec![usize::MAX; n];
    let mut arcs = Vec::with_capacity(n - 1);
    for i in 1..n {
        parent[i] = rng.gen_range(0..i);
        let capacity = rng.gen_range(0..=2);
        let extra = rng.gen_range(u32::from(capacity == 0)..=3);
        let tt = rng.gen_range(1..=2);
        arcs.push(Arc::new(&names[parent[i]], &names[i], tt, capacity, extra, cost(&mut rng)));
    }
    let tt = |arcs: &[Arc], i: usize| arcs[i - 1].travel_time;
    let mut depth: Vec<Time> = vec![0; n];
    for i in 1..n {
        depth[i] = depth[parent[i]] + tt(&arcs, i);
    }
    let horizon: Time = (depth.iter().copied().max().unwrap_or(0) + rng.gen_range(0..=3)).max(3);
    let ancestors = |mut w: usize| {
        let mut up = vec![w];
        while w != 0 {
            w = parent[w];
            up.push(w);
        }
        up
    };

    let count = rng.gen_range(1..=6usize);
    let mut trains = Vec::with_capacity(count);
    for i in 0..count {
        let dest = rng.gen_range(1..n);
        let up = ancestors(dest);
        let id = format!("T{}", i + 1);
        if rng.gen_bool(0.02) && n > 2 {
            // Origin off the root path: no route at all.
            let origin = (0..n).find(|o| !up.contains(o)).unwrap_or(dest);
            if origin != dest {
                trains.push(TrainRequest::new(id, &names[origin], &names[dest], 0, 2));
                continue;
            }
        }
        let k = rng.gen_range(1..up.len());
        let origin = up[k];
        let length: Time = up[..k].iter().map(|&w| tt(&arcs, w)).sum();
        let slack = horizon.saturating_sub(length);
        let depart = if rng.gen_bool(0.03) { slack + 1 } else { rng.gen_range(0..=slack) };
        let mut t = TrainRequest::new(id, &names[origin], &names[dest], depart, depart + length);
        if k >= 2 && rng.gen_bool(0.25) {
            t.via_nodes.push(names[up[rng.gen_range(1..k)]].clone());
        } else if rng.gen_bool(0.03) {
            let other = rng.gen_range(0..n);
            if other != origin && other != dest {
                t.via_nodes.push(names[other].clone());
            }
        }
        trains.push(t);
    }
    let scenarios = if rng.gen_bool(0.3) { scenarios(&mut rng, &trains) } else { vec![] };
    Instance {
        network: Network { nodes: names.iter().map(Node::new).collect(), arcs, headways: HeadwayTable::default() },
        horizon,
        capacity_window: rng.gen_range(1..=3),
        trains,
        connections: vec![],
        scenarios,
        dwell: rng.gen_bool(0.5),
    }
}

struct SpBuilder {
    rng: ChaCha8Rng,
    nodes: Vec<String>,
    arcs: Vec<Arc>,
}

impl SpBuilder {
    fn node(&mut self) -> String {
        let id = format!("n{}", self.nodes.len());
        self.nodes.push(id.clone());
        id
    }

    /// Adds a series-parallel network of exactly `m` arcs between `s` and `t`.
    /// A parallel composition never puts two bare arcs side by side, so no
    /// multi-arcs arise.
    fn grow(&mut self, s: &str, t: &str, m: usize) {
        if m == 1 {
            let rng = &mut self.rng;
            let a = Arc::new(s, t, rng.gen_range(1..=3), rng.gen_range(0..=3), rng.gen_range(2..=4), cost(rng));
            self.arcs.push(a);
            return;
        }
        let parallel = m >= 3 && self.rng.gen_bool(0.5);
        if parallel {
            let left = self.rng.gen_range(1..=m - 2);
            self.grow(s, t, left);
            // The right branch has at least two arcs, so it has an inner node.
            let mid = self.node();
            let r1 = self.rng.gen_range(1..m - left);
            self.grow(s, &mid, r1);
            self.grow(&mid, t, m - left - r1);
        } else {
            let mid = self.node();
            let left = self.rng.gen_range(1..m);
            self.grow(s, &mid, left);
            self.grow(&mid, t, m - left);
        }
    }
}

/// A random two-terminal series-parallel network with at most 12 arcs and up
/// to 6 trains sharing source, sink, departure and latest arrival. The
/// capacity window is the horizon and dwelling is off.
pub fn gen_series_parallel(seed: u64) -> Instance {
    let rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = SpBuilder { rng, nodes: Vec::new(), arcs: Vec::new() };
    let (s, t) = (b.node(), b.node());
    let m = b.rng.gen_range(1..=12usize);
    b.grow(&s, &t, m);
    let mut rng = b.rng;
    // Shortest source-sink travel time, Bellman-Ford style.
    let mut dist = std::collections::HashMap::from([(s.clone(), 0 as Time)]);
    for _ in 0..b.nodes.len() {
        for a in &b.arcs {
            if let Some(&d) = dist.get(&a.from) {
                let e = dist.entry(a.to.clone()).or_insert(Time::MAX);
                *e = (*e).min(d + a.travel_time);
            }
        }
    }
    let depart: Time = rng.gen_range(0..=1);
    let budget: Time = dist[&t] + rng.gen_range(0..=3) - Time::from(rng.gen_bool(0.1));
    let horizon = depart + budget + rng.gen_range(0..=1);
    let latest = (depart + budget).min(horizon);
    let trains = (0..rng.gen_range(1..=6usize))
        .map(|i| TrainRequest::new(format!("T{}", i + 1), &s, &t, depart, latest))
        .collect();
    Instance {
        network: Network { nodes: b.nodes.iter().map(Node::new).collect(), arcs: b.arcs, headways: HeadwayTable::default() },
        horizon,
        capacity_window: horizon,
        trains,
        connections: vec![],
        scenarios: vec![],
        dwell: false,
    }
}

/// Tiny instances exercising every constraint family: a handful of nodes,
/// horizons up to 3, optional trains, headways, connections, VIA nodes and
/// scenarios. Most of them build to a dozen binaries or fewer.
pub fn gen_small(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=4usize);
    let names: Vec<String> = (0..n).map(|i| format!("n{i}")).collect();
    let mut pairs: Vec<(usize, usize)> =
        (0..n).flat_map(|a| (0..n).filter(move |&b| b != a).map(move |b| (a, b))).collect();
    pairs.shuffle(&mut rng);
    let m = rng.gen_range(1..=pairs.len().min(4));
    let arcs: Vec<Arc> = pairs[..m].iter().map(|&(a, b)| arc(&mut rng, &names[a], &names[b], 2)).collect();
    let horizon: Time = rng.gen_range(1..=3);
    let count = rng.gen_range(1..=3usize);
    let mut trains: Vec<TrainRequest> = Vec::with_capacity(count);
    for i in 0..count {
        let &(o, d) = pairs[..m].choose(&mut rng).expect("at least one arc");
        let (o, d) = if rng.gen_bool(0.2) { (d, o) } else { (o, d) };
        let dep = rng.gen_range(0..horizon);
        let mut t = TrainRequest::new(format!("T{}", i + 1), &names[o], &names[d], dep, rng.gen_range(dep..=horizon));
        if rng.gen_bool(0.3) {
            t = t.optional_with_penalty(cost(&mut rng));
        } else if n > 2 && rng.gen_bool(0.15) {
            let via = (0..n).find(|&x| x != o && x != d).expect("third node");
            t.via_nodes.push(names[via].clone());
        }
        trains.push(t);
    }
    let mut headways = HeadwayTable { entries: vec![], default: rng.gen_range(0..=2) };
    if count >= 2 && rng.gen_bool(0.3) {
        let a = &arcs[0];
        headways.entries.push(HeadwayEntry {
            from: a.from.clone(),
            to: a.to.clone(),
            v1: trains[0].id.clone(),
            v2: trains[1].id.clone(),
            minimum_headway: rng.gen_range(1..=3),
        });
    }
    let mut connections = vec![];
    if count >= 2 && rng.gen_bool(0.2) && !trains[0].optional && !trains[1].optional {
        let (f, c) = (&trains[0], &trains[1]);
        if f.destination != c.destination && f.destination == c.origin {
            connections.push(crate::model::ConnectionRequirement {
                station: f.destination.clone(),
                feeder: f.id.clone(),
                connecting: c.id.clone(),
            });
        } else if c.origin != f.origin && c.origin != c.destination {
            connections.push(crate::model::ConnectionRequirement {
                station: c.origin.clone(),
                feeder: f.id.clone(),
                connecting: c.id.clone(),
            });
        }
    }
    let scenarios = if count >= 2 && rng.gen_bool(0.3) { scenarios(&mut rng, &trains) } else { vec![] };
    Instance {
        network: Network { nodes: names.iter().map(Node::new).collect(), arcs, headways },
        horizon,
        capacity_window: rng.gen_range(1..=horizon + 1),
        trains,
        connections,
        scenarios,
        dwell: rng.gen_bool(0.5),
    }
}
