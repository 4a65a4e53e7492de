use num_traits::{One, Zero};

use super::{ConstraintSystem, Family, LinearRow, Sense, VarMeaning, Variable};
use crate::model::{Instance, InstanceIndex, Time, ValidationReport};
use crate::rational::{int, Rational};

#[derive(Debug, thiserror::Error)]
pub enum BuildError {
    #[error("invalid instance:\n{0}")]
    Invalid(ValidationReport),
    #[error("optional train `{0}` takes part in a connection or VIA requirement")]
    OptionalRequirement(String),
}

/// The linearized headway row for a leader departing at `t1` and a follower
/// at `t2 > t1`, or `None` when the separation already meets the headway.
///
/// The product form `x1 * (m - (t2 - t1)) * x2 <= 0` becomes
/// `(m - d) * x1 + (m - d) * x2 <= m - d` with `d = t2 - t1`, which rules out
/// exactly the assignment `x1 = x2 = 1` whenever `m > d`.
pub fn headway_row(m: Time, t1: Time, t2: Time, x1: usize, x2: usize) -> Option<LinearRow> {
    assert!(t1 < t2, "headway rows need t1 < t2");
    let slack = i64::from(m) - i64::from(t2 - t1);
    if slack <= 0 {
        return None;
    }
    let k = int(slack);
    Some(LinearRow {
        name: String::new(),
        family: Family::Headway,
        terms: vec![(x1, k.clone()), (x2, k.clone())],
        sense: Sense::Le,
        rhs: k,
    })
}

/// Window starts for the capacity rows. Windows are half-open,
/// `[t0, t0 + window)`, and must end by `horizon + 1`; a window longer than
/// the grid collapses to one window over everything.
pub(crate) fn window_starts(horizon: Time, window: Time) -> Vec<Time> {
    if window > horizon {
        vec![0]
    } else {
        (0..=horizon + 1 - window).collect()
    }
}

pub(crate) fn window_len(horizon: Time, window: Time) -> Time {
    if window > horizon {
        horizon + 1
    } else {
        window
    }
}

struct Layout {
    horizon: Time,
    /// `route[train][arc * (horizon + 1) + depart]`.
    route: Vec<Vec<Option<usize>>>,
    /// `dwell[train][node * (horizon + 1) + t]`.
    dwell: Vec<Vec<Option<usize>>>,
}

impl Layout {
    fn route(&self, train: usize, arc: usize, depart: Time) -> Option<usize> {
        self.route[train][arc * (self.horizon as usize + 1) + depart as usize]
    }

    fn dwell(&self, train: usize, node: usize, t: Time) -> Option<usize> {
        self.dwell[train][node * (self.horizon as usize + 1) + t as usize]
    }
}

struct Rows {
    rows: Vec<LinearRow>,
}

impl Rows {
    fn push(&mut self, name: String, family: Family, terms: Vec<(usize, Rational)>, sense: Sense, rhs: Rational) {
        self.rows.push(LinearRow { name, family, terms, sense, rhs });
    }
}

fn ones(vars: impl IntoIterator<Item = usize>) -> Vec<(usize, Rational)> {
    vars.into_iter().map(|v| (v, Rational::one())).collect()
}

/// Builds the constraint system for `inst`.
pub fn build(inst: &Instance) -> Result<ConstraintSystem, BuildError> {
    let idx = InstanceIndex::new(inst).map_err(BuildError::Invalid)?;
    for c in &inst.connections {
        for id in [&c.feeder, &c.connecting] {
            if inst.train(id).is_some_and(|t| t.optional) {
                return Err(BuildError::OptionalRequirement(id.clone()));
            }
        }
    }
    if let Some(t) = inst.trains.iter().find(|t| t.optional && !t.via_nodes.is_empty()) {
        return Err(BuildError::OptionalRequirement(t.id.clone()));
    }

    let net = &inst.network;
    let h = inst.horizon;
    let steps = h as usize + 1;
    let node_name = |n: usize| net.nodes[n].id.as_str();
    let arc_key: Vec<String> = net.arcs.iter().map(|a| a.key()).collect();
    let tt = |a: usize| net.arcs[a].travel_time;

    // Variables: expansions, then per train by (time, movement before dwell,
    // arc or node).
    let mut variables = Vec::new();
    for (a, key) in arc_key.iter().enumerate() {
        variables.push(Variable { meaning: VarMeaning::Expand { arc: a }, name: format!("b_{key}") });
    }
    let mut layout = Layout {
        horizon: h,
        route: vec![vec![None; net.arcs.len() * steps]; inst.trains.len()],
        dwell: vec![vec![None; net.nodes.len() * steps]; inst.trains.len()],
    };
    for (v, train) in inst.trains.iter().enumerate() {
        let (origin, dest) = idx.train_ends[v];
        for t in 0..=h {
            for a in 0..net.arcs.len() {
                if t + tt(a) <= h {
                    layout.route[v][a * steps + t as usize] = Some(variables.len());
                    variables.push(Variable {
                        meaning: VarMeaning::Route { train: v, arc: a, depart: t },
                        name: format!("x_{}_{}_{t}", train.id, arc_key[a]),
                    });
                }
            }
            if inst.dwell && t < h {
                for n in 0..net.nodes.len() {
                    if n != origin && n != dest {
                        layout.dwell[v][n * steps + t as usize] = Some(variables.len());
                        variables.push(Variable {
                            meaning: VarMeaning::Dwell { train: v, node: n, t },
                            name: format!("w_{}_{}_{t}", train.id, node_name(n)),
                        });
                    }
                }
            }
        }
    }

    let layout = &layout;

    // Movement variables of train `v` leaving node `n`, with departure time.
    let departures = |v: usize, n: usize| -> Vec<(usize, Time)> {
        let mut out = Vec::new();
        for t in 0..=h {
            for &a in &idx.out_arcs[n] {
                if let Some(x) = layout.route(v, a, t) {
                    out.push((x, t));
                }
            }
        }
        out
    };
    // Movement variables of train `v` entering node `n`, with arrival time.
    let arrivals = |v: usize, n: usize| -> Vec<(usize, Time)> {
        let mut out = Vec::new();
        for t in 0..=h {
            for &a in &idx.in_arcs[n] {
                if let Some(x) = layout.route(v, a, t) {
                    out.push((x, t + tt(a)));
                }
            }
        }
        out
    };

    let mut rows = Rows { rows: Vec::new() };
    let explicit_scenarios = !inst.scenarios.is_empty();

    // Capacity.
    let starts = window_starts(h, inst.capacity_window);
    let wlen = window_len(h, inst.capacity_window);
    for (a, arc) in net.arcs.iter().enumerate() {
        for scenario in &idx.scenarios {
            for &t0 in &starts {
                let mut terms = Vec::new();
                for &v in &scenario.trains {
                    for t in t0..(t0 + wlen).min(h + 1) {
                        if let Some(x) = layout.route(v, a, t) {
                            terms.push((x, Rational::one()));
                        }
                    }
                }
                if terms.is_empty() {
                    continue;
                }
                if arc.expandable_capacity > 0 {
                    terms.push((a, -int(i64::from(arc.expandable_capacity))));
                }
                rows.push(
                    format!("cap_{}_{}_{t0}", arc_key[a], scenario.id),
                    Family::Capacity,
                    terms,
                    Sense::Le,
                    int(i64::from(arc.capacity)),
                );
            }
        }
    }

    // Departure.
    for (v, train) in inst.trains.iter().enumerate() {
        let (origin, _) = idx.train_ends[v];
        let deps = departures(v, origin);
        let early: Vec<usize> =
            deps.iter().filter(|(_, t)| *t < train.earliest_departure).map(|(x, _)| *x).collect();
        if !early.is_empty() {
            rows.push(format!("dep_{}_early", train.id), Family::Departure, ones(early), Sense::Eq, Rational::zero());
        }
        if train.optional {
            if !deps.is_empty() {
                let all = deps.iter().map(|(x, _)| *x);
                rows.push(format!("dep_{}", train.id), Family::Departure, ones(all), Sense::Le, Rational::one());
            }
        } else {
            let on_time = deps.iter().filter(|(_, t)| *t >= train.earliest_departure).map(|(x, _)| *x);
            rows.push(format!("dep_{}", train.id), Family::Departure, ones(on_time), Sense::Eq, Rational::one());
        }
    }

    // Arrival.
    for (v, train) in inst.trains.iter().enumerate() {
        let (_, dest) = idx.train_ends[v];
        let arrs = arrivals(v, dest);
        let late: Vec<usize> = arrs.iter().filter(|(_, t)| *t > train.latest_arrival).map(|(x, _)| *x).collect();
        if !late.is_empty() {
            rows.push(format!("arr_{}_late", train.id), Family::Arrival, ones(late), Sense::Eq, Rational::zero());
        }
        if !train.optional {
            let on_time = arrs.iter().filter(|(_, t)| *t <= train.latest_arrival).map(|(x, _)| *x);
            rows.push(format!("arr_{}", train.id), Family::Arrival, ones(on_time), Sense::Ge, Rational::one());
        }
    }

    // Headway, per scenario.
    for a in 0..net.arcs.len() {
        if tt(a) > h {
            continue;
        }
        let last = h - tt(a);
        for scenario in &idx.scenarios {
            for &v1 in &scenario.trains {
                for &v2 in &scenario.trains {
                    if v1 == v2 {
                        continue;
                    }
                    let m = idx.headway(a, v1, v2);
                    for t1 in 0..=last {
                        for t2 in t1 + 1..=last {
                            let (Some(x1), Some(x2)) = (layout.route(v1, a, t1), layout.route(v2, a, t2)) else {
                                continue;
                            };
                            let Some(mut row) = headway_row(m, t1, t2, x1, x2) else {
                                break;
                            };
                            let (n1, n2) = (&inst.trains[v1].id, &inst.trains[v2].id);
                            row.name = if explicit_scenarios {
                                format!("hw_{}_{n1}_{n2}_{t1}_{t2}_{}", arc_key[a], scenario.id)
                            } else {
                                format!("hw_{}_{n1}_{n2}_{t1}_{t2}", arc_key[a])
                            };
                            rows.rows.push(row);
                        }
                    }
                }
            }
        }
    }

    // Flow conservation.
    for (v, train) in inst.trains.iter().enumerate() {
        let (origin, dest) = idx.train_ends[v];
        for n in 0..net.nodes.len() {
            for t in 0..=h {
                let mut terms: Vec<(usize, Rational)> = Vec::new();
                let inflow = || {
                    idx.in_arcs[n]
                        .iter()
                        .filter(move |&&a| tt(a) <= t)
                        .filter_map(move |&a| layout.route(v, a, t - tt(a)))
                };
                let outflow = || idx.out_arcs[n].iter().filter_map(move |&a| layout.route(v, a, t));
                if n == origin {
                    terms.extend(inflow().map(|x| (x, Rational::one())));
                } else if n == dest {
                    terms.extend(outflow().map(|x| (x, Rational::one())));
                } else {
                    terms.extend(inflow().map(|x| (x, Rational::one())));
                    if t > 0 {
                        if let Some(w) = layout.dwell(v, n, t - 1) {
                            terms.push((w, Rational::one()));
                        }
                    }
                    terms.extend(outflow().map(|x| (x, -Rational::one())));
                    if t < h {
                        if let Some(w) = layout.dwell(v, n, t) {
                            terms.push((w, -Rational::one()));
                        }
                    }
                }
                if !terms.is_empty() {
                    rows.push(
                        format!("flow_{}_{}_{t}", train.id, node_name(n)),
                        Family::Flow,
                        terms,
                        Sense::Eq,
                        Rational::zero(),
                    );
                }
            }
        }
    }

    // Connections in cumulative form: by every time t, the feeder has
    // arrived at the station at least as often as the connecting train left.
    for c in &inst.connections {
        let n = idx.node(&c.station).expect("validated");
        let v1 = idx.train(&c.feeder).expect("validated");
        let v2 = idx.train(&c.connecting).expect("validated");
        let arr = arrivals(v1, n);
        let dep = departures(v2, n);
        let prefix = format!("conn_{}_{}_{}", c.station, c.feeder, c.connecting);
        for t in 0..=h {
            let leaving: Vec<usize> = dep.iter().filter(|(_, d)| *d <= t).map(|(x, _)| *x).collect();
            if leaving.is_empty() {
                continue;
            }
            let mut terms: Vec<(usize, Rational)> =
                arr.iter().filter(|(_, a)| *a <= t).map(|(x, _)| (*x, Rational::one())).collect();
            terms.extend(leaving.into_iter().map(|x| (x, -Rational::one())));
            rows.push(format!("{prefix}_{t}"), Family::Connection, terms, Sense::Ge, Rational::zero());
        }
        rows.push(
            format!("{prefix}_dep"),
            Family::Connection,
            ones(dep.iter().map(|(x, _)| *x)),
            Sense::Ge,
            Rational::one(),
        );
    }

    // VIA nodes: the train must leave each of them at some time.
    for (v, train) in inst.trains.iter().enumerate() {
        let mut seen = Vec::new();
        for via in &train.via_nodes {
            if seen.contains(via) {
                continue;
            }
            seen.push(via.clone());
            let n = idx.node(via).expect("validated");
            rows.push(
                format!("via_{}_{via}", train.id),
                Family::Via,
                ones(departures(v, n).into_iter().map(|(x, _)| x)),
                Sense::Ge,
                Rational::one(),
            );
        }
    }

    // Objective: expansion costs plus, for optional trains, k_v * (1 - departed).
    let mut objective: Vec<(usize, Rational)> = net
        .arcs
        .iter()
        .enumerate()
        .filter(|(_, a)| !a.expansion_cost.is_zero())
        .map(|(i, a)| (i, a.expansion_cost.clone()))
        .collect();
    let mut constant = Rational::zero();
    for (v, train) in inst.trains.iter().enumerate() {
        let Some(penalty) = train.penalty.as_ref().filter(|p| train.optional && !p.is_zero()) else {
            continue;
        };
        constant += penalty;
        let (origin, _) = idx.train_ends[v];
        objective.extend(departures(v, origin).into_iter().map(|(x, _)| (x, -penalty.clone())));
    }

    Ok(ConstraintSystem { variables, rows: rows.rows, objective, objective_constant: constant })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::counts::{expected_counts, Counts};
    use crate::model::*;
    use crate::rational::int;

    fn line(h: Time, window: Time, trains: usize) -> Instance {
        Instance {
            network: Network {
                nodes: vec![Node::new("A"), Node::new("B")],
                arcs: vec![Arc::new("A", "B", 1, 1, 1, int(5))],
                headways: HeadwayTable::default(),
            },
            horizon: h,
            trains: (0..trains).map(|i| TrainRequest::new(format!("T{i}"), "A", "B", 0, h)).collect(),
            connections: vec![],
            scenarios: vec![],
            capacity_window: window,
            dwell: true,
        }
    }

    /// Brute-force: all 0/1 assignments of a two-variable product constraint.
    fn quadratic_ok(m: i64, t1: i64, t2: i64, x1: bool, x2: bool) -> bool {
        (x1 as i64) * (m - (t2 - t1)) * (x2 as i64) <= 0
    }

    #[test]
    fn headway_row_examples() {
        let row = headway_row(3, 0, 1, 0, 1).unwrap();
        assert_eq!(row.terms, vec![(0, int(2)), (1, int(2))]);
        assert_eq!(row.rhs, int(2));
        assert!(!row.is_satisfied(&[true, true]));
        assert!(headway_row(1, 0, 1, 0, 1).is_none());
        assert!(headway_row(2, 0, 5, 0, 1).is_none());
    }

    #[test]
    fn headway_row_matches_product_form_exhaustively() {
        for m in 0..=5u32 {
            for t1 in 0..=5u32 {
                for t2 in t1 + 1..=5u32 {
                    for bits in 0..4u8 {
                        let (x1, x2) = (bits & 1 == 1, bits & 2 == 2);
                        let expect = quadratic_ok(m.into(), t1.into(), t2.into(), x1, x2);
                        let got = headway_row(m, t1, t2, 0, 1).is_none_or(|r| r.is_satisfied(&[x1, x2]));
                        assert_eq!(got, expect, "m={m} t1={t1} t2={t2} x=({x1},{x2})");
                    }
                }
            }
        }
    }

    #[test]
    fn single_arc_objective_and_capacity_windows() {
        let sys = build(&line(3, 1, 1)).unwrap();
        assert_eq!(sys.objective, vec![(0, int(5))]);
        let caps: Vec<&str> = sys.rows_of(Family::Capacity).map(|r| r.name.as_str()).collect();
        assert_eq!(caps, vec!["cap_A.B_all_0", "cap_A.B_all_1", "cap_A.B_all_2"]);
        sys.check_well_formed().unwrap();
    }

    #[test]
    fn empty_timetable_only_has_the_objective() {
        let sys = build(&line(3, 1, 0)).unwrap();
        assert!(sys.rows.is_empty());
        assert_eq!(sys.objective, vec![(0, int(5))]);
        assert_eq!(sys.objective_value(&[false]), int(0));
    }

    #[test]
    fn headway_pairs_within_reach() {
        let mut inst = line(3, 1, 2);
        inst.network.headways.default = 2;
        let sys = build(&inst).unwrap();
        let names: Vec<&str> = sys.rows_of(Family::Headway).map(|r| r.name.as_str()).collect();
        assert_eq!(names, vec!["hw_A.B_T0_T1_0_1", "hw_A.B_T0_T1_1_2", "hw_A.B_T1_T0_0_1", "hw_A.B_T1_T0_1_2"]);

        let mut inst = line(4, 1, 2);
        inst.network.headways.default = 2;
        let sys = build(&inst).unwrap();
        let pairs: Vec<&str> = sys
            .rows_of(Family::Headway)
            .filter(|r| r.name.starts_with("hw_A.B_T0_T1"))
            .map(|r| r.name.as_str())
            .collect();
        assert_eq!(pairs, vec!["hw_A.B_T0_T1_0_1", "hw_A.B_T0_T1_1_2", "hw_A.B_T0_T1_2_3"]);
    }

    #[test]
    fn without_optional_trains_the_objective_is_pure_expansion_cost() {
        let sys = build(&line(4, 2, 3)).unwrap();
        assert!(sys.objective_constant.is_zero());
        assert!(sys.objective.iter().all(|(v, _)| matches!(sys.variables[*v].meaning, VarMeaning::Expand { .. })));
    }

    #[test]
    fn optional_train_penalty_encoding() {
        let mut inst = line(2, 2, 2);
        inst.trains[1] = inst.trains[1].clone().optional_with_penalty(int(4));
        let sys = build(&inst).unwrap();
        assert_eq!(sys.objective_constant, int(4));
        let penalised: Vec<&str> =
            sys.objective.iter().filter(|(_, c)| *c == int(-4)).map(|(v, _)| sys.variables[*v].name.as_str()).collect();
        assert_eq!(penalised, vec!["x_T1_A.B_0", "x_T1_A.B_1"]);
        let cap = sys.rows.iter().find(|r| r.name == "dep_T1").unwrap();
        assert_eq!(cap.sense, Sense::Le);
        assert!(sys.rows.iter().all(|r| r.name != "arr_T1"));
    }

    #[test]
    fn counts_follow_closed_forms() {
        for (h, w, n) in [(3, 1, 1), (5, 2, 3), (4, 9, 2), (6, 6, 4)] {
            let mut inst = line(h, w, n);
            inst.network.headways.default = 3;
            let sys = build(&inst).unwrap();
            let expect = expected_counts(&inst);
            assert_eq!(Counts::of_system(&sys), expect, "h={h} w={w} n={n}");
        }
    }

    #[test]
    fn scenarios_never_mix_in_headway_rows() {
        let mut inst = line(4, 1, 3);
        inst.network.headways.default = 3;
        inst.scenarios = vec![
            Scenario { id: "S1".into(), train_ids: vec!["T0".into(), "T1".into()] },
            Scenario { id: "S2".into(), train_ids: vec!["T1".into(), "T2".into()] },
        ];
        let sys = build(&inst).unwrap();
        for row in sys.rows_of(Family::Headway) {
            let trains: Vec<usize> = row
                .terms
                .iter()
                .map(|(v, _)| match sys.variables[*v].meaning {
                    VarMeaning::Route { train, .. } => train,
                    _ => unreachable!(),
                })
                .collect();
            assert!(!(trains.contains(&0) && trains.contains(&2)), "{}", row.name);
        }
        assert!(sys.rows.iter().any(|r| r.name.starts_with("hw_A.B_T1_T2") && r.name.ends_with("_S2")));
        assert!(!sys.rows.iter().any(|r| r.name.starts_with("hw_A.B_T0_T2")));
    }

    #[test]
    fn adding_a_train_only_grows_the_system() {
        let small = build(&line(4, 2, 2)).unwrap();
        let large = build(&line(4, 2, 3)).unwrap();
        assert!(large.variables.len() > small.variables.len());
        for v in &small.variables {
            assert!(large.variables.iter().any(|w| w.name == v.name));
        }
        for r in &small.rows {
            assert!(large.rows.iter().any(|s| s.name == r.name), "{} disappeared", r.name);
        }
    }

    #[test]
    fn invalid_instances_are_rejected() {
        let mut inst = line(2, 1, 1);
        inst.network.arcs[0].travel_time = 0;
        assert!(matches!(build(&inst), Err(BuildError::Invalid(_))));
    }
}
