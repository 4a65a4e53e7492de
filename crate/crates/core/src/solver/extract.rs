use std::collections::{BTreeMap, BTreeSet};

use super::SolveResult;
use crate::milp::{ConstraintSystem, VarMeaning};
use crate::model::{CostBreakdown, Instance, RoutedStep, Solution};
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExtractError {
    #[error("result carries no incumbent")]
    NoIncumbent,
    #[error("incumbent has {got} entries, system has {expected} variables")]
    Length { got: usize, expected: usize },
    #[error("route of train `{train}` is not a single walk: {reason}")]
    NotAWalk { train: String, reason: String },
}

/// Decodes the incumbent of `result` into a [`Solution`].
///
/// Expansions that no capacity row needs are dropped before the costs are
/// recomputed, so the objective can only go down relative to the incumbent.
pub fn extract_solution(
    instance: &Instance,
    system: &ConstraintSystem,
    result: &SolveResult,
) -> Result<Solution, ExtractError> {
    let x = result.incumbent.as_ref().ok_or(ExtractError::NoIncumbent)?;
    if x.len() != system.num_vars() {
        return Err(ExtractError::Length { got: x.len(), expected: system.num_vars() });
    }
    let mut x = x.clone();
    let net = &instance.network;

    // Normalize: clear expansion bits whose rows stay satisfied without them.
    for (v, var) in system.variables.iter().enumerate() {
        if !matches!(var.meaning, VarMeaning::Expand { .. }) || !x[v] {
            continue;
        }
        x[v] = false;
        let needed = system.rows.iter().any(|r| r.terms.iter().any(|(t, _)| *t == v) && !r.is_satisfied(&x));
        x[v] = needed;
    }

    let mut expanded_arcs = BTreeSet::new();
    let mut steps: BTreeMap<usize, Vec<(u32, usize)>> = BTreeMap::new();
    for (v, var) in system.variables.iter().enumerate() {
        if !x[v] {
            continue;
        }
        match var.meaning {
            VarMeaning::Expand { arc } => {
                let a = &net.arcs[arc];
                expanded_arcs.insert((a.from.clone(), a.to.clone()));
            }
            VarMeaning::Route { train, arc, depart } => steps.entry(train).or_default().push((depart, arc)),
            VarMeaning::Dwell { .. } => {}
        }
    }

    let mut routes = BTreeMap::new();
    for (train, mut legs) in steps {
        let req = &instance.trains[train];
        let fail = |reason: String| ExtractError::NotAWalk { train: req.id.clone(), reason };
        legs.sort();
        let mut at = req.origin.as_str();
        let mut time = 0;
        let mut route = Vec::with_capacity(legs.len());
        for (k, &(depart, arc)) in legs.iter().enumerate() {
            let a = &net.arcs[arc];
            if a.from != at {
                return Err(fail(format!("leg {k} leaves {} but the train is at {at}", a.from)));
            }
            if k > 0 && (depart < time || (!instance.dwell && depart != time)) {
                return Err(fail(format!("leg {k} departs at {depart} before or apart from arrival at {time}")));
            }
            if k > 0 && at == req.destination {
                return Err(fail(format!("leg {k} continues past the destination")));
            }
            route.push(RoutedStep { train: req.id.clone(), from: a.from.clone(), to: a.to.clone(), depart });
            at = a.to.as_str();
            time = depart + a.travel_time;
        }
        if at != req.destination {
            return Err(fail(format!("ends at {at}, not {}", req.destination)));
        }
        routes.insert(req.id.clone(), route);
    }

    let mut solution = Solution {
        expanded_arcs,
        routes,
        objective_value: Rational::default(),
        cost_breakdown: CostBreakdown { expansion_cost_total: Rational::default(), penalty_total: Rational::default() },
    };
    solution.recompute_costs(instance);
    Ok(solution)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::build;
    use crate::model::*;
    use crate::rational::int;
    use crate::solver::{solve, SolveLimits, SolveStats, SolveStatus};

    fn line() -> Instance {
        Instance {
            network: Network {
                nodes: ["A", "B", "C"].into_iter().map(Node::new).collect(),
                arcs: vec![Arc::new("A", "B", 1, 1, 1, int(4)), Arc::new("B", "C", 1, 1, 1, int(4))],
                headways: HeadwayTable::default(),
            },
            horizon: 4,
            trains: vec![TrainRequest::new("T1", "A", "C", 0, 4)],
            connections: vec![],
            scenarios: vec![],
            capacity_window: 1,
            dwell: true,
        }
    }

    fn result(x: Vec<bool>) -> SolveResult {
        SolveResult {
            status: SolveStatus::Optimal,
            incumbent: Some(x),
            objective: None,
            bound: None,
            stats: SolveStats::default(),
        }
    }

    #[test]
    fn direct_decode() {
        let mut inst = line();
        inst.trains.push(TrainRequest::new("T2", "A", "B", 0, 1));
        inst.trains.push(TrainRequest::new("T3", "A", "B", 0, 1));
        let sys = build(&inst).unwrap();
        let r = solve(&sys, &SolveLimits::default()).unwrap();
        let sol = extract_solution(&inst, &sys, &r).unwrap();
        assert_eq!(sol.expanded_arcs, [("A".to_string(), "B".to_string())].into_iter().collect());
        assert_eq!(sol.objective_value, int(4));
        assert_eq!(sol.routes["T2"], vec![RoutedStep { train: "T2".into(), from: "A".into(), to: "B".into(), depart: 0 }]);
    }

    #[test]
    fn dropped_optional_train_pays_penalty() {
        let mut inst = line();
        inst.trains[0] = inst.trains[0].clone().optional_with_penalty(int(3));
        let sys = build(&inst).unwrap();
        let sol = extract_solution(&inst, &sys, &result(vec![false; sys.num_vars()])).unwrap();
        assert!(sol.routes.is_empty());
        assert_eq!(sol.cost_breakdown.penalty_total, int(3));
        assert_eq!(sol.objective_value, int(3));
    }

    #[test]
    fn multi_leg_route_with_dwell_is_contiguous() {
        let mut inst = line();
        inst.trains[0].earliest_departure = 1;
        let sys = build(&inst).unwrap();
        let mut x = vec![false; sys.num_vars()];
        for name in ["x_T1_A.B_1", "w_T1_B_2", "w_T1_B_3"] {
            x[sys.var_by_name(name).unwrap()] = true;
        }
        // Leaves B at 4 is beyond the horizon for tt = 1; use one wait.
        x[sys.var_by_name("w_T1_B_3").unwrap()] = false;
        x[sys.var_by_name("x_T1_B.C_3").unwrap()] = true;
        assert!(sys.is_feasible(&x), "{:?}", sys.violated_rows(&x).iter().map(|&r| &sys.rows[r].name).collect::<Vec<_>>());
        let sol = extract_solution(&inst, &sys, &result(x)).unwrap();
        let route = &sol.routes["T1"];
        assert_eq!(route.len(), 2);
        assert!(route[1].depart > route[0].depart);
    }

    #[test]
    fn broken_walks_fail_loudly() {
        let inst = line();
        let sys = build(&inst).unwrap();
        let mut x = vec![false; sys.num_vars()];
        x[sys.var_by_name("x_T1_B.C_0").unwrap()] = true;
        assert!(matches!(extract_solution(&inst, &sys, &result(x)), Err(ExtractError::NotAWalk { .. })));
    }

    #[test]
    fn unneeded_expansions_are_dropped() {
        let inst = line();
        let sys = build(&inst).unwrap();
        let mut r = solve(&sys, &SolveLimits::default()).unwrap();
        r.incumbent.as_mut().unwrap()[0] = true;
        let sol = extract_solution(&inst, &sys, &r).unwrap();
        assert!(sol.expanded_arcs.is_empty());
        assert_eq!(sol.objective_value, int(0));
    }
}
