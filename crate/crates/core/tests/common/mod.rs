#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use raildesign::milp::{ConstraintSystem, VarMeaning};
use raildesign::model::{CostBreakdown, Instance, RoutedStep, Solution};
use raildesign::rational::Rational;

/// Largest system the enumeration oracle accepts.
pub const ENUM_LIMIT: usize = 20;

/// Best feasible assignment by trying all `2^n` of them; ties go to the
/// first in counting order.
pub fn enumerate(sys: &ConstraintSystem) -> Option<(Rational, Vec<bool>)> {
    let n = sys.num_vars();
    assert!(n <= ENUM_LIMIT, "{n} variables is too many to enumerate");
    let mut best: Option<(Rational, Vec<bool>)> = None;
    for mask in 0u64..(1 << n) {
        let x: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
        if !sys.is_feasible(&x) {
            continue;
        }
        let obj = sys.objective_value(&x);
        if best.as_ref().is_none_or(|(b, _)| obj < *b) {
            best = Some((obj, x));
        }
    }
    best
}

/// Reads an assignment as a solution without any checking: every set
/// expansion bit is an expanded arc, every set route bit a leg. Dwell bits
/// are ignored.
pub fn decode(instance: &Instance, sys: &ConstraintSystem, x: &[bool]) -> Solution {
    let net = &instance.network;
    let mut expanded_arcs = BTreeSet::new();
    let mut legs: BTreeMap<usize, Vec<(u32, usize)>> = BTreeMap::new();
    for (v, var) in sys.variables.iter().enumerate() {
        if !x[v] {
            continue;
        }
        match var.meaning {
            VarMeaning::Expand { arc } => {
                expanded_arcs.insert((net.arcs[arc].from.clone(), net.arcs[arc].to.clone()));
            }
            VarMeaning::Route { train, arc, depart } => legs.entry(train).or_default().push((depart, arc)),
            VarMeaning::Dwell { .. } => {}
        }
    }
    let routes = legs
        .into_iter()
        .map(|(train, mut l)| {
            l.sort();
            let id = instance.trains[train].id.clone();
            let steps = l
                .into_iter()
                .map(|(depart, arc)| RoutedStep {
                    train: id.clone(),
                    from: net.arcs[arc].from.clone(),
                    to: net.arcs[arc].to.clone(),
                    depart,
                })
                .collect();
            (id, steps)
        })
        .collect();
    let mut sol = Solution {
        expanded_arcs,
        routes,
        objective_value: Rational::default(),
        cost_breakdown: CostBreakdown { expansion_cost_total: Rational::default(), penalty_total: Rational::default() },
    };
    sol.recompute_costs(instance);
    sol
}

/// Whether each assignment of the non-dwell bits extends to a feasible one,
/// keyed by the mask of those bits.
pub fn feasible_projections(sys: &ConstraintSystem) -> BTreeMap<u64, bool> {
    let n = sys.num_vars();
    assert!(n <= ENUM_LIMIT);
    let keep: u64 = sys
        .variables
        .iter()
        .enumerate()
        .filter(|(_, v)| !matches!(v.meaning, VarMeaning::Dwell { .. }))
        .map(|(i, _)| 1u64 << i)
        .sum();
    let mut out = BTreeMap::new();
    for mask in 0u64..(1 << n) {
        let x: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
        let ok = sys.is_feasible(&x);
        *out.entry(mask & keep).or_insert(false) |= ok;
    }
    out
}

pub fn bits(mask: u64, n: usize) -> Vec<bool> {
    (0..n).map(|i| mask >> i & 1 == 1).collect()
}
