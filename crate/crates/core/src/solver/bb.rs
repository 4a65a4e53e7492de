use std::time::Instant;

use num_bigint::BigInt;
use rayon::prelude::*;

use super::intsys::{IntSystem, FREE};
use super::simplex::{solve_lp, Lp, LpOutcome};
use super::{SolveError, SolveLimits, SolveResult, SolveStats, SolveStatus};
use crate::milp::ConstraintSystem;
use crate::rational::{self, Rational};

/// Dual multipliers are rounded to multiples of `2^-DUAL_BITS` before the
/// exact bound evaluation.
const DUAL_BITS: u32 = 24;
const INT_TOL: f64 = 1e-6;

struct Node {
    dom: Vec<i8>,
    /// Variables fixed by the branching step that created this node.
    seeds: Vec<usize>,
    /// Bound inherited from the parent.
    bound: Option<Rational>,
}

enum Verdict {
    Infeasible,
    /// Every variable is fixed, or the relaxation optimum is integral. In
    /// the latter case `rest` allows branching on when the exact bound
    /// trails the point.
    Integral { x: Vec<bool>, bound: Rational, rest: Option<(Vec<i8>, usize)> },
    Branch { bound: Rational, var: usize, up_first: bool, dom: Vec<i8> },
}

struct Evaluation {
    verdict: Verdict,
    lp_solved: bool,
    fallback: bool,
}

/// Lower bound on `sum(obj_j x_j)` over the free columns, scaled by
/// `2^DUAL_BITS`; `None` when the multipliers do not fit the integer kernel.
fn lagrangian(
    sys: &IntSystem,
    cols: &[usize],
    rows: &[(usize, Option<i128>, Option<i128>)],
    duals: &[f64],
    with_objective: bool,
) -> Option<i128> {
    let unit = (1i128 << DUAL_BITS) as f64;
    let mut y = Vec::with_capacity(duals.len());
    for (k, &d) in duals.iter().enumerate() {
        let (_, lo, hi) = rows[k];
        let scaled = (d * unit).round();
        if !scaled.is_finite() || scaled.abs() > 1e30 {
            return None;
        }
        let mut v = scaled as i128;
        if (v > 0 && lo.is_none()) || (v < 0 && hi.is_none()) {
            v = 0;
        }
        y.push(v);
    }
    let mut col_pos = vec![usize::MAX; sys.n];
    for (k, &j) in cols.iter().enumerate() {
        col_pos[j] = k;
    }
    let mut reduced: Vec<i128> = Vec::with_capacity(cols.len());
    for &j in cols {
        let c = if with_objective { sys.obj[j] } else { 0 };
        reduced.push(c.checked_mul(1i128 << DUAL_BITS)?);
    }
    let mut total: i128 = 0;
    for (k, &(r, lo, hi)) in rows.iter().enumerate() {
        let yr = y[k];
        if yr == 0 {
            continue;
        }
        for &(j, a) in &sys.rows[r].terms {
            let p = col_pos[j];
            if p != usize::MAX {
                reduced[p] = reduced[p].checked_sub(yr.checked_mul(a)?)?;
            }
        }
        let s = if yr > 0 { lo? } else { hi? };
        total = total.checked_add(yr.checked_mul(s)?)?;
    }
    for d in reduced {
        if d < 0 {
            total = total.checked_add(d)?;
        }
    }
    Some(total)
}

struct Ctx<'a> {
    sys: &'a IntSystem,
}

impl Ctx<'_> {
    fn exact_bound(&self, fixed_obj: i128, lagr: i128) -> Rational {
        let scaled = Rational::new(BigInt::from(lagr), BigInt::from(1i128 << DUAL_BITS));
        let raw = &self.sys.obj_constant
            + (Rational::from_integer(BigInt::from(fixed_obj)) + scaled)
                / Rational::from_integer(self.sys.obj_scale.clone());
        rational::ceil_to_lattice(&raw, &self.sys.obj_constant, &self.sys.lattice)
    }

    /// Trivial bound: fixed part plus every negative free coefficient.
    fn trivial_bound(&self, dom: &[i8]) -> Rational {
        let sum: i128 = (0..self.sys.n)
            .map(|j| match dom[j] {
                1 => self.sys.obj[j],
                FREE => self.sys.obj[j].min(0),
                _ => 0,
            })
            .sum();
        self.exact_bound(sum, 0)
    }

    fn evaluate(&self, node: &Node) -> Evaluation {
        let sys = self.sys;
        let mut dom = node.dom.clone();
        let seeds = if node.seeds.is_empty() { None } else { Some(node.seeds.as_slice()) };
        if !sys.propagate(&mut dom, seeds) {
            return Evaluation { verdict: Verdict::Infeasible, lp_solved: false, fallback: false };
        }
        let cols: Vec<usize> = (0..sys.n).filter(|&j| dom[j] == FREE).collect();
        if cols.is_empty() {
            let x: Vec<bool> = dom.iter().map(|&d| d == 1).collect();
            if !sys.is_feasible(&x) {
                return Evaluation { verdict: Verdict::Infeasible, lp_solved: false, fallback: false };
            }
            let bound = sys.objective(&x);
            return Evaluation { verdict: Verdict::Integral { x, bound, rest: None }, lp_solved: false, fallback: false };
        }

        // Residual rows over the free columns, dropping implied sides.
        let mut col_pos = vec![usize::MAX; sys.n];
        for (k, &j) in cols.iter().enumerate() {
            col_pos[j] = k;
        }
        let mut rows: Vec<(usize, Option<i128>, Option<i128>)> = Vec::new();
        let mut lp_rows = Vec::new();
        for (r, row) in sys.rows.iter().enumerate() {
            let (fixed, min, max) = sys.activity(row, &dom);
            let lo = row.lo.filter(|&lo| min < lo).map(|lo| lo - fixed);
            let hi = row.hi.filter(|&hi| max > hi).map(|hi| hi - fixed);
            if lo.is_none() && hi.is_none() {
                continue;
            }
            let terms: Vec<(usize, f64)> = row
                .terms
                .iter()
                .filter(|(v, _)| col_pos[*v] != usize::MAX)
                .map(|&(v, c)| (col_pos[v], c as f64))
                .collect();
            lp_rows.push((terms, lo.map_or(f64::NEG_INFINITY, |v| v as f64), hi.map_or(f64::INFINITY, |v| v as f64)));
            rows.push((r, lo, hi));
        }
        let fixed_obj: i128 = (0..sys.n).filter(|&j| dom[j] == 1).map(|j| sys.obj[j]).sum();
        let lp = Lp { n: cols.len(), rows: lp_rows, cost: cols.iter().map(|&j| sys.obj[j] as f64).collect() };
        let max_iter = 20 * (lp.n + lp.rows.len()) + 1000;
        let first_free = cols[0];

        let fallback = |dom: Vec<i8>| Evaluation {
            verdict: Verdict::Branch { bound: self.trivial_bound(&dom), var: first_free, up_first: false, dom },
            lp_solved: true,
            fallback: true,
        };
        match solve_lp(&lp, max_iter) {
            LpOutcome::Failed => fallback(dom),
            LpOutcome::Infeasible { duals } => match lagrangian(sys, &cols, &rows, &duals, false) {
                Some(l) if l > 0 => Evaluation { verdict: Verdict::Infeasible, lp_solved: true, fallback: false },
                _ => fallback(dom),
            },
            LpOutcome::Optimal { x, duals } => {
                let Some(l) = lagrangian(sys, &cols, &rows, &duals, true) else {
                    return fallback(dom);
                };
                let bound = self.exact_bound(fixed_obj, l);
                // Most fractional column, ties to the smallest id.
                let mut best: Option<(usize, f64)> = None;
                for (k, &v) in x.iter().enumerate() {
                    let frac = (v - v.round()).abs();
                    if frac > INT_TOL && best.is_none_or(|(_, f)| frac > f + 1e-12) {
                        best = Some((k, frac));
                    }
                }
                match best {
                    Some((k, _)) => Evaluation {
                        verdict: Verdict::Branch { bound, var: cols[k], up_first: x[k] >= 0.5, dom },
                        lp_solved: true,
                        fallback: false,
                    },
                    None => {
                        let mut full = dom.clone();
                        for (k, &j) in cols.iter().enumerate() {
                            full[j] = (x[k] > 0.5) as i8;
                        }
                        let assignment: Vec<bool> = full.iter().map(|&d| d == 1).collect();
                        if sys.is_feasible(&assignment) {
                            Evaluation {
                                verdict: Verdict::Integral { x: assignment, bound, rest: Some((dom, first_free)) },
                                lp_solved: true,
                                fallback: false,
                            }
                        } else {
                            Evaluation {
                                verdict: Verdict::Branch { bound, var: first_free, up_first: false, dom },
                                lp_solved: true,
                                fallback: true,
                            }
                        }
                    }
                }
            }
        }
    }
}

fn push_children(stack: &mut Vec<Node>, dom: &[i8], var: usize, up_first: bool, bound: &Rational) {
    let child = |value: i8| {
        let mut d = dom.to_vec();
        d[var] = value;
        Node { dom: d, seeds: vec![var], bound: Some(bound.clone()) }
    };
    let (first, second) = if up_first { (1, 0) } else { (0, 1) };
    stack.push(child(second));
    stack.push(child(first));
}

/// Solves `system` to proven optimality unless a limit intervenes.
///
/// With `threads > 1` up to that many open nodes are evaluated concurrently;
/// their results are merged in the order the nodes were taken off the stack.
pub fn solve(system: &ConstraintSystem, limits: &SolveLimits) -> Result<SolveResult, SolveError> {
    let start = Instant::now();
    let sys = IntSystem::new(system)?;
    let ctx = Ctx { sys: &sys };
    let mut stats = SolveStats::default();
    let mut incumbent: Option<(Vec<bool>, Rational)> = None;
    // Least bound among nodes discarded because of the incumbent.
    let mut pruned_bound: Option<Rational> = None;
    let mut stack = vec![Node { dom: vec![FREE; sys.n], seeds: Vec::new(), bound: None }];
    let threads = limits.threads.max(1);
    let pool = (threads > 1).then(|| rayon::ThreadPoolBuilder::new().num_threads(threads).build().ok()).flatten();
    let mut limited = false;

    let prune = |bound: &Rational, incumbent: &Option<(Vec<bool>, Rational)>| {
        incumbent.as_ref().is_some_and(|(_, obj)| bound >= &(obj - &limits.absolute_gap))
    };
    let note_pruned = |bound: &Rational, pruned: &mut Option<Rational>| {
        if pruned.as_ref().is_none_or(|p| bound < p) {
            *pruned = Some(bound.clone());
        }
    };

    while !stack.is_empty() {
        if limits.node_limit.is_some_and(|n| stats.nodes >= n)
            || limits.time_limit.is_some_and(|t| start.elapsed() >= t)
        {
            limited = true;
            break;
        }
        let take = threads.min(stack.len());
        let mut batch = Vec::with_capacity(take);
        while batch.len() < take {
            let Some(node) = stack.pop() else {
                break;
            };
            if let Some(b) = &node.bound {
                if prune(b, &incumbent) {
                    note_pruned(b, &mut pruned_bound);
                    continue;
                }
            }
            batch.push(node);
        }
        if batch.is_empty() {
            continue;
        }
        stats.nodes += batch.len() as u64;
        let results: Vec<Evaluation> = match (&pool, batch.len()) {
            (Some(pool), n) if n > 1 => pool.install(|| batch.par_iter().map(|n| ctx.evaluate(n)).collect()),
            _ => batch.iter().map(|n| ctx.evaluate(n)).collect(),
        };
        for eval in results {
            stats.lp_solves += eval.lp_solved as u64;
            stats.lp_fallbacks += eval.fallback as u64;
            match eval.verdict {
                Verdict::Infeasible => {}
                Verdict::Integral { x, bound, rest } => {
                    let obj = sys.objective(&x);
                    if incumbent.as_ref().is_none_or(|(_, best)| obj < *best) {
                        incumbent = Some((x, obj));
                    }
                    // The exact bound can trail the relaxation optimum by
                    // rounding; keep searching below the point if so.
                    if let Some((dom, var)) = rest {
                        if !prune(&bound, &incumbent) {
                            push_children(&mut stack, &dom, var, false, &bound);
                        }
                    }
                }
                Verdict::Branch { bound, var, up_first, dom } => {
                    if prune(&bound, &incumbent) {
                        note_pruned(&bound, &mut pruned_bound);
                        continue;
                    }
                    push_children(&mut stack, &dom, var, up_first, &bound);
                }
            }
        }
    }
    stats.wall_time = start.elapsed();

    let open_bound = stack.iter().map(|n| n.bound.clone().unwrap_or_else(|| ctx.trivial_bound(&n.dom))).min();
    let mut bound = match (open_bound, pruned_bound) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    };
    let status = match (&incumbent, limited) {
        (_, true) => SolveStatus::LimitReached,
        (Some(_), false) => SolveStatus::Optimal,
        (None, false) => SolveStatus::Infeasible,
    };
    if let Some((_, obj)) = &incumbent {
        bound = Some(bound.map_or(obj.clone(), |b| b.min(obj.clone())));
    }
    if status == SolveStatus::Infeasible {
        bound = None;
    }
    let (incumbent, objective) = match incumbent {
        Some((x, obj)) => (Some(x), Some(obj)),
        None => (None, None),
    };
    Ok(SolveResult { status, incumbent, objective, bound, stats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::{build, Family, LinearRow, Sense, VarMeaning, Variable};
    use crate::model::{self, Arc, HeadwayTable, Instance, Network, TrainRequest};
    use crate::rational::{int, ratio};

    fn one_arc(trains: &[(u32, u32)], exp: u32, cost: i64, window: u32) -> Instance {
        Instance {
            network: Network {
                nodes: vec![model::Node::new("A"), model::Node::new("B")],
                arcs: vec![Arc::new("A", "B", 1, 1, exp, int(cost))],
                headways: HeadwayTable::default(),
            },
            horizon: 3,
            trains: trains
                .iter()
                .enumerate()
                .map(|(i, &(d, a))| TrainRequest::new(format!("T{i}"), "A", "B", d, a))
                .collect(),
            connections: vec![],
            scenarios: vec![],
            capacity_window: window,
            dwell: true,
        }
    }

    fn run(inst: &Instance) -> SolveResult {
        solve(&build(inst).unwrap(), &SolveLimits::default()).unwrap()
    }

    #[test]
    fn capacity_suffices() {
        let r = run(&one_arc(&[(0, 3)], 1, 7, 1));
        assert_eq!(r.status, SolveStatus::Optimal);
        assert_eq!(r.objective, Some(int(0)));
        assert!(!r.incumbent.unwrap()[0]);
    }

    #[test]
    fn simultaneous_trains_force_expansion() {
        let r = run(&one_arc(&[(0, 1), (0, 1)], 1, 7, 3));
        assert_eq!(r.status, SolveStatus::Optimal);
        assert_eq!(r.objective, Some(int(7)));
        assert!(r.incumbent.unwrap()[0]);
        assert_eq!(r.bound, Some(int(7)));
    }

    #[test]
    fn no_expansion_means_infeasible() {
        let r = run(&one_arc(&[(0, 1), (0, 1)], 0, 7, 3));
        assert_eq!(r.status, SolveStatus::Infeasible);
        assert!(r.incumbent.is_none() && r.objective.is_none() && r.bound.is_none());
    }

    #[test]
    fn threads_agree_with_sequential() {
        let inst = one_arc(&[(0, 2), (0, 2), (1, 3)], 1, 5, 2);
        let sys = build(&inst).unwrap();
        let seq = solve(&sys, &SolveLimits::default()).unwrap();
        let par = solve(&sys, &SolveLimits { threads: 4, ..SolveLimits::default() }).unwrap();
        assert_eq!(seq.status, par.status);
        assert_eq!(seq.objective, par.objective);
    }

    fn triangle() -> ConstraintSystem {
        // Pairwise covering of three variables: LP optimum 3/2, integer 2.
        let row = |i: usize, j: usize| LinearRow {
            name: format!("r{i}{j}"),
            family: Family::Capacity,
            terms: vec![(i, int(1)), (j, int(1))],
            sense: Sense::Ge,
            rhs: int(1),
        };
        ConstraintSystem {
            variables: (0..3).map(|i| Variable { meaning: VarMeaning::Expand { arc: i }, name: format!("b{i}") }).collect(),
            rows: vec![row(0, 1), row(1, 2), row(0, 2)],
            objective: (0..3).map(|i| (i, int(1))).collect(),
            objective_constant: int(0),
        }
    }

    #[test]
    fn node_limit_reports_limit() {
        let r = solve(&triangle(), &SolveLimits { node_limit: Some(1), ..SolveLimits::default() }).unwrap();
        assert_eq!(r.status, SolveStatus::LimitReached);
        assert_eq!(r.stats.nodes, 1);
        assert!(r.incumbent.is_none());
        // The relaxation gives 3/2, rounded up to the objective lattice.
        assert_eq!(r.bound, Some(int(2)));
        let full = solve(&triangle(), &SolveLimits::default()).unwrap();
        assert_eq!(full.objective, Some(int(2)));
    }

    #[test]
    fn fractional_objective_and_constant() {
        // min 1/2 b0 + 1/3 b1 + 1 s.t. b0 + b1 >= 1.
        let sys = ConstraintSystem {
            variables: (0..2).map(|i| Variable { meaning: VarMeaning::Expand { arc: i }, name: format!("b{i}") }).collect(),
            rows: vec![LinearRow {
                name: "r".into(),
                family: Family::Capacity,
                terms: vec![(0, int(1)), (1, int(1))],
                sense: Sense::Ge,
                rhs: int(1),
            }],
            objective: vec![(0, ratio(1, 2)), (1, ratio(1, 3))],
            objective_constant: int(1),
        };
        let r = solve(&sys, &SolveLimits::default()).unwrap();
        assert_eq!(r.objective, Some(ratio(4, 3)));
        assert_eq!(r.incumbent, Some(vec![false, true]));
    }
}
