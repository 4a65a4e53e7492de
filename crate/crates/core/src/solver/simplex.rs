//! Dense bounded primal simplex in floating point.
//!
//! Each row `r` reads `a_r . x - s_r = 0` with its slack bounded by
//! `lo_r <= s_r <= hi_r`; structural columns live in `[0, 1]`. The slacks
//! form the starting basis. Phase one minimizes the sum of bound violations
//! of the basic slacks, phase two the objective. Results are only used for
//! guidance: the caller derives an exact bound from the returned duals.

const PIVOT_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-7;
const OPT_TOL: f64 = 1e-9;
/// Degenerate pivots in a row before switching to Bland's rule.
const BLAND_AFTER: usize = 50;

#[derive(Debug, Clone)]
pub(crate) struct Lp {
    pub n: usize,
    pub rows: Vec<(Vec<(usize, f64)>, f64, f64)>,
    pub cost: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum LpOutcome {
    /// Primal values of the structural columns and row duals.
    Optimal { x: Vec<f64>, duals: Vec<f64> },
    /// Phase-one duals, a candidate infeasibility certificate.
    Infeasible { duals: Vec<f64> },
    /// Iteration cap hit or numerical breakdown.
    Failed,
}

struct Tableau {
    m: usize,
    width: usize,
    t: Vec<f64>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    value: Vec<f64>,
    lb: Vec<f64>,
    ub: Vec<f64>,
}

impl Tableau {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.width + j]
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let w = self.width;
        let p = self.t[r * w + q];
        for j in 0..w {
            self.t[r * w + j] /= p;
        }
        let nz: Vec<usize> = (0..w).filter(|&j| self.t[r * w + j] != 0.0).collect();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * w + q];
            if f == 0.0 {
                continue;
            }
            for &j in &nz {
                let v = self.t[i * w + j] - f * self.t[r * w + j];
                self.t[i * w + j] = if v.abs() < 1e-14 { 0.0 } else { v };
            }
            self.t[i * w + q] = 0.0;
        }
        self.is_basic[self.basis[r]] = false;
        self.basis[r] = q;
        self.is_basic[q] = true;
    }

    /// Duals `y = c_B B^-1`, read off the slack columns.
    fn duals(&self, cost_b: &[f64], n: usize) -> Vec<f64> {
        (0..self.m).map(|r| -(0..self.m).map(|i| cost_b[i] * self.at(i, n + r)).sum::<f64>()).collect()
    }

    fn infeasibility(&self, i: usize) -> f64 {
        let v = self.value[self.basis[i]];
        let (lb, ub) = (self.lb[self.basis[i]], self.ub[self.basis[i]]);
        if v < lb - FEAS_TOL {
            -1.0
        } else if v > ub + FEAS_TOL {
            1.0
        } else {
            0.0
        }
    }
}

pub(crate) fn solve_lp(lp: &Lp, max_iter: usize) -> LpOutcome {
    let n = lp.n;
    let m = lp.rows.len();
    let width = n + m;
    let mut t = vec![0.0; m * width];
    // Basis = slacks with B = -I, so B^-1 A = [-A | I].
    for (r, (terms, _, _)) in lp.rows.iter().enumerate() {
        for &(j, a) in terms {
            t[r * width + j] = -a;
        }
        t[r * width + n + r] = 1.0;
    }
    let mut lb = vec![0.0; width];
    let mut ub = vec![1.0; width];
    for (r, (_, lo, hi)) in lp.rows.iter().enumerate() {
        lb[n + r] = *lo;
        ub[n + r] = *hi;
    }
    let mut tab = Tableau {
        m,
        width,
        t,
        basis: (n..width).collect(),
        is_basic: (0..width).map(|j| j >= n).collect(),
        value: vec![0.0; width],
        lb,
        ub,
    };

    let mut iterations = 0;
    let mut degenerate = 0;
    for phase in 1..=2 {
        loop {
            iterations += 1;
            if iterations > max_iter {
                return LpOutcome::Failed;
            }
            let cost_b: Vec<f64> = if phase == 1 {
                (0..m).map(|i| tab.infeasibility(i)).collect()
            } else {
                tab.basis.iter().map(|&b| if b < n { lp.cost[b] } else { 0.0 }).collect()
            };
            if phase == 1 && cost_b.iter().all(|c| *c == 0.0) {
                break;
            }
            // Pricing.
            let bland = degenerate >= BLAND_AFTER;
            let mut entering: Option<(usize, f64, f64)> = None;
            for j in 0..width {
                if tab.is_basic[j] || tab.lb[j] == tab.ub[j] {
                    continue;
                }
                let own = if phase == 2 && j < n { lp.cost[j] } else { 0.0 };
                let mut d = own;
                for i in 0..m {
                    let a = tab.at(i, j);
                    if a != 0.0 {
                        d -= cost_b[i] * a;
                    }
                }
                let at_lb = tab.value[j] <= tab.lb[j];
                let dir = if at_lb && d < -OPT_TOL {
                    1.0
                } else if !at_lb && d > OPT_TOL {
                    -1.0
                } else {
                    continue;
                };
                let better = match entering {
                    None => true,
                    Some((_, dd, _)) => !bland && d.abs() > dd.abs(),
                };
                if better {
                    entering = Some((j, d, dir));
                    if bland {
                        break;
                    }
                }
            }
            let Some((q, _, dir)) = entering else {
                if phase == 1 {
                    return LpOutcome::Infeasible { duals: tab.duals(&cost_b, n) };
                }
                let x = tab.value[..n].to_vec();
                return LpOutcome::Optimal { x, duals: tab.duals(&cost_b, n) };
            };

            // Ratio test: basic i moves by -t_iq * dir per unit step. A basic
            // variable outside its bounds blocks only once it reaches the
            // bound it violates.
            let mut step = tab.ub[q] - tab.lb[q];
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..m {
                let rate = -tab.at(i, q) * dir;
                if rate.abs() < PIVOT_TOL {
                    continue;
                }
                let b = tab.basis[i];
                let (v, lo, hi) = (tab.value[b], tab.lb[b], tab.ub[b]);
                let below = v < lo - FEAS_TOL;
                let above = v > hi + FEAS_TOL;
                let target = match (rate > 0.0, below, above) {
                    (true, _, true) | (false, true, _) => continue,
                    (true, true, _) => lo,
                    (true, false, false) => hi,
                    (false, _, true) => hi,
                    (false, false, false) => lo,
                };
                if !target.is_finite() {
                    continue;
                }
                let limit = ((target - v) / rate).max(0.0);
                let tie = limit <= step + 1e-12 && leave.is_some_and(|(r, _)| tab.basis[r] > b);
                if limit < step - 1e-12 || tie {
                    step = limit;
                    leave = Some((i, target));
                }
            }
            if !step.is_finite() {
                // Unbounded direction; cannot happen with boxed columns.
                return LpOutcome::Failed;
            }
            degenerate = if step < 1e-12 { degenerate + 1 } else { 0 };
            for i in 0..m {
                let rate = -tab.at(i, q) * dir;
                if rate != 0.0 {
                    tab.value[tab.basis[i]] += rate * step;
                }
            }
            match leave {
                None => tab.value[q] = if dir > 0.0 { tab.ub[q] } else { tab.lb[q] },
                Some((r, target)) => {
                    tab.value[q] += dir * step;
                    tab.value[tab.basis[r]] = target;
                    tab.pivot(r, q);
                }
            }
        }
    }
    unreachable!()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(n: usize, rows: Vec<(Vec<(usize, f64)>, f64, f64)>, cost: Vec<f64>) -> Lp {
        Lp { n, rows, cost }
    }

    const INF: f64 = f64::INFINITY;

    #[test]
    fn fractional_knapsack_cover() {
        // min x0 + x1 s.t. 2 x0 + 2 x1 >= 3
        match solve_lp(&lp(2, vec![(vec![(0, 2.0), (1, 2.0)], 3.0, INF)], vec![1.0, 1.0]), 1000) {
            LpOutcome::Optimal { x, duals } => {
                assert!((x[0] + x[1] - 1.5).abs() < 1e-9);
                assert!((duals[0] - 0.5).abs() < 1e-9);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn detects_infeasibility() {
        // x0 + x1 >= 3 with both in [0, 1].
        let out = solve_lp(&lp(2, vec![(vec![(0, 1.0), (1, 1.0)], 3.0, INF)], vec![0.0, 0.0]), 1000);
        assert!(matches!(out, LpOutcome::Infeasible { .. }));
    }

    #[test]
    fn equality_rows_and_negative_costs() {
        // min -x0 - 2 x1 + x2 s.t. x0 + x1 = 1, x1 - x2 <= 0.
        let out = solve_lp(
            &lp(3, vec![(vec![(0, 1.0), (1, 1.0)], 1.0, 1.0), (vec![(1, 1.0), (2, -1.0)], -INF, 0.0)], vec![-1.0, -2.0, 1.0]),
            1000,
        );
        match out {
            LpOutcome::Optimal { x, .. } => {
                let obj = -x[0] - 2.0 * x[1] + x[2];
                assert!((obj + 1.0).abs() < 1e-9, "{x:?}");
            }
            other => panic!("{other:?}"),
        }
    }
}
