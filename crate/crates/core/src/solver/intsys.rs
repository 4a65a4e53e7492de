//! Rows scaled to integer coefficients, and bound propagation over them.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use super::SolveError;
use crate::milp::{ConstraintSystem, Sense};
use crate::rational::{self, Rational};

/// Magnitude cap for scaled coefficients; leaves headroom for sums.
const COEF_LIMIT: i128 = 1 << 62;

/// `lo <= sum(coef * x) <= hi`.
#[derive(Debug, Clone)]
pub(crate) struct IntRow {
    pub terms: Vec<(usize, i128)>,
    pub lo: Option<i128>,
    pub hi: Option<i128>,
}

pub(crate) const FREE: i8 = -1;

#[derive(Debug, Clone)]
pub(crate) struct IntSystem {
    pub n: usize,
    pub rows: Vec<IntRow>,
    /// Rows touching each variable.
    pub var_rows: Vec<Vec<usize>>,
    /// Objective times `obj_scale`, per variable.
    pub obj: Vec<i128>,
    pub obj_scale: BigInt,
    pub obj_constant: Rational,
    /// Objective values lie on `obj_constant + k * lattice` for integer `k`.
    pub lattice: Rational,
}

fn to_i128(value: &BigInt) -> Option<i128> {
    value.to_i128().filter(|v| v.abs() < COEF_LIMIT)
}

impl IntSystem {
    pub fn new(sys: &ConstraintSystem) -> Result<Self, SolveError> {
        sys.check_well_formed().map_err(SolveError::Malformed)?;
        let n = sys.num_vars();
        let mut rows = Vec::with_capacity(sys.rows.len());
        let mut var_rows = vec![Vec::new(); n];
        for row in &sys.rows {
            let range = || SolveError::CoefficientRange(row.name.clone());
            let mut lcm = row.rhs.denom().clone();
            for (_, c) in &row.terms {
                lcm = lcm.lcm(c.denom());
            }
            let k = Rational::from_integer(lcm);
            let mut terms = Vec::with_capacity(row.terms.len());
            for (v, c) in &row.terms {
                let scaled = (c * &k).to_integer();
                terms.push((*v, to_i128(&scaled).ok_or_else(range)?));
            }
            let rhs = to_i128(&(&row.rhs * &k).to_integer()).ok_or_else(range)?;
            let (lo, hi) = match row.sense {
                Sense::Le => (None, Some(rhs)),
                Sense::Ge => (Some(rhs), None),
                Sense::Eq => (Some(rhs), Some(rhs)),
            };
            for (v, _) in &terms {
                var_rows[*v].push(rows.len());
            }
            rows.push(IntRow { terms, lo, hi });
        }

        let mut dense = vec![Rational::zero(); n];
        for (v, c) in &sys.objective {
            dense[*v] += c;
        }
        let mut obj_scale = BigInt::one();
        for c in &dense {
            obj_scale = obj_scale.lcm(c.denom());
        }
        let scale = Rational::from_integer(obj_scale.clone());
        let mut obj = Vec::with_capacity(n);
        for c in &dense {
            let scaled = (c * &scale).to_integer();
            obj.push(to_i128(&scaled).ok_or_else(|| SolveError::CoefficientRange("objective".into()))?);
        }
        let lattice = dense.iter().fold(Rational::zero(), |g, c| rational::gcd(&g, c));
        Ok(IntSystem { n, rows, var_rows, obj, obj_scale, obj_constant: sys.objective_constant.clone(), lattice })
    }

    /// Exact objective of a full assignment.
    pub fn objective(&self, x: &[bool]) -> Rational {
        let sum: i128 = x.iter().zip(&self.obj).filter(|(b, _)| **b).map(|(_, c)| *c).sum();
        &self.obj_constant + Rational::new(BigInt::from(sum), self.obj_scale.clone())
    }

    pub fn is_feasible(&self, x: &[bool]) -> bool {
        self.rows.iter().all(|r| {
            let act: i128 = r.terms.iter().filter(|(v, _)| x[*v]).map(|(_, c)| *c).sum();
            r.lo.is_none_or(|lo| act >= lo) && r.hi.is_none_or(|hi| act <= hi)
        })
    }

    /// Activity range of `row` given the domains: (fixed part, min, max),
    /// where min and max include the fixed part.
    pub fn activity(&self, row: &IntRow, dom: &[i8]) -> (i128, i128, i128) {
        let (mut fixed, mut min, mut max) = (0i128, 0i128, 0i128);
        for &(v, c) in &row.terms {
            match dom[v] {
                1 => {
                    fixed += c;
                    min += c;
                    max += c;
                }
                0 => {}
                _ => {
                    if c < 0 {
                        min += c;
                    } else {
                        max += c;
                    }
                }
            }
        }
        (fixed, min, max)
    }

    /// Fixes variables implied by the rows. Returns `false` when some row
    /// cannot be satisfied under the domains.
    pub fn propagate(&self, dom: &mut [i8], seeds: Option<&[usize]>) -> bool {
        let mut queued = vec![false; self.rows.len()];
        let mut queue: Vec<usize> = match seeds {
            Some(vars) => {
                let mut q = Vec::new();
                for &v in vars {
                    for &r in &self.var_rows[v] {
                        if !queued[r] {
                            queued[r] = true;
                            q.push(r);
                        }
                    }
                }
                q
            }
            None => {
                queued.iter_mut().for_each(|q| *q = true);
                (0..self.rows.len()).rev().collect()
            }
        };
        while let Some(r) = queue.pop() {
            queued[r] = false;
            let row = &self.rows[r];
            let (_, min, max) = self.activity(row, dom);
            if row.hi.is_some_and(|hi| min > hi) || row.lo.is_some_and(|lo| max < lo) {
                return false;
            }
            for &(v, c) in &row.terms {
                if dom[v] != FREE {
                    continue;
                }
                // Activity bounds with v set to 1 and to 0.
                let (min1, max1) = if c < 0 { (min, max + c) } else { (min + c, max) };
                let (min0, max0) = if c < 0 { (min - c, max) } else { (min, max - c) };
                let one_ok = row.hi.is_none_or(|hi| min1 <= hi) && row.lo.is_none_or(|lo| max1 >= lo);
                let zero_ok = row.hi.is_none_or(|hi| min0 <= hi) && row.lo.is_none_or(|lo| max0 >= lo);
                let value = match (zero_ok, one_ok) {
                    (true, true) => continue,
                    (false, false) => return false,
                    (true, false) => 0,
                    (false, true) => 1,
                };
                dom[v] = value;
                for &s in &self.var_rows[v] {
                    if !queued[s] {
                        queued[s] = true;
                        queue.push(s);
                    }
                }
                // The current row's activity range changed; revisit it.
                if !queued[r] {
                    queued[r] = true;
                    queue.push(r);
                }
                break;
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::{Family, LinearRow, VarMeaning, Variable};
    use crate::rational::{int, ratio};

    fn system(rows: Vec<(Vec<(usize, Rational)>, Sense, Rational)>, n: usize) -> ConstraintSystem {
        ConstraintSystem {
            variables: (0..n)
                .map(|i| Variable { meaning: VarMeaning::Expand { arc: i }, name: format!("b{i}") })
                .collect(),
            rows: rows
                .into_iter()
                .enumerate()
                .map(|(i, (terms, sense, rhs))| LinearRow {
                    name: format!("r{i}"),
                    family: Family::Capacity,
                    terms,
                    sense,
                    rhs,
                })
                .collect(),
            objective: vec![(0, ratio(3, 2)), (1, int(3))],
            objective_constant: int(1),
        }
    }

    #[test]
    fn scaling_and_lattice() {
        let sys = system(vec![(vec![(0, ratio(1, 2)), (1, ratio(1, 3))], Sense::Le, int(1))], 2);
        let int_sys = IntSystem::new(&sys).unwrap();
        assert_eq!(int_sys.rows[0].terms, vec![(0, 3), (1, 2)]);
        assert_eq!(int_sys.rows[0].hi, Some(6));
        assert_eq!(int_sys.lattice, ratio(3, 2));
        assert_eq!(int_sys.objective(&[true, true]), ratio(11, 2));
    }

    #[test]
    fn propagation_chains_equalities() {
        // x0 + x1 = 1, x1 - x2 = 0, x2 <= 0  =>  x0 = 1.
        let sys = system(
            vec![
                (vec![(0, int(1)), (1, int(1))], Sense::Eq, int(1)),
                (vec![(1, int(1)), (2, int(-1))], Sense::Eq, int(0)),
                (vec![(2, int(1))], Sense::Le, int(0)),
            ],
            3,
        );
        let int_sys = IntSystem::new(&sys).unwrap();
        let mut dom = vec![FREE; 3];
        assert!(int_sys.propagate(&mut dom, None));
        assert_eq!(dom, vec![1, 0, 0]);
        let mut dom = vec![0, FREE, FREE];
        assert!(!int_sys.propagate(&mut dom, None));
    }

    #[test]
    fn propagation_never_removes_solutions() {
        // Exhaustive over a small mixed system: every feasible completion of
        // the initial domain survives propagation.
        let sys = system(
            vec![
                (vec![(0, int(2)), (1, int(-1)), (2, int(1))], Sense::Le, int(1)),
                (vec![(1, int(1)), (3, int(1))], Sense::Ge, int(1)),
                (vec![(0, int(1)), (2, int(1)), (3, int(1))], Sense::Eq, int(1)),
            ],
            4,
        );
        let int_sys = IntSystem::new(&sys).unwrap();
        for fixed in 0..81u32 {
            let mut dom: Vec<i8> = (0..4).map(|i| (fixed / 3u32.pow(i) % 3) as i8 - 1).collect();
            let before = dom.clone();
            let consistent = |x: &[bool], d: &[i8]| x.iter().zip(d).all(|(b, d)| *d == FREE || (*d == 1) == *b);
            let ok = int_sys.propagate(&mut dom, None);
            for bits in 0..16u32 {
                let x: Vec<bool> = (0..4).map(|i| bits >> i & 1 == 1).collect();
                if consistent(&x, &before) && int_sys.is_feasible(&x) {
                    assert!(ok && consistent(&x, &dom), "{before:?} -> {dom:?} lost {x:?}");
                }
            }
        }
    }
}
