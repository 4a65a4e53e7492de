//! Exact cover by 3-sets, and its encoding as a network design instance.
//!
//! Subset `C_i` becomes a node `c<i>` fed from `s` by an arc that carries
//! three trains once expanded at cost 3; element `x_j` becomes a node `x<j>`
//! with unit lines `c<i> -> x<j>` for `x_j` in `C_i` and `x<j> -> t`. With
//! `3q` trains from `s` to `t` that must all leave at 0 and arrive by 3, the
//! optimum is `3q` exactly when `q` of the subsets partition the ground set.

use std::collections::{BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{Arc, HeadwayTable, Instance, Network, Node, TrainRequest};
use crate::rational::{int, Rational};

/// Largest subset family the brute-force decider accepts.
pub const BRUTE_FORCE_LIMIT: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct X3cInstance {
    pub ground_set: Vec<String>,
    pub subsets: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum X3cError {
    #[error("ground set has {0} elements, not a multiple of 3")]
    GroundSetSize(usize),
    #[error("ground set repeats `{0}`")]
    DuplicateElement(String),
    #[error("subset {index} has {size} elements")]
    SubsetSize { index: usize, size: usize },
    #[error("subset {index} repeats `{element}`")]
    SubsetRepeat { index: usize, element: String },
    #[error("subset {index} mentions `{element}`, which is not in the ground set")]
    UnknownElement { index: usize, element: String },
    #[error("{0} subsets exceed the brute-force limit of {BRUTE_FORCE_LIMIT}")]
    TooLarge(usize),
}

/// Which unit-line encoding to use for the `c -> x` and `x -> t` arcs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum UnitLines {
    /// No base capacity, one expandable slot at zero cost.
    #[default]
    Expandable,
    /// Base capacity one, nothing to expand.
    Fixed,
}

impl X3cInstance {
    pub fn q(&self) -> usize {
        self.ground_set.len() / 3
    }

    pub fn validate(&self) -> Result<(), X3cError> {
        if !self.ground_set.len().is_multiple_of(3) {
            return Err(X3cError::GroundSetSize(self.ground_set.len()));
        }
        let mut seen = BTreeSet::new();
        for e in &self.ground_set {
            if !seen.insert(e) {
                return Err(X3cError::DuplicateElement(e.clone()));
            }
        }
        for (index, subset) in self.subsets.iter().enumerate() {
            if subset.len() != 3 {
                return Err(X3cError::SubsetSize { index, size: subset.len() });
            }
            let mut inner = BTreeSet::new();
            for element in subset {
                if !seen.contains(element) {
                    return Err(X3cError::UnknownElement { index, element: element.clone() });
                }
                if !inner.insert(element) {
                    return Err(X3cError::SubsetRepeat { index, element: element.clone() });
                }
            }
        }
        Ok(())
    }

    /// Subsets as bitmasks over the ground set.
    fn masks(&self) -> Vec<u64> {
        let pos: HashMap<&str, usize> = self.ground_set.iter().enumerate().map(|(i, e)| (e.as_str(), i)).collect();
        self.subsets.iter().map(|s| s.iter().fold(0u64, |m, e| m | 1 << pos[e.as_str()])).collect()
    }
}

/// Builds the network design instance and the cost threshold `3q`.
pub fn x3c_to_instance(x3c: &X3cInstance, unit: UnitLines) -> Result<(Instance, Rational), X3cError> {
    x3c.validate()?;
    let pos: HashMap<&str, usize> = x3c.ground_set.iter().enumerate().map(|(i, e)| (e.as_str(), i)).collect();
    let mut nodes = vec![Node::new("s"), Node::new("t")];
    nodes.extend((1..=x3c.subsets.len()).map(|i| Node::new(format!("c{i}"))));
    nodes.extend((1..=x3c.ground_set.len()).map(|j| Node::new(format!("x{j}"))));

    let (base, extra) = match unit {
        UnitLines::Expandable => (0, 1),
        UnitLines::Fixed => (1, 0),
    };
    let mut arcs: Vec<Arc> = (1..=x3c.subsets.len()).map(|i| Arc::new("s", format!("c{i}"), 1, 0, 3, int(3))).collect();
    for (i, subset) in x3c.subsets.iter().enumerate() {
        let mut members: Vec<usize> = subset.iter().map(|e| pos[e.as_str()]).collect();
        members.sort_unstable();
        for j in members {
            arcs.push(Arc::new(format!("c{}", i + 1), format!("x{}", j + 1), 1, base, extra, int(0)));
        }
    }
    arcs.extend((1..=x3c.ground_set.len()).map(|j| Arc::new(format!("x{j}"), "t", 1, base, extra, int(0))));

    let trains = (1..=x3c.ground_set.len()).map(|v| TrainRequest::new(format!("T{v}"), "s", "t", 0, 3)).collect();
    let instance = Instance {
        network: Network { nodes, arcs, headways: HeadwayTable::default() },
        horizon: 3,
        trains,
        connections: vec![],
        scenarios: vec![],
        capacity_window: 3,
        dwell: false,
    };
    Ok((instance, int(3 * x3c.q() as i64)))
}

/// Whether `q` of the subsets partition the ground set, by exhaustive search.
pub fn x3c_brute_force(x3c: &X3cInstance) -> Result<bool, X3cError> {
    x3c.validate()?;
    if x3c.subsets.len() > BRUTE_FORCE_LIMIT {
        return Err(X3cError::TooLarge(x3c.subsets.len()));
    }
    let full: u64 = if x3c.ground_set.is_empty() { 0 } else { (1u64 << x3c.ground_set.len()) - 1 };
    let masks = x3c.masks();

    // Branch on the lowest uncovered element; every cover must use exactly
    // one subset containing it.
    fn search(covered: u64, full: u64, masks: &[u64]) -> bool {
        if covered == full {
            return true;
        }
        let lowest = (!covered & full).trailing_zeros();
        masks
            .iter()
            .filter(|&&m| m >> lowest & 1 == 1 && m & covered == 0)
            .any(|&m| search(covered | m, full, masks))
    }
    Ok(search(0, full, &masks))
}

/// Random instance with `num_subsets` subsets over `3q` elements named
/// `e1, e2, ...`. With `planted`, the first `q` subsets drawn form a
/// partition, so the instance is a yes-instance; the order is shuffled.
pub fn gen_random_x3c(q: usize, num_subsets: usize, seed: u64, planted: bool) -> X3cInstance {
    assert!(q >= 1 && num_subsets >= q, "need q >= 1 and num_subsets >= q");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ground_set: Vec<String> = (1..=3 * q).map(|i| format!("e{i}")).collect();
    let mut chosen: Vec<[usize; 3]> = Vec::with_capacity(num_subsets);
    if planted {
        let mut order: Vec<usize> = (0..3 * q).collect();
        order.shuffle(&mut rng);
        for chunk in order.chunks(3) {
            let mut t = [chunk[0], chunk[1], chunk[2]];
            t.sort_unstable();
            chosen.push(t);
        }
    }
    let distinct_triples = {
        let n = 3 * q;
        n * (n - 1) * (n - 2) / 6
    };
    while chosen.len() < num_subsets {
        let mut t = [0usize; 3];
        let picks = rand::seq::index::sample(&mut rng, 3 * q, 3);
        for (k, p) in picks.iter().enumerate() {
            t[k] = p;
        }
        t.sort_unstable();
        // Prefer fresh triples while any remain.
        if chosen.contains(&t) && chosen.len() < distinct_triples && rng.gen_bool(0.9) {
            continue;
        }
        chosen.push(t);
    }
    chosen.shuffle(&mut rng);
    let subsets = chosen.iter().map(|t| t.iter().map(|&i| ground_set[i].clone()).collect()).collect();
    X3cInstance { ground_set, subsets }
}

/// Ground truth written next to a generated instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct X3cSidecar {
    pub x3c: X3cInstance,
    #[serde(with = "crate::rational::serde_rational")]
    pub threshold: Rational,
    /// `None` when the family is too large for the brute-force decider.
    pub has_exact_cover: Option<bool>,
}
