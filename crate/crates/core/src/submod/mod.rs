//! Set functions over a partitioned ground set.

mod curvature;
mod families;
mod multilinear;

pub use curvature::{curvature, Curvature, CurvatureMethod};
pub use families::{FacilityLocation, Modular, WeightedCoverage};
pub use multilinear::{
    multilinear_exact, multilinear_mc, partial_derivative_exact, sample_random_set, McEstimate,
    SubsetTable,
};

use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt::Debug;

/// Default cap on `n` for oracles that enumerate all `2^n` subsets.
pub const DEFAULT_EXACT_LIMIT: usize = 12;
/// Hard cap; limits above this are clamped.
pub const HARD_EXACT_LIMIT: usize = 20;

/// A normalized set function `f: 2^V -> R_+`.
///
/// Sets are passed as slices of distinct indices in `0..ground_size()`; order
/// does not matter.
pub trait SetFunction: Send + Sync + Debug {
    fn ground_size(&self) -> usize;

    fn value(&self, set: &[usize]) -> f64;

    fn singleton(&self, a: usize) -> f64 {
        self.value(&[a])
    }
}

/// `f(A ∪ {a}) - f(A)`.
pub fn marginal_gain(f: &dyn SetFunction, a: usize, set: &[usize]) -> Result<f64> {
    let n = f.ground_size();
    if a >= n {
        return Err(Error::InvalidAction { action: a, n });
    }
    if let Some(&bad) = set.iter().find(|&&b| b >= n) {
        return Err(Error::InvalidAction { action: bad, n });
    }
    if set.contains(&a) {
        return Ok(0.0);
    }
    let mut with = set.to_vec();
    with.push(a);
    Ok(f.value(&with) - f.value(set))
}

/// The action universe `V` split into one non-empty block per agent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundSet {
    owner: Vec<usize>,
    blocks: Vec<Vec<usize>>,
}

impl GroundSet {
    /// Builds a ground set from explicit per-agent blocks.
    pub fn from_blocks(blocks: Vec<Vec<usize>>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::GroundSet("no agents".into()));
        }
        let n: usize = blocks.iter().map(Vec::len).sum();
        let mut owner = vec![usize::MAX; n];
        for (i, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(Error::GroundSet(format!("agent {i} owns no actions")));
            }
            for &a in block {
                if a >= n {
                    return Err(Error::GroundSet(format!(
                        "action {a} outside 0..{n}, blocks must cover a contiguous range"
                    )));
                }
                if owner[a] != usize::MAX {
                    return Err(Error::GroundSet(format!(
                        "action {a} owned by agents {} and {i}",
                        owner[a]
                    )));
                }
                owner[a] = i;
            }
        }
        Ok(GroundSet { owner, blocks })
    }

    /// Consecutive blocks of the given sizes.
    pub fn contiguous(sizes: &[usize]) -> Result<Self> {
        let mut next = 0;
        let blocks = sizes
            .iter()
            .map(|&s| {
                let b: Vec<usize> = (next..next + s).collect();
                next += s;
                b
            })
            .collect();
        Self::from_blocks(blocks)
    }

    pub fn uniform(agents: usize, per_agent: usize) -> Result<Self> {
        Self::contiguous(&vec![per_agent; agents])
    }

    pub fn n(&self) -> usize {
        self.owner.len()
    }

    pub fn agents(&self) -> usize {
        self.blocks.len()
    }

    pub fn block(&self, agent: usize) -> &[usize] {
        &self.blocks[agent]
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn owner(&self, action: usize) -> usize {
        self.owner[action]
    }

    /// Number of joint one-action-per-agent choices, saturating.
    pub fn joint_choices(&self) -> usize {
        self.blocks
            .iter()
            .fold(1usize, |acc, b| acc.saturating_mul(b.len()))
    }
}

/// Probabilities in `[0,1]^n`. Feasibility for the partition relaxation is a
/// separate check because it depends on the ground set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefVector(Vec<f64>);

impl BeliefVector {
    pub fn new(x: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = x
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && (0.0..=1.0).contains(*v)))
        {
            return Err(Error::Domain(format!("coordinate {i} = {v} not in [0,1]")));
        }
        Ok(BeliefVector(x))
    }

    pub fn zeros(n: usize) -> Self {
        BeliefVector(vec![0.0; n])
    }

    /// `1/|V_i|` on every block: the common starting belief.
    pub fn uniform_blocks(ground: &GroundSet) -> Self {
        let mut x = vec![0.0; ground.n()];
        for block in ground.blocks() {
            let p = 1.0 / block.len() as f64;
            for &a in block {
                x[a] = p;
            }
        }
        BeliefVector(x)
    }

    /// Indicator vector of `set`.
    pub fn indicator(n: usize, set: &[usize]) -> Self {
        let mut x = vec![0.0; n];
        for &a in set {
            x[a] = 1.0;
        }
        BeliefVector(x)
    }

    pub(crate) fn from_raw(x: Vec<f64>) -> Self {
        BeliefVector(x)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn block_sum(&self, ground: &GroundSet, agent: usize) -> f64 {
        ground.block(agent).iter().map(|&a| self.0[a]).sum()
    }

    /// Box constraints and every block sum at most one, up to `tol`.
    pub fn is_feasible(&self, ground: &GroundSet, tol: f64) -> bool {
        self.0.len() == ground.n()
            && self.0.iter().all(|&v| v >= -tol && v <= 1.0 + tol)
            && (0..ground.agents()).all(|i| self.block_sum(ground, i) <= 1.0 + tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ground_set_partition_checks() {
        let g = GroundSet::contiguous(&[2, 3]).unwrap();
        assert_eq!(g.n(), 5);
        assert_eq!(g.block(1), &[2, 3, 4]);
        assert_eq!(g.owner(3), 1);
        assert_eq!(g.joint_choices(), 6);

        assert!(GroundSet::from_blocks(vec![vec![0, 1], vec![1]]).is_err());
        assert!(GroundSet::from_blocks(vec![vec![0], vec![]]).is_err());
        assert!(GroundSet::from_blocks(vec![vec![0], vec![2]]).is_err());
        assert!(GroundSet::from_blocks(vec![]).is_err());
        let g = GroundSet::from_blocks(vec![vec![2, 0], vec![1]]).unwrap();
        assert_eq!(g.owner(0), 0);
        assert_eq!(g.owner(1), 1);
    }

    #[test]
    fn marginal_gain_examples() {
        let f = Modular::new(vec![1.0, 2.0, 3.0]);
        assert_eq!(marginal_gain(&f, 2, &[0]).unwrap(), 3.0);
        assert_eq!(marginal_gain(&f, 0, &[0, 1]).unwrap(), 0.0);
        assert!(matches!(
            marginal_gain(&f, 3, &[]),
            Err(Error::InvalidAction { action: 3, n: 3 })
        ));
        assert!(marginal_gain(&f, 0, &[7]).is_err());

        let cov = WeightedCoverage::new(vec![vec![0], vec![1], vec![0, 1]], vec![1.0, 1.0]).unwrap();
        assert_eq!(marginal_gain(&cov, 2, &[0, 1]).unwrap(), 0.0);
        assert_eq!(marginal_gain(&cov, 2, &[0]).unwrap(), 1.0);
    }

    #[test]
    fn belief_feasibility() {
        let g = GroundSet::contiguous(&[2, 2]).unwrap();
        let x = BeliefVector::uniform_blocks(&g);
        assert_eq!(x.as_slice(), &[0.5, 0.5, 0.5, 0.5]);
        assert!(x.is_feasible(&g, 0.0));
        let y = BeliefVector::new(vec![0.7, 0.7, 0.0, 0.0]).unwrap();
        assert!(!y.is_feasible(&g, 1e-12));
        assert!(BeliefVector::new(vec![1.5]).is_err());
        assert!(BeliefVector::new(vec![f64::NAN]).is_err());
    }
}
