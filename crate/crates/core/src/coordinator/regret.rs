use crate::submod::{multilinear_exact, BeliefVector, GroundSet, SetFunction};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Largest number of tuples a brute-force oracle will enumerate.
pub const DEFAULT_ENUMERATION_CAP: usize = 100_000;

fn product_capped(sizes: impl Iterator<Item = usize>, cap: usize, what: &'static str) -> Result<usize> {
    let mut total: usize = 1;
    for s in sizes {
        total = total.saturating_mul(s);
        if total > cap {
            return Err(Error::Capability { what, size: total, limit: cap });
        }
    }
    Ok(total)
}

/// Exhaustive maximizer over "at most one action per agent".
///
/// Each agent's options are its actions in ascending order followed by
/// "none"; tuples are visited in lexicographic order and only a strictly
/// better value replaces the incumbent. Returns the chosen set (sorted) and
/// its value.
pub fn best_joint_action(f: &dyn SetFunction, ground: &GroundSet, cap: usize) -> Result<(Vec<usize>, f64)> {
    if f.ground_size() != ground.n() {
        return Err(Error::DimensionMismatch {
            expected: ground.n(),
            got: f.ground_size(),
        });
    }
    let blocks = ground.blocks();
    product_capped(blocks.iter().map(|b| b.len() + 1), cap, "optimum oracle")?;
    let mut idx = vec![0usize; blocks.len()];
    let mut best: Option<(Vec<usize>, f64)> = None;
    let mut set = Vec::with_capacity(blocks.len());
    loop {
        set.clear();
        set.extend(idx.iter().zip(blocks).filter_map(|(&k, b)| b.get(k).copied()));
        let v = f.value(&set);
        if best.as_ref().is_none_or(|(_, bv)| v > *bv) {
            best = Some((set.clone(), v));
        }
        // odometer, last agent fastest
        let mut pos = blocks.len();
        loop {
            if pos == 0 {
                let (mut s, v) = best.expect("at least one tuple");
                s.sort_unstable();
                return Ok((s, v));
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] <= blocks[pos].len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretReport {
    pub alpha: f64,
    /// `α Σ f_t(A*_t) − Σ f_t(∪ a_{t,i})`.
    pub regret: f64,
    /// `Σ_t |A*_{t+1} Δ A*_t|`.
    pub c_t: f64,
    pub optima: Vec<Vec<usize>>,
    pub optimal_values: Vec<f64>,
    /// Regret accumulated through each round.
    pub cumulative: Vec<f64>,
}

/// Dynamic α-regret of `utilities` against per-round brute-force optima.
/// Consecutive identical objectives (same allocation) reuse the optimum.
pub fn compute_dynamic_regret(
    utilities: &[f64],
    objectives: &[Arc<dyn SetFunction>],
    ground: &GroundSet,
    alpha: f64,
    cap: usize,
) -> Result<RegretReport> {
    if utilities.len() != objectives.len() {
        return Err(Error::DimensionMismatch {
            expected: objectives.len(),
            got: utilities.len(),
        });
    }
    let mut optima: Vec<Vec<usize>> = Vec::with_capacity(objectives.len());
    let mut values = Vec::with_capacity(objectives.len());
    for (t, f) in objectives.iter().enumerate() {
        if t > 0 && Arc::ptr_eq(f, &objectives[t - 1]) {
            optima.push(optima[t - 1].clone());
            values.push(values[t - 1]);
            continue;
        }
        let (set, v) = best_joint_action(f.as_ref(), ground, cap)?;
        optima.push(set);
        values.push(v);
    }
    let c_t = optima
        .windows(2)
        .map(|w| symmetric_difference(&w[0], &w[1]) as f64)
        .sum();
    let mut acc = 0.0;
    let cumulative: Vec<f64> = values
        .iter()
        .zip(utilities)
        .map(|(opt, u)| {
            acc += alpha * opt - u;
            acc
        })
        .collect();
    Ok(RegretReport {
        alpha,
        regret: cumulative.last().copied().unwrap_or(0.0),
        c_t,
        optima,
        optimal_values: values,
        cumulative,
    })
}

fn symmetric_difference(a: &[usize], b: &[usize]) -> usize {
    a.iter().filter(|x| !b.contains(x)).count() + b.iter().filter(|x| !a.contains(x)).count()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundingCheck {
    /// `E f(∪ a_i)` under block-normalized sampling.
    pub lhs: f64,
    /// `F(Σ_i x_i ⊙ 1_{V_i})`.
    pub rhs: f64,
    pub holds: bool,
}

/// Both sides of the rounding inequality, exactly: the left by enumerating
/// every joint choice, the right by the exact multilinear extension.
pub fn verify_rounding_inequality(
    f: &dyn SetFunction,
    ground: &GroundSet,
    beliefs: &[BeliefVector],
    cap: usize,
) -> Result<RoundingCheck> {
    if beliefs.len() != ground.agents() {
        return Err(Error::DimensionMismatch {
            expected: ground.agents(),
            got: beliefs.len(),
        });
    }
    if f.ground_size() != ground.n() {
        return Err(Error::DimensionMismatch {
            expected: ground.n(),
            got: f.ground_size(),
        });
    }
    product_capped(ground.blocks().iter().map(Vec::len), cap, "rounding oracle")?;

    let mut merged = vec![0.0; ground.n()];
    let mut probs = Vec::with_capacity(ground.agents());
    for (i, (x, block)) in beliefs.iter().zip(ground.blocks()).enumerate() {
        if x.len() != ground.n() {
            return Err(Error::DimensionMismatch { expected: ground.n(), got: x.len() });
        }
        let sum: f64 = block.iter().map(|&a| x.as_slice()[a]).sum();
        if !(sum > 0.0) {
            return Err(Error::Domain(format!("agent {i} has an all-zero block")));
        }
        for &a in block {
            merged[a] = x.as_slice()[a];
        }
        probs.push(block.iter().map(|&a| x.as_slice()[a] / sum).collect::<Vec<_>>());
    }
    let rhs = multilinear_exact(f, &merged)?;

    let blocks = ground.blocks();
    let mut idx = vec![0usize; blocks.len()];
    let mut lhs = 0.0;
    let mut set = vec![0; blocks.len()];
    'outer: loop {
        let mut p = 1.0;
        for (k, (&j, b)) in idx.iter().zip(blocks).enumerate() {
            set[k] = b[j];
            p *= probs[k][j];
        }
        if p > 0.0 {
            lhs += p * f.value(&set);
        }
        let mut pos = blocks.len();
        loop {
            if pos == 0 {
                break 'outer;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < blocks[pos].len() {
                break;
            }
            idx[pos] = 0;
        }
    }
    Ok(RoundingCheck {
        lhs,
        rhs,
        holds: lhs >= rhs - 1e-9,
    })
}
