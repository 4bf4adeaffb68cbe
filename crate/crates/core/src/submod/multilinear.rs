//! Exact and Monte-Carlo evaluation of the multilinear extension
//! `F(x) = E_{R~x} f(R)`.

use super::{SetFunction, DEFAULT_EXACT_LIMIT, HARD_EXACT_LIMIT};
use crate::rng::Stream;
use crate::{Error, Result};
use rand::Rng;

fn check_point(x: &[f64], n: usize) -> Result<()> {
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x.len(),
        });
    }
    if let Some((i, v)) = x
        .iter()
        .enumerate()
        .find(|(_, v)| !(v.is_finite() && (0.0..=1.0).contains(*v)))
    {
        return Err(Error::Domain(format!("x[{i}] = {v} not in [0,1]")));
    }
    Ok(())
}

/// Every subset value of a small set function, indexed by bitmask
/// (bit `i` set means element `i` is in the set).
#[derive(Debug, Clone)]
pub struct SubsetTable {
    n: usize,
    values: Vec<f64>,
}

impl SubsetTable {
    /// Enumerates all `2^n` subsets; fails when `n` exceeds `limit`
    /// (itself clamped to [`HARD_EXACT_LIMIT`]).
    pub fn build(f: &dyn SetFunction, limit: usize) -> Result<Self> {
        let n = f.ground_size();
        let limit = limit.min(HARD_EXACT_LIMIT);
        if n > limit {
            return Err(Error::Capability {
                what: "subset enumeration",
                size: n,
                limit,
            });
        }
        let mut members = Vec::with_capacity(n);
        let values = (0..1usize << n)
            .map(|mask| {
                members.clear();
                members.extend((0..n).filter(|i| mask >> i & 1 == 1));
                f.value(&members)
            })
            .collect();
        Ok(SubsetTable { n, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn value(&self, mask: usize) -> f64 {
        self.values[mask]
    }

    /// Product distribution of `R ~ x` over bitmasks.
    fn distribution(x: &[f64]) -> Vec<f64> {
        let mut probs = Vec::with_capacity(1 << x.len());
        probs.push(1.0);
        for (i, &p) in x.iter().enumerate() {
            let half = 1usize << i;
            probs.resize(2 * half, 0.0);
            for mask in 0..half {
                let q = probs[mask];
                probs[mask] = q * (1.0 - p);
                probs[mask | half] = q * p;
            }
        }
        probs
    }

    /// `F(x)`. `x` must have length `n`.
    pub fn multilinear(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.n);
        Self::distribution(x)
            .iter()
            .zip(&self.values)
            .map(|(p, v)| p * v)
            .sum()
    }

    /// `∂F/∂x_i = F(x; x_i = 1) - F(x; x_i = 0)`.
    pub fn partial(&self, x: &[f64], i: usize) -> f64 {
        let mut y = x.to_vec();
        y[i] = 0.0;
        let probs = Self::distribution(&y);
        let bit = 1usize << i;
        (0..1usize << self.n)
            .filter(|m| m & bit == 0)
            .map(|m| probs[m] * (self.values[m | bit] - self.values[m]))
            .sum()
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.partial(x, i)).collect()
    }
}

/// Exact multilinear extension by enumeration (default size limit).
pub fn multilinear_exact(f: &dyn SetFunction, x: &[f64]) -> Result<f64> {
    check_point(x, f.ground_size())?;
    Ok(SubsetTable::build(f, DEFAULT_EXACT_LIMIT)?.multilinear(x))
}

/// Exact partial derivative of the multilinear extension along coordinate `i`.
pub fn partial_derivative_exact(f: &dyn SetFunction, x: &[f64], i: usize) -> Result<f64> {
    let n = f.ground_size();
    check_point(x, n)?;
    if i >= n {
        return Err(Error::InvalidAction { action: i, n });
    }
    Ok(SubsetTable::build(f, DEFAULT_EXACT_LIMIT)?.partial(x, i))
}

/// Draws `R ~ x`: each element independently with probability `x_a`.
pub fn sample_random_set(x: &[f64], rng: &mut Stream) -> Vec<usize> {
    x.iter()
        .enumerate()
        .filter(|(_, &p)| rng.random::<f64>() < p)
        .map(|(a, _)| a)
        .collect()
}

/// Sample mean and sample standard deviation of `f(R)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_dev: f64,
    pub samples: usize,
}

impl McEstimate {
    pub fn std_error(&self) -> f64 {
        self.std_dev / (self.samples as f64).sqrt()
    }
}

/// Unbiased Monte-Carlo estimate of `F(x)`.
pub fn multilinear_mc(
    f: &dyn SetFunction,
    x: &[f64],
    samples: usize,
    rng: &mut Stream,
) -> Result<McEstimate> {
    check_point(x, f.ground_size())?;
    if samples == 0 {
        return Err(Error::param("samples", "must be at least 1"));
    }
    // Welford
    let (mut mean, mut m2) = (0.0, 0.0);
    for k in 1..=samples {
        let v = f.value(&sample_random_set(x, rng));
        let d = v - mean;
        mean += d / k as f64;
        m2 += d * (v - mean);
    }
    let std_dev = if samples > 1 {
        (m2 / (samples - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(McEstimate {
        mean,
        std_dev,
        samples,
    })
}
