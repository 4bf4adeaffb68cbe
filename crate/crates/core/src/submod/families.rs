//! Built-in monotone submodular families.

use super::SetFunction;
use crate::rng::Stream;
use crate::{Error, Result};
use rand::Rng;

/// `f(A) = Σ_{a∈A} w_a` with non-negative weights. Curvature zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Modular {
    weights: Vec<f64>,
}

impl Modular {
    pub fn new(weights: Vec<f64>) -> Self {
        assert!(
            weights.iter().all(|w| *w >= 0.0 && w.is_finite()),
            "modular weights must be finite and non-negative"
        );
        Modular { weights }
    }

    pub fn random(n: usize, rng: &mut Stream) -> Self {
        Modular::new((0..n).map(|_| rng.random_range(0.1..2.0)).collect())
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

impl SetFunction for Modular {
    fn ground_size(&self) -> usize {
        self.weights.len()
    }

    fn value(&self, set: &[usize]) -> f64 {
        set.iter().map(|&a| self.weights[a]).sum()
    }

    fn singleton(&self, a: usize) -> f64 {
        self.weights[a]
    }
}

/// Each action covers a subset of weighted items; `f(A)` is the total weight
/// of the items covered by at least one action in `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedCoverage {
    covers: Vec<Vec<usize>>,
    item_weights: Vec<f64>,
}

impl WeightedCoverage {
    pub fn new(covers: Vec<Vec<usize>>, item_weights: Vec<f64>) -> Result<Self> {
        let m = item_weights.len();
        if item_weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Domain("item weights must be finite and non-negative".into()));
        }
        for (a, items) in covers.iter().enumerate() {
            if let Some(&u) = items.iter().find(|&&u| u >= m) {
                return Err(Error::Domain(format!(
                    "action {a} covers item {u} but only {m} items exist"
                )));
            }
        }
        Ok(WeightedCoverage {
            covers,
            item_weights,
        })
    }

    /// Random instance: each action covers each item with probability `density`
    /// (at least one item), item weights uniform in `[0.5, 2)`.
    pub fn random(n: usize, items: usize, density: f64, rng: &mut Stream) -> Self {
        let items = items.max(1);
        let covers = (0..n)
            .map(|_| {
                let mut c: Vec<usize> = (0..items).filter(|_| rng.random_bool(density)).collect();
                if c.is_empty() {
                    c.push(rng.random_range(0..items));
                }
                c
            })
            .collect();
        let weights = (0..items).map(|_| rng.random_range(0.5..2.0)).collect();
        WeightedCoverage {
            covers,
            item_weights: weights,
        }
    }

    pub fn items(&self) -> usize {
        self.item_weights.len()
    }
}

impl SetFunction for WeightedCoverage {
    fn ground_size(&self) -> usize {
        self.covers.len()
    }

    fn value(&self, set: &[usize]) -> f64 {
        let mut covered = vec![false; self.item_weights.len()];
        let mut total = 0.0;
        for &a in set {
            for &u in &self.covers[a] {
                if !covered[u] {
                    covered[u] = true;
                    total += self.item_weights[u];
                }
            }
        }
        total
    }
}

/// Facility-location objective `f(A) = Σ_j max_{a∈A} b[a][j]`, zero on the
/// empty set. The tracking objective has this shape with `b = 1/distance`.
#[derive(Debug, Clone, PartialEq)]
pub struct FacilityLocation {
    /// Row per action, column per customer.
    benefit: Vec<Vec<f64>>,
    customers: usize,
}

impl FacilityLocation {
    pub fn new(benefit: Vec<Vec<f64>>, customers: usize) -> Result<Self> {
        for (a, row) in benefit.iter().enumerate() {
            if row.len() != customers {
                return Err(Error::DimensionMismatch {
                    expected: customers,
                    got: row.len(),
                });
            }
            if row.iter().any(|b| !(b.is_finite() && *b >= 0.0)) {
                return Err(Error::Domain(format!(
                    "benefits of action {a} must be finite and non-negative"
                )));
            }
        }
        Ok(FacilityLocation { benefit, customers })
    }

    pub fn random(n: usize, customers: usize, rng: &mut Stream) -> Self {
        let benefit = (0..n)
            .map(|_| (0..customers).map(|_| rng.random::<f64>()).collect())
            .collect();
        FacilityLocation { benefit, customers }
    }

    pub fn customers(&self) -> usize {
        self.customers
    }

    pub fn benefit(&self, action: usize, customer: usize) -> f64 {
        self.benefit[action][customer]
    }
}

impl SetFunction for FacilityLocation {
    fn ground_size(&self) -> usize {
        self.benefit.len()
    }

    fn value(&self, set: &[usize]) -> f64 {
        if set.is_empty() {
            return 0.0;
        }
        (0..self.customers)
            .map(|j| {
                set.iter()
                    .map(|&a| self.benefit[a][j])
                    .fold(0.0, f64::max)
            })
            .sum()
    }

    fn singleton(&self, a: usize) -> f64 {
        self.benefit[a].iter().sum()
    }
}
