//! Total curvature `c = 1 - min_{S, e∉S} (f(S∪{e}) - f(S)) / f({e})`.

use super::{SetFunction, SubsetTable, DEFAULT_EXACT_LIMIT};
use crate::rng::Stream;
use crate::Result;
use rand::Rng;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum CurvatureMethod {
    Exact,
    /// The minimum ratio was taken over sampled `(S, e)` pairs only, so the
    /// reported curvature is a lower bound on the true one.
    SampledLowerBound { samples: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Curvature {
    pub value: f64,
    pub method: CurvatureMethod,
}

impl Curvature {
    pub fn is_lower_bound(&self) -> bool {
        matches!(self.method, CurvatureMethod::SampledLowerBound { .. })
    }
}

/// Curvature of a monotone submodular `f`.
///
/// Elements with `f({e}) = 0` are skipped. If every singleton is zero the
/// function is identically zero and the curvature is reported as 0.
///
/// Exact enumeration is used when `n <= DEFAULT_EXACT_LIMIT`; larger ground
/// sets need `sampling = Some((budget, rng))` and yield a lower bound.
pub fn curvature(
    f: &dyn SetFunction,
    sampling: Option<(usize, &mut Stream)>,
) -> Result<Curvature> {
    let n = f.ground_size();
    let singles: Vec<f64> = (0..n).map(|e| f.singleton(e)).collect();

    if n <= DEFAULT_EXACT_LIMIT {
        let table = SubsetTable::build(f, DEFAULT_EXACT_LIMIT)?;
        let mut min_ratio = f64::INFINITY;
        for (e, &single) in singles.iter().enumerate() {
            if single <= 0.0 {
                continue;
            }
            let bit = 1usize << e;
            for s in (0..1usize << n).filter(|s| s & bit == 0) {
                let ratio = (table.value(s | bit) - table.value(s)) / single;
                min_ratio = min_ratio.min(ratio);
            }
        }
        return Ok(Curvature {
            value: finish(min_ratio),
            method: CurvatureMethod::Exact,
        });
    }

    let Some((budget, rng)) = sampling else {
        return Err(crate::Error::Capability {
            what: "exact curvature",
            size: n,
            limit: DEFAULT_EXACT_LIMIT,
        });
    };
    let positive: Vec<usize> = (0..n).filter(|&e| singles[e] > 0.0).collect();
    let mut min_ratio = f64::INFINITY;
    if !positive.is_empty() {
        for _ in 0..budget {
            let e = positive[rng.random_range(0..positive.len())];
            // random subset size, then a uniform set of that size excluding e
            let keep = rng.random::<f64>();
            let s: Vec<usize> = (0..n)
                .filter(|&a| a != e && rng.random::<f64>() < keep)
                .collect();
            let mut with = s.clone();
            with.push(e);
            let ratio = (f.value(&with) - f.value(&s)) / singles[e];
            min_ratio = min_ratio.min(ratio);
        }
        // the full complement is the most informative single probe
        let e = positive[0];
        let s: Vec<usize> = (0..n).filter(|&a| a != e).collect();
        let ratio = (f.value(&(0..n).collect::<Vec<_>>()) - f.value(&s)) / singles[e];
        min_ratio = min_ratio.min(ratio);
    }
    Ok(Curvature {
        value: finish(min_ratio),
        method: CurvatureMethod::SampledLowerBound { samples: budget },
    })
}

fn finish(min_ratio: f64) -> f64 {
    if min_ratio.is_infinite() {
        0.0
    } else {
        (1.0 - min_ratio).clamp(0.0, 1.0)
    }
}
