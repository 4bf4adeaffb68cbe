//! Bregman geometry and the per-block mirror ascent step
//! `argmax_{b ∈ [0,1]^m, Σb <= 1} <g, b> - D(b, y) / η`.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Geometry {
    /// Generator `x²/2`.
    Euclidean,
    /// Generator `x ln x` (generalized KL divergence).
    Entropic,
}

/// Coordinatewise-decomposed Bregman divergence `D(x, y)`.
pub fn bregman_divergence(geometry: Geometry, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: y.len(),
            got: x.len(),
        });
    }
    match geometry {
        Geometry::Euclidean => Ok(0.5 * x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()),
        Geometry::Entropic => x.iter().zip(y).try_fold(0.0, |acc, (&a, &b)| {
            if a < 0.0 || b < 0.0 {
                return Err(Error::Domain("entropic divergence needs non-negative points".into()));
            }
            let term = if a == 0.0 {
                b
            } else if b == 0.0 {
                return Err(Error::Domain(format!("y coordinate is 0 where x = {a} > 0")));
            } else {
                a * (a / b).ln() - a + b
            };
            Ok(acc + term)
        }),
    }
}

/// Euclidean projection together with the multiplier of the sum constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct CappedSimplexProjection {
    pub point: Vec<f64>,
    /// `λ >= 0` with `point = clamp(v - λ, 0, 1)`; zero when the sum constraint is slack.
    pub lambda: f64,
}

/// Projects `v` onto `{b ∈ [0,1]^m : Σ b <= 1}`.
pub fn euclidean_capped_simplex_project(v: &[f64]) -> Vec<f64> {
    project_capped_simplex(v).point
}

pub fn project_capped_simplex(v: &[f64]) -> CappedSimplexProjection {
    let clipped_sum: f64 = v.iter().map(|x| x.clamp(0.0, 1.0)).sum();
    if clipped_sum <= 1.0 {
        return CappedSimplexProjection {
            point: v.iter().map(|x| x.clamp(0.0, 1.0)).collect(),
            lambda: 0.0,
        };
    }
    // h(λ) = Σ clamp(v_a - λ, 0, 1) is non-increasing and piecewise linear with
    // kinks at v_a - 1 and v_a. h(0) > 1 and h(max v) = 0.
    let h = |lambda: f64| -> f64 { v.iter().map(|x| (x - lambda).clamp(0.0, 1.0)).sum() };
    let mut breaks: Vec<f64> = v
        .iter()
        .flat_map(|&x| [x - 1.0, x])
        .filter(|&b| b > 0.0)
        .collect();
    breaks.push(0.0);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    // last breakpoint with h >= 1
    let (mut lo, mut hi) = (0usize, breaks.len() - 1);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if h(breaks[mid]) >= 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (a, b) = (breaks[lo], breaks[hi]);
    let (ha, hb) = (h(a), h(b));
    let lambda = if ha - hb > 0.0 {
        a + (ha - 1.0) * (b - a) / (ha - hb)
    } else {
        a
    };
    CappedSimplexProjection {
        point: v.iter().map(|x| (x - lambda).clamp(0.0, 1.0)).collect(),
        lambda,
    }
}

/// Closed-form KL step: `u = y ⊙ exp(η g)`, returned as is when `Σu <= 1`
/// and normalized otherwise.
pub fn entropic_update(y_block: &[f64], g_block: &[f64], eta: f64) -> Result<Vec<f64>> {
    check_step(y_block, g_block, eta)?;
    if y_block.iter().any(|&y| !(y >= 0.0)) {
        return Err(Error::Domain("entropic update needs non-negative y".into()));
    }
    let u: Vec<f64> = y_block
        .iter()
        .zip(g_block)
        .map(|(y, g)| y * (eta * g).exp())
        .collect();
    let total: f64 = u.iter().sum();
    if total.is_finite() && total <= 1.0 {
        return Ok(u);
    }
    // normalize in log space with a shared max shift
    let logs: Vec<f64> = y_block
        .iter()
        .zip(g_block)
        .map(|(&y, &g)| if y > 0.0 { y.ln() + eta * g } else { f64::NEG_INFINITY })
        .collect();
    let shift = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if shift == f64::NEG_INFINITY {
        return Err(Error::Domain("entropic update on an all-zero block".into()));
    }
    let e: Vec<f64> = logs.iter().map(|l| (l - shift).exp()).collect();
    let z: f64 = e.iter().sum();
    Ok(e.into_iter().map(|v| v / z).collect())
}

/// One block of the mirror ascent step in the chosen geometry.
pub fn mirror_update(geometry: Geometry, y_block: &[f64], g_block: &[f64], eta: f64) -> Result<Vec<f64>> {
    check_step(y_block, g_block, eta)?;
    match geometry {
        Geometry::Euclidean => {
            let v: Vec<f64> = y_block.iter().zip(g_block).map(|(y, g)| y + eta * g).collect();
            Ok(euclidean_capped_simplex_project(&v))
        }
        Geometry::Entropic => entropic_update(y_block, g_block, eta),
    }
}

fn check_step(y: &[f64], g: &[f64], eta: f64) -> Result<()> {
    if y.len() != g.len() {
        return Err(Error::DimensionMismatch {
            expected: y.len(),
            got: g.len(),
        });
    }
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::param("eta", format!("step size {eta} must be positive")));
    }
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite gradient".into()));
    }
    Ok(())
}
