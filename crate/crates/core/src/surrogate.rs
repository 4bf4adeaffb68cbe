//! The curvature-weighted surrogate gradient
//! `∇F^s(x) = ∫_0^1 e^{c(z-1)} ∇F(z·x) dz` and its one-sample estimator.
//!
//! The estimator draws `z` with density proportional to `e^{c(z-1)}` on
//! `[0,1]`, then `R ~ z·x`, and returns `((1-e^{-c})/c) (f(R∪{a}) - f(R∖{a}))`
//! for each requested coordinate `a`. The `c → 0` limit (uniform `z`, unit
//! scale) is used for modular objectives.

use crate::rng::Stream;
use crate::submod::{sample_random_set, SetFunction, SubsetTable, DEFAULT_EXACT_LIMIT};
use crate::{Error, Result};
use rand::Rng;
use serde::Serialize;

/// Below this the closed forms are replaced by their `c → 0` limits.
const C_EPS: f64 = 1e-12;

/// `(1 - e^{-c}) / c`, equal to 1 at `c = 0`.
pub fn surrogate_scale(c: f64) -> f64 {
    if c < C_EPS {
        1.0
    } else {
        -(-c).exp_m1() / c
    }
}

/// The sampling law of `z` for a fixed curvature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurrogateSampler {
    c: f64,
    scale: f64,
}

impl SurrogateSampler {
    pub fn new(c: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&c) {
            return Err(Error::param("c", format!("curvature {c} not in [0,1]")));
        }
        Ok(SurrogateSampler {
            c,
            scale: surrogate_scale(c),
        })
    }

    pub fn curvature(&self) -> f64 {
        self.c
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// `P(Z <= b) = (e^{c(b-1)} - e^{-c}) / (1 - e^{-c})`.
    pub fn cdf(&self, b: f64) -> f64 {
        let b = b.clamp(0.0, 1.0);
        if self.c < C_EPS {
            return b;
        }
        // numerator and denominator both written with expm1 for small c
        ((self.c * (b - 1.0)).exp_m1() - (-self.c).exp_m1()) / -(-self.c).exp_m1()
    }

    /// Inverse CDF: `b = 1 + ln(e^{-c} + u(1 - e^{-c})) / c`.
    pub fn sample_z(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        if self.c < C_EPS {
            return u;
        }
        // e^{-c} + u(1-e^{-c}) = 1 + (1-u)·expm1(-c)
        let b = 1.0 + ((1.0 - u) * (-self.c).exp_m1()).ln_1p() / self.c;
        b.clamp(0.0, 1.0)
    }

    pub fn draw(&self, rng: &mut Stream) -> f64 {
        self.sample_z(rng.random::<f64>())
    }
}

/// Free-function form of [`SurrogateSampler::sample_z`].
pub fn sample_z(c: f64, u: f64) -> Result<f64> {
    Ok(SurrogateSampler::new(c)?.sample_z(u))
}

/// Which coordinates to estimate.
#[derive(Debug, Clone, Copy)]
pub enum Coordinates<'a> {
    All,
    /// Only the actions owned by `agent`.
    Block { agent: usize, actions: &'a [usize] },
}

/// One draw of the surrogate gradient estimator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradientEstimate {
    /// Owning agent for block-restricted estimates.
    pub agent: Option<usize>,
    /// Coordinates the values refer to; coordinates not listed were not estimated.
    pub coords: Vec<usize>,
    pub values: Vec<f64>,
    pub z: f64,
    pub sampled_set: Vec<usize>,
}

impl GradientEstimate {
    /// Scatters the estimate into a dense vector (unestimated coordinates are 0).
    pub fn to_dense(&self, n: usize) -> Vec<f64> {
        let mut g = vec![0.0; n];
        for (&a, &v) in self.coords.iter().zip(&self.values) {
            g[a] = v;
        }
        g
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Draws `z`, then `R ~ z·x`, and evaluates the scaled marginals.
pub fn estimate_surrogate_gradient(
    f: &dyn SetFunction,
    x: &[f64],
    sampler: &SurrogateSampler,
    coords: Coordinates<'_>,
    rng: &mut Stream,
) -> Result<GradientEstimate> {
    let n = f.ground_size();
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x.len(),
        });
    }
    let z = sampler.draw(rng);
    let scaled: Vec<f64> = x.iter().map(|&v| z * v).collect();
    let set = sample_random_set(&scaled, rng);

    let (agent, list): (Option<usize>, Vec<usize>) = match coords {
        Coordinates::All => (None, (0..n).collect()),
        Coordinates::Block { agent, actions } => {
            if let Some(&bad) = actions.iter().find(|&&a| a >= n) {
                return Err(Error::InvalidAction { action: bad, n });
            }
            (Some(agent), actions.to_vec())
        }
    };

    let mut scratch = Vec::with_capacity(set.len() + 1);
    let values = list
        .iter()
        .map(|&a| {
            scratch.clear();
            scratch.extend(set.iter().copied().filter(|&b| b != a));
            let without = f.value(&scratch);
            scratch.push(a);
            let with = f.value(&scratch);
            sampler.scale * (with - without)
        })
        .collect();
    Ok(GradientEstimate {
        agent,
        coords: list,
        values,
        z,
        sampled_set: set,
    })
}

/// Adaptive Simpson quadrature of a vector-valued integrand on `[a, b]`,
/// with the error controlled in the max norm.
fn adaptive_simpson<F>(h: &F, a: f64, b: f64, tol: f64) -> Vec<f64>
where
    F: Fn(f64) -> Vec<f64>,
{
    fn simpson(fa: &[f64], fm: &[f64], fb: &[f64], width: f64) -> Vec<f64> {
        fa.iter()
            .zip(fm)
            .zip(fb)
            .map(|((x, y), z)| width / 6.0 * (x + 4.0 * y + z))
            .collect()
    }

    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> Vec<f64>>(
        h: &F,
        a: f64,
        b: f64,
        fa: &[f64],
        fm: &[f64],
        fb: &[f64],
        whole: &[f64],
        tol: f64,
        depth: usize,
    ) -> Vec<f64> {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let flm = h(lm);
        let frm = h(rm);
        let left = simpson(fa, &flm, fm, m - a);
        let right = simpson(fm, &frm, fb, b - m);
        let err = left
            .iter()
            .zip(&right)
            .zip(whole)
            .map(|((l, r), w)| (l + r - w).abs())
            .fold(0.0, f64::max);
        if depth == 0 || err <= 15.0 * tol {
            return left
                .iter()
                .zip(&right)
                .zip(whole)
                .map(|((l, r), w)| l + r + (l + r - w) / 15.0)
                .collect();
        }
        let mut out = recurse(h, a, m, fa, &flm, fm, &left, tol / 2.0, depth - 1);
        let rest = recurse(h, m, b, fm, &frm, fb, &right, tol / 2.0, depth - 1);
        out.iter_mut().zip(rest).for_each(|(o, r)| *o += r);
        out
    }

    // Four initial panels so a lucky coarse estimate cannot stop the recursion early.
    let panels = 4;
    let width = (b - a) / panels as f64;
    let mut total: Option<Vec<f64>> = None;
    for k in 0..panels {
        let (lo, hi) = (a + k as f64 * width, a + (k + 1) as f64 * width);
        let (fa, fm, fb) = (h(lo), h(0.5 * (lo + hi)), h(hi));
        let whole = simpson(&fa, &fm, &fb, hi - lo);
        let part = recurse(h, lo, hi, &fa, &fm, &fb, &whole, tol / panels as f64, 40);
        total = Some(match total {
            None => part,
            Some(mut t) => {
                t.iter_mut().zip(part).for_each(|(x, y)| *x += y);
                t
            }
        });
    }
    total.unwrap_or_default()
}

/// `∇F^s(x)` from a prebuilt subset table.
pub fn surrogate_gradient_from_table(table: &SubsetTable, x: &[f64], c: f64, quad_tol: f64) -> Vec<f64> {
    let c = c.max(0.0);
    let integrand = |z: f64| -> Vec<f64> {
        let w = (c * (z - 1.0)).exp();
        let zx: Vec<f64> = x.iter().map(|&v| z * v).collect();
        table.gradient(&zx).into_iter().map(|g| w * g).collect()
    };
    adaptive_simpson(&integrand, 0.0, 1.0, quad_tol)
}

/// Exact surrogate gradient: `2^n` enumeration for `∇F`, adaptive quadrature in `z`.
pub fn surrogate_gradient_exact(
    f: &dyn SetFunction,
    x: &[f64],
    c: f64,
    quad_tol: f64,
) -> Result<Vec<f64>> {
    SurrogateSampler::new(c)?;
    if x.len() != f.ground_size() {
        return Err(Error::DimensionMismatch {
            expected: f.ground_size(),
            got: x.len(),
        });
    }
    let table = SubsetTable::build(f, DEFAULT_EXACT_LIMIT)?;
    Ok(surrogate_gradient_from_table(&table, x, c, quad_tol))
}

/// Both sides of `<y - x, ∇F^s(x)> >= ((1-e^{-c})/c) F(y) - F(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurrogateCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Quadrature tolerance used by [`check_surrogate_inequality`].
pub const CHECK_QUAD_TOL: f64 = 1e-12;

pub fn check_surrogate_inequality(
    f: &dyn SetFunction,
    x: &[f64],
    y: &[f64],
    c: f64,
) -> Result<SurrogateCheck> {
    SurrogateSampler::new(c)?;
    let n = f.ground_size();
    for v in [x, y] {
        if v.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: v.len(),
            });
        }
        if v.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Domain("points must lie in [0,1]^n".into()));
        }
    }
    let table = SubsetTable::build(f, DEFAULT_EXACT_LIMIT)?;
    let grad = surrogate_gradient_from_table(&table, x, c, CHECK_QUAD_TOL);
    let lhs: f64 = y
        .iter()
        .zip(x)
        .zip(&grad)
        .map(|((yi, xi), g)| (yi - xi) * g)
        .sum();
    let rhs = surrogate_scale(c) * table.multilinear(y) - table.multilinear(x);
    Ok(SurrogateCheck {
        lhs,
        rhs,
        holds: lhs >= rhs - 1e-9,
    })
}
