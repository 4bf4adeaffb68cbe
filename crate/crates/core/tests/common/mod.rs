//! Independent brute-force and numeric oracles shared by integration tests.
//! Nothing here calls into the library's own math.

#![allow(dead_code)]

use maosm_core::submod::SetFunction;

/// `f` on every subset, indexed by bitmask.
pub fn subset_values(f: &dyn SetFunction) -> Vec<f64> {
    let n = f.ground_size();
    (0..1usize << n)
        .map(|mask| {
            let set: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            f.value(&set)
        })
        .collect()
}

fn mask_prob(x: &[f64], mask: usize) -> f64 {
    x.iter()
        .enumerate()
        .map(|(i, &p)| if mask >> i & 1 == 1 { p } else { 1.0 - p })
        .product()
}

/// `F(x) = Σ_S f(S) Π_{i∈S} x_i Π_{i∉S} (1-x_i)`.
pub fn multilinear(values: &[f64], x: &[f64]) -> f64 {
    (0..values.len()).map(|m| values[m] * mask_prob(x, m)).sum()
}

/// `∂F/∂x_i = E[f(R ∪ i) - f(R \ i)]`.
pub fn partial(values: &[f64], x: &[f64], i: usize) -> f64 {
    let bit = 1usize << i;
    let mut rest = x.to_vec();
    rest[i] = 0.0;
    (0..values.len())
        .filter(|m| m & bit == 0)
        .map(|m| mask_prob(&rest, m) * (values[m | bit] - values[m]))
        .sum()
}

/// Gauss–Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(k: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(k);
    for j in 0..k {
        let mut z = (std::f64::consts::PI * (j as f64 + 0.75) / (k as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for m in 2..=k {
                let p2 = ((2 * m - 1) as f64 * z * p1 - (m - 1) as f64 * p0) / m as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = k as f64 * (z * p1 - p0) / (z * z - 1.0);
            let step = p1 / dp;
            z -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        out.push((0.5 * (z + 1.0), 0.5 * w));
    }
    out
}

/// `∫_0^1 e^{c(z-1)} ∇F(z x) dz` by 48-point Gauss–Legendre on exact partials.
pub fn surrogate_gradient(values: &[f64], x: &[f64], c: f64) -> Vec<f64> {
    let nodes = gauss_legendre(48);
    let n = x.len();
    let mut g = vec![0.0; n];
    for &(z, w) in &nodes {
        let zx: Vec<f64> = x.iter().map(|v| z * v).collect();
        let weight = w * (c * (z - 1.0)).exp();
        for (i, gi) in g.iter_mut().enumerate() {
            *gi += weight * partial(values, &zx, i);
        }
    }
    g
}

/// `1 - min_{S, e∉S, f(e)>0} (f(S+e) - f(S)) / f(e)`, clamped to `[0,1]`.
pub fn curvature(values: &[f64], n: usize) -> f64 {
    let mut ratio = f64::INFINITY;
    for e in 0..n {
        let bit = 1 << e;
        let single = values[bit];
        if single <= 0.0 {
            continue;
        }
        for s in (0..values.len()).filter(|s| s & bit == 0) {
            ratio = ratio.min((values[s | bit] - values[s]) / single);
        }
    }
    if ratio.is_finite() { (1.0 - ratio).clamp(0.0, 1.0) } else { 0.0 }
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-14 * (1.0 + a.abs() + b.abs()) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Numeric minimizer of `<z, b> + Σ (b ln(b/y) - b + y)` over
/// `{b ∈ [0,1]^m : Σ b ≤ 1}`: golden-section search per coordinate for a
/// fixed multiplier `μ` on the sum constraint, and bisection on `μ`.
pub fn kl_constrained_minimizer(z: &[f64], y: &[f64]) -> Vec<f64> {
    let solve = |mu: f64| -> Vec<f64> {
        z.iter()
            .zip(y)
            .map(|(&zi, &yi)| {
                let phi = |b: f64| {
                    let kl = if b > 0.0 { b * (b / yi).ln() - b + yi } else { yi };
                    (zi + mu) * b + kl
                };
                golden_section(phi, 0.0, 1.0)
            })
            .collect()
    };
    let b0 = solve(0.0);
    if b0.iter().sum::<f64>() <= 1.0 {
        return b0;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while solve(hi).iter().sum::<f64>() > 1.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if solve(mid).iter().sum::<f64>() > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    solve(hi)
}

pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Closest point to `v` among a regular grid of the capped simplex (when
/// `m ≤ 3`) plus `cloud` random feasible points; returns its squared distance.
pub fn best_feasible_distance(v: &[f64], cloud: &[Vec<f64>]) -> f64 {
    let m = v.len();
    let mut best = f64::INFINITY;
    if m <= 3 {
        let steps = [0, 400, 100, 30][m];
        let mut idx = vec![0usize; m];
        loop {
            let p: Vec<f64> = idx.iter().map(|&k| k as f64 / steps as f64).collect();
            if p.iter().sum::<f64>() <= 1.0 + 1e-12 {
                best = best.min(dist2(&p, v));
            }
            let mut pos = 0;
            loop {
                if pos == m {
                    return cloud.iter().map(|p| dist2(p, v)).fold(best, f64::min);
                }
                idx[pos] += 1;
                if idx[pos] <= steps {
                    break;
                }
                idx[pos] = 0;
                pos += 1;
            }
        }
    }
    cloud.iter().map(|p| dist2(p, v)).fold(best, f64::min)
}

/// Expected utility of independent per-block categorical rounding, by
/// enumeration over every joint choice.
pub fn rounding_expectation(f: &dyn SetFunction, blocks: &[Vec<usize>], x: &[f64]) -> f64 {
    let mut total = 0.0;
    let mut idx = vec![0usize; blocks.len()];
    loop {
        let mut p = 1.0;
        let mut set = Vec::new();
        for (k, b) in blocks.iter().enumerate() {
            let sum: f64 = b.iter().map(|&a| x[a]).sum();
            let a = b[idx[k]];
            p *= x[a] / sum;
            set.push(a);
        }
        total += p * f.value(&set);
        let mut pos = 0;
        loop {
            if pos == blocks.len() {
                return total;
            }
            idx[pos] += 1;
            if idx[pos] < blocks[pos].len() {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

/// Best value over at most one action per block, by enumeration.
pub fn brute_force_opt(f: &dyn SetFunction, blocks: &[Vec<usize>]) -> f64 {
    let mut best: f64 = 0.0;
    let mut idx = vec![0usize; blocks.len()];
    loop {
        let set: Vec<usize> = idx
            .iter()
            .zip(blocks)
            .filter_map(|(&k, b)| b.get(k).copied())
            .collect();
        best = best.max(f.value(&set));
        let mut pos = 0;
        loop {
            if pos == blocks.len() {
                return best;
            }
            idx[pos] += 1;
            if idx[pos] <= blocks[pos].len() {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}
