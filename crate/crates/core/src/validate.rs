//! Randomized property sweeps over the mathematical building blocks, used by
//! the `validate-theory` command.

use crate::consensus::{generate_random_graph, CommNetwork, Graph};
use crate::coordinator::{verify_rounding_inequality, DEFAULT_ENUMERATION_CAP};
use crate::mirror::{entropic_update, project_capped_simplex};
use crate::rng::{self, Stream};
use crate::submod::{
    curvature, BeliefVector, FacilityLocation, GroundSet, Modular, SetFunction, SubsetTable, WeightedCoverage,
    DEFAULT_EXACT_LIMIT,
};
use crate::surrogate::{check_surrogate_inequality, estimate_surrogate_gradient, surrogate_gradient_exact, Coordinates, SurrogateSampler};
use crate::Result;
use rand::Rng;
use serde::Serialize;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: &'static str,
    pub cases: usize,
    pub failures: usize,
    /// Largest violation seen (0 when every case passed).
    pub worst: f64,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.failures == 0 && self.cases > 0
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {:<28} {:>5} cases, {} failures, worst violation {:.3e}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.cases,
            self.failures,
            self.worst
        )
    }
}

#[derive(Default)]
struct Tally {
    cases: usize,
    failures: usize,
    worst: f64,
}

impl Tally {
    /// Records a case with `violation <= 0` meaning success.
    fn record(&mut self, violation: f64) {
        self.cases += 1;
        if violation > 0.0 || violation.is_nan() {
            self.failures += 1;
            self.worst = self.worst.max(if violation.is_nan() { f64::INFINITY } else { violation });
        }
    }

    fn finish(self, name: &'static str) -> CheckReport {
        CheckReport { name, cases: self.cases, failures: self.failures, worst: self.worst }
    }
}

/// A random monotone submodular function from one of the three families.
pub fn random_instance(kind: usize, n: usize, rng: &mut Stream) -> Box<dyn SetFunction> {
    match kind % 3 {
        0 => Box::new(Modular::random(n, rng)),
        1 => Box::new(WeightedCoverage::random(n, rng.random_range(3..9), 0.4, rng)),
        _ => Box::new(FacilityLocation::random(n, rng.random_range(2..6), rng)),
    }
}

fn random_point(n: usize, rng: &mut Stream) -> Vec<f64> {
    (0..n).map(|_| rng.random::<f64>()).collect()
}

pub fn monotone_submodular(cases: usize, rng: &mut Stream) -> Result<CheckReport> {
    let mut t = Tally::default();
    for k in 0..cases {
        let n = rng.random_range(1..=8);
        let f = random_instance(k, n, rng);
        let table = SubsetTable::build(f.as_ref(), DEFAULT_EXACT_LIMIT)?;
        let mut worst: f64 = -1.0;
        for s in 0..1usize << n {
            for e in (0..n).filter(|e| s & (1 << e) == 0) {
                let gain = table.value(s | 1 << e) - table.value(s);
                worst = worst.max(-gain - 1e-12);
                for b in (0..n).filter(|b| *b != e && s & (1 << b) == 0) {
                    let larger = s | 1 << b;
                    let gain_l = table.value(larger | 1 << e) - table.value(larger);
                    worst = worst.max(gain_l - gain - 1e-12);
                }
            }
        }
        t.record(worst.max(table.value(0).abs() - 1e-12));
    }
    Ok(t.finish("monotone submodular"))
}

pub fn surrogate_inequality(cases: usize, rng: &mut Stream) -> Result<CheckReport> {
    let mut t = Tally::default();
    for k in 0..cases {
        let n = rng.random_range(1..=8);
        let f = random_instance(k, n, rng);
        let c = curvature(f.as_ref(), None)?.value;
        let (x, y) = (random_point(n, rng), random_point(n, rng));
        let chk = check_surrogate_inequality(f.as_ref(), &x, &y, c)?;
        t.record(chk.rhs - chk.lhs - 1e-9);
    }
    Ok(t.finish("surrogate inequality"))
}

/// Monte-Carlo mean of the estimator against quadrature, within
/// `4 σ/√M` per coordinate (plus a floating-point floor).
pub fn estimator_unbiased(cases: usize, samples: usize, rng: &mut Stream) -> Result<CheckReport> {
    let mut t = Tally::default();
    for k in 0..cases {
        let n = rng.random_range(1..=8);
        let f = random_instance(k, n, rng);
        let c = rng.random_range(0.05..=1.0);
        let x = random_point(n, rng);
        let exact = surrogate_gradient_exact(f.as_ref(), &x, c, 1e-12)?;
        let sampler = SurrogateSampler::new(c)?;
        let mut sum = vec![0.0; n];
        let mut sq = vec![0.0; n];
        for _ in 0..samples {
            let est = estimate_surrogate_gradient(f.as_ref(), &x, &sampler, Coordinates::All, rng)?;
            for (i, v) in est.values.iter().enumerate() {
                sum[i] += v;
                sq[i] += v * v;
            }
        }
        let m = samples as f64;
        let worst = (0..n)
            .map(|i| {
                let mean = sum[i] / m;
                let var = (sq[i] / m - mean * mean).max(0.0) * m / (m - 1.0).max(1.0);
                (mean - exact[i]).abs() - 4.0 * (var / m).sqrt() - 1e-12
            })
            .fold(f64::NEG_INFINITY, f64::max);
        t.record(worst);
    }
    Ok(t.finish("estimator unbiasedness"))
}

/// First-order optimality of the closed-form entropic step: with
/// `λ_a = η g_a − ln(b_a / y_a)` constant across the block, `λ >= 0`, and
/// `λ = 0` unless the sum constraint is tight.
pub fn entropic_optimality(cases: usize, rng: &mut Stream) -> Result<CheckReport> {
    let mut t = Tally::default();
    for _ in 0..cases {
        let m = rng.random_range(1..=10);
        let raw = random_point(m, rng).into_iter().map(|v| v + 1e-3).collect::<Vec<_>>();
        let s: f64 = raw.iter().sum();
        let scale = rng.random::<f64>() / s;
        let y: Vec<f64> = raw.iter().map(|v| v * scale).collect();
        let g: Vec<f64> = (0..m).map(|_| rng.random_range(-2.0..3.0)).collect();
        let eta = rng.random_range(0.01..2.0);
        let b = entropic_update(&y, &g, eta)?;
        let lambdas: Vec<f64> = (0..m).map(|a| eta * g[a] - (b[a] / y[a]).ln()).collect();
        let lmin = lambdas.iter().copied().fold(f64::INFINITY, f64::min);
        let lmax = lambdas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = b.iter().sum();
        let slack_violation = if sum < 1.0 - 1e-12 { lmax.abs() } else { 0.0 };
        let v = (lmax - lmin).max(-lmin).max(slack_violation).max(sum - 1.0) - 1e-9;
        t.record(v);
    }
    Ok(t.finish("entropic optimality"))
}

/// KKT residual of the capped-simplex projection.
pub fn projection_kkt(cases: usize, rng: &mut Stream) -> Result<CheckReport> {
    let mut t = Tally::default();
    for _ in 0..cases {
        let m = rng.random_range(1..=10);
        let v: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..2.0)).collect();
        let p = project_capped_simplex(&v);
        let sum: f64 = p.point.iter().sum();
        let mut res: f64 = (sum - 1.0).max(0.0);
        res = res.max(-p.lambda);
        res = res.max((p.lambda * (sum - 1.0)).abs());
        for (x, vi) in p.point.iter().zip(&v) {
            res = res.max((x - (vi - p.lambda).clamp(0.0, 1.0)).abs());
        }
        t.record(res - 1e-10);
    }
    Ok(t.finish("projection KKT"))
}

pub fn rounding(cases: usize, rng: &mut Stream) -> Result<CheckReport> {
    let mut t = Tally::default();
    for k in 0..cases {
        let agents = rng.random_range(1..=3);
        let sizes: Vec<usize> = (0..agents).map(|_| rng.random_range(1..=3)).collect();
        let ground = GroundSet::contiguous(&sizes)?;
        let n = ground.n();
        let f = random_instance(k, n, rng);
        let beliefs = ground
            .blocks()
            .iter()
            .map(|b| {
                let raw: Vec<f64> = b.iter().map(|_| rng.random::<f64>() + 1e-3).collect();
                let scale = rng.random::<f64>().max(1e-3) / raw.iter().sum::<f64>();
                let mut x = vec![0.0; n];
                for (&a, r) in b.iter().zip(raw) {
                    x[a] = r * scale;
                }
                BeliefVector::new(x)
            })
            .collect::<Result<Vec<_>>>()?;
        let chk = verify_rounding_inequality(f.as_ref(), &ground, &beliefs, DEFAULT_ENUMERATION_CAP)?;
        t.record(chk.rhs - chk.lhs - 1e-9);
    }
    Ok(t.finish("rounding inequality"))
}

/// Weight matrices are doubly stochastic and `‖Wᵗ − J/N‖ <= √N βᵗ`.
pub fn weight_matrices(cases: usize, rng: &mut Stream) -> Result<CheckReport> {
    let mut t = Tally::default();
    for k in 0..cases {
        let n = rng.random_range(2..=10);
        let g = match k % 4 {
            0 => Graph::complete(n),
            1 => Graph::ring(n),
            2 => Graph::path(n),
            _ => generate_random_graph(n, 3.0f64.min((n - 1) as f64), rng)?,
        };
        let net = CommNetwork::metropolis(g)?;
        let w = net.weights();
        let mut worst: f64 = -1.0;
        for i in 0..n {
            worst = worst.max((w.row(i).sum() - 1.0).abs() - 1e-12);
            worst = worst.max((w.column(i).sum() - 1.0).abs() - 1e-12);
        }
        let j = nalgebra::DMatrix::from_element(n, n, 1.0 / n as f64);
        let mut p = w.clone();
        for step in 1..=20 {
            let dev = (&p - &j).norm();
            worst = worst.max(dev - (n as f64).sqrt() * net.beta().powi(step) - 1e-9);
            p = &p * w;
        }
        t.record(worst);
    }
    Ok(t.finish("weight matrices"))
}

/// Runs every sweep with `scale` multiplying the default case counts.
pub fn run_all(seed: u64, scale: f64) -> Result<Vec<CheckReport>> {
    let n = |base: usize| ((base as f64 * scale).round() as usize).max(1);
    let r = |label: &str| rng::substream(seed, label, 0);
    Ok(vec![
        monotone_submodular(n(60), &mut r("submodular"))?,
        surrogate_inequality(n(200), &mut r("surrogate"))?,
        estimator_unbiased(n(10), 20_000, &mut r("estimator"))?,
        entropic_optimality(n(500), &mut r("entropic"))?,
        projection_kkt(n(1000), &mut r("projection"))?,
        rounding(n(200), &mut r("rounding"))?,
        weight_matrices(n(40), &mut r("weights"))?,
    ])
}
