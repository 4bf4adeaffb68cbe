//! Experiment harness: configuration, replicated runs, comparisons, regret
//! curves and file output.

mod config;
mod output;
mod report;

pub use config::{CoordinatorSection, ExperimentConfig, ExperimentSection, NetworkSpec, OutputSection, ScenarioSpec};
pub use output::{metrics_csv, read_summary, write_suite, ReplicateSummary, Summary, METRICS_HEADER};
pub use report::{compare_report, regret_suite, ComparisonRow, ComparisonTable, RegretRow, RegretSuiteReport};

use crate::consensus::{generate_random_graph, CommNetwork, Graph};
use crate::coordinator::{
    compute_dynamic_regret, run_experiment, DriftingStream, Environment, RoundOutcome, RunOptions, TheoryConstants,
    DEFAULT_ENUMERATION_CAP,
};
use crate::par;
use crate::rng::{self, derive_seed};
use crate::submod::GroundSet;
use crate::surrogate::surrogate_scale;
use crate::tracking::{target_mix, TrackingEnv, TrackingWorld};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// One row of a replicate's metric series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub t: usize,
    pub utility: f64,
    pub running_avg_utility: f64,
    pub within_5: Option<usize>,
    pub top5_distance: Option<f64>,
    pub consensus_error: f64,
    /// Cumulative dynamic α-regret through round `t`.
    pub regret: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSeries {
    pub rows: Vec<MetricRow>,
}

impl MetricSeries {
    pub fn final_row(&self) -> Option<&MetricRow> {
        self.rows.last()
    }
}

/// Everything produced by one replicate.
#[derive(Debug, Clone)]
pub struct ReplicateResult {
    pub replicate: usize,
    pub seed: u64,
    pub series: MetricSeries,
    pub outcomes: Vec<RoundOutcome>,
    pub theory: TheoryConstants,
    pub eta: f64,
    pub gamma: Option<f64>,
    /// `Σ|A*_{t+1} Δ A*_t|` when the optimum oracle ran.
    pub c_t: Option<f64>,
    pub world_trace: Option<String>,
}

/// Mean and sample standard deviation (0 for one replicate) per round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub t: usize,
    pub utility: (f64, f64),
    pub running_avg_utility: (f64, f64),
    pub within_5: Option<(f64, f64)>,
    pub top5_distance: Option<(f64, f64)>,
    pub consensus_error: (f64, f64),
    pub regret: Option<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct SuiteResult {
    pub config: ExperimentConfig,
    pub replicates: Vec<ReplicateResult>,
    pub aggregate: Vec<AggregateRow>,
}

impl SuiteResult {
    pub fn final_running_average(&self) -> f64 {
        self.aggregate.last().map_or(0.0, |r| r.running_avg_utility.0)
    }
}

/// Seed of replicate `r`: `seed + r`.
pub fn replicate_seed(config: &ExperimentConfig, r: usize) -> u64 {
    config.experiment.seed.wrapping_add(r as u64)
}

/// Builds the communication network for a replicate seed. Random graphs draw
/// from their own stream so every algorithm sees the same graph.
pub fn build_network(spec: &NetworkSpec, agents: usize, seed: u64) -> Result<CommNetwork> {
    match spec {
        NetworkSpec::Complete => CommNetwork::complete(agents),
        NetworkSpec::Ring => CommNetwork::metropolis(Graph::ring(agents)),
        NetworkSpec::Path => CommNetwork::metropolis(Graph::path(agents)),
        NetworkSpec::Random { avg_degree } => {
            let g = generate_random_graph(agents, *avg_degree, &mut rng::substream(seed, "graph", 0))?;
            CommNetwork::metropolis(g)
        }
        NetworkSpec::EdgeList { path } => {
            let text = std::fs::read_to_string(path)?;
            CommNetwork::metropolis(Graph::from_edge_list(&text, Some(agents))?)
        }
    }
}

/// Builds the scenario environment for a replicate seed. Its randomness is
/// independent of the algorithm's.
pub fn build_environment(config: &ExperimentConfig, seed: u64) -> Result<Box<dyn Environment>> {
    let env_rng = rng::substream(seed, "environment", 0);
    match &config.scenario {
        ScenarioSpec::Tracking { agents, targets, mix, radius, total_seconds } => {
            let kinds = target_mix(*targets, *mix)?;
            let dt = total_seconds / config.experiment.horizon as f64;
            let mut init_rng = rng::substream(seed, "world", 0);
            let world = TrackingWorld::init(*agents, &kinds, *radius, dt, config.experiment.horizon, &mut init_rng)?;
            let env = TrackingEnv::new(world, env_rng)?;
            Ok(Box::new(if config.output.world_trace { env.with_trace() } else { env }))
        }
        ScenarioSpec::Synthetic { agents, actions_per_agent, family, drift } => {
            let ground = GroundSet::uniform(*agents, *actions_per_agent)?;
            Ok(Box::new(DriftingStream::new(ground, family.clone(), *drift, env_rng)?))
        }
    }
}

/// Whether the optimum oracle fits under the enumeration cap.
pub fn regret_available(ground: &GroundSet) -> bool {
    let mut total: usize = 1;
    for b in ground.blocks() {
        total = total.saturating_mul(b.len() + 1);
    }
    total <= DEFAULT_ENUMERATION_CAP
}

/// Runs one replicate.
pub fn run_replicate(config: &ExperimentConfig, r: usize) -> Result<ReplicateResult> {
    let seed = replicate_seed(config, r);
    let agents = config.scenario.agents();
    let network = build_network(&config.network, agents, seed)?;
    let mut env = build_environment(config, seed)?;
    let with_regret = regret_available(env.ground_set());
    let coord = config.coordinator_config(derive_seed(seed, "algorithm", 0));
    let tr = run_experiment(&coord, env.as_mut(), &network, RunOptions { keep_objectives: with_regret })?;
    let utilities = tr.utilities();
    let report = if with_regret {
        Some(compute_dynamic_regret(
            &utilities,
            &tr.objectives,
            env.ground_set(),
            surrogate_scale(config.coordinator.curvature),
            DEFAULT_ENUMERATION_CAP,
        )?)
    } else {
        None
    };
    let running = tr.running_average();
    let rows = tr
        .outcomes
        .iter()
        .enumerate()
        .map(|(k, o)| MetricRow {
            t: o.t,
            utility: o.utility,
            running_avg_utility: running[k],
            within_5: o.world.map(|w| w.within_5),
            top5_distance: o.world.map(|w| w.top5_distance),
            consensus_error: o.consensus_error,
            regret: report.as_ref().map(|r| r.cumulative[k]),
        })
        .collect();
    let world_trace = env.take_trace();
    let theory = match &report {
        Some(r) => tr.theory.clone().with_c_t(r.c_t),
        None => tr.theory.clone(),
    };
    Ok(ReplicateResult {
        replicate: r,
        seed,
        series: MetricSeries { rows },
        outcomes: tr.outcomes,
        theory,
        eta: tr.eta,
        gamma: tr.gamma,
        c_t: report.map(|r| r.c_t),
        world_trace,
    })
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Per-round mean and standard deviation across replicates.
pub fn aggregate(replicates: &[ReplicateResult]) -> Vec<AggregateRow> {
    let Some(first) = replicates.first() else {
        return Vec::new();
    };
    (0..first.series.rows.len())
        .map(|k| {
            let col = |g: &dyn Fn(&MetricRow) -> Option<f64>| -> Option<(f64, f64)> {
                let v: Option<Vec<f64>> = replicates.iter().map(|r| g(&r.series.rows[k])).collect();
                v.map(|v| mean_std(&v))
            };
            AggregateRow {
                t: first.series.rows[k].t,
                utility: col(&|r| Some(r.utility)).expect("always present"),
                running_avg_utility: col(&|r| Some(r.running_avg_utility)).expect("always present"),
                within_5: col(&|r| r.within_5.map(|w| w as f64)),
                top5_distance: col(&|r| r.top5_distance),
                consensus_error: col(&|r| Some(r.consensus_error)).expect("always present"),
                regret: col(&|r| r.regret),
            }
        })
        .collect()
}

/// Runs every replicate (in parallel unless sequential execution is
/// configured). Successful replicates are returned alongside the first error,
/// if any, so callers can persist partial results.
pub fn run_suite_partial(config: &ExperimentConfig) -> (Vec<ReplicateResult>, Option<Error>) {
    let results = par::map_indexed(config.coordinator.execution, config.experiment.replicates, |r| {
        run_replicate(config, r)
    });
    let mut ok = Vec::new();
    let mut err = None;
    for r in results {
        match r {
            Ok(v) => ok.push(v),
            Err(e) => {
                err.get_or_insert(e);
            }
        }
    }
    (ok, err)
}

pub fn run_suite(config: &ExperimentConfig) -> Result<SuiteResult> {
    config.validate()?;
    let (replicates, err) = run_suite_partial(config);
    if let Some(e) = err {
        return Err(e);
    }
    Ok(SuiteResult {
        aggregate: aggregate(&replicates),
        config: config.clone(),
        replicates,
    })
}
