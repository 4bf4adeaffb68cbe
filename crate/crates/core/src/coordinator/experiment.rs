use super::osg::{osg_round, OsgState};
use super::rounds::{ma_osea_round, ma_osma_round};
use super::theory::TheoryConstants;
use super::{Algorithm, CoordinatorConfig, CoordinatorState, RoundOutcome};
use crate::consensus::CommNetwork;
use crate::submod::{GroundSet, SetFunction};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// World-level metrics reported by environments that have a geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorldMetrics {
    pub within_5: usize,
    pub top5_distance: f64,
}

/// A source of per-round objectives.
///
/// Each round the driver calls [`objective`](Environment::objective) (the
/// environment advances to round `t` and reveals `f_t`), runs the agents,
/// then calls [`commit`](Environment::commit) with the chosen actions.
pub trait Environment {
    fn ground_set(&self) -> &GroundSet;

    fn objective(&mut self, t: usize) -> Result<Arc<dyn SetFunction>>;

    fn commit(&mut self, _actions: &[usize]) -> Result<()> {
        Ok(())
    }

    fn metrics(&self) -> Option<WorldMetrics> {
        None
    }

    /// Hands over a recorded world trace (CSV), if the environment keeps one.
    fn take_trace(&mut self) -> Option<String> {
        None
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Keep every `f_t` in the trajectory (needed for regret).
    pub keep_objectives: bool,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub algorithm: Algorithm,
    pub eta: f64,
    /// Mixing weight actually used (MA-OSEA only).
    pub gamma: Option<f64>,
    pub outcomes: Vec<RoundOutcome>,
    /// Empty unless [`RunOptions::keep_objectives`] was set.
    pub objectives: Vec<Arc<dyn SetFunction>>,
    pub theory: TheoryConstants,
}

impl Trajectory {
    pub fn utilities(&self) -> Vec<f64> {
        self.outcomes.iter().map(|o| o.utility).collect()
    }

    /// `Σ_{τ≤t} f_τ / t` for every `t`.
    pub fn running_average(&self) -> Vec<f64> {
        running_average(&self.utilities())
    }
}

pub(crate) fn running_average(u: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    u.iter()
        .enumerate()
        .map(|(k, v)| {
            acc += v;
            acc / (k + 1) as f64
        })
        .collect()
}

enum Runner {
    Mirror(CoordinatorState),
    Osg(OsgState),
}

/// Runs `config.horizon` rounds of the configured algorithm against `env`.
pub fn run_experiment(
    config: &CoordinatorConfig,
    env: &mut dyn Environment,
    network: &CommNetwork,
    options: RunOptions,
) -> Result<Trajectory> {
    config.validate()?;
    let ground = env.ground_set().clone();
    if network.agents() != ground.agents() {
        return Err(Error::DimensionMismatch {
            expected: ground.agents(),
            got: network.agents(),
        });
    }
    let beta = network.beta();
    let eta = config.step.eta(config.horizon, beta);
    let gamma = (config.algorithm == Algorithm::MaOsea).then(|| config.gamma());
    let mut runner = match config.algorithm {
        Algorithm::Osg => Runner::Osg(OsgState::new(ground.clone(), config.seed)),
        _ => Runner::Mirror(CoordinatorState::from_config(ground.clone(), config)?),
    };

    let mut outcomes = Vec::with_capacity(config.horizon);
    let mut objectives = Vec::new();
    let mut max_singleton: f64 = 0.0;
    for t in 1..=config.horizon {
        let f = env.objective(t)?;
        if objectives.last().is_none_or(|g| !Arc::ptr_eq(g, &f)) {
            for a in 0..f.ground_size() {
                max_singleton = max_singleton.max(f.singleton(a));
            }
        }
        let mut outcome = match &mut runner {
            Runner::Mirror(state) => match gamma {
                Some(g) => ma_osea_round(state, f.as_ref(), network, eta, g)?,
                None => ma_osma_round(state, f.as_ref(), network, eta)?,
            },
            Runner::Osg(state) => osg_round(state, f.clone())?,
        };
        env.commit(&outcome.actions)?;
        outcome.world = env.metrics();
        outcomes.push(outcome);
        // the last objective is kept regardless so repeated ones are skipped above
        objectives.push(f);
        if !options.keep_objectives && objectives.len() > 1 {
            objectives.swap_remove(0);
        }
    }
    if !options.keep_objectives {
        objectives.clear();
    }

    Ok(Trajectory {
        algorithm: config.algorithm,
        eta,
        gamma,
        outcomes,
        objectives,
        theory: TheoryConstants::new(&ground, config.geometry, config.curvature, max_singleton, beta),
    })
}
