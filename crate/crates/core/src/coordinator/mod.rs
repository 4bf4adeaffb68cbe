//! Round-by-round multi-agent loops.
//!
//! Each round every agent samples its action from its own belief, then (from
//! the published snapshot of all beliefs) aggregates neighbour beliefs,
//! estimates the surrogate gradient on its own block and takes a mirror step
//! there, copying the aggregate everywhere else.

mod experiment;
mod osg;
mod regret;
mod rounds;
mod stream;
mod theory;

pub use experiment::{run_experiment, Environment, RunOptions, Trajectory, WorldMetrics};
pub use osg::{osg_round, sequential_greedy, OsgState};
pub use regret::{
    best_joint_action, compute_dynamic_regret, verify_rounding_inequality, RegretReport,
    RoundingCheck, DEFAULT_ENUMERATION_CAP,
};
pub use rounds::{ma_osea_round, ma_osma_round, mixed_aggregate, round_action_sample};
pub use stream::{DriftingStream, OracleFamily, PiecewiseStream, StationaryStream};
pub use theory::TheoryConstants;

use crate::mirror::Geometry;
use crate::par::Execution;
use crate::rng::{self, Stream};
use crate::submod::{BeliefVector, GroundSet};
use crate::surrogate::SurrogateSampler;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    MaOsma,
    MaOsea,
    Osg,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::MaOsma, Algorithm::MaOsea, Algorithm::Osg];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::MaOsma => "ma-osma",
            Algorithm::MaOsea => "ma-osea",
            Algorithm::Osg => "osg",
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Step size per round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepSchedule {
    Constant(f64),
    /// `1/√T` for every round.
    InvSqrtHorizon,
    /// `η0 · √((1-β)/T)`.
    SpectralScaled(f64),
}

impl StepSchedule {
    pub fn eta(&self, horizon: usize, beta: f64) -> f64 {
        let t = horizon.max(1) as f64;
        match *self {
            StepSchedule::Constant(eta) => eta,
            StepSchedule::InvSqrtHorizon => 1.0 / t.sqrt(),
            StepSchedule::SpectralScaled(eta0) => eta0 * ((1.0 - beta).max(0.0) / t).sqrt(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let v = match *self {
            StepSchedule::Constant(v) | StepSchedule::SpectralScaled(v) => v,
            StepSchedule::InvSqrtHorizon => 1.0,
        };
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(Error::param("step", format!("{v} must be positive")))
        }
    }
}

/// `min(1/2, 1/T²)`.
pub fn default_gamma(horizon: usize) -> f64 {
    let t = horizon.max(1) as f64;
    (1.0 / (t * t)).min(0.5)
}

/// Which coordinates each agent estimates. Only the own block feeds the
/// update; `Full` exists to inspect the whole estimate in tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GradientScope {
    #[default]
    OwnBlock,
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoordinatorConfig {
    pub algorithm: Algorithm,
    pub geometry: Geometry,
    pub step: StepSchedule,
    /// Mixing weight for MA-OSEA; `None` means [`default_gamma`].
    pub gamma: Option<f64>,
    pub curvature: f64,
    pub horizon: usize,
    pub seed: u64,
    pub execution: Execution,
    pub gradient_scope: GradientScope,
}

impl CoordinatorConfig {
    pub fn new(algorithm: Algorithm, horizon: usize, seed: u64) -> Self {
        CoordinatorConfig {
            algorithm,
            geometry: match algorithm {
                Algorithm::MaOsea => Geometry::Entropic,
                _ => Geometry::Euclidean,
            },
            step: StepSchedule::InvSqrtHorizon,
            gamma: None,
            curvature: 1.0,
            horizon,
            seed,
            execution: Execution::Parallel,
            gradient_scope: GradientScope::OwnBlock,
        }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma.unwrap_or_else(|| default_gamma(self.horizon))
    }

    pub fn validate(&self) -> Result<()> {
        self.step.validate()?;
        if !(0.0..=1.0).contains(&self.curvature) {
            return Err(Error::param("curvature", format!("{} not in [0,1]", self.curvature)));
        }
        if self.algorithm == Algorithm::MaOsea {
            check_gamma(self.gamma())?;
            if self.geometry != Geometry::Entropic {
                return Err(Error::param("geometry", "ma-osea always uses the entropic geometry"));
            }
        }
        Ok(())
    }
}

pub(crate) fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma <= 0.5 {
        Ok(())
    } else {
        Err(Error::param("gamma", format!("{gamma} not in (0, 1/2]")))
    }
}

/// Per-agent beliefs and RNG streams between rounds.
#[derive(Debug, Clone)]
pub struct CoordinatorState {
    ground: GroundSet,
    beliefs: Vec<BeliefVector>,
    round: usize,
    geometry: Geometry,
    sampler: SurrogateSampler,
    scope: GradientScope,
    execution: Execution,
    rngs: Vec<Stream>,
}

impl CoordinatorState {
    /// Every agent starts at `1/|V_i|` on its own block and 0 elsewhere.
    pub fn new(ground: GroundSet, geometry: Geometry, curvature: f64, seed: u64) -> Result<Self> {
        let sampler = SurrogateSampler::new(curvature)?;
        let n = ground.n();
        let beliefs = (0..ground.agents())
            .map(|i| {
                let mut x = vec![0.0; n];
                let p = 1.0 / ground.block(i).len() as f64;
                for &a in ground.block(i) {
                    x[a] = p;
                }
                BeliefVector::from_raw(x)
            })
            .collect();
        let rngs = (0..ground.agents())
            .map(|i| rng::substream(seed, "agent", i as u64))
            .collect();
        Ok(CoordinatorState {
            ground,
            beliefs,
            round: 0,
            geometry,
            sampler,
            scope: GradientScope::OwnBlock,
            execution: Execution::Parallel,
            rngs,
        })
    }

    pub fn from_config(ground: GroundSet, config: &CoordinatorConfig) -> Result<Self> {
        config.validate()?;
        let mut s = Self::new(ground, config.geometry, config.curvature, config.seed)?;
        s.scope = config.gradient_scope;
        s.execution = config.execution;
        Ok(s)
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub fn with_gradient_scope(mut self, scope: GradientScope) -> Self {
        self.scope = scope;
        self
    }

    pub fn ground(&self) -> &GroundSet {
        &self.ground
    }

    pub fn beliefs(&self) -> &[BeliefVector] {
        &self.beliefs
    }

    /// Overrides the beliefs (e.g. to start a test from a chosen point).
    pub fn set_beliefs(&mut self, beliefs: Vec<BeliefVector>) -> Result<()> {
        if beliefs.len() != self.ground.agents() {
            return Err(Error::DimensionMismatch {
                expected: self.ground.agents(),
                got: beliefs.len(),
            });
        }
        if let Some(b) = beliefs.iter().find(|b| !b.is_feasible(&self.ground, 1e-12)) {
            return Err(Error::Domain(format!("infeasible belief {:?}", b.as_slice())));
        }
        self.beliefs = beliefs;
        Ok(())
    }

    /// Rounds completed so far.
    pub fn round(&self) -> usize {
        self.round
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn sampler(&self) -> &SurrogateSampler {
        &self.sampler
    }

    /// `max_i ‖x_i - x̄‖₁` over the current beliefs.
    pub fn consensus_error(&self) -> f64 {
        consensus_errors(&self.beliefs).into_iter().fold(0.0, f64::max)
    }
}

/// `‖x_i - x̄‖₁` for every agent.
pub(crate) fn consensus_errors(beliefs: &[BeliefVector]) -> Vec<f64> {
    let Some(first) = beliefs.first() else {
        return Vec::new();
    };
    let n = first.len();
    let k = beliefs.len() as f64;
    let mut mean = vec![0.0; n];
    for b in beliefs {
        for (m, v) in mean.iter_mut().zip(b.as_slice()) {
            *m += v / k;
        }
    }
    beliefs
        .iter()
        .map(|b| b.as_slice().iter().zip(&mean).map(|(v, m)| (v - m).abs()).sum())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentDiagnostics {
    pub action: usize,
    /// Surrogate draw `z` (absent for OSG).
    pub z: Option<f64>,
    /// Largest absolute coordinate of the gradient estimate.
    pub grad_norm: Option<f64>,
    /// `‖x_{t,i} - x̄_t‖₁` at the start of the round.
    pub consensus_error: f64,
}

/// What happened in one round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundOutcome {
    /// 1-based round index.
    pub t: usize,
    /// One action per agent, `actions[i] ∈ V_i`.
    pub actions: Vec<usize>,
    pub utility: f64,
    /// `max_i ‖x_{t,i} - x̄_t‖₁`.
    pub consensus_error: f64,
    pub agents: Vec<AgentDiagnostics>,
    pub world: Option<WorldMetrics>,
}
