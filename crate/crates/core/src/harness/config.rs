use crate::coordinator::{default_gamma, Algorithm, CoordinatorConfig, GradientScope, OracleFamily, StepSchedule};
use crate::mirror::Geometry;
use crate::par::Execution;
use crate::tracking::{DEFAULT_RADIUS, DEFAULT_TOTAL_SECONDS};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub coordinator: CoordinatorSection,
    #[serde(default)]
    pub network: NetworkSpec,
    pub scenario: ScenarioSpec,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub algorithm: Algorithm,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
}

fn default_horizon() -> usize {
    500
}

fn default_replicates() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoordinatorSection {
    /// Defaults to entropic for MA-OSEA, Euclidean otherwise.
    #[serde(default)]
    pub geometry: Option<Geometry>,
    #[serde(default = "default_curvature")]
    pub curvature: f64,
    #[serde(default = "default_step")]
    pub step: StepSchedule,
    /// Defaults to `min(1/2, 1/T²)`.
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub execution: Execution,
}

fn default_curvature() -> f64 {
    1.0
}

fn default_step() -> StepSchedule {
    StepSchedule::InvSqrtHorizon
}

impl Default for CoordinatorSection {
    fn default() -> Self {
        CoordinatorSection {
            geometry: None,
            curvature: default_curvature(),
            step: default_step(),
            gamma: None,
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum NetworkSpec {
    #[default]
    Complete,
    Ring,
    Path,
    /// Connected Erdős–Rényi graph with the given expected degree.
    Random { avg_degree: f64 },
    /// Whitespace-separated `i j` pairs, one edge per line.
    EdgeList { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ScenarioSpec {
    Tracking {
        #[serde(default = "default_tracking_agents")]
        agents: usize,
        #[serde(default = "default_targets")]
        targets: usize,
        /// Random : Adversarial : Polyline.
        #[serde(default = "default_mix")]
        mix: [f64; 3],
        #[serde(default = "default_radius")]
        radius: f64,
        /// Simulated seconds covered by the horizon; `dt = total_seconds / T`.
        #[serde(default = "default_total_seconds")]
        total_seconds: f64,
    },
    Synthetic {
        agents: usize,
        actions_per_agent: usize,
        family: OracleFamily,
        /// Per-round probability of drawing a fresh instance.
        #[serde(default)]
        drift: f64,
    },
}

fn default_tracking_agents() -> usize {
    6
}

fn default_targets() -> usize {
    8
}

fn default_mix() -> [f64; 3] {
    [8.0, 1.0, 1.0]
}

fn default_radius() -> f64 {
    DEFAULT_RADIUS
}

fn default_total_seconds() -> f64 {
    DEFAULT_TOTAL_SECONDS
}

impl ScenarioSpec {
    pub fn agents(&self) -> usize {
        match *self {
            ScenarioSpec::Tracking { agents, .. } | ScenarioSpec::Synthetic { agents, .. } => agents,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_out")]
    pub dir: PathBuf,
    /// Also write `world-trace.csv` per replicate (tracking only).
    #[serde(default)]
    pub world_trace: bool,
    #[serde(default = "default_true")]
    pub rounds_jsonl: bool,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

fn default_true() -> bool {
    true
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: default_out(),
            world_trace: false,
            rounds_jsonl: true,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Parse {
            location: e
                .span()
                .map(|s| format!("bytes {}..{}", s.start, s.end))
                .unwrap_or_else(|| "config".into()),
            message: e.message().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads and validates a config; a relative edge-list path is resolved
    /// against the config's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::from_toml(&text)?;
        if let NetworkSpec::EdgeList { path: p } = &mut cfg.network {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn geometry(&self) -> Geometry {
        self.coordinator.geometry.unwrap_or(match self.experiment.algorithm {
            Algorithm::MaOsea => Geometry::Entropic,
            _ => Geometry::Euclidean,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.coordinator
            .gamma
            .unwrap_or_else(|| default_gamma(self.experiment.horizon))
    }

    pub fn validate(&self) -> Result<()> {
        let e = &self.experiment;
        if e.horizon < 1 {
            return Err(Error::param("experiment.horizon", "must be at least 1"));
        }
        if e.replicates < 1 {
            return Err(Error::param("experiment.replicates", "must be at least 1"));
        }
        let c = &self.coordinator;
        if !(c.curvature > 0.0 && c.curvature <= 1.0) {
            return Err(Error::param(
                "coordinator.curvature",
                format!("{} not in (0, 1]", c.curvature),
            ));
        }
        c.step
            .validate()
            .map_err(|_| Error::param("coordinator.step", "step size must be positive and finite"))?;
        if let Some(g) = c.gamma {
            if !(g > 0.0 && g <= 0.5) {
                return Err(Error::param("coordinator.gamma", format!("{g} not in (0, 1/2]")));
            }
        }
        if e.algorithm == Algorithm::MaOsea && self.geometry() != Geometry::Entropic {
            return Err(Error::param("coordinator.geometry", "ma-osea requires \"entropic\""));
        }
        if let NetworkSpec::Random { avg_degree } = self.network {
            if !(avg_degree > 0.0 && avg_degree.is_finite()) {
                return Err(Error::param("network.avg_degree", format!("{avg_degree} must be positive")));
            }
        }
        match &self.scenario {
            ScenarioSpec::Tracking { agents, mix, radius, total_seconds, .. } => {
                if *agents < 1 {
                    return Err(Error::param("scenario.agents", "must be at least 1"));
                }
                if mix.iter().any(|m| !(*m >= 0.0 && m.is_finite())) || mix.iter().sum::<f64>() <= 0.0 {
                    return Err(Error::param("scenario.mix", "entries must be non-negative with positive sum"));
                }
                if !(*radius > 0.0 && radius.is_finite()) {
                    return Err(Error::param("scenario.radius", format!("{radius} must be positive")));
                }
                if !(*total_seconds > 0.0 && total_seconds.is_finite()) {
                    return Err(Error::param("scenario.total_seconds", format!("{total_seconds} must be positive")));
                }
            }
            ScenarioSpec::Synthetic { agents, actions_per_agent, family, drift } => {
                if *agents < 1 {
                    return Err(Error::param("scenario.agents", "must be at least 1"));
                }
                if *actions_per_agent < 1 {
                    return Err(Error::param("scenario.actions_per_agent", "must be at least 1"));
                }
                family.validate().map_err(|e| match e {
                    Error::Parameter { field, message } => Error::param(format!("scenario.family.{field}"), message),
                    other => other,
                })?;
                if !(0.0..=1.0).contains(drift) {
                    return Err(Error::param("scenario.drift", format!("{drift} not in [0, 1]")));
                }
            }
        }
        Ok(())
    }

    /// Coordinator settings for one replicate.
    pub fn coordinator_config(&self, algorithm_seed: u64) -> CoordinatorConfig {
        CoordinatorConfig {
            algorithm: self.experiment.algorithm,
            geometry: self.geometry(),
            step: self.coordinator.step,
            gamma: Some(self.gamma()),
            curvature: self.coordinator.curvature,
            horizon: self.experiment.horizon,
            seed: algorithm_seed,
            execution: self.coordinator.execution,
            gradient_scope: GradientScope::OwnBlock,
        }
    }
}
