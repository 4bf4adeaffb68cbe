use super::experiment::Environment;
use crate::rng::Stream;
use crate::submod::{FacilityLocation, GroundSet, Modular, SetFunction, WeightedCoverage};
use crate::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Random instance generator for synthetic streams.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OracleFamily {
    Modular,
    Coverage { items: usize, density: f64 },
    FacilityLocation { customers: usize },
}

impl OracleFamily {
    pub fn sample(&self, n: usize, rng: &mut Stream) -> Arc<dyn SetFunction> {
        match *self {
            OracleFamily::Modular => Arc::new(Modular::random(n, rng)),
            OracleFamily::Coverage { items, density } => {
                Arc::new(WeightedCoverage::random(n, items, density, rng))
            }
            OracleFamily::FacilityLocation { customers } => {
                Arc::new(FacilityLocation::random(n, customers, rng))
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            OracleFamily::Modular => Ok(()),
            OracleFamily::Coverage { items, density } => {
                if items == 0 {
                    Err(Error::param("items", "must be at least 1"))
                } else if !(density > 0.0 && density <= 1.0) {
                    Err(Error::param("density", format!("{density} not in (0, 1]")))
                } else {
                    Ok(())
                }
            }
            OracleFamily::FacilityLocation { customers } => {
                if customers == 0 {
                    Err(Error::param("customers", "must be at least 1"))
                } else {
                    Ok(())
                }
            }
        }
    }
}

fn check_size(ground: &GroundSet, f: &dyn SetFunction) -> Result<()> {
    if ground.n() != f.ground_size() {
        return Err(Error::DimensionMismatch {
            expected: ground.n(),
            got: f.ground_size(),
        });
    }
    Ok(())
}

/// `f_t = f` for every round.
#[derive(Debug, Clone)]
pub struct StationaryStream {
    ground: GroundSet,
    f: Arc<dyn SetFunction>,
}

impl StationaryStream {
    pub fn new(ground: GroundSet, f: Arc<dyn SetFunction>) -> Result<Self> {
        check_size(&ground, f.as_ref())?;
        Ok(StationaryStream { ground, f })
    }

    pub fn function(&self) -> &Arc<dyn SetFunction> {
        &self.f
    }
}

impl Environment for StationaryStream {
    fn ground_set(&self) -> &GroundSet {
        &self.ground
    }

    fn objective(&mut self, _t: usize) -> Result<Arc<dyn SetFunction>> {
        Ok(self.f.clone())
    }
}

/// Switches objective at fixed rounds: piece `k` is active from its start
/// round (1-based) until the next piece starts.
#[derive(Debug, Clone)]
pub struct PiecewiseStream {
    ground: GroundSet,
    pieces: Vec<(usize, Arc<dyn SetFunction>)>,
}

impl PiecewiseStream {
    pub fn new(ground: GroundSet, mut pieces: Vec<(usize, Arc<dyn SetFunction>)>) -> Result<Self> {
        pieces.sort_by_key(|p| p.0);
        match pieces.first() {
            Some((1, _)) => {}
            _ => return Err(Error::param("pieces", "first piece must start at round 1")),
        }
        for (_, f) in &pieces {
            check_size(&ground, f.as_ref())?;
        }
        Ok(PiecewiseStream { ground, pieces })
    }
}

impl Environment for PiecewiseStream {
    fn ground_set(&self) -> &GroundSet {
        &self.ground
    }

    fn objective(&mut self, t: usize) -> Result<Arc<dyn SetFunction>> {
        let k = self.pieces.partition_point(|p| p.0 <= t).max(1) - 1;
        Ok(self.pieces[k].1.clone())
    }
}

/// Draws a fresh instance from `family` in round 1 and then, each later
/// round, replaces it with probability `drift`.
#[derive(Debug, Clone)]
pub struct DriftingStream {
    ground: GroundSet,
    family: OracleFamily,
    drift: f64,
    rng: Stream,
    current: Option<Arc<dyn SetFunction>>,
}

impl DriftingStream {
    pub fn new(ground: GroundSet, family: OracleFamily, drift: f64, rng: Stream) -> Result<Self> {
        family.validate()?;
        if !(0.0..=1.0).contains(&drift) {
            return Err(Error::param("drift", format!("{drift} not in [0, 1]")));
        }
        Ok(DriftingStream {
            ground,
            family,
            drift,
            rng,
            current: None,
        })
    }
}

impl Environment for DriftingStream {
    fn ground_set(&self) -> &GroundSet {
        &self.ground
    }

    fn objective(&mut self, _t: usize) -> Result<Arc<dyn SetFunction>> {
        let redraw = match self.current {
            None => true,
            Some(_) => self.drift > 0.0 && self.rng.random_bool(self.drift),
        };
        if redraw {
            self.current = Some(self.family.sample(self.ground.n(), &mut self.rng));
        }
        Ok(self.current.clone().expect("drawn above"))
    }
}
