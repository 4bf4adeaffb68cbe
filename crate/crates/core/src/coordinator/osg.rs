use super::{AgentDiagnostics, RoundOutcome};
use crate::rng::{self, Stream};
use crate::submod::{GroundSet, SetFunction};
use crate::{Error, Result};
use rand::Rng;
use std::sync::Arc;

/// Greedy in `order`: each agent adds the action of its block with the
/// largest marginal gain given its predecessors' picks (ties go to the
/// smallest index). Returns one action per agent, indexed by agent.
pub fn sequential_greedy(f: &dyn SetFunction, ground: &GroundSet, order: &[usize]) -> Result<Vec<usize>> {
    if f.ground_size() != ground.n() {
        return Err(Error::DimensionMismatch {
            expected: ground.n(),
            got: f.ground_size(),
        });
    }
    check_order(ground, order)?;
    let mut chosen = Vec::with_capacity(order.len());
    let mut actions = vec![0; ground.agents()];
    for &i in order {
        let base = f.value(&chosen);
        let mut best = None;
        for &a in ground.block(i) {
            chosen.push(a);
            let gain = f.value(&chosen) - base;
            chosen.pop();
            if best.is_none_or(|(_, g)| gain > g) {
                best = Some((a, gain));
            }
        }
        let (a, _) = best.expect("blocks are non-empty");
        chosen.push(a);
        actions[i] = a;
    }
    Ok(actions)
}

fn check_order(ground: &GroundSet, order: &[usize]) -> Result<()> {
    let mut seen = vec![false; ground.agents()];
    for &i in order {
        if i >= seen.len() || std::mem::replace(&mut seen[i], true) {
            return Err(Error::param("order", format!("{order:?} is not a permutation of the agents")));
        }
    }
    if seen.iter().all(|&s| s) {
        Ok(())
    } else {
        Err(Error::param("order", format!("{order:?} is not a permutation of the agents")))
    }
}

/// Online sequential greedy baseline: plays greedily on the previous round's
/// objective, uniformly at random in round 1.
#[derive(Debug, Clone)]
pub struct OsgState {
    ground: GroundSet,
    order: Vec<usize>,
    previous: Option<Arc<dyn SetFunction>>,
    rng: Stream,
    round: usize,
}

impl OsgState {
    /// Agents decide in index order.
    pub fn new(ground: GroundSet, seed: u64) -> Self {
        let order = (0..ground.agents()).collect();
        OsgState {
            ground,
            order,
            previous: None,
            rng: rng::substream(seed, "osg", 0),
            round: 0,
        }
    }

    pub fn with_order(mut self, order: Vec<usize>) -> Result<Self> {
        check_order(&self.ground, &order)?;
        self.order = order;
        Ok(self)
    }

    pub fn ground(&self) -> &GroundSet {
        &self.ground
    }

    pub fn round(&self) -> usize {
        self.round
    }
}

/// One OSG round: decide on `f_{t-1}`, collect utility on `f_t`, then
/// remember `f_t` for the next round.
pub fn osg_round(state: &mut OsgState, f: Arc<dyn SetFunction>) -> Result<RoundOutcome> {
    if f.ground_size() != state.ground.n() {
        return Err(Error::DimensionMismatch {
            expected: state.ground.n(),
            got: f.ground_size(),
        });
    }
    let actions = match &state.previous {
        Some(prev) => sequential_greedy(prev.as_ref(), &state.ground, &state.order)?,
        None => {
            let rng = &mut state.rng;
            state
                .ground
                .blocks()
                .iter()
                .map(|b| b[rng.random_range(0..b.len())])
                .collect()
        }
    };
    let utility = f.value(&actions);
    state.previous = Some(f);
    state.round += 1;
    Ok(RoundOutcome {
        t: state.round,
        agents: actions
            .iter()
            .map(|&action| AgentDiagnostics {
                action,
                z: None,
                grad_norm: None,
                consensus_error: 0.0,
            })
            .collect(),
        actions,
        utility,
        consensus_error: 0.0,
        world: None,
    })
}
