use super::{check_gamma, consensus_errors, AgentDiagnostics, CoordinatorState, GradientScope, RoundOutcome};
use crate::consensus::CommNetwork;
use crate::mirror::{entropic_update, mirror_update};
use crate::par;
use crate::rng::Stream;
use crate::submod::{BeliefVector, SetFunction};
use crate::surrogate::{estimate_surrogate_gradient, Coordinates};
use crate::{Error, Result};
use rand::Rng;

/// Draws an action from `block` with probability `x_a / Σ_{b∈block} x_b`.
pub fn round_action_sample(x: &[f64], block: &[usize], rng: &mut Stream) -> Result<usize> {
    let total: f64 = block.iter().map(|&a| x[a]).sum();
    if !(total > 0.0) {
        return Err(Error::Domain(format!(
            "belief block {block:?} has no probability mass"
        )));
    }
    let mut u = rng.random::<f64>() * total;
    let mut last = block[0];
    for &a in block {
        if x[a] <= 0.0 {
            continue;
        }
        last = a;
        if u < x[a] {
            return Ok(a);
        }
        u -= x[a];
    }
    Ok(last)
}

/// `y_i = Σ_j w_ij ((1-γ) x_j + (γ/n) 1)`.
///
/// Rows of `W` sum to one, so this is evaluated as `(1-γ) Σ_j w_ij x_j + γ/n`,
/// which keeps every coordinate at or above `γ/n` in floating point too.
pub fn mixed_aggregate(
    network: &CommNetwork,
    beliefs: &[BeliefVector],
    i: usize,
    gamma: f64,
) -> Result<BeliefVector> {
    check_gamma(gamma)?;
    let mut y = crate::consensus::aggregate_beliefs(network, beliefs, i)?.into_inner();
    mix_in_place(&mut y, gamma);
    Ok(BeliefVector::from_raw(y))
}

fn mix_in_place(y: &mut [f64], gamma: f64) {
    let floor = gamma / y.len() as f64;
    for v in y.iter_mut() {
        *v = ((1.0 - gamma) * *v + floor).min(1.0);
    }
}

struct AgentStep {
    next: Vec<f64>,
    diag: AgentDiagnostics,
}

/// One MA-OSMA round (mirror ascent in the state's geometry).
pub fn ma_osma_round(
    state: &mut CoordinatorState,
    f: &dyn SetFunction,
    network: &CommNetwork,
    eta: f64,
) -> Result<RoundOutcome> {
    run_round(state, f, network, eta, None)
}

/// One MA-OSEA round: beliefs are mixed with the uniform vector before
/// aggregation and the own block takes the closed-form entropic step.
pub fn ma_osea_round(
    state: &mut CoordinatorState,
    f: &dyn SetFunction,
    network: &CommNetwork,
    eta: f64,
    gamma: f64,
) -> Result<RoundOutcome> {
    check_gamma(gamma)?;
    run_round(state, f, network, eta, Some(gamma))
}

fn run_round(
    state: &mut CoordinatorState,
    f: &dyn SetFunction,
    network: &CommNetwork,
    eta: f64,
    mixing: Option<f64>,
) -> Result<RoundOutcome> {
    let ground = &state.ground;
    if f.ground_size() != ground.n() {
        return Err(Error::DimensionMismatch {
            expected: ground.n(),
            got: f.ground_size(),
        });
    }
    if network.agents() != ground.agents() {
        return Err(Error::DimensionMismatch {
            expected: ground.agents(),
            got: network.agents(),
        });
    }
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::param("eta", format!("{eta} must be positive")));
    }

    let snapshot: Vec<&[f64]> = state.beliefs.iter().map(BeliefVector::as_slice).collect();
    let errors = consensus_errors(&state.beliefs);
    let n = ground.n();
    let (geometry, sampler, scope) = (state.geometry, state.sampler, state.scope);

    let steps: Vec<Result<AgentStep>> = par::map_mut(state.execution, &mut state.rngs, |i, rng| {
        let x_i = snapshot[i];
        let block = ground.block(i);
        // rounding happens on x_{t,i}, before any exchange
        let action = round_action_sample(x_i, block, rng)?;

        let mut y = vec![0.0; n];
        network.aggregate_into(&snapshot, i, &mut y);
        if let Some(gamma) = mixing {
            mix_in_place(&mut y, gamma);
        }

        let coords = match scope {
            GradientScope::OwnBlock => Coordinates::Block { agent: i, actions: block },
            GradientScope::Full => Coordinates::All,
        };
        let est = estimate_surrogate_gradient(f, x_i, &sampler, coords, rng)?;
        let g_block: Vec<f64> = match scope {
            GradientScope::OwnBlock => est.values.clone(),
            GradientScope::Full => block.iter().map(|&a| est.values[a]).collect(),
        };
        let y_block: Vec<f64> = block.iter().map(|&a| y[a]).collect();
        let new_block = match mixing {
            Some(_) => entropic_update(&y_block, &g_block, eta)?,
            None => mirror_update(geometry, &y_block, &g_block, eta)?,
        };
        let mut next = y;
        for (&a, v) in block.iter().zip(new_block) {
            next[a] = v;
        }
        Ok(AgentStep {
            next,
            diag: AgentDiagnostics {
                action,
                z: Some(est.z),
                grad_norm: Some(est.max_abs()),
                consensus_error: errors[i],
            },
        })
    });

    let mut next_beliefs = Vec::with_capacity(steps.len());
    let mut agents = Vec::with_capacity(steps.len());
    for step in steps {
        let step = step?;
        next_beliefs.push(BeliefVector::from_raw(step.next));
        agents.push(step.diag);
    }
    for (i, b) in next_beliefs.iter().enumerate() {
        if !b.is_feasible(ground, 1e-9) {
            return Err(Error::Domain(format!(
                "agent {i} left the feasible region in round {}",
                state.round + 1
            )));
        }
    }

    let actions: Vec<usize> = agents.iter().map(|d| d.action).collect();
    let utility = f.value(&actions);
    state.beliefs = next_beliefs;
    state.round += 1;
    Ok(RoundOutcome {
        t: state.round,
        actions,
        utility,
        consensus_error: errors.iter().copied().fold(0.0, f64::max),
        agents,
        world: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::consensus::{CommNetwork, Graph};
    use crate::mirror::Geometry;
    use crate::par::Execution;
    use crate::rng;
    use crate::submod::{GroundSet, Modular, WeightedCoverage};

    #[test]
    fn action_sampling_examples() {
        let mut s = rng::stream(2);
        let x = [1.0, 0.0, 0.0];
        for _ in 0..100 {
            assert_eq!(round_action_sample(&x, &[0, 1, 2], &mut s).unwrap(), 0);
        }
        let x = [0.2, 0.6, 0.2];
        let mut counts = [0usize; 3];
        let draws = 100_000;
        for _ in 0..draws {
            counts[round_action_sample(&x, &[0, 1, 2], &mut s).unwrap()] += 1;
        }
        for (c, p) in counts.iter().zip(x) {
            assert!((*c as f64 / draws as f64 - p).abs() < 0.01);
        }
        let x = [0.3, 0.3];
        let hits = (0..draws)
            .filter(|_| round_action_sample(&x, &[0, 1], &mut s).unwrap() == 0)
            .count();
        assert!((hits as f64 / draws as f64 - 0.5).abs() < 0.01);
        assert!(round_action_sample(&[0.0, 0.0], &[0, 1], &mut s).is_err());
    }

    #[test]
    fn single_agent_moves_toward_heavier_action() {
        let ground = GroundSet::uniform(1, 2).unwrap();
        let f = Modular::new(vec![1.0, 2.0]);
        let net = CommNetwork::complete(1).unwrap();
        let mut state = CoordinatorState::new(ground, Geometry::Euclidean, 1.0, 1).unwrap();
        let mut prev = state.beliefs()[0].as_slice()[1];
        for _ in 0..200 {
            ma_osma_round(&mut state, &f, &net, 0.1).unwrap();
            let now = state.beliefs()[0].as_slice()[1];
            if prev < 1.0 {
                assert!(now > prev || (now - 1.0).abs() < 1e-12);
            }
            prev = now;
        }
        assert!((prev - 1.0).abs() < 1e-12);
        // one hand-run step: y = (0.5, 0.5), η g = 0.1 (1-e^{-1}) (1, 2), projected
        let mut state = CoordinatorState::new(GroundSet::uniform(1, 2).unwrap(), Geometry::Euclidean, 1.0, 1).unwrap();
        ma_osma_round(&mut state, &f, &net, 0.1).unwrap();
        let k = 0.1 * (1.0 - (-1.0f64).exp());
        let b = state.beliefs()[0].as_slice();
        assert!((b[1] - (0.5 + k / 2.0)).abs() < 1e-15);
        assert!((b[0] - (0.5 - k / 2.0)).abs() < 1e-15);
    }

    #[test]
    fn complete_graph_aggregates_identically() {
        let ground = GroundSet::uniform(3, 2).unwrap();
        let net = CommNetwork::complete(3).unwrap();
        let state = CoordinatorState::new(ground, Geometry::Euclidean, 1.0, 4).unwrap();
        let y: Vec<_> = (0..3)
            .map(|i| crate::consensus::aggregate_beliefs(&net, state.beliefs(), i).unwrap())
            .collect();
        assert_eq!(y[0], y[1]);
        assert_eq!(y[1], y[2]);
    }

    #[test]
    fn zero_objective_copies_aggregate() {
        let ground = GroundSet::uniform(3, 2).unwrap();
        let net = CommNetwork::metropolis(Graph::path(3)).unwrap();
        let f = Modular::new(vec![0.0; 6]);
        for geo in [Geometry::Euclidean, Geometry::Entropic] {
            let mut state = CoordinatorState::new(ground.clone(), geo, 1.0, 4).unwrap();
            let expected: Vec<_> = (0..3)
                .map(|i| crate::consensus::aggregate_beliefs(&net, state.beliefs(), i).unwrap())
                .collect();
            let out = ma_osma_round(&mut state, &f, &net, 0.3).unwrap();
            assert_eq!(out.utility, 0.0);
            for i in 0..3 {
                for (a, b) in state.beliefs()[i].as_slice().iter().zip(expected[i].as_slice()) {
                    assert!((a - b).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn osea_examples() {
        // identical beliefs, complete graph: y = (1-γ) x + γ/n
        let ground = GroundSet::uniform(2, 2).unwrap();
        let net = CommNetwork::complete(2).unwrap();
        let x = BeliefVector::new(vec![0.5, 0.5, 0.5, 0.5]).unwrap();
        let y = mixed_aggregate(&net, &[x.clone(), x.clone()], 0, 0.1).unwrap();
        for v in y.as_slice() {
            assert!((v - (0.9 * 0.5 + 0.025)).abs() < 1e-15);
        }

        // N = 1, |V| = 2, modular weights chosen so η·g = (ln 2, 0) at η = 1
        let ground1 = GroundSet::uniform(1, 2).unwrap();
        let net1 = CommNetwork::complete(1).unwrap();
        let k = 1.0 - (-1.0f64).exp();
        let f = Modular::new(vec![2f64.ln() / k, 0.0]);
        let mut state = CoordinatorState::new(ground1, Geometry::Entropic, 1.0, 3).unwrap();
        ma_osea_round(&mut state, &f, &net1, 1.0, 1e-12).unwrap();
        let b = state.beliefs()[0].as_slice();
        assert!((b[0] - 2.0 / 3.0).abs() < 1e-9 && (b[1] - 1.0 / 3.0).abs() < 1e-9);

        // small γ, zero gradient: consensus average of the mixed beliefs
        let f0 = Modular::new(vec![0.0; 4]);
        let mut state = CoordinatorState::new(ground, Geometry::Entropic, 1.0, 3).unwrap();
        let before = state.beliefs().to_vec();
        ma_osea_round(&mut state, &f0, &net, 0.5, 1e-6).unwrap();
        for i in 0..2 {
            let expect = mixed_aggregate(&net, &before, i, 1e-6).unwrap();
            for (a, b) in state.beliefs()[i].as_slice().iter().zip(expect.as_slice()) {
                assert!((a - b).abs() < 1e-15);
            }
        }

        let mut state = CoordinatorState::new(GroundSet::uniform(2, 2).unwrap(), Geometry::Entropic, 1.0, 3).unwrap();
        assert!(ma_osea_round(&mut state, &f0, &net, 0.5, 0.6).is_err());
        assert!(ma_osea_round(&mut state, &f0, &net, 0.5, 0.0).is_err());
    }

    #[test]
    fn mismatched_ground_set_is_rejected() {
        let ground = GroundSet::uniform(2, 2).unwrap();
        let net = CommNetwork::complete(2).unwrap();
        let mut state = CoordinatorState::new(ground, Geometry::Euclidean, 1.0, 3).unwrap();
        let f = Modular::new(vec![1.0; 5]);
        assert!(matches!(
            ma_osma_round(&mut state, &f, &net, 0.1),
            Err(Error::DimensionMismatch { .. })
        ));
        let net3 = CommNetwork::complete(3).unwrap();
        let f = Modular::new(vec![1.0; 4]);
        assert!(ma_osma_round(&mut state, &f, &net3, 0.1).is_err());
    }

    #[test]
    fn execution_mode_and_scope_do_not_change_results() {
        let mut s = rng::stream(99);
        let ground = GroundSet::uniform(4, 3).unwrap();
        let f = WeightedCoverage::random(12, 10, 0.3, &mut s);
        let net = CommNetwork::metropolis(Graph::ring(4)).unwrap();
        let run = |exec: Execution, scope: GradientScope| {
            let mut state = CoordinatorState::new(ground.clone(), Geometry::Euclidean, 1.0, 5)
                .unwrap()
                .with_execution(exec)
                .with_gradient_scope(scope);
            let outs: Vec<_> = (0..30)
                .map(|_| ma_osma_round(&mut state, &f, &net, 0.05).unwrap().actions)
                .collect();
            (outs, state.beliefs().to_vec())
        };
        let base = run(Execution::Sequential, GradientScope::OwnBlock);
        assert_eq!(base, run(Execution::Parallel, GradientScope::OwnBlock));
        assert_eq!(base, run(Execution::Parallel, GradientScope::Full));
    }
}
