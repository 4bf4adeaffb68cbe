//! Multi-target tracking: mobile agents choose a heading and speed each round
//! to stay close to moving targets.
//!
//! Round order: targets move, the objective for the round is built from the
//! new target positions and the agents' candidate moves, then agents move.

use crate::coordinator::{Environment, WorldMetrics};
use crate::rng::Stream;
use crate::submod::{FacilityLocation, GroundSet, SetFunction};
use crate::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;
use std::sync::Arc;

pub const SPEEDS: [f64; 3] = [5.0, 10.0, 15.0];
pub const ANGLES: usize = 8;
pub const ACTIONS_PER_AGENT: usize = ANGLES * SPEEDS.len();
/// Lower bound on distances inside `1/d`.
pub const D_FLOOR: f64 = 1e-3;
pub const ESCAPE_RANGE: f64 = 20.0;
pub const ESCAPE_SPEED: f64 = 15.0;
pub const ESCAPE_HEADINGS: usize = 360;
pub const RANDOM_SPEED: (f64, f64) = (5.0, 10.0);
pub const POLYLINE_K: [usize; 3] = [1, 2, 4];
pub const NEAR_RANGE: f64 = 5.0;
pub const TOP_K: usize = 5;
pub const DEFAULT_RADIUS: f64 = 20.0;
pub const DEFAULT_TOTAL_SECONDS: f64 = 50.0;

pub type Point = [f64; 2];

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn advance(p: Point, heading: f64, step: f64) -> Point {
    [p[0] + step * heading.cos(), p[1] + step * heading.sin()]
}

/// Heading `k`: `(k+1)·π/4`, so `π/4, π/2, …, 2π`.
pub fn grid_angle(k: usize) -> f64 {
    (k + 1) as f64 * PI / 4.0
}

/// Ground-set encoding of `(θ, s, i)`: `i·24 + angle·3 + speed`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridAction {
    pub agent: usize,
    pub angle: usize,
    pub speed: usize,
}

impl GridAction {
    pub fn encode(self) -> usize {
        self.agent * ACTIONS_PER_AGENT + self.angle * SPEEDS.len() + self.speed
    }

    pub fn decode(a: usize) -> Self {
        let local = a % ACTIONS_PER_AGENT;
        GridAction {
            agent: a / ACTIONS_PER_AGENT,
            angle: local / SPEEDS.len(),
            speed: local % SPEEDS.len(),
        }
    }

    pub fn heading(self) -> f64 {
        grid_angle(self.angle)
    }

    pub fn speed_value(self) -> f64 {
        SPEEDS[self.speed]
    }
}

pub fn tracking_ground_set(agents: usize) -> Result<GroundSet> {
    GroundSet::uniform(agents, ACTIONS_PER_AGENT)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetKind {
    Random,
    Polyline,
    Adversarial,
}

impl TargetKind {
    pub fn name(self) -> &'static str {
        match self {
            TargetKind::Random => "random",
            TargetKind::Polyline => "polyline",
            TargetKind::Adversarial => "adversarial",
        }
    }
}

/// Splits `count` targets by the ratio `random:adversarial:polyline` using
/// largest remainders; ties go to Random, then Adversarial.
pub fn target_mix(count: usize, ratio: [f64; 3]) -> Result<Vec<TargetKind>> {
    let total: f64 = ratio.iter().sum();
    if ratio.iter().any(|r| !(r.is_finite() && *r >= 0.0)) || !(total > 0.0) {
        return Err(Error::param("target_mix", format!("{ratio:?} must be non-negative with positive sum")));
    }
    let quota: Vec<f64> = ratio.iter().map(|r| r / total * count as f64).collect();
    let mut n: Vec<usize> = quota.iter().map(|q| q.floor() as usize).collect();
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (quota[a] - n[a] as f64, quota[b] - n[b] as f64);
        rb.partial_cmp(&ra).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
    });
    let left = count - n.iter().sum::<usize>();
    for &k in order.iter().take(left) {
        n[k] += 1;
    }
    let kinds = [TargetKind::Random, TargetKind::Adversarial, TargetKind::Polyline];
    Ok(kinds
        .iter()
        .zip(n)
        .flat_map(|(&k, c)| std::iter::repeat_n(k, c))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub kind: TargetKind,
    pub position: Point,
    pub heading: f64,
    pub speed: f64,
    /// Polyline only: number of redirections over the horizon.
    pub k: usize,
    /// Adversarial only: escape rounds left.
    pub escape_left: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackingWorld {
    pub agents: Vec<Point>,
    pub targets: Vec<Target>,
    pub dt: f64,
    pub horizon: usize,
    /// Target steps taken so far.
    pub t: usize,
}

fn uniform_in_disk(radius: f64, rng: &mut Stream) -> Point {
    let r = radius * rng.random::<f64>().sqrt();
    let th = rng.random_range(0.0..TAU);
    [r * th.cos(), r * th.sin()]
}

fn random_motion(rng: &mut Stream) -> (f64, f64) {
    (
        rng.random_range(0.0..TAU),
        rng.random_range(RANDOM_SPEED.0..=RANDOM_SPEED.1),
    )
}

impl TrackingWorld {
    /// Agents and targets uniform in the disk of `radius` around the origin.
    pub fn init(agents: usize, kinds: &[TargetKind], radius: f64, dt: f64, horizon: usize, rng: &mut Stream) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::param("radius", format!("{radius} must be positive")));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::param("dt", format!("{dt} must be positive")));
        }
        let agents = (0..agents).map(|_| uniform_in_disk(radius, rng)).collect();
        let targets = kinds
            .iter()
            .map(|&kind| {
                let position = uniform_in_disk(radius, rng);
                let (heading, speed) = random_motion(rng);
                let k = match kind {
                    TargetKind::Polyline => POLYLINE_K[rng.random_range(0..POLYLINE_K.len())],
                    _ => 0,
                };
                Target { kind, position, heading, speed, k, escape_left: 0 }
            })
            .collect();
        Ok(TrackingWorld { agents, targets, dt, horizon, t: 0 })
    }

    /// Rounds an escape lasts: `⌈1/dt⌉`.
    pub fn escape_rounds(&self) -> usize {
        ((1.0 / self.dt) - 1e-9).ceil().max(1.0) as usize
    }

    /// Whether a Polyline target with parameter `k` redirects at step `s`
    /// (0-based), i.e. `s ∈ {⌊jT/k⌋}`.
    pub fn polyline_redirects(&self, k: usize, s: usize) -> bool {
        (0..k).any(|j| j * self.horizon / k == s)
    }

    /// Heading on a 360-point grid maximizing the mean distance to all agents
    /// after one escape step; the first maximizer wins.
    pub fn escape_heading(&self, from: Point) -> f64 {
        let step = ESCAPE_SPEED * self.dt;
        let mut best = (0.0, f64::NEG_INFINITY);
        for h in 0..ESCAPE_HEADINGS {
            let th = h as f64 * TAU / ESCAPE_HEADINGS as f64;
            let p = advance(from, th, step);
            let mean = self.agents.iter().map(|&a| dist(a, p)).sum::<f64>() / self.agents.len().max(1) as f64;
            if mean > best.1 {
                best = (th, mean);
            }
        }
        best.0
    }

    pub fn step_targets(&mut self, rng: &mut Stream) {
        let s = self.t;
        let escape = self.escape_rounds();
        for j in 0..self.targets.len() {
            let tg = self.targets[j].clone();
            let (heading, speed, escape_left) = match tg.kind {
                TargetKind::Random => {
                    let (h, v) = random_motion(rng);
                    (h, v, 0)
                }
                TargetKind::Polyline => {
                    if self.polyline_redirects(tg.k, s) {
                        let (h, v) = random_motion(rng);
                        (h, v, 0)
                    } else {
                        (tg.heading, tg.speed, 0)
                    }
                }
                TargetKind::Adversarial => {
                    if tg.escape_left > 0 {
                        (tg.heading, ESCAPE_SPEED, tg.escape_left - 1)
                    } else if self.agents.iter().any(|&a| dist(a, tg.position) <= ESCAPE_RANGE) {
                        (self.escape_heading(tg.position), ESCAPE_SPEED, escape - 1)
                    } else {
                        let (h, v) = random_motion(rng);
                        (h, v, 0)
                    }
                }
            };
            let t = &mut self.targets[j];
            t.heading = heading;
            t.speed = speed;
            t.escape_left = escape_left;
            t.position = advance(t.position, heading, speed * self.dt);
        }
        self.t += 1;
    }

    /// Where agent `a.agent` would be after playing `a`.
    pub fn candidate_position(&self, a: GridAction) -> Point {
        candidate_position(self.agents[a.agent], a.heading(), a.speed_value(), self.dt)
    }

    /// `f(A) = Σ_j max_{a∈A} 1/max(d(o_a, o_j), d_floor)` over current targets.
    pub fn objective(&self) -> FacilityLocation {
        let n = self.agents.len() * ACTIONS_PER_AGENT;
        let benefit = (0..n)
            .map(|a| {
                let p = self.candidate_position(GridAction::decode(a));
                self.targets
                    .iter()
                    .map(|t| 1.0 / dist(p, t.position).max(D_FLOOR))
                    .collect()
            })
            .collect();
        FacilityLocation::new(benefit, self.targets.len()).expect("distances are finite")
    }

    /// Moves every agent by its chosen action (`actions[i]` in agent `i`'s block).
    pub fn apply_actions(&mut self, actions: &[usize]) -> Result<()> {
        if actions.len() != self.agents.len() {
            return Err(Error::DimensionMismatch {
                expected: self.agents.len(),
                got: actions.len(),
            });
        }
        let moved = actions
            .iter()
            .enumerate()
            .map(|(i, &a)| {
                let g = GridAction::decode(a);
                if g.agent != i || a >= self.agents.len() * ACTIONS_PER_AGENT {
                    return Err(Error::InvalidAction {
                        action: a,
                        n: self.agents.len() * ACTIONS_PER_AGENT,
                    });
                }
                Ok(self.candidate_position(g))
            })
            .collect::<Result<Vec<_>>>()?;
        self.agents = moved;
        Ok(())
    }

    /// Distance from each target to its nearest agent.
    pub fn nearest_agent_distances(&self) -> Vec<f64> {
        self.targets
            .iter()
            .map(|t| {
                self.agents
                    .iter()
                    .map(|&a| dist(a, t.position))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    }

    /// Targets whose nearest agent is within 5 units, and the mean of the
    /// `min(5, M)` smallest nearest-agent distances (0 with no targets).
    pub fn metrics(&self) -> WorldMetrics {
        let mut d = self.nearest_agent_distances();
        let within_5 = d.iter().filter(|&&x| x <= NEAR_RANGE).count();
        d.sort_by(f64::total_cmp);
        let k = d.len().min(TOP_K);
        let top5_distance = if k == 0 { 0.0 } else { d[..k].iter().sum::<f64>() / k as f64 };
        WorldMetrics { within_5, top5_distance }
    }

    /// Appends `t,entity_kind,id,x,y` rows for every agent and target.
    pub fn write_trace(&self, t: usize, out: &mut String) {
        for (i, p) in self.agents.iter().enumerate() {
            let _ = writeln!(out, "{t},agent,{i},{:.16e},{:.16e}", p[0], p[1]);
        }
        for (j, tg) in self.targets.iter().enumerate() {
            let _ = writeln!(out, "{t},{},{j},{:.16e},{:.16e}", tg.kind.name(), tg.position[0], tg.position[1]);
        }
    }
}

pub fn candidate_position(from: Point, theta: f64, speed: f64, dt: f64) -> Point {
    advance(from, theta, speed * dt)
}

pub const TRACE_HEADER: &str = "t,entity_kind,id,x,y";

/// The tracking world as a stream of objectives.
#[derive(Debug, Clone)]
pub struct TrackingEnv {
    world: TrackingWorld,
    ground: GroundSet,
    rng: Stream,
    trace: Option<String>,
}

impl TrackingEnv {
    pub fn new(world: TrackingWorld, rng: Stream) -> Result<Self> {
        let ground = tracking_ground_set(world.agents.len())?;
        Ok(TrackingEnv { world, ground, rng, trace: None })
    }

    /// Records a world snapshot (initial state as `t = 0`, then after every round).
    pub fn with_trace(mut self) -> Self {
        let mut s = String::new();
        s.push_str(TRACE_HEADER);
        s.push('\n');
        self.world.write_trace(0, &mut s);
        self.trace = Some(s);
        self
    }

    pub fn world(&self) -> &TrackingWorld {
        &self.world
    }
}

impl Environment for TrackingEnv {
    fn ground_set(&self) -> &GroundSet {
        &self.ground
    }

    fn objective(&mut self, _t: usize) -> Result<Arc<dyn SetFunction>> {
        self.world.step_targets(&mut self.rng);
        Ok(Arc::new(self.world.objective()))
    }

    fn commit(&mut self, actions: &[usize]) -> Result<()> {
        self.world.apply_actions(actions)?;
        if let Some(tr) = &mut self.trace {
            self.world.write_trace(self.world.t, tr);
        }
        Ok(())
    }

    fn metrics(&self) -> Option<WorldMetrics> {
        Some(self.world.metrics())
    }

    fn take_trace(&mut self) -> Option<String> {
        self.trace.take()
    }
}
