use crate::mirror::Geometry;
use crate::submod::GroundSet;
use crate::surrogate::surrogate_scale;
use serde::{Deserialize, Serialize};

/// Problem constants entering the regret bound, as measured on a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryConstants {
    pub curvature: f64,
    /// `max_{a,t} f_t({a})`.
    pub max_singleton: f64,
    /// Gradient bound `((1-e^{-c})/c) · max f({a})`.
    pub g: f64,
    /// Smoothness `((e^{-c}+c-1)/c²) · max f({a})`.
    pub l: f64,
    /// ℓ₁ diameter of the feasible region.
    pub d: f64,
    /// Bregman diameter, Euclidean geometry only.
    pub r2: Option<f64>,
    pub beta: f64,
    /// Maximizer drift, when an optimum oracle was run.
    pub c_t: Option<f64>,
    /// Euclidean only.
    pub k: Option<f64>,
    /// Norm-equivalence constant, always 1 under ℓ₁.
    pub c2: f64,
}

impl TheoryConstants {
    pub fn new(ground: &GroundSet, geometry: Geometry, curvature: f64, max_singleton: f64, beta: f64) -> Self {
        let d: f64 = ground
            .blocks()
            .iter()
            .map(|b| if b.len() >= 2 { 2.0 } else { 1.0 })
            .sum();
        let r2: f64 = ground
            .blocks()
            .iter()
            .map(|b| if b.len() >= 2 { 1.0 } else { 0.5 })
            .sum();
        let euclid = geometry == Geometry::Euclidean;
        TheoryConstants {
            curvature,
            max_singleton,
            g: surrogate_scale(curvature) * max_singleton,
            l: smoothness_factor(curvature) * max_singleton,
            d,
            r2: euclid.then_some(r2),
            beta,
            c_t: None,
            k: euclid.then_some(d),
            c2: 1.0,
        }
    }

    pub fn with_c_t(mut self, c_t: f64) -> Self {
        self.c_t = Some(c_t);
        self
    }

    /// `α = (1-e^{-c})/c`.
    pub fn alpha(&self) -> f64 {
        surrogate_scale(self.curvature)
    }
}

/// `(e^{-c}+c-1)/c²`, with limit ½ at `c = 0`.
pub fn smoothness_factor(c: f64) -> f64 {
    if c < 1e-4 {
        // series: 1/2 - c/6 + c²/24
        0.5 - c / 6.0 + c * c / 24.0
    } else {
        ((-c).exp_m1() + c) / (c * c)
    }
}
