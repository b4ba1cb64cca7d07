//! Memory wave field: a sum of temporally (and optionally spatially) damped
//! `J0(2 pi d)` bumps, one per past impact.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::specfun::j0_j1;
use crate::vec2::Vec2;

/// One past impact.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveSource {
    pub position: Vec2,
    pub birth_time: f64,
}

impl WaveSource {
    pub fn new(position: Vec2, birth_time: f64) -> Self {
        Self {
            position,
            birth_time,
        }
    }

    /// Temporal weight `exp(-(now - t) / M)`.
    #[inline]
    pub fn weight(&self, now: f64, memory: f64) -> f64 {
        (-(now - self.birth_time) / memory).exp()
    }
}

/// Field height at `point`. `delta = f64::INFINITY` removes spatial damping.
pub fn wave_height(point: Vec2, sources: &[WaveSource], now: f64, memory: f64, delta: f64) -> f64 {
    let inv_delta = 1.0 / delta;
    sources
        .iter()
        .map(|s| {
            let d = (point - s.position).norm();
            let (j0, _) = j0_j1(TAU * d);
            let spatial = if inv_delta == 0.0 { 1.0 } else { (-d * inv_delta).exp() };
            s.weight(now, memory) * spatial * j0
        })
        .sum()
}

/// Analytic gradient of [`wave_height`] with respect to `point`.
///
/// A source exactly at `point` contributes nothing: its `J0` factor is flat
/// there and the cusp of the spatial damping factor is ignored.
pub fn wave_gradient(point: Vec2, sources: &[WaveSource], now: f64, memory: f64, delta: f64) -> Vec2 {
    let inv_delta = 1.0 / delta;
    let mut grad = Vec2::ZERO;
    for s in sources {
        grad += source_gradient(point, s.position, s.weight(now, memory), inv_delta);
    }
    grad
}

#[inline]
pub(crate) fn source_gradient(point: Vec2, source: Vec2, weight: f64, inv_delta: f64) -> Vec2 {
    let offset = point - source;
    let d2 = offset.norm_sq();
    if d2 == 0.0 {
        return Vec2::ZERO;
    }
    let d = d2.sqrt();
    let (j0, j1) = j0_j1(TAU * d);
    // dh/dd for this source
    let slope = if inv_delta == 0.0 {
        -TAU * j1 * weight
    } else {
        weight * (-d * inv_delta).exp() * (-inv_delta * j0 - TAU * j1)
    };
    offset * (slope / d)
}

/// Drops sources whose temporal weight is below `eps_cut`, keeping order.
pub fn prune_sources(sources: &[WaveSource], now: f64, memory: f64, eps_cut: f64) -> Vec<WaveSource> {
    sources
        .iter()
        .filter(|s| s.weight(now, memory) >= eps_cut)
        .copied()
        .collect()
}
