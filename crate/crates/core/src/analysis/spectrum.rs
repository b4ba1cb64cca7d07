//! Decomposition of the undamped memory field on Bessel modes centred on the
//! trap axis, via Graf's addition theorem:
//!
//! `J0(k|r - ρ|) = J0(kr) J0(kρ) + 2 Σ_{n>=1} J_n(kr) J_n(kρ) cos n(θ - θ')`.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::model::WaveSource;
use crate::specfun::{j0_j1, orders_into, SpecFunError, MAX_ORDER};
use crate::vec2::Vec2;

/// Field coefficients `h(r, θ) = Σ_n J_n(2πr) [A_n cos nθ + B_n sin nθ]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeSpectrum {
    /// `A_0 ..= A_{n_max}`.
    #[serde(rename = "a_coeffs")]
    pub a: Vec<f64>,
    /// `B_1 ..= B_{n_max}`.
    #[serde(rename = "b_coeffs")]
    pub b: Vec<f64>,
    pub n_max: usize,
    pub evaluation_time: f64,
}

impl ModeSpectrum {
    pub fn zero(n_max: usize, evaluation_time: f64) -> Self {
        Self {
            a: vec![0.0; n_max + 1],
            b: vec![0.0; n_max],
            n_max,
            evaluation_time,
        }
    }

    /// `B_n`, with `B_0 = 0`.
    pub fn b_coeff(&self, n: usize) -> f64 {
        if n == 0 {
            0.0
        } else {
            self.b[n - 1]
        }
    }

    /// Mode power `A_n^2 + B_n^2`.
    pub fn power(&self, n: usize) -> f64 {
        self.a[n] * self.a[n] + self.b_coeff(n).powi(2)
    }

    pub fn powers(&self) -> Vec<f64> {
        (0..=self.n_max).map(|n| self.power(n)).collect()
    }

    /// Powers divided by their sum (all zero for a zero spectrum).
    pub fn normalized_powers(&self) -> Vec<f64> {
        let p = self.powers();
        let total: f64 = p.iter().sum();
        if total > 0.0 {
            p.iter().map(|v| v / total).collect()
        } else {
            p
        }
    }

    /// Mode with the largest power among `orders` (first one on ties).
    pub fn dominant_mode(&self, orders: impl IntoIterator<Item = usize>) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for n in orders {
            if n > self.n_max {
                continue;
            }
            let p = self.power(n);
            if best.map_or(true, |(_, bp)| p > bp) {
                best = Some((n, p));
            }
        }
        best.map(|(n, _)| n)
    }
}

/// Coefficients of `Σ_j w_j J0(2π|r - r_j|)` with `w_j = exp(-(now - t_j)/M)`.
pub fn graf_spectrum(
    sources: &[WaveSource],
    now: f64,
    memory: f64,
    n_max: usize,
) -> Result<ModeSpectrum, AnalysisError> {
    if n_max > MAX_ORDER {
        return Err(SpecFunError::OrderTooLarge(n_max).into());
    }
    if !(memory > 0.0) {
        return Err(AnalysisError::InvalidArgument {
            name: "memory",
            value: memory,
        });
    }
    let mut spectrum = ModeSpectrum::zero(n_max, now);
    let mut jn = vec![0.0; n_max + 1];
    for s in sources {
        let rho = s.position.norm();
        let theta = s.position.angle();
        let w = s.weight(now, memory);
        orders_into(TAU * rho, &mut jn);
        spectrum.a[0] += w * jn[0];
        for n in 1..=n_max {
            let (sin, cos) = (n as f64 * theta).sin_cos();
            let c = 2.0 * w * jn[n];
            spectrum.a[n] += c * cos;
            spectrum.b[n - 1] += c * sin;
        }
    }
    Ok(spectrum)
}

/// Evaluates the modal sum at `point`.
pub fn reconstruct_field(spectrum: &ModeSpectrum, point: Vec2) -> f64 {
    let r = point.norm();
    let theta = point.angle();
    let mut jn = vec![0.0; spectrum.n_max + 1];
    orders_into(TAU * r, &mut jn);
    let mut h = spectrum.a[0] * jn[0];
    for n in 1..=spectrum.n_max {
        let (sin, cos) = (n as f64 * theta).sin_cos();
        h += jn[n] * (spectrum.a[n] * cos + spectrum.b[n - 1] * sin);
    }
    h
}

/// Mean-wave amplitude `A_0 = J0(2πR) / (e^{1/M} - 1)` of a steady circular
/// orbit of radius `R` with memory `M`.
pub fn circular_orbit_amplitude(radius: f64, memory: f64) -> f64 {
    j0_j1(TAU * radius).0 / (1.0 / memory).exp_m1()
}

/// Effective radial potential `J0(2πR)^2` and its force `-dE/dR =
/// 4π J1(2πR) J0(2πR)`.
pub fn effective_potential(radius: f64) -> (f64, f64) {
    let (j0, j1) = j0_j1(TAU * radius);
    (j0 * j0, 2.0 * TAU * j1 * j0)
}
