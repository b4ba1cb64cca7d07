//! Exact reference orbits sampled at unit time steps, for validating the
//! analysis routines independently of the dynamics.

use std::f64::consts::{SQRT_2, TAU};

use crate::model::Impact;
use crate::vec2::Vec2;

/// Uniform circular motion of radius `radius` at speed `speed`,
/// counterclockwise when `counterclockwise` is set, starting at angle 0.
pub fn circular_orbit(radius: f64, speed: f64, counterclockwise: bool, samples: usize) -> Vec<Impact> {
    let sign = if counterclockwise { 1.0 } else { -1.0 };
    let omega = sign * speed / radius;
    (0..samples)
        .map(|k| {
            let phase = omega * k as f64;
            Impact {
                bounce: k as u64,
                t: k as f64,
                position: Vec2::from_polar(radius, phase),
                velocity: Vec2::from_polar(speed, phase + sign * TAU / 4.0),
            }
        })
        .collect()
}

/// Point and derivative of the lemniscate `r^2 = 2a^2 cos 2θ` at parameter `s`.
fn lemniscate_at(a: f64, s: f64) -> (Vec2, Vec2) {
    let (sin, cos) = s.sin_cos();
    let d = 1.0 + sin * sin;
    let k = a * SQRT_2;
    let p = Vec2::new(k * cos / d, k * sin * cos / d);
    let dx = -k * sin * (d + 2.0 * cos * cos) / (d * d);
    let dy = k * ((cos * cos - sin * sin) * d - 2.0 * sin * sin * cos * cos) / (d * d);
    (p, Vec2::new(dx, dy))
}

/// Arc length of the lemniscate `r^2 = 2a^2 cos 2θ`.
pub fn lemniscate_perimeter(a: f64) -> f64 {
    // The integrand is smooth and periodic, so the rectangle rule converges
    // geometrically.
    const QUADRATURE: usize = 4096;
    (0..QUADRATURE)
        .map(|k| lemniscate_at(a, TAU * k as f64 / QUADRATURE as f64).1.norm())
        .sum::<f64>()
        * TAU
        / QUADRATURE as f64
}

/// Bernoulli lemniscate `r^2 = 2a^2 cos 2θ` traversed with mean speed
/// `speed`, starting at the right tip.
pub fn lemniscate_orbit(a: f64, speed: f64, samples: usize) -> Vec<Impact> {
    let rate = TAU * speed / lemniscate_perimeter(a);
    (0..samples)
        .map(|k| {
            let (p, dp) = lemniscate_at(a, rate * k as f64);
            Impact {
                bounce: k as u64,
                t: k as f64,
                position: p,
                velocity: dp * rate,
            }
        })
        .collect()
}

/// Joins records end to end, renumbering bounces and times consecutively.
pub fn concatenate(parts: &[Vec<Impact>]) -> Vec<Impact> {
    parts
        .iter()
        .flatten()
        .enumerate()
        .map(|(k, imp)| Impact {
            bounce: k as u64,
            t: k as f64,
            ..*imp
        })
        .collect()
}
