//! Eigenstate labels on the `(n, m)` lattice of (R̄, L̄z).

use serde::{Deserialize, Serialize};

use super::observables::Observables;

/// Offset of the quantized radii `R̄_n = (n - EPSILON) / 2`.
pub const EPSILON: f64 = 0.26;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenstateLabel {
    pub n: u32,
    /// One of `-n, -n + 2, ..., n`.
    pub m: i32,
    /// Distance in the (R̄, L̄z) plane to the lattice node `(n, m)`.
    pub distance: f64,
}

impl EigenstateLabel {
    /// Same `(n, m)`, ignoring the residual.
    pub fn same_state(&self, other: &Self) -> bool {
        self.n == other.n && self.m == other.m
    }

    /// `|m| = n`: circles and ovals.
    pub fn is_circular(&self) -> bool {
        self.m.unsigned_abs() == self.n
    }
}

/// `(n - EPSILON) / 2`.
pub fn quantized_radius(n: u32) -> f64 {
    (f64::from(n) - EPSILON) / 2.0
}

/// Predicted `(R̄, L̄z)` of state `(n, m)`: `((n - ε)/2, m (n - ε) / (2n))`.
pub fn lattice_node(n: u32, m: i32) -> (f64, f64) {
    let r = quantized_radius(n);
    (r, f64::from(m) * r / f64::from(n))
}

/// Nearest lattice label for a point in the (R̄, L̄z) plane.
pub fn classify_point(mean_radius: f64, mean_lz: f64) -> EigenstateLabel {
    let n_real = (2.0 * mean_radius + EPSILON).round();
    let n = if n_real >= 1.0 { n_real.min(1e6) as u32 } else { 1 };
    let nf = f64::from(n);
    let ideal = 2.0 * nf * mean_lz / (nf - EPSILON);
    // m = n - 2j for integer j in [0, n]; pick the j nearest the ideal value.
    let j = ((nf - ideal) / 2.0).round().clamp(0.0, nf);
    let j = if j.is_nan() { 0 } else { j as i64 };
    let m = (i64::from(n) - 2 * j) as i32;
    let (r0, l0) = lattice_node(n, m);
    EigenstateLabel {
        n,
        m,
        distance: (mean_radius - r0).hypot(mean_lz - l0),
    }
}

pub fn classify(observables: &Observables) -> EigenstateLabel {
    classify_point(observables.mean_radius, observables.mean_angular_momentum)
}
