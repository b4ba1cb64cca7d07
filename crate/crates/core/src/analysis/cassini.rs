//! Cassini-curve fits centred on the trap axis.
//!
//! Two foci: `r^4 + a^4 - 2 a^2 r^2 cos 2(θ - φ0) = b^4`.
//! Three foci: `Π_k |z - a e^{i(φ0 + 2πk/3)}| = b^3`.
//!
//! Both defects are affine in the constant term (`b^4`, `b^3`), so for each
//! trial `(a, φ0)` that term is set to its least-squares value, the sample
//! mean. The remaining two parameters are found by a coarse grid followed by
//! coordinate descent with golden-section line searches.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::model::Impact;
use crate::vec2::Vec2;

/// Fewest samples a fit accepts.
pub const MIN_FIT_SAMPLES: usize = 50;
const MAX_SWEEPS: usize = 400;
const GRID_RATIOS: usize = 16;
const GRID_ANGLES: usize = 16;
const STEP_TOLERANCE: f64 = 1e-11;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CassiniFit {
    pub foci_count: u32,
    /// Distance of each focus from the centre.
    pub a: f64,
    pub b: f64,
    /// `φ0`, reduced to `[0, 2π/p)`.
    pub orientation: f64,
    /// RMS defect divided by `b^4` (two foci) or `b^3` (three foci).
    pub residual: f64,
}

/// Fits the impact positions.
pub fn fit_cassini(impacts: &[Impact], foci_count: u32) -> Result<CassiniFit, AnalysisError> {
    let points: Vec<Vec2> = impacts.iter().map(|i| i.position).collect();
    fit_cassini_points(&points, foci_count)
}

/// Per-sample quantities the defect needs, precomputed once.
struct Samples {
    /// `z^3` as (re, im) for the three-focus form.
    cubes: Vec<(f64, f64)>,
    /// `(r^4, x^2 - y^2, 2xy)` for the two-focus form.
    quartic: Vec<(f64, f64, f64)>,
    foci: u32,
}

impl Samples {
    fn new(points: &[Vec2], foci: u32) -> Self {
        let mut s = Self {
            cubes: Vec::new(),
            quartic: Vec::new(),
            foci,
        };
        if foci == 2 {
            s.quartic = points
                .iter()
                .map(|p| {
                    let r2 = p.norm_sq();
                    (r2 * r2, p.x * p.x - p.y * p.y, 2.0 * p.x * p.y)
                })
                .collect();
        } else {
            s.cubes = points
                .iter()
                .map(|p| {
                    let (x2, y2) = (p.x * p.x, p.y * p.y);
                    (p.x * (x2 - 3.0 * y2), p.y * (3.0 * x2 - y2))
                })
                .collect();
        }
        s
    }

    fn len(&self) -> usize {
        self.cubes.len().max(self.quartic.len())
    }

    /// Per-sample defect with the constant term left out; `r^4 + a^4 -
    /// 2a^2 r^2 cos 2(θ-φ0)` for two foci, `|z^3 - a^3 e^{3iφ0}|` for three.
    fn visit(&self, a: f64, phi: f64, mut f: impl FnMut(f64)) {
        if self.foci == 2 {
            let (s, c) = (2.0 * phi).sin_cos();
            let a2 = a * a;
            let a4 = a2 * a2;
            for &(r4, x, y) in &self.quartic {
                f(r4 + a4 - 2.0 * a2 * (x * c + y * s));
            }
        } else {
            let (s, c) = (3.0 * phi).sin_cos();
            let a3 = a * a * a;
            let (cx, cy) = (a3 * c, a3 * s);
            for &(zx, zy) in &self.cubes {
                f((zx - cx).hypot(zy - cy));
            }
        }
    }

    /// `(constant term, RMS defect)` at `(a, φ0)`.
    fn evaluate(&self, a: f64, phi: f64) -> (f64, f64) {
        let n = self.len() as f64;
        let mut sum = 0.0;
        self.visit(a, phi, |g| sum += g);
        let mean = sum / n;
        let mut sq = 0.0;
        self.visit(a, phi, |g| sq += (g - mean) * (g - mean));
        (mean, (sq / n).sqrt())
    }

    fn objective(&self, a: f64, phi: f64) -> f64 {
        self.evaluate(a, phi).1
    }
}

/// Minimizes `f` on `[lo, hi]`, shrinking the bracket to `tol`.
fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    // Include the bracket ends so a boundary minimum (a = 0) is reachable.
    [(x1, f1), (x2, f2), (lo, f(lo)), (hi, f(hi))]
        .into_iter()
        .min_by(|p, q| p.1.total_cmp(&q.1))
        .unwrap()
}

/// Fits a `foci_count`-focus Cassini curve (2 or 3) centred on the origin.
pub fn fit_cassini_points(points: &[Vec2], foci_count: u32) -> Result<CassiniFit, AnalysisError> {
    if foci_count != 2 && foci_count != 3 {
        return Err(AnalysisError::InvalidArgument {
            name: "foci_count",
            value: f64::from(foci_count),
        });
    }
    if points.len() < MIN_FIT_SAMPLES {
        return Err(AnalysisError::InsufficientSamples {
            needed: MIN_FIT_SAMPLES,
            found: points.len(),
        });
    }
    if let Some(bad) = points.iter().find(|p| !p.is_finite()) {
        return Err(AnalysisError::InvalidArgument {
            name: "sample",
            value: if bad.x.is_finite() { bad.y } else { bad.x },
        });
    }
    let scale = (points.iter().map(|p| p.norm_sq()).sum::<f64>() / points.len() as f64).sqrt();
    if scale == 0.0 {
        return Err(AnalysisError::InvalidArgument {
            name: "rms_radius",
            value: 0.0,
        });
    }
    let samples = Samples::new(points, foci_count);
    let period = TAU / f64::from(foci_count);

    // Coarse grid over a / scale and φ0.
    let (mut a, mut phi, mut best) = (0.0, 0.0, f64::INFINITY);
    for i in 0..GRID_RATIOS {
        let trial_a = scale * 0.1 * i as f64;
        for j in 0..GRID_ANGLES {
            let trial_phi = period * j as f64 / GRID_ANGLES as f64;
            let v = samples.objective(trial_a, trial_phi);
            if v < best {
                (a, phi, best) = (trial_a, trial_phi, v);
            }
        }
    }

    let mut step_a = 0.1 * scale;
    let mut step_phi = period / GRID_ANGLES as f64;
    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let lo = (a - step_a).max(0.0);
        let (new_a, va) = golden_section(|x| samples.objective(x, phi), lo, a + step_a, 0.02 * step_a);
        // A strict improvement at the far edge of the bracket means the
        // minimum lies further out: keep the step and walk. Otherwise shrink.
        if va < best {
            best = va;
            if (new_a - a).abs() < 0.5 * step_a {
                step_a *= 0.5;
            }
            a = new_a;
        } else {
            step_a *= 0.5;
        }
        let (new_phi, vp) =
            golden_section(|x| samples.objective(a, x), phi - step_phi, phi + step_phi, 0.02 * step_phi);
        if vp < best {
            best = vp;
            if (new_phi - phi).abs() < 0.5 * step_phi {
                step_phi *= 0.5;
            }
            phi = new_phi;
        } else {
            step_phi *= 0.5;
        }
        if step_a < STEP_TOLERANCE * scale && step_phi < STEP_TOLERANCE {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(AnalysisError::NonConvergence { sweeps: MAX_SWEEPS });
    }

    let (constant, rms) = samples.evaluate(a, phi);
    let degree = if foci_count == 2 { 4 } else { 3 };
    let b = constant.max(0.0).powf(1.0 / f64::from(degree));
    if !(b > 0.0) {
        // Every sample sits on a focus: no curve through them.
        return Err(AnalysisError::InvalidArgument { name: "b", value: b });
    }
    Ok(CassiniFit {
        foci_count,
        a,
        b,
        orientation: phi.rem_euclid(period),
        residual: rms / b.powi(degree),
    })
}

impl CassiniFit {
    /// `a / b`; 1 for a Bernoulli lemniscate.
    pub fn aspect(&self) -> f64 {
        self.a / self.b
    }

    /// Angular distance between `orientation` and `other`, modulo the
    /// curve's rotational period.
    pub fn orientation_distance(&self, other: f64) -> f64 {
        let period = TAU / f64::from(self.foci_count);
        let d = (self.orientation - other).rem_euclid(period);
        d.min(period - d)
    }
}
