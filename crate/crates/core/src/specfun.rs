//! Bessel functions of the first kind, integer order, real non-negative argument.
//!
//! Small arguments use the ascending power series. Everything else goes
//! through Miller's backward recurrence normalised by the Neumann sum
//! `J0 + 2 (J2 + J4 + ...) = 1`. The simulator's inner loop only needs `J0`
//! and `J1`; those come from [`j0_j1`], a cubic Hermite table built once from
//! the recurrence.

use std::sync::OnceLock;

use thiserror::Error;

/// Largest order accepted by [`bessel_j`] and [`bessel_j_orders`].
pub const MAX_ORDER: usize = 64;

/// Arguments at or below this use the ascending series.
const SERIES_LIMIT: f64 = 8.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecFunError {
    #[error("bessel argument must be finite and non-negative, got {0}")]
    Domain(f64),
    #[error("bessel order {0} exceeds the supported maximum {MAX_ORDER}")]
    OrderTooLarge(usize),
    #[error("zero index must be at least 1")]
    ZeroIndex,
}

fn check_argument(x: f64) -> Result<(), SpecFunError> {
    if x.is_finite() && x >= 0.0 {
        Ok(())
    } else {
        Err(SpecFunError::Domain(x))
    }
}

/// `J_n(x)` for `0 <= n <= 64` and finite `x >= 0`.
pub fn bessel_j(n: usize, x: f64) -> Result<f64, SpecFunError> {
    check_argument(x)?;
    if n > MAX_ORDER {
        return Err(SpecFunError::OrderTooLarge(n));
    }
    if x == 0.0 {
        return Ok(if n == 0 { 1.0 } else { 0.0 });
    }
    if x <= SERIES_LIMIT {
        return Ok(ascending_series(n, x));
    }
    let mut out = vec![0.0; n + 1];
    miller_into(x, &mut out);
    Ok(out[n])
}

/// `[J_0(x), J_1(x), ..., J_{n_max}(x)]` from a single recurrence pass.
pub fn bessel_j_orders(n_max: usize, x: f64) -> Result<Vec<f64>, SpecFunError> {
    check_argument(x)?;
    if n_max > MAX_ORDER {
        return Err(SpecFunError::OrderTooLarge(n_max));
    }
    let mut out = vec![0.0; n_max + 1];
    orders_into(x, &mut out);
    Ok(out)
}

/// Fills `out[k] = J_k(x)` for every `k < out.len()`. `x` must already be valid.
pub(crate) fn orders_into(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    if x == 0.0 {
        out.fill(0.0);
        out[0] = 1.0;
    } else if x <= SERIES_LIMIT {
        for (n, slot) in out.iter_mut().enumerate() {
            *slot = ascending_series(n, x);
        }
    } else {
        miller_into(x, out);
    }
}

fn ascending_series(n: usize, x: f64) -> f64 {
    let half = 0.5 * x;
    let q = -half * half;
    // (x/2)^n / n!
    let mut term = 1.0;
    for k in 1..=n {
        term *= half / k as f64;
    }
    let mut sum = term;
    let mut k = 1.0;
    loop {
        term *= q / (k * (k + n as f64));
        sum += term;
        if term.abs() <= 1e-17 * sum.abs().max(1e-300) {
            break;
        }
        k += 1.0;
        if k > 500.0 {
            break;
        }
    }
    sum
}

fn miller_start(n_max: usize, x: f64) -> usize {
    let top = (n_max as f64).max(x);
    let start = top + 20.0 + 3.0 * top.sqrt().max(1.0) * 2.5;
    let start = start.ceil() as usize;
    start + start % 2
}

fn miller_into(x: f64, out: &mut [f64]) {
    let start = miller_start(out.len() - 1, x);
    let two_over_x = 2.0 / x;
    let mut above = 0.0;
    let mut current = 1e-30;
    let mut norm = 0.0;
    for slot in out.iter_mut() {
        *slot = 0.0;
    }
    for k in (1..=start).rev() {
        let below = k as f64 * two_over_x * current - above;
        above = current;
        current = below;
        let order = k - 1;
        if order < out.len() {
            out[order] = current;
        }
        if order % 2 == 0 && order > 0 {
            norm += 2.0 * current;
        }
        if current.abs() > 1e250 {
            above *= 1e-250;
            current *= 1e-250;
            norm *= 1e-250;
            for slot in out.iter_mut() {
                *slot *= 1e-250;
            }
        }
    }
    norm += current;
    let scale = 1.0 / norm;
    for slot in out.iter_mut() {
        *slot *= scale;
    }
}

/// Spacing of the sign-change scan used to bracket zeros of `J0`.
const ZERO_SCAN_STEP: f64 = 0.5;

/// k-th positive zero of `J0` (k >= 1), bisected to full double precision.
pub fn bessel_j0_zero(k: usize) -> Result<f64, SpecFunError> {
    if k == 0 {
        return Err(SpecFunError::ZeroIndex);
    }
    let j0 = |x: f64| {
        let mut v = [0.0];
        orders_into(x, &mut v);
        v[0]
    };
    let mut found = 0;
    let mut lo = ZERO_SCAN_STEP;
    let mut f_lo = j0(lo);
    loop {
        let hi = lo + ZERO_SCAN_STEP;
        let f_hi = j0(hi);
        if f_lo.signum() != f_hi.signum() || f_hi == 0.0 {
            found += 1;
            if found == k {
                return Ok(bisect(j0, lo, hi, f_lo));
            }
        }
        lo = hi;
        f_lo = f_hi;
    }
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, mut f_lo: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

// Hermite table for the J0/J1 pair.
const TABLE_STEP: f64 = 1.0 / 256.0;
const TABLE_LIMIT: f64 = 256.0;

struct J01Table {
    // [J0, J1, J0', J1'] per node
    nodes: Vec<[f64; 4]>,
}

impl J01Table {
    fn build() -> Self {
        let count = (TABLE_LIMIT / TABLE_STEP) as usize + 2;
        let nodes = (0..count)
            .map(|i| {
                let x = i as f64 * TABLE_STEP;
                let mut v = [0.0; 2];
                orders_into(x, &mut v);
                let d1 = if x == 0.0 { 0.5 } else { v[0] - v[1] / x };
                [v[0], v[1], -v[1], d1]
            })
            .collect();
        Self { nodes }
    }

    #[inline]
    fn eval(&self, x: f64) -> (f64, f64) {
        let s = x * (1.0 / TABLE_STEP);
        let i = s as usize;
        let t = s - i as f64;
        let a = &self.nodes[i];
        let b = &self.nodes[i + 1];
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = (t3 - 2.0 * t2 + t) * TABLE_STEP;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = (t3 - t2) * TABLE_STEP;
        (
            h00 * a[0] + h10 * a[2] + h01 * b[0] + h11 * b[2],
            h00 * a[1] + h10 * a[3] + h01 * b[1] + h11 * b[3],
        )
    }
}

fn table() -> &'static J01Table {
    static TABLE: OnceLock<J01Table> = OnceLock::new();
    TABLE.get_or_init(J01Table::build)
}

/// `(J0(x), J1(x))` for finite `x >= 0`, interpolated to about 1e-12.
///
/// Unchecked: negative or non-finite input is a caller bug.
#[inline]
pub fn j0_j1(x: f64) -> (f64, f64) {
    debug_assert!(x.is_finite() && x >= 0.0, "j0_j1 argument {x}");
    if x < TABLE_LIMIT {
        table().eval(x)
    } else {
        let mut v = [0.0; 2];
        miller_into(x, &mut v);
        (v[0], v[1])
    }
}

/// Forces construction of the interpolation table.
pub fn warm_up() {
    let _ = table();
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// `J_n(x) = (1/pi) * integral_0^pi cos(n t - x sin t) dt`; the trapezoid
    /// rule is spectrally accurate on this periodic integrand.
    fn bessel_quadrature(n: usize, x: f64) -> f64 {
        let panels = 2 * ((x as usize + n + 64) / 2) + 64;
        let h = PI / panels as f64;
        let f = |t: f64| (n as f64 * t - x * t.sin()).cos();
        let mut sum = 0.5 * (f(0.0) + f(PI));
        for i in 1..panels {
            sum += f(i as f64 * h);
        }
        sum * h / PI
    }

    #[test]
    fn values_at_origin() {
        assert_eq!(bessel_j(0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_j(3, 0.0).unwrap(), 0.0);
        assert_eq!(bessel_j(64, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(matches!(bessel_j(0, -1.0), Err(SpecFunError::Domain(_))));
        assert!(matches!(bessel_j(0, f64::NAN), Err(SpecFunError::Domain(_))));
        assert!(matches!(bessel_j(0, f64::INFINITY), Err(SpecFunError::Domain(_))));
        assert!(matches!(bessel_j(65, 1.0), Err(SpecFunError::OrderTooLarge(65))));
        assert!(matches!(bessel_j0_zero(0), Err(SpecFunError::ZeroIndex)));
    }

    #[test]
    fn matches_quadrature_oracle() {
        let mut worst: f64 = 0.0;
        for n in [0usize, 1, 2, 3, 5, 8, 13, 21, 40, 64] {
            let mut x = 0.0;
            while x <= 100.0 {
                let got = bessel_j(n, x).unwrap();
                let want = bessel_quadrature(n, x);
                worst = worst.max((got - want).abs());
                x += 0.173;
            }
        }
        assert!(worst < 1e-10, "worst abs error {worst:e}");
    }

    #[test]
    fn orders_agree_with_single_order() {
        for &x in &[0.3, 4.0, 7.99, 8.01, 19.0, 57.5, 99.0] {
            let all = bessel_j_orders(40, x).unwrap();
            for (n, v) in all.iter().enumerate() {
                assert!((v - bessel_j(n, x).unwrap()).abs() < 1e-12, "n={n} x={x}");
            }
        }
    }

    #[test]
    fn first_zero_near_known_value() {
        let z = bessel_j(0, 2.404825557695773).unwrap();
        assert!(z.abs() < 1e-10);
    }

    #[test]
    fn zeros_increase_and_space_by_pi() {
        let zeros: Vec<f64> = (1..=12).map(|k| bessel_j0_zero(k).unwrap()).collect();
        for w in zeros.windows(2) {
            assert!(w[1] > w[0]);
        }
        for k in 4..zeros.len() - 1 {
            let gap = zeros[k + 1] - zeros[k];
            assert!((gap - PI).abs() < 0.02 * PI, "gap {gap}");
        }
    }

    #[test]
    fn table_matches_direct_evaluation() {
        let mut worst: f64 = 0.0;
        let mut x = 0.0;
        while x < 260.0 {
            let (t0, t1) = j0_j1(x);
            let d = bessel_j_orders(1, x).unwrap();
            worst = worst.max((t0 - d[0]).abs()).max((t1 - d[1]).abs());
            x += 0.0071;
        }
        assert!(worst < 1e-11, "table error {worst:e}");
    }

    #[test]
    fn bounded_by_one() {
        for n in 0..=20 {
            for i in 0..400 {
                let x = i as f64 * 0.25;
                assert!(bessel_j(n, x).unwrap().abs() <= 1.0);
            }
        }
    }
}
