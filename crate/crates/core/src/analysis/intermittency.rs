//! Sliding-window angular momentum, its histogram, and segmentation of a
//! record into runs of a single eigenstate.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::classify::{classify_point, quantized_radius, EigenstateLabel};
use super::observables::{windowed, WindowStats};
use super::AnalysisError;
use crate::model::{median, Impact};

pub const HISTOGRAM_MIN: f64 = -3.0;
pub const HISTOGRAM_MAX: f64 = 3.0;
pub const HISTOGRAM_BIN_WIDTH: f64 = 0.05;
const HISTOGRAM_BINS: usize = 120;
/// A peak must exceed this multiple of the median bin mass.
pub const PEAK_FACTOR: f64 = 1.5;

/// `4π R̄_2 / V`: two orbital periods of the `n = 2` circle.
pub fn default_window(speed: f64) -> f64 {
    2.0 * TAU * quantized_radius(2) / speed
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `HISTOGRAM_BINS + 1` ascending edges.
    pub edges: Vec<f64>,
    pub probabilities: Vec<f64>,
}

impl Histogram {
    pub fn centre(&self, bin: usize) -> f64 {
        0.5 * (self.edges[bin] + self.edges[bin + 1])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub location: f64,
    pub mass: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntermittencyProfile {
    /// Window length in Faraday periods.
    pub window: f64,
    /// `(window centre time, windowed L̄z)` at unit stride.
    pub series: Vec<(f64, f64)>,
    pub histogram: Histogram,
    pub peaks: Vec<Peak>,
}

/// A run of one eigenstate over `[t_start, t_end)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub t_start: f64,
    pub t_end: f64,
    pub label: EigenstateLabel,
}

/// Normalized histogram of `values` on `[-3, 3]` in bins of 0.05.
/// Out-of-range values land in the end bins; non-finite values are skipped.
pub fn histogram(values: impl IntoIterator<Item = f64>) -> Histogram {
    let span = HISTOGRAM_MAX - HISTOGRAM_MIN;
    let edges: Vec<f64> = (0..=HISTOGRAM_BINS)
        .map(|i| HISTOGRAM_MIN + span * i as f64 / HISTOGRAM_BINS as f64)
        .collect();
    let mut counts = vec![0u64; HISTOGRAM_BINS];
    let mut total = 0u64;
    for v in values.into_iter().filter(|v| v.is_finite()) {
        let bin = ((v - HISTOGRAM_MIN) / HISTOGRAM_BIN_WIDTH).floor();
        let bin = bin.clamp(0.0, (HISTOGRAM_BINS - 1) as f64) as usize;
        counts[bin] += 1;
        total += 1;
    }
    let probabilities = counts
        .iter()
        .map(|&c| if total == 0 { 0.0 } else { c as f64 / total as f64 })
        .collect();
    Histogram { edges, probabilities }
}

/// Local maxima strictly above both neighbours and above `PEAK_FACTOR` times
/// the median bin mass. The median is taken over the occupied support padded
/// with one empty bin on each side, so the mostly-empty tails of the fixed
/// range do not drive the threshold to zero.
pub fn find_peaks(hist: &Histogram) -> Vec<Peak> {
    let p = &hist.probabilities;
    let Some(first) = p.iter().position(|&v| v > 0.0) else {
        return Vec::new();
    };
    let last = p.iter().rposition(|&v| v > 0.0).unwrap_or(first);
    let mut support: Vec<f64> = p[first..=last].to_vec();
    support.extend([0.0, 0.0]);
    let threshold = PEAK_FACTOR * median(&mut support);
    (first..=last)
        .filter(|&i| {
            let left = if i == 0 { 0.0 } else { p[i - 1] };
            let right = p.get(i + 1).copied().unwrap_or(0.0);
            p[i] > threshold && p[i] > left && p[i] > right
        })
        .map(|i| Peak {
            location: hist.centre(i),
            mass: p[i],
        })
        .collect()
}

fn window_samples(impacts: &[Impact], window: f64, speed: f64) -> Result<usize, AnalysisError> {
    if !(window > 0.0 && window.is_finite()) {
        return Err(AnalysisError::InvalidArgument { name: "window", value: window });
    }
    if !(speed > 0.0 && speed.is_finite()) {
        return Err(AnalysisError::InvalidArgument {
            name: "reference_speed",
            value: speed,
        });
    }
    let w = (window.round() as usize).max(1);
    if impacts.len() < w {
        return Err(AnalysisError::ShorterThanWindow {
            duration: impacts.len(),
            window,
        });
    }
    Ok(w)
}

/// L̄z averaged over every window of `window` consecutive bounces.
pub fn sliding_lz(impacts: &[Impact], window: f64, speed: f64) -> Result<IntermittencyProfile, AnalysisError> {
    let w = window_samples(impacts, window, speed)?;
    let stats = windowed(impacts, w, 1, speed);
    let histogram = histogram(stats.iter().map(|s| s.lz));
    let peaks = find_peaks(&histogram);
    Ok(IntermittencyProfile {
        window,
        series: stats.iter().map(|s| (s.centre, s.lz)).collect(),
        histogram,
        peaks,
    })
}

struct Run {
    first: usize,
    last: usize,
    label: EigenstateLabel,
}

/// Splits the record into single-eigenstate segments.
///
/// Every window of length `window` is classified by its R̄ and L̄z. Runs of
/// consecutive windows with the same `(n, m)` that contain fewer than one
/// window's worth of windows are transitions and are dropped; neighbouring
/// runs that then share a label merge. Each segment is labelled from the mean
/// of its windows, and boundaries sit midway between the centres of the
/// adjacent runs' outermost windows, so segments tile the record.
pub fn segment_eigenstates(impacts: &[Impact], window: f64, speed: f64) -> Result<Vec<Segment>, AnalysisError> {
    let w = window_samples(impacts, window, speed)?;
    let stats = windowed(impacts, w, 1, speed);
    let labels: Vec<EigenstateLabel> = stats.iter().map(|s| classify_point(s.radius, s.lz)).collect();

    let mut runs: Vec<Run> = Vec::new();
    for (i, label) in labels.iter().enumerate() {
        match runs.last_mut() {
            Some(run) if run.label.same_state(label) => run.last = i,
            _ => runs.push(Run {
                first: i,
                last: i,
                label: *label,
            }),
        }
    }
    let mut kept: Vec<Run> = Vec::new();
    for run in runs.into_iter().filter(|r| r.last - r.first + 1 >= w) {
        match kept.last_mut() {
            Some(prev) if prev.label.same_state(&run.label) => prev.last = run.last,
            _ => kept.push(run),
        }
    }

    let record_start = impacts[0].t;
    let record_end = impacts[impacts.len() - 1].t + 1.0;
    let mean_label = |run: &Run| {
        let part: &[WindowStats] = &stats[run.first..=run.last];
        let k = part.len() as f64;
        let r = part.iter().map(|s| s.radius).sum::<f64>() / k;
        let l = part.iter().map(|s| s.lz).sum::<f64>() / k;
        classify_point(r, l)
    };
    let segments = kept
        .iter()
        .enumerate()
        .map(|(k, run)| {
            let t_start = if k == 0 {
                record_start
            } else {
                0.5 * (stats[kept[k - 1].last].centre + stats[run.first].centre)
            };
            let t_end = if k + 1 == kept.len() {
                record_end
            } else {
                0.5 * (stats[run.last].centre + stats[kept[k + 1].first].centre)
            };
            Segment {
                t_start,
                t_end,
                label: mean_label(run),
            }
        })
        .collect();
    Ok(segments)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::mean_angular_momentum;
    use crate::analysis::synthetic::{circular_orbit, concatenate, lemniscate_orbit, lemniscate_perimeter};
    use proptest::prelude::*;

    const V: f64 = 0.037;

    #[test]
    fn steady_circle_is_one_bin() {
        let c = circular_orbit(0.87, V, true, 3000);
        let prof = sliding_lz(&c, default_window(V), V).unwrap();
        let first = prof.series[0].1;
        assert!(prof.series.iter().all(|s| (s.1 - first).abs() < 1e-9));
        let occupied: Vec<_> = prof.histogram.probabilities.iter().filter(|&&p| p > 0.0).collect();
        assert_eq!(occupied, vec![&1.0]);
        assert_eq!(prof.peaks.len(), 1);
        assert!((prof.peaks[0].location - 0.87).abs() <= HISTOGRAM_BIN_WIDTH);
    }

    #[test]
    fn full_window_is_the_mean() {
        let c = lemniscate_orbit(1.0, V, 1234);
        let prof = sliding_lz(&c, 1234.0, V).unwrap();
        assert_eq!(prof.series.len(), 1);
        assert_eq!(prof.series[0].1, mean_angular_momentum(&c, V).unwrap());
    }

    #[test]
    fn short_record_is_an_error() {
        let c = circular_orbit(1.0, V, true, 100);
        assert!(matches!(
            sliding_lz(&c, 200.0, V),
            Err(AnalysisError::ShorterThanWindow { duration: 100, .. })
        ));
        assert!(matches!(segment_eigenstates(&[], 10.0, V), Err(AnalysisError::ShorterThanWindow { .. })));
        assert!(sliding_lz(&c, -1.0, V).is_err());
    }

    #[test]
    fn default_window_value() {
        assert!((default_window(0.05) - 4.0 * std::f64::consts::PI * 0.87 / 0.05).abs() < 1e-12);
    }

    #[test]
    fn histogram_edges_and_clamping() {
        let h = histogram([-10.0, 10.0, 0.01, f64::NAN]);
        assert_eq!(h.edges.len(), 121);
        assert_eq!(h.edges[0], -3.0);
        assert_eq!(h.edges[120], 3.0);
        assert!((h.probabilities[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((h.probabilities[119] - 1.0 / 3.0).abs() < 1e-15);
        assert!((h.probabilities[60] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn peaks_ignore_noise_floor() {
        let mut values = Vec::new();
        // broad low plateau from -1 to 1 plus three sharp modes
        for k in 0..400 {
            values.push(-1.0 + 2.0 * k as f64 / 400.0);
        }
        for &m in &[-0.87, 0.01, 0.87] {
            values.extend(std::iter::repeat(m).take(300));
        }
        let peaks = find_peaks(&histogram(values));
        let locs: Vec<f64> = peaks.iter().map(|p| p.location).collect();
        assert_eq!(locs.len(), 3, "{locs:?}");
        for (l, m) in locs.iter().zip([-0.87, 0.01, 0.87]) {
            assert!((l - m).abs() < HISTOGRAM_BIN_WIDTH);
        }
    }

    #[test]
    fn pure_run_is_one_segment() {
        let c = circular_orbit(0.37, V, true, 4000);
        let segs = segment_eigenstates(&c, default_window(V), V).unwrap();
        assert_eq!(segs.len(), 1);
        assert_eq!((segs[0].label.n, segs[0].label.m), (1, 1));
        assert_eq!((segs[0].t_start, segs[0].t_end), (0.0, 4000.0));
    }

    #[test]
    fn oval_lemniscate_oval_decomposes_exactly() {
        // The window spans two periods of the oval; the lemniscate is run
        // at the speed that also fits two of its periods in one window.
        let len = 2000;
        let window = default_window(V).round();
        let lemniscate_speed = 2.0 * lemniscate_perimeter(1.0) / window;
        let record = concatenate(&[
            circular_orbit(quantized_radius(2), V, true, len),
            lemniscate_orbit(1.0, lemniscate_speed, len),
            circular_orbit(quantized_radius(2), V, false, len),
        ]);
        let segs = segment_eigenstates(&record, window, V).unwrap();
        let states: Vec<(u32, i32)> = segs.iter().map(|s| (s.label.n, s.label.m)).collect();
        assert_eq!(states, vec![(2, 2), (2, 0), (2, -2)]);
        assert!((segs[0].t_end - len as f64).abs() < window / 2.0, "{segs:?}");
        assert!((segs[1].t_end - 2.0 * len as f64).abs() < window / 2.0, "{segs:?}");
        assert_eq!(segs[2].t_end, 3.0 * len as f64);

        let prof = sliding_lz(&record, window, V).unwrap();
        let target = 1.0 - crate::analysis::EPSILON / 2.0;
        let mut major = prof.peaks.clone();
        major.sort_by(|p, q| q.mass.total_cmp(&p.mass));
        major.truncate(3);
        major.sort_by(|p, q| p.location.total_cmp(&q.location));
        for (p, t) in major.iter().zip([-target, 0.0, target]) {
            assert!((p.location - t).abs() < 0.1, "{:?}", prof.peaks);
        }
    }

    proptest! {
        #[test]
        fn histogram_is_normalized(values in prop::collection::vec(-5.0..5.0f64, 1..500)) {
            let h = histogram(values);
            let total: f64 = h.probabilities.iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            for p in find_peaks(&h) {
                prop_assert!(p.mass > 0.0);
            }
        }
    }
}
