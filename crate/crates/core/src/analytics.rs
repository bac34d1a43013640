//! Gaze trace statistics: gaze moments, change rate, KDE heatmaps, empirical
//! CDFs, and the eye-to-photon latency budget for foveation updates.
//!
//! Invalid samples are skipped by every analysis.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::gaze::{GazeSample, GazeTrace};
use crate::grid::{GridSpec, PixelPoint};
use crate::stats::sorted_finite;
use crate::{Error, Result};

/// A stretch of time during which gaze stays inside a circle around
/// `anchor`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GazeMoment {
    pub start_us: u64,
    /// Timestamp of the sample that ended the moment. The final moment of a
    /// trace is closed one inter-sample interval after its last sample.
    pub end_us: u64,
    pub anchor: PixelPoint,
    pub sample_count: usize,
}

impl GazeMoment {
    pub fn duration_us(&self) -> u64 {
        self.end_us - self.start_us
    }
}

/// Greedy single-pass segmentation into gaze moments.
///
/// A moment is anchored at its first sample and absorbs following samples
/// while they stay within `radius_px` (inclusive) of the anchor. The first
/// sample outside closes it and anchors the next one.
pub fn gaze_moments(trace: &GazeTrace, radius_px: f64) -> Result<Vec<GazeMoment>> {
    if !(radius_px > 0.0) {
        return Err(Error::domain(format!(
            "radius_px must be > 0, got {radius_px}"
        )));
    }
    let valid: Vec<&GazeSample> = trace.valid_samples().collect();
    let Some(first) = valid.first() else {
        return Err(Error::domain("gaze moments need at least one valid sample"));
    };

    let mut moments = Vec::new();
    let mut open = GazeMoment {
        start_us: first.timestamp_us,
        end_us: first.timestamp_us,
        anchor: first.point,
        sample_count: 1,
    };
    for s in &valid[1..] {
        if s.point.distance(open.anchor) <= radius_px {
            open.sample_count += 1;
        } else {
            open.end_us = s.timestamp_us;
            moments.push(open);
            open = GazeMoment {
                start_us: s.timestamp_us,
                end_us: s.timestamp_us,
                anchor: s.point,
                sample_count: 1,
            };
        }
    }
    let last_interval = match valid.as_slice() {
        [.., a, b] => b.timestamp_us - a.timestamp_us,
        _ => 0,
    };
    open.end_us = valid[valid.len() - 1].timestamp_us + last_interval;
    moments.push(open);
    Ok(moments)
}

/// Gaze speed in px/s between consecutive valid samples.
pub fn change_rate(trace: &GazeTrace) -> Result<Vec<f64>> {
    let valid: Vec<GazeSample> = trace.valid_samples().copied().collect();
    change_rate_samples(&valid)
}

/// [`change_rate`] over a raw slice, which may not be time-ordered.
pub fn change_rate_samples(samples: &[GazeSample]) -> Result<Vec<f64>> {
    if samples.len() < 2 {
        return Err(Error::domain("change rate needs at least two samples"));
    }
    samples
        .windows(2)
        .map(|w| {
            if w[1].timestamp_us <= w[0].timestamp_us {
                return Err(Error::domain(format!(
                    "timestamps {} -> {} do not increase",
                    w[0].timestamp_us, w[1].timestamp_us
                )));
            }
            let dt_s = (w[1].timestamp_us - w[0].timestamp_us) as f64 / 1e6;
            Ok(w[1].point.distance(w[0].point) / dt_s)
        })
        .collect()
}

/// Max-normalized kernel density on a regular grid of bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapGrid {
    pub cols: usize,
    pub rows: usize,
    /// Row-major.
    pub bins: Vec<f64>,
    pub bin_size_px: f64,
    pub bandwidth_px: f64,
}

impl HeatmapGrid {
    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.bins[row * self.cols + col]
    }

    pub fn bin_center(&self, col: usize, row: usize) -> PixelPoint {
        PixelPoint::new(
            (col as f64 + 0.5) * self.bin_size_px,
            (row as f64 + 0.5) * self.bin_size_px,
        )
    }
}

/// Bivariate Gaussian KDE with an isotropic kernel of standard deviation
/// `bandwidth_px`, evaluated at bin centers and scaled so the peak is 1.
/// Each bin sums its samples in trace order, so the parallel evaluation is
/// bit-identical to a sequential one.
pub fn heatmap(
    trace: &GazeTrace,
    grid: &GridSpec,
    bin_size_px: f64,
    bandwidth_px: f64,
) -> Result<HeatmapGrid> {
    if !(bin_size_px > 0.0 && bin_size_px.is_finite()) {
        return Err(Error::domain("bin_size_px must be finite and > 0"));
    }
    if !(bandwidth_px > 0.0 && bandwidth_px.is_finite()) {
        return Err(Error::domain("bandwidth_px must be finite and > 0"));
    }
    let points: Vec<PixelPoint> = trace.valid_samples().map(|s| s.point).collect();
    if points.is_empty() {
        return Err(Error::domain("heatmap needs at least one valid sample"));
    }

    let cols = (grid.frame_width_px() as f64 / bin_size_px).ceil() as usize;
    let rows = (grid.frame_height_px() as f64 / bin_size_px).ceil() as usize;
    let two_h2 = 2.0 * bandwidth_px * bandwidth_px;
    let mut bins = vec![0.0; cols * rows];
    bins.par_chunks_mut(cols)
        .enumerate()
        .for_each(|(row, out)| {
            let cy = (row as f64 + 0.5) * bin_size_px;
            for (col, bin) in out.iter_mut().enumerate() {
                let cx = (col as f64 + 0.5) * bin_size_px;
                *bin = points
                    .iter()
                    .map(|p| {
                        let dx = cx - p.x_px;
                        let dy = cy - p.y_px;
                        (-(dx * dx + dy * dy) / two_h2).exp()
                    })
                    .sum();
            }
        });

    let peak = bins.iter().copied().fold(0.0, f64::max);
    if peak > 0.0 {
        bins.iter_mut().for_each(|b| *b /= peak);
    }
    Ok(HeatmapGrid {
        cols,
        rows,
        bins,
        bin_size_px,
        bandwidth_px,
    })
}

/// Right-continuous empirical CDF.
#[derive(Debug, Clone, PartialEq)]
pub struct Ecdf {
    sorted: Vec<f64>,
}

impl Ecdf {
    pub fn new(values: &[f64]) -> Result<Self> {
        Ok(Ecdf {
            sorted: sorted_finite(values)?,
        })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// Fraction of values `<= x`.
    pub fn eval(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.sorted.len() as f64
    }

    /// Smallest observed value whose cumulative fraction reaches `p`.
    pub fn quantile(&self, p: f64) -> f64 {
        let n = self.sorted.len();
        let rank = (p.clamp(0.0, 1.0) * n as f64).ceil() as usize;
        self.sorted[rank.clamp(1, n) - 1]
    }

    /// `(value, fraction)` steps, one per distinct value.
    pub fn steps(&self) -> Vec<(f64, f64)> {
        let n = self.sorted.len() as f64;
        let mut out: Vec<(f64, f64)> = Vec::new();
        for (k, &v) in self.sorted.iter().enumerate() {
            let frac = (k + 1) as f64 / n;
            match out.last_mut() {
                Some(last) if last.0 == v => last.1 = frac,
                _ => out.push((v, frac)),
            }
        }
        out
    }
}

pub fn ecdf(values: &[f64]) -> Result<Vec<(f64, f64)>> {
    Ok(Ecdf::new(values)?.steps())
}

/// Time from an eye movement to the matching change on screen: the
/// control-to-photon latency of the streaming system plus one tracker
/// sampling interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyBudget {
    pub e2e_ms: f64,
    pub sampler_interval_ms: f64,
    pub total_ms: f64,
}

pub fn latency_budget(e2e_ms: f64, sampler_hz: f64) -> Result<LatencyBudget> {
    if !(sampler_hz > 0.0 && sampler_hz.is_finite()) {
        return Err(Error::domain(format!(
            "sampler rate must be > 0 Hz, got {sampler_hz}"
        )));
    }
    if !(e2e_ms >= 0.0 && e2e_ms.is_finite()) {
        return Err(Error::domain(format!(
            "e2e latency must be >= 0 ms, got {e2e_ms}"
        )));
    }
    let sampler_interval_ms = 1000.0 / sampler_hz;
    Ok(LatencyBudget {
        e2e_ms,
        sampler_interval_ms,
        total_ms: e2e_ms + sampler_interval_ms,
    })
}

/// Pixels the gaze covers at `rate_px_s` while the budget elapses.
pub fn shift_during(budget: &LatencyBudget, rate_px_s: f64) -> f64 {
    rate_px_s * budget.total_ms / 1000.0
}
