//! Desk-scale replay of a foveated streaming session.
//!
//! The client side optionally smooths the trace, then sends every valid
//! sample through the simulated channel at its own timestamp. The server
//! encodes frames at `k / fps`; each frame takes whatever gaze the
//! latest-wins cell holds at that instant (arrivals at exactly the frame time
//! are delivered first) and derives its offset map and bit estimate from it.
//! Until the first message arrives, frames are foveated on the frame center.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::analytics::Ecdf;
use crate::foveation::{compute_offset_map, FoveationParams};
use crate::gaze::{light_filter, FilterParams, GazeTrace};
use crate::grid::{GridSpec, PixelPoint};
use crate::ratemodel::{estimate_frame_bits, summarize_bitrates, BitrateSummary, RateModel};
use crate::stats::mean;
use crate::telemetry::{channel_transmit, ChannelSpec, GazeMessage, LatestGazeCell};
use crate::{Error, Result};

pub const DEFAULT_FPS: f64 = 40.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SessionConfig {
    /// Server-side frame geometry.
    pub grid: GridSpec,
    pub fov: FoveationParams,
    pub rate: RateModel,
    /// Channel parameters. Its `seed` is replaced by the session seed.
    pub channel: ChannelSpec,
    pub filter: Option<FilterParams>,
    pub fps: f64,
    /// Session length; defaults to the span of the trace.
    pub duration_s: Option<f64>,
    pub seed: u64,
}

impl SessionConfig {
    pub fn new(grid: GridSpec, fov: FoveationParams) -> Self {
        SessionConfig {
            grid,
            fov,
            rate: RateModel::default(),
            channel: ChannelSpec::default(),
            filter: None,
            fps: DEFAULT_FPS,
            duration_s: None,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fps > 0.0 && self.fps.is_finite()) {
            return Err(Error::domain(format!("fps must be > 0, got {}", self.fps)));
        }
        if let Some(d) = self.duration_s {
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::domain(format!("duration_s must be > 0, got {d}")));
            }
        }
        self.fov.validate(&self.grid)?;
        self.rate.validate()?;
        self.channel.validate()?;
        if let Some(f) = &self.filter {
            f.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub frame_index: u64,
    pub frame_time_us: u64,
    pub gaze_used: PixelPoint,
    /// Absent while no gaze message has arrived yet.
    pub gaze_seq: Option<u64>,
    /// Age of the gaze sample at encode time; 0 when no gaze has arrived.
    pub staleness_us: u64,
    pub mean_offset: f64,
    pub frame_bits: f64,
    pub savings_fraction: f64,
}

pub fn run_session(trace: &GazeTrace, config: &SessionConfig) -> Result<Vec<FrameRecord>> {
    config.validate()?;
    let frame_count = match (config.duration_s, trace.samples().last()) {
        (Some(d), _) => (d * config.fps).floor() as u64,
        (None, Some(last)) => (last.timestamp_us as f64 * config.fps / 1e6).floor() as u64 + 1,
        (None, None) => {
            return Err(Error::domain(
                "empty trace and no duration: nothing to simulate",
            ))
        }
    };

    let filtered;
    let client_trace = match &config.filter {
        Some(f) => {
            filtered = light_filter(trace, f)?;
            &filtered
        }
        None => trace,
    };
    let sends = client_trace
        .valid_samples()
        .map(|s| {
            Ok((
                s.timestamp_us,
                GazeMessage::from_sample(s, client_trace.grid())?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let channel = ChannelSpec {
        seed: config.seed,
        ..config.channel
    };
    let arrivals = channel_transmit(&sends, &channel)?;

    let mut cell = LatestGazeCell::new();
    let mut pending = arrivals.iter().peekable();
    let mut records = Vec::with_capacity(frame_count as usize);
    for k in 0..frame_count {
        let frame_time_us = (k as f64 * 1e6 / config.fps).round() as u64;
        while let Some(a) = pending.next_if(|a| a.arrival_us <= frame_time_us) {
            cell.offer(a.msg, a.arrival_us);
        }

        let (gaze_used, gaze_seq, staleness_us) = match cell.current() {
            Some(msg) => (
                msg.to_pixel(&config.grid),
                Some(msg.seq as u64),
                frame_time_us - msg.timestamp_us,
            ),
            None => (config.grid.clamp_to_frame(config.grid.center())?, None, 0),
        };
        let map = compute_offset_map(&config.grid, &config.fov, gaze_used)?;
        let est = estimate_frame_bits(&map, &config.rate)?;
        records.push(FrameRecord {
            frame_index: k,
            frame_time_us,
            gaze_used,
            gaze_seq,
            staleness_us,
            mean_offset: map.mean(),
            frame_bits: est.frame_bits,
            savings_fraction: est.savings_fraction,
        });
    }
    Ok(records)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub frames: usize,
    pub frames_with_gaze: usize,
    pub frame_bits: BitrateSummary,
    pub mean_savings: f64,
    /// Staleness percentiles over frames that had gaze, in microseconds.
    pub staleness_p50_us: Option<f64>,
    pub staleness_p90_us: Option<f64>,
    pub staleness_p99_us: Option<f64>,
}

pub fn session_summary(records: &[FrameRecord]) -> Result<SessionSummary> {
    if records.is_empty() {
        return Err(Error::domain("cannot summarize an empty session"));
    }
    let bits: Vec<f64> = records.iter().map(|r| r.frame_bits).collect();
    let savings: Vec<f64> = records.iter().map(|r| r.savings_fraction).collect();
    let staleness: Vec<f64> = records
        .iter()
        .filter(|r| r.gaze_seq.is_some())
        .map(|r| r.staleness_us as f64)
        .collect();
    let cdf = if staleness.is_empty() {
        None
    } else {
        Some(Ecdf::new(&staleness)?)
    };
    let pct = |p: f64| cdf.as_ref().map(|c| c.quantile(p));
    Ok(SessionSummary {
        frames: records.len(),
        frames_with_gaze: staleness.len(),
        frame_bits: summarize_bitrates(&bits)?,
        mean_savings: mean(&savings),
        staleness_p50_us: pct(0.5),
        staleness_p90_us: pct(0.9),
        staleness_p99_us: pct(0.99),
    })
}

/// One JSON object per line.
pub fn write_records_jsonl<W: Write>(mut out: W, records: &[FrameRecord]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        writeln!(out)?;
    }
    Ok(())
}

pub fn write_records_csv<W: Write>(mut out: W, records: &[FrameRecord]) -> Result<()> {
    writeln!(
        out,
        "frame_index,frame_time_us,gaze_x,gaze_y,gaze_seq,staleness_us,mean_offset,frame_bits,savings_fraction"
    )?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.frame_index,
            r.frame_time_us,
            r.gaze_used.x_px,
            r.gaze_used.y_px,
            r.gaze_seq.map(|s| s.to_string()).unwrap_or_default(),
            r.staleness_us,
            r.mean_offset,
            r.frame_bits,
            r.savings_fraction
        )?;
    }
    Ok(())
}
