//! Gaze samples and traces: CSV ingestion, synthetic generation and a
//! velocity-gated smoother standing in for the tracker's "light" filter.

use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::grid::{GridSpec, PixelPoint};
use crate::{Error, Result};

pub const TRACE_HEADER: [&str; 3] = ["timestamp_us", "x_px", "y_px"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GazeSample {
    pub timestamp_us: u64,
    pub point: PixelPoint,
    pub seq: u64,
    pub valid: bool,
}

/// An immutable, time-ordered sequence of gaze samples in the pixel space of
/// `grid`.
#[derive(Debug, Clone, PartialEq)]
pub struct GazeTrace {
    grid: GridSpec,
    samples: Vec<GazeSample>,
}

impl GazeTrace {
    /// Checks strictly increasing timestamps and seq, and finite points.
    pub fn new(grid: GridSpec, samples: Vec<GazeSample>) -> Result<Self> {
        for (k, s) in samples.iter().enumerate() {
            if !s.point.is_finite() {
                return Err(Error::domain(format!("sample {k} has a non-finite point")));
            }
            if k > 0 {
                let prev = &samples[k - 1];
                if s.timestamp_us <= prev.timestamp_us {
                    return Err(Error::domain(format!(
                        "sample {k}: timestamp {} not after {}",
                        s.timestamp_us, prev.timestamp_us
                    )));
                }
                if s.seq <= prev.seq {
                    return Err(Error::domain(format!("sample {k}: seq not increasing")));
                }
            }
        }
        Ok(GazeTrace { grid, samples })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn samples(&self) -> &[GazeSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn valid_samples(&self) -> impl Iterator<Item = &GazeSample> {
        self.samples.iter().filter(|s| s.valid)
    }

    /// Writes the trace in the `timestamp_us,x_px,y_px,valid` CSV format.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "timestamp_us,x_px,y_px,valid")?;
        for s in &self.samples {
            writeln!(
                out,
                "{},{:.3},{:.3},{}",
                s.timestamp_us,
                s.point.x_px,
                s.point.y_px,
                u8::from(s.valid)
            )?;
        }
        Ok(())
    }
}

pub fn load_trace(path: impl AsRef<Path>, grid: GridSpec) -> Result<GazeTrace> {
    read_trace(File::open(path)?, grid)
}

/// Parses a trace CSV. The first three columns must be named
/// `timestamp_us,x_px,y_px`; an optional fourth `valid` column accepts
/// `1/0/true/false`. Line numbers in errors count the header as line 1.
pub fn read_trace<R: Read>(reader: R, grid: GridSpec) -> Result<GazeTrace> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::Parse {
        line: 1,
        msg: e.to_string(),
    })?;
    let names: Vec<&str> = headers.iter().collect();
    let has_valid = match names.as_slice() {
        [a, b, c] if [*a, *b, *c] == TRACE_HEADER => false,
        [a, b, c, "valid"] if [*a, *b, *c] == TRACE_HEADER => true,
        _ => {
            return Err(Error::Parse {
                line: 1,
                msg: format!(
                    "expected header timestamp_us,x_px,y_px[,valid], found {}",
                    names.join(",")
                ),
            })
        }
    };

    let mut samples: Vec<GazeSample> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            msg: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = |idx: usize| -> Result<&str> {
            rec.get(idx).ok_or_else(|| Error::Parse {
                line,
                msg: format!("missing column {}", idx + 1),
            })
        };
        let parse_err = |what: &str, raw: &str| Error::Parse {
            line,
            msg: format!("bad {what} {raw:?}"),
        };

        let ts_raw = field(0)?;
        let timestamp_us: u64 = ts_raw
            .parse()
            .map_err(|_| parse_err("timestamp_us", ts_raw))?;
        let x_raw = field(1)?;
        let x_px: f64 = x_raw.parse().map_err(|_| parse_err("x_px", x_raw))?;
        let y_raw = field(2)?;
        let y_px: f64 = y_raw.parse().map_err(|_| parse_err("y_px", y_raw))?;
        if !x_px.is_finite() || !y_px.is_finite() {
            return Err(Error::Parse {
                line,
                msg: "non-finite coordinate".into(),
            });
        }
        let valid = if has_valid {
            match field(3)? {
                "1" | "true" => true,
                "0" | "false" => false,
                other => return Err(parse_err("valid flag", other)),
            }
        } else {
            true
        };

        if let Some(prev) = samples.last() {
            if timestamp_us <= prev.timestamp_us {
                return Err(Error::Validation {
                    line,
                    msg: format!(
                        "timestamp {timestamp_us} does not increase (previous {})",
                        prev.timestamp_us
                    ),
                });
            }
        }
        samples.push(GazeSample {
            timestamp_us,
            point: PixelPoint::new(x_px, y_px),
            seq: samples.len() as u64,
            valid,
        });
    }
    GazeTrace::new(grid, samples)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterParams {
    /// EMA weight of the newest raw sample. `1.0` disables smoothing.
    pub alpha_slow: f64,
    /// Speeds above this reset the filter to the raw sample.
    pub saccade_speed_px_s: f64,
}

impl Default for FilterParams {
    fn default() -> Self {
        FilterParams {
            alpha_slow: 0.4,
            saccade_speed_px_s: 700.0,
        }
    }
}

impl FilterParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_slow > 0.0 && self.alpha_slow <= 1.0) {
            return Err(Error::domain(format!(
                "alpha_slow must lie in (0, 1], got {}",
                self.alpha_slow
            )));
        }
        if !(self.saccade_speed_px_s > 0.0) {
            return Err(Error::domain(format!(
                "saccade_speed_px_s must be > 0, got {}",
                self.saccade_speed_px_s
            )));
        }
        Ok(())
    }
}

/// Exponential smoothing gated by eye speed.
///
/// Speed is measured between consecutive raw samples. Above the saccade
/// threshold the output snaps to the raw position; below it the output moves
/// `alpha_slow` of the way from the previous output toward the raw sample.
/// Invalid samples pass through untouched and do not update filter state.
pub fn light_filter(trace: &GazeTrace, params: &FilterParams) -> Result<GazeTrace> {
    params.validate()?;
    let a = params.alpha_slow;
    let mut prev: Option<(GazeSample, PixelPoint)> = None;
    let mut out = Vec::with_capacity(trace.len());
    for s in trace.samples() {
        if !s.valid {
            out.push(*s);
            continue;
        }
        let point = match prev {
            None => s.point,
            Some((raw, smoothed)) => {
                let dt_s = (s.timestamp_us - raw.timestamp_us) as f64 / 1e6;
                let speed = s.point.distance(raw.point) / dt_s;
                if speed > params.saccade_speed_px_s {
                    s.point
                } else {
                    PixelPoint::new(
                        a * s.point.x_px + (1.0 - a) * smoothed.x_px,
                        a * s.point.y_px + (1.0 - a) * smoothed.y_px,
                    )
                }
            }
        };
        prev = Some((*s, point));
        out.push(GazeSample { point, ..*s });
    }
    GazeTrace::new(*trace.grid(), out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceKind {
    /// Steady gaze at the frame center.
    Fixate,
    /// Left third of the frame for half the duration, then the right third.
    Step,
    /// Outward spiral around the center, half a turn per second.
    Spiral,
    /// Drifting fixations separated by random saccades.
    RandomWalk,
}

impl FromStr for TraceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixate" => Ok(TraceKind::Fixate),
            "step" => Ok(TraceKind::Step),
            "spiral" => Ok(TraceKind::Spiral),
            "random_walk" | "random-walk" => Ok(TraceKind::RandomWalk),
            other => Err(Error::domain(format!(
                "unknown trace kind {other:?} (fixate, step, spiral, random_walk)"
            ))),
        }
    }
}

impl fmt::Display for TraceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TraceKind::Fixate => "fixate",
            TraceKind::Step => "step",
            TraceKind::Spiral => "spiral",
            TraceKind::RandomWalk => "random_walk",
        })
    }
}

const SACCADE_PROB: f64 = 0.02;
const DRIFT_SIGMA_PX: f64 = 2.0;
const JITTER_SIGMA_PX: f64 = 1.5;

/// Deterministic test trace with `floor(duration_s * rate_hz)` samples.
/// Points are clamped to the frame and rounded to 1/1000 px so a trace
/// survives a CSV round trip unchanged.
pub fn generate_synthetic_trace(
    kind: TraceKind,
    duration_s: f64,
    rate_hz: f64,
    seed: u64,
    grid: GridSpec,
) -> Result<GazeTrace> {
    if !(duration_s > 0.0 && duration_s.is_finite()) {
        return Err(Error::domain(format!(
            "duration_s must be > 0, got {duration_s}"
        )));
    }
    if !(rate_hz > 0.0 && rate_hz <= 1e6) {
        return Err(Error::domain(format!(
            "rate_hz must lie in (0, 1e6], got {rate_hz}"
        )));
    }
    let n = (duration_s * rate_hz).floor() as usize;
    let w = grid.frame_width_px() as f64;
    let h = grid.frame_height_px() as f64;
    let center = grid.center();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let drift = Normal::new(0.0, DRIFT_SIGMA_PX).expect("constant sigma");
    let jitter = Normal::new(0.0, JITTER_SIGMA_PX).expect("constant sigma");
    let target_x = Normal::new(center.x_px, w / 6.0).expect("positive width");
    let target_y = Normal::new(center.y_px, h / 6.0).expect("positive height");
    let mut anchor = center;

    let mut samples = Vec::with_capacity(n);
    for k in 0..n {
        let t_s = k as f64 / rate_hz;
        let raw = match kind {
            TraceKind::Fixate => center,
            TraceKind::Step => {
                if 2 * k < n {
                    PixelPoint::new(w / 3.0, center.y_px)
                } else {
                    PixelPoint::new(2.0 * w / 3.0, center.y_px)
                }
            }
            TraceKind::Spiral => {
                let r = 0.4 * w.min(h) * t_s / duration_s;
                let theta = std::f64::consts::PI * t_s;
                PixelPoint::new(center.x_px + r * theta.cos(), center.y_px + r * theta.sin())
            }
            TraceKind::RandomWalk => {
                if k > 0 && rng.random_bool(SACCADE_PROB) {
                    anchor = PixelPoint::new(target_x.sample(&mut rng), target_y.sample(&mut rng));
                } else {
                    anchor.x_px += drift.sample(&mut rng);
                    anchor.y_px += drift.sample(&mut rng);
                }
                anchor = grid.clamp_to_frame(anchor)?;
                PixelPoint::new(
                    anchor.x_px + jitter.sample(&mut rng),
                    anchor.y_px + jitter.sample(&mut rng),
                )
            }
        };
        let p = grid.clamp_to_frame(raw)?;
        samples.push(GazeSample {
            timestamp_us: (k as f64 * 1e6 / rate_hz).round() as u64,
            point: PixelPoint::new(round_milli(p.x_px), round_milli(p.y_px)),
            seq: k as u64,
            valid: true,
        });
    }
    GazeTrace::new(grid, samples)
}

fn round_milli(v: f64) -> f64 {
    (v * 1000.0).round() / 1000.0
}
