//! Client to server gaze telemetry.
//!
//! Gaze samples travel as fixed 24-byte little-endian datagrams:
//!
//! ```text
//! offset  size  field
//!      0     2  magic "GZ" (0x47 0x5A)
//!      2     1  version (1)
//!      3     1  flags (bit 0: valid)
//!      4     4  seq, u32
//!      8     8  timestamp_us, u64
//!     16     4  x_norm, f32 in [0, 1]
//!     20     4  y_norm, f32 in [0, 1]
//! ```
//!
//! Coordinates are normalized by the sender's frame size so client and server
//! resolutions may differ. Delivery is unreliable and unordered; the receiver
//! keeps only the newest message by `seq` in a [`LatestGazeCell`].

mod channel;
mod udp;

use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};

use crate::gaze::GazeSample;
use crate::grid::{GridSpec, PixelPoint};
use crate::{Error, Result};

pub use channel::{channel_transmit, Arrival, ChannelSpec};
pub use udp::{spawn_receiver, GazeSender, ReceiverStats, DEFAULT_ADDR};

pub const MAGIC: [u8; 2] = *b"GZ";
pub const VERSION: u8 = 1;
pub const MESSAGE_LEN: usize = 24;
pub const FLAG_VALID: u8 = 0x01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GazeMessage {
    pub version: u8,
    pub flags: u8,
    pub seq: u32,
    pub timestamp_us: u64,
    pub x_norm: f32,
    pub y_norm: f32,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DecodeError {
    #[error("gaze message must be {MESSAGE_LEN} bytes, got {0}")]
    Length(usize),
    #[error("bad magic {0:02X?}")]
    Magic([u8; 2]),
    #[error("unsupported protocol version {0}")]
    UnsupportedVersion(u8),
    #[error("normalized coordinate {0} outside [0, 1]")]
    CoordinateRange(f32),
}

impl GazeMessage {
    /// Message for `sample`, normalized against `grid`. The point is clamped
    /// into the frame first.
    pub fn from_sample(sample: &GazeSample, grid: &GridSpec) -> Result<Self> {
        let p = grid.clamp_to_frame(sample.point)?;
        Ok(GazeMessage {
            version: VERSION,
            flags: if sample.valid { FLAG_VALID } else { 0 },
            seq: sample.seq as u32,
            timestamp_us: sample.timestamp_us,
            x_norm: (p.x_px / grid.frame_width_px() as f64) as f32,
            y_norm: (p.y_px / grid.frame_height_px() as f64) as f32,
        })
    }

    pub fn is_valid(&self) -> bool {
        self.flags & FLAG_VALID != 0
    }

    /// Position in pixels of `grid`, clamped into the frame.
    pub fn to_pixel(&self, grid: &GridSpec) -> PixelPoint {
        let p = PixelPoint::new(
            self.x_norm as f64 * grid.frame_width_px() as f64,
            self.y_norm as f64 * grid.frame_height_px() as f64,
        );
        grid.clamp_to_frame(p)
            .expect("decoded coordinates are finite")
    }
}

fn check_coord(v: f32) -> Result<(), DecodeError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(DecodeError::CoordinateRange(v))
    }
}

pub fn encode(msg: &GazeMessage) -> Result<[u8; MESSAGE_LEN]> {
    for v in [msg.x_norm, msg.y_norm] {
        if check_coord(v).is_err() {
            return Err(Error::domain(format!(
                "normalized coordinate {v} outside [0, 1]; clamp before encoding"
            )));
        }
    }
    let mut buf = [0u8; MESSAGE_LEN];
    buf[0..2].copy_from_slice(&MAGIC);
    buf[2] = msg.version;
    buf[3] = msg.flags;
    buf[4..8].copy_from_slice(&msg.seq.to_le_bytes());
    buf[8..16].copy_from_slice(&msg.timestamp_us.to_le_bytes());
    buf[16..20].copy_from_slice(&msg.x_norm.to_le_bytes());
    buf[20..24].copy_from_slice(&msg.y_norm.to_le_bytes());
    Ok(buf)
}

pub fn decode(bytes: &[u8]) -> Result<GazeMessage, DecodeError> {
    let buf: &[u8; MESSAGE_LEN] = bytes
        .try_into()
        .map_err(|_| DecodeError::Length(bytes.len()))?;
    if buf[0..2] != MAGIC {
        return Err(DecodeError::Magic([buf[0], buf[1]]));
    }
    if buf[2] != VERSION {
        return Err(DecodeError::UnsupportedVersion(buf[2]));
    }
    let le4 = |at: usize| [buf[at], buf[at + 1], buf[at + 2], buf[at + 3]];
    let x_norm = f32::from_le_bytes(le4(16));
    let y_norm = f32::from_le_bytes(le4(20));
    check_coord(x_norm)?;
    check_coord(y_norm)?;
    let mut ts = [0u8; 8];
    ts.copy_from_slice(&buf[8..16]);
    Ok(GazeMessage {
        version: buf[2],
        flags: buf[3],
        seq: u32::from_le_bytes(le4(4)),
        timestamp_us: u64::from_le_bytes(ts),
        x_norm,
        y_norm,
    })
}

/// Receiver-side register holding the newest gaze message.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LatestGazeCell {
    current: Option<GazeMessage>,
    last_update_us: Option<u64>,
}

impl LatestGazeCell {
    pub fn new() -> Self {
        Self::default()
    }

    /// Stores `msg` if the cell is empty or `msg.seq` is newer than the held
    /// message. Returns whether it was accepted.
    pub fn offer(&mut self, msg: GazeMessage, now_us: u64) -> bool {
        match self.current {
            Some(cur) if msg.seq <= cur.seq => false,
            _ => {
                self.current = Some(msg);
                self.last_update_us = Some(now_us);
                true
            }
        }
    }

    pub fn current(&self) -> Option<&GazeMessage> {
        self.current.as_ref()
    }

    pub fn last_update_us(&self) -> Option<u64> {
        self.last_update_us
    }
}

/// Snapshot of a [`LatestGazeCell`]: the message and when it was stored.
pub type CellSnapshot = Option<(GazeMessage, u64)>;

/// A [`LatestGazeCell`] shared between one writer thread and any number of
/// readers. Readers always see a message together with its own update time.
#[derive(Debug, Clone, Default)]
pub struct SharedGazeCell {
    inner: Arc<RwLock<LatestGazeCell>>,
}

impl SharedGazeCell {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn offer(&self, msg: GazeMessage, now_us: u64) -> bool {
        self.inner
            .write()
            .unwrap_or_else(|e| e.into_inner())
            .offer(msg, now_us)
    }

    pub fn snapshot(&self) -> CellSnapshot {
        let cell = self.inner.read().unwrap_or_else(|e| e.into_inner());
        cell.current.zip(cell.last_update_us)
    }
}
