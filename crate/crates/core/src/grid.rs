//! Frame geometry and macroblock tiling.
//!
//! Pixel coordinates use a top-left origin with y growing downward. A frame
//! whose dimensions are not multiples of the macroblock size gets partial
//! macroblocks along its right and bottom edges; they count as whole
//! macroblocks everywhere.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const DEFAULT_MB_SIZE: u32 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    frame_width_px: u32,
    frame_height_px: u32,
    mb_size_px: u32,
}

impl GridSpec {
    pub fn new(frame_width_px: u32, frame_height_px: u32, mb_size_px: u32) -> Result<Self> {
        if mb_size_px == 0 {
            return Err(Error::domain("macroblock size must be positive"));
        }
        if frame_width_px < mb_size_px || frame_height_px < mb_size_px {
            return Err(Error::domain(format!(
                "frame {frame_width_px}x{frame_height_px} is smaller than one {mb_size_px}px macroblock"
            )));
        }
        Ok(GridSpec {
            frame_width_px,
            frame_height_px,
            mb_size_px,
        })
    }

    /// Grid with the default 16 pixel AVC macroblock.
    pub fn with_default_mb(frame_width_px: u32, frame_height_px: u32) -> Result<Self> {
        Self::new(frame_width_px, frame_height_px, DEFAULT_MB_SIZE)
    }

    pub fn frame_width_px(&self) -> u32 {
        self.frame_width_px
    }

    pub fn frame_height_px(&self) -> u32 {
        self.frame_height_px
    }

    pub fn mb_size_px(&self) -> u32 {
        self.mb_size_px
    }

    pub fn mb_cols(&self) -> usize {
        self.frame_width_px.div_ceil(self.mb_size_px) as usize
    }

    pub fn mb_rows(&self) -> usize {
        self.frame_height_px.div_ceil(self.mb_size_px) as usize
    }

    pub fn mb_count(&self) -> usize {
        self.mb_cols() * self.mb_rows()
    }

    /// Geometric center of the frame.
    pub fn center(&self) -> PixelPoint {
        PixelPoint::new(
            self.frame_width_px as f64 / 2.0,
            self.frame_height_px as f64 / 2.0,
        )
    }

    pub fn contains(&self, p: PixelPoint) -> bool {
        p.x_px >= 0.0
            && p.y_px >= 0.0
            && p.x_px < self.frame_width_px as f64
            && p.y_px < self.frame_height_px as f64
    }

    /// Macroblock `(column, row)` holding `p`. Points exactly on a macroblock
    /// boundary belong to the macroblock to their right/below.
    pub fn mb_index_of(&self, p: PixelPoint) -> Result<(usize, usize)> {
        let w = self.frame_width_px as f64;
        let h = self.frame_height_px as f64;
        if !(p.x_px >= 0.0 && p.x_px < w) {
            return Err(Error::domain(format!(
                "x_px = {} is outside [0, {w})",
                p.x_px
            )));
        }
        if !(p.y_px >= 0.0 && p.y_px < h) {
            return Err(Error::domain(format!(
                "y_px = {} is outside [0, {h})",
                p.y_px
            )));
        }
        let mb = self.mb_size_px as f64;
        let i = (p.x_px / mb).floor() as usize;
        let j = (p.y_px / mb).floor() as usize;
        Ok((i.min(self.mb_cols() - 1), j.min(self.mb_rows() - 1)))
    }

    /// Clamps each coordinate into `[0, dim - 1]`.
    pub fn clamp_to_frame(&self, p: PixelPoint) -> Result<PixelPoint> {
        if !p.is_finite() {
            return Err(Error::domain(format!(
                "non-finite gaze point ({}, {})",
                p.x_px, p.y_px
            )));
        }
        Ok(PixelPoint {
            x_px: p.x_px.clamp(0.0, (self.frame_width_px - 1) as f64),
            y_px: p.y_px.clamp(0.0, (self.frame_height_px - 1) as f64),
        })
    }
}

/// A position in frame pixels.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PixelPoint {
    pub x_px: f64,
    pub y_px: f64,
}

impl PixelPoint {
    pub const fn new(x_px: f64, y_px: f64) -> Self {
        PixelPoint { x_px, y_px }
    }

    pub fn is_finite(&self) -> bool {
        self.x_px.is_finite() && self.y_px.is_finite()
    }

    pub fn distance(&self, other: PixelPoint) -> f64 {
        (self.x_px - other.x_px).hypot(self.y_px - other.y_px)
    }
}
