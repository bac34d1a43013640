//! Gaze-driven per-macroblock QP offsets.
//!
//! Every macroblock `(i, j)` receives an offset that grows from zero at the
//! gaze macroblock `(x, y)` toward `qo_max` along a Gaussian profile:
//!
//! ```text
//! QO(i, j) = qo_max * (1 - exp(-((i - x)^2 + (j - y)^2) / (2 * W^2)))
//! ```
//!
//! `W` is configured in pixels (usually as a fraction of the frame width)
//! and converted to macroblock units before use. The exponent is negative:
//! offsets saturate toward `qo_max` far from the gaze instead of diverging.
//! Offsets stay real-valued; rounding only happens when an offset is folded
//! into the encoder QP by [`effective_qp`].

use serde::{Deserialize, Serialize};

use crate::grid::{GridSpec, PixelPoint};
use crate::{Error, Result};

pub const MAX_QP: f64 = 51.0;

/// Width parameter of the foveal Gaussian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FovealWidth {
    Pixels(f64),
    /// Fraction of the frame width, e.g. `0.125` for `FW/8`.
    FrameFraction(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoveationParams {
    pub qo_max: f64,
    pub width: FovealWidth,
    /// Stand-in for the QP the encoder's own rate control would pick.
    pub base_qp: f64,
}

impl FoveationParams {
    pub fn new(qo_max: f64, width: FovealWidth, base_qp: f64) -> Self {
        FoveationParams {
            qo_max,
            width,
            base_qp,
        }
    }

    /// `qo_max` with `W = FW * fraction` and base QP 28.
    pub fn with_fraction(qo_max: f64, fraction: f64) -> Self {
        Self::new(qo_max, FovealWidth::FrameFraction(fraction), 28.0)
    }

    /// Width in pixels on `grid`.
    pub fn w_px(&self, grid: &GridSpec) -> f64 {
        match self.width {
            FovealWidth::Pixels(px) => px,
            FovealWidth::FrameFraction(f) => f * grid.frame_width_px() as f64,
        }
    }

    pub fn validate(&self, grid: &GridSpec) -> Result<()> {
        if !(self.qo_max >= 0.0 && self.qo_max.is_finite()) {
            return Err(Error::domain(format!(
                "qo_max must be finite and >= 0, got {}",
                self.qo_max
            )));
        }
        let w = self.w_px(grid);
        if !(w > 0.0 && w.is_finite()) {
            return Err(Error::domain(format!(
                "foveal width must be finite and > 0 px, got {w}"
            )));
        }
        if !(0.0..=MAX_QP).contains(&self.base_qp) {
            return Err(Error::domain(format!(
                "base_qp must lie in [0, 51], got {}",
                self.base_qp
            )));
        }
        Ok(())
    }
}

/// QP offsets for every macroblock of one frame, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct OffsetMap {
    grid: GridSpec,
    gaze_mb: (usize, usize),
    qo_max: f64,
    values: Vec<f64>,
}

impl OffsetMap {
    /// Wraps externally computed offsets, e.g. a map read back from disk.
    pub fn from_values(
        grid: GridSpec,
        gaze_mb: (usize, usize),
        qo_max: f64,
        values: Vec<f64>,
    ) -> Result<Self> {
        if values.len() != grid.mb_count() {
            return Err(Error::domain(format!(
                "{} offsets for a grid of {} macroblocks",
                values.len(),
                grid.mb_count()
            )));
        }
        if gaze_mb.0 >= grid.mb_cols() || gaze_mb.1 >= grid.mb_rows() {
            return Err(Error::domain("gaze macroblock outside grid"));
        }
        Ok(OffsetMap {
            grid,
            gaze_mb,
            qo_max,
            values,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Macroblock `(column, row)` the map is centered on.
    pub fn gaze_mb(&self) -> (usize, usize) {
        self.gaze_mb
    }

    pub fn qo_max(&self) -> f64 {
        self.qo_max
    }

    pub fn cols(&self) -> usize {
        self.grid.mb_cols()
    }

    pub fn rows(&self) -> usize {
        self.grid.mb_rows()
    }

    /// Offset at column `i`, row `j`.
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        if i < self.cols() && j < self.rows() {
            Some(self.values[j * self.cols() + i])
        } else {
            None
        }
    }

    /// Row-major offsets.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, j: usize) -> &[f64] {
        let c = self.cols();
        &self.values[j * c..(j + 1) * c]
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

/// Builds the offset map for a gaze point already clamped into the frame.
pub fn compute_offset_map(
    grid: &GridSpec,
    params: &FoveationParams,
    gaze: PixelPoint,
) -> Result<OffsetMap> {
    params.validate(grid)?;
    let (x, y) = grid.mb_index_of(gaze)?;
    let w_mb = params.w_px(grid) / grid.mb_size_px() as f64;
    let two_w2 = 2.0 * w_mb * w_mb;
    let (cols, rows) = (grid.mb_cols(), grid.mb_rows());

    let mut values = Vec::with_capacity(cols * rows);
    for j in 0..rows {
        let dy = j as f64 - y as f64;
        for i in 0..cols {
            let dx = i as f64 - x as f64;
            let d2 = dx * dx + dy * dy;
            values.push(params.qo_max * (1.0 - (-d2 / two_w2).exp()));
        }
    }

    Ok(OffsetMap {
        grid: *grid,
        gaze_mb: (x, y),
        qo_max: params.qo_max,
        values,
    })
}

/// Integer QP the encoder would use at macroblock `(i, j)`: base QP plus
/// offset, rounded half up and clamped to the AVC range.
pub fn effective_qp(map: &OffsetMap, params: &FoveationParams, i: usize, j: usize) -> Result<u8> {
    let offset = map.get(i, j).ok_or_else(|| {
        Error::domain(format!(
            "macroblock ({i}, {j}) outside {}x{} grid",
            map.cols(),
            map.rows()
        ))
    })?;
    Ok(round_qp(params.base_qp + offset))
}

fn round_qp(qp: f64) -> u8 {
    (qp + 0.5).floor().clamp(0.0, MAX_QP) as u8
}
