//! Exponential QP-to-rate model.
//!
//! Each macroblock costs `weight * ref_bits_per_mb * 2^(-offset / halving_step)`
//! bits, so raising its QP by `halving_step` halves its rate. With the default
//! step of 6 this is the usual AVC rule of thumb. Savings are always measured
//! against the same frame encoded with every offset at zero, which makes them
//! independent of `ref_bits_per_mb`.

use std::io::Read;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::foveation::{compute_offset_map, FoveationParams, OffsetMap};
use crate::grid::{GridSpec, PixelPoint};
use crate::stats::{mean, quantile_sorted, sorted_finite};
use crate::{Error, Result};

pub const DEFAULT_QP_HALVING_STEP: f64 = 6.0;

/// Per-macroblock content weights, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMap {
    cols: usize,
    rows: usize,
    weights: Vec<f64>,
}

impl WeightMap {
    pub fn new(cols: usize, rows: usize, weights: Vec<f64>) -> Result<Self> {
        if cols * rows != weights.len() || weights.is_empty() {
            return Err(Error::domain(format!(
                "weight map has {} values, expected {cols}x{rows}",
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0 && w.is_finite())) {
            return Err(Error::domain(format!(
                "weight {w} is not a finite value >= 0"
            )));
        }
        Ok(WeightMap {
            cols,
            rows,
            weights,
        })
    }

    /// Reads a headerless CSV with one line per macroblock row.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut weights = Vec::new();
        let mut cols = None;
        let mut rows = 0;
        for (idx, rec) in rdr.records().enumerate() {
            let line = idx as u64 + 1;
            let rec = rec.map_err(|e| Error::Parse {
                line,
                msg: e.to_string(),
            })?;
            match cols {
                None => cols = Some(rec.len()),
                Some(c) if c != rec.len() => {
                    return Err(Error::Parse {
                        line,
                        msg: format!("expected {c} columns, found {}", rec.len()),
                    })
                }
                _ => {}
            }
            for field in rec.iter() {
                weights.push(field.parse::<f64>().map_err(|e| Error::Parse {
                    line,
                    msg: format!("bad weight {field:?}: {e}"),
                })?);
            }
            rows += 1;
        }
        Self::new(cols.unwrap_or(0), rows, weights)
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateModel {
    pub ref_bits_per_mb: f64,
    pub qp_halving_step: f64,
    pub weight_map: Option<WeightMap>,
}

impl Default for RateModel {
    fn default() -> Self {
        RateModel {
            ref_bits_per_mb: 100.0,
            qp_halving_step: DEFAULT_QP_HALVING_STEP,
            weight_map: None,
        }
    }
}

impl RateModel {
    pub fn uniform(ref_bits_per_mb: f64) -> Self {
        RateModel {
            ref_bits_per_mb,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ref_bits_per_mb > 0.0 && self.ref_bits_per_mb.is_finite()) {
            return Err(Error::domain("ref_bits_per_mb must be finite and > 0"));
        }
        if !(self.qp_halving_step > 0.0 && self.qp_halving_step.is_finite()) {
            return Err(Error::domain("qp_halving_step must be finite and > 0"));
        }
        Ok(())
    }

    fn check_grid(&self, grid: &GridSpec) -> Result<()> {
        if let Some(wm) = &self.weight_map {
            if wm.cols != grid.mb_cols() || wm.rows != grid.mb_rows() {
                return Err(Error::domain(format!(
                    "weight map is {}x{} but grid has {}x{} macroblocks",
                    wm.cols,
                    wm.rows,
                    grid.mb_cols(),
                    grid.mb_rows()
                )));
            }
        }
        Ok(())
    }

    fn weight(&self, idx: usize) -> f64 {
        self.weight_map.as_ref().map_or(1.0, |wm| wm.weights[idx])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BitrateEstimate {
    pub frame_bits: f64,
    /// Row-major, same layout as the offset map.
    pub per_mb_bits: Vec<f64>,
    /// `1 - frame_bits / baseline_bits`, baseline being all offsets at zero.
    pub savings_fraction: f64,
}

pub fn estimate_frame_bits(map: &OffsetMap, model: &RateModel) -> Result<BitrateEstimate> {
    model.validate()?;
    model.check_grid(map.grid())?;

    let mut frame_bits = 0.0;
    let mut baseline_bits = 0.0;
    let mut per_mb_bits = Vec::with_capacity(map.values().len());
    for (idx, &offset) in map.values().iter().enumerate() {
        let reference = model.weight(idx) * model.ref_bits_per_mb;
        let bits = reference * (-offset / model.qp_halving_step).exp2();
        baseline_bits += reference;
        frame_bits += bits;
        per_mb_bits.push(bits);
    }
    let savings_fraction = if baseline_bits > 0.0 {
        1.0 - frame_bits / baseline_bits
    } else {
        0.0
    };

    Ok(BitrateEstimate {
        frame_bits,
        per_mb_bits,
        savings_fraction,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub qo_max: f64,
    pub w_px: f64,
    pub savings_fraction: f64,
}

/// Savings for each parametrization at a fixed gaze point. Rows are computed
/// in parallel and returned in input order.
pub fn savings_sweep(
    grid: &GridSpec,
    params_list: &[FoveationParams],
    gaze: PixelPoint,
    model: &RateModel,
) -> Result<Vec<SweepRow>> {
    if params_list.is_empty() {
        return Err(Error::domain("sweep needs at least one parametrization"));
    }
    params_list
        .par_iter()
        .map(|params| {
            let map = compute_offset_map(grid, params, gaze)?;
            let est = estimate_frame_bits(&map, model)?;
            Ok(SweepRow {
                qo_max: params.qo_max,
                w_px: params.w_px(grid),
                savings_fraction: est.savings_fraction,
            })
        })
        .collect()
}

/// Box-plot statistics of a bitrate series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BitrateSummary {
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

/// Mean and type-7 quartiles.
pub fn summarize_bitrates(samples: &[f64]) -> Result<BitrateSummary> {
    let sorted = sorted_finite(samples)?;
    Ok(BitrateSummary {
        mean: mean(&sorted),
        median: quantile_sorted(&sorted, 0.5),
        q1: quantile_sorted(&sorted, 0.25),
        q3: quantile_sorted(&sorted, 0.75),
    })
}
