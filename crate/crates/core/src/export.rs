//! Plain-text output formats: PGM (P2) images and CSV tables.

use std::io::Write;

use crate::analytics::{GazeMoment, HeatmapGrid};
use crate::foveation::OffsetMap;
use crate::ratemodel::SweepRow;
use crate::Result;

/// ASCII PGM with maxval 255. `gray` is row-major and must hold
/// `cols * rows` levels.
pub fn write_pgm<W: Write>(mut out: W, cols: usize, rows: usize, gray: &[u8]) -> Result<()> {
    debug_assert_eq!(gray.len(), cols * rows);
    writeln!(out, "P2")?;
    writeln!(out, "{cols} {rows}")?;
    writeln!(out, "255")?;
    for row in gray.chunks(cols) {
        let line: Vec<String> = row.iter().map(u8::to_string).collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    Ok(())
}

fn to_gray(v: f64) -> u8 {
    (255.0 * v).round().clamp(0.0, 255.0) as u8
}

fn write_grid_csv<W: Write>(mut out: W, cols: usize, values: &[f64]) -> Result<()> {
    for row in values.chunks(cols) {
        let line: Vec<String> = row.iter().map(f64::to_string).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

/// Gray level `round(255 * QO / qo_max)`, all black when `qo_max` is 0.
pub fn offset_map_gray(map: &OffsetMap) -> Vec<u8> {
    let q = map.qo_max();
    map.values()
        .iter()
        .map(|&v| if q > 0.0 { to_gray(v / q) } else { 0 })
        .collect()
}

pub fn write_offset_map_pgm<W: Write>(out: W, map: &OffsetMap) -> Result<()> {
    write_pgm(out, map.cols(), map.rows(), &offset_map_gray(map))
}

/// One line per macroblock row, raw offsets at full precision.
pub fn write_offset_map_csv<W: Write>(out: W, map: &OffsetMap) -> Result<()> {
    write_grid_csv(out, map.cols(), map.values())
}

pub fn write_heatmap_pgm<W: Write>(out: W, heat: &HeatmapGrid) -> Result<()> {
    let gray: Vec<u8> = heat.bins.iter().map(|&b| to_gray(b)).collect();
    write_pgm(out, heat.cols, heat.rows, &gray)
}

pub fn write_heatmap_csv<W: Write>(out: W, heat: &HeatmapGrid) -> Result<()> {
    write_grid_csv(out, heat.cols, &heat.bins)
}

pub fn write_sweep_csv<W: Write>(mut out: W, rows: &[SweepRow]) -> Result<()> {
    writeln!(out, "qo_max,w_px,savings_fraction")?;
    for r in rows {
        writeln!(out, "{},{},{}", r.qo_max, r.w_px, r.savings_fraction)?;
    }
    Ok(())
}

pub fn write_moments_csv<W: Write>(mut out: W, moments: &[GazeMoment]) -> Result<()> {
    writeln!(out, "start_us,end_us,duration_us,anchor_x,anchor_y")?;
    for m in moments {
        writeln!(
            out,
            "{},{},{},{},{}",
            m.start_us,
            m.end_us,
            m.duration_us(),
            m.anchor.x_px,
            m.anchor.y_px
        )?;
    }
    Ok(())
}

/// One value per line, no header.
pub fn write_values<W: Write>(mut out: W, values: &[f64]) -> Result<()> {
    for v in values {
        writeln!(out, "{v}")?;
    }
    Ok(())
}

pub fn write_ecdf_csv<W: Write>(mut out: W, steps: &[(f64, f64)]) -> Result<()> {
    writeln!(out, "value,fraction")?;
    for (v, f) in steps {
        writeln!(out, "{v},{f}")?;
    }
    Ok(())
}
