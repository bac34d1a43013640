//! Acceptance criteria, one pass/fail line each.
//!
//! Runs as a plain binary (`harness = false`) so the report is always
//! printed: `cargo test -p foveastream --test acceptance`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::collections::HashMap;
use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use foveastream::analytics::{ecdf, gaze_moments, heatmap, latency_budget, shift_during};
use foveastream::foveation::{compute_offset_map, FovealWidth, FoveationParams};
use foveastream::gaze::{generate_synthetic_trace, GazeSample, GazeTrace, TraceKind};
use foveastream::grid::{GridSpec, PixelPoint};
use foveastream::ratemodel::{estimate_frame_bits, savings_sweep, RateModel};
use foveastream::session::{run_session, write_records_jsonl, SessionConfig};
use foveastream::telemetry::{
    channel_transmit, decode, encode, ChannelSpec, DecodeError, GazeMessage, LatestGazeCell,
    FLAG_VALID, VERSION,
};

type Outcome = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

/// Savings at 1920x1080, centered gaze, qo_max 10, W = FW/8, from an
/// independent brute-force summation over all 120x68 macroblocks.
const GOLDEN_HD_SAVINGS: f64 = 0.599_370_030_723_410_4;

fn hd() -> GridSpec {
    GridSpec::with_default_mb(1920, 1080).unwrap()
}

fn within(elapsed: Duration, limit_s: f64, what: &str) -> Outcome {
    ensure!(
        elapsed.as_secs_f64() < limit_s,
        "{what} took {:.2}s (limit {limit_s}s)",
        elapsed.as_secs_f64()
    );
    Ok(())
}

fn offset_map_matches_scalar_formula() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2018);
    for case in 0..1000 {
        let mb = [8u32, 16, 16, 16, 32][rng.random_range(0..5)];
        let width = rng.random_range(mb..=1920);
        let height = rng.random_range(mb..=1080);
        let grid = GridSpec::new(width, height, mb).unwrap();
        let qo_max = rng.random_range(0.0..20.0);
        let frac = rng.random_range(0.02..0.5);
        let gaze = PixelPoint::new(
            rng.random_range(0.0..width as f64),
            rng.random_range(0.0..height as f64),
        );
        let params = FoveationParams::new(qo_max, FovealWidth::FrameFraction(frac), 28.0);
        let map = compute_offset_map(&grid, &params, gaze).map_err(|e| e.to_string())?;

        // Scalar oracle: integer macroblock of the gaze, formula per block.
        let gx = gaze.x_px as u32 / mb;
        let gy = gaze.y_px as u32 / mb;
        let w_mb = frac * width as f64 / mb as f64;
        let cols = width.div_ceil(mb);
        let rows = height.div_ceil(mb);
        ensure!(
            map.gaze_mb() == (gx as usize, gy as usize),
            "case {case}: gaze block {:?} != ({gx}, {gy})",
            map.gaze_mb()
        );
        ensure!(
            map.get(gx as usize, gy as usize) == Some(0.0),
            "case {case}: center not 0"
        );

        let mut by_distance: HashMap<i64, f64> = HashMap::new();
        let mut ordered = Vec::with_capacity((cols * rows) as usize);
        for j in 0..rows {
            for i in 0..cols {
                let di = i as i64 - gx as i64;
                let dj = j as i64 - gy as i64;
                let d2 = di * di + dj * dj;
                let want = qo_max * (1.0 - (-(d2 as f64) / (2.0 * w_mb * w_mb)).exp());
                let got = map.get(i as usize, j as usize).unwrap();
                ensure!(
                    (got - want).abs() <= 1e-12 * want.abs(),
                    "case {case}: block ({i}, {j}) {got} vs {want}"
                );
                let first = *by_distance.entry(d2).or_insert(got);
                ensure!(
                    first == got,
                    "case {case}: radial symmetry broken at d2 = {d2}"
                );
                ordered.push((d2, got));
            }
        }
        ordered.sort_by_key(|p| p.0);
        ensure!(
            ordered.windows(2).all(|w| w[0].1 <= w[1].1),
            "case {case}: offsets not monotone in distance"
        );

        if case % 10 == 0 {
            let more = FoveationParams {
                qo_max: qo_max + 1.0,
                ..params
            };
            let wider = FoveationParams {
                width: FovealWidth::FrameFraction(frac * 1.5),
                ..params
            };
            let more = compute_offset_map(&grid, &more, gaze).unwrap();
            let wider = compute_offset_map(&grid, &wider, gaze).unwrap();
            for (k, &v) in map.values().iter().enumerate() {
                ensure!(v <= more.values()[k], "case {case}: not monotone in qo_max");
                ensure!(wider.values()[k] <= v, "case {case}: not monotone in W");
            }
        }
    }
    within(start.elapsed(), 10.0, "1000 offset maps")
}

fn hd_savings(qo_max: f64, frac: f64) -> f64 {
    let grid = hd();
    let map = compute_offset_map(
        &grid,
        &FoveationParams::with_fraction(qo_max, frac),
        grid.center(),
    )
    .unwrap();
    estimate_frame_bits(&map, &RateModel::default())
        .unwrap()
        .savings_fraction
}

fn savings_magnitude() -> Outcome {
    let s = hd_savings(10.0, 0.125);
    ensure!(s >= 0.50, "savings {s} < 0.50");
    ensure!(
        (s - GOLDEN_HD_SAVINGS).abs() < 1e-12,
        "savings {s} differs from golden {GOLDEN_HD_SAVINGS}"
    );
    Ok(())
}

fn diminishing_returns_in_width() -> Outcome {
    let start = Instant::now();
    let grid = hd();
    let params: Vec<_> = [0.25, 0.125, 0.0625]
        .iter()
        .map(|&f| FoveationParams::with_fraction(10.0, f))
        .collect();
    let rows = savings_sweep(&grid, &params, grid.center(), &RateModel::default())
        .map_err(|e| e.to_string())?;
    let (s4, s8, s16) = (
        rows[0].savings_fraction,
        rows[1].savings_fraction,
        rows[2].savings_fraction,
    );
    ensure!(
        s16 - s8 < s8 - s4,
        "FW/8->FW/16 gain {} not below FW/4->FW/8 gain {}",
        s16 - s8,
        s8 - s4
    );
    within(start.elapsed(), 5.0, "width sweep")
}

fn monotone_in_qo_max() -> Outcome {
    let grid = hd();
    let params: Vec<_> = [0.0, 2.0, 5.0, 10.0, 15.0]
        .iter()
        .map(|&q| FoveationParams::with_fraction(q, 0.125))
        .collect();
    let rows = savings_sweep(&grid, &params, grid.center(), &RateModel::default())
        .map_err(|e| e.to_string())?;
    ensure!(
        rows[0].savings_fraction == 0.0,
        "savings(0) = {}",
        rows[0].savings_fraction
    );
    for w in rows.windows(2) {
        ensure!(
            w[0].savings_fraction < w[1].savings_fraction,
            "savings not strictly increasing between qo_max {} and {}",
            w[0].qo_max,
            w[1].qo_max
        );
    }
    Ok(())
}

/// `(first sample index, sample count)` per moment, by definition: grow each
/// moment while every member so far lies within `r` of its first sample.
fn moments_oracle(samples: &[GazeSample], r: f64) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = 0;
    while start < samples.len() {
        let anchor = samples[start].point;
        let mut len = 1;
        while start + len < samples.len()
            && samples[start..=start + len].iter().all(|s| {
                let dx = s.point.x_px - anchor.x_px;
                let dy = s.point.y_px - anchor.y_px;
                (dx * dx + dy * dy).sqrt() <= r
            })
        {
            len += 1;
        }
        out.push((start, len));
        start += len;
    }
    out
}

fn gaze_moments_match_oracle() -> Outcome {
    let start = Instant::now();
    let grid = hd();
    let fw = grid.frame_width_px() as f64;
    let radii = [fw / 32.0, fw / 16.0, fw / 8.0];
    for seed in 0..20 {
        let trace = generate_synthetic_trace(TraceKind::RandomWalk, 60.0, 90.0, seed, grid)
            .map_err(|e| e.to_string())?;
        ensure!(
            trace.len() >= 5000,
            "trace {seed} has only {} samples",
            trace.len()
        );
        let mut counts = Vec::new();
        for &r in &radii {
            let got = gaze_moments(&trace, r).map_err(|e| e.to_string())?;
            let want = moments_oracle(trace.samples(), r);
            ensure!(
                got.len() == want.len(),
                "seed {seed}, r {r}: {} moments vs oracle {}",
                got.len(),
                want.len()
            );
            for (g, &(first, count)) in got.iter().zip(&want) {
                let s = &trace.samples()[first];
                ensure!(
                    g.start_us == s.timestamp_us && g.sample_count == count && g.anchor == s.point,
                    "seed {seed}, r {r}: moment at {} differs from oracle",
                    g.start_us
                );
            }
            counts.push(got.len());
        }
        ensure!(
            counts.windows(2).all(|w| w[1] <= w[0]),
            "seed {seed}: moment counts {counts:?} increase with radius"
        );
    }
    within(start.elapsed(), 30.0, "moment oracle runs")
}

fn latency_arithmetic() -> Outcome {
    let b = latency_budget(100.0, 90.0).map_err(|e| e.to_string())?;
    ensure!(
        (110.0..=112.0).contains(&b.total_ms),
        "total {} ms",
        b.total_ms
    );
    let shift = shift_during(&b, 100.0);
    ensure!(
        (11.0..=11.2).contains(&shift),
        "shift {shift} px at 100 px/s"
    );
    let frame = latency_budget(0.0, 40.0).map_err(|e| e.to_string())?;
    let per_frame = shift_during(&frame, 1000.0);
    ensure!(
        per_frame == 25.0,
        "one 40 fps frame at 1000 px/s shifts {per_frame} px"
    );
    Ok(())
}

fn wire_format() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    for _ in 0..10_000 {
        let msg = GazeMessage {
            version: VERSION,
            flags: rng.random(),
            seq: rng.random(),
            timestamp_us: rng.random(),
            x_norm: rng.random_range(0.0..=1.0),
            y_norm: rng.random_range(0.0..=1.0),
        };
        let bytes = encode(&msg).map_err(|e| e.to_string())?;
        ensure!(decode(&bytes) == Ok(msg), "round trip failed for {msg:?}");
    }

    let zero = GazeMessage {
        version: 1,
        flags: 1,
        seq: 0,
        timestamp_us: 0,
        x_norm: 0.0,
        y_norm: 0.0,
    };
    let mut golden = [0u8; 24];
    golden[..4].copy_from_slice(&[0x47, 0x5A, 0x01, 0x01]);
    ensure!(
        encode(&zero).unwrap() == golden,
        "golden zero vector mismatch"
    );
    let unit = encode(&GazeMessage {
        seq: 1,
        x_norm: 1.0,
        y_norm: 1.0,
        ..zero
    })
    .unwrap();
    ensure!(
        unit[16..20] == [0x00, 0x00, 0x80, 0x3F] && unit[20..24] == [0x00, 0x00, 0x80, 0x3F],
        "1.0f32 not encoded as 00 00 80 3F"
    );

    ensure!(
        decode(&golden[..10]) == Err(DecodeError::Length(10)),
        "truncated input"
    );
    let mut v9 = golden;
    v9[2] = 9;
    ensure!(
        decode(&v9) == Err(DecodeError::UnsupportedVersion(9)),
        "version 9"
    );
    let mut magic = golden;
    magic[1] = 0;
    ensure!(
        matches!(decode(&magic), Err(DecodeError::Magic(_))),
        "bad magic"
    );
    let mut range = golden;
    range[20..24].copy_from_slice(&1.5f32.to_le_bytes());
    ensure!(
        decode(&range) == Err(DecodeError::CoordinateRange(1.5)),
        "out-of-range coordinate"
    );
    Ok(())
}

fn gaze_stream(n: u32, period_us: u64) -> Vec<(u64, GazeMessage)> {
    (0..n)
        .map(|k| {
            let t = k as u64 * period_us;
            let msg = GazeMessage {
                version: VERSION,
                flags: FLAG_VALID,
                seq: k,
                timestamp_us: t,
                x_norm: (k % 100) as f32 / 100.0,
                y_norm: 0.5,
            };
            (t, msg)
        })
        .collect()
}

fn channel_and_cell() -> Outcome {
    let sends = gaze_stream(5000, 11_111);

    let identity = channel_transmit(&sends, &ChannelSpec::default()).map_err(|e| e.to_string())?;
    ensure!(
        identity.len() == sends.len(),
        "identity channel lost messages"
    );
    let mut cell = LatestGazeCell::new();
    for (a, (t, m)) in identity.iter().zip(&sends) {
        ensure!(
            a.arrival_us == *t && a.msg == *m,
            "identity channel altered a message"
        );
        cell.offer(a.msg, a.arrival_us);
        ensure!(
            cell.current().unwrap().seq == m.seq,
            "cell missed seq {}",
            m.seq
        );
    }

    let noisy = ChannelSpec {
        base_latency_ms: 20.0,
        jitter_ms: 15.0,
        loss_prob: 0.1,
        seed: 42,
    };
    let arrivals = channel_transmit(&sends, &noisy).map_err(|e| e.to_string())?;
    ensure!(
        arrivals.windows(2).any(|w| w[1].msg.seq < w[0].msg.seq),
        "jitter produced no reordering"
    );
    let mut cell = LatestGazeCell::new();
    let mut held = 0;
    for a in &arrivals {
        cell.offer(a.msg, a.arrival_us);
        let seq = cell.current().unwrap().seq;
        ensure!(seq >= held, "cell regressed from {held} to {seq}");
        held = seq;
    }
    let max_seq = arrivals.iter().map(|a| a.msg.seq).max().unwrap();
    ensure!(
        held == max_seq,
        "cell holds {held}, highest delivered {max_seq}"
    );

    let again = channel_transmit(&sends, &noisy).map_err(|e| e.to_string())?;
    ensure!(again == arrivals, "same seed gave a different schedule");
    Ok(())
}

fn jsonl(records: &[foveastream::FrameRecord]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_records_jsonl(&mut buf, records).unwrap();
    buf
}

fn session_determinism_and_consistency() -> Outcome {
    let grid = hd();
    let trace = generate_synthetic_trace(TraceKind::RandomWalk, 30.0, 90.0, 7, grid)
        .map_err(|e| e.to_string())?;

    let mut noisy = SessionConfig::new(grid, FoveationParams::with_fraction(10.0, 0.125));
    noisy.channel = ChannelSpec {
        base_latency_ms: 10.0,
        jitter_ms: 8.0,
        loss_prob: 0.05,
        seed: 0,
    };
    noisy.seed = 99;
    let a = run_session(&trace, &noisy).map_err(|e| e.to_string())?;
    let b = run_session(&trace, &noisy).map_err(|e| e.to_string())?;
    ensure!(
        jsonl(&a) == jsonl(&b),
        "JSON-lines differ between identical runs"
    );

    for fps in [40.0, 45.0] {
        let mut cfg = SessionConfig::new(grid, FoveationParams::with_fraction(10.0, 0.125));
        cfg.fps = fps;
        let records = run_session(&trace, &cfg).map_err(|e| e.to_string())?;
        let model = RateModel::default();
        for r in &records {
            let map = compute_offset_map(&grid, &cfg.fov, r.gaze_used).unwrap();
            let est = estimate_frame_bits(&map, &model).unwrap();
            ensure!(
                est.savings_fraction == r.savings_fraction && est.frame_bits == r.frame_bits,
                "frame {} savings {} vs direct {}",
                r.frame_index,
                r.savings_fraction,
                est.savings_fraction
            );
        }
        let mut staleness: Vec<u64> = records.iter().map(|r| r.staleness_us).collect();
        staleness.sort_unstable();
        let p99 = staleness[(0.99 * staleness.len() as f64).ceil() as usize - 1] as f64 / 1e3;
        let bound = 1000.0 / 90.0 + 1000.0 / fps;
        ensure!(
            p99 <= bound,
            "staleness p99 {p99} ms > {bound} ms at {fps} fps"
        );
    }
    Ok(())
}

fn heatmap_and_ecdf() -> Outcome {
    let grid = hd();
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    let samples: Vec<GazeSample> = (0..100)
        .map(|k| GazeSample {
            timestamp_us: k * 11_111,
            point: PixelPoint::new(rng.random_range(0.0..1920.0), rng.random_range(0.0..1080.0)),
            seq: k,
            valid: true,
        })
        .collect();
    let trace = GazeTrace::new(grid, samples.clone()).map_err(|e| e.to_string())?;
    let (bin, bw) = (16.0, 30.0);
    let heat = heatmap(&trace, &grid, bin, bw).map_err(|e| e.to_string())?;

    let mut raw = vec![0.0f64; heat.cols * heat.rows];
    for row in 0..heat.rows {
        for col in 0..heat.cols {
            let cx = (col as f64 + 0.5) * bin;
            let cy = (row as f64 + 0.5) * bin;
            for s in &samples {
                let d2 = (cx - s.point.x_px).powi(2) + (cy - s.point.y_px).powi(2);
                raw[row * heat.cols + col] += (-d2 / (2.0 * bw * bw)).exp();
            }
        }
    }
    let peak = raw.iter().copied().fold(0.0, f64::max);
    let mut got_peak = 0.0f64;
    for (k, &r) in raw.iter().enumerate() {
        let want = r / peak;
        let got = heat.bins[k];
        ensure!(
            (got - want).abs() <= 1e-9 * want,
            "bin {k}: {got} vs brute force {want}"
        );
        got_peak = got_peak.max(got);
    }
    ensure!(got_peak == 1.0, "peak bin is {got_peak}, not exactly 1");

    let values: Vec<f64> = (0..5000)
        .map(|_| rng.random_range(0.0..100.0f64).round())
        .collect();
    let steps = ecdf(&values).map_err(|e| e.to_string())?;
    ensure!(
        steps
            .windows(2)
            .all(|w| w[0].0 < w[1].0 && w[0].1 <= w[1].1),
        "ECDF not non-decreasing"
    );
    ensure!(
        steps.last().unwrap().1 == 1.0,
        "ECDF ends at {}",
        steps.last().unwrap().1
    );
    Ok(())
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        (
            "AC1  offset map vs scalar formula, symmetry, monotonicity",
            offset_map_matches_scalar_formula,
        ),
        (
            "AC2  savings >= 50% at qo_max 10, W = FW/8",
            savings_magnitude,
        ),
        (
            "AC3  diminishing returns as W shrinks",
            diminishing_returns_in_width,
        ),
        (
            "AC4  savings strictly increasing in qo_max",
            monotone_in_qo_max,
        ),
        (
            "AC5  gaze moments equal O(n^2) oracle",
            gaze_moments_match_oracle,
        ),
        (
            "AC6  latency budget and gaze shift arithmetic",
            latency_arithmetic,
        ),
        (
            "AC7  wire format round trip, golden bytes, errors",
            wire_format,
        ),
        (
            "AC8  channel and latest-wins cell semantics",
            channel_and_cell,
        ),
        (
            "AC9  session determinism and consistency",
            session_determinism_and_consistency,
        ),
        ("AC10 heatmap oracle and ECDF shape", heatmap_and_ecdf),
    ];

    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(()) => println!("[PASS] {name} ({secs:.2}s)"),
            Err(why) => {
                failed += 1;
                println!("[FAIL] {name} ({secs:.2}s): {why}");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
