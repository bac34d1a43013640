//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 for runtime or data errors, 2 for usage
//! errors (bad flags, invalid parameters, unreadable config file).

use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::net::UdpSocket;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde_json::json;

use foveastream::analytics::{self, latency_budget, shift_during};
use foveastream::export;
use foveastream::foveation::{compute_offset_map, FovealWidth, FoveationParams};
use foveastream::gaze::{self, generate_synthetic_trace, FilterParams, GazeTrace, TraceKind};
use foveastream::grid::{GridSpec, PixelPoint};
use foveastream::ratemodel::{savings_sweep, RateModel, WeightMap, DEFAULT_QP_HALVING_STEP};
use foveastream::session::{self, run_session, SessionConfig};
use foveastream::telemetry::{
    spawn_receiver, ChannelSpec, GazeMessage, GazeSender, SharedGazeCell, DEFAULT_ADDR,
};

use crate::config::{FileConfig, SEED_ENV};

pub enum CliError {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

impl From<foveastream::Error> for CliError {
    fn from(e: foveastream::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

type CliResult<T = ()> = Result<T, CliError>;

fn usage<T>(r: foveastream::Result<T>) -> CliResult<T> {
    r.map_err(|e| CliError::Usage(e.to_string()))
}

#[derive(Debug, Parser)]
#[command(
    name = "foveastream",
    version,
    about = "Foveated streaming simulator and gaze analytics"
)]
pub struct Cli {
    /// TOML file of default flag values (keys are flag names with underscores).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute one QP-offset map (CSV + PGM), or a savings sweep.
    Offsetmap(OffsetmapArgs),
    /// Generate a synthetic gaze trace CSV.
    Generate(GenerateArgs),
    /// Replay a gaze trace through the channel and foveated encoder model.
    Simulate(SimulateArgs),
    /// Gaze trace analytics.
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
    /// Print the eye-to-photon latency budget.
    Latency(LatencyArgs),
    /// Send a gaze trace as UDP datagrams.
    Send(SendArgs),
    /// Receive gaze datagrams and report the latest gaze.
    Serve(ServeArgs),
}

#[derive(Debug, Subcommand)]
enum AnalyzeCommand {
    /// Gaze moments (CSV).
    Moments(MomentsArgs),
    /// Gaze change rate in px/s, one value per line.
    Rate(RateArgs),
    /// KDE heatmap (CSV + PGM).
    Heatmap(HeatmapArgs),
    /// Empirical CDF (CSV).
    Ecdf(EcdfArgs),
}

#[derive(Debug, Args)]
struct GridArgs {
    /// Frame width in pixels [default: 1920]
    #[arg(long)]
    width: Option<u32>,
    /// Frame height in pixels [default: 1080]
    #[arg(long)]
    height: Option<u32>,
    /// Macroblock size in pixels [default: 16]
    #[arg(long)]
    mb_size: Option<u32>,
}

impl GridArgs {
    fn resolve(&self, file: &FileConfig) -> CliResult<GridSpec> {
        usage(GridSpec::new(
            self.width.or(file.width).unwrap_or(1920),
            self.height.or(file.height).unwrap_or(1080),
            self.mb_size.or(file.mb_size).unwrap_or(16),
        ))
    }
}

#[derive(Debug, Args)]
struct FovArgs {
    /// Maximum QP offset [default: 10]
    #[arg(long, allow_negative_numbers = true)]
    qo_max: Option<f64>,
    /// Foveal width W as a fraction of frame width [default: 0.125]
    #[arg(long, allow_negative_numbers = true)]
    w_frac: Option<f64>,
    /// Base QP standing in for the encoder's CRF decision [default: 28]
    #[arg(long, allow_negative_numbers = true)]
    base_qp: Option<f64>,
}

impl FovArgs {
    fn resolve(&self, file: &FileConfig, grid: &GridSpec) -> CliResult<FoveationParams> {
        let params = FoveationParams::new(
            self.qo_max.or(file.qo_max).unwrap_or(10.0),
            FovealWidth::FrameFraction(self.w_frac.or(file.w_frac).unwrap_or(0.125)),
            self.base_qp.or(file.base_qp).unwrap_or(28.0),
        );
        usage(params.validate(grid))?;
        Ok(params)
    }
}

#[derive(Debug, Args)]
struct RateModelArgs {
    /// Bits per macroblock at zero offset [default: 100]
    #[arg(long, allow_negative_numbers = true)]
    ref_bits: Option<f64>,
    /// QP increase that halves the rate [default: 6]
    #[arg(long, allow_negative_numbers = true)]
    halving_step: Option<f64>,
    /// Per-macroblock weight CSV (one line per macroblock row) [default: uniform]
    #[arg(long)]
    weights: Option<PathBuf>,
}

impl RateModelArgs {
    fn resolve(&self, file: &FileConfig) -> CliResult<RateModel> {
        let weight_map = match self.weights.as_ref().or(file.weights.as_ref()) {
            Some(path) => Some(
                File::open(path)
                    .map_err(foveastream::Error::from)
                    .and_then(WeightMap::from_csv_reader)
                    .with_context(|| format!("reading weights {}", path.display()))?,
            ),
            None => None,
        };
        let model = RateModel {
            ref_bits_per_mb: self.ref_bits.or(file.ref_bits).unwrap_or(100.0),
            qp_halving_step: self
                .halving_step
                .or(file.halving_step)
                .unwrap_or(DEFAULT_QP_HALVING_STEP),
            weight_map,
        };
        usage(model.validate())?;
        Ok(model)
    }
}

#[derive(Debug, Args)]
struct SeedArg {
    /// RNG seed [default: $FOVEASTREAM_SEED, else 0]
    #[arg(long)]
    seed: Option<u64>,
}

impl SeedArg {
    fn resolve(&self, file: &FileConfig) -> CliResult<u64> {
        if let Some(s) = self.seed.or(file.seed) {
            return Ok(s);
        }
        match std::env::var(SEED_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("{SEED_ENV}={v:?} is not an integer"))),
            Err(_) => Ok(0),
        }
    }
}

#[derive(Debug, Args)]
struct OffsetmapArgs {
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    fov: FovArgs,
    #[command(flatten)]
    rate: RateModelArgs,
    /// Gaze x in pixels [default: frame center]
    #[arg(long, allow_negative_numbers = true)]
    gaze_x: Option<f64>,
    /// Gaze y in pixels [default: frame center]
    #[arg(long, allow_negative_numbers = true)]
    gaze_y: Option<f64>,
    /// Sweep one parameter, e.g. `qo_max=0,5,10,15` or `w_frac=0.25,0.125,0.0625`
    #[arg(long)]
    sweep: Option<String>,
    /// Output path prefix: writes PREFIX.csv and PREFIX.pgm (PREFIX_sweep.csv with --sweep)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    seed: SeedArg,
    /// Trace shape
    #[arg(long, value_enum, default_value = "random-walk")]
    kind: KindArg,
    /// Length in seconds [default: 60]
    #[arg(long, allow_negative_numbers = true)]
    duration: Option<f64>,
    /// Sampling rate in Hz [default: 90]
    #[arg(long, allow_negative_numbers = true)]
    rate_hz: Option<f64>,
    /// Output trace CSV
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KindArg {
    Fixate,
    Step,
    Spiral,
    RandomWalk,
}

impl From<KindArg> for TraceKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Fixate => TraceKind::Fixate,
            KindArg::Step => TraceKind::Step,
            KindArg::Spiral => TraceKind::Spiral,
            KindArg::RandomWalk => TraceKind::RandomWalk,
        }
    }
}

#[derive(Debug, Args)]
struct FilterArgs {
    /// Apply the velocity-gated smoothing filter to the trace
    #[arg(long)]
    filter: bool,
    /// Filter EMA weight in (0, 1] [default: 0.4]
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    /// Filter saccade reset speed in px/s [default: 700]
    #[arg(long, allow_negative_numbers = true)]
    saccade_speed: Option<f64>,
}

impl FilterArgs {
    fn resolve(&self, file: &FileConfig) -> CliResult<Option<FilterParams>> {
        if !(self.filter || file.filter.unwrap_or(false)) {
            return Ok(None);
        }
        let d = FilterParams::default();
        let p = FilterParams {
            alpha_slow: self.alpha.or(file.alpha).unwrap_or(d.alpha_slow),
            saccade_speed_px_s: self
                .saccade_speed
                .or(file.saccade_speed)
                .unwrap_or(d.saccade_speed_px_s),
        };
        usage(p.validate())?;
        Ok(Some(p))
    }
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Gaze trace CSV (timestamp_us,x_px,y_px[,valid])
    #[arg(long)]
    trace: PathBuf,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    fov: FovArgs,
    #[command(flatten)]
    rate: RateModelArgs,
    #[command(flatten)]
    filter: FilterArgs,
    #[command(flatten)]
    seed: SeedArg,
    /// Encoder frame rate [default: 40]
    #[arg(long, allow_negative_numbers = true)]
    fps: Option<f64>,
    /// Session length in seconds [default: span of the trace]
    #[arg(long, allow_negative_numbers = true)]
    duration: Option<f64>,
    /// One-way channel latency in ms [default: 0]
    #[arg(long, allow_negative_numbers = true)]
    latency_ms: Option<f64>,
    /// Uniform jitter half-width in ms [default: 0]
    #[arg(long, allow_negative_numbers = true)]
    jitter_ms: Option<f64>,
    /// Datagram loss probability [default: 0]
    #[arg(long, allow_negative_numbers = true)]
    loss: Option<f64>,
    /// Output prefix: PREFIX.jsonl, PREFIX.csv, PREFIX_summary.json
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TraceInput {
    /// Gaze trace CSV (timestamp_us,x_px,y_px[,valid])
    #[arg(long)]
    trace: PathBuf,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    filter: FilterArgs,
}

impl TraceInput {
    fn load(&self, file: &FileConfig) -> CliResult<(GazeTrace, GridSpec)> {
        let grid = self.grid.resolve(file)?;
        let filter = self.filter.resolve(file)?;
        let trace = load_trace(&self.trace, grid)?;
        let trace = match filter {
            Some(f) => gaze::light_filter(&trace, &f)?,
            None => trace,
        };
        Ok((trace, grid))
    }
}

#[derive(Debug, Args)]
struct MomentsArgs {
    #[command(flatten)]
    input: TraceInput,
    /// Region radius in px [default: W/2 with W = w_frac * width]
    #[arg(long, allow_negative_numbers = true)]
    radius: Option<f64>,
    /// Foveal width fraction used for the default radius [default: 0.125]
    #[arg(long, allow_negative_numbers = true)]
    w_frac: Option<f64>,
    /// Output CSV
    #[arg(long)]
    out: PathBuf,
}

fn moment_radius(
    radius: Option<f64>,
    w_frac: Option<f64>,
    file: &FileConfig,
    grid: &GridSpec,
) -> f64 {
    radius.or(file.radius).unwrap_or_else(|| {
        w_frac.or(file.w_frac).unwrap_or(0.125) * grid.frame_width_px() as f64 / 2.0
    })
}

#[derive(Debug, Args)]
struct RateArgs {
    #[command(flatten)]
    input: TraceInput,
    /// Output file, one px/s value per line
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct HeatmapArgs {
    #[command(flatten)]
    input: TraceInput,
    /// Bin size in px [default: 16]
    #[arg(long, allow_negative_numbers = true)]
    bin_size: Option<f64>,
    /// Kernel standard deviation in px [default: width / 64]
    #[arg(long, allow_negative_numbers = true)]
    bandwidth: Option<f64>,
    /// Output prefix: PREFIX.csv and PREFIX.pgm
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum EcdfOf {
    /// Gaze change rate (px/s)
    Rate,
    /// Gaze moment durations (ms)
    Moments,
}

#[derive(Debug, Args)]
struct EcdfArgs {
    /// File with one value per line
    #[arg(long, conflicts_with_all = ["trace", "of"])]
    values: Option<PathBuf>,
    /// Gaze trace CSV to derive values from (needs --of)
    #[arg(long, requires = "of")]
    trace: Option<PathBuf>,
    /// Quantity to take from --trace
    #[arg(long, value_enum)]
    of: Option<EcdfOf>,
    #[command(flatten)]
    grid: GridArgs,
    /// Moment radius in px [default: W/2 with W = w_frac * width]
    #[arg(long, allow_negative_numbers = true)]
    radius: Option<f64>,
    /// Foveal width fraction used for the default radius [default: 0.125]
    #[arg(long, allow_negative_numbers = true)]
    w_frac: Option<f64>,
    /// Output CSV (value,fraction)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct LatencyArgs {
    /// Control-to-photon latency of the streaming system in ms [default: 100]
    #[arg(long, allow_negative_numbers = true)]
    e2e_ms: Option<f64>,
    /// Gaze tracker sampling rate in Hz [default: 90]
    #[arg(long, allow_negative_numbers = true)]
    sampler_hz: Option<f64>,
    /// Gaze change rate in px/s to convert into a shift [default: 100]
    #[arg(long, allow_negative_numbers = true)]
    rate: Option<f64>,
}

#[derive(Debug, Args)]
struct SendArgs {
    /// Gaze trace CSV, or `-` for stdin
    #[arg(long)]
    trace: PathBuf,
    #[command(flatten)]
    grid: GridArgs,
    /// Destination host:port [default: 127.0.0.1:9090]
    #[arg(long)]
    addr: Option<String>,
    /// Pace datagrams by the trace timestamps instead of sending at once
    #[arg(long)]
    realtime: bool,
}

#[derive(Debug, Args)]
struct ServeArgs {
    /// Listen host:port [default: 127.0.0.1:9090]
    #[arg(long)]
    addr: Option<String>,
    #[command(flatten)]
    grid: GridArgs,
    /// How long to listen, in seconds [default: 10]
    #[arg(long, allow_negative_numbers = true)]
    duration: Option<f64>,
    /// Interval between latest-gaze reports in ms [default: 500]
    #[arg(long)]
    print_ms: Option<u64>,
}

pub fn run(cli: Cli) -> CliResult {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path).map_err(|e| CliError::Usage(format!("{e:#}")))?,
        None => FileConfig::default(),
    };
    match cli.command {
        Command::Offsetmap(a) => cmd_offsetmap(a, &file),
        Command::Generate(a) => cmd_generate(a, &file),
        Command::Simulate(a) => cmd_simulate(a, &file),
        Command::Analyze(AnalyzeCommand::Moments(a)) => cmd_moments(a, &file),
        Command::Analyze(AnalyzeCommand::Rate(a)) => cmd_rate(a, &file),
        Command::Analyze(AnalyzeCommand::Heatmap(a)) => cmd_heatmap(a, &file),
        Command::Analyze(AnalyzeCommand::Ecdf(a)) => cmd_ecdf(a, &file),
        Command::Latency(a) => cmd_latency(a),
        Command::Send(a) => cmd_send(a, &file),
        Command::Serve(a) => cmd_serve(a, &file),
    }
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn load_trace(path: &Path, grid: GridSpec) -> CliResult<GazeTrace> {
    let trace = if path.as_os_str() == "-" {
        let mut buf = Vec::new();
        io::stdin().read_to_end(&mut buf)?;
        gaze::read_trace(buf.as_slice(), grid)
    } else {
        gaze::load_trace(path, grid)
    };
    Ok(trace.with_context(|| format!("loading trace {}", path.display()))?)
}

fn parse_sweep(spec: &str, base: &FoveationParams) -> CliResult<Vec<FoveationParams>> {
    let bad = || {
        CliError::Usage(format!(
            "bad --sweep {spec:?}; expected qo_max=a,b,... or w_frac=a,b,..."
        ))
    };
    let (key, list) = spec.split_once('=').ok_or_else(bad)?;
    let values = list
        .split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| bad())?;
    if values.is_empty() {
        return Err(bad());
    }
    values
        .into_iter()
        .map(|v| match key.trim() {
            "qo_max" => Ok(FoveationParams { qo_max: v, ..*base }),
            "w_frac" => Ok(FoveationParams {
                width: FovealWidth::FrameFraction(v),
                ..*base
            }),
            _ => Err(bad()),
        })
        .collect()
}

fn cmd_offsetmap(a: OffsetmapArgs, file: &FileConfig) -> CliResult {
    let grid = a.grid.resolve(file)?;
    let params = a.fov.resolve(file, &grid)?;
    let center = grid.center();
    let gaze = usage(grid.clamp_to_frame(PixelPoint::new(
        a.gaze_x.unwrap_or(center.x_px),
        a.gaze_y.unwrap_or(center.y_px),
    )))?;

    let map = compute_offset_map(&grid, &params, gaze)?;
    export::write_offset_map_csv(create(&with_suffix(&a.out, ".csv"))?, &map)?;
    export::write_offset_map_pgm(create(&with_suffix(&a.out, ".pgm"))?, &map)?;
    println!("mean_offset {}", map.mean());

    if let Some(spec) = &a.sweep {
        let list = parse_sweep(spec, &params)?;
        for p in &list {
            usage(p.validate(&grid))?;
        }
        let model = a.rate.resolve(file)?;
        let rows = savings_sweep(&grid, &list, gaze, &model)?;
        let path = with_suffix(&a.out, "_sweep.csv");
        export::write_sweep_csv(create(&path)?, &rows)?;
        export::write_sweep_csv(io::stdout().lock(), &rows)?;
    }
    Ok(())
}

fn cmd_generate(a: GenerateArgs, file: &FileConfig) -> CliResult {
    let grid = a.grid.resolve(file)?;
    let seed = a.seed.resolve(file)?;
    let duration = a.duration.or(file.duration).unwrap_or(60.0);
    let rate_hz = a.rate_hz.or(file.rate_hz).unwrap_or(90.0);
    let trace = usage(generate_synthetic_trace(
        a.kind.into(),
        duration,
        rate_hz,
        seed,
        grid,
    ))?;
    let mut out = create(&a.out)?;
    trace.write_csv(&mut out)?;
    out.flush()?;
    info!("wrote {} samples to {}", trace.len(), a.out.display());
    Ok(())
}

fn cmd_simulate(a: SimulateArgs, file: &FileConfig) -> CliResult {
    let grid = a.grid.resolve(file)?;
    let seed = a.seed.resolve(file)?;
    let config = SessionConfig {
        grid,
        fov: a.fov.resolve(file, &grid)?,
        rate: a.rate.resolve(file)?,
        channel: ChannelSpec {
            base_latency_ms: a.latency_ms.or(file.latency_ms).unwrap_or(0.0),
            jitter_ms: a.jitter_ms.or(file.jitter_ms).unwrap_or(0.0),
            loss_prob: a.loss.or(file.loss).unwrap_or(0.0),
            seed,
        },
        filter: a.filter.resolve(file)?,
        fps: a.fps.or(file.fps).unwrap_or(session::DEFAULT_FPS),
        duration_s: a.duration.or(file.duration),
        seed,
    };
    usage(config.validate())?;

    let trace = load_trace(&a.trace, grid)?;
    let records = run_session(&trace, &config)?;
    let summary = session::session_summary(&records)?;

    let mut jsonl = create(&with_suffix(&a.out, ".jsonl"))?;
    session::write_records_jsonl(&mut jsonl, &records)?;
    jsonl.flush()?;
    let mut csv = create(&with_suffix(&a.out, ".csv"))?;
    session::write_records_csv(&mut csv, &records)?;
    csv.flush()?;
    let text = serde_json::to_string_pretty(&summary).context("serializing summary")?;
    std::fs::write(with_suffix(&a.out, "_summary.json"), format!("{text}\n"))?;
    println!("{text}");
    Ok(())
}

fn cmd_moments(a: MomentsArgs, file: &FileConfig) -> CliResult {
    let (trace, grid) = a.input.load(file)?;
    let radius = moment_radius(a.radius, a.w_frac, file, &grid);
    let moments = usage(analytics::gaze_moments(&trace, radius))?;
    let mut out = create(&a.out)?;
    export::write_moments_csv(&mut out, &moments)?;
    out.flush()?;
    println!("moments {} radius_px {radius}", moments.len());
    Ok(())
}

fn cmd_rate(a: RateArgs, file: &FileConfig) -> CliResult {
    let (trace, _) = a.input.load(file)?;
    let rates = analytics::change_rate(&trace)?;
    let mut out = create(&a.out)?;
    export::write_values(&mut out, &rates)?;
    out.flush()?;
    Ok(())
}

fn cmd_heatmap(a: HeatmapArgs, file: &FileConfig) -> CliResult {
    let (trace, grid) = a.input.load(file)?;
    let bin = a.bin_size.or(file.bin_size).unwrap_or(16.0);
    let bw = a
        .bandwidth
        .or(file.bandwidth)
        .unwrap_or(grid.frame_width_px() as f64 / 64.0);
    let heat = usage(analytics::heatmap(&trace, &grid, bin, bw))?;
    let mut csv = create(&with_suffix(&a.out, ".csv"))?;
    export::write_heatmap_csv(&mut csv, &heat)?;
    csv.flush()?;
    let mut pgm = create(&with_suffix(&a.out, ".pgm"))?;
    export::write_heatmap_pgm(&mut pgm, &heat)?;
    pgm.flush()?;
    Ok(())
}

fn read_values(path: &Path) -> CliResult<Vec<f64>> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut values = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let v = line
            .parse::<f64>()
            .with_context(|| format!("{}:{}: bad value {line:?}", path.display(), idx + 1))?;
        values.push(v);
    }
    Ok(values)
}

fn cmd_ecdf(a: EcdfArgs, file: &FileConfig) -> CliResult {
    let values = match (&a.values, &a.trace, a.of) {
        (Some(path), None, None) => read_values(path)?,
        (None, Some(path), Some(of)) => {
            let grid = a.grid.resolve(file)?;
            let trace = load_trace(path, grid)?;
            match of {
                EcdfOf::Rate => analytics::change_rate(&trace)?,
                EcdfOf::Moments => {
                    let r = moment_radius(a.radius, a.w_frac, file, &grid);
                    usage(analytics::gaze_moments(&trace, r))?
                        .iter()
                        .map(|m| m.duration_us() as f64 / 1e3)
                        .collect()
                }
            }
        }
        _ => {
            return Err(CliError::Usage(
                "give either --values or --trace with --of".into(),
            ))
        }
    };
    let steps = analytics::ecdf(&values)?;
    let mut out = create(&a.out)?;
    export::write_ecdf_csv(&mut out, &steps)?;
    out.flush()?;
    Ok(())
}

fn cmd_latency(a: LatencyArgs) -> CliResult {
    let budget = usage(latency_budget(
        a.e2e_ms.unwrap_or(100.0),
        a.sampler_hz.unwrap_or(90.0),
    ))?;
    let rate = a.rate.unwrap_or(100.0);
    if rate.is_nan() || rate < 0.0 {
        return Err(CliError::Usage("--rate must be >= 0".into()));
    }
    let report = json!({
        "e2e_ms": budget.e2e_ms,
        "sampler_interval_ms": budget.sampler_interval_ms,
        "total_ms": budget.total_ms,
        "rate_px_s": rate,
        "shift_px": shift_during(&budget, rate),
    });
    println!("{report}");
    Ok(())
}

fn cmd_send(a: SendArgs, file: &FileConfig) -> CliResult {
    let grid = a.grid.resolve(file)?;
    let addr = a
        .addr
        .or_else(|| file.addr.clone())
        .unwrap_or_else(|| DEFAULT_ADDR.to_string());
    let trace = load_trace(&a.trace, grid)?;
    let sender =
        GazeSender::connect(addr.as_str()).with_context(|| format!("opening socket to {addr}"))?;

    let start = Instant::now();
    let t0 = trace.samples().first().map_or(0, |s| s.timestamp_us);
    let mut sent = 0u64;
    for s in trace.samples() {
        if a.realtime {
            let due = Duration::from_micros(s.timestamp_us - t0);
            if let Some(wait) = due.checked_sub(start.elapsed()) {
                thread::sleep(wait);
            }
        }
        sender.send(&GazeMessage::from_sample(s, &grid)?)?;
        sent += 1;
    }
    println!("{}", json!({ "sent": sent, "addr": addr }));
    Ok(())
}

fn cmd_serve(a: ServeArgs, file: &FileConfig) -> CliResult {
    let grid = a.grid.resolve(file)?;
    let addr = a
        .addr
        .or_else(|| file.addr.clone())
        .unwrap_or_else(|| DEFAULT_ADDR.to_string());
    let duration = a.duration.unwrap_or(10.0);
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(CliError::Usage("--duration must be > 0".into()));
    }
    let print_every = Duration::from_millis(a.print_ms.unwrap_or(500).max(1));

    let socket = UdpSocket::bind(addr.as_str()).with_context(|| format!("binding {addr}"))?;
    let local = socket.local_addr()?;
    eprintln!("listening on {local}");
    let cell = SharedGazeCell::new();
    let stop = Arc::new(AtomicBool::new(false));
    let receiver = spawn_receiver(socket, cell.clone(), stop.clone())?;

    let deadline = Instant::now() + Duration::from_secs_f64(duration);
    let mut stdout = io::stdout().lock();
    while Instant::now() < deadline {
        thread::sleep(print_every.min(deadline.saturating_duration_since(Instant::now())));
        if let Some((msg, updated_us)) = cell.snapshot() {
            let p = msg.to_pixel(&grid);
            writeln!(
                stdout,
                "{}",
                json!({
                    "seq": msg.seq,
                    "timestamp_us": msg.timestamp_us,
                    "valid": msg.is_valid(),
                    "x_px": p.x_px,
                    "y_px": p.y_px,
                    "updated_us": updated_us,
                })
            )?;
        }
    }
    stop.store(true, Ordering::Relaxed);
    let stats = receiver
        .join()
        .map_err(|_| CliError::Runtime(anyhow::anyhow!("receiver thread panicked")))?;
    writeln!(
        stdout,
        "{}",
        json!({
            "received": stats.received,
            "accepted": stats.accepted,
            "stale": stats.stale,
            "malformed": stats.malformed,
        })
    )?;
    Ok(())
}
