//! `uf`: runs the pipeline stages over city directories.
//!
//! Stages talk only through files in the city directory, each leaving a
//! `<stage>.manifest.json` behind. Exit codes: 0 ok, 2 usage, 3 I/O,
//! 4 data contract violation.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use uf_core::entropy::{MetricKind, TimeFilter};
use uf_core::field::PScope;
use uf_core::geo::{DemographicKind, Level};
use uf_core::pipeline::{default_workers, run_grid_profiles, run_ingest, run_metrics, run_synth};
use uf_core::raster::{
    apply_color_filter, mercator_y, rasterize_divisions, rasterize_field, ColorFilter, DiffusionParams, Viewport,
};
use uf_core::store::CityDir;
use uf_core::synth::SyntheticCitySpec;
use uf_core::{BBox, Lattice};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_DATA: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] uf_core::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io(_) => EXIT_IO,
            CliError::Core(e) if e.is_io() => EXIT_IO,
            CliError::Core(uf_core::Error::InvalidArgument(_)) => EXIT_USAGE,
            CliError::Core(_) => EXIT_DATA,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "uf", version, about = "Urban mobility entropy pipeline")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic city and its movement records.
    Synth(SynthArgs),
    /// Shard raw records by device.
    Ingest(IngestArgs),
    /// Precompute per-cell POI-class profiles.
    GridProfiles(CityArgs),
    /// Compute and cache metric fields.
    Metrics(MetricsArgs),
    /// Render a cached field to PNG.
    Render(RenderArgs),
    /// Serve every city under a data directory over HTTP.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// JSON spec; defaults apply when omitted.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// City directory to create.
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the spec seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct CityArgs {
    /// City directory (or its city.json).
    #[arg(long)]
    pub city: PathBuf,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub city: PathBuf,
    #[arg(long, default_value_t = 16)]
    pub shards: usize,
    /// Shard directory; defaults to `<city>/shards`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Writer threads; defaults to the logical CPU count.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetricList(pub Vec<MetricKind>);

fn parse_metric_list(s: &str) -> Result<MetricList, String> {
    if s.eq_ignore_ascii_case("all") {
        return Ok(MetricList(MetricKind::ALL.to_vec()));
    }
    s.split(',').map(|m| m.trim().parse::<MetricKind>()).collect::<Result<_, _>>().map(MetricList)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilterList(pub Vec<TimeFilter>);

fn parse_filter_list(s: &str) -> Result<FilterList, String> {
    if s.eq_ignore_ascii_case("every") {
        return Ok(FilterList(TimeFilter::every()));
    }
    s.split(',').map(|f| f.trim().parse::<TimeFilter>()).collect::<Result<_, _>>().map(FilterList)
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[arg(long)]
    pub city: PathBuf,
    /// Comma-separated metrics, or `all`.
    #[arg(long, value_parser = parse_metric_list, default_value = "all")]
    pub metric: MetricList,
    /// Comma-separated filters (`all`, band names, `weekday`, `weekend`), or `every`.
    #[arg(long, value_parser = parse_filter_list, default_value = "all")]
    pub filter: FilterList,
    /// Shard directory; defaults to `<city>/shards`.
    #[arg(long)]
    pub shards: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Normalize user vectors over all records instead of the filtered ones.
    #[arg(long)]
    pub global_p: bool,
}

/// A cached field or a per-division demographics layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RenderLayer {
    Field(MetricKind),
    Demographic(DemographicKind),
}

fn parse_layer(s: &str) -> Result<RenderLayer, String> {
    if let Ok(m) = s.parse::<MetricKind>() {
        return Ok(RenderLayer::Field(m));
    }
    DemographicKind::parse(&s.to_ascii_lowercase())
        .map(RenderLayer::Demographic)
        .ok_or_else(|| format!("unknown metric {s:?}"))
}

fn parse_bbox(s: &str) -> Result<BBox, String> {
    let v: Vec<f64> =
        s.split(',').map(|p| p.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    match v[..] {
        [a, b, c, d] if BBox::new(a, b, c, d).is_valid() => Ok(BBox::new(a, b, c, d)),
        _ => Err("expected lon_min,lat_min,lon_max,lat_max with min < max".into()),
    }
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[arg(long)]
    pub city: PathBuf,
    #[arg(long, value_parser = parse_layer)]
    pub metric: RenderLayer,
    #[arg(long, default_value = "all", value_parser = |s: &str| s.parse::<TimeFilter>())]
    pub filter: TimeFilter,
    /// Viewport `lon_min,lat_min,lon_max,lat_max`; defaults to the city bbox.
    #[arg(long, visible_alias = "viewport", value_parser = parse_bbox)]
    pub bbox: Option<BBox>,
    #[arg(long, default_value_t = 1024)]
    pub width: u32,
    /// Defaults to the bbox's Mercator aspect ratio.
    #[arg(long)]
    pub height: Option<u32>,
    #[arg(long, default_value_t = 1.0)]
    pub zoom: f64,
    /// Kernel radius at zoom 1; defaults to three grid radii.
    #[arg(long)]
    pub radius_px: Option<f64>,
    /// Keep the ground radius fixed so the pixel radius scales with zoom.
    #[arg(long)]
    pub adaptive: bool,
    /// Values below are transparent; defaults to the raster minimum.
    #[arg(long)]
    pub t_min: Option<f64>,
    /// Values at or above get the last ramp color; defaults to the raster maximum.
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long)]
    pub reversed: bool,
    #[arg(long, default_value_t = 1.0)]
    pub opacity: f64,
    #[arg(long)]
    pub png: PathBuf,
    /// Also write the scalar raster as little-endian f32.
    #[arg(long)]
    pub raw: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = uf_api::DATA_DIR_ENV)]
    pub data: PathBuf,
    #[arg(long, env = uf_api::PORT_ENV, default_value_t = uf_api::DEFAULT_PORT)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: IpAddr,
}

fn city_dir(path: &Path) -> CityDir {
    if path.is_file() {
        CityDir::new(path.parent().unwrap_or(Path::new(".")))
    } else {
        CityDir::new(path)
    }
}

fn workers(n: Option<usize>) -> CliResult<usize> {
    match n {
        Some(0) => Err(CliError::Usage("--workers must be at least 1".into())),
        Some(n) => Ok(n),
        None => Ok(default_workers()),
    }
}

fn emit(out: &mut dyn Write, value: serde_json::Value) -> CliResult<()> {
    writeln!(out, "{value}")?;
    Ok(())
}

pub fn synth(args: &SynthArgs, out: &mut dyn Write) -> CliResult<()> {
    let mut spec = match &args.spec {
        Some(p) => SyntheticCitySpec::load(p)?,
        None => SyntheticCitySpec::default(),
    };
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let city = CityDir::new(&args.out);
    let s = run_synth(&spec, &city)?;
    emit(out, json!({ "stage": "synth", "city": city.root, "users": s.users, "records": s.records }))
}

pub fn ingest(args: &IngestArgs, out: &mut dyn Write) -> CliResult<()> {
    if args.shards == 0 {
        return Err(CliError::Usage("--shards must be at least 1".into()));
    }
    let city = city_dir(&args.city);
    let shard_dir = args.out.clone().unwrap_or_else(|| city.shard_dir());
    let m = run_ingest(&city, &args.input, &shard_dir, args.shards, workers(args.workers)?)?;
    emit(
        out,
        json!({
            "stage": "ingest",
            "input_lines": m.input_lines,
            "retained_records": m.retained_records,
            "retained_devices": m.retained_devices,
            "rejected": m.rejected_total(),
            "dropped_source": m.dropped_source,
            "removed_by_cleansing": m.removed_by_cleansing,
            "shards": m.shards.len(),
        }),
    )
}

pub fn grid_profiles(args: &CityArgs, out: &mut dyn Write) -> CliResult<()> {
    let city = city_dir(&args.city);
    let grid = run_grid_profiles(&city)?;
    let profiled = grid.profiles().filter(|p| p.q.iter().any(|v| *v != 0.0)).count();
    emit(out, json!({ "stage": "grid-profiles", "cols": grid.cols(), "rows": grid.rows(), "profiled_cells": profiled }))
}

pub fn metrics(args: &MetricsArgs, out: &mut dyn Write) -> CliResult<()> {
    let city = city_dir(&args.city);
    let shard_dir = args.shards.clone().unwrap_or_else(|| city.shard_dir());
    let jobs: Vec<_> = args.metric.0.iter().flat_map(|&m| args.filter.0.iter().map(move |&f| (m, f))).collect();
    let scope = if args.global_p { PScope::Global } else { PScope::Filtered };
    for s in run_metrics(&city, &shard_dir, &jobs, workers(args.workers)?, scope)? {
        emit(
            out,
            json!({ "stage": "metrics", "metric": s.metric, "filter": s.filter, "cells": s.cells, "stats": s.stats }),
        )?;
    }
    Ok(())
}

fn default_height(bbox: &BBox, width: u32) -> u32 {
    let aspect = (mercator_y(bbox.lat_max) - mercator_y(bbox.lat_min)) / bbox.width().to_radians();
    ((f64::from(width) * aspect).round() as u32).max(1)
}

pub fn render(args: &RenderArgs, out: &mut dyn Write) -> CliResult<()> {
    let city = city_dir(&args.city);
    let cfg = city.load_config()?;
    let lattice = Lattice::new(&cfg)?;
    let bbox = args.bbox.unwrap_or(cfg.bbox);
    let height = args.height.unwrap_or_else(|| default_height(&bbox, args.width));
    let view = Viewport { bbox, width: args.width, height, zoom: args.zoom };
    if !view.is_valid() {
        return Err(CliError::Usage("viewport needs a positive size and zoom inside the Mercator range".into()));
    }
    if !(0.0..=1.0).contains(&args.opacity) {
        return Err(CliError::Usage("--opacity must be in [0, 1]".into()));
    }
    let raster = match args.metric {
        RenderLayer::Field(m) => {
            let field = city.load_field(m, args.filter)?;
            let mut params = DiffusionParams::default_for(&lattice, &view);
            if let Some(r) = args.radius_px {
                if !(r.is_finite() && r > 0.0) {
                    return Err(CliError::Usage("--radius-px must be positive".into()));
                }
                params.radius_px = r;
            }
            params.adaptive = args.adaptive;
            rasterize_field(&field, &lattice, &view, &params)
        }
        RenderLayer::Demographic(k) => {
            let divisions = city.load_divisions()?;
            rasterize_divisions(&divisions.layer(Level::Div), k, &view)
        }
    };
    let (lo, hi) = raster.value_range;
    let filter = ColorFilter::new(args.t_min.unwrap_or(lo), args.t_max.unwrap_or(hi))
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let filter = ColorFilter { reversed: args.reversed, ..filter };
    let image = apply_color_filter(&raster, &filter, args.opacity);
    let mut w = BufWriter::new(File::create(&args.png).map_err(|e| uf_core::Error::io(&args.png, e))?);
    image.write_png(&mut w)?;
    w.flush().map_err(|e| uf_core::Error::io(&args.png, e))?;
    if let Some(raw) = &args.raw {
        fs::write(raw, raster.to_f32_le()).map_err(|e| uf_core::Error::io(raw, e))?;
    }
    emit(
        out,
        json!({ "stage": "render", "png": args.png, "width": view.width, "height": view.height, "value_range": [lo, hi] }),
    )
}

pub fn serve(args: &ServeArgs) -> CliResult<()> {
    let state = uf_api::AppState::load(&args.data)?;
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(uf_api::serve(SocketAddr::new(args.host, args.port), state))?;
    Ok(())
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> CliResult<()> {
    match &cli.command {
        Command::Synth(a) => synth(a, out),
        Command::Ingest(a) => ingest(a, out),
        Command::GridProfiles(a) => grid_profiles(a, out),
        Command::Metrics(a) => metrics(a, out),
        Command::Render(a) => render(a, out),
        Command::Serve(a) => serve(a),
    }
}
