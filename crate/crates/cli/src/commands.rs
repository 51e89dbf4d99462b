//! Command-line surface.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use t4dt_core::decompose::{tt_svd, tucker_hosvd_ranks, TruncationSpec};
use t4dt_core::geometry::io::save_obj;
use t4dt_core::geometry::synth::MovingSphere;
use t4dt_core::geometry::{marching_cubes, SceneBounds};
use t4dt_core::metrics::{default_frames, evaluate_frame, ChamferNorm, HausdorffMode, MetricOptions, MetricReport};
use t4dt_core::pipeline::{
    compress_scene, query_gradient, query_point, CompressOptions, CompressStats, CompressedScene, MergeStrategy,
    Sampling, ScalarWidth, SceneFormat, SceneStorage, TimePadding,
};
use t4dt_core::quantics::{frame_to_oqtt, frame_to_qtt};
use t4dt_core::tensor::{DenseVolume, MemoryBudget};
use t4dt_core::{Result, T4dtError};

use crate::container;
use crate::npy;
use crate::source::{write_synthetic, SceneInput};

#[derive(Debug, Parser)]
#[command(name = "t4dt", version, about = "Low-rank compression of time-varying TSDF scenes")]
pub struct Cli {
    /// Worker threads (1 gives a fully serial run).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Voxelize and compress a frame sequence into a scene file.
    Compress(CompressArgs),
    /// Reconstruct one frame as a volume and/or a mesh.
    Extract(ExtractArgs),
    /// Evaluate the TSDF (and optionally its gradient) at a world point.
    Query(QueryArgs),
    /// Compare a scene against its reference frames.
    Metrics(MetricsArgs),
    /// Rank sweep over formats, written as CSV.
    Bench(BenchArgs),
    /// Write the synthetic sphere sequence to disk.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Mesh (.obj/.ply) or volume (.npy) file, or a directory of frames sorted by name.
    #[arg(long, short, conflicts_with = "synthetic")]
    pub input: Option<PathBuf>,
    /// Use the built-in translating-sphere scene.
    #[arg(long)]
    pub synthetic: bool,
    /// Grid size per axis for meshes and synthetic scenes.
    #[arg(long, default_value_t = 64)]
    pub resolution: usize,
    /// Frame count of the synthetic scene.
    #[arg(long, default_value_t = 16)]
    pub frames: usize,
    /// Truncation distance relative to the longest edge of the scene bounds.
    #[arg(long, default_value_t = 0.05)]
    pub tau: f64,
    /// Scene bounds `minx miny minz maxx maxy maxz` in world units.
    #[arg(long, num_args = 6, value_names = ["MINX", "MINY", "MINZ", "MAXX", "MAXY", "MAXZ"], allow_negative_numbers = true)]
    pub bounds: Option<Vec<f64>>,
}

impl InputArgs {
    fn open(&self) -> Result<SceneInput> {
        let bounds = match &self.bounds {
            Some(b) => Some(SceneBounds::new([b[0], b[1], b[2]], [b[3], b[4], b[5]])?),
            None => None,
        };
        match (&self.input, self.synthetic) {
            (Some(p), false) => SceneInput::open(p, self.resolution, self.tau, bounds),
            (None, true) => {
                let s = SceneInput::synthetic(self.resolution, self.frames, self.tau)?;
                match bounds {
                    Some(b) => {
                        let tau = self.tau * b.longest_edge();
                        s.on_grid(b, [self.resolution; 3], tau)
                    }
                    None => Ok(s),
                }
            }
            _ => Err(T4dtError::Validation("give either --input PATH or --synthetic".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Tt,
    Tucker,
    TtTucker,
    Qtt,
    Oqtt,
}

impl From<FormatArg> for SceneFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Tt => SceneFormat::Tt,
            FormatArg::Tucker => SceneFormat::Tucker,
            FormatArg::TtTucker => SceneFormat::TtTucker,
            FormatArg::Qtt => SceneFormat::Qtt,
            FormatArg::Oqtt => SceneFormat::Oqtt,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MergeArg {
    Tree,
    Fold,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PaddingArg {
    Minimal,
    MatchSpatial,
}

#[derive(Debug, Clone, Args)]
pub struct RankArgs {
    /// Per-frame rank cap R_s.
    #[arg(long)]
    pub max_rank_spatial: Option<usize>,
    /// Merge rank cap R_t.
    #[arg(long)]
    pub max_rank_time: Option<usize>,
    /// Sets both caps.
    #[arg(long, conflicts_with_all = ["max_rank_spatial", "max_rank_time"])]
    pub max_rank: Option<usize>,
    /// Per-frame relative error budget.
    #[arg(long)]
    pub eps_spatial: Option<f64>,
    /// Relative error budget of each merge truncation.
    #[arg(long)]
    pub eps_time: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct CompressArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value = "oqtt")]
    pub format: FormatArg,
    #[command(flatten)]
    pub ranks: RankArgs,
    #[arg(long, value_enum, default_value = "tree")]
    pub merge: MergeArg,
    /// Time padding of quantized formats.
    #[arg(long, value_enum, default_value = "minimal")]
    pub time_padding: PaddingArg,
    /// Bytes per stored scalar (4 or 8).
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u8).range(4..=8))]
    pub scalar_width: u8,
    /// Output scene file.
    #[arg(long, short)]
    pub output: PathBuf,
    /// Print the report as JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ExtractArgs {
    pub scene: PathBuf,
    #[arg(long, short)]
    pub frame: usize,
    /// Write the frame as an NPY volume.
    #[arg(long)]
    pub volume: Option<PathBuf>,
    /// Write the frame's zero level set as an OBJ mesh.
    #[arg(long)]
    pub mesh: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub iso: f64,
    /// Store the volume as float32.
    #[arg(long)]
    pub f32: bool,
}

#[derive(Debug, Clone, Args)]
pub struct QueryArgs {
    pub scene: PathBuf,
    #[arg(allow_negative_numbers = true)]
    pub x: f64,
    #[arg(allow_negative_numbers = true)]
    pub y: f64,
    #[arg(allow_negative_numbers = true)]
    pub z: f64,
    pub t: usize,
    /// Also report the central-difference gradient.
    #[arg(long)]
    pub gradient: bool,
    /// Blend the 8 surrounding voxels instead of taking the nearest one.
    #[arg(long)]
    pub trilinear: bool,
    /// Additionally time this many random queries and report latency statistics.
    #[arg(long)]
    pub latency: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ChamferArg {
    Mean,
    Sum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum HausdorffArg {
    Vertices,
    PointToTriangle,
}

#[derive(Debug, Clone, Args)]
pub struct MetricArgs {
    /// Surface samples per mesh for the Chamfer distance.
    #[arg(long, default_value_t = 30_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "mean")]
    pub chamfer: ChamferArg,
    #[arg(long, value_enum, default_value = "vertices")]
    pub hausdorff: HausdorffArg,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub iso: f64,
}

impl MetricArgs {
    fn options(&self) -> MetricOptions {
        MetricOptions {
            iso: self.iso,
            samples: self.samples,
            seed: self.seed,
            chamfer: match self.chamfer {
                ChamferArg::Mean => ChamferNorm::Mean,
                ChamferArg::Sum => ChamferNorm::Sum,
            },
            hausdorff: match self.hausdorff {
                HausdorffArg::Vertices => HausdorffMode::Vertices,
                HausdorffArg::PointToTriangle => HausdorffMode::PointToTriangle,
            },
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct MetricsArgs {
    pub scene: PathBuf,
    /// Reference frames (same kinds of input as `compress`).
    #[arg(long, short, conflicts_with = "synthetic")]
    pub reference: Option<PathBuf>,
    /// Compare against the built-in synthetic scene.
    #[arg(long)]
    pub synthetic: bool,
    /// Comma-separated frame indices (default: first, middle, last).
    #[arg(long, value_delimiter = ',')]
    pub frames: Option<Vec<usize>>,
    #[command(flatten)]
    pub metric: MetricArgs,
    /// Also write the report as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Also write the per-frame table as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Formats to sweep.
    #[arg(long, value_enum, value_delimiter = ',', default_values = ["tt-tucker", "oqtt"])]
    pub formats: Vec<FormatArg>,
    /// Rank caps to sweep (`full` for no cap); each point sets R_s = R_t.
    #[arg(long, value_delimiter = ',', default_values = ["4", "8", "16", "32"])]
    pub ranks: Vec<String>,
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u8).range(4..=8))]
    pub scalar_width: u8,
    /// Frames evaluated for metrics (default: first, middle, last).
    #[arg(long, value_delimiter = ',')]
    pub eval_frames: Option<Vec<usize>>,
    #[command(flatten)]
    pub metric: MetricArgs,
    /// Output CSV (stdout when absent).
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SynthKind {
    Volume,
    Mesh,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// Output directory.
    #[arg(long, short)]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value = "volume")]
    pub kind: SynthKind,
    #[arg(long, default_value_t = 32)]
    pub resolution: usize,
    #[arg(long, default_value_t = 8)]
    pub frames: usize,
    #[arg(long, default_value_t = 0.05)]
    pub tau: f64,
    /// Icosphere subdivisions for mesh output.
    #[arg(long, default_value_t = 3)]
    pub subdivisions: u32,
}

fn scalar_width(bytes: u8) -> Result<ScalarWidth> {
    ScalarWidth::from_bytes(bytes as usize)
}

fn parse_rank(s: &str) -> Result<Option<usize>> {
    if s.eq_ignore_ascii_case("full") {
        return Ok(None);
    }
    match s.trim().parse::<usize>() {
        Ok(r) if r > 0 => Ok(Some(r)),
        _ => Err(T4dtError::Validation(format!("rank '{s}' is neither a positive integer nor 'full'"))),
    }
}

fn json_string<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v).map_err(|e| T4dtError::Format(format!("json: {e}")))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    std::fs::write(path, contents)?;
    Ok(())
}

/// Parses arguments and runs the selected command, writing results to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    let threads = cli.threads;
    if threads == Some(0) {
        return Err(T4dtError::Validation("--threads must be at least 1".into()));
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| T4dtError::Validation(format!("thread pool: {e}")))?;
    let mut buf = Vec::new();
    let result = pool.install(|| {
        let w: &mut dyn Write = &mut buf;
        match cli.command {
            Command::Compress(a) => cmd_compress(&a, w),
            Command::Extract(a) => cmd_extract(&a, w),
            Command::Query(a) => cmd_query(&a, w),
            Command::Metrics(a) => cmd_metrics(&a, w),
            Command::Bench(a) => cmd_bench(&a, w),
            Command::Synth(a) => cmd_synth(&a, w),
        }
    });
    out.write_all(&buf)?;
    out.flush()?;
    result
}

#[derive(Debug, Serialize)]
pub struct CompressReport {
    pub output: PathBuf,
    pub format: SceneFormat,
    pub resolution: [usize; 3],
    pub frames: usize,
    pub padded_frames: usize,
    pub tau: f64,
    pub bounds: SceneBounds,
    pub ranks: Vec<usize>,
    pub storage: SceneStorage,
    pub file_bytes: u64,
    pub timing: CompressStats,
    pub write_seconds: f64,
}

pub fn compress_options(input: &SceneInput, format: SceneFormat, ranks: &RankArgs) -> CompressOptions {
    let (rs, rt) = match ranks.max_rank {
        Some(r) => (Some(r), Some(r)),
        None => (ranks.max_rank_spatial, ranks.max_rank_time),
    };
    let mut opts = CompressOptions::new(format, input.tau, input.bounds).ranks(rs, rt);
    opts.eps_spatial = ranks.eps_spatial;
    opts.eps_time = ranks.eps_time;
    opts.budget = MemoryBudget::from_env();
    opts
}

pub fn cmd_compress(a: &CompressArgs, out: &mut dyn Write) -> Result<()> {
    let input = a.input.open()?;
    let mut opts = compress_options(&input, a.format.into(), &a.ranks).scalar_width(scalar_width(a.scalar_width)?);
    opts.merge = match a.merge {
        MergeArg::Tree => MergeStrategy::Tree,
        MergeArg::Fold => MergeStrategy::Fold,
    };
    opts.time_padding = match a.time_padding {
        PaddingArg::Minimal => TimePadding::Minimal,
        PaddingArg::MatchSpatial => TimePadding::MatchSpatial,
    };
    let (scene, stats) = compress_scene(input.frames(), &opts)?;
    let clock = Instant::now();
    let file_bytes = container::write_scene(&scene, &a.output)?;
    let write_seconds = clock.elapsed().as_secs_f64();
    let mut storage = scene.storage();
    storage.true_frames = storage.true_frames.with_bytes(file_bytes);
    storage.padded = storage.padded.with_bytes(file_bytes);
    let report = CompressReport {
        output: a.output.clone(),
        format: scene.format(),
        resolution: scene.resolution(),
        frames: scene.true_frame_count(),
        padded_frames: scene.padded_frame_count(),
        tau: scene.tau(),
        bounds: *scene.bounds(),
        ranks: scene.payload().ranks(),
        storage,
        file_bytes,
        timing: stats,
        write_seconds,
    };
    if a.json {
        writeln!(out, "{}", json_string(&report)?)?;
    } else {
        print_compress_report(&report, out)?;
    }
    Ok(())
}

fn print_compress_report(r: &CompressReport, out: &mut dyn Write) -> Result<()> {
    let s = &r.storage;
    writeln!(out, "wrote {} ({} bytes)", r.output.display(), r.file_bytes)?;
    writeln!(
        out,
        "format {}  grid {}x{}x{}  frames {} (padded {})  tau {}",
        r.format, r.resolution[0], r.resolution[1], r.resolution[2], r.frames, r.padded_frames, r.tau
    )?;
    writeln!(out, "max rank {}", r.ranks.iter().max().copied().unwrap_or(1))?;
    writeln!(out, "parameters {}  payload bytes {} ({}-byte scalars)", s.true_frames.parameter_count, s.payload_bytes, s.scalar_width)?;
    writeln!(
        out,
        "compression ratio {:.3} over {} true-frame voxels, {:.3} over {} padded voxels",
        s.true_frames.compression_ratio, s.true_frames.uncompressed_count, s.padded.compression_ratio, s.padded.uncompressed_count
    )?;
    writeln!(
        out,
        "timing: frames {:.3}s  merge {:.3}s  finalize {:.3}s  write {:.3}s  (peak dense frames {})",
        r.timing.frame_seconds, r.timing.merge_seconds, r.timing.finalize_seconds, r.write_seconds, r.timing.peak_dense_frames
    )?;
    Ok(())
}

pub fn cmd_extract(a: &ExtractArgs, out: &mut dyn Write) -> Result<()> {
    let scene = container::read_scene(&a.scene)?;
    if a.volume.is_none() && a.mesh.is_none() {
        return Err(T4dtError::Validation("give --volume and/or --mesh".into()));
    }
    let v = scene.frame_dense(a.frame, &MemoryBudget::from_env())?;
    if let Some(p) = &a.volume {
        npy::write(&v, p, a.f32)?;
        writeln!(out, "wrote volume {} {:?}", p.display(), v.shape())?;
    }
    if let Some(p) = &a.mesh {
        let m = marching_cubes(&v, a.iso, scene.bounds())?;
        save_obj(&m, p)?;
        writeln!(out, "wrote mesh {} ({} vertices, {} triangles)", p.display(), m.vertices().len(), m.triangles().len())?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct Latency {
    queries: usize,
    min_ns: u128,
    median_ns: u128,
    max_ns: u128,
}

#[derive(Debug, Serialize)]
struct QueryReport {
    point: [f64; 3],
    frame: usize,
    value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    gradient: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    latency: Option<Latency>,
}

/// Random points inside `b` and frames below `frames`.
pub fn random_queries(b: &SceneBounds, frames: usize, n: usize, seed: u64) -> Vec<([f64; 3], usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let p = [0, 1, 2].map(|a| rng.gen_range(b.min()[a]..b.max()[a]));
            (p, rng.gen_range(0..frames))
        })
        .collect()
}

pub fn cmd_query(a: &QueryArgs, out: &mut dyn Write) -> Result<()> {
    let scene = container::read_scene(&a.scene)?;
    let sampling = if a.trilinear { Sampling::Trilinear } else { Sampling::Nearest };
    let p = [a.x, a.y, a.z];
    let value = query_point(&scene, p, a.t, sampling)?;
    let gradient = if a.gradient { Some(query_gradient(&scene, p, a.t, sampling)?) } else { None };
    let latency = match a.latency {
        None | Some(0) => None,
        Some(n) => {
            let qs = random_queries(scene.bounds(), scene.true_frame_count(), n, a.seed);
            let mut ns = Vec::with_capacity(n);
            for &(q, t) in &qs {
                let clock = Instant::now();
                std::hint::black_box(query_point(&scene, std::hint::black_box(q), t, sampling)?);
                ns.push(clock.elapsed().as_nanos());
            }
            ns.sort_unstable();
            Some(Latency { queries: n, min_ns: ns[0], median_ns: ns[n / 2], max_ns: ns[n - 1] })
        }
    };
    writeln!(out, "{}", json_string(&QueryReport { point: p, frame: a.t, value, gradient, latency })?)?;
    Ok(())
}

/// Metrics of `scene` against `reference` on the given frames.
pub fn scene_metrics(
    scene: &CompressedScene,
    reference: &SceneInput,
    frames: &[usize],
    opts: &MetricOptions,
) -> Result<MetricReport> {
    let budget = MemoryBudget::from_env();
    let mut per_frame = Vec::with_capacity(frames.len());
    for &i in frames {
        scene.check_frame(i)?;
        let orig = reference.frame(i)?;
        let recon = scene.frame_dense(i, &budget)?;
        per_frame.push(evaluate_frame(i, &orig, &recon, scene.bounds(), opts)?);
    }
    MetricReport::from_frames(per_frame, opts)
}

pub fn cmd_metrics(a: &MetricsArgs, out: &mut dyn Write) -> Result<()> {
    let scene = container::read_scene(&a.scene)?;
    let rel_tau = scene.tau() / scene.bounds().longest_edge();
    let reference = match (&a.reference, a.synthetic) {
        (Some(p), false) => SceneInput::open(p, scene.resolution()[0], rel_tau, Some(*scene.bounds()))?,
        (None, true) => SceneInput::synthetic(scene.resolution()[0], scene.true_frame_count(), rel_tau)?,
        _ => return Err(T4dtError::Validation("give either --reference PATH or --synthetic".into())),
    }
    .on_grid(*scene.bounds(), scene.resolution(), scene.tau())?;
    if reference.frame_count() != scene.true_frame_count() {
        return Err(T4dtError::ShapeMismatch(format!(
            "reference has {} frames, scene has {}",
            reference.frame_count(),
            scene.true_frame_count()
        )));
    }
    let frames = a.frames.clone().unwrap_or_else(|| default_frames(scene.true_frame_count()));
    let report = scene_metrics(&scene, &reference, &frames, &a.metric.options())?;
    let json = json_string(&report)?;
    if let Some(p) = &a.json {
        write_file(p, json.as_bytes())?;
    }
    if let Some(p) = &a.csv {
        write_file(p, report.to_csv().as_bytes())?;
    }
    writeln!(out, "{json}")?;
    Ok(())
}

pub const BENCH_HEADER: &str = "format,rank_spatial,rank_time,parameters,payload_bytes,ratio_true,ratio_padded,\
frame_stage_error,scene_error,l2,iou,hausdorff,chamfer,compress_seconds";

/// Relative Frobenius error, over all frames, of compressing each frame on its own.
pub fn frame_stage_error(input: &SceneInput, format: SceneFormat, rank: Option<usize>) -> Result<f64> {
    let spec = match rank {
        Some(r) => TruncationSpec::rank(r),
        None => TruncationSpec::lossless(),
    };
    let budget = MemoryBudget::from_env();
    let (mut err2, mut norm2) = (0.0, 0.0);
    for f in input.frames() {
        let f = f?;
        let approx: DenseVolume = match format {
            SceneFormat::Tt | SceneFormat::TtTucker => tt_svd(&f, &spec)?.to_dense(&budget)?,
            SceneFormat::Tucker => tucker_hosvd_ranks(&f, &[rank; 3], if rank.is_none() { Some(0.0) } else { None })?
                .to_dense(&budget)?,
            SceneFormat::Qtt => frame_to_qtt(&f, &spec, -input.tau)?.to_dense(&budget)?,
            SceneFormat::Oqtt => frame_to_oqtt(&f, &spec, -input.tau)?.to_dense(&budget)?,
        };
        err2 += f.distance(&approx)?.powi(2);
        norm2 += f.frobenius_norm().powi(2);
    }
    Ok(if norm2 > 0.0 { (err2 / norm2).sqrt() } else { err2.sqrt() })
}

/// Relative Frobenius error of the whole scene against its input.
pub fn scene_error(scene: &CompressedScene, input: &SceneInput) -> Result<f64> {
    let budget = MemoryBudget::from_env();
    let (mut err2, mut norm2) = (0.0, 0.0);
    for (i, f) in input.frames().enumerate() {
        let f = f?;
        err2 += f.distance(&scene.frame_dense(i, &budget)?)?.powi(2);
        norm2 += f.frobenius_norm().powi(2);
    }
    Ok(if norm2 > 0.0 { (err2 / norm2).sqrt() } else { err2.sqrt() })
}

pub fn cmd_bench(a: &BenchArgs, out: &mut dyn Write) -> Result<()> {
    let input = a.input.open()?;
    let ranks = a.ranks.iter().map(|s| parse_rank(s)).collect::<Result<Vec<_>>>()?;
    if ranks.is_empty() || a.formats.is_empty() {
        return Err(T4dtError::Validation("bench needs at least one format and one rank".into()));
    }
    let width = scalar_width(a.scalar_width)?;
    let frames = a.eval_frames.clone().unwrap_or_else(|| default_frames(input.frame_count()));
    let opts_m = a.metric.options();
    let opt_str = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:e}"));
    let mut csv = String::from(BENCH_HEADER);
    csv.push('\n');
    for &f in &a.formats {
        let format: SceneFormat = f.into();
        for &r in &ranks {
            let rank_args = RankArgs {
                max_rank_spatial: r,
                max_rank_time: r,
                max_rank: None,
                eps_spatial: None,
                eps_time: None,
            };
            let opts = compress_options(&input, format, &rank_args).scalar_width(width);
            let clock = Instant::now();
            let (scene, _) = compress_scene(input.frames(), &opts)?;
            let seconds = clock.elapsed().as_secs_f64();
            let st = scene.storage();
            let m = scene_metrics(&scene, &input, &frames, &opts_m)?;
            let rank_txt = r.map_or("full".to_string(), |r| r.to_string());
            csv += &format!(
                "{format},{rank_txt},{rank_txt},{},{},{},{},{:e},{:e},{:e},{},{},{},{seconds:.4}\n",
                st.true_frames.parameter_count,
                st.payload_bytes,
                st.true_frames.compression_ratio,
                st.padded.compression_ratio,
                frame_stage_error(&input, format, r)?,
                scene_error(&scene, &input)?,
                m.l2,
                m.iou,
                opt_str(m.hausdorff),
                opt_str(m.chamfer),
            );
        }
    }
    match &a.output {
        Some(p) => {
            write_file(p, csv.as_bytes())?;
            writeln!(out, "wrote {} ({} rows)", p.display(), a.formats.len() * ranks.len())?;
        }
        None => write!(out, "{csv}")?,
    }
    Ok(())
}

pub fn cmd_synth(a: &SynthArgs, out: &mut dyn Write) -> Result<()> {
    if a.resolution == 0 || a.frames == 0 {
        return Err(T4dtError::Validation("resolution and frames must be positive".into()));
    }
    let s = MovingSphere::standard(a.resolution, a.frames, a.tau);
    let files = write_synthetic(&a.output, &s, a.kind == SynthKind::Mesh, a.subdivisions)?;
    writeln!(out, "wrote {} frames to {}", files.len(), a.output.display())?;
    Ok(())
}

/// Entry point shared by the binary and tests: returns the process exit code.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    match run(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "t4dt: {e}");
            e.exit_code()
        }
    }
}
