use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use serde::Serialize;

use crate::decompose::{insert_time_mode, to_tt_tucker, tt_concat, tt_round_bonds, tt_svd, tucker_hosvd_ranks, TruncationSpec};
use crate::error::{Result, T4dtError};
use crate::geometry::SceneBounds;
use crate::quantics::{frame_to_oqtt, frame_to_qtt, QMode, QuantLayout};
use crate::tensor::{DenseVolume, MemoryBudget, TTTensor};

use super::scene::{CompressedScene, ScalarWidth, SceneFormat, SceneLayout, ScenePayload};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MergeStrategy {
    /// Level-synchronous pairwise merging; an unpaired tensor moves up a level unchanged.
    Tree,
    /// Sequential accumulation `((f0 ⊕ f1) ⊕ f2) ⊕ ...`; time-last layouts only.
    Fold,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimePadding {
    /// Pad quantized time to the next power of two of the frame count.
    Minimal,
    /// Pad quantized time to at least as many digits as each spatial axis.
    MatchSpatial,
}

#[derive(Debug, Clone)]
pub struct CompressOptions {
    pub format: SceneFormat,
    /// Per-frame rank cap R_s.
    pub rank_spatial: Option<usize>,
    /// Merge rank cap R_t.
    pub rank_time: Option<usize>,
    /// Per-frame relative error budget.
    pub eps_spatial: Option<f64>,
    /// Relative error budget of every merge truncation.
    pub eps_time: Option<f64>,
    pub merge: MergeStrategy,
    pub time_padding: TimePadding,
    pub scalar_width: ScalarWidth,
    pub tau: f64,
    pub bounds: SceneBounds,
    pub budget: MemoryBudget,
}

impl CompressOptions {
    /// Lossless 32-bit tree merge.
    pub fn new(format: SceneFormat, tau: f64, bounds: SceneBounds) -> Self {
        CompressOptions {
            format,
            rank_spatial: None,
            rank_time: None,
            eps_spatial: None,
            eps_time: None,
            merge: MergeStrategy::Tree,
            time_padding: TimePadding::Minimal,
            scalar_width: ScalarWidth::F32,
            tau,
            bounds,
            budget: MemoryBudget::default(),
        }
    }

    pub fn ranks(mut self, spatial: Option<usize>, time: Option<usize>) -> Self {
        self.rank_spatial = spatial;
        self.rank_time = time;
        self
    }

    pub fn scalar_width(mut self, w: ScalarWidth) -> Self {
        self.scalar_width = w;
        self
    }

    fn frame_spec(&self) -> Result<TruncationSpec> {
        match (self.rank_spatial, self.eps_spatial) {
            (None, None) => Ok(TruncationSpec::lossless()),
            (r, e) => TruncationSpec::new(r, e),
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(T4dtError::validation(format!("tau must be positive, got {}", self.tau)));
        }
        if self.rank_spatial == Some(0) || self.rank_time == Some(0) {
            return Err(T4dtError::validation("rank caps must be positive"));
        }
        for e in [self.eps_spatial, self.eps_time].into_iter().flatten() {
            if !(e.is_finite() && e >= 0.0) {
                return Err(T4dtError::validation(format!("error budget {e} must be finite and ≥ 0")));
            }
        }
        if self.merge == MergeStrategy::Fold && self.format.quant_kind().is_some() {
            return Err(T4dtError::validation("fold merging needs a time-last layout (tt, tt-tucker)"));
        }
        Ok(())
    }

    /// Cap for a bond during merging: R_t next to a time core, otherwise
    /// the larger of the two caps.
    fn merge_cap(&self, touches_time: bool) -> Option<usize> {
        if touches_time {
            self.rank_time
        } else {
            match (self.rank_spatial, self.rank_time) {
                (Some(s), Some(t)) => Some(s.max(t)),
                _ => None,
            }
        }
    }
}

/// Counts dense frames currently held by the pipeline.
#[derive(Debug, Default)]
pub struct ResidencyGauge {
    current: AtomicUsize,
    peak: AtomicUsize,
}

impl ResidencyGauge {
    fn acquire(&self) {
        let now = self.current.fetch_add(1, Ordering::SeqCst) + 1;
        self.peak.fetch_max(now, Ordering::SeqCst);
    }

    fn release(&self) {
        self.current.fetch_sub(1, Ordering::SeqCst);
    }

    pub fn peak(&self) -> usize {
        self.peak.load(Ordering::SeqCst)
    }
}

struct Resident<'g> {
    frame: DenseVolume,
    gauge: &'g ResidencyGauge,
}

impl Drop for Resident<'_> {
    fn drop(&mut self) {
        self.gauge.release();
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct CompressStats {
    pub frames: usize,
    pub padded_frames: usize,
    pub peak_dense_frames: usize,
    pub frame_seconds: f64,
    pub merge_seconds: f64,
    pub finalize_seconds: f64,
}

struct FrameReader<'g, I> {
    source: I,
    gauge: &'g ResidencyGauge,
    shape: Option<Vec<usize>>,
    count: usize,
}

impl<'g, I: Iterator<Item = Result<DenseVolume>>> FrameReader<'g, I> {
    fn next_frame(&mut self) -> Result<Option<Resident<'g>>> {
        let Some(frame) = self.source.next() else { return Ok(None) };
        let frame = frame?;
        if frame.ndim() != 3 {
            return Err(T4dtError::validation(format!(
                "frame {} has {} modes, expected 3",
                self.count,
                frame.ndim()
            )));
        }
        match &self.shape {
            None => self.shape = Some(frame.shape().to_vec()),
            Some(s) if s.as_slice() != frame.shape() => {
                return Err(T4dtError::shape(format!(
                    "frame {} has shape {:?}, frame 0 has {:?}",
                    self.count,
                    frame.shape(),
                    s
                )))
            }
            Some(_) => {}
        }
        self.count += 1;
        self.gauge.acquire();
        Ok(Some(Resident { frame, gauge: self.gauge }))
    }
}

/// Compresses a stream of equally shaped 3D frames into one scene.
///
/// At most two dense frames are held at once (the pure Tucker format is the
/// exception: it stacks the whole scene densely and is meant for small
/// inputs). Frame compression and same-level merges use the current rayon
/// pool; the pairing order is fixed, so the result does not depend on the
/// number of threads.
pub fn compress_scene<I>(frames: I, opts: &CompressOptions) -> Result<(CompressedScene, CompressStats)>
where
    I: IntoIterator<Item = Result<DenseVolume>>,
{
    opts.validate()?;
    let gauge = ResidencyGauge::default();
    let mut reader = FrameReader { source: frames.into_iter(), gauge: &gauge, shape: None, count: 0 };
    let mut stats = CompressStats::default();

    if opts.format == SceneFormat::Tucker {
        return compress_tucker(&mut reader, opts, stats);
    }

    let spec = opts.frame_spec()?;
    let compress_one = |v: &DenseVolume| -> Result<TTTensor> {
        match opts.format {
            SceneFormat::Qtt => Ok(frame_to_qtt(v, &spec, -opts.tau)?.tt),
            SceneFormat::Oqtt => Ok(frame_to_oqtt(v, &spec, -opts.tau)?.tt),
            _ => insert_time_mode(&tt_svd(v, &spec)?, 3),
        }
    };

    let clock = Instant::now();
    let mut compressed: Vec<TTTensor> = Vec::new();
    loop {
        let Some(a) = reader.next_frame()? else { break };
        match reader.next_frame()? {
            Some(b) => {
                let (ca, cb) = rayon::join(|| compress_one(&a.frame), || compress_one(&b.frame));
                drop((a, b));
                compressed.push(ca?);
                compressed.push(cb?);
            }
            None => {
                let ca = compress_one(&a.frame);
                drop(a);
                compressed.push(ca?);
            }
        }
    }
    if compressed.is_empty() {
        return Err(T4dtError::validation("cannot compress an empty frame sequence"));
    }
    let shape = reader.shape.clone().expect("at least one frame read");
    let resolution = [shape[0], shape[1], shape[2]];
    let true_frames = compressed.len();
    stats.frames = true_frames;
    stats.frame_seconds = clock.elapsed().as_secs_f64();

    let clock = Instant::now();
    let (payload, layout) = match opts.format.quant_kind() {
        Some(kind) => {
            let base = QuantLayout::for_shape(kind, resolution, true_frames)?;
            let kt = match opts.time_padding {
                TimePadding::Minimal => base.time_bits(),
                TimePadding::MatchSpatial => base.time_bits().max(base.spatial_bits()),
            };
            let layout = QuantLayout::new(kind, base.spatial_bits(), kt, [shape[0], shape[1], shape[2], true_frames])?;
            let last = compressed.last().expect("nonempty").clone();
            compressed.resize(layout.padded_frames(), last);
            let tt = merge_quantized(compressed, &layout, opts)?;
            (ScenePayload::Quantized(tt), SceneLayout::Quantized(layout))
        }
        None => {
            let tt = match opts.merge {
                MergeStrategy::Tree => merge_tree_grid(compressed, opts)?,
                MergeStrategy::Fold => merge_fold_grid(compressed, opts)?,
            };
            let layout = SceneLayout::Grid { spatial: resolution, frames: true_frames };
            let payload = if opts.format == SceneFormat::TtTucker {
                let modes = [0usize, 1, 2].into_iter().collect();
                ScenePayload::TtTucker(to_tt_tucker(&tt, &modes, &spec)?)
            } else {
                ScenePayload::Tt(tt)
            };
            (payload, layout)
        }
    };
    stats.merge_seconds = clock.elapsed().as_secs_f64();
    stats.padded_frames = layout.padded_frames();
    stats.peak_dense_frames = gauge.peak();
    finalize(payload, layout, resolution, true_frames, opts, stats)
}

fn finalize(
    payload: ScenePayload,
    layout: SceneLayout,
    resolution: [usize; 3],
    true_frames: usize,
    opts: &CompressOptions,
    mut stats: CompressStats,
) -> Result<(CompressedScene, CompressStats)> {
    let clock = Instant::now();
    let width = opts.scalar_width;
    let payload = match width {
        ScalarWidth::F64 => payload,
        ScalarWidth::F32 => payload.map_values(|v| width.quantize(v))?,
    };
    let scene = CompressedScene::from_parts(
        opts.format,
        payload,
        layout,
        true_frames,
        opts.bounds,
        opts.tau,
        resolution,
        width,
    )?;
    stats.finalize_seconds = clock.elapsed().as_secs_f64();
    Ok((scene, stats))
}

fn compress_tucker<I: Iterator<Item = Result<DenseVolume>>>(
    reader: &mut FrameReader<'_, I>,
    opts: &CompressOptions,
    mut stats: CompressStats,
) -> Result<(CompressedScene, CompressStats)> {
    let clock = Instant::now();
    let mut held = Vec::new();
    while let Some(f) = reader.next_frame()? {
        let elements = f.frame.len() as u128 * (held.len() as u128 + 1);
        opts.budget.check_elements(elements)?;
        held.push(f);
    }
    if held.is_empty() {
        return Err(T4dtError::validation("cannot compress an empty frame sequence"));
    }
    let t = held.len();
    let mut shape = held[0].frame.shape().to_vec();
    shape.push(t);
    let mut data = vec![0.0; held[0].frame.len() * t];
    for (ti, r) in held.iter().enumerate() {
        for (i, &v) in r.frame.data().iter().enumerate() {
            data[i * t + ti] = v;
        }
    }
    stats.peak_dense_frames = reader.gauge.peak();
    drop(held);
    let stacked = DenseVolume::new(shape.clone(), data)?;
    let rs = opts.rank_spatial;
    let eps = match (opts.rank_spatial, opts.rank_time, opts.eps_spatial) {
        (None, None, None) => Some(0.0),
        (_, _, e) => e,
    };
    let tucker = tucker_hosvd_ranks(&stacked, &[rs, rs, rs, opts.rank_time], eps)?;
    stats.frames = shape[3];
    stats.padded_frames = shape[3];
    stats.frame_seconds = clock.elapsed().as_secs_f64();
    let layout = SceneLayout::Grid { spatial: [shape[0], shape[1], shape[2]], frames: shape[3] };
    finalize(ScenePayload::Tucker(tucker), layout, [shape[0], shape[1], shape[2]], shape[3], opts, stats)
}

fn grid_caps(opts: &CompressOptions) -> Vec<Option<usize>> {
    vec![opts.merge_cap(false), opts.merge_cap(false), opts.merge_cap(true)]
}

fn merge_pair_grid(a: &TTTensor, b: &TTTensor, caps: &[Option<usize>], eps: Option<f64>) -> Result<TTTensor> {
    tt_round_bonds(&tt_concat(a, b, 3)?, caps, eps)
}

fn merge_tree_grid(mut level: Vec<TTTensor>, opts: &CompressOptions) -> Result<TTTensor> {
    use rayon::prelude::*;
    let caps = grid_caps(opts);
    while level.len() > 1 {
        let mut next: Vec<TTTensor> = level
            .par_chunks(2)
            .map(|pair| match pair {
                [a, b] => merge_pair_grid(a, b, &caps, opts.eps_time),
                [a] => Ok(a.clone()),
                _ => unreachable!("chunks of two"),
            })
            .collect::<Result<_>>()?;
        std::mem::swap(&mut level, &mut next);
    }
    Ok(level.pop().expect("nonempty"))
}

fn merge_fold_grid(frames: Vec<TTTensor>, opts: &CompressOptions) -> Result<TTTensor> {
    let caps = grid_caps(opts);
    let mut it = frames.into_iter();
    let mut acc = it.next().expect("nonempty");
    for f in it {
        acc = merge_pair_grid(&acc, &f, &caps, opts.eps_time)?;
    }
    Ok(acc)
}

/// Builds the quantized scene bottom-up: merge level `l` inserts time digit
/// `t_{k_t - l + 1}` into both operands and concatenates along it, so the
/// last level carries the most significant digit.
fn merge_quantized(mut level: Vec<TTTensor>, layout: &QuantLayout, opts: &CompressOptions) -> Result<TTTensor> {
    use rayon::prelude::*;
    let schedule = layout.schedule();
    let kt = layout.time_bits();
    for j in (1..=kt).rev() {
        let present = |m: &QMode| match m {
            QMode::T(l) => *l >= j,
            _ => true,
        };
        let full_pos = schedule.iter().position(|m| *m == QMode::T(j)).expect("time digit in schedule");
        let pos = schedule[..full_pos].iter().filter(|m| present(m)).count();
        let partial: Vec<QMode> = schedule.iter().copied().filter(|m| present(m)).collect();
        let caps: Vec<Option<usize>> = partial
            .windows(2)
            .map(|w| opts.merge_cap(w[0].is_time() || w[1].is_time()))
            .collect();
        let next: Vec<TTTensor> = level
            .par_chunks(2)
            .map(|pair| {
                let a = insert_time_mode(&pair[0], pos)?;
                let b = insert_time_mode(&pair[1], pos)?;
                tt_round_bonds(&tt_concat(&a, &b, pos)?, &caps, opts.eps_time)
            })
            .collect::<Result<_>>()?;
        level = next;
    }
    debug_assert_eq!(level.len(), 1);
    Ok(level.pop().expect("one tensor after the last level"))
}

