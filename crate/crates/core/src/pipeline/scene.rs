use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Result, T4dtError};
use crate::geometry::SceneBounds;
use crate::quantics::{ModeSelector, QuantKind, QuantLayout, QuantizedFrame};
use crate::tensor::{Core3, DenseVolume, MemoryBudget, StorageReport, TTTensor, TTTuckerTensor, TuckerTensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SceneFormat {
    Tt,
    Tucker,
    TtTucker,
    Qtt,
    Oqtt,
}

impl SceneFormat {
    pub const ALL: [SceneFormat; 5] =
        [SceneFormat::Tt, SceneFormat::Tucker, SceneFormat::TtTucker, SceneFormat::Qtt, SceneFormat::Oqtt];

    /// Container format tag.
    pub fn tag(self) -> u8 {
        match self {
            SceneFormat::Tt => 0,
            SceneFormat::Tucker => 1,
            SceneFormat::TtTucker => 2,
            SceneFormat::Qtt => 3,
            SceneFormat::Oqtt => 4,
        }
    }

    pub fn from_tag(tag: u8) -> Result<Self> {
        SceneFormat::ALL
            .into_iter()
            .find(|f| f.tag() == tag)
            .ok_or_else(|| T4dtError::validation(format!("unknown format tag {tag}")))
    }

    pub fn name(self) -> &'static str {
        match self {
            SceneFormat::Tt => "tt",
            SceneFormat::Tucker => "tucker",
            SceneFormat::TtTucker => "tt-tucker",
            SceneFormat::Qtt => "qtt",
            SceneFormat::Oqtt => "oqtt",
        }
    }

    pub fn quant_kind(self) -> Option<QuantKind> {
        match self {
            SceneFormat::Qtt => Some(QuantKind::Qtt),
            SceneFormat::Oqtt => Some(QuantKind::Oqtt),
            _ => None,
        }
    }
}

impl fmt::Display for SceneFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SceneFormat {
    type Err = T4dtError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tt" => Ok(SceneFormat::Tt),
            "tucker" => Ok(SceneFormat::Tucker),
            "tt-tucker" | "tttucker" | "tt_tucker" => Ok(SceneFormat::TtTucker),
            "qtt" => Ok(SceneFormat::Qtt),
            "oqtt" => Ok(SceneFormat::Oqtt),
            other => Err(T4dtError::validation(format!("unknown format '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ScalarWidth {
    F32,
    F64,
}

impl ScalarWidth {
    pub fn bytes(self) -> usize {
        match self {
            ScalarWidth::F32 => 4,
            ScalarWidth::F64 => 8,
        }
    }

    pub fn from_bytes(b: usize) -> Result<Self> {
        match b {
            4 => Ok(ScalarWidth::F32),
            8 => Ok(ScalarWidth::F64),
            other => Err(T4dtError::validation(format!("scalar width must be 4 or 8 bytes, got {other}"))),
        }
    }

    /// Rounds a value to what this width can store.
    pub fn quantize(self, v: f64) -> f64 {
        match self {
            ScalarWidth::F32 => v as f32 as f64,
            ScalarWidth::F64 => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScenePayload {
    Tt(TTTensor),
    Tucker(TuckerTensor),
    TtTucker(TTTuckerTensor),
    Quantized(TTTensor),
}

impl ScenePayload {
    pub fn parameter_count(&self) -> usize {
        match self {
            ScenePayload::Tt(t) | ScenePayload::Quantized(t) => t.parameter_count(),
            ScenePayload::Tucker(t) => t.parameter_count(),
            ScenePayload::TtTucker(t) => t.parameter_count(),
        }
    }

    /// Internal TT ranks, or Tucker ranks for the Tucker payload.
    pub fn ranks(&self) -> Vec<usize> {
        match self {
            ScenePayload::Tt(t) | ScenePayload::Quantized(t) => t.ranks(),
            ScenePayload::Tucker(t) => t.ranks(),
            ScenePayload::TtTucker(t) => t.tt().ranks(),
        }
    }

    pub(crate) fn map_values(&self, f: impl Fn(f64) -> f64 + Copy) -> Result<ScenePayload> {
        let map_tt = |t: &TTTensor| -> Result<TTTensor> {
            let cores = t
                .cores()
                .iter()
                .map(|c| Core3::new(c.left(), c.size(), c.right(), c.data().iter().map(|&v| f(v)).collect()))
                .collect::<Result<Vec<_>>>()?;
            TTTensor::new(cores)
        };
        Ok(match self {
            ScenePayload::Tt(t) => ScenePayload::Tt(map_tt(t)?),
            ScenePayload::Quantized(t) => ScenePayload::Quantized(map_tt(t)?),
            ScenePayload::Tucker(t) => {
                let core = DenseVolume::new(t.core().shape().to_vec(), t.core().data().iter().map(|&v| f(v)).collect())?;
                let factors = t.factors().iter().map(|m| m.map(f)).collect();
                ScenePayload::Tucker(TuckerTensor::new(core, factors)?)
            }
            ScenePayload::TtTucker(t) => {
                let factors = t.factors().iter().map(|m| m.as_ref().map(|m| m.map(f))).collect();
                ScenePayload::TtTucker(TTTuckerTensor::new(map_tt(t.tt())?, factors)?)
            }
        })
    }
}

/// How scene coordinates map onto payload modes.
#[derive(Debug, Clone, PartialEq)]
pub enum SceneLayout {
    /// Modes `(x, y, z, t)` in that order.
    Grid { spatial: [usize; 3], frames: usize },
    Quantized(QuantLayout),
}

impl SceneLayout {
    pub fn padded_frames(&self) -> usize {
        match self {
            SceneLayout::Grid { frames, .. } => *frames,
            SceneLayout::Quantized(l) => l.padded_frames(),
        }
    }

    /// Payload dimensions `(X, Y, Z, T)` after padding.
    pub fn padded_dims(&self) -> [usize; 4] {
        match self {
            SceneLayout::Grid { spatial, frames } => [spatial[0], spatial[1], spatial[2], *frames],
            SceneLayout::Quantized(l) => [l.side(), l.side(), l.side(), l.padded_frames()],
        }
    }
}

/// A frame sliced out of a scene, still compressed.
#[derive(Debug, Clone, PartialEq)]
pub enum CompressedFrame {
    Tt(TTTensor),
    Tucker(TuckerTensor),
    TtTucker(TTTuckerTensor),
    Quantized(QuantizedFrame),
}

impl CompressedFrame {
    pub fn to_dense(&self, budget: &MemoryBudget) -> Result<DenseVolume> {
        match self {
            CompressedFrame::Tt(t) => t.to_dense(budget),
            CompressedFrame::Tucker(t) => t.to_dense(budget),
            CompressedFrame::TtTucker(t) => t.to_dense(budget),
            CompressedFrame::Quantized(q) => q.to_dense(budget),
        }
    }

    pub fn element(&self, x: usize, y: usize, z: usize) -> Result<f64> {
        match self {
            CompressedFrame::Tt(t) => t.element(&[x, y, z]),
            CompressedFrame::Tucker(t) => t.element(&[x, y, z]),
            CompressedFrame::TtTucker(t) => t.element(&[x, y, z]),
            CompressedFrame::Quantized(q) => q.element(x, y, z),
        }
    }

    pub fn parameter_count(&self) -> usize {
        match self {
            CompressedFrame::Tt(t) => t.parameter_count(),
            CompressedFrame::Tucker(t) => t.parameter_count(),
            CompressedFrame::TtTucker(t) => t.parameter_count(),
            CompressedFrame::Quantized(q) => q.tt.parameter_count(),
        }
    }
}

/// Parameter counts against both the true and the padded frame count.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SceneStorage {
    pub format: SceneFormat,
    pub scalar_width: usize,
    pub true_frames: StorageReport,
    pub padded: StorageReport,
    pub payload_bytes: u64,
}

/// A compressed 4D scene plus the metadata needed to address it.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressedScene {
    pub(crate) format: SceneFormat,
    pub(crate) payload: ScenePayload,
    pub(crate) layout: SceneLayout,
    pub(crate) true_frame_count: usize,
    pub(crate) bounds: SceneBounds,
    pub(crate) tau: f64,
    pub(crate) resolution: [usize; 3],
    pub(crate) scalar_width: ScalarWidth,
}

impl CompressedScene {
    /// Assembles a scene and checks that payload, layout and metadata agree.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        format: SceneFormat,
        payload: ScenePayload,
        layout: SceneLayout,
        true_frame_count: usize,
        bounds: SceneBounds,
        tau: f64,
        resolution: [usize; 3],
        scalar_width: ScalarWidth,
    ) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(T4dtError::validation(format!("tau must be positive, got {tau}")));
        }
        if resolution.contains(&0) {
            return Err(T4dtError::validation("resolution must be positive"));
        }
        if true_frame_count == 0 || true_frame_count > layout.padded_frames() {
            return Err(T4dtError::validation(format!(
                "true frame count {true_frame_count} outside 1..={}",
                layout.padded_frames()
            )));
        }
        let shape_ok = match (&payload, &layout, format) {
            (ScenePayload::Tt(t), SceneLayout::Grid { spatial, frames }, SceneFormat::Tt) => {
                t.shape() == [spatial[0], spatial[1], spatial[2], *frames] && *spatial == resolution
            }
            (ScenePayload::Tucker(t), SceneLayout::Grid { spatial, frames }, SceneFormat::Tucker) => {
                t.shape() == [spatial[0], spatial[1], spatial[2], *frames] && *spatial == resolution
            }
            (ScenePayload::TtTucker(t), SceneLayout::Grid { spatial, frames }, SceneFormat::TtTucker) => {
                t.shape() == [spatial[0], spatial[1], spatial[2], *frames]
                    && *spatial == resolution
                    && t.factors()[3].is_none()
            }
            (ScenePayload::Quantized(t), SceneLayout::Quantized(l), f) => {
                f.quant_kind() == Some(l.kind())
                    && t.shape() == l.mode_sizes()
                    && l.original_shape()[..3] == resolution
                    && l.original_shape()[3] == true_frame_count
            }
            _ => false,
        };
        if !shape_ok {
            return Err(T4dtError::shape(format!(
                "{format} payload does not match its layout or resolution {resolution:?}"
            )));
        }
        Ok(CompressedScene { format, payload, layout, true_frame_count, bounds, tau, resolution, scalar_width })
    }

    pub fn format(&self) -> SceneFormat {
        self.format
    }

    pub fn payload(&self) -> &ScenePayload {
        &self.payload
    }

    pub fn layout(&self) -> &SceneLayout {
        &self.layout
    }

    pub fn true_frame_count(&self) -> usize {
        self.true_frame_count
    }

    pub fn padded_frame_count(&self) -> usize {
        self.layout.padded_frames()
    }

    pub fn bounds(&self) -> &SceneBounds {
        &self.bounds
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn resolution(&self) -> [usize; 3] {
        self.resolution
    }

    pub fn scalar_width(&self) -> ScalarWidth {
        self.scalar_width
    }

    pub fn parameter_count(&self) -> usize {
        self.payload.parameter_count()
    }

    pub fn storage(&self) -> SceneStorage {
        let count = self.parameter_count() as u64;
        let [x, y, z] = self.resolution;
        let dims = self.layout.padded_dims();
        SceneStorage {
            format: self.format,
            scalar_width: self.scalar_width.bytes(),
            true_frames: StorageReport::new(count, &[x, y, z, self.true_frame_count]),
            padded: StorageReport::new(count, &dims),
            payload_bytes: count * self.scalar_width.bytes() as u64,
        }
    }

    pub fn check_frame(&self, t: usize) -> Result<()> {
        if t >= self.true_frame_count {
            return Err(T4dtError::range(format!(
                "frame {t} out of range: scene has {} frames",
                self.true_frame_count
            )));
        }
        Ok(())
    }

    /// Slices frame `i` out of the scene without densifying.
    pub fn extract_frame(&self, i: usize) -> Result<CompressedFrame> {
        self.check_frame(i)?;
        Ok(match &self.payload {
            ScenePayload::Tt(t) => CompressedFrame::Tt(t.fix_mode(3, i)?),
            ScenePayload::Tucker(t) => CompressedFrame::Tucker(t.fix_mode(3, i)?),
            ScenePayload::TtTucker(t) => CompressedFrame::TtTucker(t.fix_mode(3, i)?),
            ScenePayload::Quantized(t) => {
                let SceneLayout::Quantized(layout) = &self.layout else {
                    unreachable!("quantized payloads carry a quantized layout")
                };
                let selectors = layout.frame_subindex(i)?;
                let mut tt = t.clone();
                // fix from the back so earlier positions stay valid
                for (pos, sel) in selectors.iter().enumerate().rev() {
                    if let ModeSelector::Fixed(bit) = sel {
                        tt = tt.fix_mode(pos, *bit)?;
                    }
                }
                CompressedFrame::Quantized(QuantizedFrame { tt, layout: layout.frame_layout() })
            }
        })
    }

    /// Dense frame `i` on the original grid.
    pub fn frame_dense(&self, i: usize, budget: &MemoryBudget) -> Result<DenseVolume> {
        self.extract_frame(i)?.to_dense(budget)
    }

    /// Value at voxel `(x, y, z)` of frame `t`, evaluated in compressed form.
    pub fn element(&self, x: usize, y: usize, z: usize, t: usize) -> Result<f64> {
        self.check_frame(t)?;
        for (axis, (&c, &n)) in [x, y, z].iter().zip(&self.resolution).enumerate() {
            if c >= n {
                return Err(T4dtError::ModeIndex { mode: axis, index: c, size: n });
            }
        }
        match &self.payload {
            ScenePayload::Tt(p) => p.element(&[x, y, z, t]),
            ScenePayload::Tucker(p) => p.element(&[x, y, z, t]),
            ScenePayload::TtTucker(p) => p.element(&[x, y, z, t]),
            ScenePayload::Quantized(p) => {
                let SceneLayout::Quantized(layout) = &self.layout else {
                    unreachable!("quantized payloads carry a quantized layout")
                };
                p.element(&layout.voxel_to_qindex(x, y, z, t)?)
            }
        }
    }
}
