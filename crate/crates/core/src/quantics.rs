//! Quantized (QTT) and octet-quantized (OQTT) reshaping of voxel grids.
//!
//! Every axis of a `2^k` cube is split into its binary digits, most
//! significant first, and the digits are interleaved per level as
//! `x_j, y_j, z_j, t_j` (QTT) or `o_j, t_j` with the octet digit
//! `o_j = 4·x_j + 2·y_j + z_j` (OQTT). The spatial part of the resulting
//! linear order is the z-order (Morton) curve.

use std::fmt;

use crate::decompose::{tt_svd, TruncationSpec};
use crate::error::{Result, T4dtError};
use crate::tensor::{DenseVolume, MemoryBudget, TTTensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QuantKind {
    Qtt,
    Oqtt,
}

/// One TT mode of a quantized layout; `level` is 1-based, level 1 being the
/// most significant digit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QMode {
    X(u8),
    Y(u8),
    Z(u8),
    T(u8),
    Octet(u8),
}

impl QMode {
    pub fn size(self) -> usize {
        match self {
            QMode::Octet(_) => 8,
            _ => 2,
        }
    }

    pub fn level(self) -> u8 {
        match self {
            QMode::X(l) | QMode::Y(l) | QMode::Z(l) | QMode::T(l) | QMode::Octet(l) => l,
        }
    }

    pub fn is_time(self) -> bool {
        matches!(self, QMode::T(_))
    }
}

impl fmt::Display for QMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QMode::X(l) => write!(f, "x{l}"),
            QMode::Y(l) => write!(f, "y{l}"),
            QMode::Z(l) => write!(f, "z{l}"),
            QMode::T(l) => write!(f, "t{l}"),
            QMode::Octet(l) => write!(f, "o{l}"),
        }
    }
}

/// Digit significance order of the layout. Only MSB-first is produced; the
/// tag travels with serialized scenes so files stay self-describing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BitOrder {
    MsbFirst,
}

/// Per-mode assignment when addressing a sub-tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeSelector {
    Full,
    Fixed(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantLayout {
    kind: QuantKind,
    spatial_bits: u8,
    time_bits: u8,
    schedule: Vec<QMode>,
    original_shape: [usize; 4],
    bit_order: BitOrder,
}

impl QuantLayout {
    /// Builds the interleaved schedule for a `2^k` spatial cube and `2^k_t`
    /// frames. Time digits follow each spatial group while `j ≤ k_t`; when
    /// `k_t > k` the remaining time digits trail the last group.
    pub fn new(kind: QuantKind, spatial_bits: u8, time_bits: u8, original_shape: [usize; 4]) -> Result<Self> {
        if spatial_bits == 0 {
            return Err(T4dtError::validation("quantized layouts need at least one spatial level"));
        }
        if spatial_bits > 20 || time_bits > 20 {
            return Err(T4dtError::validation("quantized layouts support at most 20 levels per axis"));
        }
        let side = 1usize << spatial_bits;
        for (axis, &n) in original_shape[..3].iter().enumerate() {
            if n == 0 || n > side {
                return Err(T4dtError::validation(format!(
                    "axis {axis} of size {n} does not fit a 2^{spatial_bits} grid"
                )));
            }
        }
        if original_shape[3] == 0 || original_shape[3] > 1usize << time_bits {
            return Err(T4dtError::validation(format!(
                "{} frames do not fit 2^{time_bits} time slots",
                original_shape[3]
            )));
        }
        let mut schedule = Vec::new();
        for j in 1..=spatial_bits {
            match kind {
                QuantKind::Qtt => schedule.extend([QMode::X(j), QMode::Y(j), QMode::Z(j)]),
                QuantKind::Oqtt => schedule.push(QMode::Octet(j)),
            }
            if j <= time_bits {
                schedule.push(QMode::T(j));
            }
        }
        for j in spatial_bits + 1..=time_bits {
            schedule.push(QMode::T(j));
        }
        Ok(QuantLayout {
            kind,
            spatial_bits,
            time_bits,
            schedule,
            original_shape,
            bit_order: BitOrder::MsbFirst,
        })
    }

    /// Smallest layout covering a `W×D×H` grid with `frames` frames.
    pub fn for_shape(kind: QuantKind, spatial: [usize; 3], frames: usize) -> Result<Self> {
        let k = spatial.iter().map(|&n| ceil_log2(n)).max().unwrap_or(0).max(1);
        let kt = ceil_log2(frames);
        QuantLayout::new(kind, k, kt, [spatial[0], spatial[1], spatial[2], frames])
    }

    pub fn kind(&self) -> QuantKind {
        self.kind
    }

    pub fn spatial_bits(&self) -> u8 {
        self.spatial_bits
    }

    pub fn time_bits(&self) -> u8 {
        self.time_bits
    }

    pub fn schedule(&self) -> &[QMode] {
        &self.schedule
    }

    pub fn original_shape(&self) -> [usize; 4] {
        self.original_shape
    }

    pub fn bit_order(&self) -> BitOrder {
        self.bit_order
    }

    pub fn side(&self) -> usize {
        1 << self.spatial_bits
    }

    pub fn padded_frames(&self) -> usize {
        1 << self.time_bits
    }

    pub fn mode_sizes(&self) -> Vec<usize> {
        self.schedule.iter().map(|m| m.size()).collect()
    }

    /// The same layout without time digits (a single frame).
    pub fn frame_layout(&self) -> QuantLayout {
        let [w, d, h, _] = self.original_shape;
        QuantLayout::new(self.kind, self.spatial_bits, 0, [w, d, h, 1]).expect("spatial part already validated")
    }

    /// Schedule positions of `t_1, t_2, ...`, in level order.
    pub fn time_positions(&self) -> Vec<usize> {
        let mut pos: Vec<(u8, usize)> = self
            .schedule
            .iter()
            .enumerate()
            .filter_map(|(p, m)| if let QMode::T(l) = m { Some((*l, p)) } else { None })
            .collect();
        pos.sort();
        pos.into_iter().map(|(_, p)| p).collect()
    }

    /// Maps a voxel and frame to the quantized multi-index.
    pub fn voxel_to_qindex(&self, x: usize, y: usize, z: usize, t: usize) -> Result<Vec<usize>> {
        let side = self.side();
        for (axis, &c) in [x, y, z].iter().enumerate() {
            if c >= side {
                return Err(T4dtError::ModeIndex { mode: axis, index: c, size: side });
            }
        }
        if t >= self.padded_frames() {
            return Err(T4dtError::ModeIndex { mode: 3, index: t, size: self.padded_frames() });
        }
        Ok(self.voxel_to_qindex_unchecked(x, y, z, t))
    }

    pub(crate) fn voxel_to_qindex_unchecked(&self, x: usize, y: usize, z: usize, t: usize) -> Vec<usize> {
        let k = self.spatial_bits;
        let kt = self.time_bits;
        let bit = |v: usize, total: u8, level: u8| (v >> (total - level)) & 1;
        self.schedule
            .iter()
            .map(|&m| match m {
                QMode::X(j) => bit(x, k, j),
                QMode::Y(j) => bit(y, k, j),
                QMode::Z(j) => bit(z, k, j),
                QMode::T(j) => bit(t, kt, j),
                QMode::Octet(j) => 4 * bit(x, k, j) + 2 * bit(y, k, j) + bit(z, k, j),
            })
            .collect()
    }

    /// Inverse of [`voxel_to_qindex`](Self::voxel_to_qindex).
    pub fn qindex_to_voxel(&self, index: &[usize]) -> Result<[usize; 4]> {
        if index.len() != self.schedule.len() {
            return Err(T4dtError::shape(format!(
                "index has {} digits, layout has {} modes",
                index.len(),
                self.schedule.len()
            )));
        }
        let k = self.spatial_bits;
        let kt = self.time_bits;
        let mut out = [0usize; 4];
        for (mode, (&m, &digit)) in self.schedule.iter().zip(index).enumerate() {
            if digit >= m.size() {
                return Err(T4dtError::ModeIndex { mode, index: digit, size: m.size() });
            }
            match m {
                QMode::X(j) => out[0] |= digit << (k - j),
                QMode::Y(j) => out[1] |= digit << (k - j),
                QMode::Z(j) => out[2] |= digit << (k - j),
                QMode::T(j) => out[3] |= digit << (kt - j),
                QMode::Octet(j) => {
                    out[0] |= (digit >> 2) << (k - j);
                    out[1] |= ((digit >> 1) & 1) << (k - j);
                    out[2] |= (digit & 1) << (k - j);
                }
            }
        }
        Ok(out)
    }

    /// Time digits of frame `i` (MSB-first) on the `t_j` modes; spatial
    /// modes are left as full slices.
    pub fn frame_subindex(&self, frame: usize) -> Result<Vec<ModeSelector>> {
        if frame >= self.padded_frames() {
            return Err(T4dtError::range(format!(
                "frame {frame} outside the {} padded time slots",
                self.padded_frames()
            )));
        }
        let kt = self.time_bits;
        Ok(self
            .schedule
            .iter()
            .map(|&m| match m {
                QMode::T(j) => ModeSelector::Fixed((frame >> (kt - j)) & 1),
                _ => ModeSelector::Full,
            })
            .collect())
    }
}

pub(crate) fn ceil_log2(n: usize) -> u8 {
    n.max(1).next_power_of_two().trailing_zeros() as u8
}

/// Position of voxel `(x, y, z)` along the z-order curve of a `2^k` cube,
/// i.e. the row-major offset in the interleaved digit tensor.
pub fn morton_offset(x: usize, y: usize, z: usize, k: u8) -> usize {
    let mut m = 0usize;
    for j in (0..k).rev() {
        let digit = (((x >> j) & 1) << 2) | (((y >> j) & 1) << 1) | ((z >> j) & 1);
        m = (m << 3) | digit;
    }
    m
}

/// A single frame in quantized form: spatial modes only.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedFrame {
    pub tt: TTTensor,
    pub layout: QuantLayout,
}

impl QuantizedFrame {
    /// Dense reconstruction cropped to the original spatial grid.
    pub fn to_dense(&self, budget: &MemoryBudget) -> Result<DenseVolume> {
        quantized_frame_to_dense(&self.tt, &self.layout, budget)
    }

    pub fn element(&self, x: usize, y: usize, z: usize) -> Result<f64> {
        let idx = self.layout.voxel_to_qindex(x, y, z, 0)?;
        self.tt.element(&idx)
    }
}

/// Reorders a padded cube into interleaved digit order.
fn interleave(padded: &DenseVolume, k: u8) -> Vec<f64> {
    let side = 1usize << k;
    let mut out = vec![0.0; side * side * side];
    let data = padded.data();
    for x in 0..side {
        for y in 0..side {
            for z in 0..side {
                out[morton_offset(x, y, z, k)] = data[(x * side + y) * side + z];
            }
        }
    }
    out
}

fn frame_to_quantized(v: &DenseVolume, spec: &TruncationSpec, fill: f64, kind: QuantKind) -> Result<QuantizedFrame> {
    if v.ndim() != 3 {
        return Err(T4dtError::validation(format!("expected a 3-D frame, got {} modes", v.ndim())));
    }
    let s = v.shape();
    let layout = QuantLayout::for_shape(kind, [s[0], s[1], s[2]], 1)?;
    let k = layout.spatial_bits();
    let side = layout.side();
    let padded = v.pad_to_shape(&[side, side, side], fill)?;
    let digits = DenseVolume::new(layout.mode_sizes(), interleave(&padded, k))?;
    let tt = tt_svd(&digits, spec)?;
    Ok(QuantizedFrame { tt, layout })
}

/// Pads to a `2^k` cube with `fill`, interleaves digits per level and runs
/// TT-SVD over the `3k` binary modes.
pub fn frame_to_qtt(v: &DenseVolume, spec: &TruncationSpec, fill: f64) -> Result<QuantizedFrame> {
    frame_to_quantized(v, spec, fill, QuantKind::Qtt)
}

/// As [`frame_to_qtt`], with each level's three digits merged into one
/// size-8 octet mode.
pub fn frame_to_oqtt(v: &DenseVolume, spec: &TruncationSpec, fill: f64) -> Result<QuantizedFrame> {
    frame_to_quantized(v, spec, fill, QuantKind::Oqtt)
}

/// Densifies a spatial-only quantized TT, undoing the interleaving and
/// cropping to the layout's original grid.
pub fn quantized_frame_to_dense(tt: &TTTensor, layout: &QuantLayout, budget: &MemoryBudget) -> Result<DenseVolume> {
    if layout.time_bits() != 0 || tt.shape() != layout.mode_sizes() {
        return Err(T4dtError::shape(format!(
            "tensor shape {:?} does not match frame layout {:?}",
            tt.shape(),
            layout.mode_sizes()
        )));
    }
    let flat = tt.to_dense(budget)?;
    let [w, d, h, _] = layout.original_shape();
    let k = layout.spatial_bits();
    let data = flat.data();
    DenseVolume::from_fn(vec![w, d, h], |i| data[morton_offset(i[0], i[1], i[2], k)])
}
