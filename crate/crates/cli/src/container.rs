//! Single-file scene container, little-endian throughout:
//!
//! ```text
//! magic "T4DT" | version u16 | format tag u8 | scalar width u8
//! resolution 3×u32 | true frames u32 | padded dims 4×u32
//! tau f64 | bbox min 3×f64 | bbox max 3×f64
//! layout descriptor: u32 byte length, then bytes
//! shape table: u32 array count, then per array ndim u8 + ndim×u32 (ndim 0 = absent factor)
//! payload byte length u64 | payload | CRC32 of payload u32
//! ```
//!
//! Layout descriptor bytes: `0` followed by the mode names `"xyzt"` for grid
//! layouts; `1, kind (0 qtt, 1 oqtt), spatial bits, time bits, bit order
//! (0 msb-first), mode count u16, then (axis code, level)` per mode with axis
//! codes x 0, y 1, z 2, t 3, octet 4.
//!
//! The payload is every array of the shape table in order, row-major.

use std::io::{Read, Write};
use std::path::Path;

use t4dt_core::geometry::SceneBounds;
use t4dt_core::linalg::{from_row_major, to_row_major};
use t4dt_core::pipeline::{CompressedScene, ScalarWidth, SceneFormat, SceneLayout, ScenePayload};
use t4dt_core::quantics::{BitOrder, QMode, QuantKind, QuantLayout};
use t4dt_core::tensor::{Core3, DenseVolume, TTTensor, TTTuckerTensor, TuckerTensor};
use t4dt_core::{Result, T4dtError};

pub const MAGIC: &[u8; 4] = b"T4DT";
pub const VERSION: u16 = 1;

fn malformed(msg: impl Into<String>) -> T4dtError {
    T4dtError::Format(msg.into())
}

/// Header fields as stored, before the payload is decoded.
#[derive(Debug, Clone, PartialEq)]
pub struct ContainerHeader {
    pub version: u16,
    pub format: SceneFormat,
    pub scalar_width: ScalarWidth,
    pub resolution: [u32; 3],
    pub true_frames: u32,
    pub padded_dims: [u32; 4],
    pub tau: f64,
    pub bbox_min: [f64; 3],
    pub bbox_max: [f64; 3],
    pub layout: Vec<u8>,
    pub shapes: Vec<Vec<u32>>,
    pub payload_len: u64,
}

/// Array views in serialization order; `None` marks an absent factor.
fn arrays(payload: &ScenePayload) -> Vec<Option<(Vec<usize>, Vec<f64>)>> {
    let tt_arrays = |t: &TTTensor| -> Vec<Option<(Vec<usize>, Vec<f64>)>> {
        t.cores().iter().map(|c| Some((c.shape().to_vec(), c.data().to_vec()))).collect()
    };
    match payload {
        ScenePayload::Tt(t) | ScenePayload::Quantized(t) => tt_arrays(t),
        ScenePayload::Tucker(t) => {
            let mut v = vec![Some((t.core().shape().to_vec(), t.core().data().to_vec()))];
            v.extend(t.factors().iter().map(|f| Some((vec![f.nrows(), f.ncols()], to_row_major(f)))));
            v
        }
        ScenePayload::TtTucker(t) => {
            let mut v = tt_arrays(t.tt());
            v.extend(
                t.factors()
                    .iter()
                    .map(|f| f.as_ref().map(|f| (vec![f.nrows(), f.ncols()], to_row_major(f)))),
            );
            v
        }
    }
}

fn encode_layout(layout: &SceneLayout) -> Vec<u8> {
    match layout {
        SceneLayout::Grid { .. } => {
            let mut v = vec![0u8];
            v.extend_from_slice(b"xyzt");
            v
        }
        SceneLayout::Quantized(l) => {
            let kind = match l.kind() {
                QuantKind::Qtt => 0,
                QuantKind::Oqtt => 1,
            };
            let order = match l.bit_order() {
                BitOrder::MsbFirst => 0,
            };
            let mut v = vec![1u8, kind, l.spatial_bits(), l.time_bits(), order];
            v.extend_from_slice(&(l.schedule().len() as u16).to_le_bytes());
            for m in l.schedule() {
                let code = match m {
                    QMode::X(_) => 0,
                    QMode::Y(_) => 1,
                    QMode::Z(_) => 2,
                    QMode::T(_) => 3,
                    QMode::Octet(_) => 4,
                };
                v.extend_from_slice(&[code, m.level()]);
            }
            v
        }
    }
}

fn decode_layout(bytes: &[u8], resolution: [usize; 3], true_frames: usize, padded: [usize; 4]) -> Result<SceneLayout> {
    match bytes.first() {
        Some(0) => {
            if &bytes[1..] != b"xyzt" {
                return Err(malformed("unknown grid mode order"));
            }
            if padded[..3] != resolution || padded[3] != true_frames {
                return Err(malformed("grid layout dims disagree with the header"));
            }
            Ok(SceneLayout::Grid { spatial: resolution, frames: true_frames })
        }
        Some(1) => {
            if bytes.len() < 7 {
                return Err(malformed("truncated quantized layout"));
            }
            let kind = match bytes[1] {
                0 => QuantKind::Qtt,
                1 => QuantKind::Oqtt,
                k => return Err(malformed(format!("unknown quantization kind {k}"))),
            };
            if bytes[4] != 0 {
                return Err(malformed(format!("unknown bit order {}", bytes[4])));
            }
            let n = u16::from_le_bytes([bytes[5], bytes[6]]) as usize;
            if bytes.len() != 7 + 2 * n {
                return Err(malformed("quantized layout length disagrees with its mode count"));
            }
            let shape = [resolution[0], resolution[1], resolution[2], true_frames];
            let l = QuantLayout::new(kind, bytes[2], bytes[3], shape)?;
            let stored: Vec<(u8, u8)> = bytes[7..].chunks(2).map(|c| (c[0], c[1])).collect();
            let expected: Vec<(u8, u8)> = encode_layout(&SceneLayout::Quantized(l.clone()))[7..]
                .chunks(2)
                .map(|c| (c[0], c[1]))
                .collect();
            if stored != expected {
                return Err(malformed("quantized mode schedule is not the canonical one"));
            }
            if padded != [l.side(), l.side(), l.side(), l.padded_frames()] {
                return Err(malformed("quantized layout dims disagree with the header"));
            }
            Ok(SceneLayout::Quantized(l))
        }
        _ => Err(malformed("unknown layout descriptor")),
    }
}

/// Serializes a scene into its container bytes.
pub fn to_bytes(scene: &CompressedScene) -> Vec<u8> {
    let width = scene.scalar_width();
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(scene.format().tag());
    out.push(width.bytes() as u8);
    for r in scene.resolution() {
        out.extend_from_slice(&(r as u32).to_le_bytes());
    }
    out.extend_from_slice(&(scene.true_frame_count() as u32).to_le_bytes());
    for d in scene.layout().padded_dims() {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    out.extend_from_slice(&scene.tau().to_le_bytes());
    for v in scene.bounds().min().into_iter().chain(scene.bounds().max()) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let layout = encode_layout(scene.layout());
    out.extend_from_slice(&(layout.len() as u32).to_le_bytes());
    out.extend_from_slice(&layout);

    let arrays = arrays(scene.payload());
    out.extend_from_slice(&(arrays.len() as u32).to_le_bytes());
    for a in &arrays {
        match a {
            None => out.push(0),
            Some((shape, _)) => {
                out.push(shape.len() as u8);
                for &d in shape {
                    out.extend_from_slice(&(d as u32).to_le_bytes());
                }
            }
        }
    }
    let mut payload = Vec::with_capacity(scene.parameter_count() * width.bytes());
    for (_, data) in arrays.iter().flatten() {
        for &v in data {
            match width {
                ScalarWidth::F32 => payload.extend_from_slice(&(v as f32).to_le_bytes()),
                ScalarWidth::F64 => payload.extend_from_slice(&v.to_le_bytes()),
            }
        }
    }
    out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    let crc = crc32fast::hash(&payload);
    out.extend_from_slice(&payload);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.data.len()).ok_or_else(|| malformed("truncated file"))?;
        let s = &self.data[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

/// Parses the header and returns it with the offset of the payload.
pub fn read_header(bytes: &[u8]) -> Result<(ContainerHeader, usize)> {
    let mut c = Cursor { data: bytes, pos: 0 };
    if c.take(4)? != MAGIC {
        return Err(malformed("not a T4DT scene file (bad magic)"));
    }
    let version = c.u16()?;
    if version != VERSION {
        return Err(malformed(format!("unsupported container version {version}")));
    }
    let format = SceneFormat::from_tag(c.u8()?)?;
    let scalar_width = ScalarWidth::from_bytes(c.u8()? as usize)?;
    let resolution = [c.u32()?, c.u32()?, c.u32()?];
    let true_frames = c.u32()?;
    let padded_dims = [c.u32()?, c.u32()?, c.u32()?, c.u32()?];
    let tau = c.f64()?;
    let bbox_min = [c.f64()?, c.f64()?, c.f64()?];
    let bbox_max = [c.f64()?, c.f64()?, c.f64()?];
    let layout_len = c.u32()? as usize;
    let layout = c.take(layout_len)?.to_vec();
    let count = c.u32()? as usize;
    let mut shapes = Vec::with_capacity(count.min(1 << 16));
    for _ in 0..count {
        let nd = c.u8()? as usize;
        let mut s = Vec::with_capacity(nd);
        for _ in 0..nd {
            s.push(c.u32()?);
        }
        shapes.push(s);
    }
    let payload_len = c.u64()?;
    let header = ContainerHeader {
        version,
        format,
        scalar_width,
        resolution,
        true_frames,
        padded_dims,
        tau,
        bbox_min,
        bbox_max,
        layout,
        shapes,
        payload_len,
    };
    Ok((header, c.pos))
}

/// Parses container bytes back into a scene, checking the CRC and every
/// structural constraint.
pub fn from_bytes(bytes: &[u8]) -> Result<CompressedScene> {
    let (h, start) = read_header(bytes)?;
    let width = h.scalar_width.bytes();
    let end = usize::try_from(h.payload_len)
        .ok()
        .and_then(|n| start.checked_add(n))
        .filter(|&e| e + 4 <= bytes.len())
        .ok_or_else(|| malformed("truncated payload"))?;
    if end + 4 != bytes.len() {
        return Err(malformed("trailing bytes after the checksum"));
    }
    let payload = &bytes[start..end];
    let crc = u32::from_le_bytes(bytes[end..end + 4].try_into().expect("4 bytes"));
    if crc32fast::hash(payload) != crc {
        return Err(malformed("payload checksum mismatch"));
    }
    let expected: usize = h
        .shapes
        .iter()
        .filter(|s| !s.is_empty())
        .map(|s| s.iter().map(|&d| d as usize).product::<usize>())
        .sum();
    if expected * width != payload.len() {
        return Err(malformed(format!(
            "payload holds {} bytes, shape table needs {}",
            payload.len(),
            expected * width
        )));
    }
    let mut values = payload.chunks_exact(width).map(|b| match width {
        4 => f32::from_le_bytes(b.try_into().expect("4 bytes")) as f64,
        _ => f64::from_le_bytes(b.try_into().expect("8 bytes")),
    });
    let mut arrays: Vec<Option<(Vec<usize>, Vec<f64>)>> = Vec::with_capacity(h.shapes.len());
    for s in &h.shapes {
        if s.is_empty() {
            arrays.push(None);
        } else {
            let shape: Vec<usize> = s.iter().map(|&d| d as usize).collect();
            let n = shape.iter().product();
            arrays.push(Some((shape, values.by_ref().take(n).collect())));
        }
    }

    let resolution = h.resolution.map(|r| r as usize);
    let padded = h.padded_dims.map(|d| d as usize);
    let true_frames = h.true_frames as usize;
    let layout = decode_layout(&h.layout, resolution, true_frames, padded)?;

    let core = |a: &Option<(Vec<usize>, Vec<f64>)>| -> Result<Core3> {
        match a {
            Some((s, d)) if s.len() == 3 => Core3::new(s[0], s[1], s[2], d.clone()),
            _ => Err(malformed("expected an order-3 core")),
        }
    };
    let matrix = |a: &Option<(Vec<usize>, Vec<f64>)>| -> Result<Option<_>> {
        match a {
            None => Ok(None),
            Some((s, d)) if s.len() == 2 => Ok(Some(from_row_major(s[0], s[1], d))),
            Some(_) => Err(malformed("expected a factor matrix")),
        }
    };
    let payload = match h.format {
        SceneFormat::Tt | SceneFormat::Qtt | SceneFormat::Oqtt => {
            let tt = TTTensor::new(arrays.iter().map(core).collect::<Result<_>>()?)?;
            if h.format == SceneFormat::Tt {
                ScenePayload::Tt(tt)
            } else {
                ScenePayload::Quantized(tt)
            }
        }
        SceneFormat::Tucker => {
            let Some(Some((cs, cd))) = arrays.first() else { return Err(malformed("missing Tucker core")) };
            let core = DenseVolume::new(cs.clone(), cd.clone())?;
            let factors = arrays[1..]
                .iter()
                .map(|a| matrix(a)?.ok_or_else(|| malformed("missing Tucker factor")))
                .collect::<Result<Vec<_>>>()?;
            ScenePayload::Tucker(TuckerTensor::new(core, factors)?)
        }
        SceneFormat::TtTucker => {
            let d = arrays.len() / 2;
            if arrays.len() != 2 * d {
                return Err(malformed("TT-Tucker needs one factor slot per core"));
            }
            let tt = TTTensor::new(arrays[..d].iter().map(core).collect::<Result<_>>()?)?;
            let factors = arrays[d..].iter().map(matrix).collect::<Result<Vec<_>>>()?;
            ScenePayload::TtTucker(TTTuckerTensor::new(tt, factors)?)
        }
    };
    let bounds = SceneBounds::new(h.bbox_min, h.bbox_max)?;
    CompressedScene::from_parts(h.format, payload, layout, true_frames, bounds, h.tau, resolution, h.scalar_width)
}

pub fn write_scene(scene: &CompressedScene, path: &Path) -> Result<u64> {
    let bytes = to_bytes(scene);
    let mut f = std::fs::File::create(path)?;
    f.write_all(&bytes)?;
    f.sync_all()?;
    Ok(bytes.len() as u64)
}

pub fn read_scene(path: &Path) -> Result<CompressedScene> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    from_bytes(&bytes)
}
