//! NPY arrays (`<f4` / `<f8`, C order), format versions 1.0 to 3.0 on read, 1.0 on write.

use std::io::Write;
use std::path::Path;

use t4dt_core::tensor::DenseVolume;
use t4dt_core::{Result, T4dtError};

const MAGIC: &[u8] = b"\x93NUMPY";

fn malformed(msg: impl Into<String>) -> T4dtError {
    T4dtError::Format(format!("npy: {}", msg.into()))
}

/// Value of `'key': value` in the header dict, up to the next top-level comma.
fn dict_value<'a>(header: &'a str, key: &str) -> Result<&'a str> {
    let pat = format!("'{key}':");
    let start = header.find(&pat).ok_or_else(|| malformed(format!("header lacks '{key}'")))? + pat.len();
    let rest = header[start..].trim_start();
    let end = if rest.starts_with('(') {
        rest.find(')').map(|i| i + 1)
    } else {
        rest.find([',', '}'])
    }
    .ok_or_else(|| malformed("unterminated header value"))?;
    Ok(rest[..end].trim())
}

pub fn parse(bytes: &[u8]) -> Result<DenseVolume> {
    if bytes.len() < 10 || &bytes[..6] != MAGIC {
        return Err(malformed("bad magic"));
    }
    let (hlen, hstart) = match bytes[6] {
        1 => (u16::from_le_bytes([bytes[8], bytes[9]]) as usize, 10),
        2 | 3 => {
            let b = bytes.get(8..12).ok_or_else(|| malformed("truncated header"))?;
            (u32::from_le_bytes(b.try_into().expect("4 bytes")) as usize, 12)
        }
        v => return Err(malformed(format!("unsupported version {v}"))),
    };
    let header = bytes.get(hstart..hstart + hlen).ok_or_else(|| malformed("truncated header"))?;
    let header = std::str::from_utf8(header).map_err(|_| malformed("header is not text"))?;
    let descr = dict_value(header, "descr")?.trim_matches(['\'', '"']);
    let width = match descr {
        "<f4" => 4,
        "<f8" => 8,
        other => return Err(malformed(format!("unsupported dtype {other}; use little-endian float32/float64"))),
    };
    if dict_value(header, "fortran_order")? != "False" {
        return Err(malformed("fortran_order arrays are not supported"));
    }
    let shape_txt = dict_value(header, "shape")?;
    let shape: Vec<usize> = shape_txt
        .trim_matches(['(', ')'])
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<usize>().map_err(|_| malformed(format!("bad shape {shape_txt}"))))
        .collect::<Result<_>>()?;
    if shape.is_empty() {
        return Err(malformed("zero-dimensional arrays are not volumes"));
    }
    let data = &bytes[hstart + hlen..];
    let n: usize = shape.iter().product();
    if data.len() != n * width {
        return Err(malformed(format!("data holds {} bytes, shape {shape:?} needs {}", data.len(), n * width)));
    }
    let values = data
        .chunks_exact(width)
        .map(|b| match width {
            4 => f32::from_le_bytes(b.try_into().expect("4 bytes")) as f64,
            _ => f64::from_le_bytes(b.try_into().expect("8 bytes")),
        })
        .collect();
    DenseVolume::new(shape, values)
}

pub fn read(path: &Path) -> Result<DenseVolume> {
    parse(&std::fs::read(path)?)
}

/// Encodes as `<f8`, or `<f4` when `f32` is set.
pub fn encode(v: &DenseVolume, f32: bool) -> Vec<u8> {
    let shape = match v.shape() {
        [n] => format!("({n},)"),
        s => format!("({})", s.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(", ")),
    };
    let descr = if f32 { "<f4" } else { "<f8" };
    let mut header = format!("{{'descr': '{descr}', 'fortran_order': False, 'shape': {shape}, }}");
    let total = 10 + header.len() + 1;
    header.push_str(&" ".repeat((64 - total % 64) % 64));
    header.push('\n');
    let mut out = Vec::with_capacity(10 + header.len() + v.len() * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&[1, 0]);
    out.extend_from_slice(&(header.len() as u16).to_le_bytes());
    out.extend_from_slice(header.as_bytes());
    for &x in v.data() {
        if f32 {
            out.extend_from_slice(&(x as f32).to_le_bytes());
        } else {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

pub fn write(v: &DenseVolume, path: &Path, f32: bool) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(&encode(v, f32))?;
    Ok(())
}
