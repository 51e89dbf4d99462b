//! OBJ (read/write) and PLY (ascii and binary little-endian, read) meshes.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Result, T4dtError};

use super::mesh::TriangleMesh;

/// Loaded mesh plus the number of degenerate triangles dropped.
pub type Loaded = (TriangleMesh, usize);

pub fn read_mesh(path: &Path) -> Result<Loaded> {
    let ext = path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase());
    match ext.as_deref() {
        Some("obj") => parse_obj(&fs::read_to_string(path)?),
        Some("ply") => parse_ply(&fs::read(path)?),
        _ => Err(T4dtError::format(format!("{}: unsupported mesh extension", path.display()))),
    }
}

pub fn parse_obj(text: &str) -> Result<Loaded> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let c: Vec<f64> = it
                    .take(3)
                    .map(|s| s.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| T4dtError::format(format!("obj line {}: {e}", lineno + 1)))?;
                if c.len() != 3 {
                    return Err(T4dtError::format(format!("obj line {}: vertex needs 3 coordinates", lineno + 1)));
                }
                vertices.push([c[0], c[1], c[2]]);
            }
            Some("f") => {
                let idx: Vec<usize> = it
                    .map(|tok| {
                        let first = tok.split('/').next().unwrap_or("");
                        let i: i64 = first
                            .parse()
                            .map_err(|e| T4dtError::format(format!("obj line {}: {e}", lineno + 1)))?;
                        let n = vertices.len() as i64;
                        let resolved = if i < 0 { n + i } else { i - 1 };
                        if resolved < 0 {
                            return Err(T4dtError::format(format!("obj line {}: bad index {i}", lineno + 1)));
                        }
                        Ok(resolved as usize)
                    })
                    .collect::<Result<_>>()?;
                if idx.len() < 3 {
                    return Err(T4dtError::format(format!("obj line {}: face needs 3 vertices", lineno + 1)));
                }
                for k in 1..idx.len() - 1 {
                    triangles.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
    }
    TriangleMesh::new(vertices, triangles)
}

pub fn write_obj(m: &TriangleMesh, mut w: impl Write) -> Result<()> {
    for p in m.vertices() {
        writeln!(w, "v {} {} {}", p[0], p[1], p[2])?;
    }
    for t in m.triangles() {
        writeln!(w, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
    }
    Ok(())
}

pub fn save_obj(m: &TriangleMesh, path: &Path) -> Result<()> {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    write_obj(m, &mut f)?;
    f.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(s: &str) -> Result<Scalar> {
        Ok(match s {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            other => return Err(T4dtError::format(format!("ply: unknown scalar type '{other}'"))),
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }

    fn read_le(self, b: &[u8]) -> f64 {
        match self {
            Scalar::I8 => b[0] as i8 as f64,
            Scalar::U8 => b[0] as f64,
            Scalar::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::I32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::U32 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F64 => f64::from_le_bytes(b[..8].try_into().expect("8 bytes")),
        }
    }
}

#[derive(Debug, Clone)]
enum Property {
    Scalar(String, Scalar),
    List(String, Scalar, Scalar),
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    props: Vec<Property>,
}

/// Pulls scalars from either an ascii token stream or a little-endian blob.
enum Body<'a> {
    Ascii(std::str::SplitAsciiWhitespace<'a>),
    Binary(&'a [u8], usize),
}

impl Body<'_> {
    fn next(&mut self, ty: Scalar) -> Result<f64> {
        match self {
            Body::Ascii(it) => it
                .next()
                .ok_or_else(|| T4dtError::format("ply: unexpected end of data"))?
                .parse::<f64>()
                .map_err(|e| T4dtError::format(format!("ply: {e}"))),
            Body::Binary(data, pos) => {
                let n = ty.size();
                let slice = data.get(*pos..*pos + n).ok_or_else(|| T4dtError::format("ply: unexpected end of data"))?;
                *pos += n;
                Ok(ty.read_le(slice))
            }
        }
    }
}

pub fn parse_ply(bytes: &[u8]) -> Result<Loaded> {
    let marker = b"end_header";
    let end = bytes
        .windows(marker.len())
        .position(|w| w == marker)
        .ok_or_else(|| T4dtError::format("ply: missing end_header"))?;
    let header = std::str::from_utf8(&bytes[..end]).map_err(|_| T4dtError::format("ply: header is not utf-8"))?;
    let mut body_start = end + marker.len();
    if bytes.get(body_start) == Some(&b'\r') {
        body_start += 1;
    }
    if bytes.get(body_start) == Some(&b'\n') {
        body_start += 1;
    }
    let mut lines = header.lines();
    if lines.next().map(str::trim) != Some("ply") {
        return Err(T4dtError::format("ply: missing magic"));
    }
    let mut ascii = None;
    let mut elements: Vec<Element> = Vec::new();
    for line in lines {
        let tok: Vec<&str> = line.split_whitespace().collect();
        match tok.as_slice() {
            ["format", "ascii", _] => ascii = Some(true),
            ["format", "binary_little_endian", _] => ascii = Some(false),
            ["format", other, _] => return Err(T4dtError::format(format!("ply: unsupported format '{other}'"))),
            ["element", name, count] => elements.push(Element {
                name: name.to_string(),
                count: count.parse().map_err(|_| T4dtError::format("ply: bad element count"))?,
                props: Vec::new(),
            }),
            ["property", "list", ct, it, name] => elements
                .last_mut()
                .ok_or_else(|| T4dtError::format("ply: property before element"))?
                .props
                .push(Property::List(name.to_string(), Scalar::parse(ct)?, Scalar::parse(it)?)),
            ["property", ty, name] => elements
                .last_mut()
                .ok_or_else(|| T4dtError::format("ply: property before element"))?
                .props
                .push(Property::Scalar(name.to_string(), Scalar::parse(ty)?)),
            _ => {}
        }
    }
    let ascii = ascii.ok_or_else(|| T4dtError::format("ply: missing format line"))?;
    let data = &bytes[body_start..];
    let mut body = if ascii {
        Body::Ascii(std::str::from_utf8(data).map_err(|_| T4dtError::format("ply: body is not utf-8"))?.split_ascii_whitespace())
    } else {
        Body::Binary(data, 0)
    };

    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for el in &elements {
        for _ in 0..el.count {
            let mut p = [0.0; 3];
            for prop in &el.props {
                match prop {
                    Property::Scalar(name, ty) => {
                        let v = body.next(*ty)?;
                        if el.name == "vertex" {
                            match name.as_str() {
                                "x" => p[0] = v,
                                "y" => p[1] = v,
                                "z" => p[2] = v,
                                _ => {}
                            }
                        }
                    }
                    Property::List(name, ct, it) => {
                        let n = body.next(*ct)? as usize;
                        let mut idx = Vec::with_capacity(n);
                        for _ in 0..n {
                            idx.push(body.next(*it)?);
                        }
                        if el.name == "face" && (name == "vertex_indices" || name == "vertex_index") {
                            if n < 3 || idx.iter().any(|&i| i < 0.0) {
                                return Err(T4dtError::format("ply: bad face"));
                            }
                            let idx: Vec<usize> = idx.into_iter().map(|i| i as usize).collect();
                            for k in 1..n - 1 {
                                triangles.push([idx[0], idx[k], idx[k + 1]]);
                            }
                        }
                    }
                }
            }
            if el.name == "vertex" {
                vertices.push(p);
            }
        }
    }
    TriangleMesh::new(vertices, triangles)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn obj_round_trip() {
        let src = "# quad\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1/1 2/2 3/3 -1\n";
        let (m, dropped) = parse_obj(src).unwrap();
        assert_eq!((m.triangles().len(), dropped), (2, 0));
        let mut buf = Vec::new();
        write_obj(&m, &mut buf).unwrap();
        let (back, _) = parse_obj(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn ply_ascii_and_binary_agree() {
        let ascii = "ply\nformat ascii 1.0\nelement vertex 3\nproperty float x\nproperty float y\nproperty float z\n\
                     element face 1\nproperty list uchar int vertex_indices\nend_header\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n";
        let (a, _) = parse_ply(ascii.as_bytes()).unwrap();
        let mut bin = b"ply\nformat binary_little_endian 1.0\nelement vertex 3\nproperty double x\nproperty double y\n\
property double z\nproperty uchar red\nelement face 1\nproperty list uchar uint vertex_indices\nend_header\n"
            .to_vec();
        for p in [[0.0f64, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]] {
            for c in p {
                bin.extend_from_slice(&c.to_le_bytes());
            }
            bin.push(255);
        }
        bin.push(3);
        for i in [0u32, 1, 2] {
            bin.extend_from_slice(&i.to_le_bytes());
        }
        let (b, _) = parse_ply(&bin).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.triangles(), &[[0, 1, 2]]);
    }

    #[test]
    fn malformed_inputs() {
        assert!(parse_obj("v 0 0\n").is_err());
        assert!(parse_obj("v 0 0 0\nf 1 2 3\n").is_err());
        assert!(parse_ply(b"ply\nformat binary_big_endian 1.0\nend_header\n").is_err());
    }
}
