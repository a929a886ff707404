use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point3, PointCloud};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlyFormat {
    Ascii,
    BinaryLittleEndian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
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
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return None,
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

    fn decode(self, b: &[u8]) -> f64 {
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
    Scalar { name: String, ty: Scalar },
    List { count: Scalar, item: Scalar },
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

struct Header {
    format: PlyFormat,
    elements: Vec<Element>,
    body_start: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    let mut pos = 0usize;
    let next_line = |pos: &mut usize| -> Result<(usize, String)> {
        let start = *pos;
        let rel = bytes[start..]
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::parse(start as u64, "header ends before end_header"))?;
        *pos = start + rel + 1;
        let line = std::str::from_utf8(&bytes[start..start + rel])
            .map_err(|_| Error::parse(start as u64, "header is not valid UTF-8"))?;
        Ok((start, line.trim_end_matches('\r').trim().to_string()))
    };
    let (_, magic) = next_line(&mut pos)?;
    if magic != "ply" {
        return Err(Error::parse(0, "missing 'ply' magic"));
    }
    let mut format = None;
    let mut elements: Vec<Element> = Vec::new();
    loop {
        let (at, line) = next_line(&mut pos)?;
        let at = at as u64;
        let words: Vec<&str> = line.split_whitespace().collect();
        match words.as_slice() {
            [] => {}
            ["comment", ..] | ["obj_info", ..] => {}
            ["format", fmt, _version] => {
                format = Some(match *fmt {
                    "ascii" => PlyFormat::Ascii,
                    "binary_little_endian" => PlyFormat::BinaryLittleEndian,
                    "binary_big_endian" => return Err(Error::parse(at, "big-endian PLY is not supported")),
                    other => return Err(Error::parse(at, format!("unknown PLY format '{other}'"))),
                });
            }
            ["element", name, count] => {
                let count = count
                    .parse()
                    .map_err(|_| Error::parse(at, format!("bad element count '{count}'")))?;
                elements.push(Element {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                });
            }
            ["property", "list", count, item, _name] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| Error::parse(at, "property before any element"))?;
                let count = Scalar::parse(count).ok_or_else(|| Error::parse(at, format!("unknown type '{count}'")))?;
                let item = Scalar::parse(item).ok_or_else(|| Error::parse(at, format!("unknown type '{item}'")))?;
                el.properties.push(Property::List { count, item });
            }
            ["property", ty, name] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| Error::parse(at, "property before any element"))?;
                let ty = Scalar::parse(ty).ok_or_else(|| Error::parse(at, format!("unknown type '{ty}'")))?;
                el.properties.push(Property::Scalar {
                    name: name.to_string(),
                    ty,
                });
            }
            ["end_header"] => break,
            _ => return Err(Error::parse(at, format!("unrecognized header line '{line}'"))),
        }
    }
    let format = format.ok_or_else(|| Error::parse(0, "header has no format line"))?;
    Ok(Header {
        format,
        elements,
        body_start: pos,
    })
}

/// Column lookup for the vertex channels the reader keeps.
struct VertexLayout {
    xyz: [usize; 3],
    normals: Option<[usize; 3]>,
    colors: Option<([usize; 3], bool)>,
}

impl VertexLayout {
    fn new(el: &Element) -> Result<Self> {
        let find = |name: &str| {
            el.properties.iter().position(|p| matches!(p, Property::Scalar { name: n, .. } if n == name))
        };
        let triple = |names: [&str; 3]| -> Option<[usize; 3]> { Some([find(names[0])?, find(names[1])?, find(names[2])?]) };
        let xyz = triple(["x", "y", "z"]).ok_or_else(|| Error::parse(0, "vertex element lacks x, y or z"))?;
        let colors = triple(["red", "green", "blue"]).map(|c| {
            let byte = matches!(el.properties[c[0]], Property::Scalar { ty: Scalar::U8, .. });
            (c, byte)
        });
        Ok(Self {
            xyz,
            normals: triple(["nx", "ny", "nz"]),
            colors,
        })
    }

    fn attribute_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        if self.normals.is_some() {
            names.extend(["nx", "ny", "nz"].map(String::from));
        }
        if self.colors.is_some() {
            names.extend(["red", "green", "blue"].map(String::from));
        }
        names
    }

    fn push(&self, values: &[f64], positions: &mut Vec<Point3>, attrs: &mut Vec<f64>) {
        positions.push(self.xyz.map(|c| values[c]));
        if let Some(n) = self.normals {
            attrs.extend(n.map(|c| values[c]));
        }
        if let Some((c, byte)) = self.colors {
            let scale = if byte { 1.0 / 255.0 } else { 1.0 };
            attrs.extend(c.map(|c| values[c] * scale));
        }
    }
}

fn shortfall(expected: usize, found: usize, offset: usize) -> Error {
    Error::parse(offset as u64, format!("expected {expected} vertices, found {found}"))
}

/// Parses an in-memory PLY document. Only the `vertex` element is kept;
/// `x,y,z` are required, `nx,ny,nz` and `red,green,blue` are loaded as
/// attributes when present (byte colors scaled to `[0, 1]`).
pub fn parse_ply(bytes: &[u8]) -> Result<PointCloud> {
    let header = parse_header(bytes)?;
    let vertex_pos = header
        .elements
        .iter()
        .position(|e| e.name == "vertex")
        .ok_or_else(|| Error::parse(0, "no vertex element"))?;
    let vertex = &header.elements[vertex_pos];
    let layout = VertexLayout::new(vertex)?;
    let h = vertex.count;
    let mut positions = Vec::with_capacity(h.min(1 << 24));
    let mut attrs = Vec::new();
    let mut values = vec![0.0; vertex.properties.len()];
    let mut pos = header.body_start;
    match header.format {
        PlyFormat::Ascii => {
            let mut lines_needed_before: usize = header.elements[..vertex_pos].iter().map(|e| e.count).sum();
            let mut found = 0;
            while found < h {
                if pos >= bytes.len() {
                    if lines_needed_before > 0 {
                        return Err(Error::parse(pos as u64, "body ends inside an element preceding the vertices"));
                    }
                    return Err(shortfall(h, found, pos));
                }
                let start = pos;
                let end = bytes[start..].iter().position(|&b| b == b'\n').map_or(bytes.len(), |r| start + r);
                pos = end + 1;
                let line = std::str::from_utf8(&bytes[start..end])
                    .map_err(|_| Error::parse(start as u64, "body line is not valid UTF-8"))?
                    .trim();
                if line.is_empty() {
                    continue;
                }
                if lines_needed_before > 0 {
                    lines_needed_before -= 1;
                    continue;
                }
                let mut tokens = line.split_whitespace();
                for (slot, prop) in values.iter_mut().zip(&vertex.properties) {
                    let tok = |t: Option<&str>| -> Result<f64> {
                        let t = t.ok_or_else(|| Error::parse(start as u64, format!("vertex {found} has too few values")))?;
                        t.parse::<f64>()
                            .map_err(|_| Error::parse(start as u64, format!("vertex {found}: bad number '{t}'")))
                    };
                    match prop {
                        Property::Scalar { .. } => *slot = tok(tokens.next())?,
                        Property::List { .. } => {
                            let n = tok(tokens.next())? as usize;
                            for _ in 0..n {
                                tok(tokens.next())?;
                            }
                        }
                    }
                }
                layout.push(&values, &mut positions, &mut attrs);
                found += 1;
            }
        }
        PlyFormat::BinaryLittleEndian => {
            let take = |pos: &mut usize, n: usize| -> Option<&[u8]> {
                let s = bytes.get(*pos..*pos + n)?;
                *pos += n;
                Some(s)
            };
            for el in header.elements[..vertex_pos].iter().filter(|e| !e.properties.is_empty()) {
                for _ in 0..el.count {
                    for prop in &el.properties {
                        let skipped = match prop {
                            Property::Scalar { ty, .. } => take(&mut pos, ty.size()).is_some(),
                            Property::List { count, item } => match take(&mut pos, count.size()) {
                                Some(b) => {
                                    let n = count.decode(b) as usize;
                                    take(&mut pos, n * item.size()).is_some()
                                }
                                None => false,
                            },
                        };
                        if !skipped {
                            return Err(Error::parse(pos as u64, format!("body ends inside element '{}'", el.name)));
                        }
                    }
                }
            }
            for found in 0..h {
                let start = pos;
                for (slot, prop) in values.iter_mut().zip(&vertex.properties) {
                    let ok = match prop {
                        Property::Scalar { ty, .. } => take(&mut pos, ty.size()).map(|b| *slot = ty.decode(b)).is_some(),
                        Property::List { count, item } => match take(&mut pos, count.size()) {
                            Some(b) => {
                                let n = count.decode(b) as usize;
                                take(&mut pos, n * item.size()).is_some()
                            }
                            None => false,
                        },
                    };
                    if !ok {
                        return Err(shortfall(h, found, start));
                    }
                }
                layout.push(&values, &mut positions, &mut attrs);
            }
        }
    }
    if positions.is_empty() {
        return Err(Error::parse(header.body_start as u64, "PLY has no vertices"));
    }
    if let Some(i) = positions.iter().position(|p| p.iter().any(|c| !c.is_finite())) {
        return Err(Error::parse(header.body_start as u64, format!("vertex {i} has a non-finite coordinate")));
    }
    PointCloud::new(positions)?.with_attributes(layout.attribute_names(), attrs)
}

pub fn read_ply(path: impl AsRef<Path>) -> Result<PointCloud> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_ply(&bytes)
}

fn is_color(name: &str) -> bool {
    matches!(name, "red" | "green" | "blue")
}

/// Encodes a cloud as PLY with `float` coordinates. Color attributes named
/// `red/green/blue` are written as bytes, every other attribute as `float`.
pub fn encode_ply(cloud: &PointCloud, format: PlyFormat) -> Vec<u8> {
    let names: Vec<&str> = cloud
        .attributes()
        .map(|a| a.names.iter().map(String::as_str).collect())
        .unwrap_or_default();
    let mut out = String::from("ply\n");
    out.push_str(match format {
        PlyFormat::Ascii => "format ascii 1.0\n",
        PlyFormat::BinaryLittleEndian => "format binary_little_endian 1.0\n",
    });
    out.push_str(&format!("element vertex {}\n", cloud.len()));
    for axis in ["x", "y", "z"] {
        out.push_str(&format!("property float {axis}\n"));
    }
    for name in &names {
        let ty = if is_color(name) { "uchar" } else { "float" };
        out.push_str(&format!("property {ty} {name}\n"));
    }
    out.push_str("end_header\n");
    let mut bytes = out.into_bytes();
    let color_byte = |v: f64| (v * 255.0).round().clamp(0.0, 255.0) as u8;
    for i in 0..cloud.len() {
        let p = cloud.position(i);
        let attr = cloud.attribute_row(i);
        match format {
            PlyFormat::Ascii => {
                let mut fields: Vec<String> = p.iter().map(|&c| format!("{:?}", c as f32)).collect();
                for (name, &v) in names.iter().zip(attr) {
                    fields.push(if is_color(name) {
                        color_byte(v).to_string()
                    } else {
                        format!("{:?}", v as f32)
                    });
                }
                bytes.extend_from_slice(fields.join(" ").as_bytes());
                bytes.push(b'\n');
            }
            PlyFormat::BinaryLittleEndian => {
                for &c in p {
                    bytes.extend_from_slice(&(c as f32).to_le_bytes());
                }
                for (name, &v) in names.iter().zip(attr) {
                    if is_color(name) {
                        bytes.push(color_byte(v));
                    } else {
                        bytes.extend_from_slice(&(v as f32).to_le_bytes());
                    }
                }
            }
        }
    }
    bytes
}

pub fn write_ply(path: impl AsRef<Path>, cloud: &PointCloud, format: PlyFormat) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_ply(cloud, format)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const ASCII: &str = "ply\nformat ascii 1.0\ncomment made by hand\nelement vertex 3\nproperty float x\nproperty float y\nproperty float z\nproperty uchar red\nproperty uchar green\nproperty uchar blue\nproperty float intensity\nelement face 1\nproperty list uchar int vertex_indices\nend_header\n0 0 0 255 0 0 7\n1.5 -2 3.25 0 255 51 8\n4 5 6 0 0 255 9\n3 0 1 2\n";

    #[test]
    fn ascii_fixture() {
        let c = parse_ply(ASCII.as_bytes()).unwrap();
        assert_eq!(c.positions(), &[[0.0, 0.0, 0.0], [1.5, -2.0, 3.25], [4.0, 5.0, 6.0]]);
        assert_eq!(c.attributes().unwrap().names, ["red", "green", "blue"]);
        assert_eq!(c.attribute_row(1), &[0.0, 1.0, 0.2]);
    }

    #[test]
    fn binary_round_trip_is_bit_exact_in_f32() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pts: Vec<Point3> = (0..1000).map(|_| [rng.gen_range(-50.0..50.0), rng.gen(), rng.gen_range(-1e3..1e3)]).collect();
        let normals: Vec<f64> = (0..3000).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let cloud = PointCloud::new(pts.clone())
            .unwrap()
            .with_attributes(["nx", "ny", "nz"].map(String::from).to_vec(), normals.clone())
            .unwrap();
        for format in [PlyFormat::BinaryLittleEndian, PlyFormat::Ascii] {
            let back = parse_ply(&encode_ply(&cloud, format)).unwrap();
            for (a, b) in pts.iter().zip(back.positions()) {
                for k in 0..3 {
                    assert_eq!((a[k] as f32).to_bits(), (b[k] as f32).to_bits());
                    if format == PlyFormat::BinaryLittleEndian {
                        assert_eq!(b[k], a[k] as f32 as f64);
                    }
                }
            }
            let attr = &back.attributes().unwrap().data;
            assert!(attr.iter().zip(&normals).all(|(a, b)| *a as f32 == *b as f32));
        }
    }

    #[test]
    fn truncation_names_the_shortfall() {
        let mut text = String::from("ply\nformat ascii 1.0\nelement vertex 10\nproperty float x\nproperty float y\nproperty float z\nend_header\n");
        for i in 0..9 {
            text.push_str(&format!("{i} 0 0\n"));
        }
        let err = parse_ply(text.as_bytes()).unwrap_err().to_string();
        assert!(err.contains("expected 10 vertices, found 9"), "{err}");

        let cloud = PointCloud::new(vec![[1.0, 2.0, 3.0]; 10]).unwrap();
        let mut bin = encode_ply(&cloud, PlyFormat::BinaryLittleEndian);
        bin.truncate(bin.len() - 12);
        let err = parse_ply(&bin).unwrap_err().to_string();
        assert!(err.contains("expected 10 vertices, found 9"), "{err}");
    }

    #[test]
    fn malformed_headers() {
        let cases = [
            "plx\n",
            "ply\nformat binary_big_endian 1.0\nelement vertex 1\nproperty float x\nend_header\n",
            "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\nend_header\n1 2\n",
            "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\n",
            "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\nproperty float z\nend_header\n1 2 nope\n",
        ];
        for c in cases {
            assert!(matches!(parse_ply(c.as_bytes()), Err(Error::Parse { .. })), "{c}");
        }
    }

    #[test]
    fn binary_skips_leading_elements() {
        let mut bytes = b"ply\nformat binary_little_endian 1.0\nelement material 2\nproperty list uchar float k\nelement vertex 1\nproperty double x\nproperty double y\nproperty double z\nproperty short extra\nend_header\n".to_vec();
        for n in [2u8, 1] {
            bytes.push(n);
            for _ in 0..n {
                bytes.extend_from_slice(&1.0f32.to_le_bytes());
            }
        }
        for v in [0.1f64, 0.2, 0.3] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        bytes.extend_from_slice(&7i16.to_le_bytes());
        let c = parse_ply(&bytes).unwrap();
        assert_eq!(c.positions(), &[[0.1, 0.2, 0.3]]);
        assert!(c.attributes().is_none());
    }

    #[test]
    fn fuzzed_inputs_error_without_panicking() {
        let cloud = PointCloud::new(vec![[1.0, 2.0, 3.0]; 4]).unwrap();
        let good = encode_ply(&cloud, PlyFormat::BinaryLittleEndian);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..2000 {
            let mut b = good.clone();
            let cut = rng.gen_range(0..=b.len());
            b.truncate(cut);
            if !b.is_empty() {
                let i = rng.gen_range(0..b.len());
                b[i] = rng.gen();
            }
            let _ = parse_ply(&b);
        }
    }
}
