//! Minimal PLY support: ascii and binary little-endian point clouds and
//! polygon meshes.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::Point3;

use super::IngestError;
use crate::geometry::{CloudFrame, LabeledPointCloud};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Encoding {
    Ascii,
    BinaryLe,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum ScalarType {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl ScalarType {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "char" | "int8" => Self::I8,
            "uchar" | "uint8" => Self::U8,
            "short" | "int16" => Self::I16,
            "ushort" | "uint16" => Self::U16,
            "int" | "int32" => Self::I32,
            "uint" | "uint32" => Self::U32,
            "float" | "float32" => Self::F32,
            "double" | "float64" => Self::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Self::I8 | Self::U8 => 1,
            Self::I16 | Self::U16 => 2,
            Self::I32 | Self::U32 | Self::F32 => 4,
            Self::F64 => 8,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Self::I8 => "char",
            Self::U8 => "uchar",
            Self::I16 => "short",
            Self::U16 => "ushort",
            Self::I32 => "int",
            Self::U32 => "uint",
            Self::F32 => "float",
            Self::F64 => "double",
        }
    }
}

#[derive(Debug, Clone)]
enum PropertyKind {
    Scalar(ScalarType),
    List { count: ScalarType, item: ScalarType },
}

#[derive(Debug, Clone)]
struct Property {
    name: String,
    kind: PropertyKind,
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

#[derive(Debug)]
struct Header {
    encoding: Encoding,
    elements: Vec<Element>,
    comments: Vec<String>,
    body_offset: usize,
}

/// Values of one element row; every PLY scalar type is exactly representable in f64.
#[derive(Debug, Clone)]
enum Value {
    Scalar(f64),
    List(Vec<f64>),
}

fn malformed(path: &Path, message: impl Into<String>) -> IngestError {
    IngestError::MalformedPly { path: path.to_path_buf(), message: message.into() }
}

fn parse_header(path: &Path, bytes: &[u8]) -> Result<Header, IngestError> {
    const END: &[u8] = b"end_header";
    let end = bytes
        .windows(END.len())
        .position(|w| w == END)
        .ok_or_else(|| malformed(path, "missing end_header"))?;
    let mut body_offset = end + END.len();
    // header line terminator: "\n" or "\r\n"
    if bytes.get(body_offset) == Some(&b'\r') {
        body_offset += 1;
    }
    if bytes.get(body_offset) == Some(&b'\n') {
        body_offset += 1;
    }
    let text = std::str::from_utf8(&bytes[..end]).map_err(|_| malformed(path, "header is not utf-8"))?;
    let mut lines = text.lines().map(str::trim);
    if lines.next() != Some("ply") {
        return Err(malformed(path, "missing `ply` magic"));
    }
    let mut encoding = None;
    let mut elements: Vec<Element> = Vec::new();
    let mut comments = Vec::new();
    for line in lines {
        let mut tok = line.split_whitespace();
        match tok.next() {
            None => continue,
            Some("format") => {
                encoding = Some(match tok.next() {
                    Some("ascii") => Encoding::Ascii,
                    Some("binary_little_endian") => Encoding::BinaryLe,
                    Some(other) => return Err(malformed(path, format!("unsupported format `{other}`"))),
                    None => return Err(malformed(path, "format line without encoding")),
                });
            }
            Some("comment") | Some("obj_info") => comments.push(tok.collect::<Vec<_>>().join(" ")),
            Some("element") => {
                let name = tok.next().ok_or_else(|| malformed(path, "element without name"))?;
                let count = tok
                    .next()
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| malformed(path, format!("element `{name}` without count")))?;
                elements.push(Element { name: name.to_string(), count, properties: Vec::new() });
            }
            Some("property") => {
                let el = elements.last_mut().ok_or_else(|| malformed(path, "property before element"))?;
                let first = tok.next().ok_or_else(|| malformed(path, "empty property"))?;
                let kind = if first == "list" {
                    let c = tok.next().and_then(ScalarType::parse);
                    let i = tok.next().and_then(ScalarType::parse);
                    match (c, i) {
                        (Some(count), Some(item)) => PropertyKind::List { count, item },
                        _ => return Err(malformed(path, format!("bad list property `{line}`"))),
                    }
                } else {
                    PropertyKind::Scalar(
                        ScalarType::parse(first).ok_or_else(|| malformed(path, format!("unknown type `{first}`")))?,
                    )
                };
                let name = tok.next().ok_or_else(|| malformed(path, "property without name"))?;
                el.properties.push(Property { name: name.to_string(), kind });
            }
            Some(other) => return Err(malformed(path, format!("unexpected header keyword `{other}`"))),
        }
    }
    let encoding = encoding.ok_or_else(|| malformed(path, "missing format line"))?;
    Ok(Header { encoding, elements, comments, body_offset })
}

struct BinaryCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl BinaryCursor<'_> {
    fn read(&mut self, ty: ScalarType) -> Option<f64> {
        let n = ty.size();
        let b = self.bytes.get(self.pos..self.pos + n)?;
        self.pos += n;
        Some(match ty {
            ScalarType::I8 => f64::from(b[0] as i8),
            ScalarType::U8 => f64::from(b[0]),
            ScalarType::I16 => f64::from(i16::from_le_bytes([b[0], b[1]])),
            ScalarType::U16 => f64::from(u16::from_le_bytes([b[0], b[1]])),
            ScalarType::I32 => f64::from(i32::from_le_bytes(b.try_into().ok()?)),
            ScalarType::U32 => f64::from(u32::from_le_bytes(b.try_into().ok()?)),
            ScalarType::F32 => f64::from(f32::from_le_bytes(b.try_into().ok()?)),
            ScalarType::F64 => f64::from_le_bytes(b.try_into().ok()?),
        })
    }
}

fn parse_ascii_scalar(tok: &str, ty: ScalarType) -> Option<f64> {
    match ty {
        ScalarType::F32 => tok.parse::<f32>().ok().map(f64::from),
        ScalarType::F64 => tok.parse::<f64>().ok(),
        ScalarType::I8 => tok.parse::<i8>().ok().map(f64::from),
        ScalarType::U8 => tok.parse::<u8>().ok().map(f64::from),
        ScalarType::I16 => tok.parse::<i16>().ok().map(f64::from),
        ScalarType::U16 => tok.parse::<u16>().ok().map(f64::from),
        ScalarType::I32 => tok.parse::<i32>().ok().map(f64::from),
        ScalarType::U32 => tok.parse::<u32>().ok().map(f64::from),
    }
}

/// Parses every element of the file into rows of values.
fn read_elements(path: &Path, bytes: &[u8], header: &Header) -> Result<Vec<Vec<Vec<Value>>>, IngestError> {
    let body = &bytes[header.body_offset..];
    let mut out = Vec::with_capacity(header.elements.len());
    match header.encoding {
        Encoding::Ascii => {
            let text = std::str::from_utf8(body).map_err(|_| malformed(path, "ascii body is not utf-8"))?;
            let mut lines = text.lines().filter(|l| !l.trim().is_empty());
            for el in &header.elements {
                let mut rows = Vec::with_capacity(el.count);
                for r in 0..el.count {
                    let line = lines
                        .next()
                        .ok_or_else(|| malformed(path, format!("element `{}` truncated at row {r}", el.name)))?;
                    let mut tok = line.split_whitespace();
                    let mut next = |ty: ScalarType| {
                        tok.next()
                            .and_then(|t| parse_ascii_scalar(t, ty))
                            .ok_or_else(|| malformed(path, format!("bad value in `{}` row {r}", el.name)))
                    };
                    let mut row = Vec::with_capacity(el.properties.len());
                    for p in &el.properties {
                        row.push(match p.kind {
                            PropertyKind::Scalar(ty) => Value::Scalar(next(ty)?),
                            PropertyKind::List { count, item } => {
                                let n = next(count)? as usize;
                                Value::List((0..n).map(|_| next(item)).collect::<Result<_, _>>()?)
                            }
                        });
                    }
                    rows.push(row);
                }
                out.push(rows);
            }
        }
        Encoding::BinaryLe => {
            let mut cur = BinaryCursor { bytes: body, pos: 0 };
            for el in &header.elements {
                let mut rows = Vec::with_capacity(el.count);
                for r in 0..el.count {
                    let trunc = || malformed(path, format!("element `{}` truncated at row {r}", el.name));
                    let mut row = Vec::with_capacity(el.properties.len());
                    for p in &el.properties {
                        row.push(match p.kind {
                            PropertyKind::Scalar(ty) => Value::Scalar(cur.read(ty).ok_or_else(trunc)?),
                            PropertyKind::List { count, item } => {
                                let n = cur.read(count).ok_or_else(trunc)? as usize;
                                Value::List((0..n).map(|_| cur.read(item).ok_or_else(trunc)).collect::<Result<_, _>>()?)
                            }
                        });
                    }
                    rows.push(row);
                }
                out.push(rows);
            }
        }
    }
    Ok(out)
}

fn read_file(path: &Path) -> Result<Vec<u8>, IngestError> {
    if !path.exists() {
        return Err(IngestError::MissingFile { path: path.to_path_buf() });
    }
    fs::read(path).map_err(|source| IngestError::Io { path: path.to_path_buf(), source })
}

fn scalar_index(
    path: &Path,
    el: &Element,
    name: &str,
    allowed: &[ScalarType],
) -> Result<Option<usize>, IngestError> {
    let Some(i) = el.properties.iter().position(|p| p.name == name) else {
        return Ok(None);
    };
    match el.properties[i].kind {
        PropertyKind::Scalar(ty) if allowed.contains(&ty) => Ok(Some(i)),
        PropertyKind::Scalar(ty) => Err(IngestError::UnsupportedProperty {
            path: path.to_path_buf(),
            property: name.to_string(),
            ty: ty.name().to_string(),
        }),
        PropertyKind::List { .. } => Err(IngestError::UnsupportedProperty {
            path: path.to_path_buf(),
            property: name.to_string(),
            ty: "list".to_string(),
        }),
    }
}

fn scalar(row: &[Value], i: usize) -> f64 {
    match &row[i] {
        Value::Scalar(v) => *v,
        Value::List(_) => unreachable!("checked scalar"),
    }
}

/// Reads a point cloud from the `vertex` element: `x`, `y`, `z` as float32,
/// optional `label` (uint16) and `intensity` (float32). Other vertex
/// properties are skipped. The frame is taken from a `comment frame <id>`
/// header line and defaults to the LiDAR frame.
pub fn load_pointcloud(path: &Path) -> Result<LabeledPointCloud, IngestError> {
    let bytes = read_file(path)?;
    let header = parse_header(path, &bytes)?;
    let vi = header
        .elements
        .iter()
        .position(|e| e.name == "vertex")
        .ok_or_else(|| malformed(path, "no vertex element"))?;
    let el = &header.elements[vi];
    let require = |name: &str| -> Result<usize, IngestError> {
        scalar_index(path, el, name, &[ScalarType::F32])?
            .ok_or_else(|| malformed(path, format!("missing vertex property `{name}`")))
    };
    let (ix, iy, iz) = (require("x")?, require("y")?, require("z")?);
    let il = scalar_index(path, el, "label", &[ScalarType::U16])?;
    let ii = scalar_index(path, el, "intensity", &[ScalarType::F32])?;
    let frame = header
        .comments
        .iter()
        .find_map(|c| c.strip_prefix("frame ").and_then(|f| CloudFrame::parse(f.trim())))
        .unwrap_or(CloudFrame::Lidar);

    let elements = read_elements(path, &bytes, &header)?;
    let rows = &elements[vi];
    let points = rows.iter().map(|r| Point3::new(scalar(r, ix), scalar(r, iy), scalar(r, iz))).collect();
    let labels = match il {
        Some(i) => rows.iter().map(|r| scalar(r, i) as u16).collect(),
        None => vec![0; rows.len()],
    };
    let intensity = ii.map(|i| rows.iter().map(|r| scalar(r, i) as f32).collect());
    LabeledPointCloud::new(points, labels, intensity, frame).map_err(|e| malformed(path, e.to_string()))
}

/// Writes a binary little-endian PLY. Coordinates are stored as float32.
pub fn save_pointcloud(cloud: &LabeledPointCloud, path: &Path) -> Result<(), IngestError> {
    let mut buf = Vec::with_capacity(64 + cloud.len() * 18);
    let mut header = format!(
        "ply\nformat binary_little_endian 1.0\ncomment frame {}\nelement vertex {}\nproperty float x\nproperty float y\nproperty float z\nproperty ushort label\n",
        cloud.frame().as_str(),
        cloud.len()
    );
    if cloud.intensity().is_some() {
        header.push_str("property float intensity\n");
    }
    header.push_str("end_header\n");
    buf.extend_from_slice(header.as_bytes());
    for (i, p) in cloud.points().iter().enumerate() {
        for c in [p.x, p.y, p.z] {
            buf.extend_from_slice(&(c as f32).to_le_bytes());
        }
        buf.extend_from_slice(&cloud.labels()[i].to_le_bytes());
        if let Some(int) = cloud.intensity() {
            buf.extend_from_slice(&int[i].to_le_bytes());
        }
    }
    write_atomic(path, &buf)
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), IngestError> {
    let io = |source| IngestError::Io { path: path.to_path_buf(), source };
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io)?;
    }
    let mut f = fs::File::create(path).map_err(io)?;
    f.write_all(bytes).map_err(io)
}

/// Vertices and (fan-triangulated) faces of a PLY polygon mesh.
pub(crate) fn load_ply_mesh(path: &Path) -> Result<(Vec<Point3<f64>>, Vec<[u32; 3]>), IngestError> {
    let bytes = read_file(path)?;
    let header = parse_header(path, &bytes)?;
    let vi = header
        .elements
        .iter()
        .position(|e| e.name == "vertex")
        .ok_or_else(|| malformed(path, "no vertex element"))?;
    let fi = header
        .elements
        .iter()
        .position(|e| e.name == "face")
        .ok_or_else(|| malformed(path, "no face element"))?;
    let vel = &header.elements[vi];
    let coord = |n: &str| -> Result<usize, IngestError> {
        scalar_index(path, vel, n, &[ScalarType::F32, ScalarType::F64])?
            .ok_or_else(|| malformed(path, format!("missing vertex property `{n}`")))
    };
    let (ix, iy, iz) = (coord("x")?, coord("y")?, coord("z")?);
    let fel = &header.elements[fi];
    let list = fel
        .properties
        .iter()
        .position(|p| {
            matches!(p.kind, PropertyKind::List { .. }) && (p.name == "vertex_indices" || p.name == "vertex_index")
        })
        .ok_or_else(|| malformed(path, "face element has no vertex_indices list"))?;
    let elements = read_elements(path, &bytes, &header)?;
    let vertices: Vec<_> =
        elements[vi].iter().map(|r| Point3::new(scalar(r, ix), scalar(r, iy), scalar(r, iz))).collect();
    let mut triangles = Vec::new();
    for (r, row) in elements[fi].iter().enumerate() {
        let Value::List(idx) = &row[list] else { unreachable!() };
        if idx.len() < 3 {
            return Err(malformed(path, format!("face {r} has {} vertices", idx.len())));
        }
        for k in 1..idx.len() - 1 {
            triangles.push([idx[0] as u32, idx[k] as u32, idx[k + 1] as u32]);
        }
    }
    Ok((vertices, triangles))
}
