use std::fs;
use std::path::Path;

use super::to_u8;
use crate::error::{Error, Result};
use crate::linalg::Vec3;
use crate::mesh::TriangleMesh;
use crate::numeric::Real;

/// Binary little-endian PLY: `x y z` in the mesh scalar type, `uchar`
/// colour, `list uchar uint` faces. Output is a pure function of the mesh.
pub fn ply_bytes<T: Real>(mesh: &TriangleMesh<T>) -> Result<Vec<u8>> {
    mesh.validate()?;
    let header = format!(
        "ply\nformat binary_little_endian 1.0\nelement vertex {}\n\
         property {t} x\nproperty {t} y\nproperty {t} z\n\
         property uchar red\nproperty uchar green\nproperty uchar blue\n\
         element face {}\nproperty list uchar uint vertex_indices\nend_header\n",
        mesh.num_vertices(),
        mesh.num_faces(),
        t = T::PLY_TYPE
    );
    let mut out = header.into_bytes();
    out.reserve(mesh.num_vertices() * (3 * T::PLY_BYTES + 3) + mesh.num_faces() * 13);
    for (v, c) in mesh.vertices.iter().zip(&mesh.colors) {
        v.x.write_le(&mut out);
        v.y.write_le(&mut out);
        v.z.write_le(&mut out);
        out.extend(c.iter().map(|&x| to_u8(x)));
    }
    for f in &mesh.faces {
        out.push(3);
        for i in f {
            out.extend_from_slice(&i.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn export_mesh<T: Real>(mesh: &TriangleMesh<T>, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, ply_bytes(mesh)?)?;
    Ok(())
}

#[derive(Clone, Copy, PartialEq)]
enum Scalar {
    U8,
    I8,
    U16,
    I16,
    U32,
    I32,
    F32,
    F64,
}

impl Scalar {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "uchar" | "uint8" => Self::U8,
            "char" | "int8" => Self::I8,
            "ushort" | "uint16" => Self::U16,
            "short" | "int16" => Self::I16,
            "uint" | "uint32" => Self::U32,
            "int" | "int32" => Self::I32,
            "float" | "float32" => Self::F32,
            "double" | "float64" => Self::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Self::U8 | Self::I8 => 1,
            Self::U16 | Self::I16 => 2,
            Self::U32 | Self::I32 | Self::F32 => 4,
            Self::F64 => 8,
        }
    }

    fn read(self, b: &[u8]) -> f64 {
        match self {
            Self::U8 => b[0] as f64,
            Self::I8 => b[0] as i8 as f64,
            Self::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Self::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Self::U32 => u32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Self::I32 => i32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Self::F32 => f32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Self::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }
}

enum Property {
    Scalar(String, Scalar),
    List(String, Scalar, Scalar),
}

struct Element {
    name: String,
    count: usize,
    props: Vec<Property>,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Mesh(format!("PLY: {}", msg.into()))
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.data.len()).ok_or_else(|| bad("truncated body"))?;
        let s = &self.data[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn scalar(&mut self, s: Scalar) -> Result<f64> {
        Ok(s.read(self.take(s.size())?))
    }
}

/// Parses a binary little-endian PLY with `x y z`, optional `red green
/// blue` and a triangle face list. Other properties are skipped.
pub fn parse_ply<T: Real>(data: &[u8]) -> Result<TriangleMesh<T>> {
    let end = data
        .windows(11)
        .position(|w| w == b"end_header\n")
        .ok_or_else(|| bad("missing end_header"))?;
    let header = std::str::from_utf8(&data[..end]).map_err(|_| bad("header is not UTF-8"))?;
    let mut lines = header.lines();
    if lines.next().map(str::trim) != Some("ply") {
        return Err(bad("missing magic"));
    }
    let mut elements: Vec<Element> = Vec::new();
    let mut format_ok = false;
    for line in lines {
        let tok: Vec<&str> = line.split_whitespace().collect();
        match tok.as_slice() {
            ["format", "binary_little_endian", "1.0"] => format_ok = true,
            ["format", other, ..] => return Err(bad(format!("unsupported format {other}"))),
            ["comment", ..] | ["obj_info", ..] | [] => {}
            ["element", name, count] => elements.push(Element {
                name: name.to_string(),
                count: count.parse().map_err(|_| bad(format!("bad element count {count}")))?,
                props: Vec::new(),
            }),
            ["property", "list", c, i, name] => {
                let (c, i) = (Scalar::parse(c), Scalar::parse(i));
                let el = elements.last_mut().ok_or_else(|| bad("property before element"))?;
                match (c, i) {
                    (Some(c), Some(i)) => el.props.push(Property::List(name.to_string(), c, i)),
                    _ => return Err(bad("bad list property type")),
                }
            }
            ["property", ty, name] => {
                let ty = Scalar::parse(ty).ok_or_else(|| bad(format!("bad property type {ty}")))?;
                let el = elements.last_mut().ok_or_else(|| bad("property before element"))?;
                el.props.push(Property::Scalar(name.to_string(), ty));
            }
            _ => return Err(bad(format!("unrecognised header line `{line}`"))),
        }
    }
    if !format_ok {
        return Err(bad("missing format line"));
    }
    let mut r = Reader { data, pos: end + 11 };
    let mut mesh = TriangleMesh::new();
    for el in &elements {
        match el.name.as_str() {
            "vertex" => {
                mesh.vertices.reserve(el.count);
                mesh.colors.reserve(el.count);
                for _ in 0..el.count {
                    let (mut p, mut c) = ([0.0f64; 3], [0.0f64; 3]);
                    for prop in &el.props {
                        match prop {
                            Property::Scalar(name, ty) => {
                                let v = r.scalar(*ty)?;
                                match name.as_str() {
                                    "x" => p[0] = v,
                                    "y" => p[1] = v,
                                    "z" => p[2] = v,
                                    "red" => c[0] = v / 255.0,
                                    "green" => c[1] = v / 255.0,
                                    "blue" => c[2] = v / 255.0,
                                    _ => {}
                                }
                            }
                            Property::List(_, cnt, item) => {
                                let n = r.scalar(*cnt)? as usize;
                                r.take(n * item.size())?;
                            }
                        }
                    }
                    mesh.vertices.push(Vec3::new(T::lit(p[0]), T::lit(p[1]), T::lit(p[2])));
                    mesh.colors.push([T::lit(c[0]), T::lit(c[1]), T::lit(c[2])]);
                }
            }
            "face" => {
                mesh.faces.reserve(el.count);
                for _ in 0..el.count {
                    for prop in &el.props {
                        match prop {
                            Property::List(name, cnt, item) => {
                                let n = r.scalar(*cnt)? as usize;
                                if name == "vertex_indices" || name == "vertex_index" {
                                    if n != 3 {
                                        return Err(bad(format!("face with {n} vertices")));
                                    }
                                    let mut f = [0u32; 3];
                                    for slot in &mut f {
                                        let v = r.scalar(*item)?;
                                        if v < 0.0 || v > u32::MAX as f64 {
                                            return Err(bad("negative face index"));
                                        }
                                        *slot = v as u32;
                                    }
                                    mesh.faces.push(f);
                                } else {
                                    r.take(n * item.size())?;
                                }
                            }
                            Property::Scalar(_, ty) => {
                                r.take(ty.size())?;
                            }
                        }
                    }
                }
            }
            _ => {
                for _ in 0..el.count {
                    for prop in &el.props {
                        match prop {
                            Property::Scalar(_, ty) => {
                                r.take(ty.size())?;
                            }
                            Property::List(_, cnt, item) => {
                                let n = r.scalar(*cnt)? as usize;
                                r.take(n * item.size())?;
                            }
                        }
                    }
                }
            }
        }
    }
    mesh.validate().map_err(|e| bad(e.to_string()))?;
    Ok(mesh)
}

pub fn import_mesh<T: Real>(path: impl AsRef<Path>) -> Result<TriangleMesh<T>> {
    let path = path.as_ref();
    let data = fs::read(path).map_err(|e| Error::Mesh(format!("{}: {e}", path.display())))?;
    parse_ply(&data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tri() -> TriangleMesh<f64> {
        TriangleMesh {
            vertices: vec![Vec3::new(0.0, 0.0, 1.0), Vec3::new(1.0, 0.0, 1.0), Vec3::new(0.0, 1.0, 1.0)],
            colors: vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.2, 0.4, 0.6]],
            faces: vec![[0, 1, 2]],
        }
    }

    fn quantized(m: &TriangleMesh<f64>) -> TriangleMesh<f64> {
        let mut q = m.clone();
        for c in &mut q.colors {
            for v in c.iter_mut() {
                *v = to_u8(*v) as f64 / 255.0;
            }
        }
        q
    }

    #[test]
    fn single_triangle_round_trip() {
        let m = tri();
        let bytes = ply_bytes(&m).unwrap();
        let header_len = bytes.windows(11).position(|w| w == b"end_header\n").unwrap() + 11;
        assert_eq!(bytes.len() - header_len, 3 * (24 + 3) + 13);
        assert_eq!(parse_ply::<f64>(&bytes).unwrap(), quantized(&m));
    }

    #[test]
    fn empty_mesh() {
        let bytes = ply_bytes(&TriangleMesh::<f64>::new()).unwrap();
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert!(text.contains("element vertex 0\n") && text.contains("element face 0\n"));
        assert!(parse_ply::<f64>(&bytes).unwrap().is_empty());
    }

    #[test]
    fn f32_meshes_use_float() {
        let m: TriangleMesh<f32> = tri().cast();
        let bytes = ply_bytes(&m).unwrap();
        assert!(String::from_utf8_lossy(&bytes).contains("property float x"));
        assert_eq!(parse_ply::<f32>(&bytes).unwrap().vertices, m.vertices);
    }

    #[test]
    fn rejects_garbage() {
        assert!(matches!(parse_ply::<f64>(b"not a ply"), Err(Error::Mesh(_))));
        let mut bytes = ply_bytes(&tri()).unwrap();
        bytes.truncate(bytes.len() - 5);
        assert!(matches!(parse_ply::<f64>(&bytes), Err(Error::Mesh(_))));
        let bad_index = TriangleMesh { faces: vec![[0, 1, 2]], ..TriangleMesh::<f64>::new() };
        assert!(ply_bytes(&bad_index).is_err());
    }

    proptest! {
        #[test]
        fn random_meshes_round_trip(
            pts in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0, -10.0f64..10.0, 0.0f64..1.0), 3..40),
            faces in prop::collection::vec((0u32..1000, 0u32..1000, 0u32..1000), 0..40),
        ) {
            let n = pts.len() as u32;
            let m = TriangleMesh {
                vertices: pts.iter().map(|p| Vec3::new(p.0, p.1, p.2)).collect(),
                colors: pts.iter().map(|p| [p.3, 1.0 - p.3, 0.5]).collect(),
                faces: faces.iter().map(|f| [f.0 % n, f.1 % n, f.2 % n]).collect(),
            };
            let bytes = ply_bytes(&m).unwrap();
            prop_assert_eq!(parse_ply::<f64>(&bytes).unwrap(), quantized(&m));
            prop_assert_eq!(ply_bytes(&m).unwrap(), bytes);
        }
    }
}
